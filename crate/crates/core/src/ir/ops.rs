//! Operation registry: dialects, op kinds, native gates and traits.

use std::fmt;

use super::error::IrError;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dialect {
    /// Classical core (`func`, `addi`, `br`, ...), printed without prefix.
    Std,
    Scf,
    Affine,
    /// Input dialect, memory-semantics.
    Q,
    /// Optimization dialect, value-semantics.
    Qs,
    /// Resource counters produced by `--count-resources`.
    Rc,
}

impl Dialect {
    pub fn prefix(self) -> &'static str {
        match self {
            Dialect::Std => "",
            Dialect::Scf => "scf.",
            Dialect::Affine => "affine.",
            Dialect::Q => "q.",
            Dialect::Qs => "qs.",
            Dialect::Rc => "rc.",
        }
    }

    pub fn is_quantum(self) -> bool {
        matches!(self, Dialect::Q | Dialect::Qs)
    }
}

/// Native gate set.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gate {
    H,
    X,
    Y,
    Z,
    S,
    T,
    R,
    Rx,
    Ry,
    Rz,
    CX,
    SWAP,
}

impl Gate {
    pub const ALL: [Gate; 12] = [
        Gate::H,
        Gate::X,
        Gate::Y,
        Gate::Z,
        Gate::S,
        Gate::T,
        Gate::R,
        Gate::Rx,
        Gate::Ry,
        Gate::Rz,
        Gate::CX,
        Gate::SWAP,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Gate::H => "H",
            Gate::X => "X",
            Gate::Y => "Y",
            Gate::Z => "Z",
            Gate::S => "S",
            Gate::T => "T",
            Gate::R => "R",
            Gate::Rx => "Rx",
            Gate::Ry => "Ry",
            Gate::Rz => "Rz",
            Gate::CX => "CX",
            Gate::SWAP => "SWAP",
        }
    }

    pub fn from_name(s: &str) -> Option<Gate> {
        Gate::ALL.iter().copied().find(|g| g.name() == s)
    }

    /// Number of target qubits.
    pub fn arity(self) -> usize {
        match self {
            Gate::CX | Gate::SWAP => 2,
            _ => 1,
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, Gate::R | Gate::Rx | Gate::Ry | Gate::Rz)
    }

    /// Self-inverse gates.
    pub fn is_hermitian(self) -> bool {
        matches!(self, Gate::H | Gate::X | Gate::Y | Gate::Z | Gate::CX | Gate::SWAP)
    }

    /// Gates that may be broadcast over every qubit of a register.
    pub fn broadcastable(self) -> bool {
        self != Gate::SWAP
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum ArithOp {
    AddI,
    SubI,
    MulI,
    DivI,
    RemI,
    ShlI,
    ShrI,
    AndI,
    OrI,
    XorI,
    AddF,
    SubF,
    MulF,
    DivF,
    NegF,
    SIToFP,
    FPToSI,
    IndexCast,
}

impl ArithOp {
    const ALL: [ArithOp; 18] = [
        ArithOp::AddI,
        ArithOp::SubI,
        ArithOp::MulI,
        ArithOp::DivI,
        ArithOp::RemI,
        ArithOp::ShlI,
        ArithOp::ShrI,
        ArithOp::AndI,
        ArithOp::OrI,
        ArithOp::XorI,
        ArithOp::AddF,
        ArithOp::SubF,
        ArithOp::MulF,
        ArithOp::DivF,
        ArithOp::NegF,
        ArithOp::SIToFP,
        ArithOp::FPToSI,
        ArithOp::IndexCast,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ArithOp::AddI => "addi",
            ArithOp::SubI => "subi",
            ArithOp::MulI => "muli",
            ArithOp::DivI => "divi",
            ArithOp::RemI => "remi",
            ArithOp::ShlI => "shli",
            ArithOp::ShrI => "shri",
            ArithOp::AndI => "andi",
            ArithOp::OrI => "ori",
            ArithOp::XorI => "xori",
            ArithOp::AddF => "addf",
            ArithOp::SubF => "subf",
            ArithOp::MulF => "mulf",
            ArithOp::DivF => "divf",
            ArithOp::NegF => "negf",
            ArithOp::SIToFP => "sitofp",
            ArithOp::FPToSI => "fptosi",
            ArithOp::IndexCast => "index_cast",
        }
    }

    pub fn is_unary(self) -> bool {
        matches!(self, ArithOp::NegF | ArithOp::SIToFP | ArithOp::FPToSI | ArithOp::IndexCast)
    }

    pub fn is_float(self) -> bool {
        matches!(self, ArithOp::AddF | ArithOp::SubF | ArithOp::MulF | ArithOp::DivF | ArithOp::NegF)
    }

    /// Casts need an explicit result type.
    pub fn is_cast(self) -> bool {
        matches!(self, ArithOp::SIToFP | ArithOp::FPToSI | ArithOp::IndexCast)
    }

    pub fn is_commutative(self) -> bool {
        matches!(
            self,
            ArithOp::AddI
                | ArithOp::MulI
                | ArithOp::AndI
                | ArithOp::OrI
                | ArithOp::XorI
                | ArithOp::AddF
                | ArithOp::MulF
        )
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum CmpPred {
    Eq,
    Ne,
    Slt,
    Sle,
    Sgt,
    Sge,
}

impl CmpPred {
    pub fn name(self) -> &'static str {
        match self {
            CmpPred::Eq => "eq",
            CmpPred::Ne => "ne",
            CmpPred::Slt => "slt",
            CmpPred::Sle => "sle",
            CmpPred::Sgt => "sgt",
            CmpPred::Sge => "sge",
        }
    }

    pub fn from_name(s: &str) -> Option<CmpPred> {
        Some(match s {
            "eq" | "oeq" => CmpPred::Eq,
            "ne" | "one" => CmpPred::Ne,
            "slt" | "olt" => CmpPred::Slt,
            "sle" | "ole" => CmpPred::Sle,
            "sgt" | "ogt" => CmpPred::Sgt,
            "sge" | "oge" => CmpPred::Sge,
            _ => return None,
        })
    }

    pub fn eval<T: PartialOrd>(self, a: T, b: T) -> bool {
        match self {
            CmpPred::Eq => a == b,
            CmpPred::Ne => a != b,
            CmpPred::Slt => a < b,
            CmpPred::Sle => a <= b,
            CmpPred::Sgt => a > b,
            CmpPred::Sge => a >= b,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum OpKind {
    // classical core
    Func,
    Return,
    Call,
    Br,
    CondBr,
    Constant,
    Arith(ArithOp),
    CmpI,
    CmpF,
    Select,
    MemAlloc,
    Load,
    Store,
    Print,
    // structured control flow (scf / affine)
    For,
    If,
    Yield,
    // quantum dialects
    Circ,
    Alloc,
    AllocReg,
    Free,
    FreeReg,
    Meas,
    Extract,
    Combine,
    Gate(Gate),
    Adj,
    Ctrl,
    QCall,
    GetVal,
    Apply,
    // resource counting
    RcInc,
    RcUnknown,
}

/// Dialect-qualified operation name.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct OpName {
    pub dialect: Dialect,
    pub kind: OpKind,
}

impl OpName {
    pub const fn new(dialect: Dialect, kind: OpKind) -> OpName {
        OpName { dialect, kind }
    }

    pub const fn std(kind: OpKind) -> OpName {
        OpName { dialect: Dialect::Std, kind }
    }

    fn base_name(self) -> String {
        match self.kind {
            OpKind::Func => "func".into(),
            OpKind::Return => "return".into(),
            OpKind::Call | OpKind::QCall => "call".into(),
            OpKind::Br => "br".into(),
            OpKind::CondBr => "cond_br".into(),
            OpKind::Constant => "constant".into(),
            OpKind::Arith(a) => a.name().into(),
            OpKind::CmpI => "cmpi".into(),
            OpKind::CmpF => "cmpf".into(),
            OpKind::Select => "select".into(),
            OpKind::MemAlloc => "alloc".into(),
            OpKind::Load => "load".into(),
            OpKind::Store => "store".into(),
            OpKind::Print => "print".into(),
            OpKind::For => "for".into(),
            OpKind::If => "if".into(),
            OpKind::Yield => "yield".into(),
            OpKind::Circ => "circ".into(),
            OpKind::Alloc => "alloc".into(),
            OpKind::AllocReg => "allocreg".into(),
            OpKind::Free => "free".into(),
            OpKind::FreeReg => "freereg".into(),
            OpKind::Meas => "meas".into(),
            OpKind::Extract => "extract".into(),
            OpKind::Combine => "combine".into(),
            OpKind::Gate(g) => g.name().into(),
            OpKind::Adj => "adj".into(),
            OpKind::Ctrl => "ctrl".into(),
            OpKind::GetVal => "getval".into(),
            OpKind::Apply => "apply".into(),
            OpKind::RcInc => "inc".into(),
            OpKind::RcUnknown => "unknown".into(),
        }
    }

    /// Resolves a textual op name against the registry.
    pub fn parse(s: &str) -> Result<OpName, IrError> {
        let unknown = || IrError::UnknownOpName(s.to_string());
        let (dialect, rest) = match s.split_once('.') {
            Some(("q", r)) => (Dialect::Q, r),
            Some(("qs", r)) => (Dialect::Qs, r),
            Some(("scf", r)) => (Dialect::Scf, r),
            Some(("affine", r)) => (Dialect::Affine, r),
            Some(("rc", r)) => (Dialect::Rc, r),
            Some(_) => return Err(unknown()),
            None => (Dialect::Std, s),
        };
        let kind = match dialect {
            Dialect::Std => {
                if let Some(a) = ArithOp::ALL.iter().find(|a| a.name() == rest) {
                    OpKind::Arith(*a)
                } else {
                    match rest {
                        "func" => OpKind::Func,
                        "return" => OpKind::Return,
                        "call" => OpKind::Call,
                        "br" => OpKind::Br,
                        "cond_br" => OpKind::CondBr,
                        "constant" => OpKind::Constant,
                        "cmpi" => OpKind::CmpI,
                        "cmpf" => OpKind::CmpF,
                        "select" => OpKind::Select,
                        "alloc" => OpKind::MemAlloc,
                        "load" => OpKind::Load,
                        "store" => OpKind::Store,
                        "print" => OpKind::Print,
                        _ => return Err(unknown()),
                    }
                }
            }
            Dialect::Scf => match rest {
                "for" => OpKind::For,
                "if" => OpKind::If,
                "yield" => OpKind::Yield,
                _ => return Err(unknown()),
            },
            Dialect::Affine => match rest {
                "for" => OpKind::For,
                "yield" => OpKind::Yield,
                _ => return Err(unknown()),
            },
            Dialect::Q | Dialect::Qs => {
                if let Some(g) = Gate::from_name(rest) {
                    OpKind::Gate(g)
                } else {
                    match rest {
                        "circ" => OpKind::Circ,
                        "alloc" => OpKind::Alloc,
                        "allocreg" => OpKind::AllocReg,
                        "free" => OpKind::Free,
                        "freereg" => OpKind::FreeReg,
                        "meas" => OpKind::Meas,
                        "extract" if dialect == Dialect::Qs => OpKind::Extract,
                        "combine" if dialect == Dialect::Qs => OpKind::Combine,
                        "adj" => OpKind::Adj,
                        "ctrl" => OpKind::Ctrl,
                        "call" => OpKind::QCall,
                        "getval" => OpKind::GetVal,
                        "apply" => OpKind::Apply,
                        _ => return Err(unknown()),
                    }
                }
            }
            Dialect::Rc => match rest {
                "inc" => OpKind::RcInc,
                "unknown" => OpKind::RcUnknown,
                _ => return Err(unknown()),
            },
        };
        Ok(OpName { dialect, kind })
    }

    pub fn gate(self) -> Option<Gate> {
        match self.kind {
            OpKind::Gate(g) => Some(g),
            _ => None,
        }
    }

    pub fn is_quantum(self) -> bool {
        self.dialect.is_quantum()
    }

    pub fn is_loop(self) -> bool {
        self.kind == OpKind::For
    }

    pub fn traits(self) -> TraitSet {
        use Trait::*;
        let mut t = TraitSet::empty();
        match self.kind {
            OpKind::Gate(g) => {
                t.insert(Unitary);
                if g.is_hermitian() {
                    t.insert(Hermitian);
                }
            }
            OpKind::Adj | OpKind::Ctrl => {
                t.insert(Unitary);
                t.insert(MetaOp);
            }
            OpKind::Alloc
            | OpKind::AllocReg
            | OpKind::Free
            | OpKind::FreeReg
            | OpKind::Meas
            | OpKind::Extract
            | OpKind::Combine => t.insert(QubitManagement),
            OpKind::Return | OpKind::Br | OpKind::CondBr | OpKind::Yield => t.insert(Terminator),
            OpKind::Func | OpKind::Circ => t.insert(IsolatedBody),
            _ => {}
        }
        t
    }

    pub fn has_trait(self, tr: Trait) -> bool {
        self.traits().contains(tr)
    }

    pub fn is_terminator(self) -> bool {
        self.has_trait(Trait::Terminator)
    }

    /// Definitions of callable symbols (`func`, `q.circ`, `qs.circ`).
    pub fn is_symbol_def(self) -> bool {
        matches!(self.kind, OpKind::Func | OpKind::Circ)
    }
}

impl fmt::Display for OpName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.dialect.prefix(), self.base_name())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Trait {
    Hermitian,
    Unitary,
    Terminator,
    IsolatedBody,
    QubitManagement,
    MetaOp,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct TraitSet(u8);

impl TraitSet {
    pub fn empty() -> TraitSet {
        TraitSet(0)
    }

    fn bit(t: Trait) -> u8 {
        1 << (t as u8)
    }

    pub fn insert(&mut self, t: Trait) {
        self.0 |= Self::bit(t);
    }

    pub fn contains(&self, t: Trait) -> bool {
        self.0 & Self::bit(t) != 0
    }

    pub fn iter(&self) -> impl Iterator<Item = Trait> + '_ {
        use Trait::*;
        [Hermitian, Unitary, Terminator, IsolatedBody, QubitManagement, MetaOp]
            .into_iter()
            .filter(|t| self.contains(*t))
    }

    pub fn of(traits: &[Trait]) -> TraitSet {
        let mut s = TraitSet::empty();
        for t in traits {
            s.insert(*t);
        }
        s
    }
}

/// Trait set of a registered operation name.
pub fn trait_query(name: &str) -> Result<TraitSet, IrError> {
    Ok(OpName::parse(name)?.traits())
}
