//! Semantic types shared by the classical core and both quantum dialects.

use std::fmt;

/// Type of an SSA value.
///
/// Sizes of registers are `None` when only known at run time (`<?>` in text).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Type {
    Int(u32),
    F64,
    Index,
    BitVec(Option<u64>),
    MemRef(Option<u64>, Box<Type>),
    // memory-semantics references
    Qubit,
    Qureg(Option<u64>),
    // value-semantics states
    QState,
    RState(Option<u64>),
    // quantum operation values
    U1,
    U2,
    Circ,
    COp(u32, Box<Type>),
}

impl Type {
    pub fn i1() -> Type {
        Type::Int(1)
    }

    pub fn i64() -> Type {
        Type::Int(64)
    }

    /// Qubit or register reference of the input dialect.
    pub fn is_quantum_ref(&self) -> bool {
        matches!(self, Type::Qubit | Type::Qureg(_))
    }

    /// State value of the optimization dialect (subject to linearity).
    pub fn is_quantum_state(&self) -> bool {
        matches!(self, Type::QState | Type::RState(_))
    }

    /// Anything carrying quantum data (reference or state).
    pub fn is_quantum_data(&self) -> bool {
        self.is_quantum_ref() || self.is_quantum_state()
    }

    pub fn is_register(&self) -> bool {
        matches!(self, Type::Qureg(_) | Type::RState(_))
    }

    pub fn is_single_qubit(&self) -> bool {
        matches!(self, Type::Qubit | Type::QState)
    }

    /// Value representing a quantum operation (gate, circuit or controlled op).
    pub fn is_op_value(&self) -> bool {
        matches!(self, Type::U1 | Type::U2 | Type::Circ | Type::COp(..))
    }

    pub fn is_integer_like(&self) -> bool {
        matches!(self, Type::Int(_) | Type::Index)
    }

    pub fn is_classical(&self) -> bool {
        !self.is_quantum_data()
    }

    /// Static register size, if this is a register type with a known size.
    pub fn register_size(&self) -> Option<u64> {
        match self {
            Type::Qureg(n) | Type::RState(n) => *n,
            _ => None,
        }
    }

    /// Maps a memory-semantics reference type to its value-semantics state type.
    pub fn to_state(&self) -> Type {
        match self {
            Type::Qubit => Type::QState,
            Type::Qureg(n) => Type::RState(*n),
            other => other.clone(),
        }
    }

    /// Number of control qubits an op value expects before its targets.
    pub fn num_controls(&self) -> u32 {
        match self {
            Type::COp(n, base) => n + base.num_controls(),
            _ => 0,
        }
    }

    /// Innermost non-controlled operation type.
    pub fn base_op(&self) -> &Type {
        match self {
            Type::COp(_, base) => base.base_op(),
            other => other,
        }
    }

    /// Structural invariants: register sizes ≥ 1 and COp bases are op types.
    pub fn check(&self) -> Result<(), String> {
        match self {
            Type::Qureg(Some(0)) | Type::RState(Some(0)) => {
                Err(format!("register type `{self}` must have size >= 1"))
            }
            Type::COp(_, base) => match base.as_ref() {
                Type::U1 | Type::U2 | Type::Circ | Type::COp(..) => base.check(),
                other => Err(format!("cop base must be an operation type, got `{other}`")),
            },
            Type::MemRef(_, elem) => elem.check(),
            _ => Ok(()),
        }
    }
}

fn size_str(n: &Option<u64>) -> String {
    match n {
        Some(n) => n.to_string(),
        None => "?".to_string(),
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int(w) => write!(f, "i{w}"),
            Type::F64 => write!(f, "f64"),
            Type::Index => write!(f, "index"),
            Type::BitVec(n) => write!(f, "!bitvec<{}>", size_str(n)),
            Type::MemRef(n, elem) => write!(f, "memref<{}x{}>", size_str(n), elem),
            Type::Qubit => write!(f, "!q.qubit"),
            Type::Qureg(n) => write!(f, "!q.qureg<{}>", size_str(n)),
            Type::QState => write!(f, "!qs.qstate"),
            Type::RState(n) => write!(f, "!qs.rstate<{}>", size_str(n)),
            Type::U1 => write!(f, "!q.u1"),
            Type::U2 => write!(f, "!q.u2"),
            Type::Circ => write!(f, "!q.circ"),
            Type::COp(n, base) => write!(f, "!q.cop<{n}, {base}>"),
        }
    }
}
