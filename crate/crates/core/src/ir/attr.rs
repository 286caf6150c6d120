use std::collections::BTreeMap;
use std::fmt;

use super::types::Type;

/// Compile-time constant attached to an operation.
#[derive(Clone, Debug, PartialEq)]
pub enum Attribute {
    Int(i64),
    Float(f64),
    Str(String),
    Symbol(String),
    /// Marker attribute: only the name matters (`no_inline`, `compute`, ...).
    Unit,
    List(Vec<Attribute>),
    Type(Type),
}

impl Attribute {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Attribute::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_float(&self) -> Option<f64> {
        match self {
            Attribute::Float(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Attribute::Str(s) | Attribute::Symbol(s) => Some(s),
            _ => None,
        }
    }
}

/// Formats a float so that parsing the text yields the identical `f64`.
///
/// Uses the shortest representation that round-trips, always with a `.` or
/// exponent so the lexer reads it back as a float.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{v:?}");
    if s.contains('.') || s.contains('e') {
        s
    } else {
        format!("{s}.0")
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Attribute::Int(v) => write!(f, "{v}"),
            Attribute::Float(v) => write!(f, "{}", format_float(*v)),
            Attribute::Str(s) => write!(f, "{s:?}"),
            Attribute::Symbol(s) => write!(f, "@{s}"),
            Attribute::Unit => write!(f, "unit"),
            Attribute::List(items) => {
                write!(f, "[")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{it}")?;
                }
                write!(f, "]")
            }
            Attribute::Type(t) => write!(f, "{t}"),
        }
    }
}

/// Ordered attribute dictionary; ordering keeps printing deterministic.
pub type Attrs = BTreeMap<String, Attribute>;

/// Well-known attribute names.
pub mod names {
    pub const SYM_NAME: &str = "sym_name";
    pub const RESULTS: &str = "results";
    pub const CALLEE: &str = "callee";
    pub const ANGLE: &str = "angle";
    pub const SIZE: &str = "size";
    pub const VALUE: &str = "value";
    pub const PREDICATE: &str = "predicate";
    pub const COUNT: &str = "count";
    pub const GATE: &str = "gate";
    pub const LB: &str = "lb";
    pub const UB: &str = "ub";
    pub const STEP: &str = "step";
    pub const NO_INLINE: &str = "no_inline";
    pub const NO_INLINE_TARGET: &str = "no_inline_target";
    pub const COMPUTE: &str = "compute";
    pub const UNCOMPUTE: &str = "uncompute";
    /// Marks a user-provided adjoint decomposition `@C__adj`.
    pub const ADJOINT_OF: &str = "adjoint_of";
    /// Marks a user-provided controlled decomposition `@C__ctl`.
    pub const CONTROLLED_OF: &str = "controlled_of";
    pub const ENTRY: &str = "entry";
}
