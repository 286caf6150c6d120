//! Syntax tree produced by the parser before IR construction.

use super::lexer::Pos;
use crate::ir::{Attribute, Type};

#[derive(Clone, Debug)]
pub struct AstModule {
    pub items: Vec<AstFunc>,
}

#[derive(Clone, Debug)]
pub struct AstFunc {
    /// `func`, `q.circ` or `qs.circ`
    pub keyword: String,
    pub name: String,
    pub params: Vec<(String, Type, Pos)>,
    pub results: Vec<Type>,
    pub attrs: Vec<(String, Attribute)>,
    pub body: AstRegion,
    pub pos: Pos,
}

#[derive(Clone, Debug, Default)]
pub struct AstRegion {
    pub blocks: Vec<AstBlock>,
}

#[derive(Clone, Debug)]
pub struct AstBlock {
    pub label: Option<String>,
    pub args: Vec<(String, Type, Pos)>,
    pub ops: Vec<AstOp>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AstValue {
    pub name: String,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub enum AstIdx {
    Int(i64),
    Val(AstValue),
}

#[derive(Clone, Debug)]
pub struct AstOperand {
    pub value: AstValue,
    /// One entry per `[...]` group; each has 1 to 3 components.
    pub accesses: Vec<Vec<AstIdx>>,
}

#[derive(Clone, Debug)]
pub enum AstArg {
    Int(i64),
    Float(f64),
    Ident(String),
    Str(String),
    Val(AstValue),
}

#[derive(Clone, Debug)]
pub enum AstBound {
    Int(i64),
    Val(AstValue),
}

#[derive(Clone, Debug)]
pub struct AstOp {
    pub results: Vec<AstValue>,
    pub name: String,
    pub pos: Pos,
    pub attrs: Vec<(String, Attribute)>,
    /// Explicit result types (`: T, U`).
    pub types: Option<Vec<Type>>,
    pub body: AstOpBody,
}

#[derive(Clone, Debug)]
pub enum AstOpBody {
    Generic {
        paren: Vec<AstArg>,
        operands: Vec<AstOperand>,
    },
    Call {
        callee: String,
        args: Vec<AstOperand>,
    },
    GetVal {
        callee: String,
    },
    Apply {
        op: AstValue,
        args: Vec<AstOperand>,
    },
    For {
        iv: AstValue,
        lb: AstBound,
        ub: AstBound,
        step: Option<AstBound>,
        iter_args: Vec<(AstValue, AstValue)>,
        body: AstRegion,
    },
    If {
        cond: AstValue,
        then: AstRegion,
        els: Option<AstRegion>,
    },
    Br {
        target: (String, Pos),
        args: Vec<AstValue>,
    },
    CondBr {
        cond: AstValue,
        t: (String, Pos),
        t_args: Vec<AstValue>,
        f: (String, Pos),
        f_args: Vec<AstValue>,
    },
}
