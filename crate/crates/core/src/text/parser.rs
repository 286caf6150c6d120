//! Recursive-descent parser from tokens to [`AstModule`].

use super::ast::*;
use super::lexer::{lex, Pos, Tok, Token};
use super::SourceDiagnostic;
use crate::ir::{Attribute, Type};

type PResult<T> = Result<T, SourceDiagnostic>;

pub fn parse_ast(src: &str) -> PResult<AstModule> {
    let toks = lex(src)?;
    let mut p = Parser { toks, i: 0 };
    p.module()
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let j = (self.i + k).min(self.toks.len() - 1);
        &self.toks[j].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i < self.toks.len() - 1 {
            self.i += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(SourceDiagnostic::error(self.pos(), msg))
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Value(v) => format!("`%{v}`"),
            Tok::Symbol(v) => format!("`@{v}`"),
            Tok::Label(v) => format!("`^{v}`"),
            Tok::TypeName(v) => format!("`!{v}`"),
            Tok::Ident(v) => format!("`{v}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Float(v) => format!("`{v}`"),
            Tok::Str(v) => format!("{v:?}"),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", punct(other)),
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> PResult<()> {
        if self.eat(t) {
            Ok(())
        } else {
            self.err(format!("expected `{}`, found {}", punct(t), Self::describe(self.peek())))
        }
    }

    fn eat_ident(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Tok::Ident(s) if s == kw) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_ident(&mut self, kw: &str) -> PResult<()> {
        if self.eat_ident(kw) {
            Ok(())
        } else {
            self.err(format!("expected `{kw}`, found {}", Self::describe(self.peek())))
        }
    }

    fn value(&mut self) -> PResult<AstValue> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Value(name) => {
                self.next();
                Ok(AstValue { name, pos })
            }
            other => self.err(format!("expected a value, found {}", Self::describe(&other))),
        }
    }

    fn symbol(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Symbol(s) => {
                self.next();
                Ok(s)
            }
            other => self.err(format!("expected a symbol, found {}", Self::describe(&other))),
        }
    }

    fn label(&mut self) -> PResult<(String, Pos)> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Label(s) => {
                self.next();
                Ok((s, pos))
            }
            other => self.err(format!("expected a block label, found {}", Self::describe(&other))),
        }
    }

    // ---- module structure -----------------------------------------------

    fn module(&mut self) -> PResult<AstModule> {
        let mut items = Vec::new();
        let wrapped = self.eat_ident("module");
        if wrapped {
            self.expect(&Tok::LBrace)?;
        }
        loop {
            match self.peek() {
                Tok::Eof if !wrapped => break,
                Tok::RBrace if wrapped => {
                    self.next();
                    if *self.peek() != Tok::Eof {
                        return self.err("unexpected input after module");
                    }
                    break;
                }
                Tok::Ident(k) if k == "func" || k == "q.circ" || k == "qs.circ" => items.push(self.func()?),
                other => {
                    let d = Self::describe(other);
                    return self.err(format!("expected `func` or a circuit definition, found {d}"));
                }
            }
        }
        Ok(AstModule { items })
    }

    fn func(&mut self) -> PResult<AstFunc> {
        let pos = self.pos();
        let Tok::Ident(keyword) = self.next().tok else { unreachable!() };
        let name = self.symbol()?;
        self.expect(&Tok::LParen)?;
        let params = self.params(&Tok::RParen)?;
        let results = if self.eat(&Tok::Arrow) { self.type_list()? } else { Vec::new() };
        let attrs = if self.eat_ident("attributes") { self.attr_dict()? } else { Vec::new() };
        let body = self.region()?;
        Ok(AstFunc { keyword, name, params, results, attrs, body, pos })
    }

    /// `%a: T, %b: U` up to (and consuming) `close`.
    fn params(&mut self, close: &Tok) -> PResult<Vec<(String, Type, Pos)>> {
        let mut out = Vec::new();
        if self.eat(close) {
            return Ok(out);
        }
        loop {
            let v = self.value()?;
            self.expect(&Tok::Colon)?;
            let t = self.ty()?;
            out.push((v.name, t, v.pos));
            if self.eat(close) {
                return Ok(out);
            }
            self.expect(&Tok::Comma)?;
        }
    }

    fn region(&mut self) -> PResult<AstRegion> {
        self.expect(&Tok::LBrace)?;
        let mut blocks: Vec<AstBlock> = Vec::new();
        let mut cur = AstBlock { label: None, args: Vec::new(), ops: Vec::new(), pos: self.pos() };
        let mut first = true;
        loop {
            match self.peek() {
                Tok::RBrace => {
                    self.next();
                    break;
                }
                Tok::Label(_) => {
                    let (name, pos) = self.label()?;
                    let args = if self.eat(&Tok::LParen) { self.params(&Tok::RParen)? } else { Vec::new() };
                    self.expect(&Tok::Colon)?;
                    if !(first && cur.ops.is_empty()) {
                        blocks.push(std::mem::replace(
                            &mut cur,
                            AstBlock { label: None, args: Vec::new(), ops: Vec::new(), pos },
                        ));
                    }
                    cur.label = Some(name);
                    cur.args = args;
                    cur.pos = pos;
                }
                Tok::Eof => return self.err("unterminated region, expected `}`"),
                _ => cur.ops.push(self.op()?),
            }
            first = false;
        }
        blocks.push(cur);
        Ok(AstRegion { blocks })
    }

    // ---- operations -------------------------------------------------------

    /// True when the upcoming tokens are `%a, %b, ... =`.
    fn at_result_list(&self) -> bool {
        let mut k = 0;
        loop {
            if !matches!(self.peek_at(k), Tok::Value(_)) {
                return false;
            }
            match self.peek_at(k + 1) {
                Tok::Eq => return true,
                Tok::Comma => k += 2,
                _ => return false,
            }
        }
    }

    fn op(&mut self) -> PResult<AstOp> {
        let mut results = Vec::new();
        if self.at_result_list() {
            loop {
                results.push(self.value()?);
                if self.eat(&Tok::Eq) {
                    break;
                }
                self.expect(&Tok::Comma)?;
            }
        }
        let pos = self.pos();
        let name = match self.peek().clone() {
            Tok::Ident(n) => {
                self.next();
                n
            }
            other => return self.err(format!("expected an operation name, found {}", Self::describe(&other))),
        };
        let mut attrs = Vec::new();
        let mut types = None;
        let body = match name.as_str() {
            "scf.for" | "affine.for" => {
                let iv = self.value()?;
                self.expect(&Tok::Eq)?;
                let lb = self.bound()?;
                self.expect_ident("to")?;
                let ub = self.bound()?;
                let step = if self.eat_ident("step") { Some(self.bound()?) } else { None };
                let mut iter_args = Vec::new();
                if self.eat_ident("iter_args") {
                    self.expect(&Tok::LParen)?;
                    if !self.eat(&Tok::RParen) {
                        loop {
                            let a = self.value()?;
                            self.expect(&Tok::Eq)?;
                            let v = self.value()?;
                            iter_args.push((a, v));
                            if self.eat(&Tok::RParen) {
                                break;
                            }
                            self.expect(&Tok::Comma)?;
                        }
                    }
                }
                if self.eat(&Tok::Arrow) {
                    types = Some(self.type_list()?);
                }
                let body = self.region()?;
                if *self.peek() == Tok::LBrace {
                    attrs = self.attr_dict()?;
                }
                AstOpBody::For { iv, lb, ub, step, iter_args, body }
            }
            "scf.if" => {
                let cond = self.value()?;
                if self.eat(&Tok::Arrow) {
                    types = Some(self.type_list()?);
                }
                let then = self.region()?;
                let els = if self.eat_ident("else") { Some(self.region()?) } else { None };
                if *self.peek() == Tok::LBrace {
                    attrs = self.attr_dict()?;
                }
                AstOpBody::If { cond, then, els }
            }
            "br" => {
                let target = self.label()?;
                let args = self.branch_args()?;
                AstOpBody::Br { target, args }
            }
            "cond_br" => {
                let cond = self.value()?;
                self.expect(&Tok::Comma)?;
                let t = self.label()?;
                let t_args = self.branch_args()?;
                self.expect(&Tok::Comma)?;
                let f = self.label()?;
                let f_args = self.branch_args()?;
                AstOpBody::CondBr { cond, t, t_args, f, f_args }
            }
            "call" | "q.call" | "qs.call" => {
                let callee = self.symbol()?;
                self.expect(&Tok::LParen)?;
                let args = self.operands_until(&Tok::RParen)?;
                self.trailer(&mut attrs, &mut types)?;
                AstOpBody::Call { callee, args }
            }
            "q.getval" | "qs.getval" => {
                let callee = self.symbol()?;
                self.trailer(&mut attrs, &mut types)?;
                AstOpBody::GetVal { callee }
            }
            "q.apply" | "qs.apply" => {
                let op = self.value()?;
                self.expect(&Tok::LParen)?;
                let args = self.operands_until(&Tok::RParen)?;
                self.trailer(&mut attrs, &mut types)?;
                AstOpBody::Apply { op, args }
            }
            _ => {
                let mut paren = Vec::new();
                if self.eat(&Tok::LParen) {
                    if !self.eat(&Tok::RParen) {
                        loop {
                            paren.push(self.paren_arg()?);
                            if self.eat(&Tok::RParen) {
                                break;
                            }
                            self.expect(&Tok::Comma)?;
                        }
                    }
                }
                let mut operands = Vec::new();
                if matches!(self.peek(), Tok::Value(_)) && !self.at_result_list() {
                    loop {
                        operands.push(self.operand()?);
                        if *self.peek() == Tok::Comma && matches!(self.peek_at(1), Tok::Value(_)) {
                            self.next();
                            continue;
                        }
                        break;
                    }
                }
                self.trailer(&mut attrs, &mut types)?;
                AstOpBody::Generic { paren, operands }
            }
        };
        Ok(AstOp { results, name, pos, attrs, types, body })
    }

    /// Optional `{attrs}` followed by optional `: types`.
    fn trailer(&mut self, attrs: &mut Vec<(String, Attribute)>, types: &mut Option<Vec<Type>>) -> PResult<()> {
        if *self.peek() == Tok::LBrace {
            *attrs = self.attr_dict()?;
        }
        if self.eat(&Tok::Colon) {
            let mut tys = vec![self.ty()?];
            while self.eat(&Tok::Comma) {
                tys.push(self.ty()?);
            }
            *types = Some(tys);
        }
        Ok(())
    }

    fn branch_args(&mut self) -> PResult<Vec<AstValue>> {
        let mut out = Vec::new();
        if self.eat(&Tok::LParen) {
            if self.eat(&Tok::RParen) {
                return Ok(out);
            }
            loop {
                out.push(self.value()?);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(&Tok::Comma)?;
            }
        }
        Ok(out)
    }

    fn operands_until(&mut self, close: &Tok) -> PResult<Vec<AstOperand>> {
        let mut out = Vec::new();
        if self.eat(close) {
            return Ok(out);
        }
        loop {
            out.push(self.operand()?);
            if self.eat(close) {
                return Ok(out);
            }
            self.expect(&Tok::Comma)?;
        }
    }

    fn operand(&mut self) -> PResult<AstOperand> {
        let value = self.value()?;
        let mut accesses = Vec::new();
        while self.eat(&Tok::LBracket) {
            let mut comps = Vec::new();
            loop {
                comps.push(match self.peek().clone() {
                    Tok::Int(v) => {
                        self.next();
                        AstIdx::Int(v)
                    }
                    Tok::Value(_) => AstIdx::Val(self.value()?),
                    other => return self.err(format!("expected an index, found {}", Self::describe(&other))),
                });
                if self.eat(&Tok::RBracket) {
                    break;
                }
                self.expect(&Tok::Comma)?;
            }
            if comps.len() > 3 {
                return self.err("register access takes at most (start, stop, step)");
            }
            accesses.push(comps);
        }
        Ok(AstOperand { value, accesses })
    }

    fn paren_arg(&mut self) -> PResult<AstArg> {
        Ok(match self.peek().clone() {
            Tok::Int(v) => {
                self.next();
                AstArg::Int(v)
            }
            Tok::Float(v) => {
                self.next();
                AstArg::Float(v)
            }
            Tok::Ident(s) => {
                self.next();
                AstArg::Ident(s)
            }
            Tok::Str(s) => {
                self.next();
                AstArg::Str(s)
            }
            Tok::Value(_) => AstArg::Val(self.value()?),
            other => return self.err(format!("unexpected {} in argument list", Self::describe(&other))),
        })
    }

    fn bound(&mut self) -> PResult<AstBound> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.next();
                Ok(AstBound::Int(v))
            }
            Tok::Value(_) => Ok(AstBound::Val(self.value()?)),
            other => self.err(format!("expected a loop bound, found {}", Self::describe(&other))),
        }
    }

    // ---- attributes -------------------------------------------------------

    fn attr_dict(&mut self) -> PResult<Vec<(String, Attribute)>> {
        self.expect(&Tok::LBrace)?;
        let mut out = Vec::new();
        if self.eat(&Tok::RBrace) {
            return Ok(out);
        }
        loop {
            let key = match self.peek().clone() {
                Tok::Ident(s) | Tok::Str(s) => {
                    self.next();
                    s
                }
                other => return self.err(format!("expected an attribute name, found {}", Self::describe(&other))),
            };
            let val = if self.eat(&Tok::Eq) { self.attr_value()? } else { Attribute::Unit };
            out.push((key, val));
            if self.eat(&Tok::RBrace) {
                return Ok(out);
            }
            self.expect(&Tok::Comma)?;
        }
    }

    fn attr_value(&mut self) -> PResult<Attribute> {
        Ok(match self.peek().clone() {
            Tok::Int(v) => {
                self.next();
                Attribute::Int(v)
            }
            Tok::Float(v) => {
                self.next();
                Attribute::Float(v)
            }
            Tok::Str(s) => {
                self.next();
                Attribute::Str(s)
            }
            Tok::Symbol(s) => {
                self.next();
                Attribute::Symbol(s)
            }
            Tok::Ident(s) if s == "unit" => {
                self.next();
                Attribute::Unit
            }
            Tok::LBracket => {
                self.next();
                let mut items = Vec::new();
                if !self.eat(&Tok::RBracket) {
                    loop {
                        items.push(self.attr_value()?);
                        if self.eat(&Tok::RBracket) {
                            break;
                        }
                        self.expect(&Tok::Comma)?;
                    }
                }
                Attribute::List(items)
            }
            Tok::TypeName(_) | Tok::Ident(_) => Attribute::Type(self.ty()?),
            other => return self.err(format!("expected an attribute value, found {}", Self::describe(&other))),
        })
    }

    // ---- types ----------------------------------------------------------

    fn type_list(&mut self) -> PResult<Vec<Type>> {
        if self.eat(&Tok::LParen) {
            let mut out = Vec::new();
            if self.eat(&Tok::RParen) {
                return Ok(out);
            }
            loop {
                out.push(self.ty()?);
                if self.eat(&Tok::RParen) {
                    return Ok(out);
                }
                self.expect(&Tok::Comma)?;
            }
        }
        Ok(vec![self.ty()?])
    }

    fn size(&mut self) -> PResult<Option<u64>> {
        match self.peek().clone() {
            Tok::Question => {
                self.next();
                Ok(None)
            }
            Tok::Int(v) if v >= 0 => {
                self.next();
                Ok(Some(v as u64))
            }
            other => self.err(format!("expected a size or `?`, found {}", Self::describe(&other))),
        }
    }

    fn sized(&mut self) -> PResult<Option<u64>> {
        self.expect(&Tok::Lt)?;
        let s = self.size()?;
        self.expect(&Tok::Gt)?;
        Ok(s)
    }

    fn ty(&mut self) -> PResult<Type> {
        let pos = self.pos();
        let t = match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                if s == "memref" {
                    self.expect(&Tok::Lt)?;
                    let n = self.size()?;
                    let elem = match self.peek().clone() {
                        Tok::Ident(e) if e.starts_with('x') && e.len() > 1 => {
                            self.next();
                            scalar_type(&e[1..])
                        }
                        _ => None,
                    };
                    let Some(elem) = elem else {
                        return self.err("expected `x<element type>` in memref type");
                    };
                    self.expect(&Tok::Gt)?;
                    Type::MemRef(n, Box::new(elem))
                } else {
                    match scalar_type(&s) {
                        Some(t) => t,
                        None => return Err(SourceDiagnostic::error(pos, format!("unknown type `{s}`"))),
                    }
                }
            }
            Tok::TypeName(s) => {
                self.next();
                match s.as_str() {
                    "q.qubit" => Type::Qubit,
                    "q.qureg" => Type::Qureg(self.sized()?),
                    "qs.qstate" => Type::QState,
                    "qs.rstate" => Type::RState(self.sized()?),
                    "q.u1" | "qs.u1" => Type::U1,
                    "q.u2" | "qs.u2" => Type::U2,
                    "q.circ" | "qs.circ" => Type::Circ,
                    "bitvec" => Type::BitVec(self.sized()?),
                    "q.cop" | "qs.cop" => {
                        self.expect(&Tok::Lt)?;
                        let n = match self.next().tok {
                            Tok::Int(n) if n >= 1 => n as u32,
                            _ => return Err(SourceDiagnostic::error(pos, "expected a positive control count")),
                        };
                        self.expect(&Tok::Comma)?;
                        let base = self.ty()?;
                        self.expect(&Tok::Gt)?;
                        Type::COp(n, Box::new(base))
                    }
                    _ => return Err(SourceDiagnostic::error(pos, format!("unknown type `!{s}`"))),
                }
            }
            other => return self.err(format!("expected a type, found {}", Self::describe(&other))),
        };
        if let Err(e) = t.check() {
            return Err(SourceDiagnostic::error(pos, e));
        }
        Ok(t)
    }
}

fn scalar_type(s: &str) -> Option<Type> {
    match s {
        "f64" => Some(Type::F64),
        "index" => Some(Type::Index),
        _ => {
            let w: u32 = s.strip_prefix('i')?.parse().ok()?;
            (1..=64).contains(&w).then_some(Type::Int(w))
        }
    }
}

fn punct(t: &Tok) -> &'static str {
    match t {
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::LBracket => "[",
        Tok::RBracket => "]",
        Tok::Lt => "<",
        Tok::Gt => ">",
        Tok::Comma => ",",
        Tok::Colon => ":",
        Tok::Eq => "=",
        Tok::Arrow => "->",
        Tok::Question => "?",
        _ => "token",
    }
}
