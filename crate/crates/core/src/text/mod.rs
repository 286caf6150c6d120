//! Textual `.qiro` format: lexer, parser, IR builder and printer.

pub mod ast;
pub mod builder;
pub mod lexer;
pub mod parser;
pub mod printer;

use std::fmt;

use crate::ir::{verify, Module};
pub use lexer::Pos;
pub use printer::{print_module, print_op};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
    Note,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SourceDiagnostic {
    pub line: u32,
    pub column: u32,
    pub message: String,
    pub severity: Severity,
}

impl SourceDiagnostic {
    pub fn error(pos: Pos, message: impl Into<String>) -> SourceDiagnostic {
        SourceDiagnostic { line: pos.line.max(1), column: pos.col.max(1), message: message.into(), severity: Severity::Error }
    }
}

impl fmt::Display for SourceDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Note => "note",
        };
        write!(f, "{}:{}: {sev}: {}", self.line, self.column, self.message)
    }
}

/// Parses text into a module without running the verifier.
pub fn parse_unverified(src: &str) -> Result<builder::Built, Vec<SourceDiagnostic>> {
    let ast = parser::parse_ast(src).map_err(|d| vec![d])?;
    builder::build_module(&ast).map_err(|d| vec![d])
}

/// Parses and verifies a module.
pub fn parse(src: &str) -> Result<Module, Vec<SourceDiagnostic>> {
    let built = parse_unverified(src)?;
    let diags = verify(&built.module);
    if diags.is_empty() {
        return Ok(built.module);
    }
    Err(diags
        .into_iter()
        .map(|d| {
            let pos = d.op.and_then(|o| built.locs.get(&o).copied()).unwrap_or(Pos { line: 1, col: 1 });
            SourceDiagnostic::error(pos, d.to_string())
        })
        .collect())
}
