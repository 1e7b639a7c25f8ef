//! Concrete syntax for annotated programs: `pre [...]; body post [...];`.

mod ast;
mod lexer;
mod parse;
mod print;
mod rewrite;

pub use ast::*;
pub use print::print;
pub use rewrite::{rewrite_hint, RewriteError};

use serde::Serialize;

use crate::expr::{Formula, Term};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("{message}")]
pub struct ParseError {
    pub span: Span,
    pub message: String,
    pub expected: Vec<String>,
}

impl ParseError {
    fn new(span: Span, message: String, expected: Vec<String>) -> Self {
        ParseError { span, message, expected }
    }

    /// 1-based line and column of the error start.
    pub fn line_col(&self, src: &str) -> (usize, usize) {
        line_col(src, self.span.start)
    }
}

pub fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, col)
}

pub fn parse(src: &str) -> Result<HoareFile, ParseError> {
    parse::Parser::new(src).file()
}

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = parse::Parser::new(src);
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

pub fn parse_formula(src: &str) -> Result<Formula, ParseError> {
    let mut p = parse::Parser::new(src);
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}
