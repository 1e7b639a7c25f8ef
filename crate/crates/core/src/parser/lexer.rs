use std::fmt;

use num_bigint::BigInt;
use num_traits::Pow;

use super::Span;
use crate::expr::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Number(Rational),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(n) => write!(f, "number {}", crate::expr::format_rational(n)),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

const SYMBOLS: &[&str] = &[
    ":=", "==", "!=", "<=", ">=", "->", "&&", "||", "++", "<", ">", "=", "!", "&", "+", "-", "*", "/", "^", "(",
    ")", "[", "]", "{", "}", ";", ",", ".", ":",
];

/// Skips whitespace and `#` comments starting at `pos`.
pub fn skip_trivia(src: &str, mut pos: usize) -> usize {
    let bytes = src.as_bytes();
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
        } else {
            return pos;
        }
    }
}

/// Lexes one token at `pos` (after trivia). Returns the token, its span and
/// the error message for an unrecognized character.
pub fn lex_at(src: &str, pos: usize) -> Result<(Tok, Span), (Span, String)> {
    let start = skip_trivia(src, pos);
    let bytes = src.as_bytes();
    if start >= bytes.len() {
        return Ok((Tok::Eof, Span::new(bytes.len(), bytes.len())));
    }
    let c = bytes[start];
    if c.is_ascii_alphabetic() || c == b'_' {
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
            end += 1;
        }
        return Ok((Tok::Ident(src[start..end].to_string()), Span::new(start, end)));
    }
    if c.is_ascii_digit() {
        let mut end = start;
        while end < bytes.len() && bytes[end].is_ascii_digit() {
            end += 1;
        }
        let int_part = &src[start..end];
        let mut frac = "";
        if end + 1 < bytes.len() && bytes[end] == b'.' && bytes[end + 1].is_ascii_digit() {
            let fstart = end + 1;
            end = fstart;
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
            frac = &src[fstart..end];
        }
        let digits: BigInt = format!("{int_part}{frac}").parse().expect("digits");
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        return Ok((Tok::Number(Rational::new(digits, den)), Span::new(start, end)));
    }
    for s in SYMBOLS {
        if src[start..].starts_with(s) {
            return Ok((Tok::Sym(s), Span::new(start, start + s.len())));
        }
    }
    let ch = src[start..].chars().next().expect("non-empty");
    Err((Span::new(start, start + ch.len_utf8()), format!("unexpected character `{ch}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        let mut pos = 0;
        let mut out = Vec::new();
        loop {
            let (t, sp) = lex_at(src, pos).unwrap();
            if t == Tok::Eof {
                return out;
            }
            out.push(t);
            pos = sp.end;
        }
    }

    #[test]
    fn numbers_and_dots() {
        assert_eq!(toks("0.001"), vec![Tok::Number(Rational::new(1.into(), 1000.into()))]);
        assert_eq!(toks("2. x"), vec![Tok::Number(Rational::from_integer(2.into())), Tok::Sym("."), Tok::Ident("x".into())]);
    }

    #[test]
    fn longest_symbol_and_comments() {
        assert_eq!(
            toks("x := *(t >= 0); # c\n++ ->"),
            vec![
                Tok::Ident("x".into()),
                Tok::Sym(":="),
                Tok::Sym("*"),
                Tok::Sym("("),
                Tok::Ident("t".into()),
                Tok::Sym(">="),
                Tok::Number(Rational::from_integer(0.into())),
                Tok::Sym(")"),
                Tok::Sym(";"),
                Tok::Sym("++"),
                Tok::Sym("->"),
            ]
        );
        assert!(lex_at("@", 0).is_err());
    }
}
