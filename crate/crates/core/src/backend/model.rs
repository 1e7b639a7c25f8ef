//! Reading `(get-model)` output.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Pow, Zero};

use crate::expr::Rational;

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn tokens(src: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut in_bar = false;
    for c in src.chars() {
        if in_bar {
            cur.push(c);
            if c == '|' {
                in_bar = false;
            }
            continue;
        }
        match c {
            '(' | ')' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(c.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            '|' => {
                in_bar = true;
                cur.push(c);
            }
            _ => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn parse_all(toks: &[String]) -> Option<Vec<Sexp>> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    for t in toks {
        match t.as_str() {
            "(" => stack.push(Vec::new()),
            ")" => {
                let done = stack.pop()?;
                stack.last_mut()?.push(Sexp::List(done));
            }
            _ => stack.last_mut()?.push(Sexp::Atom(t.clone())),
        }
    }
    (stack.len() == 1).then(|| stack.pop().expect("root"))
}

/// `12`, `0.5`, `3.0` as exact rationals.
pub fn parse_decimal(s: &str) -> Option<Rational> {
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    Some(Rational::new(digits, BigInt::from(10u32).pow(frac.len() as u32)))
}

fn value(e: &Sexp) -> Option<Rational> {
    match e {
        Sexp::Atom(a) => parse_decimal(a),
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(op), x] if op == "-" => Some(-value(x)?),
            [Sexp::Atom(op), x, y] if op == "/" => {
                let d = value(y)?;
                (!d.is_zero()).then(|| value(x).map(|n| n / d))?
            }
            [Sexp::Atom(op), x, y] if op == "-" => Some(value(x)? - value(y)?),
            _ => None,
        },
    }
}

/// Rational assignments from a model block. Entries whose value is not a
/// rational literal (algebraic numbers, functions) make the whole model
/// unusable, so `None` is returned.
pub fn parse_model(src: &str) -> Option<BTreeMap<String, Rational>> {
    let top = parse_all(&tokens(src))?;
    let mut out = BTreeMap::new();
    for block in top {
        let Sexp::List(defs) = block else { continue };
        for d in defs {
            let Sexp::List(parts) = d else { continue };
            match parts.as_slice() {
                [Sexp::Atom(kw), Sexp::Atom(name), Sexp::List(args), Sexp::Atom(sort), v]
                    if kw == "define-fun" && args.is_empty() && sort == "Real" =>
                {
                    out.insert(name.trim_matches('|').to_string(), value(v)?);
                }
                [Sexp::Atom(kw), ..] if kw == "define-fun" => return None,
                _ => {}
            }
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_z3_model() {
        let m = parse_model("(\n  (define-fun x () Real\n    (- 2.0))\n  (define-fun y () Real (/ 1.0 3.0))\n  (define-fun z () Real 0.5)\n)").unwrap();
        assert_eq!(m["x"], Rational::from_integer((-2).into()));
        assert_eq!(m["y"], Rational::new(1.into(), 3.into()));
        assert_eq!(m["z"], Rational::new(1.into(), 2.into()));
    }

    #[test]
    fn rejects_algebraic() {
        assert!(parse_model("((define-fun x () Real (root-obj (+ (^ x 2) (- 2)) 1)))").is_none());
    }
}
