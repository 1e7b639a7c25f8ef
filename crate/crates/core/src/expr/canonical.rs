//! Canonical form for comparing formulas up to polynomial normalization.
//!
//! Atoms become `p rel 0` with `rel` one of `=`, `!=`, `<`, `<=` and `p`
//! scaled to a unit leading coefficient. Conjunctions and disjunctions are
//! flattened into sets, negated atoms are folded into the complementary
//! relation, and implication chains `a -> b -> c` are curried into a set of
//! antecedents with a single conclusion.

use std::collections::BTreeSet;

use num_traits::{One, Signed};

use super::{ExprError, Formula, Poly, RelOp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CanonRel {
    Eq,
    Ne,
    Lt,
    Le,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Canon {
    True,
    False,
    Atom(Poly, CanonRel),
    Not(Box<Canon>),
    And(BTreeSet<Canon>),
    Or(BTreeSet<Canon>),
    Imp(BTreeSet<Canon>, Box<Canon>),
    Exists(Vec<String>, Box<Canon>),
    Forall(Vec<String>, Box<Canon>),
    Bounded(String, Poly, Poly, Box<Canon>),
}

fn atom(p: Poly, rel: CanonRel) -> Canon {
    let scale = match (p.leading(), rel) {
        (None, _) => return Canon::Atom(p, rel),
        (Some((_, c)), CanonRel::Eq | CanonRel::Ne) => c.clone(),
        (Some((_, c)), _) => c.abs(),
    };
    let p = p.scale(&(num_rational::BigRational::one() / scale));
    Canon::Atom(p, rel)
}

fn negate(c: Canon) -> Canon {
    match c {
        Canon::True => Canon::False,
        Canon::False => Canon::True,
        Canon::Atom(p, CanonRel::Eq) => atom(p, CanonRel::Ne),
        Canon::Atom(p, CanonRel::Ne) => atom(p, CanonRel::Eq),
        Canon::Atom(p, CanonRel::Lt) => atom(p.neg(), CanonRel::Le),
        Canon::Atom(p, CanonRel::Le) => atom(p.neg(), CanonRel::Lt),
        Canon::Not(inner) => *inner,
        other => Canon::Not(Box::new(other)),
    }
}

fn flatten_and(c: Canon, out: &mut BTreeSet<Canon>) {
    match c {
        Canon::And(items) => out.extend(items),
        Canon::True => {}
        other => {
            out.insert(other);
        }
    }
}

fn flatten_or(c: Canon, out: &mut BTreeSet<Canon>) {
    match c {
        Canon::Or(items) => out.extend(items),
        Canon::False => {}
        other => {
            out.insert(other);
        }
    }
}

fn collapse(items: BTreeSet<Canon>, empty: Canon, wrap: fn(BTreeSet<Canon>) -> Canon) -> Canon {
    match items.len() {
        0 => empty,
        1 => items.into_iter().next().expect("one item"),
        _ => wrap(items),
    }
}

impl Formula {
    pub fn canonical(&self) -> Result<Canon, ExprError> {
        Ok(match self {
            Formula::True => Canon::True,
            Formula::False => Canon::False,
            Formula::Cmp(a, op, b) => {
                let p = a.to_poly()?.sub(&b.to_poly()?);
                match op {
                    RelOp::Eq => atom(p, CanonRel::Eq),
                    RelOp::Ne => atom(p, CanonRel::Ne),
                    RelOp::Lt => atom(p, CanonRel::Lt),
                    RelOp::Le => atom(p, CanonRel::Le),
                    RelOp::Gt => atom(p.neg(), CanonRel::Lt),
                    RelOp::Ge => atom(p.neg(), CanonRel::Le),
                }
            }
            Formula::Not(a) => negate(a.canonical()?),
            Formula::And(a, b) => {
                let mut items = BTreeSet::new();
                flatten_and(a.canonical()?, &mut items);
                flatten_and(b.canonical()?, &mut items);
                collapse(items, Canon::True, Canon::And)
            }
            Formula::Or(a, b) => {
                let mut items = BTreeSet::new();
                flatten_or(a.canonical()?, &mut items);
                flatten_or(b.canonical()?, &mut items);
                collapse(items, Canon::False, Canon::Or)
            }
            Formula::Imp(a, b) => {
                let mut ante = BTreeSet::new();
                flatten_and(a.canonical()?, &mut ante);
                let concl = match b.canonical()? {
                    Canon::Imp(more, c) => {
                        ante.extend(more);
                        *c
                    }
                    c => c,
                };
                if ante.is_empty() {
                    concl
                } else {
                    Canon::Imp(ante, Box::new(concl))
                }
            }
            Formula::Exists(vs, body) => Canon::Exists(vs.clone(), Box::new(body.canonical()?)),
            Formula::Forall(vs, body) => Canon::Forall(vs.clone(), Box::new(body.canonical()?)),
            Formula::BoundedForall { var, lower, upper, body } => Canon::Bounded(
                var.clone(),
                lower.to_poly()?,
                upper.to_poly()?,
                Box::new(body.canonical()?),
            ),
        })
    }

    /// Equality up to canonical form.
    pub fn equiv_canonical(&self, other: &Formula) -> bool {
        matches!((self.canonical(), other.canonical()), (Ok(a), Ok(b)) if a == b)
    }
}

#[cfg(test)]
mod tests {
    use crate::parser::parse_formula;

    fn same(a: &str, b: &str) -> bool {
        parse_formula(a).unwrap().equiv_canonical(&parse_formula(b).unwrap())
    }

    #[test]
    fn atoms_normalize() {
        assert!(same("x + 1 >= 1", "0 <= x"));
        assert!(same("2*x == 2", "x == 1"));
        assert!(same("!(t > 0)", "t <= 0"));
        assert!(!same("x >= 0", "x > 0"));
    }

    #[test]
    fn implication_chains_curry() {
        assert!(same("a >= 0 -> b >= 0 -> c > 0", "a >= 0 && b >= 0 -> c > 0"));
        assert!(same("b >= 0 && a >= 0 -> c > 0", "a >= 0 -> b >= 0 -> c > 0"));
        assert!(same("true -> x > 0", "x > 0"));
        assert!(!same("(a > 0 -> b > 0) -> c > 0", "a > 0 -> b > 0 -> c > 0"));
    }
}
