//! Multivariate polynomials with exact rational coefficients.
//!
//! A [`Poly`] is a map from [`Monomial`] to a nonzero coefficient. Monomials
//! are ordered graded-lexicographically (total degree first, then by the
//! exponent of the alphabetically smallest variable), which makes the map
//! iteration order the canonical printing order and gives a well-defined
//! leading term for division.

use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};

use super::{Rational, Term};

/// A power product `x1^a1 * ... * xn^an` with positive exponents, sorted by
/// variable name.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(String, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(name: &str) -> Self {
        Monomial(vec![(name.to_string(), 1)])
    }

    pub fn from_powers<I: IntoIterator<Item = (String, u32)>>(powers: I) -> Self {
        let mut map: BTreeMap<String, u32> = BTreeMap::new();
        for (v, e) in powers {
            *map.entry(v).or_default() += e;
        }
        Monomial(map.into_iter().filter(|(_, e)| *e > 0).collect())
    }

    pub fn powers(&self) -> &[(String, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn degree_in(&self, var: &str) -> u32 {
        self.0
            .iter()
            .find(|(v, _)| v == var)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial::from_powers(self.0.iter().chain(other.0.iter()).cloned())
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().all(|(v, e)| other.degree_in(v) >= *e)
    }

    /// `other / self`; caller guarantees `self.divides(other)`.
    fn quotient_of(&self, other: &Monomial) -> Monomial {
        Monomial(
            other
                .0
                .iter()
                .map(|(v, e)| (v.clone(), e - self.degree_in(v)))
                .filter(|(_, e)| *e > 0)
                .collect(),
        )
    }

    /// Removes `var` from the monomial, returning its former exponent.
    fn without(&self, var: &str) -> (Monomial, u32) {
        let e = self.degree_in(var);
        (
            Monomial(self.0.iter().filter(|(v, _)| v != var).cloned().collect()),
            e,
        )
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let names: BTreeSet<&String> = self.0.iter().chain(other.0.iter()).map(|(v, _)| v).collect();
        for v in names {
            match self.degree_in(v).cmp(&other.degree_in(v)) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A polynomial in canonical form: zero coefficients never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn int(n: i64) -> Self {
        Poly::constant(Rational::from_integer(n.into()))
    }

    pub fn var(name: &str) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::var(name), Rational::one());
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, Rational)>>(terms: I) -> Self {
        let mut p = Poly::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(slot) => {
                slot.insert(c);
            }
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += c;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The constant value, if the polynomial has no variables.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self
                .terms
                .iter()
                .next()
                .filter(|(m, _)| m.is_one())
                .map(|(_, c)| c.clone()),
            _ => None,
        }
    }

    pub fn leading(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().next_back()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: &str) -> u32 {
        self.terms.keys().map(|m| m.degree_in(var)).max().unwrap_or(0)
    }

    pub fn vars(&self) -> BTreeSet<String> {
        self.terms
            .keys()
            .flat_map(|m| m.0.iter().map(|(v, _)| v.clone()))
            .collect()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &Rational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut out = Poly::int(1);
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Partial derivative with respect to `var`.
    pub fn derivative(&self, var: &str) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let (rest, e) = m.without(var);
            if e == 0 {
                continue;
            }
            let m2 = rest.mul(&Monomial::from_powers([(var.to_string(), e - 1)]));
            out.add_term(m2, c * Rational::from_integer(e.into()));
        }
        out
    }

    /// `∫_0^var p d(var)`, treating every other variable as a constant.
    pub fn integrate(&self, var: &str) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let (rest, e) = m.without(var);
            let m2 = rest.mul(&Monomial::from_powers([(var.to_string(), e + 1)]));
            out.add_term(m2, c / Rational::from_integer((e + 1).into()));
        }
        out
    }

    /// Simultaneous substitution of polynomials for variables.
    pub fn substitute(&self, map: &BTreeMap<String, Poly>) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut prod = Poly::constant(c.clone());
            for (v, e) in &m.0 {
                let factor = match map.get(v) {
                    Some(p) => p.pow(*e),
                    None => Poly::from_terms([(Monomial::from_powers([(v.clone(), *e)]), Rational::one())]),
                };
                prod = prod.mul(&factor);
            }
            out = out.add(&prod);
        }
        out
    }

    /// Multivariate division by a single divisor under graded-lex order.
    ///
    /// Returns `(quotient, remainder)` with `self = quotient * den + remainder`
    /// and no term of the remainder divisible by the leading monomial of `den`.
    pub fn div_rem(&self, den: &Poly) -> (Poly, Poly) {
        let (lead_m, lead_c) = match den.leading() {
            Some((m, c)) => (m.clone(), c.clone()),
            None => return (Poly::zero(), self.clone()),
        };
        let mut quotient = Poly::zero();
        let mut remainder = Poly::zero();
        let mut p = self.clone();
        while let Some((m, c)) = p.leading().map(|(m, c)| (m.clone(), c.clone())) {
            if lead_m.divides(&m) {
                let t = Poly::from_terms([(lead_m.quotient_of(&m), c / &lead_c)]);
                quotient = quotient.add(&t);
                p = p.sub(&t.mul(den));
            } else {
                let t = Poly::from_terms([(m, c)]);
                remainder = remainder.add(&t);
                p = p.sub(&t);
            }
        }
        (quotient, remainder)
    }

    /// True when every term has a non-negative coefficient and only even
    /// exponents, so the polynomial is non-negative everywhere.
    pub fn is_syntactically_nonnegative(&self) -> bool {
        self.terms
            .iter()
            .all(|(m, c)| !c.is_negative() && m.0.iter().all(|(_, e)| e % 2 == 0))
    }

    pub fn eval(&self, env: &BTreeMap<String, Rational>) -> Option<Rational> {
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in &m.0 {
                let x = env.get(v)?;
                t *= num_traits::pow(x.clone(), *e as usize);
            }
            acc += t;
        }
        Some(acc)
    }

    pub fn eval_f64(&self, env: &dyn Fn(&str) -> f64) -> f64 {
        use num_traits::ToPrimitive;
        self.terms
            .iter()
            .map(|(m, c)| {
                m.0.iter().fold(c.to_f64().unwrap_or(f64::NAN), |acc, (v, e)| {
                    acc * env(v).powi(*e as i32)
                })
            })
            .sum()
    }

    /// Rebuilds a [`Term`] in canonical order, leading term first.
    pub fn to_term(&self) -> Term {
        let mut acc: Option<Term> = None;
        for (m, c) in self.terms.iter().rev() {
            let negative = c.is_negative();
            let mag = c.abs();
            let mono = monomial_term(m);
            let unsigned = match mono {
                None => Term::Const(mag),
                Some(mt) if mag.is_one() => mt,
                Some(mt) => Term::Mul(Box::new(Term::Const(mag)), Box::new(mt)),
            };
            acc = Some(match (acc, negative) {
                (None, false) => unsigned,
                (None, true) => Term::Neg(Box::new(unsigned)),
                (Some(a), false) => Term::Add(Box::new(a), Box::new(unsigned)),
                (Some(a), true) => Term::Sub(Box::new(a), Box::new(unsigned)),
            });
        }
        acc.unwrap_or_else(|| Term::int(0))
    }
}

fn monomial_term(m: &Monomial) -> Option<Term> {
    m.0.iter()
        .map(|(v, e)| {
            let base = Term::Var(v.clone());
            if *e == 1 {
                base
            } else {
                Term::Pow(Box::new(base), *e)
            }
        })
        .reduce(|a, b| Term::Mul(Box::new(a), Box::new(b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Poly {
        crate::parser::parse_term(s).unwrap().to_poly().unwrap()
    }

    #[test]
    fn grlex_order() {
        assert!(Monomial::var("x") > Monomial::var("z"));
        let x2 = Monomial::from_powers([("x".to_string(), 2)]);
        let xz = Monomial::from_powers([("x".to_string(), 1), ("z".to_string(), 1)]);
        assert!(x2 > xz);
        assert!(xz > Monomial::var("x"));
    }

    #[test]
    fn division_examples() {
        let (q, r) = p("5*x^2 + 3*x + 5*z*x + 3*z").div_rem(&p("x + z"));
        assert_eq!(q, p("5*x + 3"));
        assert!(r.is_zero());

        let (q, r) = p("-x + 1").div_rem(&p("x"));
        assert_eq!(q, p("-1"));
        assert_eq!(r, p("1"));

        let (q, r) = p("x").div_rem(&p("y"));
        assert!(q.is_zero());
        assert_eq!(r, p("x"));
    }

    #[test]
    fn derivative_and_integral() {
        assert_eq!(p("x^3 + 2*x*y").derivative("x"), p("3*x^2 + 2*y"));
        assert_eq!(p("x + s").integrate("s"), p("x*s + s^2/2"));
    }

    #[test]
    fn nonnegativity() {
        assert!(p("x^2 + 3*y^4 + 1").is_syntactically_nonnegative());
        assert!(!p("x").is_syntactically_nonnegative());
        assert!(!p("-1").is_syntactically_nonnegative());
        assert!(Poly::zero().is_syntactically_nonnegative());
    }

    #[test]
    fn to_term_roundtrip() {
        let q = p("1 - x + 1/2*t^2 + x*t");
        assert_eq!(q.to_term().to_poly().unwrap(), q);
        assert_eq!(q.to_term().to_string(), "0.5*t^2 + t*x - x + 1");
    }
}
