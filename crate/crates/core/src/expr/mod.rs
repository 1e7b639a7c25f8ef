//! Terms, formulas, polynomial normal forms and ODE systems.

mod canonical;
mod domain;
mod formula;
mod ode;
mod poly;
mod print;
mod term;

use std::collections::BTreeSet;

pub use canonical::{Canon, CanonRel};
pub use domain::{boundary, closure};
pub use formula::{Formula, RelOp};
pub use ode::OdeSystem;
pub use poly::{Monomial, Poly};
pub use print::format_rational;
pub use term::Term;

/// Exact rational numbers used for every coefficient.
pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("division by non-constant term `{0}`")]
    NonConstantDivisor(String),
    #[error("unsupported domain `{0}`: only conjunctions of strict inequalities are allowed")]
    UnsupportedDomain(String),
}

/// `base` followed by the smallest positive integer suffix not in `avoid`.
pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    (1..)
        .map(|i| format!("{base}{i}"))
        .find(|n| !avoid.contains(n))
        .expect("unbounded suffix search")
}

/// Multivariate division of terms, see [`Poly::div_rem`].
pub fn poly_div(num: &Term, den: &Term) -> Result<(Term, Term), ExprError> {
    let (q, r) = num.to_poly()?.div_rem(&den.to_poly()?);
    Ok((q.to_term(), r.to_term()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_suffix() {
        let avoid: BTreeSet<String> = ["t", "t1", "x"].iter().map(|s| s.to_string()).collect();
        assert_eq!(fresh_name("t", &avoid), "t2");
        assert_eq!(fresh_name("y", &avoid), "y1");
    }
}
