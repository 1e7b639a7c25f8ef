//! Closed-form solutions of nilpotent linear ODEs and Darboux cofactors.

use std::collections::BTreeMap;

use crate::expr::{ExprError, OdeSystem, Poly};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("ODE is not linear in its evolving variables")]
    NotLinear,
    #[error("ODE has no polynomial solution")]
    SolutionNotPolynomial,
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Polynomial solution `x(t)` for each evolving variable with `x(0) = x`,
/// computed by Picard iteration. Succeeds exactly when the system is linear
/// with a nilpotent coefficient matrix.
pub fn solve(sys: &OdeSystem, t: &str) -> Result<BTreeMap<String, Poly>, SolveError> {
    if !sys.is_linear() {
        return Err(SolveError::NotLinear);
    }
    let rhs: Vec<(String, Poly)> =
        sys.0.iter().map(|(x, e)| Ok((x.clone(), e.to_poly()?))).collect::<Result<_, ExprError>>()?;
    let mut u: BTreeMap<String, Poly> = rhs.iter().map(|(x, _)| (x.clone(), Poly::var(x))).collect();
    for _ in 0..rhs.len() + 2 {
        let next: BTreeMap<String, Poly> =
            rhs.iter().map(|(x, e)| (x.clone(), Poly::var(x).add(&e.substitute(&u).integrate(t)))).collect();
        if next == u {
            return Ok(u);
        }
        u = next;
    }
    Err(SolveError::SolutionNotPolynomial)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CofactorKind {
    /// `f' == g*f` exactly.
    Eq,
    /// `f' >= g*f`, allowing a syntactically nonnegative remainder.
    Ineq,
}

/// A cofactor `g` for `f` with derivative `fdot`, if division finds one.
pub fn synthesize_cofactor(f: &Poly, fdot: &Poly, kind: CofactorKind) -> Option<Poly> {
    if f.is_zero() {
        return None;
    }
    let (q, r) = fdot.div_rem(f);
    let ok = match kind {
        CofactorKind::Eq => r.is_zero(),
        CofactorKind::Ineq => r.is_syntactically_nonnegative(),
    };
    ok.then_some(q)
}
