use std::collections::BTreeSet;

use super::{ExprError, Poly, Term};

/// Ordered equations `x_dot = e`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct OdeSystem(pub Vec<(String, Term)>);

impl OdeSystem {
    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|(v, _)| v.as_str())
    }

    pub fn var_set(&self) -> BTreeSet<String> {
        self.vars().map(str::to_string).collect()
    }

    /// Extends the system with additional equations (ghosts).
    pub fn extended(&self, extra: &[(String, Term)]) -> OdeSystem {
        let mut eqs = self.0.clone();
        eqs.extend(extra.iter().cloned());
        OdeSystem(eqs)
    }

    /// Lie derivative of `f` along the system, in canonical form.
    pub fn lie_derivative(&self, f: &Term) -> Result<Poly, ExprError> {
        let p = f.to_poly()?;
        let mut out = Poly::zero();
        for (x, e) in &self.0 {
            let dp = p.derivative(x);
            if !dp.is_zero() {
                out = out.add(&dp.mul(&e.to_poly()?));
            }
        }
        Ok(out)
    }

    /// True when every right-hand side is affine in the evolving variables.
    pub fn is_linear(&self) -> bool {
        let evolving = self.var_set();
        self.0.iter().all(|(_, e)| match e.to_poly() {
            Ok(p) => p.terms().all(|(m, _)| {
                m.powers()
                    .iter()
                    .filter(|(v, _)| evolving.contains(v))
                    .map(|(_, k)| k)
                    .sum::<u32>()
                    <= 1
            }),
            Err(_) => false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_term;

    fn sys(eqs: &[(&str, &str)]) -> OdeSystem {
        OdeSystem(eqs.iter().map(|(v, e)| (v.to_string(), parse_term(e).unwrap())).collect())
    }

    fn p(s: &str) -> Poly {
        parse_term(s).unwrap().to_poly().unwrap()
    }

    #[test]
    fn lie_derivative_examples() {
        assert!(sys(&[("x", "1"), ("y", "1")]).lie_derivative(&parse_term("x - y").unwrap()).unwrap().is_zero());
        let l = sys(&[("x", "x"), ("y", "-y")]).lie_derivative(&parse_term("x*y").unwrap()).unwrap();
        assert_eq!(l, p("x*(-y) + x*y"));
        assert!(sys(&[("x", "x")]).lie_derivative(&parse_term("7").unwrap()).unwrap().is_zero());
    }

    #[test]
    fn linearity() {
        assert!(sys(&[("x", "1"), ("y", "x")]).is_linear());
        assert!(!sys(&[("x", "x^3 + x^4")]).is_linear());
        assert!(sys(&[("x", "y"), ("t", "1")]).is_linear());
        assert!(!sys(&[("x", "y"), ("y", "x*y")]).is_linear());
    }
}
