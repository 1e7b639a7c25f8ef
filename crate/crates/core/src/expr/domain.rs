//! Closure and boundary of ODE domains.

use super::{ExprError, Formula, RelOp};

fn strict_atoms(d: &Formula) -> Result<Vec<&Formula>, ExprError> {
    if *d == Formula::True {
        return Ok(Vec::new());
    }
    let atoms = d.conjuncts();
    for a in &atoms {
        if !matches!(a, Formula::Cmp(_, RelOp::Lt | RelOp::Gt, _)) {
            return Err(ExprError::UnsupportedDomain(d.to_string()));
        }
    }
    Ok(atoms)
}

fn relax(a: &Formula, strict_to: impl Fn(RelOp) -> RelOp) -> Formula {
    match a {
        Formula::Cmp(l, op, r) => Formula::Cmp(l.clone(), strict_to(*op), r.clone()),
        _ => unreachable!("checked by strict_atoms"),
    }
}

/// Replaces each strict relation by its non-strict counterpart.
pub fn closure(d: &Formula) -> Result<Formula, ExprError> {
    let atoms = strict_atoms(d)?;
    if atoms.is_empty() {
        return Ok(Formula::True);
    }
    Ok(Formula::conj(atoms.into_iter().map(|a| {
        relax(a, |op| if op == RelOp::Lt { RelOp::Le } else { RelOp::Ge })
    })))
}

/// Boundary of an open domain: `p = 0` for one atom, otherwise the closure
/// conjoined with the disjunction of atom boundaries.
pub fn boundary(d: &Formula) -> Result<Formula, ExprError> {
    let atoms = strict_atoms(d)?;
    let edges: Vec<Formula> = atoms.iter().map(|a| relax(a, |_| RelOp::Eq)).collect();
    Ok(match edges.len() {
        0 => Formula::False,
        1 => edges.into_iter().next().expect("one edge"),
        _ => Formula::and(closure(d)?, Formula::disj(edges)),
    })
}
