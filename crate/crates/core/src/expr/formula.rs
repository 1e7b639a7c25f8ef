use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use super::{fresh_name, Rational, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl RelOp {
    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Eq => "==",
            RelOp::Ne => "!=",
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
        }
    }

    pub fn negate(self) -> RelOp {
        match self {
            RelOp::Eq => RelOp::Ne,
            RelOp::Ne => RelOp::Eq,
            RelOp::Lt => RelOp::Ge,
            RelOp::Le => RelOp::Gt,
            RelOp::Gt => RelOp::Le,
            RelOp::Ge => RelOp::Lt,
        }
    }

    pub fn holds<T: PartialOrd>(self, a: &T, b: &T) -> bool {
        match self {
            RelOp::Eq => a == b,
            RelOp::Ne => a != b,
            RelOp::Lt => a < b,
            RelOp::Le => a <= b,
            RelOp::Gt => a > b,
            RelOp::Ge => a >= b,
        }
    }
}

/// First-order real-arithmetic formula.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Cmp(Term, RelOp, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Imp(Box<Formula>, Box<Formula>),
    Exists(Vec<String>, Box<Formula>),
    Forall(Vec<String>, Box<Formula>),
    /// `forall lower <= var < upper. body`; the bounds lie outside the binder.
    BoundedForall {
        var: String,
        lower: Term,
        upper: Term,
        body: Box<Formula>,
    },
}

impl Formula {
    pub fn cmp(a: Term, op: RelOp, b: Term) -> Formula {
        Formula::Cmp(a, op, b)
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn imp(a: Formula, b: Formula) -> Formula {
        Formula::Imp(Box::new(a), Box::new(b))
    }

    /// Left-nested conjunction; `true` when empty.
    pub fn conj<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        items.into_iter().reduce(Formula::and).unwrap_or(Formula::True)
    }

    /// Left-nested disjunction; `false` when empty.
    pub fn disj<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        items.into_iter().reduce(Formula::or).unwrap_or(Formula::False)
    }

    /// Splits a conjunction tree into its conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::And(a, b) => {
                let mut out = a.conjuncts();
                out.extend(b.conjuncts());
                out
            }
            f => vec![f],
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Formula::Cmp(..))
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Cmp(..) => true,
            Formula::Not(a) => a.is_quantifier_free(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                a.is_quantifier_free() && b.is_quantifier_free()
            }
            Formula::Exists(..) | Formula::Forall(..) | Formula::BoundedForall { .. } => false,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Cmp(a, _, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Formula::Not(a) => a.collect_free(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                a.collect_free(out);
                b.collect_free(out);
            }
            Formula::Exists(vs, body) | Formula::Forall(vs, body) => {
                let mut inner = BTreeSet::new();
                body.collect_free(&mut inner);
                out.extend(inner.into_iter().filter(|v| !vs.contains(v)));
            }
            Formula::BoundedForall { var, lower, upper, body } => {
                lower.collect_vars(out);
                upper.collect_vars(out);
                let mut inner = BTreeSet::new();
                body.collect_free(&mut inner);
                out.extend(inner.into_iter().filter(|v| v != var));
            }
        }
    }

    /// Every variable name occurring anywhere, bound or free.
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_all(&mut out);
        out
    }

    fn collect_all(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Cmp(a, _, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Formula::Not(a) => a.collect_all(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                a.collect_all(out);
                b.collect_all(out);
            }
            Formula::Exists(vs, body) | Formula::Forall(vs, body) => {
                out.extend(vs.iter().cloned());
                body.collect_all(out);
            }
            Formula::BoundedForall { var, lower, upper, body } => {
                out.insert(var.clone());
                lower.collect_vars(out);
                upper.collect_vars(out);
                body.collect_all(out);
            }
        }
    }

    pub fn substitute(&self, x: &str, e: &Term) -> Formula {
        self.substitute_many(&BTreeMap::from([(x.to_string(), e.clone())]))
    }

    /// Capture-avoiding simultaneous substitution of terms for free variables.
    pub fn substitute_many(&self, map: &BTreeMap<String, Term>) -> Formula {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Cmp(a, op, b) => Formula::Cmp(a.substitute(map), *op, b.substitute(map)),
            Formula::Not(a) => Formula::not(a.substitute_many(map)),
            Formula::And(a, b) => Formula::and(a.substitute_many(map), b.substitute_many(map)),
            Formula::Or(a, b) => Formula::or(a.substitute_many(map), b.substitute_many(map)),
            Formula::Imp(a, b) => Formula::imp(a.substitute_many(map), b.substitute_many(map)),
            Formula::Exists(vs, body) => {
                let (vs, body) = subst_binder(vs, body, map);
                Formula::Exists(vs, Box::new(body))
            }
            Formula::Forall(vs, body) => {
                let (vs, body) = subst_binder(vs, body, map);
                Formula::Forall(vs, Box::new(body))
            }
            Formula::BoundedForall { var, lower, upper, body } => {
                let (vs, body) = subst_binder(std::slice::from_ref(var), body, map);
                Formula::BoundedForall {
                    var: vs.into_iter().next().expect("one binder"),
                    lower: lower.substitute(map),
                    upper: upper.substitute(map),
                    body: Box::new(body),
                }
            }
        }
    }

    /// Pushes negations down to atoms, eliminating implications.
    pub fn nnf(&self) -> Formula {
        self.nnf_polar(true)
    }

    fn nnf_polar(&self, positive: bool) -> Formula {
        match (self, positive) {
            (Formula::True, true) | (Formula::False, false) => Formula::True,
            (Formula::True, false) | (Formula::False, true) => Formula::False,
            (Formula::Cmp(a, op, b), true) => Formula::Cmp(a.clone(), *op, b.clone()),
            (Formula::Cmp(a, op, b), false) => Formula::Cmp(a.clone(), op.negate(), b.clone()),
            (Formula::Not(a), p) => a.nnf_polar(!p),
            (Formula::And(a, b), true) => Formula::and(a.nnf_polar(true), b.nnf_polar(true)),
            (Formula::And(a, b), false) => Formula::or(a.nnf_polar(false), b.nnf_polar(false)),
            (Formula::Or(a, b), true) => Formula::or(a.nnf_polar(true), b.nnf_polar(true)),
            (Formula::Or(a, b), false) => Formula::and(a.nnf_polar(false), b.nnf_polar(false)),
            (Formula::Imp(a, b), true) => Formula::or(a.nnf_polar(false), b.nnf_polar(true)),
            (Formula::Imp(a, b), false) => Formula::and(a.nnf_polar(true), b.nnf_polar(false)),
            (Formula::Exists(vs, body), true) => Formula::Exists(vs.clone(), Box::new(body.nnf_polar(true))),
            (Formula::Exists(vs, body), false) => Formula::Forall(vs.clone(), Box::new(body.nnf_polar(false))),
            (Formula::Forall(vs, body), true) => Formula::Forall(vs.clone(), Box::new(body.nnf_polar(true))),
            (Formula::Forall(vs, body), false) => Formula::Exists(vs.clone(), Box::new(body.nnf_polar(false))),
            (Formula::BoundedForall { var, lower, upper, body }, p) => {
                let guard = Formula::and(
                    Formula::cmp(lower.clone(), RelOp::Le, Term::Var(var.clone())),
                    Formula::cmp(Term::Var(var.clone()), RelOp::Lt, upper.clone()),
                );
                Formula::Forall(vec![var.clone()], Box::new(Formula::imp(guard, (**body).clone())))
                    .nnf_polar(p)
            }
        }
    }

    /// Exact truth value on a quantifier-free formula; `None` when a variable
    /// is unbound, a quantifier occurs, or a division by zero is hit.
    pub fn eval(&self, env: &BTreeMap<String, Rational>) -> Option<bool> {
        Some(match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Cmp(a, op, b) => {
                let d = a.eval(env)? - b.eval(env)?;
                op.holds(&d, &Rational::zero())
            }
            Formula::Not(a) => !a.eval(env)?,
            Formula::And(a, b) => a.eval(env)? && b.eval(env)?,
            Formula::Or(a, b) => a.eval(env)? || b.eval(env)?,
            Formula::Imp(a, b) => !a.eval(env)? || b.eval(env)?,
            Formula::Exists(..) | Formula::Forall(..) | Formula::BoundedForall { .. } => return None,
        })
    }

    /// Floating-point truth value with `slack` favouring satisfaction:
    /// inequalities and equalities are relaxed by `slack` in whichever
    /// direction makes the formula more likely to hold at its polarity.
    pub fn eval_f64(&self, env: &dyn Fn(&str) -> f64, slack: f64) -> Option<bool> {
        self.eval_f64_polar(env, slack, true)
    }

    fn eval_f64_polar(&self, env: &dyn Fn(&str) -> f64, slack: f64, positive: bool) -> Option<bool> {
        Some(match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Cmp(a, op, b) => {
                let d = a.eval_f64(env) - b.eval_f64(env);
                if !d.is_finite() {
                    return None;
                }
                // At positive polarity relax toward truth, at negative toward falsity.
                let s = if positive { slack } else { -slack };
                match op {
                    RelOp::Eq if positive => d.abs() <= slack,
                    RelOp::Eq => d == 0.0,
                    RelOp::Ne if positive => d != 0.0,
                    RelOp::Ne => d.abs() > slack,
                    RelOp::Lt => d < s,
                    RelOp::Le => d <= s,
                    RelOp::Gt => d > -s,
                    RelOp::Ge => d >= -s,
                }
            }
            Formula::Not(a) => !a.eval_f64_polar(env, slack, !positive)?,
            Formula::And(a, b) => {
                a.eval_f64_polar(env, slack, positive)? && b.eval_f64_polar(env, slack, positive)?
            }
            Formula::Or(a, b) => {
                a.eval_f64_polar(env, slack, positive)? || b.eval_f64_polar(env, slack, positive)?
            }
            Formula::Imp(a, b) => {
                !a.eval_f64_polar(env, slack, !positive)? || b.eval_f64_polar(env, slack, positive)?
            }
            Formula::Exists(..) | Formula::Forall(..) | Formula::BoundedForall { .. } => return None,
        })
    }
}

fn subst_binder(vs: &[String], body: &Formula, map: &BTreeMap<String, Term>) -> (Vec<String>, Formula) {
    let body_free = body.free_vars();
    let inner: BTreeMap<String, Term> = map
        .iter()
        .filter(|(k, _)| !vs.contains(k) && body_free.contains(*k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    if inner.is_empty() {
        return (vs.to_vec(), body.clone());
    }
    let mut incoming = BTreeSet::new();
    for t in inner.values() {
        t.collect_vars(&mut incoming);
    }
    let mut avoid = body.all_vars();
    avoid.extend(incoming.iter().cloned());
    avoid.extend(inner.keys().cloned());
    avoid.extend(vs.iter().cloned());
    let mut renamed = Vec::with_capacity(vs.len());
    let mut rename = BTreeMap::new();
    for v in vs {
        if incoming.contains(v) {
            let fresh = fresh_name(v, &avoid);
            avoid.insert(fresh.clone());
            rename.insert(v.clone(), Term::Var(fresh.clone()));
            renamed.push(fresh);
        } else {
            renamed.push(v.clone());
        }
    }
    let body = body.substitute_many(&rename);
    (renamed, body.substitute_many(&inner))
}
