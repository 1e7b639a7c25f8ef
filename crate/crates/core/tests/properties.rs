use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use proptest::prelude::*;

use hhl_core::backend::emit_smt;
use hhl_core::corpus::CORPUS;
use hhl_core::expr::{boundary, closure, poly_div, Formula, OdeSystem, Poly, Rational, RelOp, Term};
use hhl_core::labels::{bind_solvers, BranchAtom, Category, Label, SolverName};
use hhl_core::odesolve::{solve, synthesize_cofactor, CofactorKind};
use hhl_core::parser::{self, Node, NodeKind, Span};
use hhl_core::report::vcs_report;
use hhl_core::sim::{self, Budget, State};
use hhl_core::vcgen::generate;

const VARS: [&str; 3] = ["x", "y", "z"];
const OPS: [RelOp; 6] = [RelOp::Eq, RelOp::Ne, RelOp::Lt, RelOp::Le, RelOp::Gt, RelOp::Ge];

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![(-5i64..=5).prop_map(Term::int), prop::sample::select(&VARS[..]).prop_map(Term::var)];
    leaf.prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::mul(a, b)),
            inner.clone().prop_map(|a| Term::Neg(Box::new(a))),
            (inner.clone(), 0u32..3).prop_map(|(a, n)| Term::Pow(Box::new(a), n)),
            (inner, 1i64..4).prop_map(|(a, d)| Term::Div(Box::new(a), Box::new(Term::int(d)))),
        ]
    })
}

fn formula() -> impl Strategy<Value = Formula> {
    let atom = (term(), prop::sample::select(&OPS[..]), term()).prop_map(|(a, op, b)| Formula::cmp(a, op, b));
    atom.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::imp(a, b)),
            inner.prop_map(Formula::not),
        ]
    })
}

fn env() -> impl Strategy<Value = BTreeMap<String, Rational>> {
    prop::collection::vec((-8i64..=8, 1i64..=3), 3)
        .prop_map(|v| VARS.iter().zip(v).map(|(x, (n, d))| (x.to_string(), rat(n, d))).collect())
}

fn poly() -> impl Strategy<Value = Poly> {
    term().prop_map(|t| t.to_poly().expect("generated terms are polynomial"))
}

fn system() -> impl Strategy<Value = OdeSystem> {
    prop::collection::vec(term(), 3)
        .prop_map(|rhs| OdeSystem(VARS.iter().map(|v| v.to_string()).zip(rhs).collect()))
}

fn scale(p: &Poly, k: i64) -> Poly {
    p.scale(&rat(k, 1))
}

fn f64_env(v: &[f64; 3]) -> impl Fn(&str) -> f64 + '_ {
    move |name| VARS.iter().position(|x| *x == name).map_or(0.0, |i| v[i])
}

proptest! {
    #[test]
    fn substituting_a_variable_for_itself_is_identity(f in formula()) {
        for x in VARS {
            prop_assert_eq!(f.substitute(x, &Term::var(x)), f.clone());
        }
    }

    #[test]
    fn substitution_commutes_with_evaluation(f in formula(), e in term(), env in env()) {
        let value = e.eval(&env).unwrap();
        let mut shifted = env.clone();
        shifted.insert("x".into(), value);
        prop_assert_eq!(f.substitute("x", &e).eval(&env), f.eval(&shifted));
    }

    #[test]
    fn printed_formulas_parse_back(f in formula(), env in env()) {
        let back = parser::parse_formula(&f.to_string()).unwrap();
        prop_assert_eq!(back.eval(&env), f.eval(&env));
        prop_assert!(back.equiv_canonical(&f), "{} vs {}", back, f);
    }

    #[test]
    fn lie_derivative_is_linear(sys in system(), f in term(), g in term(), a in -4i64..=4, b in -4i64..=4) {
        let combo = Term::add(Term::mul(Term::int(a), f.clone()), Term::mul(Term::int(b), g.clone()));
        let lhs = sys.lie_derivative(&combo).unwrap();
        let rhs = scale(&sys.lie_derivative(&f).unwrap(), a).add(&scale(&sys.lie_derivative(&g).unwrap(), b));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn lie_derivative_matches_an_euler_step(
        sys in system(),
        f in poly(),
        v in prop::array::uniform3(-1.0f64..1.0),
    ) {
        let h = 1e-4;
        let rhs: Vec<Poly> = sys.0.iter().map(|(_, e)| e.to_poly().unwrap()).collect();
        let r: Vec<f64> = rhs.iter().map(|p| p.eval_f64(&f64_env(&v))).collect();
        let step = [v[0] + h * r[0], v[1] + h * r[1], v[2] + h * r[2]];
        let f0 = f.eval_f64(&f64_env(&v));
        let diff = (f.eval_f64(&f64_env(&step)) - f0) / h;
        let lie = sys.lie_derivative(&f.to_term()).unwrap().eval_f64(&f64_env(&v));
        // second directional derivative of f along r, at both ends of the step
        let curvature = |at: &[f64; 3]| {
            let mut s = 0.0;
            for (i, xi) in VARS.iter().enumerate() {
                for (j, xj) in VARS.iter().enumerate() {
                    s += r[i] * r[j] * f.derivative(xi).derivative(xj).eval_f64(&f64_env(at));
                }
            }
            s.abs()
        };
        let bound = 1.0 + curvature(&v).max(curvature(&step));
        let tol = 10.0 * h * bound + 1e-9 * (1.0 + f0.abs()) / h;
        prop_assert!((diff - lie).abs() <= tol, "diff {diff} lie {lie} tol {tol}");
    }

    #[test]
    fn division_reconstructs_the_dividend(a in poly(), b in poly()) {
        prop_assume!(!b.is_zero());
        let (q, r) = a.div_rem(&b);
        prop_assert_eq!(q.mul(&b).add(&r), a);
    }

    #[test]
    fn term_division_reconstructs_the_dividend(a in term(), b in term()) {
        prop_assume!(!b.to_poly().unwrap().is_zero());
        let (q, r) = poly_div(&a, &b).unwrap();
        let (q, r) = (q.to_poly().unwrap(), r.to_poly().unwrap());
        prop_assert_eq!(q.mul(&b.to_poly().unwrap()).add(&r), a.to_poly().unwrap());
    }

    #[test]
    fn closure_contains_domain_and_boundary_avoids_it(
        atoms in prop::collection::vec((-2i64..=2, -2i64..=2, -3i64..=3, any::<bool>()), 1..4),
        x in -4i64..=4,
        y in -4i64..=4,
    ) {
        let d = Formula::conj(atoms.iter().map(|&(a, b, c, lt)| {
            let lhs = Term::add(Term::mul(Term::int(a), Term::var("x")), Term::mul(Term::int(b), Term::var("y")));
            Formula::cmp(lhs, if lt { RelOp::Lt } else { RelOp::Gt }, Term::int(c))
        }));
        let env: BTreeMap<String, Rational> = [("x".to_string(), rat(x, 1)), ("y".to_string(), rat(y, 1))].into();
        let inside = d.eval(&env).unwrap();
        let closed = closure(&d).unwrap().eval(&env).unwrap();
        let edge = boundary(&d).unwrap().eval(&env).unwrap();
        prop_assert!(!inside || closed);
        prop_assert!(!(edge && inside));
        prop_assert_eq!(edge, closed && !inside);
    }

    #[test]
    fn equality_cofactors_are_exact(f in poly(), g in poly()) {
        prop_assume!(!f.is_zero());
        let fdot = g.mul(&f);
        let q = synthesize_cofactor(&f, &fdot, CofactorKind::Eq);
        prop_assert_eq!(q.map(|q| q.mul(&f)), Some(fdot));
    }

    #[test]
    fn inequality_cofactors_leave_a_nonnegative_rest(
        f in poly(),
        g in poly(),
        c in 0i64..4,
        var in prop::sample::select(&VARS[..]),
    ) {
        prop_assume!(!f.is_zero());
        let fdot = g.mul(&f).add(&scale(&Poly::var(var).pow(2), c));
        if let Some(q) = synthesize_cofactor(&f, &fdot, CofactorKind::Ineq) {
            prop_assert!(fdot.sub(&q.mul(&f)).is_syntactically_nonnegative());
        }
        if let Some(q) = synthesize_cofactor(&f, &fdot, CofactorKind::Eq) {
            prop_assert_eq!(q.mul(&f), fdot);
        }
    }

    #[test]
    fn smt_emission_is_deterministic(f in formula()) {
        prop_assert_eq!(emit_smt(&f, "QF_NRA"), emit_smt(&f.clone(), "QF_NRA"));
    }
}

/// Strictly triangular integer-coefficient linear systems over x, y, z.
fn nilpotent_system() -> impl Strategy<Value = OdeSystem> {
    prop::collection::vec(-3i64..=3, 6).prop_map(|c| {
        let lin = |terms: Vec<(i64, &str)>, k: i64| {
            terms.into_iter().fold(Term::int(k), |acc, (a, v)| Term::add(acc, Term::mul(Term::int(a), Term::var(v))))
        };
        OdeSystem(vec![
            ("x".into(), Term::int(c[0])),
            ("y".into(), lin(vec![(c[1], "x")], c[2])),
            ("z".into(), lin(vec![(c[3], "y"), (c[4], "x")], c[5])),
        ])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn closed_form_solutions_solve_the_system(sys in nilpotent_system()) {
        let u = solve(&sys, "t").unwrap();
        let at_zero: BTreeMap<String, Poly> = [("t".to_string(), Poly::zero())].into();
        for (x, e) in &sys.0 {
            prop_assert_eq!(u[x].substitute(&at_zero), Poly::var(x));
            prop_assert_eq!(u[x].derivative("t"), e.to_poly().unwrap().substitute(&u));
        }
    }

    #[test]
    fn closed_form_solutions_agree_with_integration(
        sys in nilpotent_system(),
        starts in prop::collection::vec(prop::array::uniform3(-2.0f64..2.0), 10),
    ) {
        let u = solve(&sys, "t").unwrap();
        let eqs: Vec<String> = sys.0.iter().map(|(x, e)| format!("{x}_dot = {e}")).collect();
        let src = format!("pre [true];\n{{{}, t_dot = 1 & t < 1}};\npost [true];\n", eqs.join(", "));
        let file = parser::parse(&src).unwrap();
        for s in starts {
            let mut s0: State = VARS.iter().map(|v| v.to_string()).zip(s).collect();
            s0.insert("t".into(), 0.0);
            let end = sim::run(&file, &s0, &Budget::default()).unwrap();
            let t = end["t"];
            prop_assert!((t - 1.0).abs() < 1e-6);
            let lookup = |name: &str| if name == "t" { t } else { s0[name] };
            for x in VARS {
                let exact = u[x].eval_f64(&lookup);
                prop_assert!((end[x] - exact).abs() <= 1e-6 * exact.abs().max(1.0), "{x}: {} vs {exact}", end[x]);
            }
        }
    }
}

fn branch_atom() -> impl Strategy<Value = BranchAtom> {
    let leaf = prop_oneof![
        Just(BranchAtom::Skip),
        Just(BranchAtom::Exec),
        (1u32..20).prop_map(|n| BranchAtom::Index(n, Vec::new())),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            (1u32..20, prop::collection::vec(inner.clone(), 1..4)).prop_map(|(n, v)| BranchAtom::Index(n, v)),
            inner,
        ]
    })
}

fn label() -> impl Strategy<Value = Label> {
    let category = prop::sample::select(vec![Category::None, Category::Init, Category::Maintain, Category::InitAll]);
    (category, prop::collection::vec(branch_atom(), 0..4)).prop_map(|(c, b)| Label::new(c, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn labels_render_and_parse_back(l in label()) {
        let text = l.to_string();
        prop_assert_eq!(text.parse::<Label>().unwrap(), l.clone());
        prop_assert_eq!(l.hint_text().parse::<Label>().unwrap(), l);
    }
}

fn walk(node: &Node, visit: &mut dyn FnMut(&Node, &[&Node])) {
    let children: Vec<&Node> = match &node.kind {
        NodeKind::Seq(v) | NodeKind::Choice(v) => v.iter().collect(),
        NodeKind::If { branches, else_branch } => {
            branches.iter().map(|b| &b.body).chain(else_branch.as_deref()).collect()
        }
        NodeKind::Loop { body, .. } => vec![body.as_ref()],
        _ => Vec::new(),
    };
    visit(node, &children);
    for c in children {
        walk(c, visit);
    }
}

#[test]
fn corpus_round_trips_through_the_printer() {
    for (name, src) in CORPUS {
        let file = parser::parse(src).unwrap();
        let printed = parser::print(&file);
        let again = parser::parse(&printed).unwrap_or_else(|e| panic!("{name}: {e}\n{printed}"));
        assert_eq!(again.without_spans(), file.without_spans(), "{name}");
        assert_eq!(parser::print(&again), printed, "{name}");
    }
}

#[test]
fn corpus_spans_nest() {
    for (name, src) in CORPUS {
        let file = parser::parse(src).unwrap();
        walk(&file.body, &mut |node, children| {
            for c in children {
                assert!(node.span.contains(c.span), "{name}: {:?} outside {:?}", c.span, node.span);
            }
            if let NodeKind::Seq(_) = node.kind {
                let spans: Vec<Span> = children.iter().map(|c| c.span).collect();
                for w in spans.windows(2) {
                    assert!(w[0].end <= w[1].start, "{name}: siblings {:?} {:?}", w[0], w[1]);
                }
            }
        });
    }
}

#[test]
fn corpus_generation_is_deterministic() {
    for (name, src) in CORPUS {
        let a = serde_json::to_string(&vcs_report(src)).unwrap();
        let b = serde_json::to_string(&vcs_report(src)).unwrap();
        assert_eq!(a, b, "{name}");
        let vcs = generate(&parser::parse(src).unwrap()).unwrap();
        for vc in &vcs {
            assert_eq!(emit_smt(&vc.formula, "QF_NRA"), emit_smt(&vc.formula, "QF_NRA"));
        }
    }
}

#[test]
fn corpus_origin_label_pairs_are_unique() {
    for (name, src) in CORPUS {
        let vcs = generate(&parser::parse(src).unwrap()).unwrap();
        let mut seen = BTreeSet::new();
        for vc in &vcs {
            assert!(seen.insert((vc.origin.path.clone(), vc.label.clone())), "{name}: duplicate {}", vc.label);
        }
        let ids: BTreeSet<&str> = vcs.iter().map(|vc| vc.id.as_str()).collect();
        assert_eq!(ids.len(), vcs.len(), "{name}");
    }
}

type Triple = (String, Label, SolverName, String);

fn triples(src: &str) -> Vec<Triple> {
    let file = parser::parse(src).unwrap();
    let mut vcs = generate(&file).unwrap();
    bind_solvers(&file, &mut vcs);
    vcs.into_iter().map(|vc| (vc.origin.path.to_string(), vc.label, vc.solver, vc.id)).collect()
}

#[test]
fn whitespace_edits_keep_labels_and_solvers() {
    for (name, src) in CORPUS {
        let spaced = src.replace('\n', "\n\n").replace(' ', "  ").replace(';', " ;\t");
        assert_eq!(triples(&spaced), triples(src), "{name}");
    }
}

#[test]
fn hint_rewrites_touch_only_the_hint_block() {
    for (name, src) in CORPUS {
        let file = parser::parse(src).unwrap();
        let vcs = generate(&file).unwrap();
        for (i, vc) in vcs.iter().enumerate() {
            let solver = if i % 2 == 0 { SolverName::Wolfram } else { SolverName::Z3 };
            let assertion = hhl_core::labels::resolve_assertion(&file, &vc.origin.path).unwrap();
            let (start, end) = assertion.hints_span.map_or((assertion.insert_at, assertion.insert_at), |s| (s.start, s.end));
            let out = parser::rewrite_hint(src, &vc.origin.path, &vc.label, solver).unwrap();
            assert_eq!(&out[..start], &src[..start], "{name}");
            assert_eq!(&out[out.len() - (src.len() - end)..], &src[end..], "{name}");

            let after: Vec<Triple> = triples(&out);
            let before = triples(src);
            assert_eq!(after.len(), before.len());
            for (a, b) in after.iter().zip(&before) {
                assert_eq!((&a.0, &a.1, &a.3), (&b.0, &b.1, &b.3), "{name}");
                if a.3 == vc.id {
                    assert_eq!(a.2, solver, "{name}");
                } else {
                    assert_eq!(a.2, b.2, "{name}");
                }
            }
        }
    }
}
