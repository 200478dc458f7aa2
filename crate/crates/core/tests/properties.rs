//! Property tests beyond the pinned acceptance batteries: parser fuzzing
//! with mutations, kernel algebra laws, gcd contracts, search invariances,
//! and cross-module numeric checks.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use jetconn_core::algebra::gcd::poly_gcd;
use jetconn_core::algebra::{Poly, RatFun, VarId, VarKind, VarSpace};
use jetconn_core::connection::{Family, ParamConnection, Substitution};
use jetconn_core::invariants::{search_first_integrals, AnsatzConfig, DenomBase, in_span};
use jetconn_core::io::expr::parse_expr;
use jetconn_core::io::spec::{hypergeometric, hypergeometric_det};
use jetconn_core::jet::ProlongedSystem;
use jetconn_core::numeric::{dopri5, OdeOptions};

fn test_space() -> Arc<VarSpace> {
    let mut s = VarSpace::new();
    s.declare("x", VarKind::Base).unwrap();
    s.declare("a", VarKind::Param).unwrap();
    s.declare("b", VarKind::Param).unwrap();
    Arc::new(s)
}

/// Strategy: structured random polynomials over (x, a, b).
fn poly_strategy(space: Arc<VarSpace>) -> impl Strategy<Value = Poly> {
    let term = (any::<i8>(), 0u32..3, 0u32..2, 0u32..2);
    proptest::collection::vec(term, 1..5).prop_map(move |terms| {
        let mut p = Poly::zero(&space);
        for (c, ex, ea, eb) in terms {
            if c == 0 {
                continue;
            }
            let mut t = Poly::constant(
                &space,
                num_rational::BigRational::from_integer((c as i64).into()),
            );
            t = t.mul(&Poly::var_pow(&space, VarId(0), ex));
            t = t.mul(&Poly::var_pow(&space, VarId(1), ea));
            t = t.mul(&Poly::var_pow(&space, VarId(2), eb));
            p = p.add(&t);
        }
        p
    })
}

/// Random rational functions with dense numerators over structured
/// denominators (monomials times optional 1 + v factors), which keeps the
/// normalization gcds in their fast regimes while still exercising the
/// quotient rule everywhere.
fn ratfun_strategy(space: Arc<VarSpace>) -> impl Strategy<Value = RatFun> {
    let sp2 = space.clone();
    (
        poly_strategy(space),
        0u32..3,
        0u32..2,
        0u32..2,
        proptest::bool::ANY,
    )
        .prop_map(move |(num, ex, ea, extra, shift)| {
            let mut den = Poly::one(&sp2)
                .mul(&Poly::var_pow(&sp2, VarId(0), ex))
                .mul(&Poly::var_pow(&sp2, VarId(1), ea));
            if extra == 1 {
                let v = if shift { VarId(0) } else { VarId(2) };
                den = den.mul(&Poly::one(&sp2).add(&Poly::var(&sp2, v)));
            }
            RatFun::new(num, den).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(pa in poly_strategy(test_space()),
                   pb in poly_strategy(test_space()),
                   pc in poly_strategy(test_space())) {
        // Associativity and distributivity, structurally.
        prop_assert_eq!(pa.add(&pb).add(&pc), pa.add(&pb.add(&pc)));
        prop_assert_eq!(pa.mul(&pb).mul(&pc), pa.mul(&pb.mul(&pc)));
        prop_assert_eq!(pa.mul(&pb.add(&pc)), pa.mul(&pb).add(&pa.mul(&pc)));
        prop_assert_eq!(pa.mul(&pb), pb.mul(&pa));
    }

    #[test]
    fn gcd_divides_and_respects_common_factor(
        pa in poly_strategy(test_space()),
        pb in poly_strategy(test_space()),
        g in poly_strategy(test_space())) {
        prop_assume!(!g.is_zero() && !pa.is_zero() && !pb.is_zero());
        let got = poly_gcd(&pa.mul(&g), &pb.mul(&g));
        prop_assert!(pa.mul(&g).div_exact(&got).is_some());
        prop_assert!(pb.mul(&g).div_exact(&got).is_some());
        prop_assert!(got.div_exact(&g.primitive_part()).is_some());
    }

    #[test]
    fn normalize_is_scale_invariant(
        num in poly_strategy(test_space()),
        den in poly_strategy(test_space()),
        g in poly_strategy(test_space())) {
        prop_assume!(!den.is_zero() && !g.is_zero());
        let f1 = RatFun::new(num.clone(), den.clone()).unwrap();
        let f2 = RatFun::new(num.mul(&g), den.mul(&g)).unwrap();
        prop_assert_eq!(f1, f2);
    }

    #[test]
    fn diff_satisfies_leibniz_and_commutes(
        f in ratfun_strategy(test_space()),
        g in ratfun_strategy(test_space())) {
        let (x, a) = (VarId(0), VarId(1));
        let lhs = f.mul(&g).diff(x);
        let rhs = f.diff(x).mul(&g).add(&f.mul(&g.diff(x)));
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(f.diff(x).diff(a), f.diff(a).diff(x));
    }

    #[test]
    fn print_parse_round_trip(f in ratfun_strategy(test_space())) {
        let space = test_space();
        let printed = f.to_string();
        let back = parse_expr(&printed, &space).unwrap();
        prop_assert_eq!(f, back);
    }

    #[test]
    fn parser_never_panics_on_mutations(
        f in ratfun_strategy(test_space()),
        pos in any::<prop::sample::Index>(),
        ins in "[a-z0-9+*/()^ -]{0,3}") {
        // Mutate a valid printed expression; parsing must return a result,
        // never crash.
        let space = test_space();
        let mut text = f.to_string();
        let at = pos.index(text.len().max(1)).min(text.len());
        text.insert_str(at, &ins);
        let _ = parse_expr(&text, &space);
    }

    #[test]
    fn eval_of_derivative_matches_finite_differences(
        f in ratfun_strategy(test_space()),
        xv in -2.0f64..2.0,
        av in -2.0f64..2.0,
        bv in -2.0f64..2.0) {
        let df = f.diff(VarId(0));
        let eval = |x: f64| -> Option<f64> {
            let m = HashMap::from([
                (VarId(0), Complex64::new(x, 0.0)),
                (VarId(1), Complex64::new(av, 0.0)),
                (VarId(2), Complex64::new(bv, 0.0)),
            ]);
            f.eval_map(&m).ok().map(|z| z.re)
        };
        let h = 1e-5;
        let samples: Option<Vec<f64>> = [xv - 2.0*h, xv - h, xv, xv + h, xv + 2.0*h]
            .iter().map(|&x| eval(x)).collect();
        if let Some(s) = samples {
            // Skip near-pole points where the stencil is meaningless.
            if s.iter().all(|v| v.abs() < 1e6) {
                let fd = (-s[4] + 8.0*s[3] - 8.0*s[1] + s[0]) / (12.0 * h);
                let m = HashMap::from([
                    (VarId(0), Complex64::new(xv, 0.0)),
                    (VarId(1), Complex64::new(av, 0.0)),
                    (VarId(2), Complex64::new(bv, 0.0)),
                ]);
                if let Ok(sym) = df.eval_map(&m) {
                    let denom = sym.re.abs().max(1.0);
                    prop_assert!(((fd - sym.re) / denom).abs() < 1e-4,
                        "fd {} vs sym {}", fd, sym.re);
                }
            }
        }
    }
}

#[test]
fn search_is_declaration_order_independent() {
    // Run the order-1 search on the determinant system and on a permuted
    // clone; the returned spans must agree after renaming.
    let det = hypergeometric_det();
    let sys = ProlongedSystem::new(&det, 1).unwrap();
    let cfg = AnsatzConfig {
        order: 1,
        jet_degree: 1,
        coeff_degree: 0,
        denom: DenomBase::FiberScalar,
        denom_power: 1,
    };
    let basis = search_first_integrals(&sys, &cfg).unwrap();

    // Permuted parameter order: (c, b, a) instead of (a, b, c).
    let mut s = VarSpace::new();
    let x = s.declare("x", VarKind::Base).unwrap();
    let cv = s.declare("c", VarKind::Param).unwrap();
    let bv = s.declare("b", VarKind::Param).unwrap();
    let av = s.declare("a", VarKind::Param).unwrap();
    let sp = Arc::new(s);
    let coeff = parse_expr("a/x - b/(1-x)", &sp).unwrap();
    let conn = ParamConnection::new(
        sp,
        vec![x],
        vec![cv, bv, av],
        Family::Scalar,
        1,
        vec![jetconn_core::algebra::MatRF::new(1, 1, vec![coeff]).unwrap()],
    )
    .unwrap();
    let sys2 = ProlongedSystem::new(&conn, 1).unwrap();
    let basis2 = search_first_integrals(&sys2, &cfg).unwrap();
    assert_eq!(basis.len(), basis2.len());

    // Compare the spans exactly: rename the permuted system's basis into the
    // first system's coordinates (by variable name) and check mutual span
    // membership.
    let map: Vec<VarId> = sys2
        .space()
        .ids()
        .map(|id| {
            sys.space()
                .lookup(sys2.space().name(id))
                .expect("same names in both jet spaces")
        })
        .collect();
    let exprs: Vec<RatFun> = basis.iter().map(|c| c.expr.clone()).collect();
    let exprs2_renamed: Vec<RatFun> = basis2
        .iter()
        .map(|c| c.expr.remap(sys.space(), &map))
        .collect();
    for f in &exprs2_renamed {
        assert!(in_span(f, &exprs), "{f} missing from the first span");
    }
    for f in &exprs {
        assert!(in_span(f, &exprs2_renamed), "{f} missing from the permuted span");
    }
    // And both contain the c-direction invariant.
    let c1 = det.params()[2];
    let w = RatFun::var(sys.space(), sys.jet_var((0, 0), &[]).unwrap());
    let wc = RatFun::var(sys.space(), sys.jet_var((0, 0), &[(c1, 1)]).unwrap());
    assert!(in_span(&wc.div(&w).unwrap(), &exprs));
    let _ = cv;
}

#[test]
fn det_reduction_commutes_with_reparametrization() {
    let hg = hypergeometric();
    let e = |t: &str, sp: &Arc<VarSpace>| parse_expr(t, sp).unwrap();
    let mut renamed = VarSpace::new();
    renamed.declare("x", VarKind::Base).unwrap();
    renamed
        .declare_all(&["u", "v", "t"], VarKind::Param)
        .unwrap();
    let renamed = Arc::new(renamed);
    let subst = Substitution {
        new_names: vec!["u".into(), "v".into(), "t".into()],
        images: HashMap::from([
            (hg.params()[0], e("u + v", &renamed)),
            (hg.params()[1], e("v - 1", &renamed)),
            (hg.params()[2], e("2*t + u", &renamed)),
        ]),
    };
    let route1 = hg.reparametrize(&subst).unwrap().det_reduction();
    let route2 = hg.det_reduction().reparametrize(&subst).unwrap();
    assert_eq!(route1, route2);
}

#[test]
fn reparametrize_rejects_bad_substitutions() {
    let hg = hypergeometric();
    let mut renamed = VarSpace::new();
    renamed.declare("x", VarKind::Base).unwrap();
    renamed
        .declare_all(&["u", "v", "t"], VarKind::Param)
        .unwrap();
    let renamed = Arc::new(renamed);
    let e = |t: &str| parse_expr(t, &renamed).unwrap();
    // Non-affine image.
    let quad = Substitution {
        new_names: vec!["u".into(), "v".into(), "t".into()],
        images: HashMap::from([(hg.params()[0], e("u^2"))]),
    };
    assert!(hg.reparametrize(&quad).is_err());
    // Singular linear part (alpha and beta both map to u).
    let singular = Substitution {
        new_names: vec!["u".into(), "v".into(), "t".into()],
        images: HashMap::from([
            (hg.params()[0], e("u")),
            (hg.params()[1], e("u")),
        ]),
    };
    assert!(hg.reparametrize(&singular).is_err());
}

#[test]
fn identity_reparametrization_is_identity() {
    let hg = hypergeometric();
    let subst = Substitution {
        new_names: vec!["alpha".into(), "beta".into(), "gamma".into()],
        images: HashMap::new(),
    };
    let same = hg.reparametrize(&subst).unwrap();
    assert_eq!(same, hg);
}

#[test]
fn scale_of_absent_parameter_leaves_connection_unchanged() {
    // alpha -> 2 alpha on a connection free of alpha.
    let det = hypergeometric_det(); // params a, b, c; c absent
    let mut renamed = VarSpace::new();
    renamed.declare("x", VarKind::Base).unwrap();
    renamed
        .declare_all(&["a", "b", "c"], VarKind::Param)
        .unwrap();
    let renamed = Arc::new(renamed);
    let subst = Substitution {
        new_names: vec!["a".into(), "b".into(), "c".into()],
        images: HashMap::from([(det.params()[2], parse_expr("2*c", &renamed).unwrap())]),
    };
    let scaled = det.reparametrize(&subst).unwrap();
    assert_eq!(scaled.matrix(0), det.matrix(0));
}

#[test]
fn schwarzian_potential_is_gauge_invariant() {
    // Rescaling solutions u -> lambda(x) u transforms (p, q) but not the
    // potential; check with a rational lambda.
    let hg = hypergeometric();
    let sp = hg.space();
    let e = |t: &str| parse_expr(t, sp).unwrap();
    let x = hg.base()[0];
    let p = hg.matrix(0).entry(1, 1).neg();
    let q = hg.matrix(0).entry(1, 0).neg();
    let lambda = e("(x^2 + 1)/x");
    let mu = lambda.diff(x).div(&lambda).unwrap();
    // v = lambda u satisfies v'' + (p - 2 mu) v' + (q - p mu + 2 mu^2 - lambda''/lambda) v = 0.
    let p2 = p.sub(&mu.scale(&num_rational::BigRational::from_integer(2.into())));
    let lam_dd = lambda.diff(x).diff(x).div(&lambda).unwrap();
    let q2 = q
        .sub(&p.mul(&mu))
        .add(&mu.mul(&mu).scale(&num_rational::BigRational::from_integer(2.into())))
        .sub(&lam_dd);
    let companion = jetconn_core::algebra::MatRF::new(
        2,
        2,
        vec![RatFun::zero(sp), RatFun::one(sp), q2.neg(), p2.neg()],
    )
    .unwrap();
    let gauged = ParamConnection::new(
        sp.clone(),
        hg.base().to_vec(),
        hg.params().to_vec(),
        Family::GL,
        2,
        vec![companion],
    )
    .unwrap();
    assert_eq!(
        hg.schwarzian_potential().unwrap(),
        gauged.schwarzian_potential().unwrap()
    );
}

#[test]
fn monodromy_is_base_point_and_path_independent() {
    use jetconn_core::monodromy::{loop_monodromy, monodromy_along, LoopPath};
    let opts = OdeOptions::default();
    let hg = hypergeometric();
    let params = HashMap::from([
        (hg.params()[0], Complex64::new(0.5, 0.0)),
        (hg.params()[1], Complex64::new(1.0 / 3.0, 0.0)),
        (hg.params()[2], Complex64::new(0.2, 0.0)),
    ]);
    let m1 = loop_monodromy(
        &hg,
        &params,
        Complex64::new(0.0, 0.0),
        0.3,
        Complex64::new(0.5, 0.0),
        &opts,
    )
    .unwrap();
    // Different base point: traces agree within 1e-6.
    let m2 = loop_monodromy(
        &hg,
        &params,
        Complex64::new(0.0, 0.0),
        0.25,
        Complex64::new(-0.5, 0.3),
        &opts,
    )
    .unwrap();
    assert!((m1.trace - m2.trace).norm() < 1e-6);

    // Homotopic loop with a different polyline (square), same base point:
    // matrices agree within 1e-6.
    let square = LoopPath::from_waypoints(vec![
        Complex64::new(0.5, 0.0),
        Complex64::new(0.5, 0.5),
        Complex64::new(-0.5, 0.5),
        Complex64::new(-0.5, -0.5),
        Complex64::new(0.5, -0.5),
        Complex64::new(0.5, 0.0),
    ])
    .unwrap();
    let m3 = monodromy_along(&hg, &params, &square, &opts).unwrap();
    let diff = m1.matrix.sub(&m3.matrix).norm_inf();
    assert!(diff < 1e-6, "homotopic loops differ by {diff}");
}

#[test]
fn invariants_are_constant_along_integrated_sections() {
    // Integrate the prolonged determinant system as an ODE in x and check
    // that R, S, T and w_c/w stay constant along the numeric section.
    let det = hypergeometric_det();
    let sys = ProlongedSystem::new(&det, 2).unwrap();
    let x = det.base()[0];
    let coords: Vec<VarId> = sys.gamma_coords().to_vec();
    let rows: Vec<RatFun> = coords
        .iter()
        .map(|&v| sys.table_row(x, v).unwrap().clone())
        .collect();

    // Generic parameter values and initial jet data.
    let (av, bv, cv) = (0.31, -0.47, 0.83);
    let params: Vec<(VarId, Complex64)> = vec![
        (det.params()[0], Complex64::new(av, 0.0)),
        (det.params()[1], Complex64::new(bv, 0.0)),
        (det.params()[2], Complex64::new(cv, 0.0)),
    ];
    let mut init = Vec::new();
    for (i, _) in coords.iter().enumerate() {
        init.push(Complex64::new(1.0 + 0.17 * (i as f64), -0.05 * (i as f64)));
    }

    let (x0, x1) = (0.3, 0.7);
    let eval_state =
        |t: f64, y: &[Complex64]| -> Result<Vec<Complex64>, jetconn_core::Error> {
            let mut m: HashMap<VarId, Complex64> = params.iter().copied().collect();
            m.insert(x, Complex64::new(x0 + t * (x1 - x0), 0.0));
            for (i, &v) in coords.iter().enumerate() {
                m.insert(v, y[i]);
            }
            rows.iter()
                .map(|r| r.eval_map(&m).map(|z| z * Complex64::new(x1 - x0, 0.0)))
                .collect()
        };

    // Invariants to track.
    let (a, b, c) = (det.params()[0], det.params()[1], det.params()[2]);
    let mut invs = vec![
        jetconn_core::invariants::log_hessian_invariant(&sys, a, a).unwrap(),
        jetconn_core::invariants::log_hessian_invariant(&sys, a, b).unwrap(),
        jetconn_core::invariants::log_hessian_invariant(&sys, b, b).unwrap(),
    ];
    let w = RatFun::var(sys.space(), sys.jet_var((0, 0), &[]).unwrap());
    let wc = RatFun::var(sys.space(), sys.jet_var((0, 0), &[(c, 1)]).unwrap());
    invs.push(wc.div(&w).unwrap());

    let value_of = |inv: &RatFun, t: f64, y: &[Complex64]| -> Complex64 {
        let mut m: HashMap<VarId, Complex64> = params.iter().copied().collect();
        m.insert(x, Complex64::new(x0 + t * (x1 - x0), 0.0));
        for (i, &v) in coords.iter().enumerate() {
            m.insert(v, y[i]);
        }
        inv.eval_map(&m).unwrap()
    };
    let baseline: Vec<Complex64> = invs.iter().map(|i| value_of(i, 0.0, &init)).collect();

    // 10 checkpoints along the path.
    let mut state = init.clone();
    for step in 1..=10 {
        let t_from = (step - 1) as f64 / 10.0;
        let t_to = step as f64 / 10.0;
        let seg = |t: f64, y: &[Complex64]| eval_state(t_from + t * (t_to - t_from), y)
            .map(|dy| dy.iter().map(|d| d * Complex64::new(t_to - t_from, 0.0)).collect());
        let (next, _) = dopri5(&seg, state.clone(), &OdeOptions::default()).unwrap();
        state = next;
        for (i, inv) in invs.iter().enumerate() {
            let val = value_of(inv, t_to, &state);
            let rel = (val - baseline[i]).norm() / baseline[i].norm().max(1.0);
            assert!(
                rel < 1e-6,
                "invariant {i} drifted by {rel} at checkpoint {step}"
            );
        }
    }
}
