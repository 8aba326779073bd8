use proptest::prelude::*;
use weighted_sobolev::cli::set_path;
use weighted_sobolev::manifold::{required_envelope, Density, ModelManifold, Warp};
use weighted_sobolev::odecmp::{solve_h, solve_psi_pair};
use weighted_sobolev::profiles::DecayProfile;
use weighted_sobolev::setup::{certify, Tolerances};
use weighted_sobolev::sobolev::{lhs_terms, rhs_value, RadialDomain, RadialFunction};
use weighted_sobolev::volume::{bg_ratio_curve, geometric_radii};

fn profile() -> impl Strategy<Value = DecayProfile> {
    prop_oneof![
        (0.01..2.0f64, 0.2..3.0f64).prop_map(|(l, a)| DecayProfile::exponential(l, a).unwrap()),
        (0.01..2.0f64, 0.2..3.0f64, 2.1..5.0f64).prop_map(|(l, s, p)| DecayProfile::power_law(l, s, p).unwrap()),
        (0.01..2.0f64, 0.2..4.0f64).prop_map(|(l, s)| DecayProfile::linear_bump(l, s).unwrap()),
        Just(DecayProfile::Zero),
    ]
}

fn flat() -> ModelManifold {
    ModelManifold::new(3, Warp::Euclidean, Density::Constant { w0: 1.0 }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn h_sits_between_t_and_t_exp_b0(p in profile(), t_max in 1.0..30.0f64) {
        let b0 = p.moments(1e-10).unwrap().b0;
        let sol = solve_h(&p, t_max, 1e-10).unwrap();
        for (t, h) in sol.h.grid().iter().zip(sol.h.values()) {
            prop_assert!(*h >= t * (1.0 - 1e-9));
            prop_assert!(*h <= t * b0.exp() * (1.0 + 1e-9));
        }
        prop_assert!(sol.hprime_at_end >= 1.0 - 1e-12);
        prop_assert!(sol.hprime_at_end <= 1.0 + b0 * b0.exp() + 1e-6);
    }

    #[test]
    fn moments_are_linear_in_amplitude(p in profile(), c in 0.1..5.0f64) {
        let m = p.moments(1e-10).unwrap();
        let s = p.scaled(c).unwrap().moments(1e-10).unwrap();
        prop_assert!((s.b0 - c * m.b0).abs() <= 1e-8 * (1.0 + c * m.b0));
        prop_assert!((s.b1 - c * m.b1).abs() <= 1e-8 * (1.0 + c * m.b1));
    }

    #[test]
    fn wronskian_is_conserved(p in profile(), r in 0.5..10.0f64) {
        let pair = solve_psi_pair(&p.as_scalar_fn(), r, 1e-11).unwrap();
        prop_assert!(pair.wronskian_drift() <= 1e-8);
    }

    #[test]
    fn profile_json_round_trips(p in profile()) {
        let text = serde_json::to_string(&p).unwrap();
        let back: DecayProfile = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn volume_ratio_is_nonincreasing(p in profile(), alpha in 0.1..3.0f64) {
        let s = certify(&flat(), alpha, &p.into(), 200.0, Tolerances::default()).unwrap();
        let curve = bg_ratio_curve(&s, &geometric_radii(1e-2, 200.0, 80)).unwrap();
        prop_assert!(curve.monotonicity_report(1e-8).passed());
    }

    #[test]
    fn sobolev_sides_are_one_homogeneous(
        kappa in 0.01..100.0f64,
        radius in 0.3..3.0f64,
        c in 0.5..2.0f64,
        k in 0.2..3.0f64,
    ) {
        let s = certify(&flat(), 1.0, &DecayProfile::exponential(0.3, 1.0).unwrap().into(), 10.0, Tolerances::default())
            .unwrap();
        let dom = RadialDomain::Ball { radius };
        let f = RadialFunction::PowerBump { c, k };
        let (a, b) = (lhs_terms(&s, &dom, &f).unwrap().total(), rhs_value(&s, &dom, &f, 1.0).unwrap());
        let g = f.scaled(kappa);
        let (a2, b2) = (lhs_terms(&s, &dom, &g).unwrap().total(), rhs_value(&s, &dom, &g, 1.0).unwrap());
        prop_assert!((a2 - kappa * a).abs() <= 1e-10 * kappa * a);
        prop_assert!((b2 - kappa * b).abs() <= 1e-10 * kappa * b);
    }

    #[test]
    fn envelope_dominates_curvature_deficit(c in 0.3..1.0f64, r_s in 0.5..3.0f64, beta in 0.0..1.0f64) {
        let m = ModelManifold::new(3, Warp::SmoothedCone { c, r_s }, Density::LogPoly { beta, r_w: 1.0 }).unwrap();
        let env = required_envelope(&m, 1.0, 50.0, 400).unwrap();
        for r in geometric_radii(1e-3, 50.0, 500) {
            prop_assert!(env.value(r) >= m.lambda_min(1.0, r).unwrap() - 1e-12);
        }
    }

    #[test]
    fn set_path_writes_exactly_one_leaf(v in -1e3..1e3f64) {
        let mut doc = serde_json::json!({"a": [1.0, {"b": 2.0}], "c": 3.0});
        set_path(&mut doc, "a.1.b", v).unwrap();
        prop_assert_eq!(doc["a"][1]["b"].as_f64(), Some(v));
        prop_assert_eq!(doc["a"][0].as_f64(), Some(1.0));
        prop_assert_eq!(doc["c"].as_f64(), Some(3.0));
    }
}
