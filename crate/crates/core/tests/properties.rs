use entropy_flow::analytic::{gaussian_upsilon, isoperimetric_constant};
use entropy_flow::functionals::{fisher, FunctionalSnapshot};
use entropy_flow::{
    build_grid, convolve, DensitySpec, GaussianSpec, GridDomain, InequalityReport, InequalitySuite,
    InequalityTag, MixtureSpec,
};
use proptest::prelude::*;

fn small_domain() -> GridDomain<f64> {
    GridDomain::uniform(1, 12.0, 513).unwrap()
}

fn gaussian(mean: f64, sigma: f64) -> DensitySpec<f64> {
    GaussianSpec::new(vec![mean], sigma).unwrap().into()
}

fn mixture(m1: f64, m2: f64, s1: f64, s2: f64, w: f64) -> DensitySpec<f64> {
    MixtureSpec::new(
        vec![GaussianSpec::new(vec![m1], s1).unwrap(), GaussianSpec::new(vec![m2], s2).unwrap()],
        vec![w, 1.0 - w],
    )
    .unwrap()
    .into()
}

fn tags() -> impl Strategy<Value = InequalityTag> {
    prop_oneof![
        Just(InequalityTag::Epi),
        Just(InequalityTag::Key),
        Just(InequalityTag::Iso),
        Just(InequalityTag::Lsi),
        Just(InequalityTag::Nash),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn convolution_commutes_and_multiplies_mass(
        m1 in -2.0..2.0f64, s1 in 0.2..1.5f64,
        m2 in -2.0..2.0f64, s2 in 0.2..1.5f64,
        c in 0.5..3.0f64,
    ) {
        let a = build_grid(&gaussian(m1, s1), small_domain()).unwrap().scaled(c).unwrap();
        let b = build_grid(&gaussian(m2, s2), small_domain()).unwrap();
        let ab = convolve(&a, &b).unwrap();
        let ba = convolve(&b, &a).unwrap();
        let peak = ab.max_value();
        for (x, y) in ab.values().iter().zip(ba.values()) {
            prop_assert!((x - y).abs() <= 1e-12 * peak);
        }
        prop_assert!((ab.mass() - a.mass() * b.mass()).abs() <= 1e-9 * a.mass() * b.mass());
    }

    #[test]
    fn dilation_round_trip(a in 0.25..4.0f64, m in -1.0..1.0f64, s in 0.3..1.5f64) {
        let g = build_grid(&gaussian(m, s), small_domain()).unwrap();
        let back = g.dilate(a).unwrap().dilate(1.0 / a).unwrap();
        prop_assert!(back.domain().same_nodes(g.domain()));
        for (x, y) in back.values().iter().zip(g.values()) {
            prop_assert!((x - y).abs() <= 1e-12 * g.max_value());
        }
        prop_assert!((g.dilate(a).unwrap().mass() - g.mass()).abs() < 1e-10);
    }

    #[test]
    fn mass_is_linear_and_normalization_recovers_it(c in 1e-3..1e3f64, s in 0.3..2.0f64) {
        let g = build_grid(&gaussian(0.0, s), small_domain()).unwrap();
        let scaled = g.scaled(c).unwrap();
        prop_assert!((scaled.mass() - c * g.mass()).abs() <= 1e-12 * c);
        let (unit, mu) = scaled.normalize().unwrap();
        prop_assert!((unit.mass() - 1.0).abs() <= 1e-12);
        prop_assert!((mu - scaled.mass()).abs() <= 1e-12 * mu);
        prop_assert_eq!(scaled.mass(), scaled.mass());
    }

    #[test]
    fn l1_distance_is_symmetric(m in -2.0..2.0f64, s in 0.3..1.5f64) {
        let a = build_grid(&gaussian(0.0, 1.0), small_domain()).unwrap();
        let b = build_grid(&gaussian(m, s), small_domain()).unwrap();
        prop_assert_eq!(a.l1_distance(&b).unwrap(), b.l1_distance(&a).unwrap());
        prop_assert_eq!(a.l1_distance(&a).unwrap(), 0.0);
    }

    #[test]
    fn pass_flag_tracks_slack(tag in tags(), lhs in -1e3..1e3f64, rhs in -1e3..1e3f64, tol in 0.0..10.0f64) {
        let r = InequalityReport::new(tag, lhs, rhs, lhs - rhs, tol, "");
        prop_assert_eq!(r.pass, r.slack >= -r.tol);
    }

    #[test]
    fn gaussian_upsilon_is_scale_free(s in 1e-3..1e3f64, n in 1usize..6) {
        let u = gaussian_upsilon(s, n);
        let c: f64 = isoperimetric_constant(n);
        prop_assert!(((u - c) / c).abs() < 1e-14);
    }

    #[test]
    fn fisher_is_one_homogeneous(c in 0.1..10.0f64, m in 0.0..2.0f64) {
        let g = build_grid(&mixture(-m, m, 1.0, 1.0, 0.5), GridDomain::default_for_dim(1).unwrap()).unwrap();
        let i = fisher(&g);
        prop_assert!((fisher(&g.scaled(c).unwrap()) - c * i).abs() <= 1e-10 * c * i);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // The inequality chain holds on arbitrary two-component mixtures.
    #[test]
    fn chain_holds_on_mixtures(
        m1 in -3.0..3.0f64, m2 in -3.0..3.0f64,
        s1 in 0.4..2.0f64, s2 in 0.4..2.0f64,
        w in 0.1..0.9f64,
    ) {
        let g = build_grid(&mixture(m1, m2, s1, s2, w), GridDomain::default_for_dim(1).unwrap()).unwrap();
        let suite = InequalitySuite::<f64>::default();
        for r in [
            suite.check_key_inequality(&g).unwrap(),
            suite.check_isoperimetric(&g).unwrap(),
            suite.check_jensen_step(&g).unwrap(),
            suite.check_gen_fisher(&g).unwrap(),
            suite.check_nash(&g).unwrap().report,
        ] {
            prop_assert!(r.pass, "{} failed: {:?}", r.tag, r);
        }
        let s = FunctionalSnapshot::evaluate(&g, 0.0).unwrap();
        prop_assert!((s.upsilon - s.entropy_power * s.fisher).abs() <= 1e-12 * s.upsilon);
    }
}
