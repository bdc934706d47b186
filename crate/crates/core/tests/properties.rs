use carleman_lab::extension::{blow_up, dtn_symbol, ExtensionProfile, SpectralBoundaryData};
use carleman_lab::grid::{Field, FractionalParams};
use carleman_lab::inequalities::{
    carleman_sides, three_balls_from_norms, ChartData, ChartResolution, Family, RadialCutoff, TestFunctionSpec,
};
use carleman_lab::spectrum::{explicit_eigenvalue, lambda_from_sturm_liouville, sturm_liouville_eigenvalue, EigenPair};
use carleman_lab::weights::{phi_double_prime, phi_prime, turning_point, SLOPE_SPREAD};
use proptest::prelude::*;

proptest! {
    #[test]
    fn weight_is_convex_with_bounded_slope(t in -1e6f64..1e6) {
        prop_assert!(phi_double_prime(t) > 0.0);
        let slope = -phi_prime(t);
        prop_assert!((1.0 - SLOPE_SPREAD..=1.0 + SLOPE_SPREAD).contains(&slope));
    }

    #[test]
    fn turning_point_solves_its_equation(tau in 1.0f64..64.0, frac in 0.86f64..1.14) {
        let mu = frac * tau;
        let t = turning_point(mu, tau).unwrap();
        prop_assert!((tau * phi_prime(t) + mu).abs() <= 1e-8 * tau.max(t.abs()));
    }

    #[test]
    fn eigenvalue_conventions_agree(k in 0usize..12, s in 0.05f64..0.95) {
        let via = lambda_from_sturm_liouville(sturm_liouville_eigenvalue(k, s), s);
        prop_assert!((via - explicit_eigenvalue(k, s)).abs() <= 1e-12 * (k * k + 1) as f64);
    }

    #[test]
    fn legendre_polynomials_have_parity(k in 0usize..7, s in 0.1f64..0.9, x in -1.0f64..1.0) {
        let p = EigenPair::new(k, s).unwrap();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((p.polynomial(-x) - sign * p.polynomial(x)).abs() <= 1e-12 * p.polynomial(x).abs().max(1.0));
    }

    #[test]
    fn cutoff_stays_in_unit_interval(r in 0.0f64..2.0, inner in 0.05f64..0.3, ratio in 2.0f64..10.0) {
        let c = RadialCutoff::for_support(inner, inner * ratio).unwrap();
        let v = c.value(r);
        prop_assert!((0.0..=1.0).contains(&v));
        if r <= inner || r >= inner * ratio {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn three_balls_exponent_in_unit_interval(a in 0.1f64..1.0, b in 1.0f64..5.0, c in 5.0f64..50.0) {
        let tb = three_balls_from_norms([a, b, c]).unwrap();
        prop_assert!(tb.log_convex && tb.alpha > 0.0 && tb.alpha < 1.0);
    }

    #[test]
    fn fft_data_synthesizes_samples(values in prop::collection::vec(-1.0f64..1.0, 8..40), h in 0.05f64..1.0) {
        let data = SpectralBoundaryData::from_samples(&values, h).unwrap();
        for (j, v) in values.iter().enumerate() {
            prop_assert!((data.synthesize(j as f64 * h, |_| 1.0) - v).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dtn_is_even_and_homogeneous(xi in 0.3f64..6.0, lambda in 0.5f64..3.0, s in 0.2f64..0.8) {
        let m = dtn_symbol(xi, s).unwrap();
        prop_assert!((dtn_symbol(-xi, s).unwrap() / m - 1.0).abs() < 1e-10);
        let scaled = dtn_symbol(lambda * xi, s).unwrap();
        prop_assert!((scaled / (lambda.powf(2.0 * s) * m) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn profile_is_a_scaling_of_one_profile(xi in 0.3f64..6.0, y in 0.0f64..3.0, s in 0.2f64..0.8) {
        let a = ExtensionProfile::new(xi, s).unwrap().value(y);
        let b = ExtensionProfile::new(1.0, s).unwrap().value(xi * y);
        prop_assert!((a - b).abs() < 1e-8);
        prop_assert!(a > 0.0 && a <= 1.0);
    }

    #[test]
    fn blow_up_is_idempotent(sigma in 0.2f64..3.0, s in 0.25f64..0.75, a in -1.0f64..1.0) {
        let params = FractionalParams::new(s).unwrap();
        let field = move |y1: f64, y2: f64| 1.0 + a * y1 + y2 * y2 * (1.0 - y1);
        let once = blow_up(&field, sigma, &params).unwrap();
        let twice = blow_up(&once, 1.0, &params).unwrap();
        prop_assert!((twice.scale() - 1.0).abs() < 1e-10);
        prop_assert!((twice.value(0.3, 0.4) - once.value(0.3, 0.4)).abs() < 1e-10 * once.value(0.3, 0.4).abs().max(1.0));
    }

    #[test]
    fn carleman_ratio_is_nonnegative_and_scale_free(
        family in prop::sample::select(Family::ALL.to_vec()),
        index in 0usize..4,
        seed in 0u64..4,
        tau in 1.0f64..40.0,
        c in 0.1f64..10.0,
    ) {
        let params = FractionalParams::new(0.5).unwrap();
        let spec = TestFunctionSpec::new(family, 0.15, 0.6, index, seed).unwrap();
        let w = spec.build(&params).unwrap();
        let scaled = move |y1: f64, y2: f64| c * w.value(y1, y2);
        let res = ChartResolution::coarse();
        let a = carleman_sides(&ChartData::from_field(&spec.build(&params).unwrap(), 0.15, 0.6, &params, res).unwrap(), tau, &params).unwrap();
        let b = carleman_sides(&ChartData::from_field(&scaled, 0.15, 0.6, &params, res).unwrap(), tau, &params).unwrap();
        let (ra, rb) = (a.ratio.unwrap(), b.ratio.unwrap());
        prop_assert!(ra >= 0.0);
        prop_assert!((ra - rb).abs() <= 1e-9 * ra.max(1e-12));
    }
}
