use borromean::potentials::{Family, PotentialSpec};
use borromean::specfun;
use borromean::threebody::{self, SvmOptions};
use borromean::twobody::{self, ThresholdOptions};
use proptest::prelude::*;

fn gaussian(depth: f64, width: f64) -> PotentialSpec {
    PotentialSpec::GaussianSum {
        terms: vec![(-depth, width)],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn wronskians_hold(x in 0.01f64..100.0) {
        let (j0, j1, y0, y1) = specfun::jy01(x);
        let w = j1 * y0 - j0 * y1;
        prop_assert!((w * std::f64::consts::PI * x / 2.0 - 1.0).abs() < 1e-10);
        let (i0, i1) = specfun::i01e(x);
        let (k0, k1) = specfun::k01e(x);
        prop_assert!(((i0 * k1 + i1 * k0) * x - 1.0).abs() < 1e-10);
    }

    #[test]
    fn barrier_threshold_grows_with_well(u in 0.05f64..0.85, du in 0.01f64..0.1, s in 0.2f64..0.8) {
        let fam = Family::SquareWellBarrier { rs: 1.0, rl: 1.0 / s };
        let top = twobody::asymptote_lambda_minus(&fam)?;
        let opts = ThresholdOptions::default();
        let a = twobody::analytic_critical_lambda_plus(&fam, u * top, &opts)?.lambda_plus_cr;
        let b = twobody::analytic_critical_lambda_plus(&fam, (u + du) * top, &opts)?.lambda_plus_cr;
        prop_assert!(b > a);
    }

    #[test]
    fn threshold_is_invariant_under_length_rescaling(u in 0.1f64..0.8, s in 0.2f64..0.8, sigma in 0.5f64..3.0) {
        let base = Family::SquareWellBarrier { rs: 1.0, rl: 1.0 / s };
        let stretched = Family::SquareWellBarrier { rs: sigma, rl: sigma / s };
        let lm = u * twobody::asymptote_lambda_minus(&base)?;
        let opts = ThresholdOptions::default();
        let a = twobody::critical_lambda_plus(&base, lm, &opts)?.lambda_plus_cr;
        let b = twobody::critical_lambda_plus(&stretched, lm, &opts)?.lambda_plus_cr;
        prop_assert!((b / a - 1.0).abs() < 1e-6, "{a} {b}");
    }

    #[test]
    fn h_is_monotone(a in 0.01f64..0.97, d in 0.005f64..0.02) {
        prop_assert!(twobody::h_of_s(a + d)? > twobody::h_of_s(a)?);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn trimer_energy_scales_with_length(sigma in 0.4f64..2.5, seed in 0u64..1000) {
        let (e, _) = threebody::trimer_spectrum_with(&gaussian(3.0, 1.0), 30, seed, &SvmOptions::default())?;
        let scaled = gaussian(3.0 / (sigma * sigma), sigma);
        let (f, _) = threebody::trimer_spectrum_with(&scaled, 30, seed, &SvmOptions::default())?;
        prop_assert!((f.ground() * sigma * sigma / e.ground() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn deeper_well_binds_deeper_in_a_fixed_basis(depth in 1.0f64..4.0, extra in 0.1f64..1.0, seed in 0u64..1000) {
        let opts = SvmOptions::default();
        let (_, basis) = threebody::trimer_spectrum_with(&gaussian(depth, 1.0), 25, seed, &opts)?;
        let a = threebody::spectrum_in_basis(&basis, &gaussian(depth, 1.0), &opts)?;
        let b = threebody::spectrum_in_basis(&basis, &gaussian(depth + extra, 1.0), &opts)?;
        prop_assert!(b.ground() < a.ground());
        prop_assert!(a.energies.windows(2).all(|w| w[0] <= w[1]));
    }
}
