use exotendon::fingermodel::{PhalanxChain, TorsionSpringSet};
use exotendon::routing::DesignSpec;
use exotendon::statics::{calibrate_springs, required_tension, solve_equilibrium};
use exotendon::studies::{artificial_finger_experiment, tension_grid, ExperimentSettings};
use proptest::prelude::*;

fn chain() -> PhalanxChain {
    PhalanxChain::default()
}

fn springs() -> TorsionSpringSet {
    calibrate_springs(&chain(), &TorsionSpringSet::artificial()).unwrap()
}

fn design() -> impl Strategy<Value = DesignSpec> {
    prop_oneof![
        Just(DesignSpec::traditional()),
        Just(DesignSpec::baseline()),
        (11.0..=20.0f64, 13.0..=22.0f64).prop_map(|(x1, x2)| DesignSpec::design_a(x1, x2)),
        (12.0..=22.0f64).prop_map(DesignSpec::design_b),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn equilibrium_residual_is_small(spec in design(), t in 0.0..120.0f64) {
        let eq = solve_equilibrium(&spec, &chain(), &springs(), t).unwrap();
        prop_assert!(eq.converged);
        let (rm, rp) = eq.arms;
        prop_assert!(eq.residual.mcp.abs() <= 1e-6 * (t * rm).max(1.0));
        prop_assert!(eq.residual.pip.abs() <= 1e-6 * (t * rp).max(1.0));
        prop_assert_eq!(eq.residual.dip, 0.0);
    }

    #[test]
    fn required_tension_round_trips(spec in design(), t in 0.5..120.0f64) {
        let s = springs();
        let eq = solve_equilibrium(&spec, &chain(), &s, t).unwrap();
        let need = required_tension(&spec, &chain(), &s, &eq.config).unwrap();
        prop_assert!(need.binding <= t + 1e-6, "needs {} at T = {t}", need.binding);
        if !eq.at_limit.0 {
            prop_assert!((need.mcp - t).abs() <= 1e-6);
        }
        if !eq.at_limit.1 {
            prop_assert!((need.pip - t).abs() <= 1e-6);
        }
    }

    #[test]
    fn more_tension_never_flexes(spec in design(), t in 0.0..100.0f64, dt in 0.01..20.0f64) {
        let s = springs();
        let a = solve_equilibrium(&spec, &chain(), &s, t).unwrap();
        let b = solve_equilibrium(&spec, &chain(), &s, t + dt).unwrap();
        prop_assert!(b.config.pip >= a.config.pip - 1e-7);
        prop_assert!(b.config.mcp >= a.config.mcp - 1e-7);
    }

    #[test]
    fn posture_depends_on_tension_over_stiffness(spec in design(), t in 0.0..100.0f64, c in 0.05..20.0f64) {
        let s = springs();
        let a = solve_equilibrium(&spec, &chain(), &s, t).unwrap();
        let b = solve_equilibrium(&spec, &chain(), &s.with_scale(s.scale * c), t * c).unwrap();
        prop_assert!((a.config.pip - b.config.pip).abs().to_radians() <= 1e-9);
        prop_assert!((a.config.mcp - b.config.mcp).abs().to_radians() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn noise_standard_error_matches_sigma(seed in any::<u64>(), sigma in 0.1..5.0f64) {
        let designs = [DesignSpec::baseline(), DesignSpec::design_a(17.0, 19.0), DesignSpec::design_b(17.0)];
        let settings = ExperimentSettings { reps: 50, noise_sigma: sigma, seed };
        let grid = tension_grid(100.0, 40).unwrap();
        let table = artificial_finger_experiment(&designs, &chain(), &springs(), &grid, &settings).unwrap();
        let se = table.column("force_se_n").unwrap();
        let bound = 1.1 * sigma / 50f64.sqrt();
        let rms = (se.iter().map(|v| v * v).sum::<f64>() / se.len() as f64).sqrt();
        prop_assert!(rms <= bound, "pooled SE {rms} above {bound}");
        // A single row exceeds the bound with probability near 0.16.
        let over = se.iter().filter(|&&v| v > bound).count() as f64 / se.len() as f64;
        prop_assert!(over < 0.35, "{over} of rows above the bound");

        let t = table.column("tension_n").unwrap();
        let mean = table.column("force_mean_n").unwrap();
        let z_max = t.iter().zip(&mean).zip(&se)
            .map(|((t, m), s)| (m - t).abs() / s)
            .fold(0.0, f64::max);
        prop_assert!(z_max < 6.0, "mean force {z_max} standard errors from tension");
    }
}
