mod common;

use common::rel;
use isac_core::array::{steering, ArrayConfig, CMatrix, SteeringBundle};
use isac_core::contour::{IntermediateForm, TargetPose, TfsContour};
use isac_core::sim::*;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn qpsk_symbols_have_unit_modulus() {
    let c = gen_symbols(3, 50, SymbolKind::Qpsk, 4);
    assert!(c.iter().all(|v| (v.norm() - 1.0).abs() < 1e-15));
}

#[test]
fn gaussian_symbols_are_white() {
    let t = 100_000;
    let c = gen_symbols(3, t, SymbolKind::Gaussian, 8);
    let cov = &c * c.adjoint() / Complex64::new(t as f64, 0.0);
    let err = (cov - CMatrix::identity(3, 3)).norm() / 3f64.sqrt();
    assert!(err < 0.02, "{err}");
    assert_eq!(gen_symbols(3, 10, SymbolKind::Gaussian, 8), gen_symbols(3, 10, SymbolKind::Gaussian, 8));
}

#[test]
fn single_scatterer_echo_is_rank_one() {
    let cfg = ArrayConfig::new(6, 6);
    let inst = common::instance(
        cfg,
        TfsContour::vehicle(),
        TargetPose::new(40.0, 0.0, 0.0).unwrap(),
        1,
        false,
        IntermediateForm::Printed,
        1e-11,
    );
    let w = CMatrix::identity(6, 2);
    let c = gen_symbols(2, 12, SymbolKind::Gaussian, 1);
    let y = echo_from(&(&w * &c), &inst.partition, &inst.bundles, 0.5, &[Complex64::new(1.0, 0.0)]);
    let b = &inst.bundles[0];
    let expected = &b.b * (b.a.adjoint() * &w * &c) * Complex64::new(0.5 * inst.partition.subsections[0].l.sqrt(), 0.0);
    assert!((&y - expected).norm() < 1e-12 * y.norm());
    let sv = y.svd(false, false).singular_values;
    assert!(sv[1] < 1e-10 * sv[0]);
}

#[test]
fn echo_energy_matches_expectation() {
    let cfg = ArrayConfig::new(4, 4);
    let inst = common::instance(
        cfg,
        TfsContour::vehicle(),
        TargetPose::new(15.0, 0.0, 0.0).unwrap(),
        2,
        false,
        IntermediateForm::Printed,
        1e-11,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let w = CMatrix::from_fn(4, 2, |_, _| common::cn(&mut rng));
    let r_x = &w * w.adjoint();
    let (g, sigma, t) = (0.7, 0.05, 6);
    let expected: f64 = inst
        .partition
        .subsections
        .iter()
        .zip(&inst.bundles)
        .map(|(s, b)| g * g * s.l * 4.0 * (b.a.adjoint() * &r_x * &b.a)[(0, 0)].re * t as f64)
        .sum::<f64>()
        + 4.0 * t as f64 * sigma;
    let trials = 10_000;
    let total: f64 = (0..trials)
        .map(|i| {
            let c = gen_symbols(2, t, SymbolKind::Gaussian, 1_000_000 + i);
            gen_echo(&w, &c, &inst.partition, &inst.bundles, g, sigma, i).norm_squared()
        })
        .sum();
    assert!(rel(total / trials as f64, expected) < 0.05, "{} vs {expected}", total / trials as f64);
    let c = gen_symbols(2, t, SymbolKind::Gaussian, 3);
    assert_eq!(
        gen_echo(&w, &c, &inst.partition, &inst.bundles, g, sigma, 5),
        gen_echo(&w, &c, &inst.partition, &inst.bundles, g, sigma, 5)
    );
}

#[test]
fn noiseless_point_target_is_found_on_grid() {
    let cfg = ArrayConfig::new(8, 8);
    let grid = angle_grid(0.1);
    assert_eq!(grid.len(), 1801);
    for deg in [0.0, 12.3, -40.0] {
        let phi = f64::to_radians(deg);
        let b = SteeringBundle::new(&cfg, phi);
        let c = gen_symbols(1, 16, SymbolKind::Qpsk, 2);
        let x = &b.a * c.row(0);
        let y = &b.b * (b.a.adjoint() * x);
        let est = mf_estimate(&y, &cfg, &grid);
        assert!((est - phi).abs() < 1e-9, "{deg}: {}", est.to_degrees());
        let rotated = &y * Complex64::from_polar(1.0, 1.234);
        assert_eq!(mf_estimate(&rotated, &cfg, &grid), est);
    }
}

#[test]
fn noise_only_estimate_is_a_grid_point() {
    let cfg = ArrayConfig::new(4, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let y = CMatrix::from_fn(4, 10, |_, _| common::cn(&mut rng));
    let grid = angle_grid(1.0);
    let est = mf_estimate(&y, &cfg, &grid);
    assert!(grid.contains(&est));
    let zero = CMatrix::zeros(4, 3);
    assert_eq!(mf_estimate(&zero, &cfg, &grid), 0.0);
}

#[test]
fn matched_filter_matches_brute_force() {
    let cfg = ArrayConfig::new(5, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let y = CMatrix::from_fn(7, 9, |_, _| common::cn(&mut rng));
    let grid = angle_grid(0.5);
    let brute = grid
        .iter()
        .map(|&p| ((steering(7, 0.5, p).adjoint() * &y).norm_squared(), p))
        .fold((f64::NEG_INFINITY, 0.0), |a, b| if b.0 > a.0 { b } else { a })
        .1;
    assert_eq!(mf_estimate(&y, &cfg, &grid), brute);
}

#[test]
fn quantization_bounds_noiseless_error() {
    let cfg = ArrayConfig::new(8, 8);
    let phi = 0.0;
    let inst = common::instance(
        cfg,
        TfsContour::circle(1e-3).unwrap(),
        TargetPose::new(1e3, phi, 0.0).unwrap(),
        1,
        false,
        IntermediateForm::Printed,
        1e-11,
    );
    let grid = angle_grid(0.5);
    let w = CMatrix::from_column_slice(8, 1, steering(8, 0.5, phi).as_slice());
    let setup = MseSetup {
        array: cfg,
        partition: &inst.partition,
        bundles: &inst.bundles,
        g: 1.0,
        sigma_s2: 0.0,
        phi_true: inst.partition.subsections[0].phi,
        symbols: 8,
        kind: SymbolKind::Gaussian,
        grid: &grid,
    };
    let res = monte_carlo_mse(&setup, &w, 50, 1);
    assert!(res.rmse <= 0.25f64.to_radians());
    assert_eq!(res.trials.len(), 50);
    assert_eq!(monte_carlo_mse(&setup, &w, 50, 1), res);
}

#[test]
fn rmse_is_stable_under_more_trials() {
    let cfg = ArrayConfig::new(8, 8);
    let inst = common::instance(
        cfg,
        TfsContour::vehicle(),
        TargetPose::new(27.0, 0.0, 0.0).unwrap(),
        8,
        false,
        IntermediateForm::Printed,
        1e-11,
    );
    let grid = angle_grid(0.1);
    let w = CMatrix::identity(8, 2) * Complex64::new(0.5, 0.0);
    let setup = MseSetup {
        array: cfg,
        partition: &inst.partition,
        bundles: &inst.bundles,
        g: 1.0 / 27.0f64.powi(2),
        sigma_s2: 1e-6,
        phi_true: 0.0,
        symbols: 16,
        kind: SymbolKind::Gaussian,
        grid: &grid,
    };
    let a = monte_carlo_mse(&setup, &w, 400, 3);
    let b = monte_carlo_mse(&setup, &w, 800, 3);
    assert_eq!(a.trials[..], b.trials[..400]);
    let se: Vec<f64> = b.trials.iter().map(|t| t.squared_error).collect();
    let mean = se.iter().sum::<f64>() / se.len() as f64;
    let sd = (se.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (se.len() - 1) as f64).sqrt();
    let mse_err = 3.0 * sd / (400f64).sqrt();
    assert!((a.rmse.powi(2) - b.rmse.powi(2)).abs() <= mse_err);
}
