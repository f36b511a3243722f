//! Statistical checks of the samplers and ensemble statistics against exact
//! finite-n values. All runs use fixed seeds.

use std::collections::HashMap;

use permdiv::cycletype::{cycle_type_probability, enumerate_cycle_types, sample_ewens_cycle_type, sample_uniform_cycle_type};
use permdiv::divproc::divisor_char_fn;
use permdiv::enumexact::{exact_mean_lattice, exact_moments, free_probability, friable_probability, mean_value_upper_bound};
use permdiv::oracles::{buchstab_omega, dickman_rho};
use permdiv::rng::DEFAULT_SEED;
use permdiv::stats::{run_ensemble, verify_joint_moments};
use permdiv::{CycleType, EnsembleConfig, RngStream, Weight, EULER_GAMMA};

fn counts(samples: usize, n: usize, mut draw: impl FnMut(&mut RngStream) -> CycleType) -> HashMap<Vec<usize>, usize> {
    let mut hist = HashMap::new();
    for i in 0..samples {
        let mut rng = RngStream::new(DEFAULT_SEED, i as u64);
        let ct = draw(&mut rng);
        assert_eq!(ct.n(), n);
        *hist.entry(ct.dense_counts()).or_insert(0) += 1;
    }
    hist
}

/// Pearson statistic against exact cycle-type probabilities, with its degrees of freedom.
fn chi_square(hist: &HashMap<Vec<usize>, usize>, n: usize, samples: usize) -> (f64, usize) {
    let mut stat = 0.0;
    let mut cells = 0;
    for ct in enumerate_cycle_types(n).unwrap() {
        let expected = cycle_type_probability(&ct) * samples as f64;
        let seen = *hist.get(&ct.dense_counts()).unwrap_or(&0) as f64;
        stat += (seen - expected).powi(2) / expected;
        cells += 1;
    }
    (stat, cells - 1)
}

/// Upper 0.1% point of chi-square via the Wilson–Hilferty approximation.
fn chi_square_critical(df: usize) -> f64 {
    let k = df as f64;
    let z = 3.09;
    k * (1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt()).powi(3)
}

#[test]
fn uniform_sampler_frequencies() {
    for n in 1..=8 {
        let samples = 100_000;
        let hist = counts(samples, n, |rng| sample_uniform_cycle_type(n, rng).unwrap());
        if n == 1 {
            assert_eq!(hist.len(), 1);
            continue;
        }
        let (stat, df) = chi_square(&hist, n, samples);
        assert!(stat <= chi_square_critical(df), "n = {n}: chi2 {stat} on {df} df");
    }
}

#[test]
fn ewens_one_is_uniform() {
    let n = 6;
    let samples = 100_000;
    let hist = counts(samples, n, |rng| sample_ewens_cycle_type(n, 1.0, rng).unwrap());
    let (stat, df) = chi_square(&hist, n, samples);
    assert!(stat <= chi_square_critical(df), "chi2 {stat} on {df} df");
}

#[test]
fn ewens_cycle_counts_have_the_right_mean() {
    // E(cycles) = sum_{i < n} param / (param + i)
    let n = 50;
    for param in [0.5, 2.0] {
        let samples = 20_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for i in 0..samples {
            let mut rng = RngStream::new(DEFAULT_SEED, i);
            let k = sample_ewens_cycle_type(n, param, &mut rng).unwrap().cycle_count() as f64;
            sum += k;
            sq += k * k;
        }
        let mean = sum / samples as f64;
        let se = ((sq / samples as f64 - mean * mean) / samples as f64).sqrt();
        let want: f64 = (0..n).map(|i| param / (param + i as f64)).sum();
        assert!((mean - want).abs() <= 4.0 * se, "{param}: {mean} vs {want}");
    }
}

#[test]
fn small_n_mean_curve_matches_exact_values() {
    for (n, theta) in [(5, 1.0), (10, 1.0), (10, 2.5)] {
        let cfg = EnsembleConfig {
            n,
            theta,
            samples: 400_000,
            grid: n,
            windows: vec![],
            increment: None,
            ..EnsembleConfig::default()
        };
        let report = run_ensemble(&cfg).unwrap();
        let exact = exact_mean_lattice(n, Weight::new(theta).unwrap()).unwrap();
        for (k, p) in report.mean_curve.iter().enumerate() {
            let tol = 4.0 * p.std_error + 1e-12;
            assert!((p.mean - exact[k]).abs() <= tol, "n={n} k={k}: {} vs {}", p.mean, exact[k]);
        }
    }
}

#[test]
fn sup_distance_shrinks_as_n_doubles() {
    let mut prev = f64::INFINITY;
    for n in [250, 500, 1000, 2000] {
        let cfg = EnsembleConfig {
            n,
            samples: 20_000,
            windows: vec![],
            increment: None,
            ..EnsembleConfig::default()
        };
        let d = run_ensemble(&cfg).unwrap().oracle_distances[0].value;
        assert!(d <= prev, "n = {n}: {d} > {prev}");
        prev = d;
    }
}

#[test]
fn mass_at_zero_decreases() {
    let at_zero = |n| {
        let cfg = EnsembleConfig {
            n,
            samples: 20_000,
            grid: 1,
            windows: vec![],
            increment: None,
            ..EnsembleConfig::default()
        };
        run_ensemble(&cfg).unwrap().mean_curve[0].mean
    };
    assert!(at_zero(2000) < at_zero(500));
}

#[test]
fn triple_moment_error_decreases() {
    let err = |n| {
        let cfg = EnsembleConfig {
            n,
            samples: 20_000,
            ..EnsembleConfig::default()
        };
        let c = verify_joint_moments(&cfg, 3, &[0.25, 0.5, 0.75]).unwrap();
        (c.empirical - c.oracle).abs()
    };
    assert!(err(2000) < err(500));
}

#[test]
fn exact_first_moment_is_monotone_in_t() {
    for theta in [0.5, 1.0, 3.0] {
        let w = Weight::new(theta).unwrap();
        for n in [1, 7, 15] {
            let vals: Vec<f64> = (0..=40)
                .map(|i| exact_moments(n, w, 1, &[i as f64 / 40.0]).unwrap())
                .collect();
            assert!(vals.windows(2).all(|p| p[0] <= p[1] + 1e-15));
        }
    }
}

#[test]
fn friable_tracks_dickman_across_range() {
    for r in [200, 400] {
        for m in (2 * r..=6 * r).step_by(r / 4) {
            let u = m as f64 / r as f64;
            let rel = (friable_probability(m, r).unwrap() / dickman_rho(u).unwrap() - 1.0).abs();
            assert!(rel <= 5.0 * u * (u + 1.0).ln() / r as f64, "m={m} r={r}: {rel}");
        }
    }
}

#[test]
fn free_tracks_buchstab_across_range() {
    for r in [200, 400] {
        let h_r: f64 = (1..=r).map(|j| 1.0 / j as f64).sum();
        for m in (3 * r / 2..=5 * r).step_by(r / 8) {
            let u = m as f64 / r as f64;
            let d = (free_probability(m, r).unwrap() * h_r.exp() - EULER_GAMMA.exp() * buchstab_omega(u).unwrap()).abs();
            assert!(d <= 10.0 / r as f64, "m={m} r={r}: {d}");
        }
    }
}

#[test]
fn mean_value_bound_covers_char_fn_modulus() {
    let (theta, v, n, samples) = (1.0, 0.5, 500, 10_000);
    let w = Weight::new(theta).unwrap();
    let qvals: Vec<f64> = (1..=n)
        .map(|j| (num_complex::Complex64::new(1.0, 0.0) + num_complex::Complex64::from_polar(theta, v * j as f64)).norm() / (1.0 + theta))
        .collect();
    let bound = mean_value_upper_bound(&qvals, 1.0).unwrap();
    let mut sum = 0.0;
    for i in 0..samples {
        let mut rng = RngStream::new(DEFAULT_SEED, i);
        let ct = sample_uniform_cycle_type(n, &mut rng).unwrap();
        sum += divisor_char_fn(&ct, w, v).norm();
    }
    let mean = sum / samples as f64;
    assert!(mean <= bound, "{mean} > {bound}");
}
