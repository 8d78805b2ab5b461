use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use qholo::analysis::*;
use qholo::ensemble::{EnsembleConfig, Method};
use qholo::field_model::*;
use qholo::sfa_engine::*;
use qholo::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn pmd_from(grid: MomentumGrid, f: impl Fn(Momentum) -> f64) -> MomentumDistribution {
    MomentumDistribution { grid, values: grid.nodes().into_iter().map(f).collect(), metadata: Metadata::default() }
}

fn synthetic(f: impl Fn(f64) -> f64) -> Spectrum {
    let pz: Vec<f64> = (0..=4000).map(|i| 0.2 + 1.4 * i as f64 / 4000.0).collect();
    Spectrum { values: pz.iter().map(|&z| f(z)).collect(), pz }
}

fn interior(v: &VisibilityCurve, lo: f64, hi: f64) -> Vec<f64> {
    v.pz.iter().zip(&v.v).filter(|(z, _)| (lo..=hi).contains(*z)).map(|(_, v)| *v).collect()
}

#[test]
fn lineout_of_symmetric_distribution_is_even() {
    let grid = MomentumGrid { pz_min: -2.0, pz_max: 2.0, pz_steps: 81, pperp_min: 0.0, pperp_max: 1.0, pperp_steps: 5 };
    let pmd = pmd_from(grid, |p| (-(p.pz * p.pz) - p.pperp).exp() * (1.0 + (5.0 * p.pz).cos()));
    let s = lineout(&pmd, 0.0).unwrap();
    let n = s.values.len();
    for i in 0..n {
        assert!((s.values[i] - s.values[n - 1 - i]).abs() <= 1e-6 * s.values[i].abs().max(1e-300));
    }
}

#[test]
fn lineout_interpolates_between_rows() {
    let grid = MomentumGrid { pz_min: 0.0, pz_max: 1.0, pz_steps: 11, pperp_min: 0.0, pperp_max: 1.0, pperp_steps: 3 };
    let flat = pmd_from(grid, |_| 2.5);
    assert!(lineout(&flat, 0.3).unwrap().values.iter().all(|v| *v == 2.5));
    let ramp = pmd_from(grid, |p| 1.0 + p.pperp);
    let s = lineout(&ramp, 0.25).unwrap();
    assert!(s.values.iter().all(|v| (v - 1.25).abs() < 1e-14));
    assert_eq!(lineout(&ramp, 1.0).unwrap().values[0], 2.0);
    assert!(matches!(lineout(&ramp, 1.5), Err(Error::Domain(_))));
    assert!(matches!(lineout(&ramp, -0.1), Err(Error::Domain(_))));
}

#[test]
fn visibility_of_cosine_fringes() {
    let v = fringe_visibility(&synthetic(|z| 1.0 + 0.5 * (40.0 * z).cos()), 0.01);
    let inner = interior(&v, 0.4, 1.4);
    assert!(!inner.is_empty());
    assert!(inner.iter().all(|x| (x - 0.5).abs() < 1e-3));
    assert!(v.diagnostic.is_none());
}

#[test]
fn visibility_ignores_decaying_background() {
    let v = fringe_visibility(&synthetic(|z| (-2.0 * z).exp() * (1.0 + 0.5 * (40.0 * z).cos())), 0.01);
    let inner = interior(&v, 0.4, 1.4);
    assert!(inner.iter().all(|x| (x - 0.5).abs() < 0.02), "{inner:?}");
}

#[test]
fn monotone_spectrum_has_no_visibility() {
    let v = fringe_visibility(&synthetic(|z| (-z).exp()), 0.01);
    assert!(v.is_empty());
    assert!(v.diagnostic.is_some());
}

#[test]
fn visibility_is_scale_invariant() {
    let s = synthetic(|z| (1.0 + 0.3 * z) * (1.0 + 0.7 * (33.0 * z).cos()));
    let scaled = Spectrum { pz: s.pz.clone(), values: s.values.iter().map(|v| v * 3.7e-9).collect() };
    let (a, b) = (fringe_visibility(&s, 0.01), fringe_visibility(&scaled, 0.01));
    assert_eq!(a.pz.len(), b.pz.len());
    for i in 0..a.pz.len() {
        assert!((a.pz[i] - b.pz[i]).abs() < 1e-12);
        assert!((a.v[i] - b.v[i]).abs() < 1e-12);
    }
}

#[test]
fn analytic_visibility_limits_and_sampling() {
    assert_eq!(analytic_visibility(0.0, 0.3), 1.0);
    assert!((analytic_visibility(1.0, 1.0) - (-0.5f64).exp()).abs() < 1e-15);
    assert!((analytic_visibility(2.0, 0.5) - (-0.5f64).exp()).abs() < 1e-15);
    // ⟨cos(κ δ)⟩ over Gaussian δ
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (kappa, sigma) = (30.0, 0.04);
    let n = 200_000;
    let mean = (0..n).map(|_| (kappa * sigma * rng.sample::<f64, _>(StandardNormal)).cos()).sum::<f64>() / n as f64;
    let se = 1.0 / (2.0 * n as f64).sqrt();
    assert!((mean - analytic_visibility(kappa, sigma)).abs() < 4.0 * se);
}

fn decay_points(eta: f64) -> Vec<(f64, f64)> {
    (0..7).map(|i| 0.25 * i as f64).map(|r| (r, 0.95 * (-eta * (2.0 * r).exp()).exp())).collect()
}

#[test]
fn squeeze_decay_fit_recovers_rate() {
    let fit = fit_squeeze_decay(&decay_points(0.05)).unwrap();
    assert!((fit.coefficient - 0.05).abs() < 1e-6);
    assert!((fit.offset - 0.95f64.ln()).abs() < 1e-9);
    assert!(fit.goodness > 0.999_999);
    let flat: Vec<(f64, f64)> = (0..6).map(|i| (0.3 * i as f64, 0.8)).collect();
    assert_eq!(fit_squeeze_decay(&flat).unwrap().coefficient, 0.0);
}

#[test]
fn squeeze_decay_fit_tolerates_noise() {
    let noisy: Vec<(f64, f64)> = decay_points(0.05)
        .into_iter()
        .enumerate()
        .map(|(i, (r, v))| (r, v * if i % 2 == 0 { 1.02 } else { 0.98 }))
        .collect();
    let fit = fit_squeeze_decay(&noisy).unwrap();
    assert!(((fit.coefficient - 0.05) / 0.05).abs() < 0.15, "{}", fit.coefficient);
}

#[test]
fn quartic_wavelength_fit() {
    let pts: Vec<(f64, f64)> = [0.8, 1.2, 1.6, 2.0, 2.4].iter().map(|&l: &f64| (l, (-0.02 * l.powi(4)).exp())).collect();
    let fit = fit_quartic_wavelength(&pts).unwrap();
    assert!((fit.coefficient - 0.02).abs() < 1e-9);
    assert!(fit.goodness > 0.999_999);
    let sq = fit_power_wavelength(&pts, 2).unwrap();
    assert!(sq.goodness < fit.goodness);
    let flat: Vec<(f64, f64)> = [0.8, 1.2, 1.6, 2.0].iter().map(|&l| (l, 0.9)).collect();
    assert_eq!(fit_quartic_wavelength(&flat).unwrap().coefficient, 0.0);
}

#[test]
fn fits_exclude_nonpositive_visibility() {
    let mut pts = decay_points(0.05);
    pts.push((2.0, 0.0));
    pts.push((2.25, -0.1));
    let fit = fit_squeeze_decay(&pts).unwrap();
    assert_eq!(fit.diagnostics.len(), 2);
    assert!((fit.coefficient - 0.05).abs() < 1e-6);
    assert!(fit_squeeze_decay(&pts[..3]).is_err());
}

fn gaussian_pair(mu_delta: f64) -> (MomentumDistribution, MomentumDistribution) {
    let grid = MomentumGrid { pz_min: -8.0, pz_max: 8.0, pz_steps: 1601, pperp_min: 0.0, pperp_max: 1.0, pperp_steps: 2 };
    let shifted = |mu: f64| pmd_from(grid, |p| (-(p.pz - mu).powi(2) / 2.0).exp());
    (shifted(-mu_delta), shifted(mu_delta))
}

#[test]
fn fisher_information_of_shifted_gaussian() {
    let (a, b) = gaussian_pair(1e-3);
    let map = cfi_map(&a, &b, 1e-3, 0.0).unwrap();
    assert!((map.integrated - 1.0).abs() < 0.02, "{}", map.integrated);
    let same = cfi_map(&a, &a, 1e-3, 0.0).unwrap();
    assert_eq!(same.integrated, 0.0);
}

#[test]
fn fisher_information_relabel_invariant() {
    let (a, b) = gaussian_pair(1e-3);
    let n = a.values.len();
    let perm: Vec<usize> = (0..n).map(|i| (i * 7919) % n).collect();
    let shuffle = |d: &MomentumDistribution| MomentumDistribution {
        values: perm.iter().map(|&i| d.values[i]).collect(),
        ..d.clone()
    };
    let x = cfi_map(&a, &b, 1e-3, 0.0).unwrap().integrated;
    let y = cfi_map(&shuffle(&a), &shuffle(&b), 1e-3, 0.0).unwrap().integrated;
    assert!((x - y).abs() < 1e-12 * x);
}

#[test]
fn fisher_floor_only_removes_information() {
    let (a, b) = gaussian_pair(1e-3);
    let mut prev = f64::INFINITY;
    let mut prev_excluded = 0;
    for floor in [0.0, 1e-12, 1e-6, 1e-4, 1e-3] {
        let m = cfi_map(&a, &b, 1e-3, floor).unwrap();
        assert!(m.integrated <= prev);
        assert!(m.excluded_bins >= prev_excluded);
        prev = m.integrated;
        prev_excluded = m.excluded_bins;
    }
}

#[test]
fn fisher_map_rejects_bad_input() {
    let (a, _) = gaussian_pair(1e-3);
    let other = pmd_from(MomentumGrid { pz_steps: 11, ..a.grid }, |_| 1.0);
    assert!(matches!(cfi_map(&a, &other, 1e-3, 0.0), Err(Error::Domain(_))));
    assert!(matches!(cfi_map(&a, &a, 0.0, 0.0), Err(Error::Domain(_))));
    let zero = pmd_from(a.grid, |_| 0.0);
    assert!(cfi_map(&zero, &zero, 1e-3, 0.0).is_err());
}

#[test]
fn dark_port_fractions() {
    let c = to_atomic_units(&LaserParams::default()).unwrap();
    let grid = MomentumGrid { pz_min: -2.2, pz_max: 2.2, pz_steps: 45, pperp_min: 0.0, pperp_max: 1.0, pperp_steps: 3 };
    let uniform = FisherMap {
        grid,
        density: vec![1.0; grid.len()],
        probability: vec![1.0 / grid.len() as f64; grid.len()],
        integrated: grid.len() as f64,
        parameter: "r".into(),
        delta: 0.05,
        excluded_bins: 0,
    };
    let d = darkport_fraction(&uniform, &c);
    assert!((d.fisher_fraction - d.yield_fraction).abs() < 1e-12);
    assert!(d.fisher_fraction > 0.0);
    let inside = FisherMap {
        density: grid.nodes().iter().map(|p| if p.pz.abs() < 1.0 { 1.0 } else { 0.0 }).collect(),
        ..uniform.clone()
    };
    assert_eq!(darkport_fraction(&inside, &c).fisher_fraction, 0.0);
}

#[test]
fn log_slope() {
    let rows: Vec<(f64, f64)> = (0..7).map(|i| 0.25 * i as f64).map(|r| (r, 3.0 * (4.0 * r).exp())).collect();
    assert!((ln_slope(&rows, 0.75).unwrap() - 4.0).abs() < 1e-9);
    let flat: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 2.0)).collect();
    assert_eq!(ln_slope(&flat, 0.0).unwrap(), 0.0);
    assert!(ln_slope(&rows, 10.0).is_none());
}

#[test]
fn phase_squeezing_beats_standard_quantum_limit() {
    let pipe = CfiPipeline {
        laser: LaserParams::default(),
        grid: MomentumGrid { pz_steps: 60, pperp_steps: 10, ..MomentumGrid::default() },
        alpha: C64::new(120.0, 0.0),
        theta: PI,
        ensemble: EnsembleConfig { method: Method::GaussHermite, order: 12, ..EnsembleConfig::default() },
        sfa: SfaOptions::default(),
        delta: 0.05,
        floor: 1e-12,
        richardson: false,
    };
    let (sql, _) = pipe.evaluate(0.0).unwrap();
    let (at1, map) = pipe.evaluate(1.0).unwrap();
    assert!(sql.cfi > 0.0);
    assert!(at1.cfi > sql.cfi, "{} vs SQL {}", at1.cfi, sql.cfi);
    assert!(map.density.iter().all(|d| *d >= 0.0));
    assert!(cfi_scaling_scan(&[0.0, 0.5, 1.0], &pipe).is_err());
}
