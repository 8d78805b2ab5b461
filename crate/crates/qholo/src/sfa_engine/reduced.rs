//! Two-path hologram phase ΔS ≈ α₀·U_p·τ_exc + C.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::amplitude::{action, rescattering_action};
use super::saddles::{direct_saddles, rescattering_saddles, Momentum, RescatteringSaddle};
use super::reference_direct;
use crate::error::{domain, Result};
use crate::field_model::FieldRealization;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedHologramModel {
    pub alpha0: f64,
    pub c_offset: f64,
    /// (p_z, τ_exc) pairs seen during calibration.
    pub tau_exc: Vec<(f64, f64)>,
}

impl ReducedHologramModel {
    pub fn evaluate(&self, up: f64, tau: f64) -> f64 {
        self.alpha0 * up * tau + self.c_offset
    }
}

/// The forward rescattered path that returns first, paired with the
/// direct path of the other half cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominantPath {
    pub saddle: RescatteringSaddle,
    pub reference_time: C64,
    pub tau_exc: f64,
    /// Re(S_resc − S_ref), not wrapped.
    pub delta_s: f64,
}

pub fn dominant_path(p: Momentum, f: &FieldRealization, ip: f64) -> Option<DominantPath> {
    let saddle = rescattering_saddles(p, f, ip)
        .saddles
        .into_iter()
        .filter(|s| s.is_forward(p, f))
        .min_by(|a, b| a.tr.re.total_cmp(&b.tr.re))?;
    let direct = direct_saddles(p, f, ip);
    let reference_time = reference_direct(&direct, saddle.t0)?;
    let delta_s = (rescattering_action(p, &saddle, f, ip) - action(p, reference_time, f, ip)).re;
    Some(DominantPath {
        saddle,
        reference_time,
        tau_exc: saddle.excursion_time(),
        delta_s,
    })
}

pub fn full_phase_difference(p: Momentum, f: &FieldRealization, ip: f64) -> Option<f64> {
    dominant_path(p, f, ip).map(|d| d.delta_s)
}

pub fn reduced_phase_difference(
    p: Momentum,
    f: &FieldRealization,
    ip: f64,
    model: &ReducedHologramModel,
) -> Option<f64> {
    dominant_path(p, f, ip).map(|d| model.evaluate(f.up(), d.tau_exc))
}

/// dΔS/dU_p of the reduced model.
pub fn reduced_kappa(p: Momentum, f: &FieldRealization, ip: f64, model: &ReducedHologramModel) -> Option<f64> {
    dominant_path(p, f, ip).map(|d| model.alpha0 * d.tau_exc)
}

/// dΔS/dU_p of the full phase, central difference in U_p with relative step `eps`.
pub fn local_kappa(p: Momentum, f: &FieldRealization, ip: f64, eps: f64) -> Option<f64> {
    let at = |s: f64| -> Option<f64> {
        let g = FieldRealization::new(f.e0 * (1.0 + s).sqrt(), f.omega, f.cep).ok()?;
        full_phase_difference(p, &g, ip)
    };
    let hi = at(eps)?;
    let lo = at(-eps)?;
    Some((hi - lo) / (2.0 * eps * f.up()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub model: ReducedHologramModel,
    /// (p_z, full ΔS, model ΔS)
    pub samples: Vec<(f64, f64, f64)>,
    pub max_relative_error: f64,
}

/// Fit α₀ and C against the full phase difference at the given momenta.
///
/// Residuals are weighted by 1/|ΔS| so the fit controls relative error.
pub fn calibrate_reduced_model(
    f: &FieldRealization,
    ip: f64,
    pz: &[f64],
    pperp: f64,
) -> Result<Calibration> {
    let up = f.up();
    if !(up > 0.0) {
        return domain("calibration needs a nonzero field");
    }
    let mut pts = Vec::new();
    for &z in pz {
        if let Some(d) = dominant_path(Momentum::new(z, pperp), f, ip) {
            if d.delta_s != 0.0 {
                pts.push((z, d.tau_exc, d.delta_s));
            }
        }
    }
    if pts.len() < 2 {
        return domain("fewer than two momenta with a rescattered path");
    }
    // weighted normal equations for y = a·x + c with x = U_p·τ
    let (mut sww, mut swx, mut swxx, mut swy, mut swxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(_, tau, ds) in &pts {
        let w = 1.0 / (ds * ds);
        let x = up * tau;
        sww += w;
        swx += w * x;
        swxx += w * x * x;
        swy += w * ds;
        swxy += w * x * ds;
    }
    let det = sww * swxx - swx * swx;
    if det.abs() <= f64::EPSILON * sww * swxx {
        return domain("excursion times do not vary over the calibration range");
    }
    let alpha0 = (sww * swxy - swx * swy) / det;
    let c_offset = (swxx * swy - swx * swxy) / det;
    let model = ReducedHologramModel {
        alpha0,
        c_offset,
        tau_exc: pts.iter().map(|&(z, t, _)| (z, t)).collect(),
    };
    let samples: Vec<(f64, f64, f64)> = pts
        .iter()
        .map(|&(z, t, ds)| (z, ds, model.evaluate(up, t)))
        .collect();
    let max_relative_error = samples
        .iter()
        .map(|&(_, a, b)| ((a - b) / a).abs())
        .fold(0.0, f64::max);
    Ok(Calibration { model, samples, max_relative_error })
}
