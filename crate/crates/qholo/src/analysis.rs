//! Lineouts, fringe visibility, scaling-law fits and Fisher information.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{ensemble_pmd_with, EnsembleConfig};
use crate::error::{domain, Result};
use crate::field_model::{FieldConstants, LaserParams};
use crate::gaussian_optics::SqueezedState;
use crate::sfa_engine::{MomentumDistribution, MomentumGrid, SfaOptions};

/// A one-dimensional spectrum over p_z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub pz: Vec<f64>,
    pub values: Vec<f64>,
}

/// Row at `pperp`, interpolated linearly between the two nearest rows.
pub fn lineout(pmd: &MomentumDistribution, pperp: f64) -> Result<Spectrum> {
    let g = &pmd.grid;
    if !(pperp >= g.pperp_min && pperp <= g.pperp_max) {
        return domain(format!(
            "p_perp {pperp} outside grid [{}, {}]",
            g.pperp_min, g.pperp_max
        ));
    }
    let s = ((pperp - g.pperp_min) / g.dpperp()).clamp(0.0, (g.pperp_steps - 1) as f64);
    let j0 = (s.floor() as usize).min(g.pperp_steps - 2);
    let w = (s - j0 as f64).clamp(0.0, 1.0);
    let pz: Vec<f64> = (0..g.pz_steps).map(|i| g.pz(i)).collect();
    let values = (0..g.pz_steps)
        .map(|i| {
            let a = pmd.values[g.index(i, j0)];
            let b = pmd.values[g.index(i, j0 + 1)];
            if w == 0.0 {
                a
            } else if w == 1.0 {
                b
            } else {
                (1.0 - w) * a + w * b
            }
        })
        .collect();
    Ok(Spectrum { pz, values })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityCurve {
    pub pz: Vec<f64>,
    pub v: Vec<f64>,
    /// Spacing of the uniform output grid.
    pub window_width: f64,
    pub diagnostic: Option<String>,
}

impl VisibilityCurve {
    pub fn is_empty(&self) -> bool {
        self.pz.is_empty()
    }

    /// Linear interpolation; `None` outside the covered range.
    pub fn at(&self, z: f64) -> Option<f64> {
        let (first, last) = (*self.pz.first()?, *self.pz.last()?);
        if z < first || z > last {
            return None;
        }
        if self.pz.len() == 1 {
            return Some(self.v[0]);
        }
        let i = self.pz.partition_point(|&x| x <= z).clamp(1, self.pz.len() - 1);
        let (x0, x1) = (self.pz[i - 1], self.pz[i]);
        let t = if x1 > x0 { (z - x0) / (x1 - x0) } else { 0.0 };
        Some(self.v[i - 1] + (self.v[i] - self.v[i - 1]) * t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Extremum {
    x: f64,
    y: f64,
    is_max: bool,
}

fn extrema(x: &[f64], y: &[f64]) -> Vec<Extremum> {
    let mut out = Vec::new();
    for i in 1..y.len().saturating_sub(1) {
        let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
        let is_max = y1 > y0 && y1 >= y2;
        let is_min = y1 < y0 && y1 <= y2;
        if !(is_max || is_min) {
            continue;
        }
        let h = 0.5 * (x[i + 1] - x[i - 1]);
        let curv = y0 - 2.0 * y1 + y2;
        let off = if curv != 0.0 { (0.5 * (y0 - y2) / curv).clamp(-1.0, 1.0) } else { 0.0 };
        out.push(Extremum {
            x: x[i] + off * h,
            y: y1 - 0.25 * (y0 - y2) * off,
            is_max,
        });
    }
    out
}

/// Same-type envelope at `z`, log-linear between the bracketing extrema.
fn envelope(ex: &[Extremum], is_max: bool, z: f64) -> Option<f64> {
    let pts: Vec<&Extremum> = ex.iter().filter(|e| e.is_max == is_max).collect();
    let i = pts.partition_point(|e| e.x < z);
    if i == 0 || i == pts.len() {
        return None;
    }
    let (a, b) = (pts[i - 1], pts[i]);
    let t = (z - a.x) / (b.x - a.x);
    if a.y > 0.0 && b.y > 0.0 {
        Some((a.y.ln() + (b.y.ln() - a.y.ln()) * t).exp())
    } else {
        Some(a.y + (b.y - a.y) * t)
    }
}

fn median3(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    for i in 1..v.len().saturating_sub(1) {
        let mut w = [v[i - 1], v[i], v[i + 1]];
        w.sort_by(f64::total_cmp);
        out[i] = w[1];
    }
    out
}

pub fn fringe_visibility(spectrum: &Spectrum, window_width: f64) -> VisibilityCurve {
    fringe_visibility_with(spectrum, window_width, false)
}

/// Michelson contrast of adjacent (max, min) pairs, attributed to the
/// pair midpoint and regridded with step `window_width`.
///
/// Each pair reads the upper and lower envelopes at its midpoint, so a
/// sloping background does not bias the contrast.
pub fn fringe_visibility_with(spectrum: &Spectrum, window_width: f64, median: bool) -> VisibilityCurve {
    let empty = |msg: &str| VisibilityCurve {
        pz: Vec::new(),
        v: Vec::new(),
        window_width,
        diagnostic: Some(msg.to_string()),
    };
    if spectrum.pz.len() != spectrum.values.len() || spectrum.pz.len() < 3 {
        return empty("spectrum too short");
    }
    let y = if median { median3(&spectrum.values) } else { spectrum.values.clone() };
    let ex = extrema(&spectrum.pz, &y);
    let mut mids = Vec::new();
    let mut vals = Vec::new();
    for w in ex.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.is_max == b.is_max {
            continue;
        }
        let (hi, lo) = if a.is_max { (a, b) } else { (b, a) };
        let m = 0.5 * (a.x + b.x);
        let u = envelope(&ex, true, m).unwrap_or(hi.y);
        let l = envelope(&ex, false, m).unwrap_or(lo.y).max(0.0);
        let v = if u + l > 0.0 { (u - l) / (u + l) } else { 0.0 };
        mids.push(m);
        vals.push(v.clamp(0.0, 1.0));
    }
    if mids.is_empty() {
        return empty("fewer than one adjacent extrema pair");
    }
    if !(window_width > 0.0) || mids.len() == 1 {
        return VisibilityCurve { pz: mids, v: vals, window_width, diagnostic: None };
    }
    let raw = VisibilityCurve { pz: mids.clone(), v: vals, window_width, diagnostic: None };
    let (first, last) = (mids[0], mids[mids.len() - 1]);
    let n = ((last - first) / window_width).floor() as usize + 1;
    let pz: Vec<f64> = (0..n).map(|i| first + window_width * i as f64).collect();
    let v = pz.iter().map(|&z| raw.at(z).unwrap_or(0.0).clamp(0.0, 1.0)).collect();
    VisibilityCurve { pz, v, window_width, diagnostic: None }
}

/// Visibility left after Gaussian phase noise of width κσ.
pub fn analytic_visibility(kappa: f64, sigma_up: f64) -> f64 {
    (-0.5 * kappa * kappa * sigma_up * sigma_up).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FitModel {
    /// ln V = −η e^{2r} + c
    SqueezeDecay,
    /// ln V = −η′ r + c
    SingleExponential,
    /// ln V = −β λ⁴ + c
    QuarticWavelength,
    /// ln V = −β λⁿ + c
    PowerWavelength { power: i32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub model: FitModel,
    /// η, η′ or β (decay coefficient, sign flipped from the slope).
    pub coefficient: f64,
    pub offset: f64,
    /// Coefficient of determination on the log scale, clipped to [0, 1].
    pub goodness: f64,
    pub diagnostics: Vec<String>,
}

fn fit_log_linear(model: FitModel, points: &[(f64, f64)], xform: impl Fn(f64) -> f64) -> Result<ScalingFit> {
    if points.len() < 4 {
        return domain(format!("need at least 4 points, got {}", points.len()));
    }
    let mut diagnostics = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(a, v) in points {
        if v > 0.0 && v.is_finite() && a.is_finite() {
            xs.push(xform(a));
            ys.push(v.ln());
        } else {
            diagnostics.push(format!("excluded point ({a}, {v}): visibility must be positive"));
        }
    }
    if xs.len() < 2 {
        return domain("fewer than two usable points after exclusions");
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return domain("abscissae do not vary");
    }
    let slope = sxy / sxx;
    let offset = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - slope * x - offset).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let goodness = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else if ss_res <= 1e-24 {
        1.0
    } else {
        0.0
    };
    Ok(ScalingFit {
        model,
        coefficient: if slope == 0.0 { 0.0 } else { -slope },
        offset,
        goodness,
        diagnostics,
    })
}

pub fn fit_squeeze_decay(points: &[(f64, f64)]) -> Result<ScalingFit> {
    fit_log_linear(FitModel::SqueezeDecay, points, |r| (2.0 * r).exp())
}

pub fn fit_single_exponential(points: &[(f64, f64)]) -> Result<ScalingFit> {
    fit_log_linear(FitModel::SingleExponential, points, |r| r)
}

/// Wavelengths in μm.
pub fn fit_quartic_wavelength(points: &[(f64, f64)]) -> Result<ScalingFit> {
    fit_log_linear(FitModel::QuarticWavelength, points, |l| l.powi(4))
}

pub fn fit_power_wavelength(points: &[(f64, f64)], power: i32) -> Result<ScalingFit> {
    fit_log_linear(FitModel::PowerWavelength { power }, points, |l| l.powi(power))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherMap {
    pub grid: MomentumGrid,
    pub density: Vec<f64>,
    /// Normalized probability at the central parameter value.
    pub probability: Vec<f64>,
    pub integrated: f64,
    pub parameter: String,
    pub delta: f64,
    pub excluded_bins: usize,
}

fn normalized(values: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = values.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return domain("distribution has no positive finite total");
    }
    Ok(values.iter().map(|v| v / total).collect())
}

/// Fisher information density from a central difference of two distributions.
pub fn cfi_map(
    minus: &MomentumDistribution,
    plus: &MomentumDistribution,
    delta: f64,
    floor: f64,
) -> Result<FisherMap> {
    if minus.grid != plus.grid || minus.values.len() != plus.values.len() {
        return domain("distributions are on different grids");
    }
    if !(delta > 0.0) {
        return domain("finite-difference step must be positive");
    }
    let pm = normalized(&minus.values)?;
    let pp = normalized(&plus.values)?;
    let mut density = Vec::with_capacity(pm.len());
    let mut probability = Vec::with_capacity(pm.len());
    let mut excluded = 0;
    for (a, b) in pm.iter().zip(&pp) {
        let p = 0.5 * (a + b);
        probability.push(p);
        if p < floor || p <= 0.0 {
            excluded += 1;
            density.push(0.0);
            continue;
        }
        let d = (b - a) / (2.0 * delta);
        density.push(d * d / p);
    }
    let integrated = density.iter().sum();
    Ok(FisherMap {
        grid: minus.grid,
        density,
        probability,
        integrated,
        parameter: "r".to_string(),
        delta,
        excluded_bins: excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DarkPort {
    pub fisher_fraction: f64,
    pub yield_fraction: f64,
    pub p_2up: f64,
}

/// Share of Fisher information and of probability beyond |p_z| > p_2up.
pub fn darkport_fraction(map: &FisherMap, constants: &FieldConstants) -> DarkPort {
    let (mut fi, mut fy, mut ti, mut ty) = (0.0, 0.0, 0.0, 0.0);
    for n in 0..map.density.len() {
        let outside = map.grid.node(n).pz.abs() > constants.p_2up;
        ti += map.density[n];
        ty += map.probability[n];
        if outside {
            fi += map.density[n];
            fy += map.probability[n];
        }
    }
    DarkPort {
        fisher_fraction: if ti > 0.0 { fi / ti } else { 0.0 },
        yield_fraction: if ty > 0.0 { fy / ty } else { 0.0 },
        p_2up: constants.p_2up,
    }
}

/// Least-squares slope of ln F against r over rows with r ≥ `r_min`.
pub fn ln_slope(rows: &[(f64, f64)], r_min: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|(r, f)| *r >= r_min && *f > 0.0)
        .map(|&(r, f)| (r, f.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Everything needed to turn a squeezing value into a Fisher map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfiPipeline {
    pub laser: LaserParams,
    pub grid: MomentumGrid,
    pub alpha: C64,
    /// Squeezing angle of the family (π for phase squeezing).
    pub theta: f64,
    pub ensemble: EnsembleConfig,
    pub sfa: SfaOptions,
    pub delta: f64,
    pub floor: f64,
    pub richardson: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfiRow {
    pub r: f64,
    pub cfi: f64,
    pub ln_cfi: f64,
    /// Relative change of F when the step is halved.
    pub richardson_deviation: Option<f64>,
}

impl CfiPipeline {
    fn pmd(&self, r: f64) -> Result<MomentumDistribution> {
        let s = SqueezedState::signed(self.alpha, r, self.theta)?;
        Ok(ensemble_pmd_with(&s, &self.laser, &self.grid, &self.ensemble, &self.sfa)?.0)
    }

    pub fn map_with_step(&self, r: f64, delta: f64) -> Result<FisherMap> {
        let minus = self.pmd(r - delta)?;
        let plus = self.pmd(r + delta)?;
        cfi_map(&minus, &plus, delta, self.floor)
    }

    /// Fisher map at `r`; the family extends through r = 0 by flipping
    /// the squeezing axis.
    pub fn evaluate(&self, r: f64) -> Result<(CfiRow, FisherMap)> {
        let map = self.map_with_step(r, self.delta)?;
        let richardson_deviation = if self.richardson {
            let half = self.map_with_step(r, 0.5 * self.delta)?;
            let extrap = (4.0 * half.integrated - map.integrated) / 3.0;
            Some(((extrap - map.integrated) / map.integrated).abs())
        } else {
            None
        };
        let row = CfiRow { r, cfi: map.integrated, ln_cfi: map.integrated.ln(), richardson_deviation };
        Ok((row, map))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfiScan {
    pub rows: Vec<CfiRow>,
    pub slope: Option<f64>,
    #[serde(skip)]
    pub maps: Vec<FisherMap>,
}

pub const SLOPE_FROM: f64 = 0.75;

pub fn cfi_scaling_scan(rs: &[f64], pipeline: &CfiPipeline) -> Result<CfiScan> {
    if rs.windows(2).any(|w| w[1] <= w[0]) {
        return domain("r list must be increasing");
    }
    if rs.iter().filter(|&&r| r >= 0.5).count() < 3 {
        return domain("need at least three r values at or above 0.5");
    }
    let mut rows = Vec::with_capacity(rs.len());
    let mut maps = Vec::with_capacity(rs.len());
    for &r in rs {
        let (row, map) = pipeline.evaluate(r)?;
        rows.push(row);
        maps.push(map);
    }
    let pairs: Vec<(f64, f64)> = rows.iter().map(|row| (row.r, row.cfi)).collect();
    Ok(CfiScan { slope: ln_slope(&pairs, SLOPE_FROM), rows, maps })
}
