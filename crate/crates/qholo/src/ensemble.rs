//! Incoherent average of single-shot distributions over the Wigner function.

use std::sync::OnceLock;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{fringe_visibility, lineout, Spectrum};
use crate::error::{domain, Error, Result};
use crate::field_model::{to_atomic_units, FieldRealization, LaserParams};
use crate::gaussian_optics::{
    gauss_hermite_nodes, realize_field, sample_quadratures, wigner_of_state, SqueezedState,
    WignerGaussian,
};
use crate::sfa_engine::{
    classical_return_seeds, continue_saddle, node_value, push_unique, sort_saddles,
    tracked_saddles, ClassicalSeed, Metadata, Momentum, MomentumDistribution, MomentumGrid,
    RescatteringSaddle, SfaOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MonteCarlo,
    #[default]
    GaussHermite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub method: Method,
    /// Monte Carlo sample count.
    pub samples: usize,
    /// Gauss–Hermite order per quadrature axis.
    pub order: usize,
    pub seed: u64,
    pub phase_coupling: bool,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            method: Method::GaussHermite,
            samples: 10_000,
            order: 20,
            seed: 20_240_917,
            phase_coupling: true,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        match self.method {
            Method::MonteCarlo if self.samples == 0 => domain("Monte Carlo needs at least one sample"),
            Method::GaussHermite if !(1..=64).contains(&self.order) => {
                domain(format!("quadrature order must be in [1, 64], got {}", self.order))
            }
            _ => Ok(()),
        }
    }

    pub fn requested(&self) -> usize {
        match self.method {
            Method::MonteCarlo => self.samples,
            Method::GaussHermite => self.order * self.order,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    /// Samples that contributed finite values at every node.
    pub realized_samples: usize,
    /// Individual (sample, node) contributions replaced by zero.
    pub dropped_nodes: usize,
    /// Standard error of the mean per node; Monte Carlo with ≥ 2 samples only.
    pub statistical_error_map: Option<Vec<f64>>,
    pub wall_time: f64,
    /// Nodes where the saddle set was rebuilt from classical seeds
    /// because continuation failed.
    pub reseeded_nodes: usize,
    pub clamped_nodes: usize,
    pub dropped_seeds: usize,
}

/// Neumaier compensated sum, consumed in iteration order.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

struct Realizations {
    fields: Vec<FieldRealization>,
    weights: Vec<f64>,
    /// Sample indices sorted by field amplitude.
    by_e0: Vec<usize>,
    seeds: Vec<OnceLock<Vec<ClassicalSeed>>>,
}

impl Realizations {
    fn seeds(&self, j: usize) -> &[ClassicalSeed] {
        self.seeds[j].get_or_init(|| classical_return_seeds(&self.fields[j]))
    }
}

fn realizations(
    state: &SqueezedState,
    wigner: &WignerGaussian,
    laser: &LaserParams,
    cfg: &EnsembleConfig,
) -> Result<Realizations> {
    let constants = to_atomic_units(laser)?;
    let (samples, weights): (Vec<[f64; 2]>, Vec<f64>) = match cfg.method {
        Method::MonteCarlo => {
            let s = sample_quadratures(wigner, cfg.seed, cfg.samples)?;
            let w = vec![1.0 / s.len() as f64; s.len()];
            (s, w)
        }
        Method::GaussHermite => gauss_hermite_nodes(wigner, cfg.order)?.into_iter().unzip(),
    };
    let all = samples
        .iter()
        .map(|&x| realize_field(x, state, &constants, laser.cep, cfg.phase_coupling))
        .collect::<Result<Vec<_>>>()?;
    // coincident realizations (a degenerate Wigner function) are merged,
    // keeping the first index of each
    let mut order: Vec<usize> = (0..all.len()).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (&all[a], &all[b]);
        fa.e0.total_cmp(&fb.e0).then(fa.cep.total_cmp(&fb.cep)).then(a.cmp(&b))
    });
    let mut owner = vec![0; all.len()];
    for w in 0..order.len() {
        let j = order[w];
        owner[j] = if w > 0 && same_field(&all[order[w - 1]], &all[j]) { owner[order[w - 1]] } else { j };
    }
    let mut fields = Vec::new();
    let mut merged = Vec::new();
    let mut slot = vec![usize::MAX; all.len()];
    for j in 0..all.len() {
        if owner[j] == j {
            slot[j] = fields.len();
            fields.push(all[j]);
            merged.push(CompensatedSum::default());
        }
    }
    for j in 0..all.len() {
        merged[slot[owner[j]]].add(weights[j]);
    }
    let mut total = CompensatedSum::default();
    merged.iter().for_each(|m| total.add(m.value()));
    let weights: Vec<f64> = merged.iter().map(|m| m.value() / total.value()).collect();
    let mut by_e0: Vec<usize> = (0..fields.len()).collect();
    by_e0.sort_by(|&a, &b| fields[a].e0.total_cmp(&fields[b].e0).then(a.cmp(&b)));
    let seeds = (0..fields.len()).map(|_| OnceLock::new()).collect();
    Ok(Realizations { fields, weights, by_e0, seeds })
}

struct NodeOutcome {
    mean: f64,
    stderr: Option<f64>,
    dropped: Vec<usize>,
    reseeded: bool,
    clamped: bool,
    dropped_seeds: usize,
}

fn same_field(a: &FieldRealization, b: &FieldRealization) -> bool {
    a.e0 == b.e0 && a.cep == b.cep && a.omega == b.omega
}

fn advance(
    p: Momentum,
    from: &FieldRealization,
    to: &FieldRealization,
    ip: f64,
    tracked: &[RescatteringSaddle],
) -> Option<Vec<RescatteringSaddle>> {
    if same_field(from, to) {
        return Some(tracked.to_vec());
    }
    let mut out = Vec::with_capacity(tracked.len());
    for s in tracked {
        push_unique(&mut out, continue_saddle(p, from, to, ip, s, 6)?);
    }
    sort_saddles(&mut out);
    Some(out)
}

#[allow(clippy::too_many_arguments)]
fn node_ensemble(
    p: Momentum,
    reference: &FieldRealization,
    ref_seeds: &[ClassicalSeed],
    real: &Realizations,
    ip: f64,
    opts: &SfaOptions,
    cell: f64,
    want_stderr: bool,
) -> NodeOutcome {
    let n = real.fields.len();
    let mut values = vec![0.0; n];
    let mut finite = vec![true; n];
    let mut reseeded = false;
    let mut clamped = false;
    let (ref_tracked, mut dropped_seeds) = tracked_saddles(p, reference, ip, ref_seeds, opts);

    // walk outward from the reference amplitude in both directions so each
    // realization starts from its nearest solved neighbour
    let split = real.by_e0.partition_point(|&j| real.fields[j].e0 < reference.e0);
    let upward = real.by_e0[split..].iter();
    let downward = real.by_e0[..split].iter().rev();
    for path in [upward.collect::<Vec<_>>(), downward.collect::<Vec<_>>()] {
        let mut field = *reference;
        let mut tracked = ref_tracked.clone();
        for &j in path {
            let target = &real.fields[j];
            tracked = if opts.rescattering {
                match advance(p, &field, target, ip, &tracked) {
                    Some(t) => t,
                    None => {
                        reseeded = true;
                        let (t, d) = tracked_saddles(p, target, ip, real.seeds(j), opts);
                        dropped_seeds += d;
                        t
                    }
                }
            } else {
                Vec::new()
            };
            field = *target;
            let a = node_value(p, target, ip, &tracked, opts, cell);
            if a.is_finite() {
                values[j] = a.value.norm_sqr();
                clamped |= a.clamped;
            } else {
                finite[j] = false;
            }
        }
    }

    let mut acc = CompensatedSum::default();
    for j in 0..n {
        acc.add(real.weights[j] * values[j]);
    }
    let mean = acc.value();
    let stderr = (want_stderr && n >= 2).then(|| {
        let mut ss = CompensatedSum::default();
        for v in &values {
            ss.add((v - mean) * (v - mean));
        }
        (ss.value() / (n as f64 * (n as f64 - 1.0))).sqrt()
    });
    NodeOutcome {
        mean,
        stderr,
        dropped: (0..n).filter(|&j| !finite[j]).collect(),
        reseeded,
        clamped,
        dropped_seeds,
    }
}

/// Ensemble-averaged |M|² at arbitrary momenta.
pub struct PointsEnsemble {
    pub values: Vec<f64>,
    pub report: EnsembleReport,
}

#[allow(clippy::too_many_arguments)]
pub fn ensemble_points_wigner(
    state: &SqueezedState,
    wigner: &WignerGaussian,
    laser: &LaserParams,
    points: &[Momentum],
    cfg: &EnsembleConfig,
    opts: &SfaOptions,
    cell: f64,
) -> Result<PointsEnsemble> {
    let start = Instant::now();
    cfg.validate()?;
    let constants = to_atomic_units(laser)?;
    let reference = FieldRealization::from_constants(&constants, laser.cep)?;
    let real = realizations(state, wigner, laser, cfg)?;
    let ref_seeds = if opts.rescattering { classical_return_seeds(&reference) } else { Vec::new() };
    let ip = laser.target_atom_ip;
    let want_stderr = cfg.method == Method::MonteCarlo;

    let outcomes: Vec<NodeOutcome> = points
        .par_iter()
        .map(|&p| node_ensemble(p, &reference, &ref_seeds, &real, ip, opts, cell, want_stderr))
        .collect();

    let n = real.fields.len();
    let total = n * points.len();
    let dropped: usize = outcomes.iter().map(|o| o.dropped.len()).sum();
    if total > 0 && dropped == total {
        return Err(Error::Numerical("every ensemble contribution was non-finite".into()));
    }
    if dropped as f64 > 0.01 * total as f64 {
        return Err(Error::Numerical(format!(
            "{dropped} of {total} ensemble contributions were non-finite (limit 1%)"
        )));
    }
    let mut bad = vec![false; n];
    for o in &outcomes {
        for &j in &o.dropped {
            bad[j] = true;
        }
    }
    let stderr_map = if want_stderr && n >= 2 {
        Some(outcomes.iter().map(|o| o.stderr.unwrap_or(f64::NAN)).collect())
    } else {
        None
    };
    let report = EnsembleReport {
        realized_samples: bad.iter().filter(|b| !**b).count(),
        dropped_nodes: dropped,
        statistical_error_map: stderr_map,
        wall_time: start.elapsed().as_secs_f64(),
        reseeded_nodes: outcomes.iter().filter(|o| o.reseeded).count(),
        clamped_nodes: outcomes.iter().filter(|o| o.clamped).count(),
        dropped_seeds: outcomes.iter().map(|o| o.dropped_seeds).sum(),
    };
    Ok(PointsEnsemble {
        values: outcomes.iter().map(|o| o.mean.max(0.0)).collect(),
        report,
    })
}

/// Ensemble average on a grid for an explicit Wigner function.
pub fn ensemble_pmd_wigner(
    state: &SqueezedState,
    wigner: &WignerGaussian,
    laser: &LaserParams,
    grid: &MomentumGrid,
    cfg: &EnsembleConfig,
    opts: &SfaOptions,
) -> Result<(MomentumDistribution, EnsembleReport)> {
    grid.validate()?;
    let res = ensemble_points_wigner(state, wigner, laser, &grid.nodes(), cfg, opts, grid.dpz())?;
    let report = res.report;
    let metadata = Metadata {
        laser: Some(*laser),
        state: Some(*state),
        ensemble: Some(*cfg),
        field: None,
        ip: laser.target_atom_ip,
        sfa: *opts,
        flagged_nodes: report.dropped_nodes,
        clamped_nodes: report.clamped_nodes,
        dropped_seeds: report.dropped_seeds,
    };
    Ok((MomentumDistribution { grid: *grid, values: res.values, metadata }, report))
}

pub fn ensemble_pmd_with(
    state: &SqueezedState,
    laser: &LaserParams,
    grid: &MomentumGrid,
    cfg: &EnsembleConfig,
    opts: &SfaOptions,
) -> Result<(MomentumDistribution, EnsembleReport)> {
    ensemble_pmd_wigner(state, &wigner_of_state(state), laser, grid, cfg, opts)
}

pub fn ensemble_pmd(
    state: &SqueezedState,
    laser: &LaserParams,
    grid: &MomentumGrid,
    cfg: &EnsembleConfig,
) -> Result<(MomentumDistribution, EnsembleReport)> {
    ensemble_pmd_with(state, laser, grid, cfg, &SfaOptions::default())
}

/// A fine one-dimensional cut at fixed p_⊥.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LineoutSpec {
    pub pz_min: f64,
    pub pz_max: f64,
    pub pz_steps: usize,
    pub pperp: f64,
}

impl Default for LineoutSpec {
    fn default() -> Self {
        Self { pz_min: 0.0, pz_max: 2.2, pz_steps: 1101, pperp: 0.0 }
    }
}

impl LineoutSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.pz_max > self.pz_min) || self.pz_steps < 2 || !self.pperp.is_finite() {
            return domain("lineout needs pz_max > pz_min, at least 2 steps and finite p_perp");
        }
        Ok(())
    }

    pub fn dpz(&self) -> f64 {
        (self.pz_max - self.pz_min) / (self.pz_steps - 1) as f64
    }

    pub fn pz(&self) -> Vec<f64> {
        (0..self.pz_steps)
            .map(|i| if i + 1 == self.pz_steps { self.pz_max } else { self.pz_min + self.dpz() * i as f64 })
            .collect()
    }
}

pub fn ensemble_lineout(
    state: &SqueezedState,
    laser: &LaserParams,
    spec: &LineoutSpec,
    cfg: &EnsembleConfig,
    opts: &SfaOptions,
) -> Result<(Spectrum, EnsembleReport)> {
    spec.validate()?;
    let pz = spec.pz();
    let points: Vec<Momentum> = pz.iter().map(|&z| Momentum::new(z, spec.pperp)).collect();
    let res = ensemble_points_wigner(state, &wigner_of_state(state), laser, &points, cfg, opts, spec.dpz())?;
    Ok((Spectrum { pz, values: res.values }, res.report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub count: usize,
    pub max_standard_error: Option<f64>,
    /// Largest visibility change against the previous count on the
    /// plateau of the lowest-p_⊥ row.
    pub visibility_drift: Option<f64>,
}

/// Plateau sampling used for drift comparisons.
pub const PLATEAU: (f64, f64) = (0.3, 1.5);

pub fn convergence_scan(
    state: &SqueezedState,
    laser: &LaserParams,
    grid: &MomentumGrid,
    cfg: &EnsembleConfig,
    schedule: &[usize],
    opts: &SfaOptions,
) -> Result<Vec<ConvergenceRow>> {
    if schedule.windows(2).any(|w| w[1] <= w[0]) {
        return domain("schedule must be strictly increasing");
    }
    let probe: Vec<f64> = (0..=60).map(|i| PLATEAU.0 + (PLATEAU.1 - PLATEAU.0) * i as f64 / 60.0).collect();
    let mut rows = Vec::with_capacity(schedule.len());
    let mut prev: Option<Vec<Option<f64>>> = None;
    for &count in schedule {
        let mut c = *cfg;
        match c.method {
            Method::MonteCarlo => c.samples = count,
            Method::GaussHermite => c.order = count,
        }
        let (pmd, report) = ensemble_pmd_with(state, laser, grid, &c, opts)?;
        let row0 = lineout(&pmd, grid.pperp_min)?;
        let curve = fringe_visibility(&row0, 0.01);
        let v: Vec<Option<f64>> = probe.iter().map(|&z| curve.at(z)).collect();
        let drift = prev.as_ref().map(|pv| {
            pv.iter()
                .zip(&v)
                .filter_map(|(a, b)| Some((a.as_ref()? - b.as_ref()?).abs()))
                .fold(0.0, f64::max)
        });
        rows.push(ConvergenceRow {
            count,
            max_standard_error: report
                .statistical_error_map
                .as_ref()
                .map(|m| m.iter().copied().fold(0.0, f64::max)),
            visibility_drift: drift,
        });
        prev = Some(v);
    }
    Ok(rows)
}
