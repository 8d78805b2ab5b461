//! Saddle-point strong-field amplitudes for direct and rescattered paths.

mod amplitude;
mod reduced;
mod saddles;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use amplitude::{
    action, amplitude_from_saddles, direct_curvature, direct_term, rescattered_term,
    rescattering_action, rescattering_hessian, transition_amplitude, Amplitude, RescatteredTerm,
    SfaOptions, CONTACT_COUPLING,
};
pub use reduced::{
    calibrate_reduced_model, dominant_path, full_phase_difference, local_kappa, reduced_kappa,
    reduced_phase_difference, Calibration, DominantPath, ReducedHologramModel,
};
pub use saddles::{
    classical_return_seeds, direct_saddles, rescattering_saddles, tunnelling_floor, ClassicalSeed,
    Momentum,
    RescatteringSaddle, RescatteringSolve, SaddleSet, NEWTON_CAP, RESIDUAL_TOL, SEED_PHASES,
};
pub(crate) use saddles::{continue_saddle, push_unique, retained, solve_from_seeds, sort_saddles};

use crate::ensemble::EnsembleConfig;
use crate::error::{domain, Result};
use crate::field_model::{FieldRealization, LaserParams};
use crate::gaussian_optics::SqueezedState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentumGrid {
    pub pz_min: f64,
    pub pz_max: f64,
    pub pz_steps: usize,
    pub pperp_min: f64,
    pub pperp_max: f64,
    pub pperp_steps: usize,
}

impl Default for MomentumGrid {
    fn default() -> Self {
        Self {
            pz_min: -2.2,
            pz_max: 2.2,
            pz_steps: 240,
            pperp_min: 0.0,
            pperp_max: 1.0,
            pperp_steps: 120,
        }
    }
}

impl MomentumGrid {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.pz_min, self.pz_max, self.pperp_min, self.pperp_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(self.pz_max > self.pz_min) || !(self.pperp_max > self.pperp_min) {
            return domain("momentum grid bounds must be finite with max > min");
        }
        if self.pz_steps < 2 || self.pperp_steps < 2 {
            return domain("momentum grid needs at least 2 steps per axis");
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.pz_steps * self.pperp_steps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dpz(&self) -> f64 {
        (self.pz_max - self.pz_min) / (self.pz_steps - 1) as f64
    }

    pub fn dpperp(&self) -> f64 {
        (self.pperp_max - self.pperp_min) / (self.pperp_steps - 1) as f64
    }

    pub fn pz(&self, i: usize) -> f64 {
        if i + 1 == self.pz_steps {
            self.pz_max
        } else {
            self.pz_min + self.dpz() * i as f64
        }
    }

    pub fn pperp(&self, j: usize) -> f64 {
        if j + 1 == self.pperp_steps {
            self.pperp_max
        } else {
            self.pperp_min + self.dpperp() * j as f64
        }
    }

    /// Row-major by p_⊥: all p_z values of row 0 come first.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.pz_steps + i
    }

    pub fn node(&self, n: usize) -> Momentum {
        Momentum::new(self.pz(n % self.pz_steps), self.pperp(n / self.pz_steps))
    }

    pub fn nodes(&self) -> Vec<Momentum> {
        (0..self.len()).map(|n| self.node(n)).collect()
    }
}

/// Provenance attached to every distribution.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub laser: Option<LaserParams>,
    pub state: Option<SqueezedState>,
    pub ensemble: Option<EnsembleConfig>,
    pub field: Option<FieldRealization>,
    pub ip: f64,
    pub sfa: SfaOptions,
    /// Nodes whose amplitude was non-finite and were set to zero.
    pub flagged_nodes: usize,
    /// Nodes where the fold floor on a rescattered prefactor was active.
    pub clamped_nodes: usize,
    pub dropped_seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumDistribution {
    pub grid: MomentumGrid,
    pub values: Vec<f64>,
    pub metadata: Metadata,
}

impl MomentumDistribution {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

// Extra phase (rad) on each side of the window within which ionization
// times are still tracked, so saddles can drift into the window.
pub(crate) const TRACK_MARGIN: f64 = 0.5;

/// Saddles of one field at one momentum, including those just outside
/// the window that continuation may carry inside.
pub(crate) fn tracked_saddles(
    p: Momentum,
    f: &FieldRealization,
    ip: f64,
    seeds: &[ClassicalSeed],
    opts: &SfaOptions,
) -> (Vec<RescatteringSaddle>, usize) {
    if !opts.rescattering {
        return (Vec::new(), 0);
    }
    let solve = solve_from_seeds(p, f, ip, seeds, TRACK_MARGIN);
    let keep = solve.saddles.into_iter().filter(|s| opts.uses(s, p, f)).collect();
    (keep, solve.dropped_seeds)
}

/// Evaluate |M|² at `p` from a tracked saddle list.
pub(crate) fn node_value(
    p: Momentum,
    f: &FieldRealization,
    ip: f64,
    tracked: &[RescatteringSaddle],
    opts: &SfaOptions,
    cell: f64,
) -> Amplitude {
    let direct = direct_saddles(p, f, ip);
    let floor = tunnelling_floor(f, ip);
    let inside: Vec<RescatteringSaddle> =
        tracked.iter().copied().filter(|s| retained(p, s, f, ip, floor, 0.0)).collect();
    amplitude_from_saddles(p, f, ip, &direct, &inside, opts, cell)
}

/// All saddles at `p` that contribute under `opts`.
pub fn saddle_set(p: Momentum, f: &FieldRealization, ip: f64, opts: &SfaOptions) -> SaddleSet {
    let direct = direct_saddles(p, f, ip);
    let rescattered = if opts.rescattering {
        rescattering_saddles(p, f, ip)
            .saddles
            .into_iter()
            .filter(|s| opts.uses(s, p, f))
            .collect()
    } else {
        Vec::new()
    };
    SaddleSet { direct, rescattered }
}

pub(crate) struct PointsResult {
    pub values: Vec<f64>,
    pub flagged: usize,
    pub clamped: usize,
    pub dropped_seeds: usize,
}

/// |M|² at a list of momenta; each entry lands in its own slot.
pub(crate) fn single_shot_points(
    points: &[Momentum],
    f: &FieldRealization,
    ip: f64,
    opts: &SfaOptions,
    cell: f64,
) -> PointsResult {
    let seeds = if opts.rescattering { classical_return_seeds(f) } else { Vec::new() };
    let per: Vec<(f64, bool, bool, usize)> = points
        .par_iter()
        .map(|&p| {
            let (tracked, dropped) = tracked_saddles(p, f, ip, &seeds, opts);
            let a = node_value(p, f, ip, &tracked, opts, cell);
            if a.is_finite() {
                (a.value.norm_sqr(), false, a.clamped, dropped)
            } else {
                (0.0, true, false, dropped)
            }
        })
        .collect();
    PointsResult {
        values: per.iter().map(|x| x.0).collect(),
        flagged: per.iter().filter(|x| x.1).count(),
        clamped: per.iter().filter(|x| x.2).count(),
        dropped_seeds: per.iter().map(|x| x.3).sum(),
    }
}

pub fn single_shot_pmd_with(
    grid: &MomentumGrid,
    f: &FieldRealization,
    ip: f64,
    opts: &SfaOptions,
) -> Result<MomentumDistribution> {
    grid.validate()?;
    if !(ip > 0.0) {
        return domain("ionization potential must be positive");
    }
    let res = single_shot_points(&grid.nodes(), f, ip, opts, grid.dpz());
    Ok(MomentumDistribution {
        grid: *grid,
        values: res.values,
        metadata: Metadata {
            field: Some(*f),
            ip,
            sfa: *opts,
            flagged_nodes: res.flagged,
            clamped_nodes: res.clamped,
            dropped_seeds: res.dropped_seeds,
            ..Metadata::default()
        },
    })
}

pub fn single_shot_pmd(grid: &MomentumGrid, f: &FieldRealization, ip: f64) -> Result<MomentumDistribution> {
    single_shot_pmd_with(grid, f, ip, &SfaOptions::default())
}

/// Direct saddle partner for a given ionization time: the other direct
/// saddle of the cycle, farthest from `t0`.
pub(crate) fn reference_direct(direct: &[C64], t0: C64) -> Option<C64> {
    direct
        .iter()
        .copied()
        .max_by(|a, b| (a.re - t0.re).abs().total_cmp(&(b.re - t0.re).abs()))
}
