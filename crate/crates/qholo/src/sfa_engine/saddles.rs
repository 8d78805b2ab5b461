use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::field_model::FieldRealization;

/// Final photoelectron momentum, along and across the polarization axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Momentum {
    pub pz: f64,
    pub pperp: f64,
}

impl Momentum {
    pub fn new(pz: f64, pperp: f64) -> Self {
        Self { pz, pperp }
    }
}

/// Ionization time, return time and drift momentum of one rescattered path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescatteringSaddle {
    pub t0: C64,
    pub tr: C64,
    pub k: C64,
}

impl RescatteringSaddle {
    fn as_array(&self) -> [C64; 3] {
        [self.t0, self.tr, self.k]
    }

    fn from_array(x: [C64; 3]) -> Self {
        Self { t0: x[0], tr: x[1], k: x[2] }
    }

    /// Forward scattering keeps the sign of the longitudinal velocity at return.
    pub fn is_forward(&self, p: Momentum, f: &FieldRealization) -> bool {
        let ar = f.a(self.tr);
        ((ar + p.pz) / (self.k + ar)).re > 0.0
    }

    pub fn residual(&self, p: Momentum, f: &FieldRealization, ip: f64) -> f64 {
        norm3(&residual(p, f, ip, &self.as_array()))
    }

    pub fn excursion_time(&self) -> f64 {
        (self.tr - self.t0).re
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SaddleSet {
    pub direct: Vec<C64>,
    pub rescattered: Vec<RescatteringSaddle>,
}

impl SaddleSet {
    pub fn max_direct_residual(&self, p: Momentum, f: &FieldRealization, ip: f64) -> f64 {
        self.direct
            .iter()
            .map(|&t| direct_residual(p, f, ip, t))
            .fold(0.0, f64::max)
    }

    pub fn max_rescattering_residual(&self, p: Momentum, f: &FieldRealization, ip: f64) -> f64 {
        self.rescattered
            .iter()
            .map(|s| s.residual(p, f, ip))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn direct_residual(p: Momentum, f: &FieldRealization, ip: f64, t: C64) -> f64 {
    let v = f.a(t) + p.pz;
    (v * v * 0.5 + 0.5 * p.pperp * p.pperp + ip).norm()
}

/// Closed-form direct saddles inside the window, sorted by real part.
pub fn direct_saddles(p: Momentum, f: &FieldRealization, ip: f64) -> Vec<C64> {
    if f.e0 <= 0.0 {
        return Vec::new();
    }
    let kappa = (2.0 * ip + p.pperp * p.pperp).sqrt();
    let w = C64::new(-p.pz, kappa) / f.a0();
    let pa = w.asin();
    let pb = C64::new(PI, 0.0) - pa.conj();
    let mut out: Vec<C64> = [pa, pb]
        .into_iter()
        .map(|ph| f.time_of_phase(C64::new(ph.re.rem_euclid(2.0 * PI), ph.im)))
        .filter(|&t| t.im > 0.0 && direct_residual(p, f, ip, t) < 1e-10)
        .collect();
    out.sort_by(|a, b| a.re.total_cmp(&b.re));
    out
}

pub(crate) fn residual(p: Momentum, f: &FieldRealization, ip: f64, x: &[C64; 3]) -> [C64; 3] {
    let [t0, tr, k] = *x;
    let a0 = f.a(t0);
    let ar = f.a(tr);
    let v0 = k + a0;
    let vr = k + ar;
    let pr = ar + p.pz;
    [
        v0 * v0 * 0.5 + ip,
        k * (tr - t0) + f.int_a(tr) - f.int_a(t0),
        (pr * pr + p.pperp * p.pperp - vr * vr) * 0.5,
    ]
}

pub(crate) fn jacobian(p: Momentum, f: &FieldRealization, x: &[C64; 3]) -> [[C64; 3]; 3] {
    let [t0, tr, k] = *x;
    let v0 = k + f.a(t0);
    let vr = k + f.a(tr);
    let z = C64::new(0.0, 0.0);
    [
        [v0 * f.da(t0), z, v0],
        [-v0, vr, tr - t0],
        [z, (-k + p.pz) * f.da(tr), -vr],
    ]
}

pub(crate) fn norm3(r: &[C64; 3]) -> f64 {
    (r[0].norm_sqr() + r[1].norm_sqr() + r[2].norm_sqr()).sqrt()
}

/// Gaussian elimination with partial pivoting.
pub(crate) fn solve3(m: [[C64; 3]; 3], b: [C64; 3]) -> Option<[C64; 3]> {
    let mut a = m;
    let mut y = b;
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))?;
        if a[piv][col].norm() == 0.0 || !a[piv][col].norm().is_finite() {
            return None;
        }
        a.swap(col, piv);
        y.swap(col, piv);
        for row in col + 1..3 {
            let fac = a[row][col] / a[col][col];
            for c in col..3 {
                let v = a[col][c];
                a[row][c] -= fac * v;
            }
            let v = y[col];
            y[row] -= fac * v;
        }
    }
    let mut x = [C64::new(0.0, 0.0); 3];
    for row in (0..3).rev() {
        let mut s = y[row];
        for c in row + 1..3 {
            s -= a[row][c] * x[c];
        }
        x[row] = s / a[row][row];
    }
    x.iter().all(|v| v.re.is_finite() && v.im.is_finite()).then_some(x)
}

pub const NEWTON_CAP: usize = 200;
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Damped Newton iteration; the step is halved while the residual grows.
pub(crate) fn newton(
    p: Momentum,
    f: &FieldRealization,
    ip: f64,
    start: [C64; 3],
    cap: usize,
) -> Option<[C64; 3]> {
    let mut x = start;
    let mut r = residual(p, f, ip, &x);
    let mut nr = norm3(&r);
    for _ in 0..cap {
        if nr < 1e-13 {
            break;
        }
        let dx = solve3(jacobian(p, f, &x), [-r[0], -r[1], -r[2]])?;
        let mut lam = 1.0;
        let (xn, rn, nn) = loop {
            let xn = [x[0] + dx[0] * lam, x[1] + dx[1] * lam, x[2] + dx[2] * lam];
            let rn = residual(p, f, ip, &xn);
            let nn = norm3(&rn);
            if nn < nr || lam < 1e-6 {
                break (xn, rn, nn);
            }
            lam *= 0.5;
        };
        if !(nn < nr) {
            break;
        }
        let step = norm3(&[xn[0] - x[0], xn[1] - x[1], xn[2] - x[2]]);
        x = xn;
        r = rn;
        nr = nn;
        if step < 1e-14 * (1.0 + x[1].norm()) {
            break;
        }
    }
    (nr < RESIDUAL_TOL && nr.is_finite()).then_some(x)
}

/// A real classical trajectory born at rest (drift −A(t0)) that revisits the core.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalSeed {
    pub t0: f64,
    pub tr: f64,
    pub k: f64,
}

pub const SEED_PHASES: usize = 64;
const SCAN_STEPS: usize = 384;
const RETURN_HORIZON: f64 = 1.5;

fn excursion(f: &FieldRealization, t0: f64, k: f64, t: f64) -> f64 {
    k * (t - t0) + (f.int_a(C64::new(t, 0.0)) - f.int_a(C64::new(t0, 0.0))).re
}

/// Returns of real trajectories launched at 64 evenly spaced phases,
/// followed for up to one and a half cycles.
pub fn classical_return_seeds(f: &FieldRealization) -> Vec<ClassicalSeed> {
    let mut out = Vec::new();
    if f.e0 <= 0.0 {
        return out;
    }
    let period = f.period();
    let dt = RETURN_HORIZON * period / SCAN_STEPS as f64;
    for j in 0..SEED_PHASES {
        let t0 = f.window.0 + (j as f64 + 0.5) / SEED_PHASES as f64 * period;
        let k = -f.a(C64::new(t0, 0.0)).re;
        let mut prev_t = t0 + dt;
        let mut prev_x = excursion(f, t0, k, prev_t);
        for s in 2..=SCAN_STEPS {
            let t = t0 + dt * s as f64;
            let x = excursion(f, t0, k, t);
            if prev_x == 0.0 || prev_x * x < 0.0 {
                let (mut lo, mut hi) = (prev_t, t);
                let mut xlo = prev_x;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let xm = excursion(f, t0, k, mid);
                    if xlo * xm <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        xlo = xm;
                    }
                    if hi - lo < 1e-12 * period {
                        break;
                    }
                }
                out.push(ClassicalSeed { t0, tr: 0.5 * (lo + hi), k });
            }
            prev_t = t;
            prev_x = x;
        }
    }
    out
}

/// Outcome of a seeded rescattering solve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RescatteringSolve {
    pub saddles: Vec<RescatteringSaddle>,
    /// Seeds whose Newton iteration did not converge.
    pub dropped_seeds: usize,
}

// Shortest accepted excursion, as a fraction of the period; rejects the
// trivial root t_r = t₀ that reproduces the direct saddle.
const MIN_EXCURSION: f64 = 0.05;
// Slack on the tunnelling floor below, for roundoff in the action.
const FLOOR_SLACK: f64 = 0.05;

/// Smallest tunnelling exponent of the field: Im S of the direct path
/// with zero final momentum. No rescattered path can decay less.
pub fn tunnelling_floor(f: &FieldRealization, ip: f64) -> f64 {
    let p0 = Momentum::new(0.0, 0.0);
    direct_saddles(p0, f, ip)
        .into_iter()
        .map(|t| super::action(p0, t, f, ip).im)
        .fold(f64::INFINITY, f64::min)
}

/// Retention test; `margin` widens the ionization window (radians of phase).
///
/// Besides the window and causality checks this drops the trivial root
/// and saddles that sit past a Stokes line, recognisable by an action
/// that decays less than tunnelling itself allows.
pub(crate) fn retained(
    p: Momentum,
    s: &RescatteringSaddle,
    f: &FieldRealization,
    ip: f64,
    floor: f64,
    margin: f64,
) -> bool {
    let ph = f.phase(s.t0).re;
    s.t0.im > 0.0
        && ph >= -margin
        && ph < 2.0 * PI + margin
        && s.tr.re - s.t0.re > MIN_EXCURSION * f.period()
        && super::rescattering_action(p, s, f, ip).im >= floor - FLOOR_SLACK
}

pub(crate) fn same_saddle(a: &RescatteringSaddle, b: &RescatteringSaddle) -> bool {
    (a.t0 - b.t0).norm() < 1e-6 && (a.tr - b.tr).norm() < 1e-6 && (a.k - b.k).norm() < 1e-6
}

pub(crate) fn sort_saddles(v: &mut [RescatteringSaddle]) {
    v.sort_by(|a, b| {
        a.t0.re
            .total_cmp(&b.t0.re)
            .then(a.tr.re.total_cmp(&b.tr.re))
            .then(a.k.re.total_cmp(&b.k.re))
    });
}

pub(crate) fn push_unique(out: &mut Vec<RescatteringSaddle>, s: RescatteringSaddle) {
    if !out.iter().any(|u| same_saddle(u, &s)) {
        out.push(s);
    }
}

// Imaginary phase given to the seed's ionization time before iterating.
const SEED_NUDGE: f64 = 0.05;

pub(crate) fn solve_from_seeds(
    p: Momentum,
    f: &FieldRealization,
    ip: f64,
    seeds: &[ClassicalSeed],
    margin: f64,
) -> RescatteringSolve {
    let mut out = RescatteringSolve::default();
    let floor = tunnelling_floor(f, ip);
    for s in seeds {
        let start = [
            C64::new(s.t0, SEED_NUDGE / f.omega),
            C64::new(s.tr, 0.0),
            C64::new(s.k, 0.0),
        ];
        match newton(p, f, ip, start, NEWTON_CAP) {
            Some(x) => {
                let sd = RescatteringSaddle::from_array(x);
                if retained(p, &sd, f, ip, floor, margin) {
                    push_unique(&mut out.saddles, sd);
                }
            }
            None => out.dropped_seeds += 1,
        }
    }
    sort_saddles(&mut out.saddles);
    out
}

/// Rescattering saddles with Im t₀ > 0 and Re t₀ inside the window.
pub fn rescattering_saddles(p: Momentum, f: &FieldRealization, ip: f64) -> RescatteringSolve {
    let seeds = classical_return_seeds(f);
    solve_from_seeds(p, f, ip, &seeds, 0.0)
}

/// Follow one saddle to a new field by Newton from the rescaled old solution.
pub(crate) fn continue_saddle(
    p: Momentum,
    from: &FieldRealization,
    to: &FieldRealization,
    ip: f64,
    s: &RescatteringSaddle,
    depth: u32,
) -> Option<RescatteringSaddle> {
    let shift = (from.cep - to.cep) / to.omega;
    let scale = if from.e0 > 0.0 { to.e0 / from.e0 } else { 1.0 };
    let pred = [s.t0 + shift, s.tr + shift, s.k * scale];
    if let Some(x) = newton(p, to, ip, pred, 40) {
        let dphase = ((x[0] - pred[0]).norm() + (x[1] - pred[1]).norm()) * to.omega;
        let dk = (x[2] - pred[2]).norm() / to.a0().max(1e-300);
        if dphase < 0.2 && dk < 0.2 {
            return Some(RescatteringSaddle::from_array(x));
        }
    }
    if depth == 0 {
        return None;
    }
    let mid = FieldRealization::new(0.5 * (from.e0 + to.e0), to.omega, 0.5 * (from.cep + to.cep)).ok()?;
    let half = continue_saddle(p, from, &mid, ip, s, depth - 1)?;
    continue_saddle(p, &mid, to, ip, &half, depth - 1)
}
