use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::saddles::{
    direct_saddles, jacobian, rescattering_saddles, solve3, Momentum, RescatteringSaddle,
};
use crate::field_model::FieldRealization;

/// Which trajectory families enter M(p) and with what weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SfaOptions {
    pub direct: bool,
    pub rescattering: bool,
    pub backscattering: bool,
    pub w_resc: f64,
}

impl Default for SfaOptions {
    fn default() -> Self {
        Self {
            direct: true,
            rescattering: true,
            backscattering: false,
            w_resc: 1.0,
        }
    }
}

impl SfaOptions {
    pub fn direct_only() -> Self {
        Self { rescattering: false, ..Self::default() }
    }

    pub(crate) fn uses(&self, s: &RescatteringSaddle, p: Momentum, f: &FieldRealization) -> bool {
        self.rescattering && (self.backscattering || s.is_forward(p, f))
    }
}

/// Contact interaction strength (scattering length of one bohr).
pub const CONTACT_COUPLING: f64 = -2.0 * PI;

fn phi_raw(pz: C64, pperp: f64, t: C64, f: &FieldRealization, ip: f64) -> C64 {
    (pz * pz * 0.5 + 0.5 * pperp * pperp + ip) * t + pz * f.int_a(t) + f.int_a2(t) * 0.5
}

fn phi(pz: C64, pperp: f64, t: C64, f: &FieldRealization, ip: f64) -> C64 {
    phi_raw(pz, pperp, t, f, ip) - phi_raw(pz, pperp, C64::new(f.window.0, 0.0), f, ip)
}

/// Semiclassical action of a direct path, zero at the window start.
pub fn action(p: Momentum, t: C64, f: &FieldRealization, ip: f64) -> C64 {
    phi(C64::new(p.pz, 0.0), p.pperp, t, f, ip)
}

/// Action accumulated along a rescattered path.
pub fn rescattering_action(p: Momentum, s: &RescatteringSaddle, f: &FieldRealization, ip: f64) -> C64 {
    phi(C64::new(p.pz, 0.0), p.pperp, s.tr, f, ip) - phi(s.k, 0.0, s.tr, f, ip) + phi(s.k, 0.0, s.t0, f, ip)
}

/// Second derivative of the direct action at `t`.
pub fn direct_curvature(p: Momentum, t: C64, f: &FieldRealization) -> C64 {
    (f.a(t) + p.pz) * f.da(t)
}

/// Contribution of one direct saddle. The 1s form factor has a pole at
/// the saddle; integrating through it leaves −1/S'' in place of the
/// Gaussian factor.
pub fn direct_term(p: Momentum, t: C64, f: &FieldRealization, ip: f64) -> C64 {
    -(C64::i() * action(p, t, f, ip)).exp() / direct_curvature(p, t, f)
}

/// Hessian of the rescattered action in (t₀, t_r, k).
pub fn rescattering_hessian(p: Momentum, s: &RescatteringSaddle, f: &FieldRealization) -> [[C64; 3]; 3] {
    let v0 = s.k + f.a(s.t0);
    let vr = s.k + f.a(s.tr);
    let z = C64::new(0.0, 0.0);
    [
        [v0 * f.da(s.t0), z, v0],
        [z, (-s.k + p.pz) * f.da(s.tr), -vr],
        [v0, -vr, -(s.tr - s.t0)],
    ]
}

fn det3(h: &[[C64; 3]; 3]) -> C64 {
    h[0][0] * (h[1][1] * h[2][2] - h[1][2] * h[2][1]) - h[0][1] * (h[1][0] * h[2][2] - h[1][2] * h[2][0])
        + h[0][2] * (h[1][0] * h[2][1] - h[1][1] * h[2][0])
}

/// Determinant of the (t_r, k) block after eliminating t₀.
fn schur(p: Momentum, s: &RescatteringSaddle, f: &FieldRealization) -> (C64, C64) {
    let h = rescattering_hessian(p, s, f);
    (det3(&h) / h[0][0], h[0][0])
}

/// Square root of the reduced determinant with the return velocity
/// factored out, so the principal branch only sees a factor near one.
fn schur_sqrt(d: C64, vr: C64) -> C64 {
    let rho = d / (-(vr * vr));
    -C64::i() * vr * rho.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescatteredTerm {
    pub value: C64,
    pub clamped: bool,
}

/// Contribution of one rescattered saddle.
///
/// Where two saddles coalesce the reduced determinant vanishes; its
/// magnitude is floored at the value reached one momentum cell (`cell`)
/// from the fold, estimated from the local slope of |D|². `cell = 0`
/// disables the floor.
pub fn rescattered_term(
    p: Momentum,
    s: &RescatteringSaddle,
    f: &FieldRealization,
    ip: f64,
    cell: f64,
) -> RescatteredTerm {
    let (d, h00) = schur(p, s, f);
    let tau = s.tr - s.t0;
    let vr = s.k + f.a(s.tr);
    let root = schur_sqrt(d, vr);
    let two_pi_i = C64::new(0.0, 2.0 * PI);
    let pref = -C64::i() * CONTACT_COUPLING / (2.0 * PI).powi(3) * two_pi_i * two_pi_i
        / root
        / (-tau)
        * (-1.0 / h00);
    let mut value = pref * (C64::i() * rescattering_action(p, s, f, ip)).exp();
    let mut clamped = false;
    if cell > 0.0 {
        let d_min = fold_floor(p, s, f, d, cell);
        let dn = d.norm();
        if d_min.is_finite() && dn < d_min {
            value *= (dn / d_min).sqrt();
            clamped = true;
        }
    }
    RescatteredTerm { value, clamped }
}

fn fold_floor(p: Momentum, s: &RescatteringSaddle, f: &FieldRealization, d: C64, cell: f64) -> f64 {
    // saddle tangent along p_z: only the third equation depends on p_z
    let x = [s.t0, s.tr, s.k];
    let pr = f.a(s.tr) + p.pz;
    let zero = C64::new(0.0, 0.0);
    let Some(dx) = solve3(jacobian(p, f, &x), [zero, zero, -pr]) else {
        return f64::INFINITY;
    };
    let h = 1e-6;
    let q = Momentum::new(p.pz + h, p.pperp);
    let moved = RescatteringSaddle {
        t0: s.t0 + dx[0] * h,
        tr: s.tr + dx[1] * h,
        k: s.k + dx[2] * h,
    };
    let (dq, _) = schur(q, &moved, f);
    let slope = (dq.norm_sqr() - d.norm_sqr()) / h;
    (slope.abs() * cell).sqrt()
}

/// M(p) together with bookkeeping about the saddles that built it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitude {
    pub value: C64,
    pub clamped: bool,
}

impl Amplitude {
    pub fn is_finite(&self) -> bool {
        self.value.re.is_finite() && self.value.im.is_finite()
    }
}

/// Sum the selected saddle contributions. Rescattered saddles are
/// assumed already filtered to the window.
pub fn amplitude_from_saddles(
    p: Momentum,
    f: &FieldRealization,
    ip: f64,
    direct: &[C64],
    rescattered: &[RescatteringSaddle],
    opts: &SfaOptions,
    cell: f64,
) -> Amplitude {
    let mut m = C64::new(0.0, 0.0);
    let mut clamped = false;
    if opts.direct {
        for &t in direct {
            m += direct_term(p, t, f, ip);
        }
    }
    for s in rescattered.iter().filter(|s| opts.uses(s, p, f)) {
        let term = rescattered_term(p, s, f, ip, cell);
        m += term.value * opts.w_resc;
        clamped |= term.clamped;
    }
    Amplitude { value: m, clamped }
}

pub fn transition_amplitude(p: Momentum, f: &FieldRealization, ip: f64, opts: &SfaOptions) -> Amplitude {
    let direct = direct_saddles(p, f, ip);
    let resc = if opts.rescattering {
        rescattering_saddles(p, f, ip).saddles
    } else {
        Vec::new()
    };
    amplitude_from_saddles(p, f, ip, &direct, &resc, opts, 0.0)
}
