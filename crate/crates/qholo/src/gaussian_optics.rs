//! Squeezed coherent states and their Gaussian Wigner functions.
//!
//! Quadratures follow X = (a + a†)/√2, so the vacuum has variance 1/2 in
//! each quadrature and a pure state has det(cov) = 1/4.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::field_model::{FieldConstants, FieldRealization};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezedState {
    pub alpha: C64,
    pub r: f64,
    pub theta: f64,
}

impl SqueezedState {
    pub fn new(alpha: C64, r: f64, theta: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) {
            return domain(format!("squeezing magnitude must be nonnegative, got {r}"));
        }
        if !(alpha.re.is_finite() && alpha.im.is_finite() && theta.is_finite()) {
            return domain("state parameters must be finite");
        }
        Ok(Self { alpha, r, theta: theta.rem_euclid(2.0 * PI) })
    }

    /// Squeezing along a signed axis: negative `r` squeezes the
    /// conjugate quadrature, which keeps a one-parameter family smooth
    /// through r = 0.
    pub fn signed(alpha: C64, r: f64, theta: f64) -> Result<Self> {
        if r < 0.0 {
            Self::new(alpha, -r, theta + PI)
        } else {
            Self::new(alpha, r, theta)
        }
    }

    pub fn coherent(alpha: C64) -> Self {
        Self { alpha, r: 0.0, theta: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WignerGaussian {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

impl WignerGaussian {
    pub fn det(&self) -> f64 {
        self.cov[0][0] * self.cov[1][1] - self.cov[0][1] * self.cov[1][0]
    }

    /// Eigenvalues (ascending) and the rotation angle of the first
    /// eigenvector from the X₁ axis.
    pub fn principal_axes(&self) -> ([f64; 2], f64) {
        let (a, b, c) = (self.cov[0][0], self.cov[1][1], self.cov[0][1]);
        let mid = 0.5 * (a + b);
        let rad = (0.25 * (a - b) * (a - b) + c * c).sqrt();
        // major axis angle, then rotate a quarter turn for the minor one
        let major = 0.5 * (2.0 * c).atan2(a - b);
        ([(mid - rad).max(0.0), mid + rad], major + 0.5 * PI)
    }

    /// Map a standard-normal pair onto this distribution.
    pub fn transform(&self, z: [f64; 2]) -> [f64; 2] {
        let ([l1, l2], ang) = self.principal_axes();
        let (s, c) = ang.sin_cos();
        let (u, v) = (l1.sqrt() * z[0], l2.sqrt() * z[1]);
        [self.mean[0] + c * u - s * v, self.mean[1] + s * u + c * v]
    }

    fn validate(&self) -> Result<()> {
        let ok = self.mean.iter().chain(self.cov.iter().flatten()).all(|x| x.is_finite());
        if !ok {
            return domain("Wigner parameters must be finite");
        }
        if (self.cov[0][1] - self.cov[1][0]).abs() > 1e-12 * (self.cov[0][0] + self.cov[1][1]).abs() {
            return domain("covariance must be symmetric");
        }
        if self.cov[0][0] < 0.0 || self.cov[1][1] < 0.0 || self.det() < -1e-15 {
            return domain("covariance must be positive semidefinite");
        }
        Ok(())
    }
}

pub fn wigner_of_state(s: &SqueezedState) -> WignerGaussian {
    let lo = 0.5 * (-2.0 * s.r).exp();
    let hi = 0.5 * (2.0 * s.r).exp();
    let (sn, cs) = (0.5 * s.theta).sin_cos();
    // minor axis u = (cs, sn), major axis v = (−sn, cs)
    let c11 = lo * cs * cs + hi * sn * sn;
    let c22 = lo * sn * sn + hi * cs * cs;
    let c12 = (lo - hi) * cs * sn;
    WignerGaussian {
        mean: [SQRT_2 * s.alpha.re, SQRT_2 * s.alpha.im],
        cov: [[c11, c12], [c12, c22]],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonStatistics {
    pub mean_n: f64,
    pub var_n: f64,
}

pub fn photon_statistics(s: &SqueezedState) -> PhotonStatistics {
    let (sh, ch) = (s.r.sinh(), s.r.cosh());
    let a = s.alpha;
    let mix = a * ch - a.conj() * C64::from_polar(1.0, s.theta) * sh;
    PhotonStatistics {
        mean_n: a.norm_sqr() + sh * sh,
        var_n: mix.norm_sqr() + 2.0 * sh * sh * ch * ch,
    }
}

/// The `index`-th draw of the stream keyed by `seed`.
pub fn sample_quadrature_at(w: &WignerGaussian, seed: u64, index: u64) -> [f64; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let z0: f64 = rng.sample(StandardNormal);
    let z1: f64 = rng.sample(StandardNormal);
    w.transform([z0, z1])
}

pub fn sample_quadratures(w: &WignerGaussian, seed: u64, count: usize) -> Result<Vec<[f64; 2]>> {
    if count == 0 {
        return domain("sample count must be at least 1");
    }
    w.validate()?;
    Ok((0..count as u64).map(|i| sample_quadrature_at(w, seed, i)).collect())
}

/// Gauss–Hermite rule for the weight e^{−x²}, nodes ascending.
pub fn hermite_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let pim4 = PI.powf(-0.25);
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    x.reverse();
    w.reverse();
    (x, w)
}

/// Tensor-product Gauss–Hermite nodes for the Gaussian `w`; weights sum to 1.
pub fn gauss_hermite_nodes(w: &WignerGaussian, order: usize) -> Result<Vec<([f64; 2], f64)>> {
    if !(1..=64).contains(&order) {
        return domain(format!("quadrature order must be in [1, 64], got {order}"));
    }
    w.validate()?;
    let (x, wt) = hermite_rule(order);
    let z: Vec<f64> = x.iter().map(|v| v * SQRT_2).collect();
    let norm = 1.0 / PI.sqrt();
    let wt: Vec<f64> = wt.iter().map(|v| v * norm).collect();
    let mut out = Vec::with_capacity(order * order);
    for i in 0..order {
        for j in 0..order {
            out.push((w.transform([z[i], z[j]]), wt[i] * wt[j]));
        }
    }
    Ok(out)
}

pub fn squeezing_to_db(r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return domain(format!("squeezing magnitude must be nonnegative, got {r}"));
    }
    Ok(10.0 * (2.0 * r).exp().log10())
}

/// Complex amplitude read from a quadrature pair.
pub fn amplitude_of(sample: [f64; 2]) -> C64 {
    C64::new(sample[0], sample[1]) * FRAC_1_SQRT_2
}

/// Classical field for one phase-space sample.
///
/// The amplitude scales with |α_sample|/|ᾱ| and, with `phase_coupling`,
/// the CEP follows arg α_sample − arg ᾱ.
pub fn realize_field(
    sample: [f64; 2],
    reference: &SqueezedState,
    constants: &FieldConstants,
    base_cep: f64,
    phase_coupling: bool,
) -> Result<FieldRealization> {
    let mean = wigner_of_state(reference).mean;
    let ref_norm = mean[0].hypot(mean[1]);
    if !(ref_norm > 0.0) {
        return domain("reference displacement must be nonzero");
    }
    let ratio = sample[0].hypot(sample[1]) / ref_norm;
    let cep = if phase_coupling {
        base_cep + (sample[1].atan2(sample[0]) - mean[1].atan2(mean[0]))
    } else {
        base_cep
    };
    FieldRealization::new(constants.e0 * ratio, constants.omega, cep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_small_orders() {
        let (x, w) = hermite_rule(1);
        assert!(x[0].abs() < 1e-14);
        assert!((w[0] - PI.sqrt()).abs() < 1e-14);
        let (x, w) = hermite_rule(2);
        assert!((x[1] - FRAC_1_SQRT_2).abs() < 1e-14);
        assert!((w[0] - 0.5 * PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn hermite_nodes_ascending_up_to_64() {
        for n in 1..=64 {
            let (x, w) = hermite_rule(n);
            assert!(x.windows(2).all(|p| p[0] < p[1]), "order {n}");
            let s: f64 = w.iter().sum();
            assert!((s - PI.sqrt()).abs() < 1e-12, "order {n}: {s}");
        }
    }

    #[test]
    fn principal_axes_of_rotated_state() {
        let s = SqueezedState::new(C64::new(2.0, 0.0), 0.8, 1.0).unwrap();
        let w = wigner_of_state(&s);
        let ([l1, l2], ang) = w.principal_axes();
        assert!((l1 - 0.5 * (-1.6f64).exp()).abs() < 1e-14);
        assert!((l2 - 0.5 * 1.6f64.exp()).abs() < 1e-14);
        assert!(((ang - 0.5).rem_euclid(PI)).min(PI - (ang - 0.5).rem_euclid(PI)) < 1e-12);
    }

    #[test]
    fn db_rejects_negative() {
        assert!(squeezing_to_db(-0.1).is_err());
    }
}
