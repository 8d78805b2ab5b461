#![allow(dead_code)]

use num_complex::Complex64 as C64;

/// Photon-number moments of D(α)S(ξ)|0⟩ built by exponentiating the
/// generators in a truncated Fock basis.
pub fn fock_moments(alpha: C64, r: f64, theta: f64, nmax: usize) -> (f64, f64) {
    let n = nmax + 1;
    let sq: Vec<f64> = (0..=n + 2).map(|k| (k as f64).sqrt()).collect();
    let apply = |v: &[C64], gen: &dyn Fn(&[C64], &mut [C64])| {
        let mut out = vec![C64::new(0.0, 0.0); n];
        gen(v, &mut out);
        out
    };
    let expm = |v0: Vec<C64>, gen: &dyn Fn(&[C64], &mut [C64]), norm: f64| {
        let steps = (norm / 0.25).ceil().max(1.0) as usize;
        let scale = 1.0 / steps as f64;
        let mut v = v0;
        for _ in 0..steps {
            let mut term = v.clone();
            let mut acc = v.clone();
            for k in 1..40 {
                let g = apply(&term, gen);
                term = g.iter().map(|x| x * (scale / k as f64)).collect();
                for (a, t) in acc.iter_mut().zip(&term) {
                    *a += t;
                }
            }
            v = acc;
        }
        v
    };
    let xi = C64::from_polar(r, theta);
    // ½(ξ* a² − ξ a†²)
    let squeeze = |v: &[C64], out: &mut [C64]| {
        for m in 0..n {
            if m + 2 < n {
                out[m] += xi.conj() * 0.5 * sq[m + 1] * sq[m + 2] * v[m + 2];
            }
            if m >= 2 {
                out[m] -= xi * 0.5 * sq[m] * sq[m - 1] * v[m - 2];
            }
        }
    };
    // α a† − α* a
    let displace = |v: &[C64], out: &mut [C64]| {
        for m in 0..n {
            if m >= 1 {
                out[m] += alpha * sq[m] * v[m - 1];
            }
            if m + 1 < n {
                out[m] -= alpha.conj() * sq[m + 1] * v[m + 1];
            }
        }
    };
    let mut vac = vec![C64::new(0.0, 0.0); n];
    vac[0] = C64::new(1.0, 0.0);
    let s = expm(vac, &squeeze, r * n as f64);
    let psi = expm(s, &displace, 2.0 * alpha.norm() * (n as f64).sqrt());
    let (mut m1, mut m2) = (0.0, 0.0);
    for (k, c) in psi.iter().enumerate() {
        let p = c.norm_sqr();
        m1 += k as f64 * p;
        m2 += (k * k) as f64 * p;
    }
    (m1, m2 - m1 * m1)
}
