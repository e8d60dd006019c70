//! Slow, independent reference computations for testing.
//!
//! Nothing here reuses the rescaling machinery of [`crate::legendre`]: the
//! Legendre recurrence is rerun in [`WideFloat`] arithmetic, whose exponent
//! never overflows, and synthesis is the literal double sum over `(l, m)`.

mod wide;

pub use wide::WideFloat;

use std::f64::consts::PI;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{RingDescriptor, RingGrid};
use crate::ringfft::SkyMap;
use crate::synthesis::AlmSet;

/// Largest band limit accepted by [`direct_synthesis`].
pub const DIRECT_SYNTHESIS_MAX_LMAX: usize = 64;

fn wf(x: f64) -> WideFloat {
    WideFloat::from_f64(x)
}

/// `sqrt((2m+1)!/4π) / (2^m m!)` from the factorials themselves.
pub fn mu_direct(m: usize) -> WideFloat {
    let mut odd_fact = wf(1.0);
    for k in 1..=(2 * m + 1) {
        odd_fact = odd_fact * wf(k as f64);
    }
    let mut m_fact = wf(1.0);
    for k in 1..=m {
        m_fact = m_fact * wf(k as f64);
    }
    let two_m = WideFloat::from_parts(1.0, m as i64);
    (odd_fact / wf(4.0 * PI)).sqrt() / (two_m * m_fact)
}

/// `P_lm(cos θ)` for `l = m..=lmax` by the plain recurrence in wide
/// arithmetic.
pub fn direct_plm_column(m: usize, lmax: usize, theta: f64) -> Vec<WideFloat> {
    assert!(m <= lmax, "direct_plm_column requires m <= lmax");
    let x = theta.cos();
    let s = theta.sin();
    let coef = |l: usize| -> f64 {
        let (l, m) = (l as f64, m as f64);
        ((4.0 * l * l - 1.0) / (l * l - m * m)).sqrt()
    };
    let mut out = Vec::with_capacity(lmax - m + 1);
    let p_mm = mu_direct(m) * wf(s).powi(m as u32);
    out.push(p_mm);
    if lmax == m {
        return out;
    }
    let wx = wf(x);
    let mut prev = p_mm;
    let mut cur = wf(coef(m + 1)) * wx * p_mm;
    out.push(cur);
    for l in m + 2..=lmax {
        let next = wf(coef(l)) * (wx * cur - prev / wf(coef(l - 1)));
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}

pub fn direct_plm(l: usize, m: usize, theta: f64) -> WideFloat {
    direct_plm_column(m, l, theta)[l - m]
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Analytic normalized `P_lm` for `l ≤ 4`, without the Condon–Shortley phase.
pub fn closed_form_plm(l: usize, m: usize, theta: f64) -> Result<f64> {
    if l > 4 {
        return Err(Error::UnsupportedDegree { l });
    }
    if m > l {
        return Err(Error::InvalidIndex { l, m });
    }
    let x = theta.cos();
    let s = theta.sin();
    // Unnormalized P_l^m(x) (1−x²)^{-m/2}-free polynomials times s^m.
    let poly = match (l, m) {
        (0, 0) => 1.0,
        (1, 0) => x,
        (1, 1) => s,
        (2, 0) => 0.5 * (3.0 * x * x - 1.0),
        (2, 1) => 3.0 * x * s,
        (2, 2) => 3.0 * s * s,
        (3, 0) => 0.5 * (5.0 * x.powi(3) - 3.0 * x),
        (3, 1) => 1.5 * (5.0 * x * x - 1.0) * s,
        (3, 2) => 15.0 * x * s * s,
        (3, 3) => 15.0 * s.powi(3),
        (4, 0) => (35.0 * x.powi(4) - 30.0 * x * x + 3.0) / 8.0,
        (4, 1) => 2.5 * (7.0 * x.powi(3) - 3.0 * x) * s,
        (4, 2) => 7.5 * (7.0 * x * x - 1.0) * s * s,
        (4, 3) => 105.0 * x * s.powi(3),
        (4, 4) => 105.0 * s.powi(4),
        _ => unreachable!(),
    };
    let norm = ((2 * l + 1) as f64 / (4.0 * PI) * factorial(l - m) / factorial(l + m)).sqrt();
    Ok(norm * poly)
}

/// `Σ_{m=−mmax}^{mmax} Δ_m e^{imφ_j}` at each sample of `ring`, summed
/// directly.
pub fn direct_ring_sum(delta_row: &[Complex<f64>], ring: &RingDescriptor<f64>) -> Vec<f64> {
    (0..ring.n_phi)
        .map(|j| {
            let phi = ring.phi_0 + 2.0 * PI * j as f64 / ring.n_phi as f64;
            let mut acc = Complex::new(0.0, 0.0);
            for (m, &d) in delta_row.iter().enumerate() {
                let e = Complex::from_polar(1.0, m as f64 * phi);
                acc += d * e;
                if m > 0 {
                    acc += d.conj() * e.conj();
                }
            }
            acc.re
        })
        .collect()
}

/// `Σ_b bins[b] e^{+2πi b j / n}` by the O(n²) definition.
pub fn naive_backward_dft(bins: &[Complex<f64>]) -> Vec<Complex<f64>> {
    let n = bins.len();
    (0..n)
        .map(|j| {
            bins.iter()
                .enumerate()
                .map(|(b, &v)| v * Complex::from_polar(1.0, 2.0 * PI * ((b * j) % n) as f64 / n as f64))
                .sum()
        })
        .collect()
}

/// The map `s(θ, φ) = Σ_l Σ_{m=−l}^{l} a_lm Y_lm(θ, φ)` by direct summation
/// at every pixel, negative orders from `a_{l,−m} Y_{l,−m} = a_lm† P_lm e^{−imφ}`.
pub fn direct_synthesis(alm: &AlmSet<f64>, grid: &RingGrid<f64>) -> Result<SkyMap<f64>> {
    if alm.lmax() > DIRECT_SYNTHESIS_MAX_LMAX {
        return Err(Error::TooLarge { lmax: alm.lmax(), limit: DIRECT_SYNTHESIS_MAX_LMAX });
    }
    let lmax = alm.lmax();
    let mut values = Vec::with_capacity(grid.n_rings());
    for ring in grid.rings() {
        let plm: Vec<Vec<f64>> = (0..=alm.mmax())
            .map(|m| direct_plm_column(m, lmax, ring.theta).iter().map(|p| p.to_f64()).collect())
            .collect();
        let samples = (0..ring.n_phi)
            .map(|j| {
                let phi = ring.phi_0 + 2.0 * PI * j as f64 / ring.n_phi as f64;
                let mut acc = Complex::new(0.0, 0.0);
                for (l, m, a) in alm.iter() {
                    let p = plm[m][l - m];
                    let e = Complex::from_polar(1.0, m as f64 * phi);
                    acc += a * p * e;
                    if m > 0 {
                        acc += a.conj() * p * e.conj();
                    }
                }
                acc.re
            })
            .collect();
        values.push(samples);
    }
    Ok(SkyMap { grid: grid.clone(), values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_ecp_grid;

    #[test]
    fn direct_plm_examples() {
        assert!((direct_plm(0, 0, 0.3).to_f64() - 0.282094791773878).abs() < 1e-15);
        assert!((direct_plm(1, 1, PI / 2.0).to_f64() - 0.345494149471335).abs() < 1e-15);
        assert!((direct_plm(2, 0, 0.5f64.acos()).to_f64() + 0.0788479).abs() < 1e-7);
    }

    #[test]
    fn closed_form_examples() {
        assert!((closed_form_plm(0, 0, 1.0).unwrap() - 0.2820947918).abs() < 1e-10);
        assert!((closed_form_plm(1, 0, 1e-9).unwrap() - 0.4886025).abs() < 1e-7);
        assert!((closed_form_plm(1, 1, PI / 6.0).unwrap() - 0.1727471).abs() < 1e-7);
        assert_eq!(closed_form_plm(5, 0, 1.0), Err(Error::UnsupportedDegree { l: 5 }));
    }

    #[test]
    fn recurrence_agrees_with_closed_forms() {
        for i in 0..50 {
            let theta = 0.02 + (PI - 0.04) * i as f64 / 49.0;
            for m in 0..=4 {
                let col = direct_plm_column(m, 4, theta);
                for l in m..=4 {
                    let want = closed_form_plm(l, m, theta).unwrap();
                    assert!((col[l - m].to_f64() - want).abs() < 1e-13, "l={l} m={m} θ={theta}");
                }
            }
        }
    }

    #[test]
    fn mu_direct_matches_ratio_form() {
        let mut mu = (1.0 / (4.0 * PI)).sqrt();
        for m in 0..200 {
            if m > 0 {
                mu *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
            }
            assert!((mu_direct(m).to_f64() / mu - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn direct_synthesis_examples() {
        let mut alm = AlmSet::new(0, 0, true).unwrap();
        alm.set(0, 0, Complex::new((4.0 * PI).sqrt(), 0.0)).unwrap();
        let map = direct_synthesis(&alm, &make_ecp_grid(0)).unwrap();
        assert!(map.values.iter().flatten().all(|v| (v - 1.0).abs() < 1e-15));

        let zero = AlmSet::new(3, 3, true).unwrap();
        let map = direct_synthesis(&zero, &make_ecp_grid(3)).unwrap();
        assert!(map.values.iter().flatten().all(|&v| v == 0.0));

        let mut alm = AlmSet::new(1, 1, true).unwrap();
        alm.set(1, 1, Complex::new(1.0, 0.0)).unwrap();
        let eq = crate::grid::make_custom_grid(&[RingDescriptor::new(PI / 2.0, 4, 0.0)]).unwrap();
        let map = direct_synthesis(&alm, &eq).unwrap();
        assert!((map.values[0][0] - 0.6909883).abs() < 1e-7);

        let big = AlmSet::new(65, 0, true).unwrap();
        assert!(matches!(direct_synthesis(&big, &make_ecp_grid(1)), Err(Error::TooLarge { .. })));
    }
}
