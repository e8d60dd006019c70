//! Iso-latitude, equator-symmetric ring grids.
//!
//! A grid is an ordered list of rings of constant colatitude, each sampled
//! uniformly in azimuth. Every ring has a mirror partner at `π − θ`; the
//! mirror of a southern ring is stored as the exact reflection of its
//! northern partner (`cos θ` negated, `sin θ` shared) so the parity identity
//! `P_lm(−x) = (−1)^{l+m} P_lm(x)` holds bit for bit between the two.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Mirror partners must satisfy `|θ + θ' − π| < PAIR_TOLERANCE` (widened to a
/// few ulps of π for `f32`).
pub const PAIR_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingDescriptor<T> {
    pub ring_index: usize,
    pub theta: T,
    pub cos_theta: T,
    pub sin_theta: T,
    pub n_phi: usize,
    /// Azimuth of the first sample.
    pub phi_0: T,
    /// Index of the mirror ring across the equator (own index on the equator).
    pub pair_index: usize,
}

impl<T: Real> RingDescriptor<T> {
    /// Ring at colatitude `theta` with `cos`/`sin` derived from it. Index and
    /// pairing are filled in by grid validation.
    pub fn new(theta: T, n_phi: usize, phi_0: T) -> Self {
        Self {
            ring_index: 0,
            theta,
            cos_theta: theta.cos(),
            sin_theta: theta.sin(),
            n_phi,
            phi_0,
            pair_index: 0,
        }
    }

    /// Northern member of a pair (or an equatorial ring).
    #[inline]
    pub fn is_lead(&self) -> bool {
        self.ring_index <= self.pair_index
    }

    /// Azimuth of sample `j`.
    pub fn phi(&self, j: usize) -> T {
        self.phi_0 + T::lit(2.0 * std::f64::consts::PI * j as f64 / self.n_phi as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingGrid<T> {
    rings: Vec<RingDescriptor<T>>,
    lmax_hint: usize,
}

impl<T: Real> RingGrid<T> {
    pub fn n_rings(&self) -> usize {
        self.rings.len()
    }

    pub fn rings(&self) -> &[RingDescriptor<T>] {
        &self.rings
    }

    pub fn ring(&self, r: usize) -> &RingDescriptor<T> {
        &self.rings[r]
    }

    pub fn lmax_hint(&self) -> usize {
        self.lmax_hint
    }

    /// Indices of northern (lead) rings, in increasing θ.
    pub fn lead_rings(&self) -> Vec<usize> {
        self.rings.iter().filter(|r| r.is_lead()).map(|r| r.ring_index).collect()
    }

    pub fn max_n_phi(&self) -> usize {
        self.rings.iter().map(|r| r.n_phi).max().unwrap_or(0)
    }

    /// Pixel offset of the first sample of each ring, plus the total at the end.
    pub fn ring_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.rings.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for r in &self.rings {
            acc += r.n_phi;
            offsets.push(acc);
        }
        offsets
    }

    /// Text form: a `nrings N` header followed by one `theta n_phi phi_0`
    /// line per ring. Values are printed in shortest round-trip form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "nrings {}", self.rings.len()).unwrap();
        for r in &self.rings {
            writeln!(out, "{:e} {} {:e}", r.theta.as_f64(), r.n_phi, r.phi_0.as_f64()).unwrap();
        }
        out
    }

    /// Parses the text form produced by [`RingGrid::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::InvalidParams("empty grid description".into()))?;
        let n_rings = parse_header(header)?;
        let mut rings = Vec::with_capacity(n_rings);
        for (i, line) in lines.enumerate() {
            if i >= n_rings {
                return Err(Error::InvalidParams(format!(
                    "grid description has more than {n_rings} ring lines"
                )));
            }
            rings.push(parse_ring_line(line)?);
        }
        if rings.len() != n_rings {
            return Err(Error::InvalidParams(format!(
                "grid header announces {n_rings} rings, found {}",
                rings.len()
            )));
        }
        make_custom_grid(&rings)
    }
}

pub(crate) fn parse_header(line: &str) -> Result<usize> {
    let mut parts = line.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some("nrings"), Some(n), None) => {
            n.parse().map_err(|_| Error::InvalidParams(format!("bad ring count in `{line}`")))
        }
        _ => Err(Error::InvalidParams(format!("expected `nrings N`, got `{line}`"))),
    }
}

pub(crate) fn parse_ring_line<T: Real>(line: &str) -> Result<RingDescriptor<T>> {
    let bad = || Error::InvalidParams(format!("expected `theta n_phi phi_0`, got `{line}`"));
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let theta: f64 = parts[0].parse().map_err(|_| bad())?;
    let n_phi: usize = parts[1].parse().map_err(|_| bad())?;
    let phi_0: f64 = parts[2].parse().map_err(|_| bad())?;
    Ok(RingDescriptor::new(T::lit(theta), n_phi, T::lit(phi_0)))
}

/// Equidistant-colatitude grid for band limit `lmax`: `2(lmax+1)` rings at
/// `θ_t = π(t + ½)/n_rings`, each with `2lmax+2` samples starting at `φ = 0`.
pub fn make_ecp_grid<T: Real>(lmax: usize) -> RingGrid<T> {
    let n_rings = 2 * (lmax + 1);
    let n_phi = 2 * lmax + 2;
    let pi = T::PI();
    let mut rings = vec![RingDescriptor::new(T::zero(), n_phi, T::zero()); n_rings];
    for t in 0..n_rings / 2 {
        let theta = T::lit(std::f64::consts::PI * (t as f64 + 0.5) / n_rings as f64);
        let north = RingDescriptor::new(theta, n_phi, T::zero());
        let s = n_rings - 1 - t;
        rings[t] = RingDescriptor { ring_index: t, pair_index: s, ..north };
        rings[s] = RingDescriptor {
            ring_index: s,
            pair_index: t,
            theta: pi - theta,
            cos_theta: -north.cos_theta,
            ..north
        };
    }
    RingGrid { rings, lmax_hint: lmax }
}

/// Validates a list of rings and returns the grid. Ring and pair indices are
/// recomputed; southern rings are snapped onto the exact reflection of their
/// northern partner.
pub fn make_custom_grid<T: Real>(rings: &[RingDescriptor<T>]) -> Result<RingGrid<T>> {
    if rings.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for (i, r) in rings.iter().enumerate() {
        let off_pole = r.sin_theta > T::zero() && r.theta > T::zero() && r.theta < T::PI();
        if !off_pole {
            return Err(Error::PolarRing { index: i, theta: r.theta.as_f64() });
        }
        if r.n_phi == 0 {
            return Err(Error::EmptyRing { index: i });
        }
        if !r.phi_0.is_finite() {
            return Err(Error::InvalidParams(format!("ring {i} has non-finite phi_0")));
        }
        let increasing = i == 0 || r.theta > rings[i - 1].theta;
        if !increasing {
            return Err(Error::NonMonotoneTheta { index: i });
        }
    }

    let n = rings.len();
    let mut out: Vec<RingDescriptor<T>> = rings.to_vec();
    for (i, r) in out.iter_mut().enumerate() {
        r.ring_index = i;
        r.pair_index = n - 1 - i;
    }
    let tol = T::lit(PAIR_TOLERANCE).max(T::lit(4.0) * T::epsilon() * T::PI());
    for i in 0..n.div_ceil(2) {
        let j = n - 1 - i;
        let (ti, tj) = (out[i].theta, out[j].theta);
        if (ti + tj - T::PI()).abs() >= tol {
            let bad = if (ti - (T::PI() - tj)).abs() < tol { j } else { i };
            return Err(Error::AsymmetricGrid { index: bad, theta: out[bad].theta.as_f64() });
        }
        if i != j {
            let north = out[i];
            let south = &mut out[j];
            south.theta = T::PI() - north.theta;
            south.cos_theta = -north.cos_theta;
            south.sin_theta = north.sin_theta;
        }
    }
    let lmax_hint = (out.iter().map(|r| r.n_phi).max().unwrap_or(0) / 2).saturating_sub(1);
    Ok(RingGrid { rings: out, lmax_hint })
}

pub fn total_pixels<T: Real>(grid: &RingGrid<T>) -> usize {
    grid.rings.iter().map(|r| r.n_phi).sum()
}
