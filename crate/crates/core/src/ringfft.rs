//! Step 2: per-ring Fourier synthesis `s(θ_r, φ_j) = Σ_m Δ_m(θ_r) e^{imφ_j}`.
//!
//! Orders beyond the ring's Nyquist range alias onto bin `m mod n_phi`
//! (`e^{imφ_j} = e^{imφ_0} e^{2πi (m mod n) j / n}`) and are co-added there;
//! bins with no order are zero. The transform is an unnormalized backward
//! DFT with kernel `e^{+2πi b j / n}`.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{RingDescriptor, RingGrid};
use crate::scalar::Real;
use crate::synthesis::{delta_negative_m, DeltaMatrix};

/// Real samples on every ring of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SkyMap<T> {
    pub grid: RingGrid<T>,
    pub values: Vec<Vec<T>>,
}

impl<T: Real> SkyMap<T> {
    pub fn zeros(grid: RingGrid<T>) -> Self {
        let values = grid.rings().iter().map(|r| vec![T::zero(); r.n_phi]).collect();
        Self { grid, values }
    }

    pub fn min_max(&self) -> Option<(T, T)> {
        self.values.iter().flatten().fold(None, |acc, &v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().flatten().fold(T::zero(), |a, v| a.max(v.abs()))
    }
}

/// Fourier bins of one ring.
#[derive(Debug, Clone, PartialEq)]
pub struct RingSpectrum<T> {
    pub bins: Vec<Complex<T>>,
}

/// Folds `Δ_{−mmax..mmax}` onto the `n_phi` bins of `ring`, with the phase
/// offset of the first sample applied.
pub fn fold_modes<T: Real>(delta_row: &[Complex<T>], ring: &RingDescriptor<T>) -> RingSpectrum<T> {
    let n = ring.n_phi;
    let mut bins = vec![Complex::default(); n];
    for (m, &d) in delta_row.iter().enumerate() {
        let angle = T::lit(m as f64) * ring.phi_0;
        let phase = Complex::new(angle.cos(), angle.sin());
        bins[m % n] += d * phase;
        if m > 0 {
            bins[(n - m % n) % n] += delta_negative_m(d) * phase.conj();
        }
    }
    RingSpectrum { bins }
}

fn residue_bound<T: Real>(max_re: T) -> T {
    T::lit(1e-11).max(T::lit(1e4) * T::epsilon()) * (T::one() + max_re)
}

/// FFT plans keyed by ring length.
pub struct RingSynthesizer<T: Real> {
    plans: HashMap<usize, Arc<dyn Fft<T>>>,
}

impl<T: Real> RingSynthesizer<T> {
    pub fn new(lengths: impl IntoIterator<Item = usize>) -> Self {
        let mut planner = FftPlanner::new();
        let plans = lengths.into_iter().map(|n| (n, planner.plan_fft_inverse(n))).collect();
        Self { plans }
    }

    pub fn for_grid(grid: &RingGrid<T>) -> Self {
        Self::new(grid.rings().iter().map(|r| r.n_phi))
    }

    /// Real part of the backward transform, after checking the imaginary
    /// residue is at rounding level.
    pub fn synthesize(&self, spec: &RingSpectrum<T>) -> Result<Vec<T>> {
        let n = spec.bins.len();
        let plan = self
            .plans
            .get(&n)
            .ok_or_else(|| Error::DimensionMismatch(format!("no FFT plan for length {n}")))?;
        let mut buf = spec.bins.clone();
        plan.process(&mut buf);
        let max_re = buf.iter().fold(T::zero(), |a, v| a.max(v.re.abs()));
        let residue = buf.iter().fold(T::zero(), |a, v| a.max(v.im.abs()));
        let bound = residue_bound(max_re);
        let real = residue <= bound;
        if !real {
            return Err(Error::NonRealOutput { residue: residue.as_f64(), bound: bound.as_f64() });
        }
        Ok(buf.into_iter().map(|v| v.re).collect())
    }

    pub fn ring(&self, delta: &DeltaMatrix<T>, ring: &RingDescriptor<T>) -> Result<Vec<T>> {
        self.synthesize(&fold_modes(&delta.ring_row(ring.ring_index), ring))
    }
}

pub fn synthesize_ring<T: Real>(spec: &RingSpectrum<T>) -> Result<Vec<T>> {
    RingSynthesizer::new([spec.bins.len()]).synthesize(spec)
}

fn check_dims<T: Real>(delta: &DeltaMatrix<T>, grid: &RingGrid<T>) -> Result<()> {
    if delta.n_rings() != grid.n_rings() {
        return Err(Error::DimensionMismatch(format!(
            "delta has {} rings, grid has {}",
            delta.n_rings(),
            grid.n_rings()
        )));
    }
    Ok(())
}

pub fn synthesize_map<T: Real>(delta: &DeltaMatrix<T>, grid: &RingGrid<T>) -> Result<SkyMap<T>> {
    check_dims(delta, grid)?;
    let synth = RingSynthesizer::for_grid(grid);
    let values = grid.rings().iter().map(|r| synth.ring(delta, r)).collect::<Result<_>>()?;
    Ok(SkyMap { grid: grid.clone(), values })
}

/// Ring-parallel [`synthesize_map`] on `workers` threads.
pub fn synthesize_map_par<T: Real>(
    delta: &DeltaMatrix<T>,
    grid: &RingGrid<T>,
    workers: usize,
) -> Result<SkyMap<T>> {
    if workers <= 1 {
        return synthesize_map(delta, grid);
    }
    check_dims(delta, grid)?;
    let synth = RingSynthesizer::for_grid(grid);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
    let values =
        pool.install(|| grid.rings().par_iter().map(|r| synth.ring(delta, r)).collect::<Result<Vec<_>>>())?;
    Ok(SkyMap { grid: grid.clone(), values })
}
