//! Step 1 of the synthesis: `Δ_m(θ_r) = Σ_l a_lm P_lm(cos θ_r)` for every
//! ring and order.
//!
//! Work is ring-parallel. For each order `m` the β coefficients are computed
//! once and shared; rings are grouped into tasks of
//! `ring_block × rings_per_task` rings, and each task walks the recurrence
//! for `ring_block` rings at a time while β and `a_lm` values are staged
//! through fixed-length segment buffers.
//!
//! Each `(r, m)` sum is kept as two partial sums, over even and odd `l + m`,
//! each accumulated in increasing `l`, and combined as `E + O` at the end.
//! The arithmetic for a given `(r, m)` therefore never depends on blocking,
//! worker count or which other orders are computed alongside it, and the
//! southern mirror of a ring (exactly negated `cos θ`) yields `E − O` bit for
//! bit.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::RingGrid;
use crate::legendre::{
    beta, build_rescale_table, compute_mu, first_step, log2_pmm, recur, renormalize, split_exponent, MuTable,
    RescaleTable, MAX_SCALE_INDEX,
};
use crate::scalar::Real;

/// Harmonic coefficients `a_lm`, `0 ≤ m ≤ mmax`, `m ≤ l ≤ lmax`, stored
/// m-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AlmSet<T> {
    lmax: usize,
    mmax: usize,
    real_field: bool,
    offsets: Vec<usize>,
    coeff: Vec<Complex<T>>,
}

impl<T: Real> AlmSet<T> {
    /// All-zero coefficient set.
    pub fn new(lmax: usize, mmax: usize, real_field: bool) -> Result<Self> {
        if mmax > lmax {
            return Err(Error::InvalidParams(format!("mmax={mmax} exceeds lmax={lmax}")));
        }
        let mut offsets = Vec::with_capacity(mmax + 2);
        let mut acc = 0;
        for m in 0..=mmax {
            offsets.push(acc);
            acc += lmax + 1 - m;
        }
        offsets.push(acc);
        Ok(Self { lmax, mmax, real_field, offsets, coeff: vec![Complex::default(); acc] })
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn mmax(&self) -> usize {
        self.mmax
    }

    pub fn real_field(&self) -> bool {
        self.real_field
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.coeff.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeff.is_empty()
    }

    fn index(&self, l: usize, m: usize) -> Result<usize> {
        if m > self.mmax || l < m || l > self.lmax {
            return Err(Error::InvalidIndex { l, m });
        }
        Ok(self.offsets[m] + (l - m))
    }

    pub fn get(&self, l: usize, m: usize) -> Result<Complex<T>> {
        Ok(self.coeff[self.index(l, m)?])
    }

    pub fn set(&mut self, l: usize, m: usize, value: Complex<T>) -> Result<()> {
        let i = self.index(l, m)?;
        if self.real_field && m == 0 && value.im != T::zero() {
            return Err(Error::ComplexZonal { l });
        }
        self.coeff[i] = value;
        Ok(())
    }

    /// Coefficients of order `m` for `l = m..=lmax`.
    pub fn column(&self, m: usize) -> &[Complex<T>] {
        &self.coeff[self.offsets[m]..self.offsets[m + 1]]
    }

    /// `(l, m, a_lm)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex<T>)> + '_ {
        (0..=self.mmax).flat_map(move |m| self.column(m).iter().enumerate().map(move |(i, &a)| (m + i, m, a)))
    }

    /// Real-field set with independent Gaussian coefficients of standard
    /// deviation `amplitude` in both parts (`Im a_l0 = 0`).
    ///
    /// Draws come from ChaCha8 seeded with `seed_from_u64(seed)` and
    /// `rand_distr::StandardNormal`, in storage order (m-major, increasing
    /// `l`), real part first; the imaginary draw is skipped for `m = 0`.
    pub fn gaussian(lmax: usize, mmax: usize, seed: u64, amplitude: f64) -> Result<Self> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut alm = Self::new(lmax, mmax, true)?;
        for m in 0..=mmax {
            for l in m..=lmax {
                let re: f64 = rng.sample(rand_distr::StandardNormal);
                let im: f64 = if m == 0 { 0.0 } else { rng.sample(rand_distr::StandardNormal) };
                let i = alm.offsets[m] + (l - m);
                // `+ 0.0` turns −0 into +0 when the amplitude is zero.
                alm.coeff[i] = Complex::new(T::lit(amplitude * re + 0.0), T::lit(amplitude * im + 0.0));
            }
        }
        Ok(alm)
    }

    /// `alpha·self + other`, for sets of equal shape.
    pub fn axpy(&self, alpha: T, other: &Self) -> Result<Self> {
        if self.lmax != other.lmax || self.mmax != other.mmax {
            return Err(Error::DimensionMismatch("alm shapes differ".into()));
        }
        let mut out = self.clone();
        out.real_field = self.real_field && other.real_field;
        for (o, b) in out.coeff.iter_mut().zip(&other.coeff) {
            *o = *o * alpha + *b;
        }
        Ok(out)
    }
}

/// `Δ_m(θ_r)` for `m = 0..=mmax`, stored m-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaMatrix<T> {
    n_rings: usize,
    mmax: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> DeltaMatrix<T> {
    pub fn zeros(n_rings: usize, mmax: usize) -> Self {
        Self { n_rings, mmax, data: vec![Complex::default(); n_rings * (mmax + 1)] }
    }

    pub fn n_rings(&self) -> usize {
        self.n_rings
    }

    pub fn mmax(&self) -> usize {
        self.mmax
    }

    #[inline]
    pub fn get(&self, ring: usize, m: usize) -> Complex<T> {
        self.data[m * self.n_rings + ring]
    }

    #[inline]
    pub fn set(&mut self, ring: usize, m: usize, v: Complex<T>) {
        self.data[m * self.n_rings + ring] = v;
    }

    /// `Δ_m` on every ring.
    pub fn column(&self, m: usize) -> &[Complex<T>] {
        &self.data[m * self.n_rings..(m + 1) * self.n_rings]
    }

    /// `Δ_0..Δ_mmax` on one ring.
    pub fn ring_row(&self, ring: usize) -> Vec<Complex<T>> {
        (0..=self.mmax).map(|m| self.get(ring, m)).collect()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, v| acc.max(v.norm()))
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }
}

/// `Δ_{−m} = Δ_m†` for real fields.
#[inline]
pub fn delta_negative_m<T: Real>(delta_m: Complex<T>) -> Complex<T> {
    delta_m.conj()
}

/// Scheduling and staging knobs. None of them changes the numerical output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockParams {
    /// Rings advanced together through one staged segment.
    pub ring_block: usize,
    pub beta_segment_len: usize,
    pub alm_segment_len: usize,
    /// Ring blocks handled back to back by one task.
    pub rings_per_task: usize,
    /// Worker threads; 1 runs on the calling thread.
    pub workers: usize,
}

impl Default for BlockParams {
    fn default() -> Self {
        Self { ring_block: 64, beta_segment_len: 256, alm_segment_len: 256, rings_per_task: 1, workers: 1 }
    }
}

impl BlockParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("ring_block", self.ring_block),
            ("beta_segment_len", self.beta_segment_len),
            ("alm_segment_len", self.alm_segment_len),
            ("rings_per_task", self.rings_per_task),
            ("workers", self.workers),
        ];
        for (name, v) in fields {
            if v == 0 {
                return Err(Error::InvalidParams(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    /// Segment lengths are multiples of the ring block, the layout a
    /// thread-block implementation needs to fill segments without tails.
    pub fn is_aligned(&self) -> bool {
        self.beta_segment_len.is_multiple_of(self.ring_block)
            && self.alm_segment_len.is_multiple_of(self.ring_block)
    }

    pub(crate) fn task_size(&self) -> usize {
        self.ring_block * self.rings_per_task
    }
}

/// β and 1/β for one order, `l = m+1..=lmax`.
pub(crate) struct BetaColumn<T> {
    values: Vec<T>,
    inverses: Vec<T>,
}

impl<T: Real> BetaColumn<T> {
    pub(crate) fn new(m: usize, lmax: usize) -> Result<Self> {
        let flip = crate::hooks::flip_beta_sign();
        let values = (m + 1..=lmax)
            .map(|l| beta::<T>(l, m).map(|b| if flip { -b } else { b }))
            .collect::<Result<Vec<_>>>()?;
        let inverses = values.iter().map(|&b| T::one() / b).collect();
        Ok(Self { values, inverses })
    }
}

/// Fixed-length staging window over a read-only source.
struct Segment<V: Copy> {
    buf: Vec<V>,
    start: usize,
    cap: usize,
}

impl<V: Copy> Segment<V> {
    fn new(cap: usize) -> Self {
        Self { buf: Vec::with_capacity(cap), start: 0, cap }
    }

    #[inline]
    fn get(&mut self, src: &[V], i: usize) -> V {
        if i < self.start || i >= self.start + self.buf.len() {
            self.buf.clear();
            self.start = i;
            let end = (i + self.cap).min(src.len());
            self.buf.extend_from_slice(&src[i..end]);
        }
        self.buf[i - self.start]
    }
}

/// Per-lane recurrence and accumulator storage for one ring block.
struct Lanes<T> {
    x: Vec<T>,
    p_cur: Vec<T>,
    p_prev: Vec<T>,
    k: Vec<i32>,
    weight: Vec<T>,
    acc_re: [Vec<T>; 2],
    acc_im: [Vec<T>; 2],
}

impl<T: Real> Lanes<T> {
    fn new(n: usize) -> Self {
        let z = || vec![T::zero(); n];
        Self {
            x: z(),
            p_cur: z(),
            p_prev: z(),
            k: vec![0; n],
            weight: z(),
            acc_re: [z(), z()],
            acc_im: [z(), z()],
        }
    }
}

/// Shared, read-only inputs of the per-order kernel.
struct OrderContext<'a, T> {
    m: usize,
    lmax: usize,
    alm: &'a [Complex<T>],
    betas: &'a BetaColumn<T>,
    mu: &'a MuTable<T>,
    table: &'a RescaleTable<T>,
    /// For each lead ring: cos θ and log2 sin θ.
    x: &'a [T],
    log2_sin: &'a [f64],
    params: &'a BlockParams,
}

/// Δ for one order on a run of lead rings. Returns `(E + O, E − O)` per ring.
fn order_kernel<T: Real>(
    ctx: &OrderContext<'_, T>,
    leads: std::ops::Range<usize>,
) -> Result<Vec<(Complex<T>, Complex<T>)>> {
    let m = ctx.m;
    let lmax = ctx.lmax;
    let hi = ctx.table.scale_hi;
    let lo = ctx.table.scale_lo;
    let mut out = Vec::with_capacity(leads.len());
    let mut lanes = Lanes::new(ctx.params.ring_block.min(leads.len()));
    let mut alm_seg = Segment::new(ctx.params.alm_segment_len);
    let mut beta_seg = Segment::new(ctx.params.beta_segment_len);
    let mut inv_seg = Segment::new(ctx.params.beta_segment_len);
    let mut max_k = i32::MIN;

    let mut block_start = leads.start;
    while block_start < leads.end {
        let block_end = (block_start + ctx.params.ring_block).min(leads.end);
        let n = block_end - block_start;
        let a_mm = alm_seg.get(ctx.alm, 0);
        for i in 0..n {
            let lead = block_start + i;
            let (p_mm, k) = split_exponent::<T>(log2_pmm(m, ctx.log2_sin[lead], &ctx.mu.log2_mu))?;
            let w = ctx.table.accumulation_weight(k);
            let v = p_mm * w;
            lanes.x[i] = ctx.x[lead];
            lanes.p_cur[i] = p_mm;
            lanes.p_prev[i] = T::zero();
            lanes.k[i] = k;
            lanes.weight[i] = w;
            lanes.acc_re[0][i] = a_mm.re * v;
            lanes.acc_im[0][i] = a_mm.im * v;
            lanes.acc_re[1][i] = T::zero();
            lanes.acc_im[1][i] = T::zero();
            max_k = max_k.max(k);
        }

        if lmax > m {
            let b = beta_seg.get(&ctx.betas.values, 0);
            let a = alm_seg.get(ctx.alm, 1);
            for i in 0..n {
                let mut p_prev = lanes.p_cur[i];
                let mut p_cur = first_step(lanes.x[i], p_prev, b);
                let d = renormalize(&mut p_cur, &mut p_prev, hi, lo);
                if d != 0 {
                    lanes.k[i] += d;
                    lanes.weight[i] = ctx.table.accumulation_weight(lanes.k[i]);
                    max_k = max_k.max(lanes.k[i]);
                }
                lanes.p_cur[i] = p_cur;
                lanes.p_prev[i] = p_prev;
                let v = p_cur * lanes.weight[i];
                lanes.acc_re[1][i] = a.re * v;
                lanes.acc_im[1][i] = a.im * v;
            }
        }

        for l in m + 2..=lmax {
            let b = beta_seg.get(&ctx.betas.values, l - m - 1);
            let ib = inv_seg.get(&ctx.betas.inverses, l - m - 2);
            let a = alm_seg.get(ctx.alm, l - m);
            let parity = (l + m) & 1;
            let Lanes { x, p_cur, p_prev, k, weight, acc_re, acc_im } = &mut lanes;
            let (acc_re, acc_im) = (&mut acc_re[parity], &mut acc_im[parity]);
            for i in 0..n {
                let mut next = recur(x[i], p_cur[i], p_prev[i], b, ib);
                let mut prev = p_cur[i];
                let d = renormalize(&mut next, &mut prev, hi, lo);
                if d != 0 {
                    k[i] += d;
                    weight[i] = ctx.table.accumulation_weight(k[i]);
                    max_k = max_k.max(k[i]);
                }
                p_prev[i] = prev;
                p_cur[i] = next;
                let v = next * weight[i];
                acc_re[i] += a.re * v;
                acc_im[i] += a.im * v;
            }
        }

        if max_k > MAX_SCALE_INDEX {
            return Err(Error::ScaleOverflow { scale_k: max_k });
        }
        for i in 0..n {
            let even = Complex::new(lanes.acc_re[0][i], lanes.acc_im[0][i]);
            let odd = Complex::new(lanes.acc_re[1][i], lanes.acc_im[1][i]);
            out.push((even + odd, even - odd));
        }
        block_start = block_end;
    }
    Ok(out)
}

/// Δ for the listed orders on every ring, m-major (`orders.len() × n_rings`).
///
/// With `pairing` the recurrence runs on northern rings only and southern
/// mirrors are filled from the parity split; otherwise every ring runs its
/// own recurrence. Both give identical bits on validated grids.
pub(crate) fn delta_orders<T: Real>(
    alm: &AlmSet<T>,
    grid: &RingGrid<T>,
    orders: &[usize],
    params: &BlockParams,
    pairing: bool,
) -> Result<Vec<Complex<T>>> {
    params.validate()?;
    if let Some(&bad) = orders.iter().find(|&&m| m > alm.mmax()) {
        return Err(Error::DimensionMismatch(format!("order {bad} beyond mmax={}", alm.mmax())));
    }
    let n_rings = grid.n_rings();
    let lmax = alm.lmax();
    let mu = compute_mu::<T>(alm.mmax());
    let table = build_rescale_table::<T>();

    let leads: Vec<usize> = if pairing { grid.lead_rings() } else { (0..n_rings).collect() };
    let x: Vec<T> = leads.iter().map(|&r| grid.ring(r).cos_theta).collect();
    let log2_sin: Vec<f64> = leads.iter().map(|&r| grid.ring(r).sin_theta.as_f64().log2()).collect();
    let task = params.task_size();
    let tasks: Vec<std::ops::Range<usize>> =
        (0..leads.len()).step_by(task).map(|s| s..(s + task).min(leads.len())).collect();

    let mut out = vec![Complex::default(); orders.len() * n_rings];
    let run = |out: &mut Vec<Complex<T>>| -> Result<()> {
        for (oi, &m) in orders.iter().enumerate() {
            let betas = BetaColumn::new(m, lmax)?;
            let ctx = OrderContext {
                m,
                lmax,
                alm: alm.column(m),
                betas: &betas,
                mu: &mu,
                table: &table,
                x: &x,
                log2_sin: &log2_sin,
                params,
            };
            let parts: Vec<Vec<(Complex<T>, Complex<T>)>> = if params.workers > 1 {
                tasks.par_iter().map(|t| order_kernel(&ctx, t.clone())).collect::<Result<_>>()?
            } else {
                tasks.iter().map(|t| order_kernel(&ctx, t.clone())).collect::<Result<_>>()?
            };
            let col = &mut out[oi * n_rings..(oi + 1) * n_rings];
            for (lead_pos, (north, south)) in parts.into_iter().flatten().enumerate() {
                let ring = grid.ring(leads[lead_pos]);
                col[ring.ring_index] = north;
                if pairing && ring.pair_index != ring.ring_index {
                    col[ring.pair_index] = south;
                }
            }
        }
        Ok(())
    };

    if params.workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(params.workers)
            .build()
            .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
        pool.install(|| run(&mut out))?;
    } else {
        run(&mut out)?;
    }
    Ok(out)
}

/// Δ_m(θ_r) for all rings and `m = 0..=mmax`, one recurrence per ring.
pub fn compute_delta<T: Real>(
    alm: &AlmSet<T>,
    grid: &RingGrid<T>,
    params: &BlockParams,
) -> Result<DeltaMatrix<T>> {
    let orders: Vec<usize> = (0..=alm.mmax()).collect();
    let data = delta_orders(alm, grid, &orders, params, false)?;
    Ok(DeltaMatrix { n_rings: grid.n_rings(), mmax: alm.mmax(), data })
}

/// Same result as [`compute_delta`], running the recurrence on northern
/// rings only and deriving their mirrors from the parity split.
pub fn compute_delta_pair<T: Real>(
    alm: &AlmSet<T>,
    grid: &RingGrid<T>,
    params: &BlockParams,
) -> Result<DeltaMatrix<T>> {
    let orders: Vec<usize> = (0..=alm.mmax()).collect();
    let data = delta_orders(alm, grid, &orders, params, true)?;
    Ok(DeltaMatrix { n_rings: grid.n_rings(), mmax: alm.mmax(), data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_ecp_grid;
    use crate::legendre::legendre_column;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_alm(lmax: usize, mmax: usize, seed: u64) -> AlmSet<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut alm = AlmSet::new(lmax, mmax, true).unwrap();
        for m in 0..=mmax {
            for l in m..=lmax {
                let im = if m == 0 { 0.0 } else { rng.random_range(-1.0..1.0) };
                alm.set(l, m, Complex::new(rng.random_range(-1.0..1.0), im)).unwrap();
            }
        }
        alm
    }

    /// Straight Σ_l a_lm P_lm using the column evaluator.
    fn reference_delta(alm: &AlmSet<f64>, grid: &RingGrid<f64>) -> DeltaMatrix<f64> {
        let mu = compute_mu::<f64>(alm.mmax());
        let table = build_rescale_table::<f64>();
        let mut d = DeltaMatrix::zeros(grid.n_rings(), alm.mmax());
        for r in 0..grid.n_rings() {
            for m in 0..=alm.mmax() {
                let p = legendre_column(m, alm.lmax(), grid.ring(r), &mu, &table).unwrap();
                let s = alm.column(m).iter().zip(&p).fold(Complex::default(), |acc, (a, p)| acc + a * p);
                d.set(r, m, s);
            }
        }
        d
    }

    #[test]
    fn alm_indexing() {
        let mut alm = AlmSet::<f64>::new(3, 2, true).unwrap();
        assert_eq!(alm.len(), 4 + 3 + 2);
        alm.set(3, 2, Complex::new(1.0, 2.0)).unwrap();
        assert_eq!(alm.get(3, 2).unwrap(), Complex::new(1.0, 2.0));
        assert!(matches!(alm.set(1, 0, Complex::new(0.0, 1.0)), Err(Error::ComplexZonal { l: 1 })));
        assert!(alm.get(1, 2).is_err());
        assert!(alm.get(4, 0).is_err());
        assert!(AlmSet::<f64>::new(2, 3, false).is_err());
        let listed: Vec<_> = alm.iter().map(|(l, m, _)| (l, m)).collect();
        assert_eq!(listed[..4], [(0, 0), (1, 0), (2, 0), (3, 0)]);
        assert_eq!(listed.len(), 9);
    }

    #[test]
    fn monopole_gives_unit_delta() {
        let mut alm = AlmSet::<f64>::new(0, 0, true).unwrap();
        alm.set(0, 0, Complex::new((4.0 * PI).sqrt(), 0.0)).unwrap();
        let d = compute_delta(&alm, &make_ecp_grid(0), &BlockParams::default()).unwrap();
        for r in 0..2 {
            assert!((d.get(r, 0).re - 1.0).abs() < 1e-15);
            assert_eq!(d.get(r, 0).im, 0.0);
        }
    }

    #[test]
    fn zero_alm_gives_zero_delta() {
        let alm = AlmSet::<f64>::new(6, 6, true).unwrap();
        let d = compute_delta(&alm, &make_ecp_grid(6), &BlockParams::default()).unwrap();
        assert!(d.as_slice().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn dipole_on_first_ring() {
        let mut alm = AlmSet::<f64>::new(1, 1, true).unwrap();
        alm.set(1, 0, Complex::new(1.0, 0.0)).unwrap();
        let d = compute_delta(&alm, &make_ecp_grid(1), &BlockParams::default()).unwrap();
        let want = (3.0 / (4.0 * PI)).sqrt() * (PI / 8.0).cos();
        assert!((d.get(0, 0).re - want).abs() < 1e-15);
        assert!((want - 0.4514098).abs() < 1e-7);
    }

    #[test]
    fn sectoral_mode_is_even_across_equator() {
        let mut alm = AlmSet::<f64>::new(1, 1, true).unwrap();
        alm.set(1, 1, Complex::new(1.0, 0.0)).unwrap();
        let g = make_ecp_grid(1);
        let d = compute_delta_pair(&alm, &g, &BlockParams::default()).unwrap();
        let want = 0.345494149471335 * (PI / 8.0).sin();
        assert!((d.get(0, 1).re - want).abs() < 1e-15);
        assert_eq!(d.get(0, 1), d.get(3, 1));
    }

    #[test]
    fn matches_column_reference() {
        let alm = random_alm(24, 20, 7);
        let g = make_ecp_grid(24);
        let d = compute_delta(&alm, &g, &BlockParams::default()).unwrap();
        let want = reference_delta(&alm, &g);
        let scale = want.max_abs();
        for (a, b) in d.as_slice().iter().zip(want.as_slice()) {
            assert!((a - b).norm() < 1e-13 * scale);
        }
    }

    #[test]
    fn pair_path_is_bitwise_equal() {
        let alm = random_alm(40, 40, 3);
        let g = make_ecp_grid(40);
        let p = BlockParams::default();
        assert_eq!(compute_delta(&alm, &g, &p).unwrap(), compute_delta_pair(&alm, &g, &p).unwrap());
    }

    #[test]
    fn equatorial_ring_in_pair_path() {
        use crate::grid::{make_custom_grid, RingDescriptor};
        let rings: Vec<RingDescriptor<f64>> =
            [0.4, PI / 2.0, PI - 0.4].iter().map(|&t| RingDescriptor::new(t, 9, 0.0)).collect();
        let g = make_custom_grid(&rings).unwrap();
        let alm = random_alm(6, 4, 11);
        let p = BlockParams::default();
        assert_eq!(compute_delta(&alm, &g, &p).unwrap(), compute_delta_pair(&alm, &g, &p).unwrap());
    }

    #[test]
    fn blocking_and_workers_do_not_change_bits() {
        let alm = random_alm(48, 48, 5);
        let g = make_ecp_grid(48);
        let base = compute_delta(&alm, &g, &BlockParams::default()).unwrap();
        for (rb, seg_b, seg_a, rpt, workers) in
            [(1, 1, 1, 1, 1), (3, 7, 5, 2, 2), (16, 16, 64, 1, 4), (512, 16, 512, 3, 3)]
        {
            let p = BlockParams {
                ring_block: rb,
                beta_segment_len: seg_b,
                alm_segment_len: seg_a,
                rings_per_task: rpt,
                workers,
            };
            assert_eq!(compute_delta(&alm, &g, &p).unwrap(), base, "{p:?}");
            assert_eq!(compute_delta_pair(&alm, &g, &p).unwrap(), base, "{p:?}");
        }
    }

    #[test]
    fn linearity() {
        let a = random_alm(20, 20, 1);
        let b = random_alm(20, 20, 2);
        let g = make_ecp_grid(20);
        let p = BlockParams::default();
        let alpha = 0.37;
        let lhs = compute_delta(&a.axpy(alpha, &b).unwrap(), &g, &p).unwrap();
        let da = compute_delta(&a, &g, &p).unwrap();
        let db = compute_delta(&b, &g, &p).unwrap();
        for i in 0..lhs.as_slice().len() {
            let rhs = da.as_slice()[i] * alpha + db.as_slice()[i];
            assert!((lhs.as_slice()[i] - rhs).norm() < 1e-13);
        }
    }

    #[test]
    fn zonal_delta_is_real_for_real_fields() {
        let alm = random_alm(16, 16, 9);
        let d = compute_delta(&alm, &make_ecp_grid(16), &BlockParams::default()).unwrap();
        let bound = 1e-12 * d.max_abs();
        assert!(d.column(0).iter().all(|v| v.im.abs() <= bound));
    }

    #[test]
    fn negative_m_is_conjugate() {
        assert_eq!(delta_negative_m(Complex::new(1.0, 2.0)), Complex::new(1.0, -2.0));
        assert_eq!(delta_negative_m(Complex::<f64>::new(0.0, 0.0)), Complex::new(0.0, 0.0));
        assert_eq!(delta_negative_m(Complex::new(0.7, 0.0)), Complex::new(0.7, 0.0));
    }

    #[test]
    fn invalid_params_rejected() {
        let alm = AlmSet::<f64>::new(2, 2, true).unwrap();
        let p = BlockParams { ring_block: 0, ..Default::default() };
        assert!(matches!(compute_delta(&alm, &make_ecp_grid(2), &p), Err(Error::InvalidParams(_))));
        assert!(BlockParams::default().is_aligned());
        assert!(!BlockParams { ring_block: 512, beta_segment_len: 16, ..Default::default() }.is_aligned());
    }

    #[test]
    fn f32_delta_close_to_f64() {
        let alm = random_alm(12, 12, 4);
        let mut alm32 = AlmSet::<f32>::new(12, 12, true).unwrap();
        for (l, m, a) in alm.iter() {
            alm32.set(l, m, Complex::new(a.re as f32, a.im as f32)).unwrap();
        }
        let d64 = compute_delta(&alm, &make_ecp_grid(12), &BlockParams::default()).unwrap();
        let d32 = compute_delta(&alm32, &make_ecp_grid(12), &BlockParams::default()).unwrap();
        let scale = d64.max_abs();
        for (a, b) in d32.as_slice().iter().zip(d64.as_slice()) {
            assert!(((a.re as f64) - b.re).abs() < 1e-5 * scale);
        }
    }
}
