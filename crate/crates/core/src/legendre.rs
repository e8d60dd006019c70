//! Normalized associated Legendre functions by the two-point recurrence in
//! `l`, kept inside the floating point range by a rescale table.
//!
//! Values are stored as `mantissa × 2^(S·k)` where `S` is the scale step of
//! the scalar type (126 for `f64`) and `k` the scale index carried in
//! [`PlmState`]. The stored mantissa is renormalized after every step so it
//! stays within `[2^−S, 2^S]`; true values are recovered through the
//! 21-slot [`RescaleTable`].

use crate::error::{Error, Result};
use crate::grid::RingDescriptor;
use crate::scalar::Real;

/// Number of slots in the rescale table (scale indices −10..=10).
pub const RESCALE_SLOTS: usize = 21;
/// Largest scale index covered by the table.
pub const MAX_SCALE_INDEX: i32 = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct RescaleTable<T> {
    entries: [T; RESCALE_SLOTS],
    clamped: [bool; RESCALE_SLOTS],
    pub scale_hi: T,
    pub scale_lo: T,
}

impl<T: Real> RescaleTable<T> {
    #[inline]
    fn slot(k: i32) -> usize {
        (k + MAX_SCALE_INDEX) as usize
    }

    /// Table entry for scale index `k ∈ [−10, 10]`.
    pub fn entry(&self, k: i32) -> T {
        self.entries[Self::slot(k)]
    }

    /// Whether slot `k` could not be represented and was flushed to zero or
    /// saturated at the largest finite value.
    pub fn is_clamped(&self, k: i32) -> bool {
        self.clamped[Self::slot(k)]
    }

    pub fn entries(&self) -> &[T; RESCALE_SLOTS] {
        &self.entries
    }

    /// Factor applied to a stored mantissa before it enters a Δ sum.
    ///
    /// States with `k ≤ −2` hold true values below `2^−S` and contribute
    /// nothing; `k ≥ −1` are scaled back through the table.
    #[inline]
    pub fn accumulation_weight(&self, k: i32) -> T {
        if k < -1 {
            T::zero()
        } else {
            self.entries[Self::slot(k.min(MAX_SCALE_INDEX))]
        }
    }
}

pub fn build_rescale_table<T: Real>() -> RescaleTable<T> {
    let scale_hi = T::lit(2f64.powi(T::SCALE_EXPONENT));
    let scale_lo = T::lit(2f64.powi(-T::SCALE_EXPONENT));
    let mut entries = [T::zero(); RESCALE_SLOTS];
    let mut clamped = [false; RESCALE_SLOTS];
    let centre = MAX_SCALE_INDEX as usize;
    entries[centre] = T::one();

    let mut up = T::one();
    let mut down = T::one();
    for step in 1..=centre {
        up *= scale_hi;
        if up.is_finite() {
            entries[centre + step] = up;
        } else {
            entries[centre + step] = T::max_value();
            clamped[centre + step] = true;
        }
        // Exact powers of two stay exact down to the subnormal limit.
        down *= scale_lo;
        entries[centre - step] = down;
        clamped[centre - step] = down == T::zero();
    }
    RescaleTable { entries, clamped, scale_hi, scale_lo }
}

/// `μ_m` starting coefficients, plus their base-2 logarithms used by the
/// exponent-split initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct MuTable<T> {
    pub mu: Vec<T>,
    pub log2_mu: Vec<f64>,
}

impl<T: Real> MuTable<T> {
    pub fn mmax(&self) -> usize {
        self.mu.len() - 1
    }
}

/// `μ_m = sqrt((2m+1)!/4π) / (2^m m!)` via `μ_m = μ_{m−1}·sqrt((2m+1)/(2m))`.
pub fn compute_mu<T: Real>(mmax: usize) -> MuTable<T> {
    let mut mu64 = Vec::with_capacity(mmax + 1);
    let mut cur = (1.0 / (4.0 * std::f64::consts::PI)).sqrt();
    mu64.push(cur);
    for m in 1..=mmax {
        cur *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
        mu64.push(cur);
    }
    MuTable {
        mu: mu64.iter().map(|&v| T::lit(v)).collect(),
        log2_mu: mu64.iter().map(|v| v.log2()).collect(),
    }
}

/// Recurrence coefficient `β_lm = sqrt((4l² − 1)/(l² − m²))`.
pub fn beta<T: Real>(l: usize, m: usize) -> Result<T> {
    if l <= m {
        return Err(Error::DegenerateIndex { l, m });
    }
    let (lf, mf) = (T::lit(l as f64), T::lit(m as f64));
    let four = T::lit(4.0);
    Ok(((four * lf * lf - T::one()) / ((lf - mf) * (lf + mf))).sqrt())
}

/// Contiguous run of `β_lm` for fixed `m`, together with the reciprocals
/// the recurrence consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaSegment<T> {
    pub m: usize,
    pub l_start: usize,
    pub values: Vec<T>,
    pub inverses: Vec<T>,
}

pub fn fill_beta_segment<T: Real>(m: usize, l_start: usize, len: usize) -> Result<BetaSegment<T>> {
    if len == 0 {
        return Err(Error::InvalidParams("beta segment length must be positive".into()));
    }
    let values = (l_start..l_start + len).map(|l| beta::<T>(l, m)).collect::<Result<Vec<_>>>()?;
    let inverses = values.iter().map(|&b| T::one() / b).collect();
    Ok(BetaSegment { m, l_start, values, inverses })
}

/// Recurrence state for one `(m, θ)` column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlmState<T> {
    pub m: usize,
    pub x: T,
    pub s: T,
    pub l_current: usize,
    /// Stored mantissa of `P_{l_current, m}`.
    pub p_cur: T,
    /// Stored mantissa of `P_{l_current−1, m}` (zero at `l_current = m`).
    pub p_prev: T,
    /// True value = stored × 2^(S·scale_k). Unbounded below so that deep
    /// transient underflow is tracked rather than flushed.
    pub scale_k: i32,
}

impl<T: Real> PlmState<T> {
    pub fn value(&self, table: &RescaleTable<T>) -> Result<T> {
        unscale(self.p_cur, self.scale_k, table)
    }
}

/// One recurrence step with the reciprocal of the previous β precomputed.
#[inline(always)]
pub(crate) fn recur<T: Real>(x: T, p_cur: T, p_prev: T, beta_cur: T, inv_beta_prev: T) -> T {
    beta_cur * (x * p_cur - p_prev * inv_beta_prev)
}

/// `P_{m+1,m}` from `P_mm`.
#[inline(always)]
pub(crate) fn first_step<T: Real>(x: T, p_mm: T, beta_first: T) -> T {
    beta_first * (x * p_mm)
}

/// Keeps `max(|p_cur|, |p_prev|)` in `[lo, hi]` (or both zero). Returns the
/// change of the scale index: −1, 0 or +1.
#[inline(always)]
pub(crate) fn renormalize<T: Real>(p_cur: &mut T, p_prev: &mut T, hi: T, lo: T) -> i32 {
    let big = p_cur.abs().max(p_prev.abs());
    if big > hi {
        *p_cur *= lo;
        *p_prev *= lo;
        1
    } else if big < lo && big != T::zero() {
        *p_cur *= hi;
        *p_prev *= hi;
        -1
    } else {
        0
    }
}

/// Splits `2^t` into `mantissa × 2^(S·k)` with `k` the index closest to zero
/// that leaves the mantissa exponent within `[−S, S]`.
pub(crate) fn split_exponent<T: Real>(t: f64) -> Result<(T, i32)> {
    let step = T::SCALE_EXPONENT as f64;
    let k = if t > step {
        ((t - step) / step).ceil()
    } else if t < -step {
        -((-t - step) / step).ceil()
    } else {
        0.0
    };
    let k = k as i32;
    if k > MAX_SCALE_INDEX {
        return Err(Error::ScaleOverflow { scale_k: k });
    }
    Ok((T::lit((t - k as f64 * step).exp2()), k))
}

/// Base-2 log of `P_mm = μ_m sin^m θ`.
#[inline]
pub(crate) fn log2_pmm(m: usize, log2_sin: f64, mu: &[f64]) -> f64 {
    m as f64 * log2_sin + mu[m]
}

/// Starting state for order `m` on `ring`: `P_mm`, and `P_{m+1,m}` when
/// `lmax > m`.
pub fn init_state<T: Real>(
    m: usize,
    ring: &RingDescriptor<T>,
    mu: &MuTable<T>,
    lmax: usize,
) -> Result<PlmState<T>> {
    if m > mu.mmax() {
        return Err(Error::DimensionMismatch(format!("m={m} beyond mu table")));
    }
    if m > lmax {
        return Err(Error::InvalidIndex { l: lmax, m });
    }
    let table_hi = T::lit(2f64.powi(T::SCALE_EXPONENT));
    let table_lo = T::lit(2f64.powi(-T::SCALE_EXPONENT));
    let t = log2_pmm(m, ring.sin_theta.as_f64().log2(), &mu.log2_mu);
    let (p_mm, mut k) = split_exponent::<T>(t)?;
    let mut state = PlmState {
        m,
        x: ring.cos_theta,
        s: ring.sin_theta,
        l_current: m,
        p_cur: p_mm,
        p_prev: T::zero(),
        scale_k: k,
    };
    if lmax > m {
        let mut p_prev = p_mm;
        let mut p_cur = first_step(state.x, p_mm, beta::<T>(m + 1, m)?);
        k += renormalize(&mut p_cur, &mut p_prev, table_hi, table_lo);
        if k > MAX_SCALE_INDEX {
            return Err(Error::ScaleOverflow { scale_k: k });
        }
        state = PlmState { l_current: m + 1, p_cur, p_prev, scale_k: k, ..state };
    }
    Ok(state)
}

/// Advances `state` from `l` to `l+1`. `beta_cur = β_{l+1,m}`,
/// `beta_prev = β_{l,m}` (ignored at `l = m`).
pub fn step<T: Real>(state: &PlmState<T>, beta_cur: T, beta_prev: T) -> Result<PlmState<T>> {
    let hi = T::lit(2f64.powi(T::SCALE_EXPONENT));
    let lo = T::lit(2f64.powi(-T::SCALE_EXPONENT));
    let mut p_prev = state.p_cur;
    let mut p_cur = if state.l_current == state.m {
        first_step(state.x, state.p_cur, beta_cur)
    } else {
        recur(state.x, state.p_cur, state.p_prev, beta_cur, T::one() / beta_prev)
    };
    let k = state.scale_k + renormalize(&mut p_cur, &mut p_prev, hi, lo);
    if k > MAX_SCALE_INDEX {
        return Err(Error::ScaleOverflow { scale_k: k });
    }
    Ok(PlmState { l_current: state.l_current + 1, p_cur, p_prev, scale_k: k, ..*state })
}

/// True value of a stored mantissa.
pub fn unscale<T: Real>(p_stored: T, scale_k: i32, table: &RescaleTable<T>) -> Result<T> {
    if scale_k > MAX_SCALE_INDEX {
        return Err(Error::ScaleOverflow { scale_k });
    }
    if scale_k < -MAX_SCALE_INDEX || p_stored == T::zero() {
        return Ok(T::zero());
    }
    let entry = table.entry(scale_k);
    if table.is_clamped(scale_k) {
        return if entry == T::zero() { Ok(T::zero()) } else { Err(Error::ScaleOverflow { scale_k }) };
    }
    let v = p_stored * entry;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::ScaleOverflow { scale_k })
    }
}

/// Unscaled `P_lm(cos θ)` for `l = m..=lmax` on one ring.
pub fn legendre_column<T: Real>(
    m: usize,
    lmax: usize,
    ring: &RingDescriptor<T>,
    mu: &MuTable<T>,
    table: &RescaleTable<T>,
) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(lmax + 1 - m);
    let mut state = init_state(m, ring, mu, m)?;
    out.push(state.value(table)?);
    let mut beta_prev = T::zero();
    for l in m + 1..=lmax {
        let beta_cur = beta::<T>(l, m)?;
        state = step(&state, beta_cur, beta_prev)?;
        out.push(state.value(table)?);
        beta_prev = beta_cur;
    }
    Ok(out)
}

/// Single value `P_lm(cos θ)` through the rescaled recurrence.
pub fn eval_plm(l: usize, m: usize, theta: f64) -> Result<f64> {
    if m > l {
        return Err(Error::InvalidIndex { l, m });
    }
    let ring = RingDescriptor::new(theta, 1, 0.0);
    let mu = compute_mu::<f64>(m);
    let table = build_rescale_table::<f64>();
    let col = legendre_column(m, l, &ring, &mu, &table)?;
    Ok(col[l - m])
}
