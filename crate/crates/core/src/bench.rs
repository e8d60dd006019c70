//! Operation counts, stage timings and a block-parameter autotuner.
//!
//! Operation counting follows the usual GPU-kernel convention: additions and
//! multiplications count one each, while every division, square root,
//! logarithm and exponential counts 20.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::grid::{make_ecp_grid, RingGrid};
use crate::layout::{distributed_step1, distributed_step2, plan_layout, redistribute};
use crate::ringfft::{synthesize_map, SkyMap};
use crate::synthesis::{compute_delta, AlmSet, BlockParams};

/// Weight of one division, square root, logarithm or exponential.
pub const SPECIAL_OP_WEIGHT: u64 = 20;

/// Segment lengths and ring-block sizes of the default sweep.
pub const SWEEP_SEGMENT_LENS: [usize; 5] = [16, 64, 128, 256, 512];
pub const SWEEP_RING_BLOCKS: [usize; 6] = [16, 32, 64, 128, 256, 512];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FlopReport {
    pub adds: u64,
    pub muls: u64,
    /// Raw number of divisions, square roots, logarithms and exponentials.
    pub special: u64,
    pub weighted_special: u64,
    pub total: u64,
    /// Rate for a given step-1 time, filled by [`FlopReport::with_time`].
    pub gflops: f64,
}

impl FlopReport {
    fn from_counts(adds: u64, muls: u64, special: u64) -> Self {
        let weighted_special = SPECIAL_OP_WEIGHT * special;
        Self { adds, muls, special, weighted_special, total: adds + muls + weighted_special, gflops: 0.0 }
    }

    pub fn with_time(mut self, seconds: f64) -> Self {
        self.gflops = if seconds > 0.0 { self.total as f64 / seconds / 1e9 } else { 0.0 };
        self
    }

    pub fn special_fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.weighted_special as f64 / self.total as f64
        }
    }
}

/// Tally of the step-1 kernel as implemented (one recurrence per ring).
///
/// | where           | count                                    |
/// |-----------------|------------------------------------------|
/// | per ring        | 1 log (log2 sin θ)                       |
/// | per m           | μ: 1 mul, 1 div, 1 sqrt; 1 log (log2 μ)  |
/// | per (m, l > m)  | β: 3 mul, 3 add, 1 div, 1 sqrt; 1/β: 1 div |
/// | per (r, m)      | init: 2 mul, 2 add, 1 exp; E±O: 2 add    |
/// | per (r, m, l)   | accumulate: 3 mul, 2 add                 |
/// | per (r, m, l=m+1) | first step: 2 mul                      |
/// | per (r, m, l≥m+2) | recurrence: 3 mul, 1 add               |
pub fn flop_estimate(lmax: usize, mmax: usize, grid: &RingGrid<f64>) -> FlopReport {
    let rings = grid.n_rings() as u64;
    let mut adds = 0u64;
    let mut muls = 0u64;
    let mut special = rings;
    for m in 0..=mmax.min(lmax) {
        let ls = (lmax - m) as u64; // l in m+1..=lmax
        muls += 1;
        special += 3;
        muls += 3 * ls;
        adds += 3 * ls;
        special += 3 * ls;

        let per_ring_muls = 2 + 3 * (ls + 1) + if ls >= 1 { 2 } else { 0 } + 3 * ls.saturating_sub(1);
        let per_ring_adds = 2 + 2 + 2 * (ls + 1) + ls.saturating_sub(1);
        muls += rings * per_ring_muls;
        adds += rings * per_ring_adds;
        special += rings;
    }
    FlopReport::from_counts(adds, muls, special)
}

fn min_duration(repeats: usize, mut f: impl FnMut() -> Result<Duration>) -> Result<Duration> {
    let mut best = Duration::MAX;
    for _ in 0..repeats.max(1) {
        best = best.min(f()?);
    }
    Ok(best)
}

/// Minimum over `repeats` of the wall time of [`compute_delta`] on the ECP
/// grid for `lmax`.
pub fn time_step1(lmax: usize, params: &BlockParams, repeats: usize) -> Result<f64> {
    let grid = make_ecp_grid::<f64>(lmax);
    let alm = AlmSet::<f64>::gaussian(lmax, lmax, 1, 1.0)?;
    let t = min_duration(repeats, || {
        let start = Instant::now();
        let d = compute_delta(&alm, &grid, params)?;
        let elapsed = start.elapsed();
        std::hint::black_box(d);
        Ok(elapsed)
    })?;
    Ok(t.as_secs_f64())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub lmax: usize,
    pub params: BlockParams,
    pub n_procs: usize,
    pub t_step1: f64,
    pub t_exchange: f64,
    pub t_step2: f64,
    pub total: f64,
    pub gflops_estimate: f64,
}

pub const BENCH_CSV_HEADER: &str =
    "lmax,ring_block,beta_seg,alm_seg,rings_per_task,workers,procs,t_step1,t_exchange,t_step2,total,gflops_estimate";

impl BenchRow {
    pub fn csv_line(&self) -> String {
        let p = &self.params;
        format!(
            "{},{},{},{},{},{},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.4}",
            self.lmax,
            p.ring_block,
            p.beta_segment_len,
            p.alm_segment_len,
            p.rings_per_task,
            p.workers,
            self.n_procs,
            self.t_step1,
            self.t_exchange,
            self.t_step2,
            self.total,
            self.gflops_estimate
        )
    }
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(BENCH_CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(out, "{}", r.csv_line()).unwrap();
    }
    out
}

/// Times step 1, the exchange and step 2 of the distributed pipeline on ECP
/// grids; each stage reports the minimum over `repeats`.
pub fn run_benchmark(
    lmaxes: &[usize],
    params: &BlockParams,
    n_procs: usize,
    repeats: usize,
) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::with_capacity(lmaxes.len());
    for &lmax in lmaxes {
        let grid = make_ecp_grid::<f64>(lmax);
        let alm = AlmSet::<f64>::gaussian(lmax, lmax, 1, 1.0)?;
        let plan = plan_layout(&grid, lmax, n_procs)?;
        let mut t1 = Duration::MAX;
        let mut tx = Duration::MAX;
        let mut t2 = Duration::MAX;
        for _ in 0..repeats.max(1) {
            let start = Instant::now();
            let d = distributed_step1(&alm, &grid, &plan, params)?;
            t1 = t1.min(start.elapsed());
            let start = Instant::now();
            let d = redistribute(&d, &plan)?;
            tx = tx.min(start.elapsed());
            let start = Instant::now();
            let map = distributed_step2(&d, &grid, &plan)?;
            t2 = t2.min(start.elapsed());
            std::hint::black_box(map);
        }
        let (t1, tx, t2) = (t1.as_secs_f64(), tx.as_secs_f64(), t2.as_secs_f64());
        let flops = flop_estimate(lmax, lmax, &grid).with_time(t1);
        rows.push(BenchRow {
            lmax,
            params: *params,
            n_procs,
            t_step1: t1,
            t_exchange: tx,
            t_step2: t2,
            total: t1 + tx + t2,
            gflops_estimate: flops.gflops,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    /// Applied to both the β and the `a_lm` segment.
    pub segment_lens: Vec<usize>,
    pub ring_blocks: Vec<usize>,
    pub workers: usize,
    pub repeats: usize,
}

impl Default for Sweep {
    fn default() -> Self {
        Self {
            segment_lens: SWEEP_SEGMENT_LENS.to_vec(),
            ring_blocks: SWEEP_RING_BLOCKS.to_vec(),
            workers: 1,
            repeats: 1,
        }
    }
}

impl Sweep {
    pub fn configs(&self) -> Vec<BlockParams> {
        let mut out = Vec::with_capacity(self.segment_lens.len() * self.ring_blocks.len());
        for &seg in &self.segment_lens {
            for &rb in &self.ring_blocks {
                out.push(BlockParams {
                    ring_block: rb,
                    beta_segment_len: seg,
                    alm_segment_len: seg,
                    rings_per_task: 1,
                    workers: self.workers,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    /// Every swept configuration with its best wall time in seconds.
    pub timings: Vec<(BlockParams, f64)>,
    pub best: BlockParams,
    /// `(lmax, best params, best time)` for every tuned size.
    pub per_size_best: Vec<(usize, BlockParams, f64)>,
    /// Every configuration produced the same map bits.
    pub identical_output: bool,
}

impl TuneResult {
    pub fn csv(&self) -> String {
        let mut out = String::from("ring_block,segment_len,seconds\n");
        for (p, t) in &self.timings {
            writeln!(out, "{},{},{:.6e}", p.ring_block, p.beta_segment_len, t).unwrap();
        }
        out
    }
}

fn map_bits(map: &SkyMap<f64>) -> Vec<u64> {
    map.values.iter().flatten().map(|v| v.to_bits()).collect()
}

/// Times the monolithic pipeline for every configuration of `sweep` and
/// checks that all of them produce bit-identical maps.
pub fn autotune(lmax: usize, sweep: &Sweep) -> Result<TuneResult> {
    let configs = sweep.configs();
    if configs.is_empty() {
        return Err(Error::InvalidParams("empty autotune sweep".into()));
    }
    let grid = make_ecp_grid::<f64>(lmax);
    let alm = AlmSet::<f64>::gaussian(lmax, lmax, 1, 1.0)?;
    let mut timings = Vec::with_capacity(configs.len());
    let mut reference: Option<Vec<u64>> = None;
    let mut identical = true;
    for params in configs {
        let mut map = None;
        let t = min_duration(sweep.repeats, || {
            let start = Instant::now();
            let d = compute_delta(&alm, &grid, &params)?;
            let m = synthesize_map(&d, &grid)?;
            let elapsed = start.elapsed();
            map = Some(m);
            Ok(elapsed)
        })?;
        let bits = map_bits(map.as_ref().expect("at least one repeat"));
        match &reference {
            None => reference = Some(bits),
            Some(r) => identical &= *r == bits,
        }
        timings.push((params, t.as_secs_f64()));
    }
    let (best, best_t) = timings.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty sweep");
    Ok(TuneResult { timings, best, per_size_best: vec![(lmax, best, best_t)], identical_output: identical })
}

/// [`autotune`] over several sizes; `best` is the winner of the largest.
pub fn autotune_sizes(lmaxes: &[usize], sweep: &Sweep) -> Result<TuneResult> {
    let mut merged: Option<TuneResult> = None;
    for &lmax in lmaxes {
        let r = autotune(lmax, sweep)?;
        merged = Some(match merged {
            None => r,
            Some(mut acc) => {
                acc.per_size_best.extend(r.per_size_best);
                acc.identical_output &= r.identical_output;
                acc.timings = r.timings;
                acc.best = r.best;
                acc
            }
        });
    }
    merged.ok_or_else(|| Error::InvalidParams("no sizes to tune".into()))
}
