//! In-process model of the distributed data layout.
//!
//! Step 1 is distributed by order: virtual process `i` owns a set of orders
//! `M_i` and computes `Δ_m(r)` for those orders on every ring. An all-to-all
//! block exchange then hands every process the complete `Δ` rows of its ring
//! set `R_i`, and step 2 runs ring by ring. Rings travel with their equator
//! mirror so the parity split stays local to a process.

use std::fmt::Write as _;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::RingGrid;
use crate::ringfft::{fold_modes, RingSynthesizer, SkyMap};
use crate::scalar::Real;
use crate::synthesis::{delta_orders, AlmSet, BlockParams, DeltaMatrix};

/// Bytes per exchanged complex double.
pub const BYTES_PER_VALUE: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutPlan {
    pub n_procs: usize,
    pub mmax: usize,
    pub n_rings: usize,
    pub m_sets: Vec<Vec<usize>>,
    pub ring_sets: Vec<Vec<usize>>,
}

impl LayoutPlan {
    /// Step-1 work per process, `Σ_{m∈M_i} (lmax − m + 1)`.
    pub fn step1_costs(&self, lmax: usize) -> Vec<usize> {
        self.m_sets.iter().map(|ms| ms.iter().map(|&m| lmax + 1 - m).sum()).collect()
    }

    /// Owner of each order and its position inside the owner's set.
    fn order_owners(&self) -> Vec<(usize, usize)> {
        let mut owners = vec![(0, 0); self.mmax + 1];
        for (p, ms) in self.m_sets.iter().enumerate() {
            for (i, &m) in ms.iter().enumerate() {
                owners[m] = (p, i);
            }
        }
        owners
    }
}

/// Orders are dealt in a zig-zag (`i, 2P−1−i, 2P+i, 4P−1−i, …`) so cheap
/// high orders pair with expensive low ones; rings are split into
/// contiguous bands of northern rings, each band taking its mirrors along.
pub fn plan_layout<T: Real>(grid: &RingGrid<T>, mmax: usize, n_procs: usize) -> Result<LayoutPlan> {
    let leads = grid.lead_rings();
    if n_procs == 0 || n_procs > mmax + 1 || n_procs > leads.len() {
        return Err(Error::TooManyProcs { n_procs, mmax, n_rings: grid.n_rings() });
    }
    let mut m_sets = vec![Vec::new(); n_procs];
    for m in 0..=mmax {
        let (chunk, pos) = (m / n_procs, m % n_procs);
        let owner = if chunk % 2 == 0 { pos } else { n_procs - 1 - pos };
        m_sets[owner].push(m);
    }

    let mut ring_sets = Vec::with_capacity(n_procs);
    let base = leads.len() / n_procs;
    let extra = leads.len() % n_procs;
    let mut start = 0;
    for p in 0..n_procs {
        let len = base + usize::from(p < extra);
        let mut rings: Vec<usize> = Vec::with_capacity(2 * len);
        for &r in &leads[start..start + len] {
            rings.push(r);
            let pair = grid.ring(r).pair_index;
            if pair != r {
                rings.push(pair);
            }
        }
        rings.sort_unstable();
        ring_sets.push(rings);
        start += len;
    }
    Ok(LayoutPlan { n_procs, mmax, n_rings: grid.n_rings(), m_sets, ring_sets })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Process `i` holds `Δ_m(r)` for `m ∈ M_i` and every ring.
    ByOrder,
    /// Process `i` holds `Δ_m(r)` for `r ∈ R_i` and every order.
    ByRing,
}

/// One process's block of Δ, stored m-major over its `orders × rings`.
#[derive(Debug, Clone, PartialEq)]
pub struct Slab<T> {
    pub orders: Vec<usize>,
    pub rings: Vec<usize>,
    pub data: Vec<Complex<T>>,
}

impl<T: Real> Slab<T> {
    #[inline]
    pub fn get(&self, order_pos: usize, ring_pos: usize) -> Complex<T> {
        self.data[order_pos * self.rings.len() + ring_pos]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributedDelta<T> {
    pub phase: Phase,
    pub n_rings: usize,
    pub mmax: usize,
    pub slabs: Vec<Slab<T>>,
}

impl<T: Real> DistributedDelta<T> {
    /// Every `(m, r, Δ_m(r))` held by any process, sorted by `(m, r)`.
    pub fn triples(&self) -> Vec<(usize, usize, Complex<T>)> {
        let mut out = Vec::with_capacity(self.n_rings * (self.mmax + 1));
        for slab in &self.slabs {
            for (oi, &m) in slab.orders.iter().enumerate() {
                for (ri, &r) in slab.rings.iter().enumerate() {
                    out.push((m, r, slab.get(oi, ri)));
                }
            }
        }
        out.sort_by_key(|&(m, r, _)| (m, r));
        out
    }

    /// Assembles the full Δ matrix.
    pub fn gather(&self) -> DeltaMatrix<T> {
        let mut d = DeltaMatrix::zeros(self.n_rings, self.mmax);
        for (m, r, v) in self.triples() {
            d.set(r, m, v);
        }
        d
    }
}

fn check_plan<T: Real>(plan: &LayoutPlan, grid: &RingGrid<T>, mmax: usize) -> Result<()> {
    if plan.n_rings != grid.n_rings() || plan.mmax != mmax {
        return Err(Error::DimensionMismatch(format!(
            "plan is for mmax={} on {} rings, data has mmax={mmax} on {} rings",
            plan.mmax,
            plan.n_rings,
            grid.n_rings()
        )));
    }
    Ok(())
}

/// Step 1 on every virtual process.
pub fn distributed_step1<T: Real>(
    alm: &AlmSet<T>,
    grid: &RingGrid<T>,
    plan: &LayoutPlan,
    params: &BlockParams,
) -> Result<DistributedDelta<T>> {
    check_plan(plan, grid, alm.mmax())?;
    let all_rings: Vec<usize> = (0..grid.n_rings()).collect();
    let slabs = plan
        .m_sets
        .iter()
        .map(|orders| {
            let data = delta_orders(alm, grid, orders, params, true)?;
            Ok(Slab { orders: orders.clone(), rings: all_rings.clone(), data })
        })
        .collect::<Result<_>>()?;
    Ok(DistributedDelta { phase: Phase::ByOrder, n_rings: grid.n_rings(), mmax: alm.mmax(), slabs })
}

/// All-to-all exchange from the order layout to the ring layout: process
/// `i` packs one block `M_i × R_j` for every `j`, and `j` unpacks the blocks
/// it receives into its rows.
pub fn redistribute<T: Real>(d: &DistributedDelta<T>, plan: &LayoutPlan) -> Result<DistributedDelta<T>> {
    if d.phase != Phase::ByOrder {
        return Err(Error::PhaseError { expected: "order-distributed" });
    }
    if d.slabs.len() != plan.n_procs || d.mmax != plan.mmax || d.n_rings != plan.n_rings {
        return Err(Error::DimensionMismatch("distributed delta does not match the plan".into()));
    }
    let p = plan.n_procs;
    // send[i][j]: |M_i|·|R_j| values, m-major.
    let send: Vec<Vec<Vec<Complex<T>>>> = d
        .slabs
        .iter()
        .map(|slab| {
            plan.ring_sets
                .iter()
                .map(|rings| {
                    let mut block = Vec::with_capacity(slab.orders.len() * rings.len());
                    for oi in 0..slab.orders.len() {
                        block.extend(rings.iter().map(|&r| slab.get(oi, r)));
                    }
                    block
                })
                .collect()
        })
        .collect();

    let owners = plan.order_owners();
    let orders: Vec<usize> = (0..=plan.mmax).collect();
    let slabs = (0..p)
        .map(|j| {
            let rings = plan.ring_sets[j].clone();
            let mut data = Vec::with_capacity(orders.len() * rings.len());
            for &m in &orders {
                let (src, oi) = owners[m];
                let block = &send[src][j];
                data.extend_from_slice(&block[oi * rings.len()..(oi + 1) * rings.len()]);
            }
            Slab { orders: orders.clone(), rings, data }
        })
        .collect();
    Ok(DistributedDelta { phase: Phase::ByRing, n_rings: d.n_rings, mmax: d.mmax, slabs })
}

/// Step 2 on every virtual process, gathered into one map.
pub fn distributed_step2<T: Real>(
    d: &DistributedDelta<T>,
    grid: &RingGrid<T>,
    plan: &LayoutPlan,
) -> Result<SkyMap<T>> {
    if d.phase != Phase::ByRing {
        return Err(Error::PhaseError { expected: "ring-distributed" });
    }
    check_plan(plan, grid, d.mmax)?;
    let synth = RingSynthesizer::for_grid(grid);
    let mut values: Vec<Vec<T>> = vec![Vec::new(); grid.n_rings()];
    for slab in &d.slabs {
        for (ri, &r) in slab.rings.iter().enumerate() {
            let row: Vec<Complex<T>> = (0..slab.orders.len()).map(|oi| slab.get(oi, ri)).collect();
            values[r] = synth.synthesize(&fold_modes(&row, grid.ring(r)))?;
        }
    }
    Ok(SkyMap { grid: grid.clone(), values })
}

/// Step 1, exchange and step 2 in sequence.
pub fn distributed_alm2map<T: Real>(
    alm: &AlmSet<T>,
    grid: &RingGrid<T>,
    n_procs: usize,
    params: &BlockParams,
) -> Result<SkyMap<T>> {
    let plan = plan_layout(grid, alm.mmax(), n_procs)?;
    let d = distributed_step1(alm, grid, &plan, params)?;
    let d = redistribute(&d, &plan)?;
    distributed_step2(&d, grid, &plan)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeReport {
    /// `counts[i][j] = |M_i|·|R_j|`, values sent from process `i` to `j`.
    pub counts: Vec<Vec<usize>>,
    pub total_values: usize,
    /// Values crossing a process boundary (off-diagonal blocks).
    pub remote_values: usize,
    pub remote_bytes: usize,
    /// Max over processes of values received, divided by the mean.
    pub load_balance: f64,
}

impl ExchangeReport {
    /// Whitespace-separated table `proc_i proc_j values bytes`.
    pub fn to_text(&self) -> String {
        let mut out = String::from("proc_i proc_j values bytes\n");
        for (i, row) in self.counts.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                writeln!(out, "{i} {j} {v} {}", v * BYTES_PER_VALUE).unwrap();
            }
        }
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "exchange: procs={} total_values={} remote_values={} remote_bytes={} load_balance={:.4}",
            self.counts.len(),
            self.total_values,
            self.remote_values,
            self.remote_bytes,
            self.load_balance
        )
    }
}

pub fn exchange_report<T: Real>(
    plan: &LayoutPlan,
    mmax: usize,
    grid: &RingGrid<T>,
) -> Result<ExchangeReport> {
    check_plan(plan, grid, mmax)?;
    let counts: Vec<Vec<usize>> =
        plan.m_sets.iter().map(|ms| plan.ring_sets.iter().map(|rs| ms.len() * rs.len()).collect()).collect();
    let total_values = counts.iter().flatten().sum();
    let remote_values: usize = counts
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().filter(move |(j, _)| *j != i).map(|(_, v)| *v))
        .sum();
    let received: Vec<usize> = (0..plan.n_procs).map(|j| counts.iter().map(|row| row[j]).sum()).collect();
    let mean = received.iter().sum::<usize>() as f64 / plan.n_procs as f64;
    let max = *received.iter().max().unwrap_or(&0) as f64;
    Ok(ExchangeReport {
        counts,
        total_values,
        remote_values,
        remote_bytes: remote_values * BYTES_PER_VALUE,
        load_balance: if mean > 0.0 { max / mean } else { 1.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_ecp_grid;
    use crate::ringfft::synthesize_map;
    use crate::synthesis::compute_delta;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_alm(lmax: usize, seed: u64) -> AlmSet<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut alm = AlmSet::new(lmax, lmax, true).unwrap();
        for m in 0..=lmax {
            for l in m..=lmax {
                let im = if m == 0 { 0.0 } else { rng.random_range(-1.0..1.0) };
                alm.set(l, m, Complex::new(rng.random_range(-1.0..1.0), im)).unwrap();
            }
        }
        alm
    }

    #[test]
    fn single_process_owns_everything() {
        let g = make_ecp_grid::<f64>(5);
        let plan = plan_layout(&g, 5, 1).unwrap();
        assert_eq!(plan.m_sets, vec![(0..=5).collect::<Vec<_>>()]);
        assert_eq!(plan.ring_sets, vec![(0..12).collect::<Vec<_>>()]);
    }

    #[test]
    fn zigzag_pairing() {
        let g = make_ecp_grid::<f64>(3);
        let plan = plan_layout(&g, 3, 2).unwrap();
        assert_eq!(plan.m_sets, vec![vec![0, 3], vec![1, 2]]);
        let costs = plan.step1_costs(3);
        assert_eq!(costs[0], costs[1]);
    }

    #[test]
    fn too_many_procs() {
        let g = make_ecp_grid::<f64>(1);
        assert!(matches!(plan_layout(&g, 1, 3), Err(Error::TooManyProcs { .. })));
        assert!(matches!(plan_layout(&g, 1, 0), Err(Error::TooManyProcs { .. })));
        let g = make_ecp_grid::<f64>(8);
        // 18 rings -> 9 lead rings
        assert!(plan_layout(&g, 12, 9).is_ok());
        assert!(plan_layout(&g, 12, 10).is_err());
    }

    #[test]
    fn rings_travel_with_their_mirror() {
        let g = make_ecp_grid::<f64>(9);
        let plan = plan_layout(&g, 9, 3).unwrap();
        for rs in &plan.ring_sets {
            for &r in rs {
                assert!(rs.contains(&g.ring(r).pair_index));
            }
        }
    }

    #[test]
    fn step1_matches_monolithic_bitwise() {
        let g = make_ecp_grid::<f64>(16);
        let alm = random_alm(16, 21);
        let params = BlockParams::default();
        let mono = compute_delta(&alm, &g, &params).unwrap();
        for p in [1, 2, 4, 8] {
            let plan = plan_layout(&g, 16, p).unwrap();
            let d = distributed_step1(&alm, &g, &plan, &params).unwrap();
            assert_eq!(d.gather(), mono, "P={p}");
        }
    }

    #[test]
    fn zero_alm_gives_zero_slabs() {
        let g = make_ecp_grid::<f64>(6);
        let alm = AlmSet::new(6, 6, true).unwrap();
        let plan = plan_layout(&g, 6, 3).unwrap();
        let d = distributed_step1(&alm, &g, &plan, &BlockParams::default()).unwrap();
        assert!(d.slabs.iter().flat_map(|s| &s.data).all(|v| v.norm() == 0.0));
        let map = distributed_step2(&redistribute(&d, &plan).unwrap(), &g, &plan).unwrap();
        assert!(map.values.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn redistribution_small_case() {
        let g = make_custom_grid_two();
        let alm = random_alm(1, 2);
        let plan = plan_layout(&g, 1, 1).unwrap();
        let d = distributed_step1(&alm, &g, &plan, &BlockParams::default()).unwrap();
        let r = redistribute(&d, &plan).unwrap();
        assert_eq!(r.triples(), d.triples());

        let g = make_ecp_grid::<f64>(1);
        let plan = plan_layout(&g, 1, 2).unwrap();
        let d = distributed_step1(&alm, &g, &plan, &BlockParams::default()).unwrap();
        let r = redistribute(&d, &plan).unwrap();
        assert_eq!(r.phase, Phase::ByRing);
        assert_eq!(r.slabs.iter().map(|s| s.data.len()).sum::<usize>(), 2 * 4);
        assert_eq!(r.triples(), d.triples());
        assert!(matches!(redistribute(&r, &plan), Err(Error::PhaseError { .. })));
        assert!(matches!(distributed_step2(&d, &g, &plan), Err(Error::PhaseError { .. })));
    }

    fn make_custom_grid_two() -> RingGrid<f64> {
        use crate::grid::{make_custom_grid, RingDescriptor};
        make_custom_grid(&[
            RingDescriptor::new(1.0, 3, 0.0),
            RingDescriptor::new(std::f64::consts::PI - 1.0, 3, 0.0),
        ])
        .unwrap()
    }

    #[test]
    fn end_to_end_is_p_invariant() {
        let g = make_ecp_grid::<f64>(16);
        let alm = random_alm(16, 8);
        let params = BlockParams::default();
        let mono = synthesize_map(&compute_delta(&alm, &g, &params).unwrap(), &g).unwrap();
        for p in [1, 2, 3, 4, 8] {
            assert_eq!(distributed_alm2map(&alm, &g, p, &params).unwrap(), mono, "P={p}");
        }
    }

    #[test]
    fn exchange_report_examples() {
        let g = make_ecp_grid::<f64>(7);
        let plan = plan_layout(&g, 15, 2).unwrap();
        let rep = exchange_report(&plan, 15, &g).unwrap();
        assert_eq!(rep.counts[0][1], 64);
        assert_eq!(rep.counts[1][0], 64);
        assert_eq!(rep.total_values, 16 * 16);
        assert_eq!(rep.remote_bytes, 128 * 16);
        assert!(rep.to_text().starts_with("proc_i proc_j values bytes\n0 0 64 1024\n"));

        let plan = plan_layout(&g, 15, 1).unwrap();
        let rep = exchange_report(&plan, 15, &g).unwrap();
        assert_eq!((rep.remote_values, rep.remote_bytes), (0, 0));
        assert_eq!(rep.load_balance, 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn partitions_are_complete_and_disjoint(lmax in 0usize..80, extra in 0usize..20, p in 1usize..12) {
            let mmax = lmax;
            let g = make_ecp_grid::<f64>(lmax + extra);
            let Ok(plan) = plan_layout(&g, mmax, p) else {
                prop_assert!(p > mmax + 1 || p > g.n_rings() / 2);
                return Ok(());
            };
            let mut ms: Vec<usize> = plan.m_sets.concat();
            ms.sort_unstable();
            prop_assert_eq!(ms, (0..=mmax).collect::<Vec<_>>());
            let mut rs: Vec<usize> = plan.ring_sets.concat();
            rs.sort_unstable();
            prop_assert_eq!(rs, (0..g.n_rings()).collect::<Vec<_>>());
            let rep = exchange_report(&plan, mmax, &g).unwrap();
            prop_assert_eq!(rep.total_values, (mmax + 1) * g.n_rings());
            if mmax >= 4 * p {
                let c = plan.step1_costs(mmax);
                let (hi, lo) = (*c.iter().max().unwrap(), *c.iter().min().unwrap());
                prop_assert!(hi as f64 <= 1.1 * lo as f64, "costs {:?}", c);
            }
        }
    }
}
