//! Spherical harmonic synthesis (`alm2map`) on iso-latitude ring grids.
//!
//! The transform runs in two steps. Step 1 ([`compute_delta`]) evaluates
//! `Δ_m(θ_r) = Σ_l a_lm P_lm(cos θ_r)` for every ring and order with a
//! rescaled three-term Legendre recurrence. Step 2 ([`synthesize_map`]) turns
//! each ring's `Δ_m` row into pixel values with one backward FFT.
//! [`layout`] runs the same pipeline over virtual processes with an explicit
//! all-to-all exchange between the steps.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar for the common cases.
//!
//! ```
//! use shtsynth::{alm2map, make_ecp_grid, AlmSet64, BlockParams};
//! use num_complex::Complex;
//!
//! let mut alm = AlmSet64::new(0, 0, true).unwrap();
//! alm.set(0, 0, Complex::new((4.0 * std::f64::consts::PI).sqrt(), 0.0)).unwrap();
//! let map = alm2map(&alm, &make_ecp_grid(0), &BlockParams::default()).unwrap();
//! assert!(map.values.iter().flatten().all(|v| (v - 1.0).abs() < 1e-15));
//! ```

pub mod bench;
pub mod error;
pub mod grid;
#[doc(hidden)]
pub mod hooks;
pub mod layout;
pub mod legendre;
pub mod oracle;
pub mod ringfft;
pub mod scalar;
pub mod synthesis;

pub use error::{Error, Result};
pub use grid::{make_custom_grid, make_ecp_grid, total_pixels, RingDescriptor, RingGrid};
pub use layout::{
    distributed_alm2map, exchange_report, plan_layout, DistributedDelta, ExchangeReport, LayoutPlan,
};
pub use legendre::{build_rescale_table, compute_mu, eval_plm, legendre_column, RescaleTable};
pub use ringfft::{synthesize_map, synthesize_map_par, SkyMap};
pub use scalar::Real;
pub use synthesis::{compute_delta, compute_delta_pair, AlmSet, BlockParams, DeltaMatrix};

/// Step 1 followed by step 2 on one process.
pub fn alm2map<T: Real>(alm: &AlmSet<T>, grid: &RingGrid<T>, params: &BlockParams) -> Result<SkyMap<T>> {
    let delta = compute_delta(alm, grid, params)?;
    synthesize_map_par(&delta, grid, params.workers)
}

pub type AlmSet64 = AlmSet<f64>;
pub type AlmSet32 = AlmSet<f32>;
pub type RingGrid64 = RingGrid<f64>;
pub type RingGrid32 = RingGrid<f32>;
pub type RingDescriptor64 = RingDescriptor<f64>;
pub type RingDescriptor32 = RingDescriptor<f32>;
pub type DeltaMatrix64 = DeltaMatrix<f64>;
pub type DeltaMatrix32 = DeltaMatrix<f32>;
pub type SkyMap64 = SkyMap<f64>;
pub type SkyMap32 = SkyMap<f32>;
pub type RescaleTable64 = RescaleTable<f64>;
pub type RescaleTable32 = RescaleTable<f32>;
