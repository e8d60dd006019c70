use std::path::Path;

use shtsynth::bench::{autotune_sizes, bench_csv, run_benchmark, Sweep, TuneResult};
use shtsynth::layout::{distributed_step1, distributed_step2, redistribute};
use shtsynth::oracle::direct_synthesis;
use shtsynth::{
    exchange_report, make_ecp_grid, plan_layout, AlmSet64, BlockParams, Error, ExchangeReport, RingGrid64,
    SkyMap64,
};

use crate::error::{CliError, Result};
use crate::formats::{
    parse_alm, parse_map, read_bytes, read_text, resolve_grid, write_alm, write_file, write_map,
};
use crate::render::{default_size, render, Image};

/// Largest band limit `verify` accepts.
pub const VERIFY_MAX_LMAX: usize = 32;
pub const VERIFY_TOLERANCE: f64 = 1e-12;

pub fn gen_alm(lmax: usize, mmax: usize, seed: u64, amplitude: f64) -> Result<AlmSet64> {
    if mmax > lmax {
        return Err(CliError::Usage(format!("mmax={mmax} exceeds lmax={lmax}")));
    }
    if !amplitude.is_finite() || amplitude < 0.0 {
        return Err(CliError::Usage(format!("amplitude must be finite and non-negative, got {amplitude}")));
    }
    Ok(AlmSet64::gaussian(lmax, mmax, seed, amplitude)?)
}

pub fn cmd_gen_alm(lmax: usize, mmax: usize, seed: u64, amplitude: f64, out: &Path) -> Result<()> {
    write_file(out, write_alm(&gen_alm(lmax, mmax, seed, amplitude)?))
}

/// Step 1, exchange and step 2 over `procs` virtual processes.
pub fn synth(
    alm: &AlmSet64,
    grid: &RingGrid64,
    procs: usize,
    params: &BlockParams,
) -> Result<(SkyMap64, ExchangeReport)> {
    params.validate()?;
    let plan = plan_layout(grid, alm.mmax(), procs)?;
    let report = exchange_report(&plan, alm.mmax(), grid)?;
    let d = distributed_step1(alm, grid, &plan, params)?;
    let d = redistribute(&d, &plan)?;
    let map = distributed_step2(&d, grid, &plan)?;
    Ok((map, report))
}

pub fn cmd_synth(
    alm_path: &Path,
    grid_spec: &str,
    procs: usize,
    params: &BlockParams,
    out: &Path,
) -> Result<ExchangeReport> {
    let alm = parse_alm(&read_text(alm_path)?)?;
    let grid = resolve_grid(grid_spec)?;
    let (map, report) = synth(&alm, &grid, procs, params)?;
    write_file(out, write_map(&map))?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub lmax: usize,
    pub seed: u64,
    /// `max |map − oracle| / max |oracle|`.
    pub max_rel_error: f64,
    pub passed: bool,
}

impl VerifyReport {
    pub fn line(&self) -> String {
        format!(
            "verify lmax={} seed={} max_rel_error={:.3e} tolerance={:.0e} {}",
            self.lmax,
            self.seed,
            self.max_rel_error,
            VERIFY_TOLERANCE,
            if self.passed { "PASS" } else { "FAIL" }
        )
    }
}

pub fn max_relative_error(map: &SkyMap64, reference: &SkyMap64) -> f64 {
    let scale = reference.max_abs();
    let diff = map
        .values
        .iter()
        .flatten()
        .zip(reference.values.iter().flatten())
        .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Random unit-amplitude coefficients on `ecp:<lmax>`, pipeline against the
/// brute-force sum.
pub fn cmd_verify(lmax: usize, seed: u64, procs: usize, params: &BlockParams) -> Result<VerifyReport> {
    if lmax > VERIFY_MAX_LMAX {
        return Err(Error::TooLarge { lmax, limit: VERIFY_MAX_LMAX }.into());
    }
    let alm = AlmSet64::gaussian(lmax, lmax, seed, 1.0)?;
    let grid = make_ecp_grid(lmax);
    let (map, _) = synth(&alm, &grid, procs, params)?;
    let reference = direct_synthesis(&alm, &grid)?;
    let err = max_relative_error(&map, &reference);
    Ok(VerifyReport { lmax, seed, max_rel_error: err, passed: err < VERIFY_TOLERANCE })
}

pub fn cmd_render(map_path: &Path, out: &Path, size: Option<(usize, usize)>) -> Result<Image> {
    let map = parse_map(&read_bytes(map_path)?)?;
    let (w, h) = size.unwrap_or_else(|| default_size(&map));
    let img = render(&map, w, h)?;
    write_file(out, img.to_ppm())?;
    Ok(img)
}

pub fn cmd_bench(
    lmaxes: &[usize],
    params: &BlockParams,
    procs: usize,
    repeats: usize,
    out: Option<&Path>,
) -> Result<String> {
    params.validate()?;
    let csv = bench_csv(&run_benchmark(lmaxes, params, procs, repeats)?);
    if let Some(path) = out {
        write_file(path, &csv)?;
    }
    Ok(csv)
}

pub fn cmd_autotune(lmaxes: &[usize], sweep: &Sweep, out: Option<&Path>) -> Result<TuneResult> {
    let result = autotune_sizes(lmaxes, sweep)?;
    if let Some(path) = out {
        write_file(path, result.csv())?;
    }
    Ok(result)
}
