//! On-disk formats.
//!
//! Coefficient files are text:
//!
//! ```text
//! alm-text 1
//! lmax 2
//! mmax 2
//! real_field 1
//! 0 0 1.2e0 0e0
//! 1 0 -3.1e-1 0e0
//! ...
//! ```
//!
//! one `l m re im` record per line, each pair at most once. Coefficients
//! without a record are zero.
//!
//! Map files are `SHTMAP1\n`, the grid text form (`nrings N` plus one
//! `theta n_phi phi_0` line per ring), then every sample as a little-endian
//! `f64`, ring by ring.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex;
use shtsynth::{make_ecp_grid, AlmSet64, RingGrid64, SkyMap64};

use crate::error::{CliError, Result};

pub const ALM_MAGIC: &str = "alm-text 1";
pub const MAP_MAGIC: &[u8] = b"SHTMAP1\n";

fn header_value<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str> {
    let line = line.ok_or_else(|| CliError::parse("alm", format!("missing `{key}` line")))?;
    let mut parts = line.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some(k), Some(v), None) if k == key => Ok(v),
        _ => Err(CliError::parse("alm", format!("expected `{key} <value>`, got `{line}`"))),
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| CliError::parse("alm", format!("bad {what} `{s}`")))
}

pub fn write_alm(alm: &AlmSet64) -> String {
    let mut out = String::new();
    writeln!(out, "{ALM_MAGIC}").unwrap();
    writeln!(out, "lmax {}", alm.lmax()).unwrap();
    writeln!(out, "mmax {}", alm.mmax()).unwrap();
    writeln!(out, "real_field {}", u8::from(alm.real_field())).unwrap();
    let mut records: Vec<_> = alm.iter().collect();
    records.sort_by_key(|&(l, m, _)| (l, m));
    for (l, m, a) in records {
        writeln!(out, "{l} {m} {:e} {:e}", a.re, a.im).unwrap();
    }
    out
}

pub fn parse_alm(text: &str) -> Result<AlmSet64> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some(ALM_MAGIC) => {}
        other => {
            return Err(CliError::parse(
                "alm",
                format!("expected `{ALM_MAGIC}`, got `{}`", other.unwrap_or("")),
            ))
        }
    }
    let lmax: usize = parse_num(header_value(lines.next(), "lmax")?, "lmax")?;
    let mmax: usize = parse_num(header_value(lines.next(), "mmax")?, "mmax")?;
    let real_field = match header_value(lines.next(), "real_field")? {
        "0" => false,
        "1" => true,
        v => return Err(CliError::parse("alm", format!("real_field must be 0 or 1, got `{v}`"))),
    };
    if mmax > lmax {
        return Err(CliError::parse("alm", format!("mmax={mmax} exceeds lmax={lmax}")));
    }
    let mut alm = AlmSet64::new(lmax, mmax, real_field)?;
    let mut seen = vec![false; alm.len()];
    for line in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 4 {
            return Err(CliError::parse("alm", format!("expected `l m re im`, got `{line}`")));
        }
        let l: usize = parse_num(parts[0], "l")?;
        let m: usize = parse_num(parts[1], "m")?;
        let re: f64 = parse_num(parts[2], "real part")?;
        let im: f64 = parse_num(parts[3], "imaginary part")?;
        if m > l || l > lmax || m > mmax {
            return Err(CliError::parse(
                "alm",
                format!("record ({l}, {m}) outside lmax={lmax}, mmax={mmax}"),
            ));
        }
        let idx = m * (2 * lmax + 3 - m) / 2 + (l - m);
        if std::mem::replace(&mut seen[idx], true) {
            return Err(CliError::parse("alm", format!("duplicate record ({l}, {m})")));
        }
        alm.set(l, m, Complex::new(re, im))?;
    }
    Ok(alm)
}

pub fn write_map(map: &SkyMap64) -> Vec<u8> {
    let mut out = MAP_MAGIC.to_vec();
    out.extend_from_slice(map.grid.to_text().as_bytes());
    for v in map.values.iter().flatten() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn parse_map(bytes: &[u8]) -> Result<SkyMap64> {
    let body =
        bytes.strip_prefix(MAP_MAGIC).ok_or_else(|| CliError::parse("map", "missing SHTMAP1 magic"))?;
    let mut pos = 0;
    let mut next_line = || -> Result<&str> {
        let end = body[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| CliError::parse("map", "truncated grid description"))?;
        let line = std::str::from_utf8(&body[pos..pos + end])
            .map_err(|_| CliError::parse("map", "grid description is not text"))?;
        pos += end + 1;
        Ok(line)
    };
    let header = next_line()?;
    let n_rings: usize = header
        .strip_prefix("nrings ")
        .and_then(|n| n.trim().parse().ok())
        .ok_or_else(|| CliError::parse("map", format!("expected `nrings N`, got `{header}`")))?;
    let mut grid_text = format!("{header}\n");
    for _ in 0..n_rings {
        grid_text.push_str(next_line()?);
        grid_text.push('\n');
    }
    let grid = RingGrid64::from_text(&grid_text)?;
    let samples = &body[pos..];
    let expected = shtsynth::total_pixels(&grid);
    if samples.len() != 8 * expected {
        return Err(CliError::parse(
            "map",
            format!("expected {expected} samples ({} bytes), found {} bytes", 8 * expected, samples.len()),
        ));
    }
    let mut chunks = samples.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let values = grid.rings().iter().map(|r| chunks.by_ref().take(r.n_phi).collect()).collect();
    Ok(SkyMap64 { grid, values })
}

/// `ecp:<lmax>` or the path of a grid text file.
pub fn resolve_grid(spec: &str) -> Result<RingGrid64> {
    if let Some(l) = spec.strip_prefix("ecp:") {
        let lmax = l.parse().map_err(|_| CliError::parse("grid", format!("bad band limit in `{spec}`")))?;
        return Ok(make_ecp_grid(lmax));
    }
    let text = read_text(spec)?;
    Ok(RingGrid64::from_text(&text)?)
}

pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn read_bytes(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn write_file(path: impl AsRef<Path>, data: impl AsRef<[u8]>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, data).map_err(|e| CliError::io(path, e))
}
