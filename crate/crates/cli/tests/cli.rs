use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn shtsynth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shtsynth")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = shtsynth(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn err_line(args: &[&str]) -> String {
    let out = shtsynth(args);
    assert!(!out.status.success(), "{args:?} should fail");
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line = stderr.lines().next().unwrap_or("").to_string();
    assert!(line.starts_with("error: "), "not machine-parsable: {stderr}");
    line
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn read(p: &str) -> Vec<u8> {
    std::fs::read(Path::new(p)).unwrap()
}

#[test]
fn gen_alm_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (path(&dir, "a.alm"), path(&dir, "b.alm"));
    ok(&["gen-alm", "--lmax", "12", "--seed", "42", "--out", &a]);
    ok(&["gen-alm", "--lmax", "12", "--seed", "42", "--out", &b]);
    assert_eq!(read(&a), read(&b));

    let zero = path(&dir, "z.alm");
    ok(&["gen-alm", "--lmax", "2", "--mmax", "2", "--amplitude", "0", "--out", &zero]);
    let text = String::from_utf8(read(&zero)).unwrap();
    let records: Vec<&str> = text.lines().skip(4).collect();
    assert_eq!(records.len(), 6);
    assert!(records.iter().all(|r| r.ends_with(" 0e0 0e0")));

    assert!(err_line(&["gen-alm", "--lmax", "2", "--mmax", "3", "--out", &zero]).starts_with("error: cli:"));
}

#[test]
fn synth_constant_field_and_process_invariance() {
    let dir = TempDir::new().unwrap();
    let alm = path(&dir, "mono.alm");
    std::fs::write(
        &alm,
        format!("alm-text 1\nlmax 8\nmmax 8\nreal_field 1\n0 0 {:e} 0e0\n", (4.0 * PI).sqrt()),
    )
    .unwrap();
    let (m1, m4) = (path(&dir, "p1.map"), path(&dir, "p4.map"));
    let summary = ok(&["synth", &alm, "--grid", "ecp:8", "--procs", "1", "--out", &m1]);
    assert!(summary.starts_with("exchange: procs=1 total_values=162"));
    ok(&[
        "synth",
        &alm,
        "--grid",
        "ecp:8",
        "--procs",
        "4",
        "--ring-block",
        "16",
        "--beta-seg",
        "64",
        "--out",
        &m4,
    ]);
    let bytes = read(&m1);
    assert_eq!(bytes, read(&m4));

    let map = shtsynth_cli::formats::parse_map(&bytes).unwrap();
    assert!(map.values.iter().flatten().all(|v| (v - 1.0).abs() < 1e-14));
}

#[test]
fn synth_with_grid_file_and_exchange_table() {
    let dir = TempDir::new().unwrap();
    let (alm, grid, out) = (path(&dir, "r.alm"), path(&dir, "g.txt"), path(&dir, "r.map"));
    ok(&["gen-alm", "--lmax", "6", "--seed", "3", "--out", &alm]);
    std::fs::write(&grid, shtsynth::make_ecp_grid::<f64>(6).to_text()).unwrap();
    let stdout = ok(&["synth", &alm, "--grid", &grid, "--procs", "2", "--exchange-table", "--out", &out]);
    assert!(stdout.contains("proc_i proc_j values bytes"));
    let ecp = path(&dir, "e.map");
    ok(&["synth", &alm, "--grid", "ecp:6", "--out", &ecp]);
    assert_eq!(read(&out), read(&ecp));
}

#[test]
fn synth_errors_name_their_module() {
    let dir = TempDir::new().unwrap();
    let (alm, out) = (path(&dir, "bad.alm"), path(&dir, "o.map"));
    std::fs::write(&alm, "alm-text 1\nlmax 2\nmmax 3\nreal_field 1\n").unwrap();
    assert!(err_line(&["synth", &alm, "--grid", "ecp:2", "--out", &out]).starts_with("error: cli: alm:"));
    assert!(!Path::new(&out).exists());

    ok(&["gen-alm", "--lmax", "4", "--out", &alm]);
    assert!(err_line(&["synth", &alm, "--grid", "ecp:4", "--procs", "9", "--out", &out])
        .starts_with("error: layout:"));

    let grid = path(&dir, "g.txt");
    std::fs::write(&grid, "nrings 2\n0.5 4 0\n2.0 4 0\n").unwrap();
    assert!(err_line(&["synth", &alm, "--grid", &grid, "--out", &out]).starts_with("error: grid:"));
    assert!(err_line(&["synth", &alm, "--grid", "ecp:4", "--ring-block", "0", "--out", &out])
        .starts_with("error: synthesis:"));
    assert!(err_line(&["synth", &alm, "--bogus"]).starts_with("error: cli:"));
}

#[test]
fn verify_command() {
    assert!(ok(&["verify", "--lmax", "8", "--seed", "17"]).contains("PASS"));
    assert!(err_line(&["verify", "--lmax", "64"]).starts_with("error: oracle:"));
}

#[test]
fn render_command() {
    let dir = TempDir::new().unwrap();
    let (alm, map, a, b) =
        (path(&dir, "r.alm"), path(&dir, "r.map"), path(&dir, "a.ppm"), path(&dir, "b.ppm"));
    ok(&["gen-alm", "--lmax", "10", "--seed", "8", "--out", &alm]);
    ok(&["synth", &alm, "--grid", "ecp:10", "--out", &map]);
    let stdout = ok(&["render", &map, "--out", &a]);
    assert!(stdout.starts_with("min=") && !stdout.contains("degenerate"));
    ok(&["render", &map, "--out", &b]);
    assert_eq!(read(&a), read(&b));
    assert!(read(&a).starts_with(b"P6\n22 22\n255\n"));

    let mono = path(&dir, "m.alm");
    std::fs::write(&mono, "alm-text 1\nlmax 1\nmmax 1\nreal_field 1\n0 0 1e0 0e0\n").unwrap();
    ok(&["synth", &mono, "--grid", "ecp:1", "--out", &map]);
    let stdout = ok(&["render", &map, "--out", &a, "--width", "8", "--height", "6"]);
    assert!(stdout.contains("degenerate"));
    let img = read(&a);
    assert!(img.starts_with(b"P6\n8 6\n255\n"));
    assert!(img[b"P6\n8 6\n255\n".len()..].iter().all(|&v| v == 255));

    std::fs::write(&map, b"not a map").unwrap();
    assert!(err_line(&["render", &map, "--out", &a]).starts_with("error: cli: map:"));
}

#[test]
fn bench_and_autotune_write_csv() {
    let dir = TempDir::new().unwrap();
    let csv = path(&dir, "bench.csv");
    let stdout = ok(&["bench", "--lmax", "8,16", "--procs", "2", "--repeats", "2", "--out", &csv]);
    assert_eq!(String::from_utf8(read(&csv)).unwrap(), stdout);
    assert_eq!(stdout.lines().count(), 3);

    let tune = path(&dir, "tune.csv");
    let stdout =
        ok(&["autotune", "--lmax", "8", "--segments", "16,64", "--ring-blocks", "16,32,64", "--out", &tune]);
    assert_eq!(String::from_utf8(read(&tune)).unwrap().lines().count(), 7);
    assert!(stdout.contains("identical_output=true"));
}
