use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shtsynth::bench::{Sweep, SWEEP_RING_BLOCKS, SWEEP_SEGMENT_LENS};
use shtsynth::BlockParams;
use shtsynth_cli::commands;
use shtsynth_cli::{CliError, Result};

#[derive(Parser)]
#[command(name = "shtsynth", version, about = "Spherical harmonic synthesis on iso-latitude ring grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Blocking {
    /// Rings advanced together through one staged segment.
    #[arg(long, default_value_t = 64)]
    ring_block: usize,
    /// Length of the staged β segment.
    #[arg(long, default_value_t = 256)]
    beta_seg: usize,
    /// Length of the staged coefficient segment.
    #[arg(long, default_value_t = 256)]
    alm_seg: usize,
    /// Ring blocks per parallel task.
    #[arg(long, default_value_t = 1)]
    rings_per_task: usize,
    /// Worker threads for the Legendre stage.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

impl Blocking {
    fn params(self) -> BlockParams {
        BlockParams {
            ring_block: self.ring_block,
            beta_segment_len: self.beta_seg,
            alm_segment_len: self.alm_seg,
            rings_per_task: self.rings_per_task,
            workers: self.workers,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write Gaussian random coefficients (ChaCha8, seeded) as a text file.
    GenAlm {
        #[arg(long)]
        lmax: usize,
        /// Defaults to lmax.
        #[arg(long)]
        mmax: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Standard deviation of each real and imaginary part.
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthesize a map from a coefficient file.
    Synth {
        /// Coefficient file.
        alm: PathBuf,
        /// `ecp:<lmax>` or a grid description file.
        #[arg(long)]
        grid: String,
        /// Number of virtual processes.
        #[arg(long, default_value_t = 1)]
        procs: usize,
        #[command(flatten)]
        blocking: Blocking,
        #[arg(long)]
        out: PathBuf,
        /// Also print the full process-pair exchange table.
        #[arg(long)]
        exchange_table: bool,
    },
    /// Compare the pipeline with brute-force summation on `ecp:<lmax>`.
    Verify {
        #[arg(long, default_value_t = 8)]
        lmax: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        procs: usize,
        #[command(flatten)]
        blocking: Blocking,
    },
    /// Render a map file as an equirectangular PPM image.
    Render {
        map: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, requires = "height")]
        width: Option<usize>,
        #[arg(long, requires = "width")]
        height: Option<usize>,
    },
    /// Time step 1, the exchange and step 2 on ECP grids; CSV output.
    Bench {
        /// Band limits to time.
        #[arg(long, value_delimiter = ',', default_value = "128,256")]
        lmax: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        procs: usize,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[command(flatten)]
        blocking: Blocking,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep segment lengths and ring-block sizes; CSV output.
    Autotune {
        #[arg(long, value_delimiter = ',', default_value = "128")]
        lmax: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        segments: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        ring_blocks: Option<Vec<usize>>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenAlm { lmax, mmax, seed, amplitude, out } => {
            commands::cmd_gen_alm(lmax, mmax.unwrap_or(lmax), seed, amplitude, &out)
        }
        Command::Synth { alm, grid, procs, blocking, out, exchange_table } => {
            let report = commands::cmd_synth(&alm, &grid, procs, &blocking.params(), &out)?;
            println!("{}", report.summary());
            if exchange_table {
                print!("{}", report.to_text());
            }
            Ok(())
        }
        Command::Verify { lmax, seed, procs, blocking } => {
            let report = commands::cmd_verify(lmax, seed, procs, &blocking.params())?;
            println!("{}", report.line());
            if report.passed {
                Ok(())
            } else {
                Err(CliError::Usage(format!(
                    "verification failed: max relative error {:.3e}",
                    report.max_rel_error
                )))
            }
        }
        Command::Render { map, out, width, height } => {
            let img = commands::cmd_render(&map, &out, width.zip(height))?;
            print!("min={:e} max={:e} size={}x{}", img.min, img.max, img.width, img.height);
            println!("{}", if img.degenerate() { " degenerate" } else { "" });
            Ok(())
        }
        Command::Bench { lmax, procs, repeats, blocking, out } => {
            let csv = commands::cmd_bench(&lmax, &blocking.params(), procs, repeats, out.as_deref())?;
            print!("{csv}");
            Ok(())
        }
        Command::Autotune { lmax, segments, ring_blocks, workers, repeats, out } => {
            let sweep = Sweep {
                segment_lens: segments.unwrap_or_else(|| SWEEP_SEGMENT_LENS.to_vec()),
                ring_blocks: ring_blocks.unwrap_or_else(|| SWEEP_RING_BLOCKS.to_vec()),
                workers,
                repeats,
            };
            let result = commands::cmd_autotune(&lmax, &sweep, out.as_deref())?;
            print!("{}", result.csv());
            for (l, p, t) in &result.per_size_best {
                println!(
                    "best lmax={l} ring_block={} segment_len={} seconds={t:.6e}",
                    p.ring_block, p.beta_segment_len
                );
            }
            println!("identical_output={}", result.identical_output);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error: cli: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report_line());
            ExitCode::FAILURE
        }
    }
}
