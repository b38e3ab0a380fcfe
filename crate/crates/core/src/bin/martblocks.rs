use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use martblocks::atoms::{atb_norm_lp_with_certificate, decompose_h1_to_blocks};
use martblocks::experiment::{
    emit_report, parse_exponent, run_experiment, ExperimentSpec, Format, Instance, Kind,
};
use martblocks::gen::{MAX_DEPTH, MAX_DIM, MAX_POINTS};
use martblocks::Result;

#[derive(Parser)]
#[command(
    name = "martblocks",
    version,
    about = "Atomic-block decompositions and randomized property runs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a randomized property experiment and write one row per trial.
    Run {
        #[arg(long, value_parser = |s: &str| s.parse::<Kind>().map_err(|e| e.to_string()))]
        kind: Kind,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = MAX_POINTS)]
        points: usize,
        #[arg(long, default_value_t = MAX_DEPTH)]
        depth: usize,
        #[arg(long, default_value_t = MAX_DIM)]
        dim: usize,
        #[arg(long, value_parser = |s: &str| parse_exponent(s).map_err(|e| e.to_string()))]
        p: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv", value_parser = |s: &str| s.parse::<Format>().map_err(|e| e.to_string()))]
        format: Format,
    },
    /// Decompose a function into certified atomic blocks.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "inf", value_parser = |s: &str| parse_exponent(s).map_err(|e| e.to_string()))]
        p: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact atomic-block norm by linear programming (at most 8 points).
    Lp {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn load(path: &Path) -> Result<Instance> {
    Instance::parse(&std::fs::read_to_string(path)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            kind,
            trials,
            seed,
            points,
            depth,
            dim,
            p,
            out,
            format,
        } => {
            let spec = ExperimentSpec {
                kind,
                trials,
                seed,
                points,
                depth,
                dim,
                p,
            };
            let report = run_experiment(&spec)?;
            let mut w = sink(out.as_deref())?;
            emit_report(&report.rows, format, &mut w)?;
            w.flush()?;
            let s = &report.summary;
            match s.max_ratio {
                Some(r) => eprintln!("{kind}: {}/{} passed, max ratio {r:.6}", s.passes, s.trials),
                None => eprintln!("{kind}: {}/{} passed", s.passes, s.trials),
            }
        }
        Command::Decompose { input, p, out } => {
            let (filt, f) = load(&input)?.build()?;
            let report = decompose_h1_to_blocks(&f, &filt, p)?;
            let mut w = sink(out.as_deref())?;
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w)?;
            w.flush()?;
            eprintln!("cost {}", report.cost);
        }
        Command::Lp { input, out } => {
            let (filt, f) = load(&input)?.build()?;
            let sol = atb_norm_lp_with_certificate(&f, &filt)?;
            println!("{}", sol.value);
            if let Some(path) = out {
                let mut w = sink(Some(&path))?;
                serde_json::to_writer_pretty(&mut w, &sol.report)?;
                writeln!(w)?;
                w.flush()?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
