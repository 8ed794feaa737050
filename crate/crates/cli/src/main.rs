//! `sgtree`: tables, samples, predictions and experiment runs from the command line.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use sgtree_core::asymptotics::{predict, SolveOptions};
use sgtree_core::harness::{self, sample_stats, write_sample_csv, ExperimentSpec};
use sgtree_core::io::{load_ztable, read_tree_file, save_ztable, write_trees, write_ztable_csv};
use sgtree_core::oracle::oracle_check;
use sgtree_core::sampler::sample_trees;
use sgtree_core::trees::tree_distance;
use sgtree_core::{BuildOptions, WeightFamily, WeightSequence, ZTable};

#[derive(Parser)]
#[command(name = "sgtree", version, about = "Simply generated random trees with superexponential weights")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the Z(N, n) table and write it to a binary container
    Ztable {
        /// Weight family as inline JSON or a path to a JSON file
        #[arg(long)]
        weights: String,
        #[arg(long)]
        nmax: usize,
        /// Also keep exact rational entries for N up to this bound
        #[arg(long)]
        exact_upto: Option<usize>,
        /// Drop convolution terms far below the running row maximum
        #[arg(long)]
        truncate: bool,
        /// Permit nmax above the desk-scale bound
        #[arg(long)]
        allow_large: bool,
        #[arg(long)]
        out: PathBuf,
        /// Write N,n,logZ triples to this path ("-" for stdout)
        #[arg(long)]
        dump_csv: Option<PathBuf>,
    },
    /// Draw exact samples from nu_N
    Sample {
        #[arg(long)]
        weights: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        /// Reuse a table written by `ztable` instead of building one
        #[arg(long)]
        table: Option<PathBuf>,
        /// Output file (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Emit per-sample statistics as CSV instead of trees
        #[arg(long)]
        stats_only: bool,
    },
    /// Print the distance between the trees in two files, line by line
    Distance { file_a: PathBuf, file_b: PathBuf },
    /// Print the asymptotic predictions for weights ((n-1)!)^alpha as JSON
    Predict {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long)]
        n: usize,
    },
    /// Compare the table against exhaustive enumeration and print JSON
    OracleCheck {
        #[arg(long)]
        weights: String,
        #[arg(long)]
        n: usize,
    },
    /// Run an experiment spec and print its report; exits 0 iff every verdict passes
    Experiment {
        #[arg(long)]
        spec: PathBuf,
        /// Write per-sample statistics CSV files into this directory
        #[arg(long)]
        emit_csv: Option<PathBuf>,
        /// Also write the JSON report to this path
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn parse_weights(arg: &str) -> Result<WeightSequence> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).with_context(|| format!("reading weights from {arg}"))?
    };
    let family: WeightFamily = serde_json::from_str(&text).context("parsing weight family")?;
    Ok(WeightSequence::new(family)?)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) if p != Path::new("-") => {
            Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?))
        }
        _ => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Ztable { weights, nmax, exact_upto, truncate, allow_large, out, dump_csv } => {
            let ws = parse_weights(&weights)?;
            let mut opts = BuildOptions::new(nmax).truncate(truncate).allow_large(allow_large);
            if let Some(bound) = exact_upto {
                opts = opts.exact_upto(bound);
            }
            let table = ZTable::build(&ws, &opts)?;
            save_ztable(&table, &out)?;
            if let Some(csv) = dump_csv {
                write_ztable_csv(&table, output(Some(&csv))?)?;
            }
        }
        Command::Sample { weights, n, count, seed, table, out, stats_only } => {
            let ws = parse_weights(&weights)?;
            let table = match table {
                Some(path) => {
                    let t = load_ztable(&path)?;
                    if t.weights() != &ws {
                        bail!("table {} was built for {}, not {}", path.display(), t.weights().family(), ws.family());
                    }
                    t
                }
                None => ZTable::build(&ws, &BuildOptions::new(n))?,
            };
            let trees = sample_trees(&table, n, count, seed)?;
            let mut w = output(out.as_deref())?;
            if stats_only {
                let width = trees.iter().map(|t| t.degree_profile().max_degree).max().unwrap_or(2).max(2);
                let rows: Vec<_> = trees.iter().map(|t| sample_stats(t, width, None)).collect();
                write_sample_csv(&mut w, &rows, None)?;
            } else {
                write_trees(&trees, &mut w)?;
            }
            w.flush()?;
        }
        Command::Distance { file_a, file_b } => {
            let a = read_tree_file(&file_a)?;
            let b = read_tree_file(&file_b)?;
            if a.len() != b.len() {
                bail!("{} holds {} trees but {} holds {}", file_a.display(), a.len(), file_b.display(), b.len());
            }
            let mut w = output(None)?;
            for (x, y) in a.iter().zip(&b) {
                writeln!(w, "{}", tree_distance(x, y))?;
            }
            w.flush()?;
        }
        Command::Predict { alpha, n } => {
            let p = predict(alpha, n, &SolveOptions::default())?;
            println!("{}", serde_json::to_string_pretty(&p)?);
        }
        Command::OracleCheck { weights, n } => {
            let report = oracle_check(&parse_weights(&weights)?, n)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Experiment { spec, emit_csv, report } => {
            let mut spec = ExperimentSpec::load(&spec).with_context(|| format!("loading {}", spec.display()))?;
            if let Some(dir) = emit_csv {
                spec.emit_csv = Some(dir.to_string_lossy().into_owned());
            }
            let result = harness::run(&spec)?;
            let json = result.to_json()?;
            if let Some(path) = report {
                fs::write(&path, &json).with_context(|| format!("writing {}", path.display()))?;
            }
            println!("{json}");
            for v in &result.verdicts {
                eprintln!("{v}");
            }
            return Ok(if result.passed { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
    }
    Ok(ExitCode::SUCCESS)
}
