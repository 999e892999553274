use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use awe::corpus::{
    parse_alignments, read_feature_archive, write_alignments, write_feature_archive, write_manifest,
};
use awe::embed::{read_embeddings, write_embeddings};
use awe::harness::{
    embed_corpus, entries_jsonl, export_projection_2d, generate_synthetic, run_experiment_with,
    select_best, summary_csv, sweep, SweepAxes, SweepOptions, SynthParams,
};
use awe::samediff::{curves_csv, evaluate_with, evaluation_curves, EvalOptions};
use awe::{Error, ExperimentConfig, SameDiffResult};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

/// Acoustic word embeddings and same-different evaluation.
#[derive(Parser)]
#[command(name = "awe", version)]
struct Cli {
    /// Worker threads for pair scoring and sweeps (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed the evaluated words of an archive into an embedding file.
    Embed(EmbedArgs),
    /// Evaluate an embedding file.
    Eval(EvalArgs),
    /// Run one experiment config end to end.
    Run(RunArgs),
    /// Run the Cartesian product of sweep axes over a base config.
    Sweep(SweepArgs),
    /// Generate a synthetic archive and alignment file.
    Synth(SynthArgs),
    /// Export a 2-D PCA projection of an embedding file as CSV.
    Project(ProjectArgs),
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Override the config's feature archive.
    #[arg(long)]
    archive: Option<PathBuf>,
    /// Override the config's alignment file.
    #[arg(long)]
    alignments: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    embeddings: PathBuf,
    /// Result JSON; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write ROC/PR curve points as CSV.
    #[arg(long)]
    curves: Option<PathBuf>,
    #[arg(long, default_value_t = awe::samediff::DEFAULT_BLOCK_SIZE)]
    block_size: usize,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Record JSON; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SweepArgs {
    /// Base experiment config.
    #[arg(long)]
    config: PathBuf,
    /// JSON object mapping sweep fields to value lists.
    #[arg(long)]
    axes: PathBuf,
    /// Records, one JSON object per line.
    #[arg(long)]
    out: PathBuf,
    /// Summary CSV; defaults to the records path with a .csv extension.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Print the record with the highest AP to stdout.
    #[arg(long)]
    select_best: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Feature archive to write.
    #[arg(long)]
    out: PathBuf,
    /// Alignment TSV; defaults to the archive path with a .tsv extension.
    #[arg(long)]
    alignments: Option<PathBuf>,
    /// Also write the JSONL sidecar manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    types: usize,
    #[arg(long, default_value_t = 10)]
    tokens_per_type: usize,
    #[arg(long, default_value_t = 32)]
    dim: usize,
    #[arg(long, default_value_t = 25)]
    min_frames: usize,
    #[arg(long, default_value_t = 60)]
    max_frames: usize,
    #[arg(long, default_value_t = 10.0)]
    separation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = awe::corpus::DEFAULT_FRAME_RATE_HZ)]
    frame_rate: f64,
}

#[derive(Args)]
struct ProjectArgs {
    embeddings: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct EvalReport {
    config: Option<ExperimentConfig>,
    embedding_dim: usize,
    n_tokens: usize,
    n_types: usize,
    result: SameDiffResult,
}

fn write_out(path: Option<&Path>, text: &str) -> awe::Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => print_stdout(text),
    }
}

// A closed pipe (`awe eval x | head`) is not an error.
fn print_stdout(text: &str) -> awe::Result<()> {
    let mut out = io::stdout().lock();
    match writeln!(out, "{text}").and_then(|_| out.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Error::Io {
            path: "<stdout>".into(),
            source: e,
        }),
        _ => Ok(()),
    }
}

fn pretty<T: Serialize>(value: &T) -> awe::Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::Argument(_) | Error::Config(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn execute(cli: Cli) -> awe::Result<u8> {
    let eval_opts = EvalOptions::default().with_workers(cli.workers);
    match cli.command {
        Command::Embed(a) => {
            let mut config = ExperimentConfig::load(&a.config)?;
            if let Some(p) = a.archive {
                config.feature_archive_path = p;
            }
            if let Some(p) = a.alignments {
                config.alignment_path = p;
            }
            let archive = read_feature_archive(&config.feature_archive_path)?;
            let table = parse_alignments(&config.alignment_path)?;
            let set = embed_corpus(&config, &archive, &table.segments)?;
            write_embeddings(&set, &a.out)?;
            log::info!("wrote {} embeddings of dim {}", set.len(), set.dim());
        }
        Command::Eval(a) => {
            let set = read_embeddings(&a.embeddings)?;
            let mut opts = eval_opts;
            opts.scoring.block_size = a.block_size;
            let result = evaluate_with(&set, opts)?;
            let report = EvalReport {
                config: set.meta.clone(),
                embedding_dim: set.dim(),
                n_tokens: set.len(),
                n_types: set.n_types(),
                result,
            };
            write_out(a.out.as_deref(), &pretty(&report)?)?;
            if let Some(path) = a.curves {
                let points = evaluation_curves(&set, opts.scoring)?;
                write_out(Some(&path), &curves_csv(&points))?;
            }
        }
        Command::Run(a) => {
            let mut config = ExperimentConfig::load(&a.config)?;
            if let Some(seed) = a.seed {
                config.seed = seed;
            }
            let record = run_experiment_with(&config, eval_opts)?;
            write_out(a.out.as_deref(), &pretty(&record)?)?;
        }
        Command::Sweep(a) => {
            let base = ExperimentConfig::load(&a.config)?;
            let axes = SweepAxes::load(&a.axes)?;
            let entries = sweep(
                &base,
                &axes,
                SweepOptions {
                    workers: cli.workers,
                    eval: eval_opts,
                },
            )?;
            write_out(Some(&a.out), &entries_jsonl(&entries)?)?;
            let summary = a.summary.unwrap_or_else(|| a.out.with_extension("csv"));
            write_out(Some(&summary), &summary_csv(&entries))?;
            if a.select_best {
                match select_best(&entries) {
                    Some(best) => print_stdout(&pretty(best)?)?,
                    None => log::error!("no sweep combination succeeded"),
                }
            }
            let failed = entries.iter().filter(|e| !e.is_ok()).count();
            if failed > 0 {
                log::error!("{failed} of {} sweep combinations failed", entries.len());
                return Ok(EXIT_PARTIAL);
            }
        }
        Command::Synth(a) => {
            let params = SynthParams {
                n_types: a.types,
                tokens_per_type: a.tokens_per_type,
                dim: a.dim,
                min_frames: a.min_frames,
                max_frames: a.max_frames,
                separation: a.separation,
                seed: a.seed,
                frame_rate_hz: a.frame_rate,
                ..SynthParams::default()
            };
            let (archive, table) = generate_synthetic(&params)?;
            write_feature_archive(&archive, &a.out)?;
            let tsv = a.alignments.unwrap_or_else(|| a.out.with_extension("tsv"));
            write_alignments(&table, &tsv)?;
            if let Some(m) = a.manifest {
                write_manifest(&archive, m)?;
            }
        }
        Command::Project(a) => {
            let set = read_embeddings(&a.embeddings)?;
            export_projection_2d(&set, &a.out)?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
