//! `spiderpcg`: generate subjects, run the evaluation grid, summarize and
//! compare results, query the reachability oracle and export run traces.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use spider_pcg::grid::{
    compare, read_results_csv, run_grid_with_progress, summarize, write_results_csv, Execution, GridConfig, StdMode,
};
use spider_pcg::policies::parse_methods;
use spider_pcg::report::{summary_markdown, write_summary_csv};
use spider_pcg::session::{run_session, write_trace, InitialKind, RunConfig};
use spider_pcg::subjects::{bfs_distance, generate_population, success_states, SubjectPopulation};
use spider_pcg::{Method, RewardSpec};

#[derive(Parser)]
#[command(name = "spiderpcg", version, about = "Adaptive spider generation on virtual subjects")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a population of virtual subjects.
    GenSubjects {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the evaluation grid and write one CSV row per run.
    Run {
        #[arg(long)]
        subjects: PathBuf,
        /// Comma-separated: rl_zero, rl_random, ga, greedy, random.
        #[arg(long)]
        methods: Option<String>,
        #[arg(long)]
        repeats: Option<u32>,
        /// Master seed; required unless the config file sets master_seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        iteration_cap: Option<usize>,
        /// JSON file with GridConfig fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Worker threads; 1 runs inline. Output does not depend on this.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
    /// Aggregate a results file into per-cell summaries.
    Summarize {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
        #[arg(long, value_enum, default_value_t = StdArg::PooledRuns)]
        std_mode: StdArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Paired t-tests of every method against each cell's best method.
    Compare {
        #[arg(long)]
        results: PathBuf,
    },
    /// Success-set size and shortest move distance for one subject.
    Oracle {
        #[arg(long)]
        subjects: PathBuf,
        #[arg(long)]
        subject_id: u32,
        #[arg(long)]
        target: u8,
        #[arg(long, default_value = "min")]
        initial: String,
    },
    /// Export the presented-spider sequence of one run as JSON lines.
    Trace {
        #[arg(long)]
        subjects: PathBuf,
        #[arg(long)]
        subject_id: u32,
        #[arg(long)]
        method: String,
        #[arg(long)]
        target: u8,
        #[arg(long, default_value = "min")]
        initial: String,
        #[arg(long, default_value_t = 0)]
        repeat: u32,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Markdown,
}

#[derive(Clone, Copy, ValueEnum)]
enum StdArg {
    PooledRuns,
    TargetMeans,
}

enum CliError {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

fn usage(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Usage(e.into())
}

fn data(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Data(e.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::GenSubjects { n, seed, out } => gen_subjects(n, seed, &out),
        Command::Run { subjects, methods, repeats, seed, iteration_cap, config, workers, out, quiet } => {
            let population = load_subjects(&subjects)?;
            let mut cfg = load_config(config.as_deref(), seed)?;
            if let Some(m) = methods {
                cfg.methods = parse_methods(&m).map_err(usage)?;
            }
            if let Some(r) = repeats {
                cfg.repeats = r;
            }
            if let Some(cap) = iteration_cap {
                cfg.iteration_cap = cap;
            }
            if workers == Some(0) {
                return Err(usage(anyhow!("--workers must be at least 1")));
            }
            run(&population, &cfg, workers, &out, quiet)
        }
        Command::Summarize { results, format, std_mode, out } => {
            let records = load_results(&results)?;
            let mode = match std_mode {
                StdArg::PooledRuns => StdMode::PooledRuns,
                StdArg::TargetMeans => StdMode::TargetMeans,
            };
            let summaries = summarize(&records, mode).map_err(data)?;
            let comparisons = compare(&records, &summaries);
            let bytes = match format {
                Format::Markdown => summary_markdown(&summaries, &comparisons).into_bytes(),
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_summary_csv(&summaries, &comparisons, &mut buf).map_err(data)?;
                    buf
                }
            };
            emit(out.as_deref(), &bytes)
        }
        Command::Compare { results } => {
            let records = load_results(&results)?;
            let summaries = summarize(&records, StdMode::PooledRuns).map_err(data)?;
            let mut text = String::new();
            for c in compare(&records, &summaries) {
                let best = c.best.map_or("none (no method reaches 75% accuracy)".to_string(), |m| m.to_string());
                text.push_str(&format!("{}: best {}", c.cell, best));
                if let Some(mark) = c.best.and_then(|b| c.markers.get(&b)) {
                    text.push_str(&format!(" {}", mark.symbol()));
                }
                text.push('\n');
                for (m, p) in &c.p_values {
                    let p = p.map_or("untestable".to_string(), |p| format!("p = {p:.6}"));
                    let mark = c.markers.get(m).map_or("", |mk| mk.symbol());
                    text.push_str(&format!("  vs {m}: {p} {mark}\n"));
                }
            }
            emit(None, text.as_bytes())
        }
        Command::Oracle { subjects, subject_id, target, initial } => {
            let population = load_subjects(&subjects)?;
            let kind: InitialKind = initial.parse().map_err(usage)?;
            RewardSpec::new(target).map_err(usage)?;
            let subject = population
                .get(subject_id)
                .ok_or_else(|| usage(anyhow!("subject {subject_id} not in {}", subjects.display())))?;
            let start = kind.state();
            let hits = success_states(subject, target);
            let mut text = format!(
                "subject {subject_id}, target {target}, initial {kind} {start} (stress {:.4})\n",
                subject.stress(&start)
            );
            text.push_str(&format!("success states: {}\n", hits.len()));
            for s in hits.iter().take(5) {
                text.push_str(&format!("  {s} stress {:.4}\n", subject.stress(s)));
            }
            match bfs_distance(subject, &start, target) {
                Some(d) => text.push_str(&format!("distance: {d}\n")),
                None => text.push_str("distance: unreachable\n"),
            }
            emit(None, text.as_bytes())
        }
        Command::Trace { subjects, subject_id, method, target, initial, repeat, seed, config, out } => {
            let population = load_subjects(&subjects)?;
            let grid = load_config(config.as_deref(), seed)?;
            let method: Method = method.parse().map_err(usage)?;
            let kind: InitialKind = initial.parse().map_err(usage)?;
            let subject = population
                .get(subject_id)
                .ok_or_else(|| usage(anyhow!("subject {subject_id} not in {}", subjects.display())))?;
            let mut rc = RunConfig::new(method, subject_id, target, kind, repeat, grid.master_seed);
            rc.iteration_cap = grid.iteration_cap;
            rc.rl = grid.rl;
            rc.ga = grid.ga;
            rc.reward_input = grid.reward_input;
            let result = run_session(&rc, subject).map_err(usage)?;
            let mut buf = Vec::new();
            write_trace(&result, &mut buf).map_err(data)?;
            emit(out.as_deref(), &buf)
        }
    }
}

fn gen_subjects(n: usize, seed: u64, out: &Path) -> Result<(), CliError> {
    let population = generate_population(n, seed).map_err(usage)?;
    let text = population.to_json();
    fs::write(out, &text)
        .with_context(|| format!("cannot write {}", out.display()))
        .map_err(data)?;
    let digest = hex::encode(Sha256::digest(text.as_bytes()));
    println!("wrote {n} subjects to {} (seed {seed}, sha256 {digest})", out.display());
    Ok(())
}

fn run(population: &SubjectPopulation, cfg: &GridConfig, workers: Option<usize>, out: &Path, quiet: bool) -> Result<(), CliError> {
    let total = cfg.run_count(population.len());
    if !quiet {
        eprintln!("running {total} sessions ({} subjects, {} methods)", population.len(), cfg.methods.len());
    }
    let step = (total / 20).max(1);
    let progress = |done: usize, total: usize| {
        if !quiet && (done % step < 1 || done == total) {
            eprintln!("  {done}/{total}");
        }
    };
    let records = run_grid_with_progress(population, cfg, Execution::with_workers(workers), &progress).map_err(usage)?;
    let mut buf = Vec::new();
    write_results_csv(&records, &mut buf).map_err(data)?;
    fs::write(out, &buf)
        .with_context(|| format!("cannot write {}", out.display()))
        .map_err(data)?;
    if !quiet {
        eprintln!("wrote {} rows to {}", records.len(), out.display());
    }
    Ok(())
}

fn load_subjects(path: &Path) -> Result<SubjectPopulation, CliError> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(data)?;
    SubjectPopulation::from_json(&text)
        .with_context(|| format!("malformed subjects file {}", path.display()))
        .map_err(data)
}

fn load_results(path: &Path) -> Result<Vec<spider_pcg::RunRecord>, CliError> {
    let file = fs::File::open(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(data)?;
    read_results_csv(file)
        .with_context(|| format!("bad results file {}", path.display()))
        .map_err(data)
}

/// Grid settings from an optional config file; `--seed` overrides the file's
/// master_seed, and one of the two must be present.
fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<GridConfig, CliError> {
    let (mut cfg, has_seed) = match path {
        None => (GridConfig::default(), false),
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("cannot read {}", p.display()))
                .map_err(data)?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .with_context(|| format!("malformed config {}", p.display()))
                .map_err(data)?;
            let has_seed = value.get("master_seed").is_some();
            let cfg: GridConfig = serde_json::from_value(value)
                .with_context(|| format!("malformed config {}", p.display()))
                .map_err(data)?;
            (cfg, has_seed)
        }
    };
    match seed {
        Some(s) => cfg.master_seed = s,
        None if has_seed => {}
        None => return Err(usage(anyhow!("a seed is required: pass --seed or set master_seed in --config"))),
    }
    cfg.rl.validate().map_err(usage)?;
    cfg.ga.validate().map_err(usage)?;
    Ok(cfg)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, bytes)
            .with_context(|| format!("cannot write {}", p.display()))
            .map_err(data),
        None => io::stdout().write_all(bytes).map_err(data),
    }
}
