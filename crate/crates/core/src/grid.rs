//! The evaluation grid: every method against every subject, initial
//! spider, target and repeat; plus per-cell aggregation and significance
//! marking.
//!
//! Runs are independent and seeded by their coordinates, so the grid fans
//! out over a rayon pool when the `parallel` feature is on. Results are
//! sorted by coordinates before they leave this module; worker count never
//! changes the output.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{GridError, StatsError};
use crate::policies::{GAConfig, Method, QTable, RLConfig};
use crate::reward::{RewardInput, MAX_TARGET, MIN_TARGET};
use crate::session::{run_session_carrying, InitialKind, RunConfig, DEFAULT_ITERATION_CAP};
use crate::stats::{mean, paired_ttest, sample_std};
use crate::subjects::SubjectPopulation;

pub const DEFAULT_REPEATS: u32 = 10;
/// Cells below this accuracy are not eligible to be the best method.
pub const ACCURACY_THRESHOLD: f64 = 75.0;
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub methods: Vec<Method>,
    pub initial_kinds: Vec<InitialKind>,
    pub targets: Vec<u8>,
    pub repeats: u32,
    pub master_seed: u64,
    pub iteration_cap: usize,
    pub rl: RLConfig,
    pub ga: GAConfig,
    pub reward_input: RewardInput,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            methods: Method::ALL.to_vec(),
            initial_kinds: InitialKind::ALL.to_vec(),
            targets: (MIN_TARGET..=MAX_TARGET).collect(),
            repeats: DEFAULT_REPEATS,
            master_seed: 0,
            iteration_cap: DEFAULT_ITERATION_CAP,
            rl: RLConfig::default(),
            ga: GAConfig::default(),
            reward_input: RewardInput::Continuous,
        }
    }
}

impl GridConfig {
    pub fn run_count(&self, subjects: usize) -> usize {
        self.methods.len() * subjects * self.initial_kinds.len() * self.targets.len() * self.repeats as usize
    }

    fn run_config(&self, method: Method, subject_id: u32, target: u8, kind: InitialKind, repeat: u32) -> RunConfig {
        RunConfig {
            method,
            subject_id,
            target,
            initial_kind: kind,
            repeat_index: repeat,
            iteration_cap: self.iteration_cap,
            master_seed: self.master_seed,
            rl: self.rl,
            ga: self.ga,
            reward_input: self.reward_input,
        }
    }
}

/// One row of the results file. Field order is the CSV column order and the
/// canonical sort order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub initial_kind: InitialKind,
    pub target: u8,
    pub subject_id: u32,
    pub repeat: u32,
    pub success: bool,
    pub spiders_presented: usize,
    pub iterations_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon pool with the given worker count, or the global pool for `None`.
    #[cfg(feature = "parallel")]
    Parallel { workers: Option<usize> },
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        return Execution::Parallel { workers: None };
        #[cfg(not(feature = "parallel"))]
        return Execution::Sequential;
    }
}

impl Execution {
    /// `Some(1)` or a build without the `parallel` feature runs inline.
    pub fn with_workers(workers: Option<usize>) -> Self {
        match workers {
            Some(1) => Execution::Sequential,
            #[cfg(feature = "parallel")]
            w => Execution::Parallel { workers: w },
            #[cfg(not(feature = "parallel"))]
            _ => Execution::Sequential,
        }
    }
}

/// A batch of runs that must execute in order: a single run, or a chain of
/// subjects sharing one Q-table.
type Chain = Vec<RunConfig>;

fn chains(population: &SubjectPopulation, cfg: &GridConfig) -> Vec<Chain> {
    let mut out = Vec::new();
    for &method in &cfg.methods {
        let chained = method.uses_qtable() && cfg.rl.persist_across_subjects;
        for &kind in &cfg.initial_kinds {
            for &target in &cfg.targets {
                for repeat in 0..cfg.repeats {
                    let runs = population
                        .subjects
                        .iter()
                        .map(|s| cfg.run_config(method, s.id, target, kind, repeat));
                    if chained {
                        out.push(runs.collect());
                    } else {
                        out.extend(runs.map(|r| vec![r]));
                    }
                }
            }
        }
    }
    out
}

fn run_chain(population: &SubjectPopulation, chain: &Chain) -> Result<Vec<RunRecord>, GridError> {
    let mut table: Option<QTable> = None;
    chain
        .iter()
        .map(|rc| {
            let subject = &population.subjects[rc.subject_id as usize];
            let r = run_session_carrying(rc, subject, &mut table)?;
            Ok(RunRecord {
                method: rc.method,
                initial_kind: rc.initial_kind,
                target: rc.target,
                subject_id: rc.subject_id,
                repeat: rc.repeat_index,
                success: r.success,
                spiders_presented: r.spiders_presented,
                iterations_used: r.iterations_used,
            })
        })
        .collect()
}

pub fn run_grid(population: &SubjectPopulation, cfg: &GridConfig, exec: Execution) -> Result<Vec<RunRecord>, GridError> {
    run_grid_with_progress(population, cfg, exec, &|_, _| {})
}

/// Runs the grid, calling `progress(done, total)` as runs complete.
pub fn run_grid_with_progress(
    population: &SubjectPopulation,
    cfg: &GridConfig,
    exec: Execution,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<Vec<RunRecord>, GridError> {
    let work = chains(population, cfg);
    let total = cfg.run_count(population.len());
    let done = AtomicUsize::new(0);
    let job = |chain: &Chain| {
        let records = run_chain(population, chain)?;
        let now = done.fetch_add(records.len(), Ordering::Relaxed) + records.len();
        progress(now, total);
        Ok::<_, GridError>(records)
    };

    let batches: Vec<Vec<RunRecord>> = match exec {
        Execution::Sequential => work.iter().map(job).collect::<Result<_, _>>()?,
        #[cfg(feature = "parallel")]
        Execution::Parallel { workers } => {
            use rayon::prelude::*;
            let run = || work.par_iter().map(job).collect::<Result<Vec<_>, _>>();
            match workers {
                None => run()?,
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| GridError::WorkerPool(e.to_string()))?
                    .install(run)?,
            }
        }
    };
    let mut records: Vec<RunRecord> = batches.into_iter().flatten().collect();
    records.sort();
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StressCategory {
    Low,
    Moderate,
    High,
}

impl StressCategory {
    pub const ALL: [StressCategory; 3] = [StressCategory::Low, StressCategory::Moderate, StressCategory::High];

    /// Low is 1-3, moderate 4-6, high 7-9.
    pub fn of_target(target: u8) -> Option<StressCategory> {
        match target {
            1..=3 => Some(StressCategory::Low),
            4..=6 => Some(StressCategory::Moderate),
            7..=9 => Some(StressCategory::High),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            StressCategory::Low => "Low",
            StressCategory::Moderate => "Moderate",
            StressCategory::High => "High",
        }
    }
}

impl fmt::Display for StressCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StressCategory::Low => "low",
            StressCategory::Moderate => "moderate",
            StressCategory::High => "high",
        })
    }
}

/// How the spread of Spiders Presented is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdMode {
    /// Sample std over all successful runs pooled across the category.
    #[default]
    PooledRuns,
    /// Sample std of the category's per-target means.
    TargetMeans,
}

/// Table row coordinate: initial spider and stress category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId {
    pub initial_kind: InitialKind,
    pub category: StressCategory,
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.initial_kind, self.category)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub initial_kind: InitialKind,
    pub stress_category: StressCategory,
    pub method: Method,
    /// Over successful runs; absent when there are none.
    pub mean_presented: Option<f64>,
    pub std_presented: Option<f64>,
    pub accuracy_percent: f64,
    pub n_runs: usize,
    pub n_success: usize,
    /// Accuracy reaches the eligibility threshold.
    pub considered: bool,
}

impl CellSummary {
    pub fn cell(&self) -> CellId {
        CellId { initial_kind: self.initial_kind, category: self.stress_category }
    }
}

type SummaryKey = (InitialKind, StressCategory, Method);

fn key_of(r: &RunRecord) -> Option<SummaryKey> {
    Some((r.initial_kind, StressCategory::of_target(r.target)?, r.method))
}

/// One summary per (initial, category, method) present in `records`, in
/// that order.
pub fn summarize(records: &[RunRecord], std_mode: StdMode) -> Result<Vec<CellSummary>, GridError> {
    if records.is_empty() {
        return Err(GridError::EmptyResults);
    }
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort();
    let mut groups: BTreeMap<SummaryKey, Vec<&RunRecord>> = BTreeMap::new();
    for r in sorted {
        if let Some(k) = key_of(r) {
            groups.entry(k).or_default().push(r);
        }
    }
    Ok(groups
        .into_iter()
        .map(|((initial_kind, stress_category, method), runs)| {
            let presented: Vec<f64> = runs
                .iter()
                .filter(|r| r.success)
                .map(|r| r.spiders_presented as f64)
                .collect();
            let n_success = presented.len();
            let accuracy_percent = 100.0 * n_success as f64 / runs.len() as f64;
            let std_presented = match std_mode {
                StdMode::PooledRuns => sample_std(&presented),
                StdMode::TargetMeans => {
                    let mut by_target: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
                    for r in runs.iter().filter(|r| r.success) {
                        by_target.entry(r.target).or_default().push(r.spiders_presented as f64);
                    }
                    let means: Vec<f64> = by_target.values().filter_map(|v| mean(v)).collect();
                    sample_std(&means)
                }
            };
            CellSummary {
                initial_kind,
                stress_category,
                method,
                mean_presented: mean(&presented),
                std_presented,
                accuracy_percent,
                n_runs: runs.len(),
                n_success,
                considered: accuracy_percent >= ACCURACY_THRESHOLD,
            }
        })
        .collect())
}

/// Per-subject mean Spiders Presented over the subject's successful runs
/// in one cell.
pub fn per_subject_means(records: &[RunRecord], cell: CellId, method: Method) -> BTreeMap<u32, f64> {
    let mut acc: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    let mut sorted: Vec<&RunRecord> = records
        .iter()
        .filter(|r| {
            r.success
                && r.method == method
                && r.initial_kind == cell.initial_kind
                && StressCategory::of_target(r.target) == Some(cell.category)
        })
        .collect();
    sorted.sort();
    for r in sorted {
        let e = acc.entry(r.subject_id).or_default();
        e.0 += r.spiders_presented as f64;
        e.1 += 1;
    }
    acc.into_iter().map(|(id, (sum, n))| (id, sum / n as f64)).collect()
}

/// Two-tailed p-value of a paired test on the subjects both methods solved.
/// `None` when fewer than two subjects pair up.
pub fn paired_p_value(a: &BTreeMap<u32, f64>, b: &BTreeMap<u32, f64>) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = a
        .iter()
        .filter_map(|(id, x)| b.get(id).map(|y| (*x, *y)))
        .unzip();
    match paired_ttest(&xs, &ys) {
        Ok(t) => Some(t.p),
        // identical nonzero differences: the shift is certain
        Err(StatsError::ZeroVariance { .. }) => Some(0.0),
        Err(_) => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Marker {
    /// The best method beats every other method significantly.
    BestSignificant,
    /// Not significantly different from the best (or the best itself when
    /// some method ties with it).
    NotDifferent,
}

impl Marker {
    pub fn symbol(self) -> &'static str {
        match self {
            Marker::BestSignificant => "**",
            Marker::NotDifferent => "*",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonResult {
    pub cell: CellId,
    pub best: Option<Method>,
    /// p-value of each other method against the best; `None` if untestable.
    pub p_values: BTreeMap<Method, Option<f64>>,
    pub markers: BTreeMap<Method, Marker>,
}

/// The considered method with the lowest mean Spiders Presented.
pub fn best_method(cell_summaries: &[CellSummary]) -> Option<Method> {
    cell_summaries
        .iter()
        .filter(|s| s.considered)
        .filter_map(|s| s.mean_presented.map(|m| (s.method, m)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(m, _)| m)
}

/// Applies the marker convention given the best method and its p-values
/// against the others. Untestable comparisons are ignored.
pub fn mark_significance(
    cell: CellId,
    best: Option<Method>,
    p_values: BTreeMap<Method, Option<f64>>,
) -> ComparisonResult {
    let mut markers = BTreeMap::new();
    if let Some(best) = best {
        let tested: Vec<(Method, f64)> = p_values.iter().filter_map(|(m, p)| p.map(|p| (*m, p))).collect();
        if !tested.is_empty() {
            if tested.iter().all(|(_, p)| *p < SIGNIFICANCE_LEVEL) {
                markers.insert(best, Marker::BestSignificant);
            } else {
                markers.insert(best, Marker::NotDifferent);
                for (m, p) in tested {
                    if p >= SIGNIFICANCE_LEVEL {
                        markers.insert(m, Marker::NotDifferent);
                    }
                }
            }
        }
    }
    ComparisonResult { cell, best, p_values, markers }
}

/// Best method, p-values and markers for every cell in `summaries`.
pub fn compare(records: &[RunRecord], summaries: &[CellSummary]) -> Vec<ComparisonResult> {
    let mut cells: BTreeMap<CellId, Vec<&CellSummary>> = BTreeMap::new();
    for s in summaries {
        cells.entry(s.cell()).or_default().push(s);
    }
    cells
        .into_iter()
        .map(|(cell, rows)| {
            let owned: Vec<CellSummary> = rows.into_iter().cloned().collect();
            let best = best_method(&owned);
            let mut p_values = BTreeMap::new();
            if let Some(best) = best {
                let best_means = per_subject_means(records, cell, best);
                for s in owned.iter().filter(|s| s.method != best) {
                    let other = per_subject_means(records, cell, s.method);
                    p_values.insert(s.method, paired_p_value(&best_means, &other));
                }
            }
            mark_significance(cell, best, p_values)
        })
        .collect()
}

pub fn write_results_csv<W: Write>(records: &[RunRecord], out: W) -> Result<(), GridError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a results file; rows come back in canonical order.
pub fn read_results_csv<R: Read>(input: R) -> Result<Vec<RunRecord>, GridError> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut records: Vec<RunRecord> = rdr.deserialize().collect::<Result<_, _>>()?;
    if records.is_empty() {
        return Err(GridError::EmptyResults);
    }
    records.sort();
    Ok(records)
}
