//! Experiment runner: repeated end-to-end releases evaluated on fresh
//! random workloads, one results row per (method, repeat, query size).

use std::fmt;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use gridtune_core::baselines::{best_select, heuristic_grid_size, leaky_select, HeuristicParams};
use gridtune_core::tuner::{e2e_release, phase2_release};
use gridtune_core::{PointSet, PrivacyBudget, Rect, RngStream, SensitivityMode, TuneConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::eval::{eval_relative_error, EvalReport};
use crate::io::load_points_csv;
use crate::synth::{synth_points, SynthKind, SynthSpec};
use crate::workload::{gen_workload, rects, WorkloadSpec};
use crate::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    E2e,
    Heuristic,
    Leaky,
    Best,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::E2e, Method::Heuristic, Method::Leaky, Method::Best];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::E2e => "e2e",
            Method::Heuristic => "heuristic",
            Method::Leaky => "leaky",
            Method::Best => "best",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }

    fn stream_label(&self) -> u64 {
        10 + *self as u64
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    File(PathBuf),
    /// A built-in synthetic mixture with this many points.
    Synth { n_points: usize, kind: SynthKind },
}

/// Size-dependent sanity-bound fraction: 0.1 below 10^5 points, 0.01 below
/// 2*10^6, 0.001 above. Keeps `rho = delta * n` in the tens to thousands.
pub fn default_delta(n: usize) -> f64 {
    match n {
        0..100_000 => 0.1,
        100_000..2_000_000 => 0.01,
        _ => 0.001,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub dataset_name: String,
    /// Public domain; defaults to the unit square for synthetic data and to
    /// the bounding box for files.
    pub domain: Option<Rect>,
    pub methods: Vec<Method>,
    pub epsilon: f64,
    pub eps1_frac: f64,
    /// Sanity-bound fraction; `None` picks one from the dataset size
    /// (see [`default_delta`]).
    pub delta: Option<f64>,
    pub sensitivity_mode: SensitivityMode,
    pub grid_candidates: Vec<u32>,
    pub heuristic_c: f64,
    pub tune_workload: WorkloadSpec,
    pub eval_workload: WorkloadSpec,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSource::Synth {
                n_points: 10_000,
                kind: SynthKind::Clustered,
            },
            dataset_name: "synth".into(),
            domain: None,
            methods: vec![Method::E2e],
            epsilon: 1.0,
            eps1_frac: 0.2,
            delta: None,
            sensitivity_mode: SensitivityMode::ResponseDependent,
            grid_candidates: vec![30, 40, 50, 60, 70, 80],
            heuristic_c: 10.0,
            tune_workload: WorkloadSpec::default(),
            eval_workload: WorkloadSpec::default(),
            repeats: 100,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, message: &str| HarnessError::Config {
            key: key.into(),
            message: message.into(),
        };
        if self.repeats == 0 {
            return Err(bad("repeats", "must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(bad("method", "at least one method is required"));
        }
        if self.grid_candidates.is_empty() {
            return Err(bad("grid_candidates", "must not be empty"));
        }
        PrivacyBudget::new(self.epsilon, self.eps1_frac)?;
        Ok(())
    }

    pub fn delta_for(&self, n: usize) -> f64 {
        self.delta.unwrap_or_else(|| default_delta(n))
    }

    pub fn budget(&self) -> Result<PrivacyBudget> {
        Ok(PrivacyBudget::new(self.epsilon, self.eps1_frac)?)
    }

    fn master(&self) -> RngStream {
        RngStream::new(self.seed, 0)
    }

    /// Load or synthesise the dataset; synthetic data depends only on the
    /// master seed.
    pub fn load_dataset(&self) -> Result<PointSet> {
        match &self.dataset {
            DatasetSource::File(path) => Ok(load_points_csv(path, self.domain)?.points),
            DatasetSource::Synth { n_points, kind } => {
                let mut spec = SynthSpec::for_kind(*kind, *n_points);
                if let Some(d) = self.domain {
                    spec = spec.mapped_to(d);
                }
                synth_points(&spec, &mut self.master().fork(1))
            }
        }
    }
}

/// One line of the results CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub dataset: String,
    pub method: Method,
    pub epsilon: f64,
    pub eps1_frac: f64,
    pub delta: f64,
    pub sensitivity_mode: SensitivityMode,
    pub qr_frac: f64,
    pub repeat: usize,
    pub selected_g: u32,
    pub median_rel_err: f64,
    pub zero_true_count: usize,
}

pub const RESULTS_HEADER: &str =
    "dataset,method,epsilon,eps1_frac,delta,sensitivity_mode,qr_frac,repeat,selected_g,median_rel_err,zero_true_count";

impl ResultRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.dataset,
            self.method,
            self.epsilon,
            self.eps1_frac,
            self.delta,
            self.sensitivity_mode.as_str(),
            self.qr_frac,
            self.repeat,
            self.selected_g,
            self.median_rel_err,
            self.zero_true_count
        )
    }
}

/// Run one method on one repeat; returns the selected grid and evaluation.
pub fn run_method(
    cfg: &ExperimentConfig,
    ps: &PointSet,
    method: Method,
    repeat: usize,
) -> Result<(u32, EvalReport)> {
    let rep_rng = cfg.master().fork(1000 + repeat as u64);
    let tune_w = gen_workload(ps.domain(), &cfg.tune_workload, &mut rep_rng.fork(1))?;
    let eval_w = gen_workload(ps.domain(), &cfg.eval_workload, &mut rep_rng.fork(2))?;
    let mut rng = rep_rng.fork(method.stream_label());
    let mut grids = cfg.grid_candidates.clone();
    grids.sort_unstable();
    grids.dedup();

    let (g, report) = match method {
        Method::E2e => {
            let mut tc = TuneConfig::new(grids, rects(&tune_w), cfg.budget()?, cfg.delta_for(ps.len()))?;
            tc.sensitivity_mode = cfg.sensitivity_mode;
            let out = e2e_release(ps, &tc, &rng)?;
            (out.tuning.selected_g, eval_relative_error(&out.histogram, ps, &eval_w))
        }
        Method::Heuristic => {
            let hp = HeuristicParams {
                n: ps.len(),
                epsilon: cfg.epsilon,
                c: cfg.heuristic_c,
            };
            let g = heuristic_grid_size(&hp)?;
            let h = phase2_release(ps, g, cfg.epsilon, &mut rng)?;
            (g, eval_relative_error(&h, ps, &eval_w))
        }
        Method::Leaky => {
            let sel = leaky_select(ps, &grids, &rects(&tune_w), cfg.epsilon, &mut rng)?;
            (sel.selected_g, eval_relative_error(&sel.histogram, ps, &eval_w))
        }
        Method::Best => {
            let (g, h) = best_select(ps, &grids)?;
            (g, eval_relative_error(&h, ps, &eval_w))
        }
    };
    Ok((g, report))
}

/// Run every (method, repeat) pair in parallel. Rows come back sorted by
/// method, repeat and query size, independent of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let ps = cfg.load_dataset()?;
    let mut jobs: Vec<(Method, usize)> = Vec::new();
    let mut methods = cfg.methods.clone();
    methods.sort();
    methods.dedup();
    for &m in &methods {
        for r in 0..cfg.repeats {
            jobs.push((m, r));
        }
    }
    let results: Vec<Result<Vec<ResultRow>>> = jobs
        .par_iter()
        .map(|&(method, repeat)| {
            let (g, report) = run_method(cfg, &ps, method, repeat)?;
            Ok(report
                .by_size
                .iter()
                .map(|s| ResultRow {
                    dataset: cfg.dataset_name.clone(),
                    method,
                    epsilon: cfg.epsilon,
                    eps1_frac: cfg.eps1_frac,
                    delta: cfg.delta_for(ps.len()),
                    sensitivity_mode: cfg.sensitivity_mode,
                    qr_frac: s.size_fraction,
                    repeat,
                    selected_g: g,
                    median_rel_err: s.median,
                    zero_true_count: s.zero_true_count,
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    rows.sort_by(|a, b| {
        (a.method, a.repeat)
            .cmp(&(b.method, b.repeat))
            .then(a.qr_frac.total_cmp(&b.qr_frac))
    });
    Ok(rows)
}

pub fn write_results_csv<W: Write>(mut w: W, rows: &[ResultRow]) -> std::io::Result<()> {
    writeln!(w, "{RESULTS_HEADER}")?;
    write_rows(&mut w, rows)
}

fn write_rows<W: Write>(w: &mut W, rows: &[ResultRow]) -> std::io::Result<()> {
    for r in rows {
        writeln!(w, "{}", r.to_csv())?;
    }
    Ok(())
}

/// Append rows to a results file, writing the header only when the file is
/// new or empty. An existing file with a different header is rejected.
pub fn append_results_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let io = |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = OpenOptions::new()
        .create(true)
        .read(true)
        .append(true)
        .open(path)
        .map_err(io)?;
    let mut first = String::new();
    BufReader::new(&file).read_line(&mut first).map_err(io)?;
    if !first.is_empty() && first.trim_end() != RESULTS_HEADER {
        return Err(HarnessError::Config {
            key: "out".into(),
            message: format!("{} exists with a different header", path.display()),
        });
    }
    let mut w = BufWriter::new(&mut file);
    if first.is_empty() {
        write_results_csv(&mut w, rows).map_err(io)?;
    } else {
        write_rows(&mut w, rows).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reproducibility record written next to the results.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub dataset: String,
    pub dataset_name: String,
    pub domain: Option<[f64; 4]>,
    pub methods: Vec<Method>,
    pub epsilon: f64,
    pub eps1_frac: f64,
    /// `null` when chosen from the dataset size; the rows carry the value used.
    pub delta: Option<f64>,
    pub sensitivity_mode: &'static str,
    pub grid_candidates: Vec<u32>,
    pub heuristic_c: f64,
    pub tune_sizes: Vec<f64>,
    pub tune_positions: usize,
    pub eval_sizes: Vec<f64>,
    pub eval_positions: usize,
    pub repeats: usize,
    pub rows: usize,
}

impl RunManifest {
    pub fn new(cfg: &ExperimentConfig, rows: usize) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            seed: cfg.seed,
            dataset: match &cfg.dataset {
                DatasetSource::File(p) => p.display().to_string(),
                DatasetSource::Synth { n_points, kind } => format!("synth:{}:{n_points}", kind.as_str()),
            },
            dataset_name: cfg.dataset_name.clone(),
            domain: cfg.domain.map(|d| [d.x_min, d.y_min, d.x_max, d.y_max]),
            methods: cfg.methods.clone(),
            epsilon: cfg.epsilon,
            eps1_frac: cfg.eps1_frac,
            delta: cfg.delta,
            sensitivity_mode: cfg.sensitivity_mode.as_str(),
            grid_candidates: cfg.grid_candidates.clone(),
            heuristic_c: cfg.heuristic_c,
            tune_sizes: cfg.tune_workload.size_fractions.clone(),
            tune_positions: cfg.tune_workload.positions_per_size,
            eval_sizes: cfg.eval_workload.size_fractions.clone(),
            eval_positions: cfg.eval_workload.positions_per_size,
            repeats: cfg.repeats,
            rows,
        }
    }
}
