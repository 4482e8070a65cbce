use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use gridtune::config::{apply, load_config};
use gridtune::experiment::{append_results_csv, run_experiment, write_results_csv, DatasetSource, ExperimentConfig, RunManifest};
use gridtune::io::{load_histogram_csv, parse_rect, write_histogram_csv, write_points_csv};
use gridtune::oracle::{run_suite, write_json_lines, SuiteSize};
use gridtune::synth::{synth_points, SynthKind, SynthSpec};
use gridtune::workload::{gen_workload, rects};
use gridtune_core::tuner::{e2e_release, phase1_select};
use gridtune_core::{CellCounts, PointSet, Rect, RngStream, TuneConfig};

#[derive(Parser)]
#[command(name = "gridtune", version, about = "Differentially private grid-size tuning for spatial histograms")]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat key=value config file; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic points CSV.
    Synth {
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        /// Domain as x0,y0,x1,y1.
        #[arg(long, value_parser = parse_rect_arg)]
        domain: Option<Rect>,
        /// clustered, storage_like or uniform.
        #[arg(long, default_value = "clustered")]
        kind: String,
    },
    /// Privately select a grid size and print it.
    Tune(TuneArgs),
    /// Select a grid size and release a noisy histogram CSV.
    Release(TuneArgs),
    /// Answer one rectangle against a released histogram.
    Query {
        #[arg(long)]
        histogram: PathBuf,
        #[arg(long, value_parser = parse_rect_arg)]
        domain: Rect,
        #[arg(long, value_parser = parse_rect_arg)]
        rect: Rect,
    },
    /// Run the full experiment and write the results CSV.
    Bench(BenchArgs),
    /// Run the verification suite and write JSON lines.
    Oracle {
        /// Smaller instance counts for a fast smoke run.
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Points CSV; a synthetic dataset is used when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_parser = parse_rect_arg)]
    domain: Option<Rect>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    eps1_frac: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// response_dependent, global_maxr or global_maxcells.
    #[arg(long)]
    sensitivity_mode: Option<String>,
    /// Comma-separated candidate grid sizes.
    #[arg(long)]
    grid_candidates: Option<String>,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    common: Common,
    /// Print the per-candidate scores and probabilities to stderr.
    #[arg(long)]
    debug: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated: e2e, heuristic, leaky, best.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    dataset_name: Option<String>,
}

fn parse_rect_arg(s: &str) -> Result<Rect, String> {
    parse_rect(s).map_err(|e| e.to_string())
}

fn rect_str(r: &Rect) -> String {
    format!("{},{},{},{}", r.x_min, r.y_min, r.x_max, r.y_max)
}

fn build_config(cli: &Cli, common: Option<&Common>) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &cli.config {
        cfg = load_config(path, cfg).with_context(|| format!("reading config {}", path.display()))?;
    }
    let mut set = |k: &str, v: String| apply(&mut cfg, k, &v);
    if let Some(c) = common {
        if let Some(p) = &c.data {
            set("dataset", p.display().to_string())?;
        }
        if let Some(d) = &c.domain {
            set("domain", rect_str(d))?;
        }
        if let Some(v) = c.epsilon {
            set("epsilon", v.to_string())?;
        }
        if let Some(v) = c.eps1_frac {
            set("eps1_frac", v.to_string())?;
        }
        if let Some(v) = c.delta {
            set("delta", v.to_string())?;
        }
        if let Some(v) = &c.sensitivity_mode {
            set("sensitivity_mode", v.clone())?;
        }
        if let Some(v) = &c.grid_candidates {
            set("grid_candidates", v.clone())?;
        }
    }
    if let Some(s) = cli.seed {
        set("seed", s.to_string())?;
    }
    Ok(cfg)
}

fn output(out: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_data(cfg: &ExperimentConfig) -> anyhow::Result<PointSet> {
    if matches!(cfg.dataset, DatasetSource::File(_)) && cfg.domain.is_none() {
        eprintln!("warning: no --domain given; using the data bounding box, which is not private");
    }
    Ok(cfg.load_dataset()?)
}

fn tune_config(cfg: &ExperimentConfig, ps: &PointSet, debug: bool) -> anyhow::Result<TuneConfig> {
    let master = RngStream::new(cfg.seed, 0);
    let workload = gen_workload(ps.domain(), &cfg.tune_workload, &mut master.fork(1))?;
    let mut grids = cfg.grid_candidates.clone();
    grids.sort_unstable();
    grids.dedup();
    let mut tc = TuneConfig::new(grids, rects(&workload), cfg.budget()?, cfg.delta_for(ps.len()))?;
    tc.sensitivity_mode = cfg.sensitivity_mode;
    tc.debug_diagnostics = debug;
    Ok(tc)
}

fn print_diagnostics(d: &Option<gridtune_core::tuner::TuneDiagnostics>) {
    if let Some(d) = d {
        eprintln!("g,score,sensitivity,probability");
        for i in 0..d.grids.len() {
            eprintln!("{},{},{},{}", d.grids[i], d.scores[i], d.sensitivities[i], d.probabilities[i]);
        }
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(".manifest.jsonl");
    out.with_file_name(name)
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match &cli.cmd {
        Cmd::Synth { n, domain, kind } => {
            let spec = if kind == "uniform" {
                SynthSpec::uniform(*n, domain.unwrap_or(Rect::new(0.0, 0.0, 1.0, 1.0)?))
            } else {
                let k = SynthKind::parse(kind).with_context(|| format!("unknown synthetic kind `{kind}`"))?;
                let spec = SynthSpec::for_kind(k, *n);
                match domain {
                    Some(d) => spec.mapped_to(*d),
                    None => spec,
                }
            };
            let ps = synth_points(&spec, &mut RngStream::new(cli.seed.unwrap_or(0), 0).fork(1))?;
            let mut w = output(&cli.out)?;
            write_points_csv(&mut w, &ps)?;
            w.flush()?;
        }
        Cmd::Tune(args) => {
            let cfg = build_config(&cli, Some(&args.common))?;
            let ps = load_data(&cfg)?;
            let tc = tune_config(&cfg, &ps, args.debug)?;
            // same substream as the first phase of `release`
            let res = phase1_select(&ps, &tc, &mut RngStream::new(cfg.seed, 0).fork(2).fork(1))?;
            print_diagnostics(&res.diagnostics);
            let mut w = output(&cli.out)?;
            writeln!(w, "{}", res.selected_g)?;
            w.flush()?;
        }
        Cmd::Release(args) => {
            let cfg = build_config(&cli, Some(&args.common))?;
            let ps = load_data(&cfg)?;
            let tc = tune_config(&cfg, &ps, args.debug)?;
            let rel = e2e_release(&ps, &tc, &RngStream::new(cfg.seed, 0).fork(2))?;
            print_diagnostics(&rel.tuning.diagnostics);
            eprintln!("selected g = {}, epsilon spent = {}", rel.tuning.selected_g, rel.epsilon_spent);
            let mut w = output(&cli.out)?;
            write_histogram_csv(&mut w, &rel.histogram)?;
            w.flush()?;
        }
        Cmd::Query { histogram, domain, rect } => {
            let h = load_histogram_csv(histogram, *domain)?;
            let mut w = output(&cli.out)?;
            writeln!(w, "{}", h.range_query(rect))?;
            w.flush()?;
        }
        Cmd::Bench(args) => {
            let mut cfg = build_config(&cli, Some(&args.common))?;
            if let Some(m) = &args.method {
                apply(&mut cfg, "method", m)?;
            }
            if let Some(r) = args.repeats {
                cfg.repeats = r;
            }
            if let Some(n) = &args.dataset_name {
                cfg.dataset_name = n.clone();
            }
            let rows = run_experiment(&cfg)?;
            match &cli.out {
                Some(out) => {
                    append_results_csv(out, &rows)?;
                    let path = manifest_path(out);
                    let mut file = OpenOptions::new()
                        .create(true)
                        .append(true)
                        .open(&path)
                        .with_context(|| format!("opening {}", path.display()))?;
                    let line = serde_json::to_string(&RunManifest::new(&cfg, rows.len()))?;
                    writeln!(file, "{line}")?;
                }
                None => {
                    let mut w = output(&None)?;
                    write_results_csv(&mut w, &rows)?;
                    w.flush()?;
                }
            }
        }
        Cmd::Oracle { quick } => {
            let size = if *quick {
                SuiteSize {
                    overlap_cases: 1_000,
                    sensitivity_instances: 3,
                    error_bound_triples: 5,
                    error_bound_trials: 2_000,
                    dp_instances: 2,
                }
            } else {
                SuiteSize::default()
            };
            let records = run_suite(cli.seed.unwrap_or(0), &size)?;
            let mut w = output(&cli.out)?;
            write_json_lines(&mut w, &records)?;
            w.flush()?;
            let failed = records.iter().filter(|r| !r.pass).count();
            if failed > 0 {
                eprintln!("{failed} of {} checks failed", records.len());
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(p) = &cli.out {
        if p.is_dir() {
            eprintln!("error: --out {} is a directory", p.display());
            return ExitCode::FAILURE;
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
