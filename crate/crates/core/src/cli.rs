//! Command line front end.
//!
//! Every run writes `results.json` (effective configuration, aggregate
//! statistics and full trial reports) and `trials.csv` (one row per trial,
//! schema in [`CsvRow`]) into the output directory. With `--trace N`, each
//! trial also gets `trace_<trial>.csv`.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 numeric fault.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::bits::{bits_to_string, parse_bits};
use crate::circuit::{calibrate_vdw, CalibrationMode};
use crate::config::{RecallSection, RunConfig};
use crate::network::{Trace, TrialReport};
use crate::tasks::graph::{best_known_for, load_biqmac, parse_best_known};
use crate::tasks::image::{fixture_images, parse_image};
use crate::tasks::maxcut::maxcut_experiment;
use crate::tasks::recall::{recall_experiment, PatternSource, RecallOutcome, RecallSpec, TrialPlan};
use crate::tasks::{image_experiment, Hardware};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "spinhop", version, about = "Simulate an all-spintronic DW-MTJ Hopfield network")]
struct Cli {
    /// JSON configuration file, or `default`.
    #[arg(long, global = true, env = "SPINHOP_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "SPINHOP_SEED")]
    seed: Option<u64>,
    #[arg(long, global = true, env = "SPINHOP_DT_PS")]
    dt_ps: Option<f64>,
    #[arg(long, global = true, env = "SPINHOP_T_MAX_NS")]
    t_max_ns: Option<f64>,
    /// Output directory.
    #[arg(long, global = true, env = "SPINHOP_OUT")]
    out: Option<PathBuf>,
    /// Literal variants: midpoint calibration without the track term, N + 1
    /// drive branches.
    #[arg(long, global = true, env = "SPINHOP_PARITY")]
    parity: bool,
    /// Record soma positions every N steps (100 if no value is given) and
    /// write trace_<trial>.csv.
    #[arg(long, global = true, env = "SPINHOP_TRACE", num_args = 0..=1, default_missing_value = "100")]
    trace: Option<usize>,
    /// Print the effective configuration as JSON and exit.
    #[arg(long, global = true)]
    dump_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Associative recall of stored patterns.
    Recall(RecallArgs),
    /// Denoising of 10x10 binary images.
    Image(ImageArgs),
    /// Max-cut on Biq Mac graph files.
    Maxcut(MaxCutArgs),
    /// Print the calibrated soma-to-axon voltage.
    Calibrate(CalibrateArgs),
    /// Recall statistics across network sizes.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct RecallArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Random stored patterns per trial.
    #[arg(long)]
    patterns: Option<usize>,
    /// Fixed stored patterns, comma separated bit strings.
    #[arg(long, value_delimiter = ',')]
    stored: Option<Vec<String>>,
    /// Every stored pattern against every input.
    #[arg(long)]
    exhaustive: bool,
    #[arg(long)]
    trials: Option<usize>,
    /// Present stored patterns with this fraction of bits flipped.
    #[arg(long)]
    distortion: Option<f64>,
}

#[derive(Debug, Args)]
struct ImageArgs {
    /// Image grid files (default: bundled glyphs).
    #[arg(long = "image")]
    images: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<f64>>,
    #[arg(long)]
    trials_per_level: Option<usize>,
}

#[derive(Debug, Args)]
struct MaxCutArgs {
    /// Graph file; repeat for several instances.
    #[arg(long = "graph")]
    graphs: Vec<PathBuf>,
    #[arg(long)]
    best_known: Option<PathBuf>,
    #[arg(long)]
    penalty: Option<f64>,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[arg(long)]
    n: usize,
    /// `balanced`, `eq6`, `eq7`, `eq8` or `explicit:<volts>`.
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    patterns: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    distortion: Option<f64>,
}

pub const CSV_COLUMNS: [&str; 20] = [
    "experiment",
    "trial",
    "n",
    "instance",
    "input",
    "final_bits",
    "converged",
    "t_converge_ns",
    "t_chargeup_ns",
    "energy_nj",
    "chargeup_energy_nj",
    "avg_power_mw",
    "bitwise_accuracy",
    "full_recall",
    "distortion",
    "pixel_error",
    "cut",
    "best_known",
    "ratio",
    "fault",
];

/// One row of `trials.csv`, columns in [`CSV_COLUMNS`] order. Energies in nJ, times in ns, powers in mW.
/// Fields that do not apply to an experiment are empty.
#[derive(Debug, Default, Serialize)]
pub struct CsvRow {
    pub experiment: &'static str,
    pub trial: usize,
    pub n: usize,
    pub instance: String,
    pub input: String,
    pub final_bits: String,
    pub converged: Option<bool>,
    pub t_converge_ns: Option<f64>,
    pub t_chargeup_ns: Option<f64>,
    pub energy_nj: Option<f64>,
    pub chargeup_energy_nj: Option<f64>,
    pub avg_power_mw: Option<f64>,
    pub bitwise_accuracy: Option<f64>,
    pub full_recall: Option<bool>,
    pub distortion: Option<f64>,
    pub pixel_error: Option<usize>,
    pub cut: Option<i64>,
    pub best_known: Option<i64>,
    pub ratio: Option<f64>,
    pub fault: String,
}

impl CsvRow {
    fn with_report(mut self, r: Option<&TrialReport>) -> Self {
        if let Some(r) = r {
            self.final_bits = bits_to_string(&r.final_bits);
            self.converged = Some(r.converged);
            self.t_converge_ns = Some(r.t_converge * 1e9);
            self.t_chargeup_ns = Some(r.t_chargeup * 1e9);
            self.energy_nj = Some(r.energy_total * 1e9);
            self.chargeup_energy_nj = Some(r.chargeup_energy.total() * 1e9);
            self.avg_power_mw = Some(r.avg_power * 1e3);
        }
        self
    }
}

struct RunOutput {
    results: serde_json::Value,
    rows: Vec<CsvRow>,
    traces: Vec<(usize, Trace)>,
    summary: String,
    faults: usize,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NumericFault { .. } => 2,
                _ => 1,
            }
        }
    }
}

fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(v) = cli.dt_ps {
        cfg.sim.dt_ps = v;
    }
    if let Some(v) = cli.t_max_ns {
        cfg.sim.t_max_ns = v;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    if cli.parity {
        cfg.apply_parity();
    }
    if cli.trace.is_some() {
        cfg.sim.trace_every = cli.trace;
    }
    match &cli.command {
        Some(Command::Recall(a)) => {
            let r = &mut cfg.recall;
            if let Some(v) = a.n {
                r.n = v;
            }
            if let Some(v) = a.patterns {
                r.patterns = v;
            }
            if a.stored.is_some() {
                r.stored = a.stored.clone();
            }
            if let Some(v) = a.trials {
                r.trials = v;
            }
            r.exhaustive |= a.exhaustive;
            if a.distortion.is_some() {
                r.distortion = a.distortion;
            }
        }
        Some(Command::Image(a)) => {
            if !a.images.is_empty() {
                cfg.image.images = a.images.clone();
            }
            if let Some(v) = &a.levels {
                cfg.image.levels = v.clone();
            }
            if let Some(v) = a.trials_per_level {
                cfg.image.trials_per_level = v;
            }
        }
        Some(Command::Maxcut(a)) => {
            if !a.graphs.is_empty() {
                cfg.maxcut.graphs = a.graphs.clone();
            }
            if a.best_known.is_some() {
                cfg.maxcut.best_known = a.best_known.clone();
            }
            if let Some(v) = a.penalty {
                cfg.maxcut.penalty = v;
            }
        }
        Some(Command::Calibrate(a)) => {
            if let Some(m) = &a.mode {
                cfg.hardware.calibration = m.clone();
            }
        }
        Some(Command::Sweep(a)) => {
            if let Some(v) = &a.sizes {
                cfg.sweep.sizes = v.clone();
            }
            if let Some(v) = a.patterns {
                cfg.sweep.patterns = v;
            }
            if let Some(v) = a.trials {
                cfg.sweep.trials = v;
            }
            if a.distortion.is_some() {
                cfg.sweep.distortion = a.distortion;
            }
        }
        None => {}
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<i32> {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cfg = effective_config(&cli)?;
    if cli.dump_config {
        // a closed pipe (`| head`) is not an error worth reporting
        let _ = writeln!(std::io::stdout(), "{}", cfg.to_json());
        return Ok(0);
    }
    let Some(command) = &cli.command else {
        return Err(Error::Config("a subcommand is required unless --dump-config is given".into()));
    };
    let hw = cfg.hardware()?;
    let out = match command {
        Command::Calibrate(a) => {
            let mode: CalibrationMode = cfg.calibration()?;
            let v = calibrate_vdw(&hw.params, a.n, mode)?;
            println!("V_DW = {v:.6} V (N = {}, mode {mode})", a.n);
            return Ok(0);
        }
        Command::Recall(_) => run_recall(&cfg, &hw)?,
        Command::Sweep(_) => run_sweep(&cfg, &hw)?,
        Command::Image(_) => run_image(&cfg, &hw)?,
        Command::Maxcut(_) => run_maxcut(&cfg, &hw)?,
    };
    write_outputs(&cfg, &out)?;
    println!("{}", out.summary);
    if out.faults > 0 {
        eprintln!("{} trial(s) hit a numeric fault", out.faults);
        return Ok(2);
    }
    Ok(0)
}

fn recall_spec(r: &RecallSection, seed: u64) -> Result<RecallSpec> {
    let patterns = match &r.stored {
        Some(list) => PatternSource::Fixed(list.iter().map(|s| parse_bits(s)).collect::<Result<_>>()?),
        None => PatternSource::Random { count: r.patterns },
    };
    let plan = if r.exhaustive { TrialPlan::Exhaustive } else { TrialPlan::Random { trials: r.trials } };
    Ok(RecallSpec { n: r.n, patterns, plan, distortion: r.distortion, normalize: r.normalize, seed })
}

fn recall_rows(out: &RecallOutcome, n: usize, offset: usize, rows: &mut Vec<CsvRow>, traces: &mut Vec<(usize, Trace)>) {
    for t in &out.trials {
        let trial = offset + t.index;
        if let Some(tr) = t.report.as_ref().and_then(|r| r.trace.clone()) {
            traces.push((trial, tr));
        }
        rows.push(
            CsvRow {
                experiment: "recall",
                trial,
                n,
                instance: t.patterns.join(" "),
                input: t.input.clone(),
                bitwise_accuracy: Some(t.bitwise_accuracy),
                full_recall: Some(t.full_recall),
                fault: t.fault.clone().unwrap_or_default(),
                ..CsvRow::default()
            }
            .with_report(t.report.as_ref()),
        );
    }
}

fn recall_summary(s: &crate::tasks::RecallStats) -> String {
    format!(
        "recall n={} patterns={} trials={} full_recall_rate={:.4} bitwise_accuracy={:.4} convergence_rate={:.4} mean_t_converge_ns={:.2} mean_energy_nJ={:.3} chargeup_share={:.3}",
        s.n,
        s.n_patterns,
        s.trials,
        s.full_recall_rate,
        s.bitwise_accuracy,
        s.convergence_rate,
        s.mean_t_converge * 1e9,
        s.mean_energy * 1e9,
        s.mean_chargeup_share
    )
}

fn run_recall(cfg: &RunConfig, hw: &Hardware) -> Result<RunOutput> {
    let r = &cfg.recall;
    let spec = recall_spec(r, cfg.seed)?;
    let out = recall_experiment(&spec, hw)?;
    let (mut rows, mut traces) = (Vec::new(), Vec::new());
    recall_rows(&out, r.n, 0, &mut rows, &mut traces);
    Ok(RunOutput {
        summary: recall_summary(&out.stats),
        faults: out.stats.faults,
        results: json!({ "config": cfg, "experiment": "recall", "stats": out.stats, "trials": out.trials }),
        rows,
        traces,
    })
}

fn run_sweep(cfg: &RunConfig, hw: &Hardware) -> Result<RunOutput> {
    let s = &cfg.sweep;
    let (mut rows, mut traces, mut all_stats, mut summaries) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut faults = 0;
    for &n in &s.sizes {
        let section = RecallSection {
            n,
            patterns: s.patterns,
            stored: None,
            exhaustive: false,
            trials: s.trials,
            distortion: s.distortion,
            normalize: s.normalize,
        };
        let spec = recall_spec(&section, cfg.seed)?;
        let out = recall_experiment(&spec, hw)?;
        recall_rows(&out, n, rows.len(), &mut rows, &mut traces);
        for r in rows.iter_mut().filter(|r| r.n == n) {
            r.experiment = "sweep";
        }
        faults += out.stats.faults;
        summaries.push(recall_summary(&out.stats));
        all_stats.push(out.stats);
    }
    Ok(RunOutput {
        summary: summaries.join("\n"),
        faults,
        results: json!({ "config": cfg, "experiment": "sweep", "stats": all_stats }),
        rows,
        traces,
    })
}

fn run_image(cfg: &RunConfig, hw: &Hardware) -> Result<RunOutput> {
    let im = &cfg.image;
    let images: Vec<(String, Vec<bool>)> = if im.images.is_empty() {
        fixture_images()
    } else {
        im.images
            .iter()
            .map(|p| {
                let text = fs::read_to_string(p).map_err(|e| Error::Input(format!("cannot read {}: {e}", p.display())))?;
                Ok((p.display().to_string(), parse_image(&text)?))
            })
            .collect::<Result<_>>()?
    };
    let bits: Vec<Vec<bool>> = images.iter().map(|(_, b)| b.clone()).collect();
    let out = image_experiment(&bits, &im.levels, im.trials_per_level, cfg.seed, im.normalize, hw)?;
    let mut traces = Vec::new();
    let rows = out
        .trials
        .iter()
        .enumerate()
        .map(|(trial, t)| {
            if let Some(tr) = t.report.as_ref().and_then(|r| r.trace.clone()) {
                traces.push((trial, tr));
            }
            CsvRow {
                experiment: "image",
                trial,
                n: bits[0].len(),
                instance: images[t.image].0.clone(),
                distortion: Some(t.level),
                pixel_error: Some(t.pixel_error),
                fault: t.fault.clone().unwrap_or_default(),
                ..CsvRow::default()
            }
            .with_report(t.report.as_ref())
        })
        .collect();
    let summary = out
        .levels
        .iter()
        .map(|l| format!("image distortion={:.2} trials={} mean_pixel_error={:.2} perfect_rate={:.3}", l.distortion, l.trials, l.mean_pixel_error, l.perfect_rate))
        .collect::<Vec<_>>()
        .join("\n");
    Ok(RunOutput {
        summary,
        faults: out.trials.iter().filter(|t| t.fault.is_some()).count(),
        results: json!({ "config": cfg, "experiment": "image", "levels": out.levels, "trials": out.trials }),
        rows,
        traces,
    })
}

fn run_maxcut(cfg: &RunConfig, hw: &Hardware) -> Result<RunOutput> {
    let m = &cfg.maxcut;
    if m.graphs.is_empty() {
        return Err(Error::Input("maxcut needs at least one --graph file".into()));
    }
    let table = match &m.best_known {
        Some(p) => parse_best_known(&fs::read_to_string(p).map_err(|e| Error::Input(format!("cannot read {}: {e}", p.display())))?)?,
        None => Vec::new(),
    };
    let (mut rows, mut traces, mut outcomes) = (Vec::new(), Vec::new(), Vec::new());
    let mut faults = 0;
    for (trial, path) in m.graphs.iter().enumerate() {
        let graph = load_biqmac(path).map_err(|e| match e {
            Error::Io(io) => Error::Input(format!("cannot read {}: {io}", path.display())),
            Error::Parse { line, msg } => Error::Input(format!("{}:{line}: {msg}", path.display())),
            other => other,
        })?;
        let best = best_known_for(&table, path);
        let name = path.display().to_string();
        match maxcut_experiment(&graph, best, m.penalty, hw) {
            Ok(o) => {
                if let Some(tr) = o.report.trace.clone() {
                    traces.push((trial, tr));
                }
                rows.push(
                    CsvRow {
                        experiment: "maxcut",
                        trial,
                        n: graph.n_nodes(),
                        instance: name.clone(),
                        cut: Some(o.cut),
                        best_known: o.best_known,
                        ratio: o.ratio,
                        ..CsvRow::default()
                    }
                    .with_report(Some(&o.report)),
                );
                outcomes.push(json!({ "instance": name, "outcome": o }));
            }
            Err(e @ Error::NumericFault { .. }) => {
                faults += 1;
                rows.push(CsvRow { experiment: "maxcut", trial, n: graph.n_nodes(), instance: name.clone(), fault: e.to_string(), ..CsvRow::default() });
                outcomes.push(json!({ "instance": name, "fault": e.to_string() }));
            }
            Err(e) => return Err(e),
        }
    }
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    let (cut_sum, best_sum) = rows
        .iter()
        .filter(|r| r.best_known.is_some())
        .fold((0i64, 0i64), |(c, b), r| (c + r.cut.unwrap_or(0), b + r.best_known.unwrap_or(0)));
    let mean_ratio = (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64);
    let aggregate_ratio = (best_sum > 0).then(|| cut_sum as f64 / best_sum as f64);
    let mean_of = |f: fn(&CsvRow) -> Option<f64>| {
        let v: Vec<f64> = rows.iter().filter_map(f).collect();
        if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 }
    };
    let summary = format!(
        "maxcut graphs={} mean_ratio={} aggregate_ratio={} mean_t_converge_ns={:.2} mean_energy_nJ={:.3} mean_power_mW={:.3}",
        rows.len(),
        mean_ratio.map_or("n/a".into(), |r| format!("{r:.4}")),
        aggregate_ratio.map_or("n/a".into(), |r| format!("{r:.4}")),
        mean_of(|r| r.t_converge_ns),
        mean_of(|r| r.energy_nj),
        mean_of(|r| r.avg_power_mw),
    );
    Ok(RunOutput {
        summary,
        faults,
        results: json!({
            "config": cfg,
            "experiment": "maxcut",
            "mean_ratio": mean_ratio,
            "aggregate_ratio": aggregate_ratio,
            "graphs": outcomes,
        }),
        rows,
        traces,
    })
}

fn write_outputs(cfg: &RunConfig, out: &RunOutput) -> Result<()> {
    let dir = &cfg.out_dir;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("results.json"), serde_json::to_string_pretty(&out.results).map_err(|e| Error::Config(e.to_string()))?)?;
    write_csv(&dir.join("trials.csv"), &out.rows)?;
    for (trial, tr) in &out.traces {
        write_trace(&dir.join(format!("trace_{trial}.csv")), tr)?;
    }
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("{other:?}")),
    }
}

fn write_csv(path: &Path, rows: &[CsvRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    if rows.is_empty() {
        w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    }
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn write_trace(path: &Path, tr: &Trace) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let n = tr.soma_positions.first().map_or(0, Vec::len);
    let mut header = vec!["t_ns".to_string()];
    header.extend((0..n).map(|i| format!("soma{i}_nm")));
    w.write_record(&header).map_err(csv_err)?;
    for (t, xs) in tr.t.iter().zip(&tr.soma_positions) {
        let mut rec = vec![format!("{}", t * 1e9)];
        rec.extend(xs.iter().map(|x| format!("{}", x * 1e9)));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
