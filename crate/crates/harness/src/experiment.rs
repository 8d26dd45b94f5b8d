//! Executes a planned experiment and writes its result files.
//!
//! Layout under the output directory:
//!
//! - `results.csv`: one row per recorded round of every run
//! - `ledger.csv`: every transfer of every run
//! - `summary.json`: final metrics per run (the only file with a timestamp)
//! - `runs/<run id>/results.csv` and `runs/<run id>/ledger.csv`

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use fedsim_core::algorithms::{self, RoundTrace, RunConfig, RunOutput};
use fedsim_core::data::{generate_federation, load_manifest, Federation};
use fedsim_core::metrics::rounds_to_threshold;
use fedsim_core::protocol::CommLedger;
use fedsim_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::config::{DataSource, ExperimentConfig, PlannedRun};

/// Fixed column set of `results.csv`.
pub const RESULT_COLUMNS: [&str; 13] = [
    "strategy",
    "seed",
    "lr",
    "gamma",
    "P",
    "E",
    "R",
    "round",
    "global_acc",
    "macro_f1",
    "weighted_f1",
    "client_accs",
    "transfers",
];

const LEDGER_COLUMNS: [&str; 9] = [
    "strategy", "seed", "lr", "gamma", "round", "period", "from", "to", "payload_dim",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub id: String,
    pub strategy: String,
    pub seed: u64,
    pub lr: f64,
    pub gamma: f64,
    pub periods: usize,
    pub epochs: usize,
    pub rounds: usize,
    pub global_acc: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub client_accs: Vec<f64>,
    pub transfers: usize,
    pub rounds_to_threshold: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Seconds since the Unix epoch; excluded from reproducibility checks.
    pub generated_at: u64,
    pub master_seed: u64,
    pub threshold: f64,
    pub clients: Vec<String>,
    pub runs: Vec<RunSummary>,
}

impl Summary {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: not a summary file: {e}", path.display())))
    }
}

pub struct ExperimentOutput {
    pub federation: Federation,
    pub runs: Vec<(PlannedRun, RunOutput)>,
    pub summary: Summary,
}

pub fn build_federation(data: &DataSource) -> Result<Federation> {
    match data {
        DataSource::Synthetic(spec) => generate_federation(spec),
        DataSource::Manifest(path) => load_manifest(path),
    }
}

/// Runs every planned run on one shared federation and writes the outputs.
/// All runs share the master seed, hence `w⁰` and the client streams.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let fed = build_federation(&cfg.data)?;
    let model = cfg.model_config(fed.feature_dim(), fed.num_classes);
    let mut runs = Vec::new();
    for planned in cfg.plan()? {
        let out = algorithms::run(&fed, &model, &planned.config)?;
        runs.push((planned, out));
    }
    let summary = Summary {
        generated_at: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        master_seed: cfg.master_seed,
        threshold: cfg.threshold,
        clients: fed.clients.iter().map(|c| c.client_id.clone()).collect(),
        runs: runs
            .iter()
            .map(|(p, out)| summarize(p, out, cfg.threshold))
            .collect::<Result<_>>()?,
    };
    write_outputs(&cfg.output_dir, &runs, &summary)?;
    Ok(ExperimentOutput {
        federation: fed,
        runs,
        summary,
    })
}

fn summarize(planned: &PlannedRun, out: &RunOutput, threshold: f64) -> Result<RunSummary> {
    let last = out
        .last_trace()
        .ok_or_else(|| Error::Metric(format!("run {} recorded no rounds", planned.id)))?;
    let c = &planned.config;
    Ok(RunSummary {
        id: planned.id.clone(),
        strategy: c.strategy.to_string(),
        seed: c.master_seed,
        lr: c.learning_rate,
        gamma: c.gamma,
        periods: c.periods,
        epochs: c.epochs,
        rounds: c.rounds,
        global_acc: last.global_accuracy,
        macro_f1: last.macro_f1,
        weighted_f1: last.weighted_f1,
        client_accs: last.client_accuracies.clone(),
        transfers: out.ledger.len(),
        rounds_to_threshold: rounds_to_threshold(&out.traces, threshold),
    })
}

fn io(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => io(path, source),
        other => Error::Config(format!("{}: {other:?}", path.display())),
    }
}

fn write_outputs(dir: &Path, runs: &[(PlannedRun, RunOutput)], summary: &Summary) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let all: Vec<(&RunConfig, &RunOutput)> = runs.iter().map(|(p, o)| (&p.config, o)).collect();
    write_results(&dir.join("results.csv"), &all)?;
    write_ledger(&dir.join("ledger.csv"), &all)?;
    for (p, o) in runs {
        let run_dir: PathBuf = dir.join("runs").join(&p.id);
        fs::create_dir_all(&run_dir).map_err(|e| io(&run_dir, e))?;
        write_results(&run_dir.join("results.csv"), &[(&p.config, o)])?;
        write_ledger(&run_dir.join("ledger.csv"), &[(&p.config, o)])?;
    }
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(summary).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(&path, text + "\n").map_err(|e| io(&path, e))
}

fn result_row(c: &RunConfig, t: &RoundTrace) -> Vec<String> {
    vec![
        c.strategy.to_string(),
        c.master_seed.to_string(),
        c.learning_rate.to_string(),
        c.gamma.to_string(),
        c.periods.to_string(),
        c.epochs.to_string(),
        c.rounds.to_string(),
        t.round.to_string(),
        t.global_accuracy.to_string(),
        t.macro_f1.to_string(),
        t.weighted_f1.to_string(),
        serde_json::to_string(&t.client_accuracies).expect("finite accuracies"),
        t.transfers.to_string(),
    ]
}

fn write_results(path: &Path, runs: &[(&RunConfig, &RunOutput)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(RESULT_COLUMNS).map_err(|e| csv_err(path, e))?;
    for (c, out) in runs {
        for t in &out.traces {
            w.write_record(result_row(c, t)).map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| io(path, e))
}

fn write_ledger(path: &Path, runs: &[(&RunConfig, &RunOutput)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(LEDGER_COLUMNS).map_err(|e| csv_err(path, e))?;
    for (c, out) in runs {
        write_ledger_rows(&mut w, c, &out.ledger).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io(path, e))
}

fn write_ledger_rows(w: &mut csv::Writer<fs::File>, c: &RunConfig, ledger: &CommLedger) -> csv::Result<()> {
    for e in ledger.events() {
        w.write_record([
            c.strategy.to_string(),
            c.master_seed.to_string(),
            c.learning_rate.to_string(),
            c.gamma.to_string(),
            e.round.to_string(),
            e.period.map(|p| p.to_string()).unwrap_or_default(),
            e.from.to_string(),
            e.to.to_string(),
            e.payload_dim.to_string(),
        ])?;
    }
    Ok(())
}
