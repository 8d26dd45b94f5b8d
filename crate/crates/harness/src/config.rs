//! Experiment configuration files.
//!
//! ```toml
//! output_dir = "results/default"
//! master_seed = 0
//! threshold = 50.0
//!
//! [data.synthetic]
//! num_clients = 8
//! num_classes = 10
//! feature_dim = 16
//! samples_per_client = 120
//! shift_scale = 1.0
//!
//! [model]
//! hidden_dims = [64, 32]
//! dropout_rate = 0.5
//!
//! [[runs]]
//! strategy = "fed_star"
//! rounds = 50
//!
//! [sweep]
//! learning_rate = [1e-3, 3e-3, 7e-3, 3e-4]
//! ```
//!
//! Unset run fields take the strategy's reference values. Unknown keys are
//! rejected.

use std::fs;
use std::path::{Path, PathBuf};

use fedsim_core::algorithms::{RunConfig, Strategy};
use fedsim_core::data::DomainShiftSpec;
use fedsim_core::numerics::MlpConfig;
use fedsim_core::{Error, Result};
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    #[serde(default)]
    pub master_seed: u64,
    /// Accuracy (%) for the rounds-to-threshold summary.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Threads per run for concurrent client updates.
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub data: DataSource,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub runs: Vec<RunSection>,
    pub sweep: Option<Sweep>,
}

fn default_threshold() -> f64 {
    50.0
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Synthetic(DomainShiftSpec),
    /// Manifest path; relative paths resolve against the config file.
    Manifest(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "default_hidden")]
    pub hidden_dims: Vec<usize>,
    #[serde(default = "default_dropout")]
    pub dropout_rate: f64,
    /// Initialization seed; defaults to the master seed.
    pub seed: Option<u64>,
}

fn default_hidden() -> Vec<usize> {
    vec![1024, 256]
}

fn default_dropout() -> f64 {
    0.5
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            hidden_dims: default_hidden(),
            dropout_rate: default_dropout(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub strategy: Option<Strategy>,
    pub rounds: Option<usize>,
    pub epochs: Option<usize>,
    pub periods: Option<usize>,
    pub gamma: Option<f64>,
    pub ring_neighbors: Option<usize>,
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub eval_every: Option<usize>,
    pub relay_via_server: Option<bool>,
    pub shuffle_cyclic_order: Option<bool>,
    pub strict_star_aggregation: Option<bool>,
}

/// One swept axis; every run is repeated for each value.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Sweep {
    LearningRate(Vec<f64>),
    Gamma(Vec<f64>),
    Strategy(Vec<Strategy>),
}

impl Sweep {
    fn len(&self) -> usize {
        match self {
            Sweep::LearningRate(v) | Sweep::Gamma(v) => v.len(),
            Sweep::Strategy(v) => v.len(),
        }
    }
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub master_seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub strict_star_aggregation: bool,
    pub relay_via_server: bool,
}

/// A fully resolved run, with a label unique inside its experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedRun {
    pub id: String,
    pub config: RunConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; a relative manifest path is made relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut cfg = Self::from_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), strip_config(e))))?;
        if let DataSource::Manifest(m) = &mut cfg.data {
            if m.is_relative() {
                *m = path.parent().unwrap_or(Path::new(".")).join(&*m);
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.master_seed {
            self.master_seed = seed;
        }
        if let Some(dir) = &o.output_dir {
            self.output_dir = dir.clone();
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
        for run in &mut self.runs {
            if o.strict_star_aggregation {
                run.strict_star_aggregation = Some(true);
            }
            if o.relay_via_server {
                run.relay_via_server = Some(true);
            }
        }
        // flags must also reach runs created from an implicit template
        if self.runs.is_empty() {
            self.runs.push(RunSection {
                strict_star_aggregation: o.strict_star_aggregation.then_some(true),
                relay_via_server: o.relay_via_server.then_some(true),
                ..RunSection::default()
            });
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(sweep) = &self.sweep {
            if sweep.len() == 0 {
                return Err(Error::Config("sweep values must not be empty".into()));
            }
        }
        let strategy_swept = matches!(self.sweep, Some(Sweep::Strategy(_)));
        if self.runs.is_empty() && !strategy_swept {
            return Err(Error::Config("at least one [[runs]] entry is required".into()));
        }
        if !strategy_swept {
            if let Some(i) = self.runs.iter().position(|r| r.strategy.is_none()) {
                return Err(Error::Config(format!("runs[{i}] has no strategy")));
            }
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        if !self.threshold.is_finite() {
            return Err(Error::Config("threshold must be finite".into()));
        }
        self.model_config(1, 1).validate()?;
        if let DataSource::Synthetic(spec) = &self.data {
            spec.validate()?;
        }
        for run in self.plan()? {
            run.config.validate().map_err(|e| Error::Config(format!("run {}: {}", run.id, strip_config(e))))?;
        }
        Ok(())
    }

    pub fn model_config(&self, input_dim: usize, num_classes: usize) -> MlpConfig {
        MlpConfig::new(input_dim, num_classes)
            .with_hidden(self.model.hidden_dims.clone())
            .with_dropout(self.model.dropout_rate)
            .with_seed(self.model.seed.unwrap_or(self.master_seed))
    }

    /// Every run in sweep order: runs outermost, sweep values innermost.
    pub fn plan(&self) -> Result<Vec<PlannedRun>> {
        let templates: Vec<RunSection> = if self.runs.is_empty() {
            vec![RunSection::default()]
        } else {
            self.runs.clone()
        };
        let mut planned = Vec::new();
        for template in &templates {
            let variants: Vec<(RunSection, String)> = match &self.sweep {
                None => vec![(template.clone(), String::new())],
                Some(Sweep::LearningRate(v)) => v
                    .iter()
                    .map(|&lr| (RunSection { learning_rate: Some(lr), ..template.clone() }, format!("-lr{lr}")))
                    .collect(),
                Some(Sweep::Gamma(v)) => v
                    .iter()
                    .map(|&g| (RunSection { gamma: Some(g), ..template.clone() }, format!("-gamma{g}")))
                    .collect(),
                Some(Sweep::Strategy(v)) => v
                    .iter()
                    .map(|&s| (RunSection { strategy: Some(s), ..template.clone() }, String::new()))
                    .collect(),
            };
            for (section, suffix) in variants {
                let config = self.resolve(&section)?;
                let id = format!("{:02}-{}{}", planned.len(), config.strategy, suffix);
                planned.push(PlannedRun { id, config });
            }
        }
        Ok(planned)
    }

    fn resolve(&self, s: &RunSection) -> Result<RunConfig> {
        let strategy = s
            .strategy
            .ok_or_else(|| Error::Config("run has no strategy".into()))?;
        let d = RunConfig::for_strategy(strategy);
        Ok(RunConfig {
            strategy,
            rounds: s.rounds.unwrap_or(d.rounds),
            epochs: s.epochs.unwrap_or(d.epochs),
            periods: s.periods.unwrap_or(d.periods),
            gamma: s.gamma.unwrap_or(d.gamma),
            ring_neighbors: s.ring_neighbors.unwrap_or(d.ring_neighbors),
            learning_rate: s.learning_rate.unwrap_or(d.learning_rate),
            batch_size: s.batch_size.unwrap_or(d.batch_size),
            master_seed: self.master_seed,
            eval_every: s.eval_every.unwrap_or(d.eval_every),
            workers: self.workers,
            relay_via_server: s.relay_via_server.unwrap_or(d.relay_via_server),
            shuffle_cyclic_order: s.shuffle_cyclic_order.unwrap_or(d.shuffle_cyclic_order),
            strict_star_aggregation: s.strict_star_aggregation.unwrap_or(d.strict_star_aggregation),
        })
    }
}

/// Drops the variant prefix so nested config errors do not repeat it.
fn strip_config(e: Error) -> String {
    match e {
        Error::Config(msg) => msg,
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
output_dir = "out"
[data.synthetic]
feature_dim = 4
samples_per_client = 80
num_classes = 4
[[runs]]
strategy = "fedavg"
"#;

    #[test]
    fn defaults_follow_the_strategy() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let plan = cfg.plan().unwrap();
        assert_eq!(plan.len(), 1);
        assert_eq!(plan[0].id, "00-fedavg");
        assert_eq!(plan[0].config, RunConfig::for_strategy(Strategy::Fedavg));
        assert_eq!(cfg.model.hidden_dims, vec![1024, 256]);
    }

    #[test]
    fn lr_sweep_multiplies_runs() {
        let text = format!("{MINIMAL}[[runs]]\nstrategy = \"fed_star\"\n[sweep]\nlearning_rate = [1e-3, 3e-3, 7e-3, 3e-4]\n");
        let plan = ExperimentConfig::from_toml(&text).unwrap().plan().unwrap();
        assert_eq!(plan.len(), 8);
        assert_eq!(plan[1].id, "01-fedavg-lr0.003");
        assert_eq!(plan[7].config.learning_rate, 3e-4);
        assert_eq!(plan[7].config.rounds, 50);
    }

    #[test]
    fn strategy_sweep_without_runs() {
        let text = r#"
output_dir = "out"
data.manifest = "m.toml"
[sweep]
strategy = ["fed_cyclic", "ringfed"]
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let plan = cfg.plan().unwrap();
        assert_eq!(plan.iter().map(|p| p.config.rounds).collect::<Vec<_>>(), vec![150, 50]);
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let text = MINIMAL.replace("strategy = \"fedavg\"", "strategy = \"fedavg\"\nlearning_rat = 0.1");
        let err = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("learning_rat"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let bad = [
            MINIMAL.replace("strategy = \"fedavg\"", "strategy = \"fedprox\""),
            MINIMAL.replace("strategy = \"fedavg\"", "strategy = \"fedavg\"\ngamma = 2.0"),
            format!("{MINIMAL}[sweep]\ngamma = []\n"),
            MINIMAL.replace("[[runs]]\nstrategy = \"fedavg\"\n", ""),
            format!("{MINIMAL}[data.manifest]\n"),
        ];
        for text in bad {
            assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn overrides_reach_every_run() {
        let mut cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        cfg.apply(&Overrides {
            master_seed: Some(9),
            workers: Some(3),
            strict_star_aggregation: true,
            ..Overrides::default()
        });
        let run = &cfg.plan().unwrap()[0].config;
        assert_eq!((run.master_seed, run.workers, run.strict_star_aggregation), (9, 3, true));
        assert_eq!(cfg.model_config(4, 4).seed, 9);
    }
}
