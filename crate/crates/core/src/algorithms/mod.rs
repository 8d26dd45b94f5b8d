//! Orchestration strategies.
//!
//! Every orchestrator starts from the same `w⁰` (drawn from the model seed),
//! gives each client its own training stream, and records a [`RoundTrace`]
//! plus a [`CommLedger`]. Concurrent client updates run on a dedicated rayon
//! pool of `workers` threads and are joined before any exchange, so results
//! do not depend on the worker count.

mod baselines;
mod config;
mod cyclic;
mod fedavg;
mod ring;
mod star;

use rayon::prelude::*;

pub use baselines::{run_centralized, run_local_only};
pub use config::{RunConfig, Strategy};
pub use cyclic::run_fed_cyclic;
pub use fedavg::run_fedavg;
pub use ring::run_ringfed;
pub use star::run_fed_star;

use crate::data::{Federation, View};
use crate::error::{Error, Result};
use crate::metrics::{self, ConfusionMatrix, EvalReport, RoundAccuracy};
use crate::numerics::{MlpConfig, MlpModel, SgdConfig, WeightVector};
use crate::protocol::{client_update, ClientState, CommLedger, GlobalState};

/// Metrics after one round. Accuracies and F1 scores are percentages.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrace {
    /// One-based: the entry for round `r` is taken after `r` rounds completed.
    pub round: usize,
    pub global_accuracy: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    /// Accuracy on each client's own test view.
    pub client_accuracies: Vec<f64>,
    /// Cumulative ledger events so far.
    pub transfers: usize,
}

impl RoundAccuracy for RoundTrace {
    fn round(&self) -> usize {
        self.round
    }

    fn global_accuracy(&self) -> f64 {
        self.global_accuracy
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FinalWeights {
    Global(WeightVector),
    /// One model per client (local-only training).
    PerClient(Vec<WeightVector>),
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub strategy: Strategy,
    pub initial_weights: WeightVector,
    pub final_weights: FinalWeights,
    pub traces: Vec<RoundTrace>,
    pub ledger: CommLedger,
}

impl RunOutput {
    pub fn global_weights(&self) -> Option<&WeightVector> {
        match &self.final_weights {
            FinalWeights::Global(w) => Some(w),
            FinalWeights::PerClient(_) => None,
        }
    }

    pub fn last_trace(&self) -> Option<&RoundTrace> {
        self.traces.last()
    }
}

/// Runs whichever strategy `cfg` names.
pub fn run(fed: &Federation, model: &MlpConfig, cfg: &RunConfig) -> Result<RunOutput> {
    match cfg.strategy {
        Strategy::Fedavg => run_fedavg(fed, model, cfg),
        Strategy::Ringfed => run_ringfed(fed, model, cfg),
        Strategy::FedCyclic => run_fed_cyclic(fed, model, cfg),
        Strategy::FedStar => run_fed_star(fed, model, cfg),
        Strategy::LocalOnly => run_local_only(fed, model, cfg),
        Strategy::Centralized => run_centralized(fed, model, cfg),
    }
}

/// Shared state and helpers for one run.
struct Simulation<'f> {
    fed: &'f Federation,
    cfg: &'f RunConfig,
    global: GlobalState,
    pool: rayon::ThreadPool,
}

impl<'f> Simulation<'f> {
    fn new(fed: &'f Federation, model: &MlpConfig, cfg: &'f RunConfig) -> Result<Self> {
        cfg.validate()?;
        if model.input_dim != fed.feature_dim() || model.num_classes != fed.num_classes {
            return Err(Error::Config(format!(
                "model expects {} features and {} classes, federation has {} and {}",
                model.input_dim,
                model.num_classes,
                fed.feature_dim(),
                fed.num_classes
            )));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", cfg.workers)))?;
        Ok(Self {
            fed,
            cfg,
            global: GlobalState::init(model.clone(), cfg.sgd())?,
            pool,
        })
    }

    fn require_peers(&self) -> Result<()> {
        if self.fed.len() < 2 {
            return Err(Error::Protocol(format!(
                "{} needs at least 2 clients, federation has {}",
                self.cfg.strategy,
                self.fed.len()
            )));
        }
        Ok(())
    }

    fn model(&self) -> &MlpConfig {
        &self.global.model
    }

    fn sgd(&self) -> &SgdConfig {
        &self.global.sgd
    }

    fn dim(&self) -> usize {
        self.global.weights.dim()
    }

    fn k(&self) -> usize {
        self.fed.len()
    }

    fn initial(&self) -> WeightVector {
        self.global.weights.clone()
    }

    fn client_states(&self) -> Vec<ClientState<'f>> {
        self.fed
            .clients
            .iter()
            .map(|ds| ClientState::new(ds, self.initial(), self.cfg.master_seed))
            .collect()
    }

    /// `ClientUpdate` on every client concurrently, client `k` starting from
    /// `incoming[k]`; joins before returning.
    fn update_all(
        &self,
        states: &mut [ClientState<'_>],
        incoming: &[WeightVector],
    ) -> Result<Vec<WeightVector>> {
        let (model, sgd) = (self.model(), self.sgd());
        self.pool.install(|| {
            states
                .par_iter_mut()
                .zip(incoming.par_iter())
                .map(|(state, w)| client_update(state, w, model, sgd))
                .collect()
        })
    }

    fn wrap(&self, round: usize) -> impl FnOnce(Error) -> Error + '_ {
        move |source| Error::Run {
            strategy: self.cfg.strategy.to_string(),
            round,
            source: Box::new(source),
        }
    }

    fn should_record(&self, completed: usize) -> bool {
        completed.is_multiple_of(self.cfg.eval_every) || completed == self.cfg.rounds
    }

    /// Trace entry for a single global model.
    fn trace_global(&self, completed: usize, weights: &WeightVector, ledger: &CommLedger) -> Result<RoundTrace> {
        let net = MlpModel::unflatten(weights, self.model().clone())?;
        let per_client = self
            .fed
            .clients
            .iter()
            .map(|c| client_confusion(&net, c, self.fed.num_classes))
            .collect::<Result<Vec<_>>>()?;
        self.trace_from(completed, per_client, ledger)
    }

    /// Trace entry where client `k` is evaluated with its own model.
    fn trace_per_client(
        &self,
        completed: usize,
        weights: &[WeightVector],
        ledger: &CommLedger,
    ) -> Result<RoundTrace> {
        let per_client = self
            .fed
            .clients
            .iter()
            .zip(weights)
            .map(|(c, w)| {
                let net = MlpModel::unflatten(w, self.model().clone())?;
                client_confusion(&net, c, self.fed.num_classes)
            })
            .collect::<Result<Vec<_>>>()?;
        self.trace_from(completed, per_client, ledger)
    }

    fn trace_from(
        &self,
        completed: usize,
        per_client: Vec<ConfusionMatrix>,
        ledger: &CommLedger,
    ) -> Result<RoundTrace> {
        let mut pooled = ConfusionMatrix::new(self.fed.num_classes);
        let mut client_accuracies = Vec::with_capacity(per_client.len());
        for cm in &per_client {
            pooled.merge(cm)?;
            client_accuracies.push(metrics::report(cm)?.accuracy);
        }
        let EvalReport {
            accuracy,
            macro_f1,
            weighted_f1,
            ..
        } = metrics::report(&pooled)?;
        Ok(RoundTrace {
            round: completed,
            global_accuracy: accuracy,
            macro_f1,
            weighted_f1,
            client_accuracies,
            transfers: ledger.len(),
        })
    }
}

fn client_confusion(
    net: &MlpModel,
    client: &crate::data::ClientDataset,
    num_classes: usize,
) -> Result<ConfusionMatrix> {
    let (x, y) = client.view(View::Test).materialize();
    if y.is_empty() {
        return Err(Error::Protocol(format!(
            "client {} has an empty test set",
            client.client_id
        )));
    }
    metrics::confusion(&net.predict(&x)?, &y, num_classes)
}
