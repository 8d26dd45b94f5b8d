use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::SgdConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Fedavg,
    Ringfed,
    FedCyclic,
    FedStar,
    LocalOnly,
    Centralized,
}

impl Strategy {
    pub const FEDERATED: [Strategy; 4] = [
        Strategy::Fedavg,
        Strategy::Ringfed,
        Strategy::FedCyclic,
        Strategy::FedStar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Fedavg => "fedavg",
            Strategy::Ringfed => "ringfed",
            Strategy::FedCyclic => "fed_cyclic",
            Strategy::FedStar => "fed_star",
            Strategy::LocalOnly => "local_only",
            Strategy::Centralized => "centralized",
        }
    }

    /// Global round budget of the reference setup (FedAvg 250, RingFed 50,
    /// Fed-Cyclic 150, Fed-Star 50); baselines follow FedAvg.
    pub fn reference_rounds(self) -> usize {
        match self {
            Strategy::Fedavg | Strategy::LocalOnly | Strategy::Centralized => 250,
            Strategy::Ringfed | Strategy::FedStar => 50,
            Strategy::FedCyclic => 150,
        }
    }

    /// Whether rounds are split into local-train/pre-aggregate periods.
    pub fn uses_periods(self) -> bool {
        matches!(self, Strategy::Ringfed | Strategy::FedStar)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Strategy::Fedavg,
            Strategy::Ringfed,
            Strategy::FedCyclic,
            Strategy::FedStar,
            Strategy::LocalOnly,
            Strategy::Centralized,
        ]
        .into_iter()
        .find(|st| st.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown strategy '{s}'")))
    }
}

/// Everything one orchestrated run needs besides the data and model shape.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub strategy: Strategy,
    pub rounds: usize,
    pub epochs: usize,
    /// Periods per round; RingFed and Fed-Star only.
    pub periods: usize,
    /// Self weight in RingFed's ring pre-aggregation.
    pub gamma: f64,
    /// Predecessors each RingFed client mixes with.
    pub ring_neighbors: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub master_seed: u64,
    /// Record a trace entry every this many rounds (the last round is always recorded).
    pub eval_every: usize,
    /// Threads for concurrent client updates; results do not depend on it.
    pub workers: usize,
    /// Fed-Cyclic hands weights over through the server instead of directly.
    pub relay_via_server: bool,
    /// Fed-Cyclic visits clients in a fresh seeded order every round.
    pub shuffle_cyclic_order: bool,
    /// Fed-Star's final aggregation uses `(1/K)·Σ(|D_k|/|D|)·w_k` literally.
    pub strict_star_aggregation: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::for_strategy(Strategy::Fedavg)
    }
}

impl RunConfig {
    /// Reference settings: E = 3, P = 2, γ = 0.8, η = 3e-4, b = 64 and the
    /// strategy's reference round budget.
    pub fn for_strategy(strategy: Strategy) -> Self {
        Self {
            strategy,
            rounds: strategy.reference_rounds(),
            epochs: 3,
            periods: 2,
            gamma: 0.8,
            ring_neighbors: 1,
            learning_rate: 3e-4,
            batch_size: 64,
            master_seed: 0,
            eval_every: 1,
            workers: 1,
            relay_via_server: false,
            shuffle_cyclic_order: false,
            strict_star_aggregation: false,
        }
    }

    pub fn sgd(&self) -> SgdConfig {
        SgdConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sgd().validate()?;
        let positive = [
            ("rounds", self.rounds),
            ("periods", self.periods),
            ("eval_every", self.eval_every),
            ("workers", self.workers),
            ("ring_neighbors", self.ring_neighbors),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be >= 1")));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma must be in [0, 1], got {}", self.gamma)));
        }
        Ok(())
    }
}
