use super::{FinalWeights, RunConfig, RunOutput, Simulation};
use crate::data::Federation;
use crate::error::Result;
use crate::numerics::{MlpConfig, WeightVector};
use crate::protocol::{aggregate_weighted, CommLedger, Endpoint};

/// FedAvg: broadcast `wʳ`, local update on every client, then
/// `wʳ⁺¹ = Σ_k (|D_k|/|D|)·w_k` over train-set sizes. 2K transfers per round.
pub fn run_fedavg(fed: &Federation, model: &MlpConfig, cfg: &RunConfig) -> Result<RunOutput> {
    let sim = Simulation::new(fed, model, cfg)?;
    let mut states = sim.client_states();
    let sizes = fed.train_sizes();
    let mut ledger = CommLedger::new();
    let mut global = sim.initial();
    let mut traces = Vec::new();

    for round in 0..cfg.rounds {
        let mut step = || -> Result<WeightVector> {
            for k in 0..sim.k() {
                ledger.log_transfer(round, None, Endpoint::Server, Endpoint::Client(k), sim.dim());
            }
            let incoming = vec![global.clone(); sim.k()];
            let locals = sim.update_all(&mut states, &incoming)?;
            for k in 0..sim.k() {
                ledger.log_transfer(round, None, Endpoint::Client(k), Endpoint::Server, sim.dim());
            }
            aggregate_weighted(&locals, &sizes)
        };
        global = step().map_err(sim.wrap(round))?;
        if sim.should_record(round + 1) {
            traces.push(sim.trace_global(round + 1, &global, &ledger)?);
        }
    }

    Ok(RunOutput {
        strategy: cfg.strategy,
        initial_weights: sim.initial(),
        final_weights: FinalWeights::Global(global),
        traces,
        ledger,
    })
}
