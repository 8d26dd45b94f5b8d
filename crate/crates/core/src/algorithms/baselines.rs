use super::{FinalWeights, RunConfig, RunOutput, Simulation};
use crate::data::Federation;
use crate::error::Result;
use crate::numerics::MlpConfig;
use crate::protocol::{client_update, ClientState, CommLedger};

/// Every client trains alone from `w⁰` for `R·E` epochs; no transfers.
/// Trace entries evaluate each client's test view with its own model.
pub fn run_local_only(fed: &Federation, model: &MlpConfig, cfg: &RunConfig) -> Result<RunOutput> {
    let sim = Simulation::new(fed, model, cfg)?;
    let mut states = sim.client_states();
    let ledger = CommLedger::new();
    let mut weights = vec![sim.initial(); sim.k()];
    let mut traces = Vec::new();

    for round in 0..cfg.rounds {
        weights = sim
            .update_all(&mut states, &weights)
            .map_err(sim.wrap(round))?;
        if sim.should_record(round + 1) {
            traces.push(sim.trace_per_client(round + 1, &weights, &ledger)?);
        }
    }

    Ok(RunOutput {
        strategy: cfg.strategy,
        initial_weights: sim.initial(),
        final_weights: FinalWeights::PerClient(weights),
        traces,
        ledger,
    })
}

/// Plain SGD on the pooled train views of all clients; the reference upper
/// baseline. Evaluated like a global model.
pub fn run_centralized(fed: &Federation, model: &MlpConfig, cfg: &RunConfig) -> Result<RunOutput> {
    let sim = Simulation::new(fed, model, cfg)?;
    let pooled = fed.pooled_train()?;
    let mut state = ClientState::new(&pooled, sim.initial(), cfg.master_seed);
    let ledger = CommLedger::new();
    let mut weights = sim.initial();
    let mut traces = Vec::new();

    for round in 0..cfg.rounds {
        weights = client_update(&mut state, &weights, sim.model(), sim.sgd())
            .map_err(sim.wrap(round))?;
        if sim.should_record(round + 1) {
            traces.push(sim.trace_global(round + 1, &weights, &ledger)?);
        }
    }

    Ok(RunOutput {
        strategy: cfg.strategy,
        initial_weights: sim.initial(),
        final_weights: FinalWeights::Global(weights),
        traces,
        ledger,
    })
}
