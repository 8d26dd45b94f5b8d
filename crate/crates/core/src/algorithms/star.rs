use super::{FinalWeights, RunConfig, RunOutput, Simulation};
use crate::data::Federation;
use crate::error::Result;
use crate::numerics::{MlpConfig, WeightVector};
use crate::protocol::{
    aggregate_weighted, linear_combination, pre_aggregate, size_coefficients, weightage_matrix,
    CommLedger, Endpoint,
};

/// Fed-Star.
///
/// Each round every client starts from `wʳ`. In each of `P` periods all
/// clients train concurrently, exchange weights all-to-all, score every
/// received model on their own train set to build the weightage matrix, and
/// re-initialize from their weightage-normalized combination. After the last
/// period the server takes the size-weighted mean of the clients' weights
/// (or the literal `1/K`-scaled sum with `strict_star_aggregation`).
///
/// Transfers per round: K broadcasts, P·K·(K−1) peer exchanges, K uploads.
pub fn run_fed_star(fed: &Federation, model: &MlpConfig, cfg: &RunConfig) -> Result<RunOutput> {
    let sim = Simulation::new(fed, model, cfg)?;
    sim.require_peers()?;
    let mut states = sim.client_states();
    let sizes = fed.train_sizes();
    let k_clients = sim.k();
    let mut ledger = CommLedger::new();
    let mut global = sim.initial();
    let mut traces = Vec::new();

    for round in 0..cfg.rounds {
        let mut step = || -> Result<WeightVector> {
            for k in 0..k_clients {
                ledger.log_transfer(round, None, Endpoint::Server, Endpoint::Client(k), sim.dim());
            }
            let mut current = vec![global.clone(); k_clients];
            for period in 0..cfg.periods {
                let trained = sim.update_all(&mut states, &current)?;
                for to in 0..k_clients {
                    for from in (0..k_clients).filter(|&j| j != to) {
                        ledger.log_transfer(
                            round,
                            Some(period),
                            Endpoint::Client(from),
                            Endpoint::Client(to),
                            sim.dim(),
                        );
                    }
                }
                let matrix = sim
                    .pool
                    .install(|| weightage_matrix(&trained, &states, sim.model()))?;
                current = (0..k_clients)
                    .map(|k| pre_aggregate(k, &matrix, &trained))
                    .collect::<Result<_>>()?;
            }
            for k in 0..k_clients {
                ledger.log_transfer(round, None, Endpoint::Client(k), Endpoint::Server, sim.dim());
            }
            if cfg.strict_star_aggregation {
                let coeffs: Vec<f64> = size_coefficients(&sizes)?
                    .into_iter()
                    .map(|c| c / k_clients as f64)
                    .collect();
                linear_combination(&current, &coeffs)
            } else {
                aggregate_weighted(&current, &sizes)
            }
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
