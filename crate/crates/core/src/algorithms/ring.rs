use super::{FinalWeights, RunConfig, RunOutput, Simulation};
use crate::data::Federation;
use crate::error::{Error, Result};
use crate::numerics::{MlpConfig, WeightVector};
use crate::protocol::{aggregate_weighted, convex_combination, CommLedger, Endpoint};

/// RingFed baseline, reconstructed as a periodic ring pre-aggregation.
///
/// Each round every client starts from `wʳ`; in each of `P` periods all
/// clients train concurrently, then client `k` mixes with its `n`
/// predecessors on the ring:
/// `w_k ← γ·w_k + (1−γ)/n · Σ_{i=1..n} w_{k−i mod K}`.
/// After the last period the server takes the size-weighted mean.
///
/// Transfers per round: K broadcasts, P·K·n ring hops, K uploads.
pub fn run_ringfed(fed: &Federation, model: &MlpConfig, cfg: &RunConfig) -> Result<RunOutput> {
    let sim = Simulation::new(fed, model, cfg)?;
    sim.require_peers()?;
    let k_clients = sim.k();
    let neighbors = cfg.ring_neighbors;
    if neighbors >= k_clients {
        return Err(Error::Config(format!(
            "ring_neighbors must be below the client count ({k_clients}), got {neighbors}"
        )));
    }
    let mut coeffs = vec![cfg.gamma];
    coeffs.extend(std::iter::repeat_n((1.0 - cfg.gamma) / neighbors as f64, neighbors));

    let mut states = sim.client_states();
    let sizes = fed.train_sizes();
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
                current = (0..k_clients)
                    .map(|k| {
                        let sources: Vec<&WeightVector> = (0..=neighbors)
                            .map(|i| &trained[(k + k_clients - i) % k_clients])
                            .collect();
                        convex_combination(&sources, &coeffs)
                    })
                    .collect::<Result<_>>()?;
                for k in 0..k_clients {
                    for i in 1..=neighbors {
                        let from = (k + k_clients - i) % k_clients;
                        ledger.log_transfer(
                            round,
                            Some(period),
                            Endpoint::Client(from),
                            Endpoint::Client(k),
                            sim.dim(),
                        );
                    }
                }
            }
            for k in 0..k_clients {
                ledger.log_transfer(round, None, Endpoint::Client(k), Endpoint::Server, sim.dim());
            }
            aggregate_weighted(&current, &sizes)
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
