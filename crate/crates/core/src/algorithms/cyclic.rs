use rand::seq::SliceRandom;

use super::{FinalWeights, RunConfig, RunOutput, Simulation};
use crate::data::Federation;
use crate::error::Result;
use crate::numerics::MlpConfig;
use crate::protocol::{client_update, CommLedger, Endpoint};
use crate::rng;

/// Stream of the master seed reserved for per-round visiting orders.
const ORDER_STREAM: u64 = 0x6379_636c_6963;

/// Fed-Cyclic: the global weights travel through the clients in turn, each
/// one training for `E` epochs from its predecessor's result. The last
/// client's weights become `wʳ⁺¹` and are handed back to the first client.
///
/// K handoffs per round, client to client; with `relay_via_server` each
/// handoff is two transfers through the server.
pub fn run_fed_cyclic(fed: &Federation, model: &MlpConfig, cfg: &RunConfig) -> Result<RunOutput> {
    let sim = Simulation::new(fed, model, cfg)?;
    let mut states = sim.client_states();
    let mut ledger = CommLedger::new();
    let mut global = sim.initial();
    let mut order: Vec<usize> = (0..sim.k()).collect();
    let mut order_rng = rng::stream(cfg.master_seed, ORDER_STREAM);
    let mut traces = Vec::new();

    for round in 0..cfg.rounds {
        if cfg.shuffle_cyclic_order {
            order.shuffle(&mut order_rng);
        }
        let mut carried = global.clone();
        for (pos, &k) in order.iter().enumerate() {
            carried = client_update(&mut states[k], &carried, sim.model(), sim.sgd())
                .map_err(sim.wrap(round))?;
            let next = order[(pos + 1) % order.len()];
            if cfg.relay_via_server {
                ledger.log_transfer(round, None, Endpoint::Client(k), Endpoint::Server, sim.dim());
                ledger.log_transfer(round, None, Endpoint::Server, Endpoint::Client(next), sim.dim());
            } else {
                ledger.log_transfer(round, None, Endpoint::Client(k), Endpoint::Client(next), sim.dim());
            }
        }
        global = carried;
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
