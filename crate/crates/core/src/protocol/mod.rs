//! Building blocks shared by every orchestration strategy.

mod aggregate;
mod client;
mod ledger;
mod weightage;

pub use aggregate::{
    aggregate_weighted, convex_combination, linear_combination, pre_aggregate,
    pre_aggregation_coefficients, size_coefficients, PreAggregation, DEGENERATE_ROW_SUM,
};
pub use client::{client_update, evaluate_accuracy, ClientState, GlobalState};
pub use ledger::{CommLedger, Endpoint, TransferEvent};
pub use weightage::{weightage_matrix, WeightageMatrix};
