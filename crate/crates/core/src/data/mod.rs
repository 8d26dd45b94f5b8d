//! Client datasets: synthetic generation, file ingestion and splitting.

mod dataset;
mod io;
mod synth;

pub use dataset::{split_seed, split_train_test, ClientDataset, Federation, View};
pub use io::{
    load_features, load_manifest, read_feature_file, write_features, LabelIndex, Manifest,
    ManifestClient, DEFAULT_LABEL_COLUMN,
};
pub use synth::{generate_federation, generate_raw, synthetic_client_id, DomainShiftSpec, SamplesPerClient};
