//! Dense matrices, the MLP classifier head and minibatch SGD.

mod matrix;
mod mlp;
mod sgd;
mod weights;

pub use matrix::Matrix;
pub use mlp::{argmax, softmax_in_place, Dense, MlpConfig, MlpModel, Pass};
pub use sgd::{sgd_epoch, LabeledView, SgdConfig};
pub use weights::WeightVector;
