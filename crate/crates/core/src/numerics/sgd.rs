use rand::seq::SliceRandom;

use super::{Matrix, MlpModel, Pass};
use crate::error::{Error, Result};
use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            batch_size: 64,
            epochs: 3,
        }
    }
}

impl SgdConfig {
    /// A zero learning rate is accepted: it is the degenerate case every
    /// orchestrator must reduce to the identity under.
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Config(format!(
                "learning_rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Config(format!(
                "batch_size and epochs must be >= 1 (got {} and {})",
                self.batch_size, self.epochs
            )));
        }
        Ok(())
    }
}

/// Rows of a feature matrix selected by index, with their labels.
#[derive(Debug, Clone, Copy)]
pub struct LabeledView<'a> {
    pub features: &'a Matrix,
    pub labels: &'a [usize],
    pub indices: &'a [usize],
}

impl LabeledView<'_> {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Materializes the rows at the given view positions.
    pub fn gather(&self, positions: &[usize]) -> (Matrix, Vec<usize>) {
        let rows: Vec<usize> = positions.iter().map(|&p| self.indices[p]).collect();
        let labels = rows.iter().map(|&r| self.labels[r]).collect();
        (self.features.select_rows(&rows), labels)
    }

    pub fn materialize(&self) -> (Matrix, Vec<usize>) {
        (
            self.features.select_rows(self.indices),
            self.indices.iter().map(|&r| self.labels[r]).collect(),
        )
    }
}

/// One pass over `data` in an order shuffled by `rng`, applying
/// `w ← w − η·∇` per minibatch. The trailing partial batch is kept.
///
/// Returns the mean of the per-batch losses.
pub fn sgd_epoch(
    model: &mut MlpModel,
    data: LabeledView<'_>,
    cfg: &SgdConfig,
    rng: &mut SimRng,
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Shape("sgd_epoch on an empty dataset".into()));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(rng);
    let mut total = 0.0;
    let mut batches = 0;
    for chunk in order.chunks(cfg.batch_size) {
        let (x, y) = data.gather(chunk);
        let (loss, grad) = model.loss_and_grad(&x, &y, Pass::Train(rng))?;
        model.apply_gradient(&grad, cfg.learning_rate)?;
        total += loss;
        batches += 1;
    }
    Ok(total / batches as f64)
}
