use rayon::prelude::*;

use super::client::accuracy_of;
use super::ClientState;
use crate::data::View;
use crate::error::{Error, Result};
use crate::numerics::{MlpConfig, MlpModel, WeightVector};

/// K×K Fed-Star coefficients, `M(k,j) = 1 − Acc(w_j, train(D_k))/100`.
///
/// Row `k` weighs the models arriving at client `k`; a model that fits
/// client `k`'s data worse gets a larger entry.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightageMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl WeightageMatrix {
    pub fn from_entries(size: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != size * size {
            return Err(Error::Shape(format!(
                "{size}x{size} weightage matrix needs {} entries, got {}",
                size * size,
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::Protocol(format!("weightage entry {bad} outside [0, 1]")));
        }
        Ok(Self { size, entries })
    }

    /// Builds `M` from a K×K table of percentages, `accuracies[k][j] = Acc(w_j, D_k)`.
    pub fn from_accuracies(accuracies: &[Vec<f64>]) -> Result<Self> {
        let size = accuracies.len();
        let mut entries = Vec::with_capacity(size * size);
        for row in accuracies {
            if row.len() != size {
                return Err(Error::Shape("accuracy table must be square".into()));
            }
            for &acc in row {
                if !(0.0..=100.0).contains(&acc) {
                    return Err(Error::Protocol(format!("accuracy {acc} outside [0, 100]")));
                }
                entries.push(1.0 - acc / 100.0);
            }
        }
        Self::from_entries(size, entries)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.entries[k * self.size + j]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.entries[k * self.size..(k + 1) * self.size]
    }
}

/// Evaluates every client's weights on every client's train view.
///
/// Rows are computed in parallel on the current rayon pool; the result does
/// not depend on the pool size.
pub fn weightage_matrix(
    all_weights: &[WeightVector],
    clients: &[ClientState<'_>],
    model: &MlpConfig,
) -> Result<WeightageMatrix> {
    if all_weights.len() != clients.len() {
        return Err(Error::Protocol(format!(
            "{} weight vectors for {} clients",
            all_weights.len(),
            clients.len()
        )));
    }
    let nets = all_weights
        .iter()
        .map(|w| MlpModel::unflatten(w, model.clone()))
        .collect::<Result<Vec<_>>>()?;
    let accuracies = clients
        .par_iter()
        .map(|client| {
            nets.iter()
                .map(|net| accuracy_of(net, client.dataset, View::Train))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    WeightageMatrix::from_accuracies(&accuracies)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_follow_accuracy() {
        let m = WeightageMatrix::from_accuracies(&[vec![100.0, 0.0], vec![75.0, 50.0]]).unwrap();
        assert_eq!(m.get(0, 0), 0.0);
        assert_eq!(m.get(0, 1), 1.0);
        assert_eq!(m.get(1, 0), 0.25);
        assert_eq!(m.row(1), &[0.25, 0.5]);
    }

    #[test]
    fn out_of_range_inputs_are_rejected() {
        assert!(WeightageMatrix::from_accuracies(&[vec![101.0]]).is_err());
        assert!(WeightageMatrix::from_entries(1, vec![-0.1]).is_err());
        assert!(WeightageMatrix::from_entries(2, vec![0.0; 3]).is_err());
    }
}
