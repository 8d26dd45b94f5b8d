use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::numerics::{LabeledView, Matrix};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum View {
    Train,
    Test,
}

/// One client's labeled feature matrix and its train/test partition.
///
/// `train_idx` and `test_idx` are empty until [`split_train_test`] runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientDataset {
    pub client_id: String,
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

impl ClientDataset {
    pub fn new(
        client_id: impl Into<String>,
        features: Matrix,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::Shape(format!(
                "{} labels for {} feature rows",
                labels.len(),
                features.rows()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(Error::Label(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(Self {
            client_id: client_id.into(),
            features,
            labels,
            num_classes,
            train_idx: Vec::new(),
            test_idx: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn is_split(&self) -> bool {
        !self.train_idx.is_empty() || !self.test_idx.is_empty()
    }

    pub fn view(&self, view: View) -> LabeledView<'_> {
        let indices = match view {
            View::Train => &self.train_idx,
            View::Test => &self.test_idx,
        };
        LabeledView {
            features: &self.features,
            labels: &self.labels,
            indices,
        }
    }

    pub fn train_view(&self) -> LabeledView<'_> {
        self.view(View::Train)
    }

    pub fn test_view(&self) -> LabeledView<'_> {
        self.view(View::Test)
    }

    /// Sample count per class over all rows.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }
}

/// Stratified train/test split.
///
/// For each class with `n_c` samples, `⌊ratio·n_c⌋` (clamped to
/// `[1, n_c − 1]`) go to train and the rest to test, chosen by a shuffle
/// seeded with `seed`. Index lists come back sorted. Classes absent from the
/// client are skipped; a class with a single sample cannot be split.
pub fn split_train_test(mut ds: ClientDataset, ratio: f64, seed: u64) -> Result<ClientDataset> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!("split ratio must be in (0, 1), got {ratio}")));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &y) in ds.labels.iter().enumerate() {
        by_class.entry(y).or_default().push(i);
    }
    let mut rng = rng::stream(seed, 0);
    let mut train = Vec::with_capacity(ds.len());
    let mut test = Vec::new();
    for (class, mut rows) in by_class {
        let n = rows.len();
        if n < 2 {
            return Err(Error::Stratification(format!(
                "client {}: class {class} has {n} sample, at least 2 are needed",
                ds.client_id
            )));
        }
        rows.shuffle(&mut rng);
        // 1e-9 absorbs products like 0.7·10 = 7.000000000000001.
        let n_train = ((ratio * n as f64 + 1e-9).floor() as usize).clamp(1, n - 1);
        train.extend_from_slice(&rows[..n_train]);
        test.extend_from_slice(&rows[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    ds.train_idx = train;
    ds.test_idx = test;
    Ok(ds)
}

/// Seed for client `index`'s split, derived from a federation-level seed.
pub fn split_seed(seed: u64, index: usize) -> u64 {
    seed ^ rng::id_hash(&format!("split/{index}"))
}

/// All clients of one simulation; they share a feature dimension and class universe.
#[derive(Debug, Clone, PartialEq)]
pub struct Federation {
    pub clients: Vec<ClientDataset>,
    pub num_classes: usize,
}

impl Federation {
    pub fn new(clients: Vec<ClientDataset>, num_classes: usize) -> Result<Self> {
        let first = clients
            .first()
            .ok_or_else(|| Error::Config("a federation needs at least one client".into()))?;
        let dim = first.feature_dim();
        for c in &clients {
            if c.feature_dim() != dim {
                return Err(Error::Shape(format!(
                    "client {} has {} features, client {} has {dim}",
                    c.client_id,
                    c.feature_dim(),
                    first.client_id
                )));
            }
            if c.num_classes != num_classes {
                return Err(Error::Label(format!(
                    "client {} declares {} classes, federation has {num_classes}",
                    c.client_id, c.num_classes
                )));
            }
        }
        Ok(Self {
            clients,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.clients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clients.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.clients[0].feature_dim()
    }

    /// |train(D_k)| per client.
    pub fn train_sizes(&self) -> Vec<usize> {
        self.clients.iter().map(|c| c.train_idx.len()).collect()
    }

    /// Every client's train rows pooled into one dataset, in client order.
    ///
    /// The pooled id joins the member ids with `+`, so a one-client
    /// federation pools to a dataset indistinguishable from its client.
    pub fn pooled_train(&self) -> Result<ClientDataset> {
        let parts: Vec<(Matrix, Vec<usize>)> = self
            .clients
            .iter()
            .map(|c| c.train_view().materialize())
            .collect();
        let features = Matrix::vstack(&parts.iter().map(|(x, _)| x).collect::<Vec<_>>())?;
        let labels: Vec<usize> = parts.into_iter().flat_map(|(_, y)| y).collect();
        let id = self
            .clients
            .iter()
            .map(|c| c.client_id.as_str())
            .collect::<Vec<_>>()
            .join("+");
        let mut pooled = ClientDataset::new(id, features, labels, self.num_classes)?;
        pooled.train_idx = (0..pooled.len()).collect();
        Ok(pooled)
    }
}
