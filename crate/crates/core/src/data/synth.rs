//! Synthetic multi-source federations with controllable domain shift.
//!
//! Every client draws from the same class prototypes, then passes its samples
//! through a private affine map `x ↦ A_k x + b_k` with
//! `A_k = I + s·G_k/√d` and `b_k = s·z_k` (`G_k`, `z_k` standard normal,
//! `s` = `shift_scale`). Class proportions mix a uniform vector with a flat
//! Dirichlet draw: `p_k = (1 − λ)·u + λ·Dir(1)` for `λ` = `label_skew`.
//!
//! With `shift_scale = 0` and `label_skew = 0` every client follows the same
//! law and receives the same class counts.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{split_seed, split_train_test, ClientDataset, Federation};
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::rng::{self, SimRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SamplesPerClient {
    Uniform(usize),
    PerClient(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainShiftSpec {
    #[serde(default = "defaults::num_clients")]
    pub num_clients: usize,
    #[serde(default = "defaults::num_classes")]
    pub num_classes: usize,
    pub feature_dim: usize,
    pub samples_per_client: SamplesPerClient,
    #[serde(default)]
    pub shift_scale: f64,
    #[serde(default)]
    pub label_skew: f64,
    /// Standard deviation of the per-sample noise around a class prototype.
    #[serde(default = "defaults::noise_std")]
    pub noise_std: f64,
    #[serde(default = "defaults::train_ratio")]
    pub train_ratio: f64,
    #[serde(default)]
    pub seed: u64,
}

mod defaults {
    pub fn num_clients() -> usize {
        8
    }
    pub fn num_classes() -> usize {
        31
    }
    pub fn noise_std() -> f64 {
        1.0
    }
    pub fn train_ratio() -> f64 {
        0.8
    }
}

impl DomainShiftSpec {
    pub fn new(num_clients: usize, num_classes: usize, feature_dim: usize, samples: usize) -> Self {
        Self {
            num_clients,
            num_classes,
            feature_dim,
            samples_per_client: SamplesPerClient::Uniform(samples),
            shift_scale: 0.0,
            label_skew: 0.0,
            noise_std: defaults::noise_std(),
            train_ratio: defaults::train_ratio(),
            seed: 0,
        }
    }

    pub fn with_shift(mut self, shift_scale: f64) -> Self {
        self.shift_scale = shift_scale;
        self
    }

    pub fn with_skew(mut self, label_skew: f64) -> Self {
        self.label_skew = label_skew;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_noise(mut self, noise_std: f64) -> Self {
        self.noise_std = noise_std;
        self
    }

    pub fn samples_for(&self, client: usize) -> usize {
        match &self.samples_per_client {
            SamplesPerClient::Uniform(n) => *n,
            SamplesPerClient::PerClient(list) => list[client],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_clients == 0 || self.num_classes == 0 || self.feature_dim == 0 {
            return Err(Error::Config(
                "num_clients, num_classes and feature_dim must be >= 1".into(),
            ));
        }
        if let SamplesPerClient::PerClient(list) = &self.samples_per_client {
            if list.len() != self.num_clients {
                return Err(Error::Config(format!(
                    "samples_per_client lists {} clients, num_clients is {}",
                    list.len(),
                    self.num_clients
                )));
            }
        }
        if !(self.shift_scale.is_finite() && self.shift_scale >= 0.0) {
            return Err(Error::Config(format!("shift_scale must be >= 0, got {}", self.shift_scale)));
        }
        if !(0.0..=1.0).contains(&self.label_skew) {
            return Err(Error::Config(format!("label_skew must be in [0, 1], got {}", self.label_skew)));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::Config(format!("noise_std must be >= 0, got {}", self.noise_std)));
        }
        for k in 0..self.num_clients {
            let n = self.samples_for(k);
            // Without skew every class is present, and the split needs two of each.
            if self.label_skew == 0.0 && n < 2 * self.num_classes {
                return Err(Error::Stratification(format!(
                    "client {k}: {n} samples cannot cover {} classes with at least 2 each",
                    self.num_classes
                )));
            }
            if n < 2 {
                return Err(Error::Stratification(format!(
                    "client {k}: {n} samples, at least 2 are needed"
                )));
            }
        }
        Ok(())
    }
}

/// Client id used for synthetic and generated federations.
pub fn synthetic_client_id(index: usize) -> String {
    format!("client-{index}")
}

pub fn generate_federation(spec: &DomainShiftSpec) -> Result<Federation> {
    let clients = generate_raw(spec)?
        .into_iter()
        .enumerate()
        .map(|(k, ds)| split_train_test(ds, spec.train_ratio, split_seed(spec.seed, k)))
        .collect::<Result<Vec<_>>>()?;
    Federation::new(clients, spec.num_classes)
}

/// Generated client datasets before splitting (what `gen-data` writes out).
pub fn generate_raw(spec: &DomainShiftSpec) -> Result<Vec<ClientDataset>> {
    spec.validate()?;
    let (classes, dim) = (spec.num_classes, spec.feature_dim);
    let mut proto_rng = rng::stream(spec.seed, 0);
    let prototypes: Vec<f64> = (0..classes * dim)
        .map(|_| proto_rng.sample(StandardNormal))
        .collect();

    (0..spec.num_clients)
        .map(|k| {
            let mut rng = rng::stream(spec.seed, 1 + k as u64);
            let proportions = class_proportions(classes, spec.label_skew, &mut rng);
            let counts = allocate_counts(&proportions, spec.samples_for(k));
            let (mixing, offset) = affine_shift(dim, spec.shift_scale, &mut rng);

            let mut labels: Vec<usize> = counts
                .iter()
                .enumerate()
                .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
                .collect();
            labels.shuffle(&mut rng);

            let mut data = Vec::with_capacity(labels.len() * dim);
            let mut raw = vec![0.0; dim];
            for &y in &labels {
                let proto = &prototypes[y * dim..(y + 1) * dim];
                for (r, p) in raw.iter_mut().zip(proto) {
                    *r = p + spec.noise_std * rng.sample::<f64, _>(StandardNormal);
                }
                for i in 0..dim {
                    let row = &mixing[i * dim..(i + 1) * dim];
                    data.push(offset[i] + row.iter().zip(&raw).map(|(a, x)| a * x).sum::<f64>());
                }
            }
            let features = Matrix::from_vec(labels.len(), dim, data)?;
            ClientDataset::new(synthetic_client_id(k), features, labels, classes)
        })
        .collect()
}

fn class_proportions(classes: usize, skew: f64, rng: &mut SimRng) -> Vec<f64> {
    let draws: Vec<f64> = (0..classes).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    let uniform = 1.0 / classes as f64;
    draws
        .iter()
        .map(|d| (1.0 - skew) * uniform + skew * d / total)
        .collect()
}

/// Splits `n` samples over classes in pairs by largest remainder, so every
/// class gets either none or at least two. An odd sample goes to the largest
/// class.
fn allocate_counts(proportions: &[f64], n: usize) -> Vec<usize> {
    let pairs = n / 2;
    let quotas: Vec<f64> = proportions.iter().map(|p| p * pairs as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &c in order.iter().take(pairs.saturating_sub(assigned)) {
        counts[c] += 1;
    }
    for c in counts.iter_mut() {
        *c *= 2;
    }
    if n % 2 == 1 {
        let largest = (0..counts.len())
            .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
            .expect("at least one class");
        counts[largest] += 1;
    }
    counts
}

fn affine_shift(dim: usize, scale: f64, rng: &mut SimRng) -> (Vec<f64>, Vec<f64>) {
    let norm = scale / (dim as f64).sqrt();
    let mut mixing: Vec<f64> = (0..dim * dim)
        .map(|_| norm * rng.sample::<f64, _>(StandardNormal))
        .collect();
    for i in 0..dim {
        mixing[i * dim + i] += 1.0;
    }
    let offset = (0..dim)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    (mixing, offset)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_allocation_sums_and_avoids_singletons() {
        let p = [0.5, 0.3, 0.15, 0.05];
        for n in [2, 3, 9, 10, 101] {
            let counts = allocate_counts(&p, n);
            assert_eq!(counts.iter().sum::<usize>(), n);
            assert!(counts.iter().all(|&c| c == 0 || c >= 2), "{counts:?}");
        }
        assert_eq!(allocate_counts(&[0.25; 4], 16), vec![4; 4]);
    }

    #[test]
    fn k_clients_generated() {
        let fed = generate_federation(&DomainShiftSpec::new(8, 3, 4, 12)).unwrap();
        assert_eq!(fed.len(), 8);
        assert!(fed.clients.iter().all(|c| c.len() == 12 && c.is_split()));
    }

    #[test]
    fn same_spec_same_bits() {
        let spec = DomainShiftSpec::new(3, 4, 5, 40).with_shift(1.5).with_skew(0.6).with_seed(9);
        assert_eq!(generate_federation(&spec).unwrap(), generate_federation(&spec).unwrap());
        let other = spec.clone().with_seed(10);
        assert_ne!(generate_federation(&spec).unwrap(), generate_federation(&other).unwrap());
    }

    #[test]
    fn iid_clients_share_class_counts() {
        let fed = generate_federation(&DomainShiftSpec::new(4, 5, 3, 53)).unwrap();
        let first = fed.clients[0].class_counts();
        assert!(fed.clients.iter().all(|c| c.class_counts() == first));
    }

    #[test]
    fn iid_clients_have_matching_means() {
        let n = 2000;
        let fed = generate_federation(&DomainShiftSpec::new(2, 2, 3, n).with_seed(4)).unwrap();
        let mean = |c: &ClientDataset| -> Vec<f64> {
            c.features.sum_rows().iter().map(|s| s / c.len() as f64).collect()
        };
        let (a, b) = (mean(&fed.clients[0]), mean(&fed.clients[1]));
        for d in 0..3 {
            let var = fed.clients[0]
                .features
                .iter_rows()
                .map(|r| (r[d] - a[d]).powi(2))
                .sum::<f64>()
                / n as f64;
            assert!((a[d] - b[d]).abs() < 3.0 * var.sqrt() / (n as f64).sqrt());
        }
    }

    #[test]
    fn skew_changes_client_proportions() {
        let fed = generate_federation(&DomainShiftSpec::new(3, 6, 2, 60).with_skew(1.0).with_seed(2)).unwrap();
        assert_ne!(fed.clients[0].class_counts(), fed.clients[1].class_counts());
    }

    #[test]
    fn infeasible_iid_stratification() {
        let err = generate_federation(&DomainShiftSpec::new(2, 10, 2, 9)).unwrap_err();
        assert!(matches!(err, Error::Stratification(_)));
    }

    #[test]
    fn per_client_sample_counts() {
        let mut spec = DomainShiftSpec::new(2, 2, 2, 0);
        spec.samples_per_client = SamplesPerClient::PerClient(vec![8, 12]);
        let fed = generate_federation(&spec).unwrap();
        assert_eq!((fed.clients[0].len(), fed.clients[1].len()), (8, 12));
        spec.samples_per_client = SamplesPerClient::PerClient(vec![8]);
        assert!(generate_federation(&spec).is_err());
    }
}
