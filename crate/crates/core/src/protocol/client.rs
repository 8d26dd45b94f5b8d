use crate::data::{ClientDataset, View};
use crate::error::{Error, Result};
use crate::numerics::{sgd_epoch, MlpConfig, MlpModel, SgdConfig, WeightVector};
use crate::rng::{self, SimRng};

/// A client's private data, its current local weights and its own
/// training stream (`master_seed ⊕ hash(client_id)`).
#[derive(Debug, Clone)]
pub struct ClientState<'a> {
    pub dataset: &'a ClientDataset,
    pub weights: WeightVector,
    pub rng: SimRng,
}

impl<'a> ClientState<'a> {
    pub fn new(dataset: &'a ClientDataset, weights: WeightVector, master_seed: u64) -> Self {
        Self {
            dataset,
            weights,
            rng: rng::client_rng(master_seed, &dataset.client_id),
        }
    }

    pub fn client_id(&self) -> &str {
        &self.dataset.client_id
    }
}

/// Round counter, global weights and the shared model/optimizer settings.
#[derive(Debug, Clone)]
pub struct GlobalState {
    pub round: usize,
    pub weights: WeightVector,
    pub model: MlpConfig,
    pub sgd: SgdConfig,
}

impl GlobalState {
    /// `w⁰` from the model seed.
    pub fn init(model: MlpConfig, sgd: SgdConfig) -> Result<Self> {
        let weights = MlpModel::new(model.clone())?.flatten();
        Ok(Self {
            round: 0,
            weights,
            model,
            sgd,
        })
    }
}

/// `E` epochs of local SGD on the client's train view, starting from
/// `incoming`. Updates and returns the client's weights.
pub fn client_update(
    state: &mut ClientState<'_>,
    incoming: &WeightVector,
    model: &MlpConfig,
    sgd: &SgdConfig,
) -> Result<WeightVector> {
    let view = state.dataset.view(View::Train);
    if view.is_empty() {
        return Err(Error::Protocol(format!(
            "client {} has an empty train set",
            state.client_id()
        )));
    }
    let mut local = MlpModel::unflatten(incoming, model.clone())?;
    for _ in 0..sgd.epochs {
        sgd_epoch(&mut local, view, sgd, &mut state.rng)?;
    }
    state.weights = local.flatten();
    Ok(state.weights.clone())
}

/// Percentage of argmax-correct predictions on one view (dropout off).
pub fn evaluate_accuracy(
    weights: &WeightVector,
    model: &MlpConfig,
    ds: &ClientDataset,
    view: View,
) -> Result<f64> {
    let net = MlpModel::unflatten(weights, model.clone())?;
    accuracy_of(&net, ds, view)
}

pub(crate) fn accuracy_of(net: &MlpModel, ds: &ClientDataset, view: View) -> Result<f64> {
    let view_data = ds.view(view);
    if view_data.is_empty() {
        return Err(Error::Protocol(format!(
            "client {}: cannot evaluate on an empty {view:?} view",
            ds.client_id
        )));
    }
    let (x, y) = view_data.materialize();
    let preds = net.predict(&x)?;
    let correct = preds.iter().zip(&y).filter(|(p, t)| p == t).count();
    Ok(100.0 * correct as f64 / y.len() as f64)
}
