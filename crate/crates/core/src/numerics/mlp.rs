use rand::Rng;

use super::{Matrix, WeightVector};
use crate::error::{Error, Result};
use crate::rng::{self, SimRng};

/// Shape and regularization of the classifier head.
///
/// `hidden_dims` empty gives a linear (softmax regression) head.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub num_classes: usize,
    pub dropout_rate: f64,
    pub seed: u64,
}

impl MlpConfig {
    /// Head with the default shape (1024 → 256 → classes, dropout 0.5).
    pub fn new(input_dim: usize, num_classes: usize) -> Self {
        Self {
            input_dim,
            hidden_dims: vec![1024, 256],
            num_classes,
            dropout_rate: 0.5,
            seed: 0,
        }
    }

    pub fn linear(input_dim: usize, num_classes: usize) -> Self {
        Self {
            hidden_dims: Vec::new(),
            dropout_rate: 0.0,
            ..Self::new(input_dim, num_classes)
        }
    }

    pub fn with_hidden(mut self, hidden_dims: Vec<usize>) -> Self {
        self.hidden_dims = hidden_dims;
        self
    }

    pub fn with_dropout(mut self, dropout_rate: f64) -> Self {
        self.dropout_rate = dropout_rate;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.num_classes == 0 || self.hidden_dims.contains(&0) {
            return Err(Error::Config(format!(
                "all layer dimensions must be >= 1 (input {}, hidden {:?}, classes {})",
                self.input_dim, self.hidden_dims, self.num_classes
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout_rate must be in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        Ok(())
    }

    /// `(d_in, d_out)` of every layer, input to output.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let dims: Vec<usize> = std::iter::once(self.input_dim)
            .chain(self.hidden_dims.iter().copied())
            .chain(std::iter::once(self.num_classes))
            .collect();
        dims.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// Σ (d_in + 1)·d_out over layers.
    pub fn param_count(&self) -> usize {
        self.layer_shapes()
            .iter()
            .map(|(i, o)| (i + 1) * o)
            .sum()
    }
}

/// Whether a pass is inference or training; training carries the stream
/// dropout masks are drawn from.
pub enum Pass<'a> {
    Eval,
    Train(&'a mut SimRng),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `d_in × d_out`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    config: MlpConfig,
    layers: Vec<Dense>,
}

struct ForwardTrace {
    /// Input to each layer.
    inputs: Vec<Matrix>,
    /// Pre-activation of each hidden layer.
    pre_acts: Vec<Matrix>,
    /// Scaled dropout mask of each hidden layer, when dropout was applied.
    masks: Vec<Option<Vec<f64>>>,
    logits: Matrix,
}

impl MlpModel {
    /// Glorot-uniform weights drawn from `config.seed`, zero biases.
    pub fn new(config: MlpConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::stream(config.seed, 0);
        let layers = config
            .layer_shapes()
            .into_iter()
            .map(|(d_in, d_out)| {
                let limit = (6.0 / (d_in + d_out) as f64).sqrt();
                let data = (0..d_in * d_out)
                    .map(|_| rng.random_range(-limit..=limit))
                    .collect();
                Dense {
                    weights: Matrix::from_vec(d_in, d_out, data).expect("finite init"),
                    bias: vec![0.0; d_out],
                }
            })
            .collect();
        Ok(Self { config, layers })
    }

    pub fn zeros(config: MlpConfig) -> Result<Self> {
        Self::unflatten(&WeightVector::zeros(config.param_count()), config)
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        self.config.param_count()
    }

    pub fn flatten(&self) -> WeightVector {
        let mut values = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            values.extend_from_slice(layer.weights.data());
            values.extend_from_slice(&layer.bias);
        }
        WeightVector::new(values)
    }

    pub fn unflatten(vec: &WeightVector, config: MlpConfig) -> Result<Self> {
        config.validate()?;
        vec.check_dim(config.param_count())?;
        let mut values = vec.as_slice();
        let mut layers = Vec::new();
        for (d_in, d_out) in config.layer_shapes() {
            let (w, rest) = values.split_at(d_in * d_out);
            let (b, rest) = rest.split_at(d_out);
            layers.push(Dense {
                weights: Matrix::from_vec(d_in, d_out, w.to_vec())?,
                bias: b.to_vec(),
            });
            values = rest;
        }
        Ok(Self { config, layers })
    }

    /// Overwrites the parameters in place from a flat vector.
    pub fn load(&mut self, vec: &WeightVector) -> Result<()> {
        vec.check_dim(self.param_count())?;
        let mut values = vec.as_slice();
        for layer in &mut self.layers {
            let (w, rest) = values.split_at(layer.weights.data().len());
            let (b, rest) = rest.split_at(layer.bias.len());
            layer.weights.data_mut().copy_from_slice(w);
            layer.bias.copy_from_slice(b);
            values = rest;
        }
        Ok(())
    }

    /// `w ← w − lr·grad`, with `grad` in flatten order.
    pub fn apply_gradient(&mut self, grad: &WeightVector, lr: f64) -> Result<()> {
        grad.check_dim(self.param_count())?;
        let mut g = grad.as_slice();
        for layer in &mut self.layers {
            let (gw, rest) = g.split_at(layer.weights.data().len());
            let (gb, rest) = rest.split_at(layer.bias.len());
            for (w, d) in layer.weights.data_mut().iter_mut().zip(gw) {
                *w -= lr * d;
            }
            for (b, d) in layer.bias.iter_mut().zip(gb) {
                *b -= lr * d;
            }
            g = rest;
        }
        Ok(())
    }

    fn run(&self, batch: &Matrix, mut pass: Pass<'_>) -> Result<ForwardTrace> {
        if batch.cols() != self.config.input_dim {
            return Err(Error::Shape(format!(
                "batch has {} features, model expects {}",
                batch.cols(),
                self.config.input_dim
            )));
        }
        let p = self.config.dropout_rate;
        let last = self.layers.len() - 1;
        let mut trace = ForwardTrace {
            inputs: Vec::with_capacity(self.layers.len()),
            pre_acts: Vec::with_capacity(last),
            masks: Vec::with_capacity(last),
            logits: Matrix::zeros(0, 0),
        };
        let mut act = batch.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = act.matmul(&layer.weights)?;
            z.add_row_vector(&layer.bias);
            trace.inputs.push(act);
            if i == last {
                trace.logits = z;
                break;
            }
            let mut h = z.clone();
            for v in h.data_mut() {
                *v = v.max(0.0);
            }
            let mask = match &mut pass {
                Pass::Train(rng) if p > 0.0 => {
                    let keep_scale = 1.0 / (1.0 - p);
                    let mask: Vec<f64> = (0..h.data().len())
                        .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep_scale })
                        .collect();
                    for (v, m) in h.data_mut().iter_mut().zip(&mask) {
                        *v *= m;
                    }
                    Some(mask)
                }
                _ => None,
            };
            trace.pre_acts.push(z);
            trace.masks.push(mask);
            act = h;
        }
        Ok(trace)
    }

    /// Raw class scores before softmax.
    pub fn logits(&self, batch: &Matrix, pass: Pass<'_>) -> Result<Matrix> {
        Ok(self.run(batch, pass)?.logits)
    }

    /// Class probabilities, one row per sample.
    pub fn forward(&self, batch: &Matrix, pass: Pass<'_>) -> Result<Matrix> {
        let mut out = self.logits(batch, pass)?;
        for r in 0..out.rows() {
            softmax_in_place(out.row_mut(r));
        }
        Ok(out)
    }

    /// Argmax class per sample (dropout off; ties go to the lowest index).
    pub fn predict(&self, batch: &Matrix) -> Result<Vec<usize>> {
        let logits = self.logits(batch, Pass::Eval)?;
        Ok(logits.iter_rows().map(argmax).collect())
    }

    /// Mean cross-entropy over the batch and its gradient in flatten order.
    ///
    /// Dropout is active only for [`Pass::Train`]; the same masks are used for
    /// the loss and the backward pass.
    pub fn loss_and_grad(
        &self,
        batch: &Matrix,
        labels: &[usize],
        pass: Pass<'_>,
    ) -> Result<(f64, WeightVector)> {
        if labels.len() != batch.rows() {
            return Err(Error::Shape(format!(
                "{} labels for {} samples",
                labels.len(),
                batch.rows()
            )));
        }
        if batch.rows() == 0 {
            return Err(Error::Shape("empty batch".into()));
        }
        let classes = self.config.num_classes;
        if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
            return Err(Error::Label(format!(
                "label {bad} out of range for {classes} classes"
            )));
        }

        let trace = self.run(batch, pass)?;
        let n = batch.rows() as f64;
        let mut delta = trace.logits;
        let mut loss = 0.0;
        for (r, &y) in labels.iter().enumerate() {
            let row = delta.row_mut(r);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = row.iter().map(|z| (z - max).exp()).sum();
            loss += max + sum.ln() - row[y];
            for v in row.iter_mut() {
                *v = (*v - max).exp() / sum / n;
            }
            row[y] -= 1.0 / n;
        }
        loss /= n;

        let mut grads: Vec<(Matrix, Vec<f64>)> = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let gw = trace.inputs[i].t_matmul(&delta)?;
            let gb = delta.sum_rows();
            if i > 0 {
                let mut da = delta.matmul_t(&self.layers[i].weights)?;
                if let Some(mask) = &trace.masks[i - 1] {
                    for (d, m) in da.data_mut().iter_mut().zip(mask) {
                        *d *= m;
                    }
                }
                for (d, z) in da.data_mut().iter_mut().zip(trace.pre_acts[i - 1].data()) {
                    if *z <= 0.0 {
                        *d = 0.0;
                    }
                }
                delta = da;
            }
            grads.push((gw, gb));
        }

        let mut flat = Vec::with_capacity(self.param_count());
        for (gw, gb) in grads.iter().rev() {
            flat.extend_from_slice(gw.data());
            flat.extend_from_slice(gb);
        }
        Ok((loss, WeightVector::new(flat)))
    }
}

/// Numerically stable softmax of one row.
pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn param_count_and_layer_chain() {
        let cfg = MlpConfig::linear(2, 2);
        assert_eq!(cfg.param_count(), 6);
        let cfg = MlpConfig::new(10, 31).with_hidden(vec![8, 4]);
        assert_eq!(cfg.layer_shapes(), vec![(10, 8), (8, 4), (4, 31)]);
        assert_eq!(cfg.param_count(), 11 * 8 + 9 * 4 + 5 * 31);
        let model = MlpModel::new(cfg).unwrap();
        assert_eq!(model.flatten().dim(), model.param_count());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(MlpModel::new(MlpConfig::linear(0, 2)).is_err());
        assert!(MlpModel::new(MlpConfig::new(2, 2).with_hidden(vec![3, 0])).is_err());
        assert!(MlpModel::new(MlpConfig::new(2, 2).with_dropout(1.0)).is_err());
    }

    #[test]
    fn zero_model_is_uniform() {
        let model = MlpModel::zeros(MlpConfig::new(3, 5).with_hidden(vec![4])).unwrap();
        let out = model
            .forward(&batch(&[&[1.0, -2.0, 3.0], &[0.5, 0.5, 0.5]]), Pass::Eval)
            .unwrap();
        for v in out.data() {
            assert_eq!(*v, 0.2);
        }
        let (loss, _) = model
            .loss_and_grad(&batch(&[&[1.0, 2.0, 3.0]]), &[4], Pass::Eval)
            .unwrap();
        assert!((loss - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn identity_head_favours_dominant_input() {
        let w = WeightVector::new(vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let model = MlpModel::unflatten(&w, MlpConfig::linear(2, 2)).unwrap();
        let probs = model.forward(&batch(&[&[3.0, 1.0]]), Pass::Eval).unwrap();
        assert_eq!(argmax(probs.row(0)), 0);
        assert_eq!(model.predict(&batch(&[&[3.0, 1.0], &[0.0, 2.0]])).unwrap(), vec![0, 1]);
    }

    #[test]
    fn forward_checks_input_width() {
        let model = MlpModel::new(MlpConfig::linear(3, 2)).unwrap();
        assert!(matches!(
            model.forward(&batch(&[&[1.0, 2.0]]), Pass::Eval),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn invalid_label_is_reported() {
        let model = MlpModel::new(MlpConfig::linear(2, 3)).unwrap();
        let err = model
            .loss_and_grad(&batch(&[&[1.0, 2.0]]), &[3], Pass::Eval)
            .unwrap_err();
        assert!(matches!(err, Error::Label(_)));
    }

    #[test]
    fn training_pass_is_seed_deterministic() {
        let model = MlpModel::new(MlpConfig::new(4, 3).with_hidden(vec![16]).with_seed(3)).unwrap();
        let x = batch(&[&[1.0, 2.0, -1.0, 0.5], &[0.0, 1.0, 1.0, 1.0]]);
        let mut r1 = rng::stream(11, 0);
        let mut r2 = rng::stream(11, 0);
        let a = model.forward(&x, Pass::Train(&mut r1)).unwrap();
        let b = model.forward(&x, Pass::Train(&mut r2)).unwrap();
        assert_eq!(a, b);
        let c = model.forward(&x, Pass::Train(&mut r1)).unwrap();
        assert_ne!(a, c, "advanced stream draws fresh masks");
        assert_eq!(
            model.forward(&x, Pass::Eval).unwrap(),
            model.forward(&x, Pass::Eval).unwrap()
        );
    }

    #[test]
    fn duplicated_batch_has_same_loss_and_gradient() {
        let model = MlpModel::new(MlpConfig::new(3, 3).with_hidden(vec![5]).with_dropout(0.0)).unwrap();
        let x = batch(&[&[0.3, -1.0, 2.0], &[1.5, 0.2, -0.7]]);
        let xx = Matrix::vstack(&[&x, &x]).unwrap();
        let (l1, g1) = model.loss_and_grad(&x, &[0, 2], Pass::Eval).unwrap();
        let (l2, g2) = model.loss_and_grad(&xx, &[0, 2, 0, 2], Pass::Eval).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        assert!(g1.max_abs_diff(&g2) < 1e-12);
    }

    #[test]
    fn flatten_round_trip_and_wrong_dim() {
        let cfg = MlpConfig::new(3, 4).with_hidden(vec![5, 2]).with_seed(9);
        let model = MlpModel::new(cfg.clone()).unwrap();
        let back = MlpModel::unflatten(&model.flatten(), cfg.clone()).unwrap();
        assert_eq!(back, model);
        assert!(MlpModel::unflatten(&WeightVector::zeros(3), cfg).is_err());
    }
}
