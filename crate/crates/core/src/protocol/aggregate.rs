use super::WeightageMatrix;
use crate::error::{Error, Result};
use crate::numerics::WeightVector;

/// Below this row sum a weightage row is treated as all-zero.
pub const DEGENERATE_ROW_SUM: f64 = 1e-12;

fn check_inputs<W: AsRef<WeightVector>>(weights: &[W], coeffs: &[f64]) -> Result<usize> {
    let first = weights
        .first()
        .ok_or_else(|| Error::Protocol("cannot aggregate an empty list of weights".into()))?;
    let dim = first.as_ref().dim();
    if coeffs.len() != weights.len() {
        return Err(Error::Protocol(format!(
            "{} coefficients for {} weight vectors",
            coeffs.len(),
            weights.len()
        )));
    }
    for w in weights {
        w.as_ref().check_dim(dim)?;
    }
    Ok(dim)
}

/// `Σ_j c_j·w_j` for convex coefficients `c`.
///
/// Coordinates where every input agrees are copied rather than recomputed,
/// and the rest are clamped to the inputs' range, so identical inputs are an
/// exact fixed point and rounding never leaves the inputs' bounding box.
pub fn convex_combination<W: AsRef<WeightVector>>(weights: &[W], coeffs: &[f64]) -> Result<WeightVector> {
    let dim = check_inputs(weights, coeffs)?;
    if coeffs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::Protocol(format!("coefficients must be finite and >= 0: {coeffs:?}")));
    }
    let slices: Vec<&[f64]> = weights.iter().map(|w| w.as_ref().as_slice()).collect();
    let out = (0..dim)
        .map(|i| {
            let first = slices[0][i];
            let (mut lo, mut hi) = (first, first);
            let mut acc = 0.0;
            for (w, c) in slices.iter().zip(coeffs) {
                let v = w[i];
                lo = lo.min(v);
                hi = hi.max(v);
                acc += c * v;
            }
            if lo == hi {
                first
            } else {
                acc.clamp(lo, hi)
            }
        })
        .collect();
    Ok(WeightVector::new(out))
}

/// Plain `Σ_j c_j·w_j` with no convexity requirement.
pub fn linear_combination<W: AsRef<WeightVector>>(weights: &[W], coeffs: &[f64]) -> Result<WeightVector> {
    let dim = check_inputs(weights, coeffs)?;
    let mut out = vec![0.0; dim];
    for (w, c) in weights.iter().zip(coeffs) {
        for (o, v) in out.iter_mut().zip(w.as_ref().as_slice()) {
            *o += c * v;
        }
    }
    Ok(WeightVector::new(out))
}

/// `|D_k| / Σ|D|` per client.
pub fn size_coefficients(sizes: &[usize]) -> Result<Vec<f64>> {
    if sizes.contains(&0) {
        return Err(Error::Protocol(format!("dataset sizes must be positive: {sizes:?}")));
    }
    let total: usize = sizes.iter().sum();
    Ok(sizes.iter().map(|&s| s as f64 / total as f64).collect())
}

/// Size-weighted average `w = Σ_k (|D_k|/|D|)·w_k`.
pub fn aggregate_weighted<W: AsRef<WeightVector>>(weights: &[W], sizes: &[usize]) -> Result<WeightVector> {
    if weights.is_empty() {
        return Err(Error::Protocol("cannot aggregate an empty list of weights".into()));
    }
    convex_combination(weights, &size_coefficients(sizes)?)
}

/// Normalized pre-aggregation coefficients for one weightage row.
#[derive(Debug, Clone, PartialEq)]
pub struct PreAggregation {
    pub coefficients: Vec<f64>,
    /// The row summed to less than [`DEGENERATE_ROW_SUM`] and uniform weights were used.
    pub fallback: bool,
}

/// `M(k,j) / Σ_j M(k,j)`, or the uniform vector when the row sum is below
/// [`DEGENERATE_ROW_SUM`] (every model fits client k perfectly).
pub fn pre_aggregation_coefficients(row: &[f64]) -> PreAggregation {
    let sum: f64 = row.iter().sum();
    if sum < DEGENERATE_ROW_SUM {
        let n = row.len() as f64;
        PreAggregation {
            coefficients: vec![1.0 / n; row.len()],
            fallback: true,
        }
    } else {
        PreAggregation {
            coefficients: row.iter().map(|m| m / sum).collect(),
            fallback: false,
        }
    }
}

/// Client `k`'s weightage-normalized combination of every client's weights.
pub fn pre_aggregate<W: AsRef<WeightVector>>(
    k: usize,
    matrix: &WeightageMatrix,
    all_weights: &[W],
) -> Result<WeightVector> {
    if all_weights.len() != matrix.size() {
        return Err(Error::Protocol(format!(
            "{} weight vectors for a {}x{} weightage matrix",
            all_weights.len(),
            matrix.size(),
            matrix.size()
        )));
    }
    let plan = pre_aggregation_coefficients(matrix.row(k));
    convex_combination(all_weights, &plan.coefficients)
}
