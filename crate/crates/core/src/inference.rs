//! Weighted fusion of per-model softmax outputs.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::{LabelVector, PredictionMatrix};

/// Relative gap under which two fused scores count as tied.
///
/// Mathematically equal scores can differ by a few ulps depending on
/// summation order and weight scaling; treating them as ties keeps the
/// smallest-index rule independent of that rounding.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Index of the largest entry; near-equal entries resolve to the smallest
/// index.
pub fn argmax(scores: &[f64]) -> usize {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = max - TIE_TOLERANCE * max.abs().max(f64::MIN_POSITIVE);
    scores.iter().position(|&s| s >= floor).unwrap_or(0)
}

/// Fused scores and the labels they select.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsemblePrediction {
    pub labels: LabelVector,
    num_classes: usize,
    fused: Vec<f64>,
}

impl EnsemblePrediction {
    /// Fused score row for one sample. Rows sum to the total weight, not one.
    pub fn fused_row(&self, i: usize) -> &[f64] {
        &self.fused[i * self.num_classes..(i + 1) * self.num_classes]
    }

    pub fn fused(&self) -> &[f64] {
        &self.fused
    }
}

/// `fused[x][c] = Σᵢ wᵢ·Pᵢ[x][c]`, label = argmax over `c`.
pub fn ensemble_predict(preds: &[&PredictionMatrix], weights: &[f64]) -> Result<EnsemblePrediction> {
    let first = preds
        .first()
        .ok_or_else(|| Error::ShapeMismatch("no prediction matrices".into()))?;
    if preds.len() != weights.len() {
        return Err(Error::LengthMismatch(preds.len(), weights.len()));
    }
    let (n, k) = (first.num_samples(), first.num_classes());
    if let Some(m) = preds.iter().find(|m| m.num_samples() != n || m.num_classes() != k) {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            n,
            k,
            m.num_samples(),
            m.num_classes()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::InvalidWeights(format!("weight {w} is not a nonnegative number")));
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::AllZeroWeights);
    }

    let mut fused = vec![0.0; n * k];
    let labels: Vec<usize> = fused
        .par_chunks_mut(k)
        .enumerate()
        .map(|(x, row)| {
            for (m, &w) in preds.iter().zip(weights) {
                for (f, p) in row.iter_mut().zip(m.row(x)) {
                    *f += w * p;
                }
            }
            argmax(row)
        })
        .collect();
    Ok(EnsemblePrediction {
        labels: LabelVector::new(k, labels)?,
        num_classes: k,
        fused,
    })
}

/// Uniform weights `1/n`.
pub fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Labels of one model on its own.
pub fn predict_single(preds: &PredictionMatrix) -> LabelVector {
    let labels = preds.rows().map(argmax).collect();
    LabelVector::new(preds.num_classes(), labels).expect("argmax is within the row")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]]) -> PredictionMatrix {
        PredictionMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn single_model_matches_its_argmax() {
        let m = matrix(&[&[0.1, 0.7, 0.2], &[0.5, 0.2, 0.3], &[0.2, 0.2, 0.6]]);
        let out = ensemble_predict(&[&m], &[1.0]).unwrap();
        assert_eq!(out.labels.as_slice(), &[1, 0, 2]);
        assert_eq!(out.labels, predict_single(&m));
    }

    #[test]
    fn weighted_fusion_by_hand() {
        let a = matrix(&[&[0.6, 0.3, 0.1]]);
        let b = matrix(&[&[0.1, 0.8, 0.1]]);
        let out = ensemble_predict(&[&a, &b], &[0.25, 0.75]).unwrap();
        let expected = [0.225, 0.675, 0.1];
        assert!(out.fused_row(0).iter().zip(expected).all(|(f, e)| (f - e).abs() < 1e-15));
        assert_eq!(out.labels.as_slice(), &[1]);
        for k in [1e-3, 2.0, 1e6] {
            let scaled = ensemble_predict(&[&a, &b], &[0.25 * k, 0.75 * k]).unwrap();
            assert_eq!(scaled.labels, out.labels);
        }
    }

    #[test]
    fn ties_go_to_smallest_index() {
        assert_eq!(argmax(&[0.25, 0.25, 0.25, 0.25]), 0);
        assert_eq!(argmax(&[0.1, 0.45, 0.45]), 1);
        // rounding-level differences are ties
        assert_eq!(argmax(&[0.3, 0.35, 0.35 * (1.0 + 1e-14)]), 1);
        assert_eq!(argmax(&[0.3, 0.35, 0.35 * (1.0 + 1e-9)]), 2);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
    }

    #[test]
    fn errors() {
        let a = matrix(&[&[0.6, 0.4]]);
        let b = matrix(&[&[0.6, 0.4], &[0.5, 0.5]]);
        assert_eq!(ensemble_predict(&[&a, &b], &[0.5, 0.5]).unwrap_err().name(), "ShapeMismatch");
        assert_eq!(ensemble_predict(&[&a, &a], &[0.0, 0.0]).unwrap_err().name(), "AllZeroWeights");
        assert_eq!(ensemble_predict(&[&a, &a], &[-1.0, 2.0]).unwrap_err().name(), "InvalidWeights");
        assert_eq!(ensemble_predict(&[&a], &[0.5, 0.5]).unwrap_err().name(), "LengthMismatch");
        assert!(ensemble_predict(&[], &[]).is_err());
    }

    #[test]
    fn fused_rows_sum_to_total_weight() {
        let a = matrix(&[&[0.6, 0.3, 0.1], &[0.2, 0.2, 0.6]]);
        let b = matrix(&[&[0.1, 0.8, 0.1], &[0.3, 0.3, 0.4]]);
        let out = ensemble_predict(&[&a, &b], &[0.4, 0.9]).unwrap();
        for i in 0..2 {
            assert!((out.fused_row(i).iter().sum::<f64>() - 1.3).abs() < 1e-9);
        }
    }
}
