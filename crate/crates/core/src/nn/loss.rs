use crate::error::{Error, Result};
use crate::matrix::{dot, DenseMatrix};

/// Scaled cosine error: mean over rows of `(1 − cos(pred, target))^gamma`.
///
/// A row where either vector has zero norm contributes loss 1 and no gradient.
pub fn sce_loss(pred: &DenseMatrix, target: &DenseMatrix, gamma: f64) -> Result<(f64, DenseMatrix)> {
    if pred.shape() != target.shape() {
        return Err(Error::shape(format!(
            "sce: prediction {:?} vs target {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    if pred.rows() == 0 {
        return Err(Error::arg("sce over zero rows"));
    }
    if gamma.is_nan() || gamma < 1.0 {
        return Err(Error::arg(format!("sce gamma {gamma} must be at least 1")));
    }
    let m = pred.rows() as f64;
    let mut loss = 0.0;
    let mut grad = DenseMatrix::zeros(pred.rows(), pred.cols());
    for i in 0..pred.rows() {
        let p = pred.row(i);
        let t = target.row(i);
        let pn = dot(p, p).sqrt();
        let tn = dot(t, t).sqrt();
        if pn == 0.0 || tn == 0.0 {
            loss += 1.0;
            continue;
        }
        let cos = dot(p, t) / (pn * tn);
        let gap = 1.0 - cos;
        loss += gap.powf(gamma);
        // d/dp cos = t/(|p||t|) − cos·p/|p|²
        let scale = -gamma * gap.powf(gamma - 1.0) / m;
        for ((g, &pj), &tj) in grad.row_mut(i).iter_mut().zip(p).zip(t) {
            *g = scale * (tj / (pn * tn) - cos * pj / (pn * pn));
        }
    }
    Ok((loss / m, grad))
}

/// Mean binary cross-entropy on logits, stable for large magnitudes.
pub fn bce_logit_loss(scores: &[f64], labels: &[f64]) -> Result<(f64, Vec<f64>)> {
    if scores.len() != labels.len() {
        return Err(Error::shape(format!(
            "bce: {} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Err(Error::arg("bce over zero scores"));
    }
    let n = scores.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(scores.len());
    for (&s, &y) in scores.iter().zip(labels) {
        loss += s.max(0.0) - s * y + (-s.abs()).exp().ln_1p();
        grad.push((sigmoid(s) - y) / n);
    }
    Ok((loss / n, grad))
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
