//! Per-frame binary cross-entropy.

use ndarray::{Array1, NdFloat};

use crate::error::{Error, Result};

/// Probability clamp applied inside the loss (and to emitted tracks).
pub const PROB_EPS: f64 = 1e-7;

/// Mean over frames of `-(t ln p + (1 - t) ln(1 - p))`, with `p` clamped to
/// `[1e-7, 1 - 1e-7]`.
pub fn bce_loss<F: NdFloat>(probs: &Array1<F>, targets: &Array1<F>) -> Result<F> {
    if probs.len() != targets.len() {
        return Err(Error::InvalidInput(format!(
            "loss length mismatch: {} probabilities vs {} targets",
            probs.len(),
            targets.len()
        )));
    }
    if probs.is_empty() {
        return Err(Error::InvalidInput("loss over empty track".into()));
    }
    let lo = F::from(PROB_EPS).unwrap();
    let hi = F::one() - lo;
    let mut acc = F::zero();
    for (&p, &t) in probs.iter().zip(targets) {
        let p = p.max(lo).min(hi);
        acc = acc - (t * p.ln() + (F::one() - t) * (F::one() - p).ln());
    }
    Ok(acc / F::from(probs.len()).unwrap())
}

/// Gradient of the mean BCE with respect to the sigmoid pre-activation:
/// `(p - t) / n` per frame.
pub fn bce_output_grad<F: NdFloat>(probs: &Array1<F>, targets: &Array1<F>) -> Array1<F> {
    let n = F::from(probs.len()).unwrap();
    let mut out = probs - targets;
    out.mapv_inplace(|v| v / n);
    out
}
