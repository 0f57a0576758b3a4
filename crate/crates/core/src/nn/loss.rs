//! Binary cross-entropy with a numeric clamp.

use crate::nn::NnError;

/// Probabilities are clamped into [PROB_CLAMP, 1 - PROB_CLAMP] before the
/// logs, bounding a single sample's loss at about 16.1.
pub const PROB_CLAMP: f64 = 1e-7;

#[inline]
pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Mean over samples of -(y ln p + (1-y) ln(1-p)) with clamped p.
pub fn bce_loss(probs: &[f64], y: &[u8]) -> Result<f64, NnError> {
    if probs.len() != y.len() {
        return Err(NnError::LengthMismatch { left: probs.len(), right: y.len() });
    }
    if probs.is_empty() {
        return Err(NnError::LengthMismatch { left: 0, right: 0 });
    }
    let sum: f64 = probs
        .iter()
        .zip(y)
        .map(|(&p, &label)| {
            let p = clamp_prob(p);
            if label == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(sum / probs.len() as f64)
}

/// Gradient of the mean clamped BCE with respect to the sigmoid logits.
///
/// Inside the clamp region the sigmoid/BCE composition collapses to
/// (p - y) / n. Where the raw probability sits beyond the clamp the loss is
/// locally constant in it, so the exact gradient is zero there.
pub fn bce_logit_grad(probs: &[f64], y: &[u8]) -> Vec<f64> {
    let n = probs.len() as f64;
    probs
        .iter()
        .zip(y)
        .map(|(&p, &label)| {
            if (PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&p) {
                (p - f64::from(label)) / n
            } else {
                0.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction_is_clamp_scale() {
        let loss = bce_loss(&[1.0, 0.0, 1.0], &[1, 0, 1]).unwrap();
        assert!(loss > 0.0 && loss < 1e-6, "{loss}");
    }

    #[test]
    fn coin_flip_is_ln_two() {
        let loss = bce_loss(&[0.5, 0.5, 0.5, 0.5], &[0, 1, 0, 1]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((loss - 0.69315).abs() < 1e-5);
    }

    #[test]
    fn totally_wrong_hits_the_clamp_bound() {
        let loss = bce_loss(&[1.0, 0.0], &[0, 1]).unwrap();
        let expected = -(PROB_CLAMP.ln());
        assert!((loss - expected).abs() < 1e-9);
        assert!((loss - 16.118).abs() < 1e-3);
    }

    #[test]
    fn length_mismatch_errors() {
        assert!(bce_loss(&[0.5], &[0, 1]).is_err());
    }

    #[test]
    fn logit_grad_matches_p_minus_y_inside_clamp() {
        let g = bce_logit_grad(&[0.8, 0.3], &[1, 0]);
        assert!((g[0] - (0.8 - 1.0) / 2.0).abs() < 1e-15);
        assert!((g[1] - 0.3 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn logit_grad_is_zero_beyond_the_clamp() {
        let g = bce_logit_grad(&[1.0, 0.0, 0.5], &[0, 1, 1]);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1], 0.0);
        assert!(g[2] != 0.0);
    }
}
