use crate::math;

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` before the log.
pub const PROB_EPS: f64 = 1e-7;

/// Binary cross-entropy `-[y ln p + (1 - y) ln(1 - p)]` on the clamped
/// probability.
pub fn bce_loss(p: f64, y: f64) -> f64 {
    let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    -(y * math::ln(p) + (1.0 - y) * math::ln(1.0 - p))
}

/// Derivative of [`bce_loss`] with respect to the pre-sigmoid logit. Zero
/// where the clamp is active, matching the flat loss there.
pub fn bce_logit_grad(p: f64, y: f64) -> f64 {
    if p <= PROB_EPS || p >= 1.0 - PROB_EPS {
        0.0
    } else {
        p - y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_values() {
        assert!((bce_loss(0.5, 0.0) - core::f64::consts::LN_2).abs() < 1e-15);
        assert!((bce_loss(0.5, 1.0) - core::f64::consts::LN_2).abs() < 1e-15);
        assert!((bce_loss(0.9, 1.0) - 0.105_360_515_657_826_3).abs() < 1e-12);
    }

    #[test]
    fn clamp_bounds_the_loss() {
        let bound = -(1.0 - PROB_EPS).ln();
        assert!(bce_loss(1.0, 1.0) <= bound + 1e-18);
        assert!(bce_loss(0.0, 0.0) <= bound + 1e-18);
        assert!(bce_loss(0.0, 1.0).is_finite());
    }
}
