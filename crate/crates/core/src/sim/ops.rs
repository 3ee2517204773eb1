use crate::dd_estimator::dd_ops_per_step;
use crate::observer::hgo_ops_per_step;
use crate::scalar::Real;

use super::EstimatorKind;

/// Documented multiply-adds per sample for an estimator:
/// HGO `(rho+1)² + 2(rho+1)`, DD `3N`, true-state 0.
pub fn op_count<T: Real>(estimator: &EstimatorKind<T>) -> usize {
    match estimator {
        EstimatorKind::Hgo(h) => hgo_ops_per_step(h.gains.len().saturating_sub(1)),
        EstimatorKind::DataDriven { n_samples } => dd_ops_per_step(*n_samples),
        EstimatorKind::TrueState => 0,
    }
}
