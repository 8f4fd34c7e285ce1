use super::matrix::Matrix;
use crate::error::{Result, WeldError};

/// Mean over the batch of squared Euclidean row distances, with its gradient
/// `2 (pred - target) / B` with respect to `pred`.
pub fn mse_loss(pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    if pred.shape() != target.shape() {
        return Err(WeldError::shape(
            "mse_loss",
            format!("{:?}", target.shape()),
            format!("{:?}", pred.shape()),
        ));
    }
    let b = pred.rows().max(1) as f64;
    let mut grad = pred.sub(target)?;
    let loss = grad.frobenius_sq() / b;
    grad.scale(2.0 / b);
    Ok((loss, grad))
}

/// Loss value only.
pub fn mse_value(pred: &Matrix, target: &Matrix) -> Result<f64> {
    Ok(mse_loss(pred, target)?.0)
}
