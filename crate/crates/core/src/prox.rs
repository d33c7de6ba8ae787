//! Exact entrywise half-thresholding, the proximal map of the square-root
//! penalty used by the auxiliary-block updates.
//!
//! For g(a) = lambda_eff * sqrt(|a|) + (1/2)(a - b)^2 the global minimizer is
//! 0 whenever |b| <= tau = (3/2) * lambda_eff^{2/3}; otherwise it keeps the
//! sign of b and its magnitude is t^2 where t is the largest real root of
//! t^3 - |b| t + lambda_eff / 2 = 0. The root is computed in closed
//! trigonometric form and polished with one safeguarded Newton step.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Threshold parameters for a block given its effective weight
/// `lambda_eff = lambda_X / rho_X`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfThreshParams {
    pub lambda_eff: f64,
    pub tau: f64,
}

impl HalfThreshParams {
    pub fn new(lambda_eff: f64) -> Result<Self> {
        if !(lambda_eff > 0.0 && lambda_eff.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda_eff must be positive, got {lambda_eff}"
            )));
        }
        Ok(Self {
            lambda_eff,
            tau: 1.5 * lambda_eff.powf(2.0 / 3.0),
        })
    }

    /// Apply the scalar operator; ties at |b| = tau resolve to 0.
    pub fn apply(&self, b: f64) -> f64 {
        let s = b.abs();
        if s <= self.tau {
            return 0.0;
        }
        // Largest real root of t^3 - s t + lambda_eff / 2 = 0. For s > tau
        // the discriminant is negative, so all three roots are real and the
        // k = 0 branch of the trigonometric formula is the largest.
        let arg = -(0.75 * 3f64.sqrt()) * self.lambda_eff / (s * s.sqrt());
        let mut t = 2.0 * (s / 3.0).sqrt() * (arg.clamp(-1.0, 1.0).acos() / 3.0).cos();
        // One Newton step guards against cancellation in the trigonometric
        // evaluation near the threshold; it is only taken while the root
        // stays in the branch where the cubic is increasing (t > sqrt(s/3)).
        let h = t * t * t - s * t + 0.5 * self.lambda_eff;
        let dh = 3.0 * t * t - s;
        if dh > 0.0 {
            let t_new = t - h / dh;
            if t_new * t_new > s / 3.0 {
                t = t_new;
            }
        }
        b.signum() * t * t
    }
}

/// Global minimizer of `lambda_eff * sqrt(|a|) + (1/2)(a - b)^2`.
pub fn half_threshold_scalar(b: f64, lambda_eff: f64) -> Result<f64> {
    Ok(HalfThreshParams::new(lambda_eff)?.apply(b))
}

/// Entrywise operator for the matrix subproblem
/// `min_A lambda * ||A||_{1/2} + (rho/2) ||A - Q||_F^2`.
pub fn half_threshold_matrix(q: &Array2<f64>, lambda: f64, rho: f64) -> Result<Array2<f64>> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
    }
    let params = HalfThreshParams::new(lambda / rho)?;
    Ok(q.mapv(|b| params.apply(b)))
}
