//! Diagonal Gaussian action distributions.

use crate::error::{Error, Result};
use crate::numkit::rng::SeededRng;

/// Half the log of 2*pi*e; differential entropy per unit-variance dimension.
pub const HALF_LN_2PIE: f64 = 1.418938533204672669540968854562379419803619384765625;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagGaussian {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl DiagGaussian {
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != std.len() {
            return Err(Error::ShapeMismatch {
                what: "gaussian mean/std",
                expected: mean.len(),
                got: std.len(),
            });
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFinite("gaussian mean"));
        }
        if std.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(Error::Invalid {
                what: "gaussian std",
                detail: "entries must be strictly positive and finite".into(),
            });
        }
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    /// Differential entropy: sum_j (0.5 ln(2 pi e) + ln std_j). Zero for the
    /// empty (dim 0) distribution.
    pub fn entropy(&self) -> f64 {
        self.std.iter().map(|s| HALF_LN_2PIE + s.ln()).sum()
    }

    pub fn sample(&self, rng: &mut SeededRng) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.std)
            .map(|(m, s)| m + s * rng.normal())
            .collect()
    }

    /// Reparameterized sample from pre-drawn unit noise.
    pub fn sample_with_noise(&self, noise: &[f64]) -> Vec<f64> {
        debug_assert_eq!(noise.len(), self.dim());
        self.mean
            .iter()
            .zip(&self.std)
            .zip(noise)
            .map(|((m, s), e)| m + s * e)
            .collect()
    }
}

/// Entropy of a diagonal Gaussian given log-stds directly; shared by the
/// policy loss so gradients stay in log-std space.
pub fn entropy_from_log_std(log_std: &[f64]) -> f64 {
    log_std.iter().map(|ls| HALF_LN_2PIE + ls).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_std_dim1_entropy() {
        let d = DiagGaussian::new(vec![0.0], vec![1.0]).unwrap();
        assert!((d.entropy() - 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln()).abs() < 1e-15);
        assert!((d.entropy() - 1.41894).abs() < 5e-6);
    }

    #[test]
    fn doubling_std_adds_dim_ln2() {
        let d = DiagGaussian::new(vec![1.0, -2.0, 0.5], vec![0.3, 1.0, 2.0]).unwrap();
        let doubled =
            DiagGaussian::new(d.mean().to_vec(), d.std().iter().map(|s| 2.0 * s).collect()).unwrap();
        let want = d.entropy() + 3.0 * 2.0_f64.ln();
        assert!((doubled.entropy() - want).abs() < 1e-12);
    }

    #[test]
    fn empty_distribution_has_zero_entropy() {
        let d = DiagGaussian::new(vec![], vec![]).unwrap();
        assert_eq!(d.entropy(), 0.0);
    }

    #[test]
    fn nonpositive_std_rejected() {
        assert!(DiagGaussian::new(vec![0.0], vec![0.0]).is_err());
        assert!(DiagGaussian::new(vec![0.0], vec![-1.0]).is_err());
        assert!(DiagGaussian::new(vec![0.0], vec![f64::NAN]).is_err());
    }

    #[test]
    fn reparameterized_sample_is_affine_in_noise() {
        let d = DiagGaussian::new(vec![1.0, 2.0], vec![0.5, 2.0]).unwrap();
        let a = d.sample_with_noise(&[1.0, -1.0]);
        assert_eq!(a, vec![1.5, 0.0]);
    }
}
