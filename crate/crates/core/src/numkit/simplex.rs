//! Probability vectors on the simplex, softmax, and categorical divergences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied to the second KL argument so one-hot priors stay usable.
pub const KL_FLOOR: f64 = 1e-12;

/// Tolerance on the sum-to-one invariant.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Nonnegative entries summing to one within [`SIMPLEX_TOL`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexVector(Vec<f64>);

impl TryFrom<Vec<f64>> for SimplexVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        SimplexVector::new(v)
    }
}

impl From<SimplexVector> for Vec<f64> {
    fn from(s: SimplexVector) -> Vec<f64> {
        s.0
    }
}

impl SimplexVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyInput("simplex vector"));
        }
        if entries.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::Invalid {
                what: "simplex vector",
                detail: "entries must be finite and nonnegative".into(),
            });
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Invalid {
                what: "simplex vector",
                detail: format!("entries sum to {sum}, not 1"),
            });
        }
        Ok(Self(entries))
    }

    /// Accept a vector whose sum is off by at most `tol` and renormalize it.
    pub fn renormalized(entries: Vec<f64>, tol: f64) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyInput("simplex vector"));
        }
        if entries.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::Invalid {
                what: "simplex vector",
                detail: "entries must be finite and nonnegative".into(),
            });
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::Invalid {
                what: "simplex vector",
                detail: format!("entries sum to {sum}, beyond tolerance {tol}"),
            });
        }
        Ok(Self(entries.into_iter().map(|p| p / sum).collect()))
    }

    pub fn uniform(k: usize) -> Self {
        debug_assert!(k > 0);
        Self(vec![1.0 / k as f64; k])
    }

    pub fn one_hot(k: usize, index: usize) -> Self {
        debug_assert!(index < k);
        let mut v = vec![0.0; k];
        v[index] = 1.0;
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }
}

impl std::ops::Index<usize> for SimplexVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Numerically stable softmax (max-subtraction). Shift-invariant: adding a
/// constant to every logit leaves the output unchanged.
pub fn softmax(logits: &[f64]) -> SimplexVector {
    debug_assert!(!logits.is_empty());
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    SimplexVector(exps.into_iter().map(|e| e / sum).collect())
}

/// KL(p || q) = sum_i p_i ln(p_i/q_i), with q floored at [`KL_FLOOR`].
/// Nonnegative; zero iff p = q.
pub fn kl_categorical(p: &SimplexVector, q: &SimplexVector) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let mut acc = 0.0;
    for (&pi, &qi) in p.as_slice().iter().zip(q.as_slice()) {
        if pi > 0.0 {
            acc += pi * (pi / qi.max(KL_FLOOR)).ln();
        }
    }
    acc
}

/// Shannon entropy -sum p ln p with 0 ln 0 := 0. Range [0, ln K].
pub fn entropy_categorical(p: &SimplexVector) -> f64 {
    let mut acc = 0.0;
    for &pi in p.as_slice() {
        if pi > 0.0 {
            acc -= pi * pi.ln();
        }
    }
    acc
}

/// Gradient of KL(softmax(l) || q) with respect to the logits l.
pub fn kl_softmax_grad(p: &SimplexVector, q: &SimplexVector) -> Vec<f64> {
    let kl = kl_categorical(p, q);
    p.as_slice()
        .iter()
        .zip(q.as_slice())
        .map(|(&pi, &qi)| {
            if pi > 0.0 {
                pi * ((pi / qi.max(KL_FLOOR)).ln() - kl)
            } else {
                0.0
            }
        })
        .collect()
}

/// Gradient of the negative entropy -H(softmax(l)) with respect to the logits.
pub fn neg_entropy_softmax_grad(p: &SimplexVector) -> Vec<f64> {
    let h = entropy_categorical(p);
    p.as_slice()
        .iter()
        .map(|&pi| if pi > 0.0 { pi * (pi.ln() + h) } else { 0.0 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn softmax_of_zeros_is_uniform() {
        let s = softmax(&[0.0, 0.0, 0.0]);
        for &p in s.as_slice() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_log3_gap_gives_quarter_three_quarters() {
        // exp(c)/(exp(c)+exp(c+ln3)) = 1/(1+3) = 0.25 for any c.
        for c in [-50.0, 0.0, 3.7, 123.0] {
            let s = softmax(&[c, c + 3.0_f64.ln()]);
            assert!((s[0] - 0.25).abs() < 1e-12, "c={c}: {:?}", s.as_slice());
            assert!((s[1] - 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_survives_huge_logits() {
        let s = softmax(&[1000.0, 0.0]);
        assert!(s[0] > 1.0 - 1e-12);
        assert!(s[1] >= 0.0);
        assert!(s.as_slice().iter().all(|p| p.is_finite()));
    }

    #[test]
    fn kl_identical_is_zero() {
        let p = SimplexVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!(kl_categorical(&p, &p).abs() < 1e-15);
    }

    #[test]
    fn kl_hand_evaluated_pair() {
        // 0.5 ln(0.5/0.25) + 0.5 ln(0.5/0.75) = 0.5 ln 2 + 0.5 ln(2/3)
        let p = SimplexVector::new(vec![0.5, 0.5]).unwrap();
        let q = SimplexVector::new(vec![0.25, 0.75]).unwrap();
        let want = 0.5 * 2.0_f64.ln() + 0.5 * (2.0_f64 / 3.0).ln();
        assert!((kl_categorical(&p, &q) - want).abs() < 1e-12);
        assert!((want - 0.14384).abs() < 5e-6);
    }

    #[test]
    fn kl_one_hot_vs_uniform_is_ln2() {
        let p = SimplexVector::one_hot(2, 0);
        let q = SimplexVector::uniform(2);
        assert!((kl_categorical(&p, &q) - 2.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy_categorical(&SimplexVector::one_hot(5, 2)), 0.0);
        let u4 = SimplexVector::uniform(4);
        assert!((entropy_categorical(&u4) - 4.0_f64.ln()).abs() < 1e-12);
        let p = SimplexVector::new(vec![0.25, 0.75]).unwrap();
        let want = -(0.25f64 * 0.25f64.ln() + 0.75 * 0.75f64.ln());
        assert!((entropy_categorical(&p) - want).abs() < 1e-15);
        assert!((entropy_categorical(&p) - 0.56233).abs() < 1e-5);
    }

    #[test]
    fn renormalize_within_tolerance_only() {
        let near = vec![0.5, 0.5000001];
        assert!(SimplexVector::renormalized(near, 1e-6).is_ok());
        let far = vec![0.5, 0.6];
        assert!(SimplexVector::renormalized(far, 1e-6).is_err());
    }

    fn simplex_strategy(k: usize) -> impl Strategy<Value = SimplexVector> {
        prop::collection::vec(1e-6..1.0f64, k).prop_map(|raw| {
            let sum: f64 = raw.iter().sum();
            SimplexVector::renormalized(raw.iter().map(|x| x / sum).collect(), 1e-6).unwrap()
        })
    }

    proptest! {
        #[test]
        fn softmax_is_valid_and_shift_invariant(
            logits in prop::collection::vec(-30.0..30.0f64, 1..6),
            shift in -100.0..100.0f64,
        ) {
            let a = softmax(&logits);
            let sum: f64 = a.as_slice().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(a.as_slice().iter().all(|&p| p >= 0.0));
            let shifted: Vec<f64> = logits.iter().map(|l| l + shift).collect();
            let b = softmax(&shifted);
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn kl_nonnegative(p in simplex_strategy(4), q in simplex_strategy(4)) {
            prop_assert!(kl_categorical(&p, &q) >= 0.0);
        }

        #[test]
        fn kl_zero_iff_equal(p in simplex_strategy(4)) {
            prop_assert!(kl_categorical(&p, &p).abs() < 1e-12);
        }
    }
}
