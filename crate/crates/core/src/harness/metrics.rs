//! Experiment metrics: peak return, standard error of the mean, convergence
//! step, and success rate. All of them are pure and invariant to seed order.

use crate::env::{success, EnvSpec, EpisodeTrace};
use crate::error::{Error, Result};

/// Maximum over evaluation points of the cross-seed mean. Every seed's
/// series must be aligned and equally long.
pub fn peak_return(curves: &[Vec<f64>]) -> Result<f64> {
    if curves.is_empty() || curves[0].is_empty() {
        return Err(Error::EmptyInput("evaluation curves"));
    }
    let len = curves[0].len();
    for c in curves {
        if c.len() != len {
            return Err(Error::ShapeMismatch {
                what: "evaluation curves",
                expected: len,
                got: c.len(),
            });
        }
    }
    let n = curves.len() as f64;
    let mut best = f64::NEG_INFINITY;
    for i in 0..len {
        let mean = curves.iter().map(|c| c[i]).sum::<f64>() / n;
        best = best.max(mean);
    }
    Ok(best)
}

/// Standard error of the sample mean: the n-1 sample standard deviation
/// divided by sqrt(n). Needs at least two samples.
pub fn stderr(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    Ok(var.sqrt() / (n as f64).sqrt())
}

/// Smallest step whose value enters a tolerance band of `tol * |final|`
/// around the final value, stays there for at least `window` evaluations,
/// and never leaves it afterward. A final value of zero degenerates to an
/// exact-zero band.
pub fn convergence_step(curve: &[(usize, f64)], tol: f64, window: usize) -> Option<usize> {
    if curve.is_empty() || window == 0 {
        return None;
    }
    let final_value = curve.last().expect("nonempty").1;
    let band = tol * final_value.abs();
    let in_band = |v: f64| (v - final_value).abs() <= band;
    let n = curve.len();
    for i in 0..n {
        if i + window > n {
            break;
        }
        if curve[i..].iter().all(|&(_, v)| in_band(v)) {
            return Some(curve[i].0);
        }
    }
    None
}

/// Count of traces that satisfy the environment's episode-level success
/// predicate, reported as (successes, trials).
pub fn success_rate(traces: &[EpisodeTrace], spec: &EnvSpec) -> (usize, usize) {
    let k = traces.iter().filter(|t| success(spec, t)).count();
    (k, traces.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_single_seed_is_series_max() {
        assert_eq!(peak_return(&[vec![1.0, 3.0, 2.0]]).unwrap(), 3.0);
    }

    #[test]
    fn peak_uses_cross_seed_mean() {
        // Means are [2, 2]; the peak of the mean is 2, not 3.
        let curves = vec![vec![1.0, 3.0], vec![3.0, 1.0]];
        assert_eq!(peak_return(&curves).unwrap(), 2.0);
    }

    #[test]
    fn peak_of_constant_series_is_the_constant() {
        assert_eq!(peak_return(&[vec![5.5; 4], vec![5.5; 4]]).unwrap(), 5.5);
    }

    #[test]
    fn peak_is_invariant_to_seed_order() {
        let a = vec![vec![1.0, 4.0], vec![2.0, 0.0], vec![3.0, 2.0]];
        let b = vec![a[2].clone(), a[0].clone(), a[1].clone()];
        assert_eq!(peak_return(&a).unwrap(), peak_return(&b).unwrap());
    }

    #[test]
    fn peak_rejects_empty_and_ragged() {
        assert!(peak_return(&[]).is_err());
        assert!(peak_return(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn stderr_identical_samples_is_zero() {
        assert_eq!(stderr(&[4.0, 4.0, 4.0]).unwrap(), 0.0);
    }

    #[test]
    fn stderr_two_samples_hand_value() {
        // s = sqrt(2), stderr = sqrt(2)/sqrt(2) = 1.
        assert!((stderr(&[1.0, 3.0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stderr_three_samples_hand_value() {
        // Samples [2, 4, 6]: s = 2, stderr = 2/sqrt(3).
        let got = stderr(&[2.0, 4.0, 6.0]).unwrap();
        assert!((got - 2.0 / 3.0_f64.sqrt()).abs() < 1e-12);
        assert!((got - 1.1547).abs() < 1e-4);
    }

    #[test]
    fn stderr_needs_two_samples() {
        assert!(matches!(
            stderr(&[1.0]),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    fn curve_of(values: &[f64]) -> Vec<(usize, f64)> {
        values.iter().enumerate().map(|(i, &v)| (i * 10, v)).collect()
    }

    #[test]
    fn convergence_constant_series_is_first_step() {
        let c = curve_of(&[7.0, 7.0, 7.0, 7.0]);
        assert_eq!(convergence_step(&c, 0.05, 3), Some(0));
    }

    #[test]
    fn convergence_step_function_series() {
        // [0, 0, 100, 100, 100] with window 2: first step inside the band
        // around 100 is the first 100.
        let c = curve_of(&[0.0, 0.0, 100.0, 100.0, 100.0]);
        assert_eq!(convergence_step(&c, 0.05, 2), Some(20));
    }

    #[test]
    fn convergence_zero_final_needs_exact_zero_tail() {
        let dirty = curve_of(&[1.0, 0.001, 0.0]);
        assert_eq!(convergence_step(&dirty, 0.05, 2), None);
        let clean = curve_of(&[1.0, 0.0, 0.0]);
        assert_eq!(convergence_step(&clean, 0.05, 2), Some(10));
    }

    #[test]
    fn convergence_needs_window_length_tail() {
        let c = curve_of(&[5.0, 5.0]);
        assert_eq!(convergence_step(&c, 0.05, 3), None);
        assert_eq!(convergence_step(&c, 0.05, 2), Some(0));
    }

    #[test]
    fn convergence_rejects_band_escapes() {
        // Dips back out of the band after entering: only the final entry
        // point counts.
        let c = curve_of(&[100.0, 0.0, 100.0, 100.0]);
        assert_eq!(convergence_step(&c, 0.05, 2), Some(20));
    }
}
