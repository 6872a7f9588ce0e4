//! Photon-number priors `P(n)`.

use serde::Serialize;

use crate::error::{domain, Result};

/// Mass allowed beyond the truncated support of a default-length PDC prior.
pub const PDC_TAIL_MASS: f64 = 1e-10;

/// Normalized photon-number distribution on `0..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumberPrior {
    probs: Vec<f64>,
    label: String,
}

impl NumberPrior {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Largest `n` represented (including trailing zeros).
    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    /// Largest `n` with nonzero probability.
    pub fn support_max(&self) -> usize {
        self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }

    pub fn get(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }
}

/// Unnormalized single-arm PDC weight `(1 - χ²) χ^{2n}`.
pub fn pdc_weight(chi: f64, n: usize) -> f64 {
    let chi2 = chi * chi;
    (1.0 - chi2) * chi2.powi(n as i32)
}

/// Smallest `N` with `χ^{2(N+1)} <= tail`.
pub fn pdc_default_n_max(chi: f64, tail: f64) -> usize {
    let chi2 = chi * chi;
    let mut n = 0usize;
    let mut rest = chi2;
    while rest > tail {
        rest *= chi2;
        n += 1;
    }
    n
}

/// Photon-number marginal of one arm of a PDC source, truncated to
/// `0..=n_max` and renormalized. With `n_max = None` the support is cut
/// where the geometric tail drops below [`PDC_TAIL_MASS`].
pub fn pdc_prior(chi: f64, n_max: Option<usize>) -> Result<NumberPrior> {
    if !(0.0..1.0).contains(&chi) {
        return domain(format!("chi must lie in [0, 1), got {chi}"));
    }
    let n_max = n_max.unwrap_or_else(|| pdc_default_n_max(chi, PDC_TAIL_MASS));
    let weights: Vec<f64> = (0..=n_max).map(|n| pdc_weight(chi, n)).collect();
    let total: f64 = weights.iter().sum();
    Ok(NumberPrior {
        probs: weights.into_iter().map(|w| w / total).collect(),
        label: format!("pdc(chi={chi})"),
    })
}

/// Flat prior over `lo..=hi`, zero elsewhere.
pub fn uniform_prior(lo: usize, hi: usize) -> Result<NumberPrior> {
    if hi < lo {
        return domain(format!("uniform range needs hi >= lo, got {lo}..{hi}"));
    }
    let p = 1.0 / (hi - lo + 1) as f64;
    let probs = (0..=hi).map(|n| if n >= lo { p } else { 0.0 }).collect();
    Ok(NumberPrior {
        probs,
        label: format!("uniform({lo}..={hi})"),
    })
}

/// Prior from raw nonnegative weights, e.g. an unnormalized histogram.
pub fn custom_prior(weights: &[f64]) -> Result<NumberPrior> {
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return domain(format!("prior weights must be finite and >= 0, got {w}"));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return domain("prior weights must contain at least one positive entry");
    }
    Ok(NumberPrior {
        probs: weights.iter().map(|w| w / total).collect(),
        label: "custom".to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sum(p: &NumberPrior) -> f64 {
        p.probs().iter().sum()
    }

    #[test]
    fn pdc_vacuum() {
        let p = pdc_prior(0.0, None).unwrap();
        assert_eq!(p.probs(), &[1.0]);
        let p = pdc_prior(0.0, Some(4)).unwrap();
        assert_eq!(p.probs(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn pdc_chi_07_weights() {
        assert!((pdc_weight(0.7, 0) - 0.51).abs() < 1e-15);
        assert!((pdc_weight(0.7, 1) - 0.2499).abs() < 1e-15);
        assert!((pdc_weight(0.7, 2) - 0.122_451).abs() < 1e-15);

        let p = pdc_prior(0.7, None).unwrap();
        // 0.49^(N+1) <= 1e-10 first holds at N = 32
        assert_eq!(p.n_max(), 32);
        assert!((p.get(0) - 0.51).abs() < 1e-10);
        assert!((p.get(1) - 0.2499).abs() < 1e-10);
        assert!((p.get(2) - 0.122_451).abs() < 1e-10);
        assert!((sum(&p) - 1.0).abs() < 1e-12);
        for n in 0..p.n_max() {
            let ratio = p.get(n) / p.get(n + 1);
            assert!((ratio - 1.0 / 0.49).abs() < 1e-9, "n={n} ratio={ratio}");
        }
    }

    #[test]
    fn pdc_rejects_unphysical_chi() {
        assert!(pdc_prior(1.0, None).is_err());
        assert!(pdc_prior(1.2, None).is_err());
        assert!(pdc_prior(-0.1, None).is_err());
        assert!(pdc_prior(f64::NAN, None).is_err());
    }

    #[test]
    fn uniform_examples() {
        let p = uniform_prior(0, 9).unwrap();
        assert_eq!(p.probs().len(), 10);
        assert!(p.probs().iter().all(|&x| x == 0.1));

        assert_eq!(uniform_prior(5, 5).unwrap().probs(), &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(uniform_prior(0, 3).unwrap().probs(), &[0.25; 4]);
        assert!(uniform_prior(4, 3).is_err());
    }

    #[test]
    fn custom_examples() {
        assert_eq!(custom_prior(&[2.0, 2.0]).unwrap().probs(), &[0.5, 0.5]);
        assert_eq!(custom_prior(&[1.0, 0.0, 0.0]).unwrap().probs(), &[1.0, 0.0, 0.0]);
        assert!(custom_prior(&[0.0, 0.0]).is_err());
        assert!(custom_prior(&[]).is_err());
        assert!(custom_prior(&[1.0, -0.5]).is_err());
        assert!(custom_prior(&[1.0, f64::NAN]).is_err());
        assert!(custom_prior(&[1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn custom_round_trips_pdc() {
        let pdc = pdc_prior(0.7, None).unwrap();
        let again = custom_prior(pdc.probs()).unwrap();
        for (a, b) in pdc.probs().iter().zip(again.probs()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn support_max_skips_trailing_zeros() {
        let p = custom_prior(&[1.0, 2.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.n_max(), 3);
        assert_eq!(p.support_max(), 1);
    }

    proptest! {
        #[test]
        fn pdc_normalized_and_nonincreasing(chi in 0.0f64..0.99, n_max in proptest::option::of(0usize..60)) {
            let p = pdc_prior(chi, n_max).unwrap();
            prop_assert!((sum(&p) - 1.0).abs() < 1e-12);
            prop_assert!(p.probs().iter().all(|&x| x >= 0.0));
            prop_assert!(p.probs().windows(2).all(|w| w[1] <= w[0]));
        }

        #[test]
        fn uniform_normalized_and_shift_invariant(lo in 0usize..40, width in 0usize..40, shift in 0usize..20) {
            let hi = lo + width;
            let p = uniform_prior(lo, hi).unwrap();
            prop_assert!((sum(&p) - 1.0).abs() < 1e-12);
            let shifted = uniform_prior(lo + shift, hi + shift).unwrap();
            prop_assert_eq!(&shifted.probs()[shift..], p.probs());
            prop_assert!(shifted.probs()[..shift].iter().all(|&x| x == 0.0));
        }

        #[test]
        fn custom_normalized(weights in proptest::collection::vec(0.0f64..1e6, 1..40)) {
            prop_assume!(weights.iter().any(|&w| w > 0.0));
            let p = custom_prior(&weights).unwrap();
            prop_assert!((sum(&p) - 1.0).abs() < 1e-12);
            prop_assert!(p.probs().iter().all(|&x| x >= 0.0));
        }
    }
}
