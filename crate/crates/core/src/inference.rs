//! Bayes inversion of the detector response and the optimisation map.
//!
//! Given `P(m|n)` and a prior `P(n)`, the posterior is
//! `P(n|m) = P(m|n) P(n) / Σ_i P(m|i) P(i)`. The optimised signature for a raw
//! reading `m` is the `n` that maximises `P(n|m)`. Ties go to the smallest `n`,
//! unless `m` itself is among the tied maxima, in which case it is kept.
//! Readings with `P(m) = 0` cannot occur under the prior and are flagged
//! undefined instead of being divided through.

use serde::Serialize;

use crate::detector::ConditionalMatrix;
use crate::error::{Error, Result};
use crate::priors::NumberPrior;

/// `P(n|m)` for every reading `m ∈ 0..=m_max`, stored column-major by `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMatrix {
    n_max: usize,
    m_max: usize,
    data: Vec<f64>,
    outcome_marginal: Vec<f64>,
    defined: Vec<bool>,
}

impl PosteriorMatrix {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    /// `P(n|m)`. Undefined readings return `None`.
    pub fn get(&self, n: usize, m: usize) -> Option<f64> {
        self.column(m).map(|c| c[n])
    }

    /// Posterior distribution over `n` given reading `m`, if `P(m) > 0`.
    pub fn column(&self, m: usize) -> Option<&[f64]> {
        if !self.defined[m] {
            return None;
        }
        let rows = self.n_max + 1;
        Some(&self.data[m * rows..(m + 1) * rows])
    }

    /// `P(m) = Σ_n P(m|n) P(n)`.
    pub fn outcome_marginal(&self) -> &[f64] {
        &self.outcome_marginal
    }

    pub fn defined(&self) -> &[bool] {
        &self.defined
    }

    pub fn is_defined(&self, m: usize) -> bool {
        self.defined[m]
    }

    pub fn undefined_outcomes(&self) -> Vec<usize> {
        (0..=self.m_max).filter(|&m| !self.defined[m]).collect()
    }
}

/// Invert `matrix` against `prior`.
///
/// A prior shorter than the matrix is zero-padded. A longer one is accepted
/// only when the excess entries are all zero.
pub fn posterior(matrix: &ConditionalMatrix, prior: &NumberPrior) -> Result<PosteriorMatrix> {
    let n_max = matrix.n_max();
    let m_max = matrix.m_max();
    if prior.support_max() > n_max {
        return Err(Error::Dimension(format!(
            "prior `{}` has mass at n={} but the detector matrix stops at n_max={}",
            prior.label(),
            prior.support_max(),
            n_max
        )));
    }
    let p_n: Vec<f64> = (0..=n_max).map(|n| prior.get(n)).collect();

    let rows = n_max + 1;
    let mut data = vec![0.0; rows * (m_max + 1)];
    let mut outcome_marginal = vec![0.0; m_max + 1];
    let mut defined = vec![false; m_max + 1];

    for (m, col) in data.chunks_mut(rows).enumerate() {
        for (n, slot) in col.iter_mut().enumerate() {
            *slot = matrix.get(m, n) * p_n[n];
        }
        let p_m: f64 = col.iter().sum();
        outcome_marginal[m] = p_m;
        if p_m > 0.0 {
            defined[m] = true;
            col.iter_mut().for_each(|x| *x /= p_m);
        } else {
            col.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    Ok(PosteriorMatrix {
        n_max,
        m_max,
        data,
        outcome_marginal,
        defined,
    })
}

/// Relative gap below the column maximum within which entries count as tied.
///
/// Some maps have exact ties (e.g. `C(2m-1, m)/2^(2m-1) = C(2m, m)/2^(2m)`
/// under 50% loss with a flat prior) that log-domain evaluation reproduces
/// only to a few ulps.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Index of the largest value, preferring the smallest index among entries
/// within [`TIE_TOLERANCE`] of the maximum. Also reports whether more than
/// one entry was in that band.
pub fn argmax_smallest(values: &[f64]) -> (usize, bool) {
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cutoff = top - top.abs() * TIE_TOLERANCE;
    let mut near = values.iter().enumerate().filter(|(_, &v)| v >= cutoff);
    let best = near.next().map_or(0, |(i, _)| i);
    (best, near.next().is_some())
}

/// Per-reading optimisation map plus raw and optimised confidences.
///
/// Vectors are indexed by raw reading `m ∈ 0..=m_max`; entries are `None`
/// where the reading is impossible under the prior.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimisationReport {
    pub map: Vec<Option<usize>>,
    /// `P(n = m | m)`, zero when `m > n_max`.
    pub fidelity_raw: Vec<Option<f64>>,
    /// `max_n P(n | m)`; equals `P(map[m] | m)` up to [`TIE_TOLERANCE`].
    pub fidelity_opt: Vec<Option<f64>>,
    pub outcome_marginal: Vec<f64>,
    /// `Σ_m P(m) F_raw(m)` over defined readings.
    pub avg_fidelity_raw: f64,
    /// `Σ_m P(m) F_opt(m)` over defined readings.
    pub avg_fidelity_opt: f64,
    pub undefined: Vec<usize>,
    /// Readings whose posterior maximum is shared by several `n`.
    pub ties: Vec<usize>,
}

impl OptimisationReport {
    pub fn m_max(&self) -> usize {
        self.map.len() - 1
    }

    /// Defined readings with their `(m_opt, F_raw, F_opt)`.
    pub fn defined_entries(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        (0..self.map.len()).filter_map(move |m| {
            Some((m, self.map[m]?, self.fidelity_raw[m]?, self.fidelity_opt[m]?))
        })
    }
}

pub fn optimisation_map(post: &PosteriorMatrix) -> OptimisationReport {
    let len = post.m_max + 1;
    let mut map = vec![None; len];
    let mut fidelity_raw = vec![None; len];
    let mut fidelity_opt = vec![None; len];
    let mut ties = Vec::new();
    let mut avg_fidelity_raw = 0.0;
    let mut avg_fidelity_opt = 0.0;

    for m in 0..len {
        let Some(col) = post.column(m) else { continue };
        let (mut best, tied) = argmax_smallest(col);
        let raw = col.get(m).copied().unwrap_or(0.0);
        let opt = col.iter().copied().fold(0.0, f64::max);
        if tied {
            ties.push(m);
            // a reading tied with the maximum is kept as is
            if raw >= opt - opt * TIE_TOLERANCE {
                best = m;
            }
        }
        map[m] = Some(best);
        fidelity_raw[m] = Some(raw);
        fidelity_opt[m] = Some(opt);
        avg_fidelity_raw += post.outcome_marginal[m] * raw;
        avg_fidelity_opt += post.outcome_marginal[m] * opt;
    }

    OptimisationReport {
        map,
        fidelity_raw,
        fidelity_opt,
        outcome_marginal: post.outcome_marginal.clone(),
        avg_fidelity_raw,
        avg_fidelity_opt,
        undefined: post.undefined_outcomes(),
        ties,
    }
}
