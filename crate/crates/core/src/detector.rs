//! Detector response model: an ideal number-resolving detector behind a
//! loss channel, with Poissonian dark counts added to the surviving photons.
//!
//! The response is captured by the conditional matrix `P(m|n)`: the
//! probability of reading `m` counts when `n` photons were incident. Every
//! probability term is evaluated in the log domain (log-gamma for factorials,
//! `0^0 = 1`) so that the `p_loss ∈ {0, 1}` and `λ = 0` limits come out exact.

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::factorial::ln_factorial;

use crate::error::{domain, Result};

pub const DEFAULT_TAIL_EPSILON: f64 = 1e-10;

/// Loss and dark-count parameters of a detector.
///
/// `lambda` is the mean number of dark counts per measurement window (one
/// shot). Converting a physical rate into a per-shot mean is up to the caller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectorParams {
    p_loss: f64,
    lambda: f64,
    tail_epsilon: f64,
}

impl DetectorParams {
    pub fn new(p_loss: f64, lambda: f64) -> Result<Self> {
        Self::with_tail_epsilon(p_loss, lambda, DEFAULT_TAIL_EPSILON)
    }

    pub fn with_tail_epsilon(p_loss: f64, lambda: f64, tail_epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_loss) {
            return domain(format!("p_loss must lie in [0, 1], got {p_loss}"));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return domain(format!("lambda must be finite and >= 0, got {lambda}"));
        }
        if !(tail_epsilon > 0.0 && tail_epsilon < 1.0) {
            return domain(format!("tail_epsilon must lie in (0, 1), got {tail_epsilon}"));
        }
        Ok(Self {
            p_loss,
            lambda,
            tail_epsilon,
        })
    }

    /// Noiseless detector: no loss, no dark counts.
    pub fn ideal() -> Self {
        Self {
            p_loss: 0.0,
            lambda: 0.0,
            tail_epsilon: DEFAULT_TAIL_EPSILON,
        }
    }

    pub fn p_loss(&self) -> f64 {
        self.p_loss
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn tail_epsilon(&self) -> f64 {
        self.tail_epsilon
    }
}

/// `k·ln(x)` with `0·ln(0) = 0`, i.e. `x^0 = 1` even for `x = 0`.
fn ln_pow(x: f64, k: u64) -> f64 {
    if k == 0 {
        0.0
    } else if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        k as f64 * x.ln()
    }
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    if k == 0 || k == n {
        return 0.0;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

fn ln_poisson(lambda: f64, d: u64) -> f64 {
    if lambda == 0.0 {
        return if d == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    d as f64 * lambda.ln() - lambda - ln_factorial(d)
}

/// Poisson probability `e^{-λ} λ^d / d!`, evaluated as `exp` of its logarithm.
pub fn poisson_pmf(lambda: f64, d: u64) -> Result<f64> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return domain(format!("lambda must be finite and >= 0, got {lambda}"));
    }
    Ok(ln_poisson(lambda, d).exp())
}

/// Smallest `q` with `P(D > q) <= epsilon` for `D ~ Poisson(lambda)`.
///
/// Upper tails are accumulated as suffix sums from a point where the pmf has
/// decayed below `1e-300`, so they carry no cancellation error and do not
/// depend on `epsilon`.
pub fn poisson_tail_quantile(lambda: f64, epsilon: f64) -> usize {
    let mut pmf = Vec::new();
    let mut d = 0u64;
    loop {
        let p = ln_poisson(lambda, d).exp();
        pmf.push(p);
        if d as f64 > lambda && p < 1e-300 {
            break;
        }
        d += 1;
    }
    // tail[q] = P(D > q)
    let mut tail = vec![0.0; pmf.len()];
    for q in (0..pmf.len() - 1).rev() {
        tail[q] = tail[q + 1] + pmf[q + 1];
    }
    tail.iter()
        .position(|&t| t <= epsilon)
        .unwrap_or(pmf.len() - 1)
}

/// `P(m|n)`: probability of reading `m` counts given `n` incident photons.
///
/// Sums over the number of dark counts `d`; the binomial coefficient
/// vanishes outside `0 <= m - d <= n`, so only `d ∈ [max(0, m-n), m]`
/// contributes and the sum is exact.
pub fn conditional_prob(params: &DetectorParams, m: usize, n: usize) -> f64 {
    let (m, n) = (m as u64, n as u64);
    let keep = 1.0 - params.p_loss;
    (m.saturating_sub(n)..=m)
        .map(|d| {
            let survivors = m - d;
            let lost = n - survivors;
            (ln_poisson(params.lambda, d)
                + ln_binomial(n, survivors)
                + ln_pow(keep, survivors)
                + ln_pow(params.p_loss, lost))
            .exp()
        })
        .sum()
}

/// Finite `P(m|n)` matrix, stored column-major by incident number `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalMatrix {
    params: DetectorParams,
    n_max: usize,
    m_max: usize,
    data: Vec<f64>,
}

impl ConditionalMatrix {
    pub fn params(&self) -> &DetectorParams {
        &self.params
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    /// `P(m|n)`; zero for `m > m_max` (truncated) and panics for `n > n_max`.
    pub fn get(&self, m: usize, n: usize) -> f64 {
        assert!(n <= self.n_max, "n={n} outside 0..={}", self.n_max);
        if m > self.m_max {
            return 0.0;
        }
        self.data[n * (self.m_max + 1) + m]
    }

    /// Distribution of measured counts for `n` incident photons.
    pub fn column(&self, n: usize) -> &[f64] {
        let rows = self.m_max + 1;
        &self.data[n * rows..(n + 1) * rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.m_max + 1)
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.columns().map(|c| c.iter().sum()).collect()
    }
}

/// Build `P(m|n)` for `n ∈ 0..=n_max`.
///
/// Rows are kept up to `m_max = n_max + q`, where `q` is the Poisson tail
/// quantile at `tail_epsilon`. A column's discarded mass is bounded by
/// `P(D > q)` since surviving photons never exceed `n_max`.
pub fn build_matrix(params: &DetectorParams, n_max: usize) -> ConditionalMatrix {
    let q = poisson_tail_quantile(params.lambda, params.tail_epsilon);
    let m_max = n_max + q;
    let data: Vec<f64> = (0..=n_max)
        .into_par_iter()
        .flat_map_iter(|n| (0..=m_max).map(move |m| conditional_prob(params, m, n)))
        .collect();
    ConditionalMatrix {
        params: *params,
        n_max,
        m_max,
        data,
    }
}
