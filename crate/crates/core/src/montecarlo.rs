//! Seeded shot-by-shot simulation of the loss + dark-count detector.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`). All draws for a run share
//! one key derived from the user seed; work is split into fixed-size batches
//! of [`BATCH_SHOTS`] shots, and each batch reads its own ChaCha stream
//! selected by `(column tag, batch index)`. Histograms are merged by integer
//! addition, so results do not depend on how batches are scheduled across
//! threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::detector::{poisson_tail_quantile, poisson_pmf, DetectorParams};
use crate::error::{domain, Result};
use crate::priors::NumberPrior;

/// Shots simulated per independent stream.
pub const BATCH_SHOTS: u64 = 1 << 14;

/// Probability mass beyond the last entry of the Poisson sampling table.
pub const POISSON_TABLE_TAIL: f64 = 1e-12;

const BATCH_BITS: u32 = 40;
const JOINT_TAG: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotConfig {
    pub params: DetectorParams,
    pub seed: u64,
    pub shots: u64,
}

impl ShotConfig {
    pub fn new(params: DetectorParams, seed: u64, shots: u64) -> Result<Self> {
        if shots == 0 {
            return domain("shots must be >= 1");
        }
        Ok(Self {
            params,
            seed,
            shots,
        })
    }

    fn batches(&self) -> u64 {
        self.shots.div_ceil(BATCH_SHOTS)
    }

    fn batch_len(&self, batch: u64) -> u64 {
        (self.shots - batch * BATCH_SHOTS).min(BATCH_SHOTS)
    }
}

/// RNG for one batch. `tag` is `n + 1` for per-column runs and 0 for joint runs.
fn batch_rng(seed: u64, tag: u64, batch: u64) -> ChaCha8Rng {
    assert!(tag < 1 << (64 - BATCH_BITS), "column tag {tag} too large");
    assert!(batch < 1 << BATCH_BITS, "batch index {batch} too large");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((tag << BATCH_BITS) | batch);
    rng
}

/// Inverse-CDF sampler for `Poisson(lambda)`, truncated where the upper tail
/// drops below [`POISSON_TABLE_TAIL`].
#[derive(Debug, Clone)]
pub struct PoissonSampler {
    cdf: Vec<f64>,
}

impl PoissonSampler {
    pub fn new(lambda: f64) -> Result<Self> {
        let q = poisson_tail_quantile(lambda, POISSON_TABLE_TAIL) as u64;
        let mut acc = 0.0;
        let mut cdf = Vec::with_capacity(q as usize + 1);
        for d in 0..=q {
            acc += poisson_pmf(lambda, d)?;
            cdf.push(acc);
        }
        Ok(Self { cdf })
    }

    /// Map a uniform draw `u ∈ [0, 1)` to a count.
    pub fn sample_from_uniform(&self, u: f64) -> u64 {
        let k = self.cdf.partition_point(|&c| c <= u);
        k.min(self.cdf.len() - 1) as u64
    }
}

/// Per-shot sampler: binomial survival by independent Bernoulli draws, then
/// one Poisson draw for the dark counts.
#[derive(Debug, Clone)]
pub struct ShotSampler {
    p_loss: f64,
    dark: PoissonSampler,
}

impl ShotSampler {
    pub fn new(params: &DetectorParams) -> Self {
        Self {
            p_loss: params.p_loss(),
            dark: PoissonSampler::new(params.lambda()).expect("validated lambda"),
        }
    }

    /// Measured count for `n` incident photons. Consumes `n + 1` uniforms.
    pub fn sample<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> u64 {
        let survivors = (0..n)
            .filter(|_| rng.random::<f64>() >= self.p_loss)
            .count() as u64;
        survivors + self.dark.sample_from_uniform(rng.random::<f64>())
    }
}

/// One detection shot for `n` incident photons.
pub fn sample_shot<R: Rng + ?Sized>(params: &DetectorParams, n: u64, rng: &mut R) -> u64 {
    ShotSampler::new(params).sample(n, rng)
}

/// Histogram of measured counts for a fixed incident number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalColumn {
    pub n: usize,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl EmpiricalColumn {
    pub fn frequencies(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.total as f64)
            .collect()
    }

    pub fn mean(&self) -> f64 {
        let s: u64 = self.counts.iter().enumerate().map(|(m, &c)| m as u64 * c).sum();
        s as f64 / self.total as f64
    }
}

fn add_into(acc: &mut Vec<u64>, other: &[u64]) {
    if acc.len() < other.len() {
        acc.resize(other.len(), 0);
    }
    acc.iter_mut().zip(other).for_each(|(a, b)| *a += b);
}

fn bump(hist: &mut Vec<u64>, m: usize) {
    if hist.len() <= m {
        hist.resize(m + 1, 0);
    }
    hist[m] += 1;
}

/// Estimate `P(·|n)` for every `n ∈ 0..=n_max` from `config.shots` shots each.
pub fn empirical_matrix(config: &ShotConfig, n_max: usize) -> Vec<EmpiricalColumn> {
    let sampler = ShotSampler::new(&config.params);
    let jobs: Vec<(usize, u64)> = (0..=n_max)
        .flat_map(|n| (0..config.batches()).map(move |b| (n, b)))
        .collect();
    let partials: Vec<(usize, Vec<u64>)> = jobs
        .into_par_iter()
        .map(|(n, batch)| {
            let mut rng = batch_rng(config.seed, n as u64 + 1, batch);
            let mut hist = Vec::new();
            for _ in 0..config.batch_len(batch) {
                bump(&mut hist, sampler.sample(n as u64, &mut rng) as usize);
            }
            (n, hist)
        })
        .collect();

    let mut columns: Vec<EmpiricalColumn> = (0..=n_max)
        .map(|n| EmpiricalColumn {
            n,
            counts: Vec::new(),
            total: config.shots,
        })
        .collect();
    for (n, hist) in partials {
        add_into(&mut columns[n].counts, &hist);
    }
    columns
}

/// Joint histogram of `(m, n)` with `n` drawn from a prior for every shot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalJoint {
    /// `counts[m][n]`
    pub counts: Vec<Vec<u64>>,
    pub n_max: usize,
    pub total: u64,
}

impl EmpiricalJoint {
    pub fn m_max(&self) -> usize {
        self.counts.len().saturating_sub(1)
    }

    /// Number of shots that read `m`.
    pub fn outcome_count(&self, m: usize) -> u64 {
        self.counts.get(m).map_or(0, |row| row.iter().sum())
    }

    /// Frequency estimate of `P(n|m)`, if `m` was observed at all.
    pub fn conditional(&self, m: usize) -> Option<Vec<f64>> {
        let total = self.outcome_count(m);
        if total == 0 {
            return None;
        }
        Some(
            self.counts[m]
                .iter()
                .map(|&c| c as f64 / total as f64)
                .collect(),
        )
    }
}

/// Draw `n` from `prior`, then one detector shot, `config.shots` times.
pub fn simulate_joint(config: &ShotConfig, prior: &NumberPrior) -> EmpiricalJoint {
    let sampler = ShotSampler::new(&config.params);
    let n_max = prior.n_max();
    let mut acc = 0.0;
    let prior_cdf: Vec<f64> = prior
        .probs()
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    let support_max = prior.support_max();
    let draw_n = |u: f64| prior_cdf.partition_point(|&c| c <= u).min(support_max);

    let partials: Vec<Vec<Vec<u64>>> = (0..config.batches())
        .into_par_iter()
        .map(|batch| {
            let mut rng = batch_rng(config.seed, JOINT_TAG, batch);
            let mut counts: Vec<Vec<u64>> = Vec::new();
            for _ in 0..config.batch_len(batch) {
                let n = draw_n(rng.random::<f64>());
                let m = sampler.sample(n as u64, &mut rng) as usize;
                if counts.len() <= m {
                    counts.resize_with(m + 1, || vec![0; n_max + 1]);
                }
                counts[m][n] += 1;
            }
            counts
        })
        .collect();

    let mut counts: Vec<Vec<u64>> = Vec::new();
    for part in partials {
        if counts.len() < part.len() {
            counts.resize_with(part.len(), || vec![0; n_max + 1]);
        }
        for (row, other) in counts.iter_mut().zip(&part) {
            add_into(row, other);
        }
    }
    EmpiricalJoint {
        counts,
        n_max,
        total: config.shots,
    }
}

/// Half the L1 distance between two distributions; missing entries are zero.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..len).map(|i| (at(p, i) - at(q, i)).abs()).sum::<f64>()
}
