//! Reference computations used by the integration tests. Nothing here calls
//! into the library's log-domain code: probabilities are plain products.
#![allow(dead_code)]

use std::path::PathBuf;

pub fn choose(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `p^k` with `0^0 = 1`.
pub fn pow(p: f64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, _| acc * p)
}

/// `e^{-λ} λ^d / d!` by running product.
pub fn poisson(lambda: f64, d: u64) -> f64 {
    (1..=d).fold((-lambda).exp(), |acc, i| acc * lambda / i as f64)
}

/// Probability that exactly `lost` of `n` photons are lost.
pub fn loss(p_loss: f64, n: u64, lost: u64) -> f64 {
    choose(n, lost) * pow(p_loss, lost) * pow(1.0 - p_loss, n - lost)
}

/// `P(m|n)` by exhaustive enumeration over (photons lost, dark counts).
pub fn enumerate_pmn(p_loss: f64, lambda: f64, m: u64, n: u64) -> f64 {
    let mut total = 0.0;
    for lost in 0..=n {
        for d in 0..=m {
            if n - lost + d == m {
                total += loss(p_loss, n, lost) * poisson(lambda, d);
            }
        }
    }
    total
}

/// Column `P(·|n)` on `0..=m_max` as the convolution of the surviving-photon
/// distribution with the dark-count distribution.
pub fn convolved_column(p_loss: f64, lambda: f64, n: u64, m_max: usize) -> Vec<f64> {
    let survive: Vec<f64> = (0..=n).map(|k| loss(p_loss, n, n - k)).collect();
    let dark: Vec<f64> = (0..=m_max as u64).map(|d| poisson(lambda, d)).collect();
    (0..=m_max)
        .map(|m| {
            (0..=m.min(n as usize))
                .map(|k| survive[k] * dark[m - k])
                .sum()
        })
        .collect()
}

/// `P(n|m)` by direct summation over the joint distribution of
/// (incident n, lost photons, dark counts). `None` when `P(m) = 0`.
pub fn joint_posterior(p_loss: f64, lambda: f64, prior: &[f64], m: u64) -> Option<Vec<f64>> {
    let mut joint = vec![0.0; prior.len()];
    for (n, &p_n) in prior.iter().enumerate() {
        let n = n as u64;
        for lost in 0..=n {
            let survivors = n - lost;
            if survivors > m {
                continue;
            }
            let d = m - survivors;
            joint[n as usize] += p_n * loss(p_loss, n, lost) * poisson(lambda, d);
        }
    }
    let total: f64 = joint.iter().sum();
    (total > 0.0).then(|| joint.into_iter().map(|x| x / total).collect())
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("optmap_{name}.csv"))
}

/// `m -> m_opt` from a golden map file; `None` marks impossible readings.
pub fn read_golden_map(name: &str) -> Vec<Option<usize>> {
    let text = std::fs::read_to_string(golden_path(name)).expect("golden file");
    text.lines()
        .skip(1)
        .enumerate()
        .map(|(i, line)| {
            let (m, opt) = line.split_once(',').expect("m,m_opt");
            assert_eq!(m.parse::<usize>().unwrap(), i);
            match opt {
                "undefined" => None,
                v => Some(v.parse().unwrap()),
            }
        })
        .collect()
}
