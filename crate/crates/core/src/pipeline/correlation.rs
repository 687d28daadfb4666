//! Pearson correlation with a seeded permutation test.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CorrelationError {
    #[error("input lengths differ ({xs} vs {ys})")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("need at least 3 points, got {points}")]
    TooFewPoints { points: usize },
    #[error("input is constant; correlation is undefined")]
    ConstantInput,
    #[error("need at least 100 permutations, got {n_perm}")]
    TooFewPermutations { n_perm: usize },
}

/// Sample Pearson correlation coefficient.
pub fn pearson_r(xs: &[f64], ys: &[f64]) -> Result<f64, CorrelationError> {
    if xs.len() != ys.len() {
        return Err(CorrelationError::LengthMismatch {
            xs: xs.len(),
            ys: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(CorrelationError::TooFewPoints { points: xs.len() });
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&x, &y) in xs.iter().zip(ys.iter()) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Err(CorrelationError::ConstantInput);
    }
    Ok(cov / (var_x * var_y).sqrt())
}

/// Two-sided permutation p-value for the observed correlation:
/// `(1 + #{|r_perm| >= |r_obs|}) / (n_perm + 1)`, permuting `ys` with a
/// seeded generator. Reproducible exactly for a fixed seed.
pub fn permutation_p(
    xs: &[f64],
    ys: &[f64],
    n_perm: usize,
    seed: u64,
) -> Result<f64, CorrelationError> {
    if n_perm < 100 {
        return Err(CorrelationError::TooFewPermutations { n_perm });
    }
    let observed = pearson_r(xs, ys)?.abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut permuted = ys.to_vec();
    let mut exceed = 0usize;
    for _ in 0..n_perm {
        permuted.shuffle(&mut rng);
        let r = pearson_r(xs, &permuted)?;
        if r.abs() >= observed {
            exceed += 1;
        }
    }
    Ok((1 + exceed) as f64 / (n_perm + 1) as f64)
}

/// Correlation statistic with its permutation test parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub p_value: f64,
    pub n_points: usize,
    pub n_permutations: usize,
    pub seed: u64,
}

/// Run both the coefficient and its permutation test.
pub fn correlation_test(
    xs: &[f64],
    ys: &[f64],
    n_perm: usize,
    seed: u64,
) -> Result<CorrelationResult, CorrelationError> {
    Ok(CorrelationResult {
        r: pearson_r(xs, ys)?,
        p_value: permutation_p(xs, ys, n_perm, seed)?,
        n_points: xs.len(),
        n_permutations: n_perm,
        seed,
    })
}
