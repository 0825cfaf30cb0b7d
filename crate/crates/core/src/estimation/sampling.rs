use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::maxent_fit;
use crate::classical::{CanonicalPoint, ExponentialFamily, FiniteDistribution};
use crate::error::{shape, Error, Result};
use crate::rng::seeded;

/// Cell counts over the sample space.
pub type Histogram = Vec<u64>;

/// Draws `m` independent outcomes from `rho` with a ChaCha8 stream seeded by
/// `seed`, by inversion of the cumulative distribution.
pub fn sample(rho: &FiniteDistribution, m: u64, seed: u64) -> Result<Histogram> {
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one draw".into()));
    }
    let mut cdf = Vec::with_capacity(rho.len());
    let mut acc = 0.0;
    for p in rho.probs() {
        acc += p;
        cdf.push(acc);
    }
    let last = cdf.len() - 1;
    let mut rng = seeded(seed);
    let mut hist = vec![0u64; rho.len()];
    for _ in 0..m {
        let u: f64 = rng.gen::<f64>() * acc;
        let k = cdf.partition_point(|c| *c <= u).min(last);
        hist[k] += 1;
    }
    Ok(hist)
}

/// Relative frequencies of a histogram, made faithful when needed.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    pub distribution: FiniteDistribution,
    /// Additive smoothing `ε = 1/(m·|Ω|)` applied to every cell, present only
    /// when some cell was empty.
    pub smoothing: Option<f64>,
}

pub fn empirical_distribution(hist: &[u64]) -> Result<EmpiricalDistribution> {
    let m: u64 = hist.iter().sum();
    if hist.is_empty() || m == 0 {
        return Err(Error::InvalidArgument("empty histogram".into()));
    }
    let mf = m as f64;
    let freq: Vec<f64> = hist.iter().map(|h| *h as f64 / mf).collect();
    if hist.iter().all(|h| *h > 0) {
        return Ok(EmpiricalDistribution { distribution: FiniteDistribution::from_weights(&freq)?, smoothing: None });
    }
    let eps = 1.0 / (mf * hist.len() as f64);
    let weights: Vec<f64> = freq.iter().map(|f| f + eps).collect();
    Ok(EmpiricalDistribution { distribution: FiniteDistribution::from_weights(&weights)?, smoothing: Some(eps) })
}

/// m-projection of the data onto the family: the max-entropy point whose
/// feature means equal the empirical ones.
pub fn estimate_from_data(family: &ExponentialFamily, hist: &[u64]) -> Result<CanonicalPoint> {
    if hist.len() != family.omega() {
        return Err(shape("histogram does not match the family's sample space"));
    }
    let m: u64 = hist.iter().sum();
    if m == 0 {
        return Err(Error::InvalidArgument("empty histogram".into()));
    }
    let freq: Vec<f64> = hist.iter().map(|h| *h as f64 / m as f64).collect();
    maxent_fit(family, &family.feature_means(&freq)?)
}
