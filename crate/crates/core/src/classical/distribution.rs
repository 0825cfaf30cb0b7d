use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // used only when std is absent from the build graph
use num_traits::Float;

use crate::error::{shape, Error, Result};

/// Smallest probability a faithful distribution may carry.
pub const FAITHFUL_FLOOR: f64 = 1e-14;
/// Tolerance on `Σ p = 1`.
pub const SUM_TOL: f64 = 1e-12;

/// Probability vector over a finite sample space.
///
/// Faithful (strictly positive above [`FAITHFUL_FLOOR`]) unless built with
/// [`FiniteDistribution::with_boundary`].
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution {
    probs: Vec<f64>,
    boundary: bool,
}

impl FiniteDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::check_sum(&probs)?;
        let min = probs.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > FAITHFUL_FLOOR) {
            return Err(Error::NotFaithful { min });
        }
        Ok(Self { probs, boundary: false })
    }

    /// Boundary override: zero cells are allowed, negative ones are not.
    pub fn with_boundary(probs: Vec<f64>) -> Result<Self> {
        Self::check_sum(&probs)?;
        if let Some(p) = probs.iter().find(|p| **p < 0.0) {
            return Err(Error::InvalidDistribution(format!("negative probability {p}")));
        }
        Ok(Self { probs, boundary: true })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let s: f64 = weights.iter().sum();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidDistribution(format!("weights sum to {s}")));
        }
        Self::new(weights.iter().map(|w| w / s).collect())
    }

    pub fn uniform(n: usize) -> Self {
        Self { probs: alloc::vec![1.0 / n as f64; n], boundary: false }
    }

    fn check_sum(probs: &[f64]) -> Result<()> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty sample space".into()));
        }
        if probs.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidDistribution("non-finite probability".into()));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {s}")));
        }
        Ok(())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn allows_boundary(&self) -> bool {
        self.boundary
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_faithful(&self) -> bool {
        self.min_prob() > FAITHFUL_FLOOR
    }

    pub fn expectation(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.len() {
            return Err(shape(format!("function of length {} on a sample space of size {}", f.len(), self.len())));
        }
        Ok(self.probs.iter().zip(f).map(|(p, x)| p * x).sum())
    }
}

/// `−Σ ρ log ρ`, with `0 log 0 = 0`.
pub fn entropy(rho: &FiniteDistribution) -> f64 {
    -rho.probs().iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>()
}

/// `Σ ρ log(ρ/σ)`; infinite when σ vanishes where ρ does not.
pub fn kl_divergence(rho: &FiniteDistribution, sigma: &FiniteDistribution) -> Result<f64> {
    same_space(rho, sigma)?;
    let mut s = 0.0;
    for (p, q) in rho.probs().iter().zip(sigma.probs()) {
        if *p > 0.0 {
            if *q <= 0.0 {
                return Ok(f64::INFINITY);
            }
            s += p * (p / q).ln();
        }
    }
    Ok(s)
}

fn same_space(rho: &FiniteDistribution, sigma: &FiniteDistribution) -> Result<()> {
    if rho.len() != sigma.len() {
        return Err(shape(format!("sample spaces of size {} and {}", rho.len(), sigma.len())));
    }
    Ok(())
}

/// `ω ↦ ρ(ω)^p` with `p = (1 − α)/2`. At `α = 0` this is the square-root map onto
/// the unit sphere of ℓ².
pub fn alpha_embed(rho: &FiniteDistribution, alpha: f64) -> Result<Vec<f64>> {
    if !(-1.0..1.0).contains(&alpha) {
        return Err(Error::Unsupported(format!(
            "alpha embedding needs alpha in [-1, 1); alpha = {alpha} degenerates (use score coordinates)"
        )));
    }
    let p = 0.5 * (1.0 - alpha);
    Ok(rho.probs().iter().map(|x| x.powf(p)).collect())
}

/// Chordal distance `‖√ρ − √σ‖₂`.
pub fn hellinger_distance(rho: &FiniteDistribution, sigma: &FiniteDistribution) -> Result<f64> {
    same_space(rho, sigma)?;
    Ok(rho.probs().iter().zip(sigma.probs()).map(|(p, q)| (p.sqrt() - q.sqrt()).powi(2)).sum::<f64>().sqrt())
}

/// Great-circle distance `arccos Σ √(ρσ)` between the square-root embeddings.
pub fn bhattacharyya_angle(rho: &FiniteDistribution, sigma: &FiniteDistribution) -> Result<f64> {
    same_space(rho, sigma)?;
    let bc: f64 = rho.probs().iter().zip(sigma.probs()).map(|(p, q)| (p * q).sqrt()).sum();
    Ok(bc.clamp(-1.0, 1.0).acos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_unnormalized_and_unfaithful() {
        assert!(matches!(FiniteDistribution::new(vec![0.5, 0.6]), Err(Error::InvalidDistribution(_))));
        assert!(matches!(FiniteDistribution::new(vec![1.0, 0.0]), Err(Error::NotFaithful { .. })));
        assert!(FiniteDistribution::with_boundary(vec![1.0, 0.0]).is_ok());
        assert!(FiniteDistribution::with_boundary(vec![1.1, -0.1]).is_err());
    }

    #[test]
    fn entropy_of_uniform() {
        for n in 1..8 {
            let h = entropy(&FiniteDistribution::uniform(n));
            assert!((h - (n as f64).ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn entropy_deterministic_limit() {
        let eps = 1e-9;
        let rho = FiniteDistribution::with_boundary(vec![1.0 - eps, eps]).unwrap();
        assert!(entropy(&rho) < 1e-7);
        let point_mass = FiniteDistribution::with_boundary(vec![1.0, 0.0]).unwrap();
        assert_eq!(entropy(&point_mass), 0.0);
    }

    #[test]
    fn sqrt_embedding_on_unit_sphere() {
        let v = alpha_embed(&FiniteDistribution::uniform(4), 0.0).unwrap();
        assert!(v.iter().all(|x| (x - 0.5).abs() < 1e-15));
        assert!((crate::linalg::norm2(&v) - 1.0).abs() < 1e-15);
        assert!(matches!(alpha_embed(&FiniteDistribution::uniform(4), 1.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn hellinger_limits() {
        let rho = FiniteDistribution::new(vec![0.3, 0.7]).unwrap();
        assert_eq!(hellinger_distance(&rho, &rho).unwrap(), 0.0);
        let eps = 1e-12;
        let a = FiniteDistribution::with_boundary(vec![1.0 - eps, eps]).unwrap();
        let b = FiniteDistribution::with_boundary(vec![eps, 1.0 - eps]).unwrap();
        assert!((hellinger_distance(&a, &b).unwrap() - 2f64.sqrt()).abs() < 1e-5);
        let c = FiniteDistribution::with_boundary(vec![1.0, 0.0]).unwrap();
        let d = FiniteDistribution::with_boundary(vec![0.0, 1.0]).unwrap();
        assert!((hellinger_distance(&c, &d).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((bhattacharyya_angle(&c, &d).unwrap() - core::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn hellinger_closed_form() {
        let rho = FiniteDistribution::new(vec![0.1, 0.2, 0.7]).unwrap();
        let sigma = FiniteDistribution::new(vec![0.4, 0.4, 0.2]).unwrap();
        let h = hellinger_distance(&rho, &sigma).unwrap();
        let bc: f64 = rho.probs().iter().zip(sigma.probs()).map(|(p, q)| (p * q).sqrt()).sum();
        assert!((h * h - (2.0 - 2.0 * bc)).abs() < 1e-14);
    }
}
