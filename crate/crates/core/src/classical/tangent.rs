use alloc::format;
use alloc::vec::Vec;

use super::distribution::FiniteDistribution;
use crate::error::{shape, Error, Result};
use crate::linalg::dot;

/// Which picture a tangent vector is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TangentRep {
    /// Zero-sum signed measure `v = ρ̇` (the (−1) picture).
    Mixture,
    /// Random variable with zero mean in the base state, `x = ρ̇/ρ` (the (+1) picture).
    Score,
}

/// Tangent vector at an implicit base distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalTangent {
    rep: TangentRep,
    vec: Vec<f64>,
}

fn centring_tol(v: &[f64]) -> f64 {
    1e-12 * v.iter().map(|x| x.abs()).sum::<f64>().max(1.0)
}

impl ClassicalTangent {
    /// A mixture tangent; `Σ v` must vanish.
    pub fn mixture(vec: Vec<f64>) -> Result<Self> {
        let s: f64 = vec.iter().sum();
        if s.abs() > centring_tol(&vec) {
            return Err(Error::InvalidArgument(format!("mixture tangent sums to {s:e}, not zero")));
        }
        Ok(Self { rep: TangentRep::Mixture, vec })
    }

    /// A score at `rho`; `E_ρ[x]` must vanish.
    pub fn score(rho: &FiniteDistribution, vec: Vec<f64>) -> Result<Self> {
        let m = rho.expectation(&vec)?;
        if m.abs() > centring_tol(&vec) {
            return Err(Error::InvalidArgument(format!("score has mean {m:e} in the base state")));
        }
        Ok(Self { rep: TangentRep::Score, vec })
    }

    /// The score `x − E_ρ[x]` of an arbitrary random variable.
    pub fn centred_score(rho: &FiniteDistribution, x: &[f64]) -> Result<Self> {
        let m = rho.expectation(x)?;
        Ok(Self { rep: TangentRep::Score, vec: x.iter().map(|v| v - m).collect() })
    }

    pub fn zero(rep: TangentRep, n: usize) -> Self {
        Self { rep, vec: alloc::vec![0.0; n] }
    }

    pub fn rep(&self) -> TangentRep {
        self.rep
    }

    pub fn vec(&self) -> &[f64] {
        &self.vec
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.vec
    }

    fn check_base(&self, rho: &FiniteDistribution) -> Result<()> {
        if self.vec.len() != rho.len() {
            return Err(shape(format!(
                "tangent of length {} at a distribution on {} points",
                self.vec.len(),
                rho.len()
            )));
        }
        if !rho.is_faithful() {
            return Err(Error::NotFaithful { min: rho.min_prob() });
        }
        Ok(())
    }

    pub fn to_score(&self, rho: &FiniteDistribution) -> Result<Self> {
        tangent_convert(rho, self, TangentRep::Score)
    }

    pub fn to_mixture(&self, rho: &FiniteDistribution) -> Result<Self> {
        tangent_convert(rho, self, TangentRep::Mixture)
    }
}

/// Mixture `v` ↔ score `x` via `v = ρ·x`, followed by recentring.
pub fn tangent_convert(rho: &FiniteDistribution, t: &ClassicalTangent, target: TangentRep) -> Result<ClassicalTangent> {
    t.check_base(rho)?;
    let p = rho.probs();
    let vec: Vec<f64> = match (t.rep, target) {
        (a, b) if a == b => t.vec.clone(),
        (TangentRep::Mixture, TangentRep::Score) => {
            let x: Vec<f64> = t.vec.iter().zip(p).map(|(v, q)| v / q).collect();
            let m = dot(&x, p);
            x.into_iter().map(|v| v - m).collect()
        }
        _ => {
            let v: Vec<f64> = t.vec.iter().zip(p).map(|(x, q)| x * q).collect();
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.into_iter().map(|x| x - m).collect()
        }
    };
    Ok(ClassicalTangent { rep: target, vec })
}

/// Fisher-Rao metric `Σ_ω ρ(ω) x(ω) y(ω)` with both tangents taken as scores.
pub fn fisher_metric(rho: &FiniteDistribution, x: &ClassicalTangent, y: &ClassicalTangent) -> Result<f64> {
    let xs = x.to_score(rho)?;
    let ys = y.to_score(rho)?;
    Ok(rho.probs().iter().zip(&xs.vec).zip(&ys.vec).map(|((p, a), b)| p * a * b).sum())
}

/// The two flat transports of the finite simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transport {
    /// (+1): score `x ↦ x − E_σ[x]`.
    Plus,
    /// (−1): the zero-sum measure is left unchanged.
    Minus,
}

/// Parallel transport from `rho` to `sigma`. Both transports are path
/// independent. The result is a score at `sigma` for [`Transport::Plus`] and
/// a mixture tangent for [`Transport::Minus`].
pub fn parallel_transport(
    rho: &FiniteDistribution,
    sigma: &FiniteDistribution,
    t: &ClassicalTangent,
    which: Transport,
) -> Result<ClassicalTangent> {
    if rho.len() != sigma.len() {
        return Err(shape("transport between different sample spaces"));
    }
    if !sigma.is_faithful() {
        return Err(Error::NotFaithful { min: sigma.min_prob() });
    }
    match which {
        Transport::Plus => {
            let x = t.to_score(rho)?;
            ClassicalTangent::centred_score(sigma, &x.vec)
        }
        Transport::Minus => t.to_mixture(rho),
    }
}
