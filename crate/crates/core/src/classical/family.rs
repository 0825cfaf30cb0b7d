use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // used only when std is absent from the build graph
use num_traits::Float;

use super::distribution::{entropy, FiniteDistribution};
use crate::error::{shape, Error, Result};
use crate::linalg::{dot, Matrix};

/// Minimum eigenvalue of the centred feature Gram matrix.
pub const GRAM_TOL: f64 = 1e-10;

#[derive(Debug)]
struct FamilyData {
    omega: usize,
    features: Vec<Vec<f64>>,
    base_log_density: Vec<f64>,
}

/// The exponential family `ρ_ξ(ω) ∝ exp(b(ω) − Σ_j ξ^j f_j(ω))` spanned by the
/// features `f_j` over a finite sample space. `b` is the base log-density
/// (zero, i.e. a uniform base, by default).
///
/// Cheap to clone.
#[derive(Debug, Clone)]
pub struct ExponentialFamily {
    inner: Arc<FamilyData>,
}

impl PartialEq for ExponentialFamily {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.omega == other.inner.omega
                && self.inner.features == other.inner.features
                && self.inner.base_log_density == other.inner.base_log_density)
    }
}

impl ExponentialFamily {
    /// Validates shapes, `n < |Ω|`, and linear independence of the features
    /// modulo constants.
    pub fn new(features: Vec<Vec<f64>>, base_log_density: Option<Vec<f64>>) -> Result<Self> {
        let n = features.len();
        let omega = features.first().map_or(0, Vec::len);
        if n == 0 || omega == 0 {
            return Err(Error::InvalidFamily("need at least one feature on a nonempty sample space".into()));
        }
        if features.iter().any(|f| f.len() != omega) {
            return Err(Error::InvalidFamily("features have different lengths".into()));
        }
        if n >= omega {
            return Err(Error::InvalidFamily(format!("{n} features on a sample space of size {omega}")));
        }
        let base = base_log_density.unwrap_or_else(|| vec![0.0; omega]);
        if base.len() != omega {
            return Err(Error::InvalidFamily("base log-density has the wrong length".into()));
        }
        if features.iter().flatten().chain(&base).any(|x| !x.is_finite()) {
            return Err(Error::InvalidFamily("non-finite feature or base value".into()));
        }
        let centred: Vec<Vec<f64>> = features
            .iter()
            .map(|f| {
                let m = f.iter().sum::<f64>() / omega as f64;
                f.iter().map(|x| x - m).collect()
            })
            .collect();
        let gram = Matrix::from_fn(n, n, |i, j| dot(&centred[i], &centred[j]));
        let min_eig = gram.symmetric_eigenvalues()?[0];
        if !(min_eig > GRAM_TOL) {
            return Err(Error::InvalidFamily(format!(
                "features are linearly dependent modulo constants (Gram eigenvalue {min_eig:e})"
            )));
        }
        Ok(Self { inner: Arc::new(FamilyData { omega, features, base_log_density: base }) })
    }

    /// All of the open simplex: indicator features of `ω = 1..|Ω|−1`.
    pub fn full_simplex(omega: usize) -> Result<Self> {
        let features = (1..omega).map(|k| (0..omega).map(|w| if w == k { 1.0 } else { 0.0 }).collect()).collect();
        Self::new(features, None)
    }

    pub fn omega(&self) -> usize {
        self.inner.omega
    }

    /// Number of features `n`.
    pub fn dim(&self) -> usize {
        self.inner.features.len()
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.inner.features
    }

    pub fn base_log_density(&self) -> &[f64] {
        &self.inner.base_log_density
    }

    /// Same family with feature `j` multiplied by `factors[j]`.
    pub fn rescaled(&self, factors: &[f64]) -> Result<Self> {
        if factors.len() != self.dim() {
            return Err(shape("one factor per feature"));
        }
        let features = self.features().iter().zip(factors).map(|(f, c)| f.iter().map(|x| x * c).collect()).collect();
        Self::new(features, Some(self.base_log_density().to_vec()))
    }

    /// `b(ω) − Σ_j ξ^j f_j(ω)`.
    pub fn log_weights(&self, xi: &[f64]) -> Result<Vec<f64>> {
        if xi.len() != self.dim() {
            return Err(shape(format!("{} canonical coordinates for {} features", xi.len(), self.dim())));
        }
        Ok((0..self.omega())
            .map(|w| self.base_log_density()[w] - xi.iter().zip(self.features()).map(|(x, f)| x * f[w]).sum::<f64>())
            .collect())
    }

    /// Massieu function `Ψ(ξ) = log Σ_ω exp(b − ξ·f)` by log-sum-exp.
    pub fn massieu(&self, xi: &[f64]) -> Result<f64> {
        Ok(log_sum_exp(&self.log_weights(xi)?))
    }

    pub fn point(&self, xi: &[f64]) -> Result<CanonicalPoint> {
        CanonicalPoint::new(self.clone(), xi.to_vec())
    }

    /// Feature means `E_ρ[f_j]` under an arbitrary distribution.
    pub fn feature_means(&self, rho: &[f64]) -> Result<Vec<f64>> {
        if rho.len() != self.omega() {
            return Err(shape("distribution does not live on this family's sample space"));
        }
        Ok(self.features().iter().map(|f| dot(f, rho)).collect())
    }
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// A point of an exponential family in canonical coordinates, with the
/// Massieu value and the distribution cached.
#[derive(Debug, Clone)]
pub struct CanonicalPoint {
    family: ExponentialFamily,
    xi: Vec<f64>,
    psi: f64,
    probs: Vec<f64>,
}

/// Residuals of the Legendre pair `(Ψ, S)` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreCheck {
    /// `|S − (Ψ + Σ ξ^j η_j − E_ρ[b])|`.
    pub identity_residual: f64,
    /// Per coordinate, finite-difference `∂(S + E[b])/∂η_j − ξ^j`.
    pub gradient_residual: Vec<f64>,
}

impl CanonicalPoint {
    fn new(family: ExponentialFamily, xi: Vec<f64>) -> Result<Self> {
        let lw = family.log_weights(&xi)?;
        if lw.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite canonical coordinates".into()));
        }
        let psi = log_sum_exp(&lw);
        let probs = lw.iter().map(|x| (x - psi).exp()).collect();
        Ok(Self { family, xi, psi, probs })
    }

    pub fn family(&self) -> &ExponentialFamily {
        &self.family
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    /// `Ψ = log Z`.
    pub fn massieu(&self) -> f64 {
        self.psi
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// The distribution `ρ_ξ`; fails if it has underflowed to the boundary.
    pub fn distribution(&self) -> Result<FiniteDistribution> {
        let s: f64 = self.probs.iter().sum();
        FiniteDistribution::new(self.probs.iter().map(|p| p / s).collect())
    }

    /// Mixture coordinates `η_j = E_ρ[f_j] = −∂Ψ/∂ξ^j`.
    pub fn mixture_coords(&self) -> Vec<f64> {
        self.family.features().iter().map(|f| dot(f, &self.probs)).collect()
    }

    fn centred_features(&self) -> Vec<Vec<f64>> {
        let eta = self.mixture_coords();
        self.family.features().iter().zip(&eta).map(|(f, m)| f.iter().map(|x| x - m).collect()).collect()
    }

    /// Feature covariance `V_jk = Cov_ρ(f_j, f_k) = ∂²Ψ/∂ξ^j∂ξ^k`, which is also
    /// the Fisher matrix in canonical coordinates.
    pub fn covariance(&self) -> Matrix {
        let c = self.centred_features();
        let n = c.len();
        Matrix::from_fn(n, n, |j, k| self.probs.iter().zip(&c[j]).zip(&c[k]).map(|((p, a), b)| p * a * b).sum())
            .symmetrized()
    }

    /// Scores `∂ log ρ/∂ξ^j = −(f_j − η_j)`.
    pub fn canonical_scores(&self) -> Vec<Vec<f64>> {
        self.centred_features().into_iter().map(|f| f.into_iter().map(|x| -x).collect()).collect()
    }

    /// Scores in mixture coordinates, `∂ log ρ/∂η_j = Σ_k (f_k − η_k)(V⁻¹)_kj`.
    pub fn mixture_scores(&self) -> Result<Vec<Vec<f64>>> {
        let vinv = self.covariance().spd_inverse()?;
        let c = self.centred_features();
        let n = c.len();
        Ok((0..n)
            .map(|j| (0..self.family.omega()).map(|w| (0..n).map(|k| c[k][w] * vinv[(k, j)]).sum::<f64>()).collect())
            .collect())
    }

    /// Fisher information matrix in mixture coordinates, by exact summation of
    /// the score products. Inverse of [`covariance`](Self::covariance).
    pub fn fisher_mixture(&self) -> Result<Matrix> {
        let s = self.mixture_scores()?;
        let n = s.len();
        Ok(Matrix::from_fn(n, n, |i, j| self.probs.iter().zip(&s[i]).zip(&s[j]).map(|((p, a), b)| p * a * b).sum())
            .symmetrized())
    }

    /// Third central moments `T_ijk = E[(f_i−η_i)(f_j−η_j)(f_k−η_k)]`.
    pub(crate) fn third_central_moments(&self) -> Vec<f64> {
        let c = self.centred_features();
        let n = c.len();
        let mut t = vec![0.0; n * n * n];
        for w in 0..self.family.omega() {
            let p = self.probs[w];
            for i in 0..n {
                for j in i..n {
                    for k in j..n {
                        let v = p * c[i][w] * c[j][w] * c[k][w];
                        t[(i * n + j) * n + k] += v;
                    }
                }
            }
        }
        // fill by symmetry
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut s = [i, j, k];
                    s.sort_unstable();
                    t[(i * n + j) * n + k] = t[(s[0] * n + s[1]) * n + s[2]];
                }
            }
        }
        t
    }

    pub fn entropy(&self) -> f64 {
        entropy(&FiniteDistribution::with_boundary(self.probs.clone()).expect("normalized by construction"))
    }

    /// Checks `S = Ψ + Σ ξ^j η_j − E_ρ[b]` and, by central differences through
    /// the max-entropy inverse map, `∂(S + E[b])/∂η_j = ξ^j`.
    pub fn legendre_check(&self) -> Result<LegendreCheck> {
        let eta = self.mixture_coords();
        let eb = dot(self.family.base_log_density(), &self.probs);
        let dual = |xi: &[f64], eta: &[f64], psi: f64| psi + dot(xi, eta);
        let s = self.entropy();
        let identity_residual = (s - (dual(&self.xi, &eta, self.psi) - eb)).abs();

        let mut gradient_residual = Vec::with_capacity(eta.len());
        for j in 0..eta.len() {
            let h = 1e-5 * eta[j].abs().max(1.0);
            let mut values = [0.0; 2];
            for (slot, sign) in [1.0, -1.0].iter().enumerate() {
                let mut target = eta.clone();
                target[j] += sign * h;
                let fit = crate::estimation::maxent_fit_with(
                    &self.family,
                    &target,
                    &crate::estimation::FitOptions { start: Some(self.xi.clone()), ..Default::default() },
                )?;
                values[slot] = dual(fit.point.xi(), &target, fit.point.massieu());
            }
            gradient_residual.push((values[0] - values[1]) / (2.0 * h) - self.xi[j]);
        }
        Ok(LegendreCheck { identity_residual, gradient_residual })
    }
}
