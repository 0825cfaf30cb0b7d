use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // used only when std is absent from the build graph
use num_traits::Float;

use super::state::DensityMatrix;
use crate::classical::GRAM_TOL;
use crate::error::{shape, Error, Result};
use crate::estimation::newton;
use crate::estimation::FitOptions;
use crate::linalg::{dot, CMatrix, Matrix};
use crate::spectral::{eigh, kernel_pairing, HermitianMatrix, LogarithmicMean, SpectralDecomposition};

/// States `ρ_ξ = exp(−(H₀ + Σ ξ^j F_j)) / Z(ξ)`.
#[derive(Debug, Clone)]
pub struct QuantumExponentialFamily {
    inner: Arc<Data>,
}

#[derive(Debug)]
struct Data {
    h0: HermitianMatrix,
    features: Vec<HermitianMatrix>,
}

impl PartialEq for QuantumExponentialFamily {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.h0 == other.inner.h0 && self.inner.features == other.inner.features)
    }
}

impl QuantumExponentialFamily {
    /// Validates dimensions and independence of the features modulo the
    /// identity.
    pub fn new(h0: HermitianMatrix, features: Vec<HermitianMatrix>) -> Result<Self> {
        let d = h0.dim();
        let n = features.len();
        if n == 0 || d == 0 {
            return Err(Error::InvalidFamily("need at least one feature in a nonzero dimension".into()));
        }
        if features.iter().any(|f| f.dim() != d) {
            return Err(Error::InvalidFamily("features and base Hamiltonian differ in dimension".into()));
        }
        if n >= d * d {
            return Err(Error::InvalidFamily(format!("{n} features in dimension {d}")));
        }
        let traceless: Vec<HermitianMatrix> = features.iter().map(|f| f.shift(-f.trace() / d as f64)).collect();
        let gram = Matrix::from_fn(n, n, |i, j| traceless[i].trace_product(&traceless[j]));
        let min_eig = gram.symmetrized().symmetric_eigenvalues()?[0];
        if !(min_eig > GRAM_TOL) {
            return Err(Error::InvalidFamily(format!(
                "features are linearly dependent modulo the identity (Gram eigenvalue {min_eig:e})"
            )));
        }
        Ok(Self { inner: Arc::new(Data { h0, features }) })
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.inner.h0.dim()
    }

    pub fn num_features(&self) -> usize {
        self.inner.features.len()
    }

    pub fn base_hamiltonian(&self) -> &HermitianMatrix {
        &self.inner.h0
    }

    pub fn features(&self) -> &[HermitianMatrix] {
        &self.inner.features
    }

    fn check_xi(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.num_features() {
            return Err(shape(format!("{} coordinates for {} features", xi.len(), self.num_features())));
        }
        if xi.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite canonical coordinates".into()));
        }
        Ok(())
    }

    /// `H₀ + Σ ξ^j F_j`.
    pub fn hamiltonian(&self, xi: &[f64]) -> Result<HermitianMatrix> {
        self.check_xi(xi)?;
        Ok(self.inner.features.iter().zip(xi).fold(self.inner.h0.clone(), |h, (f, x)| h.add(&f.scale(*x))))
    }

    pub fn point(&self, xi: &[f64]) -> Result<QuantumPoint> {
        QuantumPoint::new(self.clone(), xi.to_vec())
    }

    /// `Tr[ρ F_j]` for an arbitrary state.
    pub fn feature_means(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        self.inner.features.iter().map(|f| rho.expectation(f)).collect()
    }
}

/// `ρ_ξ` of the family.
pub fn state_from_score(family: &QuantumExponentialFamily, xi: &[f64]) -> Result<DensityMatrix> {
    Ok(family.point(xi)?.state().clone())
}

/// `log Z(ξ) = log Tr exp(−(H₀ + Σ ξ^j F_j))`.
pub fn quantum_massieu(family: &QuantumExponentialFamily, xi: &[f64]) -> Result<f64> {
    Ok(family.point(xi)?.massieu())
}

/// A point of a quantum exponential family with its state and `log Z`
/// cached.
#[derive(Debug, Clone)]
pub struct QuantumPoint {
    family: QuantumExponentialFamily,
    xi: Vec<f64>,
    log_z: f64,
    state: DensityMatrix,
}

/// `(log Tr e^{−H}, e^{−H}/Z)` with the ground energy factored out.
pub(crate) fn gibbs_state(h: &HermitianMatrix) -> Result<(f64, DensityMatrix)> {
    let dec = eigh(h)?;
    let lambda = dec.eigenvalues();
    let n = lambda.len();
    let ground = lambda[0];
    // descending Boltzmann weights become ascending after reversal
    let w: Vec<f64> = lambda.iter().rev().map(|l| (-(l - ground)).exp()).collect();
    let z: f64 = w.iter().sum();
    let probs: Vec<f64> = w.iter().map(|x| x / z).collect();
    let u = dec.eigenvectors();
    let vectors = CMatrix::from_fn(n, n, |i, k| u[(i, n - 1 - k)]);
    Ok((-ground + z.ln(), DensityMatrix::from_spectral(SpectralDecomposition::from_raw(probs, vectors))))
}

/// Residuals of the Legendre pair `(log Z, S)` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumLegendreCheck {
    /// `|S − (log Z + Σ ξ^j η_j + Tr[ρH₀])|`.
    pub identity_residual: f64,
    /// Per coordinate, finite-difference `∂(S − Tr[ρH₀])/∂η_j − ξ^j`.
    pub gradient_residual: Vec<f64>,
}

impl QuantumPoint {
    fn new(family: QuantumExponentialFamily, xi: Vec<f64>) -> Result<Self> {
        let (log_z, state) = gibbs_state(&family.hamiltonian(&xi)?)?;
        Ok(Self { family, xi, log_z, state })
    }

    pub fn family(&self) -> &QuantumExponentialFamily {
        &self.family
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    /// `log Z`.
    pub fn massieu(&self) -> f64 {
        self.log_z
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    /// `η_j = Tr[ρ F_j] = −∂ log Z/∂ξ^j`.
    pub fn means(&self) -> Vec<f64> {
        self.family.features().iter().map(|f| self.state.matrix().trace_product(f)).collect()
    }

    /// Feature scores `F_j − η_j`.
    pub fn centred_features(&self) -> Vec<HermitianMatrix> {
        self.family.features().iter().zip(self.means()).map(|(f, m)| f.shift(-m)).collect()
    }

    /// BKM covariance of the features, `∂² log Z/∂ξ^j∂ξ^k`.
    pub fn bkm_covariance(&self) -> Result<Matrix> {
        let c = self.centred_features();
        let n = c.len();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = kernel_pairing(self.state.spectral(), &c[i], &c[j], &LogarithmicMean)?;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(m)
    }

    pub fn entropy(&self) -> f64 {
        self.state.entropy()
    }

    /// Checks `S = log Z + Σ ξ^j η_j + Tr[ρH₀]` and, by central differences
    /// through the max-entropy inverse map, `∂(S − Tr[ρH₀])/∂η_j = ξ^j`.
    pub fn legendre_check(&self) -> Result<QuantumLegendreCheck> {
        let eta = self.means();
        let base = self.state.matrix().trace_product(self.family.base_hamiltonian());
        let identity_residual = (self.entropy() - (self.log_z + dot(&self.xi, &eta) + base)).abs();
        let mut gradient_residual = Vec::with_capacity(eta.len());
        for j in 0..eta.len() {
            let h = 1e-5 * eta[j].abs().max(1.0);
            let mut values = [0.0; 2];
            for (slot, sign) in [1.0, -1.0].iter().enumerate() {
                let mut target = eta.clone();
                target[j] += sign * h;
                let options = FitOptions { start: Some(self.xi.clone()), ..Default::default() };
                let fit = quantum_maxent_fit_with(&self.family, &target, &options)?;
                values[slot] = fit.point.massieu() + dot(fit.point.xi(), &target);
            }
            gradient_residual.push((values[0] - values[1]) / (2.0 * h) - self.xi[j]);
        }
        Ok(QuantumLegendreCheck { identity_residual, gradient_residual })
    }
}

#[derive(Debug, Clone)]
pub struct QuantumMaxEntFit {
    pub point: QuantumPoint,
    pub iterations: usize,
    pub residual: f64,
    /// Dual objective `log Z(ξ) + ξ·m` after each accepted step.
    pub objective_history: Vec<f64>,
}

struct QuantumDual<'a>(&'a QuantumExponentialFamily);

impl newton::Dual for QuantumDual<'_> {
    fn eval(&self, xi: &[f64]) -> Result<newton::DualEval> {
        let pt = self.0.point(xi)?;
        Ok(newton::DualEval {
            psi: pt.massieu(),
            means: pt.means(),
            hessian: pt.bkm_covariance()?,
            min_weight: pt.state().min_eigenvalue(),
        })
    }
    fn psi(&self, xi: &[f64]) -> Result<f64> {
        quantum_massieu(self.0, xi)
    }
}

/// Maximum-entropy state in `family` with the given feature means.
pub fn quantum_maxent_fit(family: &QuantumExponentialFamily, target_means: &[f64]) -> Result<QuantumPoint> {
    Ok(quantum_maxent_fit_with(family, target_means, &FitOptions::default())?.point)
}

pub fn quantum_maxent_fit_with(
    family: &QuantumExponentialFamily,
    target_means: &[f64],
    options: &FitOptions,
) -> Result<QuantumMaxEntFit> {
    let n = family.num_features();
    if target_means.len() != n {
        return Err(shape(format!("{} target means for {n} features", target_means.len())));
    }
    if target_means.iter().any(|m| !m.is_finite()) {
        return Err(Error::InvalidArgument("non-finite target mean".into()));
    }
    let start = match &options.start {
        Some(s) if s.len() == n => s.clone(),
        Some(_) => return Err(shape("warm start has the wrong dimension")),
        None => vec![0.0; n],
    };
    let out = newton::solve(&QuantumDual(family), target_means, start, options.tol, options.max_iter)?;
    Ok(QuantumMaxEntFit {
        point: family.point(&out.xi)?,
        iterations: out.iterations,
        residual: out.residual,
        objective_history: out.objective_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::ExponentialFamily;
    use crate::estimation::maxent_fit;
    use crate::rng::{random_hermitian, seeded};

    fn random_family(seed: u64, dim: usize, n: usize) -> QuantumExponentialFamily {
        let mut rng = seeded(seed);
        let h0 = random_hermitian(&mut rng, dim, 0.5);
        let features = (0..n).map(|_| random_hermitian(&mut rng, dim, 1.0)).collect();
        QuantumExponentialFamily::new(h0, features).unwrap()
    }

    #[test]
    fn origin_is_maximally_mixed() {
        let fam = QuantumExponentialFamily::new(
            HermitianMatrix::zeros(3),
            vec![HermitianMatrix::diagonal(&[1.0, 0.0, -1.0])],
        )
        .unwrap();
        let pt = fam.point(&[0.0]).unwrap();
        assert!((pt.massieu() - 3.0f64.ln()).abs() < 1e-15);
        assert!(pt.state().matrix().sub(&HermitianMatrix::identity(3).scale(1.0 / 3.0)).frobenius_norm() < 1e-15);
    }

    #[test]
    fn qubit_pauli_z_closed_form() {
        let fam = QuantumExponentialFamily::new(HermitianMatrix::zeros(2), vec![HermitianMatrix::pauli_z()]).unwrap();
        let t: f64 = 0.7;
        let rho = state_from_score(&fam, &[t]).unwrap();
        let z = (-t).exp() + t.exp();
        assert!((rho.matrix().get(0, 0).re - (-t).exp() / z).abs() < 1e-15);
        assert!((rho.matrix().get(1, 1).re - t.exp() / z).abs() < 1e-15);
        assert!((quantum_massieu(&fam, &[t]).unwrap() - z.ln()).abs() < 1e-15);
    }

    #[test]
    fn commuting_family_matches_classical() {
        let h0 = [0.3, -0.2, 0.5, 0.0];
        let f = [[1.0, 0.0, 2.0, -1.0], [0.5, 1.5, 0.0, 0.0]];
        let fam = QuantumExponentialFamily::new(
            HermitianMatrix::diagonal(&h0),
            f.iter().map(|r| HermitianMatrix::diagonal(r)).collect(),
        )
        .unwrap();
        let cfam =
            ExponentialFamily::new(f.iter().map(|r| r.to_vec()).collect(), Some(h0.iter().map(|x| -x).collect()))
                .unwrap();
        let xi = [0.4, -0.9];
        let q = fam.point(&xi).unwrap();
        let c = cfam.point(&xi).unwrap();
        assert!((q.massieu() - c.massieu()).abs() < 1e-12);
        for (a, b) in q.state().matrix().diagonal_values().iter().zip(c.probs()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(q.bkm_covariance().unwrap().sub(&c.covariance()).max_abs() < 1e-12);
        let target = [0.6, 0.4];
        let qf = quantum_maxent_fit(&fam, &target).unwrap();
        let cf = maxent_fit(&cfam, &target).unwrap();
        for j in 0..2 {
            assert!((qf.xi()[j] - cf.xi()[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn massieu_derivatives() {
        let fam = random_family(11, 4, 2);
        let xi = [0.3, -0.4];
        let pt = fam.point(&xi).unwrap();
        let eta = pt.means();
        let cov = pt.bkm_covariance().unwrap();
        let h = 1e-4;
        for j in 0..2 {
            let mut a = xi;
            let mut b = xi;
            a[j] += h;
            b[j] -= h;
            let la = quantum_massieu(&fam, &a).unwrap();
            let lb = quantum_massieu(&fam, &b).unwrap();
            let l0 = pt.massieu();
            assert!(((la - lb) / (2.0 * h) + eta[j]).abs() < 1e-6);
            let second = (la - 2.0 * l0 + lb) / (h * h);
            assert!((second - cov[(j, j)]).abs() < 1e-6, "{second} vs {}", cov[(j, j)]);
        }
    }

    #[test]
    fn symmetric_qubit_fit() {
        let fam = QuantumExponentialFamily::new(HermitianMatrix::zeros(2), vec![HermitianMatrix::pauli_z()]).unwrap();
        let pt = quantum_maxent_fit(&fam, &[0.0]).unwrap();
        assert!(pt.xi()[0].abs() < 1e-14);
        assert!((pt.entropy() - 2.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn fit_matches_means_and_legendre() {
        let fam = random_family(12, 3, 2);
        let target = fam.point(&[0.5, -0.3]).unwrap().means();
        let fit = quantum_maxent_fit_with(&fam, &target, &FitOptions::default()).unwrap();
        for (a, b) in fit.point.means().iter().zip(&target) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(fit.objective_history.windows(2).all(|w| w[1] <= w[0] + 1e-14 * w[0].abs().max(1.0)));
        let check = fit.point.legendre_check().unwrap();
        assert!(check.identity_residual < 1e-10);
        assert!(check.gradient_residual.iter().all(|r| r.abs() < 1e-6), "{check:?}");
    }

    #[test]
    fn infeasible_quantum_target() {
        let fam = QuantumExponentialFamily::new(HermitianMatrix::zeros(2), vec![HermitianMatrix::pauli_z()]).unwrap();
        assert!(matches!(quantum_maxent_fit(&fam, &[1.5]), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn dependent_features_rejected() {
        let z = HermitianMatrix::pauli_z();
        let err = QuantumExponentialFamily::new(HermitianMatrix::zeros(2), vec![z.clone(), z.scale(2.0).shift(1.0)]);
        assert!(matches!(err, Err(Error::InvalidFamily(_))));
    }
}
