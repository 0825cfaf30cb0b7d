use alloc::format;

#[allow(unused_imports)] // used only when std is absent from the build graph
use num_traits::Float;

use crate::classical::FAITHFUL_FLOOR;
use crate::error::{shape, Error, Result};
use crate::spectral::{
    eigh, kernel_apply, HermitianMatrix, LogDifferenceQuotient, LogarithmicMean, SpectralDecomposition,
};

/// Tolerance on `Tr ρ = 1`.
pub const TRACE_TOL: f64 = 1e-12;

/// A density matrix with its spectral decomposition cached.
///
/// Faithful (smallest eigenvalue above [`FAITHFUL_FLOOR`]) unless built with
/// [`DensityMatrix::with_boundary`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: HermitianMatrix,
    spectral: SpectralDecomposition,
    boundary: bool,
}

impl DensityMatrix {
    pub fn new(matrix: HermitianMatrix) -> Result<Self> {
        let s = Self::checked(matrix, false)?;
        let min = s.min_eigenvalue();
        if !(min > FAITHFUL_FLOOR) {
            return Err(Error::NotFaithful { min });
        }
        Ok(s)
    }

    /// Boundary override: singular states are accepted, eigenvalues below
    /// `−TRACE_TOL` are not.
    pub fn with_boundary(matrix: HermitianMatrix) -> Result<Self> {
        let s = Self::checked(matrix, true)?;
        let min = s.min_eigenvalue();
        if min < -TRACE_TOL {
            return Err(Error::InvalidDistribution(format!("negative eigenvalue {min:e}")));
        }
        Ok(s)
    }

    /// Accepts `|Tr ρ − 1| ≤ trace_tol` instead of [`TRACE_TOL`] and divides
    /// by the trace before the usual checks.
    pub fn with_trace_tol(matrix: HermitianMatrix, trace_tol: f64, allow_boundary: bool) -> Result<Self> {
        if !(trace_tol >= 0.0) {
            return Err(Error::InvalidArgument(format!("trace tolerance {trace_tol} is negative")));
        }
        let t = matrix.trace();
        if !t.is_finite() || (t - 1.0).abs() > trace_tol {
            return Err(Error::InvalidDistribution(format!("density matrix has trace {t}")));
        }
        let m = matrix.scale(1.0 / t);
        if allow_boundary {
            Self::with_boundary(m)
        } else {
            Self::new(m)
        }
    }

    fn checked(matrix: HermitianMatrix, boundary: bool) -> Result<Self> {
        let t = matrix.trace();
        if !t.is_finite() || (t - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidDistribution(format!("density matrix has trace {t}")));
        }
        let spectral = eigh(&matrix)?;
        Ok(Self { matrix, spectral, boundary })
    }

    /// `Σ p_i |u_i⟩⟨u_i|` from a known decomposition; the caller guarantees
    /// normalization.
    pub(crate) fn from_spectral(spectral: SpectralDecomposition) -> Self {
        let matrix = spectral.reconstruct();
        let boundary = spectral.eigenvalues().first().is_some_and(|p| *p <= FAITHFUL_FLOOR);
        Self { matrix, spectral, boundary }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::diagonal(&alloc::vec![1.0 / dim as f64; dim]).expect("uniform weights are faithful")
    }

    /// Diagonal state with the given probabilities.
    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(HermitianMatrix::diagonal(probs))
    }

    /// Normalizes a positive semidefinite matrix by its trace.
    pub fn normalized(matrix: &HermitianMatrix) -> Result<Self> {
        let t = matrix.trace();
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidDistribution(format!("matrix has trace {t}")));
        }
        Self::new(matrix.scale(1.0 / t))
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn spectral(&self) -> &SpectralDecomposition {
        &self.spectral
    }

    /// Ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        self.spectral.eigenvalues()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(f64::NAN)
    }

    pub fn is_faithful(&self) -> bool {
        self.min_eigenvalue() > FAITHFUL_FLOOR
    }

    pub fn allows_boundary(&self) -> bool {
        self.boundary
    }

    pub(crate) fn require_faithful(&self) -> Result<()> {
        if self.is_faithful() {
            Ok(())
        } else {
            Err(Error::NotFaithful { min: self.min_eigenvalue() })
        }
    }

    pub(crate) fn check_operand(&self, x: &HermitianMatrix) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(shape(format!("operator of dimension {} on a {}-dimensional state", x.dim(), self.dim())));
        }
        Ok(())
    }

    /// `Tr[ρ X]`.
    pub fn expectation(&self, x: &HermitianMatrix) -> Result<f64> {
        self.check_operand(x)?;
        Ok(self.matrix.trace_product(x))
    }

    /// `Tr[ρX²] − Tr[ρX]²`.
    pub fn variance(&self, x: &HermitianMatrix) -> Result<f64> {
        let m = self.expectation(x)?;
        let c = x.shift(-m);
        Ok(self.matrix.trace_product(&c.jordan(&c)))
    }

    /// Von Neumann entropy.
    pub fn entropy(&self) -> f64 {
        quantum_entropy(self)
    }
}

/// Von Neumann entropy `−Tr[ρ log ρ]`; eigenvalues at or below zero
/// contribute nothing.
pub fn quantum_entropy(rho: &DensityMatrix) -> f64 {
    -rho.eigenvalues().iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>()
}

/// Binary entropy `h(λ) = −λ log λ − (1−λ) log(1−λ)`.
pub fn binary_entropy(lambda: f64) -> f64 {
    let xlogx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    -xlogx(lambda) - xlogx(1.0 - lambda)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyBound {
    /// `S(λρ + (1−λ)σ)`.
    pub lhs: f64,
    /// `λS(ρ) + (1−λ)S(σ) + h(λ)`.
    pub rhs: f64,
    pub slack: f64,
}

/// Upper bound on the entropy of a mixture by the mean entropy plus the
/// mixing entropy. Boundary states are accepted.
pub fn mixture_entropy_bound(rho: &DensityMatrix, sigma: &DensityMatrix, lambda: f64) -> Result<EntropyBound> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidArgument(format!("mixing weight {lambda} is not in (0, 1)")));
    }
    if rho.dim() != sigma.dim() {
        return Err(shape("states of different dimensions"));
    }
    let mix = rho.matrix().scale(lambda).add(&sigma.matrix().scale(1.0 - lambda));
    let lhs = quantum_entropy(&DensityMatrix::with_boundary(mix)?);
    let rhs = lambda * quantum_entropy(rho) + (1.0 - lambda) * quantum_entropy(sigma) + binary_entropy(lambda);
    Ok(EntropyBound { lhs, rhs, slack: rhs - lhs })
}

/// Which picture a quantum tangent is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantumTangentRep {
    /// Traceless perturbation `ρ̇` of the state.
    Mixture,
    /// Observable with `Tr[ρ X] = 0` at the base state.
    Score,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumTangent {
    rep: QuantumTangentRep,
    matrix: HermitianMatrix,
}

fn tangent_tol(x: &HermitianMatrix) -> f64 {
    TRACE_TOL * x.frobenius_norm().max(1.0)
}

impl QuantumTangent {
    pub fn mixture(matrix: HermitianMatrix) -> Result<Self> {
        let t = matrix.trace();
        if t.abs() > tangent_tol(&matrix) {
            return Err(Error::NotTraceless { trace: t });
        }
        Ok(Self { rep: QuantumTangentRep::Mixture, matrix })
    }

    /// A score at `rho`; `Tr[ρX]` must vanish.
    pub fn score(rho: &DensityMatrix, matrix: HermitianMatrix) -> Result<Self> {
        let m = rho.expectation(&matrix)?;
        if m.abs() > tangent_tol(&matrix) {
            return Err(Error::InvalidArgument(format!("score has mean {m:e} in the base state")));
        }
        Ok(Self { rep: QuantumTangentRep::Score, matrix })
    }

    /// Gauge-fixed score `X − Tr[ρX]·I`.
    pub fn centred_score(rho: &DensityMatrix, x: &HermitianMatrix) -> Result<Self> {
        let m = rho.expectation(x)?;
        Ok(Self { rep: QuantumTangentRep::Score, matrix: x.shift(-m) })
    }

    pub fn zero(rep: QuantumTangentRep, dim: usize) -> Self {
        Self { rep, matrix: HermitianMatrix::zeros(dim) }
    }

    pub fn rep(&self) -> QuantumTangentRep {
        self.rep
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> HermitianMatrix {
        self.matrix
    }
}

/// Mixture `X_m` ↔ score `X_e` through the logarithmic-mean kernel,
/// `X_m = K_ρ(X_e)`, followed by recentring. With this map
/// `bkm_metric(x, y) = Tr[X_m · Y_e]`.
pub fn quantum_tangent_convert(
    rho: &DensityMatrix,
    t: &QuantumTangent,
    target: QuantumTangentRep,
) -> Result<QuantumTangent> {
    rho.check_operand(&t.matrix)?;
    rho.require_faithful()?;
    if t.rep == target {
        return Ok(t.clone());
    }
    let matrix = match target {
        QuantumTangentRep::Mixture => {
            let m = kernel_apply(rho.spectral(), &t.matrix, &LogarithmicMean)?;
            let d = m.dim() as f64;
            m.shift(-m.trace() / d)
        }
        QuantumTangentRep::Score => {
            let x = kernel_apply(rho.spectral(), &t.matrix, &LogDifferenceQuotient)?;
            let mean = rho.matrix().trace_product(&x);
            x.shift(-mean)
        }
    };
    Ok(QuantumTangent { rep: target, matrix })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::bkm_metric;
    use crate::rng::{random_density_matrix, random_hermitian, seeded};

    #[test]
    fn loose_trace_tolerance_renormalizes() {
        let m = HermitianMatrix::diagonal(&[0.3, 0.7 + 1e-8]);
        assert!(DensityMatrix::new(m.clone()).is_err());
        let rho = DensityMatrix::with_trace_tol(m.clone(), 1e-6, false).unwrap();
        assert!((rho.matrix().trace() - 1.0).abs() < 1e-15);
        assert!(DensityMatrix::with_trace_tol(m, 1e-9, false).is_err());
        let pure = HermitianMatrix::diagonal(&[1.0, 0.0]);
        assert!(DensityMatrix::with_trace_tol(pure.clone(), 1e-12, false).is_err());
        assert!(DensityMatrix::with_trace_tol(pure, 1e-12, true).is_ok());
    }

    #[test]
    fn rejects_bad_trace_and_singular() {
        assert!(matches!(
            DensityMatrix::new(HermitianMatrix::diagonal(&[0.5, 0.6])),
            Err(Error::InvalidDistribution(_))
        ));
        assert!(matches!(DensityMatrix::new(HermitianMatrix::diagonal(&[1.0, 0.0])), Err(Error::NotFaithful { .. })));
        let b = DensityMatrix::with_boundary(HermitianMatrix::diagonal(&[1.0, 0.0])).unwrap();
        assert!(!b.is_faithful() && b.allows_boundary());
    }

    #[test]
    fn maximally_mixed_entropy() {
        let rho = DensityMatrix::maximally_mixed(4);
        assert!((rho.entropy() - 4.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn entropy_bound_equality_cases() {
        let mut rng = seeded(3);
        let rho = DensityMatrix::new(random_density_matrix(&mut rng, 3)).unwrap();
        let b = mixture_entropy_bound(&rho, &rho, 0.3).unwrap();
        assert!((b.slack - binary_entropy(0.3)).abs() < 1e-14);
        let up = DensityMatrix::with_boundary(HermitianMatrix::diagonal(&[1.0, 0.0])).unwrap();
        let down = DensityMatrix::with_boundary(HermitianMatrix::diagonal(&[0.0, 1.0])).unwrap();
        let e = mixture_entropy_bound(&up, &down, 0.5).unwrap();
        assert!((e.lhs - 2.0f64.ln()).abs() < 1e-15);
        assert!(e.slack.abs() < 1e-15);
        assert!(mixture_entropy_bound(&up, &down, 1.0).is_err());
    }

    #[test]
    fn tangent_roundtrip_and_pairing() {
        let mut rng = seeded(4);
        for dim in 2..6 {
            let rho = DensityMatrix::new(random_density_matrix(&mut rng, dim)).unwrap();
            let x = QuantumTangent::centred_score(&rho, &random_hermitian(&mut rng, dim, 1.0)).unwrap();
            let y = QuantumTangent::centred_score(&rho, &random_hermitian(&mut rng, dim, 1.0)).unwrap();
            let xm = quantum_tangent_convert(&rho, &x, QuantumTangentRep::Mixture).unwrap();
            assert!(xm.matrix().trace().abs() < 1e-13);
            let back = quantum_tangent_convert(&rho, &xm, QuantumTangentRep::Score).unwrap();
            assert!(back.matrix().sub(x.matrix()).frobenius_norm() < 1e-10);
            let pairing = xm.matrix().trace_product(y.matrix());
            assert!((pairing - bkm_metric(&rho, &x, &y).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn maximally_mixed_conversion_is_scalar() {
        let rho = DensityMatrix::maximally_mixed(3);
        let x = QuantumTangent::centred_score(&rho, &HermitianMatrix::diagonal(&[1.0, -2.0, 1.0])).unwrap();
        let m = quantum_tangent_convert(&rho, &x, QuantumTangentRep::Mixture).unwrap();
        assert!(m.matrix().sub(&x.matrix().scale(1.0 / 3.0)).frobenius_norm() < 1e-15);
        let z = QuantumTangent::zero(QuantumTangentRep::Score, 3);
        let zm = quantum_tangent_convert(&rho, &z, QuantumTangentRep::Mixture).unwrap();
        assert_eq!(zm.matrix().frobenius_norm(), 0.0);
    }

    #[test]
    fn variance_of_pauli_in_mixed_state() {
        let rho = DensityMatrix::maximally_mixed(2);
        assert!((rho.variance(&HermitianMatrix::pauli_x()).unwrap() - 1.0).abs() < 1e-15);
    }
}
