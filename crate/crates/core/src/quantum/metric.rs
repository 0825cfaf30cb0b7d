use super::state::{DensityMatrix, QuantumTangent, QuantumTangentRep};
use crate::error::{Error, Result};
use crate::spectral::{
    kernel_pairing, ArithmeticMean, HermitianMatrix, InverseArithmeticMean, LogDifferenceQuotient, LogarithmicMean,
};

/// The two monotone metrics on density matrices built here.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantumMetric {
    /// `Re Tr[ρXY]`, whose Riesz map to mixture tangents is the Jordan
    /// product `X ↦ ½(ρX + Xρ)`.
    Gns,
    /// `∫₀¹ Tr[ρ^α X ρ^{1−α} Y] dα`.
    Bkm,
}

/// `Re Tr[ρXY]` for arbitrary Hermitian `X`, `Y`.
pub fn gns_pairing(rho: &DensityMatrix, x: &HermitianMatrix, y: &HermitianMatrix) -> Result<f64> {
    rho.check_operand(x)?;
    rho.check_operand(y)?;
    kernel_pairing(rho.spectral(), x, y, &ArithmeticMean)
}

/// `∫₀¹ Tr[ρ^α X ρ^{1−α} Y] dα` for arbitrary Hermitian `X`, `Y`.
pub fn bkm_pairing(rho: &DensityMatrix, x: &HermitianMatrix, y: &HermitianMatrix) -> Result<f64> {
    rho.check_operand(x)?;
    rho.check_operand(y)?;
    kernel_pairing(rho.spectral(), x, y, &LogarithmicMean)
}

fn require_scores(x: &QuantumTangent, y: &QuantumTangent) -> Result<()> {
    if x.rep() != QuantumTangentRep::Score || y.rep() != QuantumTangentRep::Score {
        return Err(Error::InvalidArgument("metric expects score tangents".into()));
    }
    Ok(())
}

/// GNS metric on scores.
pub fn gns_metric(rho: &DensityMatrix, x: &QuantumTangent, y: &QuantumTangent) -> Result<f64> {
    require_scores(x, y)?;
    gns_pairing(rho, x.matrix(), y.matrix())
}

/// BKM metric on scores, by the logarithmic-mean kernel.
pub fn bkm_metric(rho: &DensityMatrix, x: &QuantumTangent, y: &QuantumTangent) -> Result<f64> {
    require_scores(x, y)?;
    bkm_pairing(rho, x.matrix(), y.matrix())
}

/// Squared length of a mixture tangent `D` in the chosen metric:
/// `Σ |D̃_ij|² / k(p_i, p_j)` with `k` the metric's mean.
pub fn metric_on_mixture(rho: &DensityMatrix, d: &HermitianMatrix, which: QuantumMetric) -> Result<f64> {
    rho.check_operand(d)?;
    rho.require_faithful()?;
    match which {
        QuantumMetric::Gns => kernel_pairing(rho.spectral(), d, d, &InverseArithmeticMean),
        QuantumMetric::Bkm => kernel_pairing(rho.spectral(), d, d, &LogDifferenceQuotient),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{random_density_matrix, random_hermitian, random_unitary, seeded};
    use crate::spectral::{eigh, kernel_apply};

    fn setup(seed: u64, dim: usize) -> (DensityMatrix, QuantumTangent, QuantumTangent) {
        let mut rng = seeded(seed);
        let rho = DensityMatrix::new(random_density_matrix(&mut rng, dim)).unwrap();
        let x = QuantumTangent::centred_score(&rho, &random_hermitian(&mut rng, dim, 1.0)).unwrap();
        let y = QuantumTangent::centred_score(&rho, &random_hermitian(&mut rng, dim, 1.0)).unwrap();
        (rho, x, y)
    }

    #[test]
    fn pauli_x_at_maximally_mixed() {
        let rho = DensityMatrix::maximally_mixed(2);
        let x = QuantumTangent::score(&rho, HermitianMatrix::pauli_x()).unwrap();
        assert!((gns_metric(&rho, &x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((bkm_metric(&rho, &x, &x).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gns_is_symmetrized_trace() {
        for seed in 0..10 {
            let (rho, x, y) = setup(seed, 4);
            let direct = rho.matrix().trace_product(&x.matrix().jordan(y.matrix()));
            assert!((gns_metric(&rho, &x, &y).unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn bkm_below_gns_and_positive() {
        for seed in 0..20 {
            let (rho, x, y) = setup(seed, 3);
            let b = bkm_metric(&rho, &x, &x).unwrap();
            assert!(b > 0.0);
            assert!(b <= gns_metric(&rho, &x, &x).unwrap() + 1e-14);
            let s = bkm_metric(&rho, &x, &y).unwrap() - bkm_metric(&rho, &y, &x).unwrap();
            assert!(s.abs() < 1e-14);
        }
    }

    #[test]
    fn unitary_covariance() {
        let (rho, x, y) = setup(5, 4);
        let u = random_unitary(&mut seeded(6), 4);
        let rho_u = DensityMatrix::new(rho.matrix().conjugate_by(&u).unwrap()).unwrap();
        let xu = QuantumTangent::score(&rho_u, x.matrix().conjugate_by(&u).unwrap()).unwrap();
        let yu = QuantumTangent::score(&rho_u, y.matrix().conjugate_by(&u).unwrap()).unwrap();
        for m in [gns_metric, bkm_metric] {
            assert!((m(&rho, &x, &y).unwrap() - m(&rho_u, &xu, &yu).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn mixture_form_matches_score_form() {
        let (rho, x, _) = setup(7, 3);
        let d_gns = rho.matrix().jordan(x.matrix());
        let g = metric_on_mixture(&rho, &d_gns, QuantumMetric::Gns).unwrap();
        assert!((g - gns_metric(&rho, &x, &x).unwrap()).abs() < 1e-12);
        let d_bkm = kernel_apply(&eigh(rho.matrix()).unwrap(), x.matrix(), &LogarithmicMean).unwrap();
        let b = metric_on_mixture(&rho, &d_bkm, QuantumMetric::Bkm).unwrap();
        assert!((b - bkm_metric(&rho, &x, &x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn mixture_tangent_rejected() {
        let rho = DensityMatrix::maximally_mixed(2);
        let m = QuantumTangent::mixture(HermitianMatrix::pauli_z()).unwrap();
        assert!(gns_metric(&rho, &m, &m).is_err());
    }
}
