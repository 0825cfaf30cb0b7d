//! Logarithmic derivatives of state paths and the quantum Cramer-Rao bounds
//! they induce.
//!
//! For a path `t ↦ ρ_t` with derivative `D = ρ̇`:
//!
//! - right: `L_r = ρ⁻¹D`, generally not Hermitian;
//! - symmetric: `D = ½(ρL_s + L_sρ)`, solved with the kernel `2/(p+q)`;
//! - BKM: `D = ∫₀¹ ρ^α L_B ρ^{1−α} dα`, solved with `(log p − log q)/(p − q)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::family::{quantum_maxent_fit, QuantumExponentialFamily, QuantumPoint};
use super::metric::{bkm_pairing, gns_pairing};
use super::state::DensityMatrix;
use crate::error::{shape, Error, Result};
use crate::estimation::UNBIASED_TOL;
use crate::linalg::CMatrix;
use crate::spectral::{
    eigh, kernel_apply, HermitianMatrix, InverseArithmeticMean, LogDifferenceQuotient, LogarithmicMean,
};

/// Central-difference step for paths without an analytic derivative.
pub const PATH_FD_STEP: f64 = 1e-5;
/// Largest `|Tr ρ̇|` accepted before trace projection.
pub const DERIVATIVE_TRACE_TOL: f64 = 1e-8;

/// A one-parameter family of density matrices.
pub trait StatePath {
    fn state(&self, t: f64) -> Result<DensityMatrix>;

    /// Exact `dρ/dt`, if known.
    fn derivative(&self, _t: f64) -> Option<Result<HermitianMatrix>> {
        None
    }
}

/// A path given by a closure; differentiated numerically.
pub struct FnPath<F>(pub F);

impl<F: Fn(f64) -> Result<DensityMatrix>> StatePath for FnPath<F> {
    fn state(&self, t: f64) -> Result<DensityMatrix> {
        (self.0)(t)
    }
}

/// `t ↦ ρ_{ξ₀ + t·v}` in a quantum exponential family.
#[derive(Debug, Clone)]
pub struct CanonicalPath {
    pub family: QuantumExponentialFamily,
    pub origin: Vec<f64>,
    pub direction: Vec<f64>,
}

impl CanonicalPath {
    fn xi(&self, t: f64) -> Vec<f64> {
        self.origin.iter().zip(&self.direction).map(|(x, v)| x + t * v).collect()
    }
}

impl StatePath for CanonicalPath {
    fn state(&self, t: f64) -> Result<DensityMatrix> {
        Ok(self.family.point(&self.xi(t))?.state().clone())
    }

    /// `−K_ρ(Σ v^k (F_k − η_k))` with the logarithmic-mean kernel.
    fn derivative(&self, t: f64) -> Option<Result<HermitianMatrix>> {
        Some((|| {
            let pt = self.family.point(&self.xi(t))?;
            let score = combine(&pt.centred_features(), &self.direction)?;
            Ok(kernel_apply(pt.state().spectral(), &score, &LogarithmicMean)?.scale(-1.0))
        })())
    }
}

/// `t ↦` the max-entropy state with means `η₀ + t·w`.
#[derive(Debug, Clone)]
pub struct MixturePath {
    pub family: QuantumExponentialFamily,
    pub origin: Vec<f64>,
    pub direction: Vec<f64>,
}

impl MixturePath {
    pub fn point(&self, t: f64) -> Result<QuantumPoint> {
        let eta: Vec<f64> = self.origin.iter().zip(&self.direction).map(|(x, v)| x + t * v).collect();
        quantum_maxent_fit(&self.family, &eta)
    }
}

impl StatePath for MixturePath {
    fn state(&self, t: f64) -> Result<DensityMatrix> {
        Ok(self.point(t)?.state().clone())
    }

    /// `K_ρ(Σ_k (F_k − η_k) (V⁻¹w)_k)`, with `V` the BKM covariance.
    fn derivative(&self, t: f64) -> Option<Result<HermitianMatrix>> {
        Some((|| {
            let pt = self.point(t)?;
            let coeffs = pt.bkm_covariance()?.cholesky()?.solve(&self.direction);
            let score = combine(&pt.centred_features(), &coeffs)?;
            kernel_apply(pt.state().spectral(), &score, &LogarithmicMean)
        })())
    }
}

/// `t ↦ e^{−itH} ρ₀ e^{itH}`.
#[derive(Debug, Clone)]
pub struct UnitaryPath {
    pub initial: DensityMatrix,
    pub generator: HermitianMatrix,
}

impl UnitaryPath {
    fn unitary(&self, t: f64) -> Result<CMatrix> {
        let dec = eigh(&self.generator)?;
        let v = dec.eigenvectors();
        let n = v.rows();
        let phases: Vec<Complex64> = dec.eigenvalues().iter().map(|l| Complex64::from_polar(1.0, -t * l)).collect();
        let vd = CMatrix::from_fn(n, n, |i, k| v[(i, k)] * phases[k]);
        vd.matmul(&v.adjoint())
    }
}

impl StatePath for UnitaryPath {
    fn state(&self, t: f64) -> Result<DensityMatrix> {
        let u = self.unitary(t)?;
        let m = self.initial.matrix().conjugate_by(&u)?;
        DensityMatrix::new(m.shift((1.0 - m.trace()) / m.dim() as f64))
    }

    /// `−i[H, ρ_t]`.
    fn derivative(&self, t: f64) -> Option<Result<HermitianMatrix>> {
        Some((|| {
            let rho = self.state(t)?;
            let h = self.generator.as_cmatrix();
            let r = rho.matrix().as_cmatrix();
            let comm = h.matmul(r)?.sub(&r.matmul(h)?);
            HermitianMatrix::new(comm.scale_complex(Complex64::new(0.0, -1.0)))
        })())
    }
}

fn combine(ops: &[HermitianMatrix], coeffs: &[f64]) -> Result<HermitianMatrix> {
    if ops.len() != coeffs.len() || ops.is_empty() {
        return Err(shape(format!("{} coefficients for {} operators", coeffs.len(), ops.len())));
    }
    Ok(ops.iter().zip(coeffs).skip(1).fold(ops[0].scale(coeffs[0]), |acc, (o, c)| acc.add(&o.scale(*c))))
}

/// `dρ/dt` at `t`: analytic when the path provides it, central differences
/// otherwise; then projected onto the traceless matrices.
pub fn state_derivative(path: &impl StatePath, t: f64) -> Result<HermitianMatrix> {
    let d = match path.derivative(t) {
        Some(d) => d?,
        None => {
            let a = path.state(t + PATH_FD_STEP)?;
            let b = path.state(t - PATH_FD_STEP)?;
            a.matrix().sub(b.matrix()).scale(0.5 / PATH_FD_STEP)
        }
    };
    let tr = d.trace();
    if !(tr.abs() <= DERIVATIVE_TRACE_TOL) {
        return Err(Error::NotTraceless { trace: tr });
    }
    Ok(d.shift(-tr / d.dim() as f64))
}

/// Which logarithmic derivative (and matching information) to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantumInfoKind {
    /// Symmetric logarithmic derivative under the GNS pairing.
    GnsSld,
    Bkm,
    Right,
}

impl QuantumInfoKind {
    pub const ALL: [QuantumInfoKind; 3] = [QuantumInfoKind::GnsSld, QuantumInfoKind::Bkm, QuantumInfoKind::Right];

    pub fn name(self) -> &'static str {
        match self {
            QuantumInfoKind::GnsSld => "gns_sld",
            QuantumInfoKind::Bkm => "bkm",
            QuantumInfoKind::Right => "right",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogDerivatives {
    pub state: DensityMatrix,
    /// Traceless `dρ/dt`.
    pub derivative: HermitianMatrix,
    /// `ρ⁻¹ dρ/dt`.
    pub right: CMatrix,
    pub right_is_hermitian: bool,
    pub sld: HermitianMatrix,
    pub bkm: HermitianMatrix,
}

impl LogDerivatives {
    pub fn new(state: DensityMatrix, derivative: HermitianMatrix) -> Result<Self> {
        state.check_operand(&derivative)?;
        state.require_faithful()?;
        let spec = state.spectral();
        let inv = spec.apply(|p| 1.0 / p)?;
        let right = inv.as_cmatrix().matmul(derivative.as_cmatrix())?;
        let right_is_hermitian = right.anti_hermitian_norm() <= 1e-12 * right.frobenius_norm().max(1e-300);
        let sld = kernel_apply(spec, &derivative, &InverseArithmeticMean)?;
        let bkm = kernel_apply(spec, &derivative, &LogDifferenceQuotient)?;
        Ok(Self { state, derivative, right, right_is_hermitian, sld, bkm })
    }

    /// Information matching the chosen logarithmic derivative.
    pub fn information(&self, kind: QuantumInfoKind) -> Result<f64> {
        match kind {
            QuantumInfoKind::GnsSld => gns_pairing(&self.state, &self.sld, &self.sld),
            QuantumInfoKind::Bkm => Ok(self.bkm.trace_product(&self.derivative)),
            QuantumInfoKind::Right => {
                let rho = self.state.matrix().as_cmatrix();
                Ok(rho.matmul(&self.right.adjoint())?.trace_product(&self.right).re)
            }
        }
    }

    /// Largest `|Tr[ρ̇X] − pairing(L, X)|` over the observables, for the
    /// symmetric (GNS) and BKM derivatives.
    pub fn identity_residuals(&self, observables: &[HermitianMatrix]) -> Result<(f64, f64)> {
        let mut worst = (0.0f64, 0.0f64);
        for x in observables {
            let target = self.derivative.trace_product(x);
            worst.0 = worst.0.max((target - gns_pairing(&self.state, &self.sld, x)?).abs());
            worst.1 = worst.1.max((target - bkm_pairing(&self.state, &self.bkm, x)?).abs());
        }
        Ok(worst)
    }
}

pub fn log_derivatives(path: &impl StatePath, t0: f64) -> Result<LogDerivatives> {
    let state = path.state(t0)?;
    let derivative = state_derivative(path, t0)?;
    LogDerivatives::new(state, derivative)
}

pub fn quantum_fisher_info(path: &impl StatePath, t0: f64, kind: QuantumInfoKind) -> Result<f64> {
    log_derivatives(path, t0)?.information(kind)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumBound {
    pub kind: QuantumInfoKind,
    pub information: f64,
    /// `1/information`.
    pub bound: f64,
    /// `variance − bound`.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumCramerRaoReport {
    pub mean: f64,
    /// `d Tr[ρ_t X]/dt`, equal to one for a locally unbiased observable.
    pub mean_derivative: f64,
    /// `Tr[ρX²] − Tr[ρX]²`.
    pub variance: f64,
    /// Kubo-Mori variance `∫₀¹ Tr[ρ^α X_c ρ^{1−α} X_c] dα`, never above
    /// `variance`.
    pub bkm_variance: f64,
    pub bounds: Vec<QuantumBound>,
    /// `bkm_variance − 1/F_BKM`; zero along exponential families in mixture
    /// parametrization.
    pub bkm_slack: f64,
}

impl QuantumCramerRaoReport {
    pub fn bound(&self, kind: QuantumInfoKind) -> &QuantumBound {
        self.bounds.iter().find(|b| b.kind == kind).expect("all kinds are reported")
    }
}

/// Checks local unbiasedness of `observable` along the path and compares its
/// variance with the three quantum Cramer-Rao bounds.
pub fn quantum_cramer_rao(
    path: &impl StatePath,
    t0: f64,
    observable: &HermitianMatrix,
) -> Result<QuantumCramerRaoReport> {
    let ld = log_derivatives(path, t0)?;
    ld.state.check_operand(observable)?;
    let mean_derivative = ld.derivative.trace_product(observable);
    if !((mean_derivative - 1.0).abs() <= UNBIASED_TOL) {
        return Err(Error::BiasedEstimator { residual: vec![mean_derivative - 1.0] });
    }
    let mean = ld.state.expectation(observable)?;
    let variance = ld.state.variance(observable)?;
    let centred = observable.shift(-mean);
    let bkm_variance = bkm_pairing(&ld.state, &centred, &centred)?;
    let mut bounds = Vec::with_capacity(3);
    let mut bkm_slack = f64::NAN;
    for kind in QuantumInfoKind::ALL {
        let information = ld.information(kind)?;
        let bound = 1.0 / information;
        if kind == QuantumInfoKind::Bkm {
            bkm_slack = bkm_variance - bound;
        }
        bounds.push(QuantumBound { kind, information, bound, slack: variance - bound });
    }
    Ok(QuantumCramerRaoReport { mean, mean_derivative, variance, bkm_variance, bounds, bkm_slack })
}
