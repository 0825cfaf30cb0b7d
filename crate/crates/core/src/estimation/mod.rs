//! Parametric families, Fisher information, the matrix Cramer-Rao bound,
//! max-entropy fitting and seeded sampling.

pub(crate) mod newton;
mod sampling;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::classical::{CanonicalPoint, ExponentialFamily, FiniteDistribution};
use crate::error::{shape, Error, Result};
use crate::linalg::{dot, Matrix};

pub use sampling::{empirical_distribution, estimate_from_data, sample, EmpiricalDistribution, Histogram};

/// Residual bias tolerated by [`cramer_rao_report`].
pub const UNBIASED_TOL: f64 = 1e-6;
/// Zero-sum tolerance on finite-difference Jacobian columns.
pub const CONSERVATION_TOL: f64 = 1e-8;

/// A differentiable map from parameters to distributions on a fixed finite
/// sample space.
pub trait ParametricFamily {
    fn param_dim(&self) -> usize;
    fn omega_size(&self) -> usize;
    fn distribution(&self, theta: &[f64]) -> Result<FiniteDistribution>;

    /// Exact scores `∂ log ρ/∂θ_i`, one vector per parameter, if the family
    /// knows them. Families returning `None` are differentiated numerically.
    fn scores(&self, _theta: &[f64]) -> Option<Result<Vec<Vec<f64>>>> {
        None
    }
}

/// Central-difference step `1e-5·max(1, |θ_i|)`.
pub fn fd_step(theta_i: f64) -> f64 {
    1e-5 * theta_i.abs().max(1.0)
}

/// An exponential family parametrized by its canonical coordinates ξ.
#[derive(Debug, Clone)]
pub struct CanonicalParametrization(pub ExponentialFamily);

impl ParametricFamily for CanonicalParametrization {
    fn param_dim(&self) -> usize {
        self.0.dim()
    }
    fn omega_size(&self) -> usize {
        self.0.omega()
    }
    fn distribution(&self, theta: &[f64]) -> Result<FiniteDistribution> {
        self.0.point(theta)?.distribution()
    }
    fn scores(&self, theta: &[f64]) -> Option<Result<Vec<Vec<f64>>>> {
        Some(self.0.point(theta).map(|p| p.canonical_scores()))
    }
}

/// An exponential family parametrized by its mixture coordinates
/// `η = E[f]`; each evaluation runs the max-entropy fit.
#[derive(Debug, Clone)]
pub struct MixtureParametrization(pub ExponentialFamily);

impl MixtureParametrization {
    pub fn point(&self, eta: &[f64]) -> Result<CanonicalPoint> {
        maxent_fit(&self.0, eta)
    }
}

impl ParametricFamily for MixtureParametrization {
    fn param_dim(&self) -> usize {
        self.0.dim()
    }
    fn omega_size(&self) -> usize {
        self.0.omega()
    }
    fn distribution(&self, theta: &[f64]) -> Result<FiniteDistribution> {
        self.point(theta)?.distribution()
    }
    fn scores(&self, theta: &[f64]) -> Option<Result<Vec<Vec<f64>>>> {
        Some(self.point(theta).and_then(|p| p.mixture_scores()))
    }
}

/// A family given by a user function returning probability vectors;
/// differentiated by central differences.
pub struct FnFamily<F> {
    param_dim: usize,
    omega: usize,
    map: F,
}

impl<F: Fn(&[f64]) -> Vec<f64>> FnFamily<F> {
    pub fn new(param_dim: usize, omega: usize, map: F) -> Self {
        Self { param_dim, omega, map }
    }
}

impl<F: Fn(&[f64]) -> Vec<f64>> ParametricFamily for FnFamily<F> {
    fn param_dim(&self) -> usize {
        self.param_dim
    }
    fn omega_size(&self) -> usize {
        self.omega
    }
    fn distribution(&self, theta: &[f64]) -> Result<FiniteDistribution> {
        let p = (self.map)(theta);
        if p.len() != self.omega {
            return Err(shape(format!("family returned {} probabilities, expected {}", p.len(), self.omega)));
        }
        FiniteDistribution::with_boundary(p)
    }
}

fn check_theta(fam: &impl ParametricFamily, theta: &[f64]) -> Result<()> {
    if theta.len() != fam.param_dim() {
        return Err(shape(format!("{} parameters for a {}-parameter family", theta.len(), fam.param_dim())));
    }
    Ok(())
}

/// Scores of the family at `theta`, exact when available, otherwise from
/// central differences of the probabilities.
pub fn family_scores(fam: &impl ParametricFamily, theta: &[f64]) -> Result<(FiniteDistribution, Vec<Vec<f64>>)> {
    check_theta(fam, theta)?;
    let rho = fam.distribution(theta)?;
    if !rho.is_faithful() {
        return Err(Error::NotFaithful { min: rho.min_prob() });
    }
    if let Some(s) = fam.scores(theta) {
        return Ok((rho, s?));
    }
    let mut scores = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        let h = fd_step(theta[i]);
        let mut plus = theta.to_vec();
        let mut minus = theta.to_vec();
        plus[i] += h;
        minus[i] -= h;
        let leak = |e: Error| match e {
            Error::InvalidDistribution(msg) => Error::InvalidFamily(format!(
                "family leaves the simplex near the base point along parameter {i}: {msg}"
            )),
            other => other,
        };
        let rp = fam.distribution(&plus).map_err(leak)?;
        let rm = fam.distribution(&minus).map_err(leak)?;
        let column: Vec<f64> = rp.probs().iter().zip(rm.probs()).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let total: f64 = column.iter().sum();
        if total.abs() > CONSERVATION_TOL {
            return Err(Error::InvalidFamily(format!(
                "derivative along parameter {i} does not conserve probability (sum {total:e})"
            )));
        }
        scores.push(column.iter().zip(rho.probs()).map(|(d, p)| d / p).collect());
    }
    Ok((rho, scores))
}

fn gram(rho: &FiniteDistribution, a: &[Vec<f64>], b: &[Vec<f64>]) -> Matrix {
    Matrix::from_fn(a.len(), b.len(), |i, j| {
        rho.probs().iter().zip(&a[i]).zip(&b[j]).map(|((p, x), y)| p * x * y).sum()
    })
}

/// `G_ij = Σ_ω ρ_θ ∂_i log ρ_θ ∂_j log ρ_θ`.
pub fn fisher_information_matrix(fam: &impl ParametricFamily, theta: &[f64]) -> Result<Matrix> {
    let (rho, scores) = family_scores(fam, theta)?;
    Ok(gram(&rho, &scores, &scores).symmetrized())
}

/// A set of estimator functions over the sample space.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSet {
    functions: Vec<Vec<f64>>,
}

impl EstimatorSet {
    pub fn new(functions: Vec<Vec<f64>>) -> Result<Self> {
        let len = functions.first().map_or(0, Vec::len);
        if functions.is_empty() || functions.iter().any(|f| f.len() != len) {
            return Err(shape("estimators must be nonempty and of equal length"));
        }
        Ok(Self { functions })
    }

    pub fn functions(&self) -> &[Vec<f64>] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }
}

fn check_estimators(fam: &impl ParametricFamily, est: &EstimatorSet) -> Result<()> {
    if est.len() != fam.param_dim() {
        return Err(shape(format!("{} estimators for {} parameters", est.len(), fam.param_dim())));
    }
    if est.functions[0].len() != fam.omega_size() {
        return Err(shape("estimators do not live on the family's sample space"));
    }
    Ok(())
}

/// `E_θ[f_i] − θ_i` per component.
pub fn check_unbiased(fam: &impl ParametricFamily, theta: &[f64], est: &EstimatorSet) -> Result<Vec<f64>> {
    check_theta(fam, theta)?;
    check_estimators(fam, est)?;
    let rho = fam.distribution(theta)?;
    est.functions.iter().zip(theta).map(|(f, t)| Ok(rho.expectation(f)? - t)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CramerRaoReport {
    /// Covariance of the estimators under `ρ_θ`.
    pub covariance: Matrix,
    /// Fisher information matrix.
    pub fisher: Matrix,
    /// `V − G⁻¹`.
    pub gap: Matrix,
    pub min_gap_eig: f64,
    /// `G⁻¹/V`, reported for a single parameter only.
    pub efficiency: Option<f64>,
    pub bias: Vec<f64>,
}

/// Checks local unbiasedness (`E_θ[f] = θ` and `∂E_θ[f]/∂θ = I`), then
/// compares the estimator covariance with the inverse Fisher matrix.
pub fn cramer_rao_report(fam: &impl ParametricFamily, theta: &[f64], est: &EstimatorSet) -> Result<CramerRaoReport> {
    let bias = check_unbiased(fam, theta, est)?;
    if bias.iter().any(|b| b.abs() > UNBIASED_TOL) {
        return Err(Error::BiasedEstimator { residual: bias });
    }
    let (rho, scores) = family_scores(fam, theta)?;
    let n = theta.len();
    let centred: Vec<Vec<f64>> = est
        .functions
        .iter()
        .map(|f| {
            let m = dot(f, rho.probs());
            f.iter().map(|x| x - m).collect()
        })
        .collect();
    // ∂E[f_i]/∂θ_j = E[f_i s_j]
    let jac = gram(&rho, &centred, &scores);
    let jac_dev: Vec<f64> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| jac[(i, j)] - if i == j { 1.0 } else { 0.0 })
        .collect();
    if jac_dev.iter().any(|d| d.abs() > UNBIASED_TOL) {
        return Err(Error::BiasedEstimator { residual: jac_dev });
    }
    let covariance = gram(&rho, &centred, &centred).symmetrized();
    let fisher = gram(&rho, &scores, &scores).symmetrized();
    let ginv = fisher.spd_inverse()?;
    let gap = covariance.sub(&ginv).symmetrized();
    let min_gap_eig = gap.symmetric_eigenvalues()?[0];
    let efficiency = (n == 1).then(|| ginv[(0, 0)] / covariance[(0, 0)]);
    Ok(CramerRaoReport { covariance, fisher, gap, min_gap_eig, efficiency, bias })
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Convergence threshold on `‖η − target‖_∞`.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial canonical coordinates (zero when `None`).
    pub start: Option<Vec<f64>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 200, start: None }
    }
}

#[derive(Debug, Clone)]
pub struct MaxEntFit {
    pub point: CanonicalPoint,
    pub iterations: usize,
    pub residual: f64,
    /// Dual objective `Ψ(ξ) + ξ·m` after each accepted step (non-increasing up
    /// to rounding).
    pub objective_history: Vec<f64>,
}

struct ClassicalDual<'a>(&'a ExponentialFamily);

impl newton::Dual for ClassicalDual<'_> {
    fn eval(&self, xi: &[f64]) -> Result<newton::DualEval> {
        let pt = self.0.point(xi)?;
        Ok(newton::DualEval {
            psi: pt.massieu(),
            means: pt.mixture_coords(),
            hessian: pt.covariance(),
            min_weight: pt.probs().iter().copied().fold(f64::INFINITY, f64::min),
        })
    }
    fn psi(&self, xi: &[f64]) -> Result<f64> {
        self.0.massieu(xi)
    }
}

/// Maximum-entropy distribution in `family` with the given feature means.
pub fn maxent_fit(family: &ExponentialFamily, target_means: &[f64]) -> Result<CanonicalPoint> {
    Ok(maxent_fit_with(family, target_means, &FitOptions::default())?.point)
}

pub fn maxent_fit_with(family: &ExponentialFamily, target_means: &[f64], options: &FitOptions) -> Result<MaxEntFit> {
    if target_means.len() != family.dim() {
        return Err(shape(format!("{} target means for {} features", target_means.len(), family.dim())));
    }
    if target_means.iter().any(|m| !m.is_finite()) {
        return Err(Error::InvalidArgument("non-finite target mean".into()));
    }
    let start = match &options.start {
        Some(s) if s.len() == family.dim() => s.clone(),
        Some(_) => return Err(shape("warm start has the wrong dimension")),
        None => vec![0.0; family.dim()],
    };
    let out = newton::solve(&ClassicalDual(family), target_means, start, options.tol, options.max_iter)?;
    Ok(MaxEntFit {
        point: family.point(&out.xi)?,
        iterations: out.iterations,
        residual: out.residual,
        objective_history: out.objective_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::entropy;
    use crate::rng::{gaussian, random_probabilities, seeded};

    fn bernoulli() -> FnFamily<impl Fn(&[f64]) -> Vec<f64>> {
        FnFamily::new(1, 2, |t: &[f64]| vec![1.0 - t[0], t[0]])
    }

    #[test]
    fn bernoulli_fisher() {
        for eta in [0.5, 0.2, 0.9] {
            let g = fisher_information_matrix(&bernoulli(), &[eta]).unwrap()[(0, 0)];
            let exact = 1.0 / (eta * (1.0 - eta));
            assert!((g - exact).abs() < 1e-8 * exact);
        }
        // KL oracle: d²/dε² KL(ρ_η ‖ ρ_{η+ε}) at 0 equals G
        let eta: f64 = 0.5;
        let kl = |e: f64| (1.0 - eta) * ((1.0 - eta) / (1.0 - eta - e)).ln() + eta * (eta / (eta + e)).ln();
        let h = 1e-4;
        let fd = (kl(h) - 2.0 * kl(0.0) + kl(-h)) / (h * h);
        assert!((fd - 4.0).abs() < 1e-6);
    }

    #[test]
    fn reparametrization_scales_by_jacobian_squared() {
        let doubled = FnFamily::new(1, 2, |t: &[f64]| vec![1.0 - 2.0 * t[0], 2.0 * t[0]]);
        let g1 = fisher_information_matrix(&bernoulli(), &[0.3]).unwrap()[(0, 0)];
        let g2 = fisher_information_matrix(&doubled, &[0.15]).unwrap()[(0, 0)];
        assert!((g2 - 4.0 * g1).abs() < 1e-7 * g2);
    }

    #[test]
    fn constant_family_has_zero_information() {
        let fam = FnFamily::new(2, 3, |_t: &[f64]| vec![0.2, 0.3, 0.5]);
        let g = fisher_information_matrix(&fam, &[0.1, 0.4]).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn boundary_family_reports_min_prob() {
        let err = fisher_information_matrix(&bernoulli(), &[1.0]).unwrap_err();
        assert!(matches!(err, Error::NotFaithful { .. }));
    }

    #[test]
    fn non_conserving_family_rejected() {
        let leaky = FnFamily::new(1, 2, |t: &[f64]| {
            let s = 1.0 + t[0];
            vec![0.5 * (1.0 + t[0]) / s + 1e-3 * t[0], 0.5 / s]
        });
        assert!(matches!(fisher_information_matrix(&leaky, &[0.0]), Err(Error::InvalidFamily(_))));
    }

    #[test]
    fn unbiasedness_residuals() {
        let est = EstimatorSet::new(vec![vec![0.0, 1.0]]).unwrap();
        for eta in [0.1, 0.5, 0.77] {
            assert!(check_unbiased(&bernoulli(), &[eta], &est).unwrap()[0].abs() < 1e-15);
        }
        let shifted = EstimatorSet::new(vec![vec![0.25, 1.25]]).unwrap();
        assert!((check_unbiased(&bernoulli(), &[0.4], &shifted).unwrap()[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn mixture_coordinates_make_features_unbiased() {
        let fam = ExponentialFamily::new(vec![vec![0.0, 1.0, 2.0, 0.5], vec![1.0, -1.0, 0.0, 2.0]], None).unwrap();
        let est = EstimatorSet::new(fam.features().to_vec()).unwrap();
        let res = check_unbiased(&MixtureParametrization(fam), &[0.9, 0.4], &est).unwrap();
        assert!(res.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn bernoulli_is_efficient() {
        let est = EstimatorSet::new(vec![vec![0.0, 1.0]]).unwrap();
        let r = cramer_rao_report(&bernoulli(), &[0.3], &est).unwrap();
        assert!((r.covariance[(0, 0)] - 0.21).abs() < 1e-15);
        assert!(r.min_gap_eig.abs() < 1e-8);
        assert!((r.efficiency.unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn orthogonal_noise_opens_a_gap() {
        // ρ_η = (1−η, η/2, η/2); x = (0,1,1) is efficient, (0,1,−1) is noise
        // orthogonal to both constants and the score.
        let fam = FnFamily::new(1, 3, |t: &[f64]| vec![1.0 - t[0], t[0] / 2.0, t[0] / 2.0]);
        let eta = 0.4;
        let noisy = EstimatorSet::new(vec![vec![0.0, 2.0, 0.0]]).unwrap();
        let r = cramer_rao_report(&fam, &[eta], &noisy).unwrap();
        // exact summation: Var = 4·η/2 − η² , G⁻¹ = η(1−η)
        let exact_gap = 2.0 * eta - eta * eta - eta * (1.0 - eta);
        assert!(r.min_gap_eig > 0.0);
        assert!((r.min_gap_eig - exact_gap).abs() < 1e-8);
        assert!(r.efficiency.unwrap() < 1.0);
    }

    #[test]
    fn biased_estimators_are_rejected() {
        let est = EstimatorSet::new(vec![vec![0.1, 1.1]]).unwrap();
        assert!(matches!(cramer_rao_report(&bernoulli(), &[0.3], &est), Err(Error::BiasedEstimator { .. })));
    }

    #[test]
    fn exponential_family_saturates_bound() {
        let fam = ExponentialFamily::new(vec![vec![0.0, 1.0, 2.0, 3.0], vec![1.0, 0.0, 0.0, 1.0]], None).unwrap();
        let est = EstimatorSet::new(fam.features().to_vec()).unwrap();
        let r = cramer_rao_report(&MixtureParametrization(fam), &[1.2, 0.6], &est).unwrap();
        assert!(r.gap.frobenius_norm() <= 1e-8 * r.covariance.frobenius_norm());
        assert!(r.efficiency.is_none());
    }

    #[test]
    fn symmetric_target_gives_uniform() {
        let fam = ExponentialFamily::new(vec![vec![0.0, 1.0, 2.0]], None).unwrap();
        let pt = maxent_fit(&fam, &[1.0]).unwrap();
        assert!(pt.xi()[0].abs() < 1e-14);
        assert!(pt.probs().iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-14));
    }

    #[test]
    fn near_boundary_target_converges() {
        let fam = ExponentialFamily::new(vec![vec![0.0, 1.0, 2.0]], None).unwrap();
        let fit = maxent_fit_with(&fam, &[1.999], &FitOptions::default()).unwrap();
        assert!(fit.point.xi()[0] < -5.0);
        let mean: f64 = fit.point.probs().iter().zip(&[0.0, 1.0, 2.0]).map(|(p, f)| p * f).sum();
        assert!((mean - 1.999).abs() < 1e-10);
        assert!(fit.objective_history.windows(2).all(|w| w[1] <= w[0] + 1e-14 * w[0].abs().max(1.0)));
    }

    #[test]
    fn infeasible_targets_are_classified() {
        let fam = ExponentialFamily::new(vec![vec![0.0, 1.0, 2.0]], None).unwrap();
        for bad in [2.0, 2.5, -0.1] {
            let err = maxent_fit(&fam, &[bad]).unwrap_err();
            assert!(matches!(err, Error::Infeasible { .. }), "{bad}: {err:?}");
        }
    }

    #[test]
    fn rescaling_features_rescales_xi() {
        let mut rng = seeded(42);
        let features: Vec<Vec<f64>> = (0..2).map(|_| (0..6).map(|_| gaussian(&mut rng)).collect()).collect();
        let fam = ExponentialFamily::new(features, None).unwrap();
        let rho = random_probabilities(&mut rng, 6);
        let target = fam.feature_means(&rho).unwrap();
        let a = maxent_fit(&fam, &target).unwrap();
        let c = [3.0, -0.5];
        let scaled = fam.rescaled(&c).unwrap();
        let target_s: Vec<f64> = target.iter().zip(&c).map(|(m, c)| m * c).collect();
        let b = maxent_fit(&scaled, &target_s).unwrap();
        for j in 0..2 {
            assert!((b.xi()[j] - a.xi()[j] / c[j]).abs() < 1e-9);
        }
        for (p, q) in a.probs().iter().zip(b.probs()) {
            assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn maxent_beats_other_feasible_points() {
        let mut rng = seeded(3);
        let fam = ExponentialFamily::new(vec![vec![0.0, 1.0, 3.0, -1.0]], None).unwrap();
        let rho = random_probabilities(&mut rng, 4);
        let target = fam.feature_means(&rho).unwrap();
        let pt = maxent_fit(&fam, &target).unwrap();
        assert!(pt.entropy() >= entropy(&FiniteDistribution::new(rho).unwrap()) - 1e-12);
    }
}
