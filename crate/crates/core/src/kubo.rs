//! Kubo-Mori perturbation series of the Massieu function in finite
//! dimension.
//!
//! In the eigenbasis of `ρ₀ = Σ p_i |i⟩⟨i|` the simplex integral of
//! `Π p_{i_k}^{α_k}` is the divided difference of `exp` at the nodes
//! `ln p_{i_1}, …, ln p_{i_n}`, so every n-point function is a finite sum.
//! The Duhamel expansion reads
//! `Z_{H₀+tV} / Z_{H₀} = 1 + Σ_{n≥1} (−t)^n K_n(V, …, V) / n`,
//! and the series of `log Z` follows from the cumulant recursion.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // used only when std is absent from the build graph
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Matrix};
use crate::quantum::{gibbs_state, DensityMatrix};
use crate::spectral::{kernel_pairing, HermitianMatrix, LogarithmicMean};

/// Largest supported n-point order; the sum has `dim^n` index tuples.
pub const MAX_KUBO_ORDER: usize = 8;
/// Default truncation order of the series.
pub const DEFAULT_SERIES_ORDER: usize = 4;
/// Hard cap on the truncation order.
pub const MAX_SERIES_ORDER: usize = 6;
/// How the terms are assembled, for report metadata.
pub const SERIES_CONVENTION: &str =
    "Z_V/Z_0 = 1 + sum_n (-1)^n K_n(V,...,V)/n with K_n the simplex integral of Tr[rho0^a1 V ... rho0^an V]; \
     terms are the cumulants of log(Z_V/Z_0), term 0 is log Z_0";
/// Base step of the Richardson differences, divided by `‖V‖_F`.
pub const DERIVATIVE_STEP: f64 = 1e-2;

/// `exp[x_1, …, x_m]`, the divided difference of the exponential.
///
/// Read off the first row of `exp(J)` with `J` upper bidiagonal, diagonal
/// `x` and unit superdiagonal, which treats coincident nodes exactly.
pub fn exp_divided_difference(nodes: &[f64]) -> Result<f64> {
    let m = nodes.len();
    if m == 0 {
        return Err(Error::InvalidArgument("divided difference of no nodes".into()));
    }
    if nodes.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite divided-difference node".into()));
    }
    if m == 1 {
        return Ok(nodes[0].exp());
    }
    let c = nodes.iter().sum::<f64>() / m as f64;
    let j = Matrix::from_fn(m, m, |i, k| {
        if i == k {
            nodes[i] - c
        } else if k == i + 1 {
            1.0
        } else {
            0.0
        }
    });
    Ok(c.exp() * j.expm()?[(0, m - 1)])
}

struct Walk<'a> {
    logs: &'a [f64],
    slots: &'a [CMatrix],
    first: usize,
    counts: Vec<u8>,
    memo: BTreeMap<Vec<u8>, f64>,
    total: Complex64,
}

impl Walk<'_> {
    fn divided_difference(&mut self) -> Result<f64> {
        if let Some(v) = self.memo.get(&self.counts) {
            return Ok(*v);
        }
        let nodes: Vec<f64> =
            self.counts.iter().zip(self.logs).flat_map(|(c, l)| core::iter::repeat_n(*l, *c as usize)).collect();
        let v = exp_divided_difference(&nodes)?;
        self.memo.insert(self.counts.clone(), v);
        Ok(v)
    }

    fn visit(&mut self, depth: usize, last: usize, prod: Complex64) -> Result<()> {
        let n = self.slots.len();
        if depth == n {
            let w = prod * self.slots[n - 1][(last, self.first)];
            if w != Complex64::new(0.0, 0.0) {
                let dd = self.divided_difference()?;
                self.total += w * dd;
            }
            return Ok(());
        }
        for i in 0..self.logs.len() {
            let p = prod * self.slots[depth - 1][(last, i)];
            if p == Complex64::new(0.0, 0.0) {
                continue;
            }
            self.counts[i] += 1;
            self.visit(depth + 1, i, p)?;
            self.counts[i] -= 1;
        }
        Ok(())
    }
}

/// `∫_Δ Tr[ρ₀^{α_1} V_1 ⋯ ρ₀^{α_n} V_n] dα` over `{α_i ≥ 0, Σ α_i = 1}`
/// with Lebesgue measure on the first `n − 1` coordinates.
///
/// Returns the real part; it is the whole value when all slots are equal
/// or `n ≤ 2`. Requires a faithful `ρ₀`.
pub fn kubo_n_point(rho0: &DensityMatrix, vs: &[HermitianMatrix]) -> Result<f64> {
    let n = vs.len();
    if n == 0 {
        return Err(Error::InvalidArgument("Kubo function needs at least one slot".into()));
    }
    if n > MAX_KUBO_ORDER {
        return Err(Error::OrderTooLarge { n, max: MAX_KUBO_ORDER });
    }
    rho0.require_faithful()?;
    for v in vs {
        rho0.check_operand(v)?;
    }
    let spec = rho0.spectral();
    let logs: Vec<f64> = spec.eigenvalues().iter().map(|p| p.ln()).collect();
    let slots: Vec<CMatrix> = vs.iter().map(|v| spec.to_eigenbasis(v.as_cmatrix())).collect();
    let d = logs.len();
    let mut walk = Walk {
        logs: &logs,
        slots: &slots,
        first: 0,
        counts: vec![0; d],
        memo: BTreeMap::new(),
        total: Complex64::new(0.0, 0.0),
    };
    for i in 0..d {
        walk.first = i;
        walk.counts[i] += 1;
        walk.visit(1, i, Complex64::new(1.0, 0.0))?;
        walk.counts[i] -= 1;
    }
    Ok(walk.total.re)
}

/// `H₀ + V` with a truncation order.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationProblem {
    h0: HermitianMatrix,
    v: HermitianMatrix,
    max_order: usize,
}

impl PerturbationProblem {
    /// Uses [`DEFAULT_SERIES_ORDER`].
    pub fn new(h0: HermitianMatrix, v: HermitianMatrix) -> Result<Self> {
        Self::with_order(h0, v, DEFAULT_SERIES_ORDER)
    }

    pub fn with_order(h0: HermitianMatrix, v: HermitianMatrix, max_order: usize) -> Result<Self> {
        if h0.dim() != v.dim() || h0.dim() == 0 {
            return Err(Error::Shape(alloc::format!("H0 of dimension {} and V of dimension {}", h0.dim(), v.dim())));
        }
        if max_order == 0 {
            return Err(Error::InvalidArgument("series order must be at least 1".into()));
        }
        if max_order > MAX_SERIES_ORDER {
            return Err(Error::OrderTooLarge { n: max_order, max: MAX_SERIES_ORDER });
        }
        Ok(Self { h0, v, max_order })
    }

    pub fn h0(&self) -> &HermitianMatrix {
        &self.h0
    }

    pub fn v(&self) -> &HermitianMatrix {
        &self.v
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Same problem with `V` scaled by `t`.
    pub fn scaled(&self, t: f64) -> Self {
        Self { h0: self.h0.clone(), v: self.v.scale(t), max_order: self.max_order }
    }
}

/// Truncated series against the direct trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesReport {
    /// `log Tr exp(−(H₀ + V))`.
    pub exact: f64,
    /// `terms[0] = log Z₀`; `terms[n]` is the order-n cumulant.
    pub terms: Vec<f64>,
    /// `partials[k] = Σ terms[0..=k]`.
    pub partials: Vec<f64>,
    /// `|exact − partials[k]|`.
    pub errors: Vec<f64>,
    /// Non-finite terms, or truncation errors growing with order above the
    /// rounding floor.
    pub diverged: bool,
}

pub fn expand_log_z(prob: &PerturbationProblem) -> Result<SeriesReport> {
    let (log_z0, rho0) = gibbs_state(&prob.h0)?;
    let (exact, _) = gibbs_state(&prob.h0.add(&prob.v))?;
    let n_max = prob.max_order;
    let slots = vec![prob.v.clone(); n_max];
    // a_k: coefficients of Z_V/Z_0 − 1
    let mut a = vec![0.0; n_max + 1];
    for (k, ak) in a.iter_mut().enumerate().skip(1) {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        *ak = sign * kubo_n_point(&rho0, &slots[..k])? / k as f64;
    }
    let mut c = vec![0.0; n_max + 1];
    for k in 1..=n_max {
        let mix: f64 = (1..k).map(|j| j as f64 * c[j] * a[k - j]).sum();
        c[k] = a[k] - mix / k as f64;
    }
    let mut terms = c;
    terms[0] = log_z0;
    let mut partials = Vec::with_capacity(n_max + 1);
    let mut acc = 0.0;
    for t in &terms {
        acc += t;
        partials.push(acc);
    }
    let errors: Vec<f64> = partials.iter().map(|p| (exact - p).abs()).collect();
    let floor = 1e-12 * (1.0 + exact.abs());
    let last = errors[n_max];
    let growing = last > floor && (last > errors[0] || (n_max >= 2 && last > errors[n_max - 1]));
    let diverged = !exact.is_finite() || terms.iter().any(|t| !t.is_finite()) || growing;
    Ok(SeriesReport { exact, terms, partials, errors, diverged })
}

/// Finite-difference derivatives of `t ↦ log Z_{tV}` at zero against the
/// mean and the BKM variance.
#[derive(Debug, Clone, PartialEq)]
pub struct MassieuDerivativeCheck {
    /// `|d/dt log Z + Tr[ρ₀V]|`.
    pub first: f64,
    /// `|d²/dt² log Z − bkm(V − Tr[ρ₀V])|`.
    pub second: f64,
    pub first_derivative: f64,
    pub second_derivative: f64,
    pub mean: f64,
    pub bkm_variance: f64,
}

/// Three-level Richardson extrapolation of a central difference.
fn richardson(d: impl Fn(f64) -> Result<f64>, h: f64) -> Result<f64> {
    let (a0, a1, a2) = (d(h)?, d(h / 2.0)?, d(h / 4.0)?);
    let b0 = (4.0 * a1 - a0) / 3.0;
    let b1 = (4.0 * a2 - a1) / 3.0;
    Ok((16.0 * b1 - b0) / 15.0)
}

/// The first derivative differences `log Z` itself; the second differences
/// the exact slope `−Tr[ρ_t V]`.
pub fn massieu_derivative_check(prob: &PerturbationProblem) -> Result<MassieuDerivativeCheck> {
    let (_, rho0) = gibbs_state(&prob.h0)?;
    let v = &prob.v;
    let mean = rho0.expectation(v)?;
    let bkm_variance = kernel_pairing(rho0.spectral(), &v.shift(-mean), &v.shift(-mean), &LogarithmicMean)?;
    let norm = v.frobenius_norm();
    if norm == 0.0 {
        return Ok(MassieuDerivativeCheck {
            first: 0.0,
            second: 0.0,
            first_derivative: 0.0,
            second_derivative: 0.0,
            mean,
            bkm_variance,
        });
    }
    let h = DERIVATIVE_STEP / norm;
    let log_z = |t: f64| gibbs_state(&prob.h0.add(&v.scale(t))).map(|(l, _)| l);
    let slope = |t: f64| -> Result<f64> {
        let (_, rho) = gibbs_state(&prob.h0.add(&v.scale(t)))?;
        Ok(-rho.expectation(v)?)
    };
    let first_derivative = richardson(|s| Ok((log_z(s)? - log_z(-s)?) / (2.0 * s)), h)?;
    let second_derivative = richardson(|s| Ok((slope(s)? - slope(-s)?) / (2.0 * s)), h)?;
    Ok(MassieuDerivativeCheck {
        first: (first_derivative + mean).abs(),
        second: (second_derivative - bkm_variance).abs(),
        first_derivative,
        second_derivative,
        mean,
        bkm_variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{bkm_metric, QuantumTangent};
    use crate::rng::{random_density_matrix, random_hermitian, seeded};
    use rand::Rng;

    fn recursive_dd(x: &[f64]) -> f64 {
        if x.len() == 1 {
            return x[0].exp();
        }
        let n = x.len() - 1;
        (recursive_dd(&x[1..]) - recursive_dd(&x[..n])) / (x[n] - x[0])
    }

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn divided_differences_of_exp() {
        assert_eq!(exp_divided_difference(&[0.3]).unwrap(), 0.3f64.exp());
        let two = exp_divided_difference(&[-1.0, 0.5]).unwrap();
        assert!((two - (0.5f64.exp() - (-1.0f64).exp()) / 1.5).abs() < 1e-15);
        let nodes = [-2.0, -0.7, 0.1, 0.9];
        assert!((exp_divided_difference(&nodes).unwrap() - recursive_dd(&nodes)).abs() < 1e-13);
        for k in 1..=8 {
            let dd = exp_divided_difference(&vec![-0.4; k]).unwrap();
            assert!((dd - (-0.4f64).exp() / factorial(k - 1)).abs() < 1e-15);
        }
        // continuity across a near-confluent pair
        let a = exp_divided_difference(&[-1.0, -1.0 + 1e-9, 0.2]).unwrap();
        let b = exp_divided_difference(&[-1.0, -1.0, 0.2]).unwrap();
        assert!((a - b).abs() < 1e-9);
        assert!(exp_divided_difference(&[]).is_err());
    }

    #[test]
    fn one_point_is_the_mean() {
        let mut rng = seeded(1);
        let rho = DensityMatrix::new(random_density_matrix(&mut rng, 3)).unwrap();
        let v = random_hermitian(&mut rng, 3, 1.0);
        assert!((kubo_n_point(&rho, core::slice::from_ref(&v)).unwrap() - rho.expectation(&v).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn two_point_is_bkm() {
        for seed in 0..10 {
            let mut rng = seeded(seed);
            let d = 2 + seed as usize % 4;
            let rho = DensityMatrix::new(random_density_matrix(&mut rng, d)).unwrap();
            let x = QuantumTangent::centred_score(&rho, &random_hermitian(&mut rng, d, 1.0)).unwrap();
            let k2 = kubo_n_point(&rho, &[x.matrix().clone(), x.matrix().clone()]).unwrap();
            assert!((k2 - bkm_metric(&rho, &x, &x).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn identity_slots() {
        let rho = DensityMatrix::new(random_density_matrix(&mut seeded(2), 4)).unwrap();
        let id = HermitianMatrix::identity(4);
        let k2 = kubo_n_point(&rho, &[id.clone(), id.clone()]).unwrap();
        assert!((k2 - 1.0).abs() <= 1e-14, "{:e}", k2 - 1.0);
        for n in 1..=5 {
            let k = kubo_n_point(&rho, &vec![id.clone(); n]).unwrap();
            assert!((k - 1.0 / factorial(n - 1)).abs() < 1e-14, "n = {n}");
        }
    }

    #[test]
    fn commuting_qubit_closed_form() {
        let (p, q) = (0.7f64, 0.3f64);
        let rho = DensityMatrix::diagonal(&[p, q]).unwrap();
        let (a, b) = (0.4, -1.1);
        let v = HermitianMatrix::diagonal(&[a, b]);
        // diagonal slots force i_1 = … = i_n
        let k3 = kubo_n_point(&rho, &[v.clone(), v.clone(), v.clone()]).unwrap();
        let expected = (p * a.powi(3) + q * b.powi(3)) / 2.0;
        assert!((k3 - expected).abs() < 1e-14);
        // off-diagonal slots: the pair sum is (x−y)-weighted
        let x = HermitianMatrix::pauli_x();
        let k2 = kubo_n_point(&rho, &[x.clone(), x]).unwrap();
        let lm = (p - q) / (p.ln() - q.ln());
        assert!((k2 - 2.0 * lm).abs() < 1e-14);
    }

    #[test]
    fn cyclic_and_linear() {
        let mut rng = seeded(3);
        let rho = DensityMatrix::new(random_density_matrix(&mut rng, 3)).unwrap();
        let vs: Vec<HermitianMatrix> = (0..4).map(|_| random_hermitian(&mut rng, 3, 1.0)).collect();
        let base = kubo_n_point(&rho, &vs).unwrap();
        let rotated = [vs[1].clone(), vs[2].clone(), vs[3].clone(), vs[0].clone()];
        assert!((kubo_n_point(&rho, &rotated).unwrap() - base).abs() < 1e-10);
        let w = random_hermitian(&mut rng, 3, 1.0);
        let mut mixed = vs.clone();
        mixed[2] = vs[2].scale(2.0).add(&w.scale(-0.5));
        let mut only_w = vs.clone();
        only_w[2] = w;
        let lhs = kubo_n_point(&rho, &mixed).unwrap();
        let rhs = 2.0 * base - 0.5 * kubo_n_point(&rho, &only_w).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_simplex_oracle() {
        let mut rng = seeded(4);
        let rho = DensityMatrix::new(random_density_matrix(&mut rng, 3)).unwrap();
        let vs: Vec<HermitianMatrix> = (0..3).map(|_| random_hermitian(&mut rng, 3, 1.0)).collect();
        let exact = kubo_n_point(&rho, &vs).unwrap();
        let spec = rho.spectral();
        let samples = 100_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..samples {
            let e: Vec<f64> = (0..3).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            let s: f64 = e.iter().sum();
            let mut prod = CMatrix::identity(3);
            for (k, v) in vs.iter().enumerate() {
                let alpha = e[k] / s;
                let pow: Vec<f64> = spec.eigenvalues().iter().map(|p| p.powf(alpha)).collect();
                prod = prod.mul(spec.synthesize(&pow).as_cmatrix()).mul(v.as_cmatrix());
            }
            let f = prod.trace().re;
            sum += f;
            sum_sq += f * f;
        }
        // uniform on the 2-simplex; its area in the first two coordinates is 1/2
        let mean = sum / samples as f64;
        let se = ((sum_sq / samples as f64 - mean * mean) / samples as f64).sqrt();
        assert!((mean / 2.0 - exact).abs() < 4.0 * se / 2.0, "{} vs {exact} (se {se})", mean / 2.0);
    }

    #[test]
    fn order_limits() {
        let rho = DensityMatrix::maximally_mixed(2);
        let id = HermitianMatrix::identity(2);
        assert!(matches!(kubo_n_point(&rho, &vec![id.clone(); 9]), Err(Error::OrderTooLarge { n: 9, max: 8 })));
        assert!(kubo_n_point(&rho, &[]).is_err());
        assert!(matches!(
            PerturbationProblem::with_order(id.clone(), id, 7),
            Err(Error::OrderTooLarge { n: 7, max: 6 })
        ));
    }

    fn random_problem(seed: u64, d: usize) -> PerturbationProblem {
        let mut rng = seeded(seed);
        PerturbationProblem::new(random_hermitian(&mut rng, d, 1.0), random_hermitian(&mut rng, d, 1.0)).unwrap()
    }

    #[test]
    fn trivial_perturbations() {
        let p = random_problem(5, 3);
        let zero = PerturbationProblem::new(p.h0().clone(), HermitianMatrix::zeros(3)).unwrap();
        let r = expand_log_z(&zero).unwrap();
        assert!(r.terms[1..].iter().all(|t| *t == 0.0));
        assert!(r.errors[0] < 1e-14);
        let shift = PerturbationProblem::new(p.h0().clone(), HermitianMatrix::identity(3).scale(0.3)).unwrap();
        let r = expand_log_z(&shift).unwrap();
        assert!((r.terms[1] + 0.3).abs() < 1e-12);
        assert!(r.terms[2..].iter().all(|t| t.abs() < 1e-12));
        assert!(r.errors[1] < 1e-12);
        assert!(!r.diverged);
    }

    #[test]
    fn partial_sums_invariant_and_convergence() {
        for seed in 0..5 {
            let p = random_problem(10 + seed, 4).scaled(0.05);
            let p = PerturbationProblem::with_order(p.h0().clone(), p.v().clone(), 6).unwrap();
            let r = expand_log_z(&p).unwrap();
            let mut acc = 0.0;
            for (t, s) in r.terms.iter().zip(&r.partials) {
                acc += t;
                assert_eq!(acc, *s);
            }
            for k in 1..4 {
                assert!(r.errors[k + 1] < r.errors[k], "seed {seed}: {:?}", r.errors);
            }
            assert!(r.errors[6] < 1e-10, "{:?}", r.errors);
            assert!(!r.diverged);
        }
    }

    #[test]
    fn order_three_error_is_quartic() {
        let p = random_problem(20, 3);
        let p = PerturbationProblem::with_order(p.h0().clone(), p.v().clone(), 3).unwrap();
        let ts = [0.04, 0.02, 0.01];
        let errs: Vec<f64> = ts.iter().map(|t| expand_log_z(&p.scaled(*t)).unwrap().errors[3]).collect();
        let slope = (errs[0].ln() - errs[2].ln()) / (ts[0].ln() - ts[2].ln());
        assert!((slope - 4.0).abs() < 0.2, "slope {slope}");
    }

    #[test]
    fn large_perturbation_flags_divergence() {
        let p = random_problem(21, 3).scaled(40.0);
        assert!(expand_log_z(&p).unwrap().diverged);
    }

    #[test]
    fn second_cumulant_is_bkm() {
        let p = random_problem(22, 4);
        let r = expand_log_z(&p).unwrap();
        let check = massieu_derivative_check(&p).unwrap();
        assert!((2.0 * r.terms[2] - check.bkm_variance).abs() < 1e-12);
        assert!((r.terms[1] + check.mean).abs() < 1e-12);
    }

    #[test]
    fn derivative_checks() {
        // commuting case reduces to classical cumulants
        let h0 = HermitianMatrix::diagonal(&[0.0, 0.5, 1.3]);
        let v = HermitianMatrix::diagonal(&[1.0, -0.4, 0.2]);
        let c = massieu_derivative_check(&PerturbationProblem::new(h0, v).unwrap()).unwrap();
        assert!(c.first <= 1e-10 && c.second <= 1e-10, "{c:?}");
        // at the maximally mixed state the second derivative is Tr[V²]/d
        let mut rng = seeded(23);
        let v = random_hermitian(&mut rng, 3, 1.0);
        let v = v.shift(-v.trace() / 3.0);
        let c =
            massieu_derivative_check(&PerturbationProblem::new(HermitianMatrix::zeros(3), v.clone()).unwrap()).unwrap();
        assert!((c.second_derivative - v.trace_product(&v) / 3.0).abs() < 1e-8);
        let zero = massieu_derivative_check(&PerturbationProblem::new(v, HermitianMatrix::zeros(3)).unwrap()).unwrap();
        assert_eq!((zero.first, zero.second), (0.0, 0.0));
        for seed in 0..5 {
            let c = massieu_derivative_check(&random_problem(30 + seed, 5)).unwrap();
            assert!(c.first <= 1e-6 && c.second <= 1e-6, "{c:?}");
        }
    }
}
