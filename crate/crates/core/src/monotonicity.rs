//! Stochastic maps and numerical witnesses of metric contraction.
//!
//! Classical maps are row-stochastic matrices; quantum maps are Kraus sets
//! with `Σ A_k† A_k = I`, acting on states by `ρ ↦ Σ A_k ρ A_k†` and on
//! observables by `X ↦ Σ A_k† X A_k`. Tangents are pushed in the mixture
//! picture, where the push is the same linear map as for states.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // used only when std is absent from the build graph
use num_traits::Float;
use rand::Rng;

use crate::classical::{fisher_metric, ClassicalTangent, FiniteDistribution, TangentRep};
use crate::error::{shape, Error, Result};
use crate::estimation::{fisher_information_matrix, ParametricFamily};
use crate::linalg::{CMatrix, Matrix};
use crate::quantum::{
    log_derivatives, metric_on_mixture, DensityMatrix, QuantumInfoKind, QuantumMetric, QuantumTangent,
    QuantumTangentRep, StatePath,
};
use crate::rng::{
    derive_seed, gaussian, random_density_matrix, random_hermitian, random_isometry, random_probabilities,
    random_simplex_point, seeded,
};
use crate::spectral::{kernel_apply, HermitianMatrix, LogarithmicMean};

/// Row-sum tolerance of a stochastic matrix.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Tolerance on `Σ A_k† A_k = I`.
pub const UNITALITY_TOL: f64 = 1e-10;
/// Largest ratio accepted as a contraction.
pub const CONTRACTION_TOL: f64 = 1e-10;

/// `|Ω| × |Ω'|` nonnegative matrix with unit row sums.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalStochasticMap {
    matrix: Matrix,
}

impl ClassicalStochasticMap {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if matrix.rows() == 0 || matrix.cols() == 0 {
            return Err(Error::InvalidMap("empty stochastic matrix".into()));
        }
        for i in 0..matrix.rows() {
            let row = matrix.row(i);
            if row.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                return Err(Error::InvalidMap(format!("row {i} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidMap(format!("row {i} sums to {s}")));
            }
        }
        Ok(Self { matrix })
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: Matrix::identity(n) }
    }

    /// Sends `ω` to `perm[ω]`.
    pub fn permutation(perm: &[usize]) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || seen[p] {
                return Err(Error::InvalidMap("not a permutation".into()));
            }
            seen[p] = true;
        }
        Ok(Self { matrix: Matrix::from_fn(n, n, |i, j| if perm[i] == j { 1.0 } else { 0.0 }) })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn input_size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn output_size(&self) -> usize {
        self.matrix.cols()
    }

    /// `(S*v)_j = Σ_i v_i S_ij` for any signed measure `v`.
    pub fn push_measure(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.input_size() {
            return Err(shape(format!("measure on {} points for a map from {}", v.len(), self.input_size())));
        }
        Ok((0..self.output_size()).map(|j| (0..v.len()).map(|i| v[i] * self.matrix[(i, j)]).sum()).collect())
    }

    /// Pushed distribution; zero cells are allowed.
    pub fn push_state(&self, rho: &FiniteDistribution) -> Result<FiniteDistribution> {
        let p = self.push_measure(rho.probs())?;
        let s: f64 = p.iter().sum();
        FiniteDistribution::with_boundary(p.into_iter().map(|x| x / s).collect())
    }

    /// `(Sf)_i = Σ_j S_ij f_j`.
    pub fn push_observable(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.matrix.matvec(f)
    }

    /// `other ∘ self` on states.
    pub fn then(&self, other: &Self) -> Result<Self> {
        Self::new(self.matrix.matmul(&other.matrix)?)
    }
}

/// Kraus operators `A_k : ℂ^{d_in} → ℂ^{d_out}` with `Σ A_k† A_k = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumCPUnitalMap {
    kraus: Vec<CMatrix>,
}

impl QuantumCPUnitalMap {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::InvalidMap("no Kraus operators".into()))?;
        let (rows, cols) = (first.rows(), first.cols());
        if kraus.iter().any(|a| a.rows() != rows || a.cols() != cols) {
            return Err(Error::InvalidMap("Kraus operators differ in shape".into()));
        }
        let mut sum = CMatrix::zeros(cols, cols);
        for a in &kraus {
            sum = sum.add(&a.adjoint().mul(a));
        }
        let residual = sum.sub(&CMatrix::identity(cols)).max_abs();
        if !(residual <= UNITALITY_TOL) {
            return Err(Error::InvalidMap(format!("Σ A†A deviates from the identity by {residual:e}")));
        }
        Ok(Self { kraus })
    }

    pub fn unitary(u: CMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    /// Qubit depolarizing channel with Kraus set
    /// `{√(1−q) I, √(q/3) σ_x, √(q/3) σ_y, √(q/3) σ_z}`.
    pub fn depolarizing(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidArgument(format!("depolarizing strength {q} outside [0, 1]")));
        }
        let a = (q / 3.0).sqrt();
        Self::new(vec![
            CMatrix::identity(2).scale((1.0 - q).sqrt()),
            HermitianMatrix::pauli_x().into_cmatrix().scale(a),
            HermitianMatrix::pauli_y().into_cmatrix().scale(a),
            HermitianMatrix::pauli_z().into_cmatrix().scale(a),
        ])
    }

    /// Embeds a classical stochastic map: `A_{ij} = √S_ij |j⟩⟨i|`.
    pub fn from_classical(map: &ClassicalStochasticMap) -> Result<Self> {
        let (n, m) = (map.input_size(), map.output_size());
        let mut kraus = Vec::new();
        for i in 0..n {
            for j in 0..m {
                let s = map.matrix()[(i, j)];
                if s > 0.0 {
                    let mut a = CMatrix::zeros(m, n);
                    a[(j, i)] = Complex64::new(s.sqrt(), 0.0);
                    kraus.push(a);
                }
            }
        }
        Self::new(kraus)
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn input_dim(&self) -> usize {
        self.kraus[0].cols()
    }

    pub fn output_dim(&self) -> usize {
        self.kraus[0].rows()
    }

    /// `Σ A_k X A_k†` for any Hermitian `X` on the input space.
    pub fn push_operator(&self, x: &HermitianMatrix) -> Result<HermitianMatrix> {
        if x.dim() != self.input_dim() {
            return Err(shape(format!("operator of dimension {} for a map from {}", x.dim(), self.input_dim())));
        }
        let mut out = HermitianMatrix::zeros(self.output_dim());
        for a in &self.kraus {
            out = out.add(&x.conjugate_by(a)?);
        }
        Ok(out)
    }

    /// Pushed state; singular results are allowed.
    pub fn push_state(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let m = self.push_operator(rho.matrix())?;
        let t = m.trace();
        DensityMatrix::with_boundary(m.scale(1.0 / t))
    }

    /// `Σ A_k† X A_k` for an observable on the output space.
    pub fn push_observable(&self, x: &HermitianMatrix) -> Result<HermitianMatrix> {
        if x.dim() != self.output_dim() {
            return Err(shape(format!("observable of dimension {} for a map into {}", x.dim(), self.output_dim())));
        }
        let mut out = HermitianMatrix::zeros(self.input_dim());
        for a in &self.kraus {
            out = out.add(&x.conjugate_by(&a.adjoint())?);
        }
        Ok(out)
    }

    /// `other ∘ self` on states.
    pub fn then(&self, other: &Self) -> Result<Self> {
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for b in &other.kraus {
            for a in &self.kraus {
                kraus.push(b.matmul(a)?);
            }
        }
        Self::new(kraus)
    }
}

/// `g_{S*ρ}(S*v, S*v) / g_ρ(v, v)` for the Fisher metric, with `v` pushed
/// as a mixture tangent.
pub fn audit_fisher_contraction(
    map: &ClassicalStochasticMap,
    rho: &FiniteDistribution,
    tangent: &ClassicalTangent,
) -> Result<f64> {
    let v = tangent.to_mixture(rho)?;
    let before = fisher_metric(rho, &v, &v)?;
    if !(before > 0.0) {
        return Err(Error::ZeroTangent);
    }
    let pushed_rho = map.push_state(rho)?;
    if !pushed_rho.is_faithful() {
        return Err(Error::NotFaithful { min: pushed_rho.min_prob() });
    }
    let pushed_v = ClassicalTangent::mixture(map.push_measure(v.vec())?)?;
    Ok(fisher_metric(&pushed_rho, &pushed_v, &pushed_v)? / before)
}

/// Mixture form of a quantum tangent under the metric's own Riesz map:
/// the Jordan product for GNS, the logarithmic-mean kernel for BKM.
fn mixture_for(rho: &DensityMatrix, x: &QuantumTangent, which: QuantumMetric) -> Result<HermitianMatrix> {
    match x.rep() {
        QuantumTangentRep::Mixture => Ok(x.matrix().clone()),
        QuantumTangentRep::Score => match which {
            QuantumMetric::Gns => Ok(rho.matrix().jordan(x.matrix())),
            QuantumMetric::Bkm => kernel_apply(rho.spectral(), x.matrix(), &LogarithmicMean),
        },
    }
}

/// `g_{F*ρ}(F*D, F*D) / g_ρ(D, D)` for the GNS or BKM metric.
pub fn audit_quantum_contraction(
    map: &QuantumCPUnitalMap,
    rho: &DensityMatrix,
    tangent: &QuantumTangent,
    which: QuantumMetric,
) -> Result<f64> {
    let d = mixture_for(rho, tangent, which)?;
    let before = metric_on_mixture(rho, &d, which)?;
    if !(before > 0.0) {
        return Err(Error::ZeroTangent);
    }
    let pushed_rho = map.push_state(rho)?;
    pushed_rho.require_faithful()?;
    let pushed_d = map.push_operator(&d)?;
    Ok(metric_on_mixture(&pushed_rho, &pushed_d, which)? / before)
}

/// A classical family composed with a stochastic map.
pub struct PushedFamily<'a, F> {
    pub map: &'a ClassicalStochasticMap,
    pub family: &'a F,
}

impl<F: ParametricFamily> ParametricFamily for PushedFamily<'_, F> {
    fn param_dim(&self) -> usize {
        self.family.param_dim()
    }
    fn omega_size(&self) -> usize {
        self.map.output_size()
    }
    fn distribution(&self, theta: &[f64]) -> Result<FiniteDistribution> {
        self.map.push_state(&self.family.distribution(theta)?)
    }
    fn scores(&self, theta: &[f64]) -> Option<Result<Vec<Vec<f64>>>> {
        // exact: pushed score = S*(ρ s) / S*ρ
        let scores = self.family.scores(theta)?;
        Some((|| {
            let rho = self.family.distribution(theta)?;
            let pushed = self.map.push_measure(rho.probs())?;
            scores?
                .iter()
                .map(|s| {
                    let v: Vec<f64> = s.iter().zip(rho.probs()).map(|(x, p)| x * p).collect();
                    Ok(self.map.push_measure(&v)?.iter().zip(&pushed).map(|(a, b)| a / b).collect())
                })
                .collect()
        })())
    }
}

/// Largest generalized eigenvalue of `(G_pushed, G)`; equals
/// `G_pushed/G` for one parameter. Zero when the pushed family carries no
/// information.
pub fn audit_family_info(map: &ClassicalStochasticMap, family: &impl ParametricFamily, theta: &[f64]) -> Result<f64> {
    let g = fisher_information_matrix(family, theta)?;
    let pushed = PushedFamily { map, family };
    let gp = match fisher_information_matrix(&pushed, theta) {
        Ok(g) => g,
        Err(Error::NotFaithful { .. }) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    generalized_max_eig(&gp, &g)
}

fn generalized_max_eig(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let chol = b.cholesky()?;
    let l = chol.factor();
    let n = l.rows();
    // C = L⁻¹ A L⁻ᵀ
    let mut tmp = Matrix::zeros(n, n);
    for j in 0..n {
        let col: Vec<f64> = (0..n).map(|i| a[(i, j)]).collect();
        let x = chol.solve_lower(&col);
        for i in 0..n {
            tmp[(i, j)] = x[i];
        }
    }
    let mut c = Matrix::zeros(n, n);
    for i in 0..n {
        let row: Vec<f64> = tmp.row(i).to_vec();
        let x = chol.solve_lower(&row);
        for j in 0..n {
            c[(i, j)] = x[j];
        }
    }
    let eig = c.symmetrized().symmetric_eigenvalues()?;
    Ok(eig[n - 1].max(0.0))
}

/// A quantum path composed with a channel.
pub struct PushedPath<'a, P> {
    pub map: &'a QuantumCPUnitalMap,
    pub path: &'a P,
}

impl<P: StatePath> StatePath for PushedPath<'_, P> {
    fn state(&self, t: f64) -> Result<DensityMatrix> {
        self.map.push_state(&self.path.state(t)?)
    }
    fn derivative(&self, t: f64) -> Option<Result<HermitianMatrix>> {
        let d = self.path.derivative(t)?;
        Some(d.and_then(|d| self.map.push_operator(&d)))
    }
}

/// `F_pushed / F` for the chosen quantum information along a path; zero when
/// the pushed path carries no information.
pub fn audit_quantum_family_info(
    map: &QuantumCPUnitalMap,
    path: &impl StatePath,
    t0: f64,
    kind: QuantumInfoKind,
) -> Result<f64> {
    let before = log_derivatives(path, t0)?.information(kind)?;
    if !(before > 0.0) {
        return Err(Error::ZeroTangent);
    }
    let after = log_derivatives(&PushedPath { map, path }, t0)?.information(kind)?;
    Ok(after.max(0.0) / before)
}

/// Row-stochastic matrix with rows drawn uniformly from the simplex.
pub fn random_stochastic_map(rows: usize, cols: usize, seed: u64) -> Result<ClassicalStochasticMap> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument("map dimensions must be positive".into()));
    }
    let mut rng = seeded(seed);
    let data: Vec<Vec<f64>> = (0..rows).map(|_| random_simplex_point(&mut rng, cols)).collect();
    ClassicalStochasticMap::new(Matrix::from_rows(&data)?)
}

/// Kraus set cut from a random isometry `ℂ^{d_in} → ℂ^{k·d_out}`.
pub fn random_unital_cp_map(
    dim_in: usize,
    dim_out: usize,
    kraus_count: usize,
    seed: u64,
) -> Result<QuantumCPUnitalMap> {
    if dim_in == 0 || dim_out == 0 || kraus_count == 0 || kraus_count * dim_out < dim_in {
        return Err(Error::InvalidArgument(format!(
            "cannot build {kraus_count} Kraus operators from dimension {dim_in} to {dim_out}"
        )));
    }
    let mut rng = seeded(seed);
    let v = random_isometry(&mut rng, kraus_count * dim_out, dim_in);
    let kraus = (0..kraus_count).map(|k| CMatrix::from_fn(dim_out, dim_in, |i, j| v[(k * dim_out + i, j)])).collect();
    QuantumCPUnitalMap::new(kraus)
}

/// The metrics audited by [`contraction_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContractionMetric {
    Fisher,
    Gns,
    Bkm,
}

impl ContractionMetric {
    pub fn name(self) -> &'static str {
        match self {
            ContractionMetric::Fisher => "fisher",
            ContractionMetric::Gns => "gns",
            ContractionMetric::Bkm => "bkm",
        }
    }
}

/// Number of equal-width histogram bins over `[0, 1]`.
pub const HISTOGRAM_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub metric: ContractionMetric,
    pub trials: usize,
    /// Trials whose pushed state fell below the faithfulness floor.
    pub skipped: usize,
    /// `max(ratio − 1)` over the evaluated trials.
    pub worst_violation: f64,
    pub ratios: Vec<f64>,
    /// Counts of ratios in `[k/10, (k+1)/10)`; the last bin also holds
    /// ratios at or above one.
    pub ratios_histogram: Vec<u64>,
}

impl ContractionReport {
    pub fn from_ratios(metric: ContractionMetric, trials: usize, skipped: usize, ratios: Vec<f64>) -> Self {
        let mut hist = vec![0u64; HISTOGRAM_BINS];
        for r in &ratios {
            let bin = ((r * HISTOGRAM_BINS as f64).floor().max(0.0) as usize).min(HISTOGRAM_BINS - 1);
            hist[bin] += 1;
        }
        let worst_violation = ratios.iter().fold(f64::NEG_INFINITY, |m, r| m.max(r - 1.0));
        Self { metric, trials, skipped, worst_violation, ratios, ratios_histogram: hist }
    }

    /// True when no ratio exceeds `1 + CONTRACTION_TOL`.
    pub fn is_contractive(&self) -> bool {
        self.is_contractive_within(CONTRACTION_TOL)
    }

    pub fn is_contractive_within(&self, tol: f64) -> bool {
        self.ratios.iter().all(|r| *r <= 1.0 + tol)
    }

    /// Number of ratios above `1 + tol`.
    pub fn violations(&self, tol: f64) -> usize {
        self.ratios.iter().filter(|r| **r > 1.0 + tol).count()
    }
}

/// One random trial: a faithful state of dimension `dim`, a random map into
/// a space of dimension `2..=dim+1`, and a random tangent.
fn trial(metric: ContractionMetric, dim: usize, seed: u64) -> Result<f64> {
    let mut rng = seeded(seed);
    let out = rng.gen_range(2..=dim + 1);
    let map_seed = rng.gen::<u64>();
    match metric {
        ContractionMetric::Fisher => {
            let rho = FiniteDistribution::new(random_probabilities(&mut rng, dim))?;
            let raw: Vec<f64> = (0..dim).map(|_| gaussian(&mut rng)).collect();
            let x = ClassicalTangent::centred_score(&rho, &raw)?;
            audit_fisher_contraction(&random_stochastic_map(dim, out, map_seed)?, &rho, &x)
        }
        ContractionMetric::Gns | ContractionMetric::Bkm => {
            let which = if metric == ContractionMetric::Gns { QuantumMetric::Gns } else { QuantumMetric::Bkm };
            let rho = DensityMatrix::new(random_density_matrix(&mut rng, dim))?;
            let x = QuantumTangent::centred_score(&rho, &random_hermitian(&mut rng, dim, 1.0))?;
            // k * dim >= out keeps the pushed state full rank generically
            let min_k = dim.div_ceil(out).max(out.div_ceil(dim));
            let k = rng.gen_range(min_k..=min_k + 3);
            audit_quantum_contraction(&random_unital_cp_map(dim, out, k, map_seed)?, &rho, &x, which)
        }
    }
}

/// `trials` independent seeded audits; trial `i` uses
/// `derive_seed(seed, i)`.
pub fn contraction_sweep(metric: ContractionMetric, dim: usize, trials: usize, seed: u64) -> Result<ContractionReport> {
    if dim < 2 {
        return Err(Error::InvalidArgument("audit dimension must be at least 2".into()));
    }
    let mut ratios = Vec::with_capacity(trials);
    let mut skipped = 0;
    for i in 0..trials {
        match trial(metric, dim, derive_seed(seed, i as u64)) {
            Ok(r) => ratios.push(r),
            Err(Error::NotFaithful { .. }) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(ContractionReport::from_ratios(metric, trials, skipped, ratios))
}

/// Classical tangent of the requested picture, for callers building audits
/// by hand.
pub fn classical_tangent(rho: &FiniteDistribution, raw: &[f64], rep: TangentRep) -> Result<ClassicalTangent> {
    let x = ClassicalTangent::centred_score(rho, raw)?;
    match rep {
        TangentRep::Score => Ok(x),
        TangentRep::Mixture => x.to_mixture(rho),
    }
}
