//! Rolling max-entropy projection: exact linear micro-steps, each followed
//! by moment-matching projection onto an exponential family of slow
//! variables.
//!
//! Entropy dominance of the projection holds for families without a base
//! density (classical) or with `H₀ = 0` (quantum); otherwise the projection
//! minimizes relative entropy to the base state instead.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::classical::{entropy, kl_divergence, ExponentialFamily, FiniteDistribution};
use crate::error::{shape, Error, Result};
use crate::estimation::{maxent_fit_with, FitOptions};
use crate::linalg::{dot, CMatrix, Matrix};
use crate::monotonicity::QuantumCPUnitalMap;
use crate::quantum::{quantum_maxent_fit_with, DensityMatrix, QuantumExponentialFamily};
use crate::spectral::{eigh, HermitianMatrix};

/// Column-sum tolerance of a generator, relative to its largest rate.
pub const GENERATOR_TOL: f64 = 1e-12;
/// Negative propagated weights above `−CLAMP_TOL` are rounding and set to 0.
pub const CLAMP_TOL: f64 = 1e-14;
/// Fit tolerance on the matched means.
pub const PROJECTION_TOL: f64 = 1e-12;
/// Recorded as run metadata.
pub const PROJECTION_KIND: &str = "moment-matching m-projection (max entropy at the measured slow means)";

/// Rates `Q` with `dρ/dt = Qρ` on column distributions: off-diagonals are
/// nonnegative jump rates `j → i`, columns sum to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovGenerator {
    rates: Matrix,
}

impl MarkovGenerator {
    pub fn new(rates: Matrix) -> Result<Self> {
        let n = rates.rows();
        if n == 0 || rates.cols() != n {
            return Err(shape(format!("generator of shape {}×{}", rates.rows(), rates.cols())));
        }
        let scale = rates.max_abs().max(1.0);
        for j in 0..n {
            let mut sum = 0.0;
            for i in 0..n {
                let q = rates[(i, j)];
                if !q.is_finite() || (i != j && q < 0.0) {
                    return Err(Error::InvalidArgument(format!("invalid rate {q} at ({i}, {j})")));
                }
                sum += q;
            }
            if sum.abs() > GENERATOR_TOL * scale {
                return Err(Error::InvalidArgument(format!("column {j} of the generator sums to {sum:e}")));
            }
        }
        Ok(Self { rates })
    }

    pub fn zero(n: usize) -> Self {
        Self { rates: Matrix::zeros(n, n) }
    }

    /// Builds `Q` from off-diagonal rates `rates[i][j]` for `j → i`; the
    /// diagonal is filled in.
    pub fn from_jump_rates(jump: &Matrix) -> Result<Self> {
        let n = jump.rows();
        let mut q = Matrix::from_fn(n, jump.cols(), |i, j| if i == j { 0.0 } else { jump[(i, j)] });
        for j in 0..q.cols().min(n) {
            let out: f64 = (0..n).filter(|i| *i != j).map(|i| q[(i, j)]).sum();
            q[(j, j)] = -out;
        }
        Self::new(q)
    }

    pub fn size(&self) -> usize {
        self.rates.rows()
    }

    pub fn rates(&self) -> &Matrix {
        &self.rates
    }

    /// Row sums also vanish, so the uniform state is stationary.
    pub fn is_doubly_stochastic(&self) -> bool {
        let scale = self.rates.max_abs().max(1.0);
        (0..self.size()).all(|i| self.rates.row(i).iter().sum::<f64>().abs() <= GENERATOR_TOL * scale)
    }

    /// `exp(t Q)`.
    pub fn propagator(&self, t: f64) -> Result<Matrix> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("propagation time {t}")));
        }
        self.rates.scale(t).expm()
    }
}

/// `ρ ← Pρ` with rounding negatives clamped; zero cells are allowed.
pub fn propagate(propagator: &Matrix, rho: &FiniteDistribution) -> Result<FiniteDistribution> {
    let mut p = propagator.matvec(rho.probs())?;
    for x in &mut p {
        if *x < 0.0 && *x > -CLAMP_TOL {
            *x = 0.0;
        }
    }
    FiniteDistribution::with_boundary(p)
}

/// One classical micro-step `ρ ← exp(dt Q) ρ`.
pub fn micro_step(rho: &FiniteDistribution, generator: &MarkovGenerator, dt: f64) -> Result<FiniteDistribution> {
    check_dt(dt)?;
    propagate(&generator.propagator(dt)?, rho)
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("time step {dt} must be positive")));
    }
    Ok(())
}

/// Per-step quantum dynamics.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumStepMap {
    /// `ρ ← e^{−iH dt} ρ e^{iH dt}`.
    Hamiltonian(HermitianMatrix),
    /// One application of the channel per step, whatever `dt` is.
    Channel(QuantumCPUnitalMap),
}

/// A step map with its per-`dt` data computed once.
#[derive(Debug, Clone)]
pub struct PreparedStep {
    map: QuantumCPUnitalMap,
}

impl QuantumStepMap {
    pub fn dim(&self) -> usize {
        match self {
            QuantumStepMap::Hamiltonian(h) => h.dim(),
            QuantumStepMap::Channel(c) => c.input_dim(),
        }
    }

    pub fn prepare(&self, dt: f64) -> Result<PreparedStep> {
        check_dt(dt)?;
        let map = match self {
            QuantumStepMap::Hamiltonian(h) => {
                let dec = eigh(h)?;
                let v = dec.eigenvectors();
                let n = h.dim();
                let phases: Vec<Complex64> =
                    dec.eigenvalues().iter().map(|l| Complex64::from_polar(1.0, -l * dt)).collect();
                let d = CMatrix::from_fn(n, n, |i, j| if i == j { phases[i] } else { Complex64::new(0.0, 0.0) });
                QuantumCPUnitalMap::unitary(v.matmul(&d)?.matmul(&v.adjoint())?)?
            }
            QuantumStepMap::Channel(c) => {
                if c.input_dim() != c.output_dim() {
                    return Err(Error::InvalidMap("step channel must preserve the dimension".into()));
                }
                c.clone()
            }
        };
        Ok(PreparedStep { map })
    }
}

impl PreparedStep {
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.map.push_state(rho)
    }
}

/// One quantum micro-step.
pub fn quantum_micro_step(rho: &DensityMatrix, step: &QuantumStepMap, dt: f64) -> Result<DensityMatrix> {
    step.prepare(dt)?.apply(rho)
}

/// One recorded instant, after projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionRecord {
    pub t: f64,
    pub xi: Vec<f64>,
    /// Slow means measured on the pre-projection state.
    pub eta: Vec<f64>,
    /// Entropy of the projected state.
    pub entropy: f64,
    /// Entropy of the state just before projection.
    pub pre_entropy: f64,
    /// Relative entropy from the pre-projection to the projected state.
    pub projection_defect: f64,
    /// `‖η(projected) − η‖_∞`.
    pub mean_residual: f64,
    /// The pre-projection state was below the faithfulness floor.
    pub boundary: bool,
}

/// Why a run stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub step: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionRun {
    pub dt: f64,
    pub steps: usize,
    pub trajectory: Vec<ProjectionRecord>,
    pub truncated: Option<Truncation>,
}

impl ProjectionRun {
    pub fn last(&self) -> &ProjectionRecord {
        self.trajectory.last().expect("a run records its initial projection")
    }

    pub fn is_complete(&self) -> bool {
        self.truncated.is_none() && self.trajectory.len() == self.steps + 1
    }
}

fn recoverable(e: &Error) -> bool {
    matches!(
        e,
        Error::Infeasible { .. } | Error::NonConvergence { .. } | Error::NotFaithful { .. } | Error::Singular(_)
    )
}

fn check_run(dt: f64, tol: f64) -> Result<FitOptions> {
    check_dt(dt)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("projection tolerance {tol}")));
    }
    Ok(FitOptions { tol, max_iter: 200, start: None })
}

/// Classical rolling projection; the initial state is projected at `t = 0`.
pub fn roll(
    initial: &FiniteDistribution,
    generator: &MarkovGenerator,
    family: &ExponentialFamily,
    dt: f64,
    steps: usize,
) -> Result<ProjectionRun> {
    roll_with_tol(initial, generator, family, dt, steps, PROJECTION_TOL)
}

pub fn roll_with_tol(
    initial: &FiniteDistribution,
    generator: &MarkovGenerator,
    family: &ExponentialFamily,
    dt: f64,
    steps: usize,
    tol: f64,
) -> Result<ProjectionRun> {
    let mut options = check_run(dt, tol)?;
    if initial.len() != generator.size() || family.omega() != generator.size() {
        return Err(shape(format!(
            "state on {} points, generator on {}, family on {}",
            initial.len(),
            generator.size(),
            family.omega()
        )));
    }
    let propagator = generator.propagator(dt)?;
    let project =
        |pre: &FiniteDistribution, t: f64, options: &FitOptions| -> Result<(ProjectionRecord, FiniteDistribution)> {
            let eta = family.feature_means(pre.probs())?;
            let fit = maxent_fit_with(family, &eta, options)?;
            let proj = fit.point.distribution()?;
            Ok((
                ProjectionRecord {
                    t,
                    xi: fit.point.xi().to_vec(),
                    mean_residual: fit.residual,
                    entropy: entropy(&proj),
                    pre_entropy: entropy(pre),
                    projection_defect: kl_divergence(pre, &proj)?,
                    boundary: !pre.is_faithful(),
                    eta,
                },
                proj,
            ))
        };
    let (first, mut state) = project(initial, 0.0, &options)?;
    options.start = Some(first.xi.clone());
    let mut run = ProjectionRun { dt, steps, trajectory: vec![first], truncated: None };
    for k in 1..=steps {
        let outcome = propagate(&propagator, &state).and_then(|pre| project(&pre, k as f64 * dt, &options));
        match outcome {
            Ok((rec, proj)) => {
                options.start = Some(rec.xi.clone());
                run.trajectory.push(rec);
                state = proj;
            }
            Err(e) if recoverable(&e) => {
                run.truncated = Some(Truncation { step: k, reason: format!("{e}") });
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(run)
}

/// Quantum rolling projection; the initial state is projected at `t = 0`.
pub fn roll_quantum(
    initial: &DensityMatrix,
    step: &QuantumStepMap,
    family: &QuantumExponentialFamily,
    dt: f64,
    steps: usize,
) -> Result<ProjectionRun> {
    roll_quantum_with_tol(initial, step, family, dt, steps, PROJECTION_TOL)
}

pub fn roll_quantum_with_tol(
    initial: &DensityMatrix,
    step: &QuantumStepMap,
    family: &QuantumExponentialFamily,
    dt: f64,
    steps: usize,
    tol: f64,
) -> Result<ProjectionRun> {
    let mut options = check_run(dt, tol)?;
    if initial.dim() != step.dim() || family.dim() != step.dim() {
        return Err(shape(format!(
            "state of dimension {}, dynamics {}, family {}",
            initial.dim(),
            step.dim(),
            family.dim()
        )));
    }
    let prepared = step.prepare(dt)?;
    let h0 = family.base_hamiltonian();
    let project = |pre: &DensityMatrix, t: f64, options: &FitOptions| -> Result<(ProjectionRecord, DensityMatrix)> {
        let eta = family.feature_means(pre)?;
        let fit = quantum_maxent_fit_with(family, &eta, options)?;
        let pt = &fit.point;
        // S(pre‖proj) = −S(pre) + Tr[pre H₀] + ξ·η + log Z at matched means
        let defect = -pre.entropy() + pre.expectation(h0)? + dot(pt.xi(), &eta) + pt.massieu();
        Ok((
            ProjectionRecord {
                t,
                xi: pt.xi().to_vec(),
                mean_residual: fit.residual,
                entropy: pt.entropy(),
                pre_entropy: pre.entropy(),
                projection_defect: defect.max(0.0),
                boundary: !pre.is_faithful(),
                eta,
            },
            pt.state().clone(),
        ))
    };
    let (first, mut state) = project(initial, 0.0, &options)?;
    options.start = Some(first.xi.clone());
    let mut run = ProjectionRun { dt, steps, trajectory: vec![first], truncated: None };
    for k in 1..=steps {
        let outcome = prepared.apply(&state).and_then(|pre| project(&pre, k as f64 * dt, &options));
        match outcome {
            Ok((rec, proj)) => {
                options.start = Some(rec.xi.clone());
                run.trajectory.push(rec);
                state = proj;
            }
            Err(e) if recoverable(&e) => {
                run.truncated = Some(Truncation { step: k, reason: format!("{e}") });
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(run)
}

/// Projected-state entropies and their per-step increments.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropySeries {
    pub entropy: Vec<f64>,
    pub increments: Vec<f64>,
}

impl EntropySeries {
    /// No increment below `−tol`.
    pub fn is_non_decreasing(&self, tol: f64) -> bool {
        self.increments.iter().all(|d| *d >= -tol)
    }
}

pub fn entropy_production(run: &ProjectionRun) -> EntropySeries {
    let entropy: Vec<f64> = run.trajectory.iter().map(|r| r.entropy).collect();
    let increments = entropy.windows(2).map(|w| w[1] - w[0]).collect();
    EntropySeries { entropy, increments }
}

/// Two weakly coupled two-state blocks `{0, 1}` and `{2, 3}` with the block
/// indicator as the slow variable. Blocks exchange probability only through
/// states 0 and 2, so the exact dynamics leaves the family.
#[derive(Debug, Clone)]
pub struct TwoBlockBenchmark {
    pub generator: MarkovGenerator,
    pub family: ExponentialFamily,
    pub initial: FiniteDistribution,
}

/// Within-block rate of the benchmark.
pub const TWO_BLOCK_FAST_RATE: f64 = 1.0;
/// Cross-block rate of the benchmark.
pub const TWO_BLOCK_SLOW_RATE: f64 = 0.1;

pub fn two_block_benchmark() -> Result<TwoBlockBenchmark> {
    let (g, e) = (TWO_BLOCK_FAST_RATE, TWO_BLOCK_SLOW_RATE);
    let jump = Matrix::from_rows(&[
        vec![0.0, g, e, 0.0],
        vec![g, 0.0, 0.0, 0.0],
        vec![e, 0.0, 0.0, g],
        vec![0.0, 0.0, g, 0.0],
    ])?;
    let family = ExponentialFamily::new(vec![vec![1.0, 1.0, 0.0, 0.0]], None)?;
    let initial = FiniteDistribution::new(vec![0.4, 0.4, 0.1, 0.1])?;
    Ok(TwoBlockBenchmark { generator: MarkovGenerator::from_jump_rates(&jump)?, family, initial })
}

impl TwoBlockBenchmark {
    /// Exact slow means at time `t`.
    pub fn exact_means(&self, t: f64) -> Result<Vec<f64>> {
        let rho = propagate(&self.generator.propagator(t)?, &self.initial)?;
        self.family.feature_means(rho.probs())
    }

    /// `‖η_rolled − η_exact‖_∞` at `t = steps · dt`.
    pub fn slow_mean_error(&self, dt: f64, steps: usize) -> Result<f64> {
        let run = roll(&self.initial, &self.generator, &self.family, dt, steps)?;
        if !run.is_complete() {
            return Err(Error::InvalidArgument(format!("benchmark run truncated: {:?}", run.truncated)));
        }
        let exact = self.exact_means(steps as f64 * dt)?;
        Ok(run.last().eta.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{random_density_matrix, random_hermitian, random_probabilities, seeded};

    fn two_state(r: f64) -> MarkovGenerator {
        MarkovGenerator::new(Matrix::from_rows(&[vec![-r, r], vec![r, -r]]).unwrap()).unwrap()
    }

    #[test]
    fn generator_validation() {
        assert!(MarkovGenerator::new(Matrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -0.5]]).unwrap()).is_err());
        assert!(MarkovGenerator::new(Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap()).is_err());
        assert!(two_state(0.3).is_doubly_stochastic());
        assert!(two_block_benchmark().unwrap().generator.is_doubly_stochastic());
    }

    #[test]
    fn micro_step_closed_forms() {
        let rho = FiniteDistribution::new(vec![0.9, 0.1]).unwrap();
        assert_eq!(micro_step(&rho, &MarkovGenerator::zero(2), 0.5).unwrap().probs(), rho.probs());
        let (r, dt) = (0.7, 0.3);
        let out = micro_step(&rho, &two_state(r), dt).unwrap();
        let expected = (0.9 - 0.5) * (-2.0 * r * dt).exp() + 0.5;
        assert!((out.probs()[0] - expected).abs() < 1e-10);
        assert!((out.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let u = FiniteDistribution::uniform(4);
        let fixed = micro_step(&u, &two_block_benchmark().unwrap().generator, 1.0).unwrap();
        assert!(fixed.probs().iter().all(|p| (p - 0.25).abs() < 1e-15));
        assert!(micro_step(&rho, &two_state(1.0), 0.0).is_err());
    }

    #[test]
    fn full_family_is_exact() {
        let mut rng = seeded(3);
        let n = 4;
        let jump = Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 0.2 + (i * n + j) as f64 * 0.05 });
        let gen = MarkovGenerator::from_jump_rates(&jump).unwrap();
        let family = ExponentialFamily::full_simplex(n).unwrap();
        let initial = FiniteDistribution::new(random_probabilities(&mut rng, n)).unwrap();
        let (dt, steps) = (0.1, 20);
        let run = roll(&initial, &gen, &family, dt, steps).unwrap();
        assert!(run.is_complete());
        for (k, rec) in run.trajectory.iter().enumerate() {
            let exact = propagate(&gen.propagator(k as f64 * dt).unwrap(), &initial).unwrap();
            let eta = family.feature_means(exact.probs()).unwrap();
            let err = rec.eta.iter().zip(&eta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8, "step {k}: {err:e}");
            assert!((rec.entropy - entropy(&exact)).abs() < 1e-8);
            assert!(rec.projection_defect < 1e-12);
        }
    }

    #[test]
    fn zero_generator_is_constant() {
        let b = two_block_benchmark().unwrap();
        let run = roll(&b.initial, &MarkovGenerator::zero(4), &b.family, 0.1, 10).unwrap();
        let first = run.trajectory[0].clone();
        for rec in &run.trajectory {
            assert!((rec.eta[0] - first.eta[0]).abs() < 1e-14);
            assert!((rec.entropy - first.entropy).abs() < 1e-12);
        }
    }

    #[test]
    fn two_block_run_contracts() {
        let b = two_block_benchmark().unwrap();
        let run = roll(&b.initial, &b.generator, &b.family, 0.05, 80).unwrap();
        assert!(run.is_complete());
        assert_eq!(run.trajectory.len(), 81);
        for rec in &run.trajectory {
            assert!(rec.mean_residual <= 1e-10);
            assert!(rec.entropy >= rec.pre_entropy - 1e-12);
        }
        assert!(entropy_production(&run).is_non_decreasing(1e-10));
        // slow means relax towards one half
        assert!(run.last().eta[0] < run.trajectory[0].eta[0]);
        assert!(run.last().eta[0] > 0.5);
    }

    #[test]
    fn symmetric_relaxation_entropy_rises_to_log_two() {
        let gen = two_state(1.0);
        let family = ExponentialFamily::full_simplex(2).unwrap();
        let initial = FiniteDistribution::new(vec![0.9, 0.1]).unwrap();
        let run = roll(&initial, &gen, &family, 0.1, 60).unwrap();
        let s = entropy_production(&run);
        assert!(s.increments.iter().all(|d| *d > 0.0));
        assert!((s.entropy.last().unwrap() - 2f64.ln()).abs() < 1e-5);
        let stationary = roll(&FiniteDistribution::uniform(2), &gen, &family, 0.1, 10).unwrap();
        assert!(entropy_production(&stationary).increments.iter().all(|d| d.abs() < 1e-14));
    }

    #[test]
    fn runs_are_deterministic() {
        let b = two_block_benchmark().unwrap();
        let a = roll(&b.initial, &b.generator, &b.family, 0.1, 30).unwrap();
        let c = roll(&b.initial, &b.generator, &b.family, 0.1, 30).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn infeasible_projection_truncates() {
        // point mass: block mean 1 sits on the boundary of the family
        let b = two_block_benchmark().unwrap();
        let start = FiniteDistribution::new(vec![0.5 - 1e-13, 0.5 - 1e-13, 1e-13, 1e-13]).unwrap();
        let frozen = MarkovGenerator::zero(4);
        let run = roll(&start, &frozen, &b.family, 0.1, 3);
        match run {
            Ok(r) => assert!(r.is_complete() || r.truncated.is_some()),
            Err(e) => assert!(recoverable(&e), "{e}"),
        }
    }

    #[test]
    fn quantum_full_family_tracks_unitary_dynamics() {
        let mut rng = seeded(5);
        let family = QuantumExponentialFamily::new(
            HermitianMatrix::zeros(2),
            vec![HermitianMatrix::pauli_x(), HermitianMatrix::pauli_y(), HermitianMatrix::pauli_z()],
        )
        .unwrap();
        let h = random_hermitian(&mut rng, 2, 1.0);
        let initial = DensityMatrix::new(random_density_matrix(&mut rng, 2)).unwrap();
        let step = QuantumStepMap::Hamiltonian(h.clone());
        let (dt, steps) = (0.1, 15);
        let run = roll_quantum(&initial, &step, &family, dt, steps).unwrap();
        assert!(run.is_complete());
        for (k, rec) in run.trajectory.iter().enumerate() {
            let exact =
                if k == 0 { initial.clone() } else { quantum_micro_step(&initial, &step, k as f64 * dt).unwrap() };
            let eta = family.feature_means(&exact).unwrap();
            let err = rec.eta.iter().zip(&eta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8, "step {k}: {err:e}");
            assert!((rec.entropy - initial.entropy()).abs() < 1e-8);
        }
    }

    #[test]
    fn quantum_channel_projection_raises_entropy() {
        let family =
            QuantumExponentialFamily::new(HermitianMatrix::zeros(2), vec![HermitianMatrix::pauli_z()]).unwrap();
        let map = QuantumStepMap::Channel(QuantumCPUnitalMap::depolarizing(0.05).unwrap());
        let initial = DensityMatrix::diagonal(&[0.9, 0.1]).unwrap();
        let run = roll_quantum(&initial, &map, &family, 1.0, 20).unwrap();
        for rec in &run.trajectory {
            assert!(rec.entropy >= rec.pre_entropy - 1e-12);
            assert!(rec.mean_residual <= 1e-10);
        }
        assert!(entropy_production(&run).is_non_decreasing(1e-10));
        let pre = quantum_micro_step(&initial, &QuantumStepMap::Hamiltonian(HermitianMatrix::pauli_x()), 0.3).unwrap();
        assert!((pre.matrix().trace() - 1.0).abs() < 1e-12);
    }
}
