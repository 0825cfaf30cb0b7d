//! JSON input files and their conversion into library types.
//!
//! Every file is parsed and validated before a command computes anything,
//! so a bad file always exits with the input-error status.
//!
//! Formats:
//! - matrix: `{"dim": n, "re": [[..]], "im": [[..]]}` with `dim` and `im`
//!   optional; a bare array of real rows is also accepted;
//! - density matrix: a matrix with an optional `"trace_tol"`;
//! - classical family: `{"omega": n, "features": [[..]], "base_log_density": [..], "xi": [..]}`,
//!   only `features` required;
//! - quantum family: `{"dim": d, "H0": matrix, "features": [matrix, ..]}`,
//!   `H0` defaulting to zero;
//! - distribution: a bare probability array or `{"probs": [..]}`;
//! - dynamics: a rate matrix `[[..]]` whose entry `(i, j)` is the rate from
//!   `j` to `i` (zero column sums), `{"jump_rates": [[..]]}` with the
//!   diagonal filled in, `{"hamiltonian": matrix}` or `{"kraus": [matrix, ..]}`;
//! - run config: `{"generator": dynamics, "family": .., "initial": .., "dt": x, "steps": n}`.

use std::fs;
use std::path::Path;

use infogeo_core::classical::{ExponentialFamily, FiniteDistribution};
use infogeo_core::linalg::{CMatrix, Matrix};
use infogeo_core::monotonicity::QuantumCPUnitalMap;
use infogeo_core::projection::{MarkovGenerator, QuantumStepMap};
use infogeo_core::quantum::{DensityMatrix, QuantumExponentialFamily, TRACE_TOL};
use infogeo_core::spectral::HermitianMatrix;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::error::{input, CliError, CliResult};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse { path: path.to_path_buf(), source })
}

fn from_value<T: DeserializeOwned>(value: Value, what: &str) -> CliResult<T> {
    serde_json::from_value(value).map_err(|e| input(format!("{what}: {e}")))
}

fn check_dim(declared: Option<usize>, actual: usize, what: &str) -> CliResult<()> {
    match declared {
        Some(d) if d != actual => Err(input(format!("{what} declares dimension {d} but has {actual}"))),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixParts {
    #[serde(default)]
    pub dim: Option<usize>,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MatrixInput {
    Parts(MatrixParts),
    Real(Vec<Vec<f64>>),
}

impl MatrixInput {
    pub fn to_cmatrix(&self) -> CliResult<CMatrix> {
        match self {
            MatrixInput::Real(re) => Ok(CMatrix::from_parts(re, None)?),
            MatrixInput::Parts(MatrixParts { dim, re, im }) => {
                check_dim(*dim, re.len(), "matrix")?;
                Ok(CMatrix::from_parts(re, im.as_deref())?)
            }
        }
    }

    pub fn to_hermitian(&self) -> CliResult<HermitianMatrix> {
        Ok(HermitianMatrix::new(self.to_cmatrix()?)?)
    }
}

pub fn load_hermitian(path: &Path) -> CliResult<HermitianMatrix> {
    read_json::<MatrixInput>(path)?.to_hermitian()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateParts {
    #[serde(default)]
    pub dim: Option<usize>,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub trace_tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum StateInput {
    Parts(StateParts),
    Real(Vec<Vec<f64>>),
}

impl StateInput {
    pub fn to_state(self, allow_boundary: bool, origin: &str) -> CliResult<DensityMatrix> {
        let (matrix, trace_tol) = match self {
            StateInput::Real(re) => (MatrixInput::Real(re), None),
            StateInput::Parts(StateParts { dim, re, im, trace_tol }) => {
                (MatrixInput::Parts(MatrixParts { dim, re, im }), trace_tol)
            }
        };
        let m = matrix.to_hermitian()?;
        DensityMatrix::with_trace_tol(m, trace_tol.unwrap_or(TRACE_TOL), allow_boundary).map_err(|e| match e {
            infogeo_core::Error::NotFaithful { min } => input(format!(
                "{origin}: state is not faithful (smallest eigenvalue {min:e}); pass --allow-boundary where supported"
            )),
            e => e.into(),
        })
    }

    pub fn load(path: &Path, allow_boundary: bool) -> CliResult<DensityMatrix> {
        read_json::<Self>(path)?.to_state(allow_boundary, &path.display().to_string())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalFamilyFile {
    #[serde(default)]
    pub omega: Option<usize>,
    pub features: Vec<Vec<f64>>,
    #[serde(default)]
    pub base_log_density: Option<Vec<f64>>,
    /// Default point for commands that take `--xi`.
    #[serde(default)]
    pub xi: Option<Vec<f64>>,
}

impl ClassicalFamilyFile {
    pub fn build(self) -> CliResult<(ExponentialFamily, Option<Vec<f64>>)> {
        let family = ExponentialFamily::new(self.features, self.base_log_density)?;
        check_dim(self.omega, family.omega(), "family sample space")?;
        if let Some(xi) = &self.xi {
            if xi.len() != family.dim() {
                return Err(input(format!("family point has {} coordinates for {} features", xi.len(), family.dim())));
            }
        }
        Ok((family, self.xi))
    }

    pub fn load(path: &Path) -> CliResult<(ExponentialFamily, Option<Vec<f64>>)> {
        read_json::<Self>(path)?.build()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumFamilyFile {
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default, rename = "H0", alias = "h0")]
    pub h0: Option<MatrixInput>,
    pub features: Vec<MatrixInput>,
}

impl QuantumFamilyFile {
    pub fn build(self) -> CliResult<QuantumExponentialFamily> {
        let features = self.features.iter().map(MatrixInput::to_hermitian).collect::<CliResult<Vec<_>>>()?;
        let dim =
            features.first().map(HermitianMatrix::dim).ok_or_else(|| input("family needs at least one feature"))?;
        check_dim(self.dim, dim, "quantum family")?;
        let h0 = match &self.h0 {
            Some(m) => m.to_hermitian()?,
            None => HermitianMatrix::zeros(dim),
        };
        Ok(QuantumExponentialFamily::new(h0, features)?)
    }

    pub fn load(path: &Path) -> CliResult<QuantumExponentialFamily> {
        read_json::<Self>(path)?.build()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DistributionInput {
    Bare(Vec<f64>),
    Wrapped(Probs),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Probs {
    pub probs: Vec<f64>,
}

impl DistributionInput {
    pub fn build(self, origin: &str) -> CliResult<FiniteDistribution> {
        let probs = match self {
            DistributionInput::Bare(p) | DistributionInput::Wrapped(Probs { probs: p }) => p,
        };
        FiniteDistribution::new(probs).map_err(|e| match e {
            infogeo_core::Error::NotFaithful { min } => {
                input(format!("{origin}: distribution is not faithful (smallest weight {min:e})"))
            }
            e => e.into(),
        })
    }

    pub fn load(path: &Path) -> CliResult<FiniteDistribution> {
        read_json::<Self>(path)?.build(&path.display().to_string())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorFile {
    pub estimators: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DynamicsInput {
    Rates(Vec<Vec<f64>>),
    Tagged(TaggedDynamics),
}

/// Exactly one key; an object with several keys is rejected.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum TaggedDynamics {
    JumpRates(Vec<Vec<f64>>),
    Hamiltonian(MatrixInput),
    Kraus(Vec<MatrixInput>),
}

#[derive(Debug, Clone)]
pub enum Dynamics {
    Classical(MarkovGenerator),
    Quantum(QuantumStepMap),
}

impl DynamicsInput {
    pub fn build(&self) -> CliResult<Dynamics> {
        Ok(match self {
            DynamicsInput::Rates(q) => Dynamics::Classical(MarkovGenerator::new(Matrix::from_rows(q)?)?),
            DynamicsInput::Tagged(TaggedDynamics::JumpRates(jump_rates)) => {
                Dynamics::Classical(MarkovGenerator::from_jump_rates(&Matrix::from_rows(jump_rates)?)?)
            }
            DynamicsInput::Tagged(TaggedDynamics::Hamiltonian(hamiltonian)) => {
                Dynamics::Quantum(QuantumStepMap::Hamiltonian(hamiltonian.to_hermitian()?))
            }
            DynamicsInput::Tagged(TaggedDynamics::Kraus(kraus)) => {
                let ops = kraus.iter().map(MatrixInput::to_cmatrix).collect::<CliResult<Vec<_>>>()?;
                Dynamics::Quantum(QuantumStepMap::Channel(QuantumCPUnitalMap::new(ops)?))
            }
        })
    }

    pub fn load(path: &Path) -> CliResult<Dynamics> {
        read_json::<Self>(path)?.build()
    }
}

/// Inputs of one rolling-projection run, not yet validated against each other.
#[derive(Debug, Clone)]
pub enum RunInputs {
    Classical { generator: MarkovGenerator, family: ExponentialFamily, initial: FiniteDistribution },
    Quantum { step: QuantumStepMap, family: QuantumExponentialFamily, initial: DensityMatrix },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub generator: DynamicsInput,
    pub family: Value,
    pub initial: Value,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub steps: Option<usize>,
}

impl RunConfig {
    /// The family and initial condition are read as classical or quantum
    /// according to the dynamics.
    pub fn build(self, origin: &str) -> CliResult<(RunInputs, Option<f64>, Option<usize>)> {
        let inputs = match self.generator.build()? {
            Dynamics::Classical(generator) => RunInputs::Classical {
                generator,
                family: from_value::<ClassicalFamilyFile>(self.family, "family")?.build()?.0,
                initial: from_value::<DistributionInput>(self.initial, "initial")?.build(origin)?,
            },
            Dynamics::Quantum(step) => RunInputs::Quantum {
                step,
                family: from_value::<QuantumFamilyFile>(self.family, "family")?.build()?,
                initial: from_value::<StateInput>(self.initial, "initial")?.to_state(false, origin)?,
            },
        };
        Ok((inputs, self.dt, self.steps))
    }

    pub fn load(path: &Path) -> CliResult<(RunInputs, Option<f64>, Option<usize>)> {
        read_json::<Self>(path)?.build(&path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse<T: DeserializeOwned>(text: &str) -> T {
        serde_json::from_str(text).unwrap()
    }

    #[test]
    fn declared_dimension_must_match() {
        let ok: MatrixInput = parse(r#"{"dim": 2, "re": [[1, 0], [0, 1]]}"#);
        assert!(ok.to_hermitian().is_ok());
        let bad: MatrixInput = parse(r#"{"dim": 3, "re": [[1, 0], [0, 1]]}"#);
        assert!(bad.to_hermitian().unwrap_err().exit_code() == crate::EXIT_INPUT);
    }

    #[test]
    fn unknown_matrix_keys_are_rejected() {
        assert!(serde_json::from_str::<MatrixInput>(r#"{"re": [[1]], "imag": [[0]]}"#).is_err());
    }

    #[test]
    fn state_trace_tolerance_is_honoured() {
        let loose: StateInput = parse(r#"{"re": [[0.3, 0], [0, 0.70000001]], "trace_tol": 1e-6}"#);
        let rho = loose.to_state(false, "test").unwrap();
        assert!((rho.matrix().trace() - 1.0).abs() < 1e-15);
        let strict: StateInput = parse(r#"{"re": [[0.3, 0], [0, 0.70000001]]}"#);
        assert_eq!(strict.to_state(false, "test").unwrap_err().exit_code(), crate::EXIT_INPUT);
    }

    #[test]
    fn quantum_family_accepts_both_spellings() {
        let a: QuantumFamilyFile = parse(r#"{"dim": 2, "H0": [[1, 0], [0, -1]], "features": [[[0, 1], [1, 0]]]}"#);
        let b: QuantumFamilyFile = parse(r#"{"h0": [[1, 0], [0, -1]], "features": [[[0, 1], [1, 0]]]}"#);
        assert_eq!(a.build().unwrap().num_features(), b.build().unwrap().num_features());
        let wrong: QuantumFamilyFile = parse(r#"{"dim": 3, "features": [[[0, 1], [1, 0]]]}"#);
        assert!(wrong.build().is_err());
    }

    #[test]
    fn classical_family_checks_its_point_and_sample_space() {
        let f: ClassicalFamilyFile = parse(r#"{"omega": 3, "features": [[0, 1, 2]], "xi": [0.5]}"#);
        assert_eq!(f.build().unwrap().1, Some(vec![0.5]));
        let f: ClassicalFamilyFile = parse(r#"{"omega": 4, "features": [[0, 1, 2]]}"#);
        assert!(f.build().is_err());
        let f: ClassicalFamilyFile = parse(r#"{"features": [[0, 1, 2]], "xi": [0.5, 1]}"#);
        assert!(f.build().is_err());
    }

    #[test]
    fn run_config_dispatches_on_the_dynamics() {
        let classical: RunConfig = parse(
            r#"{"generator": [[-1, 1], [1, -1]], "family": {"features": [[0, 1]]}, "initial": [0.2, 0.8], "dt": 0.1, "steps": 3}"#,
        );
        let (inputs, dt, steps) = classical.build("test").unwrap();
        assert!(matches!(inputs, RunInputs::Classical { .. }));
        assert_eq!((dt, steps), (Some(0.1), Some(3)));
        let quantum: RunConfig = parse(
            r#"{"generator": {"hamiltonian": [[0, 1], [1, 0]]}, "family": {"features": [[[1, 0], [0, -1]]]},
                "initial": {"dim": 2, "re": [[0.6, 0], [0, 0.4]]}}"#,
        );
        let (inputs, dt, _) = quantum.build("test").unwrap();
        assert!(matches!(inputs, RunInputs::Quantum { .. }));
        assert_eq!(dt, None);
    }
}
