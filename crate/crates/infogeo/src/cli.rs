//! Command-line grammar. Vectors are comma separated (`--xi 0.1,-0.2`).

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "infogeo", version, about = "Numerical information geometry: classical and quantum")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Max-entropy distribution of a classical family with given feature means.
    FitClassical(FitClassicalArgs),
    /// Max-entropy state of a quantum family with given feature means.
    FitQuantum(FitQuantumArgs),
    /// Matrix Cramer-Rao report for estimators of a classical family.
    CramerRao(CramerRaoArgs),
    /// Quantum Cramer-Rao slacks of an observable along a one-parameter path.
    QuantumCramerRao(QuantumCramerRaoArgs),
    /// α-geodesic of a classical family, written as a CSV trajectory.
    Geodesic(GeodesicArgs),
    /// (+1) or (−1) parallel transport of a tangent between two distributions.
    Transport(TransportArgs),
    /// Seeded contraction sweep of the Fisher, GNS or BKM metric.
    AuditMonotonicity(AuditArgs),
    /// Perturbative expansion of log Z for H0 + V.
    KuboExpand(KuboArgs),
    /// Rolling max-entropy projection of exact dynamics, written as CSV.
    ProjectSimulate(ProjectArgs),
    /// Entropy of a two-state mixture against its upper bound.
    EntropyBound(EntropyBoundArgs),
    /// Seeded draws from a distribution, with the family estimate if given.
    Sample(SampleArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write the report here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FitTolArgs {
    /// Convergence threshold on the max-norm mean residual [default: 1e-10].
    #[arg(long)]
    pub tol: Option<f64>,
    /// Newton iteration cap [default: 200].
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct FitClassicalArgs {
    /// Classical family file.
    #[arg(long)]
    pub family: PathBuf,
    /// Target feature means.
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true, required = true)]
    pub means: Vec<f64>,
    #[command(flatten)]
    pub tol: FitTolArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FitQuantumArgs {
    /// Quantum family file.
    #[arg(long)]
    pub family: PathBuf,
    /// Target feature means.
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true, required = true)]
    pub means: Vec<f64>,
    #[command(flatten)]
    pub tol: FitTolArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Coordinates {
    /// Parameters are the feature means η.
    Mixture,
    /// Parameters are the canonical coordinates ξ.
    Canonical,
}

#[derive(Debug, Clone, Args)]
pub struct CramerRaoArgs {
    /// Classical family file.
    #[arg(long)]
    pub family: PathBuf,
    /// Parametrization of the family.
    #[arg(long, value_enum, default_value = "mixture")]
    pub coordinates: Coordinates,
    /// Parameter value in the chosen coordinates.
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true, required = true)]
    pub at: Vec<f64>,
    /// Estimator file; the family features are used when absent.
    #[arg(long)]
    pub estimators: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PathKind {
    /// ξ(t) = origin + t·direction in a quantum family.
    Canonical,
    /// η(t) = origin + t·direction in a quantum family.
    Mixture,
    /// ρ(t) = exp(−itH) ρ exp(itH).
    Unitary,
}

#[derive(Debug, Clone, Args)]
pub struct QuantumCramerRaoArgs {
    #[arg(long, value_enum)]
    pub path: PathKind,
    /// Quantum family file (canonical and mixture paths).
    #[arg(long, required_if_eq_any = [("path", "canonical"), ("path", "mixture")])]
    pub family: Option<PathBuf>,
    /// Path origin in the family's coordinates.
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    pub origin: Vec<f64>,
    /// Path direction in the family's coordinates.
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    pub direction: Vec<f64>,
    /// Initial state file (unitary path).
    #[arg(long, required_if_eq("path", "unitary"))]
    pub state: Option<PathBuf>,
    /// Hamiltonian file (unitary path).
    #[arg(long, required_if_eq("path", "unitary"))]
    pub generator: Option<PathBuf>,
    /// Observable file; it must be locally unbiased along the path.
    #[arg(long)]
    pub observable: PathBuf,
    /// Path parameter at which the bounds are evaluated.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub t0: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CsvOutputArgs {
    /// Write the CSV trajectory here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Also write a JSON summary to this file.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GeodesicArgs {
    /// Classical family file.
    #[arg(long)]
    pub family: PathBuf,
    /// Starting canonical coordinates [default: the family file's "xi"].
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    pub xi: Option<Vec<f64>>,
    /// Initial velocity in canonical coordinates.
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true, required = true)]
    pub velocity: Vec<f64>,
    /// Connection parameter α.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub dt: f64,
    /// Truncate once some |ξ_j| exceeds this [default: 50].
    #[arg(long)]
    pub coordinate_box: Option<f64>,
    #[command(flatten)]
    pub out: CsvOutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TangentKind {
    /// Zero-sum measure.
    Mixture,
    /// Score with zero mean under the source distribution.
    Score,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransportKind {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Args)]
pub struct TransportArgs {
    /// Source distribution file.
    #[arg(long)]
    pub rho: PathBuf,
    /// Target distribution file.
    #[arg(long)]
    pub sigma: PathBuf,
    /// Tangent components over the sample space.
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true, required = true)]
    pub tangent: Vec<f64>,
    /// Representation of the given tangent.
    #[arg(long, value_enum)]
    pub rep: TangentKind,
    #[arg(long, value_enum)]
    pub kind: TransportKind,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricKind {
    Fisher,
    Gns,
    Bkm,
}

#[derive(Debug, Clone, Args)]
pub struct AuditArgs {
    #[arg(long, value_enum)]
    pub metric: MetricKind,
    /// Input dimension of the random states.
    #[arg(long)]
    pub dim: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ratios above 1 + tol count as violations [default: 1e-10].
    #[arg(long)]
    pub contraction_tol: Option<f64>,
    /// Include every trial ratio in the report.
    #[arg(long)]
    pub ratios: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct KuboArgs {
    /// Unperturbed Hamiltonian file.
    #[arg(long)]
    pub h0: PathBuf,
    /// Perturbation file.
    #[arg(long)]
    pub v: PathBuf,
    /// Highest series order, at most 6.
    #[arg(long, default_value_t = 4)]
    pub order: usize,
    /// Multiplies the perturbation before expanding.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub scale: f64,
    #[arg(long, value_enum, default_value = "json")]
    pub format: SeriesFormat,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeriesFormat {
    Json,
    /// One row per order: order, term, partial, exact, error.
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct ProjectArgs {
    /// Run file holding the dynamics, family, initial condition, dt and
    /// steps; the other flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Family file: classical with --generator, quantum otherwise.
    #[arg(long, required_unless_present = "config")]
    pub family: Option<PathBuf>,
    /// Initial distribution (classical) or state (quantum) file.
    #[arg(long, required_unless_present = "config")]
    pub initial: Option<PathBuf>,
    /// Classical rate-matrix file.
    #[arg(long, group = "dynamics")]
    pub generator: Option<PathBuf>,
    /// Quantum Hamiltonian file.
    #[arg(long, group = "dynamics")]
    pub hamiltonian: Option<PathBuf>,
    /// Quantum unital channel file, applied once per step.
    #[arg(long, group = "dynamics")]
    pub channel: Option<PathBuf>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Projection fit threshold [default: 1e-12].
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub out: CsvOutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EntropyBoundArgs {
    /// First state file.
    #[arg(long)]
    pub rho: PathBuf,
    /// Second state file.
    #[arg(long)]
    pub sigma: PathBuf,
    /// Weight of the first state.
    #[arg(long)]
    pub lambda: f64,
    /// Accept rank-deficient states.
    #[arg(long)]
    pub allow_boundary: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    /// Distribution file to draw from.
    #[arg(long, conflicts_with_all = ["family", "xi"])]
    pub distribution: Option<PathBuf>,
    /// Classical family file; draws from the point at --xi (or the file's
    /// "xi") and refits.
    #[arg(long)]
    pub family: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    pub xi: Option<Vec<f64>>,
    /// Number of draws.
    #[arg(long)]
    pub count: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}
