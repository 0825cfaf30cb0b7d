//! Density matrices, the GNS and BKM metrics, logarithmic derivatives,
//! quantum Cramer-Rao bounds, quantum exponential families and max-entropy.

mod family;
pub(crate) use family::gibbs_state;
mod logderiv;
mod metric;
mod state;

pub use family::{
    quantum_massieu, quantum_maxent_fit, quantum_maxent_fit_with, state_from_score, QuantumExponentialFamily,
    QuantumLegendreCheck, QuantumMaxEntFit, QuantumPoint,
};
pub use logderiv::{
    log_derivatives, quantum_cramer_rao, quantum_fisher_info, state_derivative, CanonicalPath, FnPath, LogDerivatives,
    MixturePath, QuantumBound, QuantumCramerRaoReport, QuantumInfoKind, StatePath, UnitaryPath, DERIVATIVE_TRACE_TOL,
    PATH_FD_STEP,
};
pub use metric::{bkm_metric, bkm_pairing, gns_metric, gns_pairing, metric_on_mixture, QuantumMetric};
pub use state::{
    binary_entropy, mixture_entropy_bound, quantum_entropy, quantum_tangent_convert, DensityMatrix, EntropyBound,
    QuantumTangent, QuantumTangentRep, TRACE_TOL,
};
