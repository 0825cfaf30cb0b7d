//! One adapter per subcommand. Adapters load every input first, call the
//! library and shape its results; they do no arithmetic of their own.

use infogeo_core::classical::{
    fisher_metric, geodesic, parallel_transport, ClassicalTangent, GeodesicOptions, Transport,
};
use infogeo_core::estimation::{
    cramer_rao_report, empirical_distribution, estimate_from_data, maxent_fit_with, sample, CanonicalParametrization,
    CramerRaoReport, EstimatorSet, FitOptions, MixtureParametrization,
};
use infogeo_core::kubo::{
    expand_log_z, massieu_derivative_check, PerturbationProblem, DERIVATIVE_STEP, SERIES_CONVENTION,
};
use infogeo_core::monotonicity::{contraction_sweep, ContractionMetric, CONTRACTION_TOL};
use infogeo_core::projection::{
    entropy_production, roll_quantum_with_tol, roll_with_tol, ProjectionRun, QuantumStepMap, PROJECTION_KIND,
    PROJECTION_TOL,
};
use infogeo_core::quantum::{
    binary_entropy, mixture_entropy_bound, quantum_cramer_rao, quantum_maxent_fit_with, CanonicalPath, MixturePath,
    QuantumCramerRaoReport, UnitaryPath, DERIVATIVE_TRACE_TOL, PATH_FD_STEP,
};
use serde_json::{json, Value};

use crate::cli::{
    AuditArgs, Command, Coordinates, CramerRaoArgs, EntropyBoundArgs, FitClassicalArgs, FitQuantumArgs, FitTolArgs,
    GeodesicArgs, KuboArgs, MetricKind, PathKind, ProjectArgs, QuantumCramerRaoArgs, SampleArgs, SeriesFormat,
    TangentKind, TransportArgs, TransportKind,
};
use crate::error::{input, CliResult};
use crate::model::{
    load_hermitian, read_json, ClassicalFamilyFile, DistributionInput, Dynamics, DynamicsInput, EstimatorFile,
    QuantumFamilyFile, RunConfig, RunInputs, StateInput,
};
use crate::report::{hermitian, indexed, matrix, Metadata, Table};

/// Entropy increments below `−ENTROPY_SERIES_TOL` are reported as decreases.
pub const ENTROPY_SERIES_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Json(Value),
    /// A trajectory plus its JSON summary.
    Csv {
        table: Table,
        summary: Value,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub output: Output,
    /// Printed on the error stream; they do not change the exit status.
    pub warnings: Vec<String>,
}

impl From<Output> for Report {
    fn from(output: Output) -> Self {
        Report { output, warnings: Vec::new() }
    }
}

pub fn execute(command: &Command) -> CliResult<Report> {
    match command {
        Command::FitClassical(a) => fit_classical(a),
        Command::FitQuantum(a) => fit_quantum(a),
        Command::CramerRao(a) => cramer_rao(a),
        Command::QuantumCramerRao(a) => quantum_cramer_rao_cmd(a),
        Command::Geodesic(a) => geodesic_cmd(a),
        Command::Transport(a) => transport(a),
        Command::AuditMonotonicity(a) => audit(a),
        Command::KuboExpand(a) => kubo(a),
        Command::ProjectSimulate(a) => project(a),
        Command::EntropyBound(a) => entropy_bound(a),
        Command::Sample(a) => sample_cmd(a),
    }
}

fn fit_options(t: &FitTolArgs) -> FitOptions {
    let d = FitOptions::default();
    FitOptions { tol: t.tol.unwrap_or(d.tol), max_iter: t.max_iter.unwrap_or(d.max_iter), start: None }
}

fn fit_metadata(command: &'static str, t: &FitTolArgs) -> Metadata {
    let d = FitOptions::default();
    Metadata::new(command).tolerance("fit_tol", t.tol, d.tol).tolerance(
        "max_iter",
        t.max_iter.map(|m| m as f64),
        d.max_iter as f64,
    )
}

fn fit_classical(a: &FitClassicalArgs) -> CliResult<Report> {
    let (family, _) = ClassicalFamilyFile::load(&a.family)?;
    let fit = maxent_fit_with(&family, &a.means, &fit_options(&a.tol))?;
    let p = &fit.point;
    let body = json!({
        "xi": p.xi(),
        "eta": p.mixture_coords(),
        "probs": p.probs(),
        "entropy": p.entropy(),
        "massieu": p.massieu(),
        "covariance": matrix(&p.covariance()),
        "fisher_mixture": matrix(&p.fisher_mixture()?),
        "iterations": fit.iterations,
        "residual": fit.residual,
    });
    Ok(Output::Json(fit_metadata("fit-classical", &a.tol).wrap(body)).into())
}

fn fit_quantum(a: &FitQuantumArgs) -> CliResult<Report> {
    let family = QuantumFamilyFile::load(&a.family)?;
    let fit = quantum_maxent_fit_with(&family, &a.means, &fit_options(&a.tol))?;
    let p = &fit.point;
    let body = json!({
        "xi": p.xi(),
        "means": p.means(),
        "entropy": p.entropy(),
        "massieu": p.massieu(),
        "bkm_covariance": matrix(&p.bkm_covariance()?),
        "state": hermitian(p.state().matrix()),
        "iterations": fit.iterations,
        "residual": fit.residual,
    });
    Ok(Output::Json(fit_metadata("fit-quantum", &a.tol).wrap(body)).into())
}

fn cramer_rao_json(r: &CramerRaoReport) -> Value {
    json!({
        "V": matrix(&r.covariance),
        "G": matrix(&r.fisher),
        "gap": matrix(&r.gap),
        "gap_min_eig": r.min_gap_eig,
        "efficiency": r.efficiency,
        "bias": r.bias,
    })
}

fn cramer_rao(a: &CramerRaoArgs) -> CliResult<Report> {
    let (family, _) = ClassicalFamilyFile::load(&a.family)?;
    let functions = match &a.estimators {
        Some(path) => read_json::<EstimatorFile>(path)?.estimators,
        None => family.features().to_vec(),
    };
    let est = EstimatorSet::new(functions)?;
    let (coords, report) = match a.coordinates {
        Coordinates::Mixture => ("mixture", cramer_rao_report(&MixtureParametrization(family), &a.at, &est)?),
        Coordinates::Canonical => ("canonical", cramer_rao_report(&CanonicalParametrization(family), &a.at, &est)?),
    };
    let mut body = cramer_rao_json(&report);
    body["coordinates"] = json!(coords);
    body["at"] = json!(a.at);
    let meta = Metadata::new("cramer-rao").tolerance("unbiased_tol", None, infogeo_core::estimation::UNBIASED_TOL);
    Ok(Output::Json(meta.wrap(body)).into())
}

fn quantum_report_json(r: &QuantumCramerRaoReport) -> Value {
    let bounds: Vec<Value> = r
        .bounds
        .iter()
        .map(|b| json!({ "kind": b.kind.name(), "information": b.information, "bound": b.bound, "slack": b.slack }))
        .collect();
    json!({
        "mean": r.mean,
        "mean_derivative": r.mean_derivative,
        "variance": r.variance,
        "bkm_variance": r.bkm_variance,
        "bkm_slack": r.bkm_slack,
        "bounds": bounds,
    })
}

fn quantum_cramer_rao_cmd(a: &QuantumCramerRaoArgs) -> CliResult<Report> {
    let observable = load_hermitian(&a.observable)?;
    let report = match a.path {
        PathKind::Canonical | PathKind::Mixture => {
            let path = a.family.as_ref().ok_or_else(|| input("--family is required for family paths"))?;
            let family = QuantumFamilyFile::load(path)?;
            let (origin, direction) = (a.origin.clone(), a.direction.clone());
            if origin.len() != family.num_features() || direction.len() != family.num_features() {
                return Err(input(format!("--origin and --direction need {} components each", family.num_features())));
            }
            if a.path == PathKind::Canonical {
                quantum_cramer_rao(&CanonicalPath { family, origin, direction }, a.t0, &observable)?
            } else {
                quantum_cramer_rao(&MixturePath { family, origin, direction }, a.t0, &observable)?
            }
        }
        PathKind::Unitary => {
            let state = a.state.as_ref().ok_or_else(|| input("--state is required for unitary paths"))?;
            let generator = a.generator.as_ref().ok_or_else(|| input("--generator is required for unitary paths"))?;
            let path = UnitaryPath { initial: StateInput::load(state, false)?, generator: load_hermitian(generator)? };
            quantum_cramer_rao(&path, a.t0, &observable)?
        }
    };
    let mut body = quantum_report_json(&report);
    body["t0"] = json!(a.t0);
    let meta = Metadata::new("quantum-cramer-rao")
        .tolerance("derivative_trace_tol", None, DERIVATIVE_TRACE_TOL)
        .tolerance("path_fd_step", None, PATH_FD_STEP);
    Ok(Output::Json(meta.wrap(body)).into())
}

fn geodesic_cmd(a: &GeodesicArgs) -> CliResult<Report> {
    let (family, file_xi) = ClassicalFamilyFile::load(&a.family)?;
    let xi = a.xi.clone().or(file_xi).ok_or_else(|| input("give --xi or an \"xi\" entry in the family file"))?;
    let defaults = GeodesicOptions::default();
    let options = GeodesicOptions { coordinate_box: a.coordinate_box.unwrap_or(defaults.coordinate_box) };
    let start = family.point(&xi)?;
    let path = geodesic(&start, &a.velocity, a.alpha, a.t_max, a.dt, &options)?;
    let n = family.dim();
    let header = std::iter::once("t".to_string())
        .chain(indexed("xi", n))
        .chain(indexed("eta", n))
        .chain(["psi".to_string(), "entropy".to_string()])
        .collect();
    let rows = path
        .samples
        .iter()
        .map(|s| {
            let mut row = vec![s.t];
            row.extend_from_slice(s.point.xi());
            row.extend(s.point.mixture_coords());
            row.push(s.point.massieu());
            row.push(s.point.entropy());
            row
        })
        .collect();
    let last = path.last();
    let summary =
        Metadata::new("geodesic").tolerance("coordinate_box", a.coordinate_box, defaults.coordinate_box).wrap(json!({
            "alpha": a.alpha,
            "samples": path.samples.len(),
            "truncated": path.truncated,
            "final": {
                "t": last.t,
                "xi": last.point.xi(),
                "eta": last.point.mixture_coords(),
                "velocity": last.velocity,
            },
        }));
    let mut warnings = Vec::new();
    if path.truncated {
        warnings.push(format!("geodesic left the coordinate box or the interior at t = {}", last.t));
    }
    Ok(Report { output: Output::Csv { table: Table { header, rows }, summary }, warnings })
}

fn transport(a: &TransportArgs) -> CliResult<Report> {
    let rho = DistributionInput::load(&a.rho)?;
    let sigma = DistributionInput::load(&a.sigma)?;
    let tangent = match a.rep {
        TangentKind::Mixture => ClassicalTangent::mixture(a.tangent.clone())?,
        TangentKind::Score => ClassicalTangent::score(&rho, a.tangent.clone())?,
    };
    let (which, kind, rep) = match a.kind {
        TransportKind::Plus => (Transport::Plus, "plus", "score"),
        TransportKind::Minus => (Transport::Minus, "minus", "mixture"),
    };
    let moved = parallel_transport(&rho, &sigma, &tangent, which)?;
    let body = json!({
        "kind": kind,
        "representation": rep,
        "transported": moved.vec(),
        "squared_norm_before": fisher_metric(&rho, &tangent, &tangent)?,
        "squared_norm_after": fisher_metric(&sigma, &moved, &moved)?,
    });
    Ok(Output::Json(Metadata::new("transport").wrap(body)).into())
}

fn audit(a: &AuditArgs) -> CliResult<Report> {
    let metric = match a.metric {
        MetricKind::Fisher => ContractionMetric::Fisher,
        MetricKind::Gns => ContractionMetric::Gns,
        MetricKind::Bkm => ContractionMetric::Bkm,
    };
    let tol = a.contraction_tol.unwrap_or(CONTRACTION_TOL);
    let r = contraction_sweep(metric, a.dim, a.trials, a.seed)?;
    let mut body = json!({
        "metric": metric.name(),
        "dim": a.dim,
        "trials": r.trials,
        "evaluated": r.ratios.len(),
        "skipped": r.skipped,
        "worst_violation": r.worst_violation,
        "violations": r.violations(tol),
        "contractive": r.is_contractive_within(tol),
        "ratios_histogram": r.ratios_histogram,
        "histogram_bin_width": 0.1,
    });
    if a.ratios {
        body["ratios"] = json!(r.ratios);
    }
    let meta = Metadata::new("audit-monotonicity").seed(a.seed).tolerance(
        "contraction_tol",
        a.contraction_tol,
        CONTRACTION_TOL,
    );
    Ok(Output::Json(meta.wrap(body)).into())
}

fn kubo(a: &KuboArgs) -> CliResult<Report> {
    let h0 = load_hermitian(&a.h0)?;
    let v = load_hermitian(&a.v)?;
    let prob = PerturbationProblem::with_order(h0, v, a.order)?.scaled(a.scale);
    let series = expand_log_z(&prob)?;
    let check = massieu_derivative_check(&prob)?;
    let body = json!({
        "exact": series.exact,
        "terms": series.terms,
        "partials": series.partials,
        "errors": series.errors,
        "diverged": series.diverged,
        "derivatives": {
            "first_residual": check.first,
            "second_residual": check.second,
            "first_derivative": check.first_derivative,
            "second_derivative": check.second_derivative,
            "mean": check.mean,
            "bkm_variance": check.bkm_variance,
        },
        "order": a.order,
        "scale": a.scale,
    });
    let meta = Metadata::new("kubo-expand")
        .tolerance("derivative_step", None, DERIVATIVE_STEP)
        .note("series_convention", SERIES_CONVENTION);
    let summary = meta.wrap(body);
    Ok(match a.format {
        SeriesFormat::Json => Output::Json(summary),
        SeriesFormat::Csv => {
            let header = ["order", "term", "partial", "exact", "error"].map(String::from).to_vec();
            let rows = (0..series.terms.len())
                .map(|k| vec![k as f64, series.terms[k], series.partials[k], series.exact, series.errors[k]])
                .collect();
            Output::Csv { table: Table { header, rows }, summary }
        }
    }
    .into())
}

fn trajectory_table(run: &ProjectionRun, n: usize) -> Table {
    let header = std::iter::once("t".to_string())
        .chain(indexed("xi", n))
        .chain(indexed("eta", n))
        .chain(["entropy".to_string(), "projection_defect".to_string()])
        .collect();
    let rows = run
        .trajectory
        .iter()
        .map(|r| {
            let mut row = vec![r.t];
            row.extend_from_slice(&r.xi);
            row.extend_from_slice(&r.eta);
            row.push(r.entropy);
            row.push(r.projection_defect);
            row
        })
        .collect();
    Table { header, rows }
}

fn run_inputs(a: &ProjectArgs) -> CliResult<(RunInputs, f64, usize)> {
    let (from_file, file_dt, file_steps) = match &a.config {
        Some(path) => {
            let (inputs, dt, steps) = RunConfig::load(path)?;
            (Some(inputs), dt, steps)
        }
        None => (None, None, None),
    };
    let dt = a.dt.or(file_dt).ok_or_else(|| input("give --dt or a \"dt\" entry in the run file"))?;
    let steps = a.steps.or(file_steps).ok_or_else(|| input("give --steps or a \"steps\" entry in the run file"))?;
    let dynamics = match (&a.generator, &a.hamiltonian, &a.channel) {
        (Some(p), _, _) => match DynamicsInput::load(p)? {
            d @ Dynamics::Classical(_) => Some(d),
            Dynamics::Quantum(_) => return Err(input(format!("{}: --generator takes classical rates", p.display()))),
        },
        (_, Some(p), _) => Some(Dynamics::Quantum(QuantumStepMap::Hamiltonian(load_hermitian(p)?))),
        (_, _, Some(p)) => match DynamicsInput::load(p)? {
            d @ Dynamics::Quantum(QuantumStepMap::Channel(_)) => Some(d),
            _ => return Err(input(format!("{}: --channel takes {{\"kraus\": [..]}}", p.display()))),
        },
        _ => None,
    };
    let dynamics = match (dynamics, &from_file) {
        (Some(d), _) => d,
        (None, Some(RunInputs::Classical { generator, .. })) => Dynamics::Classical(generator.clone()),
        (None, Some(RunInputs::Quantum { step, .. })) => Dynamics::Quantum(step.clone()),
        (None, None) => return Err(input("give --config or one of --generator, --hamiltonian and --channel")),
    };
    let base = from_file;
    let inputs = match dynamics {
        Dynamics::Classical(generator) => {
            let (family, initial) = match base {
                Some(RunInputs::Classical { family, initial, .. }) => (Some(family), Some(initial)),
                _ => (None, None),
            };
            RunInputs::Classical {
                generator,
                family: match (&a.family, family) {
                    (Some(p), _) => ClassicalFamilyFile::load(p)?.0,
                    (None, Some(f)) => f,
                    (None, None) => return Err(input("--family is required")),
                },
                initial: match (&a.initial, initial) {
                    (Some(p), _) => DistributionInput::load(p)?,
                    (None, Some(i)) => i,
                    (None, None) => return Err(input("--initial is required")),
                },
            }
        }
        Dynamics::Quantum(step) => {
            let (family, initial) = match base {
                Some(RunInputs::Quantum { family, initial, .. }) => (Some(family), Some(initial)),
                _ => (None, None),
            };
            RunInputs::Quantum {
                step,
                family: match (&a.family, family) {
                    (Some(p), _) => QuantumFamilyFile::load(p)?,
                    (None, Some(f)) => f,
                    (None, None) => return Err(input("--family is required")),
                },
                initial: match (&a.initial, initial) {
                    (Some(p), _) => StateInput::load(p, false)?,
                    (None, Some(i)) => i,
                    (None, None) => return Err(input("--initial is required")),
                },
            }
        }
    };
    Ok((inputs, dt, steps))
}

fn project(a: &ProjectArgs) -> CliResult<Report> {
    let tol = a.tol.unwrap_or(PROJECTION_TOL);
    let (inputs, dt, steps) = run_inputs(a)?;
    let (run, n) = match inputs {
        RunInputs::Classical { generator, family, initial } => {
            (roll_with_tol(&initial, &generator, &family, dt, steps, tol)?, family.dim())
        }
        RunInputs::Quantum { step, family, initial } => {
            (roll_quantum_with_tol(&initial, &step, &family, dt, steps, tol)?, family.num_features())
        }
    };
    let production = entropy_production(&run);
    let last = run.last();
    let truncated = run.truncated.as_ref().map(|t| json!({ "step": t.step, "reason": t.reason }));
    let summary = Metadata::new("project-simulate")
        .tolerance("projection_tol", a.tol, PROJECTION_TOL)
        .tolerance("entropy_series_tol", None, ENTROPY_SERIES_TOL)
        .note("projection_kind", PROJECTION_KIND)
        .wrap(json!({
            "dt": run.dt,
            "steps": run.steps,
            "records": run.trajectory.len(),
            "complete": run.is_complete(),
            "truncated": truncated,
            "entropy_non_decreasing": production.is_non_decreasing(ENTROPY_SERIES_TOL),
            "final": { "t": last.t, "xi": last.xi, "eta": last.eta, "entropy": last.entropy },
        }));
    let mut warnings = Vec::new();
    if let Some(t) = &run.truncated {
        warnings.push(format!("run truncated at step {}: {}", t.step, t.reason));
    }
    Ok(Report { output: Output::Csv { table: trajectory_table(&run, n), summary }, warnings })
}

fn entropy_bound(a: &EntropyBoundArgs) -> CliResult<Report> {
    let rho = StateInput::load(&a.rho, a.allow_boundary)?;
    let sigma = StateInput::load(&a.sigma, a.allow_boundary)?;
    let b = mixture_entropy_bound(&rho, &sigma, a.lambda)?;
    let body = json!({
        "lambda": a.lambda,
        "mixture_entropy": b.lhs,
        "bound": b.rhs,
        "slack": b.slack,
        "binary_entropy": binary_entropy(a.lambda),
    });
    Ok(Output::Json(Metadata::new("entropy-bound").wrap(body)).into())
}

fn sample_cmd(a: &SampleArgs) -> CliResult<Report> {
    let (family, rho) = match (&a.distribution, &a.family, &a.xi) {
        (Some(path), None, None) => (None, DistributionInput::load(path)?),
        (None, Some(path), xi) => {
            let (family, file_xi) = ClassicalFamilyFile::load(path)?;
            let xi = xi.clone().or(file_xi).ok_or_else(|| input("give --xi or an \"xi\" entry in the family file"))?;
            let rho = family.point(&xi)?.distribution()?;
            (Some(family), rho)
        }
        _ => return Err(input("give either --distribution or --family with --xi")),
    };
    let hist = sample(&rho, a.count, a.seed)?;
    let empirical = empirical_distribution(&hist)?;
    let mut body = json!({
        "count": a.count,
        "histogram": hist,
        "empirical": empirical.distribution.probs(),
        "smoothing": empirical.smoothing,
    });
    if let Some(family) = family {
        let est = estimate_from_data(&family, &hist)?;
        body["estimate"] = json!({ "xi": est.xi(), "eta": est.mixture_coords() });
    }
    Ok(Output::Json(Metadata::new("sample").seed(a.seed).wrap(body)).into())
}
