use std::fmt;
use std::path::Path;

use entdist::certificate::{
    build_certificate_for, certificate_parts, check_swap_transpose_identity,
    upsilon_spectrum_check, verify_dual_feasibility, FeasibilityReport, PartsReport, UpsilonReport,
};
use entdist::measures::{fef as fef_of, fef_pure, negativity};
use entdist::protocol::{
    default_completion, incomplete_bounds, protocol_success, sample_protocol,
    simulate_teleportation, teleport_residuals, CompletionStates, IncompleteBounds, SamplingReport,
    Strategy,
};
use entdist::random::{random_complex_matrix, random_spectrum, seeded_rng};
use entdist::sdp::{sandwich_report, solve_primal_ppt, SdpProblem, SdpSummary, TracePoint};
use entdist::states::{
    build_ensemble, max_ent_state, resource_state, validate_basis, BasisFile, BasisReport,
    MaxEntBasis, ResourceSpectrum,
};
use entdist::{ComplexMatrix, SubsystemLayout};
use serde::Serialize;

use crate::config::{CommonArgs, RunConfig};
use crate::output::{cell, emit, Table};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or input files; exit code 2.
    Input(String),
    /// A numerical routine failed outright; exit code 1.
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numeric(_) => 1,
            CliError::Input(_) | CliError::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "output error: {m}"),
        }
    }
}

impl From<entdist::Error> for CliError {
    fn from(e: entdist::Error) -> Self {
        use entdist::Error as E;
        match e {
            E::Invariant(_) | E::InfeasibleCertificate(_) | E::NotHermitian { .. } => {
                CliError::Numeric(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

/// `Ok(passed)`; a failed check maps to exit code 1.
type CmdResult = Result<bool, CliError>;

fn finish<T: Serialize>(args: &CommonArgs, report: &T, table: &Table, passed: bool) -> CmdResult {
    emit(report, table, args.csv, args.out.as_deref())?;
    Ok(passed)
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

#[derive(Serialize)]
struct FefReport {
    dim: usize,
    coeffs: Vec<f64>,
    weights: Vec<f64>,
    fef: f64,
    negativity: f64,
    /// (1 + 2·negativity)/d.
    relation_value: f64,
    relation_defect: f64,
    passed: bool,
}

#[derive(Serialize)]
struct SweepPoint {
    weights: Vec<f64>,
    negativity: f64,
    fef: f64,
    protocol: f64,
    certificate: f64,
}

#[derive(Serialize)]
struct SweepReport {
    dim: usize,
    basis: String,
    seed: u64,
    points: Vec<SweepPoint>,
    passed: bool,
}

fn sweep_spectra(d: usize, points: usize, seed: u64) -> Result<Vec<ResourceSpectrum>, CliError> {
    if points == 0 {
        return Err(CliError::Input("--sweep needs at least one point".into()));
    }
    if d == 2 {
        (0..points)
            .map(|k| {
                let t = if points == 1 {
                    0.0
                } else {
                    k as f64 / (points - 1) as f64
                };
                let w = 0.5 + 0.5 * t;
                Ok(ResourceSpectrum::from_weights(&[w, 1.0 - w])?)
            })
            .collect()
    } else {
        let mut rng = seeded_rng(seed);
        Ok((0..points).map(|_| random_spectrum(d, &mut rng)).collect())
    }
}

pub fn fef(args: &CommonArgs, sweep: Option<usize>) -> CmdResult {
    let cfg = RunConfig::resolve(args)?;
    let d = cfg.dim();
    if let Some(points) = sweep {
        let mut table = Table::new(&["weights", "negativity", "fef", "protocol", "certificate"]);
        let mut out = Vec::new();
        let mut passed = true;
        for spec in sweep_spectra(d, points, cfg.seed)? {
            let f = fef_of(&spec);
            let p = protocol_success(&cfg.basis, &spec)?.success;
            let c = build_certificate_for(&cfg.basis, &spec, d * d)?.trace_value;
            passed &= (p - f).abs() <= 1e-10 && (c - f).abs() <= 1e-12;
            let point = SweepPoint {
                weights: spec.weights(),
                negativity: negativity(&spec),
                fef: f,
                protocol: p,
                certificate: c,
            };
            table.push(vec![
                join(&point.weights),
                cell(point.negativity),
                cell(point.fef),
                cell(point.protocol),
                cell(point.certificate),
            ]);
            out.push(point);
        }
        let report = SweepReport {
            dim: d,
            basis: cfg.basis_source.clone(),
            seed: cfg.seed,
            points: out,
            passed,
        };
        return finish(args, &report, &table, passed);
    }
    let spec = cfg.require_spectrum()?;
    let f = fef_of(spec);
    let n = negativity(spec);
    let relation_value = (1.0 + 2.0 * n) / d as f64;
    let relation_defect = (relation_value - f).abs();
    let report = FefReport {
        dim: d,
        coeffs: spec.coeffs().to_vec(),
        weights: spec.weights(),
        fef: f,
        negativity: n,
        relation_value,
        relation_defect,
        passed: relation_defect <= 1e-12,
    };
    let mut table = Table::new(&["dim", "weights", "fef", "negativity", "relation_defect"]);
    table.push(vec![
        cell(d),
        join(&report.weights),
        cell(f),
        cell(n),
        cell(relation_defect),
    ]);
    finish(args, &report, &table, report.passed)
}

#[derive(Serialize)]
struct BasisCmdReport {
    source: String,
    #[serde(flatten)]
    report: BasisReport,
}

pub fn basis(args: &CommonArgs, export: Option<&Path>) -> CmdResult {
    let cfg = RunConfig::resolve(args)?;
    let report = validate_basis(cfg.basis.unitaries())?;
    if let Some(path) = export {
        let text = BasisFile::from_basis(&cfg.basis).to_json()?;
        std::fs::write(path, text + "\n")
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    let mut table = Table::new(&[
        "dim",
        "count",
        "complete",
        "max_unitarity_defect",
        "max_orthogonality_defect",
        "accepted",
    ]);
    table.push(vec![
        cell(report.dim),
        cell(report.count),
        cell(report.complete),
        cell(report.max_unitarity_defect),
        cell(report.max_orthogonality_defect),
        cell(report.accepted),
    ]);
    let passed = report.accepted;
    let out = BasisCmdReport {
        source: cfg.basis_source,
        report,
    };
    finish(args, &out, &table, passed)
}

#[derive(Serialize)]
struct ProtocolCmdReport {
    dim: usize,
    basis: String,
    fef: f64,
    success: f64,
    terms: Vec<f64>,
    max_term_deviation: f64,
    gram_cross_check: f64,
    simulated_success: f64,
    simulated_per_state: Vec<f64>,
    sampling: Option<SamplingReport>,
    passed: bool,
}

/// Shots from which the sampled frequency is expected within 1e-2.
const SAMPLING_CHECK_SHOTS: usize = 100_000;

pub fn protocol(args: &CommonArgs, shots: Option<usize>) -> CmdResult {
    let cfg = RunConfig::resolve(args)?;
    let spec = cfg.require_spectrum()?;
    let d = cfg.dim();
    if cfg.n_states != d * d {
        return Err(CliError::Input(
            "the protocol command needs the complete basis; use `bounds` for --n-states < d²"
                .into(),
        ));
    }
    let exact = protocol_success(&cfg.basis, spec)?;
    let residuals = teleport_residuals(&cfg.basis, spec, d * d)?;
    let run = simulate_teleportation(&cfg.basis, spec, d * d)?;
    let sampling = shots.map(|s| sample_protocol(&run, s, &mut seeded_rng(cfg.seed)));
    let f = exact.fef;
    let mut passed = (exact.success - f).abs() <= 1e-10
        && exact.max_term_deviation <= 1e-10
        && (run.success - f).abs() <= 1e-10
        && residuals.cross_check <= 1e-12;
    if let Some(s) = &sampling {
        if s.shots >= SAMPLING_CHECK_SHOTS {
            passed &= (s.frequency - s.exact).abs() <= 1e-2;
        }
    }
    let mut table = Table::new(&["state", "term", "simulated"]);
    for (i, (t, s)) in exact.terms.iter().zip(&run.per_state).enumerate() {
        table.push(vec![cell(i), cell(t), cell(s)]);
    }
    let report = ProtocolCmdReport {
        dim: d,
        basis: cfg.basis_source.clone(),
        fef: f,
        success: exact.success,
        terms: exact.terms,
        max_term_deviation: exact.max_term_deviation,
        gram_cross_check: residuals.cross_check,
        simulated_success: run.success,
        simulated_per_state: run.per_state,
        sampling,
        passed,
    };
    finish(args, &report, &table, passed)
}

#[derive(Serialize)]
struct CertificateCmdReport {
    dim: usize,
    n_states: usize,
    basis: String,
    fef: f64,
    trace_value: f64,
    expected_trace: f64,
    feasibility: FeasibilityReport,
    upsilon: UpsilonReport,
    parts: PartsReport,
    /// Swap/transpose identity residual on the standard state and the resource.
    identity_residual: f64,
    passed: bool,
}

pub fn certificate(args: &CommonArgs) -> CmdResult {
    let cfg = RunConfig::resolve(args)?;
    let spec = cfg.require_spectrum()?;
    let (d, n) = (cfg.dim(), cfg.n_states);
    let cert = build_certificate_for(&cfg.basis, spec, n)?;
    let ens = build_ensemble(&cfg.basis, spec, n)?;
    let feasibility = verify_dual_feasibility(&cert, &ens, cfg.tol)?;
    let upsilon = upsilon_spectrum_check(&cfg.basis, 1e-10)?;
    let parts = certificate_parts(&cfg.basis, spec)?.report(spec)?;
    let psi1 = ComplexMatrix::projector(&max_ent_state(&ComplexMatrix::identity(d))?);
    let tau = ComplexMatrix::projector(&resource_state(spec));
    let identity_residual = check_swap_transpose_identity(&psi1, &tau)?;
    let f = fef_of(spec);
    let expected_trace = (d * d) as f64 / n as f64 * f;
    let passed = feasibility.passed
        && feasibility.max_decomposition_residual < 1e-12
        && upsilon.passed
        && (cert.trace_value - expected_trace).abs() <= 1e-12
        && parts.completeness_residual < 1e-12
        && parts.transpose_tau_residual < 1e-12
        && parts.gamma_min_eigenvalue >= -1e-12
        && identity_residual < 1e-12;
    let mut table = Table::new(&[
        "k",
        "lambda_min",
        "decomposition_residual",
        "upsilon_defect",
    ]);
    for m in &feasibility.members {
        let u = &upsilon.members[m.k];
        table.push(vec![
            cell(m.k),
            cell(m.lambda_min),
            cell(m.decomposition_residual),
            cell(u.spectrum_defect.max(u.complement_defect)),
        ]);
    }
    let report = CertificateCmdReport {
        dim: d,
        n_states: n,
        basis: cfg.basis_source.clone(),
        fef: f,
        trace_value: cert.trace_value,
        expected_trace,
        feasibility,
        upsilon,
        parts,
        identity_residual,
        passed,
    };
    finish(args, &report, &table, passed)
}

#[derive(Serialize)]
struct SdpCmdReport {
    dim: usize,
    n_states: usize,
    basis: String,
    fef: f64,
    result: SdpSummary,
    step: f64,
    trace: Vec<TracePoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    operators: Option<Vec<ComplexMatrix>>,
}

pub fn sdp(args: &CommonArgs, with_operators: bool) -> CmdResult {
    let cfg = RunConfig::resolve(args)?;
    let spec = cfg.require_spectrum()?;
    let ens = build_ensemble(&cfg.basis, spec, cfg.n_states)?;
    let result = solve_primal_ppt(&SdpProblem::from_ensemble(&ens)?, &cfg.solver)?;
    let mut table = Table::new(&["iteration", "objective", "splitting_gap"]);
    for t in &result.trace {
        table.push(vec![
            cell(t.iteration),
            cell(t.objective),
            cell(t.splitting_gap),
        ]);
    }
    let passed = result.converged;
    let report = SdpCmdReport {
        dim: cfg.dim(),
        n_states: cfg.n_states,
        basis: cfg.basis_source.clone(),
        fef: fef_of(spec),
        result: SdpSummary::from(&result),
        step: result.step,
        trace: result.trace.clone(),
        operators: with_operators.then_some(result.operators),
    };
    finish(args, &report, &table, passed)
}

#[derive(Serialize)]
struct BoundsCmdReport {
    dim: usize,
    n_states: usize,
    basis: String,
    fef: f64,
    selected: IncompleteBounds,
    alternative: IncompleteBounds,
    /// Strategy with the larger lower bound, or "equal".
    better: &'static str,
    certificate_bound: f64,
    certificate_feasible: bool,
    passed: bool,
}

fn completion_for(basis: &MaxEntBasis, n: usize) -> Result<CompletionStates, CliError> {
    if n == basis.len() {
        Ok(CompletionStates::new(Vec::new(), basis, n)?)
    } else {
        Ok(default_completion(basis, n)?)
    }
}

pub fn bounds(args: &CommonArgs) -> CmdResult {
    let cfg = RunConfig::resolve(args)?;
    let spec = cfg.require_spectrum()?;
    let (d, n) = (cfg.dim(), cfg.n_states);
    let completion = completion_for(&cfg.basis, n)?;
    let other = match cfg.strategy {
        Strategy::Completion => Strategy::Projector,
        Strategy::Projector => Strategy::Completion,
    };
    let selected = incomplete_bounds(&cfg.basis, spec, n, &completion, cfg.strategy)?;
    let alternative = incomplete_bounds(&cfg.basis, spec, n, &completion, other)?;
    if !selected.in_regime {
        eprintln!("entdist: warning: N = {n} is below d + 1 = {}", d + 1);
    }
    let name = |s: Strategy| match s {
        Strategy::Completion => "completion",
        Strategy::Projector => "projector",
    };
    let better = if (selected.lower - alternative.lower).abs() <= 1e-12 {
        "equal"
    } else if selected.lower > alternative.lower {
        name(selected.strategy)
    } else {
        name(alternative.strategy)
    };
    let cert = build_certificate_for(&cfg.basis, spec, n)?;
    let ens = build_ensemble(&cfg.basis, spec, n)?;
    let feasible = verify_dual_feasibility(&cert, &ens, cfg.tol)?.passed;
    let f = fef_of(spec);
    let passed = feasible
        && [&selected, &alternative]
            .iter()
            .all(|b| f <= b.lower + 1e-12 && b.lower <= b.upper + 1e-10 && b.upper <= 1.0);
    let mut table = Table::new(&["strategy", "fef", "lower", "upper"]);
    for b in [&selected, &alternative] {
        table.push(vec![
            name(b.strategy).into(),
            cell(f),
            cell(b.lower),
            cell(b.upper),
        ]);
    }
    let report = BoundsCmdReport {
        dim: d,
        n_states: n,
        basis: cfg.basis_source.clone(),
        fef: f,
        selected,
        alternative,
        better,
        certificate_bound: cert.trace_value,
        certificate_feasible: feasible,
        passed,
    };
    finish(args, &report, &table, passed)
}

pub fn sandwich(args: &CommonArgs) -> CmdResult {
    let cfg = RunConfig::resolve(args)?;
    let spec = cfg.require_spectrum()?;
    let r = sandwich_report(&cfg.basis, spec, cfg.n_states, &cfg.solver, cfg.strategy)?;
    let mut table = Table::new(&["dim", "n_states", "fef", "lower", "sdp", "upper", "passed"]);
    table.push(vec![
        cell(r.dim),
        cell(r.n_states),
        cell(r.fef),
        cell(r.lower),
        cell(r.sdp.value),
        cell(r.upper),
        cell(r.passed),
    ]);
    let passed = r.passed;
    finish(args, &r, &table, passed)
}

#[derive(Serialize)]
struct Suite {
    name: &'static str,
    checks: usize,
    /// Largest deviation seen, in the suite's own units.
    worst: f64,
    passed: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    dim: usize,
    basis: String,
    spectra: Vec<Vec<f64>>,
    suites: Vec<Suite>,
    passed: bool,
}

struct SuiteBuilder {
    name: &'static str,
    checks: usize,
    worst: f64,
    passed: bool,
}

impl SuiteBuilder {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checks: 0,
            worst: 0.0,
            passed: true,
        }
    }

    /// Records a deviation that must not exceed `limit`.
    fn within(&mut self, deviation: f64, limit: f64) {
        self.checks += 1;
        self.worst = self.worst.max(deviation);
        self.passed &= deviation <= limit;
    }

    fn holds(&mut self, ok: bool) {
        self.checks += 1;
        self.passed &= ok;
    }

    fn done(self) -> Suite {
        Suite {
            name: self.name,
            checks: self.checks,
            worst: self.worst,
            passed: self.passed,
        }
    }
}

pub fn verify(args: &CommonArgs) -> CmdResult {
    let cfg = RunConfig::resolve(args)?;
    let d = cfg.dim();
    let d2 = d * d;
    let basis = &cfg.basis;
    let spectra: Vec<ResourceSpectrum> = match &cfg.spectrum {
        Some(s) => vec![s.clone()],
        None => {
            let mut rng = seeded_rng(cfg.seed);
            let mut v = vec![ResourceSpectrum::product(d)?, ResourceSpectrum::uniform(d)?];
            v.extend((0..3).map(|_| random_spectrum(d, &mut rng)));
            v
        }
    };
    let bipartite = SubsystemLayout::bipartite(d, d)?;

    let mut suites = Vec::new();

    let report = validate_basis(basis.unitaries())?;
    let mut s = SuiteBuilder::new("basis");
    s.within(
        report
            .max_unitarity_defect
            .max(report.max_orthogonality_defect),
        1e-10,
    );
    s.holds(report.accepted && report.complete);
    suites.push(s.done());

    let mut s = SuiteBuilder::new("measures");
    for spec in &spectra {
        let f = fef_of(spec);
        s.within((f - (1.0 + 2.0 * negativity(spec)) / d as f64).abs(), 1e-12);
        s.within(
            (fef_pure(&resource_state(spec), &bipartite)? - f).abs(),
            1e-10,
        );
        s.holds(f >= 1.0 / d as f64 - 1e-12 && f <= 1.0 + 1e-12);
    }
    suites.push(s.done());

    let ups = upsilon_spectrum_check(basis, 1e-10)?;
    let mut s = SuiteBuilder::new("upsilon");
    s.within(ups.max_defect, 1e-10);
    suites.push(s.done());

    let mut parts_suite = SuiteBuilder::new("certificate parts");
    let mut cert_suite = SuiteBuilder::new("certificate");
    for (idx, spec) in spectra.iter().enumerate() {
        let parts = certificate_parts(basis, spec)?.report(spec)?;
        parts_suite.within(parts.completeness_residual, 1e-12);
        parts_suite.within(parts.transpose_tau_residual, 1e-12);
        parts_suite.within((-parts.gamma_min_eigenvalue).max(0.0), 1e-12);

        let sizes: Vec<usize> = if idx == 0 {
            (d + 1..=d2).collect()
        } else {
            vec![d2]
        };
        for n in sizes {
            let cert = build_certificate_for(basis, spec, n)?;
            let ens = build_ensemble(basis, spec, n)?;
            let r = verify_dual_feasibility(&cert, &ens, cfg.tol)?;
            cert_suite.holds(r.passed);
            cert_suite.within(r.max_decomposition_residual, 1e-12);
            cert_suite.within(
                (cert.trace_value - d2 as f64 / n as f64 * fef_of(spec)).abs(),
                1e-12,
            );
        }
    }
    suites.push(parts_suite.done());
    suites.push(cert_suite.done());

    let mut s = SuiteBuilder::new("protocol");
    for spec in &spectra {
        let f = fef_of(spec);
        let p = protocol_success(basis, spec)?;
        s.within((p.success - f).abs(), 1e-10);
        s.within(p.max_term_deviation, 1e-10);
        s.within(teleport_residuals(basis, spec, d2)?.cross_check, 1e-12);
        s.within(
            (simulate_teleportation(basis, spec, d2)?.success - f).abs(),
            1e-10,
        );
    }
    suites.push(s.done());

    let mut s = SuiteBuilder::new("incomplete bounds");
    for spec in &spectra {
        let f = fef_of(spec);
        for n in d + 1..d2 {
            let completion = default_completion(basis, n)?;
            for strategy in [Strategy::Completion, Strategy::Projector] {
                let b = incomplete_bounds(basis, spec, n, &completion, strategy)?;
                s.holds(f <= b.lower + 1e-12 && b.lower <= b.upper + 1e-10 && b.upper <= 1.0);
            }
        }
    }
    suites.push(s.done());

    let mut s = SuiteBuilder::new("swap-transpose identity");
    let mut rng = seeded_rng(cfg.seed);
    for _ in 0..100 {
        let l = random_complex_matrix(d2, d2, &mut rng);
        let x = random_complex_matrix(d2, d2, &mut rng);
        s.within(check_swap_transpose_identity(&l, &x)?, 1e-12);
    }
    suites.push(s.done());

    let passed = suites.iter().all(|s| s.passed);
    let mut table = Table::new(&["suite", "checks", "worst", "passed"]);
    for s in &suites {
        table.push(vec![
            s.name.into(),
            cell(s.checks),
            cell(s.worst),
            cell(s.passed),
        ]);
    }
    let report = VerifyReport {
        dim: d,
        basis: cfg.basis_source.clone(),
        spectra: spectra.iter().map(|s| s.coeffs().to_vec()).collect(),
        suites,
        passed,
    };
    finish(args, &report, &table, passed)
}
