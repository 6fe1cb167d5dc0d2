//! PPT-constrained discrimination SDP.
//!
//! Primal: maximize Σ_i p_i Tr(ρ_i P_i) subject to Σ_i P_i = 1, P_i ⪰ 0 and
//! T_A(P_i) ⪰ 0. Solved by ADMM on the splitting X = Y (PSD copy) and
//! X = Z (PPT copy), with X confined to the affine set Σ X_i = 1.
//!
//! Every run yields a certified interval: a feasible lower bound obtained by
//! mixing the final iterate with the identity, and an upper bound from the
//! scaled dual variables repaired into a dual-feasible operator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::{
    build_certificate_for, verify_dual_feasibility, DualCertificate, DEFAULT_FEASIBILITY_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::{
    min_eigenvalue_unchecked, partial_transpose, psd_project_unchecked, ComplexMatrix,
    SubsystemLayout,
};
use crate::measures::fef;
use crate::protocol::{default_completion, incomplete_bounds, protocol_success, Strategy};
use crate::states::{build_ensemble, Ensemble, MaxEntBasis, ResourceSpectrum};

/// Tolerance on the trace and positivity of input density operators.
pub const STATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdpProblem {
    states: Vec<ComplexMatrix>,
    priors: Vec<f64>,
    layout: SubsystemLayout,
}

impl SdpProblem {
    pub fn new(
        states: Vec<ComplexMatrix>,
        priors: Vec<f64>,
        layout: SubsystemLayout,
    ) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidProblem("no states".into()));
        }
        if states.len() != priors.len() {
            return Err(Error::InvalidProblem(format!(
                "{} states but {} priors",
                states.len(),
                priors.len()
            )));
        }
        if priors.iter().any(|p| !p.is_finite() || *p < 0.0)
            || (priors.iter().sum::<f64>() - 1.0).abs() > STATE_TOL
        {
            return Err(Error::InvalidProblem(
                "priors must be a probability vector".into(),
            ));
        }
        let n = layout.total_dim();
        for (k, rho) in states.iter().enumerate() {
            if rho.rows() != n || rho.cols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: rho.rows(),
                });
            }
            if !rho.is_hermitian() {
                return Err(Error::InvalidProblem(format!(
                    "state {} is not Hermitian",
                    k + 1
                )));
            }
            let tr = rho.trace();
            if (tr.re - 1.0).abs() > STATE_TOL || min_eigenvalue_unchecked(rho) < -STATE_TOL {
                return Err(Error::InvalidProblem(format!(
                    "state {} is not a density operator",
                    k + 1
                )));
            }
        }
        Ok(Self {
            states,
            priors,
            layout,
        })
    }

    pub fn from_ensemble(ens: &Ensemble) -> Result<Self> {
        Self::new(ens.densities(), ens.priors().to_vec(), ens.layout().clone())
    }

    pub fn states(&self) -> &[ComplexMatrix] {
        &self.states
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Same problem with every state conjugated by `u`.
    pub fn conjugated(&self, u: &ComplexMatrix) -> Result<Self> {
        let ud = u.adjoint();
        let states = self
            .states
            .iter()
            .map(|r| u.matmul(r).matmul(&ud).hermitian_part())
            .collect();
        Self::new(states, self.priors.clone(), self.layout.clone())
    }

    fn party_a(&self) -> Vec<usize> {
        self.layout.party_a()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stopping threshold on the residuals and on the relative objective
    /// change over one check interval.
    pub accuracy: f64,
    pub max_iterations: usize,
    /// ADMM penalty. When absent it is set from the problem size.
    pub step: Option<f64>,
    /// Over-relaxation factor in (0, 2).
    pub relaxation: f64,
    /// Iterations between convergence checks.
    pub check_interval: usize,
    /// Iterations between trace records; 0 disables the trace.
    pub trace_interval: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            accuracy: 1e-4,
            max_iterations: 50_000,
            step: None,
            relaxation: 1.6,
            check_interval: 50,
            trace_interval: 100,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if !(self.accuracy > 0.0 && self.accuracy.is_finite()) {
            return Err(Error::InvalidProblem("accuracy must be positive".into()));
        }
        if self.max_iterations == 0 || self.check_interval == 0 {
            return Err(Error::InvalidProblem(
                "iteration counts must be positive".into(),
            ));
        }
        if let Some(s) = self.step {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidProblem("step must be positive".into()));
            }
        }
        if !(self.relaxation > 0.0 && self.relaxation < 2.0) {
            return Err(Error::InvalidProblem(
                "relaxation must lie in (0, 2)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub objective: f64,
    /// max(‖X − Y‖_F, ‖X − Z‖_F) over operators, the splitting gap.
    pub splitting_gap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdpResult {
    /// Objective at the returned operators.
    pub primal_value: f64,
    pub operators: Vec<ComplexMatrix>,
    /// ‖Σ P_i − 1‖_F.
    pub primal_residual: f64,
    /// min(0, smallest eigenvalue over all P_i and T_A(P_i)).
    pub cone_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective of the operators mixed with the identity until feasible.
    pub feasible_lower_bound: f64,
    /// Trace of a dual-feasible operator built from the final dual iterate.
    pub dual_upper_bound: f64,
    pub step: f64,
    pub trace: Vec<TracePoint>,
}

fn objective(costs: &[ComplexMatrix], xs: &[ComplexMatrix]) -> f64 {
    costs
        .iter()
        .zip(xs)
        .map(|(c, x)| c.trace_product_re(x))
        .sum()
}

fn sum_of(ms: &[ComplexMatrix]) -> ComplexMatrix {
    let mut s = ms[0].clone();
    for m in &ms[1..] {
        s += m;
    }
    s
}

fn ppt_project(m: &ComplexMatrix, layout: &SubsystemLayout, party: &[usize]) -> ComplexMatrix {
    let t = partial_transpose(m, layout, party).expect("layout checked");
    partial_transpose(&psd_project_unchecked(&t), layout, party).expect("layout checked")
}

/// min(0, λ_min) over every X_i and T_A(X_i).
fn cone_residual(xs: &[ComplexMatrix], layout: &SubsystemLayout, party: &[usize]) -> f64 {
    xs.par_iter()
        .map(|x| {
            let t = partial_transpose(x, layout, party).expect("layout checked");
            min_eigenvalue_unchecked(x).min(min_eigenvalue_unchecked(&t))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::min)
}

struct State {
    x: Vec<ComplexMatrix>,
    y: Vec<ComplexMatrix>,
    z: Vec<ComplexMatrix>,
    u: Vec<ComplexMatrix>,
    v: Vec<ComplexMatrix>,
}

/// Runs ADMM on the PPT discrimination SDP. Deterministic: the same problem
/// and options produce bit-identical results for any thread count.
pub fn solve_primal_ppt(problem: &SdpProblem, options: &SolverOptions) -> Result<SdpResult> {
    options.validate()?;
    let n = problem.len();
    let dim = problem.layout.total_dim();
    let layout = &problem.layout;
    let party = problem.party_a();
    let costs: Vec<ComplexMatrix> = problem
        .states
        .iter()
        .zip(&problem.priors)
        .map(|(r, &p)| r.scale(p))
        .collect();
    let step = options.step.unwrap_or(default_step(n, dim));
    let alpha = options.relaxation;
    let identity = ComplexMatrix::identity(dim);

    let start = identity.scale(1.0 / n as f64);
    let zero = ComplexMatrix::zeros(dim, dim);
    let mut s = State {
        x: vec![start.clone(); n],
        y: vec![start.clone(); n],
        z: vec![start; n],
        u: vec![zero.clone(); n],
        v: vec![zero; n],
    };

    let mut trace = Vec::new();
    let mut last_objective = objective(&costs, &s.x);
    let mut iterations = 0;
    let mut converged = false;
    let mut cone_res = 0.0;
    let mut primal_res = 0.0;

    while iterations < options.max_iterations {
        iterations += 1;

        // unconstrained minimizer per operator, then projection onto Σ X = 1
        let mut xt: Vec<ComplexMatrix> = (0..n)
            .map(|i| {
                let mut m = &s.y[i] - &s.u[i];
                m += &s.z[i];
                m -= &s.v[i];
                let mut m = m.scale(0.5);
                m.axpy(0.5 / step, &costs[i]);
                m
            })
            .collect();
        let mut excess = sum_of(&xt);
        excess -= &identity;
        let excess = excess.scale(1.0 / n as f64);
        for m in &mut xt {
            *m -= &excess;
        }
        s.x = xt;

        let updates: Vec<(ComplexMatrix, ComplexMatrix, ComplexMatrix, ComplexMatrix)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut xy = s.x[i].scale(alpha);
                xy.axpy(1.0 - alpha, &s.y[i]);
                let mut xz = s.x[i].scale(alpha);
                xz.axpy(1.0 - alpha, &s.z[i]);
                let y = psd_project_unchecked(&(&xy + &s.u[i]));
                let z = ppt_project(&(&xz + &s.v[i]), layout, &party);
                let mut u = &s.u[i] + &xy;
                u -= &y;
                let mut v = &s.v[i] + &xz;
                v -= &z;
                (y, z, u, v)
            })
            .collect();
        for (i, (y, z, u, v)) in updates.into_iter().enumerate() {
            s.y[i] = y;
            s.z[i] = z;
            s.u[i] = u;
            s.v[i] = v;
        }

        let trace_due = options.trace_interval > 0 && iterations % options.trace_interval == 0;
        let check_due = iterations % options.check_interval == 0;
        if trace_due {
            trace.push(TracePoint {
                iteration: iterations,
                objective: objective(&costs, &s.x),
                splitting_gap: splitting_gap(&s),
            });
        }
        if check_due {
            let obj = objective(&costs, &s.x);
            let change = (obj - last_objective).abs() / obj.abs().max(f64::MIN_POSITIVE);
            last_objective = obj;
            let mut total = sum_of(&s.x);
            total -= &identity;
            primal_res = total.frobenius_norm();
            cone_res = cone_residual(&s.x, layout, &party);
            if primal_res.max(-cone_res).max(change) < options.accuracy {
                converged = true;
                break;
            }
        }
    }

    if !converged || iterations % options.check_interval != 0 {
        let mut total = sum_of(&s.x);
        total -= &identity;
        primal_res = total.frobenius_norm();
        cone_res = cone_residual(&s.x, layout, &party);
    }
    let primal_value = objective(&costs, &s.x);
    let lambda = -cone_res;
    let feasible_lower_bound = (primal_value + lambda) / (1.0 + n as f64 * lambda);
    let dual_upper_bound = dual_bound_from_iterate(&costs, &s, step, layout, &party);

    Ok(SdpResult {
        primal_value,
        operators: s.x,
        primal_residual: primal_res,
        cone_residual: cone_res,
        iterations,
        converged,
        feasible_lower_bound,
        dual_upper_bound,
        step,
        trace,
    })
}

fn default_step(n: usize, dim: usize) -> f64 {
    n as f64 / dim as f64
}

fn splitting_gap(s: &State) -> f64 {
    (0..s.x.len())
        .map(|i| s.x[i].distance(&s.y[i]).max(s.x[i].distance(&s.z[i])))
        .fold(0.0, f64::max)
}

/// Dual problem: minimize Tr H subject to H − C_i = S_i + K_i with S_i ⪰ 0
/// and T_A(K_i) ⪰ 0. The ADMM duals give S_i ≈ −step·U_i, K_i ≈ −step·V_i;
/// after projecting those onto their cones and averaging H, any remaining
/// violation is absorbed by adding a multiple of the identity.
fn dual_bound_from_iterate(
    costs: &[ComplexMatrix],
    s: &State,
    step: f64,
    layout: &SubsystemLayout,
    party: &[usize],
) -> f64 {
    let n = costs.len();
    let dim = layout.total_dim();
    let hs: Vec<ComplexMatrix> = (0..n)
        .map(|i| {
            let mut h = costs[i].clone();
            h.axpy(-step, &s.u[i]);
            h.axpy(-step, &s.v[i]);
            h
        })
        .collect();
    let h_bar = sum_of(&hs).scale(1.0 / n as f64).hermitian_part();
    let mu = (0..n)
        .into_par_iter()
        .map(|i| {
            let sp = psd_project_unchecked(&s.u[i].scale(-step));
            let kp = ppt_project(&s.v[i].scale(-step), layout, party);
            let mut e = &h_bar - &costs[i];
            e -= &sp;
            e -= &kp;
            -min_eigenvalue_unchecked(&e)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max);
    h_bar.trace().re + mu * dim as f64
}

/// Upper bound Tr(H) from an analytic certificate, after confirming that it
/// is dual feasible for the ensemble.
pub fn dual_bound_from_certificate(cert: &DualCertificate, ens: &Ensemble) -> Result<f64> {
    let report = verify_dual_feasibility(cert, ens, DEFAULT_FEASIBILITY_TOL)?;
    if !report.passed {
        return Err(Error::InfeasibleCertificate(format!(
            "smallest eigenvalue {:.3e} below −{:.3e}",
            report.worst_lambda_min, report.threshold
        )));
    }
    Ok(cert.trace_value)
}

/// SDP outcome without the measurement operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpSummary {
    pub value: f64,
    pub feasible_lower_bound: f64,
    pub dual_upper_bound: f64,
    pub primal_residual: f64,
    pub cone_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl From<&SdpResult> for SdpSummary {
    fn from(r: &SdpResult) -> Self {
        Self {
            value: r.primal_value,
            feasible_lower_bound: r.feasible_lower_bound,
            dual_upper_bound: r.dual_upper_bound,
            primal_residual: r.primal_residual,
            cone_residual: r.cone_residual,
            iterations: r.iterations,
            converged: r.converged,
        }
    }
}

/// Protocol lower bound, SDP value and certificate upper bound side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub dim: usize,
    pub n_states: usize,
    pub fef: f64,
    pub lower: f64,
    pub sdp: SdpSummary,
    /// Certificate trace, (d²/N)·F(τ).
    pub certificate_bound: f64,
    /// `certificate_bound` clipped at 1.
    pub upper: f64,
    pub certificate_feasible: bool,
    /// Allowed disagreement: solver accuracy + 1e-6.
    pub tolerance: f64,
    /// lower ≤ sdp + tolerance and sdp ≤ upper + tolerance.
    pub ordered: bool,
    /// For a complete basis, all three values within `tolerance` of F(τ).
    pub agree: Option<bool>,
    pub passed: bool,
}

/// Assembles the three bounds for the first `n` basis states.
pub fn sandwich_report(
    basis: &MaxEntBasis,
    spec: &ResourceSpectrum,
    n: usize,
    options: &SolverOptions,
    strategy: Strategy,
) -> Result<SandwichReport> {
    let d = basis.dim();
    let complete = n == d * d;
    let ens = build_ensemble(basis, spec, n)?;
    let lower = if complete {
        protocol_success(basis, spec)?.success
    } else {
        let completion = default_completion(basis, n)?;
        incomplete_bounds(basis, spec, n, &completion, strategy)?.lower
    };
    let cert = build_certificate_for(basis, spec, n)?;
    let feasibility = verify_dual_feasibility(&cert, &ens, DEFAULT_FEASIBILITY_TOL)?;
    let result = solve_primal_ppt(&SdpProblem::from_ensemble(&ens)?, options)?;
    let sdp = SdpSummary::from(&result);

    let f = fef(spec);
    let tolerance = options.accuracy + 1e-6;
    let upper = cert.trace_value.min(1.0);
    let ordered = lower <= sdp.value + tolerance && sdp.value <= upper + tolerance;
    let agree = complete.then(|| {
        [lower, sdp.value, cert.trace_value]
            .iter()
            .all(|v| (v - f).abs() <= tolerance)
    });
    Ok(SandwichReport {
        dim: d,
        n_states: n,
        fef: f,
        lower,
        sdp,
        certificate_bound: cert.trace_value,
        upper,
        certificate_feasible: feasibility.passed,
        tolerance,
        ordered,
        passed: ordered && feasibility.passed && agree.unwrap_or(true),
        agree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::kron;
    use crate::random::{random_unitary, seeded_rng};
    use crate::states::weyl_basis;

    fn bell_problem(n: usize) -> SdpProblem {
        let b = weyl_basis(2).unwrap();
        let s = ResourceSpectrum::from_weights(&[0.8, 0.2]).unwrap();
        SdpProblem::from_ensemble(&build_ensemble(&b, &s, n).unwrap()).unwrap()
    }

    #[test]
    fn bell_basis_value() {
        let r = solve_primal_ppt(&bell_problem(4), &SolverOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.primal_value - 0.9).abs() < 1e-3);
        assert!(r.primal_residual < 1e-4 && r.cone_residual > -1e-4);
        assert!(r.feasible_lower_bound <= 0.9 + 1e-9);
        assert!(r.dual_upper_bound >= 0.9 - 1e-9);
        assert!((r.feasible_lower_bound - r.primal_value).abs() < 1e-3);
    }

    #[test]
    fn deterministic() {
        let opts = SolverOptions {
            max_iterations: 120,
            ..Default::default()
        };
        let a = solve_primal_ppt(&bell_problem(4), &opts).unwrap();
        let b = solve_primal_ppt(&bell_problem(4), &opts).unwrap();
        assert_eq!(a.operators, b.operators);
        assert_eq!(a.primal_value.to_bits(), b.primal_value.to_bits());
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.trace.len(), 1);
    }

    #[test]
    fn looser_accuracy_never_needs_more_iterations() {
        let p = bell_problem(3);
        let mut last = usize::MAX;
        for acc in [1e-7, 1e-5, 1e-4, 1e-2] {
            let r = solve_primal_ppt(
                &p,
                &SolverOptions {
                    accuracy: acc,
                    ..Default::default()
                },
            )
            .unwrap();
            assert!(r.iterations <= last);
            last = r.iterations;
        }
    }

    #[test]
    fn iteration_cap_reports_unconverged() {
        let r = solve_primal_ppt(
            &bell_problem(4),
            &SolverOptions {
                max_iterations: 7,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 7);
        assert!(r.feasible_lower_bound <= r.dual_upper_bound);
    }

    #[test]
    fn local_unitary_invariance() {
        let mut rng = seeded_rng(61);
        let p = bell_problem(3);
        let va = random_unitary(4, &mut rng);
        let vb = random_unitary(4, &mut rng);
        let q = p.conjugated(&kron(&va, &vb)).unwrap();
        let opts = SolverOptions::default();
        let a = solve_primal_ppt(&p, &opts).unwrap();
        let b = solve_primal_ppt(&q, &opts).unwrap();
        assert!((a.primal_value - b.primal_value).abs() < 1e-4);
    }

    #[test]
    fn problem_validation() {
        let p = bell_problem(4);
        let layout = p.layout().clone();
        let rho = p.states()[0].clone();
        assert!(SdpProblem::new(vec![], vec![], layout.clone()).is_err());
        assert!(SdpProblem::new(vec![rho.clone()], vec![0.5], layout.clone()).is_err());
        assert!(SdpProblem::new(vec![rho.scale(2.0)], vec![1.0], layout.clone()).is_err());
        assert!(SdpProblem::new(vec![ComplexMatrix::identity(4)], vec![1.0], layout).is_err());
        let bad = SolverOptions {
            relaxation: 2.5,
            ..Default::default()
        };
        assert!(solve_primal_ppt(&p, &bad).is_err());
    }

    #[test]
    fn certificate_bound() {
        let b = weyl_basis(2).unwrap();
        let s = ResourceSpectrum::product(2).unwrap();
        for n in 3..=4 {
            let ens = build_ensemble(&b, &s, n).unwrap();
            let cert = build_certificate_for(&b, &s, n).unwrap();
            let bound = dual_bound_from_certificate(&cert, &ens).unwrap();
            assert!((bound - 2.0 / n as f64).abs() < 1e-12);
        }
        let ens = build_ensemble(&b, &s, 4).unwrap();
        let mut cert = build_certificate_for(&b, &s, 4).unwrap();
        cert.h_swapped = cert.h_swapped.scale(0.1);
        assert!(matches!(
            dual_bound_from_certificate(&cert, &ens),
            Err(Error::InfeasibleCertificate(_))
        ));
    }

    #[test]
    fn sandwich_two_qubits() {
        let b = weyl_basis(2).unwrap();
        let s = ResourceSpectrum::from_weights(&[0.8, 0.2]).unwrap();
        let r =
            sandwich_report(&b, &s, 4, &SolverOptions::default(), Strategy::Completion).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.agree, Some(true));
        let r =
            sandwich_report(&b, &s, 3, &SolverOptions::default(), Strategy::Completion).unwrap();
        assert!(r.passed && r.agree.is_none());
        assert!((r.lower - 1.4 * 2.0 / 3.0).abs() < 1e-10);
        assert_eq!(r.upper, 1.0);
    }
}
