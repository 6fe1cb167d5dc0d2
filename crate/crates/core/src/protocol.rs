//! Teleportation-based LOCC protocol and the bounds for incomplete bases.
//!
//! Alice teleports her half of the unknown |Ψ_i⟩ through the resource |τ⟩.
//! Bob then holds |γ_i⟩ = (1⊗U_i)|τ⟩ on B2⊗B1 and measures in the basis
//! {(1⊗U_j)|Ψ_1⟩}, succeeding with probability |⟨Ψ_1|τ⟩|² = F(τ) for every i.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, Ket, C64};
use crate::measures::fef;
use crate::states::{resource_state, MaxEntBasis, ResourceSpectrum, BASIS_TOL};

fn check_dims(basis: &MaxEntBasis, spec: &ResourceSpectrum) -> Result<usize> {
    if basis.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: spec.dim(),
        });
    }
    Ok(basis.dim())
}

fn check_count(d: usize, n: usize) -> Result<()> {
    if n == 0 || n > d * d {
        return Err(Error::EnsembleSize {
            n,
            min: 1,
            max: d * d,
        });
    }
    Ok(())
}

/// (1⊗W)|τ⟩ = Σ_k a_k |k⟩⊗W|k⟩ on B2⊗B1.
fn act_on_second(w: &ComplexMatrix, a: &[f64]) -> Ket {
    let d = a.len();
    let mut v = Ket::zeros(d * d);
    for (k, &ak) in a.iter().enumerate() {
        for r in 0..d {
            v[k * d + r] = w[(r, k)] * ak;
        }
    }
    v
}

/// Bob's states after teleportation and their Gram matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualEnsemble {
    pub gammas: Vec<Ket>,
    /// ⟨γ_i|γ_j⟩ from the vectors.
    pub gram: ComplexMatrix,
    /// Σ_k a_k² ⟨k|U_i†U_j|k⟩.
    pub gram_formula: ComplexMatrix,
    /// max |gram − gram_formula|.
    pub cross_check: f64,
}

pub fn teleport_residuals(
    basis: &MaxEntBasis,
    spec: &ResourceSpectrum,
    n: usize,
) -> Result<ResidualEnsemble> {
    let d = check_dims(basis, spec)?;
    check_count(d, n)?;
    let a = spec.coeffs();
    let gammas: Vec<Ket> = (0..n).map(|i| act_on_second(basis.unitary(i), a)).collect();
    let gram = ComplexMatrix::from_fn(n, n, |i, j| gammas[i].inner(&gammas[j]));
    let gram_formula = ComplexMatrix::from_fn(n, n, |i, j| {
        let m = basis.unitary(i).adjoint().matmul(basis.unitary(j));
        (0..d).map(|k| m[(k, k)] * (a[k] * a[k])).sum()
    });
    let cross_check = (&gram - &gram_formula).max_abs();
    let diag_defect = (0..n)
        .map(|i| (gram[(i, i)] - 1.0).norm())
        .fold(0.0, f64::max);
    if cross_check > 1e-10 || diag_defect > 1e-10 {
        return Err(Error::Invariant(format!(
            "residual Gram matrix mismatch {cross_check:.3e}, diagonal defect {diag_defect:.3e}"
        )));
    }
    Ok(ResidualEnsemble {
        gammas,
        gram,
        gram_formula,
        cross_check,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub dim: usize,
    pub fef: f64,
    pub success: f64,
    /// |⟨Ψ_i|γ_i⟩|² for each basis state.
    pub terms: Vec<f64>,
    /// max_i |term_i − F(τ)|.
    pub max_term_deviation: f64,
}

/// Exact success probability (1/d²) Σ_i |⟨Ψ_i|γ_i⟩|² for the complete basis.
pub fn protocol_success(basis: &MaxEntBasis, spec: &ResourceSpectrum) -> Result<ProtocolReport> {
    let d = check_dims(basis, spec)?;
    let n = d * d;
    let residuals = teleport_residuals(basis, spec, n)?;
    let terms: Vec<f64> = residuals
        .gammas
        .iter()
        .enumerate()
        .map(|(i, g)| basis.state(i).inner(g).norm_sqr())
        .collect();
    let f = fef(spec);
    Ok(ProtocolReport {
        dim: d,
        fef: f,
        success: terms.iter().sum::<f64>() / n as f64,
        max_term_deviation: terms.iter().map(|t| (t - f).abs()).fold(0.0, f64::max),
        terms,
    })
}

/// Outcome distribution of the full protocol run on the state vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TeleportationRun {
    pub dim: usize,
    pub n_states: usize,
    /// `outcomes[i][m][j]`: probability that Alice obtains m and Bob
    /// announces j, given the unknown state is Ψ_i.
    pub outcomes: Vec<Vec<Vec<f64>>>,
    pub success: f64,
    /// Success probability conditioned on each unknown state.
    pub per_state: Vec<f64>,
}

/// Simulates the protocol on |Ψ_i⟩_{A1B1}⊗|τ⟩_{A2B2} for the first `n`
/// basis states.
///
/// Alice measures A1⊗A2 in the basis itself, {(1⊗U_m)|Ψ_1⟩}. Outcome m leaves
/// Bob with (1⊗U_i U_m†)|τ⟩ on B2⊗B1, so he measures in the outcome-adapted
/// basis {(1⊗U_j U_m†)|Ψ_1⟩}_j. For Weyl operators U_i U_m† ∝ U_m† U_i and
/// this is the usual Pauli correction followed by a fixed measurement.
pub fn simulate_teleportation(
    basis: &MaxEntBasis,
    spec: &ResourceSpectrum,
    n: usize,
) -> Result<TeleportationRun> {
    let d = check_dims(basis, spec)?;
    check_count(d, n)?;
    let d2 = d * d;
    let tau = resource_state(spec);
    let alice: Vec<Ket> = (0..d2).map(|m| basis.state(m)).collect();
    let flat = vec![1.0 / (d as f64).sqrt(); d];

    let mut outcomes = Vec::with_capacity(n);
    for i in 0..n {
        let psi = basis.state(i);
        let mut per_m = Vec::with_capacity(d2);
        for (m, phi) in alice.iter().enumerate() {
            // β[b2, b1] = Σ_{a1,a2} conj(Φ_m[a1,a2]) Ψ_i[a1,b1] τ[a2,b2]
            let mut beta = Ket::zeros(d2);
            for b2 in 0..d {
                for b1 in 0..d {
                    let mut acc = C64::new(0.0, 0.0);
                    for a1 in 0..d {
                        for a2 in 0..d {
                            acc += phi[a1 * d + a2].conj() * psi[a1 * d + b1] * tau[a2 * d + b2];
                        }
                    }
                    beta[b2 * d + b1] = acc;
                }
            }
            let um_dag = basis.unitary(m).adjoint();
            let probs: Vec<f64> = (0..n)
                .map(|j| {
                    let w = basis.unitary(j).matmul(&um_dag);
                    let meas = act_on_second(&w, &flat);
                    meas.inner(&beta).norm_sqr()
                })
                .collect();
            per_m.push(probs);
        }
        outcomes.push(per_m);
    }
    let per_state: Vec<f64> = (0..n)
        .map(|i| outcomes[i].iter().map(|probs| probs[i]).sum())
        .collect();
    Ok(TeleportationRun {
        dim: d,
        n_states: n,
        success: per_state.iter().sum::<f64>() / n as f64,
        per_state,
        outcomes,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplingReport {
    pub shots: usize,
    pub successes: usize,
    pub frequency: f64,
    pub exact: f64,
}

/// Samples (i, m, j) from a simulated run and counts correct guesses.
pub fn sample_protocol<R: Rng + ?Sized>(
    run: &TeleportationRun,
    shots: usize,
    rng: &mut R,
) -> SamplingReport {
    let n = run.n_states;
    let mut successes = 0;
    for _ in 0..shots {
        let i = rng.random_range(0..n);
        let mut r: f64 = rng.random();
        let mut guess = None;
        'outer: for probs in &run.outcomes[i] {
            for (j, &p) in probs.iter().enumerate() {
                if r < p {
                    guess = Some(j);
                    break 'outer;
                }
                r -= p;
            }
        }
        // rounding can leave a sliver of mass unassigned; it counts as a miss
        if guess == Some(i) {
            successes += 1;
        }
    }
    SamplingReport {
        shots,
        successes,
        frequency: successes as f64 / shots as f64,
        exact: run.success,
    }
}

/// Orthonormal states on B2⊗B1 completing Ψ_1..Ψ_N.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompletionStates {
    pub kets: Vec<Ket>,
}

impl CompletionStates {
    /// Validates orthonormality and orthogonality to the first `n` basis
    /// states.
    pub fn new(kets: Vec<Ket>, basis: &MaxEntBasis, n: usize) -> Result<Self> {
        let d = basis.dim();
        check_count(d, n)?;
        if kets.len() != d * d - n {
            return Err(Error::InvalidState(format!(
                "{} completion states for N = {n}, expected {}",
                kets.len(),
                d * d - n
            )));
        }
        for (i, k) in kets.iter().enumerate() {
            if k.dim() != d * d {
                return Err(Error::DimensionMismatch {
                    expected: d * d,
                    found: k.dim(),
                });
            }
            for (j, other) in kets.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                if (k.inner(other) - want).norm() > BASIS_TOL {
                    return Err(Error::InvalidState(
                        "completion states are not orthonormal".into(),
                    ));
                }
            }
            for m in 0..n {
                if basis.state(m).inner(k).norm() > BASIS_TOL {
                    return Err(Error::InvalidState(format!(
                        "completion state {} overlaps basis state {}",
                        i + 1,
                        m + 1
                    )));
                }
            }
        }
        Ok(Self { kets })
    }

    pub fn len(&self) -> usize {
        self.kets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kets.is_empty()
    }
}

/// The unused basis states Ψ_{N+1}, …, Ψ_{d²}.
pub fn default_completion(basis: &MaxEntBasis, n: usize) -> Result<CompletionStates> {
    let d2 = basis.len();
    check_count(basis.dim(), n)?;
    if n == d2 {
        return Err(Error::EnsembleSize {
            n,
            min: 1,
            max: d2 - 1,
        });
    }
    CompletionStates::new((n..d2).map(|k| basis.state(k)).collect(), basis, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Measure with the completed basis and reassign completion outcomes.
    Completion,
    /// Measure Ψ_1..Ψ_N plus the projector onto their orthocomplement.
    Projector,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompletionChoice {
    /// Zero-based index of the completion state (0 for the projector).
    pub completion: usize,
    /// Zero-based basis index j whose residual state has the largest overlap; ties go
    /// to the lowest j.
    pub chosen: usize,
    pub overlap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IncompleteBounds {
    pub dim: usize,
    pub n_states: usize,
    pub strategy: Strategy,
    pub fef: f64,
    pub lower: f64,
    pub upper: f64,
    pub choices: Vec<CompletionChoice>,
    /// d+1 ≤ N ≤ d², where the basis is known to be locally
    /// indistinguishable without a resource.
    pub in_regime: bool,
}

fn argmax_lowest(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (j, v) in values.enumerate() {
        if v > best.1 {
            best = (j, v);
        }
    }
    best
}

/// Lower and upper bounds on the LOCC success probability for the first N
/// basis states. The upper bound is min(1, (d²/N)·F(τ)).
pub fn incomplete_bounds(
    basis: &MaxEntBasis,
    spec: &ResourceSpectrum,
    n: usize,
    completion: &CompletionStates,
    strategy: Strategy,
) -> Result<IncompleteBounds> {
    let d = check_dims(basis, spec)?;
    check_count(d, n)?;
    let d2 = d * d;
    if completion.len() != d2 - n {
        return Err(Error::InvalidState(format!(
            "{} completion states for N = {n}",
            completion.len()
        )));
    }
    let f = fef(spec);
    let residuals = teleport_residuals(basis, spec, n)?;
    let gammas = &residuals.gammas;

    let (bonus, choices) = match strategy {
        Strategy::Completion => {
            let choices: Vec<CompletionChoice> = completion
                .kets
                .iter()
                .enumerate()
                .map(|(c, psi)| {
                    let (chosen, overlap) =
                        argmax_lowest(gammas.iter().map(|g| psi.inner(g).norm_sqr()));
                    CompletionChoice {
                        completion: c,
                        chosen,
                        overlap,
                    }
                })
                .collect();
            (choices.iter().map(|c| c.overlap).sum::<f64>(), choices)
        }
        Strategy::Projector => {
            if n == d2 {
                (0.0, Vec::new())
            } else {
                let mut q = ComplexMatrix::identity(d2);
                for k in 0..n {
                    q -= &ComplexMatrix::projector(&basis.state(k));
                }
                let (chosen, overlap) =
                    argmax_lowest(gammas.iter().map(|g| g.inner(&q.apply(g)).re));
                (
                    overlap,
                    vec![CompletionChoice {
                        completion: 0,
                        chosen,
                        overlap,
                    }],
                )
            }
        }
    };
    let lower = f + bonus / n as f64;
    let upper = (d2 as f64 * f / n as f64).min(1.0);
    if lower > upper + 1e-10 {
        return Err(Error::Invariant(format!(
            "lower bound {lower} exceeds upper bound {upper}"
        )));
    }
    Ok(IncompleteBounds {
        dim: d,
        n_states: n,
        strategy,
        fef: f,
        lower,
        upper,
        choices,
        in_regime: n > d,
    })
}
