//! Analytic dual-feasible operator for the PPT discrimination problem.
//!
//! On the ordering A1,B1,A2,B2 the certificate is
//!
//! ```text
//! ℍ = (1/d³)·1_{A1B1} ⊗ [τ + 2 Σ_{i<j} a_i a_j T_{A2}(ψ⁻_ij)]
//! ```
//!
//! with ψ⁻_ij the antisymmetric projector on |ij⟩,|ji⟩. After the B1↔A2 swap
//! it becomes the operator H on A1,A2,B1,B2 that must satisfy
//! `T_A(H − p_k Φ_k) ⪰ 0` for every ensemble member, and `Tr H = F(τ)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    eigenvalues_unchecked, kron, min_eigenvalue_unchecked, partial_transpose, permute_factors,
    permute_ket, ComplexMatrix, Ket, SubsystemLayout, C64,
};
use crate::measures::fef;
use crate::states::{resource_state, Ensemble, MaxEntBasis, ResourceSpectrum, SWAP_B1_A2};

/// Default relative tolerance for positivity checks.
pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-9;

/// The certificate on both factor orderings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualCertificate {
    pub dim: usize,
    /// Number of ensemble members the certificate was scaled for.
    pub n_states: usize,
    /// ℍ on A1,B1,A2,B2, scaled by d²/N.
    pub h_factored: ComplexMatrix,
    /// H on A1,A2,B1,B2, scaled by d²/N.
    pub h_swapped: ComplexMatrix,
    pub trace_value: f64,
    /// Layout of `h_swapped`: [d,d,d,d] with party A the first two factors.
    pub layout: SubsystemLayout,
    coeffs: Vec<f64>,
}

impl DualCertificate {
    /// d²/N; equal to 1 for a complete basis.
    pub fn scale(&self) -> f64 {
        (self.dim * self.dim) as f64 / self.n_states as f64
    }

    /// The layout of `h_factored`.
    pub fn factored_layout(&self) -> SubsystemLayout {
        SubsystemLayout::new(vec![self.dim; 4], 2).expect("four factors")
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

/// Pieces of the positivity argument, all on A2⊗B2 (or A1⊗B1 for Υ_k).
#[derive(Debug, Clone)]
pub struct CertificateParts {
    pub dim: usize,
    /// Index pairs (i, j), i < j, in the order used by `sym` and `antisym`.
    pub pairs: Vec<(usize, usize)>,
    pub antisym: Vec<ComplexMatrix>,
    pub sym: Vec<ComplexMatrix>,
    pub diag: Vec<ComplexMatrix>,
    /// Γ = Σ a_i² ψ_ii + Σ_{i<j} a_i a_j ψ⁺_ij.
    pub gamma_op: ComplexMatrix,
    /// Υ_k = 1 − d·T_{A1}(Ψ_k).
    pub upsilons: Vec<ComplexMatrix>,
}

fn pair_ket(d: usize, i: usize, j: usize, sign: f64) -> Ket {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = Ket::zeros(d * d);
    v[i * d + j] += C64::new(s, 0.0);
    v[j * d + i] += C64::new(sign * s, 0.0);
    v
}

fn pairs(d: usize) -> Vec<(usize, usize)> {
    (0..d)
        .flat_map(|i| (i + 1..d).map(move |j| (i, j)))
        .collect()
}

fn check_dims(basis: &MaxEntBasis, spec: &ResourceSpectrum) -> Result<usize> {
    if basis.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: spec.dim(),
        });
    }
    Ok(basis.dim())
}

fn bipartite(d: usize) -> SubsystemLayout {
    SubsystemLayout::bipartite(d, d).expect("positive dimension")
}

/// Υ = 1 − d·T_{A1}(|Ψ⟩⟨Ψ|) for a maximally entangled |Ψ⟩ on A1⊗B1.
pub fn upsilon(psi: &Ket, d: usize) -> Result<ComplexMatrix> {
    let t = partial_transpose(&ComplexMatrix::projector(psi), &bipartite(d), &[0])?;
    Ok(&ComplexMatrix::identity(d * d) - &t.scale(d as f64))
}

/// Builds ψ_ii, ψ⁺_ij, ψ⁻_ij, Γ and every Υ_k.
pub fn certificate_parts(basis: &MaxEntBasis, spec: &ResourceSpectrum) -> Result<CertificateParts> {
    let d = check_dims(basis, spec)?;
    let a = spec.coeffs();
    let pairs = pairs(d);
    let antisym: Vec<_> = pairs
        .iter()
        .map(|&(i, j)| ComplexMatrix::projector(&pair_ket(d, i, j, -1.0)))
        .collect();
    let sym: Vec<_> = pairs
        .iter()
        .map(|&(i, j)| ComplexMatrix::projector(&pair_ket(d, i, j, 1.0)))
        .collect();
    let diag: Vec<_> = (0..d)
        .map(|i| ComplexMatrix::projector(&Ket::basis(d * d, i * d + i)))
        .collect();
    let mut gamma_op = ComplexMatrix::zeros(d * d, d * d);
    for (i, p) in diag.iter().enumerate() {
        gamma_op.axpy(a[i] * a[i], p);
    }
    for (&(i, j), p) in pairs.iter().zip(&sym) {
        gamma_op.axpy(a[i] * a[j], p);
    }
    let upsilons = (0..basis.len())
        .map(|k| upsilon(&basis.state(k), d))
        .collect::<Result<Vec<_>>>()?;
    Ok(CertificateParts {
        dim: d,
        pairs,
        antisym,
        sym,
        diag,
        gamma_op,
        upsilons,
    })
}

/// Algebraic identities among the parts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartsReport {
    /// ‖Σψ_ii + Σψ⁺ + Σψ⁻ − 1‖_F.
    pub completeness_residual: f64,
    /// ‖T_{A2}(τ) − (Γ − Σ a_i a_j ψ⁻_ij)‖_F.
    pub transpose_tau_residual: f64,
    pub gamma_min_eigenvalue: f64,
}

impl CertificateParts {
    pub fn report(&self, spec: &ResourceSpectrum) -> Result<PartsReport> {
        let d = self.dim;
        let a = spec.coeffs();
        let mut total = ComplexMatrix::zeros(d * d, d * d);
        for p in self.diag.iter().chain(&self.sym).chain(&self.antisym) {
            total += p;
        }
        let completeness_residual = total.distance(&ComplexMatrix::identity(d * d));

        let tau = ComplexMatrix::projector(&resource_state(spec));
        let t_tau = partial_transpose(&tau, &bipartite(d), &[0])?;
        let mut rhs = self.gamma_op.clone();
        for (&(i, j), p) in self.pairs.iter().zip(&self.antisym) {
            rhs.axpy(-a[i] * a[j], p);
        }
        Ok(PartsReport {
            completeness_residual,
            transpose_tau_residual: t_tau.distance(&rhs),
            gamma_min_eigenvalue: min_eigenvalue_unchecked(&self.gamma_op),
        })
    }
}

/// The certificate for the complete basis ensemble.
pub fn build_certificate(basis: &MaxEntBasis, spec: &ResourceSpectrum) -> Result<DualCertificate> {
    build_certificate_for(basis, spec, basis.dim() * basis.dim())
}

/// The certificate for the first `n` basis states with priors 1/n: ℍ scaled
/// by d²/n, so that its trace is (d²/n)·F(τ).
pub fn build_certificate_for(
    basis: &MaxEntBasis,
    spec: &ResourceSpectrum,
    n: usize,
) -> Result<DualCertificate> {
    let d = check_dims(basis, spec)?;
    let d2 = d * d;
    if n == 0 || n > d2 {
        return Err(Error::EnsembleSize { n, min: 1, max: d2 });
    }
    let a = spec.coeffs();
    let bip = bipartite(d);

    let mut inner = ComplexMatrix::projector(&resource_state(spec));
    for (i, j) in pairs(d) {
        let minus = ComplexMatrix::projector(&pair_ket(d, i, j, -1.0));
        inner.axpy(2.0 * a[i] * a[j], &partial_transpose(&minus, &bip, &[0])?);
    }
    let scale = d2 as f64 / n as f64;
    let h_factored = kron(&ComplexMatrix::identity(d2), &inner).scale(scale / (d * d2) as f64);

    let factored = SubsystemLayout::new(vec![d; 4], 2)?;
    let h_swapped = permute_factors(&h_factored, &factored, &SWAP_B1_A2)?;
    let layout = factored.permuted(&SWAP_B1_A2)?;

    let tr_f = h_factored.trace();
    let tr_s = h_swapped.trace();
    let expected = scale * fef(spec);
    for (name, m) in [("factored", &h_factored), ("swapped", &h_swapped)] {
        if !m.is_hermitian() {
            return Err(Error::Invariant(format!(
                "{name} certificate is not Hermitian"
            )));
        }
    }
    if (tr_f.re - expected).abs() > 1e-12 * scale
        || (tr_s.re - tr_f.re).abs() > 1e-12
        || tr_f.im.abs() > 1e-12
    {
        return Err(Error::Invariant(format!(
            "certificate trace {} differs from {}",
            tr_f.re, expected
        )));
    }
    Ok(DualCertificate {
        dim: d,
        n_states: n,
        h_factored,
        h_swapped,
        trace_value: tr_f.re,
        layout,
        coeffs: a.to_vec(),
    })
}

/// Per-member result of the dual constraint check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemberFeasibility {
    pub k: usize,
    /// λ_min(T_A(H − p_k Φ_k)).
    pub lambda_min: f64,
    /// ‖LHS − RHS‖_F of the two-term positive decomposition, unscaled.
    pub decomposition_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub dim: usize,
    pub n_states: usize,
    pub trace_value: f64,
    pub tol: f64,
    /// Eigenvalues below −threshold count as violations.
    pub threshold: f64,
    pub members: Vec<MemberFeasibility>,
    pub worst_lambda_min: f64,
    pub max_decomposition_residual: f64,
    pub passed: bool,
}

/// Checks `T_A(H − p_k Φ_k) ⪰ 0` for each ensemble member, and compares
/// (T_{A1}⊗T_{A2})[ℍ − Ψ_k⊗τ/d²] with
/// (1/d³)Υ_k⊗Γ + (2/d³)Σ a_i a_j (1 − Υ_k/2)⊗ψ⁻_ij.
pub fn verify_dual_feasibility(
    cert: &DualCertificate,
    ens: &Ensemble,
    tol: f64,
) -> Result<FeasibilityReport> {
    let d = cert.dim;
    if ens.layout() != &cert.layout {
        return Err(Error::InvalidLayout(format!(
            "ensemble layout {:?} does not match certificate layout {:?}",
            ens.layout().factor_dims(),
            cert.layout.factor_dims()
        )));
    }
    if ens.len() > d * d {
        return Err(Error::EnsembleSize {
            n: ens.len(),
            min: 1,
            max: d * d,
        });
    }
    let threshold = tol * (1.0 + cert.h_swapped.frobenius_norm());
    let scale = cert.scale();
    let spec = ResourceSpectrum::new(cert.coeffs.clone())?;
    let parts = decomposition_terms(&spec)?;
    let factored = cert.factored_layout();
    let h_unscaled = cert.h_factored.scale(1.0 / scale);
    let d2 = (d * d) as f64;

    let members = (0..ens.len())
        .into_par_iter()
        .map(|k| -> Result<MemberFeasibility> {
            let phi = &ens.states()[k];
            let mut m = cert.h_swapped.clone();
            m.axpy(-ens.priors()[k], &ComplexMatrix::projector(phi));
            let lambda_min =
                min_eigenvalue_unchecked(&partial_transpose(&m, &cert.layout, &[0, 1])?);

            // SWAP_B1_A2 is its own inverse
            let product = permute_ket(phi, &cert.layout, &SWAP_B1_A2)?;
            let mut diff = h_unscaled.clone();
            diff.axpy(-1.0 / d2, &ComplexMatrix::projector(&product));
            let lhs = partial_transpose(&diff, &factored, &[0, 2])?;
            let psi = extract_first_factor(&product, &spec);
            let rhs = parts.rhs(&upsilon(&psi, d)?);
            Ok(MemberFeasibility {
                k,
                lambda_min,
                decomposition_residual: lhs.distance(&rhs),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let worst_lambda_min = members
        .iter()
        .map(|m| m.lambda_min)
        .fold(f64::INFINITY, f64::min);
    let max_decomposition_residual = members
        .iter()
        .map(|m| m.decomposition_residual)
        .fold(0.0, f64::max);
    Ok(FeasibilityReport {
        dim: d,
        n_states: cert.n_states,
        trace_value: cert.trace_value,
        tol,
        threshold,
        passed: worst_lambda_min >= -threshold,
        members,
        worst_lambda_min,
        max_decomposition_residual,
    })
}

/// Recovers |Ψ⟩ from |Ψ⟩⊗|τ⟩ (ordering A1,B1,A2,B2) using the amplitude
/// a_1 of |00⟩ in |τ⟩, which is at least 1/√d.
fn extract_first_factor(product: &Ket, spec: &ResourceSpectrum) -> Ket {
    let d = spec.dim();
    let a1 = spec.coeffs()[0];
    let v: Vec<_> = (0..d * d).map(|i| product[i * d * d] / a1).collect();
    Ket::new(v)
}

struct DecompositionTerms {
    d: usize,
    gamma_op: ComplexMatrix,
    weighted_antisym: ComplexMatrix,
}

fn decomposition_terms(spec: &ResourceSpectrum) -> Result<DecompositionTerms> {
    let d = spec.dim();
    let a = spec.coeffs();
    let mut gamma_op = ComplexMatrix::zeros(d * d, d * d);
    for (i, &ai) in a.iter().enumerate() {
        gamma_op.axpy(
            ai * ai,
            &ComplexMatrix::projector(&Ket::basis(d * d, i * d + i)),
        );
    }
    let mut weighted_antisym = ComplexMatrix::zeros(d * d, d * d);
    for (i, j) in pairs(d) {
        gamma_op.axpy(
            a[i] * a[j],
            &ComplexMatrix::projector(&pair_ket(d, i, j, 1.0)),
        );
        weighted_antisym.axpy(
            a[i] * a[j],
            &ComplexMatrix::projector(&pair_ket(d, i, j, -1.0)),
        );
    }
    Ok(DecompositionTerms {
        d,
        gamma_op,
        weighted_antisym,
    })
}

impl DecompositionTerms {
    fn rhs(&self, ups: &ComplexMatrix) -> ComplexMatrix {
        let d = self.d;
        let d3 = (d * d * d) as f64;
        let mut half = ComplexMatrix::identity(d * d);
        half.axpy(-0.5, ups);
        let mut out = kron(ups, &self.gamma_op).scale(1.0 / d3);
        out.axpy(2.0 / d3, &kron(&half, &self.weighted_antisym));
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UpsilonMember {
    pub k: usize,
    /// Ascending eigenvalues of Υ_k.
    pub eigenvalues: Vec<f64>,
    /// max |λ − expected| for Υ_k.
    pub spectrum_defect: f64,
    /// max |λ − expected| for 1 − Υ_k/2.
    pub complement_defect: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UpsilonReport {
    pub dim: usize,
    pub zeros: usize,
    pub twos: usize,
    pub members: Vec<UpsilonMember>,
    pub max_defect: f64,
    pub passed: bool,
}

/// Expected spectra: Υ_k has d(d+1)/2 zeros and d(d−1)/2 twos, and
/// 1 − Υ_k/2 has d(d−1)/2 zeros and d(d+1)/2 ones.
pub fn upsilon_spectrum_check(basis: &MaxEntBasis, tol: f64) -> Result<UpsilonReport> {
    let d = basis.dim();
    let zeros = d * (d + 1) / 2;
    let twos = d * (d - 1) / 2;
    let expected: Vec<f64> = std::iter::repeat_n(0.0, zeros)
        .chain(std::iter::repeat_n(2.0, twos))
        .collect();
    let expected_half: Vec<f64> = std::iter::repeat_n(0.0, twos)
        .chain(std::iter::repeat_n(1.0, zeros))
        .collect();
    let members = (0..basis.len())
        .into_par_iter()
        .map(|k| -> Result<UpsilonMember> {
            let ups = upsilon(&basis.state(k), d)?;
            let eigenvalues = eigenvalues_unchecked(&ups);
            let mut half = ComplexMatrix::identity(d * d);
            half.axpy(-0.5, &ups);
            let half_eigs = eigenvalues_unchecked(&half);
            Ok(UpsilonMember {
                k,
                spectrum_defect: max_deviation(&eigenvalues, &expected),
                complement_defect: max_deviation(&half_eigs, &expected_half),
                eigenvalues,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_defect = members
        .iter()
        .map(|m| m.spectrum_defect.max(m.complement_defect))
        .fold(0.0, f64::max);
    Ok(UpsilonReport {
        dim: d,
        zeros,
        twos,
        members,
        max_defect,
        passed: max_defect < tol,
    })
}

fn max_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Compares U[(T⊗T)(Λ⊗Ξ)]U† with T_X[U(Λ⊗Ξ)U†], where Λ acts on X1⊗Y1,
/// Ξ on X2⊗Y2, U swaps Y1↔X2 and X = X1⊗X2. Both operators must be d²×d².
/// Returns the Frobenius norm of the difference.
pub fn check_swap_transpose_identity(lambda: &ComplexMatrix, xi: &ComplexMatrix) -> Result<f64> {
    if !lambda.is_square() {
        return Err(Error::NotSquare {
            rows: lambda.rows(),
            cols: lambda.cols(),
        });
    }
    if xi.rows() != lambda.rows() || xi.cols() != lambda.cols() {
        return Err(Error::DimensionMismatch {
            expected: lambda.rows(),
            found: xi.rows(),
        });
    }
    let n = lambda.rows();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n {
        return Err(Error::InvalidDimension(format!(
            "{n} is not a perfect square"
        )));
    }
    let bip = bipartite(d);
    let layout = SubsystemLayout::new(vec![d; 4], 2)?;

    let lhs = permute_factors(
        &kron(
            &partial_transpose(lambda, &bip, &[0])?,
            &partial_transpose(xi, &bip, &[0])?,
        ),
        &layout,
        &SWAP_B1_A2,
    )?;
    let rhs = partial_transpose(
        &permute_factors(&kron(lambda, xi), &layout, &SWAP_B1_A2)?,
        &layout.permuted(&SWAP_B1_A2)?,
        &[0, 1],
    )?;
    Ok(lhs.distance(&rhs))
}
