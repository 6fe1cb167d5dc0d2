//! Maximally entangled bases, resource states and the discrimination
//! ensembles built from them.
//!
//! Factor conventions: a basis state |Ψ_k⟩ lives on A1⊗B1 and the resource
//! |τ⟩ on A2⊗B2. The product |Ψ_k⟩⊗|τ⟩ is ordered A1,B1,A2,B2; after the
//! B1↔A2 swap the ensemble lives on A1,A2,B1,B2 with party A = {A1, A2}.

mod basis_file;

pub use basis_file::{load_basis_file, BasisFile};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues_unchecked, permute_ket, ComplexMatrix, Ket, SubsystemLayout, C64};

/// Defect threshold for unitarity and trace orthogonality of basis unitaries.
pub const BASIS_TOL: f64 = 1e-10;
/// Normalization tolerance for Schmidt spectra.
pub const SPECTRUM_TOL: f64 = 1e-12;

/// Swap B1↔A2 taking A1,B1,A2,B2 to A1,A2,B1,B2.
pub const SWAP_B1_A2: [usize; 4] = [0, 2, 1, 3];

/// The d² unitaries U_j with |Ψ_j⟩ = (1⊗U_j)|Ψ_1⟩; U_1 is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntBasis {
    dim: usize,
    unitaries: Vec<ComplexMatrix>,
}

impl MaxEntBasis {
    /// Validates and wraps a complete list of basis unitaries.
    pub fn new(unitaries: Vec<ComplexMatrix>) -> Result<Self> {
        let report = validate_basis(&unitaries)?;
        if !report.accepted {
            return Err(Error::InvalidBasis(format!(
                "unitarity defect {:.3e}, orthogonality defect {:.3e}",
                report.max_unitarity_defect, report.max_orthogonality_defect
            )));
        }
        if !report.complete {
            return Err(Error::InvalidBasis(format!(
                "{} unitaries given, a basis of C^{d}⊗C^{d} needs {}",
                report.count,
                report.dim * report.dim,
                d = report.dim
            )));
        }
        if report.dim < 2 {
            return Err(Error::InvalidDimension(
                "basis dimension must be at least 2".into(),
            ));
        }
        if !report.first_is_identity {
            return Err(Error::InvalidBasis(
                "the first unitary must be the identity".into(),
            ));
        }
        Ok(Self {
            dim: report.dim,
            unitaries,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.unitaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unitaries.is_empty()
    }

    pub fn unitaries(&self) -> &[ComplexMatrix] {
        &self.unitaries
    }

    pub fn unitary(&self, k: usize) -> &ComplexMatrix {
        &self.unitaries[k]
    }

    /// The basis ket |Ψ_k⟩ (zero-based `k`) on A1⊗B1.
    pub fn state(&self, k: usize) -> Ket {
        ket_from_unitary(&self.unitaries[k])
    }

    /// The basis {V·U_j·V†}. It keeps U_1 = 1 and corresponds to the basis
    /// states (V̄⊗V)|Ψ_j⟩.
    pub fn conjugated(&self, v: &ComplexMatrix) -> Result<Self> {
        if v.rows() != self.dim || v.unitarity_defect() > BASIS_TOL {
            return Err(Error::InvalidBasis(
                "conjugating matrix must be a d×d unitary".into(),
            ));
        }
        let vd = v.adjoint();
        Self::new(
            self.unitaries
                .iter()
                .map(|u| v.matmul(u).matmul(&vd))
                .collect(),
        )
    }
}

/// Outcome of [`validate_basis`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisReport {
    pub dim: usize,
    pub count: usize,
    /// count = d².
    pub complete: bool,
    pub first_is_identity: bool,
    /// max over j of max|U_j†U_j − 1|.
    pub max_unitarity_defect: f64,
    /// max over i, j of |Tr(U_i†U_j) − d·δ_ij|.
    pub max_orthogonality_defect: f64,
    /// Both defects below [`BASIS_TOL`].
    pub accepted: bool,
}

/// Checks unitarity and pairwise trace orthogonality of a candidate basis.
pub fn validate_basis(unitaries: &[ComplexMatrix]) -> Result<BasisReport> {
    let first = unitaries
        .first()
        .ok_or_else(|| Error::InvalidBasis("empty unitary list".into()))?;
    let d = first.rows();
    for u in unitaries {
        if !u.is_square() || u.rows() != d {
            return Err(Error::InvalidBasis(format!(
                "inconsistent shapes: expected {d}x{d}, found {}x{}",
                u.rows(),
                u.cols()
            )));
        }
    }
    let max_unitarity_defect = unitaries
        .iter()
        .map(ComplexMatrix::unitarity_defect)
        .fold(0.0, f64::max);
    let adjoints: Vec<ComplexMatrix> = unitaries.iter().map(ComplexMatrix::adjoint).collect();
    let mut max_orthogonality_defect: f64 = 0.0;
    for (i, ui) in adjoints.iter().enumerate() {
        for (j, uj) in unitaries.iter().enumerate() {
            let overlap = C64::new(ui.trace_product_re(uj), trace_product_im(ui, uj));
            let target = if i == j { d as f64 } else { 0.0 };
            max_orthogonality_defect = max_orthogonality_defect.max((overlap - target).norm());
        }
    }
    let first_is_identity = (first - &ComplexMatrix::identity(d)).max_abs() <= BASIS_TOL;
    Ok(BasisReport {
        dim: d,
        count: unitaries.len(),
        complete: unitaries.len() == d * d,
        first_is_identity,
        max_unitarity_defect,
        max_orthogonality_defect,
        accepted: max_unitarity_defect < BASIS_TOL && max_orthogonality_defect < BASIS_TOL,
    })
}

fn trace_product_im(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for r in 0..n {
        for c in 0..a.cols() {
            acc += (a[(r, c)] * b[(c, r)]).im;
        }
    }
    acc
}

/// Weyl–Heisenberg basis: U_(a,b) = X^a Z^b with X the cyclic shift and
/// Z = diag(1, ω, …, ω^{d−1}), ω = e^{2πi/d}. Index `a·d + b`; index 0 is 1.
pub fn weyl_basis(d: usize) -> Result<MaxEntBasis> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!("d = {d}, need d ≥ 2")));
    }
    let mut unitaries = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            unitaries.push(weyl_operator(d, a, b));
        }
    }
    MaxEntBasis::new(unitaries)
}

/// X^a Z^b: maps |j⟩ to ω^{b·j}|j + a mod d⟩.
pub fn weyl_operator(d: usize, a: usize, b: usize) -> ComplexMatrix {
    let mut u = ComplexMatrix::zeros(d, d);
    for j in 0..d {
        let angle = 2.0 * PI * ((b * j) % d) as f64 / d as f64;
        u[((j + a) % d, j)] = C64::from_polar(1.0, angle);
    }
    u
}

/// (1⊗U)|Ψ_1⟩ with |Ψ_1⟩ = (1/√d) Σ_i |i⟩|i⟩.
pub fn max_ent_state(u: &ComplexMatrix) -> Result<Ket> {
    if !u.is_square() {
        return Err(Error::NotSquare {
            rows: u.rows(),
            cols: u.cols(),
        });
    }
    let defect = u.unitarity_defect();
    if defect > BASIS_TOL {
        return Err(Error::InvalidBasis(format!(
            "not unitary (defect {defect:.3e})"
        )));
    }
    Ok(ket_from_unitary(u))
}

fn ket_from_unitary(u: &ComplexMatrix) -> Ket {
    let d = u.rows();
    let s = 1.0 / (d as f64).sqrt();
    let mut v = Ket::zeros(d * d);
    // amplitude ⟨i|⟨j|(1⊗U)|Ψ_1⟩ = U[j, i]/√d
    for i in 0..d {
        for j in 0..d {
            v[i * d + j] = u[(j, i)] * s;
        }
    }
    v
}

/// Ordered Schmidt coefficients a_1 ≥ … ≥ a_d ≥ 0 with Σ a_i² = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceSpectrum {
    coeffs: Vec<f64>,
}

impl ResourceSpectrum {
    /// Validates without touching the values.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidSpectrum("no coefficients".into()));
        }
        if let Some(bad) = coeffs.iter().find(|a| !a.is_finite() || **a < 0.0) {
            return Err(Error::InvalidSpectrum(format!(
                "coefficient {bad} is not a nonnegative real"
            )));
        }
        if let Some(i) = coeffs.windows(2).position(|w| w[0] < w[1]) {
            return Err(Error::InvalidSpectrum(format!(
                "coefficients must be non-increasing (a_{} = {} < a_{} = {})",
                i + 1,
                coeffs[i],
                i + 2,
                coeffs[i + 1]
            )));
        }
        let norm2: f64 = coeffs.iter().map(|a| a * a).sum();
        if (norm2 - 1.0).abs() > SPECTRUM_TOL {
            return Err(Error::InvalidSpectrum(format!(
                "Σ a_i² = {norm2}, expected 1"
            )));
        }
        Ok(Self { coeffs })
    }

    /// Sorts descending and rescales to unit norm before validating.
    pub fn new_normalized(mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::InvalidSpectrum(
                "coefficients must be nonnegative reals".into(),
            ));
        }
        let norm = coeffs.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidSpectrum("all coefficients are zero".into()));
        }
        coeffs.iter_mut().for_each(|a| *a /= norm);
        coeffs.sort_by(|a, b| b.total_cmp(a));
        Self::new(coeffs)
    }

    /// Spectrum from squared weights a_i² (probabilities).
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if let Some(bad) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidSpectrum(format!(
                "weight {bad} is not a nonnegative real"
            )));
        }
        Self::new(weights.iter().map(|w| w.sqrt()).collect())
    }

    /// a_i = 1/√d: the maximally entangled resource.
    pub fn uniform(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidSpectrum("dimension 0".into()));
        }
        Self::new(vec![1.0 / (d as f64).sqrt(); d])
    }

    /// a = (1, 0, …, 0): a product resource.
    pub fn product(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidSpectrum("dimension 0".into()));
        }
        let mut c = vec![0.0; d];
        c[0] = 1.0;
        Self::new(c)
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Squared coefficients a_i².
    pub fn weights(&self) -> Vec<f64> {
        self.coeffs.iter().map(|a| a * a).collect()
    }
}

/// |τ⟩ = Σ a_i |i⟩|i⟩ on A2⊗B2.
pub fn resource_state(spec: &ResourceSpectrum) -> Ket {
    let d = spec.dim();
    let mut v = Ket::zeros(d * d);
    for (i, &a) in spec.coeffs().iter().enumerate() {
        v[i * d + i] = C64::new(a, 0.0);
    }
    v
}

/// The states |Φ_k⟩ = U_{B1↔A2}(|Ψ_k⟩⊗|τ⟩) with their priors.
#[derive(Debug, Clone)]
pub struct Ensemble {
    dim: usize,
    layout: SubsystemLayout,
    states: Vec<Ket>,
    priors: Vec<f64>,
}

impl Ensemble {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// A1,A2,B1,B2 with the cut after A2.
    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn states(&self) -> &[Ket] {
        &self.states
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn densities(&self) -> Vec<ComplexMatrix> {
        self.states.iter().map(ComplexMatrix::projector).collect()
    }

    /// Replaces the priors. Non-uniform priors are representable but none of
    /// the closed-form bounds apply to them; see [`Ensemble::has_uniform_priors`].
    pub fn with_priors(mut self, priors: Vec<f64>) -> Result<Self> {
        if priors.len() != self.states.len() {
            return Err(Error::DimensionMismatch {
                expected: self.states.len(),
                found: priors.len(),
            });
        }
        if priors.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidState("priors must be nonnegative".into()));
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("priors sum to {total}")));
        }
        self.priors = priors;
        Ok(self)
    }

    /// True when the priors are uniform, the only case the bounds cover.
    pub fn has_uniform_priors(&self) -> bool {
        let u = 1.0 / self.priors.len() as f64;
        self.priors.iter().all(|p| (p - u).abs() <= 1e-15)
    }
}

/// Ensemble of the first `n` basis states tensored with the resource.
pub fn build_ensemble(basis: &MaxEntBasis, spec: &ResourceSpectrum, n: usize) -> Result<Ensemble> {
    let d = basis.dim();
    if spec.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: spec.dim(),
        });
    }
    if n == 0 || n > d * d {
        return Err(Error::EnsembleSize {
            n,
            min: 1,
            max: d * d,
        });
    }
    let product_layout = SubsystemLayout::new(vec![d; 4], 2)?;
    let tau = resource_state(spec);
    let states = (0..n)
        .map(|k| permute_ket(&basis.state(k).kron(&tau), &product_layout, &SWAP_B1_A2))
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble {
        dim: d,
        layout: product_layout,
        states,
        priors: vec![1.0 / n as f64; n],
    })
}

/// Descending Schmidt coefficients of `v` across the layout's cut.
///
/// Singular values of the dA×dB coefficient matrix C are read off the
/// eigenvalues ±σ of the Hermitian dilation [[0, C], [C†, 0]], which keeps
/// small coefficients accurate to working precision.
pub fn schmidt_coefficients(v: &Ket, layout: &SubsystemLayout) -> Result<Vec<f64>> {
    if v.dim() != layout.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: layout.total_dim(),
            found: v.dim(),
        });
    }
    let (da, db) = (layout.dim_a(), layout.dim_b());
    let n = da + db;
    let mut dilation = ComplexMatrix::zeros(n, n);
    for i in 0..da {
        for j in 0..db {
            let c = v[i * db + j];
            dilation[(i, da + j)] = c;
            dilation[(da + j, i)] = c.conj();
        }
    }
    let vals = eigenvalues_unchecked(&dilation);
    let r = da.min(db);
    Ok(vals.iter().rev().take(r).map(|s| s.max(0.0)).collect())
}
