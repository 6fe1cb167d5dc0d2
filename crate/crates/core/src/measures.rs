//! Closed-form entanglement quantities of a pure resource state.

use crate::error::{Error, Result};
use crate::linalg::{Ket, SubsystemLayout};
use crate::states::{schmidt_coefficients, ResourceSpectrum};

/// Fully entangled fraction (Σ a_i)² / d, in [1/d, 1].
pub fn fef(spec: &ResourceSpectrum) -> f64 {
    fef_from_coeffs(spec.coeffs())
}

/// Σ_{i<j} a_i a_j. Satisfies `fef = (1 + 2·negativity) / d`.
pub fn negativity(spec: &ResourceSpectrum) -> f64 {
    let a = spec.coeffs();
    let mut total = 0.0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            total += a[i] * a[j];
        }
    }
    total
}

/// Fully entangled fraction of a pure bipartite state, via its Schmidt
/// coefficients. The two parties must have equal local dimension.
pub fn fef_pure(v: &Ket, layout: &SubsystemLayout) -> Result<f64> {
    let (da, db) = (layout.dim_a(), layout.dim_b());
    if da != db {
        return Err(Error::InvalidLayout(format!(
            "fully entangled fraction needs equal local dimensions, got {da} and {db}"
        )));
    }
    let coeffs = schmidt_coefficients(v, layout)?;
    Ok(fef_from_coeffs(&coeffs))
}

fn fef_from_coeffs(a: &[f64]) -> f64 {
    let s: f64 = a.iter().sum();
    s * s / a.len() as f64
}
