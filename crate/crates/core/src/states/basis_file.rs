//! JSON basis files: `{"dim": d, "unitaries": [[[re, im], …], …]}`, each
//! unitary a flat row-major list of d² complex entries.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MaxEntBasis;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisFile {
    pub dim: usize,
    pub unitaries: Vec<Vec<[f64; 2]>>,
}

impl BasisFile {
    pub fn from_basis(basis: &MaxEntBasis) -> Self {
        Self {
            dim: basis.dim(),
            unitaries: basis
                .unitaries()
                .iter()
                .map(|u| u.as_slice().iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }

    /// Converts to matrices and runs the full basis validation.
    pub fn into_basis(self) -> Result<MaxEntBasis> {
        let d = self.dim;
        let mut mats = Vec::with_capacity(self.unitaries.len());
        for (k, entries) in self.unitaries.into_iter().enumerate() {
            if entries.len() != d * d {
                return Err(Error::InvalidBasis(format!(
                    "unitary {} has {} entries, expected {}",
                    k + 1,
                    entries.len(),
                    d * d
                )));
            }
            let data = entries
                .into_iter()
                .map(|[re, im]| C64::new(re, im))
                .collect();
            mats.push(ComplexMatrix::from_vec(d, d, data)?);
        }
        MaxEntBasis::new(mats)
    }

    pub fn from_json(text: &str) -> Result<MaxEntBasis> {
        let file: BasisFile = serde_json::from_str(text)?;
        file.into_basis()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Reads and validates a basis file.
pub fn load_basis_file(path: impl AsRef<Path>) -> Result<MaxEntBasis> {
    let text = std::fs::read_to_string(path)?;
    BasisFile::from_json(&text)
}
