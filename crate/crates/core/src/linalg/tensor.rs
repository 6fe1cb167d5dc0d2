use serde::{Deserialize, Serialize};

use super::{ComplexMatrix, Ket};
use crate::error::{Error, Result};

/// Ordered factor dimensions of a tensor-product space together with the
/// cut that splits the factors into party A (prefix) and party B (suffix).
///
/// Factor 0 is the most significant digit of a composite index, matching the
/// ordering produced by [`kron`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsystemLayout {
    factor_dims: Vec<usize>,
    cut: usize,
}

impl SubsystemLayout {
    pub fn new(factor_dims: Vec<usize>, cut: usize) -> Result<Self> {
        if factor_dims.len() < 2 {
            return Err(Error::InvalidLayout(format!(
                "need at least two factors, got {}",
                factor_dims.len()
            )));
        }
        if factor_dims.contains(&0) {
            return Err(Error::InvalidLayout(
                "factor dimensions must be positive".into(),
            ));
        }
        if cut == 0 || cut >= factor_dims.len() {
            return Err(Error::InvalidLayout(format!(
                "cut {cut} must lie in [1, {})",
                factor_dims.len()
            )));
        }
        Ok(Self { factor_dims, cut })
    }

    /// Two factors `da ⊗ db` with the cut between them.
    pub fn bipartite(da: usize, db: usize) -> Result<Self> {
        Self::new(vec![da, db], 1)
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn num_factors(&self) -> usize {
        self.factor_dims.len()
    }

    pub fn cut(&self) -> usize {
        self.cut
    }

    pub fn total_dim(&self) -> usize {
        self.factor_dims.iter().product()
    }

    /// Indices of the factors held by party A.
    pub fn party_a(&self) -> Vec<usize> {
        (0..self.cut).collect()
    }

    pub fn dim_a(&self) -> usize {
        self.factor_dims[..self.cut].iter().product()
    }

    pub fn dim_b(&self) -> usize {
        self.factor_dims[self.cut..].iter().product()
    }

    /// The layout obtained after reordering the factors by `perm`; the cut
    /// position is kept.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.num_factors())?;
        Ok(Self {
            factor_dims: perm.iter().map(|&p| self.factor_dims[p]).collect(),
            cut: self.cut,
        })
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.factor_dims.len()];
        for f in (0..self.factor_dims.len() - 1).rev() {
            strides[f] = strides[f + 1] * self.factor_dims[f + 1];
        }
        strides
    }

    fn check_square(&self, m: &ComplexMatrix) -> Result<()> {
        let n = self.total_dim();
        if !m.is_square() || m.rows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: if m.is_square() {
                    m.rows()
                } else {
                    m.rows() * m.cols()
                },
            });
        }
        Ok(())
    }
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::InvalidPermutation(format!(
            "length {} for {} factors",
            perm.len(),
            n
        )));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidPermutation(format!(
                "{perm:?} is not a permutation"
            )));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Kronecker product: `(A⊗B)[i·rB + k, j·cB + l] = A[i,j]·B[k,l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ra, ca, rb, cb) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = ComplexMatrix::zeros(ra * rb, ca * cb);
    let cols = ca * cb;
    let dst = out.as_mut_slice();
    for i in 0..ra {
        for j in 0..ca {
            let s = a[(i, j)];
            if s == super::ZERO {
                continue;
            }
            for k in 0..rb {
                let row = (i * rb + k) * cols + j * cb;
                for (o, &v) in dst[row..row + cb].iter_mut().zip(b.row(k)) {
                    *o = s * v;
                }
            }
        }
    }
    out
}

/// Transposes the listed factors of `m` in the computational basis, leaving
/// the other factors untouched.
pub fn partial_transpose(
    m: &ComplexMatrix,
    layout: &SubsystemLayout,
    factors: &[usize],
) -> Result<ComplexMatrix> {
    layout.check_square(m)?;
    let nf = layout.num_factors();
    if let Some(&bad) = factors.iter().find(|&&f| f >= nf) {
        return Err(Error::InvalidLayout(format!(
            "factor {bad} out of range for {nf} factors"
        )));
    }
    let n = layout.total_dim();
    let strides = layout.strides();
    let mut transposed = vec![false; nf];
    for &f in factors {
        transposed[f] = true;
    }

    // Split every composite index into the digits belonging to transposed
    // factors and the rest, so that (r, c) -> (r_kept + c_moved, c_kept + r_moved).
    let mut moved = vec![0usize; n];
    let mut kept = vec![0usize; n];
    for idx in 0..n {
        let mut rem = idx;
        for f in 0..nf {
            let digit = rem / strides[f];
            rem %= strides[f];
            if transposed[f] {
                moved[idx] += digit * strides[f];
            } else {
                kept[idx] += digit * strides[f];
            }
        }
    }

    let src = m.as_slice();
    let mut out = ComplexMatrix::zeros(n, n);
    let dst = out.as_mut_slice();
    for r in 0..n {
        for c in 0..n {
            let r2 = kept[r] + moved[c];
            let c2 = kept[c] + moved[r];
            dst[r2 * n + c2] = src[r * n + c];
        }
    }
    Ok(out)
}

/// Index map sending a composite index in `layout` to its position after the
/// factors are reordered so that output factor `i` is input factor `perm[i]`.
fn permutation_index_map(layout: &SubsystemLayout, perm: &[usize]) -> Result<Vec<usize>> {
    check_permutation(perm, layout.num_factors())?;
    let dims = layout.factor_dims();
    let in_strides = layout.strides();
    let out_layout = layout.permuted(perm)?;
    let out_strides = out_layout.strides();
    // position of input factor f in the output
    let mut position = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        position[p] = i;
    }
    let n = layout.total_dim();
    Ok((0..n)
        .map(|idx| {
            (0..dims.len())
                .map(|f| ((idx / in_strides[f]) % dims[f]) * out_strides[position[f]])
                .sum()
        })
        .collect())
}

/// Reorders tensor factors: returns `P·M·P†` with `P` the permutation unitary
/// that places input factor `perm[i]` at output position `i`.
pub fn permute_factors(
    m: &ComplexMatrix,
    layout: &SubsystemLayout,
    perm: &[usize],
) -> Result<ComplexMatrix> {
    layout.check_square(m)?;
    let map = permutation_index_map(layout, perm)?;
    let n = layout.total_dim();
    let src = m.as_slice();
    let mut out = ComplexMatrix::zeros(n, n);
    let dst = out.as_mut_slice();
    for r in 0..n {
        let r2 = map[r] * n;
        for c in 0..n {
            dst[r2 + map[c]] = src[r * n + c];
        }
    }
    Ok(out)
}

/// Reorders the tensor factors of a ket; see [`permute_factors`].
pub fn permute_ket(v: &Ket, layout: &SubsystemLayout, perm: &[usize]) -> Result<Ket> {
    if v.dim() != layout.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: layout.total_dim(),
            found: v.dim(),
        });
    }
    let map = permutation_index_map(layout, perm)?;
    let mut out = Ket::zeros(v.dim());
    for (i, &j) in map.iter().enumerate() {
        out[j] = v[i];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_complex_matrix, seeded_rng};

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let k = kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2));
        assert_eq!(k, ComplexMatrix::identity(4));
    }

    #[test]
    fn kron_x_z_block_structure() {
        let k = kron(&pauli_x(), &pauli_z());
        let expected = ComplexMatrix::from_real_rows(&[
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 0.0, 0.0, -1.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, -1.0, 0.0, 0.0],
        ]);
        assert_eq!(k, expected);
    }

    #[test]
    fn kron_shape() {
        let a = ComplexMatrix::zeros(2, 3);
        let b = ComplexMatrix::zeros(4, 5);
        let k = kron(&a, &b);
        assert_eq!((k.rows(), k.cols()), (8, 15));
    }

    #[test]
    fn kron_entry_formula() {
        let mut rng = seeded_rng(3);
        let a = random_complex_matrix(2, 3, &mut rng);
        let b = random_complex_matrix(3, 2, &mut rng);
        let k = kron(&a, &b);
        for i in 0..2 {
            for j in 0..3 {
                for p in 0..3 {
                    for q in 0..2 {
                        assert_eq!(k[(i * 3 + p, j * 2 + q)], a[(i, j)] * b[(p, q)]);
                    }
                }
            }
        }
    }

    #[test]
    fn empty_partial_transpose_is_identity_map() {
        let mut rng = seeded_rng(1);
        let m = random_complex_matrix(6, 6, &mut rng);
        let layout = SubsystemLayout::bipartite(2, 3).unwrap();
        assert_eq!(partial_transpose(&m, &layout, &[]).unwrap(), m);
    }

    #[test]
    fn full_partial_transpose_is_transpose() {
        let mut rng = seeded_rng(2);
        let m = random_complex_matrix(6, 6, &mut rng);
        let layout = SubsystemLayout::bipartite(3, 2).unwrap();
        assert_eq!(
            partial_transpose(&m, &layout, &[0, 1]).unwrap(),
            m.transpose()
        );
    }

    #[test]
    fn partial_transpose_of_product_transposes_one_factor() {
        let mut rng = seeded_rng(4);
        let a = random_complex_matrix(2, 2, &mut rng);
        let b = random_complex_matrix(3, 3, &mut rng);
        let layout = SubsystemLayout::bipartite(2, 3).unwrap();
        let pt = partial_transpose(&kron(&a, &b), &layout, &[0]).unwrap();
        assert!(pt.distance(&kron(&a.transpose(), &b)) < 1e-15);
        let pt = partial_transpose(&kron(&a, &b), &layout, &[1]).unwrap();
        assert!(pt.distance(&kron(&a, &b.transpose())) < 1e-15);
    }

    #[test]
    fn partial_transpose_dimension_mismatch() {
        let layout = SubsystemLayout::bipartite(2, 2).unwrap();
        let m = ComplexMatrix::identity(3);
        assert!(partial_transpose(&m, &layout, &[0]).is_err());
        assert!(partial_transpose(&ComplexMatrix::identity(4), &layout, &[2]).is_err());
    }

    #[test]
    fn swap_acts_on_product_kets() {
        // |a1⟩|b1⟩|a2⟩|b2⟩ -> |a1⟩|a2⟩|b1⟩|b2⟩
        let layout = SubsystemLayout::new(vec![2, 3, 2, 3], 2).unwrap();
        let mut rng = seeded_rng(5);
        let kets: Vec<Ket> = [2, 3, 2, 3]
            .iter()
            .map(|&d| random_complex_matrix(d, 1, &mut rng).column(0))
            .collect();
        let input = kets[0].kron(&kets[1]).kron(&kets[2]).kron(&kets[3]);
        let expected = kets[0].kron(&kets[2]).kron(&kets[1]).kron(&kets[3]);
        let swapped = permute_ket(&input, &layout, &[0, 2, 1, 3]).unwrap();
        assert!(swapped.distance(&expected) < 1e-13);

        let rho = ComplexMatrix::projector(&input);
        let swapped_rho = permute_factors(&rho, &layout, &[0, 2, 1, 3]).unwrap();
        assert!(swapped_rho.distance(&ComplexMatrix::projector(&expected)) < 1e-12);
    }

    #[test]
    fn permute_then_inverse_restores() {
        let layout = SubsystemLayout::new(vec![2, 3, 2], 1).unwrap();
        let mut rng = seeded_rng(6);
        let m = random_complex_matrix(12, 12, &mut rng);
        let perm = [2, 0, 1];
        let inv = [1, 2, 0];
        let p = permute_factors(&m, &layout, &perm).unwrap();
        let back = permute_factors(&p, &layout.permuted(&perm).unwrap(), &inv).unwrap();
        assert_eq!(back, m);
        assert_eq!(permute_factors(&m, &layout, &[0, 1, 2]).unwrap(), m);
    }

    #[test]
    fn permute_matches_explicit_permutation_unitary() {
        let layout = SubsystemLayout::new(vec![2, 3, 2], 1).unwrap();
        let perm = [1, 2, 0];
        let n = 12;
        // P|x⟩ = |permuted x⟩ built from basis kets
        let mut p = ComplexMatrix::zeros(n, n);
        for x in 0..n {
            let image = permute_ket(&Ket::basis(n, x), &layout, &perm).unwrap();
            for y in 0..n {
                p[(y, x)] = image[y];
            }
        }
        let mut rng = seeded_rng(7);
        let m = random_complex_matrix(n, n, &mut rng);
        let direct = p.matmul(&m).matmul(&p.adjoint());
        assert!(
            permute_factors(&m, &layout, &perm)
                .unwrap()
                .distance(&direct)
                < 1e-14
        );
    }

    #[test]
    fn invalid_permutations_rejected() {
        let layout = SubsystemLayout::new(vec![2, 2, 2], 1).unwrap();
        let m = ComplexMatrix::identity(8);
        assert!(permute_factors(&m, &layout, &[0, 1]).is_err());
        assert!(permute_factors(&m, &layout, &[0, 1, 1]).is_err());
        assert!(permute_factors(&m, &layout, &[0, 1, 3]).is_err());
    }

    #[test]
    fn layout_validation() {
        assert!(SubsystemLayout::new(vec![2], 1).is_err());
        assert!(SubsystemLayout::new(vec![2, 2], 0).is_err());
        assert!(SubsystemLayout::new(vec![2, 2], 2).is_err());
        assert!(SubsystemLayout::new(vec![2, 0], 1).is_err());
        let l = SubsystemLayout::new(vec![2, 3, 4, 5], 2).unwrap();
        assert_eq!(l.total_dim(), 120);
        assert_eq!((l.dim_a(), l.dim_b()), (6, 20));
        assert_eq!(l.party_a(), vec![0, 1]);
    }

    #[test]
    fn pt_of_identity_is_identity() {
        let layout = SubsystemLayout::new(vec![3, 3], 1).unwrap();
        let i = ComplexMatrix::identity(9);
        assert_eq!(partial_transpose(&i, &layout, &[0]).unwrap(), i);
    }
}
