//! Hermitian eigensolver.
//!
//! Householder reduction of the Hermitian matrix to complex tridiagonal form,
//! a diagonal phase change that makes the tridiagonal real, and implicit QL
//! iterations (the EISPACK `tql2` scheme) on the real tridiagonal matrix.
//! The QL rotations are accumulated in a real matrix stored transposed so
//! that every rotation touches two contiguous rows.

use super::{ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Eigen-decomposition `M = V·diag(λ)·V†` with eigenvalues ascending and
/// eigenvectors in the columns of `V`.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermEig {
    /// Rebuilds `V·diag(λ)·V†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        weighted_gram(&self.eigenvectors, &self.eigenvalues, |_| true)
    }
}

fn check_hermitian(m: &ComplexMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if !m.is_hermitian() {
        return Err(Error::NotHermitian {
            defect: m.hermiticity_defect(),
        });
    }
    Ok(())
}

/// Full eigen-decomposition of a Hermitian matrix.
pub fn herm_eig(m: &ComplexMatrix) -> Result<HermEig> {
    check_hermitian(m)?;
    Ok(eig_unchecked(m))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    check_hermitian(m)?;
    Ok(min_eigenvalue_unchecked(m))
}

/// Frobenius-nearest positive semidefinite matrix: eigenvalues clipped at 0.
pub fn psd_project(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_hermitian(m)?;
    Ok(psd_project_unchecked(m))
}

pub(crate) fn min_eigenvalue_unchecked(m: &ComplexMatrix) -> f64 {
    eigenvalues_unchecked(m)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Eigenvalues (ascending) of the Hermitian part of `m`, without vectors.
pub(crate) fn eigenvalues_unchecked(m: &ComplexMatrix) -> Vec<f64> {
    let tri = tridiagonalize(m);
    let mut d = tri.diag.clone();
    let mut e: Vec<f64> = tri.off.iter().map(|z| z.norm()).collect();
    e.push(0.0);
    tql(&mut d, &mut e, None);
    d.sort_by(|a, b| a.total_cmp(b));
    d
}

/// Eigen-decomposition of the Hermitian part of `m`.
pub(crate) fn eig_unchecked(m: &ComplexMatrix) -> HermEig {
    let n = m.rows();
    let tri = tridiagonalize(m);
    let mut d = tri.diag.clone();
    let mut e: Vec<f64> = tri.off.iter().map(|z| z.norm()).collect();
    e.push(0.0);

    // rows of zt are the columns of the orthogonal QL accumulator
    let mut zt = vec![0.0; n * n];
    for i in 0..n {
        zt[i * n + i] = 1.0;
    }
    tql(&mut d, &mut e, Some(&mut zt));

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));

    // diagonal phases turning the complex tridiagonal into a real one
    let mut phase = vec![ONE; n];
    for k in 0..n.saturating_sub(1) {
        let z = tri.off[k];
        let r = z.norm();
        phase[k + 1] = if r > 0.0 {
            phase[k] * (z / r)
        } else {
            phase[k]
        };
    }

    let mut w = ComplexMatrix::zeros(n, n);
    {
        let wd = w.as_mut_slice();
        for (j, &src) in order.iter().enumerate() {
            let col = &zt[src * n..(src + 1) * n];
            for r in 0..n {
                wd[r * n + j] = phase[r] * col[r];
            }
        }
    }
    tri.apply_reflectors(&mut w);

    HermEig {
        eigenvalues: order.iter().map(|&i| d[i]).collect(),
        eigenvectors: w,
    }
}

pub(crate) fn psd_project_unchecked(m: &ComplexMatrix) -> ComplexMatrix {
    let eig = eig_unchecked(m);
    let negatives = eig.eigenvalues.iter().filter(|&&l| l < 0.0).count();
    let n = m.rows();
    if negatives == 0 {
        return m.hermitian_part();
    }
    if negatives == n {
        return ComplexMatrix::zeros(n, n);
    }
    if 2 * negatives <= n {
        // M − Σ_{λ<0} λ v v†
        let neg = weighted_gram(&eig.eigenvectors, &eig.eigenvalues, |l| l < 0.0);
        let mut out = m.hermitian_part();
        out -= &neg;
        out
    } else {
        weighted_gram(&eig.eigenvectors, &eig.eigenvalues, |l| l > 0.0)
    }
}

/// Σ_j λ_j v_j v_j† over the eigenpairs whose eigenvalue passes `keep`.
fn weighted_gram(v: &ComplexMatrix, lambda: &[f64], keep: impl Fn(f64) -> bool) -> ComplexMatrix {
    let n = v.rows();
    let sel: Vec<usize> = (0..lambda.len()).filter(|&j| keep(lambda[j])).collect();
    let k = sel.len();
    let mut s = vec![ZERO; n * k];
    let mut t = vec![ZERO; n * k];
    for r in 0..n {
        for (jj, &j) in sel.iter().enumerate() {
            let x = v[(r, j)];
            s[r * k + jj] = x.conj();
            t[r * k + jj] = x * lambda[j];
        }
    }
    let mut out = ComplexMatrix::zeros(n, n);
    let od = out.as_mut_slice();
    for r in 0..n {
        let tr = &t[r * k..(r + 1) * k];
        for c in r..n {
            let sc = &s[c * k..(c + 1) * k];
            let mut acc = ZERO;
            for (a, b) in tr.iter().zip(sc) {
                acc += a * b;
            }
            od[r * n + c] = acc;
            od[c * n + r] = acc.conj();
        }
        od[r * n + r].im = 0.0;
    }
    out
}

struct Tridiagonal {
    n: usize,
    diag: Vec<f64>,
    /// `off[k]` is the subdiagonal entry T[k+1, k].
    off: Vec<C64>,
    /// Householder vectors for steps k = 0..n-2 acting on indices k+1..n.
    reflectors: Vec<(Vec<C64>, f64)>,
}

impl Tridiagonal {
    /// `w ← H_0·H_1·…·H_{n-3}·w`.
    fn apply_reflectors(&self, w: &mut ComplexMatrix) {
        let n = self.n;
        let cols = w.cols();
        let wd = w.as_mut_slice();
        let mut acc = vec![ZERO; cols];
        for (k, (v, tau)) in self.reflectors.iter().enumerate().rev() {
            if *tau == 0.0 {
                continue;
            }
            let start = k + 1;
            acc.iter_mut().for_each(|a| *a = ZERO);
            for (i, vi) in v.iter().enumerate() {
                let row = &wd[(start + i) * cols..(start + i + 1) * cols];
                let cv = vi.conj();
                for (a, x) in acc.iter_mut().zip(row) {
                    *a += cv * x;
                }
            }
            for (i, vi) in v.iter().enumerate() {
                let f = vi * *tau;
                let row = &mut wd[(start + i) * cols..(start + i + 1) * cols];
                for (x, a) in row.iter_mut().zip(&acc) {
                    *x -= f * a;
                }
            }
        }
        debug_assert_eq!(n, w.rows());
    }
}

/// Householder reduction of the Hermitian part of `m` to tridiagonal form.
fn tridiagonalize(m: &ComplexMatrix) -> Tridiagonal {
    let n = m.rows();
    let mut a = m.hermitian_part().into_vec();
    let mut diag = vec![0.0; n];
    let mut off = vec![ZERO; n.saturating_sub(1)];
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));

    let mut p = vec![ZERO; n];
    for k in 0..n.saturating_sub(1) {
        diag[k] = a[k * n + k].re;
        let len = n - k - 1;
        let x: Vec<C64> = (0..len).map(|i| a[(k + 1 + i) * n + k]).collect();
        if k + 2 >= n {
            off[k] = x[0];
            continue;
        }
        let tail: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if tail == 0.0 {
            off[k] = x[0];
            reflectors.push((Vec::new(), 0.0));
            continue;
        }
        let x0_abs = x[0].norm();
        let alpha = (x0_abs * x0_abs + tail).sqrt();
        let ph = if x0_abs > 0.0 { x[0] / x0_abs } else { ONE };
        let mut v = x;
        v[0] += ph * alpha;
        let tau = 1.0 / (alpha * (alpha + x0_abs));
        off[k] = -ph * alpha;

        // p = τ·B·v on the trailing block B = a[k+1.., k+1..]
        let start = k + 1;
        let p = &mut p[..len];
        for i in 0..len {
            let row = &a[(start + i) * n + start..(start + i) * n + n];
            let mut s = ZERO;
            for (b, vj) in row.iter().zip(&v) {
                s += b * vj;
            }
            p[i] = s * tau;
        }
        let vp: C64 = v.iter().zip(p.iter()).map(|(vi, pi)| vi.conj() * pi).sum();
        let kk = 0.5 * tau * vp.re;
        for (pi, vi) in p.iter_mut().zip(&v) {
            *pi -= vi * kk;
        }
        // B ← B − v w† − w v†
        for i in 0..len {
            let vi = v[i];
            let wi = p[i];
            let row = &mut a[(start + i) * n + start..(start + i) * n + n];
            for ((b, vj), wj) in row.iter_mut().zip(&v).zip(p.iter()) {
                *b -= vi * wj.conj() + wi * vj.conj();
            }
        }
        reflectors.push((v, tau));
    }
    if n > 0 {
        diag[n - 1] = a[(n - 1) * n + (n - 1)].re;
    }
    Tridiagonal {
        n,
        diag,
        off,
        reflectors,
    }
}

/// Implicit QL on the symmetric tridiagonal (d, e), `e[i]` coupling i and
/// i+1 and `e[n-1] = 0`. When `zt` is given the rotations are accumulated
/// into its rows.
fn tql(d: &mut [f64], e: &mut [f64], mut zt: Option<&mut [f64]>) {
    let n = d.len();
    if n <= 1 {
        return;
    }
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    if let Some(z) = zt.as_deref_mut() {
                        let (lo, hi) = z.split_at_mut((i + 1) * n);
                        let zi = &mut lo[i * n..];
                        let zi1 = &mut hi[..n];
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let hh = *b;
                            *b = s * *a + c * hh;
                            *a = c * *a - s * hh;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 || iter >= 200 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, seeded_rng};

    fn check_decomposition(m: &ComplexMatrix, eig: &HermEig) {
        let n = m.rows();
        let scale = m.frobenius_norm().max(1.0);
        let v = &eig.eigenvectors;
        let mv = m.matmul(v);
        let mut vl = v.clone();
        for r in 0..n {
            for c in 0..n {
                vl[(r, c)] *= eig.eigenvalues[c];
            }
        }
        assert!(
            mv.distance(&vl) <= 1e-10 * scale,
            "residual {}",
            mv.distance(&vl)
        );
        assert!(v.unitarity_defect() < 1e-10);
        assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn diagonal_sorted() {
        let eig = herm_eig(&ComplexMatrix::from_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn pauli_x_eigenvalues() {
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let eig = herm_eig(&x).unwrap();
        assert!((eig.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-15);
        check_decomposition(&x, &eig);
    }

    #[test]
    fn pauli_y_complex_entries() {
        let y = ComplexMatrix::from_fn(2, 2, |r, c| match (r, c) {
            (0, 1) => C64::new(0.0, -1.0),
            (1, 0) => C64::new(0.0, 1.0),
            _ => ZERO,
        });
        let eig = herm_eig(&y).unwrap();
        check_decomposition(&y, &eig);
    }

    #[test]
    fn random_hermitian_reconstruction() {
        let mut rng = seeded_rng(11);
        for &n in &[1usize, 2, 3, 5, 16, 33, 81] {
            let m = random_hermitian(n, &mut rng);
            let eig = herm_eig(&m).unwrap();
            check_decomposition(&m, &eig);
            let rec = eig.reconstruct();
            assert!(rec.distance(&m) <= 1e-10 * m.frobenius_norm());
            let vals = eigenvalues_unchecked(&m);
            for (a, b) in vals.iter().zip(&eig.eigenvalues) {
                assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
            }
        }
    }

    #[test]
    fn large_random_hermitian() {
        let mut rng = seeded_rng(12);
        let m = random_hermitian(256, &mut rng);
        let eig = herm_eig(&m).unwrap();
        check_decomposition(&m, &eig);
    }

    #[test]
    fn degenerate_spectrum() {
        // projector with a large degenerate eigenspace
        let mut rng = seeded_rng(13);
        let h = random_hermitian(12, &mut rng);
        let eig = herm_eig(&h).unwrap();
        let mut lambda = vec![0.0; 12];
        for l in lambda.iter_mut().skip(9) {
            *l = 1.0;
        }
        let p = weighted_gram(&eig.eigenvectors, &lambda, |_| true);
        let pe = herm_eig(&p).unwrap();
        check_decomposition(&p, &pe);
        for (i, l) in pe.eigenvalues.iter().enumerate() {
            let want = if i < 9 { 0.0 } else { 1.0 };
            assert!((l - want).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!(matches!(herm_eig(&m), Err(Error::NotHermitian { .. })));
        assert!(min_eigenvalue(&m).is_err());
        assert!(psd_project(&m).is_err());
        assert!(herm_eig(&ComplexMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn min_eigenvalue_examples() {
        assert!((min_eigenvalue(&ComplexMatrix::identity(4)).unwrap() - 1.0).abs() < 1e-15);
        assert!(
            (min_eigenvalue(&ComplexMatrix::from_diag(&[2.0, -3.0])).unwrap() + 3.0).abs() < 1e-15
        );
    }

    #[test]
    fn psd_project_examples() {
        let p = psd_project(&ComplexMatrix::from_diag(&[1.0, -1.0])).unwrap();
        assert!(p.distance(&ComplexMatrix::from_diag(&[1.0, 0.0])) < 1e-15);

        let mut rng = seeded_rng(14);
        let g = random_hermitian(6, &mut rng);
        let psd = g.matmul(&g);
        assert!(psd_project(&psd).unwrap().distance(&psd) < 1e-10 * psd.frobenius_norm());
    }

    #[test]
    fn psd_project_is_idempotent_and_psd() {
        let mut rng = seeded_rng(15);
        for n in [4usize, 9, 20] {
            let m = random_hermitian(n, &mut rng);
            let p = psd_project(&m).unwrap();
            assert!(min_eigenvalue(&p).unwrap() > -1e-12);
            let pp = psd_project(&p).unwrap();
            assert!(pp.distance(&p) < 1e-10);
        }
    }

    #[test]
    fn psd_project_is_nearest_among_samples() {
        let mut rng = seeded_rng(16);
        let m = random_hermitian(6, &mut rng);
        let p = psd_project(&m).unwrap();
        let best = m.distance(&p);
        for _ in 0..20 {
            let g = random_hermitian(6, &mut rng);
            let q = g.matmul(&g).scale(0.2);
            assert!(best <= m.distance(&q) + 1e-12);
            // nudging the projection inside the cone never helps either
            let q2 = &p + &q.scale(0.01);
            assert!(best <= m.distance(&q2) + 1e-12);
        }
    }

    #[test]
    fn psd_project_extreme_cases() {
        let neg = ComplexMatrix::from_diag(&[-1.0, -2.0, -0.5]);
        assert_eq!(psd_project(&neg).unwrap(), ComplexMatrix::zeros(3, 3));
        let mostly_neg = ComplexMatrix::from_diag(&[-1.0, -2.0, 0.5]);
        let p = psd_project(&mostly_neg).unwrap();
        assert!(p.distance(&ComplexMatrix::from_diag(&[0.0, 0.0, 0.5])) < 1e-15);
    }
}
