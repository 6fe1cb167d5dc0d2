//! Seeded random objects for sweeps and property checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::linalg::{ComplexMatrix, Ket, C64};
use crate::states::ResourceSpectrum;

/// Deterministic RNG used everywhere a seed is accepted.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn random_complex_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// (G + G†)/2 for a complex Gaussian G.
pub fn random_hermitian(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    random_complex_matrix(n, n, rng).hermitian_part()
}

/// Normalized ket with complex Gaussian amplitudes.
pub fn random_ket(dim: usize, rng: &mut impl Rng) -> Ket {
    Ket::new((0..dim).map(|_| gaussian(rng)).collect()).normalized()
}

/// Haar-distributed unitary: Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = random_complex_matrix(n, n, rng);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    for c in 0..n {
        let mut v: Vec<C64> = (0..n).map(|r| g[(r, c)]).collect();
        // two passes keep the columns orthogonal to working precision
        for _ in 0..2 {
            for q in &cols {
                let proj: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
        cols.push(v);
    }
    ComplexMatrix::from_fn(n, n, |r, c| cols[c][r])
}

/// Random Schmidt spectrum: `d` exponential draws normalized to unit sum as
/// squared weights, square-rooted and sorted descending.
pub fn random_spectrum(d: usize, rng: &mut impl Rng) -> ResourceSpectrum {
    let draws: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    let mut coeffs: Vec<f64> = draws.iter().map(|w| (w / total).sqrt()).collect();
    coeffs.sort_by(|a, b| b.total_cmp(a));
    ResourceSpectrum::new_normalized(coeffs).expect("sampled spectrum is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = seeded_rng(1);
        for n in [1, 2, 3, 7] {
            assert!(random_unitary(n, &mut rng).unitarity_defect() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_draws() {
        let a = random_spectrum(4, &mut seeded_rng(42));
        let b = random_spectrum(4, &mut seeded_rng(42));
        assert_eq!(a, b);
    }

    #[test]
    fn spectrum_is_sorted_and_normalized() {
        let mut rng = seeded_rng(2);
        for d in 2..6 {
            let s = random_spectrum(d, &mut rng);
            let c = s.coeffs();
            assert!(c.windows(2).all(|w| w[0] >= w[1]));
            assert!((c.iter().map(|a| a * a).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
