//! Seeded randomness: per-trial seed derivation and random test objects.
//!
//! All stochastic entry points take a `u64` seed and build a [`ChaCha8Rng`]
//! from it, so output is reproducible across platforms.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // used only when std is absent from the build graph
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::CMatrix;
use crate::spectral::HermitianMatrix;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One round of the splitmix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master`: `splitmix64(master + index·γ)` with
/// γ the 64-bit golden-ratio increment.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// Standard normal variate (Box-Muller).
pub fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (core::f64::consts::TAU * u2).cos()
}

pub fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(gaussian(rng), gaussian(rng)) * core::f64::consts::FRAC_1_SQRT_2
}

/// Uniform point of the open probability simplex (flat Dirichlet).
pub fn random_simplex_point(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln() + 1e-300).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Flat Dirichlet draw mixed with 5% of the uniform distribution, which keeps
/// every weight comfortably above the faithfulness floor.
pub fn random_probabilities(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let p = random_simplex_point(rng, n);
    let u = 1.0 / n as f64;
    p.into_iter().map(|x| 0.95 * x + 0.05 * u).collect()
}

/// GUE-style random Hermitian matrix with entries of standard deviation `scale`.
pub fn random_hermitian(rng: &mut impl Rng, dim: usize, scale: f64) -> HermitianMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        m[(i, i)] = Complex64::new(gaussian(rng) * scale, 0.0);
        for j in i + 1..dim {
            let z = complex_gaussian(rng) * scale;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    HermitianMatrix::symmetrize(m)
}

/// Orthonormalizes the columns of `m` (modified Gram-Schmidt, two passes).
/// Requires `rows >= cols` and full column rank.
pub fn orthonormalize_columns(m: &mut CMatrix) {
    let (rows, cols) = (m.rows(), m.cols());
    for _ in 0..2 {
        for j in 0..cols {
            for k in 0..j {
                let mut proj = Complex64::new(0.0, 0.0);
                for i in 0..rows {
                    proj += m[(i, k)].conj() * m[(i, j)];
                }
                for i in 0..rows {
                    let v = m[(i, k)];
                    m[(i, j)] -= v * proj;
                }
            }
            let norm = (0..rows).map(|i| m[(i, j)].norm_sqr()).sum::<f64>().sqrt();
            for i in 0..rows {
                m[(i, j)] /= norm;
            }
        }
    }
}

/// Random isometry `rows x cols` (Haar-distributed up to column phases).
pub fn random_isometry(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let mut m = CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng));
    orthonormalize_columns(&mut m);
    m
}

pub fn random_unitary(rng: &mut impl Rng, dim: usize) -> CMatrix {
    random_isometry(rng, dim, dim)
}

/// Random faithful density matrix: random eigenbasis with eigenvalues from
/// [`random_probabilities`].
pub fn random_density_matrix(rng: &mut impl Rng, dim: usize) -> HermitianMatrix {
    let p = random_probabilities(rng, dim);
    let u = random_unitary(rng, dim);
    HermitianMatrix::diagonal(&p).conjugate_by(&u).expect("square unitary")
}
