//! Seeded generators for random operators, sections and matrices.
//!
//! Every generator takes a caller-owned [`ChaCha8Rng`]; nothing here touches
//! global state. Streams are reproducible for a fixed seed within this crate.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cr_operator::{BundleOperatorSpec, FourierGrid, TrigCoefficient, TrigPolynomial};
use crate::lattice_covers::{Lattice, ModeIndex};
use crate::linalg::{CMatrix, CVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex Gaussian (independent `N(0, 1)` real and imaginary parts).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

/// Uniform on the closed unit disk.
pub fn unit_disk<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let r: f64 = rng.random::<f64>().sqrt();
    let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(r, theta)
}

pub fn complex_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

pub fn complex_vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> CVector {
    CVector::from_fn(len, |_, _| complex_normal(rng))
}

/// Random complex-symmetric matrix with Gaussian entries.
pub fn symmetric_matrix<R: Rng + ?Sized>(rng: &mut R, m: usize) -> CMatrix {
    let g = complex_matrix(rng, m, m);
    (&g + g.transpose()).scale(0.5)
}

/// `exp(K)` for a random complex antisymmetric `K` of entry scale `scale`;
/// lies in `SO(m, ℂ)`.
pub fn special_orthogonal<R: Rng + ?Sized>(rng: &mut R, m: usize, scale: f64) -> CMatrix {
    let g = complex_matrix(rng, m, m);
    ((&g - g.transpose()) * Complex64::new(0.5 * scale, 0.0)).exp()
}

/// Matrix with entries uniform in the unit disk, scaled so its operator norm is at most `bound`.
fn bounded_matrix<R: Rng + ?Sized>(rng: &mut R, m: usize, bound: f64, symmetric: bool) -> CMatrix {
    let raw = CMatrix::from_fn(m, m, |_, _| unit_disk(rng));
    let raw = if symmetric {
        (&raw + raw.transpose()).scale(0.5)
    } else {
        raw
    };
    // Entries of modulus ≤ 1 give operator norm ≤ m.
    raw.scale(bound / m as f64)
}

fn random_mode<R: Rng + ?Sized>(rng: &mut R, bandwidth: i64) -> ModeIndex {
    loop {
        let k = ModeIndex::new(
            rng.random_range(-bandwidth..=bandwidth),
            rng.random_range(-bandwidth..=bandwidth),
        );
        if k != ModeIndex::ZERO {
            return k;
        }
    }
}

/// Shape of a random operator spec.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecShape {
    pub rank: usize,
    pub bandwidth: i64,
    /// Non-constant Fourier terms added to each coefficient.
    pub extra_modes: usize,
    /// Total operator-norm budget of the non-constant part of `β` (and of `A`,
    /// relative to its constant term).
    pub perturbation: f64,
    pub symmetric_beta: bool,
}

impl Default for SpecShape {
    fn default() -> Self {
        Self {
            rank: 1,
            bandwidth: 1,
            extra_modes: 2,
            perturbation: 0.3,
            symmetric_beta: true,
        }
    }
}

/// Random spec with `τ = 0`.
///
/// `β = b₀·I + (perturbation)` with `|b₀| = 1`, so `σ_min(β(z)) ≥ 1 − perturbation`
/// everywhere. `A = a₀·I + (perturbation)` with `|a₀| ∈ [0.3, 1.5]`, which
/// places real degenerate parameters near `±|a₀|` for small perturbations.
pub fn random_spec<R: Rng + ?Sized>(rng: &mut R, lattice: Lattice, shape: &SpecShape) -> BundleOperatorSpec {
    let m = shape.rank;
    let b0 = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    let a0 = Complex64::from_polar(
        rng.random_range(0.3..1.5),
        rng.random_range(0.0..std::f64::consts::TAU),
    );
    let share = shape.perturbation / (shape.extra_modes + 1) as f64;

    let mut beta = vec![TrigCoefficient {
        mode: ModeIndex::ZERO,
        matrix: CMatrix::identity(m, m) * b0 + bounded_matrix(rng, m, share, shape.symmetric_beta),
    }];
    let mut linear = vec![TrigCoefficient {
        mode: ModeIndex::ZERO,
        matrix: CMatrix::identity(m, m) * a0 + bounded_matrix(rng, m, share * a0.norm(), false),
    }];
    for _ in 0..shape.extra_modes {
        beta.push(TrigCoefficient {
            mode: random_mode(rng, shape.bandwidth),
            matrix: bounded_matrix(rng, m, share, shape.symmetric_beta),
        });
        linear.push(TrigCoefficient {
            mode: random_mode(rng, shape.bandwidth),
            matrix: bounded_matrix(rng, m, share * a0.norm(), false),
        });
    }
    BundleOperatorSpec::new(
        lattice,
        TrigPolynomial::new(m, linear).expect("square coefficients"),
        TrigPolynomial::new(m, beta).expect("square coefficients"),
        0.0,
    )
    .expect("matching ranks")
}

/// Random section whose nonzero modes have sup-norm bandwidth at most `bandwidth`.
pub fn random_section<R: Rng + ?Sized>(rng: &mut R, grid: &FourierGrid, rank: usize, bandwidth: i64) -> CVector {
    let mut v = CVector::zeros(grid.dim(rank));
    for (p, mode) in grid.modes().enumerate() {
        if mode.bandwidth() <= bandwidth {
            for r in 0..rank {
                v[p * rank + r] = unit_disk(rng);
            }
        }
    }
    v
}
