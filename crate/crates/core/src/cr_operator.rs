//! Spectral discretization of real-linear Cauchy-Riemann operators
//! `D_τ η = ∂̄η + A η + τ β η̄` on a trivial rank-`m` bundle over a flat torus.
//!
//! Sections are truncated Fourier series `η(z) = Σ_ξ c_ξ e^{2πi⟨ξ,z⟩}` over
//! the dual-lattice modes `−N/2 ≤ kᵢ < N/2`. In that basis `∂̄ = ∂_s + i∂_t`
//! is diagonal, multiplication by a trigonometric polynomial is a
//! convolution, and conjugation sends mode `ξ` to mode `−ξ`. The operator is
//! stored as the pair `(P, Q)` acting by `v ↦ Pv + Qv̄`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::lattice_covers::{mode_embedding, Lattice, ModeIndex, Sublattice};
use crate::linalg::{self, CMatrix, CVector, I};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("grid size N must be even and at least 4, got {0}")]
    Grid(usize),
    #[error("coefficient mode ({k1}, {k2}) exceeds the bandwidth limit {limit}")]
    Bandwidth { k1: i64, k2: i64, limit: i64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("coefficient matrix is {rows}x{cols}, bundle rank is {rank}")]
    Rank { rows: usize, cols: usize, rank: usize },
    #[error("bundle rank must be at least 1")]
    ZeroRank,
    #[error("lattice of the operator does not match the grid lattice")]
    LatticeMismatch,
    #[error("mode ({k1}, {k2}) does not fit on the cover grid")]
    CoverGrid { k1: i64, k2: i64 },
}

/// One Fourier term `M · e^{2πi⟨ξ,z⟩}` of a matrix-valued function.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigCoefficient {
    pub mode: ModeIndex,
    pub matrix: CMatrix,
}

/// A matrix-valued trigonometric polynomial on the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    rank: usize,
    terms: Vec<TrigCoefficient>,
}

impl TrigPolynomial {
    pub fn new(rank: usize, terms: Vec<TrigCoefficient>) -> Result<Self, OperatorError> {
        if rank == 0 {
            return Err(OperatorError::ZeroRank);
        }
        for t in &terms {
            if t.matrix.nrows() != rank || t.matrix.ncols() != rank {
                return Err(OperatorError::Rank {
                    rows: t.matrix.nrows(),
                    cols: t.matrix.ncols(),
                    rank,
                });
            }
        }
        Ok(Self { rank, terms })
    }

    pub fn zero(rank: usize) -> Self {
        Self {
            rank,
            terms: Vec::new(),
        }
    }

    pub fn constant(matrix: CMatrix) -> Self {
        Self {
            rank: matrix.nrows(),
            terms: vec![TrigCoefficient {
                mode: ModeIndex::ZERO,
                matrix,
            }],
        }
    }

    /// Scalar multiple of the identity.
    pub fn scalar(rank: usize, value: Complex64) -> Self {
        Self::constant(CMatrix::identity(rank, rank) * value)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn terms(&self) -> &[TrigCoefficient] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.matrix.iter().all(|z| *z == Complex64::new(0.0, 0.0)))
    }

    /// Largest `max(|k₁|, |k₂|)` over the terms; 0 when empty.
    pub fn bandwidth(&self) -> i64 {
        self.terms.iter().map(|t| t.mode.bandwidth()).max().unwrap_or(0)
    }

    /// Value at the point with lattice coordinates `(x₁, x₂)`.
    pub fn eval(&self, x1: f64, x2: f64) -> CMatrix {
        let mut out = CMatrix::zeros(self.rank, self.rank);
        for t in &self.terms {
            let phase = 2.0 * PI * (t.mode.k1 as f64 * x1 + t.mode.k2 as f64 * x2);
            out += &t.matrix * Complex64::from_polar(1.0, phase);
        }
        out
    }

    /// `∂ = ∂_s − i∂_t`, which multiplies mode `ξ` by `2π(iξ₁ + ξ₂)`.
    pub fn holomorphic_derivative(&self, lattice: &Lattice) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let xi = lattice.dual_vector(t.mode);
                let symbol = Complex64::new(2.0 * PI * xi[1], 2.0 * PI * xi[0]);
                TrigCoefficient {
                    mode: t.mode,
                    matrix: &t.matrix * symbol,
                }
            })
            .collect();
        Self {
            rank: self.rank,
            terms,
        }
    }

    /// Largest `|Mᵀ − M|` entry over all coefficients.
    pub fn symmetry_defect(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| linalg::max_abs(&(t.matrix.transpose() - &t.matrix)))
            .fold(0.0, f64::max)
    }

    /// The same function on a cover torus, with modes re-expressed in the cover's dual basis.
    pub fn pullback(&self, sub: &Sublattice) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| TrigCoefficient {
                mode: mode_embedding(sub, t.mode),
                matrix: t.matrix.clone(),
            })
            .collect();
        Self {
            rank: self.rank,
            terms,
        }
    }
}

/// The data `(m, Λ, A, β, τ)` of `D_τ = ∂̄ + A + τβ(·)̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleOperatorSpec {
    rank: usize,
    lattice: Lattice,
    linear: TrigPolynomial,
    antilinear: TrigPolynomial,
    tau: f64,
}

impl BundleOperatorSpec {
    pub fn new(
        lattice: Lattice,
        linear: TrigPolynomial,
        antilinear: TrigPolynomial,
        tau: f64,
    ) -> Result<Self, OperatorError> {
        let rank = linear.rank();
        if antilinear.rank() != rank {
            return Err(OperatorError::Rank {
                rows: antilinear.rank(),
                cols: antilinear.rank(),
                rank,
            });
        }
        Ok(Self {
            rank,
            lattice,
            linear,
            antilinear,
            tau,
        })
    }

    /// `A ≡ 0`, `β ≡ 1` on a rank-1 bundle: the closed-form reference operator.
    pub fn oracle(lattice: Lattice, tau: f64) -> Self {
        Self {
            rank: 1,
            lattice,
            linear: TrigPolynomial::zero(1),
            antilinear: TrigPolynomial::scalar(1, Complex64::new(1.0, 0.0)),
            tau,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn linear(&self) -> &TrigPolynomial {
        &self.linear
    }

    pub fn antilinear(&self) -> &TrigPolynomial {
        &self.antilinear
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        Self { tau, ..self.clone() }
    }

    pub fn bandwidth(&self) -> i64 {
        self.linear.bandwidth().max(self.antilinear.bandwidth())
    }

    /// Smallest singular value of `β(z)` over a `samples × samples` grid of
    /// lattice coordinates. Zero or tiny values mean `β` is not invertible.
    pub fn beta_min_singular_value(&self, samples: usize) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..samples {
            for j in 0..samples {
                let b = self
                    .antilinear
                    .eval(i as f64 / samples as f64, j as f64 / samples as f64);
                best = best.min(linalg::smallest_singular(&b));
            }
        }
        best
    }

    /// `φ*D_τ` on the cover torus `ℂ/Λ′`, with `φ` the identity of `ℂ`.
    pub fn pullback(&self, sub: &Sublattice) -> Self {
        Self {
            rank: self.rank,
            lattice: sub.lattice(),
            linear: self.linear.pullback(sub),
            antilinear: self.antilinear.pullback(sub),
            tau: self.tau,
        }
    }
}

/// Truncation to the modes `−N/2 ≤ k₁, k₂ < N/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierGrid {
    n: usize,
    lattice: Lattice,
}

impl FourierGrid {
    pub fn new(n: usize, lattice: Lattice) -> Result<Self, OperatorError> {
        if n < 4 || n % 2 != 0 {
            return Err(OperatorError::Grid(n));
        }
        Ok(Self { n, lattice })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn num_modes(&self) -> usize {
        self.n * self.n
    }

    /// Complex dimension `m·N²` of the truncated section space.
    pub fn dim(&self, rank: usize) -> usize {
        rank * self.num_modes()
    }

    pub fn half(&self) -> i64 {
        (self.n / 2) as i64
    }

    /// Coefficients must stay within this bandwidth.
    pub fn max_coefficient_bandwidth(&self) -> i64 {
        (self.n / 4) as i64
    }

    /// Largest section bandwidth for which products with coefficients of
    /// bandwidth `coefficient_bandwidth` stay on the grid.
    pub fn section_bandwidth(&self, coefficient_bandwidth: i64) -> i64 {
        self.half() - 1 - coefficient_bandwidth
    }

    pub fn contains(&self, mode: ModeIndex) -> bool {
        let h = self.half();
        (-h..h).contains(&mode.k1) && (-h..h).contains(&mode.k2)
    }

    pub fn position(&self, mode: ModeIndex) -> Option<usize> {
        if !self.contains(mode) {
            return None;
        }
        let h = self.half();
        Some(((mode.k1 + h) as usize) * self.n + (mode.k2 + h) as usize)
    }

    pub fn mode_at(&self, position: usize) -> ModeIndex {
        let h = self.half();
        ModeIndex::new((position / self.n) as i64 - h, (position % self.n) as i64 - h)
    }

    pub fn modes(&self) -> impl Iterator<Item = ModeIndex> + '_ {
        (0..self.num_modes()).map(move |p| self.mode_at(p))
    }

    /// Values of a section at the `samples × samples` points `(i, j)/samples`
    /// in lattice coordinates, row-major in `(i, j)`.
    pub fn sample_section(&self, section: &CVector, rank: usize, samples: usize) -> Vec<CVector> {
        let n = self.n;
        let h = self.half();
        // e[k][i] = exp(2πi (k − h) i / samples)
        let table: Vec<Vec<Complex64>> = (0..n)
            .map(|k| {
                (0..samples)
                    .map(|i| {
                        Complex64::from_polar(
                            1.0,
                            2.0 * PI * (k as i64 - h) as f64 * i as f64 / samples as f64,
                        )
                    })
                    .collect()
            })
            .collect();
        // partial[k1][j] = Σ_k2 c[k1,k2] e[k2][j]
        let mut partial = vec![vec![CVector::zeros(rank); samples]; n];
        for k1 in 0..n {
            for k2 in 0..n {
                let base = (k1 * n + k2) * rank;
                let coeff = section.rows(base, rank);
                if coeff.iter().all(|z| z.norm_sqr() == 0.0) {
                    continue;
                }
                for j in 0..samples {
                    let e = table[k2][j];
                    for r in 0..rank {
                        partial[k1][j][r] += coeff[r] * e;
                    }
                }
            }
        }
        let mut out = vec![CVector::zeros(rank); samples * samples];
        for k1 in 0..n {
            for i in 0..samples {
                let e = table[k1][i];
                for j in 0..samples {
                    let p = &partial[k1][j];
                    let slot = &mut out[i * samples + j];
                    for r in 0..rank {
                        slot[r] += p[r] * e;
                    }
                }
            }
        }
        out
    }

    /// Sup-norm bandwidth of the nonzero modes of a section.
    pub fn section_support_bandwidth(&self, section: &CVector, rank: usize) -> i64 {
        let mut bw = 0;
        for p in 0..self.num_modes() {
            if section.rows(p * rank, rank).iter().any(|z| z.norm_sqr() > 0.0) {
                bw = bw.max(self.mode_at(p).bandwidth());
            }
        }
        bw
    }
}

/// The real-linear map `v ↦ Pv + Qv̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealLinearMatrix {
    p: CMatrix,
    q: CMatrix,
}

impl RealLinearMatrix {
    pub fn new(p: CMatrix, q: CMatrix) -> Result<Self, OperatorError> {
        let n = p.nrows();
        for m in [&p, &q] {
            if m.nrows() != n {
                return Err(OperatorError::Dimension {
                    expected: n,
                    got: m.nrows(),
                });
            }
            if m.ncols() != n {
                return Err(OperatorError::Dimension {
                    expected: n,
                    got: m.ncols(),
                });
            }
        }
        Ok(Self { p, q })
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    pub fn p(&self) -> &CMatrix {
        &self.p
    }

    pub fn q(&self) -> &CMatrix {
        &self.q
    }

    pub fn apply(&self, section: &CVector) -> Result<CVector, OperatorError> {
        if section.len() != self.dim() {
            return Err(OperatorError::Dimension {
                expected: self.dim(),
                got: section.len(),
            });
        }
        Ok(&self.p * section + &self.q * section.map(|z| z.conj()))
    }

    /// `[[P, Q], [Q̄, P̄]]` acting on independent pairs `(v, w)`; on the
    /// real locus `w = v̄` its first block row reproduces [`Self::apply`].
    pub fn complexify(&self) -> CMatrix {
        doubled(&self.p, &self.q, &linalg::conj(&self.q))
    }

    /// Real `2n × 2n` matrix in the coordinates `(Re v, Im v)`.
    pub fn realify(&self) -> DMatrix<f64> {
        linalg::realify(&self.p, &self.q)
    }
}

fn doubled(p: &CMatrix, q: &CMatrix, q_bar: &CMatrix) -> CMatrix {
    let n = p.nrows();
    let mut out = CMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(p);
    out.view_mut((0, n), (n, n)).copy_from(q);
    out.view_mut((n, 0), (n, n)).copy_from(q_bar);
    out.view_mut((n, n), (n, n)).copy_from(&linalg::conj(p));
    out
}

/// The affine family `τ ↦ (P, τ Q₁)` of an assembled spec.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorFamily {
    base: CMatrix,
    antilinear: CMatrix,
}

impl OperatorFamily {
    pub fn new(base: CMatrix, antilinear: CMatrix) -> Result<Self, OperatorError> {
        RealLinearMatrix::new(base.clone(), antilinear.clone())?;
        Ok(Self { base, antilinear })
    }

    pub fn dim(&self) -> usize {
        self.base.nrows()
    }

    pub fn base(&self) -> &CMatrix {
        &self.base
    }

    pub fn antilinear(&self) -> &CMatrix {
        &self.antilinear
    }

    pub fn at(&self, tau: f64) -> RealLinearMatrix {
        RealLinearMatrix {
            p: self.base.clone(),
            q: &self.antilinear * Complex64::new(tau, 0.0),
        }
    }

    pub fn realified_at(&self, tau: f64) -> DMatrix<f64> {
        linalg::realify(&self.base, &(&self.antilinear * Complex64::new(tau, 0.0)))
    }

    /// Holomorphic extension `[[P, τQ₁], [τQ̄₁, P̄]]` for complex `τ`; equals
    /// [`RealLinearMatrix::complexify`] of [`Self::at`] for real `τ`.
    pub fn complexified_at(&self, tau: Complex64) -> CMatrix {
        doubled(
            &self.base,
            &(&self.antilinear * tau),
            &(linalg::conj(&self.antilinear) * tau),
        )
    }
}

/// Fourier symbol of `∂̄ = ∂_s + i∂_t` on `e^{2πi⟨ξ,z⟩}`: `2π(iξ₁ − ξ₂)`.
pub fn dbar_symbol(mode: ModeIndex, lattice: &Lattice) -> Complex64 {
    let xi = lattice.dual_vector(mode);
    Complex64::new(-2.0 * PI * xi[1], 2.0 * PI * xi[0])
}

fn check_bandwidth(poly: &TrigPolynomial, grid: &FourierGrid) -> Result<(), OperatorError> {
    let limit = grid.max_coefficient_bandwidth();
    for t in poly.terms() {
        if t.mode.bandwidth() > limit {
            return Err(OperatorError::Bandwidth {
                k1: t.mode.k1,
                k2: t.mode.k2,
                limit,
            });
        }
    }
    Ok(())
}

/// Assemble `P = ∂̄ + conv(A)` and the unit antilinear block `Q₁ = conv(β)∘(ξ ↦ −ξ)`.
pub fn assemble_family(spec: &BundleOperatorSpec, grid: &FourierGrid) -> Result<OperatorFamily, OperatorError> {
    if spec.lattice != grid.lattice {
        return Err(OperatorError::LatticeMismatch);
    }
    check_bandwidth(&spec.linear, grid)?;
    check_bandwidth(&spec.antilinear, grid)?;
    let m = spec.rank;
    let dim = grid.dim(m);
    let mut p = CMatrix::zeros(dim, dim);
    let mut q = CMatrix::zeros(dim, dim);
    for (row, out_mode) in grid.modes().enumerate() {
        let symbol = dbar_symbol(out_mode, &spec.lattice);
        for r in 0..m {
            p[(row * m + r, row * m + r)] += symbol;
        }
        // (Aη)_ζ = Σ_a A_a η_{ζ−a}
        for t in spec.linear.terms() {
            if let Some(col) = grid.position(out_mode - t.mode) {
                add_block(&mut p, row * m, col * m, &t.matrix);
            }
        }
        // (βη̄)_ζ = Σ_b β_b conj(η_{b−ζ})
        for t in spec.antilinear.terms() {
            if let Some(col) = grid.position(t.mode - out_mode) {
                add_block(&mut q, row * m, col * m, &t.matrix);
            }
        }
    }
    Ok(OperatorFamily {
        base: p,
        antilinear: q,
    })
}

fn add_block(target: &mut CMatrix, row: usize, col: usize, block: &CMatrix) {
    let m = block.nrows();
    let mut view = target.view_mut((row, col), (m, m));
    view += block;
}

/// `D_τ` at the spec's own `τ`.
pub fn assemble(spec: &BundleOperatorSpec, grid: &FourierGrid) -> Result<RealLinearMatrix, OperatorError> {
    Ok(assemble_family(spec, grid)?.at(spec.tau))
}

/// `φ*D_τ` on the cover grid.
pub fn pullback_operator(
    spec: &BundleOperatorSpec,
    sub: &Sublattice,
    cover_grid: &FourierGrid,
) -> Result<RealLinearMatrix, OperatorError> {
    assemble(&spec.pullback(sub), cover_grid)
}

/// Fourier coefficients of `η ∘ φ` on the cover grid.
pub fn pullback_section(
    sub: &Sublattice,
    parent_grid: &FourierGrid,
    cover_grid: &FourierGrid,
    section: &CVector,
    rank: usize,
) -> Result<CVector, OperatorError> {
    let mut out = CVector::zeros(cover_grid.dim(rank));
    for (pos, mode) in parent_grid.modes().enumerate() {
        let coeff = section.rows(pos * rank, rank);
        if coeff.iter().all(|z| z.norm_sqr() == 0.0) {
            continue;
        }
        let target = mode_embedding(sub, mode);
        let Some(dest) = cover_grid.position(target) else {
            return Err(OperatorError::CoverGrid {
                k1: target.k1,
                k2: target.k2,
            });
        };
        out.rows_mut(dest * rank, rank).copy_from(&coeff);
    }
    Ok(out)
}

/// The three pieces `∂̄η`, `Aη` and `βη̄` of an operator applied to a
/// section, in Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorParts {
    pub dbar: CVector,
    pub linear: CVector,
    pub antilinear: CVector,
}

impl OperatorParts {
    /// `∂̄η + Aη + τβη̄`.
    pub fn combine(&self, tau: f64) -> CVector {
        &self.dbar + &self.linear + &self.antilinear * Complex64::new(tau, 0.0)
    }
}

/// Matrix-free evaluation of the operator pieces on the grid; agrees with
/// the assembled matrices and never forms them.
pub fn operator_parts(
    spec: &BundleOperatorSpec,
    grid: &FourierGrid,
    section: &CVector,
) -> Result<OperatorParts, OperatorError> {
    if spec.lattice != grid.lattice {
        return Err(OperatorError::LatticeMismatch);
    }
    check_bandwidth(&spec.linear, grid)?;
    check_bandwidth(&spec.antilinear, grid)?;
    let m = spec.rank;
    let dim = grid.dim(m);
    if section.len() != dim {
        return Err(OperatorError::Dimension {
            expected: dim,
            got: section.len(),
        });
    }
    let mut dbar = CVector::zeros(dim);
    let mut linear = CVector::zeros(dim);
    let mut antilinear = CVector::zeros(dim);
    for (row, out_mode) in grid.modes().enumerate() {
        let symbol = dbar_symbol(out_mode, &spec.lattice);
        for r in 0..m {
            dbar[row * m + r] = symbol * section[row * m + r];
        }
        for t in spec.linear.terms() {
            if let Some(col) = grid.position(out_mode - t.mode) {
                let v = section.rows(col * m, m);
                let mut dst = linear.rows_mut(row * m, m);
                dst += &t.matrix * v;
            }
        }
        for t in spec.antilinear.terms() {
            if let Some(col) = grid.position(t.mode - out_mode) {
                let v = section.rows(col * m, m).map(|z| z.conj());
                let mut dst = antilinear.rows_mut(row * m, m);
                dst += &t.matrix * v;
            }
        }
    }
    Ok(OperatorParts {
        dbar,
        linear,
        antilinear,
    })
}

/// Matrix-free `D_τ η` at the spec's own `τ`.
pub fn apply_spec(spec: &BundleOperatorSpec, grid: &FourierGrid, section: &CVector) -> Result<CVector, OperatorError> {
    Ok(operator_parts(spec, grid, section)?.combine(spec.tau))
}

/// Multiplies by `i`; used to witness that `apply` is only real-linear.
pub fn times_i(v: &CVector) -> CVector {
    v * I
}
