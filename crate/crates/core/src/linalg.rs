//! Dense linear-algebra helpers shared by the operator, probe and
//! factorization modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Entrywise transpose (not the adjoint).
pub fn transpose(m: &CMatrix) -> CMatrix {
    m.transpose()
}

pub fn conj(m: &CMatrix) -> CMatrix {
    m.map(|z| z.conj())
}

/// Frobenius norm.
pub fn fro(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Operator 2-norm.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

pub fn smallest_singular(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().min()
}

/// Real matrix of the real-linear map `v ↦ Pv + Qv̄` in the coordinates
/// `(Re v, Im v)`.
///
/// It is unitarily equivalent to the doubled matrix `[[P, Q], [Q̄, P̄]]`
/// (the change of variables `(v, w) = (x + iy, x − iy)/√2`), so both have the
/// same singular values and determinant.
pub fn realify(p: &CMatrix, q: &CMatrix) -> DMatrix<f64> {
    let n = p.nrows();
    let mut r = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for j in 0..n {
        for i in 0..n {
            let (pp, qq) = (p[(i, j)], q[(i, j)]);
            let plus = pp + qq;
            let minus = pp - qq;
            r[(i, j)] = plus.re;
            r[(i, j + n)] = -minus.im;
            r[(i + n, j)] = plus.im;
            r[(i + n, j + n)] = minus.re;
        }
    }
    r
}

/// Row and column sets of the connected components of the bipartite
/// graph of nonzero entries.
///
/// Permuting rows and columns into these blocks makes the matrix block
/// diagonal, so spectral quantities can be computed block by block.
pub fn sparsity_blocks(m: &DMatrix<f64>) -> Vec<(Vec<usize>, Vec<usize>)> {
    let (nr, nc) = m.shape();
    let mut parent: Vec<usize> = (0..nr + nc).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for j in 0..nc {
        for i in 0..nr {
            if m[(i, j)] != 0.0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, nr + j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, (Vec<usize>, Vec<usize>)> =
        std::collections::BTreeMap::new();
    for i in 0..nr {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().0.push(i);
    }
    for j in 0..nc {
        let r = find(&mut parent, nr + j);
        groups.entry(r).or_default().1.push(j);
    }
    groups.into_values().collect()
}

/// All singular values of a square real matrix (unsorted multiset),
/// computed per sparsity block. Zero rows/columns contribute exact zeros.
pub fn blocked_singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "square matrix expected");
    let mut out = Vec::with_capacity(n);
    for (rows, cols) in sparsity_blocks(m) {
        if rows.is_empty() || cols.is_empty() {
            continue;
        }
        let block = DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])]);
        out.extend(block.singular_values().iter().copied());
    }
    out.resize(n, 0.0);
    out
}

/// Dimension of the null space of a square real matrix, computed per block:
/// singular values at most `abs_tol` count as zero.
pub fn blocked_kernel_dimension(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = blocked_singular_values(m);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let tol = rel_tol * smax;
    sv.iter().filter(|&&s| s <= tol).count()
}

/// Sign of the determinant (−1, 0 or +1) without forming the product of pivots.
pub fn det_sign(m: &DMatrix<f64>) -> i8 {
    let lu = m.clone().lu();
    let u = lu.u();
    let mut sign: f64 = lu.p().determinant();
    for k in 0..u.nrows() {
        let d = u[(k, k)];
        if d == 0.0 {
            return 0;
        }
        sign *= d.signum();
    }
    sign as i8
}

/// Eigendecomposition `M = V diag(λ) V⁻¹` of a general complex matrix via
/// the complex Schur form and triangular back substitution. Columns of `V`
/// have unit norm.
pub fn eigen_decomposition(m: &CMatrix) -> (Vec<Complex64>, CMatrix) {
    let n = m.nrows();
    let (q, t) = nalgebra::Schur::new(m.clone()).unpack();
    let scale = fro(&t).max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * scale;
    let mut y = CMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = Complex64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut num = Complex64::new(0.0, 0.0);
            for l in j + 1..=k {
                num += t[(j, l)] * y[(l, k)];
            }
            let mut den = t[(j, j)] - lambda;
            if den.norm() < small {
                den = Complex64::new(small, 0.0);
            }
            y[(j, k)] = -num / den;
        }
    }
    let mut v = q * y;
    for k in 0..n {
        let norm = v.column(k).norm();
        if norm > 0.0 {
            v.column_mut(k).scale_mut(1.0 / norm);
        }
    }
    let values = (0..n).map(|k| t[(k, k)]).collect();
    (values, v)
}

/// 2-norm condition number; infinite for singular input.
pub fn condition_number(m: &CMatrix) -> f64 {
    let sv = m.clone().singular_values();
    let (lo, hi) = (sv.min(), sv.max());
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Apply a scalar function through an eigendecomposition.
pub fn matrix_function(values: &[Complex64], vectors: &CMatrix, f: impl Fn(Complex64) -> Complex64) -> Option<CMatrix> {
    let inv = vectors.clone().try_inverse()?;
    let d = CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&z| f(z)),
    ));
    Some(vectors * d * inv)
}

pub fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.transpose()).scale(0.5)
}
