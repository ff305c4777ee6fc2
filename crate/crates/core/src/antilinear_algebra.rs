//! Pointwise matrix algebra behind the symmetrization of antilinear
//! perturbations: `AᵀA` factorizations of complex symmetric matrices, the
//! orthogonal-symmetric polar decomposition `G = OS`, explicit paths in
//! `SO(m, ℂ)`, and the block identities for the deformed complex structure
//! `J_τ`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::linalg::{self, CMatrix, I};
use crate::random;

/// Retries of [`takagi_factor`] after the principal attempt.
pub const MAX_RETRIES: usize = 8;
/// Largest eigenvector condition number accepted by [`principal_sqrt`].
pub const MAX_EIGVEC_CONDITION: f64 = 1e8;
/// Relative residual required of a factorization.
pub const FACTOR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FactorError {
    #[error("matrix must be square, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("matrix is not symmetric (relative defect {0:e})")]
    Asymmetric(f64),
    #[error("matrix is numerically singular (sigma_min/sigma_max = {0:e})")]
    Singular(f64),
    #[error("eigenvalue {0} lies on the branch cut of the principal square root; pre-multiply by a generic complex orthogonal matrix and retry")]
    BranchCut(Complex64),
    #[error("eigenvector matrix is too ill-conditioned (cond = {0:e})")]
    Defective(f64),
    #[error("factorization residual {0:e} above tolerance after all retries")]
    Residual(f64),
    #[error("matrix is not in SO(m, C): orthogonality residual {orth:e}, det = {det}")]
    NotSpecialOrthogonal { orth: f64, det: Complex64 },
    #[error("path needs at least one step")]
    NoSteps,
    #[error("complex structure does not square to -1 (residual {0:e})")]
    NotComplexStructure(f64),
    #[error("YNT is not antilinear: |YNT JN + JT YNT| = {0:e}")]
    NotAntilinear(f64),
    #[error("block shapes do not fit: {0}")]
    Shape(String),
}

fn ensure_square(m: &CMatrix) -> Result<(), FactorError> {
    if m.nrows() != m.ncols() {
        return Err(FactorError::NotSquare(m.nrows(), m.ncols()));
    }
    Ok(())
}

/// An invertible complex symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricComplexMatrix {
    s: CMatrix,
    min_singular: f64,
}

impl SymmetricComplexMatrix {
    pub fn new(s: CMatrix) -> Result<Self, FactorError> {
        ensure_square(&s)?;
        let scale = linalg::fro(&s);
        let defect = linalg::fro(&(&s - s.transpose())) / scale.max(f64::MIN_POSITIVE);
        if defect > 1e-12 {
            return Err(FactorError::Asymmetric(defect));
        }
        let sv = s.clone().singular_values();
        let (lo, hi) = (sv.min(), sv.max());
        if !(lo > 1e-13 * hi) {
            return Err(FactorError::Singular(if hi > 0.0 { lo / hi } else { 0.0 }));
        }
        Ok(Self { s, min_singular: lo })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.s
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    pub fn min_singular(&self) -> f64 {
        self.min_singular
    }
}

struct Eigen {
    values: Vec<Complex64>,
    vectors: CMatrix,
    inverse: CMatrix,
}

fn eigen_off_cut(m: &CMatrix) -> Result<Eigen, FactorError> {
    ensure_square(m)?;
    let (values, vectors) = linalg::eigen_decomposition(m);
    let scale = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for &z in &values {
        if z.re <= 0.0 && z.im.abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
            return Err(FactorError::BranchCut(z));
        }
    }
    let cond = linalg::condition_number(&vectors);
    if !(cond <= MAX_EIGVEC_CONDITION) {
        return Err(FactorError::Defective(cond));
    }
    let inverse = vectors.clone().try_inverse().ok_or(FactorError::Defective(f64::INFINITY))?;
    Ok(Eigen {
        values,
        vectors,
        inverse,
    })
}

impl Eigen {
    fn apply(&self, f: impl Fn(Complex64) -> Complex64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (k, &z) in self.values.iter().enumerate() {
            let fz = f(z);
            scaled.column_mut(k).iter_mut().for_each(|x| *x *= fz);
        }
        scaled * &self.inverse
    }
}

/// Principal square root through an eigendecomposition.
pub fn principal_sqrt(m: &CMatrix) -> Result<CMatrix, FactorError> {
    Ok(eigen_off_cut(m)?.apply(|z| z.sqrt()))
}

/// `S^{1/2}` of a symmetric matrix, symmetrized to remove roundoff.
fn symmetric_sqrt(s: &CMatrix) -> Result<CMatrix, FactorError> {
    Ok(linalg::symmetrize(&principal_sqrt(s)?))
}

/// `A = e^{−iθ/2} (e^{iθ} RᵀSR)^{1/2} R⁻¹` for complex orthogonal `R`; then `AᵀA = S`.
///
/// With `θ = 0` and `R = I` this is the principal square root of `S`.
pub fn takagi_factor_rotated(s: &SymmetricComplexMatrix, theta: f64, rotation: &CMatrix) -> Result<CMatrix, FactorError> {
    let phase = Complex64::from_polar(1.0, theta);
    let rotated = linalg::symmetrize(&(rotation.transpose() * s.matrix() * rotation)) * phase;
    let root = symmetric_sqrt(&rotated)?;
    let r_inv = rotation.transpose();
    Ok(root * r_inv * Complex64::from_polar(1.0, -0.5 * theta))
}

/// Relative residual `‖AᵀA − S‖ / ‖S‖` (Frobenius).
pub fn takagi_residual(a: &CMatrix, s: &CMatrix) -> f64 {
    linalg::fro(&(a.transpose() * a - s)) / linalg::fro(s)
}

/// Factor `S = AᵀA`.
///
/// The principal square root is tried first; if its spectrum touches the
/// branch cut, is too defective, or misses [`FACTOR_TOL`], up to
/// [`MAX_RETRIES`] random phase rotations combined with random complex
/// orthogonal similarities are tried, drawn from `rng`.
pub fn takagi_factor<R: Rng + ?Sized>(s: &SymmetricComplexMatrix, rng: &mut R) -> Result<CMatrix, FactorError> {
    let m = s.dim();
    let mut last = match takagi_factor_rotated(s, 0.0, &CMatrix::identity(m, m)) {
        Ok(a) => {
            let res = takagi_residual(&a, s.matrix());
            if res <= FACTOR_TOL {
                return Ok(a);
            }
            FactorError::Residual(res)
        }
        Err(e) => e,
    };
    for _ in 0..MAX_RETRIES {
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let rotation = random::special_orthogonal(rng, m, 0.3);
        match takagi_factor_rotated(s, theta, &rotation) {
            Ok(a) => {
                let res = takagi_residual(&a, s.matrix());
                if res <= FACTOR_TOL {
                    return Ok(a);
                }
                last = FactorError::Residual(res);
            }
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Relative distance `‖OᵀO − I‖` (Frobenius) from `O(m, ℂ)`.
pub fn orthogonality_residual(o: &CMatrix) -> f64 {
    let m = o.nrows();
    linalg::fro(&(o.transpose() * o - CMatrix::identity(m, m)))
}

/// `G = OS` with `S = (GᵀG)^{1/2}` symmetric and `O = GS⁻¹` complex orthogonal.
pub fn ortho_symmetric_polar(g: &CMatrix) -> Result<(CMatrix, CMatrix), FactorError> {
    ensure_square(g)?;
    let sv = g.clone().singular_values();
    if !(sv.min() > 1e-13 * sv.max()) {
        return Err(FactorError::Singular(sv.min() / sv.max().max(f64::MIN_POSITIVE)));
    }
    let gram = linalg::symmetrize(&(g.transpose() * g));
    let s = symmetric_sqrt(&gram)?;
    let o = s
        .transpose()
        .lu()
        .solve(&g.transpose())
        .ok_or(FactorError::Singular(0.0))?
        .transpose();
    Ok((o, s))
}

/// A complex rotation by `angle` in the coordinate plane `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneRotation {
    pub a: usize,
    pub b: usize,
    pub angle: Complex64,
}

impl PlaneRotation {
    pub fn matrix(&self, m: usize) -> CMatrix {
        self.scaled(m, 1.0)
    }

    /// Rotation by `t · angle`.
    pub fn scaled(&self, m: usize, t: f64) -> CMatrix {
        let phi = self.angle * t;
        let (c, s) = (phi.cos(), phi.sin());
        let mut g = CMatrix::identity(m, m);
        g[(self.a, self.a)] = c;
        g[(self.a, self.b)] = -s;
        g[(self.b, self.a)] = s;
        g[(self.b, self.b)] = c;
        g
    }
}

/// Angle `φ` with `cos φ = c`, `sin φ = s`, given `c² + s² = 1`.
fn angle_of(c: Complex64, s: Complex64) -> Complex64 {
    -I * (c + I * s).ln()
}

fn check_special_orthogonal(r: &CMatrix) -> Result<(), FactorError> {
    ensure_square(r)?;
    let scale = linalg::fro(r).powi(2).max(1.0);
    let orth = orthogonality_residual(r);
    let det = r.determinant();
    if orth > 1e-10 * scale || (det - 1.0).norm() > 1e-10 * scale {
        return Err(FactorError::NotSpecialOrthogonal { orth, det });
    }
    Ok(())
}

/// Write `R ∈ SO(m, ℂ)` as an ordered product of plane rotations.
///
/// Column by column, rotations in the planes `(k, j)` move the unit vector
/// `Re_k` (with `vᵀv = 1`) onto `e_k`, then the same is done for the
/// trailing `(m−k−1)`-block. Isotropic pairs (`v_k² + v_j² = 0`) are first
/// mixed with a later coordinate.
pub fn so_factorization(r: &CMatrix) -> Result<Vec<PlaneRotation>, FactorError> {
    check_special_orthogonal(r)?;
    let m = r.nrows();
    let mut w = r.clone();
    let mut applied: Vec<PlaneRotation> = Vec::new();
    let left = |w: &mut CMatrix, rot: PlaneRotation, applied: &mut Vec<PlaneRotation>| {
        *w = rot.matrix(m) * &*w;
        applied.push(rot);
    };
    for col in 0..m.saturating_sub(1) {
        for j in col + 1..m {
            let (va, vb) = (w[(col, col)], w[(j, col)]);
            if vb.norm() <= 1e-15 * (va.norm() + 1.0) {
                continue;
            }
            let mut r2 = va * va + vb * vb;
            if r2.norm() <= 1e-6 * (va.norm_sqr() + vb.norm_sqr()) {
                let k = (j + 1..m)
                    .find(|&k| w[(k, col)].norm() > 1e-12)
                    .ok_or(FactorError::NotSpecialOrthogonal {
                        orth: orthogonality_residual(r),
                        det: r.determinant(),
                    })?;
                let mix = [0.7, 1.3, 2.1, 0.4]
                    .iter()
                    .map(|&t| PlaneRotation { a: j, b: k, angle: Complex64::new(t, 0.0) })
                    .max_by(|x, y| {
                        let score = |p: &PlaneRotation| {
                            let nb = (p.matrix(m) * w.column(col))[j];
                            (va * va + nb * nb).norm()
                        };
                        score(x).total_cmp(&score(y))
                    })
                    .expect("nonempty");
                left(&mut w, mix, &mut applied);
                let vb = w[(j, col)];
                r2 = va * va + vb * vb;
            }
            let vb = w[(j, col)];
            let root = r2.sqrt();
            let phi = angle_of(va / root, -vb / root);
            left(&mut w, PlaneRotation { a: col, b: j, angle: phi }, &mut applied);
        }
        if w[(col, col)].re < 0.0 {
            left(
                &mut w,
                PlaneRotation { a: col, b: col + 1, angle: Complex64::new(std::f64::consts::PI, 0.0) },
                &mut applied,
            );
        }
    }
    // L_n ⋯ L_1 R = I, so R = L_1⁻¹ ⋯ L_n⁻¹.
    Ok(applied
        .into_iter()
        .map(|p| PlaneRotation { angle: -p.angle, ..p })
        .collect())
}

/// `steps + 1` samples of `t ↦ Π G_i((1 − t)·θ_i)` from `R` (`t = 0`) to `I`.
pub fn complex_so_path(r: &CMatrix, steps: usize) -> Result<Vec<CMatrix>, FactorError> {
    if steps == 0 {
        return Err(FactorError::NoSteps);
    }
    let factors = so_factorization(r)?;
    let m = r.nrows();
    Ok((0..=steps)
        .map(|k| {
            let t = 1.0 - k as f64 / steps as f64;
            factors
                .iter()
                .fold(CMatrix::identity(m, m), |acc, f| acc * f.scaled(m, t))
        })
        .collect())
}

/// Samples of a path in `GL(m, ℂ)` from `G` to a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrizationPath {
    pub samples: Vec<CMatrix>,
    /// Smallest singular value seen along the path.
    pub min_singular: f64,
    /// `‖E − Eᵀ‖ / ‖E‖` at the endpoint.
    pub endpoint_symmetry: f64,
    /// Whether the orthogonal factor had determinant −1.
    pub reflected: bool,
}

/// Deform `G = OS` to a symmetric matrix.
///
/// If `det O = 1` the path is `O(t)·S` with `O(t)` from [`complex_so_path`],
/// ending at `S`. Otherwise, with `F = diag(−1, 1, …, 1)`, it runs
/// `(OF)(t)·F·S` to `FS` and then `S^{t/2} F S^{1−t/2}` to the symmetric
/// `S^{1/2} F S^{1/2}`.
pub fn symmetrize_antilinear(g: &CMatrix, steps: usize) -> Result<SymmetrizationPath, FactorError> {
    if steps == 0 {
        return Err(FactorError::NoSteps);
    }
    let m = g.nrows();
    let (o, s) = ortho_symmetric_polar(g)?;
    let reflected = o.determinant().re < 0.0;
    let mut samples: Vec<CMatrix> = Vec::with_capacity(steps + 2);
    if !reflected {
        for p in complex_so_path(&o, steps)? {
            samples.push(p * &s);
        }
    } else {
        let mut f = CMatrix::identity(m, m);
        f[(0, 0)] = Complex64::new(-1.0, 0.0);
        let first = (steps / 2).max(1);
        let second = (steps - first).max(1);
        let fs = &f * &s;
        for p in complex_so_path(&(&o * &f), first)? {
            samples.push(p * &fs);
        }
        let eig = eigen_off_cut(&s)?;
        for k in 1..=second {
            let t = k as f64 / second as f64;
            let left = eig.apply(|z| z.powf(0.5 * t));
            let right = eig.apply(|z| z.powf(1.0 - 0.5 * t));
            samples.push(left * &f * right);
        }
    }
    let min_singular = samples
        .iter()
        .map(linalg::smallest_singular)
        .fold(f64::INFINITY, f64::min);
    let end = samples.last().expect("nonempty");
    let endpoint_symmetry = linalg::fro(&(end - end.transpose())) / linalg::fro(end);
    Ok(SymmetrizationPath {
        samples,
        min_singular,
        endpoint_symmetry,
        reflected,
    })
}

/// Real complex structures on `T` and `N` and an antilinear `Y^{NT}: N → T`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockJData {
    jt: DMatrix<f64>,
    jn: DMatrix<f64>,
    ynt: DMatrix<f64>,
    tau: f64,
}

fn rfro(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

impl BlockJData {
    pub fn new(jt: DMatrix<f64>, jn: DMatrix<f64>, ynt: DMatrix<f64>, tau: f64) -> Result<Self, FactorError> {
        let (t, n) = (jt.nrows(), jn.nrows());
        if jt.ncols() != t || jn.ncols() != n || ynt.shape() != (t, n) {
            return Err(FactorError::Shape(format!(
                "JT {:?}, JN {:?}, YNT {:?}",
                jt.shape(),
                jn.shape(),
                ynt.shape()
            )));
        }
        for j in [&jt, &jn] {
            let k = j.nrows();
            let res = rfro(&(j * j + DMatrix::identity(k, k)));
            if res > 1e-12 * rfro(j).powi(2).max(1.0) {
                return Err(FactorError::NotComplexStructure(res));
            }
        }
        let anti = antilinearity_residual(&jt, &jn, &ynt);
        if anti > 1e-12 * (rfro(&ynt) * (rfro(&jt) + rfro(&jn))).max(1.0) {
            return Err(FactorError::NotAntilinear(anti));
        }
        Ok(Self { jt, jn, ynt, tau })
    }

    pub fn jt(&self) -> &DMatrix<f64> {
        &self.jt
    }

    pub fn jn(&self) -> &DMatrix<f64> {
        &self.jn
    }

    pub fn ynt(&self) -> &DMatrix<f64> {
        &self.ynt
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// `‖Y JN + JT Y‖` (Frobenius).
pub fn antilinearity_residual(jt: &DMatrix<f64>, jn: &DMatrix<f64>, ynt: &DMatrix<f64>) -> f64 {
    rfro(&(ynt * jn + jt * ynt))
}

/// `[[0, −I], [I, 0]]` on `ℝ^{2k}`.
pub fn standard_complex_structure(k: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * k, 2 * k);
    for i in 0..k {
        j[(i, k + i)] = -1.0;
        j[(k + i, i)] = 1.0;
    }
    j
}

/// Random data: `JT = P J₀ P⁻¹` with `P = I + 0.3·G/‖G‖₂` for Gaussian `G`
/// (so `cond P ≤ 13/7`), `JN` likewise,
/// and `Y = ½(Y₀ + JT Y₀ JN)`, which anticommutes as required.
pub fn random_block_j<R: Rng + ?Sized>(rng: &mut R, k: usize, l: usize, tau: f64) -> BlockJData {
    let mut gauss = |r: usize, c: usize| DMatrix::<f64>::from_fn(r, c, |_, _| StandardNormal.sample(&mut *rng));
    let conj_structure = |dim: usize, gauss: &mut dyn FnMut(usize, usize) -> DMatrix<f64>| {
        let g = gauss(2 * dim, 2 * dim);
        let norm = g.clone().singular_values().max().max(f64::MIN_POSITIVE);
        let p = DMatrix::identity(2 * dim, 2 * dim) + g * (0.3 / norm);
        let inv = p.clone().try_inverse().expect("perturbation of I below 1 in norm");
        &p * standard_complex_structure(dim) * inv
    };
    let jt = conj_structure(k, &mut gauss);
    let jn = conj_structure(l, &mut gauss);
    let y0 = gauss(2 * k, 2 * l);
    let ynt = (&y0 + &jt * &y0 * &jn) * 0.5;
    BlockJData { jt, jn, ynt, tau }
}

/// `Φ_τ`, its inverse, `J_τ = Φ_τ diag(JT, JN) Φ_τ⁻¹` and the residuals of
/// the identities it satisfies.
#[derive(Debug, Clone, PartialEq)]
pub struct JtauBlocks {
    pub phi: DMatrix<f64>,
    pub phi_inv: DMatrix<f64>,
    pub jtau: DMatrix<f64>,
    /// `‖J_τ − [[JT, τY], [0, JN]]‖`.
    pub closed_form_residual: f64,
    /// `‖J_τ² + I‖`.
    pub square_residual: f64,
    /// `‖Φ_τ Φ_τ⁻¹ − I‖`.
    pub inverse_residual: f64,
    /// The lower-left block of `J_τ` is exactly zero.
    pub upper_triangular: bool,
}

pub fn jtau_blocks(data: &BlockJData) -> Result<JtauBlocks, FactorError> {
    let data = BlockJData::new(data.jt.clone(), data.jn.clone(), data.ynt.clone(), data.tau)?;
    let (t, n) = (data.jt.nrows(), data.jn.nrows());
    let dim = t + n;
    let shift = &data.jt * &data.ynt * (0.5 * data.tau);
    let block = |upper: &DMatrix<f64>| {
        let mut m = DMatrix::<f64>::identity(dim, dim);
        m.view_mut((0, t), (t, n)).copy_from(upper);
        m
    };
    let phi = block(&shift);
    let phi_inv = block(&(-&shift));
    let mut j = DMatrix::<f64>::zeros(dim, dim);
    j.view_mut((0, 0), (t, t)).copy_from(&data.jt);
    j.view_mut((t, t), (n, n)).copy_from(&data.jn);
    let jtau = &phi * &j * &phi_inv;

    let mut closed = j.clone();
    closed.view_mut((0, t), (t, n)).copy_from(&(&data.ynt * data.tau));
    let closed_form_residual = rfro(&(&jtau - closed));
    let square_residual = rfro(&(&jtau * &jtau + DMatrix::identity(dim, dim)));
    let inverse_residual = rfro(&(&phi * &phi_inv - DMatrix::identity(dim, dim)));
    let upper_triangular = jtau.view((t, 0), (n, t)).iter().all(|&x| x == 0.0);
    Ok(JtauBlocks {
        phi,
        phi_inv,
        jtau,
        closed_form_residual,
        square_residual,
        inverse_residual,
        upper_triangular,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::random::rng;

    fn diag(values: &[Complex64]) -> CMatrix {
        CMatrix::from_fn(values.len(), values.len(), |i, j| if i == j { values[i] } else { c(0.0, 0.0) })
    }

    #[test]
    fn takagi_identity_and_diagonal() {
        let id = SymmetricComplexMatrix::new(CMatrix::identity(3, 3)).unwrap();
        let a = takagi_factor(&id, &mut rng(0)).unwrap();
        assert!(orthogonality_residual(&a) < 1e-12);
        let d = [c(4.0, 0.0), c(0.0, 2.0), c(-1.0, 1.0)];
        let s = SymmetricComplexMatrix::new(diag(&d)).unwrap();
        let a = takagi_factor(&s, &mut rng(0)).unwrap();
        for (k, z) in d.iter().enumerate() {
            assert!((a[(k, k)] - z.sqrt()).norm() < 1e-12);
        }
    }

    #[test]
    fn takagi_fiber_is_orthogonal_coset() {
        let mut r = rng(9);
        for m in 1..=6 {
            let g = random::complex_matrix(&mut r, m, m);
            let s = SymmetricComplexMatrix::new(linalg::symmetrize(&(g.transpose() * &g))).unwrap();
            let a = takagi_factor(&s, &mut r).unwrap();
            assert!(takagi_residual(&a, s.matrix()) <= FACTOR_TOL);
            let ga = &g * a.clone().try_inverse().unwrap();
            assert!(orthogonality_residual(&ga) < 1e-8);
            let rot = random::special_orthogonal(&mut r, m, 0.3);
            let b = takagi_factor_rotated(&s, 1.1, &rot).unwrap();
            assert!(orthogonality_residual(&(&a * b.try_inverse().unwrap())) < 1e-8);
        }
    }

    #[test]
    fn takagi_retries_off_the_cut() {
        let s = SymmetricComplexMatrix::new(diag(&[c(-1.0, 0.0), c(2.0, 0.0)])).unwrap();
        assert!(matches!(
            takagi_factor_rotated(&s, 0.0, &CMatrix::identity(2, 2)),
            Err(FactorError::BranchCut(_))
        ));
        let a = takagi_factor(&s, &mut rng(4)).unwrap();
        assert!(takagi_residual(&a, s.matrix()) <= FACTOR_TOL);
    }

    #[test]
    fn symmetric_matrix_validation() {
        let bad = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(SymmetricComplexMatrix::new(bad), Err(FactorError::Asymmetric(_))));
        assert!(matches!(
            SymmetricComplexMatrix::new(CMatrix::zeros(2, 2)),
            Err(FactorError::Singular(_))
        ));
    }

    #[test]
    fn polar_examples() {
        let mut r = rng(2);
        let o = random::special_orthogonal(&mut r, 4, 0.4);
        let (o2, s2) = ortho_symmetric_polar(&o).unwrap();
        assert!(linalg::fro(&(o2 - &o)) < 1e-10);
        assert!(linalg::fro(&(s2 - CMatrix::identity(4, 4))) < 1e-10);

        let sym = CMatrix::identity(3, 3) * c(2.0, 0.5) + random::symmetric_matrix(&mut r, 3) * c(0.2, 0.0);
        let (o3, s3) = ortho_symmetric_polar(&sym).unwrap();
        assert!(linalg::fro(&(o3 - CMatrix::identity(3, 3))) < 1e-10);
        assert!(linalg::fro(&(s3 - &sym)) < 1e-10);

        for m in 1..=6 {
            let g = random::complex_matrix(&mut r, m, m);
            let (o, s) = ortho_symmetric_polar(&g).unwrap();
            assert!(orthogonality_residual(&o) <= 1e-9);
            assert!(linalg::fro(&(&o * &s - &g)) <= 1e-9 * linalg::fro(&g));
            assert!(linalg::fro(&(&s - s.transpose())) <= 1e-12 * linalg::fro(&s));
        }
    }

    #[test]
    fn so_path_examples() {
        let id_path = complex_so_path(&CMatrix::identity(3, 3), 4).unwrap();
        assert!(id_path.iter().all(|p| linalg::fro(&(p - CMatrix::identity(3, 3))) < 1e-15));

        let theta = c(0.8, 0.6);
        let rot = CMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()]);
        let path = complex_so_path(&rot, 10).unwrap();
        assert!(linalg::fro(&(&path[0] - &rot)) < 1e-12);
        assert!(linalg::fro(&(&path[10] - CMatrix::identity(2, 2))) < 1e-12);

        let mut r = rng(5);
        for m in 2..=6 {
            let rm = random::special_orthogonal(&mut r, m, 0.6);
            let path = complex_so_path(&rm, 100).unwrap();
            assert_eq!(path.len(), 101);
            assert!(linalg::fro(&(&path[0] - &rm)) < 1e-8);
            assert!(linalg::fro(&(&path[100] - CMatrix::identity(m, m))) < 1e-12);
            for p in &path {
                assert!(orthogonality_residual(p) < 1e-8);
                assert!((p.determinant() - 1.0).norm() < 1e-8);
            }
        }
        assert!(matches!(
            complex_so_path(&(CMatrix::identity(2, 2) * c(2.0, 0.0)), 3),
            Err(FactorError::NotSpecialOrthogonal { .. })
        ));
    }

    #[test]
    fn so_path_handles_isotropic_pairs() {
        // First column (a, i·a, 1)-type vector with v₀² + v₁² = 0.
        let k = CMatrix::from_row_slice(
            3,
            3,
            &[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0), c(0.0, 0.0)],
        );
        let rm = (k * c(0.9, 0.0)).exp();
        let path = complex_so_path(&rm, 20).unwrap();
        assert!(linalg::fro(&(&path[0] - &rm)) < 1e-8);
        assert!(path.iter().all(|p| orthogonality_residual(p) < 1e-8));
    }

    #[test]
    fn symmetrize_examples() {
        let mut r = rng(8);
        let sym = CMatrix::identity(3, 3) * c(1.5, 0.2) + random::symmetric_matrix(&mut r, 3) * c(0.1, 0.0);
        let p = symmetrize_antilinear(&sym, 8).unwrap();
        assert!(p.samples.iter().all(|x| linalg::fro(&(x - &sym)) < 1e-9));

        let g1 = CMatrix::from_element(1, 1, c(-0.3, 1.2));
        let p1 = symmetrize_antilinear(&g1, 4).unwrap();
        assert!(linalg::fro(&(p1.samples.last().unwrap() - &g1)) < 1e-12);

        let mut reflected = 0;
        for m in 2..=5 {
            for _ in 0..4 {
                let g = random::complex_matrix(&mut r, m, m);
                let p = symmetrize_antilinear(&g, 40).unwrap();
                reflected += usize::from(p.reflected);
                assert!(linalg::fro(&(&p.samples[0] - &g)) < 1e-8 * linalg::fro(&g));
                assert!(p.endpoint_symmetry <= 1e-9, "{}", p.endpoint_symmetry);
                assert!(p.min_singular > 0.0);
            }
        }
        assert!(reflected > 0);
    }

    #[test]
    fn jtau_examples() {
        let mut r = rng(3);
        let base = random_block_j(&mut r, 2, 1, 0.0);
        let out = jtau_blocks(&base).unwrap();
        let mut diag_j = DMatrix::zeros(6, 6);
        diag_j.view_mut((0, 0), (4, 4)).copy_from(base.jt());
        diag_j.view_mut((4, 4), (2, 2)).copy_from(base.jn());
        assert!(rfro(&(&out.jtau - &diag_j)) < 1e-14);

        let zero_y = BlockJData::new(base.jt().clone(), base.jn().clone(), DMatrix::zeros(4, 2), 2.0).unwrap();
        assert!(rfro(&(jtau_blocks(&zero_y).unwrap().jtau - &diag_j)) < 1e-14);

        for _ in 0..20 {
            let d = random_block_j(&mut r, 2, 2, 0.3);
            let out = jtau_blocks(&d).unwrap();
            assert!(out.closed_form_residual < 1e-12);
            assert!(out.square_residual < 1e-12);
            assert!(out.upper_triangular);
            assert!(antilinearity_residual(d.jt(), d.jn(), d.ynt()) < 1e-12);
        }
    }

    #[test]
    fn jtau_rejects_bad_data() {
        let jt = standard_complex_structure(1);
        let y = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            BlockJData::new(jt.clone(), jt.clone(), y, 1.0),
            Err(FactorError::NotAntilinear(_))
        ));
        assert!(matches!(
            BlockJData::new(DMatrix::identity(2, 2), jt.clone(), DMatrix::zeros(2, 2), 1.0),
            Err(FactorError::NotComplexStructure(_))
        ));
    }
}
