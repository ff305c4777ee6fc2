//! The energy expansion of `D_τ η = Dη + τβη̄` and the injectivity
//! threshold it yields, plus the pointwise estimates for the local model
//! `z ↦ zᵖ` of a branched cover.
//!
//! For complex-symmetric `β` the cross term with `∂̄η` integrates by parts:
//!
//! ```text
//! ‖D_τη‖² = ‖Dη‖² + τ²‖βη̄‖² + 2τ Re⟨βη̄, Aη⟩ − τ Re ∫ ηᵀ (∂β)‾ η
//! ```
//!
//! with `∂ = ∂_s − i∂_t`. Norms are averages over the torus, so Parseval
//! holds without a covolume factor.

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::cr_operator::{operator_parts, BundleOperatorSpec, FourierGrid, OperatorError, TrigPolynomial};
use crate::linalg::{self, CMatrix, CVector};
use crate::random;

/// Sup-norm sampling resolution for the constants.
pub const SUP_GRID: usize = 64;
/// Safety factor applied to grid sups of non-constant coefficients.
pub const INFLATION: f64 = 1.05;
/// Largest admissible `|β − βᵀ|` coefficient entry for `m > 1`.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WbError {
    #[error("beta is not complex-symmetric (defect {0:e}); integration by parts does not close")]
    Symmetry(f64),
    #[error("beta is not invertible on the sample grid (smallest singular value {0:e})")]
    NotInvertible(f64),
    #[error("section bandwidth {got} exceeds the alias-free limit {limit}")]
    SectionBandwidth { got: i64, limit: i64 },
    #[error("branch order p must be at least 2, got {0}")]
    BranchOrder(u32),
    #[error("sample grid must have at least one point")]
    EmptyGrid,
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Every term of the energy expansion for one section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WBReport {
    pub tau: f64,
    /// `‖D_τη‖²`.
    pub lhs: f64,
    /// `‖Dη‖²` with `D = ∂̄ + A`.
    pub base: f64,
    /// `τ²‖βη̄‖²`.
    pub antilinear: f64,
    /// `2τ Re⟨βη̄, Aη⟩`.
    pub linear_cross: f64,
    /// `−τ Re ∫ ηᵀ (∂β)‾ η`, the integrated-by-parts form of the next field.
    pub parts: f64,
    /// `2τ Re⟨βη̄, ∂̄η⟩` before integration by parts.
    pub direct: f64,
    /// `‖η‖²`.
    pub section_norm: f64,
    /// `|lhs − (base + antilinear + linear_cross + parts)|`.
    pub residual: f64,
}

impl WBReport {
    pub fn rhs(&self) -> f64 {
        self.base + self.antilinear + self.linear_cross + self.parts
    }

    pub fn relative_residual(&self) -> f64 {
        if self.lhs == 0.0 {
            self.residual
        } else {
            self.residual / self.lhs
        }
    }

    /// `‖Dη‖² + (cτ² − c′|τ|)‖η‖²`.
    pub fn lower_bound(&self, constants: &WBConstants) -> f64 {
        self.base
            + (constants.c * self.tau * self.tau - constants.c_prime * self.tau.abs()) * self.section_norm
    }

    /// Named terms in a fixed order, for reports.
    pub fn terms(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("tau", self.tau),
            ("lhs", self.lhs),
            ("base", self.base),
            ("antilinear", self.antilinear),
            ("linear_cross", self.linear_cross),
            ("parts", self.parts),
            ("direct", self.direct),
            ("section_norm", self.section_norm),
            ("residual", self.residual),
        ]
    }
}

fn re_inner(x: &CVector, y: &CVector) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| (a.conj() * b).re).sum()
}

fn quadrature_size(grid: &FourierGrid) -> usize {
    SUP_GRID.max(2 * grid.n())
}

/// Evaluate every term of the expansion for `section` at the spec's `τ`.
///
/// Fourier-side terms are exact by Parseval; the integrated-by-parts term is
/// a physical-grid average that is exact for the trigonometric polynomials
/// involved.
pub fn wb_identity_residual(
    spec: &BundleOperatorSpec,
    grid: &FourierGrid,
    section: &CVector,
) -> Result<WBReport, WbError> {
    let m = spec.rank();
    if m > 1 {
        let defect = spec.antilinear().symmetry_defect();
        if defect > SYMMETRY_TOL {
            return Err(WbError::Symmetry(defect));
        }
    }
    let parts = operator_parts(spec, grid, section)?;
    let limit = grid.section_bandwidth(spec.bandwidth());
    let got = grid.section_support_bandwidth(section, m);
    if got > limit {
        return Err(WbError::SectionBandwidth { got, limit });
    }
    let tau = spec.tau();
    let d_eta = &parts.dbar + &parts.linear;
    let full = parts.combine(tau);

    let g = quadrature_size(grid);
    let samples = grid.sample_section(section, m, g);
    let dbeta = spec.antilinear().holomorphic_derivative(spec.lattice());
    let mut acc = 0.0;
    for i in 0..g {
        for j in 0..g {
            let eta = &samples[i * g + j];
            let db = linalg::conj(&dbeta.eval(i as f64 / g as f64, j as f64 / g as f64));
            acc += (eta.transpose() * db * eta)[(0, 0)].re;
        }
    }
    let ibp = acc / (g * g) as f64;

    let lhs = full.norm_squared();
    let base = d_eta.norm_squared();
    let antilinear = tau * tau * parts.antilinear.norm_squared();
    let linear_cross = 2.0 * tau * re_inner(&parts.antilinear, &parts.linear);
    let parts_term = -tau * ibp;
    let direct = 2.0 * tau * re_inner(&parts.antilinear, &parts.dbar);
    let rhs = base + antilinear + linear_cross + parts_term;
    Ok(WBReport {
        tau,
        lhs,
        base,
        antilinear,
        linear_cross,
        parts: parts_term,
        direct,
        section_norm: section.norm_squared(),
        residual: (lhs - rhs).abs(),
    })
}

/// Constants of the lower bound `‖D_τη‖² ≥ ‖Dη‖² + (cτ² − c′|τ|)‖η‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WBConstants {
    pub c: f64,
    pub c_prime: f64,
    pub tau_star: f64,
    pub min_beta_sigma: f64,
    pub sup_a: f64,
    pub sup_beta: f64,
    pub sup_dbeta: f64,
}

fn inflation(poly: &TrigPolynomial) -> f64 {
    if poly.bandwidth() == 0 {
        1.0
    } else {
        INFLATION
    }
}

/// `c = (min σ_min(β))²`, `c′ = 2 sup‖A‖ sup‖β‖ + sup‖∂β‖`, `τ* = c′/c`,
/// from a `sample_grid × sample_grid` grid.
///
/// Sups are inflated and the minimum deflated by [`INFLATION`] unless the
/// coefficient is constant, where the grid value is exact.
pub fn wb_constants(spec: &BundleOperatorSpec, sample_grid: usize) -> Result<WBConstants, WbError> {
    if sample_grid == 0 {
        return Err(WbError::EmptyGrid);
    }
    let dbeta = spec.antilinear().holomorphic_derivative(spec.lattice());
    let (mut min_sigma, mut sup_a, mut sup_beta, mut sup_dbeta) = (f64::INFINITY, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..sample_grid {
        for j in 0..sample_grid {
            let (x1, x2) = (i as f64 / sample_grid as f64, j as f64 / sample_grid as f64);
            let b = spec.antilinear().eval(x1, x2);
            let sv = b.clone().singular_values();
            min_sigma = min_sigma.min(sv.min());
            sup_beta = sup_beta.max(sv.max());
            sup_a = sup_a.max(linalg::spectral_norm(&spec.linear().eval(x1, x2)));
            sup_dbeta = sup_dbeta.max(linalg::spectral_norm(&dbeta.eval(x1, x2)));
        }
    }
    if !(min_sigma > 1e-12 * sup_beta.max(1.0)) {
        return Err(WbError::NotInvertible(min_sigma));
    }
    let beta_factor = inflation(spec.antilinear());
    let min_beta_sigma = min_sigma / beta_factor;
    let sup_a = sup_a * inflation(spec.linear());
    let sup_beta = sup_beta * beta_factor;
    let sup_dbeta = sup_dbeta * inflation(&dbeta);
    let c = min_beta_sigma * min_beta_sigma;
    let c_prime = 2.0 * sup_a * sup_beta + sup_dbeta;
    Ok(WBConstants {
        c,
        c_prime,
        tau_star: c_prime / c,
        min_beta_sigma,
        sup_a,
        sup_beta,
        sup_dbeta,
    })
}

/// Largest `|⟨ξ, β(z)η̄⟩_ℝ − ⟨β(z)ξ̄, η⟩_ℝ| = |Re ξᴴ(β − βᵀ)η̄|` over the
/// points (lattice coordinates) and a few random unit `ξ, η` per point.
pub fn symmetry_identity_check<R: Rng + ?Sized>(beta: &TrigPolynomial, points: &[(f64, f64)], rng: &mut R) -> f64 {
    const DRAWS: usize = 4;
    let m = beta.rank();
    let mut worst = 0.0f64;
    for &(x1, x2) in points {
        let b = beta.eval(x1, x2);
        for _ in 0..DRAWS {
            let xi = random::complex_vector(rng, m).normalize();
            let eta = random::complex_vector(rng, m).normalize();
            let eta_bar = eta.map(|z| z.conj());
            let xi_bar = xi.map(|z| z.conj());
            let left = re_inner(&xi, &(&b * &eta_bar));
            let right = re_inner(&(&b * &xi_bar), &eta);
            worst = worst.max((left - right).abs());
        }
    }
    worst
}

/// Outcome of the pointwise estimates for the model `β̂_φ(z) = p β̂(zᵖ) z̄^{p−1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchEstimates {
    /// `sup‖Â‖ / inf σ_min(β̂)`: a valid constant for `|Â_φη| ≤ c₁|β̂_φη̄|`.
    pub c1: f64,
    /// `sup‖∂β̂‖ / inf σ_min(β̂)²`: a valid constant for `|ηᵀ∂β̂_φη| ≤ c₂|β̂_φη̄|²`.
    pub c2: f64,
    /// Largest ratio seen for the first estimate.
    pub c1_observed: f64,
    /// Largest ratio seen for the second estimate.
    pub c2_observed: f64,
    pub violations1: usize,
    pub violations2: usize,
    /// Relative least-squares residual of the polynomial fit of `β̂`.
    pub fit_residual: f64,
}

/// Polar sampling resolution on the unit disk.
pub const DISK_GRID: usize = 64;
/// Total degree of the `w^j w̄^k` fit used to differentiate `β̂`.
pub const FIT_DEGREE: usize = 16;

fn polar_points() -> Vec<Complex64> {
    let mut out = Vec::with_capacity(DISK_GRID * DISK_GRID);
    for i in 0..DISK_GRID {
        let r = (i + 1) as f64 / DISK_GRID as f64;
        for j in 0..DISK_GRID {
            let theta = std::f64::consts::TAU * j as f64 / DISK_GRID as f64;
            out.push(Complex64::from_polar(r, theta));
        }
    }
    out
}

fn monomials() -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for total in 0..=FIT_DEGREE {
        for j in 0..=total {
            out.push((j, total - j));
        }
    }
    out
}

/// Coefficients of `∂_w` of the least-squares fit of `f` on the disk, one
/// column per matrix entry, plus the relative fit residual.
fn fit_derivative(points: &[Complex64], values: &[CMatrix]) -> (Vec<(usize, usize)>, CMatrix, f64) {
    let basis = monomials();
    let m = values[0].nrows();
    let design = CMatrix::from_fn(points.len(), basis.len(), |r, k| {
        let (j, l) = basis[k];
        points[r].powu(j as u32) * points[r].conj().powu(l as u32)
    });
    let rhs = CMatrix::from_fn(points.len(), m * m, |r, e| values[r][(e / m, e % m)]);
    let qr = design.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let qtb = q.adjoint() * &rhs;
    let coeffs = r
        .solve_upper_triangular(&qtb)
        .unwrap_or_else(|| CMatrix::zeros(basis.len(), m * m));
    let resid = linalg::fro(&(&design * &coeffs - &rhs)) / linalg::fro(&rhs).max(f64::MIN_POSITIVE);
    (basis, coeffs, resid)
}

fn eval_derivative(basis: &[(usize, usize)], coeffs: &CMatrix, m: usize, w: Complex64) -> CMatrix {
    let mut out = CMatrix::zeros(m, m);
    for (k, &(j, l)) in basis.iter().enumerate() {
        if j == 0 {
            continue;
        }
        let factor = w.powu(j as u32 - 1) * w.conj().powu(l as u32) * j as f64;
        for e in 0..m * m {
            out[(e / m, e % m)] += coeffs[(k, e)] * factor;
        }
    }
    out
}

/// Check both pointwise estimates on the polar grid of the unit disk with
/// `draws` random `η` per point. `∂_z β̂_φ = p²|z|^{2(p−1)} (∂_w β̂)(zᵖ)`,
/// with `∂_w β̂` from a polynomial fit of the disk samples of `β̂`.
pub fn branch_local_estimates<R: Rng + ?Sized>(
    p: u32,
    beta_hat: impl Fn(Complex64) -> CMatrix,
    a_hat: impl Fn(Complex64) -> CMatrix,
    draws: usize,
    rng: &mut R,
) -> Result<BranchEstimates, WbError> {
    if p < 2 {
        return Err(WbError::BranchOrder(p));
    }
    let points = polar_points();
    let samples: Vec<CMatrix> = points.iter().map(|&w| beta_hat(w)).collect();
    let m = samples[0].nrows();
    let (basis, coeffs, fit_residual) = fit_derivative(&points, &samples);

    struct Local {
        z: Complex64,
        beta: CMatrix,
        a: CMatrix,
        dbeta: CMatrix,
    }
    let mut locals = Vec::with_capacity(points.len());
    let (mut inf_sigma, mut sup_a, mut sup_d) = (f64::INFINITY, 0.0f64, 0.0f64);
    for &z in &points {
        let w = z.powu(p);
        let beta = beta_hat(w);
        let a = a_hat(w);
        let dbeta = eval_derivative(&basis, &coeffs, m, w);
        inf_sigma = inf_sigma.min(linalg::smallest_singular(&beta));
        sup_a = sup_a.max(linalg::spectral_norm(&a));
        sup_d = sup_d.max(linalg::spectral_norm(&dbeta));
        locals.push(Local { z, beta, a, dbeta });
    }
    if !(inf_sigma > 1e-12) {
        return Err(WbError::NotInvertible(inf_sigma));
    }
    let c1 = sup_a / inf_sigma;
    let c2 = sup_d / (inf_sigma * inf_sigma);
    let pf = p as f64;
    let mut out = BranchEstimates {
        c1,
        c2,
        c1_observed: 0.0,
        c2_observed: 0.0,
        violations1: 0,
        violations2: 0,
        fit_residual,
    };
    for local in &locals {
        let zbar_pow = local.z.conj().powu(p - 1);
        let beta_phi = &local.beta * (zbar_pow * pf);
        let a_phi = &local.a * (zbar_pow * pf);
        let dbeta_phi = local.dbeta.scale(pf * pf * local.z.norm_sqr().powi(p as i32 - 1));
        for _ in 0..draws {
            let eta = random::complex_vector(rng, m).normalize();
            let eta_bar = eta.map(|z| z.conj());
            let lhs1 = (&a_phi * &eta).norm();
            let rhs1 = (&beta_phi * &eta_bar).norm();
            let lhs2 = (eta.transpose() * &dbeta_phi * &eta)[(0, 0)].norm();
            let rhs2 = rhs1 * rhs1;
            // Ratios with the common factors p|z|^{p−1} cancelled.
            let base1 = (&local.beta * &eta_bar).norm();
            out.c1_observed = out.c1_observed.max((&local.a * &eta).norm() / base1);
            out.c2_observed = out
                .c2_observed
                .max((eta.transpose() * &local.dbeta * &eta)[(0, 0)].norm() / (base1 * base1));
            let slack = 1.0 + 1e-9;
            if lhs1 > c1 * rhs1 * slack + f64::MIN_POSITIVE {
                out.violations1 += 1;
            }
            if lhs2 > c2 * rhs2 * slack + f64::MIN_POSITIVE {
                out.violations2 += 1;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cr_operator::TrigCoefficient;
    use crate::lattice_covers::{Lattice, ModeIndex};
    use crate::linalg::c;
    use crate::random::{random_section, random_spec, rng, SpecShape};

    fn grid(n: usize) -> FourierGrid {
        FourierGrid::new(n, Lattice::square()).unwrap()
    }

    #[test]
    fn oracle_has_no_cross_terms() {
        let g = grid(16);
        let spec = BundleOperatorSpec::oracle(Lattice::square(), 1.7);
        let eta = random_section(&mut rng(2), &g, 1, 5);
        let r = wb_identity_residual(&spec, &g, &eta).unwrap();
        assert_eq!(r.linear_cross, 0.0);
        assert!(r.parts.abs() < 1e-12);
        assert!(r.residual <= 1e-10);
        let expect = r.base + 1.7 * 1.7 * eta.norm_squared();
        assert!((r.lhs - expect).abs() <= 1e-10 * r.lhs);
    }

    #[test]
    fn tau_zero_reduces_to_base() {
        let g = grid(8);
        let spec = random_spec(&mut rng(5), Lattice::square(), &SpecShape::default());
        let eta = random_section(&mut rng(6), &g, 1, 2);
        let r = wb_identity_residual(&spec, &g, &eta).unwrap();
        assert_eq!(r.lhs, r.base);
        assert!(r.residual <= 1e-12 * r.lhs.max(1.0));
    }

    #[test]
    fn random_symmetric_identity_closes() {
        let lat = Lattice::new([1.0, 0.2], [0.1, 1.1]).unwrap();
        let g = FourierGrid::new(16, lat).unwrap();
        let mut r = rng(11);
        for rank in [1, 2] {
            let shape = SpecShape { rank, bandwidth: 2, ..SpecShape::default() };
            let spec = random_spec(&mut r, lat, &shape).with_tau(0.8);
            let eta = random_section(&mut r, &g, rank, g.section_bandwidth(spec.bandwidth()));
            let rep = wb_identity_residual(&spec, &g, &eta).unwrap();
            assert!(rep.relative_residual() <= 1e-10, "{rep:?}");
            assert!((rep.direct - rep.parts).abs() <= 1e-9 * rep.lhs);
        }
    }

    #[test]
    fn rejects_asymmetric_beta_and_wide_sections() {
        let g = grid(8);
        let skew = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)]);
        let spec = BundleOperatorSpec::new(
            Lattice::square(),
            TrigPolynomial::zero(2),
            TrigPolynomial::constant(skew),
            1.0,
        )
        .unwrap();
        let eta = random_section(&mut rng(0), &g, 2, 1);
        assert!(matches!(wb_identity_residual(&spec, &g, &eta), Err(WbError::Symmetry(_))));
        let oracle = BundleOperatorSpec::oracle(Lattice::square(), 1.0);
        let wide = random_section(&mut rng(0), &g, 1, 4);
        assert!(matches!(
            wb_identity_residual(&oracle, &g, &wide),
            Err(WbError::SectionBandwidth { limit: 3, .. })
        ));
    }

    #[test]
    fn constants_examples() {
        let one = wb_constants(&BundleOperatorSpec::oracle(Lattice::square(), 0.0), 16).unwrap();
        assert_eq!((one.c, one.c_prime, one.tau_star), (1.0, 0.0, 0.0));
        let two = BundleOperatorSpec::new(
            Lattice::square(),
            TrigPolynomial::zero(1),
            TrigPolynomial::scalar(1, c(2.0, 0.0)),
            0.0,
        )
        .unwrap();
        let k = wb_constants(&two, 16).unwrap();
        assert_eq!((k.c, k.c_prime), (4.0, 0.0));
        let zero = BundleOperatorSpec::new(Lattice::square(), TrigPolynomial::zero(1), TrigPolynomial::zero(1), 0.0)
            .unwrap();
        assert!(matches!(wb_constants(&zero, 16), Err(WbError::NotInvertible(_))));
    }

    #[test]
    fn symmetry_check_examples() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64 / 5.0, 0.3)).collect();
        let sym = TrigPolynomial::constant(random::symmetric_matrix(&mut rng(1), 3));
        assert!(symmetry_identity_check(&sym, &pts, &mut rng(2)) < 1e-14);
        let scalar = TrigPolynomial::new(
            1,
            vec![TrigCoefficient { mode: ModeIndex::new(1, 0), matrix: CMatrix::from_element(1, 1, c(0.3, 2.0)) }],
        )
        .unwrap();
        assert!(symmetry_identity_check(&scalar, &pts, &mut rng(3)) < 1e-14);
        let skew = TrigPolynomial::constant(CMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)],
        ));
        let v = symmetry_identity_check(&skew, &pts, &mut rng(4));
        assert!(v > 1e-3 && v <= 2.0 + 1e-12);
    }

    #[test]
    fn branch_constant_beta() {
        let a = |w: Complex64| CMatrix::from_element(1, 1, c(0.5, 0.0) + w * 0.25);
        let est = branch_local_estimates(2, |_| CMatrix::identity(1, 1), a, 2, &mut rng(0)).unwrap();
        assert!((est.c1 - 0.75).abs() < 1e-12);
        assert!(est.c2 < 1e-10);
        assert_eq!((est.violations1, est.violations2), (0, 0));
    }

    #[test]
    fn branch_linear_beta() {
        let b = |w: Complex64| CMatrix::from_element(1, 1, c(1.0, 0.0) + w * 0.5);
        let a = |_: Complex64| CMatrix::from_element(1, 1, c(0.3, 0.1));
        let est = branch_local_estimates(2, b, a, 2, &mut rng(0)).unwrap();
        assert!(est.fit_residual < 1e-12);
        // ∂β̂ = 1/2 and min |β̂| = 1/2 on the disk.
        assert!((est.c2 - 2.0).abs() < 0.05, "{est:?}");
        assert!(est.c2_observed <= est.c2);
        assert_eq!((est.violations1, est.violations2), (0, 0));
        assert!(matches!(branch_local_estimates(1, b, a, 1, &mut rng(0)), Err(WbError::BranchOrder(1))));
    }
}
