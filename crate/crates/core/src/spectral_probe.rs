//! Injectivity probes for assembled operators: smallest singular values,
//! numerical kernels, τ-sweeps with root refinement, and the Schur-complement
//! reduction of the complexified family near a degenerate parameter.
//!
//! Singular values are taken from the real `2n × 2n` matrix of `v ↦ Pv + Qv̄`,
//! which is unitarily equivalent to the doubled matrix `[[P, Q], [Q̄, P̄]]`;
//! the real form is cheaper and splits into independent sparsity blocks.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::cr_operator::{dbar_symbol, FourierGrid, OperatorError, OperatorFamily, RealLinearMatrix};
use crate::cr_operator::{assemble_family, BundleOperatorSpec};
use crate::linalg::{self, CMatrix};

/// Default relative rank tolerance (against `σ_max`).
pub const DEFAULT_RANK_TOL: f64 = 1e-8;
/// A local minimum counts as a root when it falls below this fraction of the median `σ_min`.
pub const DIP_FACTOR: f64 = 1e-4;
/// Width of refined root intervals.
pub const ROOT_TOL: f64 = 1e-6;
/// Largest condition number of the `𝐀` block accepted by [`schur_reduce`].
pub const MAX_SCHUR_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbeError {
    #[error("a sweep needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("invalid tau range [{0}, {1}]")]
    Range(f64, f64),
    #[error("no numerical kernel at the base point (sigma_min/sigma_max = {0:e})")]
    EmptyKernel(f64),
    #[error("the complement block is ill-conditioned (cond = {0:e}); probe is outside the neighbourhood")]
    IllConditioned(f64),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// All singular values of the real-linear operator, each counted over ℝ.
pub fn singular_values(op: &RealLinearMatrix) -> Vec<f64> {
    linalg::blocked_singular_values(&op.realify())
}

pub fn smallest_singular_value(op: &RealLinearMatrix) -> f64 {
    singular_values(op).into_iter().fold(f64::INFINITY, f64::min)
}

/// Number of singular values at most `rank_tol · σ_max`.
///
/// This is the complex dimension of the kernel of the doubled matrix, which
/// equals the real dimension of the kernel of `v ↦ Pv + Qv̄`.
pub fn kernel_dimension(op: &RealLinearMatrix, rank_tol: f64) -> usize {
    linalg::blocked_kernel_dimension(&op.realify(), rank_tol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSample {
    pub tau: f64,
    pub sigma_min: f64,
    pub kernel_dim: usize,
}

/// A closed interval known to contain a degenerate parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootInterval {
    pub lo: f64,
    pub hi: f64,
}

impl RootInterval {
    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub samples: Vec<SweepSample>,
    pub roots: Vec<RootInterval>,
    /// Every sample has a nontrivial kernel; no roots are reported then.
    pub degenerate_everywhere: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub rank_tol: f64,
    pub dip_factor: f64,
    pub root_tol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            rank_tol: DEFAULT_RANK_TOL,
            dip_factor: DIP_FACTOR,
            root_tol: ROOT_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Probe {
    sigma_min: f64,
    kernel_dim: usize,
    det_sign: i8,
}

fn probe(family: &OperatorFamily, tau: f64, rank_tol: f64) -> Probe {
    let r = family.realified_at(tau);
    let sv = linalg::blocked_singular_values(&r);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let sigma_min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let kernel_dim = sv.iter().filter(|&&s| s <= rank_tol * smax).count();
    Probe {
        sigma_min,
        kernel_dim,
        det_sign: linalg::det_sign(&r),
    }
}

fn sigma_at(family: &OperatorFamily, tau: f64) -> f64 {
    linalg::blocked_singular_values(&family.realified_at(tau))
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

fn det_sign_at(family: &OperatorFamily, tau: f64) -> i8 {
    linalg::det_sign(&family.realified_at(tau))
}

/// Sweep `τ` over `[tau_min, tau_max]` with the default options.
pub fn tau_sweep(
    spec: &BundleOperatorSpec,
    grid: &FourierGrid,
    tau_range: (f64, f64),
    samples: usize,
) -> Result<SweepRecord, ProbeError> {
    let family = assemble_family(spec, grid)?;
    sweep_family(&family, tau_range, samples, &SweepOptions::default())
}

/// Sample `σ_min` and kernel dimension on a uniform grid, then refine roots.
///
/// A sign change of `det` between neighbours is refined by bisection on the
/// sign. A local minimum of `σ_min` without sign change (a touching root) is
/// refined by golden-section search and kept when the minimum falls below
/// `dip_factor · median σ_min`.
pub fn sweep_family(
    family: &OperatorFamily,
    (tau_min, tau_max): (f64, f64),
    samples: usize,
    options: &SweepOptions,
) -> Result<SweepRecord, ProbeError> {
    if samples < 2 {
        return Err(ProbeError::TooFewSamples(samples));
    }
    if !(tau_min < tau_max) || !tau_min.is_finite() || !tau_max.is_finite() {
        return Err(ProbeError::Range(tau_min, tau_max));
    }
    let step = (tau_max - tau_min) / (samples - 1) as f64;
    let taus: Vec<f64> = (0..samples)
        .map(|i| if i + 1 == samples { tau_max } else { tau_min + step * i as f64 })
        .collect();
    let probes: Vec<Probe> = taus
        .par_iter()
        .map(|&t| probe(family, t, options.rank_tol))
        .collect();
    let records: Vec<SweepSample> = taus
        .iter()
        .zip(&probes)
        .map(|(&tau, p)| SweepSample {
            tau,
            sigma_min: p.sigma_min,
            kernel_dim: p.kernel_dim,
        })
        .collect();
    if probes.iter().all(|p| p.kernel_dim > 0) {
        return Ok(SweepRecord {
            samples: records,
            roots: Vec::new(),
            degenerate_everywhere: true,
        });
    }

    let mut sorted: Vec<f64> = probes.iter().map(|p| p.sigma_min).collect();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let threshold = options.dip_factor * median;

    let mut roots: Vec<RootInterval> = Vec::new();
    for (i, p) in probes.iter().enumerate() {
        if p.det_sign == 0 {
            roots.push(RootInterval { lo: taus[i], hi: taus[i] });
        }
    }
    for i in 0..samples - 1 {
        let (a, b) = (probes[i].det_sign, probes[i + 1].det_sign);
        if a != 0 && b != 0 && a != b {
            roots.push(bisect_sign(family, taus[i], taus[i + 1], a, options.root_tol));
        }
    }
    for i in 0..samples {
        let s = probes[i].sigma_min;
        let left = if i > 0 { probes[i - 1].sigma_min } else { f64::INFINITY };
        let right = if i + 1 < samples { probes[i + 1].sigma_min } else { f64::INFINITY };
        if !(s < left && s <= right) {
            continue;
        }
        let lo = taus[i.saturating_sub(1)];
        let hi = taus[(i + 1).min(samples - 1)];
        if roots.iter().any(|r| r.hi >= lo && r.lo <= hi) {
            continue;
        }
        let interval = golden_section(family, lo, hi, options.root_tol);
        if sigma_at(family, interval.center()) <= threshold {
            roots.push(interval);
        }
    }
    roots.sort_by(|x, y| x.lo.total_cmp(&y.lo));
    roots.dedup_by(|x, y| x.lo <= y.hi);
    Ok(SweepRecord {
        samples: records,
        roots,
        degenerate_everywhere: false,
    })
}

fn bisect_sign(family: &OperatorFamily, mut lo: f64, mut hi: f64, lo_sign: i8, tol: f64) -> RootInterval {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let s = det_sign_at(family, mid);
        if s == 0 {
            return RootInterval { lo: mid, hi: mid };
        }
        if s == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
        if mid <= lo.min(hi) && mid >= lo.max(hi) {
            break;
        }
    }
    RootInterval { lo, hi }
}

fn golden_section(family: &OperatorFamily, mut a: f64, mut b: f64, tol: f64) -> RootInterval {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = sigma_at(family, x1);
    let mut f2 = sigma_at(family, x2);
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = sigma_at(family, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = sigma_at(family, x2);
        }
    }
    RootInterval { lo: a, hi: b }
}

/// Continue refining a root interval to near machine precision.
pub fn polish_root(family: &OperatorFamily, root: &RootInterval) -> f64 {
    let (lo, hi) = (root.lo, root.hi);
    if lo == hi {
        return lo;
    }
    let tight = 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(1.0);
    let (sl, sh) = (det_sign_at(family, lo), det_sign_at(family, hi));
    if sl != 0 && sh != 0 && sl != sh {
        bisect_sign(family, lo, hi, sl, tight).center()
    } else {
        let pad = (hi - lo).max(ROOT_TOL);
        golden_section(family, lo - pad, hi + pad, tight).center()
    }
}

/// Singular values of the `β ≡ 1`, `A ≡ 0` operator on `grid`, from the
/// mode-pair diagonalization, each counted over ℝ.
///
/// Mode 0 contributes `|τ|` twice, a pair `±ξ` inside the grid contributes
/// `√(|λ_ξ|² + τ²)` four times, and a mode whose negative is truncated away
/// contributes `|λ_ξ|` twice.
pub fn closed_form_singular_values(grid: &FourierGrid, tau: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * grid.num_modes());
    for mode in grid.modes() {
        let lambda = dbar_symbol(mode, grid.lattice()).norm();
        let value = if grid.contains(-mode) {
            lambda.hypot(tau)
        } else {
            lambda
        };
        out.extend([value, value]);
    }
    out
}

/// Smallest entry of [`closed_form_singular_values`]; equals `|τ|`.
pub fn closed_form_sigma(grid: &FourierGrid, tau: f64) -> f64 {
    closed_form_singular_values(grid, tau)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Singular decomposition of the complexified operator at a base point.
#[derive(Debug, Clone)]
pub struct SchurData {
    base_tau: Complex64,
    u: CMatrix,
    v: CMatrix,
    kernel_dim: usize,
    sigma_max: f64,
    rank_tol: f64,
    /// Blocks of `M(τ) = M₀ + τM₁` in the fixed splitting, as `(X₀, X₁)`.
    blocks: [(CMatrix, CMatrix); 4],
}

impl SchurData {
    pub fn base_tau(&self) -> Complex64 {
        self.base_tau
    }

    pub fn reduced_dim(&self) -> usize {
        self.kernel_dim
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    fn split(&self) -> usize {
        self.u.ncols() - self.kernel_dim
    }

    /// Orthonormal basis of the numerical kernel (right singular vectors).
    pub fn kernel_basis(&self) -> CMatrix {
        self.v.columns(self.split(), self.kernel_dim).into_owned()
    }

    /// Orthonormal basis of the numerical cokernel (left singular vectors).
    pub fn cokernel_basis(&self) -> CMatrix {
        self.u.columns(self.split(), self.kernel_dim).into_owned()
    }

    /// Kernel dimension of a reduced matrix against the base point's scale.
    pub fn reduced_kernel_dimension(&self, phi: &CMatrix) -> usize {
        if phi.is_empty() {
            return 0;
        }
        phi.clone()
            .singular_values()
            .iter()
            .filter(|&&s| s <= self.rank_tol * self.sigma_max)
            .count()
    }
}

pub fn schur_data(family: &OperatorFamily, base_tau: Complex64, rank_tol: f64) -> Result<SchurData, ProbeError> {
    let m = family.complexified_at(base_tau);
    let n = m.nrows();
    let svd = m.svd(true, true);
    let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma_max = svd.singular_values[order[0]];
    let sigma_min = svd.singular_values[order[n - 1]];
    let kernel_dim = order
        .iter()
        .filter(|&&k| svd.singular_values[k] <= rank_tol * sigma_max)
        .count();
    if kernel_dim == 0 {
        return Err(ProbeError::EmptyKernel(sigma_min / sigma_max));
    }
    let v = v_t.adjoint();
    let u_sorted = CMatrix::from_fn(n, n, |i, j| u[(i, order[j])]);
    let v_sorted = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    let m0 = family.complexified_at(Complex64::new(0.0, 0.0));
    let m1 = family.complexified_at(Complex64::new(1.0, 0.0)) - &m0;
    let r = n - kernel_dim;
    let (u_r, u_k) = (u_sorted.columns(0, r), u_sorted.columns(r, kernel_dim));
    let (v_r, v_k) = (v_sorted.columns(0, r), v_sorted.columns(r, kernel_dim));
    let project = |left: &nalgebra::DMatrixView<Complex64>, right: &nalgebra::DMatrixView<Complex64>| {
        (left.adjoint() * &m0 * right, left.adjoint() * &m1 * right)
    };
    let blocks = [
        project(&u_r, &v_r),
        project(&u_r, &v_k),
        project(&u_k, &v_r),
        project(&u_k, &v_k),
    ];
    Ok(SchurData {
        base_tau,
        u: u_sorted,
        v: v_sorted,
        kernel_dim,
        sigma_max,
        rank_tol,
        blocks,
    })
}

/// `Φ(τ) = 𝐃 − 𝐂𝐀⁻¹𝐁` for the blocks of the complexified operator at
/// `probe_tau` in the splitting fixed by `data`.
pub fn schur_reduce(family: &OperatorFamily, data: &SchurData, probe_tau: Complex64) -> Result<CMatrix, ProbeError> {
    let n = 2 * family.dim();
    if n != data.u.nrows() {
        return Err(ProbeError::Operator(OperatorError::Dimension {
            expected: data.u.nrows(),
            got: n,
        }));
    }
    let at = |(x0, x1): &(CMatrix, CMatrix)| x0 + x1 * probe_tau;
    let [a, b, c, d] = data.blocks.each_ref().map(at);
    if data.split() == 0 {
        return Ok(d);
    }
    let cond = linalg::condition_number(&a);
    if !(cond < MAX_SCHUR_CONDITION) {
        return Err(ProbeError::IllConditioned(cond));
    }
    let a_inv_b = a.lu().solve(&b).ok_or(ProbeError::IllConditioned(f64::INFINITY))?;
    Ok(d - c * a_inv_b)
}

/// Kernel dimension of the full complexified matrix at complex `τ`.
pub fn complexified_kernel_dimension(family: &OperatorFamily, tau: Complex64, rank_tol: f64) -> usize {
    let sv = family.complexified_at(tau).singular_values();
    let smax = sv.max();
    sv.iter().filter(|&&s| s <= rank_tol * smax).count()
}

/// Kernel dimension at real `τ` against an absolute threshold.
pub fn kernel_dimension_below(family: &OperatorFamily, tau: f64, threshold: f64) -> usize {
    linalg::blocked_singular_values(&family.realified_at(tau))
        .into_iter()
        .filter(|&s| s <= threshold)
        .count()
}

/// Real matrix of a diagonal operator, exposed for tests of the probes.
pub fn diagonal_operator(entries: &[Complex64]) -> RealLinearMatrix {
    let n = entries.len();
    let p = CMatrix::from_fn(n, n, |i, j| if i == j { entries[i] } else { Complex64::new(0.0, 0.0) });
    RealLinearMatrix::new(p, CMatrix::zeros(n, n)).expect("square blocks")
}

/// `σ_max` of the real form, used to scale absolute thresholds.
pub fn largest_singular_value(r: &DMatrix<f64>) -> f64 {
    linalg::blocked_singular_values(r).into_iter().fold(0.0, f64::max)
}
