//! Cross-module checks against independently computed reference values.

use std::f64::consts::PI;

use crlab::cr_operator::{
    assemble, assemble_family, pullback_operator, BundleOperatorSpec, FourierGrid, TrigCoefficient, TrigPolynomial,
};
use crlab::index_calculus::cover_index;
use crlab::lattice_covers::{enumerate_sublattices, Lattice, ModeIndex};
use crlab::linalg::{self, CMatrix, CVector};
use crlab::random::{self, SpecShape};
use crlab::spectral_probe::{
    kernel_dimension, kernel_dimension_below, schur_data, schur_reduce, smallest_singular_value, DEFAULT_RANK_TOL,
};
use crlab::weitzenboeck::{wb_constants, SUP_GRID};
use num_bigint::BigInt;
use num_complex::Complex64;
use rand::Rng;

fn skewed() -> Lattice {
    Lattice::new([1.0, 0.0], [0.3, 1.2]).unwrap()
}

/// `η(z)` and `∂̄η(z) = (∂_s + i∂_t)η` at lattice coordinates `(x1, x2)`,
/// summing the Fourier series directly in the plane.
fn evaluate_with_dbar(lat: &Lattice, grid: &FourierGrid, v: &CVector, m: usize, x1: f64, x2: f64) -> (CVector, CVector) {
    let [v1, v2] = lat.basis();
    // Dual vectors: rows of the inverse transpose of the basis matrix.
    let det = v1[0] * v2[1] - v1[1] * v2[0];
    let d1 = [v2[1] / det, -v2[0] / det];
    let d2 = [-v1[1] / det, v1[0] / det];
    let z = [x1 * v1[0] + x2 * v2[0], x1 * v1[1] + x2 * v2[1]];
    let (mut value, mut dbar) = (CVector::zeros(m), CVector::zeros(m));
    for (p, mode) in grid.modes().enumerate() {
        let xi = [
            mode.k1 as f64 * d1[0] + mode.k2 as f64 * d2[0],
            mode.k1 as f64 * d1[1] + mode.k2 as f64 * d2[1],
        ];
        let e = Complex64::from_polar(1.0, 2.0 * PI * (xi[0] * z[0] + xi[1] * z[1]));
        let ds = Complex64::new(0.0, 2.0 * PI * xi[0]);
        let dt = Complex64::new(0.0, 2.0 * PI * xi[1]);
        for r in 0..m {
            let c = v[p * m + r] * e;
            value[r] += c;
            dbar[r] += c * (ds + Complex64::i() * dt);
        }
    }
    (value, dbar)
}

#[test]
fn assembled_operator_matches_pointwise_evaluation() {
    let lat = skewed();
    let grid = FourierGrid::new(12, lat).unwrap();
    let mut rng = random::rng(41);
    for m in 1..=2 {
        let shape = SpecShape {
            rank: m,
            symmetric_beta: false,
            ..SpecShape::default()
        };
        let spec = random::random_spec(&mut rng, lat, &shape).with_tau(0.7);
        let bw = grid.section_bandwidth(spec.bandwidth());
        let eta = random::random_section(&mut rng, &grid, m, bw);
        let out = assemble(&spec, &grid).unwrap().apply(&eta).unwrap();
        let samples = 9;
        let sampled = grid.sample_section(&out, m, samples);
        for i in 0..samples {
            for j in 0..samples {
                let (x1, x2) = (i as f64 / samples as f64, j as f64 / samples as f64);
                let (value, dbar) = evaluate_with_dbar(&lat, &grid, &eta, m, x1, x2);
                let expected = dbar
                    + spec.linear().eval(x1, x2) * &value
                    + spec.antilinear().eval(x1, x2) * value.map(|z| z.conj()) * Complex64::new(0.7, 0.0);
                let err = (&sampled[i * samples + j] - &expected).norm();
                assert!(err <= 1e-9 * expected.norm().max(1.0), "m={m} ({i},{j}): {err:e}");
            }
        }
    }
}

#[test]
fn oracle_spec_singular_values_by_mode_pairs() {
    // On any lattice, β ≡ 1, A ≡ 0: σ_min = |τ| while the 2π-scaled dual lattice stays away from 0.
    let lat = skewed();
    let grid = FourierGrid::new(8, lat).unwrap();
    let family = assemble_family(&BundleOperatorSpec::oracle(lat, 0.0), &grid).unwrap();
    for tau in [0.0, 0.25, 1.0, 3.0] {
        let s = smallest_singular_value(&family.at(tau));
        assert!((s - tau).abs() <= 1e-9, "tau={tau}: {s}");
    }
}

#[test]
fn constants_span_the_kernel_for_any_lattice() {
    let mut rng = random::rng(5);
    for m in 1..=3 {
        let v1 = [rng.random_range(0.5..2.0), rng.random_range(-0.5..0.5)];
        let v2 = [rng.random_range(-0.5..0.5), rng.random_range(0.5..2.0)];
        let lat = Lattice::new(v1, v2).unwrap();
        let grid = FourierGrid::new(8, lat).unwrap();
        let shape = SpecShape {
            rank: m,
            ..SpecShape::default()
        };
        let beta = random::random_spec(&mut rng, lat, &shape).antilinear().clone();
        let spec = BundleOperatorSpec::new(lat, TrigPolynomial::zero(m), beta, 0.0).unwrap();
        let op = assemble(&spec, &grid).unwrap();
        let complexified = op.complexify();
        let sv = complexified.clone().singular_values();
        let tol = DEFAULT_RANK_TOL * sv.max();
        assert_eq!(sv.iter().filter(|&&s| s <= tol).count(), 2 * m);
        assert_eq!(kernel_dimension(&op, DEFAULT_RANK_TOL), 2 * m);
        // The kernel is the constant modes.
        let zero = grid.position(ModeIndex::ZERO).unwrap();
        for r in 0..m {
            let mut e = CVector::zeros(grid.dim(m));
            e[zero * m + r] = Complex64::new(0.3, -1.1);
            assert!(op.apply(&e).unwrap().norm() < 1e-14);
        }
    }
}

#[test]
fn discrete_index_vanishes_on_parent_and_cover() {
    let lat = Lattice::square();
    let mut rng = random::rng(12);
    let spec = random::random_spec(&mut rng, lat, &SpecShape::default()).with_tau(0.37);
    let parent = assemble(&spec, &FourierGrid::new(8, lat).unwrap()).unwrap();
    let real_index = |r: &nalgebra::DMatrix<f64>| {
        let kernel = linalg::blocked_kernel_dimension(r, DEFAULT_RANK_TOL) as i64;
        let cokernel = linalg::blocked_kernel_dimension(&r.transpose(), DEFAULT_RANK_TOL) as i64;
        kernel - cokernel
    };
    assert_eq!(real_index(&parent.realify()), 0);
    for d in [2, 3] {
        for sub in enumerate_sublattices(lat, d).unwrap() {
            let cover = pullback_operator(&spec, &sub, &FourierGrid::new(16, sub.lattice()).unwrap()).unwrap();
            let expected = cover_index(&BigInt::from(0), d, 2, &BigInt::from(0)).unwrap();
            assert_eq!(BigInt::from(real_index(&cover.realify())), expected);
        }
    }
}

#[test]
fn injective_beyond_twice_the_threshold() {
    let lat = Lattice::square();
    let grid = FourierGrid::new(8, lat).unwrap();
    let mut rng = random::rng(77);
    for m in 1..=2 {
        let shape = SpecShape {
            rank: m,
            ..SpecShape::default()
        };
        let spec = random::random_spec(&mut rng, lat, &shape);
        let k = wb_constants(&spec, SUP_GRID).unwrap();
        let family = assemble_family(&spec, &grid).unwrap();
        for sign in [-1.0, 1.0] {
            assert!(smallest_singular_value(&family.at(sign * (2.0 * k.tau_star + 1.0))) > 1e-10);
        }
    }
}

#[test]
fn schur_oracle_matches_full_kernel() {
    let lat = Lattice::square();
    let grid = FourierGrid::new(8, lat).unwrap();
    let family = assemble_family(&BundleOperatorSpec::oracle(lat, 0.0), &grid).unwrap();
    let data = schur_data(&family, Complex64::new(0.0, 0.0), DEFAULT_RANK_TOL).unwrap();
    assert_eq!(data.reduced_dim(), 2);
    let threshold = DEFAULT_RANK_TOL * data.sigma_max();
    for i in 0..20 {
        let t = -0.95 + 0.1 * i as f64;
        let phi = schur_reduce(&family, &data, Complex64::new(t, 0.0)).unwrap();
        assert_eq!(data.reduced_kernel_dimension(&phi), kernel_dimension_below(&family, t, threshold));
        assert!((phi.determinant().norm() - t * t).abs() < 1e-12);
    }
    let phi0 = schur_reduce(&family, &data, Complex64::new(0.0, 0.0)).unwrap();
    assert_eq!(data.reduced_kernel_dimension(&phi0), 2);
    // Off the real axis the holomorphic family stays singular only at 0.
    let phi = schur_reduce(&family, &data, Complex64::new(0.2, 0.3)).unwrap();
    assert!((phi.determinant().norm() - 0.13).abs() < 1e-12);
}

#[test]
fn pulled_back_coefficients_evaluate_identically() {
    let lat = Lattice::square();
    let beta = TrigPolynomial::new(
        2,
        vec![
            TrigCoefficient {
                mode: ModeIndex::new(1, -1),
                matrix: CMatrix::from_fn(2, 2, |i, j| Complex64::new((i + 2 * j) as f64, 1.0)),
            },
            TrigCoefficient {
                mode: ModeIndex::new(0, 1),
                matrix: CMatrix::identity(2, 2),
            },
        ],
    )
    .unwrap();
    for sub in enumerate_sublattices(lat, 6).unwrap() {
        let pulled = beta.pullback(&sub);
        let cover = sub.lattice();
        let [w1, w2] = cover.basis();
        for (y1, y2) in [(0.1, 0.2), (0.73, 0.05), (0.5, 0.9)] {
            // Same plane point, expressed in parent coordinates (the parent basis is the identity).
            let (x1, x2) = (y1 * w1[0] + y2 * w2[0], y1 * w1[1] + y2 * w2[1]);
            let diff = linalg::fro(&(pulled.eval(y1, y2) - beta.eval(x1, x2)));
            assert!(diff < 1e-12, "{:?}: {diff:e}", sub.hnf());
        }
    }
}
