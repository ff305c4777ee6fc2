//! Flat tori `ℂ/Λ`, their unbranched covers as finite-index sublattices,
//! and the bookkeeping of Fourier mode labels under pullback.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("lattice basis must be positively oriented, det = {0}")]
    Degenerate(f64),
    #[error("invalid Hermite normal form [[{a}, {b}], [0, {c}]]")]
    InvalidHnf { a: i64, b: i64, c: i64 },
    #[error("cover degree must be at least 1, got {0}")]
    Degree(i64),
}

/// A lattice in the plane spanned by two vectors with `det(v₁, v₂) > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    basis: [[f64; 2]; 2],
}

impl Lattice {
    pub fn new(v1: [f64; 2], v2: [f64; 2]) -> Result<Self, LatticeError> {
        let det = v1[0] * v2[1] - v1[1] * v2[0];
        if !(det > 0.0) || !det.is_finite() {
            return Err(LatticeError::Degenerate(det));
        }
        Ok(Self { basis: [v1, v2] })
    }

    pub fn square() -> Self {
        Self {
            basis: [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    pub fn v1(&self) -> [f64; 2] {
        self.basis[0]
    }

    pub fn v2(&self) -> [f64; 2] {
        self.basis[1]
    }

    pub fn basis(&self) -> [[f64; 2]; 2] {
        self.basis
    }

    /// Area of a fundamental domain.
    pub fn covolume(&self) -> f64 {
        let [v1, v2] = self.basis;
        v1[0] * v2[1] - v1[1] * v2[0]
    }

    /// Plane point with lattice coordinates `(x₁, x₂)`.
    pub fn point(&self, x1: f64, x2: f64) -> [f64; 2] {
        let [v1, v2] = self.basis;
        [x1 * v1[0] + x2 * v2[0], x1 * v1[1] + x2 * v2[1]]
    }

    /// Plane coordinates of the dual-lattice vector labelled by `mode`.
    pub fn dual_vector(&self, mode: ModeIndex) -> [f64; 2] {
        let dual = dual_lattice(self);
        let [w1, w2] = dual.basis;
        let (k1, k2) = (mode.k1 as f64, mode.k2 as f64);
        [k1 * w1[0] + k2 * w2[0], k1 * w1[1] + k2 * w2[1]]
    }
}

/// Basis `(w₁, w₂)` with `⟨wᵢ, vⱼ⟩ = δᵢⱼ`.
///
/// The dual of a positively oriented basis is again positively oriented, so
/// the result is a valid [`Lattice`].
pub fn dual_lattice(lat: &Lattice) -> Lattice {
    let [v1, v2] = lat.basis;
    let det = lat.covolume();
    // Rows of V⁻¹ where V has columns v₁, v₂.
    let w1 = [v2[1] / det, -v2[0] / det];
    let w2 = [-v1[1] / det, v1[0] / det];
    Lattice { basis: [w1, w2] }
}

/// Integer coordinates of a character `e^{2πi⟨ξ,z⟩}` in a dual basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub k1: i64,
    pub k2: i64,
}

impl ModeIndex {
    pub const ZERO: ModeIndex = ModeIndex { k1: 0, k2: 0 };

    pub const fn new(k1: i64, k2: i64) -> Self {
        Self { k1, k2 }
    }

    /// Sup-norm of the label.
    pub fn bandwidth(&self) -> i64 {
        self.k1.abs().max(self.k2.abs())
    }
}

impl std::ops::Add for ModeIndex {
    type Output = ModeIndex;
    fn add(self, rhs: ModeIndex) -> ModeIndex {
        ModeIndex::new(self.k1 + rhs.k1, self.k2 + rhs.k2)
    }
}

impl std::ops::Sub for ModeIndex {
    type Output = ModeIndex;
    fn sub(self, rhs: ModeIndex) -> ModeIndex {
        ModeIndex::new(self.k1 - rhs.k1, self.k2 - rhs.k2)
    }
}

impl std::ops::Neg for ModeIndex {
    type Output = ModeIndex;
    fn neg(self) -> ModeIndex {
        ModeIndex::new(-self.k1, -self.k2)
    }
}

/// Sublattice `Λ′ ⊆ Λ` generated by `a·v₁` and `b·v₁ + c·v₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sublattice {
    parent: Lattice,
    a: i64,
    b: i64,
    c: i64,
}

impl Sublattice {
    pub fn new(parent: Lattice, a: i64, b: i64, c: i64) -> Result<Self, LatticeError> {
        if a < 1 || c < 1 || b < 0 || b >= a {
            return Err(LatticeError::InvalidHnf { a, b, c });
        }
        Ok(Self { parent, a, b, c })
    }

    pub fn identity(parent: Lattice) -> Self {
        Self {
            parent,
            a: 1,
            b: 0,
            c: 1,
        }
    }

    pub fn parent(&self) -> &Lattice {
        &self.parent
    }

    /// `(a, b, c)` of the matrix `[[a, b], [0, c]]`.
    pub fn hnf(&self) -> (i64, i64, i64) {
        (self.a, self.b, self.c)
    }

    pub fn index(&self) -> i64 {
        self.a * self.c
    }

    /// The cover torus `ℂ/Λ′`.
    pub fn lattice(&self) -> Lattice {
        let [v1, v2] = self.parent.basis;
        let (a, b, c) = (self.a as f64, self.b as f64, self.c as f64);
        let w1 = [a * v1[0], a * v1[1]];
        let w2 = [b * v1[0] + c * v2[0], b * v1[1] + c * v2[1]];
        Lattice { basis: [w1, w2] }
    }
}

/// All index-`d` sublattices of `Λ` in Hermite normal form, ordered by `(a, b, c)`.
pub fn enumerate_sublattices(parent: Lattice, d: i64) -> Result<Vec<Sublattice>, LatticeError> {
    if d < 1 {
        return Err(LatticeError::Degree(d));
    }
    let mut out = Vec::new();
    for a in 1..=d {
        if d % a != 0 {
            continue;
        }
        let c = d / a;
        for b in 0..a {
            out.push(Sublattice { parent, a, b, c });
        }
    }
    Ok(out)
}

/// Re-express a parent-torus mode in the cover's dual basis.
///
/// Since `Λ′ ⊆ Λ`, every character of `ℂ/Λ` is a character of `ℂ/Λ′`;
/// the new coordinates are `⟨ξ, v′ⱼ⟩ = Hᵀ k`, always integral.
pub fn mode_embedding(sub: &Sublattice, mode: ModeIndex) -> ModeIndex {
    ModeIndex::new(sub.a * mode.k1, sub.b * mode.k1 + sub.c * mode.k2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairing(a: [f64; 2], b: [f64; 2]) -> f64 {
        a[0] * b[0] + a[1] * b[1]
    }

    #[test]
    fn rejects_degenerate_and_misoriented() {
        assert!(Lattice::new([1.0, 0.0], [2.0, 0.0]).is_err());
        assert!(Lattice::new([0.0, 1.0], [1.0, 0.0]).is_err());
        assert!(Lattice::new([1.0, 0.3], [0.2, 1.5]).is_ok());
    }

    #[test]
    fn dual_examples() {
        let sq = Lattice::square();
        assert_eq!(dual_lattice(&sq), sq);
        let rect = Lattice::new([2.0, 0.0], [0.0, 1.0]).unwrap();
        let d = dual_lattice(&rect);
        assert_eq!(d.basis(), [[0.5, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn dual_pairing_is_identity_and_involutive() {
        let lat = Lattice::new([1.3, -0.4], [0.7, 2.1]).unwrap();
        let dual = dual_lattice(&lat);
        let (v, w) = (lat.basis(), dual.basis());
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((pairing(w[i], v[j]) - expect).abs() < 1e-12);
            }
        }
        let back = dual_lattice(&dual).basis();
        for i in 0..2 {
            for j in 0..2 {
                assert!((back[i][j] - v[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sublattice_examples() {
        let sq = Lattice::square();
        let one = enumerate_sublattices(sq, 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].hnf(), (1, 0, 1));
        let two: Vec<_> = enumerate_sublattices(sq, 2)
            .unwrap()
            .iter()
            .map(Sublattice::hnf)
            .collect();
        assert_eq!(two, vec![(1, 0, 2), (2, 0, 1), (2, 1, 1)]);
        assert_eq!(enumerate_sublattices(sq, 6).unwrap().len(), 12);
        assert!(enumerate_sublattices(sq, 0).is_err());
    }

    #[test]
    fn sublattice_covolume_is_index_times_parent() {
        let lat = Lattice::new([1.0, 0.2], [0.3, 0.9]).unwrap();
        for sub in enumerate_sublattices(lat, 12).unwrap() {
            let ratio = sub.lattice().covolume() / lat.covolume();
            assert!((ratio - 12.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mode_embedding_examples() {
        let sq = Lattice::square();
        let id = Sublattice::identity(sq);
        assert_eq!(mode_embedding(&id, ModeIndex::new(3, -2)), ModeIndex::new(3, -2));
        let sub = Sublattice::new(sq, 1, 0, 2).unwrap();
        assert_eq!(mode_embedding(&sub, ModeIndex::new(0, 1)), ModeIndex::new(0, 2));
        for s in enumerate_sublattices(sq, 6).unwrap() {
            assert_eq!(mode_embedding(&s, ModeIndex::ZERO), ModeIndex::ZERO);
        }
    }

    #[test]
    fn embedded_mode_is_same_plane_vector() {
        let lat = Lattice::new([1.1, 0.1], [-0.3, 0.8]).unwrap();
        for sub in enumerate_sublattices(lat, 6).unwrap() {
            let cover = sub.lattice();
            for k1 in -3..=3 {
                for k2 in -3..=3 {
                    let m = ModeIndex::new(k1, k2);
                    let xi = lat.dual_vector(m);
                    let xi_cover = cover.dual_vector(mode_embedding(&sub, m));
                    assert!((xi[0] - xi_cover[0]).abs() < 1e-12);
                    assert!((xi[1] - xi_cover[1]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn mode_embedding_is_additive_and_injective() {
        let sq = Lattice::square();
        for sub in enumerate_sublattices(sq, 4).unwrap() {
            let mut seen = std::collections::HashSet::new();
            for k1 in -4..=4 {
                for k2 in -4..=4 {
                    let m = ModeIndex::new(k1, k2);
                    assert!(seen.insert(mode_embedding(&sub, m)));
                    let n = ModeIndex::new(k2 - 1, k1 + 2);
                    assert_eq!(
                        mode_embedding(&sub, m + n),
                        mode_embedding(&sub, m) + mode_embedding(&sub, n)
                    );
                }
            }
        }
    }
}
