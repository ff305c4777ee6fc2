//! Exact index arithmetic for pseudoholomorphic curves, their covers and
//! nodal degenerations.
//!
//! Everything here is integer or rational arithmetic. Inputs are small
//! machine integers; every intermediate value is promoted to [`BigInt`] or
//! [`BigRational`] so no formula can overflow or round.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("half dimension n must be at least 2, got {0}")]
    HalfDimension(i64),
    #[error("genus must be nonnegative, got {0}")]
    NegativeGenus(i64),
    #[error("cover degree must be at least 1, got {0}")]
    Degree(i64),
    #[error("invalid cover: branch count -chi_cover + d*chi_base = {0} is negative")]
    InvalidCover(BigInt),
    #[error("negative branch count {0}")]
    NegativeBranchCount(i64),
    #[error("negative node count {0}")]
    NegativeNodeCount(i64),
    #[error("component {index}: constant component must have c1 = 0, got {c1}")]
    ConstantWithChern { index: usize, c1: i64 },
    #[error("component {index}: unstable ghost, chi - N = {value} must be negative")]
    Unstable { index: usize, value: i64 },
    #[error("A.A - c1(A) = {0} is odd")]
    Parity(BigInt),
    #[error("homology class data has mismatched dimensions")]
    DimensionMismatch,
    #[error("automorphism order must be at least 1")]
    AutomorphismOrder,
    #[error("sign must be +1 or -1, got {0}")]
    Sign(i8),
}

/// Data of a smooth closed curve `u : Σ → M` with `dim M = 2n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CurveIndexData {
    half_dim_n: i64,
    genus: i64,
    c1: i64,
}

impl CurveIndexData {
    pub fn new(half_dim_n: i64, genus: i64, c1: i64) -> Result<Self, IndexError> {
        if half_dim_n < 2 {
            return Err(IndexError::HalfDimension(half_dim_n));
        }
        if genus < 0 {
            return Err(IndexError::NegativeGenus(genus));
        }
        Ok(Self {
            half_dim_n,
            genus,
            c1,
        })
    }

    pub fn half_dim_n(&self) -> i64 {
        self.half_dim_n
    }

    pub fn genus(&self) -> i64 {
        self.genus
    }

    pub fn c1(&self) -> i64 {
        self.c1
    }

    pub fn euler_characteristic(&self) -> BigInt {
        euler_characteristic(self.genus)
    }
}

pub fn euler_characteristic(genus: i64) -> BigInt {
    BigInt::from(2) - BigInt::from(2) * BigInt::from(genus)
}

/// `(n − 3)·χ(Σ) + 2·c₁(u)`.
pub fn curve_index(data: &CurveIndexData) -> BigInt {
    (BigInt::from(data.half_dim_n) - 3) * data.euler_characteristic() + BigInt::from(2) * data.c1
}

/// Branch count `Z(dφ) = −χ(Σ̃) + d·χ(Σ)` of a holomorphic cover.
pub fn riemann_hurwitz_branch(chi_cover: i64, degree: i64, chi_base: i64) -> Result<BigInt, IndexError> {
    if degree < 1 {
        return Err(IndexError::Degree(degree));
    }
    let z = -BigInt::from(chi_cover) + BigInt::from(degree) * BigInt::from(chi_base);
    if z.is_negative() {
        return Err(IndexError::InvalidCover(z));
    }
    Ok(z)
}

/// Index of a `d`-fold cover: `d·ind(v) − (n − 3)·Z(dφ)`.
pub fn cover_index(
    base_index: &BigInt,
    degree: i64,
    half_dim_n: i64,
    branch_count: &BigInt,
) -> Result<BigInt, IndexError> {
    if degree < 1 {
        return Err(IndexError::Degree(degree));
    }
    if half_dim_n < 2 {
        return Err(IndexError::HalfDimension(half_dim_n));
    }
    if branch_count.is_negative() {
        return Err(IndexError::InvalidCover(branch_count.clone()));
    }
    Ok(BigInt::from(degree) * base_index - (BigInt::from(half_dim_n) - 3) * branch_count)
}

/// One smooth component of a nodal limit curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodalComponent {
    pub genus: i64,
    pub c1: i64,
    pub node_count: i64,
    pub is_constant: bool,
}

impl NodalComponent {
    pub fn new(genus: i64, c1: i64, node_count: i64, is_constant: bool) -> Self {
        Self {
            genus,
            c1,
            node_count,
            is_constant,
        }
    }

    /// Checks the type invariants and the ghost stability condition `χ(Sᵢ) − Nᵢ < 0`.
    pub fn validate(&self, index: usize) -> Result<(), IndexError> {
        if self.genus < 0 {
            return Err(IndexError::NegativeGenus(self.genus));
        }
        if self.node_count < 0 {
            return Err(IndexError::NegativeNodeCount(self.node_count));
        }
        if self.is_constant {
            if self.c1 != 0 {
                return Err(IndexError::ConstantWithChern { index, c1: self.c1 });
            }
            let value = 2 - 2 * self.genus - self.node_count;
            if value >= 0 {
                return Err(IndexError::Unstable { index, value });
            }
        }
        Ok(())
    }
}

/// Index of the smooth curves converging to a nodal curve with the given
/// components: `Σᵢ [ind(u∞ⁱ) − (n − 3)·Nᵢ]`.
pub fn nodal_index(components: &[NodalComponent], half_dim_n: i64) -> Result<BigInt, IndexError> {
    if half_dim_n < 2 {
        return Err(IndexError::HalfDimension(half_dim_n));
    }
    let shift = BigInt::from(half_dim_n) - 3;
    let mut total = BigInt::zero();
    for (i, comp) in components.iter().enumerate() {
        comp.validate(i)?;
        let data = CurveIndexData::new(half_dim_n, comp.genus, comp.c1)?;
        total += curve_index(&data) - &shift * comp.node_count;
    }
    Ok(total)
}

/// Pseudocycle inequality `ind(u_k) ≥ 2 + Σ ind(u∞ⁱ)` over the nonconstant components.
pub fn pseudocycle_check(parent_index: &BigInt, nonconstant_component_indices: &[BigInt]) -> bool {
    let sum: BigInt = nonconstant_component_indices.iter().sum();
    *parent_index >= sum + 2
}

/// Virtual count of double points `½(A·A − c₁(A)) + 1 − g` from the adjunction formula.
pub fn adjunction_double_points(self_int: i64, c1_a: i64, genus: i64) -> Result<BigInt, IndexError> {
    let diff = BigInt::from(self_int) - BigInt::from(c1_a);
    if diff.is_odd() {
        return Err(IndexError::Parity(diff));
    }
    Ok(diff / 2 + 1 - BigInt::from(genus))
}

/// A class in the free part of `H₂(M; ℤ)` together with the symplectic
/// area and intersection data on a chosen basis.
#[derive(Debug, Clone, PartialEq)]
pub struct HomologyClass {
    free_part: Vec<BigInt>,
    omega_values: Vec<BigRational>,
    self_intersection_form: Vec<Vec<BigInt>>,
}

impl HomologyClass {
    pub fn new(
        free_part: Vec<BigInt>,
        omega_values: Vec<BigRational>,
        self_intersection_form: Vec<Vec<BigInt>>,
    ) -> Result<Self, IndexError> {
        let r = free_part.len();
        if r == 0
            || omega_values.len() != r
            || self_intersection_form.len() != r
            || self_intersection_form.iter().any(|row| row.len() != r)
        {
            return Err(IndexError::DimensionMismatch);
        }
        for i in 0..r {
            for j in 0..i {
                if self_intersection_form[i][j] != self_intersection_form[j][i] {
                    return Err(IndexError::DimensionMismatch);
                }
            }
        }
        Ok(Self {
            free_part,
            omega_values,
            self_intersection_form,
        })
    }

    /// Convenience constructor with a zero intersection form.
    pub fn from_ints(free_part: &[i64], omega_values: &[(i64, i64)]) -> Result<Self, IndexError> {
        let r = free_part.len();
        Self::new(
            free_part.iter().map(|&a| BigInt::from(a)).collect(),
            omega_values
                .iter()
                .map(|&(p, q)| BigRational::new(p.into(), q.into()))
                .collect(),
            vec![vec![BigInt::zero(); r]; r],
        )
    }

    pub fn free_part(&self) -> &[BigInt] {
        &self.free_part
    }

    pub fn is_zero(&self) -> bool {
        self.free_part.iter().all(Zero::is_zero)
    }

    pub fn scaled(&self, k: i64) -> Self {
        Self {
            free_part: self.free_part.iter().map(|a| a * k).collect(),
            ..self.clone()
        }
    }

    /// `ω(A)` as an exact rational.
    pub fn omega(&self) -> BigRational {
        self.free_part
            .iter()
            .zip(&self.omega_values)
            .map(|(a, w)| BigRational::from_integer(a.clone()) * w)
            .sum()
    }

    /// `A·A = aᵀ Q a`.
    pub fn self_intersection(&self) -> BigInt {
        let mut acc = BigInt::zero();
        for (i, ai) in self.free_part.iter().enumerate() {
            for (j, aj) in self.free_part.iter().enumerate() {
                acc += ai * &self.self_intersection_form[i][j] * aj;
            }
        }
        acc
    }
}

/// Symplectic divisibility in the torsion-free model: the gcd `g` of the
/// coordinates if the primitive class `A/g` has positive area, otherwise 1.
/// The zero class gets 1 (empty product).
pub fn symplectic_divisibility(cls: &HomologyClass) -> BigInt {
    if cls.is_zero() {
        return BigInt::one();
    }
    let g = cls
        .free_part
        .iter()
        .fold(BigInt::zero(), |acc, a| acc.gcd(a));
    let primitive_area = cls.omega() / BigRational::from_integer(g.clone());
    if primitive_area.is_positive() {
        g
    } else {
        BigInt::one()
    }
}

/// Signed curve counts weighted by automorphism orders.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WeightedCurveCount {
    entries: Vec<(i8, u64)>,
}

impl WeightedCurveCount {
    pub fn new(entries: Vec<(i8, u64)>) -> Result<Self, IndexError> {
        for &(sign, aut) in &entries {
            if sign != 1 && sign != -1 {
                return Err(IndexError::Sign(sign));
            }
            if aut == 0 {
                return Err(IndexError::AutomorphismOrder);
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(i8, u64)] {
        &self.entries
    }

    /// Least common multiple of the automorphism orders (1 when empty).
    pub fn aut_lcm(&self) -> BigInt {
        self.entries
            .iter()
            .fold(BigInt::one(), |acc, &(_, aut)| acc.lcm(&BigInt::from(aut)))
    }
}

/// `Σ σ(u)/|Aut(u)|`.
pub fn gw_weighted_count(counts: &WeightedCurveCount) -> BigRational {
    counts
        .entries
        .iter()
        .map(|&(sign, aut)| BigRational::new(BigInt::from(sign), BigInt::from(aut)))
        .sum()
}

/// True iff `d_ω · count` is an integer.
pub fn integrality_check(count: &BigRational, d_omega: &BigInt) -> bool {
    (count * BigRational::from_integer(d_omega.clone())).is_integer()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(n: i64, g: i64, c1: i64) -> i64 {
        i64::try_from(curve_index(&CurveIndexData::new(n, g, c1).unwrap())).unwrap()
    }

    #[test]
    fn curve_index_examples() {
        assert_eq!(idx(2, 1, 0), 0);
        assert_eq!(idx(3, 0, 1), 2);
        assert_eq!(idx(2, 0, 1), 0);
    }

    #[test]
    fn curve_data_rejects_bad_inputs() {
        assert_eq!(CurveIndexData::new(1, 0, 0), Err(IndexError::HalfDimension(1)));
        assert_eq!(CurveIndexData::new(2, -1, 0), Err(IndexError::NegativeGenus(-1)));
    }

    #[test]
    fn riemann_hurwitz_examples() {
        for d in 1..6 {
            assert_eq!(riemann_hurwitz_branch(0, d, 0).unwrap(), BigInt::zero());
        }
        assert_eq!(riemann_hurwitz_branch(2, 2, 2).unwrap(), BigInt::from(2));
        assert_eq!(riemann_hurwitz_branch(-2, 2, 0).unwrap(), BigInt::from(2));
        assert!(matches!(
            riemann_hurwitz_branch(2, 1, 0),
            Err(IndexError::InvalidCover(_))
        ));
        assert_eq!(riemann_hurwitz_branch(0, 0, 0), Err(IndexError::Degree(0)));
    }

    #[test]
    fn degree_one_covers_are_isomorphisms() {
        for chi in -6..=2 {
            for chi_cover in -6..=2 {
                match riemann_hurwitz_branch(chi_cover, 1, chi) {
                    Ok(z) if z.is_zero() => assert_eq!(chi, chi_cover),
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn cover_index_examples() {
        let zero = BigInt::zero();
        for d in 1..5 {
            for z in 0..5 {
                assert_eq!(cover_index(&zero, d, 3, &BigInt::from(z)).unwrap(), zero);
            }
        }
        // n = 2: ind(u∞) = d·ind(v) + Z(dφ)
        assert_eq!(cover_index(&zero, 2, 2, &BigInt::from(2)).unwrap(), BigInt::from(2));
        assert_eq!(cover_index(&zero, 5, 2, &zero).unwrap(), zero);
    }

    #[test]
    fn unbranched_cover_index_is_multiplicative() {
        for base in -4..=4 {
            for d in 1..=4 {
                for n in 2..=5 {
                    let got = cover_index(&BigInt::from(base), d, n, &BigInt::zero()).unwrap();
                    assert_eq!(got, BigInt::from(d * base));
                }
            }
        }
    }

    #[test]
    fn nodal_index_examples() {
        let single = NodalComponent::new(2, 3, 0, false);
        assert_eq!(
            nodal_index(&[single], 4).unwrap(),
            curve_index(&CurveIndexData::new(4, 2, 3).unwrap())
        );
        let torus = NodalComponent::new(1, 0, 1, false);
        assert_eq!(nodal_index(&[torus, torus], 2).unwrap(), BigInt::from(2));
        let comps = [
            NodalComponent::new(0, 2, 1, false),
            NodalComponent::new(2, 0, 1, true),
        ];
        let direct: BigInt = comps
            .iter()
            .map(|c| curve_index(&CurveIndexData::new(3, c.genus, c.c1).unwrap()))
            .sum();
        assert_eq!(nodal_index(&comps, 3).unwrap(), direct);
    }

    #[test]
    fn nodal_index_reports_unstable_ghost() {
        let ghost_sphere = NodalComponent::new(0, 0, 2, true);
        assert_eq!(
            nodal_index(&[NodalComponent::new(1, 1, 1, false), ghost_sphere], 2),
            Err(IndexError::Unstable { index: 1, value: 0 })
        );
        let bad = NodalComponent::new(1, 2, 3, true);
        assert_eq!(
            nodal_index(&[bad], 2),
            Err(IndexError::ConstantWithChern { index: 0, c1: 2 })
        );
    }

    #[test]
    fn pseudocycle_examples() {
        let b = |v: i64| BigInt::from(v);
        assert!(pseudocycle_check(&b(2), &[b(0)]));
        assert!(!pseudocycle_check(&b(2), &[b(2)]));
        assert!(pseudocycle_check(&b(4), &[b(0), b(2)]));
    }

    #[test]
    fn adjunction_examples() {
        assert_eq!(adjunction_double_points(0, 0, 1).unwrap(), BigInt::zero());
        assert_eq!(adjunction_double_points(2, 2, 0).unwrap(), BigInt::one());
        assert_eq!(adjunction_double_points(-1, 1, 0).unwrap(), BigInt::zero());
        assert_eq!(
            adjunction_double_points(1, 0, 0),
            Err(IndexError::Parity(BigInt::one()))
        );
    }

    #[test]
    fn divisibility_examples() {
        let a = HomologyClass::from_ints(&[6, 0], &[(1, 1), (1, 1)]).unwrap();
        assert_eq!(symplectic_divisibility(&a), BigInt::from(6));
        let b = HomologyClass::from_ints(&[4, 0], &[(-1, 1), (1, 1)]).unwrap();
        assert_eq!(symplectic_divisibility(&b), BigInt::one());
        let z = HomologyClass::from_ints(&[0, 0], &[(1, 1), (1, 1)]).unwrap();
        assert_eq!(symplectic_divisibility(&z), BigInt::one());
    }

    #[test]
    fn divisibility_scales_for_positive_classes() {
        let a = HomologyClass::from_ints(&[3, -2, 5], &[(1, 2), (1, 3), (2, 7)]).unwrap();
        assert!(a.omega().is_positive());
        let base = symplectic_divisibility(&a);
        for k in 1..8 {
            assert_eq!(symplectic_divisibility(&a.scaled(k)), &base * k);
        }
    }

    #[test]
    fn self_intersection_uses_form() {
        let cls = HomologyClass::new(
            vec![BigInt::from(1), BigInt::from(2)],
            vec![BigRational::one(), BigRational::one()],
            vec![
                vec![BigInt::from(0), BigInt::from(1)],
                vec![BigInt::from(1), BigInt::from(0)],
            ],
        )
        .unwrap();
        assert_eq!(cls.self_intersection(), BigInt::from(4));
        assert!(HomologyClass::new(vec![], vec![], vec![]).is_err());
    }

    #[test]
    fn weighted_count_examples() {
        let r = |p: i64, q: i64| BigRational::new(p.into(), q.into());
        let c = WeightedCurveCount::new(vec![(1, 1), (1, 2)]).unwrap();
        assert_eq!(gw_weighted_count(&c), r(3, 2));
        assert!(integrality_check(&r(3, 2), &BigInt::from(2)));
        assert!(!integrality_check(&r(3, 2), &BigInt::from(1)));

        let c = WeightedCurveCount::new(vec![(-1, 1)]).unwrap();
        assert_eq!(gw_weighted_count(&c), r(-1, 1));
        assert!(integrality_check(&r(-1, 1), &BigInt::one()));

        let c = WeightedCurveCount::new(vec![(1, 3); 3]).unwrap();
        assert_eq!(gw_weighted_count(&c), r(1, 1));
        for d in 1..5 {
            assert!(integrality_check(&gw_weighted_count(&c), &BigInt::from(d)));
        }
        assert_eq!(
            WeightedCurveCount::new(vec![(1, 0)]),
            Err(IndexError::AutomorphismOrder)
        );
    }

    #[test]
    fn weighted_count_times_lcm_is_integral() {
        let c = WeightedCurveCount::new(vec![(1, 4), (-1, 6), (1, 9), (1, 1)]).unwrap();
        let total = gw_weighted_count(&c) * BigRational::from_integer(c.aut_lcm());
        assert!(total.is_integer());
    }
}
