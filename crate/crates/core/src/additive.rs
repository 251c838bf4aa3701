//! Exhaustive desk-scale checkers for additive structure: Freiman
//! homomorphisms of bounded order, affine forms of maps from a finite
//! abelian group box into `ℤ_p`, and the coefficient-matching condition.
//!
//! Everything here is an exact oracle: no sampling, no tolerance.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;


use crate::abelian::{solve_mod_q, FiniteAbelianGroup, GroupElement, IntegerMatrix};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdditiveError {
    UnsupportedOrder(usize),
    BudgetExceeded { needed: u128, budget: u128 },
    Shape(String),
}

impl fmt::Display for AdditiveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdditiveError::UnsupportedOrder(s) => {
                write!(f, "Freiman order {s} unsupported (expected 2..=8)")
            }
            AdditiveError::BudgetExceeded { needed, budget } => {
                write!(f, "sum-class table too large: {needed} > {budget}")
            }
            AdditiveError::Shape(s) => write!(f, "shape: {s}"),
        }
    }
}

impl core::error::Error for AdditiveError {}

/// A map from an explicitly enumerated subset `A' ⊆ 𝒜ⁿ` into `ℤ_q`.
/// The ambient group is stored flattened: `𝒜ⁿ` is itself a finite abelian
/// group whose factor list repeats that of `𝒜` n times.
#[derive(Debug, Clone)]
pub struct FunctionOnGroupBox {
    pub ambient: FiniteAbelianGroup,
    pub q: u64,
    points: Vec<(GroupElement, u64)>,
}

/// The n-fold power box of a group, as a flat factor list.
pub fn power_box(group: &FiniteAbelianGroup, n: usize) -> FiniteAbelianGroup {
    let mut factors = Vec::with_capacity(group.arity() * n);
    for _ in 0..n {
        factors.extend_from_slice(group.factors());
    }
    FiniteAbelianGroup::new(factors)
}

impl FunctionOnGroupBox {
    pub fn new(
        ambient: FiniteAbelianGroup,
        q: u64,
        points: Vec<(GroupElement, u64)>,
    ) -> Result<Self, AdditiveError> {
        for (e, v) in &points {
            if !ambient.contains(e) {
                return Err(AdditiveError::Shape(format!(
                    "point {:?} outside the ambient box",
                    e.coords
                )));
            }
            if *v >= q {
                return Err(AdditiveError::Shape(format!("value {v} not reduced mod {q}")));
            }
        }
        Ok(FunctionOnGroupBox { ambient, q, points })
    }

    /// Total function on the box, values listed in the canonical element
    /// order of `ambient.elements()`.
    pub fn total(
        ambient: FiniteAbelianGroup,
        q: u64,
        values: &[u64],
    ) -> Result<Self, AdditiveError> {
        let elems = ambient.elements();
        if elems.len() != values.len() {
            return Err(AdditiveError::Shape(format!(
                "expected {} values, got {}",
                elems.len(),
                values.len()
            )));
        }
        let points = elems.into_iter().zip(values.iter().copied()).collect();
        FunctionOnGroupBox::new(ambient, q, points)
    }

    pub fn points(&self) -> &[(GroupElement, u64)] {
        &self.points
    }
}

/// A pair of equal-sum s-tuples with different image sums; entries are
/// indices into the function's point list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreimanViolation {
    pub lhs: Vec<usize>,
    pub rhs: Vec<usize>,
}

const FREIMAN_BUDGET: u128 = 100_000_000;

/// Order-s Freiman homomorphism check: every pair of s-tuples from `A'`
/// with equal element sums must have equal image sums mod q. Implemented
/// by a meet-in-the-middle sum-class table over half-tuples.
pub fn freiman_check(
    f: &FunctionOnGroupBox,
    s: usize,
) -> Result<(bool, Option<FreimanViolation>), AdditiveError> {
    if !(2..=8).contains(&s) {
        return Err(AdditiveError::UnsupportedOrder(s));
    }
    let n_pts = f.points.len() as u128;
    let half = s.div_ceil(2);
    let needed = n_pts.pow(2 * half as u32);
    if needed > FREIMAN_BUDGET {
        return Err(AdditiveError::BudgetExceeded {
            needed,
            budget: FREIMAN_BUDGET,
        });
    }
    if f.points.is_empty() {
        return Ok((true, None));
    }

    // (element sum, image sum) classes of all h-tuples, one witness each.
    let classes = |h: usize| -> Vec<(GroupElement, u64, Vec<usize>)> {
        let mut seen: BTreeMap<(GroupElement, u64), Vec<usize>> = BTreeMap::new();
        let mut idx = vec![0usize; h];
        loop {
            let mut esum = f.ambient.identity();
            let mut isum: u64 = 0;
            for &i in &idx {
                esum = f.ambient.add(&esum, &f.points[i].0);
                isum = (isum + f.points[i].1) % f.q;
            }
            seen.entry((esum, isum)).or_insert_with(|| idx.clone());
            let mut c = h;
            loop {
                if c == 0 {
                    return seen
                        .into_iter()
                        .map(|((e, v), w)| (e, v, w))
                        .collect();
                }
                c -= 1;
                idx[c] += 1;
                if idx[c] < f.points.len() {
                    break;
                }
                idx[c] = 0;
            }
        }
    };
    let left = classes(half);
    let right = if s == 2 * half {
        left.clone()
    } else {
        classes(s - half)
    };

    let mut totals: BTreeMap<GroupElement, (u64, Vec<usize>)> = BTreeMap::new();
    for (e1, v1, w1) in &left {
        for (e2, v2, w2) in &right {
            let esum = f.ambient.add(e1, e2);
            let isum = (v1 + v2) % f.q;
            let mut witness = w1.clone();
            witness.extend_from_slice(w2);
            match totals.get(&esum) {
                None => {
                    totals.insert(esum, (isum, witness));
                }
                Some((prev, prev_w)) => {
                    if *prev != isum {
                        return Ok((
                            false,
                            Some(FreimanViolation {
                                lhs: prev_w.clone(),
                                rhs: witness,
                            }),
                        ));
                    }
                }
            }
        }
    }
    Ok((true, None))
}

/// Affine form `v(x) = c + Σ c_i x_i (mod p)` over a group box, with the
/// integer representatives of the coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineForm {
    pub constant: u64,
    pub coefficients: Vec<u64>,
}

impl AffineForm {
    pub fn eval(&self, e: &GroupElement, p: u64) -> u64 {
        let mut acc = self.constant as u128;
        for (c, &x) in self.coefficients.iter().zip(&e.coords) {
            acc += *c as u128 * x as u128;
        }
        (acc % p as u128) as u64
    }
}

/// Fit an affine form to the given (element, value mod p) points exactly;
/// `None` when no form matches. With free directions (coordinates that
/// never vary over the points) the canonical fit sets them to zero.
pub fn affine_fit(
    points: &[(GroupElement, u64)],
    group: &FiniteAbelianGroup,
    p: u64,
) -> Option<AffineForm> {
    let l = group.arity();
    let mut m = IntegerMatrix::zero(points.len(), l + 1);
    let mut rhs = Vec::with_capacity(points.len());
    for (r, (e, v)) in points.iter().enumerate() {
        m[(r, 0)] = 1.into();
        for (i, &x) in e.coords.iter().enumerate() {
            m[(r, i + 1)] = BigInt::from(x);
        }
        rhs.push(BigInt::from(*v));
    }
    let sols = solve_mod_q(&m, &rhs, p).expect("shape by construction");
    let v = sols.first()?;
    Some(AffineForm {
        constant: v[0],
        coefficients: v[1..].to_vec(),
    })
}

/// Extract the affine form of a total map `𝒜 → ℤ_p`, values in the
/// canonical element order of `group.elements()`.
pub fn affine_form_extract(
    values: &[u64],
    group: &FiniteAbelianGroup,
    p: u64,
) -> Option<AffineForm> {
    let elems = group.elements();
    assert_eq!(
        elems.len(),
        values.len(),
        "one value per box element expected"
    );
    let points: Vec<(GroupElement, u64)> = elems
        .into_iter()
        .zip(values.iter().map(|&v| v % p))
        .collect();
    affine_fit(&points, group, p)
}

/// Which coefficients of an affine form must vanish for the reduction
/// step: factor `i` with `p_i ≠ p`, or `p_i = p` with `k_i < k + j`.
pub fn czero_must_vanish(group: &FiniteAbelianGroup, p: u64, k: u32, j: u32) -> Vec<bool> {
    group
        .factors()
        .iter()
        .map(|&q| {
            let fac = crate::abelian::factorize(q);
            debug_assert_eq!(fac.len(), 1, "group factors must be prime powers");
            let (pi, ki) = fac[0];
            pi != p || ki < k + j
        })
        .collect()
}

/// Matching-coefficients condition: constants sum to zero mod p and the
/// three coefficient vectors agree coordinatewise.
pub fn coefficient_matching_check(
    fa: &AffineForm,
    fb: &AffineForm,
    fc: &AffineForm,
    p: u64,
) -> bool {
    (fa.constant + fb.constant + fc.constant) % p == 0
        && fa.coefficients == fb.coefficients
        && fb.coefficients == fc.coefficients
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Lcg;

    fn z5() -> FiniteAbelianGroup {
        FiniteAbelianGroup::new(vec![5])
    }

    #[test]
    fn homomorphisms_are_freiman_of_every_order() {
        // f(x) = 3x on ℤ₅ restricted to a few points.
        let g = z5();
        let points: Vec<(GroupElement, u64)> = [0u64, 1, 3, 4]
            .iter()
            .map(|&x| (GroupElement { coords: vec![x] }, (3 * x) % 5))
            .collect();
        let f = FunctionOnGroupBox::new(g, 5, points).unwrap();
        for s in 2..=5 {
            let (ok, v) = freiman_check(&f, s).unwrap();
            assert!(ok, "order {s}");
            assert!(v.is_none());
        }
    }

    #[test]
    fn quadratic_on_z5_fails_order_2() {
        let g = z5();
        let values: Vec<u64> = (0..5).map(|x| (x * x) % 5).collect();
        let f = FunctionOnGroupBox::total(g, 5, &values).unwrap();
        let (ok, violation) = freiman_check(&f, 2).unwrap();
        assert!(!ok);
        let v = violation.unwrap();
        // The witness must really violate: equal sums, unequal image sums.
        let sum = |idx: &[usize]| -> (u64, u64) {
            let mut es = 0;
            let mut is = 0;
            for &i in idx {
                es = (es + f.points()[i].0.coords[0]) % 5;
                is = (is + f.points()[i].1) % 5;
            }
            (es, is)
        };
        let (e1, i1) = sum(&v.lhs);
        let (e2, i2) = sum(&v.rhs);
        assert_eq!(e1, e2);
        assert_ne!(i1, i2);
    }

    #[test]
    fn singleton_domain_is_always_freiman() {
        let g = z5();
        let f = FunctionOnGroupBox::new(
            g,
            5,
            vec![(GroupElement { coords: vec![2] }, 3)],
        )
        .unwrap();
        for s in 2..=8 {
            let (ok, _) = freiman_check(&f, s).unwrap();
            assert!(ok);
        }
    }

    #[test]
    fn freiman_is_monotone_in_the_order() {
        let mut rng = Lcg::new(31);
        let g = FiniteAbelianGroup::new(vec![2, 3]);
        for _ in 0..30 {
            let mut points: Vec<(GroupElement, u64)> = Vec::new();
            for e in g.elements() {
                if rng.below(2) == 0 {
                    points.push((e, rng.below(4)));
                }
            }
            if points.is_empty() {
                continue;
            }
            let f = FunctionOnGroupBox::new(g.clone(), 4, points).unwrap();
            let mut oks = Vec::new();
            for s in 2..=4 {
                let (ok, _) = freiman_check(&f, s).unwrap();
                oks.push(ok);
            }
            // true at order s implies true at every s' <= s
            for w in oks.windows(2) {
                if w[1] {
                    assert!(w[0], "monotonicity violated: {oks:?}");
                }
            }
        }
    }

    #[test]
    fn unsupported_order_is_rejected() {
        let f = FunctionOnGroupBox::total(z5(), 5, &[0, 0, 0, 0, 0]).unwrap();
        assert!(matches!(
            freiman_check(&f, 1),
            Err(AdditiveError::UnsupportedOrder(1))
        ));
        assert!(matches!(
            freiman_check(&f, 9),
            Err(AdditiveError::UnsupportedOrder(9))
        ));
    }

    #[test]
    fn zero_map_extracts_zero_form() {
        let g = FiniteAbelianGroup::new(vec![3]);
        let form = affine_form_extract(&[0, 0, 0], &g, 3).unwrap();
        assert_eq!(form.constant, 0);
        assert_eq!(form.coefficients, vec![0]);
    }

    #[test]
    fn one_plus_two_x_on_z3() {
        let g = FiniteAbelianGroup::new(vec![3]);
        let values: Vec<u64> = (0..3).map(|x| (1 + 2 * x) % 3).collect();
        let form = affine_form_extract(&values, &g, 3).unwrap();
        assert_eq!(form.constant, 1);
        assert_eq!(form.coefficients, vec![2]);
    }

    #[test]
    fn product_map_is_not_affine_over_z2_squared() {
        let g = FiniteAbelianGroup::new(vec![2, 2]);
        // elements() order: (0,0), (0,1), (1,0), (1,1)
        let values = [0, 0, 0, 1];
        assert!(affine_form_extract(&values, &g, 2).is_none());
        // Cross-check by exhausting all 8 affine forms by hand.
        let mut any = false;
        for c in 0..2u64 {
            for c1 in 0..2u64 {
                for c2 in 0..2u64 {
                    let form = AffineForm { constant: c, coefficients: vec![c1, c2] };
                    let fits = g
                        .elements()
                        .iter()
                        .zip(&values)
                        .all(|(e, &v)| form.eval(e, 2) == v);
                    any |= fits;
                }
            }
        }
        assert!(!any);
    }

    #[test]
    fn matching_coefficients_examples() {
        let zero = AffineForm { constant: 0, coefficients: vec![0] };
        assert!(coefficient_matching_check(&zero, &zero, &zero, 2));
        let one = AffineForm { constant: 1, coefficients: vec![0] };
        assert!(!coefficient_matching_check(&one, &one, &one, 2));
        // Constants may differ as long as they cancel mod p.
        let a = AffineForm { constant: 1, coefficients: vec![1] };
        let b = AffineForm { constant: 2, coefficients: vec![1] };
        let c = AffineForm { constant: 0, coefficients: vec![1] };
        assert!(coefficient_matching_check(&a, &b, &c, 3));
    }

    #[test]
    fn czero_flags() {
        // 𝒜 = ℤ₂ × ℤ₈ × ℤ₃, p = 2, k = 1, j = 1: threshold k + j = 2.
        let g = FiniteAbelianGroup::new(vec![2, 8, 3]);
        assert_eq!(czero_must_vanish(&g, 2, 1, 1), vec![true, false, true]);
    }
}
