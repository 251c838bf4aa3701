//! Chebyshev-based noise-mixing coefficients and the Schur-polynomial
//! identity backing their monotonicity.
//!
//! The mixing family places d+1 nodes `ρ_j = (1-ε)/2 · (cos(jπ/d) + 1)`
//! in `[0, 1-ε]` and takes Lagrange-style weights
//! `c_j = Π_{i≠j}(1-ρ_i) / Π_{i≠j}(ρ_j-ρ_i)`. The power sums
//! `A_k = Σ c_j ρ_j^k` equal 1 for `k ≤ d`, then decay monotonically
//! within `[0, 1]`, and the total weight satisfies the sharp identity
//! `Σ|c_j| = T_d((1+ε)/(1-ε))`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
pub enum ChebyError {
    BadEpsilon(f64),
    RepeatedNodes,
    OrderBelowDegree { k: u32, d: usize },
}

impl fmt::Display for ChebyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChebyError::BadEpsilon(e) => write!(f, "epsilon must lie in (0, 1/2), got {e}"),
            ChebyError::RepeatedNodes => write!(f, "nodes must be pairwise distinct"),
            ChebyError::OrderBelowDegree { k, d } => {
                write!(f, "power {k} must be at least the degree {d}")
            }
        }
    }
}

impl core::error::Error for ChebyError {}

/// Degree-d Chebyshev polynomial of the first kind, evaluated through the
/// trigonometric/hyperbolic closed forms (both |x| ≤ 1 and |x| > 1 work).
pub fn chebyshev_eval(d: u32, x: f64) -> f64 {
    if x.abs() <= 1.0 {
        (d as f64 * x.acos()).cos()
    } else if x > 1.0 {
        (d as f64 * x.acosh()).cosh()
    } else {
        let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
        sign * (d as f64 * (-x).acosh()).cosh()
    }
}

/// Nodes and weights of the degree-d noise mixing family.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMixCoefficients {
    pub d: usize,
    pub epsilon: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NoiseMixCoefficients {
    /// `A_k = Σ_j c_j ρ_j^k`.
    pub fn power_sum(&self, k: u32) -> f64 {
        self.weights
            .iter()
            .zip(&self.nodes)
            .map(|(c, r)| c * r.powi(k as i32))
            .sum()
    }

    pub fn sum_abs_weights(&self) -> f64 {
        self.weights.iter().map(|c| c.abs()).sum()
    }

    /// The closed-form value the total weight must equal.
    pub fn total_weight_identity_rhs(&self) -> f64 {
        chebyshev_eval(self.d as u32, (1.0 + self.epsilon) / (1.0 - self.epsilon))
    }

    /// Exact sign alternation `c_j (-1)^j > 0`.
    pub fn signs_alternate(&self) -> bool {
        self.weights
            .iter()
            .enumerate()
            .all(|(j, c)| if j % 2 == 0 { *c > 0.0 } else { *c < 0.0 })
    }
}

/// Build the mixing family for degree `d` and `ε ∈ (0, 1/2)`. `d = 0`
/// degenerates to the single node `ρ₀ = 1-ε` with unit weight.
pub fn noise_mix_coefficients(d: usize, epsilon: f64) -> Result<NoiseMixCoefficients, ChebyError> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(ChebyError::BadEpsilon(epsilon));
    }
    if d == 0 {
        return Ok(NoiseMixCoefficients {
            d,
            epsilon,
            nodes: vec![1.0 - epsilon],
            weights: vec![1.0],
        });
    }
    let nodes: Vec<f64> = (0..=d)
        .map(|j| {
            let angle = j as f64 * core::f64::consts::PI / d as f64;
            (1.0 - epsilon) / 2.0 * (angle.cos() + 1.0)
        })
        .collect();
    let weights: Vec<f64> = (0..=d)
        .map(|j| {
            let mut num = 1.0;
            let mut den = 1.0;
            for i in 0..=d {
                if i != j {
                    num *= 1.0 - nodes[i];
                    den *= nodes[j] - nodes[i];
                }
            }
            num / den
        })
        .collect();
    Ok(NoiseMixCoefficients {
        d,
        epsilon,
        nodes,
        weights,
    })
}

/// Both routes of the Schur identity for distinct nodes and `k ≥ d`:
/// the Lagrange sum `Σ_j ρ_j^k / Π_{i≠j}(ρ_j - ρ_i)` and the complete
/// homogeneous symmetric polynomial `h_{k-d}(ρ)` by dynamic programming.
/// Returns `(lhs, rhs, |lhs - rhs|)`.
pub fn schur_check(nodes: &[f64], k: u32) -> Result<(f64, f64, f64), ChebyError> {
    let d = nodes.len() - 1;
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            if nodes[i] == nodes[j] {
                return Err(ChebyError::RepeatedNodes);
            }
        }
    }
    if (k as usize) < d {
        return Err(ChebyError::OrderBelowDegree { k, d });
    }
    let lhs: f64 = (0..=d)
        .map(|j| {
            let mut den = 1.0;
            for i in 0..=d {
                if i != j {
                    den *= nodes[j] - nodes[i];
                }
            }
            nodes[j].powi(k as i32) / den
        })
        .sum();
    let m = k as usize - d;
    let mut h = vec![0.0f64; m + 1];
    h[0] = 1.0;
    for &r in nodes {
        for i in 1..=m {
            h[i] += r * h[i - 1];
        }
    }
    let rhs = h[m];
    Ok((lhs, rhs, (lhs - rhs).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_matches_recurrence() {
        let xs = [-2.5, -1.0, -0.7, 0.0, 0.3, 0.5, 1.0, 1.1, 3.0];
        for &x in &xs {
            let mut t0 = 1.0;
            let mut t1 = x;
            for d in 0..=30u32 {
                let want = if d == 0 { 1.0 } else { t1 };
                let got = chebyshev_eval(d, x);
                let scale = want.abs().max(1.0);
                assert!(
                    (got - want).abs() <= 1e-10 * scale,
                    "T_{d}({x}) = {got}, recurrence {want}"
                );
                if d > 0 {
                    let next = 2.0 * x * t1 - t0;
                    t0 = t1;
                    t1 = next;
                }
            }
        }
    }

    #[test]
    fn chebyshev_point_values() {
        for d in 0..20 {
            assert!((chebyshev_eval(d, 1.0) - 1.0).abs() < 1e-12);
        }
        assert!((chebyshev_eval(2, 0.0) + 1.0).abs() < 1e-12);
        // T₃(1/2) = cos(π) = −1
        assert!((chebyshev_eval(3, 0.5) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn degree_one_family_by_hand() {
        let eps = 0.25;
        let mix = noise_mix_coefficients(1, eps).unwrap();
        assert_eq!(mix.nodes.len(), 2);
        assert!((mix.nodes[0] - (1.0 - eps)).abs() < 1e-15);
        assert!(mix.nodes[1].abs() < 1e-15);
        assert!((mix.weights[0] - 1.0 / (1.0 - eps)).abs() < 1e-12);
        assert!((mix.weights[1] + eps / (1.0 - eps)).abs() < 1e-12);
        assert!((mix.power_sum(0) - 1.0).abs() < 1e-12);
        assert!((mix.power_sum(1) - 1.0).abs() < 1e-12);
        // Σ|c| = (1+ε)/(1−ε) = 5/3 for ε = 1/4.
        assert!((mix.sum_abs_weights() - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_degree_zero() {
        let mix = noise_mix_coefficients(0, 0.25).unwrap();
        assert_eq!(mix.nodes, vec![0.75]);
        assert_eq!(mix.weights, vec![1.0]);
        assert!((mix.power_sum(0) - 1.0).abs() < 1e-15);
        assert!(mix.signs_alternate());
    }

    #[test]
    fn epsilon_out_of_range_is_rejected() {
        assert!(noise_mix_coefficients(3, 0.0).is_err());
        assert!(noise_mix_coefficients(3, 0.5).is_err());
        assert!(noise_mix_coefficients(3, -1.0).is_err());
    }

    #[test]
    fn family_invariants_on_a_small_grid() {
        for d in [1usize, 2, 5, 9, 16] {
            for eps in [0.25, 0.0625] {
                let mix = noise_mix_coefficients(d, eps).unwrap();
                let total = mix.sum_abs_weights();
                // Nodes strictly decreasing within [0, 1-ε].
                for w in mix.nodes.windows(2) {
                    assert!(w[0] > w[1]);
                }
                assert!(mix.nodes[0] <= 1.0 - eps + 1e-12);
                assert!(mix.nodes[d] >= -1e-12);
                assert!(mix.signs_alternate(), "d={d} eps={eps}");
                // Interpolation: A_k = 1 for k ≤ d.
                for k in 0..=d as u32 {
                    assert!(
                        (mix.power_sum(k) - 1.0).abs() <= 1e-8 * total,
                        "d={d} eps={eps} k={k}"
                    );
                }
                // Decay: monotone non-increasing, within [0, 1] up to tol.
                let tol = 1e-8 * total;
                let mut prev = mix.power_sum(d as u32);
                for k in d as u32 + 1..=200 {
                    let a = mix.power_sum(k);
                    assert!(a <= prev + tol, "d={d} eps={eps} k={k}");
                    assert!(a >= -tol && a <= 1.0 + tol);
                    prev = a;
                }
                // Sharp total-weight identity.
                let rhs = mix.total_weight_identity_rhs();
                assert!((total - rhs).abs() <= 1e-8 * rhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn schur_small_cases() {
        // d = 1, k = 2: both sides are ρ₀ + ρ₁.
        let nodes = [0.7, 0.2];
        let (lhs, rhs, diff) = schur_check(&nodes, 2).unwrap();
        assert!((lhs - 0.9).abs() < 1e-12);
        assert!((rhs - 0.9).abs() < 1e-12);
        assert!(diff < 1e-12);
        // k = d: h₀ = 1.
        let nodes = [0.9, 0.4, 0.1];
        let (lhs, rhs, _) = schur_check(&nodes, 2).unwrap();
        assert!((lhs - 1.0).abs() < 1e-10);
        assert!((rhs - 1.0).abs() < 1e-15);
    }

    #[test]
    fn schur_matches_brute_force_composition_sum() {
        let mut rng = crate::rng::Lcg::new(12);
        for _ in 0..20 {
            let d = 3usize;
            let k = 9u32;
            let nodes: Vec<f64> = (0..=d).map(|_| rng.unit_f64()).collect();
            if schur_check(&nodes, k).is_err() {
                continue;
            }
            let (_, rhs, diff) = schur_check(&nodes, k).unwrap();
            // Brute force: all compositions a₀+…+a₃ = 6.
            let m = k as usize - d;
            let mut brute = 0.0;
            for a0 in 0..=m {
                for a1 in 0..=m - a0 {
                    for a2 in 0..=m - a0 - a1 {
                        let a3 = m - a0 - a1 - a2;
                        brute += nodes[0].powi(a0 as i32)
                            * nodes[1].powi(a1 as i32)
                            * nodes[2].powi(a2 as i32)
                            * nodes[3].powi(a3 as i32);
                    }
                }
            }
            assert!((rhs - brute).abs() <= 1e-10 * brute.max(1.0));
            assert!(diff <= 1e-8 * rhs.max(1.0));
        }
    }

    #[test]
    fn schur_rejects_bad_inputs() {
        assert!(matches!(
            schur_check(&[0.5, 0.5], 3),
            Err(ChebyError::RepeatedNodes)
        ));
        assert!(matches!(
            schur_check(&[0.5, 0.2, 0.1], 1),
            Err(ChebyError::OrderBelowDegree { .. })
        ));
    }

    #[test]
    fn growth_bound_with_audited_constant() {
        for d in [1usize, 4, 10, 20, 30] {
            for eps in [0.25, 0.0625, 0.015625] {
                let mix = noise_mix_coefficients(d, eps).unwrap();
                let bound = (10.0 * d as f64 * eps.sqrt()).exp();
                assert!(
                    mix.sum_abs_weights() <= bound,
                    "d={d} eps={eps}: {} > {bound}",
                    mix.sum_abs_weights()
                );
            }
        }
    }
}
