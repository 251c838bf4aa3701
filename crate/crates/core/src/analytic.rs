//! The Fourier-analytic toolkit: arithmetized win probability, correlation
//! tensors, the two-player spectral bound, effective/modest orthogonal
//! decompositions with their noise operators and influences, and a
//! weighted singular value decomposition of function tables.
//!
//! This layer works in `f64`/`Complex64` with the crate-wide tolerance
//! [`crate::TOL`]; the exact layer stays in `game`/`embed`. All inner
//! products are weighted by the challenge marginals.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use num_traits::{Float, ToPrimitive};

use crate::budget::Budget;
use crate::game::{Rational, Strategy, TripartiteDistribution, XorGame};

#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticError {
    ZeroMarginal { axis: &'static str, symbol: usize },
    BudgetExceeded { needed: u128, budget: u64 },
    Dimension(String),
    NotDiskBounded { index: usize, magnitude: f64 },
}

impl fmt::Display for AnalyticError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalyticError::ZeroMarginal { axis, symbol } => {
                write!(f, "marginal of {axis} vanishes at symbol {symbol}")
            }
            AnalyticError::BudgetExceeded { needed, budget } => {
                write!(f, "analytic budget exceeded: {needed} > {budget}")
            }
            AnalyticError::Dimension(s) => write!(f, "dimension mismatch: {s}"),
            AnalyticError::NotDiskBounded { index, magnitude } => {
                write!(f, "value {index} has magnitude {magnitude} > 1")
            }
        }
    }
}

impl core::error::Error for AnalyticError {}

pub(crate) fn rat_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap()
}

/// Dense table of a function on an n-fold alphabet product. Input vectors
/// are ranked big-endian, matching [`crate::game::Strategy`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexFunctionTable {
    pub alphabet_size: usize,
    pub n: usize,
    values: Vec<Complex64>,
}

impl ComplexFunctionTable {
    pub fn from_fn(
        alphabet_size: usize,
        n: usize,
        budget: &Budget,
        mut f: impl FnMut(&[usize]) -> Complex64,
    ) -> Result<Self, AnalyticError> {
        let len = (alphabet_size as u128)
            .checked_pow(n as u32)
            .unwrap_or(u128::MAX);
        if len > budget.table_entries as u128 {
            return Err(AnalyticError::BudgetExceeded {
                needed: len,
                budget: budget.table_entries,
            });
        }
        let len = len as usize;
        let mut values = Vec::with_capacity(len);
        let mut point = vec![0usize; n];
        for _ in 0..len {
            values.push(f(&point));
            let mut c = n;
            while c > 0 {
                c -= 1;
                point[c] += 1;
                if point[c] < alphabet_size {
                    break;
                }
                point[c] = 0;
            }
        }
        Ok(ComplexFunctionTable {
            alphabet_size,
            n,
            values,
        })
    }

    pub fn constant(alphabet_size: usize, n: usize, v: Complex64) -> Self {
        ComplexFunctionTable {
            alphabet_size,
            n,
            values: vec![v; alphabet_size.pow(n as u32)],
        }
    }

    pub fn from_values(alphabet_size: usize, n: usize, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), alphabet_size.pow(n as u32));
        ComplexFunctionTable {
            alphabet_size,
            n,
            values,
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn rank(&self, point: &[usize]) -> usize {
        debug_assert_eq!(point.len(), self.n);
        point.iter().fold(0, |acc, &x| acc * self.alphabet_size + x)
    }

    pub fn get(&self, point: &[usize]) -> Complex64 {
        self.values[self.rank(point)]
    }

    /// All magnitudes within the unit disk (up to 1e-12 slack).
    pub fn check_disk_bounded(&self) -> Result<(), AnalyticError> {
        for (i, v) in self.values.iter().enumerate() {
            if v.norm() > 1.0 + 1e-12 {
                return Err(AnalyticError::NotDiskBounded {
                    index: i,
                    magnitude: v.norm(),
                });
            }
        }
        Ok(())
    }

    /// Squared L2 norm under the product of the given marginal.
    pub fn norm_sq(&self, marginal: &[f64]) -> f64 {
        assert_eq!(marginal.len(), self.alphabet_size);
        let mut acc = 0.0;
        let mut point = vec![0usize; self.n];
        for v in &self.values {
            let w: f64 = point.iter().map(|&x| marginal[x]).product();
            acc += w * v.norm_sqr();
            bump(&mut point, self.alphabet_size);
        }
        acc
    }

    /// Weighted inner product `E[self · conj(other)]`.
    pub fn inner(&self, other: &ComplexFunctionTable, marginal: &[f64]) -> Complex64 {
        assert_eq!(self.values.len(), other.values.len());
        let mut acc = Complex64::new(0.0, 0.0);
        let mut point = vec![0usize; self.n];
        for (a, b) in self.values.iter().zip(&other.values) {
            let w: f64 = point.iter().map(|&x| marginal[x]).product();
            acc += w * a * b.conj();
            bump(&mut point, self.alphabet_size);
        }
        acc
    }

    pub fn scale(&self, s: Complex64) -> ComplexFunctionTable {
        ComplexFunctionTable {
            alphabet_size: self.alphabet_size,
            n: self.n,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &ComplexFunctionTable) -> ComplexFunctionTable {
        assert_eq!(self.values.len(), other.values.len());
        ComplexFunctionTable {
            alphabet_size: self.alphabet_size,
            n: self.n,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &ComplexFunctionTable) -> ComplexFunctionTable {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn max_abs_diff(&self, other: &ComplexFunctionTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn bump(point: &mut [usize], radix: usize) {
    let mut c = point.len();
    while c > 0 {
        c -= 1;
        point[c] += 1;
        if point[c] < radix {
            return;
        }
        point[c] = 0;
    }
}

/// Complex tensor on the support of a tripartite distribution, extended to
/// n-fold inputs by coordinatewise products. Magnitudes must stay in the
/// unit disk.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTensor {
    values: Vec<Complex64>,
}

impl PhaseTensor {
    pub fn new(dist: &TripartiteDistribution, values: Vec<Complex64>) -> Result<Self, AnalyticError> {
        if values.len() != dist.support().len() {
            return Err(AnalyticError::Dimension(String::from(
                "one tensor value per support atom expected",
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if v.norm() > 1.0 + 1e-12 {
                return Err(AnalyticError::NotDiskBounded {
                    index: i,
                    magnitude: v.norm(),
                });
            }
        }
        Ok(PhaseTensor { values })
    }

    /// The arithmetization tensor `T(x,y,z) = ω^{-t(x,y,z)}`; its values
    /// have magnitude exactly 1.
    pub fn from_target(game: &XorGame) -> Self {
        let m = game.modulus;
        let values = game
            .target()
            .iter()
            .map(|&t| root_of_unity(m, (m - t % m) % m))
            .collect();
        PhaseTensor { values }
    }

    pub fn ones(dist: &TripartiteDistribution) -> Self {
        PhaseTensor {
            values: vec![Complex64::new(1.0, 0.0); dist.support().len()],
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `E_μ |T|`, the trivial decay rate when some magnitude is below 1.
    pub fn mean_abs(&self, dist: &TripartiteDistribution) -> f64 {
        dist.support()
            .iter()
            .zip(&self.values)
            .map(|(a, v)| rat_f64(&a.p) * v.norm())
            .sum()
    }
}

/// `ω^j` for `ω = exp(2πi/m)`.
pub fn root_of_unity(m: u64, j: u64) -> Complex64 {
    let angle = 2.0 * core::f64::consts::PI * (j % m) as f64 / m as f64;
    Complex64::new(angle.cos(), angle.sin())
}

/// Answer-character vector `S ∈ ℤ_m^n` of the arithmetization identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacterVector {
    pub coords: Vec<u64>,
}

/// Arithmetized winning probability: the exact expectation over characters
/// `S ∈ ℤ_m^n` of `E_{μ^{⊗n}}[F_S G_S H_S T_S]`, which equals the winning
/// probability of the strategies. Enumerate S fully while `m^n` fits the
/// budget; otherwise use the per-coordinate factored form of the same
/// expectation.
pub fn arithmetize_win_probability(
    game: &XorGame,
    strategy: &Strategy,
    budget: &Budget,
) -> Result<Complex64, AnalyticError> {
    let n = strategy.n;
    let m = game.modulus;
    let atoms = game.dist.support();
    let combos = (atoms.len() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    let s_count = (m as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if combos > budget.scored_events as u128 {
        return Err(AnalyticError::BudgetExceeded {
            needed: combos,
            budget: budget.scored_events,
        });
    }
    let full_s = s_count
        .checked_mul(combos)
        .is_some_and(|total| total <= budget.scored_events as u128);

    let nx = game.dist.x_alphabet.len();
    let ny = game.dist.y_alphabet.len();
    let nz = game.dist.z_alphabet.len();
    let roots: Vec<Complex64> = (0..m).map(|j| root_of_unity(m, j)).collect();

    let mut total = Complex64::new(0.0, 0.0);
    let mut atom_idx = vec![0usize; n];
    let combos = combos as usize;
    for _ in 0..combos {
        let mut ix = 0;
        let mut iy = 0;
        let mut iz = 0;
        let mut weight = 1.0;
        for &ai in &atom_idx {
            let a = &atoms[ai];
            ix = ix * nx + a.x;
            iy = iy * ny + a.y;
            iz = iz * nz + a.z;
            weight *= rat_f64(&a.p);
        }
        // Per-coordinate phase defects f_i + g_i + h_i - t_i mod m.
        let defects: Vec<u64> = (0..n)
            .map(|i| {
                let t = game.target()[atom_idx[i]];
                (strategy.f[ix][i] + strategy.g[iy][i] + strategy.h[iz][i] + m - t) % m
            })
            .collect();
        if full_s {
            let mut s = CharacterVector { coords: vec![0; n] };
            loop {
                let phase: u64 = s
                    .coords
                    .iter()
                    .zip(&defects)
                    .map(|(&si, &di)| si * di % m)
                    .sum::<u64>()
                    % m;
                total += weight * roots[phase as usize];
                let mut c = n;
                loop {
                    if c == 0 {
                        break;
                    }
                    c -= 1;
                    s.coords[c] += 1;
                    if s.coords[c] < m {
                        break;
                    }
                    s.coords[c] = 0;
                }
                if s.coords.iter().all(|&v| v == 0) {
                    break;
                }
            }
        } else {
            // E_S factors over coordinates: each factor is the mean of the
            // m-th roots at multiples of the defect.
            let mut prod = Complex64::new(1.0, 0.0);
            for &d in &defects {
                let mut mean = Complex64::new(0.0, 0.0);
                for si in 0..m {
                    mean += roots[(si * d % m) as usize];
                }
                prod *= mean / m as f64;
            }
            total += weight * prod;
        }
    }
    if full_s {
        total /= s_count as f64;
    }
    Ok(total)
}

/// Exact tensor contraction `E_{μ^{⊗n}}[F(x) G(y) H(z) Π_i T(x_i,y_i,z_i)]`.
pub fn correlation(
    f: &ComplexFunctionTable,
    g: &ComplexFunctionTable,
    h: &ComplexFunctionTable,
    tensor: &PhaseTensor,
    dist: &TripartiteDistribution,
    n: usize,
) -> Complex64 {
    assert_eq!(f.n, n);
    assert_eq!(g.n, n);
    assert_eq!(h.n, n);
    assert_eq!(f.alphabet_size, dist.x_alphabet.len());
    assert_eq!(g.alphabet_size, dist.y_alphabet.len());
    assert_eq!(h.alphabet_size, dist.z_alphabet.len());
    let atoms = dist.support();
    let nx = dist.x_alphabet.len();
    let ny = dist.y_alphabet.len();
    let nz = dist.z_alphabet.len();
    let combos = atoms.len().pow(n as u32);
    let mut total = Complex64::new(0.0, 0.0);
    let mut atom_idx = vec![0usize; n];
    for _ in 0..combos {
        let mut ix = 0;
        let mut iy = 0;
        let mut iz = 0;
        let mut weight = 1.0;
        let mut t = Complex64::new(1.0, 0.0);
        for &ai in &atom_idx {
            let a = &atoms[ai];
            ix = ix * nx + a.x;
            iy = iy * ny + a.y;
            iz = iz * nz + a.z;
            weight *= rat_f64(&a.p);
            t *= tensor.values()[ai];
        }
        total += weight * f.values[ix] * g.values[iy] * h.values[iz] * t;
        bump(&mut atom_idx, atoms.len());
    }
    total
}

/// Two-player challenge distribution with strictly positive atoms allowed
/// to be zero; the spectral bound additionally demands positive marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDistribution {
    pub weights: Vec<Vec<f64>>,
}

impl PairDistribution {
    pub fn new(weights: Vec<Vec<f64>>) -> Result<Self, AnalyticError> {
        let cols = weights.first().map_or(0, |r| r.len());
        if weights.is_empty() || cols == 0 || weights.iter().any(|r| r.len() != cols) {
            return Err(AnalyticError::Dimension(String::from(
                "weights must form a nonempty rectangle",
            )));
        }
        let total: f64 = weights.iter().flatten().sum();
        if weights.iter().flatten().any(|&w| w < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(AnalyticError::Dimension(String::from(
                "weights must be a probability distribution",
            )));
        }
        Ok(PairDistribution { weights })
    }

    pub fn nx(&self) -> usize {
        self.weights.len()
    }

    pub fn ny(&self) -> usize {
        self.weights[0].len()
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        self.weights.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        (0..self.ny())
            .map(|y| self.weights.iter().map(|r| r[y]).sum())
            .collect()
    }
}

/// Two-index tensor for two-player instances.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTensor {
    pub values: Vec<Vec<Complex64>>,
}

impl PairTensor {
    pub fn new(values: Vec<Vec<Complex64>>) -> Result<Self, AnalyticError> {
        for (i, row) in values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if v.norm() > 1.0 + 1e-12 {
                    return Err(AnalyticError::NotDiskBounded {
                        index: i * row.len() + j,
                        magnitude: v.norm(),
                    });
                }
            }
        }
        Ok(PairTensor { values })
    }
}

/// Largest singular value of `D_x^{-1/2} [μ(x,y) T(x,y)] D_y^{-1/2}`.
///
/// For disk-bounded `F, G` the n-fold correlation
/// `|E_{μ^{⊗n}}[F G Π T]| ≤ σ^n`, because the singular value tensorizes.
pub fn two_player_spectral_norm(
    dist: &PairDistribution,
    tensor: &PairTensor,
) -> Result<f64, AnalyticError> {
    let mx = dist.marginal_x();
    let my = dist.marginal_y();
    if let Some(x) = mx.iter().position(|&w| w <= 0.0) {
        return Err(AnalyticError::ZeroMarginal { axis: "x", symbol: x });
    }
    if let Some(y) = my.iter().position(|&w| w <= 0.0) {
        return Err(AnalyticError::ZeroMarginal { axis: "y", symbol: y });
    }
    if tensor.values.len() != dist.nx() || tensor.values[0].len() != dist.ny() {
        return Err(AnalyticError::Dimension(String::from(
            "tensor shape must match the distribution",
        )));
    }
    // Column-major weighted matrix.
    let cols: Vec<Vec<Complex64>> = (0..dist.ny())
        .map(|y| {
            (0..dist.nx())
                .map(|x| {
                    dist.weights[x][y] * tensor.values[x][y] / (mx[x] * my[y]).sqrt()
                })
                .collect()
        })
        .collect();
    let svd = one_sided_jacobi(cols);
    Ok(svd.sigmas.first().copied().unwrap_or(0.0))
}

/// `E_{μ^{⊗n}}[F(x) G(y) Π_i T(x_i, y_i)]` for a two-player instance.
pub fn two_player_correlation(
    dist: &PairDistribution,
    tensor: &PairTensor,
    f: &ComplexFunctionTable,
    g: &ComplexFunctionTable,
    n: usize,
) -> Complex64 {
    assert_eq!(f.n, n);
    assert_eq!(g.n, n);
    assert_eq!(f.alphabet_size, dist.nx());
    assert_eq!(g.alphabet_size, dist.ny());
    let pairs: Vec<(usize, usize, f64, Complex64)> = (0..dist.nx())
        .flat_map(|x| {
            (0..dist.ny()).filter_map(move |y| {
                let w = dist.weights[x][y];
                (w > 0.0).then_some((x, y, w, tensor.values[x][y]))
            })
        })
        .collect();
    let mut total = Complex64::new(0.0, 0.0);
    let mut idx = vec![0usize; n];
    let combos = pairs.len().pow(n as u32);
    for _ in 0..combos {
        let mut ix = 0;
        let mut iy = 0;
        let mut weight = 1.0;
        let mut t = Complex64::new(1.0, 0.0);
        for &pi in &idx {
            let (x, y, w, tv) = pairs[pi];
            ix = ix * dist.nx() + x;
            iy = iy * dist.ny() + y;
            weight *= w;
            t *= tv;
        }
        total += weight * f.values[ix] * g.values[iy] * t;
        bump(&mut idx, pairs.len());
    }
    total
}

// ---------------------------------------------------------------------
// Orthogonal decompositions
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecompositionMode {
    /// One mixing class: all of Σ'.
    Effective,
    /// One mixing class per master-embedding value within Σ'.
    Modest,
}

/// Per-symbol orthonormal basis splitting functions into a part constant
/// on every mixing class and parts supported inside single classes and
/// orthogonal to constants. The "effective" degree of an n-fold character
/// counts its in-class components.
#[derive(Debug, Clone)]
pub struct DecompositionBasis {
    pub mode: DecompositionMode,
    pub alphabet_size: usize,
    pub marginal: Vec<f64>,
    /// Mixing classes: disjoint subsets of Σ' (singletons allowed).
    pub classes: Vec<Vec<usize>>,
    /// class_of[x] = Some(class index) iff x ∈ Σ'.
    pub class_of: Vec<Option<usize>>,
    /// Basis vectors; `effective[j]` marks membership in a class basis.
    pub vectors: Vec<Vec<Complex64>>,
    pub effective: Vec<bool>,
}

const GRAM_TOL: f64 = 1e-10;

/// Build the orthonormal basis for `L2(Σ, μ_x)` adapted to the designated
/// subset Σ' (and, in modest mode, to the master partition restricted to
/// Σ'). The constant function is always the first basis vector.
pub fn build_decomposition_basis(
    marginal: &[f64],
    sigma_prime: &[usize],
    mode: DecompositionMode,
    master_partition: Option<&[usize]>,
) -> Result<DecompositionBasis, AnalyticError> {
    let k = marginal.len();
    if let Some(x) = marginal.iter().position(|&w| w <= 0.0) {
        return Err(AnalyticError::ZeroMarginal { axis: "x", symbol: x });
    }
    let mut in_prime = vec![false; k];
    for &x in sigma_prime {
        if x >= k {
            return Err(AnalyticError::Dimension(format!("Σ' symbol {x} out of range")));
        }
        in_prime[x] = true;
    }
    // Mixing classes.
    let mut classes: Vec<Vec<usize>> = Vec::new();
    match mode {
        DecompositionMode::Effective => {
            let class: Vec<usize> = (0..k).filter(|&x| in_prime[x]).collect();
            if !class.is_empty() {
                classes.push(class);
            }
        }
        DecompositionMode::Modest => {
            let partition = master_partition.ok_or_else(|| {
                AnalyticError::Dimension(String::from(
                    "modest mode requires a master partition",
                ))
            })?;
            if partition.len() != k {
                return Err(AnalyticError::Dimension(String::from(
                    "master partition length must match the alphabet",
                )));
            }
            let mut by_class: alloc::collections::BTreeMap<usize, Vec<usize>> =
                alloc::collections::BTreeMap::new();
            for x in 0..k {
                if in_prime[x] {
                    by_class.entry(partition[x]).or_default().push(x);
                }
            }
            classes.extend(by_class.into_values());
        }
    }
    let mut class_of = vec![None; k];
    for (ci, class) in classes.iter().enumerate() {
        for &x in class {
            class_of[x] = Some(ci);
        }
    }

    // Seed the low part: constant, off-Σ' indicators, class indicators.
    let mut vectors: Vec<Vec<Complex64>> = Vec::new();
    let mut effective = Vec::new();
    let mut seeds: Vec<Vec<Complex64>> = Vec::new();
    seeds.push(vec![Complex64::new(1.0, 0.0); k]);
    for x in 0..k {
        if class_of[x].is_none() {
            let mut v = vec![Complex64::new(0.0, 0.0); k];
            v[x] = Complex64::new(1.0, 0.0);
            seeds.push(v);
        }
    }
    for class in &classes {
        let mut v = vec![Complex64::new(0.0, 0.0); k];
        for &x in class {
            v[x] = Complex64::new(1.0, 0.0);
        }
        seeds.push(v);
    }
    for seed in seeds {
        if let Some(v) = gram_schmidt_step(&seed, &vectors, marginal) {
            vectors.push(v);
            effective.push(false);
        }
    }
    // Per-class parts: supported on the class, orthogonal to constants.
    for class in &classes {
        for &x in class {
            let mut seed = vec![Complex64::new(0.0, 0.0); k];
            seed[x] = Complex64::new(1.0, 0.0);
            if let Some(v) = gram_schmidt_step(&seed, &vectors, marginal) {
                vectors.push(v);
                effective.push(true);
            }
        }
    }
    debug_assert_eq!(vectors.len(), k);

    let basis = DecompositionBasis {
        mode,
        alphabet_size: k,
        marginal: marginal.to_vec(),
        classes,
        class_of,
        vectors,
        effective,
    };
    debug_assert!(basis.gram_defect() <= GRAM_TOL);
    Ok(basis)
}

fn gram_schmidt_step(
    seed: &[Complex64],
    existing: &[Vec<Complex64>],
    marginal: &[f64],
) -> Option<Vec<Complex64>> {
    let ip = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
        a.iter()
            .zip(b)
            .zip(marginal)
            .map(|((x, y), &w)| w * x * y.conj())
            .sum()
    };
    let mut v = seed.to_vec();
    //两 rounds of projection for numerical stability.
    for _ in 0..2 {
        for e in existing {
            let c = ip(&v, e);
            for (vi, ei) in v.iter_mut().zip(e) {
                *vi -= c * ei;
            }
        }
    }
    let norm = ip(&v, &v).re.max(0.0).sqrt();
    if norm < 1e-9 {
        return None;
    }
    for vi in v.iter_mut() {
        *vi /= norm;
    }
    // Sign convention: first coordinate of nonnegligible magnitude is made
    // positive real.
    if let Some(lead) = v.iter().find(|c| c.norm() > 1e-9) {
        let phase = lead / lead.norm();
        let fix = phase.conj();
        for vi in v.iter_mut() {
            *vi *= fix;
        }
    }
    Some(v)
}

impl DecompositionBasis {
    /// Largest deviation of the Gram matrix from the identity.
    pub fn gram_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.vectors.len() {
            for j in 0..self.vectors.len() {
                let ip: Complex64 = self.vectors[i]
                    .iter()
                    .zip(&self.vectors[j])
                    .zip(&self.marginal)
                    .map(|((a, b), &w)| w * a * b.conj())
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((ip - want).norm());
            }
        }
        worst
    }

    /// Number of basis vectors carrying effective degree.
    pub fn effective_count(&self) -> usize {
        self.effective.iter().filter(|e| **e).count()
    }

    fn effdeg_of_rank(&self, mut rank: usize, n: usize) -> usize {
        let k = self.alphabet_size;
        let mut deg = 0;
        for _ in 0..n {
            if self.effective[rank % k] {
                deg += 1;
            }
            rank /= k;
        }
        deg
    }
}

/// Homogeneous effective-degree parts plus influences of a function table.
#[derive(Debug, Clone)]
pub struct Decomposition {
    /// `parts[i]` is the degree-i component; their sum is the function.
    pub parts: Vec<ComplexFunctionTable>,
    /// Spectral coordinate influences `I_{i}[F]`.
    pub coordinate_influences: Vec<f64>,
    /// `Σ_i i ‖F^{=i}‖²`, equal to the sum of coordinate influences.
    pub total_influence: f64,
}

/// Apply a k×k matrix along one tensor axis: `out[.., j, ..] = Σ_x M[j][x] in[.., x, ..]`.
fn apply_axis(values: &[Complex64], k: usize, n: usize, axis: usize, m: &[Vec<Complex64>]) -> Vec<Complex64> {
    let len = values.len();
    let stride = k.pow((n - 1 - axis) as u32);
    let block = stride * k;
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for base in (0..len).step_by(block) {
        for off in 0..stride {
            for j in 0..k {
                let mut acc = Complex64::new(0.0, 0.0);
                for x in 0..k {
                    acc += m[j][x] * values[base + x * stride + off];
                }
                out[base + j * stride + off] = acc;
            }
        }
    }
    out
}

/// Coefficients of `f` in the n-fold tensor basis, indexed like the table.
pub fn to_coefficients(f: &ComplexFunctionTable, basis: &DecompositionBasis) -> Vec<Complex64> {
    let k = basis.alphabet_size;
    assert_eq!(f.alphabet_size, k);
    // M[j][x] = w(x) conj(χ_j(x))
    let m: Vec<Vec<Complex64>> = basis
        .vectors
        .iter()
        .map(|chi| {
            chi.iter()
                .zip(&basis.marginal)
                .map(|(c, &w)| w * c.conj())
                .collect()
        })
        .collect();
    let mut vals = f.values.clone();
    for axis in 0..f.n {
        vals = apply_axis(&vals, k, f.n, axis, &m);
    }
    vals
}

/// Rebuild a table from basis coefficients.
pub fn from_coefficients(
    coeffs: &[Complex64],
    n: usize,
    basis: &DecompositionBasis,
) -> ComplexFunctionTable {
    let k = basis.alphabet_size;
    // M[x][j] = χ_j(x)
    let m: Vec<Vec<Complex64>> = (0..k)
        .map(|x| basis.vectors.iter().map(|chi| chi[x]).collect())
        .collect();
    let mut vals = coeffs.to_vec();
    for axis in 0..n {
        vals = apply_axis(&vals, k, n, axis, &m);
    }
    ComplexFunctionTable::from_values(k, n, vals)
}

/// Split into effective-degree homogeneous parts and compute influences.
pub fn decompose(f: &ComplexFunctionTable, basis: &DecompositionBasis) -> Decomposition {
    let n = f.n;
    let coeffs = to_coefficients(f, basis);
    let k = basis.alphabet_size;
    let mut parts_coeffs = vec![vec![Complex64::new(0.0, 0.0); coeffs.len()]; n + 1];
    let mut influences = vec![0.0; n];
    for (rank, &c) in coeffs.iter().enumerate() {
        let deg = basis.effdeg_of_rank(rank, n);
        parts_coeffs[deg][rank] = c;
        if c.norm_sqr() > 0.0 {
            let mut r = rank;
            for i in (0..n).rev() {
                if basis.effective[r % k] {
                    influences[i] += c.norm_sqr();
                }
                r /= k;
            }
        }
    }
    let parts = parts_coeffs
        .iter()
        .map(|pc| from_coefficients(pc, n, basis))
        .collect();
    let total = influences.iter().sum();
    Decomposition {
        parts,
        coordinate_influences: influences,
        total_influence: total,
    }
}

/// Coordinate influence by its resampling definition, computed exactly
/// over the finite resampling distribution: half the mean squared
/// difference when coordinate `i` is redrawn within its mixing class.
/// (The half makes it agree with the spectral formula.)
pub fn influence_resampling(
    f: &ComplexFunctionTable,
    basis: &DecompositionBasis,
    coord: usize,
) -> f64 {
    let k = basis.alphabet_size;
    let n = f.n;
    // Class-conditional resampling weights.
    let class_mass: Vec<f64> = basis
        .classes
        .iter()
        .map(|c| c.iter().map(|&x| basis.marginal[x]).sum())
        .collect();
    let mut acc = 0.0;
    let mut point = vec![0usize; n];
    for rank in 0..f.values.len() {
        let w: f64 = point.iter().map(|&x| basis.marginal[x]).product();
        let xi = point[coord];
        if let Some(ci) = basis.class_of[xi] {
            let stride = k.pow((n - 1 - coord) as u32);
            let base = rank - xi * stride;
            for &y in &basis.classes[ci] {
                let py = basis.marginal[y] / class_mass[ci];
                let diff = (f.values[rank] - f.values[base + y * stride]).norm_sqr();
                acc += w * py * diff;
            }
        }
        bump(&mut point, k);
    }
    acc / 2.0
}

/// Effective/modest noise operator via the spectral route:
/// `Σ_i (1-ρ)^i F^{=i}`, realized by scaling each coefficient by
/// `(1-ρ)^{effdeg}`.
pub fn apply_noise(
    f: &ComplexFunctionTable,
    basis: &DecompositionBasis,
    rho: f64,
) -> ComplexFunctionTable {
    assert!((0.0..=1.0).contains(&rho));
    let mut coeffs = to_coefficients(f, basis);
    for (rank, c) in coeffs.iter_mut().enumerate() {
        let deg = basis.effdeg_of_rank(rank, f.n);
        *c *= (1.0 - rho).powi(deg as i32);
    }
    from_coefficients(&coeffs, f.n, basis)
}

/// The same operator by its direct averaging definition: per coordinate,
/// keep the symbol with probability 1-ρ, otherwise resample it within its
/// mixing class (symbols outside Σ' never move). Exact finite expectation,
/// independent of the basis route.
pub fn apply_noise_direct(
    f: &ComplexFunctionTable,
    basis: &DecompositionBasis,
    rho: f64,
) -> ComplexFunctionTable {
    assert!((0.0..=1.0).contains(&rho));
    let k = basis.alphabet_size;
    let class_mass: Vec<f64> = basis
        .classes
        .iter()
        .map(|c| c.iter().map(|&x| basis.marginal[x]).sum())
        .collect();
    // mix[x][y] = P(result = y | input = x)
    let mut mix = vec![vec![Complex64::new(0.0, 0.0); k]; k];
    for x in 0..k {
        mix[x][x] += Complex64::new(1.0 - rho, 0.0);
        match basis.class_of[x] {
            None => mix[x][x] += Complex64::new(rho, 0.0),
            Some(ci) => {
                for &y in &basis.classes[ci] {
                    mix[x][y] += Complex64::new(rho * basis.marginal[y] / class_mass[ci], 0.0);
                }
            }
        }
    }
    let mut vals = f.values.clone();
    for axis in 0..f.n {
        vals = apply_axis(&vals, k, f.n, axis, &mix);
    }
    ComplexFunctionTable::from_values(k, f.n, vals)
}

// ---------------------------------------------------------------------
// Weighted SVD
// ---------------------------------------------------------------------

/// Weighted singular value decomposition of a table on `Σ^n`, split as
/// `Σ^{n-1} × Σ`: `F(x) = Σ_r σ_r F_r(x_1..x_{n-1}) F'_r(x_n)` with both
/// factor families orthonormal under the corresponding product marginals
/// and `Σ_r σ_r² = ‖F‖₂²`.
#[derive(Debug, Clone)]
pub struct SvdTriple {
    pub singular_values: Vec<f64>,
    pub left: Vec<ComplexFunctionTable>,
    pub right: Vec<ComplexFunctionTable>,
}

impl SvdTriple {
    pub fn reconstruct(&self) -> ComplexFunctionTable {
        let k = self.right[0].alphabet_size;
        let n = self.left[0].n + 1;
        let inner = self.right[0].values.len();
        let mut values = vec![Complex64::new(0.0, 0.0); k.pow(n as u32)];
        for ((sigma, l), r) in self
            .singular_values
            .iter()
            .zip(&self.left)
            .zip(&self.right)
        {
            for (u, lv) in l.values.iter().enumerate() {
                for (v, rv) in r.values.iter().enumerate() {
                    values[u * inner + v] += sigma * lv * rv;
                }
            }
        }
        ComplexFunctionTable::from_values(k, n, values)
    }
}

struct JacobiSvd {
    sigmas: Vec<f64>,
    /// Normalized left columns, parallel to `sigmas` (empty for σ ≈ 0).
    u_cols: Vec<Option<Vec<Complex64>>>,
    /// Right unitary accumulated column-wise.
    v_cols: Vec<Vec<Complex64>>,
}

/// One-sided Jacobi: orthogonalize the columns by unitary right rotations.
/// Robust at small sizes and accurate to near machine precision.
fn one_sided_jacobi(mut cols: Vec<Vec<Complex64>>) -> JacobiSvd {
    let ncols = cols.len();
    let mut v: Vec<Vec<Complex64>> = (0..ncols)
        .map(|j| {
            let mut e = vec![Complex64::new(0.0, 0.0); ncols];
            e[j] = Complex64::new(1.0, 0.0);
            e
        })
        .collect();
    let inner = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    };
    for _sweep in 0..64 {
        let mut rotated = false;
        for j in 0..ncols {
            for l in j + 1..ncols {
                let a = inner(&cols[j], &cols[j]).re;
                let b = inner(&cols[l], &cols[l]).re;
                let d = inner(&cols[j], &cols[l]);
                let dn = d.norm();
                if dn * dn <= 1e-30 * a * b + 1e-300 {
                    continue;
                }
                rotated = true;
                let phi = d / dn;
                // Fold the phase into column l, then rotate as in the real
                // case to zero the (now real) inner product.
                let zeta = (b - a) / (2.0 * dn);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let phic = phi.conj();
                for row in 0..cols[j].len() {
                    let uj = cols[j][row];
                    let ul = cols[l][row] * phic;
                    cols[j][row] = c * uj - s * ul;
                    cols[l][row] = s * uj + c * ul;
                }
                for row in 0..ncols {
                    let vj = v[j][row];
                    let vl = v[l][row] * phic;
                    v[j][row] = c * vj - s * vl;
                    v[l][row] = s * vj + c * vl;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..ncols).collect();
    let norms: Vec<f64> = cols.iter().map(|c| inner(c, c).re.max(0.0).sqrt()).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap());
    let mut sigmas = Vec::with_capacity(ncols);
    let mut u_cols = Vec::with_capacity(ncols);
    let mut v_cols = Vec::with_capacity(ncols);
    for &j in &order {
        sigmas.push(norms[j]);
        if norms[j] > 1e-12 {
            u_cols.push(Some(cols[j].iter().map(|x| x / norms[j]).collect()));
        } else {
            u_cols.push(None);
        }
        v_cols.push(v[j].clone());
    }
    JacobiSvd { sigmas, u_cols, v_cols }
}

/// Weighted SVD splitting off the last coordinate (see [`SvdTriple`]).
/// Factor pairs with vanishing singular value are completed to orthonormal
/// families deterministically.
pub fn svd_decompose(f: &ComplexFunctionTable, marginal: &[f64]) -> SvdTriple {
    assert!(f.n >= 1, "svd needs at least one coordinate");
    assert_eq!(marginal.len(), f.alphabet_size);
    let k = f.alphabet_size;
    let n = f.n;
    let rows = k.pow((n - 1) as u32);
    // Outer weights w_I(u) over Σ^{n-1}.
    let w_outer: Vec<f64> = (0..rows)
        .map(|mut u| {
            let mut w = 1.0;
            for _ in 0..n - 1 {
                w *= marginal[u % k];
                u /= k;
            }
            w
        })
        .collect();
    let cols: Vec<Vec<Complex64>> = (0..k)
        .map(|vcol| {
            (0..rows)
                .map(|u| f.values[u * k + vcol] * (w_outer[u] * marginal[vcol]).sqrt())
                .collect()
        })
        .collect();
    let jac = one_sided_jacobi(cols);

    // Complete missing left columns to an orthonormal family.
    let mut u_cols: Vec<Vec<Complex64>> = Vec::with_capacity(k);
    let existing_inner = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    };
    for uc in &jac.u_cols {
        if let Some(c) = uc {
            u_cols.push(c.clone());
        } else {
            // First standard basis vector independent of those present.
            let mut chosen = None;
            for seed_idx in 0..rows {
                let mut cand = vec![Complex64::new(0.0, 0.0); rows];
                cand[seed_idx] = Complex64::new(1.0, 0.0);
                for _ in 0..2 {
                    let prev = u_cols.clone();
                    for e in &prev {
                        let c = existing_inner(e, &cand);
                        for (ci, ei) in cand.iter_mut().zip(e) {
                            *ci -= c * ei;
                        }
                    }
                }
                let norm = existing_inner(&cand, &cand).re.sqrt();
                if norm > 1e-6 {
                    for ci in cand.iter_mut() {
                        *ci /= norm;
                    }
                    chosen = Some(cand);
                    break;
                }
            }
            u_cols.push(chosen.expect("completion exists when rows >= k"));
        }
    }

    let left: Vec<ComplexFunctionTable> = u_cols
        .iter()
        .map(|col| {
            let values = col
                .iter()
                .enumerate()
                .map(|(u, x)| x / w_outer[u].sqrt())
                .collect();
            ComplexFunctionTable::from_values(k, n - 1, values)
        })
        .collect();
    let right: Vec<ComplexFunctionTable> = jac
        .v_cols
        .iter()
        .map(|col| {
            let values = col
                .iter()
                .enumerate()
                .map(|(x, vv)| vv.conj() / marginal[x].sqrt())
                .collect();
            ComplexFunctionTable::from_values(k, 1, values)
        })
        .collect();
    SvdTriple {
        singular_values: jac.sigmas,
        left,
        right,
    }
}
