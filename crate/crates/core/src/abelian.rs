//! Exact integer and modular linear algebra, plus finite abelian group
//! arithmetic.
//!
//! Everything here is exact: matrices hold `BigInt` entries, Smith normal
//! form is computed with a deterministic pivot rule (smallest nonzero
//! absolute value, ties broken row-major), and kernel bases come back
//! Hermite-reduced and lexicographically sorted so they can be used as
//! golden values in tests.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AbelianError {
    DimensionMismatch(String),
    ElementGroupMismatch,
}

impl fmt::Display for AbelianError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbelianError::DimensionMismatch(what) => write!(f, "dimension mismatch: {what}"),
            AbelianError::ElementGroupMismatch => {
                write!(f, "element does not belong to the given group")
            }
        }
    }
}

impl core::error::Error for AbelianError {}

/// Cyclic group `ℤ_q`, `q ≥ 1`. `q = 1` is the trivial group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CyclicGroup {
    pub modulus: u64,
}

impl CyclicGroup {
    pub fn new(modulus: u64) -> Self {
        assert!(modulus >= 1, "cyclic group modulus must be >= 1");
        CyclicGroup { modulus }
    }
}

/// Product of cyclic groups `ℤ_{q_1} × … × ℤ_{q_L}`, each `q_i ≥ 2`.
/// The empty product is the trivial group.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct FiniteAbelianGroup {
    factors: Vec<u64>,
}

impl FiniteAbelianGroup {
    pub fn new(factors: Vec<u64>) -> Self {
        assert!(
            factors.iter().all(|&q| q >= 2),
            "all factors must be >= 2 (drop trivial factors)"
        );
        FiniteAbelianGroup { factors }
    }

    pub fn trivial() -> Self {
        FiniteAbelianGroup { factors: Vec::new() }
    }

    pub fn factors(&self) -> &[u64] {
        &self.factors
    }

    pub fn arity(&self) -> usize {
        self.factors.len()
    }

    pub fn order(&self) -> BigUint {
        self.factors
            .iter()
            .fold(BigUint::one(), |acc, &q| acc * BigUint::from(q))
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement {
            coords: vec![0; self.factors.len()],
        }
    }

    pub fn contains(&self, e: &GroupElement) -> bool {
        e.coords.len() == self.factors.len()
            && e.coords.iter().zip(&self.factors).all(|(&c, &q)| c < q)
    }

    /// Element from unreduced signed coordinates.
    pub fn element(&self, coords: &[i64]) -> GroupElement {
        assert_eq!(coords.len(), self.factors.len());
        let coords = coords
            .iter()
            .zip(&self.factors)
            .map(|(&c, &q)| c.rem_euclid(q as i64) as u64)
            .collect();
        GroupElement { coords }
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        debug_assert!(self.contains(a) && self.contains(b));
        let coords = a
            .coords
            .iter()
            .zip(&b.coords)
            .zip(&self.factors)
            .map(|((&x, &y), &q)| (x + y) % q)
            .collect();
        GroupElement { coords }
    }

    pub fn neg(&self, a: &GroupElement) -> GroupElement {
        debug_assert!(self.contains(a));
        let coords = a
            .coords
            .iter()
            .zip(&self.factors)
            .map(|(&x, &q)| (q - x) % q)
            .collect();
        GroupElement { coords }
    }

    pub fn sub(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        self.add(a, &self.neg(b))
    }

    /// All group elements in lexicographic coordinate order.
    pub fn elements(&self) -> Vec<GroupElement> {
        let mut out = vec![self.identity()];
        for (i, &q) in self.factors.iter().enumerate() {
            let mut next = Vec::with_capacity(out.len() * q as usize);
            for e in &out {
                for v in 0..q {
                    let mut coords = e.coords.clone();
                    coords[i] = v;
                    next.push(GroupElement { coords });
                }
            }
            out = next;
        }
        out
    }
}

/// Element of a `FiniteAbelianGroup`, coordinate `i` reduced into `[0, q_i)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroupElement {
    pub coords: Vec<u64>,
}

/// Dense matrix with exact integer entries, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegerMatrix {
    pub rows: usize,
    pub cols: usize,
    entries: Vec<BigInt>,
}

impl IntegerMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        IntegerMatrix {
            rows,
            cols,
            entries: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntegerMatrix::zero(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_rows(rows: &[&[i64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let entries = rows
            .iter()
            .flat_map(|row| row.iter().map(|&v| BigInt::from(v)))
            .collect();
        IntegerMatrix { rows: r, cols: c, entries }
    }

    pub fn mul(&self, other: &IntegerMatrix) -> IntegerMatrix {
        assert_eq!(self.cols, other.rows, "matrix product shape");
        let mut out = IntegerMatrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let t = a * &other[(k, j)];
                    out[(i, j)] += t;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| &self[(i, j)] * &v[j]).sum())
            .collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.entries.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[dst] += k * row[src]
    fn add_row_multiple(&mut self, dst: usize, src: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let t = k * &self[(src, j)];
            self[(dst, j)] += t;
        }
    }

    /// col[dst] += k * col[src]
    fn add_col_multiple(&mut self, dst: usize, src: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let t = k * &self[(i, src)];
            self[(i, dst)] += t;
        }
    }

    fn negate_row(&mut self, r: usize) {
        for j in 0..self.cols {
            let t = -self[(r, j)].clone();
            self[(r, j)] = t;
        }
    }

    /// Determinant by fraction-free Gaussian elimination (Bareiss).
    pub fn determinant(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "determinant of a square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut m = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if m[(k, k)].is_zero() {
                let swap = (k + 1..n).find(|&i| !m[(i, k)].is_zero());
                match swap {
                    Some(i) => {
                        m.swap_rows(k, i);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &m[(k, k)] * &m[(i, j)] - &m[(i, k)] * &m[(k, j)];
                    m[(i, j)] = &num / &prev;
                }
                m[(i, k)] = BigInt::zero();
            }
            prev = m[(k, k)].clone();
        }
        sign * m[(n - 1, n - 1)].clone()
    }
}

impl core::ops::Index<(usize, usize)> for IntegerMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.entries[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for IntegerMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.entries[i * self.cols + j]
    }
}

/// `U * M * V = S` with `U`, `V` unimodular and `S` diagonal with
/// `d_1 | d_2 | …`, all `d_i >= 0`.
#[derive(Debug, Clone)]
pub struct SmithDecomposition {
    pub u: IntegerMatrix,
    pub s: IntegerMatrix,
    pub v: IntegerMatrix,
}

impl SmithDecomposition {
    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.s.rows.min(self.s.cols))
            .map(|i| self.s[(i, i)].clone())
            .collect()
    }

    pub fn rank(&self) -> usize {
        self.diagonal().iter().filter(|d| !d.is_zero()).count()
    }
}

/// Smith normal form with the deterministic minimal-|pivot| rule.
pub fn smith_normal_form(m: &IntegerMatrix) -> SmithDecomposition {
    let mut s = m.clone();
    let mut u = IntegerMatrix::identity(m.rows);
    let mut v = IntegerMatrix::identity(m.cols);
    let steps = m.rows.min(m.cols);

    for t in 0..steps {
        'place_pivot: loop {
            // Smallest nonzero |entry| in the trailing block, ties row-major.
            let mut pivot: Option<(usize, usize)> = None;
            for i in t..s.rows {
                for j in t..s.cols {
                    if s[(i, j)].is_zero() {
                        continue;
                    }
                    let better = match pivot {
                        None => true,
                        Some(p) => s[(i, j)].abs() < s[p].abs(),
                    };
                    if better {
                        pivot = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = pivot else {
                return finish_snf(u, s, v);
            };
            s.swap_rows(t, pi);
            u.swap_rows(t, pi);
            s.swap_cols(t, pj);
            v.swap_cols(t, pj);

            let mut dirty = false;
            for i in t + 1..s.rows {
                if !s[(i, t)].is_zero() {
                    let q = s[(i, t)].div_floor(&s[(t, t)]);
                    s.add_row_multiple(i, t, &-q.clone());
                    u.add_row_multiple(i, t, &-q);
                    if !s[(i, t)].is_zero() {
                        dirty = true;
                    }
                }
            }
            for j in t + 1..s.cols {
                if !s[(t, j)].is_zero() {
                    let q = s[(t, j)].div_floor(&s[(t, t)]);
                    s.add_col_multiple(j, t, &-q.clone());
                    v.add_col_multiple(j, t, &-q);
                    if !s[(t, j)].is_zero() {
                        dirty = true;
                    }
                }
            }
            if dirty {
                continue 'place_pivot;
            }
            // Pivot must divide the rest of the block for the chain d_1 | d_2 | …
            for i in t + 1..s.rows {
                for j in t + 1..s.cols {
                    if !(&s[(i, j)] % &s[(t, t)]).is_zero() {
                        s.add_row_multiple(t, i, &BigInt::one());
                        u.add_row_multiple(t, i, &BigInt::one());
                        continue 'place_pivot;
                    }
                }
            }
            break;
        }
    }
    finish_snf(u, s, v)
}

fn finish_snf(
    mut u: IntegerMatrix,
    mut s: IntegerMatrix,
    v: IntegerMatrix,
) -> SmithDecomposition {
    for t in 0..s.rows.min(s.cols) {
        if s[(t, t)].is_negative() {
            s.negate_row(t);
            u.negate_row(t);
        }
    }
    SmithDecomposition { u, s, v }
}

/// Basis of the lattice `{v ∈ ℤ^cols : M v = 0}`, Hermite-reduced and
/// sorted lexicographically.
pub fn integer_kernel(m: &IntegerMatrix) -> Vec<Vec<BigInt>> {
    let snf = smith_normal_form(m);
    let rank = snf.rank();
    let mut basis: Vec<Vec<BigInt>> = (rank..m.cols)
        .map(|j| (0..m.cols).map(|i| snf.v[(i, j)].clone()).collect())
        .collect();
    hermite_reduce(&mut basis);
    basis.sort();
    basis
}

/// In-place row Hermite normal form of the given basis vectors. The result
/// spans the same lattice; pivots are positive and entries above each pivot
/// are reduced into `[0, pivot)`.
fn hermite_reduce(basis: &mut Vec<Vec<BigInt>>) {
    if basis.is_empty() {
        return;
    }
    let cols = basis[0].len();
    let mut r = 0;
    for c in 0..cols {
        if r >= basis.len() {
            break;
        }
        // Euclidean elimination within column c, rows >= r.
        loop {
            let mut min_row: Option<usize> = None;
            for i in r..basis.len() {
                if basis[i][c].is_zero() {
                    continue;
                }
                let better = match min_row {
                    None => true,
                    Some(mr) => basis[i][c].abs() < basis[mr][c].abs(),
                };
                if better {
                    min_row = Some(i);
                }
            }
            let Some(mr) = min_row else { break };
            basis.swap(r, mr);
            let mut again = false;
            let head = basis[r].clone();
            for i in r + 1..basis.len() {
                if basis[i][c].is_zero() {
                    continue;
                }
                let q = basis[i][c].div_floor(&head[c]);
                for j in 0..cols {
                    let t = &q * &head[j];
                    basis[i][j] -= t;
                }
                if !basis[i][c].is_zero() {
                    again = true;
                }
            }
            if !again {
                break;
            }
        }
        if basis[r][c].is_zero() {
            continue;
        }
        if basis[r][c].is_negative() {
            for j in 0..cols {
                let t = -basis[r][j].clone();
                basis[r][j] = t;
            }
        }
        let head = basis[r].clone();
        for i in 0..r {
            let q = basis[i][c].div_floor(&head[c]);
            if q.is_zero() {
                continue;
            }
            for j in 0..cols {
                let t = &q * &head[j];
                basis[i][j] -= t;
            }
        }
        r += 1;
    }
    basis.truncate(r);
}

/// The full solution set of `M v ≡ b (mod q)` over `(ℤ_q)^cols`, kept in
/// parameterized form: `v = V (base + Σ_i t_i · stride_i e_i) mod q` with
/// `t_i` ranging over `0..count_i`.
#[derive(Debug, Clone)]
pub struct ModularSolutions {
    q: u64,
    cols: usize,
    v: Vec<Vec<u64>>,
    base: Vec<u64>,
    strides: Vec<u64>,
    counts: Vec<u64>,
    consistent: bool,
}

impl ModularSolutions {
    pub fn is_empty(&self) -> bool {
        !self.consistent
    }

    pub fn count(&self) -> BigUint {
        if !self.consistent {
            return BigUint::zero();
        }
        self.counts
            .iter()
            .fold(BigUint::one(), |acc, &c| acc * BigUint::from(c))
    }

    fn assemble(&self, params: &[u64]) -> Vec<u64> {
        let w: Vec<u64> = (0..self.counts.len())
            .map(|i| (self.base[i] + params[i] * self.strides[i]) % self.q)
            .collect();
        (0..self.cols)
            .map(|row| {
                let mut acc: u128 = 0;
                for (i, &wi) in w.iter().enumerate() {
                    acc += self.v[row][i] as u128 * wi as u128;
                }
                (acc % self.q as u128) as u64
            })
            .collect()
    }

    /// The canonical solution with all free parameters at zero.
    pub fn first(&self) -> Option<Vec<u64>> {
        if !self.consistent {
            return None;
        }
        Some(self.assemble(&vec![0; self.counts.len()]))
    }

    /// All solutions, up to `limit`; `None` when the count exceeds it.
    pub fn enumerate(&self, limit: usize) -> Option<Vec<Vec<u64>>> {
        if !self.consistent {
            return Some(Vec::new());
        }
        if self.count() > BigUint::from(limit) {
            return None;
        }
        let total = self.count().to_usize().unwrap();
        let mut params = vec![0u64; self.counts.len()];
        let mut out = Vec::with_capacity(total);
        loop {
            out.push(self.assemble(&params));
            let mut i = params.len();
            loop {
                if i == 0 {
                    return Some(out);
                }
                i -= 1;
                params[i] += 1;
                if params[i] < self.counts[i] {
                    break;
                }
                params[i] = 0;
            }
        }
    }
}

/// Solve `M v ≡ b (mod q)` exactly via the Smith normal form of `M`.
pub fn solve_mod_q(
    m: &IntegerMatrix,
    b: &[BigInt],
    q: u64,
) -> Result<ModularSolutions, AbelianError> {
    if b.len() != m.rows {
        return Err(AbelianError::DimensionMismatch(String::from(
            "right-hand side length does not match row count",
        )));
    }
    assert!(q >= 1, "modulus must be >= 1");
    let snf = smith_normal_form(m);
    let c = snf.u.mul_vec(b);
    let qi = BigInt::from(q);

    let reduce = |x: &BigInt| -> u64 { x.mod_floor(&qi).to_u64().unwrap() };

    let mut base = Vec::with_capacity(m.cols);
    let mut strides = Vec::with_capacity(m.cols);
    let mut counts = Vec::with_capacity(m.cols);
    let mut consistent = true;

    for i in 0..m.cols {
        let d = if i < m.rows { reduce(&snf.s[(i, i)]) } else { 0 };
        let ci = if i < m.rows { reduce(&c[i]) } else { 0 };
        // d w ≡ ci (mod q); gcd(0, q) = q covers the free-variable case.
        let g = gcd_u64(d, q);
        if ci % g != 0 {
            consistent = false;
        }
        if !consistent {
            base.push(0);
            strides.push(1);
            counts.push(1);
            continue;
        }
        let qg = q / g;
        let w0 = if qg == 1 {
            0
        } else {
            let dg = (d / g) % qg;
            let cg = (ci / g) % qg;
            (cg as u128 * mod_inverse(dg, qg) as u128 % qg as u128) as u64
        };
        base.push(w0);
        strides.push(qg);
        counts.push(g);
    }
    // Rows without a matching column must be annihilated outright.
    for i in m.cols..m.rows {
        if reduce(&c[i]) != 0 {
            consistent = false;
        }
    }

    let v = (0..m.cols)
        .map(|i| (0..m.cols).map(|j| reduce(&snf.v[(i, j)])).collect())
        .collect();

    Ok(ModularSolutions {
        q,
        cols: m.cols,
        v,
        base,
        strides,
        counts,
        consistent,
    })
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    if a == 0 {
        b
    } else {
        gcd_u64(b % a, a)
    }
}

fn mod_inverse(a: u64, m: u64) -> u64 {
    // Extended Euclid; callers guarantee gcd(a, m) = 1 and m > 1.
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let quot = old_r / r;
        (old_r, r) = (r, old_r - quot * r);
        (old_s, s) = (s, old_s - quot * s);
    }
    debug_assert_eq!(old_r, 1, "inverse of a non-unit");
    old_s.rem_euclid(m as i128) as u64
}

/// The subgroup generated by `gens`, as an explicit element set plus its
/// canonical structure (elementary divisors, sorted).
#[derive(Debug, Clone)]
pub struct Subgroup {
    pub elements: Vec<GroupElement>,
    pub structure: FiniteAbelianGroup,
}

pub fn subgroup_generated(
    group: &FiniteAbelianGroup,
    gens: &[GroupElement],
) -> Result<Subgroup, AbelianError> {
    for g in gens {
        if !group.contains(g) {
            return Err(AbelianError::ElementGroupMismatch);
        }
    }
    let mut closed: BTreeSet<GroupElement> = BTreeSet::new();
    closed.insert(group.identity());
    let mut frontier: Vec<GroupElement> = vec![group.identity()];
    while let Some(e) = frontier.pop() {
        for g in gens {
            for next in [group.add(&e, g), group.sub(&e, g)] {
                if closed.insert(next.clone()) {
                    frontier.push(next);
                }
            }
        }
    }
    let elements: Vec<GroupElement> = closed.into_iter().collect();
    let structure = structure_of_set(group, &elements);
    Ok(Subgroup { elements, structure })
}

/// Canonical structure of a subgroup given as an explicit element set,
/// recovered from the counts of elements killed by each prime power
/// (`levels[i]` counts the cyclic p-factors of order at least `p^{i+1}`).
fn structure_of_set(group: &FiniteAbelianGroup, elements: &[GroupElement]) -> FiniteAbelianGroup {
    let order = elements.len() as u64;
    let killed_by = |pk: u64| -> u64 {
        elements
            .iter()
            .filter(|e| {
                e.coords
                    .iter()
                    .zip(group.factors())
                    .all(|(&c, &q)| (c as u128 * pk as u128) % q as u128 == 0)
            })
            .count() as u64
    };
    let mut divisors: Vec<u64> = Vec::new();
    for (p, _) in factorize(order) {
        let mut levels: Vec<u64> = Vec::new();
        let mut pk = p;
        let mut prev = 1u64;
        loop {
            let killed = killed_by(pk);
            levels.push(log_exact(killed / prev, p));
            if killed == prev {
                break;
            }
            prev = killed;
            pk = pk.saturating_mul(p);
        }
        for (i, &cnt) in levels.iter().enumerate() {
            let next = levels.get(i + 1).copied().unwrap_or(0);
            for _ in 0..cnt - next {
                divisors.push(p.pow(i as u32 + 1));
            }
        }
    }
    divisors.sort_unstable();
    if divisors.is_empty() {
        FiniteAbelianGroup::trivial()
    } else {
        FiniteAbelianGroup::new(divisors)
    }
}

fn log_exact(mut n: u64, p: u64) -> u64 {
    let mut k = 0;
    while n > 1 {
        debug_assert_eq!(n % p, 0);
        n /= p;
        k += 1;
    }
    k
}

/// Prime factorization `n = ∏ p^k` as `(p, k)` pairs, ascending.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            let mut k = 0;
            while n % p == 0 {
                n /= p;
                k += 1;
            }
            out.push((p, k));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Prime powers `p^k <= bound` in increasing order, excluding 1.
pub fn prime_powers_up_to(bound: u64) -> Vec<u64> {
    (2..=bound).filter(|&q| factorize(q).len() == 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_snf_valid(m: &IntegerMatrix) {
        let snf = smith_normal_form(m);
        assert_eq!(snf.u.mul(m).mul(&snf.v), snf.s, "U M V = S");
        assert_eq!(snf.u.determinant().abs(), BigInt::one(), "U unimodular");
        assert_eq!(snf.v.determinant().abs(), BigInt::one(), "V unimodular");
        let d = snf.diagonal();
        for w in d.windows(2) {
            if !w[1].is_zero() {
                assert!(!w[0].is_zero(), "zero before nonzero in the chain");
            }
            if !w[0].is_zero() {
                assert!((&w[1] % &w[0]).is_zero(), "divisibility chain");
            }
        }
        for v in &d {
            assert!(!v.is_negative());
        }
        // Off-diagonal entries are zero.
        for i in 0..snf.s.rows {
            for j in 0..snf.s.cols {
                if i != j {
                    assert!(snf.s[(i, j)].is_zero());
                }
            }
        }
    }

    #[test]
    fn snf_identity() {
        let m = IntegerMatrix::identity(2);
        let snf = smith_normal_form(&m);
        assert_eq!(snf.diagonal(), vec![BigInt::one(), BigInt::one()]);
        assert_snf_valid(&m);
    }

    #[test]
    fn snf_hand_reduced_example() {
        let m = IntegerMatrix::from_rows(&[&[2, 4], &[6, 8]]);
        let snf = smith_normal_form(&m);
        assert_eq!(snf.diagonal(), vec![BigInt::from(2), BigInt::from(4)]);
        assert_snf_valid(&m);
    }

    #[test]
    fn snf_zero_matrix() {
        let m = IntegerMatrix::from_rows(&[&[0]]);
        let snf = smith_normal_form(&m);
        assert_eq!(snf.diagonal(), vec![BigInt::zero()]);
        assert_snf_valid(&m);
    }

    #[test]
    fn kernel_single_balanced_relation() {
        let m = IntegerMatrix::from_rows(&[&[1, 1]]);
        let k = integer_kernel(&m);
        assert_eq!(k, vec![vec![BigInt::from(1), BigInt::from(-1)]]);
    }

    #[test]
    fn kernel_unconstrained() {
        let m = IntegerMatrix::from_rows(&[&[0, 0]]);
        let k = integer_kernel(&m);
        assert_eq!(
            k,
            vec![
                vec![BigInt::from(0), BigInt::from(1)],
                vec![BigInt::from(1), BigInt::from(0)],
            ]
        );
    }

    #[test]
    fn kernel_of_ghz_support_constraints_is_shift_lattice() {
        // Unknowns (α0, α1, β0, β1, γ0, γ1); one row per support triple of
        // the x+y+z=0 distribution on bits.
        let m = IntegerMatrix::from_rows(&[
            &[1, 0, 1, 0, 1, 0],
            &[1, 0, 0, 1, 0, 1],
            &[0, 1, 1, 0, 0, 1],
            &[0, 1, 0, 1, 1, 0],
        ]);
        let k = integer_kernel(&m);
        assert_eq!(k.len(), 2);
        // The constant-shift lattice, Hermite-reduced and sorted.
        let mut shifts = vec![
            vec![
                BigInt::from(1),
                BigInt::from(1),
                BigInt::from(0),
                BigInt::from(0),
                BigInt::from(-1),
                BigInt::from(-1),
            ],
            vec![
                BigInt::from(0),
                BigInt::from(0),
                BigInt::from(1),
                BigInt::from(1),
                BigInt::from(-1),
                BigInt::from(-1),
            ],
        ];
        hermite_reduce(&mut shifts);
        shifts.sort();
        assert_eq!(k, shifts);
    }

    #[test]
    fn kernel_vectors_annihilate_and_box_search_finds_nothing_new() {
        let mut rng = crate::rng::Lcg::new(2024);
        for _ in 0..8 {
            let rows = 1 + rng.usize_below(3);
            let cols = 2 + rng.usize_below(4); // cols <= 5 keeps 7^cols small
            let mut m = IntegerMatrix::zero(rows, cols);
            for i in 0..rows {
                for j in 0..cols {
                    m[(i, j)] = BigInt::from(rng.below(9) as i64 - 4);
                }
            }
            let kernel = integer_kernel(&m);
            for v in &kernel {
                let img = m.mul_vec(v);
                assert!(img.iter().all(|x| x.is_zero()), "kernel vector annihilates");
            }
            // Exhaustive [-3,3]^cols search: every solution must lie in the
            // lattice spanned by the returned basis.
            let mut idx = vec![0i64; cols];
            idx.iter_mut().for_each(|x| *x = -3);
            loop {
                let v: Vec<BigInt> = idx.iter().map(|&x| BigInt::from(x)).collect();
                let img = m.mul_vec(&v);
                if img.iter().all(|x| x.is_zero()) {
                    assert!(
                        in_lattice(&kernel, &v),
                        "box solution {idx:?} missing from kernel lattice"
                    );
                }
                let mut c = cols;
                loop {
                    if c == 0 {
                        break;
                    }
                    c -= 1;
                    idx[c] += 1;
                    if idx[c] <= 3 {
                        break;
                    }
                    idx[c] = -3;
                }
                if c == 0 && idx[0] == -3 {
                    break;
                }
            }
        }
    }

    fn in_lattice(basis: &[Vec<BigInt>], v: &[BigInt]) -> bool {
        // Hermite basis: eliminate v against pivots left to right.
        let mut rows: Vec<&Vec<BigInt>> = basis.iter().collect();
        rows.sort_by_key(|b| b.iter().position(|x| !x.is_zero()).unwrap_or(usize::MAX));
        let mut v = v.to_vec();
        for b in rows {
            let pivot = b.iter().position(|x| !x.is_zero());
            if let Some(p) = pivot {
                if !v[p].is_zero() {
                    let (q, r) = v[p].div_rem(&b[p]);
                    if !r.is_zero() {
                        return false;
                    }
                    for j in 0..v.len() {
                        let t = &q * &b[j];
                        v[j] -= t;
                    }
                }
            }
        }
        v.iter().all(|x| x.is_zero())
    }

    #[test]
    fn solve_2x_eq_2_mod_4() {
        let m = IntegerMatrix::from_rows(&[&[2]]);
        let sols = solve_mod_q(&m, &[BigInt::from(2)], 4).unwrap();
        let mut all = sols.enumerate(16).unwrap();
        all.sort();
        assert_eq!(all, vec![vec![1], vec![3]]);
    }

    #[test]
    fn solve_2x_eq_1_mod_4_is_empty() {
        let m = IntegerMatrix::from_rows(&[&[2]]);
        let sols = solve_mod_q(&m, &[BigInt::from(1)], 4).unwrap();
        assert!(sols.is_empty());
        assert_eq!(sols.count(), BigUint::zero());
    }

    #[test]
    fn solve_ghz_embedding_system_mod_2() {
        // GHZ homogeneous system with α(0)=β(0)=γ(0)=0 substituted away:
        // unknowns (α1, β1, γ1), constraints from the three nonzero triples.
        let m = IntegerMatrix::from_rows(&[&[0, 1, 1], &[1, 0, 1], &[1, 1, 0]]);
        let sols = solve_mod_q(&m, &[BigInt::zero(), BigInt::zero(), BigInt::zero()], 2).unwrap();
        let mut all = sols.enumerate(16).unwrap();
        all.sort();
        assert_eq!(all, vec![vec![0, 0, 0], vec![1, 1, 1]]);
    }

    #[test]
    fn solve_matches_brute_force_on_random_systems() {
        let mut rng = crate::rng::Lcg::new(99);
        for _ in 0..40 {
            let q = 1 + rng.below(8);
            let rows = 1 + rng.usize_below(3);
            let cols = 1 + rng.usize_below(3);
            let mut m = IntegerMatrix::zero(rows, cols);
            for i in 0..rows {
                for j in 0..cols {
                    m[(i, j)] = BigInt::from(rng.below(13) as i64 - 6);
                }
            }
            let b: Vec<BigInt> = (0..rows)
                .map(|_| BigInt::from(rng.below(13) as i64 - 6))
                .collect();
            let sols = solve_mod_q(&m, &b, q).unwrap();
            let mut got = sols.enumerate(100_000).unwrap();
            got.sort();
            got.dedup();

            let mut expect = Vec::new();
            let total = (q as u128).pow(cols as u32);
            for idx in 0..total {
                let mut rem = idx;
                let v: Vec<u64> = (0..cols)
                    .map(|_| {
                        let x = (rem % q as u128) as u64;
                        rem /= q as u128;
                        x
                    })
                    .collect();
                let ok = (0..rows).all(|i| {
                    let mut acc = BigInt::zero();
                    for j in 0..cols {
                        acc += &m[(i, j)] * BigInt::from(v[j]);
                    }
                    (acc - &b[i]).mod_floor(&BigInt::from(q)).is_zero()
                });
                if ok {
                    expect.push(v);
                }
            }
            expect.sort();
            assert_eq!(got, expect, "q={q} m={m:?} b={b:?}");
            assert_eq!(sols.count(), BigUint::from(expect.len()));
        }
    }

    #[test]
    fn subgroup_examples() {
        let z4 = FiniteAbelianGroup::new(vec![4]);
        let sub = subgroup_generated(&z4, &[z4.element(&[2])]).unwrap();
        assert_eq!(sub.elements, vec![z4.element(&[0]), z4.element(&[2])]);
        assert_eq!(sub.structure, FiniteAbelianGroup::new(vec![2]));

        let z2z4 = FiniteAbelianGroup::new(vec![2, 4]);
        let sub = subgroup_generated(&z2z4, &[z2z4.element(&[1, 2])]).unwrap();
        assert_eq!(
            sub.elements,
            vec![z2z4.element(&[0, 0]), z2z4.element(&[1, 2])]
        );
        assert_eq!(sub.structure, FiniteAbelianGroup::new(vec![2]));

        let z2z2 = FiniteAbelianGroup::new(vec![2, 2]);
        let sub =
            subgroup_generated(&z2z2, &[z2z2.element(&[1, 0]), z2z2.element(&[0, 1])]).unwrap();
        assert_eq!(sub.elements.len(), 4);
        assert_eq!(sub.structure, FiniteAbelianGroup::new(vec![2, 2]));
    }

    #[test]
    fn subgroup_rejects_foreign_elements() {
        let z4 = FiniteAbelianGroup::new(vec![4]);
        let z2z2 = FiniteAbelianGroup::new(vec![2, 2]);
        let e = z2z2.element(&[1, 0]);
        assert_eq!(
            subgroup_generated(&z4, &[e]),
            Err(AbelianError::ElementGroupMismatch)
        );
    }

    impl PartialEq for Subgroup {
        fn eq(&self, other: &Self) -> bool {
            self.elements == other.elements && self.structure == other.structure
        }
    }

    #[test]
    fn subgroup_generation_is_idempotent() {
        let g = FiniteAbelianGroup::new(vec![2, 4, 3]);
        let mut rng = crate::rng::Lcg::new(5);
        for _ in 0..20 {
            let gens: Vec<GroupElement> = (0..1 + rng.usize_below(3))
                .map(|_| {
                    g.element(&[
                        rng.below(2) as i64,
                        rng.below(4) as i64,
                        rng.below(3) as i64,
                    ])
                })
                .collect();
            let sub = subgroup_generated(&g, &gens).unwrap();
            let again = subgroup_generated(&g, &sub.elements).unwrap();
            assert_eq!(sub.elements, again.elements);
            assert_eq!(sub.structure, again.structure);
        }
    }

    #[test]
    fn factorize_and_prime_powers() {
        assert_eq!(factorize(12), vec![(2, 2), (3, 1)]);
        assert_eq!(factorize(1), vec![]);
        assert_eq!(prime_powers_up_to(10), vec![2, 3, 4, 5, 7, 8, 9]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn snf_reconstruction_on_random_matrices(
            rows in 1usize..=8,
            cols in 1usize..=8,
            seed in any::<u64>(),
        ) {
            let mut rng = crate::rng::Lcg::new(seed);
            let mut m = IntegerMatrix::zero(rows, cols);
            for i in 0..rows {
                for j in 0..cols {
                    m[(i, j)] = BigInt::from(rng.below(41) as i64 - 20);
                }
            }
            assert_snf_valid(&m);
        }
    }
}
