//! Abelian embeddings of a challenge distribution: enumeration over cyclic
//! groups, detection of integer embeddings, the master embedding, and the
//! minimal-N embedding of a target function.
//!
//! An embedding is a triple of maps `(α, β, γ)` into an abelian group with
//! `α(x) + β(y) + γ(z) = 0` on every supported challenge. Embeddings are
//! normalized against the first support triple `(x₀, y₀, z₀)`: shifting
//! pins `α(x₀) = β(y₀) = 0`, and `γ(z₀) = 0` then follows from the support
//! constraint. Anchoring at an arbitrary symbol triple instead could lose
//! embeddings, since the shift lattice only has two degrees of freedom.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::abelian::{
    integer_kernel, prime_powers_up_to, solve_mod_q, subgroup_generated, FiniteAbelianGroup,
    GroupElement, IntegerMatrix, Subgroup,
};
use crate::additive::{affine_fit, coefficient_matching_check, czero_must_vanish};
use crate::game::{GameError, TripartiteDistribution, XorGame};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbedError {
    Shape(String),
    CongruenceViolated { triple: (usize, usize, usize) },
    NotNormalized,
    NotReducible { lemma: &'static str, detail: String },
    GroupBoxMismatch(String),
}

impl fmt::Display for EmbedError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbedError::Shape(s) => write!(f, "embedding shape: {s}"),
            EmbedError::CongruenceViolated { triple } => {
                write!(f, "embedding congruence fails on support triple {triple:?}")
            }
            EmbedError::NotNormalized => write!(f, "embedding is not anchor-normalized"),
            EmbedError::NotReducible { lemma, detail } => {
                write!(f, "not reducible ({lemma}): {detail}")
            }
            EmbedError::GroupBoxMismatch(s) => write!(f, "group box mismatch: {s}"),
        }
    }
}

impl core::error::Error for EmbedError {}

/// Anchor triple used for normalization: the first support atom.
pub fn anchor(dist: &TripartiteDistribution) -> (usize, usize, usize) {
    let a = &dist.support()[0];
    (a.x, a.y, a.z)
}

/// Embedding of a distribution into `ℤ_q`, values indexed by symbol.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CyclicEmbedding {
    pub q: u64,
    pub alpha: Vec<u64>,
    pub beta: Vec<u64>,
    pub gamma: Vec<u64>,
}

impl CyclicEmbedding {
    pub fn new(
        dist: &TripartiteDistribution,
        q: u64,
        alpha: Vec<u64>,
        beta: Vec<u64>,
        gamma: Vec<u64>,
    ) -> Result<Self, EmbedError> {
        if alpha.len() != dist.x_alphabet.len()
            || beta.len() != dist.y_alphabet.len()
            || gamma.len() != dist.z_alphabet.len()
        {
            return Err(EmbedError::Shape(String::from(
                "map lengths must match the alphabets",
            )));
        }
        if alpha
            .iter()
            .chain(&beta)
            .chain(&gamma)
            .any(|&v| v >= q.max(1))
        {
            return Err(EmbedError::Shape(String::from("values must lie in [0, q)")));
        }
        let e = CyclicEmbedding { q, alpha, beta, gamma };
        e.check(dist)?;
        Ok(e)
    }

    /// Re-check the defining congruence and the anchor normalization.
    pub fn check(&self, dist: &TripartiteDistribution) -> Result<(), EmbedError> {
        for a in dist.support() {
            let s = (self.alpha[a.x] + self.beta[a.y] + self.gamma[a.z]) % self.q.max(1);
            if s != 0 {
                return Err(EmbedError::CongruenceViolated {
                    triple: (a.x, a.y, a.z),
                });
            }
        }
        let (x0, y0, z0) = anchor(dist);
        if self.alpha[x0] != 0 || self.beta[y0] != 0 || self.gamma[z0] != 0 {
            return Err(EmbedError::NotNormalized);
        }
        Ok(())
    }

    pub fn zero(dist: &TripartiteDistribution, q: u64) -> Self {
        CyclicEmbedding {
            q,
            alpha: vec![0; dist.x_alphabet.len()],
            beta: vec![0; dist.y_alphabet.len()],
            gamma: vec![0; dist.z_alphabet.len()],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.alpha.iter().all(|&v| v == 0)
            && self.beta.iter().all(|&v| v == 0)
            && self.gamma.iter().all(|&v| v == 0)
    }
}

/// Integer-valued embedding, the witness format for `ℤ`-embeddability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZEmbedding {
    pub alpha: Vec<BigInt>,
    pub beta: Vec<BigInt>,
    pub gamma: Vec<BigInt>,
}

impl ZEmbedding {
    pub fn check(&self, dist: &TripartiteDistribution) -> Result<(), EmbedError> {
        for a in dist.support() {
            let s = &self.alpha[a.x] + &self.beta[a.y] + &self.gamma[a.z];
            if !s.is_zero() {
                return Err(EmbedError::CongruenceViolated {
                    triple: (a.x, a.y, a.z),
                });
            }
        }
        Ok(())
    }

    /// Trivial means all three maps are constant.
    pub fn is_trivial(&self) -> bool {
        let constant = |v: &[BigInt]| v.windows(2).all(|w| w[0] == w[1]);
        constant(&self.alpha) && constant(&self.beta) && constant(&self.gamma)
    }
}

/// Constraint matrix of the homogeneous embedding system: one row per
/// support triple over unknowns `(α values, β values, γ values)`, plus,
/// when `pin` is set, two rows pinning the anchor values to zero.
fn support_system(dist: &TripartiteDistribution, pin: bool) -> IntegerMatrix {
    let nx = dist.x_alphabet.len();
    let ny = dist.y_alphabet.len();
    let nz = dist.z_alphabet.len();
    let cols = nx + ny + nz;
    let rows = dist.support().len() + if pin { 2 } else { 0 };
    let mut m = IntegerMatrix::zero(rows, cols);
    for (r, a) in dist.support().iter().enumerate() {
        m[(r, a.x)] = 1.into();
        m[(r, nx + a.y)] = 1.into();
        m[(r, nx + ny + a.z)] = 1.into();
    }
    if pin {
        let (x0, y0, _) = anchor(dist);
        let base = dist.support().len();
        m[(base, x0)] = 1.into();
        m[(base + 1, nx + y0)] = 1.into();
    }
    m
}

const ENUMERATION_CAP: usize = 1 << 22;

/// All normalized embeddings of `dist` into `ℤ_q`, canonically sorted.
pub fn enumerate_embeddings(dist: &TripartiteDistribution, q: u64) -> Vec<CyclicEmbedding> {
    let nx = dist.x_alphabet.len();
    let ny = dist.y_alphabet.len();
    let system = support_system(dist, true);
    let rhs = vec![BigInt::zero(); system.rows];
    let sols = solve_mod_q(&system, &rhs, q).expect("shape by construction");
    let all = sols
        .enumerate(ENUMERATION_CAP)
        .expect("embedding enumeration exceeds internal cap");
    let mut out: Vec<CyclicEmbedding> = all
        .into_iter()
        .map(|v| {
            let alpha = v[..nx].to_vec();
            let beta = v[nx..nx + ny].to_vec();
            let gamma = v[nx + ny..].to_vec();
            let e = CyclicEmbedding { q, alpha, beta, gamma };
            e.check(dist).expect("solver output must validate");
            e
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Decide whether `dist` has a nontrivial embedding into `(ℤ, +)`.
///
/// The kernel of the support system always contains the rank-2 lattice of
/// constant shifts `(s_a·1, s_b·1, s_c·1)`, `s_a + s_b + s_c = 0`; both it
/// and the kernel are saturated, so a nontrivial embedding exists exactly
/// when the kernel rank exceeds 2.
pub fn has_nontrivial_z_embedding(dist: &TripartiteDistribution) -> (bool, Option<ZEmbedding>) {
    let nx = dist.x_alphabet.len();
    let ny = dist.y_alphabet.len();
    let system = support_system(dist, false);
    let kernel = integer_kernel(&system);
    if kernel.len() <= 2 {
        return (false, None);
    }
    let is_shift = |v: &[BigInt]| {
        let constant = |s: &[BigInt]| s.windows(2).all(|w| w[0] == w[1]);
        constant(&v[..nx]) && constant(&v[nx..nx + ny]) && constant(&v[nx + ny..])
    };
    let witness = kernel
        .iter()
        .find(|v| !is_shift(v))
        .expect("rank > 2 kernel has a non-shift basis vector");
    // Normalize: subtract shifts so the anchor values vanish.
    let (x0, y0, _) = anchor(dist);
    let sa = witness[x0].clone();
    let sb = witness[nx + y0].clone();
    let alpha: Vec<BigInt> = witness[..nx].iter().map(|v| v - &sa).collect();
    let beta: Vec<BigInt> = witness[nx..nx + ny].iter().map(|v| v - &sb).collect();
    let gamma: Vec<BigInt> = witness[nx + ny..].iter().map(|v| v + &sa + &sb).collect();
    let ze = ZEmbedding { alpha, beta, gamma };
    ze.check(dist).expect("kernel vector embeds");
    debug_assert!(!ze.is_trivial());
    (true, Some(ze))
}

/// Aggregation of all normalized embeddings into cyclic prime-power groups
/// of order at most `r`; the master group is the subgroup of the component
/// product generated by the image of `α_master`.
#[derive(Debug, Clone)]
pub struct MasterEmbedding {
    pub r: u64,
    pub embeddings: Vec<CyclicEmbedding>,
    pub product_group: FiniteAbelianGroup,
    pub alpha_master: Vec<GroupElement>,
    pub beta_master: Vec<GroupElement>,
    pub gamma_master: Vec<GroupElement>,
    pub master_group: Subgroup,
    /// Set when the input has a nontrivial ℤ-embedding, in which case a
    /// finite master group cannot capture all embeddings.
    pub z_embedding_warning: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MasterAxis {
    X,
    Y,
    Z,
}

impl MasterEmbedding {
    fn tuples(&self, axis: MasterAxis) -> &[GroupElement] {
        match axis {
            MasterAxis::X => &self.alpha_master,
            MasterAxis::Y => &self.beta_master,
            MasterAxis::Z => &self.gamma_master,
        }
    }

    /// Partition of an axis's symbols by master value; entries are class
    /// ids numbered by first appearance.
    pub fn partition(&self, axis: MasterAxis) -> Vec<usize> {
        partition_ids(self.tuples(axis))
    }

    pub fn image(&self, axis: MasterAxis) -> BTreeSet<GroupElement> {
        self.tuples(axis).iter().cloned().collect()
    }

    /// True when all three master images are equal and form a subgroup.
    pub fn is_saturated(&self) -> bool {
        let ia = self.image(MasterAxis::X);
        let ib = self.image(MasterAxis::Y);
        let ic = self.image(MasterAxis::Z);
        if ia != ib || ib != ic {
            return false;
        }
        let gens: Vec<GroupElement> = ia.iter().cloned().collect();
        let closed = subgroup_generated(&self.product_group, &gens)
            .expect("image elements live in the product group");
        closed.elements.len() == ia.len()
    }
}

pub fn partition_ids<T: Eq>(items: &[T]) -> Vec<usize> {
    let mut ids = Vec::with_capacity(items.len());
    let mut seen: Vec<&T> = Vec::new();
    for it in items {
        match seen.iter().position(|s| *s == it) {
            Some(i) => ids.push(i),
            None => {
                seen.push(it);
                ids.push(seen.len() - 1);
            }
        }
    }
    ids
}

/// Default order bound for the master embedding: `2 (|Σ| |Γ| |Φ|)²`. The
/// underlying guarantee only promises that some sufficiently large bound
/// works, so the bound actually used is always surfaced in reports.
pub fn default_master_bound(dist: &TripartiteDistribution) -> u64 {
    let m = dist.x_alphabet.len() as u64
        * dist.y_alphabet.len() as u64
        * dist.z_alphabet.len() as u64;
    2 * m * m
}

pub fn master_embedding(dist: &TripartiteDistribution, r: u64) -> MasterEmbedding {
    let (has_z, _) = has_nontrivial_z_embedding(dist);
    let mut embeddings = Vec::new();
    for q in prime_powers_up_to(r) {
        embeddings.extend(enumerate_embeddings(dist, q));
    }
    let product_group = FiniteAbelianGroup::new(embeddings.iter().map(|e| e.q).collect());
    let tuple = |pick: fn(&CyclicEmbedding) -> &Vec<u64>, idx: usize| GroupElement {
        coords: embeddings.iter().map(|e| pick(e)[idx]).collect(),
    };
    let alpha_master: Vec<GroupElement> = (0..dist.x_alphabet.len())
        .map(|i| tuple(|e| &e.alpha, i))
        .collect();
    let beta_master: Vec<GroupElement> = (0..dist.y_alphabet.len())
        .map(|i| tuple(|e| &e.beta, i))
        .collect();
    let gamma_master: Vec<GroupElement> = (0..dist.z_alphabet.len())
        .map(|i| tuple(|e| &e.gamma, i))
        .collect();
    let master_group = subgroup_generated(&product_group, &alpha_master)
        .expect("master tuples live in the product group");
    MasterEmbedding {
        r,
        embeddings,
        product_group,
        alpha_master,
        beta_master,
        gamma_master,
        master_group,
        z_embedding_warning: has_z,
    }
}

/// Embedding of `N·t` into `ℤ_{p^k N}`: maps with
/// `a(x) + b(y) + c(z) ≡ N·t(x,y,z) (mod p^k N)` on the support, plus the
/// reduced view `ã = a mod N` (values in `[0, N)`) and the adjusted target
/// it certifies for the equivalent game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetEmbedding {
    pub p: u64,
    pub k: u32,
    /// `N = p^j`.
    pub j: u32,
    pub big_n: u64,
    /// `p^k · N`.
    pub modulus: u64,
    pub a: Vec<u64>,
    pub b: Vec<u64>,
    pub c: Vec<u64>,
    pub a_norm: Vec<u64>,
    pub b_norm: Vec<u64>,
    pub c_norm: Vec<u64>,
    /// Adjusted target certified by the normalized maps, parallel to the
    /// support.
    pub t_norm: Vec<u64>,
}

impl TargetEmbedding {
    pub fn new(
        game: &XorGame,
        p: u64,
        k: u32,
        j: u32,
        a: Vec<u64>,
        b: Vec<u64>,
        c: Vec<u64>,
    ) -> Result<Self, EmbedError> {
        let big_n = p.pow(j);
        let modulus = p.pow(k) * big_n;
        let dist = &game.dist;
        if a.len() != dist.x_alphabet.len()
            || b.len() != dist.y_alphabet.len()
            || c.len() != dist.z_alphabet.len()
        {
            return Err(EmbedError::Shape(String::from(
                "map lengths must match the alphabets",
            )));
        }
        if a.iter().chain(&b).chain(&c).any(|&v| v >= modulus) {
            return Err(EmbedError::Shape(format!("values must lie in [0, {modulus})")));
        }
        for (atom, &t) in dist.support().iter().zip(game.target()) {
            let lhs = (a[atom.x] + b[atom.y] + c[atom.z]) % modulus;
            let rhs = (big_n as u128 * t as u128 % modulus as u128) as u64;
            if lhs != rhs {
                return Err(EmbedError::CongruenceViolated {
                    triple: (atom.x, atom.y, atom.z),
                });
            }
        }
        let a_norm: Vec<u64> = a.iter().map(|&v| v % big_n).collect();
        let b_norm: Vec<u64> = b.iter().map(|&v| v % big_n).collect();
        let c_norm: Vec<u64> = c.iter().map(|&v| v % big_n).collect();
        // ã + b̃ + c̃ ≡ N·t̃ (mod p^k N) for the shifted target
        // t̃ = t − (a−ã)/N − (b−b̃)/N − (c−c̃)/N (mod p^k).
        let pk = p.pow(k);
        let t_norm: Vec<u64> = dist
            .support()
            .iter()
            .zip(game.target())
            .map(|(atom, &t)| {
                let ua = (a[atom.x] - a_norm[atom.x]) / big_n;
                let ub = (b[atom.y] - b_norm[atom.y]) / big_n;
                let uc = (c[atom.z] - c_norm[atom.z]) / big_n;
                let shift = (ua + ub + uc) % pk;
                (t + pk - shift) % pk
            })
            .collect();
        let te = TargetEmbedding {
            p,
            k,
            j,
            big_n,
            modulus,
            a,
            b,
            c,
            a_norm,
            b_norm,
            c_norm,
            t_norm,
        };
        te.check_normalized(game)?;
        Ok(te)
    }

    /// The normalized maps certify the adjusted target exactly.
    fn check_normalized(&self, game: &XorGame) -> Result<(), EmbedError> {
        for (i, atom) in game.dist.support().iter().enumerate() {
            let lhs =
                (self.a_norm[atom.x] + self.b_norm[atom.y] + self.c_norm[atom.z]) % self.modulus;
            let rhs = (self.big_n as u128 * self.t_norm[i] as u128 % self.modulus as u128) as u64;
            if lhs != rhs {
                return Err(EmbedError::CongruenceViolated {
                    triple: (atom.x, atom.y, atom.z),
                });
            }
        }
        Ok(())
    }
}

const WITNESS_ENUMERATION_CAP: usize = 4096;

/// Find the least `N ∈ {p⁰, …, p^{j_max}}` such that `N·t` extends to an
/// embedding modulo `p^k N`, i.e. the system
/// `a(x) + b(y) + c(z) ≡ N·t(x,y,z) (mod p^k N)` is solvable. `None` means
/// no such `N` up to the bound, which leaves `ω^t` undecided-embeddable
/// within the bound. The witness is canonical: lexicographically smallest
/// when the solution set is small, otherwise the solver's base solution.
pub fn minimal_n(game: &XorGame, j_max: u32) -> Result<Option<TargetEmbedding>, GameError> {
    let factors = crate::abelian::factorize(game.modulus);
    if factors.len() != 1 {
        return Err(GameError::NotPrimePower(game.modulus));
    }
    let (p, k) = factors[0];
    let dist = &game.dist;
    let nx = dist.x_alphabet.len();
    let ny = dist.y_alphabet.len();

    for j in 0..=j_max {
        let big_n = p.pow(j);
        let modulus = p.pow(k) * big_n;
        let system = support_system(dist, true);
        let mut rhs: Vec<BigInt> = game
            .target()
            .iter()
            .map(|&t| BigInt::from(big_n) * BigInt::from(t))
            .collect();
        rhs.push(BigInt::zero());
        rhs.push(BigInt::zero());
        let sols = solve_mod_q(&system, &rhs, modulus).expect("shape by construction");
        if sols.is_empty() {
            continue;
        }
        let v = match sols.enumerate(WITNESS_ENUMERATION_CAP) {
            Some(mut all) => {
                all.sort();
                all[0].clone()
            }
            None => sols.first().unwrap(),
        };
        let a = v[..nx].to_vec();
        let b = v[nx..nx + ny].to_vec();
        let c = v[nx + ny..].to_vec();
        let te = TargetEmbedding::new(game, p, k, j, a, b, c).expect("solver output must validate");
        return Ok(Some(te));
    }
    Ok(None)
}

/// Interpretation of the three alphabets as elements of one finite abelian
/// group, needed by the reduction machinery.
#[derive(Debug, Clone)]
pub struct GroupInterpretation {
    pub group: FiniteAbelianGroup,
    pub x_elems: Vec<GroupElement>,
    pub y_elems: Vec<GroupElement>,
    pub z_elems: Vec<GroupElement>,
}

impl GroupInterpretation {
    /// Parse symbol labels as integers modulo `q` (single cyclic factor).
    pub fn cyclic_by_label(dist: &TripartiteDistribution, q: u64) -> Result<Self, EmbedError> {
        let group = FiniteAbelianGroup::new(vec![q]);
        let parse = |labels: &[String]| -> Result<Vec<GroupElement>, EmbedError> {
            labels
                .iter()
                .map(|l| {
                    l.parse::<u64>()
                        .map_err(|_| {
                            EmbedError::GroupBoxMismatch(format!("label {l:?} is not an integer"))
                        })
                        .map(|v| GroupElement { coords: vec![v % q] })
                })
                .collect()
        };
        Ok(GroupInterpretation {
            x_elems: parse(dist.x_alphabet.labels())?,
            y_elems: parse(dist.y_alphabet.labels())?,
            z_elems: parse(dist.z_alphabet.labels())?,
            group,
        })
    }
}

/// One step of minimal-N reduction: check that the mod-p parts of the maps
/// are matching affine forms whose coefficients survive the vanishing
/// conditions, subtract them, and divide by p. The output re-validates at
/// `N/p`; failure of that final congruence also reports non-reducibility.
pub fn reduce_embedding_n(
    te: &TargetEmbedding,
    game: &XorGame,
    interp: &GroupInterpretation,
) -> Result<TargetEmbedding, EmbedError> {
    let p = te.p;
    if te.j == 0 {
        return Err(EmbedError::NotReducible {
            lemma: "minimality",
            detail: String::from("N = 1 cannot be reduced"),
        });
    }
    let fit = |elems: &[GroupElement], vals: &[u64], what: &str| {
        let points: Vec<(GroupElement, u64)> = elems
            .iter()
            .cloned()
            .zip(vals.iter().map(|&v| v % p))
            .collect();
        affine_fit(&points, &interp.group, p).ok_or(EmbedError::NotReducible {
            lemma: "ahom",
            detail: format!("mod-{p} part of {what} is not affine"),
        })
    };
    let fa = fit(&interp.x_elems, &te.a, "a")?;
    let fb = fit(&interp.y_elems, &te.b, "b")?;
    let fc = fit(&interp.z_elems, &te.c, "c")?;

    if !coefficient_matching_check(&fa, &fb, &fc, p) {
        return Err(EmbedError::NotReducible {
            lemma: "coef",
            detail: format!(
                "affine parts do not match: constants ({}, {}, {}), coefficients {:?}/{:?}/{:?}",
                fa.constant, fb.constant, fc.constant,
                fa.coefficients, fb.coefficients, fc.coefficients
            ),
        });
    }
    let must_vanish = czero_must_vanish(&interp.group, p, te.k, te.j);
    for (i, (&ci, &mv)) in fa.coefficients.iter().zip(&must_vanish).enumerate() {
        if ci != 0 && mv {
            return Err(EmbedError::NotReducible {
                lemma: "czero",
                detail: format!("coefficient c_{i} = {ci} must vanish"),
            });
        }
    }

    // Lift the constants to integers summing to zero exactly.
    let ca = fa.constant as i128;
    let cb = fb.constant as i128;
    let cc = -(ca + cb);

    let modulus = te.modulus as i128;
    let reduce_map =
        |vals: &[u64], elems: &[GroupElement], constant: i128| -> Result<Vec<u64>, EmbedError> {
            vals.iter()
                .zip(elems)
                .map(|(&v, e)| {
                    let mut acc = v as i128 - constant;
                    for (ci, &xi) in fa.coefficients.iter().zip(&e.coords) {
                        acc -= *ci as i128 * xi as i128;
                    }
                    let r = acc.rem_euclid(modulus);
                    if r % p as i128 != 0 {
                        return Err(EmbedError::NotReducible {
                            lemma: "reduceN",
                            detail: String::from("corrected map is not divisible by p"),
                        });
                    }
                    Ok((r / p as i128) as u64)
                })
                .collect()
        };
    let a2 = reduce_map(&te.a, &interp.x_elems, ca)?;
    let b2 = reduce_map(&te.b, &interp.y_elems, cb)?;
    let c2 = reduce_map(&te.c, &interp.z_elems, cc)?;

    TargetEmbedding::new(game, p, te.k, te.j - 1, a2, b2, c2).map_err(|e| {
        EmbedError::NotReducible {
            lemma: "reduceN",
            detail: format!("reduced maps fail the defining congruence: {e}"),
        }
    })
}
