//! The XOR-game data model and exact value computation for the n-fold
//! repeated game.
//!
//! A game is a challenge distribution over `Σ × Γ × Φ` (exact rational
//! probabilities) together with a target map into `ℤ_m`. Players answer
//! with vectors in `ℤ_m^n` and win when the coordinate-wise sum of their
//! answers matches the target on every coordinate.
//!
//! Values are exact rationals throughout; the only floating point here is
//! the reported heuristic value of the hill-climbing search.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::abelian::factorize;
use crate::budget::Budget;
use crate::rng::Lcg;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GameError {
    EmptyAlphabet(&'static str),
    DuplicateLabel(String),
    ProbabilityMass(String),
    NonPositiveProbability(String),
    DuplicateTriple(String),
    UnusedSymbol(String),
    ModulusTooSmall(u64),
    TargetOutOfRange(String),
    TargetSupportMismatch(String),
    StrategyShape(String),
    BudgetExceeded { needed: u128, budget: u64 },
    ExactInfeasible { needed: u128, budget: u64 },
    NotPrimePower(u64),
}

impl fmt::Display for GameError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameError::EmptyAlphabet(axis) => write!(f, "empty alphabet on axis {axis}"),
            GameError::DuplicateLabel(l) => write!(f, "duplicate symbol label {l:?}"),
            GameError::ProbabilityMass(s) => {
                write!(f, "probability mass must sum to exactly 1, got {s}")
            }
            GameError::NonPositiveProbability(t) => {
                write!(f, "support triple {t} has non-positive probability")
            }
            GameError::DuplicateTriple(t) => write!(f, "duplicate support triple {t}"),
            GameError::UnusedSymbol(s) => {
                write!(f, "symbol {s} appears in no support triple")
            }
            GameError::ModulusTooSmall(m) => write!(f, "modulus must be >= 2, got {m}"),
            GameError::TargetOutOfRange(t) => write!(f, "target value out of range at {t}"),
            GameError::TargetSupportMismatch(t) => {
                write!(f, "target defined off the support: {t}")
            }
            GameError::StrategyShape(s) => write!(f, "strategy shape: {s}"),
            GameError::BudgetExceeded { needed, budget } => {
                write!(f, "enumeration budget exceeded: needs {needed} events, budget {budget}")
            }
            GameError::ExactInfeasible { needed, budget } => write!(
                f,
                "exact search infeasible ({needed} events > budget {budget}), use value_search"
            ),
            GameError::NotPrimePower(m) => {
                write!(f, "modulus {m} is not a prime power; run crt_decompose first")
            }
        }
    }
}

impl core::error::Error for GameError {}

/// Ordered list of distinct symbol labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<String>,
}

impl Alphabet {
    pub fn new(symbols: Vec<String>) -> Result<Self, GameError> {
        if symbols.is_empty() {
            return Err(GameError::EmptyAlphabet("alphabet"));
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(GameError::DuplicateLabel(s.clone()));
            }
        }
        Ok(Alphabet { symbols })
    }

    pub fn of_size(n: usize) -> Self {
        Alphabet {
            symbols: (0..n).map(|i| i.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.symbols
    }

    pub fn label(&self, i: usize) -> &str {
        &self.symbols[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == label)
    }
}

/// One atom of the challenge distribution: symbol indices plus exact mass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportAtom {
    pub x: usize,
    pub y: usize,
    pub z: usize,
    pub p: Rational,
}

/// Exact distribution over `Σ × Γ × Φ`; atoms are kept sorted by symbol
/// indices so serialization and iteration order are canonical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripartiteDistribution {
    pub x_alphabet: Alphabet,
    pub y_alphabet: Alphabet,
    pub z_alphabet: Alphabet,
    support: Vec<SupportAtom>,
}

impl TripartiteDistribution {
    pub fn new(
        x_alphabet: Alphabet,
        y_alphabet: Alphabet,
        z_alphabet: Alphabet,
        mut support: Vec<SupportAtom>,
    ) -> Result<Self, GameError> {
        support.sort_by_key(|a| (a.x, a.y, a.z));
        for w in support.windows(2) {
            if (w[0].x, w[0].y, w[0].z) == (w[1].x, w[1].y, w[1].z) {
                return Err(GameError::DuplicateTriple(format!(
                    "({}, {}, {})",
                    w[0].x, w[0].y, w[0].z
                )));
            }
        }
        let mut mass = Rational::zero();
        for a in &support {
            if a.x >= x_alphabet.len() || a.y >= y_alphabet.len() || a.z >= z_alphabet.len() {
                return Err(GameError::TargetOutOfRange(format!(
                    "support indices ({}, {}, {})",
                    a.x, a.y, a.z
                )));
            }
            if a.p <= Rational::zero() {
                return Err(GameError::NonPositiveProbability(format!(
                    "({}, {}, {})",
                    a.x, a.y, a.z
                )));
            }
            mass += &a.p;
        }
        if !mass.is_one() {
            return Err(GameError::ProbabilityMass(format!("{mass}")));
        }
        for (axis, alphabet, pick) in [
            ("x", &x_alphabet, 0usize),
            ("y", &y_alphabet, 1),
            ("z", &z_alphabet, 2),
        ] {
            for (i, label) in alphabet.labels().iter().enumerate() {
                let used = support.iter().any(|a| match pick {
                    0 => a.x == i,
                    1 => a.y == i,
                    _ => a.z == i,
                });
                if !used {
                    return Err(GameError::UnusedSymbol(format!("{axis}:{label}")));
                }
            }
        }
        Ok(TripartiteDistribution {
            x_alphabet,
            y_alphabet,
            z_alphabet,
            support,
        })
    }

    /// Uniform distribution over the given triples.
    pub fn uniform(
        x_alphabet: Alphabet,
        y_alphabet: Alphabet,
        z_alphabet: Alphabet,
        triples: &[(usize, usize, usize)],
    ) -> Result<Self, GameError> {
        let p = Rational::new(1.into(), (triples.len() as i64).into());
        let support = triples
            .iter()
            .map(|&(x, y, z)| SupportAtom { x, y, z, p: p.clone() })
            .collect();
        TripartiteDistribution::new(x_alphabet, y_alphabet, z_alphabet, support)
    }

    pub fn support(&self) -> &[SupportAtom] {
        &self.support
    }

    pub fn mass_of(&self, x: usize, y: usize, z: usize) -> Rational {
        self.support
            .iter()
            .find(|a| (a.x, a.y, a.z) == (x, y, z))
            .map(|a| a.p.clone())
            .unwrap_or_else(Rational::zero)
    }

    pub fn marginal_x(&self) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.x_alphabet.len()];
        for a in &self.support {
            out[a.x] += &a.p;
        }
        out
    }

    pub fn marginal_y(&self) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.y_alphabet.len()];
        for a in &self.support {
            out[a.y] += &a.p;
        }
        out
    }

    pub fn marginal_z(&self) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.z_alphabet.len()];
        for a in &self.support {
            out[a.z] += &a.p;
        }
        out
    }

    /// Joint (y, z) marginal as a map.
    pub fn marginal_yz(&self) -> BTreeMap<(usize, usize), Rational> {
        let mut out = BTreeMap::new();
        for a in &self.support {
            *out.entry((a.y, a.z)).or_insert_with(Rational::zero) += &a.p;
        }
        out
    }
}

/// A 3-XOR game: challenge distribution, answer modulus and target table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XorGame {
    pub dist: TripartiteDistribution,
    pub modulus: u64,
    /// Target residues, parallel to `dist.support()`.
    target: Vec<u64>,
}

impl XorGame {
    pub fn new(
        dist: TripartiteDistribution,
        modulus: u64,
        target_by_triple: &BTreeMap<(usize, usize, usize), u64>,
    ) -> Result<Self, GameError> {
        if modulus < 2 {
            return Err(GameError::ModulusTooSmall(modulus));
        }
        let mut target = Vec::with_capacity(dist.support().len());
        for a in dist.support() {
            match target_by_triple.get(&(a.x, a.y, a.z)) {
                Some(&t) if t < modulus => target.push(t),
                Some(&t) => {
                    return Err(GameError::TargetOutOfRange(format!(
                        "t({}, {}, {}) = {t} >= {modulus}",
                        a.x, a.y, a.z
                    )))
                }
                None => {
                    return Err(GameError::TargetSupportMismatch(format!(
                        "no target for support triple ({}, {}, {})",
                        a.x, a.y, a.z
                    )))
                }
            }
        }
        if target_by_triple.len() != dist.support().len() {
            let extra = target_by_triple
                .keys()
                .find(|k| !dist.support().iter().any(|a| (a.x, a.y, a.z) == **k))
                .unwrap();
            return Err(GameError::TargetSupportMismatch(format!(
                "target on non-support triple {extra:?}"
            )));
        }
        let game = XorGame { dist, modulus, target };
        game.validate()?;
        Ok(game)
    }

    /// Re-check every structural invariant, naming the first violation.
    pub fn validate(&self) -> Result<(), GameError> {
        if self.modulus < 2 {
            return Err(GameError::ModulusTooSmall(self.modulus));
        }
        if self.target.len() != self.dist.support().len() {
            return Err(GameError::TargetSupportMismatch(
                "target table length differs from support size".into(),
            ));
        }
        for (a, &t) in self.dist.support().iter().zip(&self.target) {
            if t >= self.modulus {
                return Err(GameError::TargetOutOfRange(format!(
                    "t({}, {}, {}) = {t}",
                    a.x, a.y, a.z
                )));
            }
        }
        // Re-validate the distribution invariants too.
        TripartiteDistribution::new(
            self.dist.x_alphabet.clone(),
            self.dist.y_alphabet.clone(),
            self.dist.z_alphabet.clone(),
            self.dist.support().to_vec(),
        )?;
        Ok(())
    }

    pub fn target(&self) -> &[u64] {
        &self.target
    }

    pub fn target_of(&self, x: usize, y: usize, z: usize) -> Option<u64> {
        self.dist
            .support()
            .iter()
            .position(|a| (a.x, a.y, a.z) == (x, y, z))
            .map(|i| self.target[i])
    }

    /// Split into one game per prime-power factor of the modulus, targets
    /// reduced accordingly. CRT over the component targets recovers the
    /// original target exactly.
    pub fn crt_decompose(&self) -> Vec<XorGame> {
        factorize(self.modulus)
            .into_iter()
            .map(|(p, k)| {
                let q = p.pow(k);
                XorGame {
                    dist: self.dist.clone(),
                    modulus: q,
                    target: self.target.iter().map(|&t| t % q).collect(),
                }
            })
            .collect()
    }
}

/// Recombine residues by the Chinese remainder theorem; moduli must be
/// pairwise coprime.
pub fn crt_combine(residues: &[(u64, u64)]) -> u64 {
    let mut x: u128 = 0;
    let mut m: u128 = 1;
    for &(r, q) in residues {
        let q = q as u128;
        let diff = (r as u128 + q - (x % q)) % q;
        let inv = mod_inv_u128(m % q, q);
        x += m * ((diff * inv) % q);
        m *= q;
        x %= m;
    }
    x as u64
}

fn mod_inv_u128(a: u128, m: u128) -> u128 {
    if m == 1 {
        return 0;
    }
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    old_s.rem_euclid(m as i128) as u128
}

/// The GHZ game: challenges uniform over `{(x,y,z) ∈ {0,1}^3 : x+y+z=0}`,
/// answers in `ℤ_2`, target `x ∨ y ∨ z`.
pub fn ghz() -> XorGame {
    let dist = TripartiteDistribution::uniform(
        Alphabet::of_size(2),
        Alphabet::of_size(2),
        Alphabet::of_size(2),
        &[(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)],
    )
    .unwrap();
    let mut target = BTreeMap::new();
    target.insert((0, 0, 0), 0);
    target.insert((0, 1, 1), 1);
    target.insert((1, 0, 1), 1);
    target.insert((1, 1, 0), 1);
    XorGame::new(dist, 2, &target).unwrap()
}

/// Dense strategy tables for the n-fold game: each player maps full input
/// vectors to answer vectors in `ℤ_m^n`. Input vectors are ranked
/// big-endian (coordinate 0 most significant).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strategy {
    pub n: usize,
    pub f: Vec<Vec<u64>>,
    pub g: Vec<Vec<u64>>,
    pub h: Vec<Vec<u64>>,
}

impl Strategy {
    /// The all-zeros strategy.
    pub fn zeros(game: &XorGame, n: usize) -> Strategy {
        let table = |k: usize| vec![vec![0u64; n]; k.pow(n as u32)];
        Strategy {
            n,
            f: table(game.dist.x_alphabet.len()),
            g: table(game.dist.y_alphabet.len()),
            h: table(game.dist.z_alphabet.len()),
        }
    }

    pub fn random(game: &XorGame, n: usize, rng: &mut Lcg) -> Strategy {
        let m = game.modulus;
        let mut table = |k: usize| -> Vec<Vec<u64>> {
            (0..k.pow(n as u32))
                .map(|_| (0..n).map(|_| rng.below(m)).collect())
                .collect()
        };
        let f = table(game.dist.x_alphabet.len());
        let g = table(game.dist.y_alphabet.len());
        let h = table(game.dist.z_alphabet.len());
        Strategy { n, f, g, h }
    }

    fn check_shape(&self, game: &XorGame) -> Result<(), GameError> {
        let want = |k: usize| k.checked_pow(self.n as u32);
        for (name, table, k) in [
            ("f", &self.f, game.dist.x_alphabet.len()),
            ("g", &self.g, game.dist.y_alphabet.len()),
            ("h", &self.h, game.dist.z_alphabet.len()),
        ] {
            if want(k) != Some(table.len()) {
                return Err(GameError::StrategyShape(format!(
                    "{name} table has {} rows, expected {k}^{}",
                    table.len(),
                    self.n
                )));
            }
            if table
                .iter()
                .any(|row| row.len() != self.n || row.iter().any(|&v| v >= game.modulus))
            {
                return Err(GameError::StrategyShape(format!(
                    "{name} entries must be length-{} vectors mod {}",
                    self.n, game.modulus
                )));
            }
        }
        Ok(())
    }
}

/// Tensor two strategies on the same game into one on `n1 + n2` copies.
pub fn product_strategy(a: &Strategy, b: &Strategy) -> Strategy {
    let splice = |ta: &Vec<Vec<u64>>, tb: &Vec<Vec<u64>>| {
        let mut out = Vec::with_capacity(ta.len() * tb.len());
        for ra in ta {
            for rb in tb {
                let mut row = ra.clone();
                row.extend_from_slice(rb);
                out.push(row);
            }
        }
        out
    };
    Strategy {
        n: a.n + b.n,
        f: splice(&a.f, &b.f),
        g: splice(&a.g, &b.g),
        h: splice(&a.h, &b.h),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReportedValue {
    Exact(Rational),
    Heuristic(f64),
}

impl ReportedValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            ReportedValue::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            ReportedValue::Heuristic(v) => *v,
        }
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            ReportedValue::Exact(r) => Some(r),
            ReportedValue::Heuristic(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueReport {
    pub value: ReportedValue,
    pub witness: Option<Strategy>,
    pub mode: SearchMode,
}

/// Precomputed view of `supp(μ^{⊗n})`: per-combo input ranks, exact weight
/// numerators over a common denominator, and target vectors.
pub(crate) struct RepeatedSupport {
    n: usize,
    m: u64,
    denominator: BigUint,
    combos: Vec<Combo>,
}

struct Combo {
    ix: usize,
    iy: usize,
    iz: usize,
    weight: u128,
    t: Vec<u64>,
}

impl RepeatedSupport {
    pub(crate) fn build(
        game: &XorGame,
        n: usize,
        budget: &Budget,
    ) -> Result<RepeatedSupport, GameError> {
        let atoms = game.dist.support();
        let needed = (atoms.len() as u128)
            .checked_pow(n as u32)
            .unwrap_or(u128::MAX);
        if needed > budget.scored_events as u128 {
            return Err(GameError::BudgetExceeded {
                needed,
                budget: budget.scored_events,
            });
        }
        // Common denominator D: every atom weight becomes an integer
        // numerator; a combo weighs the product of its numerators over D^n.
        let mut denom = BigUint::one();
        for a in atoms {
            let d = a.p.denom().to_biguint().unwrap();
            denom = &denom / denom.gcd(&d) * d;
        }
        let numerators: Vec<u128> = atoms
            .iter()
            .map(|a| {
                let num = a.p.numer().to_biguint().unwrap()
                    * (&denom / a.p.denom().to_biguint().unwrap());
                num.to_u128().ok_or(GameError::BudgetExceeded {
                    needed: u128::MAX,
                    budget: budget.scored_events,
                })
            })
            .collect::<Result<_, _>>()?;
        // Overflow guard: the largest combo weight is (max numerator)^n.
        let max_num = numerators.iter().copied().max().unwrap_or(1);
        let mut acc: u128 = 1;
        for _ in 0..n {
            acc = acc.checked_mul(max_num).ok_or(GameError::BudgetExceeded {
                needed: u128::MAX,
                budget: budget.scored_events,
            })?;
        }

        let nx = game.dist.x_alphabet.len();
        let ny = game.dist.y_alphabet.len();
        let nz = game.dist.z_alphabet.len();
        let mut combos = Vec::with_capacity(needed as usize);
        let mut atom_idx = vec![0usize; n];
        loop {
            let mut ix = 0;
            let mut iy = 0;
            let mut iz = 0;
            let mut weight: u128 = 1;
            let mut t = Vec::with_capacity(n);
            for &ai in &atom_idx {
                let a = &atoms[ai];
                ix = ix * nx + a.x;
                iy = iy * ny + a.y;
                iz = iz * nz + a.z;
                weight *= numerators[ai];
                t.push(game.target[ai]);
            }
            combos.push(Combo { ix, iy, iz, weight, t });
            if !odometer(&mut atom_idx, atoms.len()) {
                break;
            }
        }
        let mut dn = BigUint::one();
        for _ in 0..n {
            dn *= &denom;
        }
        Ok(RepeatedSupport {
            n,
            m: game.modulus,
            denominator: dn,
            combos,
        })
    }

    pub(crate) fn score(&self, s: &Strategy) -> u128 {
        let mut won: u128 = 0;
        for c in &self.combos {
            let f = &s.f[c.ix];
            let g = &s.g[c.iy];
            let h = &s.h[c.iz];
            let ok = (0..self.n).all(|i| (f[i] + g[i] + h[i]) % self.m == c.t[i]);
            if ok {
                won += c.weight;
            }
        }
        won
    }

    pub(crate) fn to_rational(&self, won: u128) -> Rational {
        Rational::new(BigUint::from(won).into(), self.denominator.clone().into())
    }
}

/// Exact winning probability of a strategy on the n-fold game.
pub fn win_probability(
    game: &XorGame,
    strategy: &Strategy,
    budget: &Budget,
) -> Result<Rational, GameError> {
    strategy.check_shape(game)?;
    let rs = RepeatedSupport::build(game, strategy.n, budget)?;
    Ok(rs.to_rational(rs.score(strategy)))
}

/// Exact value of the n-fold game, enumerating `(f, g)` pairs and
/// completing each with the optimal `h` in closed form: per question `z`,
/// every compatible `(x, y)` votes for the unique answer vector that would
/// win, and `h(z)` takes the heaviest vote.
pub fn value_exact(game: &XorGame, n: usize, budget: &Budget) -> Result<ValueReport, GameError> {
    let m = game.modulus;
    let nx = game.dist.x_alphabet.len();
    let ny = game.dist.y_alphabet.len();
    let nz = game.dist.z_alphabet.len();
    let answers = (m as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    let fx = nx.checked_pow(n as u32).unwrap_or(usize::MAX);
    let gy = ny.checked_pow(n as u32).unwrap_or(usize::MAX);
    let hz = nz.checked_pow(n as u32).unwrap_or(usize::MAX);
    let atoms = game.dist.support().len() as u128;
    let needed = answers
        .checked_pow(fx as u32)
        .and_then(|a| a.checked_mul(answers.checked_pow(gy as u32)?))
        .and_then(|p| p.checked_mul(atoms.checked_pow(n as u32)?))
        .unwrap_or(u128::MAX);
    if needed > budget.scored_events as u128 {
        return Err(GameError::ExactInfeasible {
            needed,
            budget: budget.scored_events,
        });
    }
    let rs = RepeatedSupport::build(game, n, budget)?;
    let answers = answers as usize;

    // Decode LUT: answer code -> answer vector mod m, big-endian.
    let decode: Vec<Vec<u64>> = (0..answers)
        .map(|code| {
            let mut v = vec![0u64; n];
            let mut c = code as u64;
            for i in (0..n).rev() {
                v[i] = c % m;
                c /= m;
            }
            v
        })
        .collect();

    let mut best_won: Option<u128> = None;
    let mut best: Option<(Vec<usize>, Vec<usize>, Vec<usize>)> = None;

    let mut f_codes = vec![0usize; fx];
    'outer: loop {
        let mut g_codes = vec![0usize; gy];
        loop {
            // votes[z][answer code] = weight won if h(z) picks that answer
            let mut votes = vec![vec![0u128; answers]; hz];
            for c in &rs.combos {
                let f = &decode[f_codes[c.ix]];
                let g = &decode[g_codes[c.iy]];
                let mut code: usize = 0;
                for i in 0..n {
                    let v = (c.t[i] + 2 * m - f[i] - g[i]) % m;
                    code = code * m as usize + v as usize;
                }
                votes[c.iz][code] += c.weight;
            }
            let mut won: u128 = 0;
            let mut h_codes = vec![0usize; hz];
            for (z, vz) in votes.iter().enumerate() {
                // Heaviest vote, ties to the smallest answer code.
                let (code, &w) = vz
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                    .unwrap();
                h_codes[z] = code;
                won += w;
            }
            if best_won.map_or(true, |b| won > b) {
                best_won = Some(won);
                best = Some((f_codes.clone(), g_codes.clone(), h_codes));
            }

            if !odometer(&mut g_codes, answers) {
                break;
            }
        }
        if !odometer(&mut f_codes, answers) {
            break 'outer;
        }
    }

    let (f_codes, g_codes, h_codes) = best.unwrap();
    let to_table = |codes: &[usize]| codes.iter().map(|&c| decode[c].clone()).collect();
    let witness = Strategy {
        n,
        f: to_table(&f_codes),
        g: to_table(&g_codes),
        h: to_table(&h_codes),
    };
    Ok(ValueReport {
        value: ReportedValue::Exact(rs.to_rational(best_won.unwrap())),
        witness: Some(witness),
        mode: SearchMode::Exact,
    })
}

fn odometer(codes: &mut [usize], radix: usize) -> bool {
    let mut c = codes.len();
    loop {
        if c == 0 {
            return false;
        }
        c -= 1;
        codes[c] += 1;
        if codes[c] < radix {
            return true;
        }
        codes[c] = 0;
    }
}

/// Seeded restart hill-climbing over single-table-entry moves. Each
/// iteration scans the full one-change neighbourhood and takes the best
/// strict improvement; a local optimum triggers a restart from a fresh
/// random strategy. Deterministic for a fixed seed (see [`crate::rng`]).
pub fn value_search(
    game: &XorGame,
    n: usize,
    seed: u64,
    iterations: u64,
    budget: &Budget,
) -> Result<ValueReport, GameError> {
    let rs = RepeatedSupport::build(game, n, budget)?;
    let m = game.modulus;
    let mut rng = Lcg::new(seed);

    let mut current = Strategy::random(game, n, &mut rng);
    let mut current_won = rs.score(&current);
    let mut best = current.clone();
    let mut best_won = current_won;

    for _ in 0..iterations {
        let mut improved: Option<(usize, usize, usize, u64, u128)> = None;
        let table_lens = [current.f.len(), current.g.len(), current.h.len()];
        for (ti, table_len) in table_lens.into_iter().enumerate() {
            for e in 0..table_len {
                for coord in 0..n {
                    let orig = get_entry(&current, ti, e, coord);
                    for delta in 1..m {
                        let cand = (orig + delta) % m;
                        set_entry(&mut current, ti, e, coord, cand);
                        let won = rs.score(&current);
                        set_entry(&mut current, ti, e, coord, orig);
                        if won > current_won && improved.map_or(true, |im| won > im.4) {
                            improved = Some((ti, e, coord, cand, won));
                        }
                    }
                }
            }
        }
        match improved {
            Some((ti, e, coord, cand, won)) => {
                set_entry(&mut current, ti, e, coord, cand);
                current_won = won;
            }
            None => {
                current = Strategy::random(game, n, &mut rng);
                current_won = rs.score(&current);
            }
        }
        if current_won > best_won {
            best_won = current_won;
            best = current.clone();
        }
    }

    let value = rs.to_rational(best_won).to_f64().unwrap();
    Ok(ValueReport {
        value: ReportedValue::Heuristic(value),
        witness: Some(best),
        mode: SearchMode::Heuristic,
    })
}

fn get_entry(s: &Strategy, table: usize, entry: usize, coord: usize) -> u64 {
    match table {
        0 => s.f[entry][coord],
        1 => s.g[entry][coord],
        _ => s.h[entry][coord],
    }
}

fn set_entry(s: &mut Strategy, table: usize, entry: usize, coord: usize, v: u64) {
    match table {
        0 => s.f[entry][coord] = v,
        1 => s.g[entry][coord] = v,
        _ => s.h[entry][coord] = v,
    }
}

/// Which pair of coordinates a bipartite co-occurrence graph refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordinatePair {
    XY,
    YZ,
    XZ,
}

/// Connectivity report for one pair graph; components are given as
/// (left symbol indices, right symbol indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairGraph {
    pub pair: CoordinatePair,
    pub connected: bool,
    pub components: Vec<(Vec<usize>, Vec<usize>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairwiseConnectivity {
    pub xy: PairGraph,
    pub yz: PairGraph,
    pub xz: PairGraph,
}

impl PairwiseConnectivity {
    pub fn connected(&self) -> bool {
        self.xy.connected && self.yz.connected && self.xz.connected
    }
}

/// Check the three bipartite co-occurrence graphs for connectivity,
/// returning the component structure of each for diagnostics.
pub fn is_pairwise_connected(dist: &TripartiteDistribution) -> PairwiseConnectivity {
    let build = |pair: CoordinatePair| {
        let (nl, nr, es): (usize, usize, Vec<(usize, usize)>) = match pair {
            CoordinatePair::XY => (
                dist.x_alphabet.len(),
                dist.y_alphabet.len(),
                dist.support().iter().map(|a| (a.x, a.y)).collect(),
            ),
            CoordinatePair::YZ => (
                dist.y_alphabet.len(),
                dist.z_alphabet.len(),
                dist.support().iter().map(|a| (a.y, a.z)).collect(),
            ),
            CoordinatePair::XZ => (
                dist.x_alphabet.len(),
                dist.z_alphabet.len(),
                dist.support().iter().map(|a| (a.x, a.z)).collect(),
            ),
        };
        let mut dsu = Dsu::new(nl + nr);
        for (l, r) in es {
            dsu.union(l, nl + r);
        }
        let mut comps: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for l in 0..nl {
            comps.entry(dsu.find(l)).or_default().0.push(l);
        }
        for r in 0..nr {
            comps.entry(dsu.find(nl + r)).or_default().1.push(r);
        }
        let components: Vec<_> = comps.into_values().collect();
        PairGraph {
            pair,
            connected: components.len() == 1,
            components,
        }
    };
    PairwiseConnectivity {
        xy: build(CoordinatePair::XY),
        yz: build(CoordinatePair::YZ),
        xz: build(CoordinatePair::XZ),
    }
}

pub(crate) struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    pub(crate) fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // Smaller root wins so representatives are canonical.
        if ra < rb {
            self.parent[rb] = ra;
        } else {
            self.parent[ra] = rb;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn ghz_is_well_formed_and_pairwise_connected() {
        let g = ghz();
        assert!(g.validate().is_ok());
        assert_eq!(g.target_of(0, 0, 0), Some(0));
        assert_eq!(g.target_of(1, 1, 0), Some(1));
        assert!(is_pairwise_connected(&g.dist).connected());
    }

    #[test]
    fn bad_probability_mass_is_rejected() {
        let dist = TripartiteDistribution::new(
            Alphabet::of_size(2),
            Alphabet::of_size(2),
            Alphabet::of_size(2),
            vec![
                SupportAtom { x: 0, y: 0, z: 0, p: rat(1, 4) },
                SupportAtom { x: 0, y: 1, z: 1, p: rat(1, 4) },
                SupportAtom { x: 1, y: 0, z: 1, p: rat(1, 8) },
                SupportAtom { x: 1, y: 1, z: 0, p: rat(1, 8) },
            ],
        );
        assert!(matches!(dist, Err(GameError::ProbabilityMass(_))));
    }

    #[test]
    fn target_off_support_is_rejected() {
        let dist = TripartiteDistribution::uniform(
            Alphabet::of_size(2),
            Alphabet::of_size(2),
            Alphabet::of_size(2),
            &[(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)],
        )
        .unwrap();
        let mut target = BTreeMap::new();
        for t in [(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0), (1, 1, 1)] {
            target.insert(t, 0);
        }
        assert!(matches!(
            XorGame::new(dist, 2, &target),
            Err(GameError::TargetSupportMismatch(_))
        ));
    }

    #[test]
    fn ghz_zero_strategy_wins_quarter() {
        let g = ghz();
        let s = Strategy::zeros(&g, 1);
        let p = win_probability(&g, &s, &Budget::default()).unwrap();
        assert_eq!(p, rat(1, 4));
    }

    #[test]
    fn ghz_two_fold_zero_strategy_squares() {
        let g = ghz();
        let s = Strategy::zeros(&g, 2);
        let p = win_probability(&g, &s, &Budget::default()).unwrap();
        assert_eq!(p, rat(1, 16));
    }

    #[test]
    fn ghz_single_shot_value_is_three_quarters() {
        let g = ghz();
        let report = value_exact(&g, 1, &Budget::default()).unwrap();
        assert_eq!(report.value.as_exact().unwrap(), &rat(3, 4));
        let w = report.witness.unwrap();
        let rescored = win_probability(&g, &w, &Budget::default()).unwrap();
        assert_eq!(rescored, rat(3, 4));
    }

    #[test]
    fn perfect_strategy_scores_one() {
        // t ≡ 0 has the zero strategy as a perfect strategy.
        let dist = ghz().dist;
        let mut target = BTreeMap::new();
        for a in dist.support() {
            target.insert((a.x, a.y, a.z), 0);
        }
        let g = XorGame::new(dist, 2, &target).unwrap();
        let s = Strategy::zeros(&g, 1);
        assert!(win_probability(&g, &s, &Budget::default()).unwrap().is_one());
        let report = value_exact(&g, 1, &Budget::default()).unwrap();
        assert!(report.value.as_exact().unwrap().is_one());
    }

    #[test]
    fn exact_budget_error_names_search() {
        let g = ghz();
        let err = value_exact(&g, 3, &Budget::with_scored_events(1000)).unwrap_err();
        assert!(matches!(err, GameError::ExactInfeasible { .. }));
    }

    #[test]
    fn search_reaches_ghz_optimum() {
        let g = ghz();
        for seed in [1u64, 7, 42] {
            let report = value_search(&g, 1, seed, 500, &Budget::default()).unwrap();
            assert_eq!(report.value.to_f64(), 0.75, "seed {seed}");
            let w = report.witness.unwrap();
            let rescored = win_probability(&g, &w, &Budget::default()).unwrap();
            assert_eq!(rescored, rat(3, 4));
        }
    }

    #[test]
    fn search_with_zero_iterations_reports_initial_strategy() {
        let g = ghz();
        let report = value_search(&g, 1, 11, 0, &Budget::default()).unwrap();
        let w = report.witness.clone().unwrap();
        let rescored = win_probability(&g, &w, &Budget::default()).unwrap();
        assert_eq!(report.value.to_f64(), rescored.to_f64().unwrap());
    }

    #[test]
    fn search_never_exceeds_exact() {
        let g = ghz();
        let exact = value_exact(&g, 1, &Budget::default()).unwrap();
        let exact = exact.value.as_exact().unwrap().to_f64().unwrap();
        for seed in 0..5u64 {
            let s = value_search(&g, 1, seed, 50, &Budget::default()).unwrap();
            assert!(s.value.to_f64() <= exact + 1e-12);
        }
    }

    #[test]
    fn disconnected_support_is_detected() {
        let dist = TripartiteDistribution::uniform(
            Alphabet::of_size(2),
            Alphabet::of_size(2),
            Alphabet::of_size(2),
            &[(0, 0, 0), (1, 1, 1)],
        )
        .unwrap();
        let conn = is_pairwise_connected(&dist);
        assert!(!conn.connected());
        assert_eq!(conn.xy.components.len(), 2);
        assert_eq!(conn.yz.components.len(), 2);
        assert_eq!(conn.xz.components.len(), 2);
    }

    #[test]
    fn full_product_support_is_connected() {
        let mut triples = Vec::new();
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    triples.push((x, y, z));
                }
            }
        }
        let dist = TripartiteDistribution::uniform(
            Alphabet::of_size(2),
            Alphabet::of_size(2),
            Alphabet::of_size(2),
            &triples,
        )
        .unwrap();
        assert!(is_pairwise_connected(&dist).connected());
    }

    #[test]
    fn crt_decomposition_splits_and_recombines() {
        let dist = ghz().dist;
        let mut target = BTreeMap::new();
        for a in dist.support() {
            target.insert((a.x, a.y, a.z), 7);
        }
        let g = XorGame::new(dist, 12, &target).unwrap();
        let parts = g.crt_decompose();
        let moduli: Vec<u64> = parts.iter().map(|p| p.modulus).collect();
        assert_eq!(moduli, vec![4, 3]);
        assert_eq!(parts[0].target()[0], 3);
        assert_eq!(parts[1].target()[0], 1);
        assert_eq!(crt_combine(&[(3, 4), (1, 3)]), 7);

        let g4 = ghz();
        let mut t4 = BTreeMap::new();
        for a in g4.dist.support() {
            t4.insert((a.x, a.y, a.z), 3);
        }
        let g4 = XorGame::new(g4.dist, 4, &t4).unwrap();
        let parts = g4.crt_decompose();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0], g4);
    }

    #[test]
    fn product_strategy_multiplies_win_probability() {
        let g = ghz();
        let r1 = value_exact(&g, 1, &Budget::default()).unwrap();
        let w1 = r1.witness.unwrap();
        let w2 = product_strategy(&w1, &w1);
        let p = win_probability(&g, &w2, &Budget::default()).unwrap();
        assert_eq!(p, rat(9, 16));
    }
}
