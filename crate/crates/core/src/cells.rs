//! Winning spaces, cells and their enumeration.
//!
//! A cell is identified by a sign vector with one bit per unordered pair
//! `(i, j)`, `i < j`, laid out in lexicographic pair order. Bit 0 means the
//! cell lies in the winning space of `i` over `j`; bit 1 means `j` wins.
//! Cells are ranked lexicographically, so the all-zero vector is cell 1.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::arms::{ArmSet, UtilityKind};
use crate::error::{Error, Result};

/// Utility ties closer than this are treated as boundary points.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Margin demanded from sampled points by the permutation backend.
pub const SAMPLE_MARGIN: f64 = 1e-9;

/// Number of unordered pairs among `n` arms.
pub fn n_pairs(n: usize) -> usize {
    n * (n.saturating_sub(1)) / 2
}

/// 1-based position of the pair `(i, j)` (1-based arms, `i < j`) in a sign
/// vector for `n` arms: `(2n - i)(i - 1)/2 + j - i`.
pub fn pair_position(i: usize, j: usize, n: usize) -> Result<usize> {
    if i >= j || i == 0 || j > n {
        return Err(Error::InvalidPair(i, j));
    }
    Ok((2 * n - i) * (i - 1) / 2 + j - i)
}

/// 0-based offset of the pair `(i, j)` for 0-based arms `i < j`.
#[inline]
pub(crate) fn pair_offset(i: usize, j: usize, n: usize) -> usize {
    debug_assert!(i < j && j < n);
    (2 * n - i - 1) * i / 2 + (j - i - 1)
}

/// Sign vector of length `n(n-1)/2`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CellVector {
    n: usize,
    // position p lives in words[p / 64] at bit 63 - p % 64, so comparing the
    // word vectors compares the bit strings lexicographically
    words: Vec<u64>,
}

impl CellVector {
    /// The all-zero vector: every lower-indexed arm wins.
    pub fn zeros(n: usize) -> Self {
        CellVector {
            n,
            words: vec![0; n_pairs(n).div_ceil(64)],
        }
    }

    pub fn from_bits(n: usize, bits: &[bool]) -> Result<Self> {
        if bits.len() != n_pairs(n) {
            return Err(Error::Config(format!(
                "sign vector for {n} arms needs {} bits, got {}",
                n_pairs(n),
                bits.len()
            )));
        }
        let mut v = CellVector::zeros(n);
        for (p, &b) in bits.iter().enumerate() {
            v.set_position(p, b);
        }
        Ok(v)
    }

    /// Parses a string of `0`/`1` characters.
    pub fn parse(n: usize, s: &str) -> Result<Self> {
        let bits: Vec<bool> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Config(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<_>>()?;
        CellVector::from_bits(n, &bits)
    }

    /// Builds the sign vector of a strict ranking (best arm first).
    pub fn from_ranking(ranking: &[usize]) -> Self {
        let n = ranking.len();
        let mut rank = vec![0; n];
        for (r, &a) in ranking.iter().enumerate() {
            rank[a] = r;
        }
        let mut v = CellVector::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                v.set_position(pair_offset(i, j, n), rank[j] < rank[i]);
            }
        }
        v
    }

    pub fn n_arms(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        n_pairs(self.n)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn position(&self, p: usize) -> bool {
        (self.words[p / 64] >> (63 - p % 64)) & 1 == 1
    }

    #[inline]
    fn set_position(&mut self, p: usize, bit: bool) {
        let mask = 1u64 << (63 - p % 64);
        if bit {
            self.words[p / 64] |= mask;
        } else {
            self.words[p / 64] &= !mask;
        }
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.len()).map(|p| self.position(p)).collect()
    }

    /// True when the cell lies in the winning space of `a` over `b`
    /// (0-based arms).
    #[inline]
    pub fn prefers(&self, a: usize, b: usize) -> bool {
        if a < b {
            !self.position(pair_offset(a, b, self.n))
        } else {
            self.position(pair_offset(b, a, self.n))
        }
    }

    /// 1-based lexicographic rank of the vector.
    pub fn index(&self) -> BigUint {
        let mut idx = BigUint::from(0u32);
        for p in 0..self.len() {
            idx <<= 1u32;
            if self.position(p) {
                idx += 1u32;
            }
        }
        idx + 1u32
    }

    /// Inverse of [`CellVector::index`].
    pub fn from_index(n: usize, index: &BigUint) -> Result<Self> {
        let len = n_pairs(n);
        if *index == BigUint::from(0u32) || index.bits() as usize > len + 1 {
            return Err(Error::Config(format!("cell index {index} out of range")));
        }
        let value = index - 1u32;
        if value.bits() as usize > len {
            return Err(Error::Config(format!("cell index {index} out of range")));
        }
        let mut v = CellVector::zeros(n);
        for p in 0..len {
            v.set_position(p, value.bit((len - 1 - p) as u64));
        }
        Ok(v)
    }

    /// The arm preferred to all others, if the vector has one.
    pub fn best_arm(&self) -> Option<usize> {
        (0..self.n).find(|&k| (0..self.n).all(|j| j == k || self.prefers(k, j)))
    }

    /// Ordered pairs `(winner, loser)` whose winning space contains the cell.
    pub fn membership(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.position(pair_offset(i, j, self.n)) {
                    out.push((j, i));
                } else {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Number of arms this cell ranks `arm` above.
    pub fn wins_of(&self, arm: usize) -> usize {
        (0..self.n).filter(|&j| j != arm && self.prefers(arm, j)).count()
    }
}

impl Ord for CellVector {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n.cmp(&other.n).then_with(|| self.words.cmp(&other.words))
    }
}

impl PartialOrd for CellVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CellVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in 0..self.len() {
            f.write_str(if self.position(p) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for CellVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CellVector({self})")
    }
}

/// Classifies a preference point into its cell.
pub fn classify(point: &[f64], arms: &ArmSet, kind: &UtilityKind) -> Result<CellVector> {
    classify_with_margin(point, arms, kind, BOUNDARY_TOL)
}

fn classify_with_margin(
    point: &[f64],
    arms: &ArmSet,
    kind: &UtilityKind,
    margin: f64,
) -> Result<CellVector> {
    let utils = kind.eval_all(point, arms)?;
    let n = arms.len();
    let mut v = CellVector::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            let gap = utils[i] - utils[j];
            if gap.abs() <= margin || gap.is_nan() {
                return Err(Error::Boundary(i + 1, j + 1));
            }
            v.set_position(pair_offset(i, j, n), gap < 0.0);
        }
    }
    Ok(v)
}

/// An enumerated, order-inducing cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub vector: CellVector,
    pub best_arm: usize,
    /// A point in the cell's interior, when known.
    pub representative: Option<Vec<f64>>,
    /// Prior probability `p_0(C)` of the preference vector lying in the cell.
    pub prior_mass: f64,
}

impl Cell {
    /// The arm ranked second by the cell: the non-best arm with the most
    /// pairwise wins, lowest label on ties.
    pub fn runner_up(&self) -> usize {
        let n = self.vector.n_arms();
        let mut best: Option<(usize, usize)> = None;
        for a in (0..n).filter(|&a| a != self.best_arm) {
            let w = self.vector.wins_of(a);
            if best.is_none_or(|(_, bw)| w > bw) {
                best = Some((a, w));
            }
        }
        best.expect("at least two arms").0
    }
}

/// A user-supplied cell for the explicit backend.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitCell {
    pub vector: CellVector,
    pub representative: Option<Vec<f64>>,
    pub prior_mass: Option<f64>,
}

/// How cells are enumerated.
#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    /// Exact sweep of the unit circle; `d = 2`, linear utility only.
    AngularSweep,
    /// Samples the uniform prior on the unit sphere and keeps every ordering
    /// hit with margin; approximate, `N <= 8`.
    PermutationSampling { samples: usize, seed: u64 },
    /// Caller-provided sign vectors.
    Explicit(Vec<ExplicitCell>),
}

pub const MAX_SAMPLED_ARMS: usize = 8;
pub const DEFAULT_PRIOR_SAMPLES: usize = 100_000;

/// Enumerated cells sorted by index.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTable {
    n: usize,
    cells: Vec<Cell>,
}

impl CellTable {
    /// Builds a table, dropping cells without a best arm and merging
    /// duplicate vectors.
    pub fn from_cells(n: usize, cells: impl IntoIterator<Item = Cell>) -> Result<Self> {
        let mut by_vec: BTreeMap<CellVector, Cell> = BTreeMap::new();
        for c in cells {
            if c.vector.n_arms() != n {
                return Err(Error::Config(format!(
                    "cell {} is for {} arms, table has {n}",
                    c.vector,
                    c.vector.n_arms()
                )));
            }
            match by_vec.get_mut(&c.vector) {
                Some(existing) => existing.prior_mass += c.prior_mass,
                None => {
                    by_vec.insert(c.vector.clone(), c);
                }
            }
        }
        let cells: Vec<Cell> = by_vec.into_values().collect();
        if cells.is_empty() {
            return Err(Error::Config("cell table is empty".into()));
        }
        Ok(CellTable { n, cells })
    }

    /// Every sign vector with a best arm, each with equal mass. Reference
    /// candidate set for CTB with zero initial scores on all cells.
    pub fn exhaustive(n: usize) -> Result<Self> {
        if !(2..=7).contains(&n) {
            return Err(Error::Config(format!(
                "exhaustive tables support 2..=7 arms, got {n}"
            )));
        }
        let mut cells = Vec::new();
        for k in 0..n {
            let free: Vec<(usize, usize)> = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .filter(|&(i, j)| i != k && j != k)
                .collect();
            for mask in 0u64..(1u64 << free.len()) {
                let mut v = CellVector::zeros(n);
                for j in 0..n {
                    if j != k {
                        let (a, b) = (k.min(j), k.max(j));
                        v.set_position(pair_offset(a, b, n), j < k);
                    }
                }
                for (bit, &(i, j)) in free.iter().enumerate() {
                    v.set_position(pair_offset(i, j, n), (mask >> bit) & 1 == 1);
                }
                cells.push(Cell {
                    vector: v,
                    best_arm: k,
                    representative: None,
                    prior_mass: 0.0,
                });
            }
        }
        let mass = 1.0 / cells.len() as f64;
        for c in &mut cells {
            c.prior_mass = mass;
        }
        CellTable::from_cells(n, cells)
    }

    pub fn n_arms(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn get(&self, i: usize) -> &Cell {
        &self.cells[i]
    }

    /// Position of `v` in the table.
    pub fn find(&self, v: &CellVector) -> Option<usize> {
        self.cells.binary_search_by(|c| c.vector.cmp(v)).ok()
    }

    /// `J_k` for every cell.
    pub fn membership_sets(&self) -> Vec<Vec<(usize, usize)>> {
        self.cells.iter().map(|c| c.vector.membership()).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.cells.iter().map(|c| c.prior_mass).sum()
    }
}

/// Enumerates the non-empty, order-inducing cells of an arrangement.
pub fn enumerate_cells(arms: &ArmSet, kind: &UtilityKind, backend: &Backend) -> Result<CellTable> {
    match backend {
        Backend::AngularSweep => angular_sweep(arms, kind),
        Backend::PermutationSampling { samples, seed } => {
            permutation_sampling(arms, kind, *samples, *seed)
        }
        Backend::Explicit(list) => explicit(arms.len(), list),
    }
}

/// Picks the exact sweep when it applies, sampling otherwise.
pub fn default_backend(arms: &ArmSet, kind: &UtilityKind, seed: u64) -> Result<Backend> {
    if kind.is_linear() && arms.dim() == 2 {
        Ok(Backend::AngularSweep)
    } else if arms.len() <= MAX_SAMPLED_ARMS {
        Ok(Backend::PermutationSampling {
            samples: DEFAULT_PRIOR_SAMPLES,
            seed,
        })
    } else {
        Err(Error::Config(format!(
            "no enumeration backend for {} arms in dimension {} ({:?} utility)",
            arms.len(),
            arms.dim(),
            kind
        )))
    }
}

fn angular_sweep(arms: &ArmSet, kind: &UtilityKind) -> Result<CellTable> {
    if !kind.is_linear() || arms.dim() != 2 {
        return Err(Error::Config(
            "angular sweep requires two-dimensional arms and linear utility".into(),
        ));
    }
    let n = arms.len();
    let tau = 2.0 * PI;
    let mut angles = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (arms.feature(i), arms.feature(j));
            let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
            let normal = dy.atan2(dx);
            for off in [0.5 * PI, -0.5 * PI] {
                angles.push((normal + off).rem_euclid(tau));
            }
        }
    }
    angles.sort_by(f64::total_cmp);
    angles.dedup();

    let mut cells = Vec::with_capacity(angles.len());
    for (k, &start) in angles.iter().enumerate() {
        let end = if k + 1 < angles.len() {
            angles[k + 1]
        } else {
            angles[0] + tau
        };
        let width = end - start;
        if width <= 0.0 {
            continue;
        }
        let mid = start + 0.5 * width;
        let rep = vec![mid.cos(), mid.sin()];
        let vector = match classify(&rep, arms, kind) {
            Ok(v) => v,
            // arc too narrow to resolve in floating point
            Err(Error::Boundary(..)) => continue,
            Err(e) => return Err(e),
        };
        let best_arm = vector
            .best_arm()
            .expect("a point always induces a total order");
        cells.push(Cell {
            vector,
            best_arm,
            representative: Some(rep),
            prior_mass: width / tau,
        });
    }
    CellTable::from_cells(n, cells)
}

fn permutation_sampling(
    arms: &ArmSet,
    kind: &UtilityKind,
    samples: usize,
    seed: u64,
) -> Result<CellTable> {
    let n = arms.len();
    if n > MAX_SAMPLED_ARMS {
        return Err(Error::Config(format!(
            "permutation backend supports at most {MAX_SAMPLED_ARMS} arms, got {n}"
        )));
    }
    if samples == 0 {
        return Err(Error::Config("permutation backend needs samples > 0".into()));
    }
    let dim = match kind {
        UtilityKind::Linear => arms.dim(),
        UtilityKind::Custom { pref_dim, .. } => *pref_dim,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits: BTreeMap<CellVector, (usize, Vec<f64>)> = BTreeMap::new();
    let mut valid = 0usize;
    for _ in 0..samples {
        let mut x: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            continue;
        }
        x.iter_mut().for_each(|v| *v /= norm);
        match classify_with_margin(&x, arms, kind, SAMPLE_MARGIN) {
            Ok(v) => {
                valid += 1;
                hits.entry(v).or_insert_with(|| (0, x)).0 += 1;
            }
            Err(Error::Boundary(..)) => {}
            Err(e) => return Err(e),
        }
    }
    if valid == 0 {
        return Err(Error::Config("no sampled point cleared the margin".into()));
    }
    let cells = hits.into_iter().map(|(vector, (count, rep))| Cell {
        best_arm: vector.best_arm().expect("sampled points induce orders"),
        vector,
        representative: Some(rep),
        prior_mass: count as f64 / valid as f64,
    });
    CellTable::from_cells(n, cells)
}

fn explicit(n: usize, list: &[ExplicitCell]) -> Result<CellTable> {
    let uniform = if list.is_empty() {
        0.0
    } else {
        1.0 / list.len() as f64
    };
    let mut cells = Vec::new();
    for c in list {
        if c.vector.n_arms() != n {
            return Err(Error::Config(format!(
                "explicit cell {} does not match {n} arms",
                c.vector
            )));
        }
        let mass = c.prior_mass.unwrap_or(uniform);
        if !(mass >= 0.0 && mass.is_finite()) {
            return Err(Error::Config(format!("invalid prior mass {mass}")));
        }
        if let Some(best_arm) = c.vector.best_arm() {
            cells.push(Cell {
                vector: c.vector.clone(),
                best_arm,
                representative: c.representative.clone(),
                prior_mass: mass,
            });
        }
    }
    CellTable::from_cells(n, cells)
}
