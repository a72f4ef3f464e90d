//! Frequency index sets: hyperbolic crosses, dyadic blocks, step hyperbolic
//! crosses and their layers, and the residue families used by the Riesz
//! product construction.
//!
//! Every set is stored as a sorted vector of [`MultiIndex`] values, so
//! iteration is lexicographic on the components.

use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;
/// Largest supported hyperbolic-cross parameter `N`.
pub const MAX_CROSS_N: u64 = 1 << 16;
/// Largest supported step-cross level `n`.
pub const MAX_LEVEL: u32 = 20;

/// Integer frequency vector `k = (k_1, ..., k_d)` with `d <= 3`.
///
/// Unused trailing slots are kept at zero so that derived equality, hashing
/// and ordering only ever see the meaningful components.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    k: [i32; MAX_DIM],
    dim: u8,
}

impl MultiIndex {
    pub fn new(components: &[i32]) -> Result<Self> {
        let d = components.len();
        if d == 0 || d > MAX_DIM {
            return Err(Error::UnsupportedDimension(d));
        }
        let mut k = [0; MAX_DIM];
        k[..d].copy_from_slice(components);
        Ok(Self { k, dim: d as u8 })
    }

    /// Builds an index from a slice already known to have `1..=3` entries.
    pub(crate) fn from_slice(components: &[i32]) -> Self {
        Self::new(components).expect("index dimension in 1..=3")
    }

    pub fn zero(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim));
        Self { k: [0; MAX_DIM], dim: dim as u8 }
    }

    pub fn one_dim(k: i32) -> Self {
        Self::from_slice(&[k])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn components(&self) -> &[i32] {
        &self.k[..self.dim as usize]
    }

    #[inline]
    pub fn get(&self, axis: usize) -> i32 {
        self.k[axis]
    }

    pub fn neg(&self) -> Self {
        let mut out = *self;
        for c in out.k.iter_mut() {
            *c = -*c;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for (c, o) in out.k.iter_mut().zip(other.k.iter()) {
            *c += o;
        }
        out
    }

    /// `prod_j max(1, |k_j|)`.
    pub fn hyperbolic_size(&self) -> u64 {
        self.components().iter().map(|&c| (c.unsigned_abs() as u64).max(1)).product()
    }

    /// `sum_j level(k_j)`: the smallest `n` with `k` in the step cross `Q_n`.
    pub fn total_level(&self) -> u32 {
        self.components().iter().map(|&c| dyadic_level(c as i64)).sum()
    }

    pub fn to_i64_vec(&self) -> Vec<i64> {
        self.components().iter().map(|&c| c as i64).collect()
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.components())
    }
}

/// Dyadic level of a frequency: `0` for `k = 0`, otherwise the `s >= 1` with
/// `2^{s-1} <= |k| < 2^s`.
#[inline]
pub fn dyadic_level(k: i64) -> u32 {
    64 - k.unsigned_abs().leading_zeros()
}

/// What an [`IndexSet`] was built as; also carries the defining predicate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IndexSetLabel {
    /// `Gamma(N)`.
    HyperbolicCross { n: u64 },
    /// `rho(s)`.
    DyadicBlock { s: Vec<u32> },
    /// `rho'(s)`, the widened block.
    WideBlock { s: Vec<u32> },
    /// `Q_n`.
    StepCross { n: u32 },
    /// `Delta Q_n = Q_n \ Q_{n-1}`.
    Layer { n: u32 },
    Custom(String),
}

impl IndexSetLabel {
    /// Evaluates the defining predicate; `None` for custom sets.
    pub fn admits(&self, k: &MultiIndex) -> Option<bool> {
        Some(match self {
            IndexSetLabel::HyperbolicCross { n } => k.hyperbolic_size() <= *n,
            IndexSetLabel::DyadicBlock { s } => s.len() == k.dim()
                && k.components().iter().zip(s).all(|(&c, &sj)| in_shell(c as i64, sj)),
            IndexSetLabel::WideBlock { s } => s.len() == k.dim()
                && k.components().iter().zip(s).all(|(&c, &sj)| in_wide_shell(c as i64, sj)),
            IndexSetLabel::StepCross { n } => k.total_level() <= *n,
            IndexSetLabel::Layer { n } => k.total_level() == *n,
            IndexSetLabel::Custom(_) => return None,
        })
    }
}

impl fmt::Display for IndexSetLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexSetLabel::HyperbolicCross { n } => write!(f, "Gamma({n})"),
            IndexSetLabel::DyadicBlock { s } => write!(f, "rho({s:?})"),
            IndexSetLabel::WideBlock { s } => write!(f, "rho'({s:?})"),
            IndexSetLabel::StepCross { n } => write!(f, "Q_{n}"),
            IndexSetLabel::Layer { n } => write!(f, "DeltaQ_{n}"),
            IndexSetLabel::Custom(tag) => write!(f, "{tag}"),
        }
    }
}

/// `[2^{s-1}] <= |k| < 2^s` with `[.]` the integer part.
#[inline]
fn in_shell(k: i64, s: u32) -> bool {
    let a = k.unsigned_abs();
    let lo = if s == 0 { 0 } else { 1u64 << (s - 1) };
    lo <= a && a < (1u64 << s)
}

/// `[2^{s-2}] <= |k| < 2^s`.
#[inline]
fn in_wide_shell(k: i64, s: u32) -> bool {
    let a = k.unsigned_abs();
    let lo = if s < 2 { 0 } else { 1u64 << (s - 2) };
    lo <= a && a < (1u64 << s)
}

/// Values of the univariate shell `[lo, 2^s)` with both signs, ascending.
fn signed_shell(lo: u64, s: u32) -> Vec<i32> {
    let hi = 1i64 << s;
    let lo = lo as i64;
    let mut out: Vec<i32> = (lo.max(1)..hi).rev().map(|v| -(v as i32)).collect();
    if lo == 0 {
        out.push(0);
    }
    out.extend((lo.max(1)..hi).map(|v| v as i32));
    out
}

/// Finite set of frequency vectors of a common dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexSet {
    dim: usize,
    members: Vec<MultiIndex>,
    label: IndexSetLabel,
}

impl IndexSet {
    /// Builds a set from arbitrary members (deduplicated, sorted).
    pub fn from_members<I>(dim: usize, members: I, label: IndexSetLabel) -> Result<Self>
    where
        I: IntoIterator<Item = MultiIndex>,
    {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut members: Vec<MultiIndex> = members.into_iter().collect();
        if let Some(bad) = members.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch(dim, bad.dim()));
        }
        members.sort_unstable();
        members.dedup();
        Ok(Self { dim, members, label })
    }

    fn from_sorted(dim: usize, mut members: Vec<MultiIndex>, label: IndexSetLabel) -> Self {
        members.sort_unstable();
        members.dedup();
        Self { dim, members, label }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &IndexSetLabel {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[MultiIndex] {
        &self.members
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MultiIndex> {
        self.members.iter()
    }

    pub fn contains(&self, k: &MultiIndex) -> bool {
        self.members.binary_search(k).is_ok()
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.members.iter().all(|k| other.contains(k))
    }

    pub fn difference(&self, other: &IndexSet, label: IndexSetLabel) -> IndexSet {
        let members = self.members.iter().filter(|k| !other.contains(k)).copied().collect();
        IndexSet { dim: self.dim, members, label }
    }

    /// Largest `|k_axis|` over the set (0 for an empty set).
    pub fn max_degree(&self, axis: usize) -> i64 {
        self.members.iter().map(|k| (k.get(axis) as i64).abs()).max().unwrap_or(0)
    }

    /// Writes one index per line, components separated by single spaces.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for k in &self.members {
            let line: Vec<String> = k.components().iter().map(|c| c.to_string()).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    /// Parses the format produced by [`IndexSet::write_text`].
    pub fn read_text<R: BufRead>(input: R, tag: &str) -> Result<Self> {
        let mut members = Vec::new();
        let mut dim = None;
        for (lineno, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let comps = line
                .split_whitespace()
                .map(|t| t.parse::<i32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            match dim {
                None => dim = Some(comps.len()),
                Some(d) if d != comps.len() => return Err(Error::DimensionMismatch(d, comps.len())),
                _ => {}
            }
            members.push(MultiIndex::new(&comps)?);
        }
        let dim = dim.ok_or_else(|| Error::Parse("empty index set file".into()))?;
        IndexSet::from_members(dim, members, IndexSetLabel::Custom(tag.to_string()))
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        Err(Error::UnsupportedDimension(d))
    } else {
        Ok(())
    }
}

/// `Gamma(N) = { k : prod_j max(1, |k_j|) <= N }`.
pub fn hyperbolic_cross(n: u64, d: usize) -> Result<IndexSet> {
    check_dim(d)?;
    if n == 0 || n > MAX_CROSS_N {
        return Err(Error::InvalidParameter(format!("N={n} outside 1..={MAX_CROSS_N}")));
    }
    fn rec(budget: u64, depth: usize, d: usize, prefix: &mut Vec<i32>, out: &mut Vec<MultiIndex>) {
        if depth == d {
            out.push(MultiIndex::from_slice(prefix));
            return;
        }
        let b = budget as i64;
        for k in -b..=b {
            let kbar = k.unsigned_abs().max(1);
            prefix.push(k as i32);
            rec(budget / kbar, depth + 1, d, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, 0, d, &mut Vec::with_capacity(d), &mut out);
    Ok(IndexSet::from_sorted(d, out, IndexSetLabel::HyperbolicCross { n }))
}

fn product_set(shells: &[Vec<i32>]) -> Vec<MultiIndex> {
    let mut out = vec![Vec::<i32>::new()];
    for shell in shells {
        let mut next = Vec::with_capacity(out.len() * shell.len());
        for prefix in &out {
            for &v in shell {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out.iter().map(|c| MultiIndex::from_slice(c)).collect()
}

/// Dyadic block `rho(s) = { k : [2^{s_j-1}] <= |k_j| < 2^{s_j} }`.
///
/// Taken sign-symmetric (a subset of `Z^d`, not `Z^d_+`).
pub fn dyadic_block(s: &[u32]) -> Result<IndexSet> {
    check_dim(s.len())?;
    if s.iter().any(|&v| v > MAX_LEVEL + 2) {
        return Err(Error::InvalidParameter(format!("block level {s:?} exceeds cap")));
    }
    let shells: Vec<Vec<i32>> =
        s.iter().map(|&sj| signed_shell(if sj == 0 { 0 } else { 1 << (sj - 1) }, sj)).collect();
    Ok(IndexSet::from_sorted(s.len(), product_set(&shells), IndexSetLabel::DyadicBlock { s: s.to_vec() }))
}

/// Widened block `rho'(s) = { m : [2^{s_i-2}] <= |m_i| < 2^{s_i} }`; contains `rho(s)`.
pub fn dyadic_block_wide(s: &[u32]) -> Result<IndexSet> {
    check_dim(s.len())?;
    if s.iter().any(|&v| v > MAX_LEVEL + 2) {
        return Err(Error::InvalidParameter(format!("block level {s:?} exceeds cap")));
    }
    let shells: Vec<Vec<i32>> =
        s.iter().map(|&sj| signed_shell(if sj < 2 { 0 } else { 1 << (sj - 2) }, sj)).collect();
    Ok(IndexSet::from_sorted(s.len(), product_set(&shells), IndexSetLabel::WideBlock { s: s.to_vec() }))
}

/// Enumerates every `k` whose per-axis levels satisfy `accept(sum of levels)`,
/// with the total level bounded by `max_total`.
fn enumerate_by_level(d: usize, max_total: u32, accept: impl Fn(u32) -> bool) -> Vec<MultiIndex> {
    fn rec(
        d: usize,
        depth: usize,
        used: u32,
        max_total: u32,
        prefix: &mut Vec<i32>,
        accept: &dyn Fn(u32) -> bool,
        out: &mut Vec<MultiIndex>,
    ) {
        if depth == d {
            if accept(used) {
                out.push(MultiIndex::from_slice(prefix));
            }
            return;
        }
        for level in 0..=(max_total - used) {
            let lo: i64 = if level == 0 { 0 } else { 1 << (level - 1) };
            let hi: i64 = 1 << level;
            for a in lo..hi {
                let signs: &[i64] = if a == 0 { &[1] } else { &[1, -1] };
                for &sg in signs {
                    prefix.push((sg * a) as i32);
                    rec(d, depth + 1, used + level, max_total, prefix, accept, out);
                    prefix.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    rec(d, 0, 0, max_total, &mut Vec::with_capacity(d), &accept, &mut out);
    out
}

/// Step hyperbolic cross `Q_n = union_{||s||_1 <= n} rho(s)`.
pub fn step_hyperbolic(n: u32, d: usize) -> Result<IndexSet> {
    check_dim(d)?;
    if n > MAX_LEVEL {
        return Err(Error::InvalidParameter(format!("level n={n} exceeds cap {MAX_LEVEL}")));
    }
    let members = enumerate_by_level(d, n, |_| true);
    Ok(IndexSet::from_sorted(d, members, IndexSetLabel::StepCross { n }))
}

/// Hyperbolic layer `Delta Q_n = Q_n \ Q_{n-1} = union_{||s||_1 = n} rho(s)`.
pub fn hyperbolic_layer(n: u32, d: usize) -> Result<IndexSet> {
    check_dim(d)?;
    if n == 0 || n > MAX_LEVEL {
        return Err(Error::InvalidParameter(format!("layer n={n} outside 1..={MAX_LEVEL}")));
    }
    let members = enumerate_by_level(d, n, |total| total == n);
    Ok(IndexSet::from_sorted(d, members, IndexSetLabel::Layer { n }))
}

/// `H_n(a, b)`: the level vectors `s = (s_1, s_2)` on layer `n` with
/// `s_1, s_2 >= a` and `s_1` in the progression `a*l + b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidueFamily {
    pub n: u32,
    pub a: u32,
    pub b: u32,
    /// Ordered by increasing `s_1`.
    pub members: Vec<[u32; 2]>,
}

impl ResidueFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

pub fn layer_residue_family(n: u32, a: u32, b: u32) -> Result<ResidueFamily> {
    if a == 0 || b >= a {
        return Err(Error::InvalidParameter(format!("need a >= 1 and 0 <= b < a, got a={a}, b={b}")));
    }
    let members = (a..=n.saturating_sub(a))
        .filter(|s1| s1 % a == b)
        .map(|s1| [s1, n - s1])
        .collect();
    Ok(ResidueFamily { n, a, b, members })
}
