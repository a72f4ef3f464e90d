//! Norms, level sets and quantiles of grid samples under the normalized
//! counting measure (each cell weighs `1 / total`).

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Real};
use crate::spectral::Grid;

/// Number of whole cells a budget `b` buys on a grid of `total` cells.
///
/// The tiny relative and absolute slack absorbs rounding in `b * total` so
/// that budgets given as exact cell fractions snap to the intended count.
pub fn budget_cells(b: f64, total: u64) -> u64 {
    if b <= 0.0 {
        return 0;
    }
    let raw = (b * total as f64 * (1.0 + 1e-12) + 1e-9).floor();
    (raw.max(0.0) as u64).min(total)
}

/// Samples of a function on a [`Grid`], either materialized or reduced on the fly.
#[derive(Clone, Debug)]
pub struct GridFunction<T> {
    grid: Grid,
    data: GridData<T>,
}

#[derive(Clone, Debug)]
pub enum GridData<T> {
    Materialized(Vec<Complex<T>>),
    Streamed(StreamSummary<T>),
}

impl<T: Real> GridFunction<T> {
    pub fn from_values(grid: Grid, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() as u64 != grid.total() {
            return Err(Error::InvalidParameter(format!(
                "{} samples for a grid of {} cells",
                values.len(),
                grid.total()
            )));
        }
        Ok(Self { grid, data: GridData::Materialized(values) })
    }

    pub fn from_real(grid: Grid, values: &[T]) -> Result<Self> {
        Self::from_values(grid, values.iter().map(|&v| Complex::new(v, T::zero())).collect())
    }

    pub fn streamed(grid: Grid, summary: StreamSummary<T>) -> Self {
        Self { grid, data: GridData::Streamed(summary) }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &GridData<T> {
        &self.data
    }

    pub fn values(&self) -> Option<&[Complex<T>]> {
        match &self.data {
            GridData::Materialized(v) => Some(v),
            GridData::Streamed(_) => None,
        }
    }

    pub fn summary(&self) -> Option<&StreamSummary<T>> {
        match &self.data {
            GridData::Streamed(s) => Some(s),
            GridData::Materialized(_) => None,
        }
    }

    pub fn is_materialized(&self) -> bool {
        matches!(self.data, GridData::Materialized(_))
    }

    fn materialized(&self, what: &str) -> Result<&[Complex<T>]> {
        self.values().ok_or_else(|| Error::NotRetained(format!("{what} needs materialized samples")))
    }

    pub fn abs_values(&self) -> Result<Vec<T>> {
        Ok(self.materialized("abs values")?.iter().map(|v| v.norm()).collect())
    }

    pub fn max_abs(&self) -> T {
        match &self.data {
            GridData::Materialized(v) => v.iter().fold(T::zero(), |m, z| m.max(z.norm())),
            GridData::Streamed(s) => s.max_abs(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.max_abs() == T::zero()
    }
}

fn check_exponent<T: Real>(p: T) -> Result<()> {
    if p > T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("exponent p={p} must be positive")))
    }
}

/// `sum |v|^p` over a slice of moduli, with the common exponents special-cased.
fn power_sum<T: Real>(abs: impl Iterator<Item = T>, p: T) -> T {
    let mut acc = CompensatedSum::new();
    if p == T::one() {
        abs.for_each(|a| acc.add(a));
    } else if p == T::lit(2.0) {
        abs.for_each(|a| acc.add(a * a));
    } else {
        abs.for_each(|a| acc.add(a.powf(p)));
    }
    acc.value()
}

fn finish_norm<T: Real>(sum: T, total: u64, p: T) -> T {
    (sum / T::lit(total as f64)).powf(T::one() / p)
}

/// `L_p` (quasi-)norm under normalized measure; `p = inf` gives the maximum modulus.
pub fn lp_norm<T: Real>(g: &GridFunction<T>, p: T) -> Result<T> {
    check_exponent(p)?;
    match &g.data {
        GridData::Materialized(v) => {
            if v.is_empty() {
                return Err(Error::EmptyGrid);
            }
            if p.is_infinite() {
                return Ok(g.max_abs());
            }
            Ok(finish_norm(power_sum(v.iter().map(|z| z.norm()), p), v.len() as u64, p))
        }
        GridData::Streamed(s) => s.lp_norm(p),
    }
}

/// `L_p` norm over the cells outside `mask`, still normalized by the full cell count.
pub fn lp_norm_excluding<T: Real>(g: &GridFunction<T>, p: T, mask: &GridSet) -> Result<T> {
    check_exponent(p)?;
    if mask.grid() != g.grid() {
        return Err(Error::InvalidParameter("mask and samples live on different grids".into()));
    }
    if mask.count() == mask.grid().total() {
        return Err(Error::FullMask);
    }
    let v = g.materialized("set-restricted norm")?;
    let outside = v.iter().zip(mask.mask()).filter(|(_, &m)| !m).map(|(z, _)| z.norm());
    if p.is_infinite() {
        return Ok(outside.fold(T::zero(), T::max));
    }
    Ok(finish_norm(power_sum(outside, p), v.len() as u64, p))
}

/// Total order on `(modulus desc, cell index asc)`.
fn by_value_then_index<T: Real>(abs: &[T]) -> impl Fn(&u32, &u32) -> Ordering + '_ {
    move |&i, &j| abs[j as usize].partial_cmp(&abs[i as usize]).unwrap_or(Ordering::Equal).then(i.cmp(&j))
}

/// The `floor(b * total)` cells of largest modulus; ties go to the lower cell index.
pub fn top_level_set<T: Real>(g: &GridFunction<T>, b: f64) -> Result<GridSet> {
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::InvalidParameter(format!("budget b={b} outside [0, 1]")));
    }
    let abs = g.abs_values()?;
    let total = abs.len() as u64;
    let k = budget_cells(b, total) as usize;
    let mut mask = vec![false; abs.len()];
    if k == abs.len() {
        mask.iter_mut().for_each(|m| *m = true);
    } else if k > 0 {
        let mut idx: Vec<u32> = (0..abs.len() as u32).collect();
        let cmp = by_value_then_index(&abs);
        idx.select_nth_unstable_by(k - 1, &cmp);
        for &i in &idx[..k] {
            mask[i as usize] = true;
        }
    }
    GridSet::from_mask(g.grid().clone(), mask)
}

/// Value `v` with at most a `1 - q` fraction of cells strictly above it and at
/// least a `1 - q` fraction at or above it.
pub fn quantile_abs<T: Real>(g: &GridFunction<T>, q: f64) -> Result<T> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!("quantile q={q} outside [0, 1]")));
    }
    match &g.data {
        GridData::Materialized(v) => {
            let total = v.len() as u64;
            let k = budget_cells(1.0 - q, total).min(total - 1) as usize;
            let mut abs: Vec<T> = v.iter().map(|z| z.norm()).collect();
            let (_, kth, _) =
                abs.select_nth_unstable_by(k, |a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
            Ok(*kth)
        }
        GridData::Streamed(s) => {
            let k = budget_cells(1.0 - q, s.cells()).min(s.cells() - 1);
            s.kth_largest(k)
        }
    }
}

/// Boolean mask over the cells of a grid: a cell-union set `B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridSet {
    grid: Grid,
    mask: Vec<bool>,
    count: u64,
}

impl GridSet {
    pub fn empty(grid: Grid) -> Self {
        let n = grid.total() as usize;
        Self { grid, mask: vec![false; n], count: 0 }
    }

    pub fn from_mask(grid: Grid, mask: Vec<bool>) -> Result<Self> {
        if mask.len() as u64 != grid.total() {
            return Err(Error::InvalidParameter("mask length does not match grid".into()));
        }
        let count = mask.iter().filter(|&&m| m).count() as u64;
        Ok(Self { grid, mask, count })
    }

    pub fn from_cells(grid: Grid, cells: impl IntoIterator<Item = u64>) -> Result<Self> {
        let mut mask = vec![false; grid.total() as usize];
        for c in cells {
            *mask.get_mut(c as usize).ok_or_else(|| Error::InvalidParameter(format!("cell {c} off grid")))? = true;
        }
        Self::from_mask(grid, mask)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, cell: u64) -> bool {
        self.mask[cell as usize]
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// `|B|`: exactly `count / total`.
    pub fn measure(&self) -> f64 {
        self.count as f64 / self.grid.total() as f64
    }

    pub fn complement(&self) -> Self {
        let mask: Vec<bool> = self.mask.iter().map(|m| !m).collect();
        Self { grid: self.grid.clone(), count: self.grid.total() - self.count, mask }
    }

    /// Runs of set cells as `(start, length)`.
    pub fn runs(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.mask.len() {
            if self.mask[i] {
                let start = i;
                while i < self.mask.len() && self.mask[i] {
                    i += 1;
                }
                out.push((start as u64, (i - start) as u64));
            } else {
                i += 1;
            }
        }
        out
    }

    /// First line `grid G_1xG_2...`, then one `start length` line per run.
    pub fn to_text(&self) -> String {
        let mut s = format!("grid {}\n", self.grid.describe());
        for (start, len) in self.runs() {
            let _ = writeln!(s, "{start} {len}");
        }
        s
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(self.to_text().as_bytes())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty set file".into()))?
            .map_err(|e| Error::Parse(e.to_string()))?;
        let sizes = header
            .strip_prefix("grid ")
            .ok_or_else(|| Error::Parse("missing grid header".into()))?
            .split('x')
            .map(|t| t.trim().parse::<usize>().map_err(|e| Error::Parse(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let grid = Grid::new(&sizes)?;
        let mut mask = vec![false; grid.total() as usize];
        for line in lines {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            let nums: Vec<u64> = line
                .split_whitespace()
                .map(|t| t.parse::<u64>().map_err(|e| Error::Parse(e.to_string())))
                .collect::<Result<_>>()?;
            match nums.as_slice() {
                [] => continue,
                [start, len] if start + len <= grid.total() => {
                    mask[*start as usize..(start + len) as usize].iter_mut().for_each(|m| *m = true)
                }
                _ => return Err(Error::Parse(format!("bad run line `{line}`"))),
            }
        }
        Self::from_mask(grid, mask)
    }
}

/// Modulus with multiplicity, ordered by modulus.
#[derive(Clone, Copy, Debug)]
struct Weighted<T>(T, u64);

impl<T: Real> PartialEq for Weighted<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Real> Eq for Weighted<T> {}
impl<T: Real> PartialOrd for Weighted<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Weighted<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).unwrap_or(Ordering::Equal)
    }
}

/// Largest moduli seen so far, holding at least `capacity` cells when possible.
#[derive(Clone, Debug)]
pub struct TopK<T> {
    capacity: u64,
    held: u64,
    heap: BinaryHeap<Reverse<Weighted<T>>>,
}

impl<T: Real> TopK<T> {
    pub fn new(capacity: u64) -> Self {
        Self { capacity, held: 0, heap: BinaryHeap::new() }
    }

    #[inline]
    pub fn push(&mut self, v: T, mult: u64) {
        if self.capacity == 0 || mult == 0 {
            return;
        }
        if self.held >= self.capacity {
            if let Some(Reverse(min)) = self.heap.peek() {
                if v <= min.0 {
                    return;
                }
            }
        }
        self.heap.push(Reverse(Weighted(v, mult)));
        self.held += mult;
        while let Some(Reverse(min)) = self.heap.peek() {
            if self.held - min.1 >= self.capacity {
                self.held -= min.1;
                self.heap.pop();
            } else {
                break;
            }
        }
    }

    pub fn held(&self) -> u64 {
        self.held
    }

    /// Entries in decreasing order of modulus.
    pub fn sorted_desc(&self) -> Vec<(T, u64)> {
        let mut v: Vec<(T, u64)> = self.heap.iter().map(|Reverse(w)| (w.0, w.1)).collect();
        v.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
        v
    }
}

/// What a streamed evaluation keeps.
#[derive(Clone, Debug, PartialEq)]
pub struct Retain<T> {
    /// Finite exponents whose power sums are accumulated.
    pub exponents: Vec<T>,
    /// Number of largest moduli kept (with multiplicity).
    pub top_k: u64,
}

impl<T: Real> Default for Retain<T> {
    fn default() -> Self {
        Self { exponents: vec![T::one(), T::lit(2.0)], top_k: 0 }
    }
}

/// Reductions retained from a function too large to materialize.
#[derive(Clone, Debug)]
pub struct StreamSummary<T> {
    cells: u64,
    max_abs: T,
    sums: Vec<(T, CompensatedSum<T>)>,
    top: TopK<T>,
}

impl<T: Real> StreamSummary<T> {
    pub fn new(retain: &Retain<T>) -> Self {
        Self {
            cells: 0,
            max_abs: T::zero(),
            sums: retain.exponents.iter().map(|&p| (p, CompensatedSum::new())).collect(),
            top: TopK::new(retain.top_k),
        }
    }

    /// Feeds moduli that each stand for `mult` cells.
    pub fn push_chunk(&mut self, abs: &[T], mult: u64) {
        if abs.is_empty() {
            return;
        }
        self.cells += abs.len() as u64 * mult;
        let w = T::lit(mult as f64);
        let mut m = self.max_abs;
        for &a in abs {
            m = m.max(a);
        }
        self.max_abs = m;
        for (p, acc) in self.sums.iter_mut() {
            let mut s = T::zero();
            if *p == T::one() {
                for &a in abs {
                    s = s + a;
                }
            } else if *p == T::lit(2.0) {
                for &a in abs {
                    s = s + a * a;
                }
            } else {
                for &a in abs {
                    s = s + a.powf(*p);
                }
            }
            acc.add(s * w);
        }
        if self.top.capacity > 0 {
            for &a in abs {
                self.top.push(a, mult);
            }
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.cells += other.cells;
        self.max_abs = self.max_abs.max(other.max_abs);
        for ((p, a), (q, b)) in self.sums.iter_mut().zip(&other.sums) {
            debug_assert!(p == q);
            a.merge(b);
        }
        for (v, m) in other.top.sorted_desc() {
            self.top.push(v, m);
        }
    }

    pub fn cells(&self) -> u64 {
        self.cells
    }

    pub fn max_abs(&self) -> T {
        self.max_abs
    }

    pub fn top(&self) -> &TopK<T> {
        &self.top
    }

    pub fn power_sum(&self, p: T) -> Option<T> {
        self.sums.iter().find(|(q, _)| *q == p).map(|(_, s)| s.value())
    }

    pub fn lp_norm(&self, p: T) -> Result<T> {
        if self.cells == 0 {
            return Err(Error::EmptyGrid);
        }
        if p.is_infinite() {
            return Ok(self.max_abs);
        }
        let s = self.power_sum(p).ok_or_else(|| Error::NotRetained(format!("L_{p} norm")))?;
        Ok(finish_norm(s, self.cells, p))
    }

    /// Modulus of the cell of rank `k` (0-based) in decreasing order.
    pub fn kth_largest(&self, k: u64) -> Result<T> {
        let mut seen = 0;
        for (v, m) in self.top.sorted_desc() {
            seen += m;
            if seen > k {
                return Ok(v);
            }
        }
        Err(Error::NotRetained(format!("rank {k} beyond the {} retained maxima", self.top.held)))
    }

    /// `(sum of |v|^p over the k largest cells, modulus of rank k)`.
    pub fn top_split(&self, k: u64, p: T) -> Result<(T, T)> {
        let mut taken = 0u64;
        let mut acc = CompensatedSum::new();
        for (v, m) in self.top.sorted_desc() {
            if taken == k {
                return Ok((acc.value(), v));
            }
            let t = m.min(k - taken);
            if !p.is_infinite() {
                acc.add(v.powf(p) * T::lit(t as f64));
            }
            taken += t;
            if t < m {
                return Ok((acc.value(), v));
            }
        }
        if taken == self.cells {
            return Ok((acc.value(), T::zero()));
        }
        Err(Error::NotRetained(format!("need {} largest cells, {} retained", k + 1, self.top.held)))
    }
}
