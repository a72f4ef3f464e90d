use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::indexsets::{dyadic_level, MultiIndex};
use crate::measure::{Retain, StreamSummary};
use crate::scalar::Real;

use super::eval::fft_nd;
use super::{Grid, TrigPoly};

/// Sorted, disjoint, inclusive integer intervals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalUnion(Vec<(i64, i64)>);

impl IntervalUnion {
    pub fn point(k: i64) -> Self {
        Self(vec![(k, k)])
    }

    pub fn from_sorted_points(points: impl IntoIterator<Item = i64>) -> Self {
        let mut out: Vec<(i64, i64)> = Vec::new();
        for k in points {
            match out.last_mut() {
                Some((_, hi)) if k <= *hi + 1 => *hi = (*hi).max(k),
                _ => out.push((k, k)),
            }
        }
        Self(out)
    }

    fn normalize(mut v: Vec<(i64, i64)>) -> Self {
        v.sort_unstable();
        let mut out: Vec<(i64, i64)> = Vec::new();
        for (lo, hi) in v {
            match out.last_mut() {
                Some((_, h)) if lo <= *h + 1 => *h = (*h).max(hi),
                _ => out.push((lo, hi)),
            }
        }
        Self(out)
    }

    pub fn intervals(&self) -> &[(i64, i64)] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `{a + b : a in self, b in other}`.
    pub fn minkowski(&self, other: &Self) -> Self {
        let mut v = Vec::with_capacity(self.0.len() * other.0.len());
        for &(a0, a1) in &self.0 {
            for &(b0, b1) in &other.0 {
                v.push((a0 + b0, a1 + b1));
            }
        }
        Self::normalize(v)
    }

    pub fn contains(&self, k: i64) -> bool {
        self.0.iter().any(|&(lo, hi)| lo <= k && k <= hi)
    }

    /// Smallest `|k|` over the union.
    pub fn min_abs(&self) -> Option<i64> {
        self.0
            .iter()
            .map(|&(lo, hi)| if lo <= 0 && 0 <= hi { 0 } else { lo.abs().min(hi.abs()) })
            .min()
    }

    pub fn max_abs(&self) -> Option<i64> {
        self.0.iter().map(|&(lo, hi)| lo.abs().max(hi.abs())).max()
    }

    /// Smallest dyadic level of any member.
    pub fn min_level(&self) -> Option<u32> {
        self.min_abs().map(dyadic_level)
    }

    pub fn members(&self) -> impl Iterator<Item = i64> + '_ {
        self.0.iter().flat_map(|&(lo, hi)| lo..=hi)
    }
}

/// `weight * prod_axis prod_factor factor(x_axis)`.
#[derive(Clone, Debug)]
pub struct TensorTerm<T> {
    pub weight: Complex<T>,
    /// Per axis, univariate factors multiplied together; an empty list is `1`.
    pub factors: Vec<Vec<Arc<TrigPoly<T>>>>,
}

impl<T: Real> TensorTerm<T> {
    pub fn new(weight: Complex<T>, factors: Vec<Vec<Arc<TrigPoly<T>>>>) -> Self {
        Self { weight, factors }
    }

    /// Rank-one term with one factor per axis.
    pub fn simple(weight: Complex<T>, axes: Vec<Arc<TrigPoly<T>>>) -> Self {
        Self { weight, factors: axes.into_iter().map(|f| vec![f]).collect() }
    }

    /// Support of the axis function, computed from the factor supports alone.
    pub fn axis_support(&self, axis: usize) -> IntervalUnion {
        let mut acc = IntervalUnion::point(0);
        for f in &self.factors[axis] {
            let s = IntervalUnion::from_sorted_points(f.iter().map(|(k, _)| k.get(0) as i64));
            acc = acc.minkowski(&s);
        }
        acc
    }

    /// The expanded axis function.
    pub fn axis_poly(&self, axis: usize, cap: usize) -> Result<TrigPoly<T>> {
        let mut acc = TrigPoly::one(1);
        for f in &self.factors[axis] {
            acc = acc.multiply_capped(f, cap)?;
        }
        Ok(acc)
    }

    pub fn axis_degree(&self, axis: usize) -> i64 {
        self.factors[axis].iter().map(|f| f.max_degree(0)).sum()
    }

    /// Lower bound on `sum_j level(k_j)` over the term's support.
    pub fn min_total_level(&self) -> Option<u32> {
        (0..self.factors.len()).map(|a| self.axis_support(a).min_level()).sum()
    }
}

/// Sum of tensor-product terms: `sum_r w_r u_r(x_1) v_r(x_2) ...`.
///
/// Products of univariate factors are kept lazy; grid evaluation multiplies
/// sampled values instead of expanding spectra.
#[derive(Clone, Debug)]
pub struct SeparablePoly<T> {
    dim: usize,
    terms: Vec<TensorTerm<T>>,
}

fn ptr_key<T>(fs: &[Arc<TrigPoly<T>>]) -> Vec<usize> {
    let mut v: Vec<usize> = fs.iter().map(|f| Arc::as_ptr(f) as usize).collect();
    v.sort_unstable();
    v
}

impl<T: Real> SeparablePoly<T> {
    pub fn new(dim: usize) -> Self {
        assert!((1..=crate::indexsets::MAX_DIM).contains(&dim));
        Self { dim, terms: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[TensorTerm<T>] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, term: TensorTerm<T>) {
        assert_eq!(term.factors.len(), self.dim, "term dimension mismatch");
        if let Some(f) = term.factors.iter().flatten().find(|f| f.dim() != 1) {
            panic!("axis factor has dimension {}", f.dim());
        }
        self.terms.push(term);
    }

    /// `self + s * other`.
    pub fn extend_scaled(&mut self, other: &SeparablePoly<T>, s: Complex<T>) {
        assert_eq!(self.dim, other.dim);
        for t in &other.terms {
            self.terms.push(TensorTerm { weight: t.weight * s, factors: t.factors.clone() });
        }
    }

    pub fn scaled(&self, s: Complex<T>) -> Self {
        let mut out = Self::new(self.dim);
        out.extend_scaled(self, s);
        out
    }

    pub fn degrees(&self) -> Vec<i64> {
        (0..self.dim).map(|a| self.terms.iter().map(|t| t.axis_degree(a)).max().unwrap_or(0)).collect()
    }

    pub fn eval(&self, x: &[T]) -> Complex<T> {
        let mut cache: HashMap<usize, Complex<T>> = HashMap::new();
        let mut acc = Complex::default();
        for t in &self.terms {
            let mut v = t.weight;
            for (a, fs) in t.factors.iter().enumerate() {
                for f in fs {
                    let key = (Arc::as_ptr(f) as usize) ^ a.rotate_left(61);
                    v = v * *cache.entry(key).or_insert_with(|| f.eval(&[x[a]]));
                }
            }
            acc += v;
        }
        acc
    }

    /// Expanded axis functions of every term (shared expansions are reused).
    pub fn expand_axes(&self, cap: usize) -> Result<Vec<Vec<Arc<TrigPoly<T>>>>> {
        let mut memo: HashMap<Vec<usize>, Arc<TrigPoly<T>>> = HashMap::new();
        let mut out = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let mut axes = Vec::with_capacity(self.dim);
            for a in 0..self.dim {
                let key = ptr_key(&t.factors[a]);
                let p = match memo.get(&key) {
                    Some(p) => p.clone(),
                    None => {
                        let p = Arc::new(t.axis_poly(a, cap)?);
                        memo.insert(key, p.clone());
                        p
                    }
                };
                axes.push(p);
            }
            out.push(axes);
        }
        Ok(out)
    }

    /// Coefficient at `k` given the output of [`SeparablePoly::expand_axes`].
    pub fn coefficient_with(&self, expanded: &[Vec<Arc<TrigPoly<T>>>], k: &MultiIndex) -> Complex<T> {
        let mut acc = Complex::default();
        for (t, axes) in self.terms.iter().zip(expanded) {
            let mut v = t.weight;
            for (a, p) in axes.iter().enumerate() {
                v = v * p.coeff(&MultiIndex::one_dim(k.get(a)));
                if v == Complex::default() {
                    break;
                }
            }
            acc += v;
        }
        acc
    }

    /// Expands into a sparse polynomial, failing once the support passes `cap`.
    pub fn to_trig_poly(&self, cap: usize) -> Result<TrigPoly<T>> {
        let expanded = self.expand_axes(cap)?;
        let mut acc: BTreeMap<MultiIndex, Complex<T>> = BTreeMap::new();
        for (t, axes) in self.terms.iter().zip(&expanded) {
            let refs: Vec<&TrigPoly<T>> = axes.iter().map(|p| p.as_ref()).collect();
            let prod = TrigPoly::tensor(&refs)?;
            for (k, c) in prod.iter() {
                *acc.entry(*k).or_insert_with(Complex::default) += *c * t.weight;
                if acc.len() > cap {
                    return Err(Error::SupportCap { size: acc.len(), cap });
                }
            }
        }
        TrigPoly::from_terms(self.dim, acc)
    }

    fn all_factors(&self) -> impl Iterator<Item = &Arc<TrigPoly<T>>> {
        self.terms.iter().flat_map(|t| t.factors.iter().flatten())
    }

    /// Reductions of `|f|` over every node of a bivariate (or univariate) grid.
    ///
    /// Terms sharing their last-axis factors are merged first, so the cost is
    /// `(number of distinct last-axis functions) x cells`. Real-valued and even
    /// factors trigger a real-arithmetic path over a quarter of the grid.
    pub fn grid_summary(&self, grid: &Grid, retain: &Retain<T>) -> Result<StreamSummary<T>> {
        if grid.dim() != self.dim {
            return Err(Error::DimensionMismatch(self.dim, grid.dim()));
        }
        if self.dim > 2 {
            return Err(Error::Unsupported("separable grid reduction for d > 2".into()));
        }
        let tol = T::lit(1e-12);
        let real = self.all_factors().all(|f| f.is_real_valued(tol * (T::one() + coeff_scale(f))));
        let even = self.all_factors().all(|f| f.is_even(tol * (T::one() + coeff_scale(f))))
            && grid.sizes().iter().all(|&g| g % 2 == 0 || g == 1);

        let mut samples: HashMap<(usize, usize), Arc<Vec<Complex<T>>>> = HashMap::new();
        let mut axis_values = |t: &TensorTerm<T>, a: usize| -> Vec<Complex<T>> {
            let g = grid.size(a);
            let mut v = vec![Complex::new(T::one(), T::zero()); g];
            for f in &t.factors[a] {
                let key = (Arc::as_ptr(f) as usize, a);
                let s = samples.entry(key).or_insert_with(|| Arc::new(sample_1d(f, g))).clone();
                v.iter_mut().zip(s.iter()).for_each(|(x, y)| *x = *x * y);
            }
            v
        };

        if self.dim == 1 {
            let g = grid.size(0);
            let mut vals = vec![Complex::<T>::default(); g];
            for t in &self.terms {
                let u = axis_values(t, 0);
                vals.iter_mut().zip(&u).for_each(|(x, y)| *x += t.weight * y);
            }
            let abs: Vec<T> = vals.iter().map(|v| v.norm()).collect();
            let mut s = StreamSummary::new(retain);
            s.push_chunk(&abs, 1);
            return Ok(s);
        }

        // Group by the last-axis factor list; fold weights and first-axis values.
        let g1 = grid.size(0);
        let mut order: Vec<Vec<usize>> = Vec::new();
        let mut groups: HashMap<Vec<usize>, (Vec<Complex<T>>, Vec<Complex<T>>)> = HashMap::new();
        for t in &self.terms {
            let key = ptr_key(&t.factors[1]);
            let u = axis_values(t, 0);
            let entry = groups.entry(key.clone()).or_insert_with(|| {
                order.push(key.clone());
                (vec![Complex::default(); g1], Vec::new())
            });
            if entry.1.is_empty() {
                entry.1 = axis_values(t, 1);
            }
            entry.0.iter_mut().zip(&u).for_each(|(x, y)| *x += t.weight * y);
        }
        let rank: Vec<(Vec<Complex<T>>, Vec<Complex<T>>)> =
            order.iter().map(|k| groups.remove(k).expect("group present")).collect();
        Ok(reduce_rank(grid, &rank, real, even, retain))
    }
}

fn coeff_scale<T: Real>(f: &TrigPoly<T>) -> T {
    f.iter().fold(T::zero(), |m, (_, c)| m.max(c.norm()))
}

fn sample_1d<T: Real>(f: &TrigPoly<T>, g: usize) -> Vec<Complex<T>> {
    let mut data = vec![Complex::<T>::default(); g];
    for (k, c) in f.iter() {
        data[(k.get(0) as i64).rem_euclid(g as i64) as usize] += c;
    }
    fft_nd(&mut data, &[g], true);
    data
}

/// Node indices to visit on one axis, with multiplicities.
fn axis_range(g: usize, even: bool) -> Vec<(usize, u64)> {
    if even && g >= 2 {
        (0..=g / 2).map(|i| (i, if i == 0 || i == g / 2 { 1 } else { 2 })).collect()
    } else {
        (0..g).map(|i| (i, 1)).collect()
    }
}

const COLUMN_CHUNK: usize = 4096;

fn reduce_rank<T: Real>(
    grid: &Grid,
    rank: &[(Vec<Complex<T>>, Vec<Complex<T>>)],
    real: bool,
    even: bool,
    retain: &Retain<T>,
) -> StreamSummary<T> {
    let rows = axis_range(grid.size(0), even);
    let cols = axis_range(grid.size(1), even);
    // Column runs with constant multiplicity.
    let mut runs: Vec<(usize, usize, u64)> = Vec::new();
    for &(j, m) in &cols {
        match runs.last_mut() {
            Some((start, end, rm)) if *rm == m && *end == j && *end - *start < COLUMN_CHUNK => *end += 1,
            _ => runs.push((j, j + 1, m)),
        }
    }
    let imag_weights = rank.iter().any(|(u, _)| u.iter().any(|z| z.im != T::zero()));
    let v_re: Vec<Vec<T>> = rank.iter().map(|(_, v)| v.iter().map(|z| z.re).collect()).collect();

    let tile = 64usize;
    let tiles: Vec<&[(usize, u64)]> = rows.chunks(tile).collect();
    let partials: Vec<StreamSummary<T>> = tiles
        .par_iter()
        .map(|chunk| {
            let mut s = StreamSummary::new(retain);
            let mut acc_re = vec![T::zero(); COLUMN_CHUNK];
            let mut acc_im = vec![T::zero(); COLUMN_CHUNK];
            let mut acc_c = vec![Complex::<T>::default(); COLUMN_CHUNK];
            let mut abs = vec![T::zero(); COLUMN_CHUNK];
            for &(i, mi) in chunk.iter() {
                for &(j0, j1, mj) in &runs {
                    let w = j1 - j0;
                    if real {
                        acc_re[..w].iter_mut().for_each(|x| *x = T::zero());
                        acc_im[..w].iter_mut().for_each(|x| *x = T::zero());
                        for ((u, _), v) in rank.iter().zip(&v_re) {
                            let a = u[i];
                            let vs = &v[j0..j1];
                            if a.re != T::zero() {
                                for (x, &y) in acc_re[..w].iter_mut().zip(vs) {
                                    *x = *x + a.re * y;
                                }
                            }
                            if imag_weights && a.im != T::zero() {
                                for (x, &y) in acc_im[..w].iter_mut().zip(vs) {
                                    *x = *x + a.im * y;
                                }
                            }
                        }
                        if imag_weights {
                            for ((o, &r), &m) in abs[..w].iter_mut().zip(&acc_re[..w]).zip(&acc_im[..w]) {
                                *o = r.hypot(m);
                            }
                        } else {
                            for (o, &r) in abs[..w].iter_mut().zip(&acc_re[..w]) {
                                *o = r.abs();
                            }
                        }
                    } else {
                        acc_c[..w].iter_mut().for_each(|x| *x = Complex::default());
                        for (u, v) in rank {
                            let a = u[i];
                            for (x, y) in acc_c[..w].iter_mut().zip(&v[j0..j1]) {
                                *x += a * y;
                            }
                        }
                        for (o, z) in abs[..w].iter_mut().zip(&acc_c[..w]) {
                            *o = z.norm();
                        }
                    }
                    s.push_chunk(&abs[..w], mi * mj);
                }
            }
            s
        })
        .collect();
    let mut total = StreamSummary::new(retain);
    for p in &partials {
        total.merge(p);
    }
    total
}
