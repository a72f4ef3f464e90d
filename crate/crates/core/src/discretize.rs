//! Discretization of the sup norm on finite point sets, and the shift
//! argument that turns a discretization inequality into a Remez inequality.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::indexsets::step_hyperbolic;
use crate::measure::{GridSet, Retain};
use crate::remez::{CheckOutcome, Ratio};
use crate::sample::{draw_rng, random_poly_on};
use crate::scalar::Real;
use crate::scaling::ScalingRow;
use crate::spectral::{evaluate_on_grid, EvalOptions, Grid, PointEvaluator, TrigPoly, DEFAULT_MEMORY_BUDGET};

/// Relative tolerance of the final certificate.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-9;

/// Finite set of distinct torus points with coordinates in `[0, 2 pi)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet<T> {
    dim: usize,
    points: Vec<Vec<T>>,
}

impl<T: Real> PointSet<T> {
    /// Reduces coordinates mod `2 pi` and rejects empty or repeated input.
    pub fn new(dim: usize, points: Vec<Vec<T>>) -> Result<Self> {
        if dim == 0 || dim > 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if points.is_empty() {
            return Err(Error::InvalidParameter("point set is empty".into()));
        }
        let tau = T::lit(TAU);
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(points.len());
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch(p.len(), dim));
            }
            let p: Vec<T> = p.into_iter().map(|x| wrap(x, tau)).collect();
            let key: Vec<u64> = p.iter().map(|x| x.to_f64_lossy().to_bits()).collect();
            if !seen.insert(key) {
                return Err(Error::InvalidParameter(format!("repeated point {:?}", p.iter().map(|x| x.to_f64_lossy()).collect::<Vec<_>>())));
            }
            out.push(p);
        }
        Ok(Self { dim, points: out })
    }

    /// `m^d` points `2 pi t / m`.
    pub fn equispaced(m: usize, dim: usize) -> Result<Self> {
        product_points(&vec![m; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<T>] {
        &self.points
    }

    /// The points `x^j - y`.
    pub fn shifted(&self, y: &[T]) -> Self {
        let tau = T::lit(TAU);
        let points = self.points.iter().map(|p| p.iter().zip(y).map(|(&x, &s)| wrap(x - s, tau)).collect()).collect();
        Self { dim: self.dim, points }
    }

    /// `f(x^j)` for every point.
    pub fn evaluate(&self, f: &TrigPoly<T>) -> Result<Vec<Complex<T>>> {
        if f.dim() != self.dim {
            return Err(Error::DimensionMismatch(f.dim(), self.dim));
        }
        Ok(eval_points(f, &self.points))
    }

    pub fn max_abs(&self, f: &TrigPoly<T>) -> Result<T> {
        Ok(self.evaluate(f)?.iter().fold(T::zero(), |m, v| m.max(v.norm())))
    }
}

fn wrap<T: Real>(x: T, tau: T) -> T {
    let r = x % tau;
    let r = if r < T::zero() { r + tau } else { r };
    if r >= tau { T::zero() } else { r }
}

fn product_points<T: Real>(sizes: &[usize]) -> Result<PointSet<T>> {
    let grid = Grid::new(sizes)?;
    let points = (0..grid.total()).map(|c| grid.point(&grid.unravel(c))).collect();
    PointSet::new(sizes.len(), points)
}

fn phases<T: Real>(x: T, deg: i64) -> Vec<Complex<T>> {
    let x = x.to_f64_lossy();
    (-deg..=deg)
        .map(|k| {
            let (s, c) = (k as f64 * x).sin_cos();
            Complex::new(T::lit(c), T::lit(s))
        })
        .collect()
}

/// Point values; in two dimensions the sum over the first frequency is shared
/// by all points with the same first coordinate.
fn eval_points<T: Real>(f: &TrigPoly<T>, points: &[Vec<T>]) -> Vec<Complex<T>> {
    if f.dim() != 2 {
        let ev = PointEvaluator::new(f);
        return points.iter().map(|p| ev.eval(p)).collect();
    }
    let d0 = f.max_degree(0);
    let d1 = f.max_degree(1);
    let mut rows: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        rows.entry(p[0].to_f64_lossy().to_bits()).or_default().push(i);
    }
    let coeffs: Vec<(usize, usize, Complex<T>)> =
        f.iter().map(|(k, c)| ((k.get(0) as i64 + d0) as usize, (k.get(1) as i64 + d1) as usize, *c)).collect();
    let mut out = vec![Complex::new(T::zero(), T::zero()); points.len()];
    let mut inner = vec![Complex::new(T::zero(), T::zero()); (2 * d1 + 1) as usize];
    for idx in rows.values() {
        let e0 = phases(points[idx[0]][0], d0);
        inner.iter_mut().for_each(|v| *v = Complex::new(T::zero(), T::zero()));
        for &(a, b, c) in &coeffs {
            inner[b] = inner[b] + c * e0[a];
        }
        for &i in idx {
            let e1 = phases(points[i][1], d1);
            out[i] = inner.iter().zip(&e1).fold(Complex::new(T::zero(), T::zero()), |acc, (&h, &e)| acc + h * e);
        }
    }
    out
}

/// Sup-norm estimate: the larger of the grid maximum and the extra samples.
fn sup_estimate<T: Real>(f: &TrigPoly<T>, oversample: usize) -> Result<(T, Grid)> {
    let grid = Grid::for_degrees(&f.degrees(), oversample.max(2))?;
    let opts = EvalOptions { retain: Retain { exponents: Vec::new(), top_k: 0 }, ..EvalOptions::default() };
    Ok((evaluate_on_grid(f, &grid, &opts)?.max_abs(), grid))
}

/// `||f||_inf / max_j |f(x^j)|`, infinite when every sample vanishes (up to
/// [`VANISHING_SAMPLES`] relative to the sup norm). The
/// numerator is the maximum over an oversampled grid and the samples.
pub fn discretization_constant<T: Real>(f: &TrigPoly<T>, x: &PointSet<T>, oversample: usize) -> Result<Ratio<T>> {
    let samples = x.max_abs(f)?;
    let (sup, _) = sup_estimate(f, oversample)?;
    Ok(ratio(sup.max(samples), samples))
}

/// Samples at most this fraction of the sup norm count as zero.
pub const VANISHING_SAMPLES: f64 = 1e-12;

fn ratio<T: Real>(sup: T, samples: T) -> Ratio<T> {
    if samples <= sup * T::lit(VANISHING_SAMPLES) {
        if sup <= T::zero() {
            Ratio::Finite(T::one())
        } else {
            Ratio::Infinite
        }
    } else {
        Ratio::Finite(sup / samples)
    }
}

/// Union over `||s||_1 = n` of the product grids with `2^{s_j} + 1` points
/// per axis; coincident points are merged exactly.
pub fn candidate_point_set<T: Real>(n: u32, d: usize) -> Result<PointSet<T>> {
    if !(1..=2).contains(&d) {
        return Err(Error::UnsupportedDimension(d));
    }
    if n > 20 {
        return Err(Error::InvalidParameter(format!("candidate set level n={n} too large")));
    }
    // Coordinates as reduced fractions t / m of a full turn.
    let reduce = |t: u64, m: u64| {
        let g = gcd(t, m);
        (t / g, m / g)
    };
    let axis = |s: u32| {
        let m = (1u64 << s) + 1;
        (0..m).map(move |t| reduce(t, m))
    };
    let mut set = BTreeSet::new();
    if d == 1 {
        set.extend(axis(n).map(|x| vec![x]));
    } else {
        for s1 in 0..=n {
            for x1 in axis(s1) {
                set.extend(axis(n - s1).map(|x2| vec![x1, x2]));
            }
        }
    }
    let points = set
        .into_iter()
        .map(|p| p.into_iter().map(|(t, m)| T::lit(TAU * t as f64 / m as f64)).collect())
        .collect();
    PointSet::new(d, points)
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Largest discretization constant over `draws` seeded random
/// `f in T(Q_n)` against `x`; the rate is `n^{d-1}`.
pub fn discretization_scan_with<T: Real>(n: u32, x: &PointSet<T>, draws: usize, seed: u64, oversample: usize) -> Result<ScalingRow> {
    if draws == 0 {
        return Err(Error::InvalidParameter("draws must be >= 1".into()));
    }
    let d = x.dim();
    let set = step_hyperbolic(n, d)?;
    let mut worst = 0.0f64;
    let mut grid = String::new();
    for i in 0..draws {
        let f: TrigPoly<T> = random_poly_on(&set, &mut draw_rng(seed, i as u64))?;
        let samples = x.max_abs(&f)?;
        let (sup, g) = sup_estimate(&f, oversample)?;
        grid = g.describe();
        worst = worst.max(ratio(sup.max(samples), samples).value().to_f64_lossy());
    }
    let rate = (n.max(1) as f64).powi(d as i32 - 1);
    Ok(ScalingRow::new(n as f64, worst, rate, format!("random T(Q_{n}) on {} points", x.len()), grid).with_meta(0.0, seed))
}

/// [`discretization_scan_with`] on the candidate set.
pub fn empirical_discretization_scan<T: Real>(n: u32, d: usize, draws: usize, seed: u64) -> Result<ScalingRow> {
    discretization_scan_with::<T>(n, &candidate_point_set(n, d)?, draws, seed, 2)
}

/// Candidate shifts along one axis: midpoints between consecutive translates
/// `x_a - 2 pi c / G` of the cell boundaries of `B`. The indicator
/// `sum_j chi_B(x^j - y)` is constant on each product of these intervals.
fn axis_candidates<T: Real>(x: &PointSet<T>, grid: &Grid, axis: usize) -> Vec<f64> {
    let g = grid.size(axis);
    let mut cuts: Vec<f64> = Vec::with_capacity(x.len() * g);
    for p in x.points() {
        let xa = p[axis].to_f64_lossy();
        for c in 0..g {
            cuts.push((xa - TAU * c as f64 / g as f64).rem_euclid(TAU));
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut mids = Vec::with_capacity(cuts.len());
    for w in cuts.windows(2) {
        if w[1] - w[0] > 1e-9 {
            mids.push(0.5 * (w[0] + w[1]));
        }
    }
    let (first, last) = (cuts[0], cuts[cuts.len() - 1]);
    if first + TAU - last > 1e-9 {
        mids.push((0.5 * (last + first + TAU)).rem_euclid(TAU));
    }
    mids.sort_by(f64::total_cmp);
    mids
}

fn hits<T: Real>(x: &PointSet<T>, b: &GridSet, y: &[f64]) -> bool {
    let grid = b.grid();
    x.points().iter().any(|p| {
        let z: Vec<f64> = p.iter().zip(y).map(|(&xa, &ya)| xa.to_f64_lossy() - ya).collect();
        b.contains(grid.ravel(&grid.locate(&z)))
    })
}

/// First shift `y*` in lexicographic order with `x^j - y* not in B` for all
/// `j`. The search is exhaustive over the arrangement of cell translates.
pub fn find_avoiding_shift<T: Real>(x: &PointSet<T>, b: &GridSet) -> Result<Vec<T>> {
    if x.dim() != b.grid().dim() {
        return Err(Error::DimensionMismatch(x.dim(), b.grid().dim()));
    }
    let load = b.measure() * x.len() as f64;
    let not_found = || if load >= 1.0 { Error::NoAdmissibleShift { load } } else { Error::ShiftNotFound { load } };
    if b.count() == 0 {
        return Ok(vec![T::zero(); x.dim()]);
    }
    let axes: Vec<Vec<f64>> = (0..x.dim()).map(|a| axis_candidates(x, b.grid(), a)).collect();
    if axes.iter().any(|a| a.is_empty()) {
        return Err(not_found());
    }
    let mut idx = vec![0usize; x.dim()];
    loop {
        let y: Vec<f64> = idx.iter().zip(&axes).map(|(&i, a)| a[i]).collect();
        if !hits(x, b, &y) {
            return Ok(y.into_iter().map(T::lit).collect());
        }
        let mut a = x.dim();
        loop {
            if a == 0 {
                return Err(not_found());
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < axes[a].len() {
                break;
            }
            idx[a] = 0;
        }
    }
}

#[derive(Clone, Debug)]
pub struct DiscretizationRemezReport<T> {
    pub y_star: Vec<T>,
    /// Constant used in the certificate.
    pub d: T,
    /// Largest constant measured over the shift grid and `y*`.
    pub d_measured: T,
    /// `m |B|`.
    pub load: f64,
    pub shifts_tested: usize,
    /// `||f||_inf <= D sup_{B^c} |f|`, re-evaluated on `grid`.
    pub outcome: CheckOutcome<T>,
    pub grid: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscretizationRemezConfig {
    /// Shifts per axis on which a supplied `D` is checked.
    pub shift_grid: usize,
    pub oversample: usize,
    /// Bytes the certificate grid may occupy; it is never streamed.
    pub memory_budget: u64,
}

impl Default for DiscretizationRemezConfig {
    fn default() -> Self {
        Self { shift_grid: 16, oversample: 4, memory_budget: DEFAULT_MEMORY_BUDGET }
    }
}

/// Certifies `||f||_inf <= D sup_{T^d \ B} |f|` through a shift `y*` with
/// every `x^j - y*` outside `B`: `||f||_inf = ||f_{y*}||_inf <= D max_j
/// |f(x^j - y*)|`. A supplied `D` must dominate the constants of all tested
/// shifts `f_y`; without one the measured maximum is used.
pub fn discretization_to_remez<T: Real>(
    f: &TrigPoly<T>,
    x: &PointSet<T>,
    d: Option<T>,
    b: &GridSet,
    cfg: &DiscretizationRemezConfig,
) -> Result<DiscretizationRemezReport<T>> {
    let dim = x.dim();
    if f.dim() != dim {
        return Err(Error::DimensionMismatch(f.dim(), dim));
    }
    let load = b.measure() * x.len() as f64;
    if load >= 1.0 {
        return Err(Error::NoAdmissibleShift { load });
    }
    let y_star = find_avoiding_shift(x, b)?;

    // Evaluation grid refining both the cells of B and the spectrum of f.
    let sizes: Vec<usize> = (0..dim)
        .map(|a| {
            let need = cfg.oversample.max(2) * (2 * f.max_degree(a).unsigned_abs() as usize + 1);
            let cell = b.grid().size(a);
            need.div_ceil(cell) * cell
        })
        .collect();
    let grid = Grid::new(&sizes)?;
    let opts = EvalOptions { memory_budget: cfg.memory_budget, allow_streaming: false, ..EvalOptions::default() };
    let values = evaluate_on_grid(f, &grid, &opts)?;
    let vals = values.values().ok_or_else(|| Error::NotRetained("grid values".into()))?;
    let cell_ratio: Vec<usize> = (0..dim).map(|a| sizes[a] / b.grid().size(a)).collect();
    let mut sup = T::zero();
    let mut sup_off = T::zero();
    let mut node = vec![0usize; dim];
    let mut cell = vec![0usize; dim];
    for v in vals {
        let a = v.norm();
        sup = sup.max(a);
        for ax in 0..dim {
            cell[ax] = node[ax] / cell_ratio[ax];
        }
        if !b.contains(b.grid().ravel(&cell)) {
            sup_off = sup_off.max(a);
        }
        // Row-major successor of `node`.
        for ax in (0..dim).rev() {
            node[ax] += 1;
            if node[ax] < sizes[ax] {
                break;
            }
            node[ax] = 0;
        }
    }

    let at_star = x.shifted(&y_star);
    let star_vals = at_star.evaluate(f)?;
    for p in at_star.points() {
        let z: Vec<f64> = p.iter().map(|v| v.to_f64_lossy()).collect();
        if b.contains(b.grid().ravel(&b.grid().locate(&z))) {
            return Err(Error::ShiftNotFound { load });
        }
    }
    let star_max = star_vals.iter().fold(T::zero(), |m, v| m.max(v.norm()));
    sup = sup.max(star_max);
    sup_off = sup_off.max(star_max);

    // Shift-uniform constant over a grid of shifts and y*.
    let shift_grid = Grid::cube(dim, cfg.shift_grid.max(1))?;
    let mut shifts: Vec<Vec<T>> = (0..shift_grid.total()).map(|c| shift_grid.point(&shift_grid.unravel(c))).collect();
    shifts.push(y_star.clone());
    let mut d_measured = T::zero();
    for y in &shifts {
        let m = x.shifted(y).max_abs(f)?;
        let dy = ratio(sup, m).value();
        if let Some(dd) = d {
            if dy > dd * (T::one() + T::lit(CERTIFICATE_TOLERANCE)) {
                return Err(Error::ShiftUniformity {
                    supplied: dd.to_f64_lossy(),
                    measured: dy.to_f64_lossy(),
                    shift: y.iter().map(|v| v.to_f64_lossy()).collect(),
                });
            }
        }
        d_measured = d_measured.max(dy);
    }
    let d_used = d.unwrap_or(d_measured);
    let outcome = CheckOutcome::compare(sup, d_used * sup_off, T::lit(CERTIFICATE_TOLERANCE));
    Ok(DiscretizationRemezReport {
        y_star,
        d: d_used,
        d_measured,
        load,
        shifts_tested: shifts.len(),
        outcome,
        grid: grid.describe(),
    })
}
