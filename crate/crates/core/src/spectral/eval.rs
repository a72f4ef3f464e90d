use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::measure::{GridFunction, Retain, StreamSummary};
use crate::scalar::Real;

use super::{Grid, TrigPoly};

/// Default memory budget for materialized samples: 4 GiB.
pub const DEFAULT_MEMORY_BUDGET: u64 = 4 << 30;

#[derive(Clone, Debug)]
pub struct EvalOptions<T> {
    /// Bytes the full sample array may occupy before evaluation streams.
    pub memory_budget: u64,
    pub allow_streaming: bool,
    /// Reductions kept when streaming.
    pub retain: Retain<T>,
}

impl<T: Real> Default for EvalOptions<T> {
    fn default() -> Self {
        Self { memory_budget: DEFAULT_MEMORY_BUDGET, allow_streaming: true, retain: Retain::default() }
    }
}

impl<T: Real> EvalOptions<T> {
    pub fn with_budget(memory_budget: u64) -> Self {
        Self { memory_budget, ..Self::default() }
    }
}

fn bytes_for<T>(cells: u64) -> u64 {
    cells.saturating_mul(std::mem::size_of::<Complex<T>>() as u64)
}

#[inline]
fn wrap(k: i64, g: usize) -> usize {
    k.rem_euclid(g as i64) as usize
}

/// Roots of unity `e^{2 pi i t / n}`, computed in double precision.
pub(crate) fn unit_roots<T: Real>(n: usize) -> Vec<Complex<T>> {
    (0..n)
        .map(|t| {
            let (s, c) = (std::f64::consts::TAU * t as f64 / n as f64).sin_cos();
            Complex::new(T::lit(c), T::lit(s))
        })
        .collect()
}

/// In-place multidimensional FFT of a row-major array.
///
/// `inverse = true` computes `sum_k X_k e^{+2 pi i k t / G}` (no scaling), which
/// is exactly point evaluation of a scattered coefficient array.
pub(crate) fn fft_nd<T: Real>(data: &mut [Complex<T>], sizes: &[usize], inverse: bool) {
    let mut planner = FftPlanner::<T>::new();
    let d = sizes.len();
    for a in 0..d {
        let len = sizes[a];
        if len == 1 {
            continue;
        }
        let fft: Arc<dyn Fft<T>> =
            if inverse { planner.plan_fft_inverse(len) } else { planner.plan_fft_forward(len) };
        let stride: usize = sizes[a + 1..].iter().product();
        if stride == 1 {
            fft.process(data);
            continue;
        }
        let block = len * stride;
        let mut column = vec![Complex::default(); len];
        let mut scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        for outer in data.chunks_mut(block) {
            for inner in 0..stride {
                for (t, slot) in column.iter_mut().enumerate() {
                    *slot = outer[t * stride + inner];
                }
                fft.process_with_scratch(&mut column, &mut scratch);
                for (t, v) in column.iter().enumerate() {
                    outer[t * stride + inner] = *v;
                }
            }
        }
    }
}

/// Samples of `f` at every node of `grid`.
///
/// Sampling is exact at the nodes for any grid size (frequencies are folded
/// modulo `G_j` before the transform). When the full array would exceed the
/// memory budget the evaluation streams over tiles and only the reductions in
/// `opts.retain` survive.
pub fn evaluate_on_grid<T: Real>(f: &TrigPoly<T>, grid: &Grid, opts: &EvalOptions<T>) -> Result<GridFunction<T>> {
    if f.dim() != grid.dim() {
        return Err(Error::DimensionMismatch(f.dim(), grid.dim()));
    }
    let needed = bytes_for::<T>(grid.total());
    if needed <= opts.memory_budget {
        return GridFunction::from_values(grid.clone(), materialize(f, grid));
    }
    if !opts.allow_streaming {
        return Err(Error::MemoryBudget { needed, budget: opts.memory_budget });
    }
    let summary = stream(f, grid, opts)?;
    Ok(GridFunction::streamed(grid.clone(), summary))
}

fn materialize<T: Real>(f: &TrigPoly<T>, grid: &Grid) -> Vec<Complex<T>> {
    let sizes = grid.sizes();
    let mut data = vec![Complex::<T>::default(); grid.total() as usize];
    for (k, c) in f.iter() {
        let idx = k
            .components()
            .iter()
            .zip(sizes)
            .fold(0usize, |acc, (&kj, &g)| acc * g + wrap(kj as i64, g));
        data[idx] += c;
    }
    fft_nd(&mut data, sizes, true);
    data
}

/// Coefficients regrouped by their first-axis frequency, with the remaining
/// axes folded into a flat slab offset.
struct RowPlan<T> {
    groups: Vec<(i64, Vec<(usize, Complex<T>)>)>,
    slab_sizes: Vec<usize>,
    rows: usize,
    /// `e^{2 pi i t / period}`; row `i` multiplies `c_k` by `roots[k i mod period]`.
    roots: Vec<Complex<T>>,
}

impl<T: Real> RowPlan<T> {
    fn new(f: &TrigPoly<T>, grid: &Grid, slab_budget_cells: u64) -> Result<Self> {
        let sizes = grid.sizes();
        if sizes.len() >= 2 {
            let slab_sizes = sizes[1..].to_vec();
            let slab: u64 = slab_sizes.iter().map(|&g| g as u64).product();
            if slab > slab_budget_cells {
                return Err(Error::MemoryBudget {
                    needed: bytes_for::<T>(slab),
                    budget: bytes_for::<T>(slab_budget_cells),
                });
            }
            let mut groups: Vec<(i64, Vec<(usize, Complex<T>)>)> = Vec::new();
            for (k, c) in f.iter() {
                let k1 = k.get(0) as i64;
                let off = k.components()[1..]
                    .iter()
                    .zip(&slab_sizes)
                    .fold(0usize, |acc, (&kj, &g)| acc * g + wrap(kj as i64, g));
                match groups.last_mut() {
                    Some((last, entries)) if *last == k1 => entries.push((off, *c)),
                    _ => groups.push((k1, vec![(off, *c)])),
                }
            }
            Ok(Self {
                groups,
                slab_sizes,
                rows: sizes[0],
                roots: unit_roots(sizes[0]),
            })
        } else {
            // Univariate: node t = i + rows * j; row i is a residue class.
            let g = sizes[0];
            let rows = (1..=g)
                .find(|r| g % r == 0 && (g / r) as u64 <= slab_budget_cells)
                .expect("rows = g always fits");
            let slab = g / rows;
            let groups = f.iter().map(|(k, c)| (k.get(0) as i64, vec![(wrap(k.get(0) as i64, slab), *c)])).collect();
            Ok(Self {
                groups,
                slab_sizes: vec![slab],
                rows,
                roots: unit_roots(g),
            })
        }
    }

    fn fill_row(&self, i: usize, slab: &mut [Complex<T>]) {
        slab.iter_mut().for_each(|v| *v = Complex::default());
        let period = self.roots.len() as i64;
        for (k1, entries) in &self.groups {
            let phase = self.roots[((k1.rem_euclid(period)) * i as i64 % period) as usize];
            for &(off, c) in entries {
                slab[off] += c * phase;
            }
        }
    }
}

fn stream<T: Real>(f: &TrigPoly<T>, grid: &Grid, opts: &EvalOptions<T>) -> Result<StreamSummary<T>> {
    let threads = rayon::current_num_threads().max(1) as u64;
    let cell_bytes = bytes_for::<T>(1);
    let per_worker = (opts.memory_budget / threads / cell_bytes).max(1);
    let plan = RowPlan::new(f, grid, per_worker)?;
    let slab_len: usize = plan.slab_sizes.iter().product();
    let rows_per_tile = ((per_worker / slab_len as u64) as usize).clamp(1, plan.rows);
    let tiles: Vec<(usize, usize)> =
        (0..plan.rows).step_by(rows_per_tile).map(|s| (s, (s + rows_per_tile).min(plan.rows))).collect();
    let partials: Vec<StreamSummary<T>> = tiles
        .par_iter()
        .map(|&(start, end)| {
            let mut summary = StreamSummary::new(&opts.retain);
            let mut slab = vec![Complex::<T>::default(); slab_len];
            let mut abs = vec![T::zero(); slab_len];
            for i in start..end {
                plan.fill_row(i, &mut slab);
                fft_nd(&mut slab, &plan.slab_sizes, true);
                for (a, v) in abs.iter_mut().zip(&slab) {
                    *a = v.norm();
                }
                summary.push_chunk(&abs, 1);
            }
            summary
        })
        .collect();
    let mut total = StreamSummary::new(&opts.retain);
    for p in &partials {
        total.merge(p);
    }
    debug_assert_eq!(total.cells(), grid.total());
    Ok(total)
}

/// Exact coefficients of a polynomial supported in `support` from its samples.
pub fn coefficients_from_grid<T: Real>(
    samples: &GridFunction<T>,
    support: &crate::indexsets::IndexSet,
) -> Result<TrigPoly<T>> {
    let grid = samples.grid();
    if support.dim() != grid.dim() {
        return Err(Error::DimensionMismatch(support.dim(), grid.dim()));
    }
    for axis in 0..grid.dim() {
        let deg = support.max_degree(axis);
        let needed = 2 * deg as usize + 1;
        if grid.size(axis) < needed {
            return Err(Error::Aliasing { axis, grid: grid.size(axis), degree: deg, needed });
        }
    }
    let values = samples
        .values()
        .ok_or_else(|| Error::NotRetained("coefficient recovery needs materialized samples".into()))?;
    let mut data = values.to_vec();
    fft_nd(&mut data, grid.sizes(), false);
    let scale = T::one() / T::lit(grid.total() as f64);
    let terms = support.iter().map(|k| {
        let idx = k
            .components()
            .iter()
            .zip(grid.sizes())
            .fold(0usize, |acc, (&kj, &g)| acc * g + wrap(kj as i64, g));
        (*k, data[idx] * scale)
    });
    TrigPoly::from_terms(grid.dim(), terms)
}
