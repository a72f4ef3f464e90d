//! Extremal Remez ratios on grids, the classical reference constants, and
//! checkers for the implications between Remez and Nikol'skii inequalities.
//!
//! Budgets `b` are fractions of the normalized measure. On a grid of `T`
//! cells a budget buys `K = budget_cells(b, T)` cells, so the deleted set has
//! measure `K / T <= b`; checkers whose bounds involve `b` use this effective
//! measure, which makes every implication exact on the grid.

use std::fmt;

use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::indexsets::{hyperbolic_cross, IndexSet};
use crate::measure::{budget_cells, GridData, GridFunction, GridSet, Retain};
use crate::sample::{draw_rng, random_poly_on};
use crate::scalar::{CompensatedSum, Real};
use crate::spectral::{evaluate_on_grid, EvalOptions, Grid, TrigPoly};

/// Checker tolerance: `1e-6` for `p >= 1`, `1e-3` in the quasi-norm regime.
pub fn tolerance<T: Real>(p: T) -> T {
    if p >= T::one() {
        T::lit(1e-6)
    } else {
        T::lit(1e-3)
    }
}

/// A Remez ratio, which is infinite when the function vanishes off the deleted set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ratio<T> {
    Finite(T),
    Infinite,
}

impl<T: Real> Ratio<T> {
    pub fn is_finite(&self) -> bool {
        matches!(self, Ratio::Finite(_))
    }

    /// The ratio as a float (`+inf` for [`Ratio::Infinite`]).
    pub fn value(&self) -> T {
        match *self {
            Ratio::Finite(r) => r,
            Ratio::Infinite => T::infinity(),
        }
    }
}

impl<T: Real> PartialOrd for Ratio<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.value().partial_cmp(&other.value())
    }
}

impl<T: Real> fmt::Display for Ratio<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Finite(r) => write!(f, "{r:.11e}"),
            Ratio::Infinite => f.write_str("inf"),
        }
    }
}

/// Budget and exponent of a Remez query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RemezQuery<T> {
    pub b: f64,
    pub p: T,
}

impl<T: Real> RemezQuery<T> {
    pub fn new(b: f64, p: T) -> Result<Self> {
        if !(0.0..1.0).contains(&b) {
            return Err(Error::InvalidParameter(format!("budget b={b} outside [0, 1)")));
        }
        if !(p > T::zero()) {
            return Err(Error::InvalidParameter(format!("exponent p={p} must be positive")));
        }
        Ok(Self { b, p })
    }
}

#[derive(Clone, Debug)]
pub struct RemezReport<T> {
    pub ratio: Ratio<T>,
    pub p: T,
    pub b: f64,
    /// Measure actually deleted: `removed_cells / total_cells`.
    pub b_eff: f64,
    pub removed_cells: u64,
    pub total_cells: u64,
    pub norm: T,
    pub norm_inside: T,
    pub norm_outside: T,
    /// `sup |g|` off the deleted set.
    pub threshold: T,
    pub grid: Grid,
    /// The deleted level set; absent for streamed samples.
    pub extremal: Option<GridSet>,
}

fn finish<T: Real>(sum: T, total: u64, p: T) -> T {
    (sum / T::lit(total as f64)).powf(T::one() / p)
}

/// `R = ||g||_p / ||g||_{L_p(Omega \ B*)}` with `B*` the top level set of
/// budget `b`: the largest ratio over all cell-union sets of measure `<= b`.
pub fn remez_ratio<T: Real>(g: &GridFunction<T>, b: f64, p: T) -> Result<RemezReport<T>> {
    let q = RemezQuery::new(b, p)?;
    if g.is_zero() {
        return Err(Error::ZeroFunction);
    }
    let total = g.grid().total();
    let k = budget_cells(q.b, total).min(total - 1);
    let inf = p.is_infinite();
    let (norm_sum, inside_sum, outside_sum, threshold, extremal) = match g.data() {
        GridData::Materialized(v) => {
            let abs: Vec<T> = v.iter().map(|z| z.norm()).collect();
            let mut idx: Vec<u32> = (0..abs.len() as u32).collect();
            let mut mask = vec![false; abs.len()];
            if k > 0 {
                idx.select_nth_unstable_by(k as usize - 1, |&i, &j| {
                    abs[j as usize]
                        .partial_cmp(&abs[i as usize])
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(i.cmp(&j))
                });
                for &i in &idx[..k as usize] {
                    mask[i as usize] = true;
                }
            }
            let (mut ins, mut outs) = (CompensatedSum::new(), CompensatedSum::new());
            let (mut max_in, mut max_out) = (T::zero(), T::zero());
            for (&a, &m) in abs.iter().zip(&mask) {
                let w = if inf { T::zero() } else { a.powf(p) };
                if m {
                    ins.add(w);
                    max_in = max_in.max(a);
                } else {
                    outs.add(w);
                    max_out = max_out.max(a);
                }
            }
            let set = GridSet::from_mask(g.grid().clone(), mask)?;
            if inf {
                (max_in.max(max_out), max_in, max_out, max_out, Some(set))
            } else {
                (ins.value() + outs.value(), ins.value(), outs.value(), max_out, Some(set))
            }
        }
        GridData::Streamed(s) => {
            let (top_sum, kth) = s.top_split(k, if inf { T::one() } else { p })?;
            if inf {
                let max_in = if k > 0 { s.max_abs() } else { T::zero() };
                (s.max_abs(), max_in, kth, kth, None)
            } else {
                let all = s.power_sum(p).ok_or_else(|| Error::NotRetained(format!("L_{p} power sum")))?;
                (all, top_sum, (all - top_sum).max(T::zero()), kth, None)
            }
        }
    };
    let (norm, norm_inside, norm_outside) = if inf {
        (norm_sum, inside_sum, outside_sum)
    } else {
        (finish(norm_sum, total, p), finish(inside_sum, total, p), finish(outside_sum, total, p))
    };
    let ratio = if norm_outside > T::zero() { Ratio::Finite((norm / norm_outside).max(T::one())) } else { Ratio::Infinite };
    Ok(RemezReport {
        ratio,
        p,
        b,
        b_eff: k as f64 / total as f64,
        removed_cells: k,
        total_cells: total,
        norm,
        norm_inside,
        norm_outside,
        threshold,
        grid: g.grid().clone(),
        extremal,
    })
}

/// Samples `f` on a power-of-two grid with `oversample * (2 deg + 1)` nodes per axis.
pub fn sample<T: Real>(f: &TrigPoly<T>, oversample: usize) -> Result<GridFunction<T>> {
    let grid = Grid::for_degrees(&f.degrees(), oversample)?;
    evaluate_on_grid(f, &grid, &EvalOptions::default())
}

/// Which classical Remez constant to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RemezRegime {
    /// `exp(2 n |B|)`, univariate, `|B| < pi/2`.
    SmallMeasure,
    /// `(17 / (2 pi - |B|))^{2n}`, univariate, `pi/2 < |B| < 2 pi`.
    LargeMeasure,
    /// `exp(2 d (|B| prod n_j)^{1/d})` below `(pi/2)^d (min n_j)^d / prod n_j`.
    Multivariate,
}

/// Classical Remez constant for degrees `n` and a set of measure `measure`
/// in `[0, 2 pi)^d` units.
pub fn remez_bound_reference(n: &[u64], measure: f64, regime: RemezRegime) -> Result<f64> {
    use std::f64::consts::{FRAC_PI_2, TAU};
    if n.is_empty() || n.len() > 3 {
        return Err(Error::UnsupportedDimension(n.len()));
    }
    let violation = |regime: &str| Error::RegimeViolation { measure, regime: regime.to_string() };
    if !(measure >= 0.0) {
        return Err(violation("measure must be nonnegative"));
    }
    match regime {
        RemezRegime::SmallMeasure => {
            if n.len() != 1 {
                return Err(Error::DimensionMismatch(n.len(), 1));
            }
            if measure >= FRAC_PI_2 {
                return Err(violation("|B| < pi/2"));
            }
            Ok((2.0 * n[0] as f64 * measure).exp())
        }
        RemezRegime::LargeMeasure => {
            if n.len() != 1 {
                return Err(Error::DimensionMismatch(n.len(), 1));
            }
            if !(measure > FRAC_PI_2 && measure < TAU) {
                return Err(violation("pi/2 < |B| < 2 pi"));
            }
            Ok((17.0 / (TAU - measure)).powf(2.0 * n[0] as f64))
        }
        RemezRegime::Multivariate => {
            if n.iter().any(|&v| v == 0) {
                return Err(Error::InvalidParameter("multivariate constant needs every n_j >= 1".into()));
            }
            let d = n.len() as f64;
            let prod: f64 = n.iter().map(|&v| v as f64).product();
            let min = *n.iter().min().expect("nonempty") as f64;
            let limit = FRAC_PI_2.powf(d) * min.powf(d) / prod;
            if measure >= limit {
                return Err(violation(&format!("|B| < {limit}")));
            }
            Ok((2.0 * d * (measure * prod).powf(1.0 / d)).exp())
        }
    }
}

/// [`remez_bound_reference`] for a normalized budget `b` (`|B| = (2 pi)^d b`).
pub fn remez_bound_normalized(n: &[u64], b: f64, regime: RemezRegime) -> Result<f64> {
    remez_bound_reference(n, b * std::f64::consts::TAU.powi(n.len() as i32), regime)
}

/// Result of a single inequality check `lhs <= rhs (1 + eps)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckOutcome<T> {
    pub holds: bool,
    pub lhs: T,
    pub rhs: T,
    pub slack: T,
    pub tolerance: T,
}

impl<T: Real> CheckOutcome<T> {
    pub fn compare(lhs: T, rhs: T, tolerance: T) -> Self {
        let holds = rhs.is_infinite() || lhs <= rhs * (T::one() + tolerance);
        let slack = if rhs.is_infinite() { T::infinity() } else { rhs - lhs };
        Self { holds, lhs, rhs, slack, tolerance }
    }
}

fn require_exponents<T: Real>(q: T, p: T, allow_inf: bool) -> Result<()> {
    let ok = q > T::zero() && q < p && (allow_inf || p.is_finite());
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("exponents need 0 < q < p{} (p={p}, q={q})", if allow_inf { "" } else { " < inf" })))
    }
}

fn beta<T: Real>(p: T, q: T) -> T {
    T::one() / q - if p.is_infinite() { T::zero() } else { T::one() / p }
}

/// `RI(inf, b, R)` implies `RI(p, b/2, 2^{1/p} R)`.
pub fn check_lemma_2_1<T: Real>(g: &GridFunction<T>, b: f64, p: T) -> Result<CheckOutcome<T>> {
    if !(p > T::zero() && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("lemma needs finite p > 0, got {p}")));
    }
    let r_inf = remez_ratio(g, b, T::infinity())?.ratio.value();
    let r_p = remez_ratio(g, b / 2.0, p)?.ratio.value();
    Ok(CheckOutcome::compare(r_p, T::lit(2.0).powf(T::one() / p) * r_inf, tolerance(p)))
}

/// `RI(p, b, R)` implies `RI(q, b, R^{p/q})` for `q < p < inf`.
pub fn check_lemma_2_2<T: Real>(g: &GridFunction<T>, b: f64, p: T, q: T) -> Result<CheckOutcome<T>> {
    require_exponents(q, p, false)?;
    let r_p = remez_ratio(g, b, p)?.ratio.value();
    let r_q = remez_ratio(g, b, q)?.ratio.value();
    Ok(CheckOutcome::compare(r_q, r_p.powf(p / q), tolerance(q)))
}

/// `||g||_p <= R^{q beta} b^{-beta} ||g||_q` with `R` the `L_inf` Remez ratio at `b`.
pub fn check_prop_2_1<T: Real>(g: &GridFunction<T>, b: f64, p: T, q: T) -> Result<CheckOutcome<T>> {
    require_exponents(q, p, true)?;
    let rep = remez_ratio(g, b, T::infinity())?;
    let bt = beta(p, q);
    let rhs = if rep.removed_cells == 0 {
        T::infinity()
    } else {
        rep.ratio.value().powf(q * bt) * T::lit(rep.b_eff).powf(-bt) * crate::measure::lp_norm(g, q)?
    };
    Ok(CheckOutcome::compare(crate::measure::lp_norm(g, p)?, rhs, tolerance(q)))
}

/// `||g||_p <= R b^{-beta} ||g||_q` with `R` the `L_p` Remez ratio at `b`.
pub fn check_prop_2_1p<T: Real>(g: &GridFunction<T>, b: f64, p: T, q: T) -> Result<CheckOutcome<T>> {
    require_exponents(q, p, false)?;
    let rep = remez_ratio(g, b, p)?;
    let rhs = if rep.removed_cells == 0 {
        T::infinity()
    } else {
        rep.ratio.value() * T::lit(rep.b_eff).powf(-beta(p, q)) * crate::measure::lp_norm(g, q)?
    };
    Ok(CheckOutcome::compare(crate::measure::lp_norm(g, p)?, rhs, tolerance(q)))
}

/// Parameters of a Nikol'skii inequality `||f||_p <= C m^beta ||f||_q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NikolskiiParams {
    pub p: f64,
    pub q: f64,
    pub c: f64,
    pub m: f64,
}

impl NikolskiiParams {
    pub fn beta(&self) -> f64 {
        1.0 / self.q - 1.0 / self.p
    }
}

/// Budget `b` and factor `2^{max(1, 1/q)}` such that `NI(p, q, C, m)`
/// implies `RI(q, b, factor)`.
pub fn nikolskii_to_remez_budget(params: &NikolskiiParams) -> Result<(f64, f64)> {
    let beta = params.beta();
    if !(params.q > 0.0 && beta > 0.0) {
        return Err(Error::InvalidParameter(format!("need 0 < q < p (p={}, q={})", params.p, params.q)));
    }
    if !(params.c >= 1.0 && params.m >= 1.0) {
        return Err(Error::InvalidParameter(format!("need C >= 1 and m >= 1 (C={}, m={})", params.c, params.m)));
    }
    let factor = 2f64.powf(1f64.max(1.0 / params.q));
    let b = 1.0 / ((factor * params.c).powf(1.0 / beta) * params.m);
    Ok((b, factor))
}

/// The Nikol'skii-to-Remez pipeline on one function: measure
/// `C = ||g||_p / ||g||_q` (with `m = 1`), derive the budget, and check
/// `R_q(b) <= 2^{max(1, 1/q)}`.
pub fn check_prop_2_2<T: Real>(g: &GridFunction<T>, p: T, q: T) -> Result<(CheckOutcome<T>, f64)> {
    require_exponents(q, p, true)?;
    let c = (crate::measure::lp_norm(g, p)? / crate::measure::lp_norm(g, q)?).to_f64_lossy().max(1.0);
    let params = NikolskiiParams { p: p.to_f64_lossy(), q: q.to_f64_lossy(), c, m: 1.0 };
    let (b, factor) = nikolskii_to_remez_budget(&params)?;
    let r = remez_ratio(g, b, q)?.ratio.value();
    Ok((CheckOutcome::compare(r, T::lit(factor), tolerance(q)), b))
}

/// Default constant in [`sparse_support_remez_budget`].
pub const SPARSE_SUPPORT_C: f64 = 4.0;

/// Budget for which every polynomial with the given support satisfies
/// `RI(p, b, 2^{max(1, 1/p)})`: `1/(C |S|)` for `p <= 2`, and
/// `1/(C |S|^{p/2})` for `d = 1`, `2 < p < inf`.
pub fn sparse_support_remez_budget(support: &IndexSet, p: f64, c: f64) -> Result<f64> {
    if support.is_empty() {
        return Err(Error::InvalidParameter("empty support".into()));
    }
    if !(p > 0.0) || !(c > 1.0) {
        return Err(Error::InvalidParameter(format!("need p > 0 and C > 1 (p={p}, C={c})")));
    }
    let s = support.len() as f64;
    if p <= 2.0 {
        Ok(1.0 / (c * s))
    } else if !p.is_finite() {
        Err(Error::Unsupported("sparse-support budget for p = inf".into()))
    } else if support.dim() == 1 {
        Ok(1.0 / (c * s.powf(p / 2.0)))
    } else {
        Err(Error::Unsupported("sparse-support budget for d >= 2 and p > 2".into()))
    }
}

/// `R_p(budget) <= 2^{max(1, 1/p)}` for samples of a polynomial with `support_len` frequencies.
pub fn check_sparse_support<T: Real>(g: &GridFunction<T>, budget: f64, p: T) -> Result<CheckOutcome<T>> {
    let r = remez_ratio(g, budget, p)?.ratio.value();
    let factor = T::lit(2.0).powf(T::one().max(T::one() / p));
    Ok(CheckOutcome::compare(r, factor, tolerance(p)))
}

/// Kernel data for the convolution argument `f = f * K`: if `K` reproduces
/// `f` and the grid resolves `f * K`, then for every deleted set of measure
/// at most `1 / (2 ||K||_inf)` one has `||f||_inf <= 2 ||K||_1 sup_{B^c} |f|`.
#[derive(Clone, Debug)]
pub struct KernelRemezSetup<T> {
    pub grid: Grid,
    pub kernel_l1: T,
    pub kernel_linf: T,
    pub b: f64,
}

impl<T: Real> KernelRemezSetup<T> {
    pub fn new(grid: Grid, kernel_l1: T, kernel_linf: T) -> Result<Self> {
        if !(kernel_linf > T::zero()) {
            return Err(Error::ZeroFunction);
        }
        let b = 1.0 / (2.0 * kernel_linf.to_f64_lossy());
        Ok(Self { grid, kernel_l1, kernel_linf, b })
    }

    pub fn bound(&self) -> T {
        T::lit(2.0) * self.kernel_l1
    }
}

#[derive(Clone, Debug)]
pub struct KernelRemezReport<T> {
    pub ratio: Ratio<T>,
    pub bound: T,
    pub b: f64,
    pub b_eff: f64,
    pub outcome: CheckOutcome<T>,
}

/// Sample arrays larger than this are reduced on the fly.
const STREAM_ABOVE_BYTES: u64 = 1 << 28;

/// `R_inf(b) <= 2 ||K||_1` on the setup grid.
pub fn check_with_kernel<T: Real>(f: &TrigPoly<T>, setup: &KernelRemezSetup<T>) -> Result<KernelRemezReport<T>> {
    let total = setup.grid.total();
    let opts = EvalOptions {
        memory_budget: STREAM_ABOVE_BYTES,
        allow_streaming: true,
        retain: Retain { exponents: Vec::new(), top_k: budget_cells(setup.b, total) + 1 },
    };
    let g = evaluate_on_grid(f, &setup.grid, &opts)?;
    let rep = remez_ratio(&g, setup.b, T::infinity())?;
    let bound = setup.bound();
    Ok(KernelRemezReport {
        ratio: rep.ratio,
        bound,
        b: setup.b,
        b_eff: rep.b_eff,
        outcome: CheckOutcome::compare(rep.ratio.value(), bound, T::lit(1e-9)),
    })
}

/// Setup for the hyperbolic-cross Remez bound: grid of `2^j > N + deg V_N`
/// nodes per axis, measured norms of `V_N` on it, and
/// `b = (C_2 N (log_2 N)^{d-1})^{-1}` with `C_2 = 2 ||V_N||_inf / (N (log_2 N)^{d-1})`.
#[derive(Clone, Debug)]
pub struct Theorem31Setup<T> {
    pub n: u64,
    pub dim: usize,
    pub c2: T,
    pub kernel: KernelRemezSetup<T>,
}

impl<T: Real> Theorem31Setup<T> {
    pub fn new(n: u64, dim: usize) -> Result<Self> {
        let sep = crate::kernels::hyperbolic_vp_separable::<T>(n, dim)?;
        let sizes: Vec<usize> = sep.degrees().iter().map(|&dv| (n as usize + dv as usize + 1).next_power_of_two()).collect();
        let grid = Grid::new(&sizes)?;
        let norms = crate::kernels::kernel_norms(&sep, &grid)?;
        let log = T::lit((n.max(2) as f64).log2()).powi(dim as i32 - 1);
        let c2 = T::lit(2.0) * norms.linf / (T::lit(n as f64) * log);
        Ok(Self { n, dim, c2, kernel: KernelRemezSetup::new(grid, norms.l1, norms.linf)? })
    }
}

/// Hyperbolic-cross Remez bound for one `f` with support in `Gamma(N)`.
pub fn verify_theorem_3_1<T: Real>(f: &TrigPoly<T>, setup: &Theorem31Setup<T>) -> Result<KernelRemezReport<T>> {
    if f.dim() != setup.dim {
        return Err(Error::DimensionMismatch(f.dim(), setup.dim));
    }
    if let Some((k, _)) = f.iter().find(|(k, _)| k.hyperbolic_size() > setup.n) {
        return Err(Error::InvalidParameter(format!("frequency {:?} outside Gamma({})", k.to_i64_vec(), setup.n)));
    }
    check_with_kernel(f, &setup.kernel)
}

/// Random-restart coefficient ascent for a large `L_inf` Remez ratio over
/// unit-norm polynomials on `Gamma(N)`. Only improvements are accepted, so
/// the best ratio is nondecreasing in `iterations`.
pub fn remez_lower_search<T: Real>(
    n: u64,
    d: usize,
    b: f64,
    iterations: usize,
    seed: u64,
) -> Result<(TrigPoly<T>, Ratio<T>)> {
    if iterations == 0 {
        return Err(Error::InvalidParameter("iterations must be >= 1".into()));
    }
    const RESTART_EVERY: usize = 64;
    let set = hyperbolic_cross(n, d)?;
    let grid = Grid::for_degrees(&(0..d).map(|a| set.max_degree(a)).collect::<Vec<_>>(), 4)?;
    let opts = EvalOptions::default();
    let score = |f: &TrigPoly<T>| -> Result<Ratio<T>> {
        let g = evaluate_on_grid(f, &grid, &opts)?;
        Ok(remez_ratio(&g, b, T::infinity())?.ratio)
    };
    let normalize = |f: TrigPoly<T>| {
        let s = f.parseval_sq().sqrt();
        f.scale_real(T::one() / s)
    };
    let mut rng = draw_rng(seed, 0);
    let mut current = normalize(random_poly_on::<T, _>(&set, &mut rng)?);
    let mut current_score = score(&current)?;
    let mut best = (current.clone(), current_score);
    let members = set.members();
    for it in 1..iterations {
        if it % RESTART_EVERY == 0 {
            current = normalize(random_poly_on::<T, _>(&set, &mut rng)?);
            current_score = score(&current)?;
        } else {
            let k = members[rng.random_range(0..members.len())];
            let step = T::lit(0.5 / (1.0 + (it % RESTART_EVERY) as f64).sqrt());
            let z = Complex::new(T::lit(rng.random::<f64>() - 0.5), T::lit(rng.random::<f64>() - 0.5)) * step;
            let mut cand = current.clone();
            cand.add_term(k, z);
            if cand.is_zero() {
                continue;
            }
            let cand = normalize(cand);
            let s = score(&cand)?;
            if s > current_score {
                current = cand;
                current_score = s;
            }
        }
        if current_score > best.1 {
            best = (current.clone(), current_score);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::dirichlet;
    use crate::measure::{lp_norm, StreamSummary};
    use std::f64::consts::{PI, TAU};

    fn grid_fn(values: Vec<f64>) -> GridFunction<f64> {
        let grid = Grid::new(&[values.len()]).unwrap();
        GridFunction::from_real(grid, &values).unwrap()
    }

    fn cos_fn(g: usize) -> GridFunction<f64> {
        grid_fn((0..g).map(|t| (TAU * t as f64 / g as f64).cos()).collect())
    }

    /// Independent oracle: sort moduli and delete the top fraction.
    fn sorted_ratio(v: &[f64], b: f64, p: f64) -> f64 {
        let mut a: Vec<f64> = v.iter().map(|x| x.abs()).collect();
        a.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let k = (b * a.len() as f64 + 1e-9).floor() as usize;
        if p.is_infinite() {
            return a[0] / a[k];
        }
        let all: f64 = a.iter().map(|x| x.powf(p)).sum();
        let out: f64 = a[k..].iter().map(|x| x.powf(p)).sum();
        (all / out).powf(1.0 / p)
    }

    #[test]
    fn ratio_examples() {
        let one = grid_fn(vec![1.0; 64]);
        for b in [0.0, 0.3, 0.9] {
            assert_eq!(remez_ratio(&one, b, f64::INFINITY).unwrap().ratio, Ratio::Finite(1.0));
        }
        let r = remez_ratio(&one, 0.75, 2.0).unwrap().ratio.value();
        assert!((r - 2.0).abs() < 1e-12);
        let r = remez_ratio(&cos_fn(4096), 0.5, f64::INFINITY).unwrap();
        assert!((r.ratio.value() - 2f64.sqrt()).abs() < 2e-3);
        assert_eq!(r.removed_cells, 2048);
        assert!(remez_ratio(&grid_fn(vec![0.0; 8]), 0.1, 1.0).is_err());
        assert!(remez_ratio(&one, 1.0, 1.0).is_err());
    }

    #[test]
    fn ratio_matches_sorting_oracle() {
        let v: Vec<f64> = (0..97).map(|i| ((i * 37 % 97) as f64 / 13.0).sin() + 0.01 * i as f64).collect();
        let g = grid_fn(v.clone());
        for b in [0.0, 0.05, 0.2, 0.5, 0.8] {
            for p in [0.5, 1.0, 2.0, 3.0, f64::INFINITY] {
                let got = remez_ratio(&g, b, p).unwrap().ratio.value();
                let want = sorted_ratio(&v, b, p);
                assert!((got - want).abs() < 1e-12 * want, "b={b} p={p}");
            }
        }
    }

    #[test]
    fn concentrated_function_has_infinite_ratio() {
        let mut v = vec![0.0; 16];
        v[3] = 1.0;
        let r = remez_ratio(&grid_fn(v), 0.1, 2.0).unwrap();
        assert_eq!(r.ratio, Ratio::Infinite);
        assert_eq!(r.ratio.to_string(), "inf");
    }

    #[test]
    fn streamed_ratio_matches_materialized() {
        let v: Vec<f64> = (0..256).map(|i| (i as f64 * 0.37).sin() * (1.0 + (i % 7) as f64)).collect();
        let g = grid_fn(v.clone());
        let mut s = StreamSummary::new(&Retain { exponents: vec![1.0, 2.0, 0.5], top_k: 200 });
        let abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
        s.push_chunk(&abs[..100], 1);
        s.push_chunk(&abs[100..], 1);
        let gs = GridFunction::streamed(g.grid().clone(), s);
        for b in [0.0, 0.1, 0.5] {
            for p in [0.5, 1.0, 2.0, f64::INFINITY] {
                let a = remez_ratio(&g, b, p).unwrap().ratio.value();
                let c = remez_ratio(&gs, b, p).unwrap().ratio.value();
                assert!((a - c).abs() < 1e-10 * a, "b={b} p={p}");
            }
        }
    }

    #[test]
    fn reference_bounds() {
        let c = remez_bound_reference(&[4], 0.1, RemezRegime::SmallMeasure).unwrap();
        assert!((c - 0.8f64.exp()).abs() < 1e-12);
        assert!((c - 2.2255).abs() < 1e-4);
        let c = remez_bound_reference(&[1], TAU - 1.0, RemezRegime::LargeMeasure).unwrap();
        assert!((c - 289.0).abs() < 1e-9);
        assert!(remez_bound_reference(&[1], TAU - 17.0 / 2.0, RemezRegime::LargeMeasure).is_err());
        assert!(remez_bound_reference(&[1], TAU - 17.0, RemezRegime::LargeMeasure).is_err());
        assert!(remez_bound_reference(&[3], 1e-12, RemezRegime::SmallMeasure).unwrap() - 1.0 < 1e-10);
        assert!(remez_bound_reference(&[3], PI / 2.0, RemezRegime::SmallMeasure).is_err());
        let c = remez_bound_reference(&[2, 2], 0.5, RemezRegime::Multivariate).unwrap();
        assert!((c - (4.0f64 * 2.0f64.sqrt()).exp()).abs() < 1e-9);
        assert!(remez_bound_reference(&[1, 4], 0.7, RemezRegime::Multivariate).is_err());
    }

    #[test]
    fn lemma_examples() {
        let one = grid_fn(vec![1.0; 128]);
        for p in [0.5, 1.0, 2.0] {
            let b = 0.5;
            let o = check_lemma_2_1(&one, b, p).unwrap();
            assert!(o.holds);
            let want = 2f64.powf(1.0 / p) - (1.0f64 - b / 2.0).powf(-1.0 / p);
            assert!((o.slack - want).abs() < 1e-12);
        }
        assert!(check_lemma_2_1(&cos_fn(1024), 0.25, 2.0).unwrap().holds);
        let o = check_lemma_2_2(&one, 0.25, 2.0, 1.0).unwrap();
        assert!(o.holds && o.slack.abs() < 1e-12);
        assert!(check_lemma_2_2(&cos_fn(1024), 0.25, 2.0, 1.0).unwrap().holds);
        assert!(check_lemma_2_2(&one, 0.25, 1.0, 2.0).is_err());
    }

    #[test]
    fn proposition_examples() {
        let one = grid_fn(vec![1.0; 128]);
        let o = check_prop_2_1(&one, 0.25, f64::INFINITY, 1.0).unwrap();
        assert!(o.holds && (o.rhs - 4.0).abs() < 1e-12);
        let d4 = sample(&dirichlet::<f64>(4), 8).unwrap();
        assert!(check_prop_2_1(&d4, 0.125, f64::INFINITY, 2.0).unwrap().holds);
        let o = check_prop_2_1p(&one, 0.5, 2.0, 1.0).unwrap();
        assert!(o.holds && (o.rhs - 2.0).abs() < 1e-12);
        assert!(check_prop_2_1p(&cos_fn(1024), 0.25, 4.0, 2.0).unwrap().holds);
    }

    #[test]
    fn budget_examples() {
        let p = |p, q, c, m| NikolskiiParams { p, q, c, m };
        assert_eq!(nikolskii_to_remez_budget(&p(f64::INFINITY, 1.0, 1.0, 1.0)).unwrap(), (0.5, 2.0));
        let (b, f) = nikolskii_to_remez_budget(&p(f64::INFINITY, 2.0, 1.0, 100.0)).unwrap();
        assert!((b - 1.0 / 400.0).abs() < 1e-15 && f == 2.0);
        assert_eq!(nikolskii_to_remez_budget(&p(1.0, 0.5, 1.0, 1.0)).unwrap().1, 4.0);
        assert!(nikolskii_to_remez_budget(&p(1.0, 2.0, 1.0, 1.0)).is_err());
        assert!(nikolskii_to_remez_budget(&p(2.0, 1.0, 0.5, 1.0)).is_err());
    }

    #[test]
    fn sparse_budget_examples() {
        let set = IndexSet::from_members(
            1,
            [-5, 1, 3, 9, 12].iter().map(|&k| crate::indexsets::MultiIndex::one_dim(k)),
            crate::indexsets::IndexSetLabel::Custom("five".into()),
        )
        .unwrap();
        assert_eq!(sparse_support_remez_budget(&set, 1.0, 4.0).unwrap(), 1.0 / 20.0);
        assert!((sparse_support_remez_budget(&set, 4.0, 4.0).unwrap() - 1.0 / 100.0).abs() < 1e-15);
        let two = hyperbolic_cross(2, 2).unwrap();
        assert!(sparse_support_remez_budget(&two, 3.0, 4.0).is_err());
        // A single harmonic has constant modulus: R = (1 - b)^{-1/p}.
        let g = sample(&TrigPoly::<f64>::monomial(crate::indexsets::MultiIndex::one_dim(3), Complex::new(1.0, 0.0)), 4).unwrap();
        let r = remez_ratio(&g, 0.5, 1.0).unwrap().ratio.value();
        assert!((r - 2.0).abs() < 1e-9 && r <= 2.0 + 1e-9);
    }

    #[test]
    fn univariate_sharp_bound_on_examples() {
        for n in 1..=8u64 {
            let f = dirichlet::<f64>(n);
            let g = sample(&f, 16).unwrap();
            for b in [0.01, 0.05, 0.1, 0.2] {
                let r = remez_ratio(&g, b, f64::INFINITY).unwrap().ratio.value();
                let c = remez_bound_normalized(&[n], b, RemezRegime::SmallMeasure).unwrap();
                assert!(r <= c * (1.0 + 1e-6), "n={n} b={b} r={r} c={c}");
            }
        }
    }

    #[test]
    fn hyperbolic_remez_bound_examples() {
        let setup = Theorem31Setup::<f64>::new(16, 2).unwrap();
        let v = crate::kernels::hyperbolic_vp_kernel::<f64>(16, 2).unwrap().restrict(&hyperbolic_cross(16, 2).unwrap());
        assert!(verify_theorem_3_1(&v, &setup).unwrap().outcome.holds);
        let h = TrigPoly::monomial(crate::indexsets::MultiIndex::new(&[4, 3]).unwrap(), Complex::new(1.0, 0.0));
        let rep = verify_theorem_3_1(&h, &setup).unwrap();
        assert!((rep.ratio.value() - 1.0).abs() < 1e-12 && rep.outcome.holds);
        let bad = TrigPoly::monomial(crate::indexsets::MultiIndex::new(&[5, 4]).unwrap(), Complex::new(1.0, 0.0));
        assert!(verify_theorem_3_1(&bad, &setup).is_err());
    }

    #[test]
    fn lower_search_examples() {
        let (_, r) = remez_lower_search::<f64>(1, 1, 0.0, 5, 1).unwrap();
        assert_eq!(r, Ratio::Finite(1.0));
        let (_, r) = remez_lower_search::<f64>(8, 1, 0.01, 60, 3).unwrap();
        assert!(r.value() <= (2.0 * 8.0 * TAU * 0.01f64).exp());
        let mut last = 0.0;
        for it in [1, 10, 40, 80] {
            let (_, r) = remez_lower_search::<f64>(4, 2, 0.05, it, 9).unwrap();
            assert!(r.value() >= last);
            last = r.value();
        }
    }

    #[test]
    fn norms_inside_and_outside_recombine() {
        let g = cos_fn(512);
        let rep = remez_ratio(&g, 0.3, 3.0).unwrap();
        let total = rep.norm_inside.powf(3.0) + rep.norm_outside.powf(3.0);
        assert!((total.powf(1.0 / 3.0) - lp_norm(&g, 3.0).unwrap()).abs() < 1e-12);
        assert_eq!(rep.extremal.unwrap().count(), rep.removed_cells);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn ratio_at_least_one_and_monotone_in_b(
                v in proptest::collection::vec(-3.0f64..3.0, 8..80),
                b1 in 0.0f64..0.9, b2 in 0.0f64..0.9,
                p in prop_oneof![Just(0.5), Just(1.0), Just(2.0), Just(4.0), Just(f64::INFINITY)],
            ) {
                prop_assume!(v.iter().any(|x| *x != 0.0));
                let g = grid_fn(v);
                let (lo, hi) = if b1 < b2 { (b1, b2) } else { (b2, b1) };
                let r_lo = remez_ratio(&g, lo, p).unwrap().ratio;
                let r_hi = remez_ratio(&g, hi, p).unwrap().ratio;
                prop_assert!(r_lo.value() >= 1.0);
                prop_assert!(r_lo.value() <= r_hi.value());
                prop_assert_eq!(remez_ratio(&g, 0.0, p).unwrap().ratio, Ratio::Finite(1.0));
            }

            #[test]
            fn implications_hold_on_arbitrary_samples(
                v in proptest::collection::vec(-3.0f64..3.0, 8..80),
                b in 0.01f64..0.9,
            ) {
                prop_assume!(v.iter().filter(|x| **x != 0.0).count() > 1);
                let g = grid_fn(v);
                for &(p, q) in &[(2.0, 1.0), (4.0, 0.5), (1.0, 0.5)] {
                    prop_assert!(check_lemma_2_1(&g, b, p).unwrap().holds);
                    prop_assert!(check_lemma_2_2(&g, b, p, q).unwrap().holds);
                    prop_assert!(check_prop_2_1(&g, b, p, q).unwrap().holds);
                    prop_assert!(check_prop_2_1p(&g, b, p, q).unwrap().holds);
                    prop_assert!(check_prop_2_2(&g, p, q).unwrap().0.holds);
                }
                prop_assert!(check_prop_2_1(&g, b, f64::INFINITY, 2.0).unwrap().holds);
            }
        }
    }
}
