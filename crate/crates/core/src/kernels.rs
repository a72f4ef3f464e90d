//! Dirichlet, de la Vallée Poussin, dyadic block, hyperbolic and layer
//! kernels, and the Jackson kernel.
//!
//! The multivariate kernels come in two forms: an expanded [`TrigPoly`] and a
//! [`SeparablePoly`] whose factors are univariate, which is what grid norms
//! at large degree are computed from.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::indexsets::{dyadic_level, hyperbolic_cross, MultiIndex, MAX_CROSS_N, MAX_DIM};
use crate::measure::{Retain, StreamSummary};
use crate::scalar::Real;
use crate::spectral::{Grid, SeparablePoly, TensorTerm, TrigPoly, DEFAULT_SUPPORT_CAP};

fn real<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// `D_m`: coefficient 1 for `|k| <= m`.
pub fn dirichlet<T: Real>(m: u64) -> TrigPoly<T> {
    let m = m as i64;
    TrigPoly::from_real_1d((-m..=m).map(|k| (k, T::one())))
}

/// `V_m = (1/m) sum_{l=m}^{2m-1} D_l`: flat on `|k| <= m`, ramp `(2m - |k|)/m` up to `2m`.
pub fn vallee_poussin_1d<T: Real>(m: u64) -> Result<TrigPoly<T>> {
    if m == 0 {
        return Err(Error::InvalidParameter("de la Vallée Poussin order must be >= 1".into()));
    }
    let m = m as i64;
    let mf = T::of_i64(m);
    Ok(TrigPoly::from_real_1d((-(2 * m - 1)..=(2 * m - 1)).map(|k| {
        let a = k.abs();
        (k, if a <= m { T::one() } else { T::of_i64(2 * m - a) / mf })
    })))
}

/// Univariate trapezoid: 1 on `|k| <= a`, `(c - |k|)/(c - a)` for `a < |k| < c`.
fn trapezoid<T: Real>(a: i64, c: i64) -> TrigPoly<T> {
    debug_assert!(c > a);
    let span = T::of_i64(c - a);
    TrigPoly::from_real_1d((-(c - 1)..=(c - 1)).map(|k| {
        let ak = k.abs();
        (k, if ak <= a { T::one() } else { T::of_i64(c - ak) / span })
    }))
}

/// Univariate dyadic block: `A_0 = 1`, `A_1 = V_1 - 1`, `A_s = V_{2^{s-1}} - V_{2^{s-2}}`.
pub fn block_1d<T: Real>(s: u32) -> TrigPoly<T> {
    match s {
        0 => TrigPoly::one(1),
        1 => TrigPoly::from_real_1d([(-1, T::one()), (1, T::one())]),
        _ => {
            let hi = vallee_poussin_1d::<T>(1 << (s - 1)).expect("order >= 1");
            let lo = vallee_poussin_1d::<T>(1 << (s - 2)).expect("order >= 1");
            hi.sub(&lo)
        }
    }
}

/// Memo of univariate blocks shared across tensor terms.
#[derive(Default)]
pub struct BlockCache<T> {
    blocks: HashMap<u32, Arc<TrigPoly<T>>>,
    sums: HashMap<(u32, u32), Arc<TrigPoly<T>>>,
}

impl<T: Real> BlockCache<T> {
    pub fn new() -> Self {
        Self { blocks: HashMap::new(), sums: HashMap::new() }
    }

    pub fn block(&mut self, s: u32) -> Arc<TrigPoly<T>> {
        self.blocks.entry(s).or_insert_with(|| Arc::new(block_1d(s))).clone()
    }

    /// `sum_{s=lo}^{hi} A_s` (univariate).
    pub fn block_sum(&mut self, lo: u32, hi: u32) -> Arc<TrigPoly<T>> {
        if let Some(p) = self.sums.get(&(lo, hi)) {
            return p.clone();
        }
        let mut acc = TrigPoly::zero(1);
        for s in lo..=hi {
            acc = acc.add(&self.block(s));
        }
        let p = Arc::new(acc);
        self.sums.insert((lo, hi), p.clone());
        p
    }
}

fn check_block_levels(s: &[u32]) -> Result<()> {
    if s.is_empty() || s.len() > MAX_DIM {
        return Err(Error::UnsupportedDimension(s.len()));
    }
    if let Some(&bad) = s.iter().find(|&&v| v > 24) {
        return Err(Error::InvalidParameter(format!("block level {bad} exceeds cap 24")));
    }
    Ok(())
}

/// `A_s(x) = prod_j A_{s_j}(x_j)`.
pub fn block_kernel<T: Real>(s: &[u32]) -> Result<TrigPoly<T>> {
    check_block_levels(s)?;
    let factors: Vec<TrigPoly<T>> = s.iter().map(|&sj| block_1d(sj)).collect();
    let refs: Vec<&TrigPoly<T>> = factors.iter().collect();
    TrigPoly::tensor(&refs)
}

pub fn block_kernel_separable<T: Real>(s: &[u32], cache: &mut BlockCache<T>) -> Result<SeparablePoly<T>> {
    check_block_levels(s)?;
    let mut out = SeparablePoly::new(s.len());
    out.push(TensorTerm::simple(real(T::one()), s.iter().map(|&sj| cache.block(sj)).collect()));
    Ok(out)
}

/// Breakpoints `(a_j, c_j, w_j)` of the first-axis trapezoids for the
/// hyperbolic kernel of parameter `n`.
///
/// `a_{-1} = 0`, `c_j = 2 a_{j-1} + 3`, `a_j = floor((a_{j-1} + c_j) / 2)`,
/// `w_j = floor(n / (a_{j-1} + 1))`, stopping at the first `a_J >= n`.
pub fn hyperbolic_schedule(n: u64) -> Vec<(i64, i64, u64)> {
    let mut out = Vec::new();
    let mut prev = 0i64;
    loop {
        let c = 2 * prev + 3;
        let a = (prev + c) / 2;
        out.push((a, c, n / (prev as u64 + 1)));
        if a as u64 >= n {
            return out;
        }
        prev = a;
    }
}

/// Hyperbolic de la Vallée Poussin kernel in separable form.
///
/// `d = 1`: the classical `V_N`. `d >= 2`:
/// `V_N = sum_j (U_j - U_{j-1})(x_1) V^{(d-1)}_{w_j}(x_2, ...)` with the
/// trapezoids `U_j` of [`hyperbolic_schedule`]. The coefficients equal 1 on
/// `Gamma(N)`, vanish outside `Gamma(2^d N)` and lie in `[0, 1]`.
pub fn hyperbolic_vp_separable<T: Real>(n: u64, d: usize) -> Result<SeparablePoly<T>> {
    if d == 0 || d > MAX_DIM {
        return Err(Error::UnsupportedDimension(d));
    }
    if n == 0 || n > MAX_CROSS_N {
        return Err(Error::InvalidParameter(format!("N={n} outside 1..={MAX_CROSS_N}")));
    }
    let mut memo: HashMap<(u64, usize), SeparablePoly<T>> = HashMap::new();
    Ok(hvp_rec(n, d, &mut memo))
}

fn hvp_rec<T: Real>(n: u64, d: usize, memo: &mut HashMap<(u64, usize), SeparablePoly<T>>) -> SeparablePoly<T> {
    if let Some(p) = memo.get(&(n, d)) {
        return p.clone();
    }
    let out = if d == 1 {
        let mut p = SeparablePoly::new(1);
        p.push(TensorTerm::simple(real(T::one()), vec![Arc::new(vallee_poussin_1d(n).expect("n >= 1"))]));
        p
    } else {
        let mut p = SeparablePoly::new(d);
        let mut prev: Option<TrigPoly<T>> = None;
        for (a, c, w) in hyperbolic_schedule(n) {
            let u = trapezoid::<T>(a, c);
            let delta = match &prev {
                Some(q) => u.sub(q),
                None => u.clone(),
            };
            prev = Some(u);
            let first = Arc::new(delta);
            let rest = hvp_rec(w, d - 1, memo);
            for t in rest.terms() {
                let mut factors = vec![vec![first.clone()]];
                factors.extend(t.factors.iter().cloned());
                p.push(TensorTerm::new(t.weight, factors));
            }
        }
        p
    };
    memo.insert((n, d), out.clone());
    out
}

/// Coefficient tolerance of the flatness check in [`hyperbolic_vp_kernel`].
pub const FLATNESS_TOLERANCE: f64 = 1e-12;

/// Expanded hyperbolic kernel, with flatness on `Gamma(N)` and support in
/// `Gamma(2^d N)` verified before returning.
pub fn hyperbolic_vp_kernel<T: Real>(n: u64, d: usize) -> Result<TrigPoly<T>> {
    let sep = hyperbolic_vp_separable::<T>(n, d)?;
    let poly = sep.to_trig_poly(DEFAULT_SUPPORT_CAP)?;
    let tol = T::lit(FLATNESS_TOLERANCE);
    for k in hyperbolic_cross(n, d)?.iter() {
        if (poly.coeff(k) - real(T::one())).norm() > tol {
            return Err(Error::KernelConstruction(n, d));
        }
    }
    let outer = (n << d) as u64;
    if poly.iter().any(|(k, _)| k.hyperbolic_size() > outer) {
        return Err(Error::KernelConstruction(n, d));
    }
    Ok(poly)
}

fn check_layer(n: u32, d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        return Err(Error::UnsupportedDimension(d));
    }
    if n == 0 || n > 20 {
        return Err(Error::InvalidParameter(format!("layer n={n} outside 1..=20")));
    }
    Ok(())
}

/// Level vectors `s` with `lo <= ||s||_1 <= hi`.
fn level_vectors(d: usize, lo: u32, hi: u32) -> Vec<Vec<u32>> {
    fn rec(d: usize, lo: u32, hi: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        let used: u32 = prefix.iter().sum();
        if prefix.len() == d {
            if used >= lo {
                out.push(prefix.clone());
            }
            return;
        }
        for s in 0..=(hi - used) {
            prefix.push(s);
            rec(d, lo, hi, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, lo, hi, &mut Vec::new(), &mut out);
    out
}

/// `Delta V_n = sum_{n <= ||s||_1 <= n + d} A_s` in separable form.
///
/// Terms are grouped by `s_1` so the inner sums over the remaining levels are
/// single univariate factors when `d = 2`.
pub fn layer_vp_separable<T: Real>(n: u32, d: usize, cache: &mut BlockCache<T>) -> Result<SeparablePoly<T>> {
    check_layer(n, d)?;
    let top = n + d as u32;
    let mut out = SeparablePoly::new(d);
    match d {
        1 => {
            out.push(TensorTerm::simple(real(T::one()), vec![cache.block_sum(n, top)]));
        }
        2 => {
            for s1 in 0..=top {
                let lo = n.saturating_sub(s1);
                let hi = top - s1;
                out.push(TensorTerm::simple(real(T::one()), vec![cache.block(s1), cache.block_sum(lo, hi)]));
            }
        }
        _ => {
            for s in level_vectors(d, n, top) {
                out.push(TensorTerm::simple(real(T::one()), s.iter().map(|&sj| cache.block(sj)).collect()));
            }
        }
    }
    Ok(out)
}

pub fn layer_vp_kernel<T: Real>(n: u32, d: usize) -> Result<TrigPoly<T>> {
    layer_vp_separable(n, d, &mut BlockCache::new())?.to_trig_poly(DEFAULT_SUPPORT_CAP)
}

/// `sum_{||s||_1 <= n + d} A_s`: flat on the step cross `Q_n`.
pub fn step_cross_kernel_separable<T: Real>(n: u32, d: usize, cache: &mut BlockCache<T>) -> Result<SeparablePoly<T>> {
    check_layer(n.max(1), d)?;
    let top = n + d as u32;
    let mut out = SeparablePoly::new(d);
    if d == 2 {
        for s1 in 0..=top {
            out.push(TensorTerm::simple(real(T::one()), vec![cache.block(s1), cache.block_sum(0, top - s1)]));
        }
    } else {
        for s in level_vectors(d, 0, top) {
            out.push(TensorTerm::simple(real(T::one()), s.iter().map(|&sj| cache.block(sj)).collect()));
        }
    }
    Ok(out)
}

/// Jackson kernel `(sin(nt/2) / (n sin(t/2)))^{2r}`, built as the `r`-th
/// power of the normalized Fejér kernel `(1/n^2) sum_{|k|<n} (n - |k|) e^{ikt}`.
pub fn jackson_kernel<T: Real>(n: u64, r: u32) -> Result<TrigPoly<T>> {
    if n == 0 || r == 0 {
        return Err(Error::InvalidParameter(format!("Jackson kernel needs n >= 1, r >= 1 (n={n}, r={r})")));
    }
    let ni = n as i64;
    let n2 = T::of_i64(ni * ni);
    let base = TrigPoly::from_real_1d((-(ni - 1)..=(ni - 1)).map(|k| (k, T::of_i64(ni - k.abs()) / n2)));
    let mut acc = base.clone();
    for _ in 1..r {
        acc = acc.multiply(&base)?;
    }
    Ok(acc)
}

/// Kernel description parsed from strings such as `vp:N=32,d=2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KernelSpec {
    Dirichlet { m: u64 },
    ValleePoussin1d { m: u64 },
    Block { s: Vec<u32> },
    HyperbolicVp { n: u64, d: usize },
    LayerVp { n: u32, d: usize },
    Jackson { n: u64, r: u32 },
}

impl KernelSpec {
    pub fn dim(&self) -> usize {
        match self {
            KernelSpec::Dirichlet { .. } | KernelSpec::ValleePoussin1d { .. } | KernelSpec::Jackson { .. } => 1,
            KernelSpec::Block { s } => s.len(),
            KernelSpec::HyperbolicVp { d, .. } | KernelSpec::LayerVp { d, .. } => *d,
        }
    }

    pub fn build<T: Real>(&self) -> Result<TrigPoly<T>> {
        match self {
            KernelSpec::Dirichlet { m } => Ok(dirichlet(*m)),
            KernelSpec::ValleePoussin1d { m } => vallee_poussin_1d(*m),
            KernelSpec::Block { s } => block_kernel(s),
            KernelSpec::HyperbolicVp { n, d } => hyperbolic_vp_kernel(*n, *d),
            KernelSpec::LayerVp { n, d } => layer_vp_kernel(*n, *d),
            KernelSpec::Jackson { n, r } => jackson_kernel(*n, *r),
        }
    }

    /// Separable form (every kernel here has one).
    pub fn build_separable<T: Real>(&self) -> Result<SeparablePoly<T>> {
        let mut cache = BlockCache::new();
        match self {
            KernelSpec::HyperbolicVp { n, d } => hyperbolic_vp_separable(*n, *d),
            KernelSpec::LayerVp { n, d } => layer_vp_separable(*n, *d, &mut cache),
            KernelSpec::Block { s } => block_kernel_separable(s, &mut cache),
            other => {
                let mut p = SeparablePoly::new(1);
                p.push(TensorTerm::simple(real(T::one()), vec![Arc::new(other.build()?)]));
                Ok(p)
            }
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Dirichlet { m } => write!(f, "dirichlet:m={m}"),
            KernelSpec::ValleePoussin1d { m } => write!(f, "vp1d:m={m}"),
            KernelSpec::Block { s } => {
                let parts: Vec<String> = s.iter().map(|v| v.to_string()).collect();
                write!(f, "block:s={}", parts.join(","))
            }
            KernelSpec::HyperbolicVp { n, d } => write!(f, "vp:N={n},d={d}"),
            KernelSpec::LayerVp { n, d } => write!(f, "layer:n={n},d={d}"),
            KernelSpec::Jackson { n, r } => write!(f, "jackson:n={n},r={r}"),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        let mut params: Vec<(String, Vec<u64>)> = Vec::new();
        for tok in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let bad = |e: std::num::ParseIntError| Error::Parse(format!("`{tok}` in kernel spec: {e}"));
            match tok.split_once('=') {
                Some((k, v)) => params.push((k.trim().to_string(), vec![v.trim().parse().map_err(bad)?])),
                None => match params.last_mut() {
                    Some((_, vals)) => vals.push(tok.parse().map_err(bad)?),
                    None => return Err(Error::Parse(format!("bare value `{tok}` in kernel spec"))),
                },
            }
        }
        let get = |key: &str| -> Result<u64> {
            params
                .iter()
                .find(|(k, _)| k == key)
                .and_then(|(_, v)| (v.len() == 1).then(|| v[0]))
                .ok_or_else(|| Error::Parse(format!("kernel spec `{text}` needs a single `{key}=`")))
        };
        let get_or = |key: &str, default: u64| -> Result<u64> {
            if params.iter().any(|(k, _)| k == key) { get(key) } else { Ok(default) }
        };
        let spec = match kind.trim() {
            "dirichlet" => KernelSpec::Dirichlet { m: get("m")? },
            "vp1d" => KernelSpec::ValleePoussin1d { m: get("m")? },
            "vp" => KernelSpec::HyperbolicVp { n: get("N")?, d: get_or("d", 2)? as usize },
            "layer" => KernelSpec::LayerVp { n: get("n")? as u32, d: get_or("d", 2)? as usize },
            "jackson" => KernelSpec::Jackson { n: get("n")?, r: get_or("r", 1)? as u32 },
            "block" => {
                let s = params
                    .iter()
                    .find(|(k, _)| k == "s")
                    .map(|(_, v)| v.iter().map(|&x| x as u32).collect())
                    .ok_or_else(|| Error::Parse(format!("kernel spec `{text}` needs `s=`")))?;
                KernelSpec::Block { s }
            }
            other => return Err(Error::Parse(format!("unknown kernel kind `{other}`"))),
        };
        Ok(spec)
    }
}

/// Grid `L_1` and `L_inf` norms of a kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelNorms<T> {
    pub l1: T,
    pub linf: T,
}

/// Power-of-two grid with `oversample * (2 deg + 1)` nodes per axis.
pub fn kernel_grid<T: Real>(k: &SeparablePoly<T>, oversample: usize) -> Result<Grid> {
    Grid::for_degrees(&k.degrees(), oversample)
}

pub fn separable_summary<T: Real>(k: &SeparablePoly<T>, grid: &Grid, retain: &Retain<T>) -> Result<StreamSummary<T>> {
    k.grid_summary(grid, retain)
}

/// `L_1` and `L_inf` norms of a separable kernel on `grid`.
pub fn kernel_norms<T: Real>(k: &SeparablePoly<T>, grid: &Grid) -> Result<KernelNorms<T>> {
    let s = k.grid_summary(grid, &Retain { exponents: vec![T::one()], top_k: 0 })?;
    Ok(KernelNorms { l1: s.lp_norm(T::one())?, linf: s.max_abs() })
}

/// Coefficient of a univariate block at `k`, without building the block.
pub fn block_coefficient(s: u32, k: i64) -> f64 {
    let vp = |m: i64| -> f64 {
        let a = k.abs();
        if a <= m {
            1.0
        } else if a < 2 * m {
            (2 * m - a) as f64 / m as f64
        } else {
            0.0
        }
    };
    match s {
        0 => (k == 0) as u8 as f64,
        1 => (k.abs() == 1) as u8 as f64,
        _ => vp(1 << (s - 1)) - vp(1 << (s - 2)),
    }
}

/// Levels `s` at which `A_s` can be nonzero at frequency `k`.
pub fn block_levels_at(k: i64) -> [u32; 2] {
    let b = dyadic_level(k);
    [b, b + 1]
}

#[doc(hidden)]
pub fn monomial_2d<T: Real>(k1: i32, k2: i32) -> TrigPoly<T> {
    TrigPoly::monomial(MultiIndex::from_slice(&[k1, k2]), real(T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indexsets::{dyadic_block_wide, hyperbolic_layer, step_hyperbolic};
    use crate::measure::lp_norm;
    use crate::spectral::{evaluate_on_grid, EvalOptions};

    fn c1(p: &TrigPoly<f64>, k: i32) -> f64 {
        p.coeff(&MultiIndex::one_dim(k)).re
    }

    #[test]
    fn dirichlet_examples() {
        assert_eq!(dirichlet::<f64>(0), TrigPoly::one(1));
        let d1 = dirichlet::<f64>(1);
        assert!((d1.eval(&[0.7]).re - (1.0 + 2.0 * 0.7f64.cos())).abs() < 1e-14);
        for m in 0..10 {
            assert_eq!(dirichlet::<f64>(m).parseval_sq(), (2 * m + 1) as f64);
        }
    }

    #[test]
    fn vallee_poussin_examples() {
        assert_eq!(vallee_poussin_1d::<f64>(1).unwrap(), dirichlet(1));
        assert_eq!(c1(&vallee_poussin_1d(4).unwrap(), 6), 0.5);
        // Independent construction as the average of Dirichlet kernels.
        for m in [1u64, 2, 3, 5, 8] {
            let mut avg = TrigPoly::zero(1);
            for l in m..2 * m {
                avg = avg.add(&dirichlet(l));
            }
            let avg = avg.scale_real(1.0 / m as f64);
            assert!(avg.max_coeff_diff(&vallee_poussin_1d(m).unwrap()) < 1e-14);
        }
        assert!(vallee_poussin_1d::<f64>(0).is_err());
    }

    #[test]
    fn vallee_poussin_l1_bounded_by_three() {
        for m in 1..=64u64 {
            let v = vallee_poussin_1d::<f64>(m).unwrap();
            let grid = Grid::for_degrees(&[2 * m as i64], 8).unwrap();
            let g = evaluate_on_grid(&v, &grid, &EvalOptions::default()).unwrap();
            assert!(lp_norm(&g, 1.0).unwrap() <= 3.0, "m={m}");
        }
    }

    #[test]
    fn block_examples() {
        let a1 = block_1d::<f64>(1);
        assert!((a1.eval(&[0.4]).re - 2.0 * 0.4f64.cos()).abs() < 1e-14);
        assert_eq!(block_kernel::<f64>(&[0, 0]).unwrap(), TrigPoly::one(2));
        let a = block_kernel::<f64>(&[3, 4]).unwrap();
        let wide = dyadic_block_wide(&[3, 4]).unwrap();
        assert!(a.support().is_subset(&wide));
        for s in 0..12 {
            let b = block_1d::<f64>(s);
            for k in -(1 << 12)..(1 << 12) {
                assert_eq!(c1(&b, k as i32), block_coefficient(s, k));
            }
        }
    }

    #[test]
    fn blocks_telescope_to_one() {
        for k in -300i64..300 {
            let total: f64 = (0..12).map(|s| block_coefficient(s, k)).sum();
            assert!((total - 1.0).abs() < 1e-15, "k={k}");
            let [lo, hi] = block_levels_at(k);
            for s in 0..12 {
                if s != lo && s != hi {
                    assert_eq!(block_coefficient(s, k), 0.0);
                }
            }
        }
    }

    #[test]
    fn schedule_properties() {
        for n in 1..500u64 {
            let sch = hyperbolic_schedule(n);
            assert!(sch.last().unwrap().0 as u64 >= n);
            let mut prev_c = 0;
            for &(a, c, w) in &sch {
                assert!(a >= prev_c, "trapezoids must nest");
                assert!(w >= 1);
                prev_c = c;
            }
        }
        let sch = hyperbolic_schedule(16);
        let a: Vec<i64> = sch.iter().map(|s| s.0).collect();
        assert_eq!(a, vec![1, 3, 6, 10, 16]);
    }

    /// Independent oracle: the product over axes of the univariate
    /// de la Vallée Poussin ramp evaluated at k, summed along the schedule.
    fn hvp_coefficient_oracle(n: u64, k: &[i64]) -> f64 {
        if k.len() == 1 {
            let m = n as i64;
            let a = k[0].abs();
            return if a <= m { 1.0 } else if a < 2 * m { (2 * m - a) as f64 / m as f64 } else { 0.0 };
        }
        let trap = |a: i64, c: i64, x: i64| -> f64 {
            let x = x.abs();
            if x <= a { 1.0 } else if x < c { (c - x) as f64 / (c - a) as f64 } else { 0.0 }
        };
        let mut total = 0.0;
        let mut prev: Option<(i64, i64)> = None;
        for (a, c, w) in hyperbolic_schedule(n) {
            let u = trap(a, c, k[0]);
            let up = prev.map(|(pa, pc)| trap(pa, pc, k[0])).unwrap_or(0.0);
            prev = Some((a, c));
            if u != up {
                total += (u - up) * hvp_coefficient_oracle(w, &k[1..]);
            }
        }
        total
    }

    #[test]
    fn hyperbolic_kernel_flat_and_supported() {
        for d in 1..=2usize {
            for n in [1u64, 2, 3, 4, 5, 8, 13, 16, 32, 64] {
                let v = hyperbolic_vp_kernel::<f64>(n, d).unwrap();
                for k in hyperbolic_cross(n, d).unwrap().iter() {
                    assert!((v.coeff(k).re - 1.0).abs() < 1e-12);
                }
                for (k, c) in v.iter() {
                    assert!(k.hyperbolic_size() <= n << d);
                    assert!(c.im == 0.0 && c.re >= -1e-15 && c.re <= 1.0 + 1e-12);
                    assert!((c.re - hvp_coefficient_oracle(n, &k.to_i64_vec())).abs() < 1e-12);
                }
            }
        }
        let v = hyperbolic_vp_kernel::<f64>(4, 1).unwrap();
        assert_eq!(v.max_degree(0), 7);
        let v3 = hyperbolic_vp_kernel::<f64>(6, 3).unwrap();
        assert!(v3.iter().all(|(k, _)| k.hyperbolic_size() <= 48));
    }

    #[test]
    fn hyperbolic_kernel_small_case() {
        let v = hyperbolic_vp_kernel::<f64>(1, 2).unwrap();
        for k1 in -1..=1 {
            for k2 in -1..=1 {
                assert!((v.coeff(&MultiIndex::from_slice(&[k1, k2])).re - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn layer_kernel_reproduces_layer() {
        for n in [3u32, 6] {
            let v = layer_vp_kernel::<f64>(n, 2).unwrap();
            for k in hyperbolic_layer(n, 2).unwrap().iter() {
                assert!((v.coeff(k).re - 1.0).abs() < 1e-12);
            }
            for k in step_hyperbolic(n - 3, 2).unwrap().iter() {
                assert_eq!(v.coeff(k).norm(), 0.0);
            }
        }
        let v = layer_vp_kernel::<f64>(4, 1).unwrap();
        for k in 8..16 {
            assert!((c1(&v, k) - 1.0).abs() < 1e-15);
        }
        assert_eq!(c1(&v, 1), 0.0);
    }

    #[test]
    fn layer_kernel_separable_matches_blockwise_sum() {
        let mut cache = BlockCache::new();
        let sep = layer_vp_separable::<f64>(5, 2, &mut cache).unwrap().to_trig_poly(1 << 22).unwrap();
        let mut direct = TrigPoly::zero(2);
        for s1 in 0..=7u32 {
            for s2 in 0..=7u32 {
                if (5..=7).contains(&(s1 + s2)) {
                    direct = direct.add(&block_kernel(&[s1, s2]).unwrap());
                }
            }
        }
        assert!(sep.max_coeff_diff(&direct) < 1e-13);
    }

    #[test]
    fn jackson_examples() {
        let j = jackson_kernel::<f64>(2, 1).unwrap();
        let want = TrigPoly::from_real_1d([(-1, 0.25), (0, 0.5), (1, 0.25)]);
        assert!(j.max_coeff_diff(&want) < 1e-15);
        for (n, r) in [(1u64, 1u32), (3, 2), (8, 2), (5, 3)] {
            let j = jackson_kernel::<f64>(n, r).unwrap();
            assert!((j.eval(&[0.0]).re - 1.0).abs() < 1e-13);
            assert!(j.max_degree(0) <= (r as i64) * (n as i64 - 1));
        }
        let j = jackson_kernel::<f64>(8, 2).unwrap();
        let g = evaluate_on_grid(&j, &Grid::new(&[4096]).unwrap(), &EvalOptions::default()).unwrap();
        assert!(g.values().unwrap().iter().all(|v| v.re >= -1e-15));
        // Against the closed form away from t = 0.
        for t in [0.3f64, 1.0, 2.0, 3.0] {
            let closed = ((8.0 * t / 2.0).sin() / (8.0 * (t / 2.0).sin())).powi(4);
            assert!((j.eval(&[t]).re - closed).abs() < 1e-13);
        }
    }

    #[test]
    fn spec_parsing() {
        let cases = [
            ("vp:N=32,d=2", KernelSpec::HyperbolicVp { n: 32, d: 2 }),
            ("jackson:n=16,r=2", KernelSpec::Jackson { n: 16, r: 2 }),
            ("dirichlet:m=4", KernelSpec::Dirichlet { m: 4 }),
            ("vp1d:m=3", KernelSpec::ValleePoussin1d { m: 3 }),
            ("block:s=3,4", KernelSpec::Block { s: vec![3, 4] }),
            ("layer:n=6,d=2", KernelSpec::LayerVp { n: 6, d: 2 }),
        ];
        for (text, spec) in cases {
            let parsed: KernelSpec = text.parse().unwrap();
            assert_eq!(parsed, spec);
            assert_eq!(parsed.to_string().parse::<KernelSpec>().unwrap(), spec);
        }
        assert!("vp:d=2".parse::<KernelSpec>().is_err());
        assert!("foo:m=1".parse::<KernelSpec>().is_err());
    }

    #[test]
    fn separable_and_sparse_norms_agree() {
        let sep = hyperbolic_vp_separable::<f64>(8, 2).unwrap();
        let poly = sep.to_trig_poly(1 << 20).unwrap();
        let grid = kernel_grid(&sep, 2).unwrap();
        let norms = kernel_norms(&sep, &grid).unwrap();
        let g = evaluate_on_grid(&poly, &grid, &EvalOptions::default()).unwrap();
        assert!((norms.l1 - lp_norm(&g, 1.0).unwrap()).abs() < 1e-10 * norms.l1);
        assert!((norms.linf - lp_norm(&g, f64::INFINITY).unwrap()).abs() < 1e-10 * norms.linf);
        // Real, even, nonnegative coefficients: the sup sits at the origin.
        let sum: f64 = poly.iter().map(|(_, c)| c.re).sum();
        assert!((norms.linf - sum).abs() < 1e-9 * sum);
    }

    #[test]
    fn single_precision_kernels() {
        let v = hyperbolic_vp_kernel::<f32>(8, 2).unwrap();
        assert!(v.len() > 0);
        let j = jackson_kernel::<f32>(4, 2).unwrap();
        assert!((j.eval(&[0.0f32]).re - 1.0).abs() < 1e-5);
    }
}
