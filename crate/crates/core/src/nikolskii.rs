//! Nikol'skii ratios `||f||_p / ||f||_q`, candidate families for the
//! supremum over `T(N)`, and the Jackson-kernel lower-bound witness.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::indexsets::{hyperbolic_cross, MultiIndex};
use crate::kernels::{dirichlet, hyperbolic_vp_kernel, jackson_kernel, layer_vp_kernel};
use crate::measure::{lp_norm, GridFunction};
use crate::remez::{sample, CheckOutcome};
use crate::sample::{draw_rng, random_poly_on};
use crate::scalar::Real;
use crate::scaling::ScalingRow;
use crate::spectral::TrigPoly;

/// `||g||_p / ||g||_q` for `q < p`.
pub fn nikolskii_ratio<T: Real>(g: &GridFunction<T>, p: T, q: T) -> Result<T> {
    if !(q > T::zero() && q < p) {
        return Err(Error::InvalidParameter(format!("need 0 < q < p (p={p}, q={q})")));
    }
    if g.is_zero() {
        return Err(Error::ZeroFunction);
    }
    Ok(lp_norm(g, p)? / lp_norm(g, q)?)
}

/// A ratio measured on one function.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioSample<T> {
    pub witness: String,
    pub p: T,
    pub q: T,
    pub ratio: T,
    pub n: u64,
    pub dim: usize,
}

/// Predicted order of `sup_{f in T(N)} ||f||_p / ||f||_q`:
/// `N^{1/q} (log2 N)^{(d-1)(1-1/q)_+}` for `p = inf`, `N^{1/q-1/p}` otherwise.
pub fn nikolskii_rate(n: u64, d: usize, p: f64, q: f64) -> f64 {
    let nf = n as f64;
    if p.is_infinite() {
        let log_exp = (d as f64 - 1.0) * (1.0 - 1.0 / q).max(0.0);
        nf.powf(1.0 / q) * nf.max(2.0).log2().powf(log_exp)
    } else {
        nf.powf(1.0 / q - 1.0 / p)
    }
}

/// Sampling options for [`nikolskii_sup_estimate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerConfig {
    pub draws: usize,
    pub seed: u64,
    pub oversample: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { draws: 8, seed: 0, oversample: 4 }
    }
}

fn family<T: Real>(n: u64, d: usize) -> Result<Vec<(String, TrigPoly<T>)>> {
    let mut out = Vec::new();
    let cross = hyperbolic_cross(n, d)?;
    let ones = |set: &crate::IndexSet| {
        TrigPoly::from_terms(set.dim(), set.iter().map(|k| (*k, Complex::new(T::one(), T::zero()))).collect::<Vec<_>>())
    };
    if d == 1 {
        out.push((format!("dirichlet:m={n}"), dirichlet(n)));
        out.push((format!("jackson:n={},r=1", n + 1), jackson_kernel(n + 1, 1)?));
        if n >= 2 {
            out.push((format!("jackson:n={},r=2", n / 2 + 1), jackson_kernel(n / 2 + 1, 2)?));
        }
    } else {
        out.push((format!("indicator:Gamma({n})"), ones(&cross)?));
    }
    let m = (n >> d).max(1);
    out.push((format!("vp:N={m},d={d}"), hyperbolic_vp_kernel(m, d)?.restrict(&cross)));
    if d == 2 {
        let layer = (n as f64).log2().floor() as u32;
        if layer >= 1 {
            out.push((format!("layer:n={layer},d=2|Gamma({n})"), layer_vp_kernel(layer, 2)?.restrict(&cross)));
        }
        // Tensor products of univariate Jackson kernels inside Gamma(N).
        let mut n1 = 1u64;
        while n1 <= n {
            let n2 = n / n1;
            let a = jackson_kernel::<T>(n1.max(1), 1)?;
            let b = jackson_kernel::<T>(n2 + 1, 1)?;
            let t = TrigPoly::tensor(&[&a, &b])?.restrict(&cross);
            if !t.is_zero() {
                out.push((format!("jackson2:n1={n1},n2={}", n2 + 1), t));
            }
            n1 *= 4;
        }
    }
    Ok(out)
}

/// Largest ratio over a candidate family in `T(Gamma(N))` plus seeded random
/// draws; a lower bound on the supremum, reported against its predicted rate.
pub fn nikolskii_sup_estimate<T: Real>(n: u64, d: usize, p: T, q: T, cfg: &SamplerConfig) -> Result<ScalingRow> {
    let mut cands = family::<T>(n, d)?;
    let cross = hyperbolic_cross(n, d)?;
    for i in 0..cfg.draws {
        let mut rng = draw_rng(cfg.seed, i as u64);
        cands.push((format!("random:{i}"), random_poly_on(&cross, &mut rng)?));
    }
    let mut best: Option<(String, T, String)> = None;
    for (name, f) in cands {
        let g = sample(&f, cfg.oversample)?;
        let r = nikolskii_ratio(&g, p, q)?;
        if best.as_ref().map_or(true, |b| r > b.1) {
            best = Some((name, r, g.grid().describe()));
        }
    }
    let (witness, r, grid) = best.expect("family is nonempty");
    let rate = nikolskii_rate(n, d, p.to_f64_lossy(), q.to_f64_lossy());
    Ok(ScalingRow::new(n as f64, r.to_f64_lossy(), rate, witness, grid).with_meta(1e-6, cfg.seed))
}

/// `||f||_inf <= (C N)^{1/q} ||f||_q` for `0 < q < 1`, with `C` the
/// `q = 1` constant (`||f||_inf / (N ||f||_1)` of `f` itself when not given).
pub fn check_theorem_3_5_upper<T: Real>(g: &GridFunction<T>, n: u64, q: T, c: Option<T>) -> Result<CheckOutcome<T>> {
    if !(q > T::zero() && q < T::one()) {
        return Err(Error::InvalidParameter(format!("needs 0 < q < 1, got {q}")));
    }
    let nf = T::lit(n as f64);
    let sup = lp_norm(g, T::infinity())?;
    let c = match c {
        Some(c) => c,
        None => sup / (nf * lp_norm(g, T::one())?),
    };
    let rhs = (c * nf).powf(T::one() / q) * lp_norm(g, q)?;
    Ok(CheckOutcome::compare(sup, rhs, T::lit(1e-3)))
}

/// `||f||_p <= ||f||_inf^{1 - q/p} ||f||_q^{q/p}`.
pub fn check_interpolation_chain<T: Real>(g: &GridFunction<T>, p: T, q: T) -> Result<CheckOutcome<T>> {
    if !(q > T::zero() && q < p && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("need 0 < q < p < inf (p={p}, q={q})")));
    }
    let rhs = lp_norm(g, T::infinity())?.powf(T::one() - q / p) * lp_norm(g, q)?.powf(q / p);
    Ok(CheckOutcome::compare(lp_norm(g, p)?, rhs, T::lit(1e-9)))
}

/// Smallest Jackson exponent admissible for both exponents.
pub fn jackson_min_exponent(p: f64, q: f64) -> u32 {
    let e = p.min(q);
    if e >= 1.0 {
        1
    } else {
        (1.0 / (2.0 * e)).floor() as u32 + 1
    }
}

/// Ratio of the Jackson kernel `J_{n,r}`, the witness for the lower bound
/// `n^{1/q - 1/p}`. Needs `r > 1/(2e)` for each exponent `e < 1`.
pub fn jackson_lower_bound<T: Real>(n: u64, r: u32, p: T, q: T, oversample: usize) -> Result<RatioSample<T>> {
    for e in [p, q] {
        if e < T::one() && !(T::lit(r as f64) > T::one() / (T::lit(2.0) * e)) {
            return Err(Error::JacksonExponent { r, p: e.to_f64_lossy() });
        }
    }
    let j = jackson_kernel::<T>(n, r)?;
    let g = sample(&j, oversample)?;
    Ok(RatioSample { witness: format!("jackson:n={n},r={r}"), p, q, ratio: nikolskii_ratio(&g, p, q)?, n, dim: 1 })
}

#[doc(hidden)]
pub fn harmonic<T: Real>(k: &[i32]) -> Result<TrigPoly<T>> {
    Ok(TrigPoly::monomial(MultiIndex::new(k)?, Complex::new(T::one(), T::zero())))
}
