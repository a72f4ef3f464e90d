//! Bivariate Riesz products over residue families of dyadic blocks, their
//! spectral decomposition, and the corrected layer kernel built from them.
//!
//! For a family `H = H_n(a, b)` of `N` level vectors with normalization
//! `M = max_s ||A_s||_inf`, the product
//! `Phi = prod_{s in H} (1 + i A_s / (M sqrt N))` expands over subsets `S` of
//! `H` into terms `(i / (M sqrt N))^{|S|} prod_{s in S} A_s`. Terms with
//! `|S| >= 2` make up the remainder `w`, whose spectrum avoids `Q_{n+a-6}`.
//! Since `Im Phi = (1/sqrt N) sum_s t_s + Im w`, the corrected family
//! `M sqrt N Im Phi` equals `sum_s A_s` up to a polynomial orthogonal to
//! `T(Q_n)`, and its sup norm is at most `M sqrt N |Phi|`.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::indexsets::{hyperbolic_layer, layer_residue_family, MultiIndex, ResidueFamily};
use crate::kernels::{block_kernel, layer_vp_separable, BlockCache};
use crate::measure::{Retain, StreamSummary};
use crate::remez::{check_with_kernel, KernelRemezReport, KernelRemezSetup};
use crate::scalar::Real;
use crate::spectral::{Grid, SeparablePoly, TensorTerm, TrigPoly, DEFAULT_SUPPORT_CAP};

/// Modulus used by the corrected layer kernel.
pub const RIESZ_MODULUS: u32 = 6;

/// Largest family whose product is expanded term by term (`2^N` subsets).
pub const MAX_FAMILY: usize = 16;

/// Grid on which univariate block maxima are taken. Every power-of-two grid
/// up to this size is a subgrid, so `|t_s| <= 1` holds at all of its nodes.
const SUP_GRID: usize = 1 << 20;

/// Memo of `||A_s||_inf` for univariate blocks.
#[derive(Default)]
pub struct SupCache<T> {
    sups: HashMap<u32, T>,
}

impl<T: Real> SupCache<T> {
    pub fn new() -> Self {
        Self { sups: HashMap::new() }
    }

    pub fn block_sup(&mut self, s: u32, blocks: &mut BlockCache<T>) -> Result<T> {
        if let Some(&v) = self.sups.get(&s) {
            return Ok(v);
        }
        let f = blocks.block(s);
        let size = SUP_GRID.max(Grid::for_degrees(&[f.max_degree(0)], 8)?.size(0));
        let mut p = SeparablePoly::new(1);
        p.push(TensorTerm::simple(Complex::new(T::one(), T::zero()), vec![f]));
        let v = p.grid_summary(&Grid::new(&[size])?, &Retain { exponents: Vec::new(), top_k: 0 })?.max_abs();
        self.sups.insert(s, v);
        Ok(v)
    }
}

/// A residue family together with its normalization.
#[derive(Clone, Debug)]
pub struct RieszConfig<T> {
    pub n: u32,
    pub a: u32,
    pub b: u32,
    pub family: ResidueFamily,
    /// `max_{s in H} ||A_s||_inf`.
    pub m: T,
    /// `|H_n(a, b)|`.
    pub count: usize,
}

impl<T: Real> RieszConfig<T> {
    pub fn new(n: u32, a: u32, b: u32) -> Result<Self> {
        Self::with_caches(n, a, b, &mut BlockCache::new(), &mut SupCache::new())
    }

    pub fn with_caches(n: u32, a: u32, b: u32, blocks: &mut BlockCache<T>, sups: &mut SupCache<T>) -> Result<Self> {
        if a < 6 {
            return Err(Error::InvalidParameter(format!("modulus a={a} must be >= 6")));
        }
        let family = layer_residue_family(n, a, b)?;
        if family.is_empty() {
            return Err(Error::EmptyFamily { n, a, b });
        }
        if family.len() > MAX_FAMILY {
            return Err(Error::InvalidParameter(format!("family of {} products exceeds {MAX_FAMILY}", family.len())));
        }
        let mut m = T::zero();
        for s in &family.members {
            m = m.max(sups.block_sup(s[0], blocks)? * sups.block_sup(s[1], blocks)?);
        }
        let count = family.len();
        Ok(Self { n, a, b, family, m, count })
    }

    /// `(1 + 1/N)^{N/2}`, the pointwise bound on `|Phi|`.
    pub fn product_bound(&self) -> T {
        let nf = T::lit(self.count as f64);
        (T::one() + T::one() / nf).powf(nf / T::lit(2.0))
    }

    /// Level below which the remainder has no spectrum: `n + a - 6`.
    pub fn orthogonal_level(&self) -> u32 {
        self.n + self.a - 6
    }
}

/// `Phi` as a sum of `2^N` lazily multiplied tensor terms; term `S` has
/// `|S|` factors on each axis.
pub fn riesz_product_separable<T: Real>(cfg: &RieszConfig<T>, blocks: &mut BlockCache<T>) -> SeparablePoly<T> {
    let scale = Complex::new(T::zero(), T::one() / (cfg.m * T::lit(cfg.count as f64).sqrt()));
    let axis: Vec<[Arc<TrigPoly<T>>; 2]> =
        cfg.family.members.iter().map(|s| [blocks.block(s[0]), blocks.block(s[1])]).collect();
    let mut out = SeparablePoly::new(2);
    for mask in 0u32..(1 << cfg.count) {
        let mut weight = Complex::new(T::one(), T::zero());
        let mut factors = vec![Vec::new(), Vec::new()];
        for (j, f) in axis.iter().enumerate() {
            if mask >> j & 1 == 1 {
                weight = weight * scale;
                factors[0].push(f[0].clone());
                factors[1].push(f[1].clone());
            }
        }
        out.push(TensorTerm::new(weight, factors));
    }
    out
}

/// Expanded `Phi`; fails with `SupportCap` when the spectrum is too large.
pub fn riesz_product<T: Real>(cfg: &RieszConfig<T>) -> Result<TrigPoly<T>> {
    riesz_product_separable(cfg, &mut BlockCache::new()).to_trig_poly(DEFAULT_SUPPORT_CAP)
}

fn term_order<T>(t: &TensorTerm<T>) -> usize {
    t.factors[0].len()
}

/// How an orthogonality claim was established.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Certificate {
    /// Every term's spectrum lies above the level (from factor supports).
    Structural,
    /// Every coefficient at or below the level was expanded and found zero.
    Expanded,
    /// Nothing to check.
    Empty,
}

/// Proves `hat p(k) = 0` for every `k` with total dyadic level `<= level`.
pub fn certify_orthogonal<T: Real>(p: &SeparablePoly<T>, level: u32) -> Result<Certificate> {
    if p.is_empty() {
        return Ok(Certificate::Empty);
    }
    if p.terms().iter().all(|t| t.min_total_level().map_or(true, |m| m > level)) {
        return Ok(Certificate::Structural);
    }
    let expanded = p.to_trig_poly(DEFAULT_SUPPORT_CAP)?;
    check_orthogonal(&expanded, level)?;
    Ok(Certificate::Expanded)
}

fn check_orthogonal<T: Real>(p: &TrigPoly<T>, level: u32) -> Result<()> {
    match p.iter().find(|(k, _)| k.total_level() <= level) {
        Some((k, c)) => Err(Error::Orthogonality { index: k.to_i64_vec(), magnitude: c.norm().to_f64_lossy() }),
        None => Ok(()),
    }
}

/// `1 + (i / sqrt N) sum_s t_s` and the remainder `g = Phi - linear`, with
/// `hat g = 0` on `Q_{n+a-6}` checked exactly.
pub fn riesz_decompose<T: Real>(phi: &TrigPoly<T>, cfg: &RieszConfig<T>) -> Result<(TrigPoly<T>, TrigPoly<T>)> {
    let scale = Complex::new(T::zero(), T::one() / (cfg.m * T::lit(cfg.count as f64).sqrt()));
    let mut linear = TrigPoly::one(2);
    for s in &cfg.family.members {
        linear = linear.axpy(scale, &block_kernel(s)?);
    }
    let g = phi.sub(&linear);
    check_orthogonal(&g, cfg.orthogonal_level())?;
    Ok((linear, g))
}

/// Lazy counterpart of [`riesz_decompose`].
pub fn riesz_decompose_separable<T: Real>(
    phi: &SeparablePoly<T>,
    cfg: &RieszConfig<T>,
) -> Result<(SeparablePoly<T>, SeparablePoly<T>, Certificate)> {
    let mut linear = SeparablePoly::new(2);
    let mut g = SeparablePoly::new(2);
    for t in phi.terms() {
        if term_order(t) <= 1 {
            linear.push(t.clone());
        } else {
            g.push(t.clone());
        }
    }
    let cert = certify_orthogonal(&g, cfg.orthogonal_level())?;
    Ok((linear, g, cert))
}

/// `M sqrt N Im Phi`: odd-order terms of `Phi` with real weights (the blocks
/// are real-valued). The first-order weights are exactly 1.
pub fn corrected_family<T: Real>(cfg: &RieszConfig<T>, blocks: &mut BlockCache<T>) -> SeparablePoly<T> {
    let phi = riesz_product_separable(cfg, blocks);
    let scale = cfg.m * T::lit(cfg.count as f64).sqrt();
    let mut out = SeparablePoly::new(2);
    for t in phi.terms() {
        let order = term_order(t);
        if order % 2 == 1 {
            let w = if order == 1 { T::one() } else { t.weight.im * scale };
            out.push(TensorTerm::new(Complex::new(w, T::zero()), t.factors.clone()));
        }
    }
    out
}

/// `(||Phi||_inf, ||sum_s t_s + sqrt N Im w||_inf / sqrt N)` on a grid
/// resolving `Phi`. The second quantity is `||Im Phi||_inf`.
pub fn family_sups<T: Real>(cfg: &RieszConfig<T>, oversample: usize, blocks: &mut BlockCache<T>) -> Result<(T, T)> {
    let phi = riesz_product_separable(cfg, blocks);
    let grid = Grid::for_degrees(&phi.degrees(), oversample)?;
    let retain = Retain { exponents: Vec::new(), top_k: 0 };
    let phi_sup = phi.grid_summary(&grid, &retain)?.max_abs();
    let fam = corrected_family(cfg, blocks);
    let imag = fam.grid_summary(&grid, &retain)?.max_abs() / (cfg.m * T::lit(cfg.count as f64).sqrt());
    Ok((phi_sup, imag))
}

/// Options for [`modified_layer_kernel`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerKernelOptions {
    /// Grid nodes per axis relative to `2 deg + 1` (rounded up to a power of two).
    pub oversample: usize,
    pub compute_norms: bool,
    /// Check `hat K = 1` on every frequency of the layer.
    pub check_reproduction: bool,
}

impl Default for LayerKernelOptions {
    fn default() -> Self {
        Self { oversample: 2, compute_norms: true, check_reproduction: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerKernelStats {
    pub n: u32,
    pub l1_raw: f64,
    pub linf_raw: f64,
    pub l1_corrected: f64,
    pub linf_corrected: f64,
    /// Nonempty residue families over the three layers.
    pub families: usize,
    /// Families with at least two members (the only ones with a correction).
    pub corrected_families: usize,
    pub correction_terms: usize,
    /// Largest `|Phi|` over the families at the norm grid nodes.
    pub max_abs_phi: f64,
    pub phi_bound: f64,
    /// Largest `||sum_s t_s + sqrt N Im w||_inf / sqrt N` over the families.
    pub max_imag_ratio: f64,
    pub grid: String,
}

impl LayerKernelStats {
    pub fn ratio_to_n(&self) -> f64 {
        self.l1_corrected / self.n as f64
    }

    pub fn ratio_to_sqrt_n_2n(&self) -> f64 {
        self.linf_corrected / ((self.n as f64).sqrt() * 2f64.powi(self.n as i32))
    }
}

/// `K = Delta V_n - T` with `T` orthogonal to `T(Q_n)`.
#[derive(Clone, Debug)]
pub struct ModifiedLayerKernel<T> {
    pub n: u32,
    pub raw: SeparablePoly<T>,
    pub kernel: SeparablePoly<T>,
    pub correction: SeparablePoly<T>,
    pub correction_certificate: Certificate,
    pub configs: Vec<RieszConfig<T>>,
    pub stats: Option<LayerKernelStats>,
}

/// Assembles the corrected layer kernel from the residue families of the
/// layers `n, n+1, n+2` (modulus 6); blocks with a coordinate below the
/// modulus enter uncorrected.
pub fn modified_layer_kernel<T: Real>(n: u32, opts: &LayerKernelOptions) -> Result<ModifiedLayerKernel<T>> {
    let a = RIESZ_MODULUS;
    if n < 2 * a {
        return Err(Error::InvalidParameter(format!("layer n={n} must be >= {}", 2 * a)));
    }
    let mut blocks = BlockCache::new();
    let raw = layer_vp_separable(n, 2, &mut blocks)?;
    let mut kernel = SeparablePoly::new(2);
    let one = Complex::new(T::one(), T::zero());
    for layer in n..=n + 2 {
        for s1 in 0..=layer {
            let s2 = layer - s1;
            if s1.min(s2) < a {
                kernel.push(TensorTerm::simple(one, vec![blocks.block(s1), blocks.block(s2)]));
            }
        }
    }
    let (configs, families) = layer_families(n, &mut blocks)?;
    for fam in &families {
        for t in fam.terms() {
            kernel.push(t.clone());
        }
    }
    let correction = correction_of(&families);
    let correction_certificate = certify_orthogonal(&correction, n)?;
    if opts.check_reproduction {
        check_reproduction(&kernel, n)?;
    }
    let stats = if opts.compute_norms { Some(layer_stats(n, &raw, &kernel, &correction, &configs, opts, &mut blocks)?) } else { None };
    Ok(ModifiedLayerKernel { n, raw, kernel, correction, correction_certificate, configs, stats })
}

/// Residue families of the layers `n, n+1, n+2` with their corrected sums.
fn layer_families<T: Real>(n: u32, blocks: &mut BlockCache<T>) -> Result<(Vec<RieszConfig<T>>, Vec<SeparablePoly<T>>)> {
    let mut sups = SupCache::new();
    let mut configs = Vec::new();
    let mut families = Vec::new();
    for layer in n..=n + 2 {
        for b in 0..RIESZ_MODULUS {
            let cfg = match RieszConfig::with_caches(layer, RIESZ_MODULUS, b, blocks, &mut sups) {
                Ok(c) => c,
                Err(Error::EmptyFamily { .. }) => continue,
                Err(e) => return Err(e),
            };
            families.push(corrected_family(&cfg, blocks));
            configs.push(cfg);
        }
    }
    Ok((configs, families))
}

/// `T`: the negated terms of order three and above.
fn correction_of<T: Real>(families: &[SeparablePoly<T>]) -> SeparablePoly<T> {
    let mut correction = SeparablePoly::new(2);
    for t in families.iter().flat_map(|f| f.terms()) {
        if term_order(t) >= 3 {
            correction.push(TensorTerm::new(-t.weight, t.factors.clone()));
        }
    }
    correction
}

/// The correction `T` of the layer-`n` kernel and its orthogonality
/// certificate against `T(Q_n)`, without assembling the kernel. Works above
/// the enumeration cap, since only factor supports are inspected.
pub fn layer_correction<T: Real>(n: u32) -> Result<(SeparablePoly<T>, Certificate)> {
    if n < 2 * RIESZ_MODULUS {
        return Err(Error::InvalidParameter(format!("layer n={n} must be >= {}", 2 * RIESZ_MODULUS)));
    }
    let mut blocks = BlockCache::new();
    let (_, families) = layer_families(n, &mut blocks)?;
    let correction = correction_of(&families);
    let cert = certify_orthogonal(&correction, n)?;
    Ok((correction, cert))
}

/// `hat K(k) = 1` for every `k` in the layer, to `1e-9`.
pub fn check_reproduction<T: Real>(kernel: &SeparablePoly<T>, n: u32) -> Result<()> {
    let expanded = kernel.expand_axes(DEFAULT_SUPPORT_CAP)?;
    let tol = T::lit(1e-9);
    for k in hyperbolic_layer(n, 2)?.iter() {
        let c = kernel.coefficient_with(&expanded, k);
        if (c - Complex::new(T::one(), T::zero())).norm() > tol {
            return Err(Error::Reproduction { index: k.to_i64_vec(), value: c.norm().to_f64_lossy() });
        }
    }
    Ok(())
}

fn layer_stats<T: Real>(
    n: u32,
    raw: &SeparablePoly<T>,
    kernel: &SeparablePoly<T>,
    correction: &SeparablePoly<T>,
    configs: &[RieszConfig<T>],
    opts: &LayerKernelOptions,
    blocks: &mut BlockCache<T>,
) -> Result<LayerKernelStats> {
    let degrees: Vec<i64> = raw.degrees().iter().zip(kernel.degrees()).map(|(&x, y)| x.max(y)).collect();
    let grid = Grid::for_degrees(&degrees, opts.oversample)?;
    let retain = Retain { exponents: vec![T::one()], top_k: 0 };
    let raw_s = raw.grid_summary(&grid, &retain)?;
    // With no correction terms K and Delta V_n are the same polynomial.
    let ker_s: StreamSummary<T> = if correction.is_empty() { raw_s.clone() } else { kernel.grid_summary(&grid, &retain)? };
    let mut max_phi = 0.0f64;
    let mut max_imag = 0.0f64;
    let mut bound = 0.0f64;
    for cfg in configs {
        let (phi_sup, imag) = family_sups(cfg, opts.oversample, blocks)?;
        max_phi = max_phi.max(phi_sup.to_f64_lossy());
        max_imag = max_imag.max(imag.to_f64_lossy());
        bound = bound.max(cfg.product_bound().to_f64_lossy());
    }
    Ok(LayerKernelStats {
        n,
        l1_raw: raw_s.lp_norm(T::one())?.to_f64_lossy(),
        linf_raw: raw_s.max_abs().to_f64_lossy(),
        l1_corrected: ker_s.lp_norm(T::one())?.to_f64_lossy(),
        linf_corrected: ker_s.max_abs().to_f64_lossy(),
        families: configs.len(),
        corrected_families: configs.iter().filter(|c| c.count >= 2).count(),
        correction_terms: correction.len(),
        max_abs_phi: max_phi,
        phi_bound: bound,
        max_imag_ratio: max_imag,
        grid: grid.describe(),
    })
}

/// Remez bound for `f` on the layer `Delta Q_n`: deleted sets of measure
/// `1 / (2 ||K||_inf)` and bound `2 ||K||_1`, on `grid`.
pub fn verify_theorem_3_2<T: Real>(f: &TrigPoly<T>, n: u32, stats: &LayerKernelStats, grid: Grid) -> Result<KernelRemezReport<T>> {
    if f.dim() != 2 {
        return Err(Error::DimensionMismatch(f.dim(), 2));
    }
    if stats.n != n {
        return Err(Error::InvalidParameter(format!("kernel statistics are for n={}, not {n}", stats.n)));
    }
    if let Some((k, _)) = f.iter().find(|(k, _)| k.total_level() != n) {
        return Err(Error::InvalidParameter(format!("frequency {:?} outside the layer {n}", k.to_i64_vec())));
    }
    let setup = KernelRemezSetup::new(grid, T::lit(stats.l1_corrected), T::lit(stats.linf_corrected))?;
    check_with_kernel(f, &setup)
}

#[doc(hidden)]
pub fn layer_point(s: [u32; 2]) -> MultiIndex {
    let lo = |s: u32| if s == 0 { 0 } else { 1i32 << (s - 1) };
    MultiIndex::from_slice(&[lo(s[0]), lo(s[1])])
}
