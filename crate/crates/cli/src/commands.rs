//! Subcommand implementations. Each returns its table, the constants for the
//! sidecar, and any violations found.

use std::path::Path;

use hcr::discretize::{candidate_point_set, discretization_scan_with, discretization_to_remez, DiscretizationRemezConfig, CERTIFICATE_TOLERANCE};
use hcr::fuzz::{self, CheckKind, FuzzCase, FuzzOutcome};
use hcr::indexsets::{hyperbolic_cross, hyperbolic_layer, step_hyperbolic};
use hcr::kernels::{hyperbolic_vp_kernel, hyperbolic_vp_separable, kernel_grid, kernel_norms, FLATNESS_TOLERANCE};
use hcr::measure::{GridSet, Retain};
use hcr::nikolskii::{nikolskii_sup_estimate, SamplerConfig};
use hcr::remez::{remez_bound_normalized, remez_ratio, tolerance, RemezRegime};
use hcr::riesz2d::{modified_layer_kernel, verify_theorem_3_2, LayerKernelOptions};
use hcr::sample::{draw_rng, random_poly_on};
use hcr::scaling::{loglog_slope, spread};
use hcr::spectral::{evaluate_on_grid, EvalOptions, Grid, TrigPoly};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config::{retained_cells, BSchedule};
use crate::output::{jnum, num, Table};

pub type CmdResult<T> = Result<T, hcr::Error>;

pub struct Outcome {
    pub table: Table,
    pub constants: Map<String, Value>,
    pub violations: Vec<Violation>,
    /// Failed checks that have no replayable instance.
    pub failures: u64,
}

/// A failing instance, serialized for `replay`. Exponents are stored as
/// text so that `inf` survives JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    Implication { check: String, seed: u64, index: u64, dim: usize, degree: u64, p: String, q: Option<String>, b: f64, oversample: usize },
    RemezBound { seed: u64, index: u64, dim: usize, degree: u64, p: String, b: f64, oversample: usize },
}

fn exp_text(p: f64) -> String {
    if p.is_infinite() { "inf".into() } else { p.to_string() }
}

fn exp_value(s: &str) -> CmdResult<f64> {
    crate::config::parse_exponent(s).map_err(hcr::Error::Parse)
}

impl Violation {
    pub fn from_case(c: &FuzzCase) -> Self {
        Violation::Implication {
            check: c.kind.name().into(),
            seed: c.seed,
            index: c.index,
            dim: c.dim,
            degree: c.degree,
            p: exp_text(c.p),
            q: c.q.map(exp_text),
            b: c.b,
            oversample: c.oversample,
        }
    }

    pub fn to_case(&self) -> CmdResult<Option<FuzzCase>> {
        match self {
            Violation::Implication { check, seed, index, dim, degree, p, q, b, oversample } => Ok(Some(FuzzCase {
                kind: check.parse()?,
                seed: *seed,
                index: *index,
                dim: *dim,
                degree: *degree,
                p: exp_value(p)?,
                q: q.as_deref().map(exp_value).transpose()?,
                b: *b,
                oversample: *oversample,
            })),
            Violation::RemezBound { .. } => Ok(None),
        }
    }
}

fn sample_grid(f: &TrigPoly<f64>, oversample: usize, b: f64, p: f64, mem: u64) -> CmdResult<hcr::GridFunction<f64>> {
    let grid = Grid::for_degrees(&f.degrees(), oversample)?;
    let exponents = if p.is_finite() { vec![p] } else { Vec::new() };
    let opts = EvalOptions { memory_budget: mem, allow_streaming: true, retain: Retain { exponents, top_k: retained_cells(b, grid.total()) } };
    evaluate_on_grid(f, &grid, &opts)
}

/// Classical constant for the scan: univariate small or large measure, or
/// the multivariate formula with `n_j = N`; `inf` outside every regime.
pub fn reference_bound(n: u64, dim: usize, b: f64) -> f64 {
    let degrees = vec![n; dim];
    let attempt = |r| remez_bound_normalized(&degrees, b, r).ok();
    let v = if dim == 1 {
        attempt(RemezRegime::SmallMeasure).or_else(|| attempt(RemezRegime::LargeMeasure))
    } else {
        attempt(RemezRegime::Multivariate)
    };
    v.unwrap_or(f64::INFINITY)
}

fn remez_bound_ratio(seed: u64, index: u64, dim: usize, n: u64, b: f64, p: f64, oversample: usize, mem: u64) -> CmdResult<(f64, String)> {
    let f: TrigPoly<f64> = random_poly_on(&hyperbolic_cross(n, dim)?, &mut draw_rng(seed, index))?;
    let g = sample_grid(&f, oversample, b, p, mem)?;
    let r = remez_ratio(&g, b, p)?;
    Ok((r.ratio.value(), g.grid().describe()))
}

#[allow(clippy::too_many_arguments)]
pub fn remez_scan(dim: usize, ns: &[u64], bs: &BSchedule, p: f64, seed: u64, draws: u64, oversample: usize, mem: u64) -> CmdResult<Outcome> {
    let mut table = Table::new(&["N", "b", "p", "R", "bound", "slack", "grid", "tolerance", "seed"]);
    let mut violations = Vec::new();
    let mut worst = 0.0f64;
    let tol = tolerance(p);
    for &n in ns {
        for b in bs.values(n) {
            let mut r = 1.0f64;
            let mut grid = String::new();
            let mut arg = 0;
            for i in 0..draws {
                let (ri, gi) = remez_bound_ratio(seed, i, dim, n, b, p, oversample, mem)?;
                if ri > r || i == 0 {
                    (r, arg) = (r.max(ri), i);
                }
                grid = gi;
            }
            let bound = reference_bound(n, dim, b);
            if r > bound * (1.0 + tol) {
                violations.push(Violation::RemezBound { seed, index: arg, dim, degree: n, p: exp_text(p), b, oversample });
            }
            worst = worst.max(r / bound);
            table.push(vec![n.to_string(), num(b), exp_text(p), num(r), num(bound), num(bound - r), grid, num(tol), seed.to_string()]);
        }
    }
    let mut constants = Map::new();
    constants.insert("max_R_over_bound".into(), jnum(worst));
    constants.insert("violations".into(), json!(violations.len()));
    Ok(Outcome { table, constants, violations, failures: 0 })
}

pub fn nikolskii_scan(dim: usize, p: f64, q: f64, ns: &[u64], draws: usize, seed: u64, oversample: usize) -> CmdResult<Outcome> {
    let mut table = Table::new(&["N", "ratio", "rate", "ratio/rate", "witness", "grid", "tolerance", "seed"]);
    let cfg = SamplerConfig { draws, seed, oversample };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut normalized = Vec::new();
    for &n in ns {
        let row = nikolskii_sup_estimate::<f64>(n, dim, p, q, &cfg)?;
        xs.push(row.x);
        ys.push(row.measured);
        normalized.push(row.ratio);
        table.push(vec![n.to_string(), num(row.measured), num(row.rate), num(row.ratio), row.witness, row.grid, num(row.tolerance), seed.to_string()]);
    }
    let mut constants = Map::new();
    if xs.len() >= 2 {
        let fit = loglog_slope(&xs, &ys)?;
        constants.insert("loglog_slope".into(), jnum(fit.slope));
        constants.insert("beta".into(), jnum(1.0 / q - 1.0 / p));
    }
    constants.insert("ratio_over_rate_spread".into(), jnum(spread(&normalized)));
    Ok(Outcome { table, constants, violations: Vec::new(), failures: 0 })
}

pub fn kernel_norms_cmd(dim: usize, ns: &[u64], oversample: usize) -> CmdResult<Outcome> {
    let mut table = Table::new(&["N", "dim", "L1", "Linf", "L1/log2(N)^(d-1)", "Linf/(N*log2(N)^(d-1))", "terms", "grid", "tolerance"]);
    let mut l1s = Vec::new();
    let mut linfs = Vec::new();
    for &n in ns {
        // Fails unless the coefficients are flat on Gamma(N) and supported in Gamma(2^d N).
        hyperbolic_vp_kernel::<f64>(n, dim)?;
        let sep = hyperbolic_vp_separable::<f64>(n, dim)?;
        let grid = kernel_grid(&sep, oversample)?;
        let nm = kernel_norms(&sep, &grid)?;
        let log = (n.max(2) as f64).log2().powi(dim as i32 - 1);
        let (a, b) = (nm.l1 / log, nm.linf / (n as f64 * log));
        l1s.push(a);
        linfs.push(b);
        table.push(vec![n.to_string(), dim.to_string(), num(nm.l1), num(nm.linf), num(a), num(b), sep.len().to_string(), grid.describe(), num(FLATNESS_TOLERANCE)]);
    }
    let mut constants = Map::new();
    constants.insert("L1_ratio_spread".into(), jnum(spread(&l1s)));
    constants.insert("Linf_ratio_spread".into(), jnum(spread(&linfs)));
    Ok(Outcome { table, constants, violations: Vec::new(), failures: 0 })
}

/// Relative slack for norm and product-bound comparisons.
const NORM_TOLERANCE: f64 = 1e-12;

pub fn riesz_verify(ns: &[u32], oversample: usize, draws: u64, seed: u64) -> CmdResult<Outcome> {
    let mut table = Table::new(&[
        "n", "L1_raw", "Linf_raw", "L1_corrected", "Linf_corrected", "ratio_to_n", "ratio_to_sqrt_n_2n", "families",
        "corrected_families", "max_abs_phi", "phi_bound", "max_imag_ratio", "theorem_draws", "theorem_violations",
        "grid", "tolerance",
    ]);
    let mut ratios = Vec::new();
    let mut failures = 0u64;
    let opts = LayerKernelOptions { oversample, compute_norms: true, check_reproduction: true };
    for &n in ns {
        let k = modified_layer_kernel::<f64>(n, &opts)?;
        let s = k.stats.expect("norms requested");
        let bound = 0.5f64.exp() * (1.0 + NORM_TOLERANCE);
        if s.max_abs_phi > bound || s.max_abs_phi > s.phi_bound * (1.0 + NORM_TOLERANCE) || s.linf_corrected > s.linf_raw * (1.0 + NORM_TOLERANCE) {
            failures += 1;
        }
        let mut bad = 0u64;
        let layer = hyperbolic_layer(n, 2)?;
        for i in 0..draws {
            let f: TrigPoly<f64> = random_poly_on(&layer, &mut draw_rng(seed, i))?;
            let grid = Grid::for_degrees(&f.degrees(), 1)?;
            if !verify_theorem_3_2(&f, n, &s, grid)?.outcome.holds {
                bad += 1;
            }
        }
        failures += bad;
        ratios.push(s.ratio_to_n());
        table.push(vec![
            n.to_string(),
            num(s.l1_raw),
            num(s.linf_raw),
            num(s.l1_corrected),
            num(s.linf_corrected),
            num(s.ratio_to_n()),
            num(s.ratio_to_sqrt_n_2n()),
            s.families.to_string(),
            s.corrected_families.to_string(),
            num(s.max_abs_phi),
            num(s.phi_bound),
            num(s.max_imag_ratio),
            draws.to_string(),
            bad.to_string(),
            s.grid,
            num(NORM_TOLERANCE),
        ]);
    }
    let mut constants = Map::new();
    constants.insert("L1_over_n_spread".into(), jnum(spread(&ratios)));
    constants.insert("failed_checks".into(), json!(failures));
    Ok(Outcome { table, constants, violations: Vec::new(), failures })
}

/// Random union of cells with `m |B| <= 1/2` on a grid of about
/// `4 m^{1/d}` cells per axis.
fn random_budget_set(m: usize, dim: usize, rng: &mut impl Rng) -> CmdResult<GridSet> {
    let per_axis = ((4.0 * (m as f64).powf(1.0 / dim as f64)).ceil() as usize).next_power_of_two().max(8);
    let grid = Grid::cube(dim, per_axis)?;
    let total = grid.total();
    let max_cells = ((total as f64) / (2.0 * m as f64)).floor().max(1.0) as u64;
    let k = rng.random_range(1..=max_cells);
    let mut cells = std::collections::BTreeSet::new();
    while (cells.len() as u64) < k {
        cells.insert(rng.random_range(0..total));
    }
    GridSet::from_cells(grid, cells)
}

pub fn discretize_verify(dim: usize, ns: &[u32], draws: u64, seed: u64, mem: u64) -> CmdResult<Outcome> {
    let mut table = Table::new(&["n", "dim", "points", "draws", "D_max", "rate", "D_max/rate", "certified", "max_load", "grid", "tolerance", "seed"]);
    let mut failures = 0u64;
    let cfg = DiscretizationRemezConfig { shift_grid: 4, oversample: 2, memory_budget: mem };
    for &n in ns {
        let x = candidate_point_set::<f64>(n, dim)?;
        let row = discretization_scan_with(n, &x, draws.max(1) as usize, seed, 2)?;
        let set = step_hyperbolic(n, dim)?;
        let mut certified = 0u64;
        let mut max_load = 0.0f64;
        for i in 0..draws {
            let mut rng = draw_rng(seed, (1 << 32) + i);
            let f: TrigPoly<f64> = random_poly_on(&set, &mut rng)?;
            let b = random_budget_set(x.len(), dim, &mut rng)?;
            let rep = discretization_to_remez(&f, &x, None, &b, &cfg)?;
            max_load = max_load.max(rep.load);
            if rep.outcome.holds {
                certified += 1;
            }
        }
        failures += draws - certified;
        table.push(vec![
            n.to_string(),
            dim.to_string(),
            x.len().to_string(),
            draws.to_string(),
            num(row.measured),
            num(row.rate),
            num(row.ratio),
            certified.to_string(),
            num(max_load),
            row.grid,
            num(CERTIFICATE_TOLERANCE),
            seed.to_string(),
        ]);
    }
    let mut constants = Map::new();
    constants.insert("failed_certificates".into(), json!(failures));
    Ok(Outcome { table, constants, violations: Vec::new(), failures })
}

pub fn implication_fuzz(kinds: &[CheckKind], draws: u64, seed: u64, oversample: usize) -> CmdResult<Outcome> {
    let mut table = Table::new(&["check", "index", "dim", "N", "p", "q", "b", "lhs", "rhs", "slack", "holds", "grid", "tolerance", "seed"]);
    let mut violations = Vec::new();
    let mut constants = Map::new();
    for &kind in kinds {
        let outs = fuzz::run_corpus(kind, draws, seed, oversample)?;
        let mut bad = 0u64;
        for o in &outs {
            if o.violated() {
                bad += 1;
                violations.push(Violation::from_case(&o.case));
            }
            table.push(fuzz_row(o));
        }
        constants.insert(format!("{kind}_violations"), json!(bad));
    }
    Ok(Outcome { table, constants, violations, failures: 0 })
}

fn fuzz_row(o: &FuzzOutcome) -> Vec<String> {
    let c = &o.case;
    vec![
        c.kind.name().into(),
        c.index.to_string(),
        c.dim.to_string(),
        c.degree.to_string(),
        exp_text(c.p),
        c.q.map(exp_text).unwrap_or_default(),
        num(c.b),
        num(o.outcome.lhs),
        num(o.outcome.rhs),
        num(o.outcome.slack),
        o.outcome.holds.to_string(),
        o.grid.clone(),
        num(o.outcome.tolerance),
        c.seed.to_string(),
    ]
}

/// Reruns every instance of a violation file at the replay oversampling.
pub fn replay(path: &Path, mem: u64) -> CmdResult<(Outcome, bool)> {
    let text = std::fs::read_to_string(path).map_err(|e| hcr::Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| hcr::Error::Parse(format!("malformed violation file: {e}")))?;
    let items: Vec<Violation> = match value {
        Value::Array(_) => serde_json::from_value(value),
        other => serde_json::from_value(other).map(|v| vec![v]),
    }
    .map_err(|e| hcr::Error::Parse(format!("malformed violation file: {e}")))?;
    let mut table = Table::new(&["kind", "index", "oversample", "lhs", "rhs", "replay_oversample", "replay_lhs", "replay_rhs", "verdict", "grid", "tolerance"]);
    let mut persists = false;
    for v in &items {
        match v.to_case()? {
            Some(case) => {
                let r = fuzz::replay(&case)?;
                persists |= r.persists();
                table.push(vec![
                    case.kind.name().into(),
                    case.index.to_string(),
                    case.oversample.to_string(),
                    num(r.original.outcome.lhs),
                    num(r.original.outcome.rhs),
                    r.refined.case.oversample.to_string(),
                    num(r.refined.outcome.lhs),
                    num(r.refined.outcome.rhs),
                    r.verdict().into(),
                    r.refined.grid.clone(),
                    num(r.refined.outcome.tolerance),
                ]);
            }
            None => {
                let Violation::RemezBound { seed, index, dim, degree, p, b, oversample } = v else { unreachable!() };
                let p = exp_value(p)?;
                let bound = reference_bound(*degree, *dim, *b);
                let tol = tolerance(p);
                let (r0, _) = remez_bound_ratio(*seed, *index, *dim, *degree, *b, p, *oversample, mem)?;
                let fine = (*oversample).max(fuzz::REPLAY_OVERSAMPLE);
                let (r1, grid) = remez_bound_ratio(*seed, *index, *dim, *degree, *b, p, fine, mem)?;
                let (was, still) = (r0 > bound * (1.0 + tol), r1 > bound * (1.0 + tol));
                persists |= still;
                let verdict = if still { "persists" } else if was { "vanishes" } else { "no-violation" };
                table.push(vec![
                    "remez-bound".into(),
                    index.to_string(),
                    oversample.to_string(),
                    num(r0),
                    num(bound),
                    fine.to_string(),
                    num(r1),
                    num(bound),
                    verdict.into(),
                    grid,
                    num(tol),
                ]);
            }
        }
    }
    let mut constants = Map::new();
    constants.insert("instances".into(), json!(items.len()));
    constants.insert("persisting".into(), json!(persists));
    Ok((Outcome { table, constants, violations: Vec::new(), failures: 0 }, persists))
}
