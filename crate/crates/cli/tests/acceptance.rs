//! Acceptance run: one line per criterion, nonzero exit if any fails.
//! Pass criterion numbers as arguments to run a subset.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use hcr::discretize::{discretization_to_remez, find_avoiding_shift, DiscretizationRemezConfig, PointSet};
use hcr::fuzz::{run_corpus, CheckKind};
use hcr::indexsets::{hyperbolic_cross, step_hyperbolic};
use hcr::kernels::{hyperbolic_vp_kernel, hyperbolic_vp_separable, kernel_grid, kernel_norms};
use hcr::nikolskii::{jackson_lower_bound, jackson_min_exponent};
use hcr::remez::{remez_bound_normalized, remez_ratio, sample, verify_theorem_3_1, RemezRegime, Theorem31Setup};
use hcr::riesz2d::{
    layer_correction, modified_layer_kernel, riesz_decompose, riesz_decompose_separable, riesz_product, riesz_product_separable, Certificate,
    LayerKernelOptions, RieszConfig, RIESZ_MODULUS,
};
use hcr::sample::{draw_rng, random_poly_on};
use hcr::scaling::{loglog_slope, spread};
use hcr::{Grid, GridSet, TrigPoly};
use rand::Rng;

type Check = Result<String, String>;

const SEED: u64 = 20240611;

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    if elapsed.as_secs() < limit_s {
        Ok(())
    } else {
        Err(format!("took {:.1}s, limit {limit_s}s", elapsed.as_secs_f64()))
    }
}

fn flatness() -> Check {
    let mut worst_flat = 0.0f64;
    let mut worst_out = 0.0f64;
    let mut kernels = 0;
    for d in 1..=2usize {
        for n in (0..=6).map(|e| 1u64 << e) {
            let v: TrigPoly<f64> = hyperbolic_vp_kernel(n, d).map_err(fail)?;
            for k in hyperbolic_cross(n, d).map_err(fail)?.iter() {
                worst_flat = worst_flat.max((v.coeff(k).re - 1.0).abs() + v.coeff(k).im.abs());
            }
            let wide = (1u64 << d) * n;
            for (k, c) in v.iter() {
                if k.hyperbolic_size() > wide {
                    worst_out = worst_out.max(c.norm());
                }
            }
            kernels += 1;
        }
    }
    ensure(
        worst_flat <= 1e-12 && worst_out <= 1e-12,
        format!("{kernels} kernels; max |V-1| on Gamma(N) {worst_flat:.2e}, max |V| outside Gamma(2^d N) {worst_out:.2e}"),
    )
}

fn reproduction() -> Check {
    let n = 32;
    let v: TrigPoly<f64> = hyperbolic_vp_kernel(n, 2).map_err(fail)?;
    let cross = hyperbolic_cross(n, 2).map_err(fail)?;
    let mut worst = 0.0f64;
    for i in 0..100 {
        let f: TrigPoly<f64> = random_poly_on(&cross, &mut draw_rng(SEED, i)).map_err(fail)?;
        worst = worst.max(f.convolve(&v).map_err(fail)?.max_coeff_diff(&f));
    }
    ensure(worst <= 1e-9, format!("100 draws, N=32, max coefficient error {worst:.2e}"))
}

fn norm_scaling() -> Check {
    let mut l1 = Vec::new();
    let mut linf = Vec::new();
    for n in (3..=8).map(|e| 1u64 << e) {
        let sep = hyperbolic_vp_separable::<f64>(n, 2).map_err(fail)?;
        let nm = kernel_norms(&sep, &kernel_grid(&sep, 2).map_err(fail)?).map_err(fail)?;
        let log = (n as f64).log2();
        l1.push(nm.l1 / log);
        linf.push(nm.linf / (n as f64 * log));
    }
    let (a, b) = (spread(&l1), spread(&linf));
    ensure(a <= 4.0 && b <= 4.0, format!("N=8..256: spread of L1/log2 N {a:.3}, of Linf/(N log2 N) {b:.3}"))
}

fn univariate_remez() -> Check {
    let mut violations = 0;
    let mut worst = 0.0f64;
    for i in 0..500 {
        let mut rng = draw_rng(SEED + 4, i);
        let n = rng.random_range(1..=16u64);
        let b = 0.25 * rng.random_range(0.001..1.0f64);
        let f: TrigPoly<f64> = random_poly_on(&hyperbolic_cross(n, 1).map_err(fail)?, &mut rng).map_err(fail)?;
        let g = sample(&f, 16).map_err(fail)?;
        let r = remez_ratio(&g, b, f64::INFINITY).map_err(fail)?.ratio.value();
        let bound = remez_bound_normalized(&[n], b, RemezRegime::SmallMeasure).map_err(fail)?;
        worst = worst.max(r / bound);
        if r > bound * (1.0 + 1e-6) {
            violations += 1;
        }
    }
    ensure(violations == 0, format!("500 draws, {violations} violations, max R/bound {worst:.4}"))
}

fn implications() -> Check {
    let mut parts = Vec::new();
    let mut total = 0;
    for kind in CheckKind::IMPLICATIONS {
        let bad = run_corpus(kind, 1000, SEED, 2).map_err(fail)?.iter().filter(|o| o.violated()).count();
        total += bad;
        parts.push(format!("{kind}:{bad}"));
    }
    ensure(total == 0, format!("1000 draws each, violations {}", parts.join(" ")))
}

fn hyperbolic_remez() -> Check {
    let mut parts = Vec::new();
    let mut violations = 0;
    for n in [8u64, 16, 32, 64] {
        let setup = Theorem31Setup::<f64>::new(n, 2).map_err(fail)?;
        let cross = hyperbolic_cross(n, 2).map_err(fail)?;
        let mut worst = 0.0f64;
        for i in 0..200 {
            let f: TrigPoly<f64> = random_poly_on(&cross, &mut draw_rng(SEED + n, i)).map_err(fail)?;
            let rep = verify_theorem_3_1(&f, &setup).map_err(fail)?;
            worst = worst.max(rep.ratio.value() / rep.bound);
            if !rep.outcome.holds {
                violations += 1;
            }
        }
        parts.push(format!("N={n} b={:.2e} max R/bound {worst:.3}", setup.kernel.b));
    }
    ensure(violations == 0, format!("{violations} violations; {}", parts.join(", ")))
}

fn riesz() -> Check {
    let opts = LayerKernelOptions { oversample: 2, compute_norms: true, check_reproduction: true };
    let mut ratios = Vec::new();
    let mut notes = Vec::new();
    let mut ok = true;
    for n in [12u32, 13, 14] {
        // Errors here are failed orthogonality or reproduction checks.
        let k = modified_layer_kernel::<f64>(n, &opts).map_err(|e| format!("n={n}: {e}"))?;
        let s = k.stats.as_ref().expect("norms requested");
        let mut certs = BTreeSet::new();
        for cfg in &k.configs {
            riesz_decompose(&riesz_product(cfg).map_err(fail)?, cfg).map_err(|e| format!("n={n}: {e}"))?;
            let mut blocks = Default::default();
            let phi = riesz_product_separable(cfg, &mut blocks);
            certs.insert(format!("{:?}", riesz_decompose_separable(&phi, cfg).map_err(fail)?.2));
        }
        ok &= s.max_abs_phi <= 0.5f64.exp() * (1.0 + 1e-12);
        ok &= s.linf_corrected <= s.linf_raw * (1.0 + 1e-12);
        ratios.push(s.ratio_to_n());
        notes.push(format!(
            "n={n}: |Phi|max {:.4} L1/n {:.3} Linf {:.0}<={:.0} families {} g:{} T:{:?}",
            s.max_abs_phi,
            s.ratio_to_n(),
            s.linf_corrected,
            s.linf_raw,
            k.configs.len(),
            certs.into_iter().collect::<Vec<_>>().join("/"),
            k.correction_certificate
        ));
    }
    let sp = spread(&ratios);
    ok &= sp <= 2.0;
    // Families with two or more blocks first occur at layer 18 and with three
    // at layer 24, so T is first nonzero for the kernel of layer 22.
    let mut structural = 0;
    for layer in 18u32..=24 {
        for b in 0..RIESZ_MODULUS {
            let Ok(cfg) = RieszConfig::<f64>::new(layer, RIESZ_MODULUS, b) else { continue };
            if cfg.count < 2 {
                continue;
            }
            let mut blocks = Default::default();
            let phi = riesz_product_separable(&cfg, &mut blocks);
            let cert = riesz_decompose_separable(&phi, &cfg).map_err(fail)?.2;
            ok &= cert == Certificate::Structural;
            structural += 1;
        }
    }
    let (t, cert) = layer_correction::<f64>(22).map_err(fail)?;
    ok &= structural > 0 && !t.is_empty() && cert == Certificate::Structural;
    notes.push(format!("layers 18..24: {structural} nontrivial families, g Structural; n=22: {} T terms, {cert:?}", t.len()));
    ensure(ok, format!("L1/n spread {sp:.3}; {}", notes.join("; ")))
}

fn random_points(m: usize, dim: usize, rng: &mut impl Rng) -> Result<PointSet<f64>, String> {
    let mut points = Vec::new();
    while points.len() < m {
        points.push((0..dim).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect());
    }
    PointSet::new(dim, points).map_err(fail)
}

fn budget_set(m: usize, dim: usize, rng: &mut impl Rng) -> Result<GridSet, String> {
    let per_axis = (8.0 * (m as f64).powf(1.0 / dim as f64)).ceil() as usize;
    let grid = Grid::cube(dim, per_axis.next_power_of_two()).map_err(fail)?;
    let total = grid.total();
    // Largest cell count with m |B| < 1.
    let max_cells = (total - 1) / m as u64;
    let k = rng.random_range(1..=max_cells.max(1));
    let mut cells = BTreeSet::new();
    while (cells.len() as u64) < k {
        cells.insert(rng.random_range(0..total));
    }
    GridSet::from_cells(grid, cells).map_err(fail)
}

fn discretization_pipeline() -> Check {
    let cfg = DiscretizationRemezConfig { shift_grid: 4, oversample: 2, ..Default::default() };
    let mut shifts = 0;
    let mut certified = 0;
    let mut max_load = 0.0f64;
    for i in 0..500 {
        let mut rng = draw_rng(SEED + 8, i);
        let dim = rng.random_range(1..=2usize);
        let m = rng.random_range(1..=24usize);
        let x = random_points(m, dim, &mut rng)?;
        let b = budget_set(m, dim, &mut rng)?;
        max_load = max_load.max(b.measure() * m as f64);
        let n = rng.random_range(1..=5u32);
        let f: TrigPoly<f64> = random_poly_on(&step_hyperbolic(n, dim).map_err(fail)?, &mut rng).map_err(fail)?;
        if find_avoiding_shift(&x, &b).is_ok() {
            shifts += 1;
        }
        if discretization_to_remez(&f, &x, None, &b, &cfg).map_err(|e| format!("draw {i}: {e}"))?.outcome.holds {
            certified += 1;
        }
    }
    ensure(shifts == 500 && certified == 500, format!("500 draws, max m|B| {max_load:.3}: shifts found {shifts}, certified {certified}"))
}

fn nikolskii_scaling() -> Check {
    let ns: Vec<u64> = (3..=7).map(|e| 1u64 << e).collect();
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for (p, q) in [(f64::INFINITY, 1.0), (f64::INFINITY, 2.0), (4.0, 2.0)] {
        let r = jackson_min_exponent(p, q);
        let ys = ns.iter().map(|&n| jackson_lower_bound::<f64>(n, r, p, q, 4).map(|s| s.ratio)).collect::<Result<Vec<_>, _>>().map_err(fail)?;
        let slope = loglog_slope(&xs, &ys).map_err(fail)?.slope;
        let beta = 1.0 / q - 1.0 / p;
        ok &= (slope - beta).abs() <= 0.15;
        parts.push(format!("({p},{q}) slope {slope:.3} vs {beta}"));
    }
    let mut per_n = Vec::new();
    for &n in &ns {
        let sep = hyperbolic_vp_separable::<f64>(n, 2).map_err(fail)?;
        let nm = kernel_norms(&sep, &kernel_grid(&sep, 2).map_err(fail)?).map_err(fail)?;
        per_n.push(nm.linf / nm.l1 / n as f64);
    }
    let sp = spread(&per_n);
    ok &= sp <= 4.0;
    parts.push(format!("d=2 V_N ratio/N spread {sp:.3}"));
    ensure(ok, parts.join(", "))
}

fn run_twice(dir: &Path, name: &str, args: &[&str]) -> Result<(), String> {
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = dir.join(format!("{name}-{run}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_hcr"))
            .args(args)
            .arg("--out")
            .arg(&out)
            .env_remove("HCR_MEM_BUDGET")
            .output()
            .map_err(fail)?;
        let code = status.status.code().unwrap_or(-1);
        if code != 0 && code != 3 {
            return Err(format!("{name}: exit {code}: {}", String::from_utf8_lossy(&status.stderr).trim()));
        }
        let mut bytes = Vec::new();
        for suffix in ["", ".json", ".violations.json"] {
            let mut p = out.clone().into_os_string();
            p.push(suffix);
            bytes.push(std::fs::read(&p).ok());
        }
        outputs.push((code, bytes));
    }
    if outputs[0] != outputs[1] {
        return Err(format!("{name}: outputs differ"));
    }
    Ok(())
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(fail)?;
    let d = dir.path();
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("remez-scan", vec!["remez-scan", "--dim", "2", "--N-list", "4,8", "--b-list", "0.01,0.05", "--p", "2", "--seed", "3", "--draws", "4"]),
        ("nikolskii-scan", vec!["nikolskii-scan", "--dim", "2", "--p", "inf", "--q", "1", "--N-list", "4,8,16", "--draws", "4", "--seed", "3"]),
        ("riesz-verify", vec!["riesz-verify", "--n", "12", "--draws", "1", "--seed", "3"]),
        ("discretize-verify", vec!["discretize-verify", "--dim", "2", "--n", "2,3", "--draws", "3", "--seed", "3"]),
        ("implication-fuzz", vec!["implication-fuzz", "--draws", "200", "--seed", "3"]),
        ("mutated-fuzz", vec!["implication-fuzz", "--draws", "40", "--seed", "3", "--checks", "mutated-lemma-2.1"]),
        ("kernel-norms", vec!["kernel-norms", "--dim", "2", "--N", "8,16,32"]),
    ];
    for (name, args) in &runs {
        run_twice(d, name, args)?;
    }
    let violations = d.join("mutated-fuzz-0.csv.violations.json");
    if !violations.exists() {
        return Err("mutated fuzz wrote no violation file".into());
    }
    let v = violations.to_str().ok_or("non-utf8 path")?.to_string();
    run_twice(d, "replay", &["replay", &v])?;
    Ok(format!("{} commands, identical CSV, JSON and violation files across two runs", runs.len() + 1))
}

fn main() {
    let criteria: [(u32, &str, u64, fn() -> Check); 10] = [
        (1, "kernel flatness and support", 30, flatness),
        (2, "reproduction by V_N", 60, reproduction),
        (3, "kernel norm scaling", 300, norm_scaling),
        (4, "univariate sharp Remez bound", 300, univariate_remez),
        (5, "implication fuzz", 900, implications),
        (6, "hyperbolic-cross Remez bound", 600, hyperbolic_remez),
        (7, "Riesz machinery", 1800, riesz),
        (8, "shift-avoiding discretization pipeline", 300, discretization_pipeline),
        (9, "Nikol'skii scaling", 600, nikolskii_scaling),
        (10, "CLI determinism", 600, determinism),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, limit, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = run().and_then(|detail| within(start.elapsed(), limit).map(|_| detail));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {id:>2} PASS  {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
