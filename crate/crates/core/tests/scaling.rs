//! Desk-scale growth checks on the layer kernels and the discretization scan.

use hcr::discretize::empirical_discretization_scan;
use hcr::indexsets::hyperbolic_layer;
use hcr::kernels::{kernel_grid, kernel_norms, layer_vp_separable, BlockCache};
use hcr::riesz2d::{modified_layer_kernel, verify_theorem_3_2, LayerKernelOptions};
use hcr::sample::{draw_rng, random_poly_on};
use hcr::scaling::spread;
use hcr::{Grid, TrigPoly};

#[test]
fn layer_kernel_l1_grows_linearly() {
    let mut cache = BlockCache::new();
    let mut per_n = Vec::new();
    for n in 6..=11u32 {
        let k = layer_vp_separable::<f64>(n, 2, &mut cache).unwrap();
        let nm = kernel_norms(&k, &kernel_grid(&k, 2).unwrap()).unwrap();
        per_n.push(nm.l1 / n as f64);
    }
    assert!(spread(&per_n) <= 2.0, "{per_n:?}");
}

#[test]
fn layer_remez_bound_on_random_polynomials() {
    let n = 12;
    let opts = LayerKernelOptions { oversample: 2, compute_norms: true, check_reproduction: false };
    let stats = modified_layer_kernel::<f64>(n, &opts).unwrap().stats.unwrap();
    let layer = hyperbolic_layer(n, 2).unwrap();
    for i in 0..50 {
        let f: TrigPoly<f64> = random_poly_on(&layer, &mut draw_rng(5, i)).unwrap();
        let grid = Grid::for_degrees(&f.degrees(), 1).unwrap();
        let rep = verify_theorem_3_2(&f, n, &stats, grid).unwrap();
        assert!(rep.outcome.holds, "draw {i}: R = {:?}, bound {}", rep.ratio, rep.bound);
    }
}

#[test]
fn discretization_scan_is_finite() {
    for n in 6..=10 {
        let row = empirical_discretization_scan::<f64>(n, 2, 4, 9).unwrap();
        assert!(row.measured.is_finite() && row.measured >= 1.0, "n={n}: {row:?}");
    }
}
