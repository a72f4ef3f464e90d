use hcr::discretize::{candidate_point_set, discretization_constant, find_avoiding_shift, PointSet};
use hcr::indexsets::{hyperbolic_cross, step_hyperbolic};
use hcr::kernels::{dirichlet, hyperbolic_vp_kernel, vallee_poussin_1d};
use hcr::measure::{lp_norm, lp_norm_excluding, top_level_set};
use hcr::remez::{check_sparse_support, sample, sparse_support_remez_budget, SPARSE_SUPPORT_C};
use hcr::sample::{draw_rng, random_poly_on, random_sparse_1d};
use hcr::{Complex, Grid, GridSet, TrigPoly};
use proptest::prelude::*;

fn poly(n: u64, d: usize, seed: u64, i: u64) -> TrigPoly<f64> {
    random_poly_on(&hyperbolic_cross(n, d).unwrap(), &mut draw_rng(seed, i)).unwrap()
}

fn sparse(seed: u64, i: u64) -> TrigPoly<f64> {
    random_sparse_1d(6, 20, &mut draw_rng(seed, i)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn parseval_on_resolving_grids(n in 1u64..24, d in 1usize..=2, seed in any::<u64>()) {
        let f = poly(n, d, seed, 0);
        let g = sample(&f, 1).unwrap();
        let l2 = lp_norm(&g, 2.0).unwrap();
        let exact = f.parseval_sq();
        prop_assert!((l2 * l2 - exact).abs() <= 1e-9 * exact);
    }

    #[test]
    fn operations_are_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let (f, g, h) = (sparse(seed, 0), sparse(seed, 1), sparse(seed, 2));
        let (ca, cb) = (Complex::new(a, 0.5), Complex::new(b, -1.0));
        let comb = f.scale(ca).add(&g.scale(cb));
        let conv = comb.convolve(&h).unwrap();
        let conv_parts = f.convolve(&h).unwrap().scale(ca).add(&g.convolve(&h).unwrap().scale(cb));
        prop_assert!(conv.max_coeff_diff(&conv_parts) <= 1e-12);
        let prod = comb.multiply(&h).unwrap();
        let prod_parts = f.multiply(&h).unwrap().scale(ca).add(&g.multiply(&h).unwrap().scale(cb));
        prop_assert!(prod.max_coeff_diff(&prod_parts) <= 1e-11);
    }

    #[test]
    fn convolution_support_is_an_intersection(seed in any::<u64>()) {
        let (f, k) = (sparse(seed, 0), sparse(seed, 1));
        let c = f.convolve(&k).unwrap();
        for (m, _) in c.iter() {
            prop_assert!(f.coeff(m).norm() > 0.0 && k.coeff(m).norm() > 0.0);
        }
    }

    #[test]
    fn product_commutes_and_associates(seed in any::<u64>()) {
        let (f, g, h) = (sparse(seed, 0), sparse(seed, 1), sparse(seed, 2));
        prop_assert!(f.multiply(&g).unwrap().max_coeff_diff(&g.multiply(&f).unwrap()) <= 1e-12);
        let left = f.multiply(&g).unwrap().multiply(&h).unwrap();
        let right = f.multiply(&g.multiply(&h).unwrap()).unwrap();
        let scale = left.iter().map(|(_, c)| c.norm()).fold(1.0, f64::max);
        prop_assert!(left.max_coeff_diff(&right) <= 1e-12 * scale);
    }

    #[test]
    fn kernel_coefficients_lie_in_unit_interval(m in 1u64..40, n in 1u64..48, d in 1usize..=2) {
        let vp: TrigPoly<f64> = vallee_poussin_1d(m).unwrap();
        let hv: TrigPoly<f64> = hyperbolic_vp_kernel(n, d).unwrap();
        for k in [dirichlet::<f64>(m), vp, hv] {
            for (_, c) in k.iter() {
                prop_assert!(c.im == 0.0 && (0.0..=1.0).contains(&c.re));
            }
        }
    }

    #[test]
    fn top_level_set_beats_random_masks(n in 1u64..12, b in 0.01f64..0.4, p in prop::sample::select(vec![0.5, 1.0, 2.0, f64::INFINITY]), seed in any::<u64>()) {
        let g = sample(&poly(n, 1, seed, 0), 2).unwrap();
        let best = top_level_set(&g, b).unwrap();
        let floor = lp_norm_excluding(&g, p, &best).unwrap();
        let total = g.grid().total();
        let count = best.count();
        let mut rng = draw_rng(seed, 1);
        for _ in 0..100 {
            use rand::seq::index::sample as pick;
            let cells = pick(&mut rng, total as usize, count as usize).into_iter().map(|c| c as u64);
            let mask = GridSet::from_cells(g.grid().clone(), cells).unwrap();
            prop_assert!(lp_norm_excluding(&g, p, &mask).unwrap() >= floor * (1.0 - 1e-12));
        }
    }

    #[test]
    fn discretization_constant_commutes_with_grid_shifts(n in 1u32..5, i in 0usize..1024, j in 0usize..1024, seed in any::<u64>()) {
        let f: TrigPoly<f64> = random_poly_on(&step_hyperbolic(n, 2).unwrap(), &mut draw_rng(seed, 0)).unwrap();
        let x = candidate_point_set::<f64>(n, 2).unwrap();
        // Shifts by grid nodes leave the grid sup unchanged.
        let grid = Grid::for_degrees(&f.degrees(), 4).unwrap();
        let y = grid.point::<f64>(&[i % grid.size(0), j % grid.size(1)]);
        let lhs = discretization_constant(&f.shift(&y), &x, 4).unwrap().value();
        let rhs = discretization_constant(&f, &x.shifted(&y), 4).unwrap().value();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs);
    }

    #[test]
    fn avoiding_shift_exists_below_unit_load(m in 1usize..16, cells in prop::collection::btree_set(0u64..256, 1..16), seed in any::<u64>()) {
        let grid = Grid::new(&[256]).unwrap();
        let keep: Vec<u64> = cells.into_iter().take((255 / m).max(1)).collect();
        let b = GridSet::from_cells(grid, keep).unwrap();
        prop_assume!(b.measure() * (m as f64) < 1.0);
        let mut rng = draw_rng(seed, 0);
        use rand::Rng;
        let mut pts: Vec<Vec<f64>> = (0..m).map(|_| vec![rng.random_range(0.0..std::f64::consts::TAU)]).collect();
        pts.dedup();
        let x = PointSet::new(1, pts).unwrap();
        prop_assert!(find_avoiding_shift(&x, &b).is_ok());
    }

    #[test]
    fn sparse_support_budget_gives_bounded_ratio(terms in 1usize..8, p in prop::sample::select(vec![0.5, 1.0, 2.0, 4.0]), seed in any::<u64>()) {
        let f: TrigPoly<f64> = random_sparse_1d(terms, 40, &mut draw_rng(seed, 0)).unwrap();
        let b = sparse_support_remez_budget(&f.support(), p, SPARSE_SUPPORT_C).unwrap();
        let g = sample(&f, 8).unwrap();
        let out = check_sparse_support(&g, b, p).unwrap();
        prop_assert!(out.holds, "R = {} > {}", out.lhs, out.rhs);
    }
}
