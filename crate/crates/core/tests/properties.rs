mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wardrop_kit::compose::{
    embed_sp, is_series_parallel, product, split_demand, union, ConstrainedRoutingGame, SpExpr,
};
use wardrop_kit::diagnostics::{verify_mes, SweepPlan};
use wardrop_kit::singleton::water_fill;
use wardrop_kit::solver::{dual_value, solve_beckmann, solve_mes, verify_wardrop};
use wardrop_kit::{CongestionGame, CostFunction, DemandVector, FlowProfile, SolverConfig};

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn random_demand(rng: &mut ChaCha8Rng, g: &CongestionGame, hi: f64) -> DemandVector {
    DemandVector::new((0..g.num_commodities()).map(|_| rng.gen_range(0.0..hi)).collect()).unwrap()
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) -> Result<(), TestCaseError> {
    for (x, y) in a.iter().zip(b) {
        prop_assert!((x - y).abs() <= tol, "{:?} vs {:?}", a, b);
    }
    Ok(())
}

fn random_sp(rng: &mut ChaCha8Rng, depth: usize, next: &mut usize) -> SpExpr {
    if depth == 0 || rng.gen_bool(0.3) {
        *next += 1;
        return SpExpr::edge(format!("e{next}"), CostFunction::affine(1.0, 0.0));
    }
    let parts = (0..rng.gen_range(2..=3)).map(|_| random_sp(rng, depth - 1, next)).collect();
    if rng.gen_bool(0.5) {
        SpExpr::Series(parts)
    } else {
        SpExpr::Parallel(parts)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn singleton_chains_are_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_res = rng.gen_range(2..=5);
        let n_com = rng.gen_range(1..=4);
        let g = common::random_singleton(&mut rng, n_res, n_com, "p");
        let base: Vec<f64> = (0..n_com).map(|_| rng.gen_range(0.0..3.0)).collect();
        let axis = rng.gen_range(0..n_com);
        let plan = SweepPlan::chain(&base, axis, 0.0, 3.0, 5).unwrap();
        let v = verify_mes(&g, &plan, &cfg(), None).unwrap();
        prop_assert!(v.pass, "{:?}", v.violations);
    }

    #[test]
    fn product_loads_superpose(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g1 = common::random_singleton(&mut rng, 3, 2, "a");
        let g2 = common::random_singleton(&mut rng, 2, 2, "b");
        let p = product(&g1, &g2).unwrap();
        let d = random_demand(&mut rng, &p, 2.0);
        let (d1, d2) = split_demand(&d, 2, 2).unwrap();
        let whole = solve_mes(&p, &d, &cfg()).unwrap();
        let a = solve_mes(&g1, &d1, &cfg()).unwrap();
        let b = solve_mes(&g2, &d2, &cfg()).unwrap();
        let parts: Vec<f64> = a.loads.as_slice().iter().chain(b.loads.as_slice()).copied().collect();
        assert_close(whole.loads.as_slice(), &parts, 1e-6)?;
    }

    #[test]
    fn union_loads_are_blockwise(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g1 = common::random_singleton(&mut rng, 3, 2, "a");
        let g2 = common::random_singleton(&mut rng, 2, 1, "b");
        let u = union(&g1, &g2).unwrap();
        let d = random_demand(&mut rng, &u, 3.0);
        let whole = solve_mes(&u, &d, &cfg()).unwrap();
        let a = solve_mes(&g1, &DemandVector::new(d.as_slice()[..2].to_vec()).unwrap(), &cfg()).unwrap();
        let b = solve_mes(&g2, &DemandVector::new(d.as_slice()[2..].to_vec()).unwrap(), &cfg()).unwrap();
        let parts: Vec<f64> = a.loads.as_slice().iter().chain(b.loads.as_slice()).copied().collect();
        assert_close(whole.loads.as_slice(), &parts, 1e-6)?;
    }

    #[test]
    fn embedded_equilibria_map_back(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_singleton(&mut rng, 3, 2, "s");
        let (crg, w) = embed_sp(&g).unwrap();
        let d = random_demand(&mut rng, &g, 3.0);
        let r = solve_beckmann(&crg.to_game().unwrap(), &d, &cfg()).unwrap();
        let mut back = r.clone();
        back.flow = FlowProfile::new(
            w.strategy
                .iter()
                .enumerate()
                .map(|(h, m)| m.iter().map(|&k| r.flow.commodity(w.commodity[h])[k]).collect())
                .collect(),
        );
        let check = verify_wardrop(&g, &d, &back, 1e-6).unwrap();
        prop_assert!(check.pass, "{:?}", check);
    }

    #[test]
    fn sp_compositions_are_recognized(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut next = 0;
        let net = random_sp(&mut rng, 4, &mut next).flatten().unwrap();
        let pairs: Vec<_> = net.edges.iter().map(|e| (e.tail.clone(), e.head.clone())).collect();
        prop_assert!(is_series_parallel(&pairs, &net.source, &net.sink));
    }

    #[test]
    fn strong_duality(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_product_union(&mut rng, 2, 4, 16);
        let d = random_demand(&mut rng, &g, 3.0);
        let r = solve_beckmann(&g, &d, &SolverConfig::strict()).unwrap();
        let dual = dual_value(&g, &d, &r.tau).unwrap();
        prop_assert!((dual + r.beckmann_value).abs() <= 1e-6 * (1.0 + r.beckmann_value.abs()));
    }

    #[test]
    fn game_json_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_product_union(&mut rng, 2, 4, 16);
        let back = CongestionGame::from_json(&g.to_json()).unwrap();
        prop_assert_eq!(back, g.clone());
        let (crg, _) = embed_sp(&g).unwrap();
        prop_assert_eq!(ConstrainedRoutingGame::from_json(&crg.to_json()).unwrap(), crg);
    }

    #[test]
    fn loads_grow_strictly_inside_a_class(m in 0.05f64..3.9) {
        let g = wardrop_kit::fixtures::ex41();
        let (a, _) = water_fill(g.resources(), m).unwrap();
        let (b, _) = water_fill(g.resources(), m + 1e-3).unwrap();
        for (x, y) in a.iter().zip(&b) {
            if *x > 0.0 {
                prop_assert!(y > x);
            }
        }
    }
}
