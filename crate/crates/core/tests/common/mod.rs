#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use wardrop_kit::compose::{product, union};
use wardrop_kit::{Commodity, CongestionGame, CostFunction, Resource, Strategy};

/// A strictly increasing cost drawn from the affine, monomial and BPR families.
pub fn random_cost<R: Rng>(rng: &mut R) -> CostFunction {
    match rng.gen_range(0..3) {
        0 => CostFunction::affine(rng.gen_range(0.2..3.0), rng.gen_range(0.0..3.0)),
        1 => CostFunction::monomial(rng.gen_range(0.2..2.0), rng.gen_range(1.0..3.0), rng.gen_range(0.0..3.0)),
        _ => CostFunction::bpr(
            rng.gen_range(0.5..3.0),
            rng.gen_range(0.1..1.0),
            rng.gen_range(1.0..4.0),
            rng.gen_range(0.5..3.0),
        ),
    }
}

/// Singleton game with `n_res` resources and `n_com` commodities, each
/// allowed a random nonempty resource subset. Ids carry `tag` so factors can
/// be composed.
pub fn random_singleton<R: Rng>(rng: &mut R, n_res: usize, n_com: usize, tag: &str) -> CongestionGame {
    let resources = (0..n_res)
        .map(|i| Resource::new(format!("{tag}r{i}"), random_cost(rng)))
        .collect();
    let commodities = (0..n_com)
        .map(|h| {
            let mut idx: Vec<usize> = (0..n_res).collect();
            idx.shuffle(rng);
            let k = rng.gen_range(1..=n_res);
            let mut chosen = idx[..k].to_vec();
            chosen.sort_unstable();
            Commodity {
                id: format!("{tag}h{h}"),
                strategies: chosen.into_iter().map(|r| Strategy::new(vec![r])).collect(),
            }
        })
        .collect();
    CongestionGame::new(resources, commodities).unwrap()
}

/// Product-union composition of depth at most `depth` over small singleton
/// factors, kept to at most `max_com` commodities and `max_strat` strategies
/// per commodity.
pub fn random_product_union<R: Rng>(rng: &mut R, depth: usize, max_com: usize, max_strat: usize) -> CongestionGame {
    let mut counter = 0;
    loop {
        let g = compose(rng, depth, &mut counter);
        let widest = g.commodities().iter().map(|c| c.strategies.len()).max().unwrap();
        if g.num_commodities() <= max_com && widest <= max_strat {
            return g;
        }
    }
}

fn compose<R: Rng>(rng: &mut R, depth: usize, counter: &mut usize) -> CongestionGame {
    *counter += 1;
    let tag = format!("f{counter}");
    if depth == 0 || rng.gen_bool(0.3) {
        let n_res = rng.gen_range(1..=3);
        let n_com = rng.gen_range(1..=2);
        return random_singleton(rng, n_res, n_com, &tag);
    }
    let a = compose(rng, depth - 1, counter);
    let b = compose(rng, depth - 1, counter);
    if rng.gen_bool(0.5) {
        product(&a, &b).unwrap()
    } else {
        union(&a, &b).unwrap()
    }
}

/// Projected gradient descent for `min Σ ∫c_r` over `{x ≥ 0, Σx = d}`; an
/// independent check on water-filling.
pub fn projected_gradient(costs: &[CostFunction], d: f64) -> Vec<f64> {
    let n = costs.len();
    let mut x = vec![d / n as f64; n];
    // step well below 1/slope for the slopes the generators draw
    let step = 0.2;
    for _ in 0..200_000 {
        let y: Vec<f64> = (0..n).map(|i| x[i] - step * costs[i].eval(x[i])).collect();
        let next = project_simplex(&y, d);
        let moved = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = next;
        if moved < 1e-14 {
            break;
        }
    }
    x
}

fn project_simplex(y: &[f64], d: f64) -> Vec<f64> {
    let mut s = y.to_vec();
    s.sort_by(|p, q| q.total_cmp(p));
    let (mut acc, mut theta) = (0.0, 0.0);
    for (k, v) in s.iter().enumerate() {
        acc += v;
        let t = (acc - d) / (k + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|v| (v - theta).max(0.0)).collect()
}
