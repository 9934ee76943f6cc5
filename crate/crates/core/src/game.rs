//! Congestion game structures, demands, flows and loads.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cost::CostFunction;
use crate::error::{dim_check, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resource {
    pub id: String,
    pub cost: CostFunction,
}

impl Resource {
    pub fn new(id: impl Into<String>, cost: CostFunction) -> Self {
        Resource {
            id: id.into(),
            cost,
        }
    }
}

/// A strategy as a sorted set of resource indices into its game.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Strategy {
    resources: Vec<usize>,
}

impl Strategy {
    /// Panics on an empty set.
    pub fn new(mut resources: Vec<usize>) -> Self {
        assert!(!resources.is_empty(), "strategy must be nonempty");
        resources.sort_unstable();
        resources.dedup();
        Strategy { resources }
    }

    pub fn resources(&self) -> &[usize] {
        &self.resources
    }

    pub fn contains(&self, r: usize) -> bool {
        self.resources.binary_search(&r).is_ok()
    }

    pub fn len(&self) -> usize {
        self.resources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resources.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Commodity {
    pub id: String,
    pub strategies: Vec<Strategy>,
}

/// Serialized form of a commodity: strategies as lists of resource ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommodityDef {
    pub id: String,
    pub strategies: Vec<Vec<String>>,
}

/// The JSON game-definition schema. May be invalid; see [`validate_game`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDef {
    pub resources: Vec<Resource>,
    pub commodities: Vec<CommodityDef>,
}

impl GameDef {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// One failed invariant of a game definition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// e.g. `resource e1`, `commodity ac strategy 1`
    pub entity: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.message)
    }
}

/// Lists every invariant a definition breaks; empty iff it builds into a
/// [`CongestionGame`].
pub fn validate_game(def: &GameDef) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |entity: String, message: String| out.push(Violation { entity, message });

    if def.resources.is_empty() {
        push("game".into(), "no resources".into());
    }
    if def.commodities.is_empty() {
        push("game".into(), "no commodities".into());
    }

    let mut seen = HashSet::new();
    for r in &def.resources {
        if !seen.insert(r.id.as_str()) {
            push(format!("resource {}", r.id), "duplicate resource id".into());
        }
        for p in r.cost.problems() {
            push(format!("resource {}", r.id), p);
        }
    }

    let mut seen_c = HashSet::new();
    for c in &def.commodities {
        if !seen_c.insert(c.id.as_str()) {
            push(format!("commodity {}", c.id), "duplicate commodity id".into());
        }
        if c.strategies.is_empty() {
            push(format!("commodity {}", c.id), "no strategies".into());
        }
        let mut sets: HashSet<BTreeSet<&str>> = HashSet::new();
        for (k, s) in c.strategies.iter().enumerate() {
            let entity = format!("commodity {} strategy {}", c.id, k);
            if s.is_empty() {
                push(entity.clone(), "empty strategy".into());
            }
            let mut ids = BTreeSet::new();
            for rid in s {
                if !seen.contains(rid.as_str()) {
                    push(entity.clone(), format!("unknown resource id {rid}"));
                }
                if !ids.insert(rid.as_str()) {
                    push(entity.clone(), format!("resource {rid} listed twice"));
                }
            }
            if !s.is_empty() && !sets.insert(ids) {
                push(entity, "duplicate strategy".into());
            }
        }
    }
    out
}

/// An immutable, validated congestion game.
#[derive(Debug, Clone, PartialEq)]
pub struct CongestionGame {
    resources: Vec<Resource>,
    commodities: Vec<Commodity>,
    singleton: bool,
}

impl CongestionGame {
    pub fn from_def(def: &GameDef) -> Result<Self> {
        let violations = validate_game(def);
        if !violations.is_empty() {
            return Err(Error::InvalidGame(violations));
        }
        let index: HashMap<&str, usize> = def
            .resources
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.as_str(), i))
            .collect();
        let commodities = def
            .commodities
            .iter()
            .map(|c| Commodity {
                id: c.id.clone(),
                strategies: c
                    .strategies
                    .iter()
                    .map(|s| Strategy::new(s.iter().map(|id| index[id.as_str()]).collect()))
                    .collect(),
            })
            .collect();
        Ok(Self::assemble(def.resources.clone(), commodities))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_def(&GameDef::from_json(s)?)
    }

    /// Builds from index-based strategies, validating through the definition path.
    pub fn new(resources: Vec<Resource>, commodities: Vec<Commodity>) -> Result<Self> {
        for c in &commodities {
            for s in &c.strategies {
                if let Some(&bad) = s.resources().iter().find(|&&r| r >= resources.len()) {
                    return Err(Error::Structural(format!(
                        "commodity {} references resource index {bad}",
                        c.id
                    )));
                }
            }
        }
        let def = Self::assemble(resources, commodities).to_def();
        Self::from_def(&def)
    }

    fn assemble(resources: Vec<Resource>, commodities: Vec<Commodity>) -> Self {
        let singleton = commodities
            .iter()
            .all(|c| c.strategies.iter().all(|s| s.len() == 1));
        CongestionGame {
            resources,
            commodities,
            singleton,
        }
    }

    pub fn to_def(&self) -> GameDef {
        GameDef {
            resources: self.resources.clone(),
            commodities: self
                .commodities
                .iter()
                .map(|c| CommodityDef {
                    id: c.id.clone(),
                    strategies: c
                        .strategies
                        .iter()
                        .map(|s| self.strategy_ids(s))
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_def()).expect("game serializes")
    }

    pub fn resources(&self) -> &[Resource] {
        &self.resources
    }

    pub fn commodities(&self) -> &[Commodity] {
        &self.commodities
    }

    pub fn num_resources(&self) -> usize {
        self.resources.len()
    }

    pub fn num_commodities(&self) -> usize {
        self.commodities.len()
    }

    pub fn is_singleton(&self) -> bool {
        self.singleton
    }

    pub fn resource_index(&self, id: &str) -> Option<usize> {
        self.resources.iter().position(|r| r.id == id)
    }

    pub fn commodity_index(&self, id: &str) -> Option<usize> {
        self.commodities.iter().position(|c| c.id == id)
    }

    pub fn strategy_ids(&self, s: &Strategy) -> Vec<String> {
        s.resources()
            .iter()
            .map(|&r| self.resources[r].id.clone())
            .collect()
    }

    /// Resolves a list of resource ids into a strategy of this game.
    pub fn strategy_from_ids<S: AsRef<str>>(&self, ids: &[S]) -> Result<Strategy> {
        if ids.is_empty() {
            return Err(Error::Structural("empty strategy".into()));
        }
        let idx = ids
            .iter()
            .map(|id| {
                self.resource_index(id.as_ref())
                    .ok_or_else(|| Error::Structural(format!("unknown resource id {}", id.as_ref())))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Strategy::new(idx))
    }

    /// For singleton games: the feasible resources `R^h` of each commodity.
    pub fn feasible_resources(&self, h: usize) -> Vec<usize> {
        let set: BTreeSet<usize> = self.commodities[h]
            .strategies
            .iter()
            .flat_map(|s| s.resources().iter().copied())
            .collect();
        set.into_iter().collect()
    }

    pub fn resource_costs(&self, loads: &LoadProfile) -> Vec<f64> {
        self.resources
            .iter()
            .zip(loads.as_slice())
            .map(|(r, &x)| r.cost.eval(x))
            .collect()
    }

    pub fn all_strictly_increasing(&self) -> bool {
        self.resources.iter().all(|r| r.cost.is_strictly_increasing())
    }

    pub fn zero_flow(&self) -> FlowProfile {
        FlowProfile::new(
            self.commodities
                .iter()
                .map(|c| vec![0.0; c.strategies.len()])
                .collect(),
        )
    }
}

/// Nonnegative demand per commodity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DemandVector(Vec<f64>);

impl DemandVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "demand entries must be finite and >= 0, got {bad}"
            )));
        }
        Ok(DemandVector(values))
    }

    pub fn zeros(n: usize) -> Self {
        DemandVector(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn check_for(&self, game: &CongestionGame) -> Result<()> {
        dim_check("demand vector", game.num_commodities(), self.len())
    }
}

impl std::ops::Index<usize> for DemandVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Per-commodity, per-strategy flow, indexed like the game's strategy lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FlowProfile(Vec<Vec<f64>>);

impl FlowProfile {
    pub fn new(flows: Vec<Vec<f64>>) -> Self {
        FlowProfile(flows)
    }

    pub fn commodity(&self, h: usize) -> &[f64] {
        &self.0[h]
    }

    pub fn commodity_mut(&mut self, h: usize) -> &mut [f64] {
        &mut self.0[h]
    }

    pub fn as_nested(&self) -> &[Vec<f64>] {
        &self.0
    }

    pub fn check_shape(&self, game: &CongestionGame) -> Result<()> {
        dim_check("flow commodities", game.num_commodities(), self.0.len())?;
        for (c, f) in game.commodities().iter().zip(&self.0) {
            dim_check("flow strategies", c.strategies.len(), f.len())?;
        }
        Ok(())
    }

    /// Largest violation of `Σ_s f_s^h = μ^h`, `f ≥ 0`, scaled by `1 + μ^h`.
    pub fn feasibility_residual(&self, demand: &DemandVector) -> f64 {
        self.0
            .iter()
            .zip(demand.as_slice())
            .map(|(f, &mu)| {
                let sum: f64 = f.iter().sum();
                let neg = f.iter().fold(0.0f64, |m, &v| m.max(-v));
                ((sum - mu).abs()).max(neg) / (1.0 + mu)
            })
            .fold(0.0, f64::max)
    }

    /// Feasibility within `tol_feas = 1e-9·(1 + μ^h)` per commodity.
    pub fn is_feasible(&self, game: &CongestionGame, demand: &DemandVector) -> bool {
        self.check_shape(game).is_ok()
            && demand.len() == self.0.len()
            && self.feasibility_residual(demand) <= FEASIBILITY_TOL
    }

    pub fn add(&self, other: &FlowProfile) -> FlowProfile {
        FlowProfile(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        )
    }
}

pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Per-resource loads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LoadProfile(Vec<f64>);

impl LoadProfile {
    pub fn new(loads: Vec<f64>) -> Self {
        LoadProfile(loads)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn max_abs_diff(&self, other: &LoadProfile) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for LoadProfile {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// `x_r = Σ_h Σ_{s ∋ r} f_s^h`.
pub fn load_from_flow(game: &CongestionGame, flow: &FlowProfile) -> Result<LoadProfile> {
    flow.check_shape(game)?;
    let mut x = vec![0.0; game.num_resources()];
    for (c, f) in game.commodities().iter().zip(flow.as_nested()) {
        for (s, &v) in c.strategies.iter().zip(f) {
            for &r in s.resources() {
                x[r] += v;
            }
        }
    }
    Ok(LoadProfile(x))
}

/// `c_s(x) = Σ_{r ∈ s} c_r(x_r)`.
pub fn strategy_cost(game: &CongestionGame, loads: &LoadProfile, strategy: &Strategy) -> Result<f64> {
    dim_check("load profile", game.num_resources(), loads.len())?;
    if let Some(&bad) = strategy.resources().iter().find(|&&r| r >= game.num_resources()) {
        return Err(Error::Structural(format!("unknown resource index {bad}")));
    }
    Ok(strategy
        .resources()
        .iter()
        .map(|&r| game.resources()[r].cost.eval(loads[r]))
        .sum())
}

/// [`strategy_cost`] for a strategy given by resource ids.
pub fn strategy_cost_by_ids<S: AsRef<str>>(
    game: &CongestionGame,
    loads: &LoadProfile,
    ids: &[S],
) -> Result<f64> {
    let s = game.strategy_from_ids(ids)?;
    strategy_cost(game, loads, &s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn fisk_loads_from_two_path_split() {
        let g = fixtures::fisk();
        // commodities ab, ac, bc; ac strategies [{e1,e2}, {e3}]
        let f = FlowProfile::new(vec![vec![60.0], vec![18.0, 12.0], vec![6.0]]);
        let x = load_from_flow(&g, &f).unwrap();
        assert_eq!(x.as_slice(), &[78.0, 24.0, 12.0]);
        assert_eq!(strategy_cost_by_ids(&g, &x, &["e1", "e2"]).unwrap(), 102.0);
        assert_eq!(strategy_cost_by_ids(&g, &x, &["e3"]).unwrap(), 102.0);
    }

    #[test]
    fn fisk_split_is_line_search_minimum() {
        // brute-force the Beckmann potential over the (a,c) split y
        let g = fixtures::fisk();
        let potential = |y: f64| {
            let f = FlowProfile::new(vec![vec![60.0], vec![y, 30.0 - y], vec![6.0]]);
            let x = load_from_flow(&g, &f).unwrap();
            g.resources()
                .iter()
                .zip(x.as_slice())
                .map(|(r, &v)| r.cost.integral(v))
                .sum::<f64>()
        };
        let best = (0..=30_000)
            .map(|i| i as f64 * 1e-3)
            .min_by(|a, b| potential(*a).total_cmp(&potential(*b)))
            .unwrap();
        assert!((best - 18.0).abs() < 1e-3);
    }

    #[test]
    fn zero_flow_gives_zero_loads() {
        let g = fixtures::fisk();
        let x = load_from_flow(&g, &g.zero_flow()).unwrap();
        assert!(x.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forced_single_strategy() {
        let def = GameDef {
            resources: vec![
                Resource::new("r1", CostFunction::affine(1.0, 0.0)),
                Resource::new("r2", CostFunction::affine(1.0, 2.0)),
            ],
            commodities: vec![CommodityDef {
                id: "h".into(),
                strategies: vec![vec!["r1".into(), "r2".into()]],
            }],
        };
        let g = CongestionGame::from_def(&def).unwrap();
        assert!(!g.is_singleton());
        let x = load_from_flow(&g, &FlowProfile::new(vec![vec![5.0]])).unwrap();
        assert_eq!(x.as_slice(), &[5.0, 5.0]);
        let empty = LoadProfile::new(vec![0.0, 0.0]);
        assert_eq!(strategy_cost_by_ids(&g, &empty, &["r2"]).unwrap(), 2.0);
    }

    #[test]
    fn ex41_costs_at_purple_point() {
        let g = fixtures::ex41();
        let x = LoadProfile::new(vec![1.0, 2.0, 0.0]);
        for id in ["r1", "r2", "r3"] {
            assert_eq!(strategy_cost_by_ids(&g, &x, &[id]).unwrap(), 2.0);
        }
    }

    #[test]
    fn unknown_resource_in_cost_query() {
        let g = fixtures::ex41();
        let x = LoadProfile::new(vec![0.0; 3]);
        assert!(matches!(
            strategy_cost_by_ids(&g, &x, &["nope"]),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn dimension_mismatch() {
        let g = fixtures::fisk();
        let f = FlowProfile::new(vec![vec![1.0], vec![1.0]]);
        assert!(matches!(load_from_flow(&g, &f), Err(Error::Dimension { .. })));
    }

    #[test]
    fn validation_messages() {
        assert!(validate_game(&fixtures::fisk().to_def()).is_empty());

        let mut def = fixtures::fisk().to_def();
        def.commodities[1].strategies[0].push("e9".into());
        let v = validate_game(&def);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].entity, "commodity ac strategy 0");
        assert!(v[0].message.contains("e9"));

        let mut def = fixtures::ex41().to_def();
        def.resources[1].cost = CostFunction::piecewise_linear(vec![[0.0, 3.0], [1.0, 2.0]]);
        let v = validate_game(&def);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].entity, "resource r2");

        let mut def = fixtures::ex41().to_def();
        def.commodities[0].strategies.push(vec!["r2".into()]);
        assert_eq!(validate_game(&def)[0].message, "duplicate strategy");
        assert!(CongestionGame::from_def(&def).is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = fixtures::fisk();
        let back = CongestionGame::from_json(&g.to_json()).unwrap();
        assert_eq!(g, back);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn load_is_linear(a in prop::collection::vec(0.0..50.0f64, 4), b in prop::collection::vec(0.0..50.0f64, 4)) {
                let g = fixtures::fisk();
                let f1 = FlowProfile::new(vec![vec![a[0]], vec![a[1], a[2]], vec![a[3]]]);
                let f2 = FlowProfile::new(vec![vec![b[0]], vec![b[1], b[2]], vec![b[3]]]);
                let sum = load_from_flow(&g, &f1.add(&f2)).unwrap();
                let x1 = load_from_flow(&g, &f1).unwrap();
                let x2 = load_from_flow(&g, &f2).unwrap();
                for r in 0..3 {
                    prop_assert!((sum[r] - (x1[r] + x2[r])).abs() <= 1e-12 * (1.0 + sum[r]));
                }
            }

            #[test]
            fn singleton_mass_conservation(w in prop::collection::vec(0.0..10.0f64, 4)) {
                let g = fixtures::ex41();
                let f = FlowProfile::new(vec![vec![w[0], w[1]], vec![w[2], w[3]]]);
                let x = load_from_flow(&g, &f).unwrap();
                let want = w[0] + w[1] + w[2] + w[3];
                prop_assert!((x.total() - want).abs() <= 1e-12 * (1.0 + want));
            }
        }
    }
}
