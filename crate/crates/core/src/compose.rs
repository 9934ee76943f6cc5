//! Game algebra: products and unions of congestion games, constrained routing
//! games on directed multigraphs, series-parallel embeddings and the
//! structural conditions under which a routing game is product-union.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::CostFunction;
use crate::error::{dim_check, Error, Result};
use crate::game::{load_from_flow, Commodity, CongestionGame, DemandVector, FlowProfile, Resource, Strategy};
use crate::solver::{random_feasible_flow, solve_beckmann, SolverConfig};

/// Largest strategy set a composition may enumerate for one commodity.
pub const MAX_STRATEGIES: usize = 100_000;

fn disjoint_resources(g1: &CongestionGame, g2: &CongestionGame) -> Result<()> {
    match g2.resources().iter().find(|r| g1.resource_index(&r.id).is_some()) {
        Some(r) => Err(Error::Structural(format!("resource id {} appears in both games", r.id))),
        None => Ok(()),
    }
}

fn shifted(s: &Strategy, offset: usize) -> impl Iterator<Item = usize> + '_ {
    s.resources().iter().map(move |&r| r + offset)
}

/// Series composition: commodity `i⊗j` picks one strategy from each factor.
///
/// Commodities are ordered `i`-major (index `i·|H2| + j`).
pub fn product(g1: &CongestionGame, g2: &CongestionGame) -> Result<CongestionGame> {
    disjoint_resources(g1, g2)?;
    let n1 = g1.num_resources();
    let resources: Vec<Resource> = g1.resources().iter().chain(g2.resources()).cloned().collect();
    let mut commodities = Vec::with_capacity(g1.num_commodities() * g2.num_commodities());
    for c1 in g1.commodities() {
        for c2 in g2.commodities() {
            let count = c1.strategies.len() * c2.strategies.len();
            if count > MAX_STRATEGIES {
                return Err(Error::Structural(format!(
                    "commodity {}⊗{} would have {count} strategies (limit {MAX_STRATEGIES})",
                    c1.id, c2.id
                )));
            }
            let strategies = c1
                .strategies
                .iter()
                .flat_map(|s1| {
                    c2.strategies
                        .iter()
                        .map(move |s2| Strategy::new(s1.resources().iter().copied().chain(shifted(s2, n1)).collect()))
                })
                .collect();
            commodities.push(Commodity {
                id: format!("{}⊗{}", c1.id, c2.id),
                strategies,
            });
        }
    }
    CongestionGame::new(resources, commodities)
}

/// Parallel composition: both games side by side.
pub fn union(g1: &CongestionGame, g2: &CongestionGame) -> Result<CongestionGame> {
    disjoint_resources(g1, g2)?;
    if let Some(c) = g2.commodities().iter().find(|c| g1.commodity_index(&c.id).is_some()) {
        return Err(Error::Structural(format!("commodity id {} appears in both games", c.id)));
    }
    let n1 = g1.num_resources();
    let resources = g1.resources().iter().chain(g2.resources()).cloned().collect();
    let commodities = g1
        .commodities()
        .iter()
        .cloned()
        .chain(g2.commodities().iter().map(|c| Commodity {
            id: c.id.clone(),
            strategies: c.strategies.iter().map(|s| Strategy::new(shifted(s, n1).collect())).collect(),
        }))
        .collect();
    CongestionGame::new(resources, commodities)
}

/// Factor demands of a product game: row and column sums of `μ^{i⊗j}`.
pub fn split_demand(demand: &DemandVector, n1: usize, n2: usize) -> Result<(DemandVector, DemandVector)> {
    dim_check("product demand", n1 * n2, demand.len())?;
    let mut mu1 = vec![0.0; n1];
    let mut mu2 = vec![0.0; n2];
    for i in 0..n1 {
        for j in 0..n2 {
            mu1[i] += demand[i * n2 + j];
            mu2[j] += demand[i * n2 + j];
        }
    }
    Ok((DemandVector::new(mu1)?, DemandVector::new(mu2)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub id: String,
    pub tail: String,
    pub head: String,
    pub cost: CostFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpEdge {
    pub id: String,
    pub cost: CostFunction,
}

/// Series-parallel expression; serialized as `{"edge":{..}}`,
/// `{"series":[..]}` or `{"parallel":[..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpExpr {
    Edge(SpEdge),
    Series(Vec<SpExpr>),
    Parallel(Vec<SpExpr>),
}

/// Flat multigraph with source `s` and sink `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpNetwork {
    pub vertices: Vec<String>,
    pub edges: Vec<Edge>,
    pub source: String,
    pub sink: String,
}

impl SpExpr {
    pub fn edge(id: impl Into<String>, cost: CostFunction) -> Self {
        SpExpr::Edge(SpEdge { id: id.into(), cost })
    }

    /// Lays the expression out between fresh terminals `s` and `t`;
    /// internal vertices are `v1, v2, ...`.
    pub fn flatten(&self) -> Result<SpNetwork> {
        let mut net = SpNetwork {
            vertices: vec!["s".into(), "t".into()],
            edges: Vec::new(),
            source: "s".into(),
            sink: "t".into(),
        };
        self.place("s", "t", &mut net)?;
        let mut seen = HashSet::new();
        if let Some(e) = net.edges.iter().find(|e| !seen.insert(e.id.as_str())) {
            return Err(Error::Structural(format!("edge id {} used twice", e.id)));
        }
        Ok(net)
    }

    fn place(&self, tail: &str, head: &str, net: &mut SpNetwork) -> Result<()> {
        match self {
            SpExpr::Edge(e) => net.edges.push(Edge {
                id: e.id.clone(),
                tail: tail.into(),
                head: head.into(),
                cost: e.cost.clone(),
            }),
            SpExpr::Series(parts) | SpExpr::Parallel(parts) if parts.is_empty() => {
                return Err(Error::Structural("empty series/parallel composition".into()))
            }
            SpExpr::Series(parts) => {
                let mut from = tail.to_string();
                for (k, part) in parts.iter().enumerate() {
                    let to = if k + 1 == parts.len() {
                        head.to_string()
                    } else {
                        let v = format!("v{}", net.vertices.len() - 1);
                        net.vertices.push(v.clone());
                        v
                    };
                    part.place(&from, &to, net)?;
                    from = to;
                }
            }
            SpExpr::Parallel(parts) => {
                for part in parts {
                    part.place(tail, head, net)?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrgCommodity {
    pub id: String,
    pub origin: String,
    pub destination: String,
    /// Each path is an ordered edge list from origin to destination.
    pub paths: Vec<Vec<String>>,
}

/// Routing game on a directed multigraph where commodity `h` may only use the
/// listed paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstrainedRoutingGame {
    pub vertices: Vec<String>,
    pub edges: Vec<Edge>,
    pub commodities: Vec<CrgCommodity>,
}

impl ConstrainedRoutingGame {
    pub fn from_json(s: &str) -> Result<Self> {
        let crg: ConstrainedRoutingGame = serde_json::from_str(s)?;
        crg.validate()?;
        Ok(crg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("routing game serializes")
    }

    /// All routes listed for one commodity on a flattened SP network.
    pub fn on_network(net: &SpNetwork, commodities: Vec<CrgCommodity>) -> Result<Self> {
        let crg = ConstrainedRoutingGame {
            vertices: net.vertices.clone(),
            edges: net.edges.clone(),
            commodities,
        };
        crg.validate()?;
        Ok(crg)
    }

    fn edge_map(&self) -> HashMap<&str, usize> {
        self.edges.iter().enumerate().map(|(i, e)| (e.id.as_str(), i)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let vertices: HashSet<&str> = self.vertices.iter().map(String::as_str).collect();
        if vertices.len() != self.vertices.len() {
            problems.push("duplicate vertex id".to_string());
        }
        let edges = self.edge_map();
        if edges.len() != self.edges.len() {
            problems.push("duplicate edge id".to_string());
        }
        for e in &self.edges {
            for end in [&e.tail, &e.head] {
                if !vertices.contains(end.as_str()) {
                    problems.push(format!("edge {}: unknown vertex {end}", e.id));
                }
            }
            if e.tail == e.head {
                problems.push(format!("edge {}: self-loop", e.id));
            }
            for p in e.cost.problems() {
                problems.push(format!("edge {}: {p}", e.id));
            }
        }
        if self.commodities.is_empty() {
            problems.push("no commodities".to_string());
        }
        for c in &self.commodities {
            if c.paths.is_empty() {
                problems.push(format!("commodity {}: no paths", c.id));
            }
            for (k, path) in c.paths.iter().enumerate() {
                if let Err(msg) = self.trace(c, path, &edges) {
                    problems.push(format!("commodity {} path {k}: {msg}", c.id));
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Structural(problems.join("; ")))
        }
    }

    fn trace(&self, c: &CrgCommodity, path: &[String], edges: &HashMap<&str, usize>) -> std::result::Result<(), String> {
        if path.is_empty() {
            return Err("empty path".into());
        }
        let mut at = c.origin.as_str();
        let mut used = HashSet::new();
        for id in path {
            let &i = edges.get(id.as_str()).ok_or_else(|| format!("unknown edge {id}"))?;
            if !used.insert(i) {
                return Err(format!("edge {id} repeated"));
            }
            let e = &self.edges[i];
            if e.tail != at {
                return Err(format!("edge {id} does not leave {at}"));
            }
            at = &e.head;
        }
        if at != c.destination {
            return Err(format!("ends at {at}, not {}", c.destination));
        }
        Ok(())
    }

    /// Vertex sequence visited by a path.
    pub fn vertex_sequence(&self, origin: &str, path: &[String]) -> Vec<String> {
        let edges = self.edge_map();
        std::iter::once(origin.to_string())
            .chain(path.iter().map(|id| self.edges[edges[id.as_str()]].head.clone()))
            .collect()
    }

    /// The congestion game with edges as resources and paths as strategies
    /// (same order).
    pub fn to_game(&self) -> Result<CongestionGame> {
        let edges = self.edge_map();
        let resources = self.edges.iter().map(|e| Resource::new(e.id.clone(), e.cost.clone())).collect();
        let commodities = self
            .commodities
            .iter()
            .map(|c| Commodity {
                id: c.id.clone(),
                strategies: c
                    .paths
                    .iter()
                    .map(|p| Strategy::new(p.iter().map(|id| edges[id.as_str()]).collect()))
                    .collect(),
            })
            .collect();
        CongestionGame::new(resources, commodities)
    }

    pub fn is_common_od(&self) -> bool {
        self.commodities
            .windows(2)
            .all(|w| w[0].origin == w[1].origin && w[0].destination == w[1].destination)
    }
}

/// Commodity and per-commodity strategy correspondence between a game and
/// its routing representation (`commodity[h]` is the image of `h`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceWitness {
    pub commodity: Vec<usize>,
    pub strategy: Vec<Vec<usize>>,
}

impl EquivalenceWitness {
    pub fn identity(game: &CongestionGame) -> Self {
        EquivalenceWitness {
            commodity: (0..game.num_commodities()).collect(),
            strategy: game.commodities().iter().map(|c| (0..c.strategies.len()).collect()).collect(),
        }
    }

    fn check_total(&self, g: &CongestionGame, h: &CongestionGame) -> Result<()> {
        dim_check("witness commodities", g.num_commodities(), self.commodity.len())?;
        dim_check("routing commodities", g.num_commodities(), h.num_commodities())?;
        dim_check("witness strategy maps", g.num_commodities(), self.strategy.len())?;
        let mut seen = vec![false; h.num_commodities()];
        for (hh, &img) in self.commodity.iter().enumerate() {
            if img >= seen.len() || std::mem::replace(&mut seen[img], true) {
                return Err(Error::Structural("witness commodity map is not a bijection".into()));
            }
            let n = g.commodities()[hh].strategies.len();
            dim_check("witness strategies", n, self.strategy[hh].len())?;
            dim_check("routing strategies", n, h.commodities()[img].strategies.len())?;
            let mut hit = vec![false; n];
            for &k in &self.strategy[hh] {
                if k >= n || std::mem::replace(&mut hit[k], true) {
                    return Err(Error::Structural(format!(
                        "witness strategy map of commodity {} is not a bijection",
                        g.commodities()[hh].id
                    )));
                }
            }
        }
        Ok(())
    }

    fn map_flow(&self, f: &FlowProfile, target: &CongestionGame) -> FlowProfile {
        let mut out = target.zero_flow();
        for (h, &img) in self.commodity.iter().enumerate() {
            for (k, &kk) in self.strategy[h].iter().enumerate() {
                out.commodity_mut(img)[kk] = f.commodity(h)[k];
            }
        }
        out
    }

    fn map_demand(&self, mu: &DemandVector) -> Result<DemandVector> {
        let mut out = vec![0.0; mu.len()];
        for (h, &img) in self.commodity.iter().enumerate() {
            out[img] = mu[h];
        }
        DemandVector::new(out)
    }
}

/// Every game as a common-OD routing game on a chain of two-edge blocks: the
/// top edge of block `i` carries resource `i`, the bottom edge is a free
/// bypass.
pub fn embed_sp(game: &CongestionGame) -> Result<(ConstrainedRoutingGame, EquivalenceWitness)> {
    let m = game.num_resources();
    let vertex = |i: usize| -> String {
        match i {
            0 => "O".into(),
            i if i == m => "D".into(),
            i => format!("v{i}"),
        }
    };
    let bypass = |r: &Resource| format!("bypass_{}", r.id);
    let mut edges = Vec::with_capacity(2 * m);
    for (i, r) in game.resources().iter().enumerate() {
        edges.push(Edge {
            id: r.id.clone(),
            tail: vertex(i),
            head: vertex(i + 1),
            cost: r.cost.clone(),
        });
        edges.push(Edge {
            id: bypass(r),
            tail: vertex(i),
            head: vertex(i + 1),
            cost: CostFunction::constant(0.0),
        });
    }
    let commodities = game
        .commodities()
        .iter()
        .map(|c| CrgCommodity {
            id: c.id.clone(),
            origin: vertex(0),
            destination: vertex(m),
            paths: c
                .strategies
                .iter()
                .map(|s| {
                    game.resources()
                        .iter()
                        .enumerate()
                        .map(|(i, r)| if s.contains(i) { r.id.clone() } else { bypass(r) })
                        .collect()
                })
                .collect(),
        })
        .collect();
    let crg = ConstrainedRoutingGame {
        vertices: (0..=m).map(vertex).collect(),
        edges,
        commodities,
    };
    crg.validate()?;
    Ok((crg, EquivalenceWitness::identity(game)))
}

fn fresh_name(base: &str, taken: &HashSet<&str>) -> String {
    let mut name = base.to_string();
    while taken.contains(name.as_str()) {
        name.push('\'');
    }
    name
}

/// Adds a super-source `O*` and super-sink `D*` joined by free connector
/// edges to every origin and destination, so all commodities share one OD
/// pair.
pub fn embed_common_od(crg: &ConstrainedRoutingGame) -> Result<ConstrainedRoutingGame> {
    crg.validate()?;
    let mut taken: HashSet<&str> = crg.vertices.iter().map(String::as_str).collect();
    let source = fresh_name("O*", &taken);
    taken.insert(&source);
    let sink = fresh_name("D*", &taken);
    let mut edge_ids: HashSet<String> = crg.edges.iter().map(|e| e.id.clone()).collect();
    let mut edges = crg.edges.clone();
    let mut connectors: BTreeMap<(bool, String), String> = BTreeMap::new();
    let mut connector = |outgoing: bool, v: &str, edges: &mut Vec<Edge>| -> String {
        connectors
            .entry((outgoing, v.to_string()))
            .or_insert_with(|| {
                let base = if outgoing { format!("src_{v}") } else { format!("snk_{v}") };
                let mut id = base;
                while edge_ids.contains(&id) {
                    id.push('\'');
                }
                edge_ids.insert(id.clone());
                let (tail, head) = if outgoing {
                    (source.clone(), v.to_string())
                } else {
                    (v.to_string(), sink.clone())
                };
                edges.push(Edge {
                    id: id.clone(),
                    tail,
                    head,
                    cost: CostFunction::constant(0.0),
                });
                id
            })
            .clone()
    };
    let commodities = crg
        .commodities
        .iter()
        .map(|c| {
            let first = connector(true, &c.origin, &mut edges);
            let last = connector(false, &c.destination, &mut edges);
            CrgCommodity {
                id: c.id.clone(),
                origin: source.clone(),
                destination: sink.clone(),
                paths: c
                    .paths
                    .iter()
                    .map(|p| std::iter::once(first.clone()).chain(p.iter().cloned()).chain([last.clone()]).collect())
                    .collect(),
            }
        })
        .collect();
    let mut vertices = crg.vertices.clone();
    vertices.push(source.clone());
    vertices.push(sink.clone());
    let out = ConstrainedRoutingGame {
        vertices,
        edges,
        commodities,
    };
    out.validate()?;
    Ok(out)
}

/// Two-terminal series-parallel test by reduction: collapse parallel edges
/// and series vertices until nothing changes.
pub fn is_series_parallel(edges: &[(String, String)], source: &str, sink: &str) -> bool {
    let mut es: Vec<(String, String)> = edges.to_vec();
    loop {
        let before = es.len();
        // parallel duplicates
        let mut seen = HashSet::new();
        es.retain(|e| seen.insert(e.clone()));
        // series vertices
        let mut changed = false;
        let mut indeg: HashMap<&str, Vec<usize>> = HashMap::new();
        let mut outdeg: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, (t, h)) in es.iter().enumerate() {
            outdeg.entry(t).or_default().push(i);
            indeg.entry(h).or_default().push(i);
        }
        let candidate = indeg.iter().find_map(|(&v, ins)| {
            let outs = outdeg.get(v)?;
            (v != source && v != sink && ins.len() == 1 && outs.len() == 1 && ins[0] != outs[0])
                .then(|| (ins[0], outs[0]))
        });
        if let Some((a, b)) = candidate {
            let merged = (es[a].0.clone(), es[b].1.clone());
            let (hi, lo) = (a.max(b), a.min(b));
            es.remove(hi);
            es.remove(lo);
            if merged.0 != merged.1 {
                es.push(merged);
            }
            changed = true;
        }
        if !changed && es.len() == before {
            break;
        }
    }
    es.len() == 1 && es[0].0 == source && es[0].1 == sink
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralConditions {
    pub series_parallel: bool,
    pub same_vertex_sequence: bool,
    pub exchange_closed: bool,
    /// Human-readable reasons for each failed condition.
    pub notes: Vec<String>,
}

impl StructuralConditions {
    pub fn all_hold(&self) -> bool {
        self.series_parallel && self.same_vertex_sequence && self.exchange_closed
    }
}

/// Checks the three structural conditions on a common-OD routing game:
/// the network is series-parallel; every commodity's paths visit the same
/// vertices in the same order; and swapping edges joining the same pair of
/// vertices between two admissible paths yields an admissible path.
pub fn check_structural_conditions(crg: &ConstrainedRoutingGame) -> Result<StructuralConditions> {
    crg.validate()?;
    if !crg.is_common_od() {
        return Err(Error::Structural("routing game is not common-OD".into()));
    }
    let mut notes = Vec::new();
    let (source, sink) = (&crg.commodities[0].origin, &crg.commodities[0].destination);
    let pairs: Vec<(String, String)> = crg.edges.iter().map(|e| (e.tail.clone(), e.head.clone())).collect();
    let series_parallel = is_series_parallel(&pairs, source, sink);
    if !series_parallel {
        notes.push("network does not reduce to a single edge".into());
    }

    let edges = crg.edge_map();
    let mut same_vertex_sequence = true;
    let mut exchange_closed = true;
    for c in &crg.commodities {
        let seqs: Vec<Vec<String>> = c.paths.iter().map(|p| crg.vertex_sequence(&c.origin, p)).collect();
        if let Some(k) = seqs.iter().position(|s| s != &seqs[0]) {
            same_vertex_sequence = false;
            notes.push(format!(
                "commodity {}: paths 0 and {k} visit {} vs {}",
                c.id,
                seqs[0].join("-"),
                seqs[k].join("-")
            ));
        }

        let admissible: HashSet<&[String]> = c.paths.iter().map(Vec::as_slice).collect();
        'pairs: for p in &c.paths {
            for q in &c.paths {
                for (i, e1) in p.iter().enumerate() {
                    let a = &crg.edges[edges[e1.as_str()]];
                    for e2 in q {
                        let b = &crg.edges[edges[e2.as_str()]];
                        if e1 == e2 || a.tail != b.tail || a.head != b.head {
                            continue;
                        }
                        let mut swapped = p.clone();
                        swapped[i] = e2.clone();
                        if !admissible.contains(swapped.as_slice()) {
                            exchange_closed = false;
                            notes.push(format!(
                                "commodity {}: swapping {e1} for {e2} in [{}] leaves the path set",
                                c.id,
                                p.join(",")
                            ));
                            break 'pairs;
                        }
                    }
                }
            }
        }
    }
    Ok(StructuralConditions {
        series_parallel,
        same_vertex_sequence,
        exchange_closed,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceCheck {
    pub pass: bool,
    pub max_cost_error: f64,
    pub max_lambda_error: f64,
    pub failures: Vec<String>,
}

/// Checks that `witness` maps `game` onto `crg` cost-preservingly: random
/// flows keep every strategy cost (within 1e-9 relative) and equilibrium
/// costs agree (within 1e-5) at each demand.
pub fn check_equivalence(
    game: &CongestionGame,
    crg: &ConstrainedRoutingGame,
    witness: &EquivalenceWitness,
    demands: &[DemandVector],
    seed: u64,
) -> Result<EquivalenceCheck> {
    let target = crg.to_game()?;
    witness.check_total(game, &target)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = SolverConfig::default();
    let mut failures = Vec::new();
    let (mut max_cost_error, mut max_lambda_error) = (0.0f64, 0.0f64);
    for mu in demands {
        mu.check_for(game)?;
        let mu_t = witness.map_demand(mu)?;
        for _ in 0..3 {
            let f = random_feasible_flow(game, mu, &mut rng);
            let ft = witness.map_flow(&f, &target);
            let (x, xt) = (load_from_flow(game, &f)?, load_from_flow(&target, &ft)?);
            let (rc, rct) = (game.resource_costs(&x), target.resource_costs(&xt));
            for (h, c) in game.commodities().iter().enumerate() {
                let ct = &target.commodities()[witness.commodity[h]];
                for (k, s) in c.strategies.iter().enumerate() {
                    let st = &ct.strategies[witness.strategy[h][k]];
                    let a: f64 = s.resources().iter().map(|&r| rc[r]).sum();
                    let b: f64 = st.resources().iter().map(|&r| rct[r]).sum();
                    let err = (a - b).abs() / (1.0 + a.abs());
                    max_cost_error = max_cost_error.max(err);
                    if err > 1e-9 {
                        failures.push(format!(
                            "commodity {}: strategy [{}] ↔ [{}] cost {a} vs {b}",
                            c.id,
                            game.strategy_ids(s).join(","),
                            target.strategy_ids(st).join(",")
                        ));
                    }
                }
            }
        }
        let a = solve_beckmann(game, mu, &config)?;
        let b = solve_beckmann(&target, &mu_t, &config)?;
        for (h, c) in game.commodities().iter().enumerate() {
            let err = (a.lambda[h] - b.lambda[witness.commodity[h]]).abs();
            max_lambda_error = max_lambda_error.max(err);
            if err > 1e-5 {
                failures.push(format!(
                    "commodity {} at {:?}: equilibrium cost {} vs {}",
                    c.id,
                    mu.as_slice(),
                    a.lambda[h],
                    b.lambda[witness.commodity[h]]
                ));
            }
        }
    }
    failures.dedup();
    Ok(EquivalenceCheck {
        pass: failures.is_empty(),
        max_cost_error,
        max_lambda_error,
        failures,
    })
}
