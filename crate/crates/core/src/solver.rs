//! Wardrop equilibria by Beckmann-potential minimization.
//!
//! The potential is minimized over strategy flows with a pairwise Frank–Wolfe
//! scheme: for each commodity the linear-minimization oracle picks the
//! cheapest strategy at the current loads, flow is shifted to it from the most
//! expensive used strategy, and the step length comes from bisection on the
//! (monotone) directional derivative. The Frank–Wolfe duality gap
//! `Σ_h Σ_s f_s c_s − Σ_h μ^h min_s c_s` is the stopping certificate.
//!
//! The monotone equilibrium selection runs the same solver on the Tikhonov
//! ladder `c_r(x) + 2εx` for a geometric sequence of `ε`, warm-starting each
//! rung from the previous flow.

use indexmap::IndexMap;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim_check, Error, Result};
use crate::game::{load_from_flow, CongestionGame, DemandVector, FlowProfile, LoadProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Relative Frank–Wolfe gap at which a solve stops.
    pub gap_tol: f64,
    /// Sweeps over all commodities before giving up.
    pub max_iterations: usize,
    /// First regularization weight of the selection ladder.
    pub eps0: f64,
    /// Ratio between successive ladder weights.
    pub decay: f64,
    /// Ladder stops once successive rungs move no load by more than this.
    pub load_tol: f64,
    /// Relative slack for calling a strategy active.
    pub tol_active: f64,
    pub max_rungs: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gap_tol: 1e-8,
            max_iterations: 200_000,
            eps0: 1e-2,
            decay: 0.25,
            load_tol: 1e-7,
            tol_active: 1e-6,
            max_rungs: 12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gap_tol", self.gap_tol),
            ("eps0", self.eps0),
            ("load_tol", self.load_tol),
            ("tol_active", self.tol_active),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be > 0")));
            }
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::InvalidArgument("decay must lie in (0, 1)".into()));
        }
        if self.max_iterations == 0 || self.max_rungs < 2 {
            return Err(Error::InvalidArgument(
                "max_iterations must be >= 1 and max_rungs >= 2".into(),
            ));
        }
        Ok(())
    }

    /// Tight settings for finite-difference work on the potential value.
    pub fn strict() -> Self {
        SolverConfig {
            gap_tol: 1e-13,
            ..Self::default()
        }
    }
}

/// How an equilibrium was selected.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Selection {
    /// Plain potential minimizer.
    Plain,
    /// Limit of the regularization ladder (minimal-norm equilibrium).
    Mes {
        rungs: usize,
        epsilon: f64,
        /// False when the ladder hit `max_rungs` before stabilizing.
        stabilized: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub loads: LoadProfile,
    pub flow: FlowProfile,
    /// Equilibrium resource costs `τ_r = c_r(x_r)`.
    pub tau: Vec<f64>,
    /// Commodity equilibrium costs `λ^h = min_s Σ_{r∈s} τ_r`.
    pub lambda: Vec<f64>,
    /// Per commodity, the resources of its active strategies (sorted indices).
    pub active_regime: Vec<Vec<usize>>,
    pub beckmann_value: f64,
    pub gap: f64,
    pub iterations: usize,
    pub selection: Selection,
}

#[derive(Serialize)]
struct StrategyFlowJson {
    strategy: Vec<String>,
    flow: f64,
}

#[derive(Serialize)]
struct ReportJson {
    loads: IndexMap<String, f64>,
    flows: IndexMap<String, Vec<StrategyFlowJson>>,
    tau: IndexMap<String, f64>,
    lambda: IndexMap<String, f64>,
    active_regime: IndexMap<String, Vec<String>>,
    beckmann_value: f64,
    gap: f64,
    iterations: usize,
}

impl EquilibriumReport {
    /// JSON object keyed by resource and commodity ids, in game order.
    pub fn to_json_value(&self, game: &CongestionGame) -> serde_json::Value {
        let rid = |r: usize| game.resources()[r].id.clone();
        let doc = ReportJson {
            loads: (0..game.num_resources()).map(|r| (rid(r), self.loads[r])).collect(),
            flows: game
                .commodities()
                .iter()
                .zip(self.flow.as_nested())
                .map(|(c, f)| {
                    let per = c
                        .strategies
                        .iter()
                        .zip(f)
                        .map(|(s, &v)| StrategyFlowJson {
                            strategy: game.strategy_ids(s),
                            flow: v,
                        })
                        .collect();
                    (c.id.clone(), per)
                })
                .collect(),
            tau: (0..game.num_resources()).map(|r| (rid(r), self.tau[r])).collect(),
            lambda: game
                .commodities()
                .iter()
                .zip(&self.lambda)
                .map(|(c, &l)| (c.id.clone(), l))
                .collect(),
            active_regime: game
                .commodities()
                .iter()
                .zip(&self.active_regime)
                .map(|(c, rho)| (c.id.clone(), rho.iter().map(|&r| rid(r)).collect()))
                .collect(),
            beckmann_value: self.beckmann_value,
            gap: self.gap,
            iterations: self.iterations,
        };
        serde_json::to_value(doc).expect("report serializes")
    }

    pub fn lambda_of(&self, game: &CongestionGame, commodity: &str) -> Option<f64> {
        game.commodity_index(commodity).map(|h| self.lambda[h])
    }
}

/// `τ_r = c_r(x_r)` and `λ^h = min_s Σ_{r∈s} τ_r`.
pub fn equilibrium_costs(game: &CongestionGame, loads: &LoadProfile) -> (Vec<f64>, Vec<f64>) {
    let tau = game.resource_costs(loads);
    let lambda = game
        .commodities()
        .iter()
        .map(|c| {
            c.strategies
                .iter()
                .map(|s| s.resources().iter().map(|&r| tau[r]).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    (tau, lambda)
}

/// Resources of strategies whose cost is within `tol·(1 + λ^h)` of `λ^h`.
pub fn active_regime(
    game: &CongestionGame,
    tau: &[f64],
    lambda: &[f64],
    tol: f64,
) -> Vec<Vec<usize>> {
    game.commodities()
        .iter()
        .zip(lambda)
        .map(|(c, &l)| {
            let mut rho: Vec<usize> = c
                .strategies
                .iter()
                .filter(|s| s.resources().iter().map(|&r| tau[r]).sum::<f64>() <= l + tol * (1.0 + l.abs()))
                .flat_map(|s| s.resources().iter().copied())
                .collect();
            rho.sort_unstable();
            rho.dedup();
            rho
        })
        .collect()
}

pub fn beckmann_potential(game: &CongestionGame, loads: &LoadProfile) -> f64 {
    game.resources()
        .iter()
        .zip(loads.as_slice())
        .map(|(r, &x)| r.cost.integral(x))
        .sum()
}

struct RawSolution {
    flow: FlowProfile,
    gap: f64,
    iterations: usize,
    converged: bool,
}

const BISECTION_STEPS: usize = 60;
/// Sweep budget of one selection rung.
const RUNG_SWEEPS: usize = 20_000;

/// Pairwise Frank–Wolfe on `Σ_r C_r(x_r) + reg·‖x‖²`.
struct Engine<'a> {
    game: &'a CongestionGame,
    demand: &'a [f64],
    reg: f64,
    flow: Vec<Vec<f64>>,
    loads: Vec<f64>,
}

impl<'a> Engine<'a> {
    fn new(game: &'a CongestionGame, demand: &'a [f64], reg: f64, flow: Vec<Vec<f64>>) -> Self {
        let mut e = Engine {
            game,
            demand,
            reg,
            flow,
            loads: vec![0.0; game.num_resources()],
        };
        e.refresh_loads();
        e
    }

    #[inline]
    fn cost(&self, r: usize, x: f64) -> f64 {
        let x = x.max(0.0);
        self.game.resources()[r].cost.eval(x) + 2.0 * self.reg * x
    }

    fn refresh_loads(&mut self) {
        self.loads.iter_mut().for_each(|x| *x = 0.0);
        for (c, f) in self.game.commodities().iter().zip(&self.flow) {
            for (s, &v) in c.strategies.iter().zip(f) {
                for &r in s.resources() {
                    self.loads[r] += v;
                }
            }
        }
    }

    fn strategy_costs(&self, h: usize, rc: &[f64]) -> Vec<f64> {
        self.game.commodities()[h]
            .strategies
            .iter()
            .map(|s| s.resources().iter().map(|&r| rc[r]).sum())
            .collect()
    }

    fn resource_costs(&self) -> Vec<f64> {
        (0..self.loads.len()).map(|r| self.cost(r, self.loads[r])).collect()
    }

    /// Absolute and relative Frank–Wolfe gap at the current flow.
    fn gap(&self) -> (f64, f64) {
        let rc = self.resource_costs();
        let mut gap = 0.0;
        let mut scale = 0.0;
        for h in 0..self.flow.len() {
            let cs = self.strategy_costs(h, &rc);
            let best = cs.iter().copied().fold(f64::INFINITY, f64::min);
            let used: f64 = cs.iter().zip(&self.flow[h]).map(|(c, f)| c * f).sum();
            gap += used - self.demand[h] * best;
            scale += self.demand[h] * best;
        }
        let gap = gap.max(0.0);
        let rel = if gap == 0.0 { 0.0 } else { gap / scale.max(f64::MIN_POSITIVE) };
        (gap, rel)
    }

    /// One round of pairwise steps for commodity `h`; true if flow moved.
    fn step_commodity(&mut self, h: usize) -> bool {
        let n_strat = self.flow[h].len();
        if n_strat < 2 || self.demand[h] <= 0.0 {
            return false;
        }
        let mut moved = false;
        for _ in 0..n_strat {
            let rc = self.resource_costs();
            let cs = self.strategy_costs(h, &rc);
            let mut best = 0;
            for k in 1..n_strat {
                if cs[k] < cs[best] {
                    best = k;
                }
            }
            let mut worst = None;
            for k in 0..n_strat {
                if self.flow[h][k] > 0.0 && worst.is_none_or(|w: usize| cs[k] > cs[w]) {
                    worst = Some(k);
                }
            }
            let Some(worst) = worst else { break };
            if worst == best || cs[worst] - cs[best] <= 1e-15 * (1.0 + cs[worst].abs()) {
                break;
            }

            let commodity = &self.game.commodities()[h];
            let (sb, sw) = (&commodity.strategies[best], &commodity.strategies[worst]);
            let plus: Vec<usize> = sb.resources().iter().copied().filter(|&r| !sw.contains(r)).collect();
            let minus: Vec<usize> = sw.resources().iter().copied().filter(|&r| !sb.contains(r)).collect();

            let fw = self.flow[h][worst];
            let deriv = |t: f64| -> f64 {
                plus.iter().map(|&r| self.cost(r, self.loads[r] + t)).sum::<f64>()
                    - minus.iter().map(|&r| self.cost(r, self.loads[r] - t)).sum::<f64>()
            };
            let t = if deriv(fw) <= 0.0 {
                fw
            } else {
                let (mut lo, mut hi) = (0.0, fw);
                for _ in 0..BISECTION_STEPS {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if deriv(mid) <= 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            };
            if t <= 0.0 {
                break;
            }
            if t >= fw {
                self.flow[h][worst] = 0.0;
            } else {
                self.flow[h][worst] -= t;
            }
            self.flow[h][best] += t;
            for &r in &plus {
                self.loads[r] += t;
            }
            for &r in &minus {
                self.loads[r] -= t;
            }
            moved = true;
        }
        moved
    }

    /// Sweeps until the relative gap reaches `target` or no step moves flow;
    /// the result counts as converged if the gap is within `accept`.
    fn run(mut self, target: f64, accept: f64, max_iterations: usize) -> RawSolution {
        let (_, mut rel) = self.gap();
        let mut iterations = 0;
        while rel > target && iterations < max_iterations {
            iterations += 1;
            let mut moved = false;
            for h in 0..self.flow.len() {
                moved |= self.step_commodity(h);
            }
            self.refresh_loads();
            rel = self.gap().1;
            if !moved {
                break;
            }
        }
        RawSolution {
            flow: FlowProfile::new(self.flow),
            gap: rel,
            iterations,
            converged: rel <= accept,
        }
    }
}

/// All-or-nothing start: commodities in order, each on its cheapest strategy
/// given the loads placed so far (lowest index wins ties).
fn greedy_start(game: &CongestionGame, demand: &[f64]) -> Vec<Vec<f64>> {
    let mut loads = vec![0.0; game.num_resources()];
    let mut flow = Vec::with_capacity(game.num_commodities());
    for (c, &mu) in game.commodities().iter().zip(demand) {
        let mut best = 0;
        let mut best_cost = f64::INFINITY;
        for (k, s) in c.strategies.iter().enumerate() {
            let cost: f64 = s
                .resources()
                .iter()
                .map(|&r| game.resources()[r].cost.eval(loads[r] + mu))
                .sum();
            if cost < best_cost {
                best_cost = cost;
                best = k;
            }
        }
        let mut f = vec![0.0; c.strategies.len()];
        f[best] = mu;
        for &r in c.strategies[best].resources() {
            loads[r] += mu;
        }
        flow.push(f);
    }
    flow
}

/// A random feasible flow: each demand split by uniform weights.
pub fn random_feasible_flow<R: Rng>(game: &CongestionGame, demand: &DemandVector, rng: &mut R) -> FlowProfile {
    FlowProfile::new(
        game.commodities()
            .iter()
            .zip(demand.as_slice())
            .map(|(c, &mu)| {
                let w: Vec<f64> = (0..c.strategies.len()).map(|_| rng.gen::<f64>() + 1e-3).collect();
                let total: f64 = w.iter().sum();
                w.iter().map(|v| mu * v / total).collect()
            })
            .collect(),
    )
}

fn finish(
    game: &CongestionGame,
    raw: RawSolution,
    config: &SolverConfig,
    selection: Selection,
) -> EquilibriumReport {
    let loads = load_from_flow(game, &raw.flow).expect("engine keeps flow shape");
    let (tau, lambda) = equilibrium_costs(game, &loads);
    let active_regime = active_regime(game, &tau, &lambda, config.tol_active);
    EquilibriumReport {
        beckmann_value: beckmann_potential(game, &loads),
        loads,
        flow: raw.flow,
        tau,
        lambda,
        active_regime,
        gap: raw.gap,
        iterations: raw.iterations,
        selection,
    }
}

fn check_inputs(game: &CongestionGame, demand: &DemandVector, config: &SolverConfig) -> Result<()> {
    config.validate()?;
    demand.check_for(game)
}

/// Equilibrium by potential minimization from the greedy all-or-nothing start.
pub fn solve_beckmann(
    game: &CongestionGame,
    demand: &DemandVector,
    config: &SolverConfig,
) -> Result<EquilibriumReport> {
    check_inputs(game, demand, config)?;
    let start = greedy_start(game, demand.as_slice());
    solve_from_flow(game, demand, config, start)
}

/// Like [`solve_beckmann`], starting from a caller-supplied feasible flow.
pub fn solve_beckmann_from(
    game: &CongestionGame,
    demand: &DemandVector,
    config: &SolverConfig,
    start: &FlowProfile,
) -> Result<EquilibriumReport> {
    check_inputs(game, demand, config)?;
    start.check_shape(game)?;
    if !start.is_feasible(game, demand) {
        return Err(Error::InvalidArgument("starting flow is not feasible".into()));
    }
    solve_from_flow(game, demand, config, start.as_nested().to_vec())
}

fn solve_from_flow(
    game: &CongestionGame,
    demand: &DemandVector,
    config: &SolverConfig,
    start: Vec<Vec<f64>>,
) -> Result<EquilibriumReport> {
    let raw = Engine::new(game, demand.as_slice(), 0.0, start).run(config.gap_tol, config.gap_tol, config.max_iterations);
    let converged = raw.converged;
    let report = finish(game, raw, config, Selection::Plain);
    if converged {
        Ok(report)
    } else {
        Err(Error::Convergence {
            gap: report.gap,
            iterations: report.iterations,
            best: Box::new(report),
        })
    }
}

/// Monotone (minimal-norm) equilibrium selection through the Tikhonov ladder.
///
/// A ladder that does not stabilize within `max_rungs` still returns its last
/// rung, with `Selection::Mes { stabilized: false, .. }`.
pub fn solve_mes(
    game: &CongestionGame,
    demand: &DemandVector,
    config: &SolverConfig,
) -> Result<EquilibriumReport> {
    check_inputs(game, demand, config)?;
    // Rungs run until no step moves flow: near degenerate equilibria the gap
    // is quadratic in the load error, so a gap target alone leaves loads
    // far less accurate than load_tol.
    let rung_sweeps = config.max_iterations.min(RUNG_SWEEPS);
    let mut flow = greedy_start(game, demand.as_slice());
    let mut eps = config.eps0;
    let mut prev: Option<LoadProfile> = None;
    let mut total_iterations = 0;
    for rung in 1..=config.max_rungs {
        let raw = Engine::new(game, demand.as_slice(), eps, flow).run(0.0, config.gap_tol, rung_sweeps);
        total_iterations += raw.iterations;
        if !raw.converged {
            let report = finish(
                game,
                raw,
                config,
                Selection::Mes {
                    rungs: rung,
                    epsilon: eps,
                    stabilized: false,
                },
            );
            return Err(Error::Convergence {
                gap: report.gap,
                iterations: total_iterations,
                best: Box::new(report),
            });
        }
        let loads = load_from_flow(game, &raw.flow)?;
        let settled = prev
            .as_ref()
            .is_some_and(|p| p.max_abs_diff(&loads) < config.load_tol);
        if settled || rung == config.max_rungs {
            let mut report = finish(
                game,
                raw,
                config,
                Selection::Mes {
                    rungs: rung,
                    epsilon: eps,
                    stabilized: settled,
                },
            );
            report.iterations = total_iterations;
            // the certificate refers to the unregularized game
            report.gap = Engine::new(game, demand.as_slice(), 0.0, report.flow.as_nested().to_vec()).gap().1;
            return Ok(report);
        }
        prev = Some(loads);
        flow = raw.flow.as_nested().to_vec();
        eps *= config.decay;
    }
    unreachable!("loop returns on the last rung")
}

/// Dual objective `Σ_r C*_r(τ_r) − Σ_h μ^h min_s Σ_{r∈s} τ_r`.
pub fn dual_value(game: &CongestionGame, demand: &DemandVector, tau: &[f64]) -> Result<f64> {
    demand.check_for(game)?;
    dim_check("resource prices", game.num_resources(), tau.len())?;
    let conj: f64 = game
        .resources()
        .iter()
        .zip(tau)
        .map(|(r, &t)| r.cost.conjugate(t))
        .sum();
    let theta: f64 = game
        .commodities()
        .iter()
        .zip(demand.as_slice())
        .map(|(c, &mu)| {
            if mu == 0.0 {
                return 0.0;
            }
            let min = c
                .strategies
                .iter()
                .map(|s| s.resources().iter().map(|&r| tau[r]).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            mu * min
        })
        .sum();
    Ok(conj - theta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WardropViolation {
    pub commodity: usize,
    pub strategy: usize,
    pub flow: f64,
    pub cost: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WardropCheck {
    pub pass: bool,
    /// Largest scaled residual `|c_s − λ^h| / (1 + λ^h)` over the checked conditions.
    pub max_residual: f64,
    pub feasibility_residual: f64,
    pub violations: Vec<WardropViolation>,
}

/// Checks the equilibrium conditions of `report.flow` against `report.lambda`.
///
/// Strategies carrying more than `tol·(1 + μ^h)` flow must cost `λ^h` within
/// `tol·(1 + λ^h)`; no strategy may cost less than `λ^h − tol·(1 + λ^h)`.
pub fn verify_wardrop(
    game: &CongestionGame,
    demand: &DemandVector,
    report: &EquilibriumReport,
    tol: f64,
) -> Result<WardropCheck> {
    demand.check_for(game)?;
    report.flow.check_shape(game)?;
    dim_check("report lambda", game.num_commodities(), report.lambda.len())?;
    let loads = load_from_flow(game, &report.flow)?;
    let rc = game.resource_costs(&loads);
    let feasibility_residual = report.flow.feasibility_residual(demand);
    let mut max_residual: f64 = 0.0;
    let mut violations = Vec::new();
    for (h, c) in game.commodities().iter().enumerate() {
        let lam = report.lambda[h];
        let scale = 1.0 + lam.abs();
        let tol_flow = tol * (1.0 + demand[h]);
        for (k, s) in c.strategies.iter().enumerate() {
            let cost: f64 = s.resources().iter().map(|&r| rc[r]).sum();
            let f = report.flow.commodity(h)[k];
            let below = (lam - cost) / scale;
            let res = if f > tol_flow { (cost - lam).abs() / scale } else { below.max(0.0) };
            max_residual = max_residual.max(res);
            if res > tol {
                violations.push(WardropViolation {
                    commodity: h,
                    strategy: k,
                    flow: f,
                    cost,
                    lambda: lam,
                });
            }
        }
    }
    Ok(WardropCheck {
        pass: violations.is_empty() && feasibility_residual <= tol.max(crate::game::FEASIBILITY_TOL),
        max_residual,
        feasibility_residual,
        violations,
    })
}

/// Minimal potential value `V(μ)`.
pub fn potential_value(game: &CongestionGame, demand: &DemandVector, config: &SolverConfig) -> Result<f64> {
    Ok(solve_beckmann(game, demand, config)?.beckmann_value)
}

/// Central differences of `V` against `λ(μ)`: `|ΔV/2step − λ^h|` per commodity.
pub fn beckmann_gradient_check(game: &CongestionGame, demand: &DemandVector, step: f64) -> Result<Vec<f64>> {
    demand.check_for(game)?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument("step must be > 0".into()));
    }
    if let Some(h) = (0..demand.len()).find(|&h| demand[h] < step) {
        return Err(Error::InvalidArgument(format!(
            "demand of commodity {h} must exceed the step"
        )));
    }
    let config = SolverConfig::strict();
    let center = solve_beckmann(game, demand, &config)?;
    (0..demand.len())
        .map(|h| {
            let shifted = |sign: f64| -> Result<f64> {
                let mut mu = demand.as_slice().to_vec();
                mu[h] += sign * step;
                potential_value(game, &DemandVector::new(mu)?, &config)
            };
            let fd = (shifted(1.0)? - shifted(-1.0)?) / (2.0 * step);
            Ok((fd - center.lambda[h]).abs())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostFunction;
    use crate::fixtures;
    use crate::game::{CommodityDef, GameDef, Resource};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn demand(v: &[f64]) -> DemandVector {
        DemandVector::new(v.to_vec()).unwrap()
    }

    fn single_resource_game() -> CongestionGame {
        CongestionGame::from_def(&GameDef {
            resources: vec![Resource::new("r", CostFunction::affine(1.0, 0.0))],
            commodities: vec![CommodityDef {
                id: "h".into(),
                strategies: vec![vec!["r".into()]],
            }],
        })
        .unwrap()
    }

    #[test]
    fn fisk_paradox() {
        let g = fixtures::fisk();
        let cfg = SolverConfig::default();
        let r = solve_beckmann(&g, &demand(&[60.0, 30.0, 6.0]), &cfg).unwrap();
        assert!((r.lambda_of(&g, "bc").unwrap() - 24.0).abs() < 1e-4);
        assert!(r.gap <= cfg.gap_tol);
        let r2 = solve_beckmann(&g, &demand(&[120.0, 60.0, 12.0]), &cfg).unwrap();
        assert!((r2.lambda_of(&g, "bc").unwrap() - 18.0).abs() < 1e-4);
    }

    #[test]
    fn wheatstone_middle_range() {
        let g = fixtures::braess();
        let r = solve_beckmann(&g, &demand(&[1.5]), &SolverConfig::default()).unwrap();
        for (f, want) in r.flow.commodity(0).iter().zip([0.5, 0.5, 0.5]) {
            assert!((f - want).abs() < 1e-6, "{f} vs {want}");
        }
    }

    #[test]
    fn zero_demand_is_zero_equilibrium() {
        let g = fixtures::fisk();
        let r = solve_beckmann(&g, &DemandVector::zeros(3), &SolverConfig::default()).unwrap();
        assert!(r.loads.as_slice().iter().all(|&x| x == 0.0));
        assert_eq!(r.lambda, vec![0.0, 0.0, 0.0]);
        let g = fixtures::ex41();
        let r = solve_mes(&g, &DemandVector::zeros(2), &SolverConfig::default()).unwrap();
        assert_eq!(r.lambda, vec![0.0, 0.0]);
    }

    #[test]
    fn exhausted_budget_is_a_convergence_error() {
        let g = fixtures::ex45();
        let cfg = SolverConfig {
            max_iterations: 1,
            gap_tol: 1e-15,
            ..SolverConfig::default()
        };
        let mu = demand(&[2.0, 1.0]);
        match solve_beckmann(&g, &mu, &cfg) {
            Err(Error::Convergence { best, iterations, .. }) => {
                assert_eq!(iterations, 1);
                assert!(best.flow.is_feasible(&g, &mu));
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn mes_on_flat_costs_picks_minimal_norm() {
        let g = fixtures::flat_costs();
        let cfg = SolverConfig::default();
        let a = solve_mes(&g, &demand(&[2.0, 0.0]), &cfg).unwrap();
        for (x, want) in a.loads.as_slice().iter().zip([1.0, 1.0, 0.0]) {
            assert!((x - want).abs() < 1e-6, "{:?}", a.loads);
        }
        let b = solve_mes(&g, &demand(&[0.0, 2.0]), &cfg).unwrap();
        for (x, want) in b.loads.as_slice().iter().zip([0.0, 1.0, 1.0]) {
            assert!((x - want).abs() < 1e-6, "{:?}", b.loads);
        }
        assert!(matches!(a.selection, Selection::Mes { stabilized: true, .. }));
    }

    #[test]
    fn mes_equals_plain_for_strict_costs() {
        let g = fixtures::ex41();
        let cfg = SolverConfig::default();
        for mu in [[1.0, 1.0], [3.0, 0.5], [0.2, 2.5]] {
            let plain = solve_beckmann(&g, &demand(&mu), &cfg).unwrap();
            let mes = solve_mes(&g, &demand(&mu), &cfg).unwrap();
            assert!(plain.loads.max_abs_diff(&mes.loads) <= 10.0 * cfg.load_tol);
        }
    }

    #[test]
    fn strong_duality_on_fisk() {
        let g = fixtures::fisk();
        let mu = demand(&[60.0, 30.0, 6.0]);
        let r = solve_beckmann(&g, &mu, &SolverConfig::strict()).unwrap();
        let d = dual_value(&g, &mu, &r.tau).unwrap();
        // min dual = −min primal
        assert!((d + r.beckmann_value).abs() < 1e-3, "{d} vs {}", r.beckmann_value);
        for r_idx in 0..3 {
            let mut t = r.tau.clone();
            t[r_idx] += 0.1;
            assert!(dual_value(&g, &mu, &t).unwrap() > d);
        }
    }

    #[test]
    fn conjugate_sum_vanishes_at_zero_prices() {
        let g = fixtures::ex41();
        let tau: Vec<f64> = g.resources().iter().map(|r| r.cost.at_zero()).collect();
        assert_eq!(dual_value(&g, &DemandVector::zeros(2), &tau).unwrap(), 0.0);
    }

    #[test]
    fn wardrop_check_detects_shifted_flow() {
        let g = fixtures::fisk();
        let mu = demand(&[60.0, 30.0, 6.0]);
        let r = solve_beckmann(&g, &mu, &SolverConfig::default()).unwrap();
        let ok = verify_wardrop(&g, &mu, &r, 1e-6).unwrap();
        assert!(ok.pass, "{ok:?}");
        assert!(ok.max_residual <= 1e-6);

        let mut bad = r.clone();
        let f = bad.flow.commodity_mut(1);
        f[0] += 5.0;
        f[1] -= 5.0;
        let check = verify_wardrop(&g, &mu, &bad, 1e-6).unwrap();
        assert!(!check.pass);
        // the shifted ac flow also raises e1 for ab, so look for ac's own entry
        let v = check.violations.iter().find(|v| v.commodity == 1).unwrap();
        assert_eq!(v.strategy, 0);
        assert!((v.cost - 112.0).abs() < 1e-3);
        let loads = load_from_flow(&g, &bad.flow).unwrap();
        let direct = crate::game::strategy_cost_by_ids(&g, &loads, &["e3"]).unwrap();
        assert!((direct - 97.0).abs() < 1e-3);
    }

    #[test]
    fn wardrop_zero_demand_vacuous() {
        let g = fixtures::ex41();
        let mu = DemandVector::zeros(2);
        let r = solve_beckmann(&g, &mu, &SolverConfig::default()).unwrap();
        assert!(verify_wardrop(&g, &mu, &r, 1e-9).unwrap().pass);
    }

    #[test]
    fn gradient_matches_lambda() {
        let g = single_resource_game();
        let res = beckmann_gradient_check(&g, &demand(&[5.0]), 1e-4).unwrap();
        assert!(res[0] <= 1e-8, "{res:?}");

        let g = fixtures::fisk();
        let res = beckmann_gradient_check(&g, &demand(&[60.0, 30.0, 6.0]), 1e-3).unwrap();
        assert!(res.iter().all(|&r| r <= 1e-2), "{res:?}");

        let g = fixtures::ex41();
        let r = solve_beckmann(&g, &demand(&[2.0, 2.0]), &SolverConfig::default()).unwrap();
        for l in &r.lambda {
            assert!((l - 7.0 / 3.0).abs() < 1e-6);
        }
        let res = beckmann_gradient_check(&g, &demand(&[2.0, 2.0]), 1e-3).unwrap();
        assert!(res.iter().all(|&r| r <= 1e-2), "{res:?}");
    }

    #[test]
    fn random_starts_agree_on_tau() {
        let g = fixtures::ex45();
        let mu = demand(&[1.3, 0.7]);
        let cfg = SolverConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = solve_beckmann_from(&g, &mu, &cfg, &random_feasible_flow(&g, &mu, &mut rng)).unwrap();
        let b = solve_beckmann_from(&g, &mu, &cfg, &random_feasible_flow(&g, &mu, &mut rng)).unwrap();
        for (x, y) in a.tau.iter().zip(&b.tau) {
            assert!((x - y).abs() <= 1e-5 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn complementarity_on_fisk() {
        let g = fixtures::fisk();
        let mu = demand(&[60.0, 30.0, 6.0]);
        let r = solve_beckmann(&g, &mu, &SolverConfig::default()).unwrap();
        let lhs: f64 = mu.as_slice().iter().zip(&r.lambda).map(|(m, l)| m * l).sum();
        let rhs: f64 = r.tau.iter().zip(r.loads.as_slice()).map(|(t, x)| t * x).sum();
        assert!((lhs - rhs).abs() <= 1e-6 * lhs);
    }

    #[test]
    fn report_json_keys() {
        let g = fixtures::fisk();
        let r = solve_beckmann(&g, &demand(&[60.0, 30.0, 6.0]), &SolverConfig::default()).unwrap();
        let v = r.to_json_value(&g);
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        assert_eq!(
            keys,
            ["loads", "flows", "tau", "lambda", "active_regime", "beckmann_value", "gap", "iterations"]
        );
        assert!((v["lambda"]["bc"].as_f64().unwrap() - 24.0).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = SolverConfig {
            decay: 1.5,
            ..SolverConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
