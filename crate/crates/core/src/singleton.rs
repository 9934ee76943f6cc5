//! Singleton congestion games: water-filling, break points, cost classes,
//! demand-space regions and active-regime sub-regions.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{CongestionGame, DemandVector, Resource};
use crate::jsonfmt::fmt_f64;
use crate::solver::{solve_beckmann, solve_mes, EquilibriumReport, SolverConfig};

/// Default relative tolerance for merging commodities into one cost class.
pub const TIE_TOL: f64 = 1e-6;

fn require_strict(resources: &[Resource]) -> Result<()> {
    match resources.iter().find(|r| !r.cost.is_strictly_increasing()) {
        Some(r) => Err(Error::NotStrictlyIncreasing { resource: r.id.clone() }),
        None => Ok(()),
    }
}

fn supply(resources: &[Resource], lambda: f64) -> f64 {
    resources.iter().map(|r| r.cost.inverse(lambda)).sum()
}

/// Routes `demand` over parallel resources so that every loaded resource
/// costs the common level `λ` and no unloaded resource is cheaper.
///
/// Returns `(loads, λ)`. Zero demand gives zero loads and `λ = min_r c_r(0)`.
pub fn water_fill(resources: &[Resource], demand: f64) -> Result<(Vec<f64>, f64)> {
    if resources.is_empty() {
        return Err(Error::InvalidArgument("water_fill needs at least one resource".into()));
    }
    if !(demand.is_finite() && demand >= 0.0) {
        return Err(Error::InvalidArgument(format!("demand {demand} must be finite and >= 0")));
    }
    require_strict(resources)?;
    let floor = resources.iter().map(|r| r.cost.at_zero()).fold(f64::INFINITY, f64::min);
    if demand == 0.0 {
        return Ok((vec![0.0; resources.len()], floor));
    }
    let mut lo = floor;
    let mut step = 1.0 + floor.abs();
    let mut hi = floor + step;
    while supply(resources, hi) < demand {
        lo = hi;
        step *= 2.0;
        hi = floor + step;
        if !hi.is_finite() {
            return Err(Error::InvalidArgument("demand exceeds what the costs can absorb".into()));
        }
    }
    // run to floating-point resolution; this is well inside 1e-12·(1+λ)
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if supply(resources, mid) < demand {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let loads = resources.iter().map(|r| r.cost.inverse(lambda)).collect();
    Ok((loads, lambda))
}

/// Demands at which the active set of the single-commodity game changes:
/// one per distinct entry cost `c_r(0)` above the cheapest.
pub fn break_points(resources: &[Resource]) -> Result<Vec<f64>> {
    require_strict(resources)?;
    let mut thresholds: Vec<f64> = resources.iter().map(|r| r.cost.at_zero()).collect();
    thresholds.sort_by(f64::total_cmp);
    let Some(&floor) = thresholds.first() else {
        return Ok(Vec::new());
    };
    let mut out: Vec<f64> = Vec::new();
    for theta in thresholds.into_iter().filter(|&t| t > floor) {
        let mu = supply(resources, theta);
        if out.last().is_none_or(|&last| mu - last > 1e-12 * (1.0 + mu)) {
            out.push(mu);
        }
    }
    Ok(out)
}

/// Commodities sharing one equilibrium cost, and the resources they own.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostClass {
    pub commodities: Vec<usize>,
    pub resources: Vec<usize>,
    pub demand: f64,
    pub lambda: f64,
}

/// Ordered partition of the commodities by equilibrium cost, cheapest first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakOrderLabel {
    pub classes: Vec<CostClass>,
}

impl WeakOrderLabel {
    /// Structural identity of the label (commodity and resource partitions,
    /// not the numeric demands).
    pub fn signature(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        self.classes
            .iter()
            .map(|c| (c.commodities.clone(), c.resources.clone()))
            .collect()
    }

    /// E.g. `{beta}<{alpha}` or `{alpha,beta}`.
    pub fn describe(&self, game: &CongestionGame) -> String {
        self.classes
            .iter()
            .map(|c| {
                let ids: Vec<&str> = c.commodities.iter().map(|&h| game.commodities()[h].id.as_str()).collect();
                format!("{{{}}}", ids.join(","))
            })
            .collect::<Vec<_>>()
            .join("<")
    }

    pub fn class_of(&self, h: usize) -> Option<usize> {
        self.classes.iter().position(|c| c.commodities.contains(&h))
    }
}

fn require_singleton(game: &CongestionGame) -> Result<()> {
    if game.is_singleton() {
        Ok(())
    } else {
        Err(Error::Structural("operation requires a singleton game".into()))
    }
}

/// Groups commodities into cost classes by their equilibrium costs.
///
/// Commodities are ranked by `λ^h`; neighbours within
/// `tie_tol·(1 + max λ)` share a class. A class owns the resources its
/// commodities may use, minus those available to any costlier commodity.
pub fn classify_region(
    game: &CongestionGame,
    demand: &DemandVector,
    report: &EquilibriumReport,
    tie_tol: f64,
) -> Result<WeakOrderLabel> {
    require_singleton(game)?;
    demand.check_for(game)?;
    let lambda = &report.lambda;
    let mut order: Vec<usize> = (0..game.num_commodities()).collect();
    order.sort_by(|&a, &b| lambda[a].total_cmp(&lambda[b]).then(a.cmp(&b)));

    let mut groups: Vec<Vec<usize>> = Vec::new();
    for h in order {
        match groups.last_mut() {
            Some(g) => {
                let prev = lambda[*g.last().unwrap()];
                if (lambda[h] - prev).abs() <= tie_tol * (1.0 + lambda[h].max(prev)) {
                    g.push(h);
                } else {
                    groups.push(vec![h]);
                }
            }
            None => groups.push(vec![h]),
        }
    }

    let feasible: Vec<Vec<usize>> = (0..game.num_commodities()).map(|h| game.feasible_resources(h)).collect();
    let classes = groups
        .iter()
        .enumerate()
        .map(|(k, members)| {
            let mut owned: Vec<usize> = members.iter().flat_map(|&h| feasible[h].iter().copied()).collect();
            owned.sort_unstable();
            owned.dedup();
            let higher: Vec<usize> = groups[k + 1..].iter().flatten().flat_map(|&h| feasible[h].iter().copied()).collect();
            owned.retain(|r| !higher.contains(r));
            let mut commodities = members.clone();
            commodities.sort_unstable();
            CostClass {
                demand: members.iter().map(|&h| demand[h]).sum(),
                lambda: members.iter().map(|&h| lambda[h]).sum::<f64>() / members.len() as f64,
                commodities,
                resources: owned,
            }
        })
        .collect();
    Ok(WeakOrderLabel { classes })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassCheck {
    pub class: usize,
    pub pass: bool,
    /// `|Σ_{r∈R_C} x_r − μ_C|`.
    pub mass_residual: f64,
    /// Largest gap between the report's loads and water-filling on `R_C`.
    pub load_residual: f64,
}

/// Checks that each cost class is an equilibrium of its own single-commodity
/// game on `R_C` with demand `μ_C`.
pub fn restricted_equilibrium_check(
    game: &CongestionGame,
    demand: &DemandVector,
    label: &WeakOrderLabel,
    report: &EquilibriumReport,
    tol: f64,
) -> Result<Vec<ClassCheck>> {
    require_singleton(game)?;
    demand.check_for(game)?;
    label
        .classes
        .iter()
        .enumerate()
        .map(|(k, class)| {
            if class.resources.is_empty() {
                return Ok(ClassCheck {
                    class: k,
                    pass: class.demand <= tol,
                    mass_residual: class.demand,
                    load_residual: 0.0,
                });
            }
            let rs: Vec<Resource> = class.resources.iter().map(|&r| game.resources()[r].clone()).collect();
            let (want, _) = water_fill(&rs, class.demand)?;
            let got: Vec<f64> = class.resources.iter().map(|&r| report.loads[r]).collect();
            let mass_residual = (got.iter().sum::<f64>() - class.demand).abs();
            let load_residual = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            Ok(ClassCheck {
                class: k,
                pass: mass_residual <= tol && load_residual <= tol,
                mass_residual,
                load_residual,
            })
        })
        .collect()
}

/// The hyperplane `Σ_{h ∈ commodities} μ^h = mu_bar`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hyperplane {
    pub class: usize,
    pub commodities: Vec<usize>,
    pub mu_bar: f64,
}

/// Sub-region boundaries inside the region of `label`: one hyperplane per
/// break point of each class's resource set.
pub fn subregion_boundaries(game: &CongestionGame, label: &WeakOrderLabel) -> Result<Vec<Hyperplane>> {
    require_singleton(game)?;
    let mut out = Vec::new();
    for (k, class) in label.classes.iter().enumerate() {
        let rs: Vec<Resource> = class.resources.iter().map(|&r| game.resources()[r].clone()).collect();
        for mu_bar in break_points(&rs)? {
            out.push(Hyperplane {
                class: k,
                commodities: class.commodities.clone(),
                mu_bar,
            });
        }
    }
    Ok(out)
}

/// Active resources per commodity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct RegimeLabel(pub Vec<Vec<usize>>);

impl RegimeLabel {
    pub fn from_report(report: &EquilibriumReport) -> Self {
        RegimeLabel(report.active_regime.clone())
    }

    /// E.g. `alpha:{r1,r2};beta:{r2}`.
    pub fn describe(&self, game: &CongestionGame) -> String {
        self.0
            .iter()
            .enumerate()
            .map(|(h, rho)| {
                let ids: Vec<&str> = rho.iter().map(|&r| game.resources()[r].id.as_str()).collect();
                format!("{}:{{{}}}", game.commodities()[h].id, ids.join(","))
            })
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Row-major grid over a box (first axis slowest). An axis with
/// `lo == hi` may use a single sample.
pub fn grid_points(bounds: &[(f64, f64)], resolution: &[usize]) -> Result<Vec<Vec<f64>>> {
    Ok(cartesian(&axis_values(bounds, resolution)?))
}

/// Evenly spaced samples per axis, endpoints included.
pub fn axis_values(bounds: &[(f64, f64)], resolution: &[usize]) -> Result<Vec<Vec<f64>>> {
    if bounds.len() != resolution.len() {
        return Err(Error::Dimension {
            what: "grid resolution",
            expected: bounds.len(),
            got: resolution.len(),
        });
    }
    for (i, (&(lo, hi), &n)) in bounds.iter().zip(resolution).enumerate() {
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return Err(Error::InvalidArgument(format!("axis {i}: need 0 <= lo <= hi, got [{lo}, {hi}]")));
        }
        if n == 0 || (n == 1 && lo < hi) {
            return Err(Error::InvalidArgument(format!(
                "axis {i}: resolution must be >= 2 (or 1 for a fixed coordinate)"
            )));
        }
    }
    Ok(bounds
        .iter()
        .zip(resolution)
        .map(|(&(lo, hi), &n)| {
            if n == 1 {
                vec![lo]
            } else {
                (0..n).map(|k| if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 }).collect()
            }
        })
        .collect())
}

/// Row-major Cartesian product of per-axis sample values.
pub fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::with_capacity(axes.len())];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    points
}

/// Equilibrium used by the region tools: the plain minimizer for strictly
/// increasing costs, the selected one otherwise.
pub fn singleton_equilibrium(
    game: &CongestionGame,
    demand: &DemandVector,
    config: &SolverConfig,
) -> Result<EquilibriumReport> {
    if game.all_strictly_increasing() {
        solve_beckmann(game, demand, config)
    } else {
        solve_mes(game, demand, config)
    }
}

#[derive(Debug, Clone)]
pub struct RegionSample {
    pub demand: Vec<f64>,
    pub lambda: Vec<f64>,
    pub loads: Vec<f64>,
    pub order: WeakOrderLabel,
    pub regime: RegimeLabel,
    pub order_id: usize,
    pub regime_id: usize,
}

/// Classified demand samples with label ids numbered by first appearance.
#[derive(Debug, Clone)]
pub struct RegionMap {
    pub commodity_ids: Vec<String>,
    pub resource_ids: Vec<String>,
    pub samples: Vec<RegionSample>,
    /// Descriptions of order labels, indexed by id.
    pub order_labels: Vec<String>,
    pub regime_labels: Vec<String>,
    /// Points whose solve failed, with the error message.
    pub failures: Vec<(Vec<f64>, String)>,
}

#[derive(Serialize)]
struct Legend<'a> {
    order_labels: IndexMap<usize, &'a str>,
    regime_labels: IndexMap<usize, &'a str>,
    failures: Vec<FailureJson<'a>>,
}

#[derive(Serialize)]
struct FailureJson<'a> {
    demand: &'a [f64],
    error: &'a str,
}

impl RegionMap {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header: Vec<String> = self
            .commodity_ids
            .iter()
            .map(|h| format!("mu_{h}"))
            .chain(self.commodity_ids.iter().map(|h| format!("lambda_{h}")))
            .chain(["order_label".to_string(), "regime_label".to_string()])
            .chain(self.resource_ids.iter().map(|r| format!("x_{r}")))
            .collect();
        let csv_err = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        w.write_record(&header).map_err(csv_err)?;
        for s in &self.samples {
            let row: Vec<String> = s
                .demand
                .iter()
                .chain(&s.lambda)
                .map(|&v| fmt_f64(v))
                .chain([s.order_id.to_string(), s.regime_id.to_string()])
                .chain(s.loads.iter().map(|&v| fmt_f64(v)))
                .collect();
            w.write_record(&row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv emits UTF-8"))
    }

    /// JSON legend mapping label ids to their descriptions.
    pub fn legend_json(&self) -> serde_json::Value {
        let legend = Legend {
            order_labels: self.order_labels.iter().map(String::as_str).enumerate().collect(),
            regime_labels: self.regime_labels.iter().map(String::as_str).enumerate().collect(),
            failures: self
                .failures
                .iter()
                .map(|(d, e)| FailureJson { demand: d, error: e })
                .collect(),
        };
        serde_json::to_value(legend).expect("legend serializes")
    }

    /// Distinct regime labels with their sample counts, in first-seen order.
    pub fn regime_counts(&self) -> Vec<(RegimeLabel, usize)> {
        let mut counts: IndexMap<&RegimeLabel, usize> = IndexMap::new();
        for s in &self.samples {
            *counts.entry(&s.regime).or_insert(0) += 1;
        }
        counts.into_iter().map(|(k, v)| (k.clone(), v)).collect()
    }
}

type OrderSignature = Vec<(Vec<usize>, Vec<usize>)>;

/// Solves and classifies every demand point (in parallel when enabled).
pub fn sample_regions(
    game: &CongestionGame,
    points: &[Vec<f64>],
    config: &SolverConfig,
    tie_tol: f64,
) -> Result<RegionMap> {
    require_singleton(game)?;
    let solved = crate::par::map(points, |p| -> Result<(EquilibriumReport, WeakOrderLabel)> {
        let mu = DemandVector::new(p.clone())?;
        mu.check_for(game)?;
        let report = singleton_equilibrium(game, &mu, config)?;
        let order = classify_region(game, &mu, &report, tie_tol)?;
        Ok((report, order))
    });

    let mut order_ids: BTreeMap<OrderSignature, usize> = BTreeMap::new();
    let mut regime_ids: BTreeMap<RegimeLabel, usize> = BTreeMap::new();
    let mut map = RegionMap {
        commodity_ids: game.commodities().iter().map(|c| c.id.clone()).collect(),
        resource_ids: game.resources().iter().map(|r| r.id.clone()).collect(),
        samples: Vec::new(),
        order_labels: Vec::new(),
        regime_labels: Vec::new(),
        failures: Vec::new(),
    };
    for (p, outcome) in points.iter().zip(solved) {
        let (report, order) = match outcome {
            Ok(v) => v,
            Err(e @ (Error::Dimension { .. } | Error::InvalidArgument(_))) => return Err(e),
            Err(e) => {
                map.failures.push((p.clone(), e.to_string()));
                continue;
            }
        };
        let regime = RegimeLabel::from_report(&report);
        let next = order_ids.len();
        let order_id = *order_ids.entry(order.signature()).or_insert_with(|| {
            map.order_labels.push(order.describe(game));
            next
        });
        let next = regime_ids.len();
        let regime_id = *regime_ids.entry(regime.clone()).or_insert_with(|| {
            map.regime_labels.push(regime.describe(game));
            next
        });
        map.samples.push(RegionSample {
            demand: p.clone(),
            lambda: report.lambda.clone(),
            loads: report.loads.as_slice().to_vec(),
            order,
            regime,
            order_id,
            regime_id,
        });
    }
    Ok(map)
}

/// Distinct active regimes over a demand grid.
pub fn regime_census(
    game: &CongestionGame,
    bounds: &[(f64, f64)],
    resolution: &[usize],
    config: &SolverConfig,
) -> Result<RegionMap> {
    let points = grid_points(bounds, resolution)?;
    sample_regions(game, &points, config, TIE_TOL)
}

/// Demand vector realizing regime `rho` (1-based resource numbers) for the
/// free commodity of the `m`-link pinned-commodity family: links `x + i`,
/// commodity `i` pinned to link `i`, commodity `m+1` free over all links.
pub fn pinned_family_demand(m: usize, rho: &[usize]) -> Result<Vec<f64>> {
    if rho.is_empty() || rho.iter().any(|&i| i == 0 || i > m) {
        return Err(Error::InvalidArgument(format!("regime must be a nonempty subset of 1..={m}")));
    }
    let i_max = *rho.iter().max().unwrap();
    let mut mu: Vec<f64> = (1..=m).map(|i| if rho.contains(&i) { 0.0 } else { i_max as f64 }).collect();
    mu.push(rho.iter().map(|&i| (i_max - i) as f64).sum());
    Ok(mu)
}
