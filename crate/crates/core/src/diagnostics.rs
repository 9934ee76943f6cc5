//! Sweeps that test equilibrium structure numerically: load monotonicity of
//! the selected equilibrium, comonotonicity of load families, monotonicity of
//! the demand-to-cost operator, and region maps of singleton games.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{CongestionGame, DemandVector, LoadProfile};
use crate::singleton::{axis_values, cartesian, sample_regions, RegionMap, TIE_TOL};
use crate::solver::{solve_beckmann, solve_mes, SolverConfig};

/// Demand grid over a box. Monotonicity is checked between neighbours along
/// each axis, so a box that is degenerate in all but one coordinate is an
/// axis chain.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub bounds: Vec<(f64, f64)>,
    pub resolution: Vec<usize>,
    /// Jitter interior grid values by up to a quarter spacing, per axis.
    pub jitter_seed: Option<u64>,
}

impl SweepPlan {
    pub fn grid(bounds: Vec<(f64, f64)>, resolution: Vec<usize>) -> Result<Self> {
        let plan = SweepPlan {
            bounds,
            resolution,
            jitter_seed: None,
        };
        plan.axes()?;
        Ok(plan)
    }

    /// Same resolution on every axis.
    pub fn uniform(bounds: Vec<(f64, f64)>, n: usize) -> Result<Self> {
        let resolution = bounds.iter().map(|&(lo, hi)| if lo == hi { 1 } else { n }).collect();
        Self::grid(bounds, resolution)
    }

    /// Vary commodity `axis` over `[lo, hi]` in `steps` samples, others fixed at `base`.
    pub fn chain(base: &[f64], axis: usize, lo: f64, hi: f64, steps: usize) -> Result<Self> {
        if axis >= base.len() {
            return Err(Error::InvalidArgument(format!("chain axis {axis} out of range")));
        }
        let bounds = base
            .iter()
            .enumerate()
            .map(|(i, &v)| if i == axis { (lo, hi) } else { (v, v) })
            .collect();
        let resolution = (0..base.len()).map(|i| if i == axis { steps } else { 1 }).collect();
        Self::grid(bounds, resolution)
    }

    pub fn with_jitter(mut self, seed: u64) -> Self {
        self.jitter_seed = Some(seed);
        self
    }

    fn axes(&self) -> Result<Vec<Vec<f64>>> {
        let mut axes = axis_values(&self.bounds, &self.resolution)?;
        if let Some(seed) = self.jitter_seed {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for axis in &mut axes {
                if axis.len() < 3 {
                    continue;
                }
                let h = axis[1] - axis[0];
                let n = axis.len();
                for v in &mut axis[1..n - 1] {
                    *v += rng.gen_range(-0.25..0.25) * h;
                }
            }
        }
        Ok(axes)
    }

    /// Grid points in row-major order (first axis slowest).
    pub fn points(&self) -> Result<Vec<Vec<f64>>> {
        Ok(cartesian(&self.axes()?))
    }

    /// Pairs `(i, j)` of point indices adjacent along some axis, `j` larger.
    fn neighbours(&self) -> Vec<(usize, usize)> {
        let dims: Vec<usize> = self.resolution.clone();
        let total: usize = dims.iter().product();
        let mut strides = vec![1; dims.len()];
        for a in (0..dims.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * dims[a + 1];
        }
        let mut out = Vec::new();
        for idx in 0..total {
            for (a, &stride) in strides.iter().enumerate() {
                if (idx / stride) % dims[a] + 1 < dims[a] {
                    out.push((idx, idx + stride));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadDecrease {
    pub mu_from: Vec<f64>,
    pub mu_to: Vec<f64>,
    pub resource: String,
    pub x_from: f64,
    pub x_to: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inconclusive {
    pub demand: Vec<f64>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityVerdict {
    pub pass: bool,
    pub violations: Vec<LoadDecrease>,
    /// Grid points where the solver failed; never counted as violations.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub inconclusive: Vec<Inconclusive>,
}

/// Default tolerance for a load decrease: `1e-6·(1 + max load)`.
pub fn default_slack(a: &[f64], b: &[f64]) -> f64 {
    let m = a.iter().chain(b).fold(0.0f64, |m, &v| m.max(v.abs()));
    1e-6 * (1.0 + m)
}

/// Checks that selected-equilibrium loads never decrease between grid
/// neighbours. `slack = None` uses [`default_slack`].
pub fn verify_mes(
    game: &CongestionGame,
    plan: &SweepPlan,
    config: &SolverConfig,
    slack: Option<f64>,
) -> Result<MonotonicityVerdict> {
    let points = plan.points()?;
    for p in &points {
        DemandVector::new(p.clone())?.check_for(game)?;
    }
    let solved = crate::par::map(&points, |p| {
        let mu = DemandVector::new(p.clone())?;
        solve_mes(game, &mu, config).map(|r| r.loads)
    });
    let mut inconclusive = Vec::new();
    let loads: Vec<Option<LoadProfile>> = points
        .iter()
        .zip(solved)
        .map(|(p, r)| match r {
            Ok(x) => Some(x),
            Err(e) => {
                inconclusive.push(Inconclusive {
                    demand: p.clone(),
                    error: e.to_string(),
                });
                None
            }
        })
        .collect();

    let mut violations = Vec::new();
    for (i, j) in plan.neighbours() {
        let (Some(a), Some(b)) = (&loads[i], &loads[j]) else {
            continue;
        };
        let tol = slack.unwrap_or_else(|| default_slack(a.as_slice(), b.as_slice()));
        for r in 0..game.num_resources() {
            if b[r] < a[r] - tol {
                violations.push(LoadDecrease {
                    mu_from: points[i].clone(),
                    mu_to: points[j].clone(),
                    resource: game.resources()[r].id.clone(),
                    x_from: a[r],
                    x_to: b[r],
                });
            }
        }
    }
    Ok(MonotonicityVerdict {
        pass: violations.is_empty(),
        violations,
        inconclusive,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComonotoneViolation {
    pub sample_a: usize,
    pub sample_b: usize,
    pub resource_i: usize,
    pub resource_j: usize,
    /// `(x_i(a) − x_i(b))·(x_j(a) − x_j(b))`, negative beyond slack.
    pub product: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComonotoneVerdict {
    pub pass: bool,
    pub violations: usize,
    /// Most negative product found.
    pub worst: Option<ComonotoneViolation>,
}

/// Checks that no two resources in `subset` move in opposite directions
/// between any two samples.
pub fn verify_comonotone(
    samples: &[(DemandVector, LoadProfile)],
    subset: &[usize],
    slack: f64,
) -> Result<ComonotoneVerdict> {
    check_subset(samples, subset)?;
    let mut worst: Option<ComonotoneViolation> = None;
    let mut violations = 0;
    for a in 0..samples.len() {
        for b in a + 1..samples.len() {
            let (xa, xb) = (&samples[a].1, &samples[b].1);
            for (p, &i) in subset.iter().enumerate() {
                for &j in &subset[p + 1..] {
                    let product = (xa[i] - xb[i]) * (xa[j] - xb[j]);
                    if product < -slack {
                        violations += 1;
                        if worst.as_ref().is_none_or(|w| product < w.product) {
                            worst = Some(ComonotoneViolation {
                                sample_a: a,
                                sample_b: b,
                                resource_i: i,
                                resource_j: j,
                                product,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(ComonotoneVerdict {
        pass: violations == 0,
        violations,
        worst,
    })
}

fn check_subset(samples: &[(DemandVector, LoadProfile)], subset: &[usize]) -> Result<()> {
    let n = samples.first().map_or(0, |s| s.1.len());
    if let Some(s) = samples.iter().find(|s| s.1.len() != n) {
        return Err(Error::Dimension {
            what: "sample loads",
            expected: n,
            got: s.1.len(),
        });
    }
    if let Some(&r) = subset.iter().find(|&&r| r >= n && !samples.is_empty()) {
        return Err(Error::InvalidArgument(format!("resource index {r} out of range")));
    }
    Ok(())
}

/// Values of one resource's load against the aggregate `s = Σ_{subset} x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepresentationTable {
    pub resource: usize,
    pub s: Vec<f64>,
    pub values: Vec<f64>,
}

/// Writes each load of a comonotone family as a nondecreasing function of
/// the family's sum. Fails, naming the resource and samples, when no such
/// representation exists.
pub fn comonotone_representation(
    samples: &[(DemandVector, LoadProfile)],
    subset: &[usize],
    slack: f64,
) -> Result<Vec<RepresentationTable>> {
    check_subset(samples, subset)?;
    let sum = |x: &LoadProfile| subset.iter().map(|&r| x[r]).sum::<f64>();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| sum(&samples[a].1).total_cmp(&sum(&samples[b].1)));
    let s: Vec<f64> = order.iter().map(|&k| sum(&samples[k].1)).collect();
    let mut tables = Vec::with_capacity(subset.len());
    for &r in subset {
        let values: Vec<f64> = order.iter().map(|&k| samples[k].1[r]).collect();
        for w in 1..values.len() {
            let tie = s[w] - s[w - 1] <= slack;
            let bad = if tie {
                (values[w] - values[w - 1]).abs() > slack
            } else {
                values[w] < values[w - 1] - slack
            };
            if bad {
                return Err(Error::Structural(format!(
                    "resource {r} is not a nondecreasing function of the sum between samples {} and {}",
                    order[w - 1],
                    order[w]
                )));
            }
        }
        tables.push(RepresentationTable {
            resource: r,
            s: s.clone(),
            values,
        });
    }
    Ok(tables)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorVerdict {
    pub pass: bool,
    /// Smallest `⟨λ(μ1) − λ(μ2), μ1 − μ2⟩` over all pairs.
    pub min_inner: f64,
    /// `(sample_a, sample_b, inner product)` for pairs below `−slack`.
    pub violations: Vec<(usize, usize, f64)>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub inconclusive: Vec<Inconclusive>,
}

/// Checks `⟨λ(μ1) − λ(μ2), μ1 − μ2⟩ ≥ −slack` for all sample pairs.
/// `slack = None` uses `1e-6·(1 + ‖μ1 − μ2‖·max‖λ‖)`.
pub fn verify_monotone_operator(
    game: &CongestionGame,
    samples: &[DemandVector],
    config: &SolverConfig,
    slack: Option<f64>,
) -> Result<OperatorVerdict> {
    for mu in samples {
        mu.check_for(game)?;
    }
    let solved = crate::par::map(samples, |mu| solve_beckmann(game, mu, config).map(|r| r.lambda));
    let mut inconclusive = Vec::new();
    let lambdas: Vec<Option<Vec<f64>>> = samples
        .iter()
        .zip(solved)
        .map(|(mu, r)| {
            r.map_err(|e| {
                inconclusive.push(Inconclusive {
                    demand: mu.as_slice().to_vec(),
                    error: e.to_string(),
                })
            })
            .ok()
        })
        .collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut min_inner = f64::INFINITY;
    let mut violations = Vec::new();
    for a in 0..samples.len() {
        for b in a + 1..samples.len() {
            let (Some(la), Some(lb)) = (&lambdas[a], &lambdas[b]) else {
                continue;
            };
            let dmu: Vec<f64> = samples[a].as_slice().iter().zip(samples[b].as_slice()).map(|(x, y)| x - y).collect();
            let inner: f64 = la.iter().zip(lb).zip(&dmu).map(|((x, y), d)| (x - y) * d).sum();
            min_inner = min_inner.min(inner);
            let tol = slack.unwrap_or_else(|| 1e-6 * (1.0 + norm(&dmu) * norm(la).max(norm(lb))));
            if inner < -tol {
                violations.push((a, b, inner));
            }
        }
    }
    Ok(OperatorVerdict {
        pass: violations.is_empty(),
        min_inner,
        violations,
        inconclusive,
    })
}

/// Region map of a singleton game over the plan's grid.
pub fn region_sweep(game: &CongestionGame, plan: &SweepPlan, config: &SolverConfig) -> Result<RegionMap> {
    sample_regions(game, &plan.points()?, config, TIE_TOL)
}
