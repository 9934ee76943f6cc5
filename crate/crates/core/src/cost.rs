//! Resource cost functions.
//!
//! Every catalogued kind is continuous and nondecreasing on `[0, ∞)` and has a
//! closed-form antiderivative, generalized inverse and Fenchel conjugate of the
//! antiderivative. Loads passed in are clamped at zero so that rounding noise
//! on an empty resource never produces `NaN` for fractional exponents.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CostFunction {
    /// `a·x + b`
    Affine { a: f64, b: f64 },
    /// `coeff·x^exponent + constant`
    Monomial {
        coeff: f64,
        exponent: f64,
        constant: f64,
    },
    /// `t0·(1 + alpha·(x/capacity)^beta)`
    Bpr {
        t0: f64,
        alpha: f64,
        beta: f64,
        capacity: f64,
    },
    /// Linear interpolation through `(x, y)` knots starting at `x = 0`; the
    /// last segment is extended beyond the final knot.
    PiecewiseLinear { knots: Vec<[f64; 2]> },
    Constant { b: f64 },
}

impl CostFunction {
    pub fn affine(a: f64, b: f64) -> Self {
        CostFunction::Affine { a, b }
    }

    pub fn monomial(coeff: f64, exponent: f64, constant: f64) -> Self {
        CostFunction::Monomial {
            coeff,
            exponent,
            constant,
        }
    }

    pub fn bpr(t0: f64, alpha: f64, beta: f64, capacity: f64) -> Self {
        CostFunction::Bpr {
            t0,
            alpha,
            beta,
            capacity,
        }
    }

    pub fn constant(b: f64) -> Self {
        CostFunction::Constant { b }
    }

    pub fn piecewise_linear(knots: Vec<[f64; 2]>) -> Self {
        CostFunction::PiecewiseLinear { knots }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            CostFunction::Affine { .. } => "affine",
            CostFunction::Monomial { .. } => "monomial",
            CostFunction::Bpr { .. } => "bpr",
            CostFunction::PiecewiseLinear { .. } => "piecewise-linear",
            CostFunction::Constant { .. } => "constant",
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match *self {
            CostFunction::Affine { a, b } => a * x + b,
            CostFunction::Monomial {
                coeff,
                exponent,
                constant,
            } => coeff * x.powf(exponent) + constant,
            CostFunction::Bpr {
                t0,
                alpha,
                beta,
                capacity,
            } => t0 * (1.0 + alpha * (x / capacity).powf(beta)),
            CostFunction::PiecewiseLinear { ref knots } => pwl_eval(knots, x),
            CostFunction::Constant { b } => b,
        }
    }

    /// Cost at zero load.
    pub fn at_zero(&self) -> f64 {
        self.eval(0.0)
    }

    /// `∫₀ˣ c(z) dz`.
    pub fn integral(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match *self {
            CostFunction::Affine { a, b } => 0.5 * a * x * x + b * x,
            CostFunction::Monomial {
                coeff,
                exponent,
                constant,
            } => coeff * x.powf(exponent + 1.0) / (exponent + 1.0) + constant * x,
            CostFunction::Bpr {
                t0,
                alpha,
                beta,
                capacity,
            } => t0 * (x + alpha * capacity * (x / capacity).powf(beta + 1.0) / (beta + 1.0)),
            CostFunction::PiecewiseLinear { ref knots } => pwl_integral(knots, x),
            CostFunction::Constant { b } => b * x,
        }
    }

    /// Generalized inverse `sup{x ≥ 0 : c(x) < λ}`, with `0` when `λ ≤ c(0)`.
    /// Returns `+∞` when the cost never reaches `λ`.
    pub fn inverse(&self, lambda: f64) -> f64 {
        if lambda <= self.at_zero() {
            return 0.0;
        }
        match *self {
            CostFunction::Affine { a, b } => {
                if a > 0.0 {
                    (lambda - b) / a
                } else {
                    f64::INFINITY
                }
            }
            CostFunction::Monomial {
                coeff,
                exponent,
                constant,
            } => {
                if coeff > 0.0 {
                    ((lambda - constant) / coeff).powf(1.0 / exponent)
                } else {
                    f64::INFINITY
                }
            }
            CostFunction::Bpr {
                t0,
                alpha,
                beta,
                capacity,
            } => {
                if alpha > 0.0 {
                    capacity * ((lambda / t0 - 1.0) / alpha).powf(1.0 / beta)
                } else {
                    f64::INFINITY
                }
            }
            CostFunction::PiecewiseLinear { ref knots } => pwl_inverse(knots, lambda),
            CostFunction::Constant { .. } => f64::INFINITY,
        }
    }

    /// Fenchel conjugate of the antiderivative, `sup_{x ≥ 0} {τx − C(x)}`.
    /// `+∞` when `τ` lies above the range of the cost.
    pub fn conjugate(&self, tau: f64) -> f64 {
        let x = self.inverse(tau);
        if !x.is_finite() {
            return f64::INFINITY;
        }
        tau * x - self.integral(x)
    }

    pub fn is_strictly_increasing(&self) -> bool {
        match *self {
            CostFunction::Affine { a, .. } => a > 0.0,
            CostFunction::Monomial { coeff, .. } => coeff > 0.0,
            CostFunction::Bpr { alpha, .. } => alpha > 0.0,
            CostFunction::PiecewiseLinear { ref knots } => {
                knots.len() >= 2 && knots.windows(2).all(|w| w[1][1] > w[0][1])
            }
            CostFunction::Constant { .. } => false,
        }
    }

    /// Parameter problems, empty when the function is well formed.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut need = |ok: bool, msg: &str| {
            if !ok {
                out.push(msg.to_string());
            }
        };
        match *self {
            CostFunction::Affine { a, b } => {
                need(a.is_finite() && a >= 0.0, "affine slope a must be finite and >= 0");
                need(b.is_finite() && b >= 0.0, "affine intercept b must be finite and >= 0");
            }
            CostFunction::Monomial {
                coeff,
                exponent,
                constant,
            } => {
                need(coeff.is_finite() && coeff >= 0.0, "monomial coeff must be finite and >= 0");
                need(exponent.is_finite() && exponent >= 1.0, "monomial exponent must be >= 1");
                need(
                    constant.is_finite() && constant >= 0.0,
                    "monomial constant must be finite and >= 0",
                );
            }
            CostFunction::Bpr {
                t0,
                alpha,
                beta,
                capacity,
            } => {
                need(t0.is_finite() && t0 > 0.0, "bpr t0 must be > 0");
                need(alpha.is_finite() && alpha >= 0.0, "bpr alpha must be >= 0");
                need(beta.is_finite() && beta >= 1.0, "bpr beta must be >= 1");
                need(capacity.is_finite() && capacity > 0.0, "bpr capacity must be > 0");
            }
            CostFunction::PiecewiseLinear { ref knots } => {
                need(knots.len() >= 2, "piecewise-linear needs at least two knots");
                need(
                    knots.iter().all(|k| k[0].is_finite() && k[1].is_finite()),
                    "piecewise-linear knots must be finite",
                );
                if let Some(first) = knots.first() {
                    need(first[0] == 0.0, "piecewise-linear first knot must be at x = 0");
                    need(first[1] >= 0.0, "piecewise-linear cost must be >= 0");
                }
                need(
                    knots.windows(2).all(|w| w[1][0] > w[0][0]),
                    "piecewise-linear knot abscissae must be strictly increasing",
                );
                need(
                    knots.windows(2).all(|w| w[1][1] >= w[0][1]),
                    "piecewise-linear cost has a decreasing segment",
                );
            }
            CostFunction::Constant { b } => {
                need(b.is_finite() && b >= 0.0, "constant cost must be finite and >= 0");
            }
        }
        out
    }
}

fn pwl_last_slope(knots: &[[f64; 2]]) -> f64 {
    let n = knots.len();
    if n < 2 {
        return 0.0;
    }
    let (a, b) = (knots[n - 2], knots[n - 1]);
    (b[1] - a[1]) / (b[0] - a[0])
}

fn pwl_eval(knots: &[[f64; 2]], x: f64) -> f64 {
    match knots {
        [] => 0.0,
        [only] => only[1],
        _ => {
            for w in knots.windows(2) {
                let ([x0, y0], [x1, y1]) = (w[0], w[1]);
                if x <= x1 {
                    return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
                }
            }
            let last = knots[knots.len() - 1];
            last[1] + pwl_last_slope(knots) * (x - last[0])
        }
    }
}

fn pwl_integral(knots: &[[f64; 2]], x: f64) -> f64 {
    match knots {
        [] => 0.0,
        [only] => only[1] * x,
        _ => {
            let mut acc = 0.0;
            for w in knots.windows(2) {
                let ([x0, y0], [x1, _]) = (w[0], w[1]);
                let hi = x.min(x1);
                if hi <= x0 {
                    return acc;
                }
                let y_hi = pwl_eval(knots, hi);
                acc += 0.5 * (y0 + y_hi) * (hi - x0);
                if x <= x1 {
                    return acc;
                }
            }
            let last = knots[knots.len() - 1];
            let d = x - last[0];
            acc + last[1] * d + 0.5 * pwl_last_slope(knots) * d * d
        }
    }
}

fn pwl_inverse(knots: &[[f64; 2]], lambda: f64) -> f64 {
    // caller guarantees lambda > c(0)
    for w in knots.windows(2) {
        let ([x0, y0], [x1, y1]) = (w[0], w[1]);
        if y1 >= lambda {
            // y0 < lambda here, so the segment is not flat
            return x0 + (lambda - y0) * (x1 - x0) / (y1 - y0);
        }
    }
    let slope = pwl_last_slope(knots);
    match knots.last() {
        Some(last) if slope > 0.0 => last[0] + (lambda - last[1]) / slope,
        _ => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn catalogue() -> Vec<CostFunction> {
        vec![
            CostFunction::affine(2.0, 1.0),
            CostFunction::affine(0.0, 3.0),
            CostFunction::monomial(1.5, 2.0, 0.5),
            CostFunction::monomial(1.0, 1.0, 0.0),
            CostFunction::bpr(1.0, 0.15, 4.0, 10.0),
            CostFunction::piecewise_linear(vec![[0.0, 1.0], [1.0, 1.0], [3.0, 5.0]]),
            CostFunction::piecewise_linear(vec![[0.0, 0.0], [2.0, 4.0], [3.0, 4.5]]),
            CostFunction::constant(2.0),
        ]
    }

    #[test]
    fn integral_matches_quadrature() {
        for c in catalogue() {
            for &x in &[0.0, 0.3, 1.0, 2.5, 7.0] {
                // composite Simpson on a fine grid
                let n = 2000;
                let h = x / n as f64;
                let mut s = c.eval(0.0) + c.eval(x);
                for i in 1..n {
                    let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                    s += w * c.eval(i as f64 * h);
                }
                let quad = s * h / 3.0;
                // kinks of piecewise-linear costs limit Simpson to O(h²)
                assert_relative_eq!(c.integral(x), quad, epsilon = 1e-6, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn inverse_is_generalized_sup() {
        for c in catalogue() {
            for &lam in &[0.5, 1.0, 1.7, 3.0, 4.2, 6.0] {
                let x = c.inverse(lam);
                if lam <= c.at_zero() {
                    assert_eq!(x, 0.0);
                    continue;
                }
                if x.is_finite() {
                    assert_relative_eq!(c.eval(x), lam, epsilon = 1e-9);
                    assert!(c.eval((x - 1e-6).max(0.0)) < lam);
                } else {
                    assert!(c.eval(1e9) < lam);
                }
            }
        }
    }

    #[test]
    fn flat_segment_inverse_is_left_end() {
        let c = CostFunction::piecewise_linear(vec![[0.0, 0.0], [1.0, 2.0], [4.0, 2.0], [5.0, 3.0]]);
        assert_eq!(c.inverse(2.0), 1.0);
        assert_relative_eq!(c.inverse(2.5), 4.5);
        assert!(!c.is_strictly_increasing());
    }

    #[test]
    fn conjugate_matches_brute_force() {
        for c in catalogue() {
            for &tau in &[0.5, 1.5, 3.0, 5.0] {
                let conj = c.conjugate(tau);
                let reach = if conj.is_finite() { 2.0 * c.inverse(tau) + 1.0 } else { 20.0 };
                let brute = (0..=200_000)
                    .map(|i| i as f64 * reach / 200_000.0)
                    .map(|x| tau * x - c.integral(x))
                    .fold(f64::NEG_INFINITY, f64::max);
                if conj.is_finite() {
                    assert_relative_eq!(conj, brute, epsilon = 1e-6, max_relative = 1e-6);
                } else {
                    // unbounded: the sampled objective is still increasing at the edge
                    assert!(tau * 20.0 - c.integral(20.0) > tau * 19.0 - c.integral(19.0));
                }
            }
        }
    }

    #[test]
    fn conjugate_vanishes_at_zero_load_price() {
        for c in catalogue() {
            assert_eq!(c.conjugate(c.at_zero()), 0.0);
        }
    }

    #[test]
    fn strictness_flags() {
        let flags: Vec<bool> = catalogue().iter().map(|c| c.is_strictly_increasing()).collect();
        assert_eq!(flags, vec![true, false, true, true, true, false, true, false]);
        assert!(!CostFunction::bpr(1.0, 0.0, 4.0, 1.0).is_strictly_increasing());
    }

    #[test]
    fn decreasing_segment_is_reported() {
        let c = CostFunction::piecewise_linear(vec![[0.0, 2.0], [1.0, 1.0]]);
        let p = c.problems();
        assert_eq!(p.len(), 1);
        assert!(p[0].contains("decreasing"));
    }

    #[test]
    fn json_shape() {
        let c: CostFunction = serde_json::from_str(r#"{"kind":"affine","a":1,"b":90}"#).unwrap();
        assert_eq!(c, CostFunction::affine(1.0, 90.0));
        let pwl: CostFunction =
            serde_json::from_str(r#"{"kind":"piecewise-linear","knots":[[0,1],[2,3]]}"#).unwrap();
        assert_eq!(pwl.eval(1.0), 2.0);
        assert!(serde_json::from_str::<CostFunction>(r#"{"kind":"cubic","a":1}"#).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn any_cost() -> impl Strategy<Value = CostFunction> {
            prop_oneof![
                (0.0..5.0f64, 0.0..5.0f64).prop_map(|(a, b)| CostFunction::affine(a, b)),
                (0.0..3.0f64, 1.0..4.0f64, 0.0..3.0f64)
                    .prop_map(|(c, e, k)| CostFunction::monomial(c, e, k)),
                (0.1..3.0f64, 0.0..1.0f64, 1.0..5.0f64, 0.5..10.0f64)
                    .prop_map(|(t, a, b, cap)| CostFunction::bpr(t, a, b, cap)),
                prop::collection::vec((0.1..2.0f64, 0.0..2.0f64), 1..5).prop_map(|steps| {
                    let mut knots = vec![[0.0, 0.5]];
                    for (dx, dy) in steps {
                        let [x, y] = *knots.last().unwrap();
                        knots.push([x + dx, y + dy]);
                    }
                    CostFunction::piecewise_linear(knots)
                }),
                (0.0..5.0f64).prop_map(CostFunction::constant),
            ]
        }

        proptest! {
            #[test]
            fn nondecreasing_on_samples(c in any_cost(), a in 0.0..50.0f64, b in 0.0..50.0f64) {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(c.problems().is_empty());
                prop_assert!(c.eval(lo) <= c.eval(hi) + 1e-12);
            }

            #[test]
            fn inverse_brackets_level(c in any_cost(), lam in 0.0..20.0f64) {
                let x = c.inverse(lam);
                if x.is_finite() && x > 0.0 {
                    prop_assert!(c.eval(x) >= lam - 1e-9 * (1.0 + lam));
                    prop_assert!(c.eval(x * (1.0 - 1e-9)) <= lam + 1e-9 * (1.0 + lam));
                }
            }
        }
    }
}
