//! Globally adaptive Simpson quadrature on finite intervals, and truncated
//! integration of decaying integrands over `[a, ∞)`.
//!
//! Finite intervals are split at caller-supplied breakpoints (kinks of a
//! piecewise-smooth integrand) and then refined by bisecting the panel with
//! the largest error estimate until the summed estimate drops below
//! `abs_tol`. Infinite ranges are handled by growing the upper limit
//! geometrically and stopping once a segment contributes less than
//! `tail_tol`, or earlier when an analytic tail remainder is available.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances and limits shared by every integral evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub truncation_growth: f64,
    pub tail_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            max_subdivisions: 10_000,
            truncation_growth: 2.0,
            tail_tol: 1e-12,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.abs_tol > 0.0
            && self.abs_tol < 1.0
            && self.max_subdivisions > 0
            && self.truncation_growth > 1.0
            && self.truncation_growth.is_finite()
            && self.tail_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid quadrature configuration {self:?}")))
        }
    }
}

/// A numerical value together with an error estimate (an error bound for
/// deterministic methods, a standard error for stochastic ones).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, error: 0.0 }
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Panel {
    a: f64,
    b: f64,
    // f at a, a + h/4, a + h/2, a + 3h/4, b
    f: [f64; 5],
    value: f64,
    err: f64,
    splittable: bool,
}

impl Panel {
    fn new(a: f64, b: f64, f: [f64; 5]) -> Self {
        let h = b - a;
        let coarse = h / 6.0 * (f[0] + 4.0 * f[2] + f[4]);
        let fine = h / 12.0 * (f[0] + 4.0 * f[1] + 2.0 * f[2] + 4.0 * f[3] + f[4]);
        let splittable = h > 8.0 * f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        Self {
            a,
            b,
            f,
            value: fine + (fine - coarse) / 15.0,
            err: (fine - coarse).abs() / 15.0,
            splittable,
        }
    }

    fn build<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Self {
        let h = b - a;
        let pts = [f(a), f(a + 0.25 * h), f(a + 0.5 * h), f(a + 0.75 * h), f(b)];
        Self::new(a, b, pts)
    }

    fn split<F: Fn(f64) -> f64>(&self, f: &F) -> (Panel, Panel) {
        let h = self.b - self.a;
        let m = self.a + 0.5 * h;
        let left = [
            self.f[0],
            f(self.a + 0.125 * h),
            self.f[1],
            f(self.a + 0.375 * h),
            self.f[2],
        ];
        let right = [
            self.f[2],
            f(self.a + 0.625 * h),
            self.f[3],
            f(self.a + 0.875 * h),
            self.f[4],
        ];
        (Panel::new(self.a, m, left), Panel::new(m, self.b, right))
    }
}

struct ByError(Panel);

impl PartialEq for ByError {
    fn eq(&self, other: &Self) -> bool {
        self.0.err == other.0.err
    }
}
impl Eq for ByError {}
impl PartialOrd for ByError {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for ByError {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.err.total_cmp(&other.0.err)
    }
}

/// Integrates `f` over `[a, b]`, splitting first at every breakpoint strictly
/// inside the interval.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    abs_tol: f64,
    max_subdivisions: usize,
) -> Result<Estimate> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("non-finite integration limits [{a}, {b}]")));
    }
    if a == b {
        return Ok(Estimate::exact(0.0));
    }
    if a > b {
        let r = integrate(f, b, a, breakpoints, abs_tol, max_subdivisions)?;
        return Ok(Estimate { value: -r.value, error: r.error });
    }

    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&t| t.is_finite() && t > a && t < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut nodes = Vec::with_capacity(cuts.len() + 2);
    nodes.push(a);
    nodes.extend(cuts);
    nodes.push(b);

    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Panel> = Vec::new();
    for w in nodes.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        // four starting panels per piece guard against symmetric cancellations
        let step = (hi - lo) / 4.0;
        for k in 0..4 {
            let pa = lo + step * k as f64;
            let pb = if k == 3 { hi } else { lo + step * (k + 1) as f64 };
            if pb > pa {
                heap.push(ByError(Panel::build(&f, pa, pb)));
            }
        }
    }

    let sum_of = |heap: &BinaryHeap<ByError>, frozen: &[Panel]| -> Estimate {
        let mut est = Estimate::exact(0.0);
        for p in heap.iter().map(|b| &b.0).chain(frozen.iter()) {
            est.value += p.value;
            est.error += p.err;
        }
        est
    };

    let mut total_err: f64 = heap.iter().map(|p| p.0.err).sum();
    let mut subdivisions = 0usize;
    while total_err > abs_tol {
        let Some(ByError(worst)) = heap.pop() else {
            break;
        };
        if !worst.value.is_finite() {
            let est = sum_of(&heap, &frozen);
            return Err(Error::IntegrationFailure {
                estimate: est.value + worst.value,
                error_bound: f64::INFINITY,
            });
        }
        if !worst.splittable {
            frozen.push(worst);
            continue;
        }
        if subdivisions >= max_subdivisions {
            heap.push(ByError(worst));
            let est = sum_of(&heap, &frozen);
            return Err(Error::IntegrationFailure {
                estimate: est.value,
                error_bound: est.error,
            });
        }
        subdivisions += 1;
        let (l, r) = worst.split(&f);
        total_err += l.err + r.err - worst.err;
        heap.push(ByError(l));
        heap.push(ByError(r));
        if subdivisions % 256 == 0 {
            // refresh the running sum against drift
            total_err = heap.iter().map(|p| p.0.err).sum::<f64>()
                + frozen.iter().map(|p| p.err).sum::<f64>();
        }
    }

    let est = sum_of(&heap, &frozen);
    if !est.value.is_finite() {
        return Err(Error::IntegrationFailure {
            estimate: est.value,
            error_bound: f64::INFINITY,
        });
    }
    Ok(est)
}

/// Integrates a nonnegative, eventually decaying `f` over `[a, ∞)`.
///
/// The range `[a, first_upper]` is integrated first; afterwards segments
/// `[T, g·T]` are added until one contributes less than `tail_tol`. When
/// `tail` returns an estimate of `∫_T^∞ f` whose error is below `tail_tol`,
/// it is used instead of further segments. Segments whose contributions
/// stop decreasing raise [`Error::TailNotIntegrable`].
pub fn integrate_to_infinity<F, T>(
    f: F,
    a: f64,
    first_upper: f64,
    breakpoints: &[f64],
    tail: T,
    config: &QuadratureConfig,
) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
    T: Fn(f64) -> Option<Estimate>,
{
    let mut upper = first_upper.max(a);
    if upper <= a {
        upper = if a > 0.0 { a * config.truncation_growth } else { 1.0 };
    }
    let mut total = integrate(&f, a, upper, breakpoints, config.abs_tol, config.max_subdivisions)?;

    let mut prev: Option<f64> = None;
    let mut prev_ratio: Option<f64> = None;
    let mut stalled = 0usize;
    for _ in 0..4096 {
        if let Some(rem) = tail(upper) {
            if rem.error <= config.tail_tol && rem.value.is_finite() {
                return Ok(total + rem);
            }
        }
        let next = upper * config.truncation_growth;
        if !next.is_finite() {
            break;
        }
        let seg = integrate(&f, upper, next, breakpoints, config.abs_tol, config.max_subdivisions)
            .map_err(|e| match e {
                Error::IntegrationFailure { estimate, error_bound } => Error::IntegrationFailure {
                    estimate: total.value + estimate,
                    error_bound: total.error + error_bound,
                },
                other => other,
            })?;
        total = total + seg;
        let c = seg.value.abs();
        if c < config.tail_tol {
            total.error += c;
            return Ok(total);
        }
        if let Some(p) = prev {
            let ratio = c / p;
            if ratio >= 1.0 - 1e-3 {
                stalled += 1;
                if stalled >= 10 {
                    return Err(Error::TailNotIntegrable {
                        estimate: total.value,
                        upper: next,
                    });
                }
            } else {
                stalled = 0;
            }
            if let Some(pr) = prev_ratio {
                // power-law tails give a constant ratio between segments
                if ratio < 1.0 && pr < 1.0 && (ratio - pr).abs() <= 0.05 * ratio {
                    let r = ratio.max(pr);
                    let rem = c * r / (1.0 - r);
                    if rem < config.tail_tol {
                        total.value += rem;
                        total.error += rem;
                        return Ok(total);
                    }
                }
            }
            prev_ratio = Some(ratio);
        }
        prev = Some(c);
        upper = next;
    }
    Err(Error::TailNotIntegrable {
        estimate: total.value,
        upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x * x * x - 2.0 * x, 0.0, 3.0, &[], 1e-12, 100).unwrap();
        assert!((r.value - (81.0 / 4.0 - 9.0)).abs() < 1e-12);
    }

    #[test]
    fn kink_at_breakpoint() {
        let f = |x: f64| (x - 0.3).abs();
        let r = integrate(f, 0.0, 1.0, &[0.3], 1e-12, 100).unwrap();
        let exact = 0.3 * 0.3 / 2.0 + 0.7 * 0.7 / 2.0;
        assert!((r.value - exact).abs() < 1e-14);
    }

    #[test]
    fn smooth_transcendental() {
        let r = integrate(f64::sin, 0.0, std::f64::consts::PI, &[], 1e-11, 10_000).unwrap();
        assert!((r.value - 2.0).abs() < 1e-11);
    }

    #[test]
    fn reversed_limits_negate() {
        let r = integrate(|x| x, 1.0, 0.0, &[], 1e-12, 10).unwrap();
        assert!((r.value + 0.5).abs() < 1e-15);
    }

    #[test]
    fn subdivision_budget_exhaustion_reports_failure() {
        let err = integrate(|x| (1.0 / x).sin(), 1e-6, 1.0, &[], 1e-14, 5).unwrap_err();
        assert!(matches!(err, Error::IntegrationFailure { .. }));
    }

    #[test]
    fn exponential_tail() {
        let cfg = QuadratureConfig::default();
        let r = integrate_to_infinity(|t| (-t).exp(), 0.0, 1.0, &[], |_| None, &cfg).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn power_tail_with_extrapolation() {
        let cfg = QuadratureConfig::default();
        let r = integrate_to_infinity(|t| t.powf(-1.5), 1.0, 2.0, &[], |_| None, &cfg).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8, "{r:?}");
    }

    #[test]
    fn analytic_tail_short_circuits() {
        let cfg = QuadratureConfig::default();
        let r = integrate_to_infinity(
            |t| t.powf(-2.0),
            1.0,
            4.0,
            &[],
            |t| Some(Estimate::exact(1.0 / t)),
            &cfg,
        )
        .unwrap();
        assert!((r.value - 1.0).abs() < 1e-11);
    }

    #[test]
    fn harmonic_tail_stalls() {
        let cfg = QuadratureConfig::default();
        let err = integrate_to_infinity(|t| 1.0 / t, 1.0, 2.0, &[], |_| None, &cfg).unwrap_err();
        assert!(matches!(err, Error::TailNotIntegrable { .. }));
    }
}
