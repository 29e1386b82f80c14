//! Empirical F-norms, uniform consistency, and the one-dimensional central
//! limit theorem with its Brownian-bridge representation.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{seeded_rng, substream_seed, DistributionSpec, SampleMatrix};
use crate::error::{Error, Result};
use crate::fnorm::{mean_of_maxima, FNorm};
use crate::quadrature::{integrate, integrate_to_infinity, Estimate, QuadratureConfig};

/// Default number of bridge increments.
pub const DEFAULT_BRIDGE_STEPS: usize = 1 << 14;

/// `(1/n) Σ max(|x0|, |x1| X1(i), …, |xd| Xd(i))`.
pub fn empirical_eval(sample: &SampleMatrix, x: &[f64]) -> Result<f64> {
    if x.len() != sample.d() + 1 {
        return Err(Error::DimensionMismatch {
            expected: sample.d() + 1,
            found: x.len(),
        });
    }
    let ax: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    Ok(mean_of_maxima(sample, ax[0], &ax[1..]).0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupDeviation {
    /// Largest deviation at the grid points.
    pub grid_max: f64,
    /// Bound on the deviation anywhere in the box, from monotonicity of both
    /// norms on each grid cell.
    pub box_bound: f64,
    pub grid_count: usize,
}

/// Sup over the box `[0, x_max]` of `|‖x‖F̂n - ‖x‖F|` on a regular grid with
/// `grid_count` points per axis.
pub fn sup_deviation(sample: &SampleMatrix, handle: &FNorm, x_max: &[f64], grid_count: usize) -> Result<SupDeviation> {
    let dim = sample.d() + 1;
    if handle.dim() != sample.d() || x_max.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: x_max.len(),
        });
    }
    if x_max.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::Domain("box corner must be nonnegative and finite".into()));
    }
    let g = grid_count.max(1);
    let total = g.pow(dim as u32);
    let coord = |idx: usize| -> Vec<f64> {
        let mut rem = idx;
        (0..dim)
            .map(|j| {
                let k = rem % g;
                rem /= g;
                if g == 1 {
                    x_max[j]
                } else {
                    x_max[j] * k as f64 / (g - 1) as f64
                }
            })
            .collect()
    };
    let values: Vec<(f64, f64)> = (0..total)
        .into_par_iter()
        .map(|i| {
            let x = coord(i);
            let e = mean_of_maxima(sample, x[0], &x[1..]).0;
            handle.eval(&x).map(|t| (e, t))
        })
        .collect::<Result<_>>()?;
    let grid_max = values.iter().map(|(e, t)| (e - t).abs()).fold(0.0, f64::max);
    let mut box_bound = grid_max;
    if g > 1 {
        let stride: Vec<usize> = (0..dim).map(|j| g.pow(j as u32)).collect();
        for i in 0..total {
            // lower corners only
            let mut rem = i;
            let mut upper = i;
            let mut interior = true;
            for s in &stride {
                if rem % g == g - 1 {
                    interior = false;
                    break;
                }
                rem /= g;
                upper += s;
            }
            if !interior {
                continue;
            }
            let (el, tl) = values[i];
            let (eu, tu) = values[upper];
            box_bound = box_bound.max((eu - tl).max(tu - el));
        }
    }
    Ok(SupDeviation {
        grid_max,
        box_bound,
        grid_count: g,
    })
}

/// `∫_s^∞ (1 - F(u)) du` for a one-dimensional law.
pub(crate) fn tail_integral(spec: &DistributionSpec, s: f64, config: &QuadratureConfig) -> Result<Estimate> {
    if let Some((v, e)) = spec.tail_remainder(s) {
        return Ok(Estimate { value: v, error: e });
    }
    let mut breaks = spec.breakpoints(&[1.0]);
    if let Some(top) = spec.upper_support() {
        breaks.push(top);
    }
    breaks.retain(|b| *b > s);
    breaks.sort_by(f64::total_cmp);
    let mean = spec.marginal_mean(0)?;
    let first = breaks.last().copied().unwrap_or(0.0).max(s + 4.0 * mean).max(2.0 * s);
    integrate_to_infinity(
        |u| spec.survival1(u),
        s,
        first,
        &breaks,
        |t| spec.tail_remainder(t).map(|(v, e)| Estimate { value: v, error: e }),
        config,
    )
}

fn require_1d_finite_variance(spec: &DistributionSpec) -> Result<()> {
    if spec.dim() != 1 {
        return Err(Error::Domain("the covariance formula is one-dimensional".into()));
    }
    match spec.variance()? {
        Some(_) => Ok(()),
        None => Err(Error::Domain(format!("{} has infinite variance", spec.label()))),
    }
}

/// Covariance of the limit process at `(x1, y1)` and `(x2, y2)`:
/// `x1 x2 ∬_{[1,∞)²} [F(min(a u, b v)) - F(a u) F(b v)] du dv` with
/// `a = x1/y1`, `b = x2/y2`; zero when either `y` vanishes.
pub fn clt_covariance(spec: &DistributionSpec, p1: (f64, f64), p2: (f64, f64), config: &QuadratureConfig) -> Result<f64> {
    require_1d_finite_variance(spec)?;
    let ((x1, y1), (x2, y2)) = (p1, p2);
    if [x1, y1, x2, y2].iter().any(|v| !v.is_finite()) || x1 <= 0.0 || x2 <= 0.0 || y1 < 0.0 || y2 < 0.0 {
        return Err(Error::Domain("covariance needs x > 0 and y ≥ 0".into()));
    }
    if y1 == 0.0 || y2 == 0.0 {
        return Ok(0.0);
    }
    let a = x1 / y1;
    let b = x2 / y2;
    let marg = spec.marginal(0)?;
    let cdf = |t: f64| 1.0 - marg.survival1(t);
    let r_b = tail_integral(&marg, b, config)?.value;
    let failure = std::cell::RefCell::new(None);
    // inner integral over v, split at v = a u / b
    let inner = |u: f64| -> f64 {
        let fa = cdf(a * u);
        let v = (a * u / b).max(1.0);
        match tail_integral(&marg, b * v, config) {
            Ok(r_bv) => {
                let below = (v - 1.0) - (r_b - r_bv.value) / b;
                (1.0 - fa) * below + fa * r_bv.value / b
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let mut breaks: Vec<f64> = marg.breakpoints(&[1.0]).iter().map(|t| t / a).collect();
    breaks.push(b / a);
    if let Some(top) = marg.upper_support() {
        breaks.push(top / a);
    }
    breaks.retain(|u| *u > 1.0 && u.is_finite());
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let first = breaks.last().copied().unwrap_or(1.0).max(2.0) * 2.0;
    let r = integrate_to_infinity(inner, 1.0, first, &breaks, |_| None, config);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(x1 * x2 * r?.value)
}

/// Covariance of `max(x0, x·X)` and `max(y0, y·X)` for a d-dimensional law
/// with a joint cdf, by nested quadrature of
/// `∬ [F(min(t/x, s/y)) - F(t/x) F(s/y)] dt ds` over `[x0,∞)×[y0,∞)`.
/// Experimental: validated only for symmetry and against the d = 1 formula.
pub fn clt_covariance_multi(spec: &DistributionSpec, p: &[f64], q: &[f64], config: &QuadratureConfig) -> Result<f64> {
    let d = spec.dim();
    if p.len() != d + 1 || q.len() != d + 1 {
        return Err(Error::DimensionMismatch {
            expected: d + 1,
            found: p.len().min(q.len()),
        });
    }
    let p: Vec<f64> = p.iter().map(|v| v.abs()).collect();
    let q: Vec<f64> = q.iter().map(|v| v.abs()).collect();
    // joint cdf of (max p_i X_i, max q_i X_i) at (t, s)
    let joint = |t: f64, s: f64| -> Result<f64> {
        let z: Vec<f64> = (0..d)
            .map(|i| {
                let u = if p[i + 1] > 0.0 { t / p[i + 1] } else { f64::INFINITY };
                let v = if q[i + 1] > 0.0 { s / q[i + 1] } else { f64::INFINITY };
                u.min(v).min(1e300)
            })
            .collect();
        spec.cdf(&z)
    };
    let f1 = |t: f64| spec.scaled_max_cdf(&p[1..], t);
    let f2 = |s: f64| spec.scaled_max_cdf(&q[1..], s);
    f1(p[0])?;
    joint(p[0], q[0])?;
    let means = spec.marginal_means()?;
    let scale_p = p[1..].iter().zip(&means).map(|(a, m)| a * m).fold(p[0], f64::max);
    let scale_q = q[1..].iter().zip(&means).map(|(a, m)| a * m).fold(q[0], f64::max);
    let failure = std::cell::RefCell::new(None);
    let outer = |t: f64| -> f64 {
        let ft = f1(t).unwrap_or(f64::NAN);
        let inner = |s: f64| joint(t, s).unwrap_or(f64::NAN) - ft * f2(s).unwrap_or(f64::NAN);
        match integrate_to_infinity(inner, q[0], 4.0 * scale_q.max(q[0] * 2.0).max(1e-3), &[], |_| None, config) {
            Ok(e) => e.value,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let r = integrate_to_infinity(outer, p[0], 4.0 * scale_p.max(p[0] * 2.0).max(1e-3), &[], |_| None, config);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(r?.value)
}

/// Variance over `replications` seeded samples of size `n` of
/// `√n (‖x‖F̂n - ‖x‖F)`, with `‖x‖F` supplied by `handle`.
pub fn scaled_deviation_variance(
    spec: &DistributionSpec,
    handle: &FNorm,
    x: &[f64],
    n: usize,
    replications: usize,
    seed: u64,
) -> Result<f64> {
    if replications < 2 {
        return Err(Error::Domain("need at least two replications".into()));
    }
    let truth = handle.eval(x)?;
    let devs: Vec<f64> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let s = spec.sample(n, &mut seeded_rng(substream_seed(seed, r as u64)))?;
            Ok((n as f64).sqrt() * (empirical_eval(&s, x)? - truth))
        })
        .collect::<Result<_>>()?;
    let m = devs.iter().sum::<f64>() / replications as f64;
    Ok(devs.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (replications - 1) as f64)
}

/// One realization of the limit process on a grid of points `(x, y)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitProcessPath {
    pub grid: Vec<(f64, f64)>,
    pub values: Vec<f64>,
}

/// Piecewise description of `u ↦ F(u)` used to integrate `W ∘ F`.
struct BridgeLayout {
    /// Abscissae `u_k` and the cdf values `F(u_k)`.
    knots: Vec<(f64, f64)>,
    /// Whether `F` is constant between knots (atoms) or continuous.
    atomic: bool,
    /// `∫_{u_last}^∞ (1 - F) / (1 - F(u_last))` for the final unbounded cell.
    tail_weight: f64,
}

fn bridge_layout(spec: &DistributionSpec, m: usize, config: &QuadratureConfig) -> Result<BridgeLayout> {
    use DistributionSpec as D;
    let marg = spec.marginal(0)?;
    match &marg {
        D::Degenerate { .. } | D::Bernoulli { .. } | D::Empirical { .. } => {
            let mut atoms: Vec<f64> = match &marg {
                D::Degenerate { c } => vec![c[0]],
                D::Bernoulli { .. } => vec![0.0, 1.0],
                D::Empirical { sample, .. } => sample.as_flat().to_vec(),
                _ => unreachable!(),
            };
            atoms.sort_by(f64::total_cmp);
            atoms.dedup();
            let knots = atoms.iter().map(|&u| (u, 1.0 - marg.survival1(u))).collect();
            Ok(BridgeLayout {
                knots,
                atomic: true,
                tail_weight: 0.0,
            })
        }
        _ => {
            let top = marg.upper_support();
            let mut knots = Vec::with_capacity(m + 1);
            for k in 0..m {
                let p = k as f64 / m as f64;
                knots.push((marg.quantile_unchecked(p), p));
            }
            let tail_weight = match top {
                Some(t) => {
                    knots.push((t, 1.0));
                    0.0
                }
                None => {
                    let (u, p) = knots[m - 1];
                    tail_integral(&marg, u, config)?.value / (1.0 - p)
                }
            };
            Ok(BridgeLayout {
                knots,
                atomic: false,
                tail_weight,
            })
        }
    }
}

/// Checks that `∫ √(F(1-F)) < ∞`, which the bridge representation requires.
pub fn bridge_precondition(spec: &DistributionSpec, config: &QuadratureConfig) -> Result<f64> {
    if spec.dim() != 1 {
        return Err(Error::Domain("the limit process is one-dimensional".into()));
    }
    let marg = spec.marginal(0)?;
    let f = |u: f64| {
        let s = marg.survival1(u);
        ((1.0 - s) * s).max(0.0).sqrt()
    };
    let mut breaks = marg.breakpoints(&[1.0]);
    if let Some(top) = marg.upper_support() {
        breaks.push(top);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
    }
    let first = breaks.last().copied().unwrap_or(1.0).max(4.0 * marg.marginal_mean(0)?);
    match integrate_to_infinity(f, 0.0, first, &breaks, |_| None, config) {
        Ok(e) => Ok(e.value),
        Err(Error::TailNotIntegrable { .. }) => Err(Error::BridgeRepresentationUnavailable(format!(
            "∫ √(F(1-F)) diverges numerically for {}",
            marg.label()
        ))),
        Err(e) => Err(e),
    }
}

fn validate_grid(grid: &[(f64, f64)]) -> Result<()> {
    if grid.iter().any(|(x, y)| !(*x > 0.0 && x.is_finite() && *y >= 0.0 && y.is_finite())) {
        return Err(Error::Domain("limit-process grid points need x > 0 and y ≥ 0".into()));
    }
    Ok(())
}

/// Brownian bridge on `{k/m}` from `m` standard normal increments.
fn brownian_bridge<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<f64> {
    let sd = (1.0 / m as f64).sqrt();
    let mut w = Vec::with_capacity(m + 1);
    w.push(0.0);
    let mut acc = 0.0;
    for _ in 0..m {
        let z: f64 = rng.sample(StandardNormal);
        acc += sd * z;
        w.push(acc);
    }
    let end = acc;
    for (k, v) in w.iter_mut().enumerate() {
        *v -= k as f64 / m as f64 * end;
    }
    w
}

fn bridge_at(w: &[f64], p: f64) -> f64 {
    let m = w.len() - 1;
    let pos = (p.clamp(0.0, 1.0) * m as f64).min(m as f64);
    let k = (pos.floor() as usize).min(m - 1);
    let frac = pos - k as f64;
    w[k] * (1.0 - frac) + w[k + 1] * frac
}

/// For grid points beyond the last knot of an unbounded law,
/// `∫_c^∞ (1 - F) / (1 - F(u_last))`, so that `W ∘ F`, linear in `F` on the
/// last cell, integrates to `W(F(u_last))` times this weight.
fn beyond_weights(spec: &DistributionSpec, layout: &BridgeLayout, grid: &[(f64, f64)], config: &QuadratureConfig) -> Result<Vec<f64>> {
    let (u_last, p_last) = layout.knots[layout.knots.len() - 1];
    let marg = spec.marginal(0)?;
    grid.iter()
        .map(|&(x, y)| {
            if layout.atomic || y == 0.0 || p_last >= 1.0 || x / y < u_last {
                Ok(0.0)
            } else {
                Ok(tail_integral(&marg, x / y, config)?.value / (1.0 - p_last))
            }
        })
        .collect()
}

fn path_values(layout: &BridgeLayout, w: &[f64], grid: &[(f64, f64)], beyond: &[f64]) -> Vec<f64> {
    let knots = &layout.knots;
    let n = knots.len();
    let wk: Vec<f64> = knots.iter().map(|(_, p)| bridge_at(w, *p)).collect();
    // cumulative integrals from the right: tail[k] = ∫_{u_k}^∞ W(F(u)) du
    let mut tail = vec![0.0; n];
    tail[n - 1] = if layout.atomic { 0.0 } else { wk[n - 1] * layout.tail_weight };
    for k in (0..n - 1).rev() {
        let du = knots[k + 1].0 - knots[k].0;
        let cell = if layout.atomic { wk[k] * du } else { 0.5 * (wk[k] + wk[k + 1]) * du };
        tail[k] = tail[k + 1] + cell;
    }
    grid.iter()
        .zip(beyond)
        .map(|(&(x, y), &bw)| {
            if y == 0.0 {
                return 0.0;
            }
            let c = x / y;
            let j = knots.partition_point(|(u, _)| *u <= c);
            let integral = if j == 0 {
                // below the support W(F) vanishes
                tail[0]
            } else if j == n {
                wk[n - 1] * bw
            } else {
                let (u0, _) = knots[j - 1];
                let (u1, _) = knots[j];
                if layout.atomic {
                    tail[j] + wk[j - 1] * (u1 - c)
                } else {
                    let t = (c - u0) / (u1 - u0);
                    let wc = wk[j - 1] * (1.0 - t) + wk[j] * t;
                    tail[j] + 0.5 * (wc + wk[j]) * (u1 - c)
                }
            };
            y * integral
        })
        .collect()
}

/// Simulates one path of `S(x, y) = y ∫_{x/y}^∞ W(F(u)) du` at the grid points.
pub fn simulate_limit_path<R: Rng + ?Sized>(
    spec: &DistributionSpec,
    grid: &[(f64, f64)],
    m: usize,
    rng: &mut R,
    config: &QuadratureConfig,
) -> Result<LimitProcessPath> {
    validate_grid(grid)?;
    bridge_precondition(spec, config)?;
    let layout = bridge_layout(spec, m.max(2), config)?;
    let beyond = beyond_weights(spec, &layout, grid, config)?;
    let w = brownian_bridge(m.max(2), rng);
    Ok(LimitProcessPath {
        grid: grid.to_vec(),
        values: path_values(&layout, &w, grid, &beyond),
    })
}

/// `paths` independent realizations; path `k` uses the sub-stream `k` of `seed`.
pub fn simulate_limit_paths(
    spec: &DistributionSpec,
    grid: &[(f64, f64)],
    paths: usize,
    m: usize,
    seed: u64,
    config: &QuadratureConfig,
) -> Result<Vec<Vec<f64>>> {
    validate_grid(grid)?;
    bridge_precondition(spec, config)?;
    let m = m.max(2);
    let layout = bridge_layout(spec, m, config)?;
    let beyond = beyond_weights(spec, &layout, grid, config)?;
    Ok((0..paths)
        .into_par_iter()
        .map(|k| {
            let mut rng = seeded_rng(substream_seed(seed, k as u64));
            let w = brownian_bridge(m, &mut rng);
            path_values(&layout, &w, grid, &beyond)
        })
        .collect())
}

fn simplex_point(t: &[f64]) -> Result<Vec<f64>> {
    let s: f64 = t.iter().sum();
    if t.iter().any(|v| !(*v >= 0.0 && v.is_finite())) || s > 1.0 + 1e-12 {
        return Err(Error::Domain(format!("{t:?} is not in the unit simplex")));
    }
    let mut p = Vec::with_capacity(t.len() + 1);
    p.push((1.0 - s).max(0.0));
    p.extend_from_slice(t);
    Ok(p)
}

/// Pickands dependence function `A(t) = ‖(1 - Σ t_i, t_1, …, t_d)‖F`.
pub fn pickands(handle: &FNorm, t: &[f64]) -> Result<f64> {
    handle.eval(&simplex_point(t)?)
}

/// `(1/n) Σ max(t0, t1 X1(i), …, td Xd(i))` with `t0 = 1 - Σ t_i`.
pub fn empirical_pickands(sample: &SampleMatrix, t: &[f64]) -> Result<f64> {
    empirical_eval(sample, &simplex_point(t)?)
}

/// `Var(max(x, y X))` by direct quadrature of the first two moments.
pub fn max_variance_oracle(spec: &DistributionSpec, x: f64, y: f64, config: &QuadratureConfig) -> Result<f64> {
    let marg = spec.marginal(0)?;
    // E max = x + y ∫_{x/y}^∞ (1-F); E max² = x² + 2 y² ∫_{x/y}^∞ u (1-F(u)) du
    let c = x / y;
    let m1 = x + y * tail_integral(&marg, c, config)?.value;
    let top = marg.upper_support();
    let m2_int = match top {
        Some(t) if t <= c => 0.0,
        Some(t) => integrate(|u| u * marg.survival1(u), c, t, &marg.breakpoints(&[1.0]), config.abs_tol, config.max_subdivisions)?.value,
        None => integrate_to_infinity(|u| u * marg.survival1(u), c, 4.0 * c.max(1.0), &marg.breakpoints(&[1.0]), |_| None, config)?.value,
    };
    let m2 = x * x + 2.0 * y * y * m2_int;
    Ok(m2 - m1 * m1)
}
