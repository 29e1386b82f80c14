//! Recovering distribution functions from F-norms.
//!
//! The right-derivative of `t ↦ ‖(t, 1/x1, …, 1/xd)‖F` at `t = 1` is
//! `F(x1, …, xd)`. The same idea classifies bivariate norms: a norm on `R²`
//! is an F-norm iff it is radially symmetric, takes the value 1 at `(1, 0)`,
//! and the derivative of `t ↦ ‖(t, 1)‖` is a df on `[0, ∞)` whose first
//! moment equals `‖(0, 1)‖`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fnorm::FNorm;

/// Forward-difference steps, largest first.
pub const INVERSION_STEPS: [f64; 3] = [1e-3, 1e-4, 1e-5];

/// The right-derivative estimate together with the quotients it came from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Inversion {
    pub value: f64,
    pub quotients: Vec<f64>,
}

/// Forward difference quotients of `g` at `t` for [`INVERSION_STEPS`], their
/// Richardson extrapolation from the two smallest steps, and the largest
/// increase of the quotients as the step shrinks.
fn right_derivative<G: Fn(f64) -> Result<f64>>(g: &G, t: f64) -> Result<(f64, Vec<f64>, f64)> {
    let g0 = g(t)?;
    let mut q = Vec::with_capacity(INVERSION_STEPS.len());
    for h in INVERSION_STEPS {
        q.push((g(t + h)? - g0) / h);
    }
    let increase = q.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let n = q.len();
    // forward differences carry an O(h) error; the steps differ by a factor 10
    let rich = (10.0 * q[n - 1] - q[n - 2]) / 9.0;
    Ok((rich, q, increase))
}

/// `F(x)` as the right-derivative at 1 of `t ↦ ‖(t, 1/x)‖`, clamped to `[0, 1]`.
pub fn invert_to_cdf(handle: &FNorm, x: &[f64]) -> Result<f64> {
    Ok(invert_to_cdf_detailed(handle, x)?.value)
}

pub fn invert_to_cdf_detailed(handle: &FNorm, x: &[f64]) -> Result<Inversion> {
    if x.len() != handle.dim() {
        return Err(Error::DimensionMismatch {
            expected: handle.dim(),
            found: x.len(),
        });
    }
    if x.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Domain(format!("inversion needs a strictly positive point, got {x:?}")));
    }
    let inv: Vec<f64> = x.iter().map(|v| 1.0 / v).collect();
    let point = |t: f64| {
        let mut p = Vec::with_capacity(inv.len() + 1);
        p.push(t);
        p.extend_from_slice(&inv);
        p
    };
    let base = handle.eval_detailed(&point(1.0))?;
    let g = |t: f64| handle.eval(&point(t));
    let (rich, quotients, increase) = right_derivative(&g, 1.0)?;
    // a convex g has quotients nonincreasing in h; allow for rounding and
    // for the evaluation error of numeric handles
    let h_min = INVERSION_STEPS[INVERSION_STEPS.len() - 1];
    let tol = 1e-8 * base.value.abs().max(1.0) + 4.0 * base.error / h_min;
    if increase > tol {
        return Err(Error::NotConvex { quotients });
    }
    Ok(Inversion {
        value: rich.clamp(0.0, 1.0),
        quotients,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassifyConfig {
    /// Points of the recovered-cdf grid on `[0, T]`.
    pub grid_count: usize,
    /// Tolerance for the pointwise checks.
    pub tol: f64,
    /// `T` grows until the derivative exceeds `1 - limit_gap`.
    pub limit_gap: f64,
    /// Largest `T` considered.
    pub max_upper: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            grid_count: 201,
            tol: 1e-6,
            limit_gap: 1e-3,
            max_upper: 1e8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub is_fnorm: bool,
    pub value_at_unit: f64,
    pub radial_symmetry_violation: f64,
    pub homogeneity_violation: f64,
    pub derivative_nonnegative: bool,
    pub derivative_monotone: bool,
    pub derivative_bounded_by_one: bool,
    pub derivative_limit: f64,
    /// `‖(0, 1)‖`.
    pub value_at_0_1: f64,
    /// `∫ (1 - F)`, read off as `‖(0, 1)‖ - lim (‖(T, 1)‖ - T)`.
    pub first_moment: f64,
    pub mean_matches: bool,
    pub upper: f64,
    pub recovered_cdf: Vec<(f64, f64)>,
    pub reasons: Vec<String>,
}

/// Classifies a norm on `R²` given as a black box.
pub fn classify_2d<N: Fn(f64, f64) -> f64>(norm: N, config: &ClassifyConfig) -> ClassificationReport {
    let tol = config.tol;
    let mut reasons = Vec::new();

    let unit = norm(1.0, 0.0);
    if (unit - 1.0).abs() > tol {
        reasons.push(format!("value at (1,0) is {unit}, not 1"));
    }

    let probes = [(0.3, 1.7), (2.0, 0.5), (1.0, 1.0), (0.0, 2.5), (4.0, 0.0), (0.8, 3.1)];
    let mut radial: f64 = 0.0;
    let mut homog: f64 = 0.0;
    for &(a, b) in &probes {
        let v = norm(a, b);
        for (sa, sb) in [(-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
            radial = radial.max((norm(sa * a, sb * b) - v).abs());
        }
        for l in [0.25, 3.0] {
            homog = homog.max((norm(l * a, l * b) - l * v).abs());
        }
    }
    if radial > tol {
        reasons.push(format!("not radially symmetric (deviation {radial:e})"));
    }
    if homog > tol {
        reasons.push(format!("not absolutely homogeneous (deviation {homog:e})"));
    }

    let g = |t: f64| Ok(norm(t, 1.0));
    let deriv = |t: f64| right_derivative(&g, t).map_or(f64::NAN, |r| r.0);

    // grow T until the derivative is within limit_gap of one
    let mut upper: f64 = 1.0;
    let mut d_upper = deriv(upper);
    while d_upper <= 1.0 - config.limit_gap && upper < config.max_upper {
        upper *= 2.0;
        d_upper = deriv(upper);
    }
    let n = config.grid_count.max(2);
    let recovered: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let t = upper * k as f64 / (n - 1) as f64;
            (t, deriv(t))
        })
        .collect();
    let nonneg = recovered.iter().all(|(_, f)| *f >= -tol);
    let monotone = recovered.windows(2).all(|w| w[1].1 >= w[0].1 - tol);
    let bounded = recovered.iter().all(|(_, f)| *f <= 1.0 + tol);
    if !nonneg {
        reasons.push("derivative of t -> ||(t,1)|| takes negative values".into());
    }
    if !monotone {
        reasons.push("derivative of t -> ||(t,1)|| is not monotone".into());
    }
    if !bounded {
        reasons.push("derivative of t -> ||(t,1)|| exceeds 1".into());
    }
    if (d_upper - 1.0).abs() > config.limit_gap {
        reasons.push(format!(
            "derivative tends to {d_upper} instead of 1 (mass escapes to infinity)"
        ));
    }

    // ∫_0^∞ (1 - F) = ‖(0,1)‖ - lim_{T→∞} (‖(T,1)‖ - T)
    let v01 = norm(0.0, 1.0);
    let mut rs = Vec::new();
    let mut t = upper.max(1.0);
    while t <= config.max_upper {
        rs.push(norm(t, 1.0) - t);
        t *= 10.0;
    }
    let limit = extrapolated_limit(&rs);
    let first_moment = v01 - limit;
    let scale = v01.abs().max(1.0);
    let mean_matches = limit.abs() <= tol * scale && first_moment > tol * scale;
    if !mean_matches {
        reasons.push(format!(
            "derivative does not define a df with strictly positive first moment equal to ||(0,1)|| = {v01} (first moment {first_moment})"
        ));
    }

    ClassificationReport {
        is_fnorm: reasons.is_empty(),
        value_at_unit: unit,
        radial_symmetry_violation: radial,
        homogeneity_violation: homog,
        derivative_nonnegative: nonneg,
        derivative_monotone: monotone,
        derivative_bounded_by_one: bounded,
        derivative_limit: d_upper,
        value_at_0_1: v01,
        first_moment,
        mean_matches,
        upper,
        recovered_cdf: recovered,
        reasons,
    }
}

/// Limit of a sequence sampled at geometrically growing arguments, by
/// Aitken's Δ² on the last three terms when they decay geometrically.
fn extrapolated_limit(r: &[f64]) -> f64 {
    let n = r.len();
    if n < 3 {
        return r.last().copied().unwrap_or(0.0);
    }
    let (a, b, c) = (r[n - 3], r[n - 2], r[n - 1]);
    let den = c - 2.0 * b + a;
    let scale = a.abs().max(b.abs()).max(c.abs());
    if den.abs() <= 1e-12 * scale.max(1e-300) || (c - b) * (b - a) <= 0.0 {
        return c;
    }
    let l = c - (c - b) * (c - b) / den;
    // the tail remainder is monotone, so the limit cannot overshoot past zero by more than the last term
    if l.abs() > scale {
        c
    } else {
        l
    }
}

/// Fitted extremal coefficient and the fit diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtremalFit {
    /// Estimate clamped to `[1, d]`.
    pub theta: f64,
    pub raw_theta: f64,
    /// Coefficient of the cubic nuisance term.
    pub cubic: f64,
    pub residual_rms: f64,
    pub x_lo: f64,
    pub grid_count: usize,
}

/// Residual level below which the fit window is considered degenerate.
pub const EXTREMAL_RESIDUAL_FLOOR: f64 = 1e-10;

/// Extremal coefficient `‖1‖D` of the D-norm of a copula, from the
/// second-order expansion of `r(x) = ‖(x, 1, …, 1)‖ - x = θ (1-x)²/2 + O((1-x)³)`
/// near `x = 1`. The cubic term is fitted jointly to remove its bias.
pub fn extremal_coefficient(handle: &FNorm, x_lo: f64, grid_count: usize) -> Result<ExtremalFit> {
    if !(x_lo > 0.0 && x_lo < 1.0) {
        return Err(Error::Domain(format!("window start must lie in (0,1), got {x_lo}")));
    }
    if grid_count < 3 {
        return Err(Error::Domain("extremal fit needs at least three grid points".into()));
    }
    let d = handle.dim();
    let mut p = vec![1.0; d + 1];
    // normal equations for r = θ s²/2 + β s³
    let (mut saa, mut sab, mut sbb, mut sar, mut sbr) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut pts = Vec::with_capacity(grid_count);
    let mut rmax: f64 = 0.0;
    for k in 0..grid_count {
        let x = x_lo + (1.0 - x_lo) * k as f64 / grid_count as f64;
        p[0] = x;
        let r = handle.eval(&p)? - x;
        let s = 1.0 - x;
        let (fa, fb) = (s * s / 2.0, s * s * s);
        saa += fa * fa;
        sab += fa * fb;
        sbb += fb * fb;
        sar += fa * r;
        sbr += fb * r;
        rmax = rmax.max(r.abs());
        pts.push((fa, fb, r));
    }
    if rmax <= EXTREMAL_RESIDUAL_FLOOR {
        return Err(Error::WidenWindow {
            x_lo,
            tolerance: EXTREMAL_RESIDUAL_FLOOR,
        });
    }
    let det = saa * sbb - sab * sab;
    let (theta, beta) = if det.abs() > 1e-300 {
        ((sar * sbb - sab * sbr) / det, (saa * sbr - sab * sar) / det)
    } else {
        (sar / saa, 0.0)
    };
    let rss: f64 = pts.iter().map(|(fa, fb, r)| (r - theta * fa - beta * fb).powi(2)).sum();
    Ok(ExtremalFit {
        theta: theta.clamp(1.0, d as f64),
        raw_theta: theta,
        cubic: beta,
        residual_rms: (rss / pts.len() as f64).sqrt(),
        x_lo,
        grid_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{CopulaFamily, DistributionSpec};
    use crate::quadrature::QuadratureConfig;

    fn closed(spec: DistributionSpec) -> FNorm {
        FNorm::closed_form(spec).unwrap()
    }

    #[test]
    fn inversion_examples() {
        let u = closed(DistributionSpec::Uniform01);
        assert!((invert_to_cdf(&u, &[0.5]).unwrap() - 0.5).abs() < 1e-6);
        let e = closed(DistributionSpec::exponential(1.0).unwrap());
        assert!((invert_to_cdf(&e, &[1.0]).unwrap() - (1.0 - (-1.0f64).exp())).abs() < 1e-6);
        let d = closed(DistributionSpec::degenerate(vec![2.0]).unwrap());
        assert_eq!(invert_to_cdf(&d, &[1.0]).unwrap(), 0.0);
    }

    #[test]
    fn concave_input_is_rejected() {
        // a concave section cannot come from an F-norm
        let h = closed(DistributionSpec::Uniform01);
        let g = |t: f64| Ok(h.eval(&[t, 2.0]).unwrap() - 10.0 * (t - 1.0).powi(2));
        let (_, q, inc) = right_derivative(&g, 1.0).unwrap();
        assert!(inc > 0.0, "{q:?}");
    }

    #[test]
    fn l2_is_an_fnorm() {
        let r = classify_2d(|a: f64, b: f64| a.hypot(b), &ClassifyConfig::default());
        assert!(r.is_fnorm, "{:?}", r.reasons);
        for (t, f) in &r.recovered_cdf {
            assert!((f - t / (1.0 + t * t).sqrt()).abs() < 1e-6);
        }
    }

    #[test]
    fn l1_and_double_sup_are_not() {
        let r = classify_2d(|a: f64, b: f64| a.abs() + b.abs(), &ClassifyConfig::default());
        assert!(!r.is_fnorm);
        assert!(!r.mean_matches);
        let r = classify_2d(|a: f64, b: f64| 2.0 * a.abs().max(b.abs()), &ClassifyConfig::default());
        assert!(!r.is_fnorm);
        assert!(r.reasons[0].contains("(1,0) is 2"));
    }

    #[test]
    fn heavy_pareto_is_an_fnorm() {
        let h = closed(DistributionSpec::pareto(0.9).unwrap());
        let r = classify_2d(|a, b| h.eval(&[a, b]).unwrap(), &ClassifyConfig::default());
        assert!(r.is_fnorm, "{:?}", r.reasons);
    }

    #[test]
    fn comonotone_extremal_coefficient() {
        let c = DistributionSpec::copula(CopulaFamily::Comonotone, 2).unwrap();
        let h = FNorm::quadrature(c, QuadratureConfig::default()).unwrap();
        let fit = extremal_coefficient(&h, 0.95, 20).unwrap();
        assert!((fit.theta - 1.0).abs() < 1e-6, "{fit:?}");
    }

    #[test]
    fn flat_remainder_needs_wider_window() {
        // max(x, 0.5, 0.5) = x on the whole window
        let h = closed(DistributionSpec::degenerate(vec![0.5, 0.5]).unwrap());
        assert!(matches!(
            extremal_coefficient(&h, 0.95, 20),
            Err(Error::WidenWindow { .. })
        ));
    }
}
