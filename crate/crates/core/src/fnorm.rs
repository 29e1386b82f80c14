//! F-norm handles and their evaluation.
//!
//! `‖x‖F = E max(|x0|, |x1|X1, …, |xd|Xd)`, evaluated in closed form for the
//! catalog laws, by adaptive quadrature of
//! `|x0| + ∫_{|x0|}^∞ [1 - P(max |xi| Xi ≤ t)] dt`, by seeded Monte Carlo, or
//! exactly for an empirical sample.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::algebra::{self, ProductStrategy, SignedSpec};
use crate::distributions::{seeded_rng, DistributionSpec, SampleMatrix};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_to_infinity, Estimate, QuadratureConfig};
use crate::special::norm_cdf;

/// How a value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Closed,
    Quad,
    Mc,
    Empirical,
    Tonelli,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Closed => "closed",
            Method::Quad => "quad",
            Method::Mc => "mc",
            Method::Empirical => "empirical",
            Method::Tonelli => "tonelli",
        })
    }
}

/// A value with its error estimate (absolute error bound for quadrature,
/// standard error for Monte Carlo, zero for exact methods).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub value: f64,
    pub error: f64,
    pub method: Method,
}

#[derive(Clone, Debug)]
pub enum Source {
    ClosedForm(DistributionSpec),
    Quadrature {
        spec: DistributionSpec,
        config: QuadratureConfig,
    },
    MonteCarlo {
        spec: DistributionSpec,
        n: usize,
        seed: u64,
        sample: Arc<OnceLock<SampleMatrix>>,
    },
    Empirical(Arc<SampleMatrix>),
    Product {
        left: Box<FNorm>,
        right: Box<FNorm>,
        strategy: ProductStrategy,
    },
    LogTransform {
        signed: SignedSpec,
        inner: Box<FNorm>,
    },
}

/// An evaluable F-norm on `R^{d+1}`.
#[derive(Clone, Debug)]
pub struct FNorm {
    source: Source,
    dim: usize,
}

fn require_h(spec: &DistributionSpec) -> Result<()> {
    spec.validate_params()?;
    let report = spec.validate_h();
    if report.passed {
        Ok(())
    } else {
        let v = &report.violations[0];
        Err(Error::Domain(format!(
            "condition (H) violated at coordinate {}: {}",
            v.coordinate, v.reason
        )))
    }
}

/// True when [`FNorm::closed_form`] accepts the spec.
pub fn has_closed_form(spec: &DistributionSpec) -> bool {
    match spec {
        DistributionSpec::Degenerate { .. }
        | DistributionSpec::Bernoulli { .. }
        | DistributionSpec::Uniform01
        | DistributionSpec::Exponential { .. }
        | DistributionSpec::Pareto { .. }
        | DistributionSpec::Frechet { .. }
        | DistributionSpec::LogNormal { .. } => true,
        DistributionSpec::MultiNormalExp { mu, .. } => mu.len() == 1,
        DistributionSpec::Copula { dim, .. } => *dim == 1,
        DistributionSpec::IndependentProduct { components } => {
            components.len() == 1 && has_closed_form(&components[0])
        }
        DistributionSpec::Empirical { .. } => false,
    }
}

impl FNorm {
    pub fn closed_form(spec: DistributionSpec) -> Result<Self> {
        require_h(&spec)?;
        if !has_closed_form(&spec) {
            return Err(Error::ClosedFormUnavailable(format!("{} with d = {}", spec.label(), spec.dim())));
        }
        let dim = spec.dim();
        Ok(Self {
            source: Source::ClosedForm(spec),
            dim,
        })
    }

    pub fn quadrature(spec: DistributionSpec, config: QuadratureConfig) -> Result<Self> {
        require_h(&spec)?;
        config.validate()?;
        let dim = spec.dim();
        Ok(Self {
            source: Source::Quadrature { spec, config },
            dim,
        })
    }

    pub fn monte_carlo(spec: DistributionSpec, n: usize, seed: u64) -> Result<Self> {
        require_h(&spec)?;
        if n < 2 {
            return Err(Error::Domain("Monte Carlo needs at least two draws".into()));
        }
        let dim = spec.dim();
        Ok(Self {
            source: Source::MonteCarlo {
                spec,
                n,
                seed,
                sample: Arc::new(OnceLock::new()),
            },
            dim,
        })
    }

    pub fn empirical(sample: SampleMatrix) -> Result<Self> {
        let dim = sample.d();
        let spec = DistributionSpec::empirical(sample);
        require_h(&spec)?;
        let DistributionSpec::Empirical { sample, .. } = spec else {
            unreachable!()
        };
        Ok(Self {
            source: Source::Empirical(Arc::new(sample)),
            dim,
        })
    }

    /// The sup-norm on `R^{d+1}`, generated by the constant vector `(1, …, 1)`.
    pub fn sup_norm(d: usize) -> Self {
        Self {
            source: Source::ClosedForm(DistributionSpec::Degenerate { c: vec![1.0; d] }),
            dim: d,
        }
    }

    pub fn product(left: FNorm, right: FNorm, strategy: ProductStrategy) -> Result<Self> {
        if left.dim != right.dim {
            return Err(Error::DimensionMismatch {
                expected: left.dim,
                found: right.dim,
            });
        }
        let dim = left.dim;
        Ok(Self {
            source: Source::Product {
                left: Box::new(left),
                right: Box::new(right),
                strategy,
            },
            dim,
        })
    }

    /// Log F-norm of a signed vector `X`, that is the F-norm of `exp(X)`.
    /// `mc` supplies `(n, seed)` for laws without a cdf.
    pub fn log_transform(signed: SignedSpec, config: QuadratureConfig, mc: Option<(usize, u64)>) -> Result<Self> {
        let inner = Self::auto(signed.exp_spec()?, config, mc)?;
        let dim = inner.dim;
        Ok(Self {
            source: Source::LogTransform {
                signed,
                inner: Box::new(inner),
            },
            dim,
        })
    }

    /// Closed form when available, then exact empirical evaluation, then
    /// quadrature when the joint cdf exists, and Monte Carlo otherwise.
    pub fn auto(spec: DistributionSpec, config: QuadratureConfig, mc: Option<(usize, u64)>) -> Result<Self> {
        if has_closed_form(&spec) {
            return Self::closed_form(spec);
        }
        if let DistributionSpec::Empirical { sample, .. } = spec {
            return Self::empirical(sample);
        }
        let cdf_ok = match &spec {
            DistributionSpec::MultiNormalExp { cov, .. } => cov
                .iter()
                .enumerate()
                .all(|(i, r)| r.iter().enumerate().all(|(j, v)| i == j || *v == 0.0)),
            DistributionSpec::IndependentProduct { components } => components.iter().all(|c| match c {
                DistributionSpec::MultiNormalExp { cov, .. } => cov.len() == 1,
                _ => true,
            }),
            _ => true,
        };
        if cdf_ok {
            return Self::quadrature(spec, config);
        }
        match mc {
            Some((n, seed)) => Self::monte_carlo(spec, n, seed),
            None => Err(Error::CdfUnavailable(format!("{} (supply a seed for Monte Carlo)", spec.label()))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    /// The generating law, when the handle is backed by one.
    pub fn spec(&self) -> Option<DistributionSpec> {
        match &self.source {
            Source::ClosedForm(s) | Source::Quadrature { spec: s, .. } | Source::MonteCarlo { spec: s, .. } => {
                Some(s.clone())
            }
            Source::Empirical(sample) => Some(DistributionSpec::empirical((**sample).clone())),
            Source::LogTransform { inner, .. } => inner.spec(),
            Source::Product { .. } => None,
        }
    }

    /// Tag of the method used by [`FNorm::eval`].
    pub fn method(&self) -> Method {
        match &self.source {
            Source::ClosedForm(_) => Method::Closed,
            Source::Quadrature { .. } => Method::Quad,
            Source::MonteCarlo { .. } => Method::Mc,
            Source::Empirical(_) => Method::Empirical,
            Source::Product { strategy, .. } => match strategy {
                ProductStrategy::Tonelli(_) => Method::Tonelli,
                ProductStrategy::MonteCarlo { .. } => Method::Mc,
            },
            Source::LogTransform { inner, .. } => inner.method(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eval_detailed(x)?.value)
    }

    pub fn eval_detailed(&self, x: &[f64]) -> Result<Evaluation> {
        if x.len() != self.dim + 1 {
            return Err(Error::DimensionMismatch {
                expected: self.dim + 1,
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("evaluation point must be finite, got {x:?}")));
        }
        let ax: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        match &self.source {
            Source::ClosedForm(spec) => Ok(Evaluation {
                value: closed_form_eval(spec, ax[0], &ax[1..]),
                error: 0.0,
                method: Method::Closed,
            }),
            Source::Quadrature { spec, config } => {
                let e = quadrature_eval(spec, ax[0], &ax[1..], config)?;
                Ok(Evaluation {
                    value: e.value,
                    error: e.error,
                    method: Method::Quad,
                })
            }
            Source::MonteCarlo { spec, n, seed, sample } => {
                let sample = match sample.get() {
                    Some(s) => s,
                    None => {
                        let s = spec.sample(*n, &mut seeded_rng(*seed))?;
                        sample.get_or_init(|| s)
                    }
                };
                let (value, error) = mean_of_maxima(sample, ax[0], &ax[1..]);
                Ok(Evaluation {
                    value,
                    error,
                    method: Method::Mc,
                })
            }
            Source::Empirical(sample) => Ok(Evaluation {
                value: mean_of_maxima(sample, ax[0], &ax[1..]).0,
                error: 0.0,
                method: Method::Empirical,
            }),
            Source::Product { left, right, strategy } => algebra::product_eval_detailed(left, right, &ax, strategy),
            Source::LogTransform { inner, .. } => inner.eval_detailed(&ax),
        }
    }

    /// Max-characteristic function `E max(1, x1 X1, …, xd Xd)`.
    pub fn max_cf(&self, x: &[f64]) -> Result<f64> {
        if x.iter().any(|v| *v < 0.0) {
            return Err(Error::Domain("max-characteristic function needs x ≥ 0".into()));
        }
        let mut p = Vec::with_capacity(x.len() + 1);
        p.push(1.0);
        p.extend_from_slice(x);
        self.eval(&p)
    }

    /// Numeric tolerance attached to a value of this handle.
    pub(crate) fn tolerance_for(&self, e: &Evaluation) -> f64 {
        let floor = 1e-12 * (1.0 + e.value.abs());
        match e.method {
            Method::Mc => 4.0 * e.error + floor,
            Method::Closed | Method::Empirical => floor,
            Method::Quad | Method::Tonelli => (2.0 * e.error).max(1e-9) + floor,
        }
    }
}

/// `(mean, standard error)` of `max(x0, a_i X_i)` over the rows of a sample.
pub(crate) fn mean_of_maxima(sample: &SampleMatrix, x0: f64, a: &[f64]) -> (f64, f64) {
    let n = sample.n() as f64;
    let maxima = || sample.rows().map(|r| r.iter().zip(a).fold(x0, |m, (xi, ai)| m.max(ai * xi)));
    let mean = compensated_sum(maxima()) / n;
    // two-pass variance; both sums compensated so a point mass gives exactly 0
    let ss = compensated_sum(maxima().map(|m| (m - mean) * (m - mean)));
    let var = ss / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Neumaier's compensated summation.
pub(crate) fn compensated_sum<I: Iterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        c += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + c
}

/// Closed-form F-norm at `(x0, a)` with `x0, a ≥ 0`.
pub(crate) fn closed_form_eval(spec: &DistributionSpec, x0: f64, a: &[f64]) -> f64 {
    use DistributionSpec as D;
    match spec {
        D::Degenerate { c } => c.iter().zip(a).fold(x0, |m, (ci, ai)| m.max(ci * ai)),
        D::Bernoulli { p } => (1.0 - p) * x0 + p * x0.max(a[0]),
        D::Uniform01 | D::Copula { .. } => {
            let x1 = a[0];
            if x1 <= x0 {
                x0
            } else {
                (x0 * x0 + x1 * x1) / (2.0 * x1)
            }
        }
        D::Exponential { lambda } => {
            let x1 = a[0];
            if x1 == 0.0 {
                x0
            } else {
                x0 + x1 / lambda * (-lambda * x0 / x1).exp()
            }
        }
        D::Pareto { gamma } => {
            let x1 = a[0];
            if x1 == 0.0 {
                x0
            } else if x1 <= x0 {
                x0 * (1.0 + gamma / (1.0 - gamma) * (x0 / x1).powf(-1.0 / gamma))
            } else {
                x1 / (1.0 - gamma)
            }
        }
        D::Frechet { shape } => {
            let x1 = a[0];
            if x1 == 0.0 {
                x0
            } else if x0 == 0.0 {
                x1 * crate::special::gamma_fn(1.0 - 1.0 / shape)
            } else {
                let r = spec.tail_remainder(x0 / x1).map_or(0.0, |t| t.0);
                x0 + x1 * r
            }
        }
        D::LogNormal { mu, sigma2 } => lognormal_eval(*mu, *sigma2, x0, a[0]),
        D::MultiNormalExp { mu, cov } => lognormal_eval(mu[0], cov[0][0], x0, a[0]),
        D::IndependentProduct { components } => closed_form_eval(&components[0], x0, a),
        D::Empirical { sample, .. } => mean_of_maxima(sample, x0, a).0,
    }
}

/// `E max(x, y exp(N(mu, sigma2)))` for `x, y ≥ 0`.
pub(crate) fn lognormal_eval(mu: f64, sigma2: f64, x: f64, y: f64) -> f64 {
    if y == 0.0 {
        return x;
    }
    let mean = (mu + sigma2 / 2.0).exp();
    if x == 0.0 {
        return y * mean;
    }
    let s = sigma2.sqrt();
    let l = (x / y).ln();
    x * norm_cdf((l - mu) / s) + y * mean * norm_cdf(s + (mu - l) / s)
}

/// Closed-form `∫_T^∞ P(max a_i X_i > t) dt` with an error bound, for laws
/// whose tails are known analytically.
fn scaled_tail(spec: &DistributionSpec, a: &[f64], t: f64) -> Option<Estimate> {
    use DistributionSpec as D;
    let amax = a.iter().copied().fold(0.0, f64::max);
    if amax == 0.0 {
        return Some(Estimate::exact(0.0));
    }
    match spec {
        D::IndependentProduct { components } => {
            let mut off = 0;
            let mut total = 0.0;
            let mut err = 0.0;
            let mut surv = 0.0;
            for c in components {
                let k = c.dim();
                let ac = &a[off..off + k];
                off += k;
                let e = scaled_tail(c, ac, t)?;
                total += e.value;
                err += e.error;
                surv += scaled_survival(c, ac, t)?;
            }
            // 1 - ∏(1 - S_i) differs from Σ S_i by at most Σ_{i<j} S_i S_j
            err += surv * total;
            Some(Estimate { value: total, error: err })
        }
        D::Degenerate { c } => {
            let top = c.iter().zip(a).map(|(ci, ai)| ci * ai).fold(0.0, f64::max);
            (t >= top).then(|| Estimate::exact(0.0))
        }
        D::Copula { .. } => (t >= amax).then(|| Estimate::exact(0.0)),
        _ if spec.dim() == 1 => {
            let a0 = a[0];
            let (r, e) = spec.tail_remainder(t / a0)?;
            Some(Estimate {
                value: a0 * r,
                error: a0 * e,
            })
        }
        _ => None,
    }
}

/// Upper bound on `P(max a_i X_i > t)` for the laws handled by [`scaled_tail`].
fn scaled_survival(spec: &DistributionSpec, a: &[f64], t: f64) -> Option<f64> {
    use DistributionSpec as D;
    let amax = a.iter().copied().fold(0.0, f64::max);
    if amax == 0.0 {
        return Some(0.0);
    }
    match spec {
        D::Degenerate { .. } | D::Copula { .. } => scaled_tail(spec, a, t).map(|_| 0.0),
        _ if spec.dim() == 1 => Some(spec.survival1(t / a[0])),
        _ => None,
    }
}

/// Fundamental-formula quadrature at `(x0, a)` with `x0, a ≥ 0`.
pub(crate) fn quadrature_eval(spec: &DistributionSpec, x0: f64, a: &[f64], config: &QuadratureConfig) -> Result<Estimate> {
    if a.iter().all(|v| *v == 0.0) {
        return Ok(Estimate::exact(x0));
    }
    // surface cdf-unavailable before integrating
    spec.scaled_max_cdf(a, x0)?;
    let integrand = |t: f64| 1.0 - spec.scaled_max_cdf(a, t).unwrap_or(f64::NAN);
    let breaks: Vec<f64> = spec.breakpoints(a).into_iter().filter(|b| *b > x0).collect();
    let scale = match spec.marginal_means() {
        Ok(m) => m.iter().zip(a).map(|(mi, ai)| mi * ai).fold(0.0, f64::max),
        Err(_) => a.iter().copied().fold(0.0, f64::max),
    };
    let last_break = breaks.last().copied().unwrap_or(0.0);
    let first_upper = (4.0 * scale).max(last_break).max(x0 * config.truncation_growth).max(x0 + scale);
    let tail = |t: f64| scaled_tail(spec, a, t);
    let est = integrate_to_infinity(integrand, x0, first_upper, &breaks, tail, config).map_err(|e| match e {
        Error::IntegrationFailure { estimate, error_bound } => Error::IntegrationFailure {
            estimate: x0 + estimate,
            error_bound,
        },
        Error::TailNotIntegrable { estimate, upper } => Error::TailNotIntegrable {
            estimate: x0 + estimate,
            upper,
        },
        other => other,
    })?;
    Ok(Estimate {
        value: x0 + est.value,
        error: est.error,
    })
}

/// Lower weighted-sup bound and upper L¹-type bound built from the marginal means.
pub fn bounds(spec: &DistributionSpec, x: &[f64]) -> Result<(f64, f64)> {
    if x.len() != spec.dim() + 1 {
        return Err(Error::DimensionMismatch {
            expected: spec.dim() + 1,
            found: x.len(),
        });
    }
    let means = spec.marginal_means()?;
    let x0 = x[0].abs();
    let mut lower = x0;
    let mut upper = x0;
    for (xi, mi) in x[1..].iter().zip(&means) {
        let v = xi.abs() * mi;
        lower = lower.max(v);
        upper += v;
    }
    Ok((lower, upper))
}

/// Whether `‖(1, 1/c1, …, 1/cd)‖ = 1`, which holds exactly when the norm is
/// the weighted sup-norm `max(|x0|, |x1|c1, …, |xd|cd)`.
pub fn is_weighted_supnorm(handle: &FNorm, means: &[f64]) -> Result<bool> {
    if means.len() != handle.dim() {
        return Err(Error::DimensionMismatch {
            expected: handle.dim(),
            found: means.len(),
        });
    }
    if means.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
        return Err(Error::Domain("weights must be positive and finite".into()));
    }
    let mut p = vec![1.0];
    p.extend(means.iter().map(|c| 1.0 / c));
    let e = handle.eval_detailed(&p)?;
    Ok((e.value - 1.0).abs() <= handle.tolerance_for(&e))
}

/// Compares the F-norm of independent Fréchet(p) margins at `x` with the
/// univariate Fréchet(p) F-norm at `(x0, ‖(x1, …, xd)‖_p)`. Both sides by quadrature.
pub fn frechet_reduction_check(p: f64, x: &[f64], config: &QuadratureConfig) -> Result<(f64, f64)> {
    if x.len() < 2 {
        return Err(Error::Domain("point needs at least two coordinates".into()));
    }
    let d = x.len() - 1;
    let margin = DistributionSpec::frechet(p)?;
    let joint = DistributionSpec::product(vec![margin.clone(); d])?;
    let lhs = FNorm::quadrature(joint, *config)?.eval(x)?;
    let lp = x[1..].iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p);
    let rhs = FNorm::quadrature(margin, *config)?.eval(&[x[0], lp])?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cf(spec: DistributionSpec) -> FNorm {
        FNorm::closed_form(spec).unwrap()
    }

    #[test]
    fn printed_examples() {
        assert_eq!(cf(DistributionSpec::Uniform01).eval(&[0.5, 1.0]).unwrap(), 0.625);
        let e = cf(DistributionSpec::exponential(1.0).unwrap()).eval(&[1.0, 1.0]).unwrap();
        assert!((e - (1.0 + (-1.0f64).exp())).abs() < 1e-15);
        assert_eq!(cf(DistributionSpec::pareto(0.5).unwrap()).eval(&[2.0, 1.0]).unwrap(), 2.5);
        let b = cf(DistributionSpec::bernoulli(0.3).unwrap()).eval(&[1.0, 2.0]).unwrap();
        assert!((b - 1.3).abs() < 1e-15);
    }

    #[test]
    fn unit_vector_and_origin() {
        for spec in [
            DistributionSpec::Uniform01,
            DistributionSpec::pareto(0.3).unwrap(),
            DistributionSpec::frechet(3.0).unwrap(),
            DistributionSpec::log_normal(0.2, 0.7).unwrap(),
        ] {
            let h = cf(spec.clone());
            assert_eq!(h.eval(&[1.0, 0.0]).unwrap(), 1.0);
            assert_eq!(h.eval(&[0.0, 0.0]).unwrap(), 0.0);
            let q = FNorm::quadrature(spec, QuadratureConfig::default()).unwrap();
            assert!((q.eval(&[1.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn max_cf_examples() {
        assert_eq!(cf(DistributionSpec::Uniform01).max_cf(&[1.0]).unwrap(), 1.0);
        assert_eq!(cf(DistributionSpec::Uniform01).max_cf(&[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn bounds_examples() {
        let p = DistributionSpec::pareto(0.5).unwrap();
        assert_eq!(bounds(&p, &[1.0, 1.0]).unwrap(), (2.0, 3.0));
        assert_eq!(bounds(&p, &[1.0, 0.0]).unwrap(), (1.0, 1.0));
        assert_eq!(bounds(&DistributionSpec::Uniform01, &[0.0, 1.0]).unwrap(), (0.5, 0.5));
    }

    #[test]
    fn weighted_supnorm_detection() {
        let d = cf(DistributionSpec::degenerate(vec![2.0, 3.0]).unwrap());
        assert!(is_weighted_supnorm(&d, &[2.0, 3.0]).unwrap());
        assert!(!is_weighted_supnorm(&cf(DistributionSpec::Uniform01), &[0.5]).unwrap());
        let b = cf(DistributionSpec::bernoulli(0.4).unwrap());
        assert!(!is_weighted_supnorm(&b, &[0.4]).unwrap());
    }

    #[test]
    fn frechet_closed_form_matches_quadrature() {
        let s = DistributionSpec::frechet(2.5).unwrap();
        let q = FNorm::quadrature(s.clone(), QuadratureConfig::default()).unwrap();
        for &(x0, x1) in &[(1.0, 1.0), (0.3, 2.0), (3.0, 0.5), (0.0, 1.0)] {
            let a = cf(s.clone()).eval(&[x0, x1]).unwrap();
            let b = q.eval(&[x0, x1]).unwrap();
            assert!((a - b).abs() < 1e-9, "({x0},{x1}): {a} vs {b}");
        }
    }

    #[test]
    fn frechet_reduction() {
        let cfg = QuadratureConfig::default();
        let (l, r) = frechet_reduction_check(2.0, &[1.0, 1.0, 1.0], &cfg).unwrap();
        assert!((l - r).abs() < 1e-8, "{l} vs {r}");
        let (l, r) = frechet_reduction_check(2.0, &[1.0, 0.0, 0.0], &cfg).unwrap();
        assert!((l - 1.0).abs() < 1e-12 && (r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn h_violations_are_rejected() {
        assert!(matches!(
            FNorm::closed_form(DistributionSpec::degenerate(vec![1.0, 0.0]).unwrap()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let h = FNorm::monte_carlo(DistributionSpec::Uniform01, 10_000, 5).unwrap();
        let a = h.eval_detailed(&[0.5, 1.0]).unwrap();
        let b = h.clone().eval_detailed(&[0.5, 1.0]).unwrap();
        assert_eq!(a, b);
        assert!((a.value - 0.625).abs() < 4.0 * a.error);
    }
}
