//! Products of F-norms and log F-norms.
//!
//! The product of the F-norms generated by independent `X` and `Y` is the
//! F-norm of the componentwise product `X·Y`, evaluated by Tonelli as
//! `∫ ‖(x0, x1 t1, …, xd td)‖F dG(t)`. A log F-norm is the F-norm of
//! `exp(X)` for a signed vector `X` with finite exponential moments; products
//! of log F-norms correspond to sums of independent signed vectors.

use std::cell::RefCell;

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{seeded_rng, substream_seed, CopulaFamily, DistributionSpec, SampleMatrix};
use crate::error::{Error, Result};
use crate::fnorm::{lognormal_eval, Evaluation, FNorm, Method, Source};
use crate::quadrature::{integrate, integrate_to_infinity, Estimate, QuadratureConfig};
use crate::special::{gamma_fn, norm_cdf, norm_pdf};

/// Default number of Monte Carlo draws for products.
pub const DEFAULT_PRODUCT_MC_N: usize = 1_000_000;

#[derive(Clone, Debug)]
pub enum ProductStrategy {
    /// Tonelli quadrature, integrating against whichever factor has the
    /// simpler law.
    Tonelli(QuadratureConfig),
    MonteCarlo { n: usize, seed: u64 },
}

/// Which factor plays the role of `G` in `∫ ‖(x0, x t)‖F dG(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TonelliOrder {
    IntegrateRight,
    IntegrateLeft,
}

/// Product of the F-norms `left` and `right` at `x`.
pub fn product_eval(left: &FNorm, right: &FNorm, x: &[f64], strategy: &ProductStrategy) -> Result<Evaluation> {
    if left.dim() != right.dim() {
        return Err(Error::DimensionMismatch {
            expected: left.dim(),
            found: right.dim(),
        });
    }
    if x.len() != left.dim() + 1 {
        return Err(Error::DimensionMismatch {
            expected: left.dim() + 1,
            found: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("evaluation point must be finite".into()));
    }
    let ax: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    product_eval_detailed(left, right, &ax, strategy)
}

pub(crate) fn product_eval_detailed(
    left: &FNorm,
    right: &FNorm,
    ax: &[f64],
    strategy: &ProductStrategy,
) -> Result<Evaluation> {
    match strategy {
        ProductStrategy::Tonelli(config) => {
            let order = choose_order(left, right).ok_or_else(|| {
                Error::ProductUnavailable(
                    "neither factor has a law that Tonelli quadrature can integrate against; use Monte Carlo".into(),
                )
            })?;
            let e = tonelli(left, right, ax, order, config)?;
            Ok(Evaluation {
                value: e.value,
                error: e.error,
                method: Method::Tonelli,
            })
        }
        ProductStrategy::MonteCarlo { n, seed } => {
            let (value, error) = product_monte_carlo(left, right, ax, *n, *seed)?;
            Ok(Evaluation {
                value,
                error,
                method: Method::Mc,
            })
        }
    }
}

fn integrable(spec: &DistributionSpec) -> bool {
    use DistributionSpec as D;
    match spec {
        D::MultiNormalExp { mu, .. } => mu.len() == 1,
        D::IndependentProduct { components } => components.iter().all(integrable),
        _ => true,
    }
}

fn has_atoms(spec: &DistributionSpec) -> bool {
    matches!(
        spec,
        DistributionSpec::Degenerate { .. } | DistributionSpec::Bernoulli { .. } | DistributionSpec::Empirical { .. }
    )
}

fn cheap(h: &FNorm) -> bool {
    !matches!(h.method(), Method::Mc)
}

fn choose_order(left: &FNorm, right: &FNorm) -> Option<TonelliOrder> {
    let ok = |g: &FNorm, f: &FNorm| g.spec().is_some_and(|s| integrable(&s)) && cheap(f);
    let atoms = |g: &FNorm| g.spec().is_some_and(|s| has_atoms(&s));
    let closed = |f: &FNorm| f.method() == Method::Closed;
    let r = ok(right, left);
    let l = ok(left, right);
    match (l, r) {
        (true, true) => {
            if atoms(left) && !atoms(right) {
                Some(TonelliOrder::IntegrateLeft)
            } else if !atoms(right) && closed(right) && !closed(left) {
                Some(TonelliOrder::IntegrateLeft)
            } else {
                Some(TonelliOrder::IntegrateRight)
            }
        }
        (false, true) => Some(TonelliOrder::IntegrateRight),
        (true, false) => Some(TonelliOrder::IntegrateLeft),
        (false, false) => None,
    }
}

/// Tonelli evaluation in a fixed order, for `x ≥ 0`.
pub fn tonelli(left: &FNorm, right: &FNorm, x: &[f64], order: TonelliOrder, config: &QuadratureConfig) -> Result<Estimate> {
    let (f, g) = match order {
        TonelliOrder::IntegrateRight => (left, right),
        TonelliOrder::IntegrateLeft => (right, left),
    };
    let gspec = g
        .spec()
        .ok_or_else(|| Error::ProductUnavailable("integrating factor has no generating law".into()))?;
    if !integrable(&gspec) {
        return Err(Error::ProductUnavailable(format!(
            "cannot integrate against {} by quadrature",
            gspec.label()
        )));
    }
    let x0 = x[0].abs();
    let a: Vec<f64> = x[1..].iter().map(|v| v.abs()).collect();
    // kinks of t_i ↦ ‖(x0, …, a_i t_i, …)‖F sit where a_i t_i hits x0 / b
    let fspec = f.spec();
    let kinks: Vec<Vec<f64>> = (0..a.len())
        .map(|i| {
            let bs = fspec
                .as_ref()
                .and_then(|s| s.marginal(i).ok())
                .map(|m| m.breakpoints(&[1.0]))
                .unwrap_or_default();
            if a[i] > 0.0 && x0 > 0.0 {
                bs.iter().map(|b| x0 / (a[i] * b)).collect()
            } else {
                Vec::new()
            }
        })
        .collect();
    let eval_f = |y: &[f64]| -> Result<f64> {
        let mut p = Vec::with_capacity(y.len() + 1);
        p.push(x0);
        p.extend_from_slice(y);
        f.eval(&p)
    };
    let mut y = a.clone();
    integrate_against(&gspec, 0, &a, &kinks, &mut y, &eval_f, config)
}

/// `E h(a ∘ T)` for `T ~ spec`, where `spec` occupies coordinates
/// `offset..offset + spec.dim()` of `y` and the other coordinates are held fixed.
fn integrate_against(
    spec: &DistributionSpec,
    offset: usize,
    a: &[f64],
    kinks: &[Vec<f64>],
    y: &mut Vec<f64>,
    h: &dyn Fn(&[f64]) -> Result<f64>,
    config: &QuadratureConfig,
) -> Result<Estimate> {
    use DistributionSpec as D;
    let k = spec.dim();
    let set = |y: &mut Vec<f64>, t: &[f64]| {
        for j in 0..k {
            y[offset + j] = a[offset + j] * t[j];
        }
    };
    match spec {
        D::Degenerate { c } => {
            set(y, c);
            Ok(Estimate::exact(h(y)?))
        }
        D::Bernoulli { p } => {
            set(y, &[0.0]);
            let v0 = h(y)?;
            set(y, &[1.0]);
            let v1 = h(y)?;
            Ok(Estimate::exact((1.0 - p) * v0 + p * v1))
        }
        D::Empirical { sample, .. } => {
            let mut sum = 0.0;
            for r in sample.rows() {
                set(y, r);
                sum += h(y)?;
            }
            Ok(Estimate::exact(sum / sample.n() as f64))
        }
        D::IndependentProduct { components } => integrate_components(components, offset, a, kinks, y, h, config),
        D::Copula { family, dim } => match family {
            CopulaFamily::Independence => {
                let comps = vec![D::Uniform01; *dim];
                integrate_components(&comps, offset, a, kinks, y, h, config)
            }
            CopulaFamily::Comonotone => {
                let mut ks: Vec<f64> = (0..*dim).flat_map(|j| kinks[offset + j].iter().copied()).collect();
                ks.retain(|t| *t > 0.0 && *t < 1.0);
                ks.sort_by(f64::total_cmp);
                let base = y.clone();
                let failure = RefCell::new(None);
                let inner = |u: f64| {
                    let mut yy = base.clone();
                    for j in 0..*dim {
                        yy[offset + j] = a[offset + j] * u;
                    }
                    guard(&failure, h(&yy))
                };
                let r = integrate(inner, 0.0, 1.0, &ks, config.abs_tol, config.max_subdivisions);
                settle(r, failure)
            }
        },
        _ => {
            // one-dimensional continuous law
            let i = offset;
            let base = y.clone();
            let failure = RefCell::new(None);
            let at = |t: f64| {
                let mut yy = base.clone();
                yy[i] = a[i] * t;
                h(&yy)
            };
            let ks = &kinks[i];
            let r = match spec {
                D::Uniform01 => {
                    let mut ks: Vec<f64> = ks.iter().copied().filter(|t| *t > 0.0 && *t < 1.0).collect();
                    ks.sort_by(f64::total_cmp);
                    integrate(|t| guard(&failure, at(t)), 0.0, 1.0, &ks, config.abs_tol, config.max_subdivisions)
                }
                D::Exponential { lambda } => {
                    let l = *lambda;
                    density_integral(|t| guard(&failure, at(t)) * l * (-l * t).exp(), 0.0, 4.0 / l, ks, config)
                }
                D::Pareto { gamma } => {
                    let k = 1.0 / gamma;
                    density_integral(|t| guard(&failure, at(t)) * k * t.powf(-k - 1.0), 1.0, 4.0, ks, config)
                }
                D::Frechet { shape } => {
                    let p = *shape;
                    density_integral(
                        |t| {
                            if t <= 0.0 {
                                return 0.0;
                            }
                            let tp = t.powf(-p);
                            let dens = p * tp / t * (-tp).exp();
                            if dens == 0.0 {
                                0.0
                            } else {
                                guard(&failure, at(t)) * dens
                            }
                        },
                        0.0,
                        4.0 * gamma_fn(1.0 - 1.0 / p),
                        ks,
                        config,
                    )
                }
                D::LogNormal { mu, sigma2 } => lognormal_integral(*mu, *sigma2, &at, &failure, ks, config),
                D::MultiNormalExp { mu, cov } => lognormal_integral(mu[0], cov[0][0], &at, &failure, ks, config),
                _ => {
                    return Err(Error::ProductUnavailable(format!(
                        "cannot integrate against {} by quadrature",
                        spec.label()
                    )))
                }
            };
            settle(r, failure)
        }
    }
}

fn integrate_components(
    components: &[DistributionSpec],
    offset: usize,
    a: &[f64],
    kinks: &[Vec<f64>],
    y: &mut Vec<f64>,
    h: &dyn Fn(&[f64]) -> Result<f64>,
    config: &QuadratureConfig,
) -> Result<Estimate> {
    let Some((first, rest)) = components.split_first() else {
        return Ok(Estimate::exact(h(y)?));
    };
    if rest.is_empty() {
        return integrate_against(first, offset, a, kinks, y, h, config);
    }
    let next = offset + first.dim();
    // integrate the remaining components inside, the first one outside
    let inner = |yy: &[f64]| -> Result<f64> {
        let mut v = yy.to_vec();
        Ok(integrate_components(rest, next, a, kinks, &mut v, h, config)?.value)
    };
    integrate_against(first, offset, a, kinks, y, &inner, config)
}

fn density_integral<F: Fn(f64) -> f64>(f: F, lo: f64, first_upper: f64, kinks: &[f64], config: &QuadratureConfig) -> Result<Estimate> {
    let mut ks: Vec<f64> = kinks.iter().copied().filter(|t| *t > lo && t.is_finite()).collect();
    ks.sort_by(f64::total_cmp);
    let upper = ks.last().map_or(first_upper, |k| first_upper.max(*k * 2.0));
    integrate_to_infinity(f, lo, upper, &ks, |_| None, config)
}

fn lognormal_integral(
    mu: f64,
    sigma2: f64,
    at: &dyn Fn(f64) -> Result<f64>,
    failure: &RefCell<Option<Error>>,
    kinks: &[f64],
    config: &QuadratureConfig,
) -> Result<Estimate> {
    let s = sigma2.sqrt();
    let l = 10.0 + s;
    let mut zk: Vec<f64> = kinks
        .iter()
        .filter(|t| **t > 0.0)
        .map(|t| (t.ln() - mu) / s)
        .filter(|z| z.abs() < l)
        .collect();
    zk.sort_by(f64::total_cmp);
    integrate(
        |z| guard(failure, at((mu + s * z).exp())) * norm_pdf(z),
        -l,
        l,
        &zk,
        config.abs_tol,
        config.max_subdivisions,
    )
}

fn guard(slot: &RefCell<Option<Error>>, r: Result<f64>) -> f64 {
    match r {
        Ok(v) => v,
        Err(e) => {
            slot.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    }
}

fn settle(r: Result<Estimate>, failure: RefCell<Option<Error>>) -> Result<Estimate> {
    match failure.into_inner() {
        Some(e) => Err(e),
        None => r,
    }
}

/// Generating laws whose independent product realizes the handle, for
/// Monte Carlo products. Nested products flatten to their base laws.
fn base_specs(h: &FNorm) -> Option<Vec<DistributionSpec>> {
    match h.source() {
        Source::Product { left, right, .. } => {
            let mut v = base_specs(left)?;
            v.extend(base_specs(right)?);
            Some(v)
        }
        _ => h.spec().map(|s| vec![s]),
    }
}

fn product_monte_carlo(left: &FNorm, right: &FNorm, ax: &[f64], n: usize, seed: u64) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::Domain("Monte Carlo needs at least two draws".into()));
    }
    let mut specs = base_specs(left).ok_or_else(|| Error::ProductUnavailable("left factor has no law".into()))?;
    specs.extend(base_specs(right).ok_or_else(|| Error::ProductUnavailable("right factor has no law".into()))?);
    let d = left.dim();
    let samples: Vec<SampleMatrix> = specs
        .par_iter()
        .enumerate()
        .map(|(k, s)| s.sample(n, &mut seeded_rng(substream_seed(seed, k as u64))))
        .collect::<Result<_>>()?;
    let x0 = ax[0];
    let a = &ax[1..];
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for i in 0..n {
        let mut m = x0;
        for j in 0..d {
            let prod: f64 = samples.iter().map(|s| s.row(i)[j]).product();
            m = m.max(a[j] * prod);
        }
        sum += m;
        sum2 += m * m;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sum2 / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
    Ok((mean, (var / nf).sqrt()))
}

/// Maximum of `|‖x‖F⋆F − ‖x‖F|` over the probes, and whether it stays within `tol`.
pub fn idempotent_check(handle: &FNorm, probes: &[Vec<f64>], strategy: &ProductStrategy, tol: f64) -> Result<(bool, f64)> {
    let mut worst: f64 = 0.0;
    for x in probes {
        let p = product_eval(handle, handle, x, strategy)?.value;
        let s = handle.eval(x)?;
        worst = worst.max((p - s).abs());
    }
    Ok((worst <= tol, worst))
}

/// Law of a possibly signed random vector with finite exponential moments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SignedSpec {
    /// `N(mu, sigma2)`; `sigma2 = 0` is the point mass at `mu`.
    Normal { mu: f64, sigma2: f64 },
    #[serde(rename = "multinormal")]
    MultiNormal {
        mu: Vec<f64>,
        #[serde(rename = "sigma")]
        cov: Vec<Vec<f64>>,
    },
    /// Negative of a standard Gumbel variable, `P(X ≤ x) = 1 - exp(-e^x)`.
    NegGumbel,
    /// `±1` with probability one half each.
    Rademacher,
}

impl SignedSpec {
    pub fn normal(mu: f64, sigma2: f64) -> Result<Self> {
        let s = Self::Normal { mu, sigma2 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Normal { mu, sigma2 } => {
                if !mu.is_finite() || !(*sigma2 >= 0.0 && sigma2.is_finite()) {
                    return Err(Error::InvalidSpec(format!("normal needs finite mu and sigma2 ≥ 0, got ({mu}, {sigma2})")));
                }
            }
            Self::MultiNormal { mu, cov } => {
                DistributionSpec::MultiNormalExp {
                    mu: mu.clone(),
                    cov: cov.clone(),
                }
                .validate_params()?;
            }
            Self::NegGumbel | Self::Rademacher => {}
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::MultiNormal { mu, .. } => mu.len(),
            _ => 1,
        }
    }

    /// Law of `exp(X)`.
    pub fn exp_spec(&self) -> Result<DistributionSpec> {
        self.validate()?;
        match self {
            Self::Normal { mu, sigma2 } => {
                if *sigma2 == 0.0 {
                    DistributionSpec::degenerate(vec![mu.exp()])
                } else {
                    DistributionSpec::log_normal(*mu, *sigma2)
                }
            }
            Self::MultiNormal { mu, cov } => DistributionSpec::multi_normal_exp(mu.clone(), cov.clone()),
            Self::NegGumbel => DistributionSpec::exponential(1.0),
            Self::Rademacher => Ok(DistributionSpec::empirical(SampleMatrix::from_rows(&[
                vec![(-1.0f64).exp()],
                vec![1.0f64.exp()],
            ])?)),
        }
    }

    /// `E exp(t X)` of a one-dimensional law.
    pub fn mgf(&self, t: f64) -> Result<f64> {
        match self {
            Self::Normal { mu, sigma2 } => Ok((mu * t + sigma2 * t * t / 2.0).exp()),
            Self::NegGumbel => {
                if t <= -1.0 {
                    Err(Error::Domain("moment generating function of -Gumbel needs t > -1".into()))
                } else {
                    Ok(gamma_fn(1.0 + t))
                }
            }
            Self::Rademacher => Ok(t.cosh()),
            Self::MultiNormal { .. } => Err(Error::Domain("mgf needs a one-dimensional law".into())),
        }
    }

    /// `(mean, variance)` of a one-dimensional law.
    pub fn moments(&self) -> Result<(f64, f64)> {
        match self {
            Self::Normal { mu, sigma2 } => Ok((*mu, *sigma2)),
            Self::NegGumbel => Ok((-0.577_215_664_901_532_9, std::f64::consts::PI.powi(2) / 6.0)),
            Self::Rademacher => Ok((0.0, 1.0)),
            Self::MultiNormal { .. } => Err(Error::Domain("moments need a one-dimensional law".into())),
        }
    }
}

/// Log F-norm of `s` at `x`: closed forms for normal, negative Gumbel and
/// Rademacher laws, quadrature or Monte Carlo (with `mc = (n, seed)`) otherwise.
pub fn log_fnorm_eval(s: &SignedSpec, x: &[f64], config: &QuadratureConfig, mc: Option<(usize, u64)>) -> Result<Evaluation> {
    FNorm::log_transform(s.clone(), *config, mc)?.eval_detailed(x)
}

/// Hüsler-Reiss norm `x Φ(σ/2 + log(x/y)/σ) + y Φ(σ/2 + log(y/x)/σ)`, with
/// the limits `max(x, y)` at a zero coordinate and at `σ² = 0`.
pub fn husler_reiss_eval(sigma2: f64, x: f64, y: f64) -> Result<f64> {
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(Error::Domain(format!("sigma2 must be nonnegative and finite, got {sigma2}")));
    }
    let (x, y) = (x.abs(), y.abs());
    if x == 0.0 || y == 0.0 || sigma2 == 0.0 {
        return Ok(x.max(y));
    }
    let s = sigma2.sqrt();
    let l = (x / y).ln();
    Ok(x * norm_cdf(s / 2.0 + l / s) + y * norm_cdf(s / 2.0 - l / s))
}

/// Maximum over the probes of `|‖x‖A ⋆ ‖x‖B − ‖x‖A+B|` for independent normals.
pub fn convolution_identity_check(
    sa: &SignedSpec,
    sb: &SignedSpec,
    probes: &[Vec<f64>],
    config: &QuadratureConfig,
) -> Result<f64> {
    let (SignedSpec::Normal { mu: m1, sigma2: v1 }, SignedSpec::Normal { mu: m2, sigma2: v2 }) = (sa, sb) else {
        return Err(Error::Domain("convolution identity check needs two one-dimensional normal laws".into()));
    };
    let sum = SignedSpec::normal(m1 + m2, v1 + v2)?;
    let ha = FNorm::log_transform(sa.clone(), *config, None)?;
    let hb = FNorm::log_transform(sb.clone(), *config, None)?;
    let strategy = ProductStrategy::Tonelli(*config);
    let mut worst: f64 = 0.0;
    for x in probes {
        let p = product_eval(&ha, &hb, x, &strategy)?.value;
        let q = log_fnorm_eval(&sum, x, config, None)?.value;
        worst = worst.max((p - q).abs());
    }
    Ok(worst)
}

/// One row of the central-limit demonstration table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CltDemoRow {
    pub n: u64,
    pub x0: f64,
    pub x1: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub limit: f64,
    pub deviation: f64,
}

const CLT_CHUNK: usize = 1 << 15;

/// Estimates `E max(x0, x1 exp(n^{-1/2} Σ X(i)))` for each `n` and compares it
/// with the log-normal limit `E max(x0, x1 exp(ξ))`, `ξ ~ N(0, Var X)`.
///
/// The estimator uses `x1 E(Y)` with the exact value `E(Y) = M(n^{-1/2})^n`
/// as a control variate, so only `E (x0 - x1 Y)⁺` is simulated.
pub fn clt_fnorm_demo(
    base: &SignedSpec,
    ns: &[u64],
    points: &[(f64, f64)],
    replications: usize,
    seed: u64,
) -> Result<Vec<CltDemoRow>> {
    let (mean, var) = base.moments()?;
    let sampler: Box<dyn Fn(&mut crate::distributions::SeededRng, u64) -> f64 + Sync> = match base {
        SignedSpec::Rademacher => Box::new(|rng, n| {
            let b = Binomial::new(n, 0.5).map(|b| b.sample(rng)).unwrap_or(0);
            2.0 * b as f64 - n as f64
        }),
        SignedSpec::Normal { sigma2, mu } if *mu == 0.0 => {
            let s = sigma2.sqrt();
            Box::new(move |rng, n| {
                let z: f64 = rng.sample(StandardNormal);
                s * (n as f64).sqrt() * z
            })
        }
        _ => {
            return Err(Error::Domain(
                "central limit demonstration needs a centered base law with exactly summable sums (rademacher or normal with mu = 0)".into(),
            ))
        }
    };
    if mean != 0.0 {
        return Err(Error::Domain("base law must be centered".into()));
    }
    if replications < 2 || ns.iter().any(|n| *n == 0) {
        return Err(Error::Domain("need n ≥ 1 and at least two replications".into()));
    }
    let mut rows = Vec::new();
    for (ni, &n) in ns.iter().enumerate() {
        let scale = 1.0 / (n as f64).sqrt();
        let ey = base.mgf(scale)?.powf(n as f64);
        let n_seed = substream_seed(seed, ni as u64);
        // draw the normalized sums once per n, shared by all points
        let chunks = replications.div_ceil(CLT_CHUNK);
        let logs: Vec<Vec<f64>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = seeded_rng(substream_seed(n_seed, c as u64));
                let len = CLT_CHUNK.min(replications - c * CLT_CHUNK);
                (0..len).map(|_| sampler(&mut rng, n) * scale).collect()
            })
            .collect();
        for &(x0, x1) in points {
            let (x0, x1) = (x0.abs(), x1.abs());
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            for chunk in &logs {
                let (s, s2) = chunk.iter().fold((0.0, 0.0), |(s, s2), l| {
                    let v = (x0 - x1 * l.exp()).max(0.0);
                    (s + v, s2 + v * v)
                });
                sum += s;
                sum2 += s2;
            }
            let r = replications as f64;
            let m = sum / r;
            let v = ((sum2 / r - m * m) * r / (r - 1.0)).max(0.0);
            let estimate = x1 * ey + m;
            let limit = if var == 0.0 { x0.max(x1) } else { lognormal_eval(0.0, var, x0, x1) };
            rows.push(CltDemoRow {
                n,
                x0,
                x1,
                estimate,
                std_error: (v / r).sqrt(),
                limit,
                deviation: (estimate - limit).abs(),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn closed(spec: DistributionSpec) -> FNorm {
        FNorm::closed_form(spec).unwrap()
    }

    #[test]
    fn bernoulli_product() {
        let b = closed(DistributionSpec::bernoulli(0.5).unwrap());
        let v = product_eval(&b, &b, &[1.0, 2.0], &ProductStrategy::Tonelli(cfg())).unwrap();
        assert!((v.value - 1.25).abs() < 1e-15);
    }

    #[test]
    fn uniform_product() {
        let u = closed(DistributionSpec::Uniform01);
        let s = ProductStrategy::Tonelli(cfg());
        assert!((product_eval(&u, &u, &[0.0, 1.0], &s).unwrap().value - 0.25).abs() < 1e-10);
        let v = product_eval(&u, &u, &[0.5, 1.0], &s).unwrap().value;
        // E max(1/2, UV) = 1/2 + ∫_{1/2}^1 (1 - z + z ln z) dz
        let oracle = 0.5 + integrate(|z: f64| 1.0 - z + z * z.ln(), 0.5, 1.0, &[], 1e-14, 1000).unwrap().value;
        assert!((v - oracle).abs() < 1e-9, "{v} vs {oracle}");
    }

    #[test]
    fn sup_norm_is_identity() {
        let e = closed(DistributionSpec::exponential(2.0).unwrap());
        let s = ProductStrategy::Tonelli(cfg());
        for x in [[1.0, 1.0], [0.3, 2.0], [0.0, 1.0]] {
            let p = product_eval(&e, &FNorm::sup_norm(1), &x, &s).unwrap().value;
            assert!((p - e.eval(&x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn tonelli_orders_agree() {
        let a = closed(DistributionSpec::pareto(0.3).unwrap());
        let b = closed(DistributionSpec::exponential(1.0).unwrap());
        for x in [[1.0, 1.0], [0.5, 2.0], [2.0, 0.3]] {
            let l = tonelli(&a, &b, &x, TonelliOrder::IntegrateLeft, &cfg()).unwrap().value;
            let r = tonelli(&a, &b, &x, TonelliOrder::IntegrateRight, &cfg()).unwrap().value;
            assert!((l - r).abs() < 2e-10, "{l} vs {r}");
        }
    }

    #[test]
    fn husler_reiss_values() {
        assert!((husler_reiss_eval(1.0, 1.0, 1.0).unwrap() - 2.0 * norm_cdf(0.5)).abs() < 1e-15);
        assert_eq!(husler_reiss_eval(1.0, 1.0, 0.0).unwrap(), 1.0);
        assert!((husler_reiss_eval(1e-12, 2.0, 1.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn log_fnorm_examples() {
        let n = SignedSpec::normal(-0.5, 1.0).unwrap();
        let v = log_fnorm_eval(&n, &[1.0, 1.0], &cfg(), None).unwrap().value;
        assert!((v - 2.0 * norm_cdf(0.5)).abs() < 1e-12);
        let g = log_fnorm_eval(&SignedSpec::NegGumbel, &[1.0, 1.0], &cfg(), None).unwrap().value;
        assert!((g - 1.0 - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(log_fnorm_eval(&SignedSpec::Rademacher, &[1.0, 0.0], &cfg(), None).unwrap().value, 1.0);
    }

    #[test]
    fn degenerate_log_factor_scales() {
        let d = SignedSpec::normal(0.0, 0.0).unwrap();
        let n = SignedSpec::normal(0.3, 0.5).unwrap();
        let probes = vec![vec![1.0, 1.0], vec![0.2, 1.5]];
        assert!(convolution_identity_check(&d, &n, &probes, &cfg()).unwrap() < 1e-9);
    }

    #[test]
    fn signed_spec_json() {
        let s: SignedSpec = serde_json::from_str(r#"{"type":"normal","mu":0,"sigma2":1}"#).unwrap();
        assert_eq!(s, SignedSpec::normal(0.0, 1.0).unwrap());
        let r: SignedSpec = serde_json::from_str(r#"{"type":"rademacher"}"#).unwrap();
        assert_eq!(r.mgf(0.5).unwrap(), 0.5f64.cosh());
    }
}
