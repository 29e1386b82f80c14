//! Order-1 Wasserstein distances between one-dimensional laws and independent
//! products, and the Lipschitz bound of F-norms in the Wasserstein metric.
//!
//! For nonnegative laws the quantile coupling gives
//! `d_W(F, G) = ∫_0^1 |F⁻¹(u) - G⁻¹(u)| du = ∫_0^∞ |F(t) - G(t)| dt`;
//! the second form is integrated, so heavy tails are handled through the
//! closed-form tail integrals of the survival functions.

use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{CopulaFamily, DistributionSpec};
use crate::error::{Error, Result};
use crate::fnorm::FNorm;
use crate::quadrature::{integrate, integrate_to_infinity, Estimate, QuadratureConfig};

/// A one-dimensional law prepared for repeated cdf evaluation.
enum Law {
    Sorted(Vec<f64>),
    Spec(DistributionSpec),
}

impl Law {
    fn new(spec: &DistributionSpec) -> Result<Self> {
        if spec.dim() != 1 {
            return Err(Error::Domain(format!(
                "Wasserstein distance needs one-dimensional laws, got d = {}",
                spec.dim()
            )));
        }
        let m = spec.marginal(0)?;
        let mean = m.marginal_mean(0)?;
        if !mean.is_finite() {
            return Err(Error::Domain(format!("{} has no finite mean", m.label())));
        }
        Ok(match m {
            DistributionSpec::Empirical { sample, .. } => {
                let mut v = sample.column(0);
                v.sort_by(f64::total_cmp);
                Law::Sorted(v)
            }
            other => Law::Spec(other),
        })
    }

    fn survival(&self, t: f64) -> f64 {
        match self {
            Law::Sorted(v) => {
                let above = v.len() - v.partition_point(|x| *x <= t);
                above as f64 / v.len() as f64
            }
            Law::Spec(s) => s.survival1(t),
        }
    }

    fn mean(&self) -> f64 {
        match self {
            Law::Sorted(v) => v.iter().sum::<f64>() / v.len() as f64,
            Law::Spec(s) => s.marginal_mean(0).unwrap_or(f64::NAN),
        }
    }

    fn is_continuous(&self) -> bool {
        matches!(
            self,
            Law::Spec(
                DistributionSpec::Uniform01
                    | DistributionSpec::Exponential { .. }
                    | DistributionSpec::Pareto { .. }
                    | DistributionSpec::Frechet { .. }
                    | DistributionSpec::LogNormal { .. }
            )
        )
    }

    /// Jumps and kinks of the cdf.
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Law::Sorted(v) => v.clone(),
            Law::Spec(DistributionSpec::Degenerate { c }) => vec![c[0]],
            Law::Spec(DistributionSpec::Bernoulli { .. }) => vec![1.0],
            Law::Spec(s) => s.breakpoints(&[1.0]),
        }
    }

    /// Quantiles at the levels where the other law's cdf jumps, so that the
    /// sign of `F - G` is constant between consecutive breakpoints.
    fn crossings(&self, levels: &[f64]) -> Vec<f64> {
        match self {
            Law::Spec(s) if self.is_continuous() => levels
                .iter()
                .filter(|u| **u > 0.0 && **u < 1.0)
                .map(|u| s.quantile_unchecked(*u))
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Cdf values just right of each breakpoint.
    fn levels(&self) -> Vec<f64> {
        match self {
            Law::Sorted(v) => (1..v.len()).map(|k| k as f64 / v.len() as f64).collect(),
            Law::Spec(DistributionSpec::Bernoulli { p }) => vec![1.0 - p],
            _ => Vec::new(),
        }
    }

    /// Whether the cdf is piecewise constant.
    fn is_step(&self) -> bool {
        matches!(
            self,
            Law::Sorted(_) | Law::Spec(DistributionSpec::Degenerate { .. } | DistributionSpec::Bernoulli { .. })
        )
    }

    /// Survival function on the open piece containing `mid`, continuous up to
    /// the piece's endpoints.
    fn survival_on_piece(&self, t: f64, mid: f64) -> f64 {
        if self.is_step() {
            self.survival(mid)
        } else {
            self.survival(t)
        }
    }

    fn tail(&self, s: f64) -> Option<(f64, f64)> {
        match self {
            Law::Sorted(v) => (s >= *v.last().expect("nonempty sample")).then_some((0.0, 0.0)),
            Law::Spec(spec) => spec.tail_remainder(s),
        }
    }
}

/// Whether `F - G` keeps one sign on `[1, ∞)`, so that the distance between
/// the tails equals the difference of the tail integrals.
fn tails_ordered(f: &Law, g: &Law) -> bool {
    matches!(
        (f, g),
        (Law::Spec(DistributionSpec::Pareto { .. }), Law::Spec(DistributionSpec::Pareto { .. }))
            | (
                Law::Spec(DistributionSpec::Exponential { .. }),
                Law::Spec(DistributionSpec::Exponential { .. })
            )
    )
}

/// Mean absolute difference of two sorted samples of equal size.
fn sorted_difference(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

/// `d_W(f, g)` for one-dimensional laws with finite means.
pub fn wasserstein_1d(f: &DistributionSpec, g: &DistributionSpec, config: &QuadratureConfig) -> Result<Estimate> {
    config.validate()?;
    let lf = Law::new(f)?;
    let lg = Law::new(g)?;
    if let (Law::Sorted(a), Law::Sorted(b)) = (&lf, &lg) {
        if a.len() == b.len() {
            return Ok(Estimate::exact(sorted_difference(a, b)));
        }
    }
    if let (Law::Spec(a), Law::Spec(b)) = (&lf, &lg) {
        if a == b {
            return Ok(Estimate::exact(0.0));
        }
    }

    let mut breaks = lf.breakpoints();
    breaks.extend(lg.breakpoints());
    breaks.extend(lf.crossings(&lg.levels()));
    breaks.extend(lg.crossings(&lf.levels()));
    breaks.retain(|b| b.is_finite() && *b > 0.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    // Between consecutive breakpoints both cdfs are smooth and F - G keeps
    // its sign; step laws are frozen at the piece midpoint so that the jumps
    // never enter a quadrature panel.
    let last = breaks.last().copied().unwrap_or(0.0);
    let mut body = Estimate::exact(0.0);
    let mut lo = 0.0;
    for &hi in &breaks {
        let mid = 0.5 * (lo + hi);
        let tol = (config.abs_tol * (hi - lo) / last).max(f64::MIN_POSITIVE);
        let piece = integrate(
            |t| (lf.survival_on_piece(t, mid) - lg.survival_on_piece(t, mid)).abs(),
            lo,
            hi,
            &[],
            tol,
            config.max_subdivisions,
        )?;
        body = body + piece;
        lo = hi;
    }

    let first_upper = (2.0 * last).max(4.0 * (lf.mean() + lg.mean())).max(1.0);
    let ordered = tails_ordered(&lf, &lg);
    let tail = integrate_to_infinity(
        |t| (lf.survival(t) - lg.survival(t)).abs(),
        last,
        first_upper,
        &[],
        |s| {
            let (rf, ef) = lf.tail(s)?;
            let (rg, eg) = lg.tail(s)?;
            let gap = if ordered || rf == 0.0 || rg == 0.0 {
                0.0
            } else {
                2.0 * rf.min(rg)
            };
            Some(Estimate {
                value: (rf - rg).abs(),
                error: gap + ef + eg,
            })
        },
        config,
    )?;
    Ok(body + tail)
}

/// One-dimensional coordinate laws of a law with independent coordinates.
fn independent_marginals(spec: &DistributionSpec) -> Result<Vec<DistributionSpec>> {
    let ok = match spec {
        DistributionSpec::IndependentProduct { components } => components.iter().all(|c| c.dim() == 1),
        DistributionSpec::Copula { family, dim } => *family == CopulaFamily::Independence || *dim == 1,
        DistributionSpec::Degenerate { .. } => true,
        other => other.dim() == 1,
    };
    if !ok {
        return Err(Error::Domain(format!(
            "{} is not a product of one-dimensional laws",
            spec.label()
        )));
    }
    (0..spec.dim()).map(|i| spec.marginal(i)).collect()
}

/// `d_W` between two product laws: the sum of the coordinatewise distances.
pub fn wasserstein_product(f: &DistributionSpec, g: &DistributionSpec, config: &QuadratureConfig) -> Result<Estimate> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: g.dim(),
        });
    }
    let fm = independent_marginals(f)?;
    let gm = independent_marginals(g)?;
    let mut total = Estimate::exact(0.0);
    for (a, b) in fm.iter().zip(&gm) {
        total = total + wasserstein_1d(a, b, config)?;
    }
    Ok(total)
}

/// `d_W` of one-dimensional or product laws.
pub fn wasserstein(f: &DistributionSpec, g: &DistributionSpec, config: &QuadratureConfig) -> Result<Estimate> {
    if f.dim() == 1 && g.dim() == 1 {
        wasserstein_1d(f, g, config)
    } else {
        wasserstein_product(f, g, config)
    }
}

fn sup_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Largest value of `|‖x‖_A - ‖x‖_B| - ‖x‖_∞ w` over the probes; the
/// Lipschitz inequality says this is at most zero when `w ≥ d_W(A, B)`.
pub fn lipschitz_check(fn_handle: &FNorm, f_handle: &FNorm, w: f64, probes: &[Vec<f64>]) -> Result<f64> {
    if fn_handle.dim() != f_handle.dim() {
        return Err(Error::DimensionMismatch {
            expected: f_handle.dim(),
            found: fn_handle.dim(),
        });
    }
    if probes.is_empty() {
        return Err(Error::Domain("probe grid is empty".into()));
    }
    let v: Vec<f64> = probes
        .par_iter()
        .map(|x| Ok((fn_handle.eval(x)? - f_handle.eval(x)?).abs() - sup_abs(x) * w))
        .collect::<Result<_>>()?;
    Ok(v.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceRow {
    pub index: usize,
    pub label: String,
    /// `max_x |‖x‖_{F_n} - ‖x‖_F|` over the probe grid.
    pub deviation: f64,
    pub wasserstein: f64,
    pub wasserstein_error: f64,
    /// `max_x ‖x‖_∞ · d_W`.
    pub bound: f64,
}

/// Tabulates the F-norm deviation and the Wasserstein distance of each law of
/// `sequence` from `limit`.
pub fn wasserstein_equivalence_experiment(
    sequence: &[(String, DistributionSpec)],
    limit: &DistributionSpec,
    probes: &[Vec<f64>],
    config: &QuadratureConfig,
) -> Result<Vec<EquivalenceRow>> {
    if probes.is_empty() {
        return Err(Error::Domain("probe grid is empty".into()));
    }
    if let Some(p) = probes.iter().find(|p| p.len() != limit.dim() + 1) {
        return Err(Error::DimensionMismatch {
            expected: limit.dim() + 1,
            found: p.len(),
        });
    }
    let target = FNorm::auto(limit.clone(), *config, None)?;
    let reference: Vec<f64> = probes.par_iter().map(|x| target.eval(x)).collect::<Result<_>>()?;
    let x_inf = probes.iter().map(|x| sup_abs(x)).fold(0.0, f64::max);
    sequence
        .iter()
        .enumerate()
        .map(|(index, (label, spec))| {
            let h = FNorm::auto(spec.clone(), *config, None)?;
            let deviation = probes
                .par_iter()
                .zip(&reference)
                .map(|(x, r)| Ok((h.eval(x)? - r).abs()))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            let w = wasserstein(spec, limit, config)?;
            Ok(EquivalenceRow {
                index,
                label: label.clone(),
                deviation,
                wasserstein: w.value,
                wasserstein_error: w.error,
                bound: x_inf * w.value,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{seeded_rng, SampleMatrix};

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn elementary_distances() {
        let u = DistributionSpec::Uniform01;
        let half = DistributionSpec::degenerate(vec![0.5]).unwrap();
        assert!((wasserstein_1d(&u, &half, &cfg()).unwrap().value - 0.25).abs() < 1e-10);
        assert_eq!(wasserstein_1d(&u, &u, &cfg()).unwrap().value, 0.0);
        let p = wasserstein_1d(
            &DistributionSpec::pareto(0.5).unwrap(),
            &DistributionSpec::pareto(0.25).unwrap(),
            &cfg(),
        )
        .unwrap();
        assert!((p.value - 2.0 / 3.0).abs() < 1e-8, "{p:?}");
    }

    #[test]
    fn exponential_pair_is_mean_difference() {
        let w = wasserstein_1d(
            &DistributionSpec::exponential(1.0).unwrap(),
            &DistributionSpec::exponential(2.0).unwrap(),
            &cfg(),
        )
        .unwrap();
        assert!((w.value - 0.5).abs() < 1e-9);
    }

    #[test]
    fn products_sum_coordinates() {
        let u = DistributionSpec::product(vec![DistributionSpec::Uniform01, DistributionSpec::Uniform01]).unwrap();
        let h = DistributionSpec::degenerate(vec![0.5, 0.5]).unwrap();
        assert!((wasserstein_product(&u, &h, &cfg()).unwrap().value - 0.5).abs() < 1e-10);
        let a = DistributionSpec::product(vec![DistributionSpec::Uniform01, DistributionSpec::pareto(0.5).unwrap()]).unwrap();
        let b = DistributionSpec::product(vec![DistributionSpec::Uniform01, DistributionSpec::pareto(0.25).unwrap()]).unwrap();
        assert!((wasserstein_product(&a, &b, &cfg()).unwrap().value - 2.0 / 3.0).abs() < 1e-8);
        let c = DistributionSpec::copula(CopulaFamily::Comonotone, 2).unwrap();
        assert!(wasserstein_product(&c, &u, &cfg()).is_err());
    }

    #[test]
    fn empirical_against_uniform() {
        let mut rng = seeded_rng(3);
        let s = DistributionSpec::Uniform01.sample(200, &mut rng).unwrap();
        let mut v = s.column(0);
        v.sort_by(f64::total_cmp);
        // ∫|F_n - F| as a sum over the sample cells, computed directly
        let n = v.len() as f64;
        let mut oracle = 0.0;
        let mut prev = 0.0;
        for (k, x) in v.iter().chain(std::iter::once(&1.0)).enumerate() {
            let level = k as f64 / n;
            let (a, b) = (prev, *x);
            let cell = |lo: f64, hi: f64| (hi * hi - lo * lo) / 2.0 - level * (hi - lo);
            oracle += if level <= a {
                cell(a, b)
            } else if level >= b {
                -cell(a, b)
            } else {
                -cell(a, level) + cell(level, b)
            };
            prev = *x;
        }
        let e = DistributionSpec::empirical(s);
        let w = wasserstein_1d(&e, &DistributionSpec::Uniform01, &cfg()).unwrap();
        assert!((w.value - oracle).abs() < 1e-10, "{} vs {oracle}", w.value);
    }

    #[test]
    fn equal_size_samples_use_sorted_coupling() {
        let a = SampleMatrix::from_flat(3, 1, vec![3.0, 1.0, 2.0]).unwrap();
        let b = SampleMatrix::from_flat(3, 1, vec![0.0, 5.0, 1.0]).unwrap();
        let w = wasserstein_1d(&DistributionSpec::empirical(a), &DistributionSpec::empirical(b), &cfg()).unwrap();
        assert!((w.value - (1.0 + 1.0 + 2.0) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn lipschitz_bound_holds_for_pareto() {
        let f = DistributionSpec::pareto(0.5).unwrap();
        let g = DistributionSpec::pareto(0.4).unwrap();
        let w = wasserstein_1d(&f, &g, &cfg()).unwrap().value;
        let probes: Vec<Vec<f64>> = (0..50).map(|k| vec![0.1 + 0.04 * k as f64, 1.0 + 0.02 * k as f64]).collect();
        let v = lipschitz_check(
            &FNorm::closed_form(f).unwrap(),
            &FNorm::closed_form(g).unwrap(),
            w,
            &probes,
        )
        .unwrap();
        assert!(v <= 1e-8, "violation {v}");
    }
}
