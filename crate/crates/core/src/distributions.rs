//! Declarative distribution specifications.
//!
//! A [`DistributionSpec`] describes the law of a nonnegative random vector
//! `X = (X1, …, Xd)`. It provides the joint cdf where one is available, the
//! left-continuous quantile function in dimension one, inverse-transform
//! sampling from a seeded stream, marginal means, and the check that every
//! component is nonnegative with a finite, strictly positive mean.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{gamma_fn, lower_incomplete_gamma, norm_cdf, norm_quantile};

/// Portable seeded random stream used by every stochastic routine.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed of the `index`-th independent sub-stream derived from `seed`.
pub fn substream_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CopulaFamily {
    Independence,
    Comonotone,
}

/// An `n × d` matrix of nonnegative observations, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleMatrix {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl SampleMatrix {
    pub fn from_flat(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidSpec("sample must have at least one row and one column".into()));
        }
        if data.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                found: data.len(),
            });
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidSpec(format!(
                "sample entries must be finite and nonnegative, found {bad}"
            )));
        }
        Ok(Self { data, n, d })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: r.len(),
            });
        }
        Self::from_flat(rows.len(), d, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.d];
        for r in self.rows() {
            for (s, v) in sums.iter_mut().zip(r) {
                *s += v;
            }
        }
        sums.iter().map(|s| s / self.n as f64).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Reads a CSV file with one header row and one observation per line.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let d = rdr.headers()?.len();
        let mut data = Vec::new();
        let mut n = 0;
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: rec.len(),
                });
            }
            for field in rec.iter() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| Error::InvalidSpec(format!("not a number in sample file: {field:?}")))?;
                data.push(v);
            }
            n += 1;
        }
        Self::from_flat(n, d, data)
    }

    /// Writes the sample as CSV with a `x1,…,xd` header.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().from_writer(writer);
        w.write_record((1..=self.d).map(|j| format!("x{j}")))?;
        for r in self.rows() {
            w.write_record(r.iter().map(|v| format!("{v}")))?;
        }
        w.flush().map_err(|source| Error::Io {
            path: PathBuf::from("<csv output>"),
            source,
        })?;
        Ok(())
    }
}

/// Law of a nonnegative random vector.
#[derive(Clone, Debug, PartialEq)]
pub enum DistributionSpec {
    /// Point mass at `c`.
    Degenerate { c: Vec<f64> },
    Bernoulli { p: f64 },
    Uniform01,
    Exponential { lambda: f64 },
    /// Pareto law with cdf `1 - t^(-1/gamma)` on `[1, ∞)`.
    Pareto { gamma: f64 },
    /// Fréchet law with cdf `exp(-t^(-shape))` on `(0, ∞)`.
    Frechet { shape: f64 },
    /// `exp(N(mu, sigma2))`.
    LogNormal { mu: f64, sigma2: f64 },
    /// `exp(N(mu, cov))`, componentwise.
    MultiNormalExp { mu: Vec<f64>, cov: Vec<Vec<f64>> },
    /// Independent blocks, concatenated in order.
    IndependentProduct { components: Vec<DistributionSpec> },
    Copula { family: CopulaFamily, dim: usize },
    Empirical {
        sample: SampleMatrix,
        /// File the sample was loaded from, kept for serialization.
        file: Option<String>,
    },
}

/// One coordinate that violates nonnegativity or has a non-positive or infinite mean.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HViolation {
    pub coordinate: usize,
    pub mean: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub violations: Vec<HViolation>,
}

impl DistributionSpec {
    pub fn degenerate(c: Vec<f64>) -> Result<Self> {
        Self::checked(Self::Degenerate { c })
    }
    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::checked(Self::Bernoulli { p })
    }
    pub fn exponential(lambda: f64) -> Result<Self> {
        Self::checked(Self::Exponential { lambda })
    }
    pub fn pareto(gamma: f64) -> Result<Self> {
        Self::checked(Self::Pareto { gamma })
    }
    pub fn frechet(shape: f64) -> Result<Self> {
        Self::checked(Self::Frechet { shape })
    }
    pub fn log_normal(mu: f64, sigma2: f64) -> Result<Self> {
        Self::checked(Self::LogNormal { mu, sigma2 })
    }
    pub fn multi_normal_exp(mu: Vec<f64>, cov: Vec<Vec<f64>>) -> Result<Self> {
        Self::checked(Self::MultiNormalExp { mu, cov })
    }
    pub fn product(components: Vec<DistributionSpec>) -> Result<Self> {
        Self::checked(Self::IndependentProduct { components })
    }
    pub fn copula(family: CopulaFamily, dim: usize) -> Result<Self> {
        Self::checked(Self::Copula { family, dim })
    }
    pub fn empirical(sample: SampleMatrix) -> Self {
        Self::Empirical { sample, file: None }
    }

    fn checked(spec: Self) -> Result<Self> {
        spec.validate_params()?;
        Ok(spec)
    }

    /// Short name of the variant.
    pub fn label(&self) -> &'static str {
        match self {
            Self::Degenerate { .. } => "degenerate",
            Self::Bernoulli { .. } => "bernoulli",
            Self::Uniform01 => "uniform",
            Self::Exponential { .. } => "exponential",
            Self::Pareto { .. } => "pareto",
            Self::Frechet { .. } => "frechet",
            Self::LogNormal { .. } => "lognormal",
            Self::MultiNormalExp { .. } => "multinormal_exp",
            Self::IndependentProduct { .. } => "product",
            Self::Copula { .. } => "copula",
            Self::Empirical { .. } => "empirical",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Degenerate { c } => c.len(),
            Self::MultiNormalExp { mu, .. } => mu.len(),
            Self::IndependentProduct { components } => components.iter().map(Self::dim).sum(),
            Self::Copula { dim, .. } => *dim,
            Self::Empirical { sample, .. } => sample.d(),
            _ => 1,
        }
    }

    /// Checks every parameter against its domain. Nonnegativity and positive
    /// means are left to [`DistributionSpec::validate_h`].
    pub fn validate_params(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        match self {
            Self::Degenerate { c } => {
                if c.is_empty() || c.iter().any(|v| !v.is_finite()) {
                    return bad(format!("degenerate point must be a nonempty finite vector, got {c:?}"));
                }
            }
            Self::Bernoulli { p } => {
                if !(*p > 0.0 && *p < 1.0) {
                    return bad(format!("bernoulli p must lie in (0,1), got {p}"));
                }
            }
            Self::Uniform01 => {}
            Self::Exponential { lambda } => {
                if !(*lambda > 0.0 && lambda.is_finite()) {
                    return bad(format!("exponential rate must be positive, got {lambda}"));
                }
            }
            Self::Pareto { gamma } => {
                if !(*gamma > 0.0 && *gamma < 1.0) {
                    return bad(format!("pareto tail index must lie in (0,1), got {gamma}"));
                }
            }
            Self::Frechet { shape } => {
                if !(*shape > 1.0 && shape.is_finite()) {
                    return bad(format!("frechet shape must exceed 1, got {shape}"));
                }
            }
            Self::LogNormal { mu, sigma2 } => {
                if !mu.is_finite() || !(*sigma2 > 0.0 && sigma2.is_finite()) {
                    return bad(format!("lognormal needs finite mu and sigma2 > 0, got ({mu}, {sigma2})"));
                }
            }
            Self::MultiNormalExp { mu, cov } => {
                let d = mu.len();
                if d == 0 || mu.iter().any(|m| !m.is_finite()) {
                    return bad("multinormal_exp needs a nonempty finite mean vector".into());
                }
                if cov.len() != d || cov.iter().any(|r| r.len() != d) {
                    return bad(format!("covariance must be {d}x{d}"));
                }
                for i in 0..d {
                    for j in 0..d {
                        if !cov[i][j].is_finite() || (cov[i][j] - cov[j][i]).abs() > 1e-12 * (1.0 + cov[i][j].abs()) {
                            return bad("covariance must be finite and symmetric".into());
                        }
                    }
                }
                cholesky_psd(cov)?;
            }
            Self::IndependentProduct { components } => {
                if components.is_empty() {
                    return bad("product needs at least one component".into());
                }
                for c in components {
                    c.validate_params()?;
                }
            }
            Self::Copula { dim, .. } => {
                if *dim == 0 {
                    return bad("copula dimension must be positive".into());
                }
            }
            Self::Empirical { .. } => {}
        }
        Ok(())
    }

    fn is_diagonal_cov(cov: &[Vec<f64>]) -> bool {
        cov.iter()
            .enumerate()
            .all(|(i, r)| r.iter().enumerate().all(|(j, v)| i == j || *v == 0.0))
    }

    /// Cdf of a one-dimensional variant at `t`.
    fn cdf1(&self, t: f64) -> f64 {
        match self {
            Self::Degenerate { c } => {
                if t >= c[0] {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Bernoulli { p } => {
                if t < 0.0 {
                    0.0
                } else if t < 1.0 {
                    1.0 - p
                } else {
                    1.0
                }
            }
            Self::Uniform01 => t.clamp(0.0, 1.0),
            Self::Exponential { lambda } => {
                if t <= 0.0 {
                    0.0
                } else {
                    -(-lambda * t).exp_m1()
                }
            }
            Self::Pareto { gamma } => {
                if t < 1.0 {
                    0.0
                } else {
                    1.0 - t.powf(-1.0 / gamma)
                }
            }
            Self::Frechet { shape } => {
                if t <= 0.0 {
                    0.0
                } else {
                    (-t.powf(-shape)).exp()
                }
            }
            Self::LogNormal { mu, sigma2 } => {
                if t <= 0.0 {
                    0.0
                } else {
                    norm_cdf((t.ln() - mu) / sigma2.sqrt())
                }
            }
            Self::MultiNormalExp { mu, cov } => Self::LogNormal {
                mu: mu[0],
                sigma2: cov[0][0],
            }
            .cdf1(t),
            Self::IndependentProduct { components } => components[0].cdf1(t),
            Self::Copula { .. } => t.clamp(0.0, 1.0),
            Self::Empirical { sample, .. } => {
                sample.rows().filter(|r| r[0] <= t).count() as f64 / sample.n() as f64
            }
        }
    }

    /// Joint cdf `F(t1, …, td)`.
    pub fn cdf(&self, t: &[f64]) -> Result<f64> {
        self.check_len(t.len())?;
        if t.iter().any(|v| v.is_nan()) {
            return Err(Error::Domain("cdf argument must not be NaN".into()));
        }
        match self {
            Self::Degenerate { c } => Ok(if c.iter().zip(t).all(|(ci, ti)| ti >= ci) {
                1.0
            } else {
                0.0
            }),
            Self::MultiNormalExp { mu, cov } => {
                if !Self::is_diagonal_cov(cov) {
                    return Err(Error::CdfUnavailable("multinormal_exp with non-diagonal covariance".into()));
                }
                Ok(mu
                    .iter()
                    .zip(t)
                    .enumerate()
                    .map(|(i, (m, ti))| Self::LogNormal { mu: *m, sigma2: cov[i][i] }.cdf1(*ti))
                    .product())
            }
            Self::IndependentProduct { components } => {
                let mut acc = 1.0;
                let mut off = 0;
                for c in components {
                    let k = c.dim();
                    acc *= c.cdf(&t[off..off + k])?;
                    off += k;
                }
                Ok(acc)
            }
            Self::Copula { family, .. } => {
                let clamped = t.iter().map(|v| v.clamp(0.0, 1.0));
                Ok(match family {
                    CopulaFamily::Independence => clamped.product(),
                    CopulaFamily::Comonotone => clamped.fold(1.0, f64::min),
                })
            }
            Self::Empirical { sample, .. } => {
                let hits = sample
                    .rows()
                    .filter(|r| r.iter().zip(t).all(|(x, ti)| x <= ti))
                    .count();
                Ok(hits as f64 / sample.n() as f64)
            }
            _ => Ok(self.cdf1(t[0])),
        }
    }

    /// `P(max_i a_i X_i ≤ t)` for `t ≥ 0` and scales `a_i ≥ 0`. Coordinates
    /// with a zero scale are dropped, which realizes the convention `1/0 = ∞`
    /// of the fundamental formula without dividing by zero.
    pub fn scaled_max_cdf(&self, scales: &[f64], t: f64) -> Result<f64> {
        self.check_len(scales.len())?;
        if t < 0.0 {
            return Ok(0.0);
        }
        match self {
            Self::Degenerate { c } => Ok(if c.iter().zip(scales).all(|(ci, a)| a * ci <= t) {
                1.0
            } else {
                0.0
            }),
            Self::MultiNormalExp { mu, cov } => {
                let active: Vec<usize> = (0..mu.len()).filter(|&i| scales[i] > 0.0).collect();
                let independent = active
                    .iter()
                    .all(|&i| active.iter().all(|&j| i == j || cov[i][j] == 0.0));
                if !independent {
                    return Err(Error::CdfUnavailable("multinormal_exp with non-diagonal covariance".into()));
                }
                Ok(active
                    .iter()
                    .map(|&i| Self::LogNormal { mu: mu[i], sigma2: cov[i][i] }.cdf1(t / scales[i]))
                    .product())
            }
            Self::IndependentProduct { components } => {
                let mut acc = 1.0;
                let mut off = 0;
                for c in components {
                    let k = c.dim();
                    acc *= c.scaled_max_cdf(&scales[off..off + k], t)?;
                    off += k;
                }
                Ok(acc)
            }
            Self::Copula { family, .. } => {
                let ratios = scales
                    .iter()
                    .filter(|a| **a > 0.0)
                    .map(|a| (t / a).min(1.0));
                Ok(match family {
                    CopulaFamily::Independence => ratios.product(),
                    CopulaFamily::Comonotone => ratios.fold(1.0, f64::min),
                })
            }
            Self::Empirical { sample, .. } => {
                let hits = sample
                    .rows()
                    .filter(|r| r.iter().zip(scales).all(|(x, a)| a * x <= t))
                    .count();
                Ok(hits as f64 / sample.n() as f64)
            }
            _ => {
                let a = scales[0];
                Ok(if a > 0.0 { self.cdf1(t / a) } else { 1.0 })
            }
        }
    }

    /// Points where `t ↦ P(max_i a_i X_i ≤ t)` has a kink or a jump.
    pub fn breakpoints(&self, scales: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        match self {
            Self::Degenerate { c } => out.extend(c.iter().zip(scales).map(|(ci, a)| ci * a)),
            Self::Bernoulli { .. } | Self::Uniform01 | Self::Pareto { .. } => out.push(scales[0]),
            Self::Copula { .. } => out.extend(scales.iter().copied()),
            Self::IndependentProduct { components } => {
                let mut off = 0;
                for c in components {
                    let k = c.dim();
                    out.extend(c.breakpoints(&scales[off..off + k]));
                    off += k;
                }
            }
            Self::Empirical { sample, .. } => {
                for r in sample.rows() {
                    out.push(r.iter().zip(scales).map(|(x, a)| a * x).fold(0.0, f64::max));
                }
            }
            _ => {}
        }
        out.retain(|v| *v > 0.0 && v.is_finite());
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: len,
            })
        }
    }

    fn require_1d(&self, what: &str) -> Result<()> {
        if self.dim() == 1 {
            Ok(())
        } else {
            Err(Error::Domain(format!("{what} requires a one-dimensional distribution, got d = {}", self.dim())))
        }
    }

    /// Left-continuous inverse of the cdf, `inf{t : F(t) ≥ u}`, for `u ∈ (0,1)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        self.require_1d("quantile")?;
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("quantile level must lie in (0,1), got {u}")));
        }
        Ok(self.quantile_unchecked(u))
    }

    /// Quantile function on the closed interval `[0, 1]`, with the limits at
    /// the endpoints. Assumes a one-dimensional spec.
    pub(crate) fn quantile_unchecked(&self, u: f64) -> f64 {
        match self {
            Self::Degenerate { c } => c[0],
            Self::Bernoulli { p } => {
                if u <= 1.0 - p {
                    0.0
                } else {
                    1.0
                }
            }
            Self::Uniform01 | Self::Copula { .. } => u,
            Self::Exponential { lambda } => -(-u).ln_1p() / lambda,
            Self::Pareto { gamma } => (1.0 - u).powf(-gamma),
            Self::Frechet { shape } => (-u.ln()).powf(-1.0 / shape),
            Self::LogNormal { mu, sigma2 } => (mu + sigma2.sqrt() * norm_quantile(u)).exp(),
            Self::MultiNormalExp { mu, cov } => (mu[0] + cov[0][0].sqrt() * norm_quantile(u)).exp(),
            Self::IndependentProduct { components } => components[0].quantile_unchecked(u),
            Self::Empirical { sample, .. } => {
                let mut col = sample.column(0);
                col.sort_by(f64::total_cmp);
                empirical_quantile(&col, u)
            }
        }
    }

    /// `n` iid draws, by inverse transform from `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<SampleMatrix> {
        if n == 0 {
            return Err(Error::Domain("sample size must be at least 1".into()));
        }
        let d = self.dim();
        let chol = match self {
            Self::MultiNormalExp { cov, .. } => Some(cholesky_psd(cov)?),
            _ => None,
        };
        let mut data = Vec::with_capacity(n * d);
        let mut z = vec![0.0; d];
        for _ in 0..n {
            self.draw_row(rng, chol.as_deref(), &mut z, &mut data);
        }
        SampleMatrix::from_flat(n, d, data)
    }

    fn draw_row<R: Rng + ?Sized>(&self, rng: &mut R, chol: Option<&[Vec<f64>]>, z: &mut [f64], out: &mut Vec<f64>) {
        match self {
            Self::Degenerate { c } => out.extend_from_slice(c),
            Self::MultiNormalExp { mu, .. } => {
                let l = chol.expect("cholesky factor computed before sampling");
                let d = mu.len();
                for zi in z.iter_mut().take(d) {
                    *zi = norm_quantile(rng.sample(Open01));
                }
                for i in 0..d {
                    let s: f64 = (0..=i).map(|j| l[i][j] * z[j]).sum();
                    out.push((mu[i] + s).exp());
                }
            }
            Self::IndependentProduct { components } => {
                for c in components {
                    let chol_c = match c {
                        Self::MultiNormalExp { cov, .. } => cholesky_psd(cov).ok(),
                        _ => None,
                    };
                    let mut zc = vec![0.0; c.dim()];
                    c.draw_row(rng, chol_c.as_deref(), &mut zc, out);
                }
            }
            Self::Copula { family, dim } => match family {
                CopulaFamily::Independence => {
                    for _ in 0..*dim {
                        out.push(rng.sample(Open01));
                    }
                }
                CopulaFamily::Comonotone => {
                    let u: f64 = rng.sample(Open01);
                    out.extend(std::iter::repeat_n(u, *dim));
                }
            },
            Self::Empirical { sample, .. } => {
                let u: f64 = rng.random::<f64>();
                let i = ((u * sample.n() as f64) as usize).min(sample.n() - 1);
                out.extend_from_slice(sample.row(i));
            }
            _ => {
                let u: f64 = rng.sample(Open01);
                out.push(self.quantile_unchecked(u));
            }
        }
    }

    /// One-dimensional marginal law of coordinate `i`.
    pub fn marginal(&self, i: usize) -> Result<DistributionSpec> {
        if i >= self.dim() {
            return Err(Error::Domain(format!("coordinate {i} out of range for d = {}", self.dim())));
        }
        Ok(match self {
            Self::Degenerate { c } => Self::Degenerate { c: vec![c[i]] },
            Self::MultiNormalExp { mu, cov } => Self::LogNormal {
                mu: mu[i],
                sigma2: cov[i][i],
            },
            Self::IndependentProduct { components } => {
                let mut off = 0;
                for c in components {
                    if i < off + c.dim() {
                        return c.marginal(i - off);
                    }
                    off += c.dim();
                }
                unreachable!("coordinate checked against dim")
            }
            Self::Copula { .. } => Self::Uniform01,
            Self::Empirical { sample, .. } => Self::Empirical {
                sample: SampleMatrix::from_flat(sample.n(), 1, sample.column(i))?,
                file: None,
            },
            other => other.clone(),
        })
    }

    /// `E(X_i)`.
    pub fn marginal_mean(&self, i: usize) -> Result<f64> {
        Ok(match self.marginal(i)? {
            Self::Degenerate { c } => c[0],
            Self::Bernoulli { p } => p,
            Self::Uniform01 => 0.5,
            Self::Exponential { lambda } => 1.0 / lambda,
            Self::Pareto { gamma } => 1.0 / (1.0 - gamma),
            Self::Frechet { shape } => gamma_fn(1.0 - 1.0 / shape),
            Self::LogNormal { mu, sigma2 } => (mu + sigma2 / 2.0).exp(),
            Self::Empirical { sample, .. } => sample.column_means()[0],
            _ => unreachable!("marginals are one-dimensional catalog variants"),
        })
    }

    pub fn marginal_means(&self) -> Result<Vec<f64>> {
        (0..self.dim()).map(|i| self.marginal_mean(i)).collect()
    }

    /// Variance of a one-dimensional law, `None` when infinite.
    pub fn variance(&self) -> Result<Option<f64>> {
        self.require_1d("variance")?;
        let m = self.marginal_mean(0)?;
        Ok(match self.marginal(0)? {
            Self::Degenerate { .. } => Some(0.0),
            Self::Bernoulli { p } => Some(p * (1.0 - p)),
            Self::Uniform01 => Some(1.0 / 12.0),
            Self::Exponential { lambda } => Some(1.0 / (lambda * lambda)),
            Self::Pareto { gamma } => (gamma < 0.5).then(|| 1.0 / (1.0 - 2.0 * gamma) - m * m),
            Self::Frechet { shape } => (shape > 2.0).then(|| gamma_fn(1.0 - 2.0 / shape) - m * m),
            Self::LogNormal { mu, sigma2 } => Some(sigma2.exp_m1() * (2.0 * mu + sigma2).exp()),
            Self::Empirical { sample, .. } => {
                let n = sample.n() as f64;
                Some(sample.as_flat().iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n)
            }
            _ => None,
        })
    }

    /// Right end of the support of a one-dimensional law, if finite.
    pub fn upper_support(&self) -> Option<f64> {
        if self.dim() != 1 {
            return None;
        }
        match self.marginal(0).ok()? {
            Self::Degenerate { c } => Some(c[0]),
            Self::Bernoulli { .. } | Self::Uniform01 | Self::Copula { .. } => Some(1.0),
            Self::Empirical { sample, .. } => Some(sample.as_flat().iter().copied().fold(0.0, f64::max)),
            _ => None,
        }
    }

    /// `∫_s^∞ (1 - F(u)) du` in closed form, for the heavy-tailed catalog
    /// laws (exponential, Pareto, Fréchet) and for bounded laws beyond their
    /// support. The second component bounds the error of the value.
    pub fn tail_remainder(&self, s: f64) -> Option<(f64, f64)> {
        if self.dim() != 1 {
            return None;
        }
        if let Some(top) = self.upper_support() {
            return (s >= top).then_some((0.0, 0.0));
        }
        match self {
            Self::Exponential { lambda } => Some(((-lambda * s).exp() / lambda, 0.0)),
            Self::Pareto { gamma } => {
                if s < 1.0 {
                    return None;
                }
                let k = 1.0 / gamma;
                Some((s.powf(1.0 - k) / (k - 1.0), 0.0))
            }
            Self::Frechet { shape } => {
                if s <= 0.0 {
                    return None;
                }
                // γ(1 - 1/p, s^-p) - s (1 - exp(-s^-p))
                let z = s.powf(-shape);
                let v = lower_incomplete_gamma(1.0 - 1.0 / shape, z) + s * (-z).exp_m1();
                Some((v.max(0.0), 1e-14 * v.abs()))
            }
            Self::IndependentProduct { components } if components.len() == 1 => {
                components[0].tail_remainder(s)
            }
            _ => None,
        }
    }

    /// Survival function `1 - F(t)` of a one-dimensional law.
    pub(crate) fn survival1(&self, t: f64) -> f64 {
        match self {
            Self::Exponential { lambda } => {
                if t <= 0.0 {
                    1.0
                } else {
                    (-lambda * t).exp()
                }
            }
            Self::Pareto { gamma } => {
                if t < 1.0 {
                    1.0
                } else {
                    t.powf(-1.0 / gamma)
                }
            }
            Self::Frechet { shape } => {
                if t <= 0.0 {
                    1.0
                } else {
                    -(-t.powf(-shape)).exp_m1()
                }
            }
            Self::LogNormal { mu, sigma2 } => {
                if t <= 0.0 {
                    1.0
                } else {
                    norm_cdf(-(t.ln() - mu) / sigma2.sqrt())
                }
            }
            other => 1.0 - other.cdf1(t),
        }
    }

    /// Checks that every component is nonnegative with `0 < E(X_i) < ∞`.
    pub fn validate_h(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for i in 0..self.dim() {
            let mean = self.marginal_mean(i).unwrap_or(f64::NAN);
            let negative_support = match self.marginal(i) {
                Ok(Self::Degenerate { c }) => c[0] < 0.0,
                _ => false,
            };
            let reason = if negative_support {
                Some("component takes negative values")
            } else if !mean.is_finite() {
                Some("mean is not finite")
            } else if mean <= 0.0 {
                Some("mean is not strictly positive")
            } else {
                None
            };
            if let Some(r) = reason {
                violations.push(HViolation {
                    coordinate: i,
                    mean,
                    reason: r.to_string(),
                });
            }
        }
        ValidationReport {
            passed: violations.is_empty(),
            violations,
        }
    }

    /// Parses the structured-text form, resolving `file` references against `base_dir`.
    pub fn from_json_str(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let repr: SpecRepr = serde_json::from_str(text)?;
        repr.into_spec(base_dir)
    }

    pub fn from_json_value(value: serde_json::Value, base_dir: Option<&Path>) -> Result<Self> {
        let repr: SpecRepr = serde_json::from_value(value)?;
        repr.into_spec(base_dir)
    }

    /// Structured-text form; empirical samples loaded from a file are written
    /// back as that file reference, others inline as `rows`.
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(SpecRepr::from_spec(self)).unwrap_or(serde_json::Value::Null)
    }
}

/// Order statistic `x_(⌈n u⌉)` of a sorted sample; the left-continuous
/// inverse of the empirical cdf.
pub fn empirical_quantile(sorted: &[f64], u: f64) -> f64 {
    let n = sorted.len();
    let k = (u * n as f64).ceil() as usize;
    sorted[k.clamp(1, n) - 1]
}

/// Lower-triangular `L` with `L Lᵀ = cov`, allowing zero pivots for
/// semidefinite matrices.
pub(crate) fn cholesky_psd(cov: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let d = cov.len();
    let scale = cov.iter().enumerate().map(|(i, r)| r[i].abs()).fold(0.0, f64::max).max(1.0);
    let tol = 1e-12 * scale;
    let mut l = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let piv = cov[i][i] - s;
                if piv < -tol {
                    return Err(Error::InvalidSpec("covariance matrix is not positive semidefinite".into()));
                }
                l[i][i] = piv.max(0.0).sqrt();
            } else if l[j][j] > 0.0 {
                l[i][j] = (cov[i][j] - s) / l[j][j];
            } else if (cov[i][j] - s).abs() > tol {
                return Err(Error::InvalidSpec("covariance matrix is not positive semidefinite".into()));
            }
        }
    }
    Ok(l)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum SpecRepr {
    Degenerate {
        c: Vec<f64>,
    },
    Bernoulli {
        p: f64,
    },
    #[serde(alias = "uniform01")]
    Uniform,
    Exponential {
        lambda: f64,
    },
    Pareto {
        gamma: f64,
    },
    Frechet {
        #[serde(alias = "p")]
        shape: f64,
    },
    #[serde(alias = "log_normal")]
    Lognormal {
        mu: f64,
        sigma2: f64,
    },
    MultinormalExp {
        mu: Vec<f64>,
        sigma: Vec<Vec<f64>>,
    },
    Product {
        components: Vec<SpecRepr>,
    },
    Copula {
        family: CopulaFamily,
        dim: usize,
    },
    Empirical {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        file: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rows: Option<Vec<Vec<f64>>>,
    },
}

impl SpecRepr {
    fn into_spec(self, base_dir: Option<&Path>) -> Result<DistributionSpec> {
        use DistributionSpec as D;
        let spec = match self {
            SpecRepr::Degenerate { c } => D::Degenerate { c },
            SpecRepr::Bernoulli { p } => D::Bernoulli { p },
            SpecRepr::Uniform => D::Uniform01,
            SpecRepr::Exponential { lambda } => D::Exponential { lambda },
            SpecRepr::Pareto { gamma } => D::Pareto { gamma },
            SpecRepr::Frechet { shape } => D::Frechet { shape },
            SpecRepr::Lognormal { mu, sigma2 } => D::LogNormal { mu, sigma2 },
            SpecRepr::MultinormalExp { mu, sigma } => D::MultiNormalExp { mu, cov: sigma },
            SpecRepr::Product { components } => D::IndependentProduct {
                components: components
                    .into_iter()
                    .map(|c| c.into_spec(base_dir))
                    .collect::<Result<_>>()?,
            },
            SpecRepr::Copula { family, dim } => D::Copula { family, dim },
            SpecRepr::Empirical { file, rows } => match (file, rows) {
                (Some(f), None) => {
                    let path = match base_dir {
                        Some(dir) if Path::new(&f).is_relative() => dir.join(&f),
                        _ => PathBuf::from(&f),
                    };
                    D::Empirical {
                        sample: SampleMatrix::read_csv(&path)?,
                        file: Some(f),
                    }
                }
                (None, Some(rows)) => D::Empirical {
                    sample: SampleMatrix::from_rows(&rows)?,
                    file: None,
                },
                _ => {
                    return Err(Error::InvalidSpec(
                        "empirical spec needs exactly one of `file` or `rows`".into(),
                    ))
                }
            },
        };
        spec.validate_params()?;
        Ok(spec)
    }

    fn from_spec(spec: &DistributionSpec) -> SpecRepr {
        use DistributionSpec as D;
        match spec {
            D::Degenerate { c } => SpecRepr::Degenerate { c: c.clone() },
            D::Bernoulli { p } => SpecRepr::Bernoulli { p: *p },
            D::Uniform01 => SpecRepr::Uniform,
            D::Exponential { lambda } => SpecRepr::Exponential { lambda: *lambda },
            D::Pareto { gamma } => SpecRepr::Pareto { gamma: *gamma },
            D::Frechet { shape } => SpecRepr::Frechet { shape: *shape },
            D::LogNormal { mu, sigma2 } => SpecRepr::Lognormal {
                mu: *mu,
                sigma2: *sigma2,
            },
            D::MultiNormalExp { mu, cov } => SpecRepr::MultinormalExp {
                mu: mu.clone(),
                sigma: cov.clone(),
            },
            D::IndependentProduct { components } => SpecRepr::Product {
                components: components.iter().map(SpecRepr::from_spec).collect(),
            },
            D::Copula { family, dim } => SpecRepr::Copula {
                family: *family,
                dim: *dim,
            },
            D::Empirical { sample, file } => match file {
                Some(f) => SpecRepr::Empirical {
                    file: Some(f.clone()),
                    rows: None,
                },
                None => SpecRepr::Empirical {
                    file: None,
                    rows: Some(sample.to_rows()),
                },
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_examples() {
        assert_eq!(DistributionSpec::Uniform01.cdf(&[0.5]).unwrap(), 0.5);
        let p = DistributionSpec::pareto(0.5).unwrap();
        assert!((p.cdf(&[4.0]).unwrap() - 0.9375).abs() < 1e-15);
        assert_eq!(p.cdf(&[0.99]).unwrap(), 0.0);
        let c = DistributionSpec::copula(CopulaFamily::Comonotone, 2).unwrap();
        assert_eq!(c.cdf(&[0.3, 0.7]).unwrap(), 0.3);
    }

    #[test]
    fn non_diagonal_lognormal_has_no_cdf() {
        let s = DistributionSpec::multi_normal_exp(vec![0.0, 0.0], vec![vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        assert!(matches!(s.cdf(&[1.0, 1.0]), Err(Error::CdfUnavailable(_))));
        // a single active coordinate only needs the marginal
        assert!(s.scaled_max_cdf(&[1.0, 0.0], 1.0).is_ok());
    }

    #[test]
    fn quantile_examples() {
        let e = DistributionSpec::exponential(1.0).unwrap();
        assert!((e.quantile(1.0 - (-1.0f64).exp()).unwrap() - 1.0).abs() < 1e-14);
        let p = DistributionSpec::pareto(0.5).unwrap();
        assert!((p.quantile(0.75).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(DistributionSpec::Uniform01.quantile(0.25).unwrap(), 0.25);
        assert!(matches!(p.quantile(1.0), Err(Error::Domain(_))));
        assert!(matches!(p.quantile(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn bernoulli_quantile_is_left_continuous() {
        let b = DistributionSpec::bernoulli(0.3).unwrap();
        assert_eq!(b.quantile(0.7).unwrap(), 0.0);
        assert_eq!(b.quantile(0.7000001).unwrap(), 1.0);
    }

    #[test]
    fn empirical_quantile_is_order_statistic() {
        let s = SampleMatrix::from_rows(&[vec![3.0], vec![1.0], vec![2.0], vec![4.0]]).unwrap();
        let e = DistributionSpec::empirical(s);
        assert_eq!(e.quantile(0.25).unwrap(), 1.0);
        assert_eq!(e.quantile(0.26).unwrap(), 2.0);
        assert_eq!(e.quantile(0.99).unwrap(), 4.0);
    }

    #[test]
    fn marginal_means() {
        assert_eq!(DistributionSpec::pareto(0.5).unwrap().marginal_mean(0).unwrap(), 2.0);
        let ln = DistributionSpec::log_normal(0.0, 1.0).unwrap();
        assert!((ln.marginal_mean(0).unwrap() - 0.5f64.exp()).abs() < 1e-15);
        let c = DistributionSpec::copula(CopulaFamily::Independence, 3).unwrap();
        assert_eq!(c.marginal_mean(2).unwrap(), 0.5);
        let f = DistributionSpec::frechet(2.0).unwrap();
        assert!((f.marginal_mean(0).unwrap() - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn validation_reports() {
        assert!(DistributionSpec::pareto(0.5).unwrap().validate_h().passed);
        let d = DistributionSpec::degenerate(vec![1.0, 0.0]).unwrap();
        let r = d.validate_h();
        assert!(!r.passed);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].coordinate, 1);

        let s = SampleMatrix::from_rows(&[vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap();
        let r = DistributionSpec::empirical(s).validate_h();
        assert!(!r.passed);
        assert_eq!(r.violations[0].coordinate, 1);
    }

    #[test]
    fn parameter_domains_are_enforced() {
        assert!(DistributionSpec::bernoulli(1.0).is_err());
        assert!(DistributionSpec::pareto(1.0).is_err());
        assert!(DistributionSpec::exponential(0.0).is_err());
        assert!(DistributionSpec::frechet(1.0).is_err());
        assert!(DistributionSpec::log_normal(0.0, 0.0).is_err());
        assert!(DistributionSpec::multi_normal_exp(vec![0.0, 0.0], vec![vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
        assert!(SampleMatrix::from_rows(&[vec![-1.0]]).is_err());
    }

    #[test]
    fn degenerate_samples_are_constant() {
        let d = DistributionSpec::degenerate(vec![2.0, 3.0]).unwrap();
        let s = d.sample(3, &mut seeded_rng(1)).unwrap();
        assert_eq!(s.to_rows(), vec![vec![2.0, 3.0]; 3]);
    }

    #[test]
    fn sampling_is_reproducible() {
        let spec = DistributionSpec::product(vec![
            DistributionSpec::pareto(0.3).unwrap(),
            DistributionSpec::Uniform01,
        ])
        .unwrap();
        let a = spec.sample(100, &mut seeded_rng(9)).unwrap();
        let b = spec.sample(100, &mut seeded_rng(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_and_bernoulli_sample_means() {
        let u = DistributionSpec::Uniform01.sample(1_000_000, &mut seeded_rng(11)).unwrap();
        assert!((u.column_means()[0] - 0.5).abs() < 0.002);
        let b = DistributionSpec::bernoulli(0.3).unwrap().sample(1_000_000, &mut seeded_rng(12)).unwrap();
        assert!((b.column_means()[0] - 0.3).abs() < 0.0014);
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"type":"product","components":[{"type":"pareto","gamma":0.5},{"type":"copula","family":"comonotone","dim":2}]}"#;
        let spec = DistributionSpec::from_json_str(text, None).unwrap();
        assert_eq!(spec.dim(), 3);
        let again = DistributionSpec::from_json_value(spec.to_json_value(), None).unwrap();
        assert_eq!(spec, again);
        assert!(DistributionSpec::from_json_str(r#"{"type":"pareto","gamma":1.5}"#, None).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let s = SampleMatrix::from_rows(&[vec![1.0, 2.5], vec![0.0, 3.0]]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("x1,x2\n"));
        assert_eq!(SampleMatrix::from_csv_reader(&buf[..]).unwrap(), s);
    }

    #[test]
    fn tail_remainders_match_quadrature() {
        use crate::quadrature::integrate;
        for spec in [
            DistributionSpec::exponential(1.5).unwrap(),
            DistributionSpec::pareto(0.4).unwrap(),
            DistributionSpec::frechet(2.5).unwrap(),
        ] {
            let s = 3.0;
            let (tail, _) = spec.tail_remainder(s).unwrap();
            let head = integrate(|u| spec.survival1(u), s, 1e4, &[], 1e-13, 100_000).unwrap().value;
            let beyond = spec.tail_remainder(1e4).unwrap().0;
            assert!((tail - head - beyond).abs() < 1e-10, "{}: {tail} vs {}", spec.label(), head + beyond);
        }
    }
}
