//! Positive-orthant unit spheres of F-norms and Hausdorff distances between them.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::husler_reiss_eval;
use crate::distributions::SampleMatrix;
use crate::error::{Error, Result};
use crate::fnorm::FNorm;

/// Largest allowed `|‖p‖ - 1|` for a traced sphere point.
pub const SPHERE_TOL: f64 = 1e-9;

/// Finite set of points approximating `{x ≥ 0 : ‖x‖ = 1}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpherePointCloud {
    pub points: Vec<Vec<f64>>,
    pub source: String,
    pub resolution: usize,
}

impl SpherePointCloud {
    pub fn new(points: Vec<Vec<f64>>, source: impl Into<String>, resolution: usize) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::Domain("point cloud must be nonempty".into()));
        }
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        Ok(Self {
            points,
            source: source.into(),
            resolution,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// CSV with header `x0,…,xd` and one point per row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record((0..self.ambient_dim()).map(|j| format!("x{j}")))?;
        for p in &self.points {
            w.write_record(p.iter().map(|v| format!("{v}")))?;
        }
        w.flush().map_err(|source| Error::Io {
            path: "<csv output>".into(),
            source,
        })?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, source: impl Into<String>) -> Result<Self> {
        let m = SampleMatrix::from_csv_reader(reader)?;
        Self::new(m.to_rows(), source, 0)
    }
}

/// Compositions of `m` into `parts` nonnegative integers, in lexicographic order.
fn compositions(m: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![m]];
    }
    let mut out = Vec::new();
    for first in (0..=m).rev() {
        for mut rest in compositions(m - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Scales every direction `s` of the barycentric lattice of resolution `m`
/// on the L¹ simplex to `s / ‖s‖`, and verifies each image lies on the sphere.
pub fn trace_sphere(handle: &FNorm, m: usize) -> Result<SpherePointCloud> {
    if m < 2 {
        return Err(Error::Domain("sphere resolution must be at least 2".into()));
    }
    let dirs = compositions(m, handle.dim() + 1);
    let points: Vec<Vec<f64>> = dirs
        .par_iter()
        .map(|c| {
            let s: Vec<f64> = c.iter().map(|&k| k as f64 / m as f64).collect();
            let norm = handle.eval(&s)?;
            let p: Vec<f64> = s.iter().map(|v| v / norm).collect();
            let check = handle.eval(&p)?;
            if (check - 1.0).abs() > SPHERE_TOL {
                return Err(Error::IntegrationFailure {
                    estimate: check,
                    error_bound: (check - 1.0).abs(),
                });
            }
            Ok(p)
        })
        .collect::<Result<_>>()?;
    SpherePointCloud::new(points, format!("{:?}", handle.method()).to_lowercase(), m)
}

/// Explicit parametrization of the positive-quadrant sphere of the
/// Hüsler-Reiss norm: `(1, λ) / ‖(1, λ)‖` for each `λ`, plus `(1,0)` and `(0,1)`.
pub fn hr_sphere_param(sigma: f64, lambdas: &[f64]) -> Result<SpherePointCloud> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    if lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::Domain("lambda grid must be positive".into()));
    }
    let mut points = Vec::with_capacity(lambdas.len() + 2);
    points.push(vec![1.0, 0.0]);
    for &l in lambdas {
        let n = husler_reiss_eval(sigma * sigma, 1.0, l)?;
        points.push(vec![1.0 / n, l / n]);
    }
    points.push(vec![0.0, 1.0]);
    SpherePointCloud::new(points, format!("husler-reiss sigma={sigma}"), lambdas.len())
}

/// Parses `log:a:b:n`, `lin:a:b:n`, or a comma-separated list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Domain(format!("cannot parse grid {text:?}; expected log:a:b:n, lin:a:b:n or a comma list"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 4 && (parts[0] == "log" || parts[0] == "lin") {
        let a: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let b: f64 = parts[2].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[3].trim().parse().map_err(|_| bad())?;
        if n < 2 || !(a.is_finite() && b.is_finite()) {
            return Err(bad());
        }
        let step = |k: usize| k as f64 / (n - 1) as f64;
        return if parts[0] == "log" {
            if a <= 0.0 || b <= 0.0 {
                return Err(bad());
            }
            let (la, lb) = (a.ln(), b.ln());
            Ok((0..n).map(|k| (la + (lb - la) * step(k)).exp()).collect())
        } else {
            Ok((0..n).map(|k| a + (b - a) * step(k)).collect())
        };
    }
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect()
}

/// Ambient norm used by the Hausdorff distance.
#[derive(Clone, Debug)]
pub enum Metric {
    Sup,
    L1,
    L2,
    FNorm(FNorm),
}

impl Metric {
    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "sup" | "linf" | "max" => Some(Metric::Sup),
            "l1" => Some(Metric::L1),
            "l2" => Some(Metric::L2),
            _ => None,
        }
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let diff = x.iter().zip(y).map(|(a, b)| a - b);
        Ok(match self {
            Metric::Sup => diff.fold(0.0, |m, v| m.max(v.abs())),
            Metric::L1 => diff.map(f64::abs).sum(),
            Metric::L2 => diff.map(|v| v * v).sum::<f64>().sqrt(),
            Metric::FNorm(h) => h.eval(&diff.collect::<Vec<_>>())?,
        })
    }
}

fn directed(a: &SpherePointCloud, b: &SpherePointCloud, metric: &Metric) -> Result<f64> {
    let mins: Vec<f64> = a
        .points
        .par_iter()
        .map(|x| {
            let mut best = f64::INFINITY;
            for y in &b.points {
                best = best.min(metric.distance(x, y)?);
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    Ok(mins.into_iter().fold(0.0, f64::max))
}

/// Exact Hausdorff distance between two finite clouds.
pub fn hausdorff(a: &SpherePointCloud, b: &SpherePointCloud, metric: &Metric) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("Hausdorff distance needs nonempty clouds".into()));
    }
    if a.ambient_dim() != b.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: a.ambient_dim(),
            found: b.ambient_dim(),
        });
    }
    if let Metric::FNorm(h) = metric {
        if h.dim() + 1 != a.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: a.ambient_dim(),
                found: h.dim() + 1,
            });
        }
    }
    Ok(directed(a, b, metric)?.max(directed(b, a, metric)?))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HausdorffRow {
    pub index: usize,
    pub label: String,
    pub distance: f64,
}

/// Hausdorff distance from the traced sphere of each handle in `sequence`
/// to the traced sphere of `limit`.
pub fn hausdorff_convergence_experiment(
    sequence: &[(String, FNorm)],
    limit: &FNorm,
    m: usize,
    metric: &Metric,
) -> Result<Vec<HausdorffRow>> {
    let target = trace_sphere(limit, m)?;
    sequence
        .iter()
        .enumerate()
        .map(|(index, (label, h))| {
            let cloud = trace_sphere(h, m)?;
            Ok(HausdorffRow {
                index,
                label: label.clone(),
                distance: hausdorff(&cloud, &target, metric)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DistributionSpec;
    use crate::special::norm_cdf;

    #[test]
    fn sup_norm_sphere() {
        let c = trace_sphere(&FNorm::sup_norm(1), 8).unwrap();
        assert_eq!(c.len(), 9);
        for p in &c.points {
            assert!((p[0].max(p[1]) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_sphere_description() {
        let c = trace_sphere(&FNorm::closed_form(DistributionSpec::Uniform01).unwrap(), 64).unwrap();
        assert_eq!(c.points[0], vec![1.0, 0.0]);
        assert_eq!(c.points[64], vec![0.0, 2.0]);
        for p in &c.points {
            if p[1] <= p[0] {
                assert_eq!(p[0], 1.0);
            } else {
                assert!((p[1] - (1.0 + (1.0 - p[0] * p[0]).sqrt())).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn hr_parametrization() {
        let c = hr_sphere_param(1.0, &[1.0]).unwrap();
        let v = 1.0 / (2.0 * norm_cdf(0.5));
        assert!((c.points[1][0] - v).abs() < 1e-15 && (c.points[1][1] - v).abs() < 1e-15);
        assert_eq!(c.points[0], vec![1.0, 0.0]);
        assert_eq!(c.points[2], vec![0.0, 1.0]);
        let tiny = hr_sphere_param(1e-9, &[1.0]).unwrap();
        assert!((tiny.points[1][0] - 1.0).abs() < 1e-6);
        // large sigma approaches the segment x + y = 1
        let big = hr_sphere_param(40.0, &[0.5, 1.0, 2.0]).unwrap();
        for p in &big.points {
            assert!((p[0] + p[1] - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn hausdorff_examples() {
        let a = SpherePointCloud::new(vec![vec![0.0, 0.0]], "a", 0).unwrap();
        let b = SpherePointCloud::new(vec![vec![3.0, 4.0]], "b", 0).unwrap();
        assert_eq!(hausdorff(&a, &b, &Metric::L2).unwrap(), 5.0);
        assert_eq!(hausdorff(&a, &a, &Metric::Sup).unwrap(), 0.0);
        let c = SpherePointCloud::new(vec![vec![0.0, 0.0, 1.0]], "c", 0).unwrap();
        assert!(hausdorff(&a, &c, &Metric::L1).is_err());
    }

    #[test]
    fn grids() {
        let g = parse_grid("log:0.01:100:5").unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[2] - 1.0).abs() < 1e-12);
        assert_eq!(parse_grid("1,2.5").unwrap(), vec![1.0, 2.5]);
        assert!(parse_grid("log:0:1:3").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let c = hr_sphere_param(1.0, &[0.5, 2.0]).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let back = SpherePointCloud::read_csv(&buf[..], "x").unwrap();
        assert_eq!(back.points, c.points);
    }
}
