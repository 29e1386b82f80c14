use std::path::Path;

use fnorm_core::algebra::{clt_fnorm_demo, log_fnorm_eval, product_eval};
use fnorm_core::empirical::{clt_covariance, empirical_eval, simulate_limit_paths};
use fnorm_core::geometry::{hausdorff, hr_sphere_param, parse_grid, trace_sphere};
use fnorm_core::inversion::{classify_2d, extremal_coefficient, invert_to_cdf_detailed, ClassifyConfig};
use fnorm_core::metrics::{wasserstein, wasserstein_equivalence_experiment};
use fnorm_core::{
    CopulaFamily, DistributionSpec, Error, FNorm, Metric, ProductStrategy, QuadratureConfig, Result, SampleMatrix,
    SignedSpec, SpherePointCloud,
};
use serde_json::{json, Value};

use crate::args::{BaseArg, Cli, Command, CopulaArg, EvalMethod, McArgs, MetricArg, ProductMethod};
use crate::output::{write_table_file, CommandResult, Failure};

pub fn run(cli: &Cli) -> std::result::Result<CommandResult, Failure> {
    let config = cli.quadrature();
    config.validate()?;
    let mut r = CommandResult::new(cli.command.name());
    r.diagnostic("quadrature", config);
    match &cli.command {
        Command::Eval { spec, point, method, mc } => eval(&mut r, spec, point, *method, mc, &config)?,
        Command::Invert { spec, at } => invert(&mut r, spec, at, &config)?,
        Command::Classify { norm, p, scale } => classify(&mut r, norm, *p, *scale)?,
        Command::Extremal {
            copula,
            dim,
            spec,
            window,
            grid,
        } => extremal(&mut r, *copula, *dim, spec.as_deref(), *window, *grid, &config)?,
        Command::Estimate { sample, point, spec } => estimate(&mut r, sample, point, spec.as_deref(), &config)?,
        Command::Clt { spec, p1, p2 } => clt(&mut r, spec, p1, p2, &config)?,
        Command::LimitSim {
            spec,
            paths,
            seed,
            grid,
            steps,
            out,
        } => limit_sim(&mut r, spec, *paths, *seed, grid, *steps, out.as_deref(), &config)?,
        Command::Product {
            spec_a,
            spec_b,
            point,
            method,
            mc,
        } => product(&mut r, spec_a, spec_b, point, *method, mc, &config)?,
        Command::Logfnorm { spec, point, method, mc } => logfnorm(&mut r, spec, point, *method, mc, &config)?,
        Command::CltDemo {
            base,
            ns,
            points,
            replications,
            seed,
            out,
        } => clt_demo(&mut r, *base, ns, points, *replications, *seed, out.as_deref())?,
        Command::Sphere { spec, m, out } => sphere(&mut r, spec, *m, out.as_deref(), &config)?,
        Command::HrSphere { sigma, lambda_grid, out } => hr_sphere(&mut r, *sigma, lambda_grid, out.as_deref())?,
        Command::Hausdorff { a, b, metric } => hausdorff_cmd(&mut r, a, b, *metric)?,
        Command::Wasserstein { a, b } => wasserstein_cmd(&mut r, a, b, &config)?,
        Command::Converge {
            sequence,
            limit,
            probes,
            out,
        } => converge(&mut r, sequence, limit, probes.as_deref(), out.as_deref(), &config)?,
        Command::Validate { spec } => return validate(r, spec),
    }
    Ok(r)
}

// ---- argument helpers ----

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Inline JSON, or a JSON file together with its directory.
fn load_json(text: &str) -> Result<(Value, Option<std::path::PathBuf>)> {
    let t = text.trim();
    if t.starts_with('{') || t.starts_with('[') {
        return Ok((serde_json::from_str(t)?, None));
    }
    let path = Path::new(t);
    let content = read_text(path)?;
    Ok((serde_json::from_str(&content)?, path.parent().map(Path::to_path_buf)))
}

fn builtin_spec(name: &str) -> Option<DistributionSpec> {
    match name {
        "uniform" | "uniform01" => Some(DistributionSpec::Uniform01),
        "exponential" => Some(DistributionSpec::Exponential { lambda: 1.0 }),
        "pareto" => Some(DistributionSpec::Pareto { gamma: 0.5 }),
        _ => None,
    }
}

fn load_spec(text: &str) -> Result<DistributionSpec> {
    if let Some(s) = builtin_spec(text.trim()) {
        return Ok(s);
    }
    let t = text.trim();
    if !t.starts_with('{') && !Path::new(t).exists() {
        return Err(Error::InvalidSpec(format!(
            "{t:?} is neither inline JSON, an existing file, nor a builtin (uniform, exponential, pareto)"
        )));
    }
    let (value, dir) = load_json(t)?;
    DistributionSpec::from_json_value(value, dir.as_deref())
}

fn parse_point(text: &str) -> Result<Vec<f64>> {
    let v: std::result::Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    match v {
        Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => Ok(v),
        _ => Err(Error::Domain(format!("cannot parse point {text:?}; expected comma-separated numbers"))),
    }
}

fn parse_points(text: &str) -> Result<Vec<Vec<f64>>> {
    text.split(';').filter(|s| !s.trim().is_empty()).map(parse_point).collect()
}

fn parse_pair(text: &str) -> Result<(f64, f64)> {
    match parse_point(text)?.as_slice() {
        [x, y] => Ok((*x, *y)),
        other => Err(Error::DimensionMismatch {
            expected: 2,
            found: other.len(),
        }),
    }
}

fn parse_pairs(text: &str) -> Result<Vec<(f64, f64)>> {
    text.split(';').filter(|s| !s.trim().is_empty()).map(parse_pair).collect()
}

fn require_seed(seed: Option<u64>, what: &str) -> Result<u64> {
    seed.ok_or_else(|| Error::SeedRequired(format!("{what} draws random numbers; pass --seed")))
}

fn rows_of(points: &[Vec<f64>]) -> Vec<Value> {
    points
        .iter()
        .map(|p| {
            let m: serde_json::Map<String, Value> =
                p.iter().enumerate().map(|(j, v)| (format!("x{j}"), json!(v))).collect();
            Value::Object(m)
        })
        .collect()
}

// ---- subcommands ----

fn eval(
    r: &mut CommandResult,
    spec: &str,
    point: &str,
    method: EvalMethod,
    mc: &McArgs,
    config: &QuadratureConfig,
) -> Result<()> {
    let s = load_spec(spec)?;
    let x = parse_point(point)?;
    r.input("spec", s.to_json_value()).input("point", &x);
    let h = match method {
        EvalMethod::Auto => FNorm::auto(s, *config, mc.seed.map(|seed| (mc.mc_n, seed)))?,
        EvalMethod::Closed => FNorm::closed_form(s)?,
        EvalMethod::Quad => FNorm::quadrature(s, *config)?,
        EvalMethod::Mc => FNorm::monte_carlo(s, mc.mc_n, require_seed(mc.seed, "Monte Carlo evaluation")?)?,
    };
    let e = h.eval_detailed(&x)?;
    r.output("value", e.value)
        .output("method", e.method)
        .output("error_bound", e.error);
    if e.method == fnorm_core::Method::Mc {
        r.diagnostic("seed", mc.seed).diagnostic("mc_n", mc.mc_n);
    }
    Ok(())
}

fn invert(r: &mut CommandResult, spec: &str, at: &str, config: &QuadratureConfig) -> Result<()> {
    let s = load_spec(spec)?;
    let t = parse_point(at)?;
    r.input("spec", s.to_json_value()).input("at", &t);
    let h = FNorm::auto(s.clone(), *config, None)?;
    let inv = invert_to_cdf_detailed(&h, &t)?;
    r.output("cdf", inv.value)
        .output("method", h.method())
        .output("quotients", &inv.quotients);
    if let Ok(c) = s.cdf(&t) {
        r.diagnostic("cdf_reference", c);
    }
    Ok(())
}

fn classify(r: &mut CommandResult, norm: &str, p: f64, scale: f64) -> Result<()> {
    r.input("norm", norm);
    let config = ClassifyConfig::default();
    let report = match norm.trim() {
        "builtin:lp" | "builtin:l1" => {
            let p = if norm.trim() == "builtin:l1" { 1.0 } else { p };
            if !(p >= 1.0) {
                return Err(Error::Domain(format!("L^p needs p ≥ 1, got {p}")));
            }
            r.input("p", p).input("scale", scale);
            classify_2d(
                |a: f64, b: f64| scale * (a.abs().powf(p) + b.abs().powf(p)).powf(1.0 / p),
                &config,
            )
        }
        "builtin:sup" => {
            r.input("scale", scale);
            classify_2d(|a: f64, b: f64| scale * a.abs().max(b.abs()), &config)
        }
        other => {
            let s = load_spec(other)?;
            if s.dim() != 1 {
                return Err(Error::Domain("classification is two-dimensional; the spec must be 1-D".into()));
            }
            r.input("spec", s.to_json_value());
            let h = FNorm::closed_form(s)?;
            classify_2d(|a: f64, b: f64| h.eval(&[a, b]).unwrap_or(f64::NAN), &config)
        }
    };
    r.output("is_fnorm", report.is_fnorm).output("reasons", &report.reasons);
    let table: Vec<Value> = report
        .recovered_cdf
        .iter()
        .map(|(t, f)| json!({ "t": t, "cdf": f }))
        .collect();
    r.output("report", &report);
    r.table = Some(table);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn extremal(
    r: &mut CommandResult,
    copula: Option<CopulaArg>,
    dim: usize,
    spec: Option<&str>,
    window: f64,
    grid: usize,
    config: &QuadratureConfig,
) -> Result<()> {
    let s = match (copula, spec) {
        (_, Some(text)) => load_spec(text)?,
        (Some(c), None) => {
            let family = match c {
                CopulaArg::Independence => CopulaFamily::Independence,
                CopulaArg::Comonotone => CopulaFamily::Comonotone,
            };
            DistributionSpec::copula(family, dim)?
        }
        (None, None) => return Err(Error::Domain("pass --copula or --spec".into())),
    };
    r.input("spec", s.to_json_value()).input("window", window).input("grid", grid);
    let h = FNorm::auto(s, *config, None)?;
    let fit = extremal_coefficient(&h, window, grid)?;
    r.output("theta", fit.theta)
        .output("method", h.method())
        .output("fit", &fit);
    Ok(())
}

fn estimate(
    r: &mut CommandResult,
    sample: &Path,
    point: &str,
    spec: Option<&str>,
    config: &QuadratureConfig,
) -> Result<()> {
    let m = SampleMatrix::read_csv(sample)?;
    let x = parse_point(point)?;
    r.input("sample", sample.display().to_string()).input("point", &x);
    let v = empirical_eval(&m, &x)?;
    r.output("value", v).output("method", fnorm_core::Method::Empirical);
    r.diagnostic("n", m.n()).diagnostic("d", m.d());
    if let Some(text) = spec {
        let s = load_spec(text)?;
        r.input("spec", s.to_json_value());
        let truth = FNorm::auto(s, *config, None)?.eval_detailed(&x)?;
        r.output("true_value", truth.value)
            .output("true_method", truth.method)
            .output("deviation", v - truth.value);
    }
    Ok(())
}

fn clt(r: &mut CommandResult, spec: &str, p1: &str, p2: &str, config: &QuadratureConfig) -> Result<()> {
    let s = load_spec(spec)?;
    let (a, b) = (parse_pair(p1)?, parse_pair(p2)?);
    r.input("spec", s.to_json_value()).input("p1", a).input("p2", b);
    let c = clt_covariance(&s, a, b, config)?;
    r.output("covariance", c).output("method", fnorm_core::Method::Quad);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn limit_sim(
    r: &mut CommandResult,
    spec: &str,
    paths: usize,
    seed: Option<u64>,
    grid: &str,
    steps: usize,
    out: Option<&Path>,
    config: &QuadratureConfig,
) -> Result<()> {
    let s = load_spec(spec)?;
    let g = parse_pairs(grid)?;
    let seed = require_seed(seed, "limit-sim")?;
    if paths < 2 {
        return Err(Error::Domain("need at least two paths".into()));
    }
    r.input("spec", s.to_json_value())
        .input("paths", paths)
        .input("grid", &g)
        .input("steps", steps);
    r.diagnostic("seed", seed);
    let values = simulate_limit_paths(&s, &g, paths, steps, seed, config)?;
    let n = values.len() as f64;
    let k = g.len();
    let means: Vec<f64> = (0..k).map(|j| values.iter().map(|v| v[j]).sum::<f64>() / n).collect();
    let cov = |i: usize, j: usize| {
        values.iter().map(|v| (v[i] - means[i]) * (v[j] - means[j])).sum::<f64>() / (n - 1.0)
    };
    let matrix: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| cov(i, j)).collect()).collect();
    let rows: Vec<Value> = (0..k)
        .map(|j| {
            let reference = clt_covariance(&s, g[j], g[j], config).ok();
            json!({
                "x": g[j].0,
                "y": g[j].1,
                "mean": means[j],
                "variance": matrix[j][j],
                "reference_variance": reference,
            })
        })
        .collect();
    r.output("covariance", &matrix).output("method", fnorm_core::Method::Mc);
    r.set_table(&rows);
    if let Some(path) = out {
        let path_rows: Vec<Value> = values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut m = serde_json::Map::new();
                m.insert("path".into(), json!(i));
                for (j, x) in v.iter().enumerate() {
                    m.insert(format!("s{j}"), json!(x));
                }
                Value::Object(m)
            })
            .collect();
        write_table_file(path, &path_rows)?;
        r.output("out", path.display().to_string());
    }
    Ok(())
}

fn product_strategy(method: ProductMethod, mc: &McArgs, config: &QuadratureConfig) -> Result<ProductStrategy> {
    Ok(match method {
        ProductMethod::Tonelli => ProductStrategy::Tonelli(*config),
        ProductMethod::Mc => ProductStrategy::MonteCarlo {
            n: mc.mc_n,
            seed: require_seed(mc.seed, "Monte Carlo product")?,
        },
    })
}

fn product(
    r: &mut CommandResult,
    a: &str,
    b: &str,
    point: &str,
    method: ProductMethod,
    mc: &McArgs,
    config: &QuadratureConfig,
) -> Result<()> {
    let (sa, sb) = (load_spec(a)?, load_spec(b)?);
    let x = parse_point(point)?;
    r.input("specA", sa.to_json_value())
        .input("specB", sb.to_json_value())
        .input("point", &x);
    let strategy = product_strategy(method, mc, config)?;
    let ha = FNorm::auto(sa, *config, None)?;
    let hb = FNorm::auto(sb, *config, None)?;
    let e = product_eval(&ha, &hb, &x, &strategy)?;
    r.output("value", e.value)
        .output("method", e.method)
        .output("error_bound", e.error);
    if method == ProductMethod::Mc {
        r.diagnostic("seed", mc.seed).diagnostic("mc_n", mc.mc_n);
    }
    Ok(())
}

fn logfnorm(
    r: &mut CommandResult,
    spec: &str,
    point: &str,
    method: EvalMethod,
    mc: &McArgs,
    config: &QuadratureConfig,
) -> Result<()> {
    let (value, _) = load_json(spec)?;
    let s: SignedSpec = serde_json::from_value(value)?;
    s.validate()?;
    let x = parse_point(point)?;
    r.input("spec", &s).input("point", &x);
    let e = match method {
        EvalMethod::Auto => log_fnorm_eval(&s, &x, config, mc.seed.map(|seed| (mc.mc_n, seed)))?,
        EvalMethod::Closed => FNorm::closed_form(s.exp_spec()?)?.eval_detailed(&x)?,
        EvalMethod::Quad => FNorm::quadrature(s.exp_spec()?, *config)?.eval_detailed(&x)?,
        EvalMethod::Mc => FNorm::monte_carlo(s.exp_spec()?, mc.mc_n, require_seed(mc.seed, "Monte Carlo evaluation")?)?
            .eval_detailed(&x)?,
    };
    r.output("value", e.value)
        .output("method", e.method)
        .output("error_bound", e.error);
    if e.method == fnorm_core::Method::Mc {
        r.diagnostic("seed", mc.seed).diagnostic("mc_n", mc.mc_n);
    }
    Ok(())
}

fn clt_demo(
    r: &mut CommandResult,
    base: BaseArg,
    ns: &str,
    points: &str,
    replications: usize,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<()> {
    let s = match base {
        BaseArg::Rademacher => SignedSpec::Rademacher,
        BaseArg::Normal => SignedSpec::normal(0.0, 1.0)?,
    };
    let ns: Vec<u64> = ns
        .split(',')
        .map(|t| t.trim().parse::<u64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Domain(format!("cannot parse sample sizes {ns:?}")))?;
    let pts = parse_pairs(points)?;
    let seed = require_seed(seed, "clt-demo")?;
    r.input("base", &s)
        .input("ns", &ns)
        .input("points", &pts)
        .input("replications", replications);
    r.diagnostic("seed", seed);
    let rows = clt_fnorm_demo(&s, &ns, &pts, replications, seed)?;
    r.output("method", fnorm_core::Method::Mc);
    r.set_table(&rows);
    if let Some(path) = out {
        write_table_file(path, r.table.as_deref().unwrap_or_default())?;
        r.output("out", path.display().to_string());
    }
    Ok(())
}

fn emit_cloud(r: &mut CommandResult, cloud: &SpherePointCloud, out: Option<&Path>) -> Result<()> {
    r.output("points", cloud.len()).output("source", &cloud.source);
    match out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })?;
            cloud.write_csv(std::io::BufWriter::new(file))?;
            r.output("out", path.display().to_string());
        }
        None => {
            r.set_table(&rows_of(&cloud.points));
        }
    }
    Ok(())
}

fn sphere(r: &mut CommandResult, spec: &str, m: usize, out: Option<&Path>, config: &QuadratureConfig) -> Result<()> {
    let s = load_spec(spec)?;
    r.input("spec", s.to_json_value()).input("m", m);
    let h = FNorm::auto(s, *config, None)?;
    let cloud = trace_sphere(&h, m)?;
    r.output("method", h.method());
    r.diagnostic("sphere_tolerance", fnorm_core::geometry::SPHERE_TOL);
    emit_cloud(r, &cloud, out)
}

fn hr_sphere(r: &mut CommandResult, sigma: f64, grid: &str, out: Option<&Path>) -> Result<()> {
    let lambdas = parse_grid(grid)?;
    r.input("sigma", sigma).input("lambda_grid", grid);
    let cloud = hr_sphere_param(sigma, &lambdas)?;
    r.output("method", fnorm_core::Method::Closed);
    emit_cloud(r, &cloud, out)
}

fn read_cloud(path: &Path) -> Result<SpherePointCloud> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    SpherePointCloud::read_csv(file, path.display().to_string())
}

fn hausdorff_cmd(r: &mut CommandResult, a: &Path, b: &Path, metric: MetricArg) -> Result<()> {
    let (ca, cb) = (read_cloud(a)?, read_cloud(b)?);
    let metric_name = match metric {
        MetricArg::Sup => "sup",
        MetricArg::L1 => "l1",
        MetricArg::L2 => "l2",
    };
    r.input("a", a.display().to_string())
        .input("b", b.display().to_string())
        .input("metric", metric_name);
    let m = Metric::parse(metric_name).expect("metric names are parseable");
    let d = hausdorff(&ca, &cb, &m)?;
    r.output("distance", d);
    r.diagnostic("points_a", ca.len()).diagnostic("points_b", cb.len());
    Ok(())
}

fn wasserstein_cmd(r: &mut CommandResult, a: &str, b: &str, config: &QuadratureConfig) -> Result<()> {
    let (sa, sb) = (load_spec(a)?, load_spec(b)?);
    r.input("a", sa.to_json_value()).input("b", sb.to_json_value());
    let w = wasserstein(&sa, &sb, config)?;
    r.output("distance", w.value)
        .output("method", fnorm_core::Method::Quad)
        .output("error_bound", w.error);
    Ok(())
}

fn default_probes(dim: usize) -> Vec<Vec<f64>> {
    const LEVELS: [f64; 3] = [0.5, 1.0, 2.0];
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p| {
                LEVELS.iter().map(move |l| {
                    let mut q = p.clone();
                    q.push(*l);
                    q
                })
            })
            .collect();
    }
    out
}

fn converge(
    r: &mut CommandResult,
    sequence: &str,
    limit: &str,
    probes: Option<&str>,
    out: Option<&Path>,
    config: &QuadratureConfig,
) -> Result<()> {
    let (value, dir) = load_json(sequence)?;
    let items = match value {
        Value::Array(v) => v,
        Value::Object(mut m) => match m.remove("sequence") {
            Some(Value::Array(v)) => v,
            _ => return Err(Error::InvalidSpec("expected a JSON array of specs or {\"sequence\": [...]}".into())),
        },
        _ => return Err(Error::InvalidSpec("expected a JSON array of specs".into())),
    };
    let specs: Vec<DistributionSpec> = items
        .into_iter()
        .map(|v| DistributionSpec::from_json_value(v, dir.as_deref()))
        .collect::<Result<_>>()?;
    let lim = load_spec(limit)?;
    let probes = match probes {
        Some(text) => parse_points(text)?,
        None => default_probes(lim.dim() + 1),
    };
    r.input("sequence", specs.iter().map(DistributionSpec::to_json_value).collect::<Vec<_>>())
        .input("limit", lim.to_json_value())
        .input("probes", &probes);
    let labelled: Vec<(String, DistributionSpec)> = specs
        .into_iter()
        .enumerate()
        .map(|(i, s)| (format!("{}#{i}", s.label()), s))
        .collect();
    let rows = wasserstein_equivalence_experiment(&labelled, &lim, &probes, config)?;
    r.set_table(&rows);
    if let Some(path) = out {
        write_table_file(path, r.table.as_deref().unwrap_or_default())?;
        r.output("out", path.display().to_string());
    }
    Ok(())
}

fn validate(mut r: CommandResult, spec: &str) -> std::result::Result<CommandResult, Failure> {
    let s = load_spec(spec)?;
    r.input("spec", s.to_json_value());
    let report = s.validate_h();
    if report.passed {
        r.output("passed", true).output("report", &report);
        Ok(r)
    } else {
        let detail = json!({ "passed": false, "report": report });
        Err(Failure {
            error: Error::Domain(format!("{} violates condition (H)", s.label())),
            detail: Some(detail),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_and_pairs() {
        assert_eq!(parse_point(" 1, 2.5 ").unwrap(), vec![1.0, 2.5]);
        assert!(parse_point("1,x").is_err());
        assert!(parse_point("1,inf").is_err());
        assert_eq!(parse_points("1,2;3,4;").unwrap().len(), 2);
        assert_eq!(parse_pairs("0.5,1;0.7,1").unwrap(), vec![(0.5, 1.0), (0.7, 1.0)]);
        assert!(matches!(parse_pair("1,2,3"), Err(Error::DimensionMismatch { expected: 2, found: 3 })));
    }

    #[test]
    fn specs_from_builtins_and_json() {
        assert_eq!(load_spec("uniform").unwrap(), DistributionSpec::Uniform01);
        assert_eq!(load_spec(r#"{"type":"bernoulli","p":0.3}"#).unwrap(), DistributionSpec::Bernoulli { p: 0.3 });
        assert!(load_spec("no-such-law").is_err());
    }

    #[test]
    fn probe_grid_is_a_full_product() {
        let p = default_probes(3);
        assert_eq!(p.len(), 27);
        assert!(p.iter().all(|x| x.len() == 3));
        assert!(matches!(require_seed(None, "x"), Err(Error::SeedRequired(_))));
    }
}
