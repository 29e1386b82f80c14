use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fnorm_core::QuadratureConfig;

/// Evaluate, invert, estimate and compare F-norms.
///
/// Specs (`--spec`, `--specA`, ...) are JSON objects given inline, paths to
/// JSON files, or one of the builtin names `uniform`, `exponential`, `pareto`.
/// Points are comma-separated, point lists are `;`-separated.
#[derive(Debug, Parser)]
#[command(name = "fnorm", version)]
pub struct Cli {
    /// Output format of the result on standard output.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,

    /// Absolute tolerance of every quadrature.
    #[arg(long, default_value_t = QuadratureConfig::default().abs_tol, global = true)]
    pub abs_tol: f64,

    /// Tolerance for dropping the tail of an integral over [a, ∞).
    #[arg(long, default_value_t = QuadratureConfig::default().tail_tol, global = true)]
    pub tail_tol: f64,

    /// Bisection budget of every quadrature.
    #[arg(long, default_value_t = QuadratureConfig::default().max_subdivisions, global = true)]
    pub max_subdivisions: usize,

    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig {
            abs_tol: self.abs_tol,
            tail_tol: self.tail_tol,
            max_subdivisions: self.max_subdivisions,
            ..QuadratureConfig::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EvalMethod {
    /// Closed form if available, else quadrature, else Monte Carlo.
    Auto,
    Closed,
    Quad,
    Mc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProductMethod {
    Tonelli,
    Mc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CopulaArg {
    Independence,
    Comonotone,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Sup,
    L1,
    L2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BaseArg {
    /// Uniform on {-1, 1}.
    Rademacher,
    /// Standard normal.
    Normal,
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// Monte Carlo sample size.
    #[arg(long = "mc-n", default_value_t = 1_000_000)]
    pub mc_n: usize,
    /// Seed of the Monte Carlo stream (required whenever sampling is used).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate ‖x‖F at a point (dimensionless; homogeneous of degree one).
    Eval {
        #[arg(long)]
        spec: String,
        /// Point x = (x0, x1, ..., xd).
        #[arg(long)]
        point: String,
        #[arg(long, value_enum, default_value_t = EvalMethod::Auto)]
        method: EvalMethod,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Recover P(X ≤ t) from the F-norm by right differentiation.
    Invert {
        #[arg(long)]
        spec: String,
        /// Point t = (t1, ..., td) at which the cdf is recovered.
        #[arg(long)]
        at: String,
    },
    /// Decide whether a 2-D norm is an F-norm.
    Classify {
        /// `builtin:lp` (with --p), `builtin:l1`, `builtin:sup` (with --scale),
        /// or a spec whose closed-form F-norm is classified.
        #[arg(long)]
        norm: String,
        /// Exponent of builtin:lp.
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Factor applied to the builtin norm.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Extremal coefficient ‖1‖D of a copula, in [1, d].
    Extremal {
        #[arg(long, value_enum, conflicts_with = "spec")]
        copula: Option<CopulaArg>,
        /// Dimension of the copula.
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Copula spec instead of --copula/--dim.
        #[arg(long)]
        spec: Option<String>,
        /// Lower end x_lo of the fitting window [x_lo, 1).
        #[arg(long, default_value_t = 0.95)]
        window: f64,
        /// Number of fitting points in the window.
        #[arg(long, default_value_t = 20)]
        grid: usize,
    },
    /// Empirical F-norm of a CSV sample.
    Estimate {
        /// CSV file with a header row and one observation per row.
        #[arg(long)]
        sample: PathBuf,
        #[arg(long)]
        point: String,
        /// Optional spec; adds the true value and the deviation.
        #[arg(long)]
        spec: Option<String>,
    },
    /// Covariance of the limit process of √n(‖·‖F̂n − ‖·‖F) (1-D laws).
    Clt {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        p1: String,
        #[arg(long)]
        p2: String,
    },
    /// Simulate limit-process paths through the Brownian-bridge representation.
    LimitSim {
        #[arg(long)]
        spec: String,
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Grid points (x, y), `;`-separated.
        #[arg(long, default_value = "0.5,1;0.7,1")]
        grid: String,
        /// Bridge discretization steps.
        #[arg(long, default_value_t = fnorm_core::empirical::DEFAULT_BRIDGE_STEPS)]
        steps: usize,
        /// Write one row per path to this CSV file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Product of two F-norms.
    Product {
        #[arg(long = "specA")]
        spec_a: String,
        #[arg(long = "specB")]
        spec_b: String,
        #[arg(long)]
        point: String,
        #[arg(long, value_enum, default_value_t = ProductMethod::Tonelli)]
        method: ProductMethod,
        #[command(flatten)]
        mc: McArgs,
    },
    /// F-norm of exp(X) for a signed law X.
    Logfnorm {
        /// Signed spec: normal, multinormal, neg_gumbel or rademacher.
        #[arg(long)]
        spec: String,
        #[arg(long)]
        point: String,
        #[arg(long, value_enum, default_value_t = EvalMethod::Auto)]
        method: EvalMethod,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Central limit theorem as convergence of log F-norms.
    CltDemo {
        #[arg(long, value_enum, default_value_t = BaseArg::Rademacher)]
        base: BaseArg,
        /// Sample sizes n.
        #[arg(long, default_value = "1,100,10000")]
        ns: String,
        /// Points (x0, x1), `;`-separated.
        #[arg(long, default_value = "1,1")]
        points: String,
        /// Monte Carlo replications per (n, point).
        #[arg(long, default_value_t = 1_000_000)]
        replications: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trace the positive-orthant unit sphere of an F-norm.
    Sphere {
        #[arg(long)]
        spec: String,
        /// Resolution of the direction lattice on the simplex.
        #[arg(long, default_value_t = 512)]
        m: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Unit sphere of the Hüsler-Reiss norm from its explicit parametrization.
    HrSphere {
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// `log:a:b:n`, `lin:a:b:n`, or a comma list of λ > 0.
        #[arg(long, default_value = "log:0.01:100:512")]
        lambda_grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hausdorff distance between two point clouds stored as CSV.
    Hausdorff {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, value_enum, default_value_t = MetricArg::L2)]
        metric: MetricArg,
    },
    /// Order-1 Wasserstein distance of 1-D or product laws.
    Wasserstein {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// F-norm deviation and Wasserstein distance along a sequence of laws.
    Converge {
        /// JSON array of specs, inline or as a file.
        #[arg(long)]
        sequence: String,
        #[arg(long)]
        limit: String,
        /// Probe points, `;`-separated; defaults to {0.5, 1, 2}^(d+1).
        #[arg(long)]
        probes: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check condition (H) for a spec.
    Validate {
        #[arg(long)]
        spec: String,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eval { .. } => "eval",
            Command::Invert { .. } => "invert",
            Command::Classify { .. } => "classify",
            Command::Extremal { .. } => "extremal",
            Command::Estimate { .. } => "estimate",
            Command::Clt { .. } => "clt",
            Command::LimitSim { .. } => "limit-sim",
            Command::Product { .. } => "product",
            Command::Logfnorm { .. } => "logfnorm",
            Command::CltDemo { .. } => "clt-demo",
            Command::Sphere { .. } => "sphere",
            Command::HrSphere { .. } => "hr-sphere",
            Command::Hausdorff { .. } => "hausdorff",
            Command::Wasserstein { .. } => "wasserstein",
            Command::Converge { .. } => "converge",
            Command::Validate { .. } => "validate",
        }
    }
}
