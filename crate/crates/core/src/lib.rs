//! F-norms: evaluation, inversion, estimation and geometry of norms generated
//! by nonnegative random vectors.

pub mod algebra;
pub mod distributions;
pub mod empirical;
pub mod error;
pub mod fnorm;
pub mod geometry;
pub mod inversion;
pub mod metrics;
pub mod quadrature;
pub mod special;

pub use algebra::{ProductStrategy, SignedSpec};
pub use distributions::{CopulaFamily, DistributionSpec, SampleMatrix, ValidationReport};
pub use error::{Error, Result};
pub use fnorm::{Evaluation, FNorm, Method};
pub use geometry::{Metric, SpherePointCloud};
pub use quadrature::{Estimate, QuadratureConfig};
