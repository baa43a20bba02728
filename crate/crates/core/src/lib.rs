//! Computations on cyclic F-manifolds evaluated over truncated multivariate
//! Taylor jets: the natural torsion-free connection of a cyclic flow,
//! 3RC integrability tests, power-series symmetries, the generalized
//! hodograph method, Tsarev's semisimple comparison, and metric and
//! conservation-law bridges.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`).

#![allow(clippy::needless_range_loop)]

pub mod algebra;
pub mod cli;
pub mod connection;
pub mod curvature;
pub mod error;
pub mod expr;
pub mod hodograph;
pub mod jet;
pub mod linalg;
pub mod metric;
pub mod modelfile;
pub mod report;
pub mod scalar;
pub mod symmetry;

pub use algebra::{builtin_example, FModel, ProductJet};
pub use connection::{ChristoffelJet, CounitChoice};
pub use curvature::RiemannAtPoint;
pub use error::{Error, Result};
pub use expr::Expr;
pub use hodograph::{GridSolution, GridSpec, HodographProblem};
pub use jet::{Jet, UniSeries};
pub use metric::{DensitySet, MetricJet};
pub use modelfile::{load_model, parse_model_str};
pub use report::Report;
pub use scalar::Scalar;
pub use symmetry::SeriesField;

pub type Jet64 = Jet<f64>;
pub type Jet32 = Jet<f32>;
pub type UniSeries64 = UniSeries<f64>;
pub type UniSeries32 = UniSeries<f32>;
pub type ChristoffelJet64 = ChristoffelJet<f64>;
pub type ChristoffelJet32 = ChristoffelJet<f32>;
pub type MetricJet64 = MetricJet<f64>;
pub type MetricJet32 = MetricJet<f32>;
pub type SeriesField64 = SeriesField<f64>;
pub type SeriesField32 = SeriesField<f32>;
