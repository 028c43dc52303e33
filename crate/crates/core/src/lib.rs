//! Exact concentration functions `Q(F, b) = sup_x F([x, x + b])` of
//! convolution powers of discrete laws on the real line, and evaluators for
//! the classical bounds on them with the absolute constant measured rather
//! than assumed.
//!
//! ```
//! use concbound::{conv_power, q_exact, DiscreteDist};
//!
//! let coin = DiscreteDist::two_point(1.0).unwrap();
//! let sum = conv_power(&coin, 4, 0.0).unwrap();
//! assert_eq!(q_exact(&sum, 0.0).value, 0.375);
//! ```

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod binomial;
pub mod bounds;
pub mod budget;
pub mod cli;
pub mod concentration;
pub mod convolution;
pub mod error;
pub mod fft;
pub mod format;
pub mod lattice;
pub mod measure;
pub mod quadrature;
pub mod report;
pub mod scenario;
pub mod verify;

pub use binomial::{binomial_pmf, BinomialWeights};
pub use bounds::{estimate_constant, BoundRequest, Bounds, ConstantEstimate};
pub use budget::ErrorBudget;
pub use concentration::{q_curve, q_exact, q_monte_carlo, q_regularity_gap, McEstimate, QResult};
pub use convolution::{
    conv_power, convolve, mixture_expand, mixture_sum, power_auto, Convolution, PowerTable,
};
pub use error::{Error, Result};
pub use format::{parse_dist_json, parse_family_expr, DistSpec};
pub use lattice::{infer_step, to_lattice, LatticeDist};
pub use measure::{DiscreteDist, MixtureSpec, MomentSummary};
pub use report::{BoundId, BoundReport};
