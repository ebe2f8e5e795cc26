//! Discretely monitored knock-out barrier option pricing with Legendre
//! multiwavelets.
//!
//! Under Black–Scholes the price between two monitoring dates is a Gaussian
//! smoothing of the price at the next date, once the log-price is rescaled to
//! the unit interval and the drift is removed by an exponential substitution.
//! This crate projects that smoothing operator onto the space of piecewise
//! polynomials spanned by Legendre multiscaling functions (or, equivalently,
//! multiwavelets), assembles it as a dense operational matrix, and propagates
//! the payoff coefficients through the monitoring dates with matrix–vector
//! products.
//!
//! Module map:
//!
//! * [`quadrature`]: Gauss–Legendre rules and composite 1-D/2-D integration.
//! * [`basis`]: Legendre polynomials, multiscaling functions, Alpert
//!   multiwavelets, projection and evaluation.
//! * [`model`]: market inputs and the change of variables to the unit interval.
//! * [`engine`]: operational matrix assembly, propagation and pricing.
//! * [`oracles`]: Monte Carlo and Nyström reference prices, L² errors and
//!   convergence studies.
//! * [`format`]: `%.6g`-style number formatting shared by the CSV writers.

pub mod basis;
pub mod engine;
mod error;
pub mod format;
pub mod linalg;
pub mod model;
pub mod oracles;
pub mod quadrature;

pub use basis::{Basis, BasisKind, BasisSpec, CoefficientVector};
pub use engine::{
    price_double_barrier, price_single_down_out, OperatorMatrix, PriceResult, Pricer,
    PricingOptions, SpotOnBarrier,
};
pub use error::{Error, Result};
pub use model::{DownOutParams, MarketParams, TransformedParams};
pub use quadrature::QuadratureRule;
