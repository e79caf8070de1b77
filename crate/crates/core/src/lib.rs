//! Monte Carlo engine for up-and-in barrier call options under stochastic
//! volatility, built around a rough Bergomi model and a bounded-volatility
//! truncation of it.
//!
//! The crate is organised bottom-up:
//!
//! - [`rng`]: counter-based per-path random streams (bit-reproducible at any
//!   worker count),
//! - [`stats`]: deterministic reductions, least squares, kernel density,
//! - [`quad`]: adaptive Gauss-Kronrod quadrature,
//! - [`gaussian`]: exact joint sampling of a Brownian motion and its
//!   Riemann-Liouville fractional transform on a time grid,
//! - [`vol`]: volatility paths (constant, rough Bergomi, truncated),
//! - [`simulate`]: Euler paths of the driftless log price,
//! - [`pricing`]: barrier / European estimators with Brownian-bridge crossing
//!   correction, plus constant-vol closed forms,
//! - [`bounds`]: Garsia-Rodemich-Rumsey path functionals, concentration and
//!   density-style tail bounds, and their calibration,
//! - [`decay`]: short-maturity scans and decay-rate fits.

pub mod bounds;
pub mod decay;
pub mod error;
pub mod gaussian;
pub mod pricing;
pub mod quad;
pub mod rng;
pub mod simulate;
pub mod stats;
pub mod vol;

pub use bounds::{DensityBoundParams, GrrParams};
pub use decay::{BoundConstants, DecayReport, DecayRow, ScanSettings};
pub use error::{EngineError, Result};
pub use gaussian::TimeGrid;
pub use pricing::{BarrierContract, McEstimate};
pub use simulate::{Model, PathBatch};
pub use vol::{RoughBergomiParams, TruncationReading, VolBounds};
