//! Hop-count analysis for the maximal shortest path of a connected component
//! in a one-dimensional vehicular network.
//!
//! Vehicles sit on a line with i.i.d. inter-distances drawn from an
//! [`InterdistanceModel`]. Two vehicles communicate when they are at most `R`
//! apart. Within a connected component the shortest path between its two
//! extreme vehicles is built by always relaying to the farthest neighbour, and
//! `N_b` is the number of nodes on that path (an isolated vehicle has `N_b = 1`).
//!
//! - [`models`]: inter-distance distributions and the EM hyperexponential fit
//! - [`kernel`]: transition kernels of successive relay gaps
//! - [`hops`]: hop-count distribution by Monte-Carlo chains or quadrature
//! - [`poisson`]: exact recurrences, transforms and series for Poisson traffic
//! - [`components`]: component length, vehicle count and hop density
//! - [`road`]: direct simulation on a synthetic road
//! - [`trace`]: mobility-trace ingestion, preprocessing and the comparison report

pub mod components;
pub mod error;
pub mod hops;
pub mod kernel;
pub mod models;
pub mod poisson;
pub mod rng;
pub mod road;
pub mod stats;
pub mod trace;

mod invert;
mod mp;

pub use error::{Error, Result};
pub use hops::{HopDistribution, HopMethod, MeanHops};
pub use kernel::{KernelMode, RelayKernel};
pub use models::{InterdistanceModel, ModelKind};
