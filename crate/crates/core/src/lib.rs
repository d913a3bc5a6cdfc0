//! Variance-based radio tomographic imaging.
//!
//! Moving people randomize the phase of the multipath components whose paths
//! they cross, which raises the RSS variance of the affected links. This
//! crate models that effect, simulates the token-passing measurement network
//! that collects RSS on every link, reconstructs a motion image from windowed
//! link variances with a regularized elliptical weight model, and tracks a
//! single mover with a Kalman filter.
//!
//! Modules, bottom up:
//!
//! - [`channel`]: multipath link synthesis and log-Ricean statistics
//! - [`netsim`]: token-passing measurement rounds and link traces
//! - [`estimator`]: variance buffers, weight matrix, Tikhonov projection
//! - [`tracker`]: argmax measurement, Kalman recursion, error metrics

pub mod channel;
pub mod estimator;
pub mod geometry;
pub mod netsim;
pub mod pipeline;
pub mod quadrature;
pub mod scene;
pub mod seed;
pub mod special;
pub mod tracker;

pub use geometry::Point;
