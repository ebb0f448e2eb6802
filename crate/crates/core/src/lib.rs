//! Interval observers for detectable LTI systems via observability decomposition.
//!
//! The state is split into an observable part, framed by a Sylvester-transformed
//! observer, and an unobservable (but stable) part, framed after a time-varying
//! change of coordinates that makes its dynamics cooperative. See `examples/`
//! for runnable walkthroughs.

// `!(a <= b)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod decomp;
pub mod design;
pub mod error;
pub mod jordan;
pub mod linalg;
pub mod model;
pub mod observer;
pub mod presets;
pub mod signal;
pub mod sim;
pub mod sylvester;

pub use config::ScenarioConfig;
pub use design::{DesignBundle, DesignOptions};
pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use model::{LtiSystem, Scenario, TimeDomain};
pub use sim::{ObserverForm, SimulationConfig};
