//! Optimistic online learning for reserving virtualized resources on an
//! in-advance and a spot market.
//!
//! A service provider picks a reservation pair `z_t = (x_t, y_t)` every slot
//! before demand, prices and resource contributions are revealed, and pays
//! the loss `f_t(z_t)`. [`learners`] holds the decision rules, [`predictors`]
//! the gradient forecasts, [`benchmarks`] the hindsight comparators, and
//! [`metrics`] ties them together under the online protocol.

pub mod benchmarks;
pub mod domain;
pub mod error;
pub mod harness;
pub mod learners;
pub mod loss;
pub mod metrics;
pub mod predictors;
pub mod traces;

pub use domain::{Decision, FeasibleBox, GradVector};
pub use error::{Error, Result};
pub use learners::{FtrlState, OolrState, Prediction};
pub use loss::{LossConfig, TraceSlot};
