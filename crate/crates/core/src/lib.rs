//! Context-aware association of users to small cells.
//!
//! Users carry an urgency, a crossing direction and a speed; picocells carry
//! a coverage radius, a handover-failure radius, a quota and a preparation
//! time. Both sides rank each other with utilities that depend on the current
//! association (cell load), so association is a many-to-one matching game
//! with externalities. [`matching::solve`] iterates deferred acceptance to a
//! fixed point and [`matching::verify_stability`] checks the result.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod context;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod matching;
pub mod preferences;
pub mod radio;
pub mod scenario;
pub mod seeding;

pub use error::{Error, Result};
pub use matching::{Matching, SolveReport};
pub use preferences::{GameConfig, Market};
pub use scenario::{generate, load_fixture, Scenario, ScenarioConfig};
