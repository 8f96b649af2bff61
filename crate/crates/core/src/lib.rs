//! Reduced-order impact mechanics for elastic structures with a single point contact.
//!
//! The pipeline turns a modal or collocation model of a beam or string into a
//! two-dimensional delay equation for the contact point, classifies the model as
//! regular or singular from its memory kernel, and integrates impacts with a
//! finite contact force. A coefficient-of-restitution simulator serves as a
//! chatter-prone baseline and the `asymptotics` module covers the short-overlap
//! force scaling law.

pub mod app;
pub mod asymptotics;
pub mod chebyshev;
pub mod collocation;
pub mod config;
pub mod cor;
pub mod dde;
pub mod error;
pub mod kernel;
pub mod output;
pub mod projection;
pub mod regularity;
pub mod structure;
pub mod system;

mod oscillator;

pub use error::{Error, Result};
pub use oscillator::Oscillator;
