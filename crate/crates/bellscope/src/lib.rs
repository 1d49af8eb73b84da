//! Toolkit for correlation Bell inequalities: the complete two-setting
//! family and its transforms, classical (local-hidden-variable) membership
//! by transform and by linear programming over the classical polytope, and
//! quantum violations via alternating (See-Saw) optimization and closed
//! forms, including truncated continuous-variable states with pseudo-spin
//! observables.

pub mod correlation;
pub mod error;
pub mod family;
pub mod io;
pub mod linalg;
pub mod polytope;
pub mod quantum;
pub mod simplex;
pub mod states;

pub use error::{BellError, Result};
