//! Random walk on the d-dimensional Manhattan lattice.
//!
//! * [`lattice`]: oriented lattices, local environments, census.
//! * [`formulas`]: closed-form mean and mean square displacement in exact
//!   rational arithmetic.
//! * [`exact_engine`]: exact laws by dynamic programming and by brute-force
//!   path enumeration.
//! * [`walk_engine`]: seeded, parallel, reproducible Monte Carlo.

pub mod error;
pub mod exact_engine;
pub mod formulas;
pub mod lattice;
pub mod rational;
pub mod walk_engine;

pub use error::{Error, Result};
pub use exact_engine::{Limits, PathDistribution};
pub use lattice::{Dimension, LocalEnv, OrientationRule, Site, Step};
pub use rational::ExactRational;
pub use walk_engine::{SampleMoments, SimConfig};
