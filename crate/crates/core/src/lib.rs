//! Lattice discretisation of the second-order Seiberg–Witten boundary value
//! problems on four-dimensional boxes.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod fields;
pub mod functional;
pub mod gauge;
pub mod io;
pub mod lattice;
pub mod refine;
pub mod rng;
pub mod solver;
pub mod value;

pub use error::{Error, Result};
pub use fields::{GaugeField, GaugeTransform, SpinorField};
pub use functional::{EnergyBreakdown, FieldPair};
pub use gauge::Mode;
pub use io::{FieldKind, Report, RunConfig};
pub use lattice::{Domain, Form, KgSpec};
pub use solver::{BoundaryData, Solution, SolverConfig, SourcePair};
pub use value::{FieldValue, Spinor};
