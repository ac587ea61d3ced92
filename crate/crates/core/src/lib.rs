//! Co-optimization of load restoration and mobile energy storage routing for
//! islanded microgrids.
//!
//! A [`Scenario`] is compiled into a mixed-integer second-order cone program
//! ([`formulation::compile`]) over a time-expanded transport network
//! ([`transport::TransportIndex`]). Continuous relaxations are solved by the
//! operator-splitting solver in [`socp`], integrality is recovered by the
//! branch-and-bound search in [`mip`], and [`oracle`] holds the independent
//! verifiers used by the test suites.

pub mod error;
pub mod formulation;
pub mod instances;
pub mod mip;
pub mod oracle;
pub mod program;
pub mod report;
pub mod scenario;
pub mod socp;
pub mod transport;

pub use error::{Error, Result};
pub use formulation::{compile, CompiledModel, RestorationPlan, VariableAtlas};
pub use program::ConicProgram;
pub use scenario::{Scenario, ValidationReport};
pub use transport::{TransportIndex, TripSlot};
