//! Ground-truth checks used by the test suites. Exhaustive enumeration of
//! integral assignments covers tiny programs, a constraint sweep recomputes
//! feasibility of a plan from the scenario rather than from the program, and
//! a search-based cone projection backs the closed form.

mod enumerate;
mod feasibility;
mod projection;

pub use enumerate::{domain_size, enumerate_optimal, enumeration_domains, EnumeratedOptimum, Enumeration, EnumerationCaps};
pub use feasibility::{check_feasibility, Family, FamilyCheck, FeasibilityReport, Location};
pub use projection::numeric_cone_projection;
