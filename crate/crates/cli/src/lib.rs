//! Plan parsing, result files and analysis tables for the `saea-lab` binary.

pub mod analysis;
pub mod error;
pub mod plan;
pub mod results;

pub use error::{LabError, LabResult};
pub use plan::{parse_plan, parse_plan_str, plan_to_json, LabPlan, PlanDocument};
