//! Scheduling with restricted assignment: models, LP relaxation, rounding,
//! exact search and hardness gadgets.

pub mod approx;
pub mod corpus;
pub mod exact;
pub mod lff;
pub mod lp;
pub mod model;
pub mod reductions;

pub use model::{
    makespan, min_load, validate, Eligibility, InstanceError, RaiInstance, RaiJob, ResourceInstance,
    ResourceJob, RestrictedInstance, RestrictedJob, Schedule, TargetMode, ValidationReport, Violation,
};
