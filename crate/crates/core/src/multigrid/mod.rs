//! Smoothing, the V-cycle recursion, and drivers producing per-cycle traces.

mod driver;
mod hierarchy;
mod smoother;
mod trace;
mod vcycle;

pub use driver::{
    reference_solution, run_lockstep, run_vcycles, FinestStop, ReferenceOptions, DEFAULT_MAX_CYCLES,
};
pub use hierarchy::Hierarchy;
pub use smoother::{smooth_apply, smooth_in_place, SmootherKind, SmootherSpec};
pub use trace::{CycleRecord, VcycleTrace, TRACE_CSV_HEADER};
pub use vcycle::{
    vcycle, BoundComparison, CoarseProblem, CoarseSolveReport, CoarseSolver, ExactCoarseSolver,
};
