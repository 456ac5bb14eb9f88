//! Deterministic part of the modified primitive equations.

mod cutoff;
mod drift;
mod nonlinear;
mod schedule;

pub use cutoff::{cutoff_theta, CutoffSpec};
pub use drift::{drift, Dynamics, DriftEval, ForcingSpec, NormSnapshot, PhysicsParams};
pub use nonlinear::{nonlinear_q, QMethod};
pub use schedule::{radius_schedule, Mode, RadiusSchedule};
