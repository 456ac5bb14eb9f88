//! Noise models, Wiener increments, time stepping and single trajectories.

mod noise;
mod step;
mod trajectory;
mod wiener;

pub use noise::{verify_noise_conditions, NoiseKind, NoiseModel, NoiseOperator, NoiseReport};
pub use step::{check_stopping, to_u, to_v, Formulation, RadiusUpdate, StopCheck, Stepper};
pub use trajectory::{dissipation_sq, simulate, simulate_with, RunSetup, StepRecord, StopReason, Trajectory};
pub use wiener::{trajectory_rng, wiener_increments, BrownianPath, NoiseSource, PathNoise, RngNoise};
