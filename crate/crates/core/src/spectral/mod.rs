//! Fields on the unit torus in the even-in-`z` Fourier basis.

mod field;
mod modes;
pub mod snapshot;
mod transform;
mod vertical;

pub use field::{poincare_check, ScalarField, SpectralField, VectorField, C64, D0_TOLERANCE};
pub use modes::{build_mode_set, ModeIndex, ModeSet, MODE_ORDERING_ID};
pub use transform::{grid_size, product, to_grid, to_spectral, GridField, Padding};
pub use vertical::{vertical_velocity, SineField};

pub(crate) use field::ZERO;
pub(crate) use transform::{analyze_even, synthesize, Parity};
