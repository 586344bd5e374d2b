//! Truncated multimode Fock space: registers, states, passive linear optics
//! and the loss, background, phase-noise and detection channels.

mod channels;
mod circuit;
mod register;
mod state;

pub use channels::{
    apply_loss, apply_visibility, condition_on_click, condition_on_click_with_efficiency,
    inject_background, partial_trace, ClickOutcome,
};
pub use circuit::{LinearOpticsCircuit, OpticalElement, Overflow};
pub use register::{ModeRegister, MAX_DIM};
pub use state::{vacuum, DensityOperator, PureState, HERMITIAN_TOL, NORM_TOL, POSITIVITY_TOL};
