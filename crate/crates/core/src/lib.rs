//! Simulation and numerical certification of Cucker–Smale flocking with a
//! time-varying communication delay.
//!
//! The pipeline is
//! [`model`] (scenario description) → [`integrator`] (method-of-steps RK4
//! with Hermite dense output) → [`diagnostics`] (diameters, window extrema,
//! weight floors) → [`certificates`] (decay rate, position bound, Lyapunov
//! functional and the inequality checks along a trajectory).

pub mod certificates;
pub mod diagnostics;
pub mod integrator;
pub mod io;
pub mod model;
pub mod presets;
pub mod quad;

pub use certificates::{certify, CertificateReport, Tolerances};
pub use integrator::{integrate, PhaseState, Trajectory};
pub use model::ScenarioSpec;
