//! Synchronous nonlinear observer for landmark-inertial SLAM.
//!
//! The robot attitude, velocity, position and `n` static landmark positions
//! are packed into one element of the extended pose group SE_{n+2}(3). The
//! observer corrects its estimate from body-frame landmark measurements and
//! IMU samples, and its error is analysed on the base space of observable
//! quantities (gravity direction, body-frame velocity and body-frame
//! landmark offsets), which is invariant under yaw rotation and translation
//! of the inertial frame.
//!
//! - [`groups`]: SO(3), SE_k(3), SIM_k(3) kernels.
//! - [`slam`]: system model, measurements, frame action and base projection.
//! - [`observer`]: auxiliary state, correction terms and observer vector field.
//! - [`analysis`]: error coordinates, Lyapunov certificates, alignment, metrics.
//! - [`sim`]: reference scenario, integrators and the simulation loop.

pub mod analysis;
pub mod error;
pub mod groups;
pub mod observer;
pub mod sim;
pub mod slam;

pub use error::{Error, Result};
