//! Software model of a finger-worn 3-RRR delta haptic display.
//!
//! * [`kinematics`] and [`workspace`]: closed-form IK, trilateration FK, the
//!   finite-difference Jacobian and grid reachability.
//! * [`rendering`]: contact against triangle meshes and the reference-plane
//!   spring force.
//! * [`device`]: torque mapping, torque-envelope saturation, rate-limited
//!   servo stepping and the serial command line protocol.
//! * [`harness`] and [`stats`]: the circular-trajectory force experiment and
//!   the statistics used to summarise it.
//! * [`config`] and [`cli`]: the shared key-value configuration and the
//!   `deltafinger` command line.

pub mod cli;
pub mod config;
pub mod device;
pub mod format;
pub mod geometry;
pub mod harness;
pub mod kinematics;
pub mod rendering;
pub mod stats;
pub mod workspace;

pub use geometry::{DeltaGeometry, ForceVector, GeometryError, JointAngles, JointLimits, Position};
pub use kinematics::{forward_kinematics, inverse_kinematics, jacobian, reachable, KinematicsError};
