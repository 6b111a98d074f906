//! Static force/torque model of the actuated device, servo stepping and the
//! line protocol spoken to the microcontroller.

use std::io::{self, Write};

use nalgebra::Vector3;
use thiserror::Error;

use crate::geometry::{DeltaGeometry, ForceVector, JointAngles, JointLimits};
use crate::kinematics::{central_operating_pose, jacobian, KinematicsError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeviceError {
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error("force direction is not a unit vector")]
    BadDirection,
    #[error("no joint torque responds to this direction; capability is unbounded")]
    Unbounded,
    #[error("invalid servo configuration: {0}")]
    BadServo(String),
    #[error("time step must be positive, got {0}")]
    BadTimeStep(f64),
    #[error("joint {0} angle {1} is outside the command range")]
    OutOfRange(usize, f64),
    #[error("malformed command line: {0}")]
    Decode(String),
}

/// Full-scale servo speed: 60° in 0.1 s.
pub const DEFAULT_MAX_RATE: f64 = std::f64::consts::PI / 3.0 / 0.1;
/// About 0.09°, a 10-bit step over a half turn.
pub const DEFAULT_QUANTIZATION: f64 = 1.57e-3;
/// Vertical force the servo torque limit is calibrated to, newtons.
pub const VERTICAL_FORCE_TARGET: f64 = 1.8;
/// Wire units per radian.
pub const COMMAND_SCALE: f64 = 10_000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServoConfig {
    /// N·m per joint; `f64::INFINITY` disables saturation.
    pub torque_limit: f64,
    /// rad/s; `f64::INFINITY` disables rate limiting.
    pub max_rate: f64,
    /// rad per command step; zero disables quantization.
    pub quantization: f64,
    pub limits: JointLimits,
}

impl ServoConfig {
    pub fn new(torque_limit: f64, max_rate: f64, quantization: f64, limits: JointLimits) -> Result<Self, DeviceError> {
        if torque_limit.is_nan() || torque_limit <= 0.0 {
            return Err(DeviceError::BadServo(format!(
                "torque_limit must be positive, got {torque_limit}"
            )));
        }
        if max_rate.is_nan() || max_rate <= 0.0 {
            return Err(DeviceError::BadServo(format!(
                "max_rate must be positive, got {max_rate}"
            )));
        }
        if !(0.0..=0.01).contains(&quantization) {
            return Err(DeviceError::BadServo(format!(
                "quantization must lie in [0, 0.01] rad, got {quantization}"
            )));
        }
        let limits = JointLimits::new(limits.min, limits.max).map_err(|e| DeviceError::BadServo(e.to_string()))?;
        Ok(Self {
            torque_limit,
            max_rate,
            quantization,
            limits,
        })
    }

    /// Unlimited torque and rate, no quantization.
    pub fn ideal(limits: JointLimits) -> Self {
        Self {
            torque_limit: f64::INFINITY,
            max_rate: f64::INFINITY,
            quantization: 0.0,
            limits,
        }
    }

    /// Default rate and quantization with the torque limit solved so that the
    /// vertical capability at the central operating pose equals
    /// [`VERTICAL_FORCE_TARGET`].
    pub fn calibrated(geometry: &DeltaGeometry) -> Result<Self, DeviceError> {
        let (angles, _) = central_operating_pose(geometry)?;
        let tau = calibrate_torque_limit(geometry, &angles, &-Vector3::z(), VERTICAL_FORCE_TARGET)?;
        Self::new(tau, DEFAULT_MAX_RATE, DEFAULT_QUANTIZATION, geometry.limits())
    }

    pub fn quantize(&self, theta: f64) -> f64 {
        quantize(theta, self.quantization)
    }
}

pub fn quantize(theta: f64, step: f64) -> f64 {
    if step > 0.0 {
        (theta / step).round() * step
    } else {
        theta
    }
}

/// `τ = Jᵀ·F`.
pub fn torque_for_force(
    geometry: &DeltaGeometry,
    angles: &JointAngles,
    force: &ForceVector,
) -> Result<Vector3<f64>, DeviceError> {
    let j = jacobian(geometry, angles)?;
    Ok(j.transpose() * force)
}

fn unit(direction: &Vector3<f64>) -> Result<(), DeviceError> {
    if (direction.norm() - 1.0).abs() <= 1e-9 {
        Ok(())
    } else {
        Err(DeviceError::BadDirection)
    }
}

/// Largest force magnitude along `direction` before any joint reaches the
/// torque limit.
pub fn force_capability(
    geometry: &DeltaGeometry,
    angles: &JointAngles,
    direction: &Vector3<f64>,
    servo: &ServoConfig,
) -> Result<f64, DeviceError> {
    unit(direction)?;
    let peak = torque_for_force(geometry, angles, direction)?.amax();
    if peak < 1e-15 {
        return Err(DeviceError::Unbounded);
    }
    Ok(servo.torque_limit / peak)
}

/// Torque limit at which the capability along `direction` equals `force`.
pub fn calibrate_torque_limit(
    geometry: &DeltaGeometry,
    angles: &JointAngles,
    direction: &Vector3<f64>,
    force: f64,
) -> Result<f64, DeviceError> {
    unit(direction)?;
    let peak = torque_for_force(geometry, angles, direction)?.amax();
    if peak < 1e-15 {
        return Err(DeviceError::Unbounded);
    }
    Ok(force * peak)
}

/// Scale `force` down, direction preserved, until the most loaded joint sits
/// at the torque limit. Forces inside the envelope pass through unchanged.
pub fn clamp_force(
    geometry: &DeltaGeometry,
    angles: &JointAngles,
    force: &ForceVector,
    servo: &ServoConfig,
) -> Result<ForceVector, DeviceError> {
    let peak = torque_for_force(geometry, angles, force)?.amax();
    if peak <= servo.torque_limit {
        Ok(*force)
    } else {
        Ok(force * (servo.torque_limit / peak))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceState {
    pub current: JointAngles,
    pub commanded: JointAngles,
    pub timestamp: f64,
}

impl DeviceState {
    /// Device at rest on `angles` (quantized and limited as the servo would
    /// hold them).
    pub fn at_rest(angles: JointAngles, servo: &ServoConfig, timestamp: f64) -> Self {
        let held = JointAngles(angles.0.map(|t| servo.limits.clamp(servo.quantize(t))));
        Self {
            current: held,
            commanded: angles,
            timestamp,
        }
    }
}

/// Advance every joint toward its quantized target by at most
/// `max_rate·dt`, then clamp to the joint limits.
pub fn step_command(
    state: &DeviceState,
    target: &JointAngles,
    dt: f64,
    servo: &ServoConfig,
) -> Result<DeviceState, DeviceError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DeviceError::BadTimeStep(dt));
    }
    let max_step = servo.max_rate * dt;
    let current = std::array::from_fn(|i| {
        let goal = servo.limits.clamp(servo.quantize(target[i]));
        let from = state.current[i];
        let delta = goal - from;
        let next = if delta.abs() <= max_step {
            goal
        } else {
            from + max_step.copysign(delta)
        };
        servo.limits.clamp(next)
    });
    Ok(DeviceState {
        current: JointAngles(current),
        commanded: *target,
        timestamp: state.timestamp + dt,
    })
}

/// `A <c0> <c1> <c2>\n` with `cᵢ = round(10000·θᵢ)`.
pub fn encode_command(angles: &JointAngles, limits: &JointLimits) -> Result<Vec<u8>, DeviceError> {
    let mut counts = [0i64; 3];
    for (i, c) in counts.iter_mut().enumerate() {
        let t = angles[i];
        if !t.is_finite() || !limits.contains(t) {
            return Err(DeviceError::OutOfRange(i, t));
        }
        *c = (t * COMMAND_SCALE).round() as i64;
    }
    Ok(format!("A {} {} {}\n", counts[0], counts[1], counts[2]).into_bytes())
}

pub fn decode_command(line: &[u8]) -> Result<JointAngles, DeviceError> {
    let text = std::str::from_utf8(line).map_err(|_| DeviceError::Decode("not UTF-8".into()))?;
    let body = text
        .strip_suffix('\n')
        .ok_or_else(|| DeviceError::Decode("missing newline".into()))?;
    let mut parts = body.split(' ');
    if parts.next() != Some("A") {
        return Err(DeviceError::Decode("missing `A` tag".into()));
    }
    let mut theta = [0.0; 3];
    for slot in theta.iter_mut() {
        let tok = parts
            .next()
            .ok_or_else(|| DeviceError::Decode("expected three values".into()))?;
        let c: i64 = tok
            .parse()
            .map_err(|_| DeviceError::Decode(format!("`{tok}` is not an integer")))?;
        *slot = c as f64 / COMMAND_SCALE;
    }
    if parts.next().is_some() {
        return Err(DeviceError::Decode("trailing fields".into()));
    }
    Ok(JointAngles(theta))
}

/// Streams encoded commands to any byte sink.
pub struct CommandWriter<W: Write> {
    sink: W,
    limits: JointLimits,
}

impl<W: Write> CommandWriter<W> {
    pub fn new(sink: W, limits: JointLimits) -> Self {
        Self { sink, limits }
    }

    pub fn send(&mut self, angles: &JointAngles) -> io::Result<()> {
        let line = encode_command(angles, &self.limits).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
        self.sink.write_all(&line)
    }

    pub fn into_inner(self) -> W {
        self.sink
    }
}
