//! Dimensional model of the delta mechanism and the value types shared by
//! every other module.
//!
//! Frame convention: the base plane is `z = 0`, the finger works below it
//! (`z < 0`), and chain `i` sits at azimuth `chain_azimuths[i]` measured
//! about `+z` from the `+x` axis.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::Vector3;
use thiserror::Error;

/// Force in newtons, expressed in the device base frame.
pub type ForceVector = Vector3<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("non-finite value for {0}")]
    NonFinite(&'static str),
    #[error("{0} must be strictly positive, got {1}")]
    NotPositive(&'static str, f64),
    #[error("upper_arm + forearm ({reach}) must exceed base_radius - effector_radius ({offset})")]
    EmptyReach { reach: f64, offset: f64 },
    #[error("chain azimuths {0} and {1} coincide modulo 2π")]
    DuplicateAzimuth(usize, usize),
    #[error("joint limits must satisfy theta_min < theta_max, got [{0}, {1}]")]
    InvalidLimits(f64, f64),
}

/// Cartesian point in metres. Components are always finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position(Vector3<f64>);

impl Position {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, GeometryError> {
        Self::from_vector(Vector3::new(x, y, z))
    }

    pub fn from_vector(v: Vector3<f64>) -> Result<Self, GeometryError> {
        if v.iter().all(|c| c.is_finite()) {
            Ok(Self(v))
        } else {
            Err(GeometryError::NonFinite("position"))
        }
    }

    pub const fn origin() -> Self {
        Self(Vector3::new(0.0, 0.0, 0.0))
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }

    pub fn coords(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.0 - other.0).norm()
    }

    /// Rotation about the base normal by `angle` radians.
    pub fn rotated_z(&self, angle: f64) -> Position {
        let (s, c) = angle.sin_cos();
        Position(Vector3::new(
            c * self.0.x - s * self.0.y,
            s * self.0.x + c * self.0.y,
            self.0.z,
        ))
    }
}

impl From<Position> for Vector3<f64> {
    fn from(p: Position) -> Self {
        p.0
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.0.x, self.0.y, self.0.z)
    }
}

/// Closed interval of admissible shoulder angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLimits {
    pub min: f64,
    pub max: f64,
}

impl JointLimits {
    pub fn new(min: f64, max: f64) -> Result<Self, GeometryError> {
        if !min.is_finite() || !max.is_finite() {
            return Err(GeometryError::NonFinite("joint limit"));
        }
        if min >= max {
            return Err(GeometryError::InvalidLimits(min, max));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, theta: f64) -> bool {
        theta >= self.min && theta <= self.max
    }

    pub fn clamp(&self, theta: f64) -> f64 {
        theta.clamp(self.min, self.max)
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.min + self.max)
    }
}

impl Default for JointLimits {
    fn default() -> Self {
        Self {
            min: -PI / 2.0,
            max: PI / 2.0,
        }
    }
}

/// Shoulder angles, one per chain, in radians.
///
/// Zero puts the upper arm in the base plane pointing at the central axis;
/// positive angles swing the elbow downward, toward the finger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointAngles(pub [f64; 3]);

impl JointAngles {
    pub fn new(theta: [f64; 3]) -> Result<Self, GeometryError> {
        if theta.iter().all(|t| t.is_finite()) {
            Ok(Self(theta))
        } else {
            Err(GeometryError::NonFinite("joint angle"))
        }
    }

    pub fn splat(theta: f64) -> Self {
        Self([theta; 3])
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    /// `(θ₂, θ₀, θ₁)`: the angles seen after rotating the target by one chain
    /// spacing.
    pub fn cyclic_shift(&self) -> Self {
        let [a, b, c] = self.0;
        Self([c, a, b])
    }

    pub fn max_abs_diff(&self, other: &JointAngles) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for JointAngles {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Dimensions of the 3-RRR mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaGeometry {
    base_radius: f64,
    upper_arm: f64,
    forearm: f64,
    effector_radius: f64,
    chain_azimuths: [f64; 3],
    limits: JointLimits,
}

impl DeltaGeometry {
    pub fn new(
        base_radius: f64,
        upper_arm: f64,
        forearm: f64,
        effector_radius: f64,
        chain_azimuths: [f64; 3],
        limits: JointLimits,
    ) -> Result<Self, GeometryError> {
        for (name, v) in [
            ("base_radius", base_radius),
            ("upper_arm", upper_arm),
            ("forearm", forearm),
            ("effector_radius", effector_radius),
        ] {
            if !v.is_finite() {
                return Err(GeometryError::NonFinite(name));
            }
            if v <= 0.0 {
                return Err(GeometryError::NotPositive(name, v));
            }
        }
        if chain_azimuths.iter().any(|a| !a.is_finite()) {
            return Err(GeometryError::NonFinite("chain azimuth"));
        }
        let offset = base_radius - effector_radius;
        if upper_arm + forearm <= offset {
            return Err(GeometryError::EmptyReach {
                reach: upper_arm + forearm,
                offset,
            });
        }
        for i in 0..3 {
            for j in (i + 1)..3 {
                let d = (chain_azimuths[i] - chain_azimuths[j]).rem_euclid(2.0 * PI);
                if d < 1e-12 || 2.0 * PI - d < 1e-12 {
                    return Err(GeometryError::DuplicateAzimuth(i, j));
                }
            }
        }
        let limits = JointLimits::new(limits.min, limits.max)?;
        Ok(Self {
            base_radius,
            upper_arm,
            forearm,
            effector_radius,
            chain_azimuths,
            limits,
        })
    }

    pub fn base_radius(&self) -> f64 {
        self.base_radius
    }

    pub fn upper_arm(&self) -> f64 {
        self.upper_arm
    }

    pub fn forearm(&self) -> f64 {
        self.forearm
    }

    pub fn effector_radius(&self) -> f64 {
        self.effector_radius
    }

    pub fn chain_azimuths(&self) -> [f64; 3] {
        self.chain_azimuths
    }

    pub fn limits(&self) -> JointLimits {
        self.limits
    }

    /// Radial distance from the central axis to a shoulder joint once the
    /// effector platform is collapsed onto its centre point.
    pub fn shoulder_offset(&self) -> f64 {
        self.base_radius - self.effector_radius
    }

    pub fn with_limits(mut self, limits: JointLimits) -> Self {
        self.limits = limits;
        self
    }
}

impl Default for DeltaGeometry {
    fn default() -> Self {
        Self {
            base_radius: 0.080,
            upper_arm: 0.035,
            forearm: 0.060,
            effector_radius: 0.010,
            chain_azimuths: [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0],
            limits: JointLimits::default(),
        }
    }
}
