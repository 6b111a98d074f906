//! Inverse and forward kinematics of the rotational delta.
//!
//! Each chain is reduced to a planar problem in its own frame: the shoulder
//! joint sits at the local origin, local `+x` points radially outward, and
//! the upper arm swings in the local x–z plane. With the upper arm of length
//! `a` at angle `θ` the elbow is at `(-a·cosθ, 0, -a·sinθ)`, and the forearm
//! of length `b` must reach the wrist `p'`, which gives the closure
//!
//! ```text
//! E·cosθ + F·sinθ = G,   E = 2·a·x',  F = 2·a·z',  G = b² − a² − |p'|²
//! ```
//!
//! Forward kinematics intersects the three forearm spheres centred at the
//! elbows and keeps the solution below the base plane.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::geometry::{DeltaGeometry, JointAngles, Position};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum KinematicsError {
    #[error("unreachable: chain {0}")]
    Unreachable(usize),
    #[error("joint limit exceeded: chain {0}")]
    JointLimit(usize),
    #[error("forearm spheres do not intersect")]
    NoIntersection,
    #[error("only an intersection above the base plane exists")]
    AmbiguousAboveBase,
    #[error("forward kinematics fails near the requested pose")]
    Singular,
}

/// Finite-difference step for [`jacobian`], radians.
pub const JACOBIAN_STEP: f64 = 1e-6;

/// Slack on the sphere-intersection test in forward kinematics, metres.
const INTERSECTION_TOL: f64 = 1e-9;

/// Express `p` in the local frame of chain `chain`.
///
/// # Panics
/// If `chain > 2`.
pub fn chain_frame(geometry: &DeltaGeometry, chain: usize, p: &Position) -> Vector3<f64> {
    let azimuth = geometry.chain_azimuths()[chain];
    let r = p.rotated_z(-azimuth);
    Vector3::new(r.x() - geometry.shoulder_offset(), r.y(), r.z())
}

/// Both closure roots for one chain, or `None` if the forearm cannot reach.
fn chain_roots(geometry: &DeltaGeometry, local: &Vector3<f64>) -> Option<(f64, f64)> {
    let a = geometry.upper_arm();
    let b = geometry.forearm();
    let e = 2.0 * a * local.x;
    let f = 2.0 * a * local.z;
    let g = b * b - a * a - local.norm_squared();
    let r = e.hypot(f);
    if r == 0.0 {
        return None;
    }
    let ratio = g / r;
    if ratio.abs() > 1.0 + 1e-12 {
        return None;
    }
    let phi = f.atan2(e);
    let delta = ratio.clamp(-1.0, 1.0).acos();
    Some((wrap_angle(phi + delta), wrap_angle(phi - delta)))
}

fn wrap_angle(t: f64) -> f64 {
    use std::f64::consts::PI;
    let w = (t + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Elbow-out selection: the elbow with the smaller local x, i.e. the root
/// with the larger cosine. Exact ties (wrist in the base plane) go to the
/// raised elbow, which is the limit reached from below.
fn select_default_branch(r0: f64, r1: f64) -> f64 {
    let (c0, c1) = (r0.cos(), r1.cos());
    if (c0 - c1).abs() <= 1e-12 {
        r0.min(r1)
    } else if c0 > c1 {
        r0
    } else {
        r1
    }
}

fn angular_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

fn solve(
    geometry: &DeltaGeometry,
    p: &Position,
    pick: impl Fn(usize, f64, f64) -> f64,
) -> Result<JointAngles, KinematicsError> {
    let limits = geometry.limits();
    let mut theta = [0.0; 3];
    for (i, slot) in theta.iter_mut().enumerate() {
        let local = chain_frame(geometry, i, p);
        let (r0, r1) = chain_roots(geometry, &local).ok_or(KinematicsError::Unreachable(i))?;
        let t = pick(i, r0, r1);
        if !limits.contains(t) {
            return Err(KinematicsError::JointLimit(i));
        }
        *slot = t;
    }
    Ok(JointAngles(theta))
}

/// Closed-form inverse kinematics, elbow-out branch on every chain.
pub fn inverse_kinematics(geometry: &DeltaGeometry, p: &Position) -> Result<JointAngles, KinematicsError> {
    solve(geometry, p, |_, r0, r1| select_default_branch(r0, r1))
}

/// Inverse kinematics that keeps each chain on the root nearest `previous`,
/// so that a continuous path never flips an elbow.
pub fn inverse_kinematics_near(
    geometry: &DeltaGeometry,
    p: &Position,
    previous: &JointAngles,
) -> Result<JointAngles, KinematicsError> {
    solve(geometry, p, |i, r0, r1| {
        if angular_distance(r0, previous[i]) <= angular_distance(r1, previous[i]) {
            r0
        } else {
            r1
        }
    })
}

pub fn reachable(geometry: &DeltaGeometry, p: &Position) -> bool {
    inverse_kinematics(geometry, p).is_ok()
}

/// Elbow points in the base frame, with the effector radius already folded
/// into the shoulder offset.
pub fn elbow_points(geometry: &DeltaGeometry, angles: &JointAngles) -> [Vector3<f64>; 3] {
    let a = geometry.upper_arm();
    let offset = geometry.shoulder_offset();
    let az = geometry.chain_azimuths();
    std::array::from_fn(|i| {
        let (s, c) = angles[i].sin_cos();
        let radial = offset - a * c;
        let (sa, ca) = az[i].sin_cos();
        Vector3::new(radial * ca, radial * sa, -a * s)
    })
}

/// Distance from each elbow to the wrist minus the forearm length.
pub fn closure_residuals(geometry: &DeltaGeometry, angles: &JointAngles, p: &Position) -> [f64; 3] {
    let elbows = elbow_points(geometry, angles);
    std::array::from_fn(|i| (p.coords() - elbows[i]).norm() - geometry.forearm())
}

/// Forward kinematics by three-sphere trilateration.
pub fn forward_kinematics(geometry: &DeltaGeometry, angles: &JointAngles) -> Result<Position, KinematicsError> {
    let b = geometry.forearm();
    let [p1, p2, p3] = elbow_points(geometry, angles);

    let d12 = p2 - p1;
    let d = d12.norm();
    if d < 1e-15 {
        return Err(KinematicsError::NoIntersection);
    }
    let ex = d12 / d;
    let d13 = p3 - p1;
    let i = ex.dot(&d13);
    let ey_raw = d13 - i * ex;
    let j = ey_raw.norm();
    if j < 1e-15 {
        return Err(KinematicsError::NoIntersection);
    }
    let ey = ey_raw / j;
    let ez = ex.cross(&ey);

    // Equal radii simplify the textbook trilateration terms.
    let x = 0.5 * d;
    let y = (i * i + j * j - 2.0 * i * x) / (2.0 * j);
    let h2 = b * b - x * x - y * y;
    let h = if h2 >= 0.0 {
        h2.sqrt()
    } else if (x * x + y * y).sqrt() - b <= INTERSECTION_TOL {
        0.0
    } else {
        return Err(KinematicsError::NoIntersection);
    };

    let centre = p1 + x * ex + y * ey;
    let c_plus = centre + h * ez;
    let c_minus = centre - h * ez;
    let lower = if c_plus.z <= c_minus.z { c_plus } else { c_minus };
    if lower.z > 0.0 {
        return Err(KinematicsError::AmbiguousAboveBase);
    }
    Position::from_vector(lower).map_err(|_| KinematicsError::NoIntersection)
}

/// Central-difference Jacobian `∂p/∂θ` (m/rad); column `i` is the effector
/// velocity per unit rate of joint `i`.
pub fn jacobian(geometry: &DeltaGeometry, angles: &JointAngles) -> Result<Matrix3<f64>, KinematicsError> {
    let h = JACOBIAN_STEP;
    let mut j = Matrix3::zeros();
    for col in 0..3 {
        let mut plus = angles.0;
        let mut minus = angles.0;
        plus[col] += h;
        minus[col] -= h;
        let fp = forward_kinematics(geometry, &JointAngles(plus)).map_err(|_| KinematicsError::Singular)?;
        let fm = forward_kinematics(geometry, &JointAngles(minus)).map_err(|_| KinematicsError::Singular)?;
        j.set_column(col, &((fp.coords() - fm.coords()) / (2.0 * h)));
    }
    Ok(j)
}

/// Pose used for force calibration: equal angles at the middle of the joint
/// range, pushed through forward kinematics.
pub fn central_operating_pose(geometry: &DeltaGeometry) -> Result<(JointAngles, Position), KinematicsError> {
    let angles = JointAngles::splat(geometry.limits().mid());
    let p = forward_kinematics(geometry, &angles)?;
    Ok((angles, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn g() -> DeltaGeometry {
        DeltaGeometry::default()
    }

    fn pos(x: f64, y: f64, z: f64) -> Position {
        Position::new(x, y, z).unwrap()
    }

    #[test]
    fn chain_frame_examples() {
        let geo = g();
        let v = chain_frame(&geo, 0, &pos(0.070, 0.0, 0.0));
        assert!(v.norm() < 1e-15);

        let v = chain_frame(&geo, 0, &pos(0.0, 0.0, -0.040));
        assert!((v - Vector3::new(-0.070, 0.0, -0.040)).norm() < 1e-15);

        let p = pos(0.0, 0.010, -0.040);
        let rotated = p.rotated_z(2.0 * PI / 3.0);
        let a = chain_frame(&geo, 1, &rotated);
        let b = chain_frame(&geo, 0, &p);
        assert!((a - b).norm() < 1e-15);
    }

    #[test]
    fn axis_point_gives_equal_angles() {
        let t = inverse_kinematics(&g(), &pos(0.0, 0.0, -0.040)).unwrap();
        assert!((t[0] - t[1]).abs() < 1e-12);
        assert!((t[1] - t[2]).abs() < 1e-12);
    }

    #[test]
    fn far_point_is_unreachable() {
        assert_eq!(
            inverse_kinematics(&g(), &pos(0.5, 0.0, 0.0)),
            Err(KinematicsError::Unreachable(0))
        );
        assert!(!reachable(&g(), &pos(0.5, 0.0, 0.0)));
    }

    #[test]
    fn base_origin_is_reachable() {
        // Both roots are mirror images about the base plane here; the tie
        // resolves to the raised elbow, well inside the default limits.
        let t = inverse_kinematics(&g(), &Position::origin()).unwrap();
        assert!(t[0] < 0.0);
        assert!(reachable(&g(), &Position::origin()));
    }

    #[test]
    fn joint_limit_is_reported() {
        let narrow = g().with_limits(crate::geometry::JointLimits::new(-0.1, 0.1).unwrap());
        assert!(matches!(
            inverse_kinematics(&narrow, &pos(0.0, 0.0, -0.040)),
            Err(KinematicsError::JointLimit(_))
        ));
    }

    #[test]
    fn roundtrip_single_point() {
        let p = pos(0.010, -0.005, -0.045);
        let t = inverse_kinematics(&g(), &p).unwrap();
        let q = forward_kinematics(&g(), &t).unwrap();
        assert!(p.distance(&q) < 1e-9);
        for r in closure_residuals(&g(), &t, &p) {
            assert!(r.abs() < 1e-9);
        }
    }

    #[test]
    fn fk_of_shifted_angles_is_rotated() {
        let t = JointAngles([0.1, -0.2, 0.05]);
        let p = forward_kinematics(&g(), &t).unwrap();
        let q = forward_kinematics(&g(), &t.cyclic_shift()).unwrap();
        assert!(p.rotated_z(2.0 * PI / 3.0).distance(&q) < 1e-12);
    }

    #[test]
    fn fk_rejects_disconnected_spheres() {
        // Arms swung fully up and outward leave the elbows too far apart.
        let wide = g().with_limits(crate::geometry::JointLimits::new(-PI, PI).unwrap());
        let r = forward_kinematics(&wide, &JointAngles::splat(PI - 0.01));
        assert!(matches!(
            r,
            Err(KinematicsError::NoIntersection) | Err(KinematicsError::AmbiguousAboveBase)
        ));
    }

    #[test]
    fn jacobian_matches_secant() {
        let t = inverse_kinematics(&g(), &pos(0.004, 0.003, -0.035)).unwrap();
        let j = jacobian(&g(), &t).unwrap();
        let dt: Vector3<f64> = Vector3::new(6e-5, -5e-5, 5.7e-5);
        let dt = dt * (1e-4 / dt.norm());
        let moved = JointAngles([t[0] + dt.x, t[1] + dt.y, t[2] + dt.z]);
        let p0 = forward_kinematics(&g(), &t).unwrap();
        let p1 = forward_kinematics(&g(), &moved).unwrap();
        let err = (j * dt - (p1.coords() - p0.coords())).norm();
        assert!(err < 1e-7, "secant error {err}");
    }

    #[test]
    fn streaming_ik_follows_previous_branch() {
        let p = pos(0.0, 0.0, -0.040);
        let default = inverse_kinematics(&g(), &p).unwrap();
        let near = inverse_kinematics_near(&g(), &p, &default).unwrap();
        assert_eq!(default, near);
    }

    #[test]
    fn wrap_angle_range() {
        for t in [-7.0, -PI, 0.0, PI, 7.0] {
            let w = wrap_angle(t);
            assert!(w > -PI - 1e-15 && w <= PI + 1e-15);
            assert!(((w - t) / (2.0 * PI)).round() * 2.0 * PI - (w - t) < 1e-12);
        }
    }
}
