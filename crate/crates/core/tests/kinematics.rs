use std::f64::consts::PI;

use deltafinger::kinematics::{central_operating_pose, closure_residuals, inverse_kinematics_near, JACOBIAN_STEP};
use deltafinger::workspace::{workspace_sample, GridSpec, WorkspaceError};
use deltafinger::{
    forward_kinematics, inverse_kinematics, jacobian, reachable, DeltaGeometry, JointAngles, KinematicsError, Position,
};
use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;

fn geo() -> DeltaGeometry {
    DeltaGeometry::default()
}

fn pos(x: f64, y: f64, z: f64) -> Position {
    Position::new(x, y, z).unwrap()
}

/// Forearm-length residual of chain `i` written directly from the linkage:
/// shoulder on the base circle, arm swinging inward and down, effector
/// attachment offset outward from the wrist.
fn oracle_residual(g: &DeltaGeometry, i: usize, theta: f64, p: &Position) -> f64 {
    let az = g.chain_azimuths()[i];
    let u = Vector3::new(az.cos(), az.sin(), 0.0);
    let elbow = u * (g.base_radius() - g.upper_arm() * theta.cos()) - Vector3::z() * (g.upper_arm() * theta.sin());
    let attach = p.coords() + u * g.effector_radius();
    (attach - elbow).norm() - g.forearm()
}

/// Every sign change of the residual over [−π, π] at 1e-6 rad.
fn scan_roots(g: &DeltaGeometry, i: usize, p: &Position) -> Vec<f64> {
    let step = 1e-6;
    let n = (2.0 * PI / step) as usize;
    let mut roots = Vec::new();
    let mut prev_t = -PI;
    let mut prev_r = oracle_residual(g, i, prev_t, p);
    for k in 1..=n {
        let t = -PI + k as f64 * step;
        let r = oracle_residual(g, i, t, p);
        if prev_r == 0.0 || prev_r.signum() != r.signum() {
            roots.push(if r.abs() < prev_r.abs() { t } else { prev_t });
        }
        prev_t = t;
        prev_r = r;
    }
    roots
}

#[test]
fn ik_matches_residual_scan() {
    let g = geo();
    let p = pos(0.0, 0.0, -0.040);
    let theta = inverse_kinematics(&g, &p).unwrap();
    for i in 0..3 {
        let roots = scan_roots(&g, i, &p);
        assert_eq!(roots.len(), 2, "chain {i}: {roots:?}");
        // Default branch: the elbow nearer the axis, i.e. the larger cosθ.
        let want = if roots[0].cos() >= roots[1].cos() {
            roots[0]
        } else {
            roots[1]
        };
        assert!((theta[i] - want).abs() <= 2e-6, "chain {i}: {} vs {want}", theta[i]);
    }
    assert!((theta[0] - theta[1]).abs() < 1e-12 && (theta[1] - theta[2]).abs() < 1e-12);
}

#[test]
fn ik_off_axis_matches_residual_scan() {
    let g = geo();
    let p = pos(0.011, -0.007, -0.035);
    let theta = inverse_kinematics(&g, &p).unwrap();
    for i in 0..3 {
        let roots = scan_roots(&g, i, &p);
        let want = roots
            .iter()
            .copied()
            .max_by(|a, b| a.cos().total_cmp(&b.cos()))
            .unwrap();
        assert!((theta[i] - want).abs() <= 2e-6, "chain {i}");
    }
}

#[test]
fn unreachable_names_chain() {
    let g = geo();
    assert_eq!(
        inverse_kinematics(&g, &pos(0.5, 0.0, 0.0)),
        Err(KinematicsError::Unreachable(0))
    );
    assert!(!reachable(&g, &pos(0.5, 0.0, 0.0)));
    assert!(reachable(&g, &pos(0.0, 0.0, -0.040)));
    assert_eq!(KinematicsError::Unreachable(0).to_string(), "unreachable: chain 0");
}

#[test]
fn origin_reachability_pin() {
    // The base-plane origin sits on the tie between both roots; the raised
    // elbow is chosen and lies within ±π/2.
    let g = geo();
    assert!(reachable(&g, &Position::origin()));
    let t = inverse_kinematics(&g, &Position::origin()).unwrap();
    let want = -(0.060f64.powi(2) - 0.035f64.powi(2) - 0.070f64.powi(2)) / (2.0 * 0.035 * 0.070);
    assert!((t[0].cos() - want).abs() < 1e-12);
    assert!(t[0] < 0.0);
}

/// Lower intersection of the chain-0 forearm sphere with the central axis.
fn axis_height_oracle(g: &DeltaGeometry, theta: f64) -> f64 {
    let dx = g.shoulder_offset() - g.upper_arm() * theta.cos();
    let ez = -g.upper_arm() * theta.sin();
    let f = |z: f64| (dx * dx + (z - ez).powi(2)).sqrt() - g.forearm();
    let (mut lo, mut hi) = (ez - g.forearm(), ez);
    assert!(f(lo) > 0.0 && f(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn equal_angles_land_on_axis() {
    let g = geo();
    for &theta in &[-0.3, 0.0, 0.4, 0.9, 1.1] {
        let p = forward_kinematics(&g, &JointAngles::splat(theta)).unwrap();
        assert!(p.x().abs() < 1e-12 && p.y().abs() < 1e-12, "theta {theta}");
        assert!((p.z() - axis_height_oracle(&g, theta)).abs() < 1e-12, "theta {theta}");
    }
}

#[test]
fn fk_of_ik_example() {
    let g = geo();
    let p = pos(0.010, -0.005, -0.045);
    let back = forward_kinematics(&g, &inverse_kinematics(&g, &p).unwrap()).unwrap();
    assert!(back.distance(&p) <= 1e-9);
}

#[test]
fn jacobian_columns_rotate_cyclically_on_axis() {
    let g = geo();
    let t = inverse_kinematics(&g, &pos(0.0, 0.0, -0.045)).unwrap();
    let j = jacobian(&g, &t).unwrap();
    let rz = Rotation3::from_axis_angle(&Vector3::z_axis(), 2.0 * PI / 3.0);
    for c in 0..3 {
        let rotated = rz * j.column(c).into_owned();
        let next = j.column((c + 1) % 3).into_owned();
        assert!((rotated - next).norm() < 1e-8, "column {c}");
    }
}

#[test]
fn jacobian_determinant_shrinks_toward_boundary() {
    let g = geo();
    let (central, _) = central_operating_pose(&g).unwrap();
    let det_c = jacobian(&g, &central).unwrap().determinant().abs();
    let edge = inverse_kinematics(&g, &pos(-0.024, 0.0, -0.010)).unwrap();
    let det_e = jacobian(&g, &edge).unwrap().determinant().abs();
    assert!(det_e < 0.25 * det_c, "edge {det_e} central {det_c}");
}

#[test]
fn jacobian_step_is_documented_value() {
    assert_eq!(JACOBIAN_STEP, 1e-6);
}

#[test]
fn streaming_ik_stays_on_branch() {
    let g = geo();
    let n = 2000;
    let step_len = 2.0 * PI * 0.02 / n as f64;
    let mut prev = inverse_kinematics(&g, &pos(0.02, 0.0, -0.03)).unwrap();
    for k in 1..=n {
        let a = 2.0 * PI * k as f64 / n as f64;
        let p = pos(0.02 * a.cos(), 0.02 * a.sin(), -0.03);
        let next = inverse_kinematics_near(&g, &p, &prev).unwrap();
        let jinv = jacobian(&g, &next).unwrap().try_inverse().unwrap();
        let bound = jinv.norm() * step_len;
        assert!(next.max_abs_diff(&prev) <= 10.0 * bound, "step {k}");
        prev = next;
    }
}

/// Smallest distance from the axis to the reachability boundary along 360
/// rays, marching outward at 0.05 mm.
fn ray_disc_oracle(g: &DeltaGeometry, z: f64) -> f64 {
    let mut best = f64::INFINITY;
    for k in 0..360 {
        let a = (k as f64).to_radians();
        let mut r = 0.0;
        while r < 0.1 && reachable(g, &pos(r * a.cos(), r * a.sin(), z)) {
            r += 5e-5;
        }
        best = best.min(r);
    }
    best
}

#[test]
fn workspace_disc_matches_ray_scan() {
    let g = geo();
    let grid = GridSpec::centered(0.05, -0.09, -0.01, 0.001).unwrap();
    let map = workspace_sample(&g, &grid).unwrap();
    let oracle = ray_disc_oracle(&g, map.z0);
    assert!(
        (map.disc_radius - oracle).abs() <= grid.spacing,
        "grid {} oracle {oracle}",
        map.disc_radius
    );
}

#[test]
fn tiny_arms_give_empty_workspace() {
    let g = DeltaGeometry::new(
        0.0105,
        0.001,
        0.001,
        0.010,
        [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0],
        Default::default(),
    )
    .unwrap();
    let grid = GridSpec::centered(0.05, -0.09, -0.01, 0.001).unwrap();
    assert_eq!(workspace_sample(&g, &grid).unwrap_err(), WorkspaceError::EmptyWorkspace);
}

fn reachable_point() -> impl Strategy<Value = Position> {
    (0.0..0.03f64, 0.0..2.0 * PI, -0.09..-0.005f64)
        .prop_map(|(r, a, z)| pos(r * a.cos(), r * a.sin(), z))
        .prop_filter("reachable", |p| reachable(&geo(), p))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 2000, max_global_rejects: 100_000, ..ProptestConfig::default() })]

    #[test]
    fn roundtrip_and_closure(p in reachable_point()) {
        let g = geo();
        let t = inverse_kinematics(&g, &p).unwrap();
        let back = forward_kinematics(&g, &t).unwrap();
        prop_assert!(back.distance(&p) <= 1e-9);
        for r in closure_residuals(&g, &t, &p) {
            prop_assert!(r.abs() <= 1e-9);
        }
    }

    #[test]
    fn ik_equivariance(p in reachable_point()) {
        let g = geo();
        let t = inverse_kinematics(&g, &p).unwrap();
        let rotated = inverse_kinematics(&g, &p.rotated_z(2.0 * PI / 3.0)).unwrap();
        prop_assert!(rotated.max_abs_diff(&t.cyclic_shift()) <= 1e-12);
    }

    #[test]
    fn fk_equivariance(a in -1.2..1.2f64, b in -1.2..1.2f64, c in -1.2..1.2f64) {
        let g = geo();
        let t = JointAngles([a, b, c]);
        if let Ok(p) = forward_kinematics(&g, &t) {
            let q = forward_kinematics(&g, &t.cyclic_shift()).unwrap();
            prop_assert!(q.distance(&p.rotated_z(2.0 * PI / 3.0)) <= 1e-12);
        }
    }

    #[test]
    fn jacobian_agrees_with_secant(p in reachable_point(), dir in prop::array::uniform3(-1.0..1.0f64)) {
        let g = geo();
        let d = Vector3::from(dir);
        prop_assume!(d.norm() > 1e-3);
        let d = d * (1e-4 / d.norm());
        let t = inverse_kinematics(&g, &p).unwrap();
        let moved = JointAngles([t[0] + d.x, t[1] + d.y, t[2] + d.z]);
        let (Ok(j), Ok(p1)) = (jacobian(&g, &t), forward_kinematics(&g, &moved)) else {
            return Ok(());
        };
        let p0 = forward_kinematics(&g, &t).unwrap();
        // Second-order term grows near singular poses; keep to well-conditioned ones.
        prop_assume!(j.determinant().abs() > 1e-7);
        prop_assert!((j * d - (p1.coords() - p0.coords())).norm() <= 1e-7);
    }
}
