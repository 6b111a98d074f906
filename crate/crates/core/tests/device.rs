use std::f64::consts::PI;

use deltafinger::device::{
    calibrate_torque_limit, clamp_force, decode_command, encode_command, force_capability, quantize, step_command,
    torque_for_force, CommandWriter, DeviceError, DeviceState, ServoConfig, DEFAULT_QUANTIZATION,
    VERTICAL_FORCE_TARGET,
};
use deltafinger::kinematics::central_operating_pose;
use deltafinger::{inverse_kinematics, DeltaGeometry, JointAngles, JointLimits, Position};
use nalgebra::Vector3;
use proptest::prelude::*;

fn geo() -> DeltaGeometry {
    DeltaGeometry::default()
}

#[test]
fn torque_basics() {
    let g = geo();
    let (c, _) = central_operating_pose(&g).unwrap();
    assert_eq!(torque_for_force(&g, &c, &Vector3::zeros()).unwrap(), Vector3::zeros());
    let f = Vector3::new(0.3, -0.2, 0.7);
    let t1 = torque_for_force(&g, &c, &f).unwrap();
    let t2 = torque_for_force(&g, &c, &(2.0 * f)).unwrap();
    assert!((t2 - 2.0 * t1).amax() <= 1e-12);
    let tv = torque_for_force(&g, &c, &Vector3::new(0.0, 0.0, -1.0)).unwrap();
    assert!((tv.x - tv.y).abs() < 1e-9 * tv.amax() && (tv.y - tv.z).abs() < 1e-9 * tv.amax());
}

#[test]
fn calibrated_vertical_capability() {
    let g = geo();
    let servo = ServoConfig::calibrated(&g).unwrap();
    let (c, _) = central_operating_pose(&g).unwrap();
    let down = force_capability(&g, &c, &-Vector3::z(), &servo).unwrap();
    assert!((down - VERTICAL_FORCE_TARGET).abs() < 1e-12);
    let up = force_capability(&g, &c, &Vector3::z(), &servo).unwrap();
    assert!((up - VERTICAL_FORCE_TARGET).abs() < 1e-12);
}

/// Largest `s` with every |τᵢ(s·d)| ≤ τ_max, by bisection on the constraint.
fn capability_oracle(g: &DeltaGeometry, angles: &JointAngles, d: &Vector3<f64>, tau: f64) -> f64 {
    let ok = |s: f64| torque_for_force(g, angles, &(d * s)).unwrap().amax() <= tau;
    let (mut lo, mut hi) = (0.0, 1.0);
    while ok(hi) {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[test]
fn horizontal_capability_matches_bisection() {
    let g = geo();
    let servo = ServoConfig::calibrated(&g).unwrap();
    let (c, _) = central_operating_pose(&g).unwrap();
    for k in 0..24 {
        let a = k as f64 * PI / 12.0;
        let d = Vector3::new(a.cos(), a.sin(), 0.0);
        let closed = force_capability(&g, &c, &d, &servo).unwrap();
        let oracle = capability_oracle(&g, &c, &d, servo.torque_limit);
        assert!((closed - oracle).abs() <= 1e-9 * closed, "direction {k}");
        assert!(closed < VERTICAL_FORCE_TARGET);
    }
}

#[test]
fn capability_independent_of_direction_scale() {
    let g = geo();
    let servo = ServoConfig::calibrated(&g).unwrap();
    let (c, _) = central_operating_pose(&g).unwrap();
    let d = Vector3::new(0.3, 0.5, -0.8).normalize();
    let d2 = (d * 2.0).normalize();
    assert_eq!(
        force_capability(&g, &c, &d, &servo).unwrap(),
        force_capability(&g, &c, &d2, &servo).unwrap()
    );
    assert!(matches!(
        force_capability(&g, &c, &(d * 2.0), &servo),
        Err(DeviceError::BadDirection)
    ));
}

#[test]
fn calibration_is_inverse_of_capability() {
    let g = geo();
    let (c, _) = central_operating_pose(&g).unwrap();
    let d = Vector3::new(1.0, 0.0, 0.0);
    let tau = calibrate_torque_limit(&g, &c, &d, 0.5).unwrap();
    let servo = ServoConfig::new(tau, 1.0, 0.0, JointLimits::default()).unwrap();
    assert!((force_capability(&g, &c, &d, &servo).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn clamp_examples() {
    let g = geo();
    let servo = ServoConfig::calibrated(&g).unwrap();
    let (c, _) = central_operating_pose(&g).unwrap();
    assert_eq!(
        clamp_force(&g, &c, &Vector3::zeros(), &servo).unwrap(),
        Vector3::zeros()
    );
    let small = Vector3::new(0.1, 0.0, 0.2);
    assert_eq!(clamp_force(&g, &c, &small, &servo).unwrap(), small);
    let big = Vector3::new(3.0, -1.0, 5.0);
    let out = clamp_force(&g, &c, &big, &servo).unwrap();
    let peak = torque_for_force(&g, &c, &out).unwrap().amax();
    assert!((peak - servo.torque_limit).abs() <= 1e-9);
    assert!(out.cross(&big).norm() <= 1e-12 * big.norm_squared());
}

#[test]
fn step_examples() {
    let servo = ServoConfig::new(1.0, 2.0, 0.0, JointLimits::default()).unwrap();
    let start = DeviceState::at_rest(JointAngles([0.1, 0.2, 0.3]), &servo, 0.0);
    let same = step_command(&start, &start.current, 0.01, &servo).unwrap();
    assert_eq!(same.current, start.current);

    let far = JointAngles([1.0, -1.0, 0.3]);
    let next = step_command(&start, &far, 0.01, &servo).unwrap();
    assert!((next.current[0] - 0.12).abs() < 1e-15);
    assert!((next.current[1] - 0.18).abs() < 1e-15);
    assert_eq!(next.current[2], 0.3);
    assert!(step_command(&start, &far, 0.0, &servo).is_err());
}

#[test]
fn stepping_converges_within_predicted_count() {
    let servo = ServoConfig::new(1.0, 1.5, DEFAULT_QUANTIZATION, JointLimits::default()).unwrap();
    let dt = 0.004;
    let start = DeviceState::at_rest(JointAngles([-0.7, 0.2, 0.0]), &servo, 0.0);
    let target = JointAngles([0.9, -0.4, 0.05]);
    let goal = JointAngles(target.0.map(|t| quantize(t, servo.quantization)));
    let dist = start.current.max_abs_diff(&goal);
    let bound = ((dist / servo.max_rate) / dt).ceil() as usize + 1;
    let mut s = start;
    let mut steps = 0;
    while s.current != goal {
        s = step_command(&s, &target, dt, &servo).unwrap();
        steps += 1;
        assert!(steps <= bound, "did not converge in {bound} steps");
    }
}

#[test]
fn wire_examples() {
    let lim = JointLimits::default();
    assert_eq!(encode_command(&JointAngles([0.0; 3]), &lim).unwrap(), b"A 0 0 0\n");
    assert_eq!(
        encode_command(&JointAngles([0.1, -0.1, 0.05]), &lim).unwrap(),
        b"A 1000 -1000 500\n"
    );
    assert!(matches!(
        encode_command(&JointAngles([0.0, 2.0, 0.0]), &lim),
        Err(DeviceError::OutOfRange(1, _))
    ));
    assert!(decode_command(b"A 1 2\n").is_err());
    assert!(decode_command(b"B 1 2 3\n").is_err());
    assert!(decode_command(b"A 1 2 3").is_err());

    let mut w = CommandWriter::new(Vec::new(), lim);
    w.send(&JointAngles([0.0, 0.0, 0.0])).unwrap();
    w.send(&JointAngles([0.1, -0.1, 0.05])).unwrap();
    assert_eq!(w.into_inner(), b"A 0 0 0\nA 1000 -1000 500\n");
}

#[test]
fn singular_pose_propagates() {
    let g = geo();
    let servo = ServoConfig::calibrated(&g).unwrap();
    let bad = JointAngles::splat(3.0);
    assert!(matches!(
        clamp_force(&g, &bad, &Vector3::x(), &servo),
        Err(DeviceError::Kinematics(_))
    ));
}

fn pose() -> impl Strategy<Value = JointAngles> {
    (0.0..0.022f64, 0.0..2.0 * PI, -0.07..-0.02f64).prop_filter_map("reachable", |(r, a, z)| {
        let p = Position::new(r * a.cos(), r * a.sin(), z).ok()?;
        inverse_kinematics(&geo(), &p).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, max_global_rejects: 100_000, ..ProptestConfig::default() })]

    #[test]
    fn envelope_soundness_and_direction(angles in pose(), f in prop::array::uniform3(-10.0..10.0f64)) {
        let g = geo();
        let servo = ServoConfig::calibrated(&g).unwrap();
        let f = Vector3::from(f);
        let out = clamp_force(&g, &angles, &f, &servo).unwrap();
        let tau = torque_for_force(&g, &angles, &out).unwrap();
        prop_assert!(tau.amax() <= servo.torque_limit * (1.0 + 1e-12));
        prop_assert!(out.cross(&f).norm() <= 1e-12 * f.norm_squared());
        prop_assert!(out.dot(&f) >= 0.0);
    }

    #[test]
    fn rate_limit_holds(
        from in prop::array::uniform3(-1.5..1.5f64),
        to in prop::array::uniform3(-1.5..1.5f64),
        dt in 1e-4..0.05f64,
        rate in 0.1..20.0f64,
    ) {
        let servo = ServoConfig::new(1.0, rate, DEFAULT_QUANTIZATION, JointLimits::default()).unwrap();
        let mut s = DeviceState::at_rest(JointAngles(from), &servo, 0.0);
        for _ in 0..5 {
            let next = step_command(&s, &JointAngles(to), dt, &servo).unwrap();
            prop_assert!(next.current.max_abs_diff(&s.current) <= rate * dt * (1.0 + 1e-12));
            for t in next.current.0 {
                prop_assert!(servo.limits.contains(t));
            }
            s = next;
        }
    }

    #[test]
    fn wire_roundtrip(t in prop::array::uniform3(-PI / 2.0..PI / 2.0)) {
        let angles = JointAngles(t);
        let line = encode_command(&angles, &JointLimits::default()).unwrap();
        let back = decode_command(&line).unwrap();
        prop_assert!(back.max_abs_diff(&angles) <= 5e-5);
        for i in 0..3 {
            prop_assert_eq!(back[i], (t[i] * 1e4).round() / 1e4);
        }
    }
}
