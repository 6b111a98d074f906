//! C ABI over `deltafinger`.
//!
//! Every fallible call returns a [`DfStatus`]; on failure the message is kept
//! per thread and can be copied out with [`df_last_error_message`]. Objects
//! are opaque handles created by `df_*_new`/`df_*_load` and released with the
//! matching `df_*_free`. Vectors are `double[3]`, matrices `double[9]`
//! row-major.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use deltafinger::device::{self, DeviceError, ServoConfig};
use deltafinger::rendering::{self, MeshError, RenderError, RenderParams, SurfaceMesh};
use deltafinger::stats::{self, StatsError};
use deltafinger::workspace::{self, GridSpec, WorkspaceError};
use deltafinger::{DeltaGeometry, GeometryError, JointAngles, JointLimits, KinematicsError, Position};
use libc::{c_char, size_t};
use nalgebra::Vector3;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Unreachable = 3,
    JointLimit = 4,
    NoIntersection = 5,
    Singular = 6,
    EmptyWorkspace = 7,
    MeshParse = 8,
    Io = 9,
    NotOnSurface = 10,
    PatchIncomplete = 11,
    OutOfRange = 12,
    Unbounded = 13,
    Statistics = 14,
    BufferTooSmall = 15,
    Panic = 99,
}

/// Kinematic description of the device.
pub struct DfGeometry(DeltaGeometry);

/// Triangle mesh for force rendering.
pub struct DfMesh(SurfaceMesh);

/// Servo model: torque limit, rate limit, quantization and joint limits.
pub struct DfServo(ServoConfig);

/// Rendered contact force.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DfContact {
    pub force: [f64; 3],
    /// Depth behind the reference plane in metres; positive inside.
    pub penetration: f64,
    pub contact: bool,
}

/// One-way ANOVA summary.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DfAnova {
    pub f: f64,
    pub p: f64,
    pub df_between: size_t,
    pub df_within: size_t,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl ToString) {
    let c = CString::new(msg.to_string().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(DfStatus, String);

impl From<GeometryError> for Failure {
    fn from(e: GeometryError) -> Self {
        Failure(DfStatus::InvalidArgument, e.to_string())
    }
}

impl From<KinematicsError> for Failure {
    fn from(e: KinematicsError) -> Self {
        let code = match e {
            KinematicsError::Unreachable(_) => DfStatus::Unreachable,
            KinematicsError::JointLimit(_) => DfStatus::JointLimit,
            KinematicsError::NoIntersection | KinematicsError::AmbiguousAboveBase => DfStatus::NoIntersection,
            KinematicsError::Singular => DfStatus::Singular,
        };
        Failure(code, e.to_string())
    }
}

impl From<DeviceError> for Failure {
    fn from(e: DeviceError) -> Self {
        let code = match &e {
            DeviceError::Kinematics(k) => return (*k).into(),
            DeviceError::OutOfRange(..) => DfStatus::OutOfRange,
            DeviceError::Unbounded => DfStatus::Unbounded,
            _ => DfStatus::InvalidArgument,
        };
        Failure(code, e.to_string())
    }
}

impl From<MeshError> for Failure {
    fn from(e: MeshError) -> Self {
        let code = match e {
            MeshError::Io(_) => DfStatus::Io,
            _ => DfStatus::MeshParse,
        };
        Failure(code, e.to_string())
    }
}

impl From<RenderError> for Failure {
    fn from(e: RenderError) -> Self {
        let code = match e {
            RenderError::NotOnSurface => DfStatus::NotOnSurface,
            RenderError::PatchIncomplete(_) | RenderError::DegeneratePatch => DfStatus::PatchIncomplete,
            _ => DfStatus::InvalidArgument,
        };
        Failure(code, e.to_string())
    }
}

impl From<WorkspaceError> for Failure {
    fn from(e: WorkspaceError) -> Self {
        let code = match e {
            WorkspaceError::EmptyWorkspace => DfStatus::EmptyWorkspace,
            _ => DfStatus::InvalidArgument,
        };
        Failure(code, e.to_string())
    }
}

impl From<StatsError> for Failure {
    fn from(e: StatsError) -> Self {
        Failure(DfStatus::Statistics, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(DfStatus::NullPointer, format!("{what} is null"))
}

/// Run `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DfStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            DfStatus::Panic
        }
    }
}

unsafe fn read3(p: *const f64, what: &str) -> Result<[f64; 3], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok([*p, *p.add(1), *p.add(2)])
}

unsafe fn write3(p: *mut f64, v: [f64; 3], what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    ptr::copy_nonoverlapping(v.as_ptr(), p, 3);
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn position(v: [f64; 3]) -> Result<Position, Failure> {
    Ok(Position::new(v[0], v[1], v[2])?)
}

fn angles(v: [f64; 3]) -> Result<JointAngles, Failure> {
    Ok(JointAngles::new(v)?)
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL,
/// or 0 when there is no message.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn df_last_error_message(buf: *mut c_char, len: size_t) -> size_t {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Default device geometry. Never fails; free with [`df_geometry_free`].
#[no_mangle]
pub extern "C" fn df_geometry_default() -> *mut DfGeometry {
    Box::into_raw(Box::new(DfGeometry(DeltaGeometry::default())))
}

/// Lengths in metres, azimuths and limits in radians.
///
/// # Safety
/// `azimuths` must point to three doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn df_geometry_new(
    base_radius: f64,
    upper_arm: f64,
    forearm: f64,
    effector_radius: f64,
    azimuths: *const f64,
    theta_min: f64,
    theta_max: f64,
    out: *mut *mut DfGeometry,
) -> DfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let az = read3(azimuths, "azimuths")?;
        let limits = JointLimits::new(theta_min, theta_max)?;
        let g = DeltaGeometry::new(base_radius, upper_arm, forearm, effector_radius, az, limits)?;
        *out = Box::into_raw(Box::new(DfGeometry(g)));
        Ok(())
    })
}

/// # Safety
/// `geometry` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn df_geometry_free(geometry: *mut DfGeometry) {
    if !geometry.is_null() {
        drop(Box::from_raw(geometry));
    }
}

/// Joint angles for an effector position. On `Unreachable` or `JointLimit`
/// the failing chain index is stored in `failing_chain` when non-null.
///
/// # Safety
/// Pointers must be valid for three doubles; `failing_chain` may be null.
#[no_mangle]
pub unsafe extern "C" fn df_inverse_kinematics(
    geometry: *const DfGeometry,
    position: *const f64,
    angles_out: *mut f64,
    failing_chain: *mut i32,
) -> DfStatus {
    guard(|| {
        let g = handle(geometry, "geometry")?;
        let p = self::position(read3(position, "position")?)?;
        match deltafinger::inverse_kinematics(&g.0, &p) {
            Ok(t) => write3(angles_out, t.0, "angles_out"),
            Err(e) => {
                if let (KinematicsError::Unreachable(i) | KinematicsError::JointLimit(i), Some(slot)) =
                    (e, failing_chain.as_mut())
                {
                    *slot = i as i32;
                }
                Err(e.into())
            }
        }
    })
}

/// # Safety
/// Pointers must be valid for three doubles.
#[no_mangle]
pub unsafe extern "C" fn df_forward_kinematics(
    geometry: *const DfGeometry,
    angles: *const f64,
    position_out: *mut f64,
) -> DfStatus {
    guard(|| {
        let g = handle(geometry, "geometry")?;
        let t = self::angles(read3(angles, "angles")?)?;
        let p = deltafinger::forward_kinematics(&g.0, &t)?;
        write3(position_out, [p.x(), p.y(), p.z()], "position_out")
    })
}

/// `∂p/∂θ` in m/rad, row-major.
///
/// # Safety
/// `angles` must hold three doubles, `jacobian_out` nine.
#[no_mangle]
pub unsafe extern "C" fn df_jacobian(
    geometry: *const DfGeometry,
    angles: *const f64,
    jacobian_out: *mut f64,
) -> DfStatus {
    guard(|| {
        let g = handle(geometry, "geometry")?;
        let t = self::angles(read3(angles, "angles")?)?;
        if jacobian_out.is_null() {
            return Err(null("jacobian_out"));
        }
        let j = deltafinger::jacobian(&g.0, &t)?;
        for r in 0..3 {
            for c in 0..3 {
                *jacobian_out.add(3 * r + c) = j[(r, c)];
            }
        }
        Ok(())
    })
}

/// # Safety
/// `position` must hold three doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn df_reachable(geometry: *const DfGeometry, position: *const f64, out: *mut bool) -> DfStatus {
    guard(|| {
        let g = handle(geometry, "geometry")?;
        let p = self::position(read3(position, "position")?)?;
        *out_ptr(out, "out")? = deltafinger::reachable(&g.0, &p);
        Ok(())
    })
}

/// Sample reachability on a grid centred on the axis and report the slice
/// with the largest inscribed disc.
///
/// # Safety
/// `z0_out` and `radius_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn df_workspace_disc(
    geometry: *const DfGeometry,
    lateral: f64,
    z_min: f64,
    z_max: f64,
    spacing: f64,
    z0_out: *mut f64,
    radius_out: *mut f64,
) -> DfStatus {
    guard(|| {
        let g = handle(geometry, "geometry")?;
        let z0_out = out_ptr(z0_out, "z0_out")?;
        let radius_out = out_ptr(radius_out, "radius_out")?;
        let grid = GridSpec::centered(lateral, z_min, z_max, spacing)?;
        let map = workspace::workspace_sample(&g.0, &grid)?;
        *z0_out = map.z0;
        *radius_out = map.disc_radius;
        Ok(())
    })
}

/// Load an OFF or ASCII STL mesh (chosen by extension).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn df_mesh_load(path: *const c_char, out: *mut *mut DfMesh) -> DfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Failure(DfStatus::InvalidArgument, "path is not UTF-8".into()))?;
        let mesh = rendering::load_mesh(Path::new(path))?;
        *out = Box::into_raw(Box::new(DfMesh(mesh)));
        Ok(())
    })
}

/// Square `[-half, half]²` at height `z`, facing +z.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn df_mesh_plane(half: f64, z: f64, out: *mut *mut DfMesh) -> DfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = Box::into_raw(Box::new(DfMesh(SurfaceMesh::plane(half, z)?)));
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn df_mesh_icosphere(radius: f64, level: u32, out: *mut *mut DfMesh) -> DfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if level > 7 {
            return Err(Failure(DfStatus::InvalidArgument, format!("level {level} exceeds 7")));
        }
        *out = Box::into_raw(Box::new(DfMesh(SurfaceMesh::icosphere(radius, level)?)));
        Ok(())
    })
}

/// # Safety
/// `mesh` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn df_mesh_free(mesh: *mut DfMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Number of triangles in `mesh`, 0 for null.
///
/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn df_mesh_triangle_count(mesh: *const DfMesh) -> size_t {
    mesh.as_ref().map_or(0, |m| m.0.triangles().len())
}

/// Nearest ray hit. `hit` receives whether anything was hit; `point_out` and
/// `t_out` are written only on a hit.
///
/// # Safety
/// `origin`, `direction` and `point_out` hold three doubles; `t_out` and
/// `hit` must be writable.
#[no_mangle]
pub unsafe extern "C" fn df_ray_cast(
    mesh: *const DfMesh,
    origin: *const f64,
    direction: *const f64,
    hit: *mut bool,
    point_out: *mut f64,
    t_out: *mut f64,
) -> DfStatus {
    guard(|| {
        let m = handle(mesh, "mesh")?;
        let o = self::position(read3(origin, "origin")?)?;
        let d = Vector3::from(read3(direction, "direction")?);
        let hit = out_ptr(hit, "hit")?;
        let t_out = out_ptr(t_out, "t_out")?;
        match rendering::ray_cast(&m.0, &o, &d)? {
            Some(h) => {
                *hit = true;
                *t_out = h.t;
                write3(point_out, [h.point.x(), h.point.y(), h.point.z()], "point_out")
            }
            None => {
                *hit = false;
                Ok(())
            }
        }
    })
}

/// Spring force for a finger position. Non-positive `apex_height` or
/// `cone_angle` select the defaults (0.10 m, 15°).
///
/// # Safety
/// `finger` holds three doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn df_render_force(
    mesh: *const DfMesh,
    finger: *const f64,
    stiffness: f64,
    apex_height: f64,
    cone_angle: f64,
    out: *mut DfContact,
) -> DfStatus {
    guard(|| {
        let m = handle(mesh, "mesh")?;
        let p = self::position(read3(finger, "finger")?)?;
        let out = out_ptr(out, "out")?;
        let defaults = RenderParams::default();
        let params = RenderParams {
            stiffness,
            apex_height: if apex_height > 0.0 {
                apex_height
            } else {
                defaults.apex_height
            },
            cone_angle: if cone_angle > 0.0 {
                cone_angle
            } else {
                defaults.cone_angle
            },
        };
        let c = rendering::render_force(&m.0, &p, &params)?;
        *out = DfContact {
            force: c.vector.into(),
            penetration: c.penetration,
            contact: c.contact,
        };
        Ok(())
    })
}

/// Servo with default rate and quantization and the torque limit calibrated
/// to the default vertical force at the central operating pose.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn df_servo_calibrated(geometry: *const DfGeometry, out: *mut *mut DfServo) -> DfStatus {
    guard(|| {
        let g = handle(geometry, "geometry")?;
        let out = out_ptr(out, "out")?;
        *out = Box::into_raw(Box::new(DfServo(ServoConfig::calibrated(&g.0)?)));
        Ok(())
    })
}

/// Unlimited torque and rate, no quantization.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn df_servo_ideal(geometry: *const DfGeometry, out: *mut *mut DfServo) -> DfStatus {
    guard(|| {
        let g = handle(geometry, "geometry")?;
        let out = out_ptr(out, "out")?;
        *out = Box::into_raw(Box::new(DfServo(ServoConfig::ideal(g.0.limits()))));
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn df_servo_new(
    torque_limit: f64,
    max_rate: f64,
    quantization: f64,
    theta_min: f64,
    theta_max: f64,
    out: *mut *mut DfServo,
) -> DfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let limits = JointLimits::new(theta_min, theta_max)?;
        *out = Box::into_raw(Box::new(DfServo(ServoConfig::new(
            torque_limit,
            max_rate,
            quantization,
            limits,
        )?)));
        Ok(())
    })
}

/// # Safety
/// `servo` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn df_servo_torque_limit(servo: *const DfServo) -> f64 {
    servo.as_ref().map_or(f64::NAN, |s| s.0.torque_limit)
}

/// # Safety
/// `servo` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn df_servo_free(servo: *mut DfServo) {
    if !servo.is_null() {
        drop(Box::from_raw(servo));
    }
}

/// `τ = Jᵀ·F`.
///
/// # Safety
/// `angles`, `force` and `torque_out` hold three doubles.
#[no_mangle]
pub unsafe extern "C" fn df_torque_for_force(
    geometry: *const DfGeometry,
    angles: *const f64,
    force: *const f64,
    torque_out: *mut f64,
) -> DfStatus {
    guard(|| {
        let g = handle(geometry, "geometry")?;
        let t = self::angles(read3(angles, "angles")?)?;
        let f = Vector3::from(read3(force, "force")?);
        let tau = device::torque_for_force(&g.0, &t, &f)?;
        write3(torque_out, tau.into(), "torque_out")
    })
}

/// Largest force along the unit `direction` within the torque limit.
///
/// # Safety
/// `angles` and `direction` hold three doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn df_force_capability(
    geometry: *const DfGeometry,
    servo: *const DfServo,
    angles: *const f64,
    direction: *const f64,
    out: *mut f64,
) -> DfStatus {
    guard(|| {
        let g = handle(geometry, "geometry")?;
        let s = handle(servo, "servo")?;
        let t = self::angles(read3(angles, "angles")?)?;
        let d = Vector3::from(read3(direction, "direction")?);
        *out_ptr(out, "out")? = device::force_capability(&g.0, &t, &d, &s.0)?;
        Ok(())
    })
}

/// Scale `force` down, direction preserved, to the torque envelope.
///
/// # Safety
/// `angles`, `force` and `force_out` hold three doubles.
#[no_mangle]
pub unsafe extern "C" fn df_clamp_force(
    geometry: *const DfGeometry,
    servo: *const DfServo,
    angles: *const f64,
    force: *const f64,
    force_out: *mut f64,
) -> DfStatus {
    guard(|| {
        let g = handle(geometry, "geometry")?;
        let s = handle(servo, "servo")?;
        let t = self::angles(read3(angles, "angles")?)?;
        let f = Vector3::from(read3(force, "force")?);
        let c = device::clamp_force(&g.0, &t, &f, &s.0)?;
        write3(force_out, c.into(), "force_out")
    })
}

/// Encode a servo command line (`A c0 c1 c2\n`, NUL-terminated) into `buf`.
/// `written` receives the line length excluding the NUL.
///
/// # Safety
/// `angles` holds three doubles; `buf` has `len` writable bytes; `written`
/// may be null.
#[no_mangle]
pub unsafe extern "C" fn df_encode_command(
    servo: *const DfServo,
    angles: *const f64,
    buf: *mut c_char,
    len: size_t,
    written: *mut size_t,
) -> DfStatus {
    guard(|| {
        let s = handle(servo, "servo")?;
        let t = self::angles(read3(angles, "angles")?)?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let line = device::encode_command(&t, &s.0.limits)?;
        if line.len() + 1 > len {
            return Err(Failure(
                DfStatus::BufferTooSmall,
                format!("need {} bytes, have {len}", line.len() + 1),
            ));
        }
        ptr::copy_nonoverlapping(line.as_ptr().cast::<c_char>(), buf, line.len());
        *buf.add(line.len()) = 0;
        if let Some(w) = written.as_mut() {
            *w = line.len();
        }
        Ok(())
    })
}

/// One-way ANOVA over `group_count` groups stored back to back in `values`;
/// group `i` has `group_sizes[i]` observations.
///
/// # Safety
/// `group_sizes` holds `group_count` entries and `values` their sum.
#[no_mangle]
pub unsafe extern "C" fn df_one_way_anova(
    values: *const f64,
    group_sizes: *const size_t,
    group_count: size_t,
    out: *mut DfAnova,
) -> DfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if values.is_null() || group_sizes.is_null() {
            return Err(null("values or group_sizes"));
        }
        let sizes = std::slice::from_raw_parts(group_sizes, group_count);
        let total: usize = sizes.iter().sum();
        let all = std::slice::from_raw_parts(values, total);
        let mut groups = Vec::with_capacity(group_count);
        let mut start = 0;
        for &n in sizes {
            groups.push(&all[start..start + n]);
            start += n;
        }
        let r = stats::one_way_anova(&groups)?;
        *out = DfAnova {
            f: r.f,
            p: r.p,
            df_between: r.df_between,
            df_within: r.df_within,
        };
        Ok(())
    })
}
