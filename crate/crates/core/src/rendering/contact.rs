use nalgebra::Vector3;
use thiserror::Error;

use super::mesh::SurfaceMesh;
use crate::geometry::{ForceVector, Position};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error("point is not on the surface")]
    NotOnSurface,
    #[error("only {0} of 3 reference rays hit the surface")]
    PatchIncomplete(usize),
    #[error("reference points are collinear")]
    DegeneratePatch,
    #[error("ray direction must be a unit vector")]
    BadDirection,
    #[error("stiffness must be positive and finite, got {0}")]
    BadStiffness(f64),
}

/// Minimum accepted ray parameter.
pub const RAY_EPSILON: f64 = 1e-12;
/// How far a point may sit from a triangle and still count as on it.
pub const ON_SURFACE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub t: f64,
    pub point: Position,
    pub triangle: usize,
    pub normal: Vector3<f64>,
}

/// Nearest two-sided ray/triangle hit (Möller–Trumbore).
pub fn ray_cast(
    mesh: &SurfaceMesh,
    origin: &Position,
    direction: &Vector3<f64>,
) -> Result<Option<RayHit>, RenderError> {
    let err = (direction.norm() - 1.0).abs();
    if err.is_nan() || err > 1e-9 {
        return Err(RenderError::BadDirection);
    }
    let o = origin.coords();
    if !mesh.bounds().hit_by(o, direction) {
        return Ok(None);
    }
    let mut best: Option<(f64, usize)> = None;
    for i in 0..mesh.triangles().len() {
        let [a, b, c] = mesh.corners(i);
        if let Some(t) = moller_trumbore(o, direction, &a, &b, &c) {
            if t > RAY_EPSILON && best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, i));
            }
        }
    }
    Ok(best.map(|(t, i)| RayHit {
        t,
        point: Position::from_vector(o + direction * t).expect("finite hit"),
        triangle: i,
        normal: mesh.normals()[i],
    }))
}

fn moller_trumbore(
    o: &Vector3<f64>,
    d: &Vector3<f64>,
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    c: &Vector3<f64>,
) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let pvec = d.cross(&e2);
    let det = e1.dot(&pvec);
    if det.abs() < 1e-15 * e1.norm() * e2.norm() {
        return None;
    }
    let inv = 1.0 / det;
    let tvec = o - a;
    let u = tvec.dot(&pvec) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qvec = tvec.cross(&e1);
    let v = d.dot(&qvec) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some(e2.dot(&qvec) * inv)
}

/// Outward normal of the triangle under `p`.
pub fn surface_normal_at(mesh: &SurfaceMesh, p: &Position) -> Result<Vector3<f64>, RenderError> {
    if mesh.bounds().distance(p.coords()) > ON_SURFACE_TOL {
        return Err(RenderError::NotOnSurface);
    }
    let (_, tri, dist) = mesh.closest_point(p.coords());
    if dist > ON_SURFACE_TOL {
        return Err(RenderError::NotOnSurface);
    }
    Ok(mesh.normals()[tri])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderParams {
    pub stiffness: f64,
    /// Distance of the ray apex above the contact point, metres.
    pub apex_height: f64,
    /// Angle between each reference ray and the inward normal, radians.
    pub cone_angle: f64,
}

impl Default for RenderParams {
    fn default() -> Self {
        Self {
            stiffness: 72.0,
            apex_height: 0.10,
            cone_angle: 15f64.to_radians(),
        }
    }
}

/// Plane through three ray hits, normal facing the apex: `normal·x = offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferencePlane {
    pub points: [Position; 3],
    pub normal: Vector3<f64>,
    pub offset: f64,
    pub apex: Position,
}

impl ReferencePlane {
    /// Positive on the apex side.
    pub fn signed_distance(&self, p: &Position) -> f64 {
        self.normal.dot(p.coords()) - self.offset
    }
}

/// Tangent basis `(u, v)` with `u × v = n`.
fn tangent_basis(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let u = (helper - n * helper.dot(n)).normalize();
    (u, n.cross(&u))
}

/// Directions of the three reference rays: `cone_angle` off `-n`, spread at
/// 0°, 120° and 240° about `n`.
pub fn reference_ray_directions(n: &Vector3<f64>, cone_angle: f64) -> [Vector3<f64>; 3] {
    let (u, v) = tangent_basis(n);
    let (s, c) = cone_angle.sin_cos();
    std::array::from_fn(|k| {
        let az = k as f64 * 2.0 * std::f64::consts::PI / 3.0;
        (-n * c + (u * az.cos() + v * az.sin()) * s).normalize()
    })
}

pub fn reference_plane(
    mesh: &SurfaceMesh,
    contact: &Position,
    apex_height: f64,
    cone_angle: f64,
) -> Result<ReferencePlane, RenderError> {
    let n = surface_normal_at(mesh, contact)?;
    let apex = Position::from_vector(contact.coords() + n * apex_height).map_err(|_| RenderError::NotOnSurface)?;
    let mut hits = Vec::with_capacity(3);
    for dir in reference_ray_directions(&n, cone_angle) {
        if let Some(hit) = ray_cast(mesh, &apex, &dir)? {
            hits.push(hit.point);
        }
    }
    if hits.len() < 3 {
        return Err(RenderError::PatchIncomplete(hits.len()));
    }
    let points = [hits[0], hits[1], hits[2]];
    let (p0, p1, p2) = (points[0].coords(), points[1].coords(), points[2].coords());
    let cross = (p1 - p0).cross(&(p2 - p0));
    let scale = (p1 - p0).norm() * (p2 - p0).norm();
    if cross.norm() <= 1e-12 * scale || scale == 0.0 {
        return Err(RenderError::DegeneratePatch);
    }
    let mut normal = cross.normalize();
    if normal.dot(&(apex.coords() - p0)) < 0.0 {
        normal = -normal;
    }
    let offset = normal.dot(&((p0 + p1 + p2) / 3.0));
    Ok(ReferencePlane {
        points,
        normal,
        offset,
        apex,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactForce {
    pub vector: ForceVector,
    /// Depth of the finger behind the reference plane; positive inside.
    pub penetration: f64,
    pub contact: bool,
}

impl ContactForce {
    pub fn none(penetration: f64) -> Self {
        Self {
            vector: ForceVector::zeros(),
            penetration,
            contact: false,
        }
    }
}

/// Spring force against the reference plane built at the finger's nearest
/// surface point. Stateless: the plane is rebuilt on every call.
pub fn render_force(mesh: &SurfaceMesh, finger: &Position, params: &RenderParams) -> Result<ContactForce, RenderError> {
    if !(params.stiffness.is_finite() && params.stiffness > 0.0) {
        return Err(RenderError::BadStiffness(params.stiffness));
    }
    let (projection, _, _) = mesh.closest_point(finger.coords());
    let projection = Position::from_vector(projection).map_err(|_| RenderError::NotOnSurface)?;
    let plane = reference_plane(mesh, &projection, params.apex_height, params.cone_angle)?;
    let depth = -plane.signed_distance(finger);
    if depth > 0.0 {
        Ok(ContactForce {
            vector: plane.normal * (params.stiffness * depth),
            penetration: depth,
            contact: true,
        })
    } else {
        Ok(ContactForce::none(depth))
    }
}
