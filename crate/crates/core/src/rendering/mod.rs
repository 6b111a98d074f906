//! Contact rendering against triangle meshes.
//!
//! The force direction comes from a reference plane rather than the single
//! triangle under the finger: three rays leave an apex placed on the surface
//! normal above the contact, tilted off the inward normal, and their hits
//! span the plane. The spring force is proportional to the finger's depth
//! behind that plane.

mod contact;
pub mod io;
mod mesh;

pub use contact::{
    ray_cast, reference_plane, reference_ray_directions, render_force, surface_normal_at, ContactForce, RayHit,
    ReferencePlane, RenderError, RenderParams, ON_SURFACE_TOL, RAY_EPSILON,
};
pub use io::{load_mesh, parse_off, parse_stl};
pub use mesh::{closest_point_on_triangle, Aabb, MeshError, SurfaceMesh};
