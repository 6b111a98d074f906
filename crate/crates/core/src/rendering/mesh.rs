use std::collections::HashMap;

use nalgebra::Vector3;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("mesh has no triangles")]
    Empty,
    #[error("non-finite vertex {0}")]
    NonFiniteVertex(usize),
    #[error("triangle {triangle} references vertex {index} but only {count} exist")]
    IndexOutOfRange {
        triangle: usize,
        index: usize,
        count: usize,
    },
    #[error("triangle {0} has zero area")]
    Degenerate(usize),
    #[error("closed mesh has inconsistent winding at edge ({0}, {1})")]
    InconsistentWinding(usize, usize),
    #[error("normal count {got} does not match triangle count {expected}")]
    NormalCount { expected: usize, got: usize },
    #[error("normal of triangle {0} is not a unit vector")]
    BadNormal(usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Io(String),
}

/// Axis-aligned bounds, used as the single broad-phase test before the
/// per-triangle loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    fn of(points: &[Vector3<f64>]) -> Self {
        let mut min = Vector3::repeat(f64::INFINITY);
        let mut max = Vector3::repeat(f64::NEG_INFINITY);
        for p in points {
            min = min.inf(p);
            max = max.sup(p);
        }
        Self { min, max }
    }

    /// Slab test; true if the ray can touch the box at some `t ≥ 0`.
    pub fn hit_by(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> bool {
        let pad = 1e-12 * (1.0 + (self.max - self.min).amax());
        let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
        for k in 0..3 {
            let lo = self.min[k] - pad;
            let hi = self.max[k] + pad;
            if dir[k] == 0.0 {
                if origin[k] < lo || origin[k] > hi {
                    return false;
                }
                continue;
            }
            let inv = 1.0 / dir[k];
            let (a, b) = ((lo - origin[k]) * inv, (hi - origin[k]) * inv);
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            t0 = t0.max(a);
            t1 = t1.min(b);
            if t0 > t1 {
                return false;
            }
        }
        true
    }

    /// Distance from `p` to the box (zero inside).
    pub fn distance(&self, p: &Vector3<f64>) -> f64 {
        let d = (self.min - p).sup(&(p - self.max)).sup(&Vector3::zeros());
        d.norm()
    }
}

/// Triangle soup with per-triangle outward normals. Immutable once built.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    vertices: Vec<Vector3<f64>>,
    triangles: Vec<[usize; 3]>,
    normals: Vec<Vector3<f64>>,
    bounds: Aabb,
}

impl SurfaceMesh {
    /// Build a mesh, computing normals from vertex order (right-hand rule).
    pub fn new(vertices: Vec<Vector3<f64>>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let normals = validate(&vertices, &triangles)?;
        check_winding(&triangles)?;
        let bounds = Aabb::of(&vertices);
        Ok(Self {
            vertices,
            triangles,
            normals,
            bounds,
        })
    }

    /// Build a mesh with caller-supplied outward normals.
    pub fn with_normals(
        vertices: Vec<Vector3<f64>>,
        triangles: Vec<[usize; 3]>,
        normals: Vec<Vector3<f64>>,
    ) -> Result<Self, MeshError> {
        validate(&vertices, &triangles)?;
        if normals.len() != triangles.len() {
            return Err(MeshError::NormalCount {
                expected: triangles.len(),
                got: normals.len(),
            });
        }
        if let Some(i) = normals
            .iter()
            .position(|n| !n.iter().all(|c| c.is_finite()) || (n.norm() - 1.0).abs() > 1e-9)
        {
            return Err(MeshError::BadNormal(i));
        }
        check_winding(&triangles)?;
        let bounds = Aabb::of(&vertices);
        Ok(Self {
            vertices,
            triangles,
            normals: normals.into_iter().map(|n| n.normalize()).collect(),
            bounds,
        })
    }

    /// Square `[-half, half]²` in the plane `z = height`, facing `+z`.
    pub fn plane(half: f64, height: f64) -> Result<Self, MeshError> {
        Self::rectangle((-half, half), (-half, half), height)
    }

    /// Axis-aligned rectangle in the plane `z = height`, facing `+z`.
    pub fn rectangle(x: (f64, f64), y: (f64, f64), height: f64) -> Result<Self, MeshError> {
        let v = vec![
            Vector3::new(x.0, y.0, height),
            Vector3::new(x.1, y.0, height),
            Vector3::new(x.1, y.1, height),
            Vector3::new(x.0, y.1, height),
        ];
        Self::new(v, vec![[0, 1, 2], [0, 2, 3]])
    }

    /// Subdivided icosahedron projected onto a sphere about the origin.
    /// Level `n` has `20·4ⁿ` triangles.
    pub fn icosphere(radius: f64, level: u32) -> Result<Self, MeshError> {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let mut vertices: Vec<Vector3<f64>> = [
            (-1.0, phi, 0.0),
            (1.0, phi, 0.0),
            (-1.0, -phi, 0.0),
            (1.0, -phi, 0.0),
            (0.0, -1.0, phi),
            (0.0, 1.0, phi),
            (0.0, -1.0, -phi),
            (0.0, 1.0, -phi),
            (phi, 0.0, -1.0),
            (phi, 0.0, 1.0),
            (-phi, 0.0, -1.0),
            (-phi, 0.0, 1.0),
        ]
        .iter()
        .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
        .collect();
        let mut faces: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..level {
            let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
            let mut mid = |a: usize, b: usize, verts: &mut Vec<Vector3<f64>>| -> usize {
                let key = (a.min(b), a.max(b));
                *midpoints.entry(key).or_insert_with(|| {
                    verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                    verts.len() - 1
                })
            };
            let mut next = Vec::with_capacity(faces.len() * 4);
            for [a, b, c] in faces {
                let ab = mid(a, b, &mut vertices);
                let bc = mid(b, c, &mut vertices);
                let ca = mid(c, a, &mut vertices);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            faces = next;
        }
        let vertices = vertices.into_iter().map(|v| v * radius).collect();
        Self::new(vertices, faces)
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn normals(&self) -> &[Vector3<f64>] {
        &self.normals
    }

    pub fn bounds(&self) -> &Aabb {
        &self.bounds
    }

    pub fn corners(&self, triangle: usize) -> [Vector3<f64>; 3] {
        let [a, b, c] = self.triangles[triangle];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn centroid(&self, triangle: usize) -> Vector3<f64> {
        let [a, b, c] = self.corners(triangle);
        (a + b + c) / 3.0
    }

    /// Nearest surface point to `p` as `(point, triangle, distance)`.
    pub fn closest_point(&self, p: &Vector3<f64>) -> (Vector3<f64>, usize, f64) {
        let mut best = (Vector3::zeros(), 0, f64::INFINITY);
        for i in 0..self.triangles.len() {
            let [a, b, c] = self.corners(i);
            let q = closest_point_on_triangle(p, &a, &b, &c);
            let d = (q - p).norm();
            if d < best.2 {
                best = (q, i, d);
            }
        }
        best
    }
}

fn validate(vertices: &[Vector3<f64>], triangles: &[[usize; 3]]) -> Result<Vec<Vector3<f64>>, MeshError> {
    if triangles.is_empty() {
        return Err(MeshError::Empty);
    }
    if let Some(i) = vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
        return Err(MeshError::NonFiniteVertex(i));
    }
    let mut normals = Vec::with_capacity(triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        for &index in tri {
            if index >= vertices.len() {
                return Err(MeshError::IndexOutOfRange {
                    triangle: t,
                    index,
                    count: vertices.len(),
                });
            }
        }
        let [a, b, c] = tri.map(|i| vertices[i]);
        let cross = (b - a).cross(&(c - a));
        let scale = (b - a)
            .norm_squared()
            .max((c - a).norm_squared())
            .max((c - b).norm_squared());
        if cross.norm() <= 1e-12 * scale || scale == 0.0 {
            return Err(MeshError::Degenerate(t));
        }
        normals.push(cross.normalize());
    }
    Ok(normals)
}

/// On a closed mesh every edge is used by exactly two triangles and must be
/// traversed in opposite directions. Open meshes are not checked.
fn check_winding(triangles: &[[usize; 3]]) -> Result<(), MeshError> {
    let mut uses: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
    for tri in triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            uses.entry((a.min(b), a.max(b))).or_default().push((a, b));
        }
    }
    if !uses.values().all(|u| u.len() == 2) {
        return Ok(());
    }
    let mut keys: Vec<_> = uses.keys().copied().collect();
    keys.sort_unstable();
    for key in keys {
        let u = &uses[&key];
        if u[0] == u[1] {
            return Err(MeshError::InconsistentWinding(key.0, key.1));
        }
    }
    Ok(())
}

/// Closest point on triangle `abc` to `p` (Voronoi-region walk).
pub fn closest_point_on_triangle(
    p: &Vector3<f64>,
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    c: &Vector3<f64>,
) -> Vector3<f64> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}
