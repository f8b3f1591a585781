use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Indexed triangle mesh in its model frame (meters).
///
/// Primitive constructors build objects standing on the plane `y = 0` with
/// their height along `-y` (camera frames here point y down).
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vector3<f64>>,
    triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vector3<f64>>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("mesh has no triangles".into()));
        }
        let n = vertices.len();
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&i| i as usize >= n)) {
            return Err(Error::InvalidMesh(format!(
                "triangle {:?} references a vertex outside 0..{}",
                t, n
            )));
        }
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh("non-finite vertex".into()));
        }
        Ok(TriangleMesh { vertices, triangles })
    }

    #[inline]
    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    #[inline]
    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn triangle(&self, i: usize) -> [Vector3<f64>; 3] {
        let [a, b, c] = self.triangles[i];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Concatenates meshes into one.
    pub fn merge(parts: &[TriangleMesh]) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for part in parts {
            let base = vertices.len() as u32;
            vertices.extend_from_slice(&part.vertices);
            triangles.extend(part.triangles.iter().map(|t| [t[0] + base, t[1] + base, t[2] + base]));
        }
        TriangleMesh::new(vertices, triangles)
    }

    /// Axis-aligned box spanning `min..max`, outward-facing triangles.
    pub fn cuboid(min: Vector3<f64>, max: Vector3<f64>) -> Self {
        let v = |x: bool, y: bool, z: bool| {
            Vector3::new(
                if x { max.x } else { min.x },
                if y { max.y } else { min.y },
                if z { max.z } else { min.z },
            )
        };
        let vertices = vec![
            v(false, false, false),
            v(true, false, false),
            v(true, true, false),
            v(false, true, false),
            v(false, false, true),
            v(true, false, true),
            v(true, true, true),
            v(false, true, true),
        ];
        let triangles = vec![
            [0, 2, 1],
            [0, 3, 2],
            [4, 5, 6],
            [4, 6, 7],
            [0, 1, 5],
            [0, 5, 4],
            [3, 6, 2],
            [3, 7, 6],
            [0, 4, 7],
            [0, 7, 3],
            [1, 2, 6],
            [1, 6, 5],
        ];
        TriangleMesh { vertices, triangles }
    }

    /// Box of the given footprint `width` (x) by `depth` (z) and `height`
    /// (along -y), centered on the origin footprint.
    pub fn standing_box(width: f64, depth: f64, height: f64) -> Self {
        Self::cuboid(
            Vector3::new(-width / 2.0, -height, -depth / 2.0),
            Vector3::new(width / 2.0, 0.0, depth / 2.0),
        )
    }

    /// Closed cylinder with `segments` sides standing on `y = 0`.
    pub fn standing_cylinder(radius: f64, height: f64, segments: usize) -> Self {
        let segments = segments.max(3);
        let mut vertices = Vec::with_capacity(2 * segments + 2);
        for i in 0..segments {
            let a = 2.0 * std::f64::consts::PI * i as f64 / segments as f64;
            let (s, c) = a.sin_cos();
            vertices.push(Vector3::new(radius * c, 0.0, radius * s));
            vertices.push(Vector3::new(radius * c, -height, radius * s));
        }
        let bottom = vertices.len() as u32;
        vertices.push(Vector3::new(0.0, 0.0, 0.0));
        let top = vertices.len() as u32;
        vertices.push(Vector3::new(0.0, -height, 0.0));
        let mut triangles = Vec::new();
        let n = segments as u32;
        for i in 0..n {
            let j = (i + 1) % n;
            let (b0, t0, b1, t1) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
            triangles.push([b0, t0, b1]);
            triangles.push([b1, t0, t1]);
            triangles.push([bottom, b1, b0]);
            triangles.push([top, t0, t1]);
        }
        TriangleMesh { vertices, triangles }
    }

    /// Two boxes forming an L in the footprint: a `width x depth` block plus
    /// an arm of `arm` length along +x on the back half.
    pub fn standing_l_shape(width: f64, depth: f64, height: f64, arm: f64) -> Self {
        let a = Self::cuboid(
            Vector3::new(-width / 2.0, -height, -depth / 2.0),
            Vector3::new(width / 2.0, 0.0, depth / 2.0),
        );
        let b = Self::cuboid(
            Vector3::new(width / 2.0, -height, 0.0),
            Vector3::new(width / 2.0 + arm, 0.0, depth / 2.0),
        );
        Self::merge(&[a, b]).expect("valid parts")
    }

    /// Seat block plus a backrest along the +z edge. Has no rotational
    /// symmetry about the vertical axis.
    pub fn standing_chair(width: f64, depth: f64, seat: f64, back: f64) -> Self {
        let seat_block = Self::cuboid(
            Vector3::new(-width / 2.0, -seat, -depth / 2.0),
            Vector3::new(width / 2.0, 0.0, depth / 2.0),
        );
        let thickness = (depth * 0.2).max(0.04);
        let back_block = Self::cuboid(
            Vector3::new(-width / 2.0, -seat - back, depth / 2.0 - thickness),
            Vector3::new(width / 2.0, -seat, depth / 2.0),
        );
        Self::merge(&[seat_block, back_block]).expect("valid parts")
    }

    pub fn bounds(&self) -> (Vector3<f64>, Vector3<f64>) {
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }
}
