//! Software z-buffer rasterization of triangle meshes.
//!
//! Coverage is decided at pixel centers with a top-left fill rule, so two
//! triangles sharing an edge never both claim a pixel on it. Depth at a
//! covered pixel is the exact intersection of the pixel ray with the
//! triangle's supporting plane, not an interpolated value, which keeps
//! rendered depth consistent with ray casting to rounding error.

use nalgebra::{Vector2, Vector3};

use super::camera::CameraIntrinsics;
use super::image::{DepthImage, DepthRange, RenderResult};
use super::mesh::TriangleMesh;
use super::pose::PoseTransform;

/// Geometry closer than this to the camera plane is clipped away.
pub const NEAR_CLIP: f64 = 1e-3;

pub fn render_depth(mesh: &TriangleMesh, pose: &PoseTransform, k: &CameraIntrinsics) -> RenderResult {
    let mut zbuf = vec![f64::INFINITY; k.num_pixels()];
    rasterize(mesh, pose, k, |idx, z| {
        if z < zbuf[idx] {
            zbuf[idx] = z;
        }
    });
    let depth = DepthImage::from_vec(k.width, k.height, zbuf).expect("buffer sized from intrinsics");
    RenderResult::from_depth(depth)
}

pub fn render_depth_range(mesh: &TriangleMesh, pose: &PoseTransform, k: &CameraIntrinsics) -> DepthRange {
    let n = k.num_pixels();
    let mut near = vec![f64::INFINITY; n];
    let mut far = vec![f64::NEG_INFINITY; n];
    rasterize(mesh, pose, k, |idx, z| {
        if z < near[idx] {
            near[idx] = z;
        }
        if z > far[idx] {
            far[idx] = z;
        }
    });
    DepthRange {
        near: DepthImage::from_vec(k.width, k.height, near).expect("sized"),
        far: DepthImage::from_vec(k.width, k.height, far).expect("sized"),
    }
}

/// Calls `emit(pixel_index, depth)` for every pixel center covered by every
/// triangle of the posed mesh.
pub(crate) fn rasterize(
    mesh: &TriangleMesh,
    pose: &PoseTransform,
    k: &CameraIntrinsics,
    mut emit: impl FnMut(usize, f64),
) {
    let verts = pose.apply_all(mesh.vertices());
    let mut poly: Vec<Vector3<f64>> = Vec::with_capacity(5);
    for tri in mesh.triangles() {
        let [a, b, c] = [verts[tri[0] as usize], verts[tri[1] as usize], verts[tri[2] as usize]];
        let normal = (b - a).cross(&(c - a));
        if normal.norm_squared() == 0.0 {
            continue;
        }
        let plane_d = normal.dot(&a);

        clip_near(&[a, b, c], &mut poly);
        if poly.len() < 3 {
            continue;
        }
        let projected: Vec<Vector2<f64>> = poly
            .iter()
            .map(|p| Vector2::new(k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy))
            .collect();
        for i in 1..projected.len() - 1 {
            raster_triangle([projected[0], projected[i], projected[i + 1]], k, |u, v| {
                let ray = k.ray(u as f64, v as f64);
                let denom = normal.dot(&ray);
                if denom == 0.0 {
                    return;
                }
                let z = plane_d / denom;
                if z > NEAR_CLIP && z.is_finite() {
                    emit(v * k.width + u, z);
                }
            });
        }
    }
}

/// Sutherland-Hodgman clip of a triangle against `z >= NEAR_CLIP`.
fn clip_near(tri: &[Vector3<f64>; 3], out: &mut Vec<Vector3<f64>>) {
    out.clear();
    for i in 0..3 {
        let cur = tri[i];
        let next = tri[(i + 1) % 3];
        let cur_in = cur.z >= NEAR_CLIP;
        let next_in = next.z >= NEAR_CLIP;
        if cur_in {
            out.push(cur);
        }
        if cur_in != next_in {
            let t = (NEAR_CLIP - cur.z) / (next.z - cur.z);
            let mut p = cur + (next - cur) * t;
            p.z = NEAR_CLIP;
            out.push(p);
        }
    }
}

#[inline]
fn edge(a: Vector2<f64>, b: Vector2<f64>, p: Vector2<f64>) -> f64 {
    (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
}

/// With positive orientation under `edge` in y-down pixel coordinates, an
/// edge is "top" when horizontal and pointing right, "left" when pointing up.
#[inline]
fn is_top_left(a: Vector2<f64>, b: Vector2<f64>) -> bool {
    let dy = b.y - a.y;
    let dx = b.x - a.x;
    (dy == 0.0 && dx > 0.0) || dy < 0.0
}

fn raster_triangle(mut t: [Vector2<f64>; 3], k: &CameraIntrinsics, mut cover: impl FnMut(usize, usize)) {
    let area = edge(t[0], t[1], t[2]);
    if area == 0.0 || !area.is_finite() {
        return;
    }
    if area < 0.0 {
        t.swap(1, 2);
    }
    let min_x = t.iter().map(|p| p.x).fold(f64::INFINITY, f64::min).ceil().max(0.0);
    let max_x = t
        .iter()
        .map(|p| p.x)
        .fold(f64::NEG_INFINITY, f64::max)
        .floor()
        .min(k.width as f64 - 1.0);
    let min_y = t.iter().map(|p| p.y).fold(f64::INFINITY, f64::min).ceil().max(0.0);
    let max_y = t
        .iter()
        .map(|p| p.y)
        .fold(f64::NEG_INFINITY, f64::max)
        .floor()
        .min(k.height as f64 - 1.0);
    if min_x > max_x || min_y > max_y {
        return;
    }
    let edges = [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])];
    let top_left = edges.map(|(a, b)| is_top_left(a, b));
    for v in min_y as usize..=max_y as usize {
        for u in min_x as usize..=max_x as usize {
            let p = Vector2::new(u as f64, v as f64);
            let inside = edges.iter().zip(&top_left).all(|(&(a, b), &tl)| {
                let w = edge(a, b, p);
                w > 0.0 || (w == 0.0 && tl)
            });
            if inside {
                cover(u, v);
            }
        }
    }
}
