//! Camera model, image containers, meshes and depth rendering.

mod camera;
mod cloud;
mod image;
mod mesh;
mod pose;
mod render;

pub use camera::CameraIntrinsics;
pub use cloud::{backproject, backproject_masked, PointCloud};
pub use image::{is_valid_depth, DepthImage, DepthRange, Mask, ProbMap, RenderResult, MISSING};
pub use mesh::TriangleMesh;
pub use pose::{wrap_angle, PoseTransform};
pub use render::{render_depth, render_depth_range, NEAR_CLIP};
