use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, DepthImage, Mask, RenderResult};

/// Layout surface category. The category fixes the plane's axis and which
/// side of the camera it lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    Floor,
    Ceiling,
    LeftWall,
    RightWall,
    FrontWall,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Floor,
        Category::Ceiling,
        Category::LeftWall,
        Category::RightWall,
        Category::FrontWall,
    ];

    /// Camera-frame axis the plane is perpendicular to (0 = x, 1 = y, 2 = z).
    pub fn axis(self) -> usize {
        match self {
            Category::Floor | Category::Ceiling => 1,
            Category::LeftWall | Category::RightWall => 0,
            Category::FrontWall => 2,
        }
    }

    /// Category of the plane `X[axis] = offset` as seen from a camera inside
    /// the room. `None` for planes through the camera or behind it.
    pub fn from_axis_offset(axis: usize, offset: f64) -> Option<Category> {
        if offset == 0.0 || !offset.is_finite() {
            return None;
        }
        match (axis, offset > 0.0) {
            (0, false) => Some(Category::LeftWall),
            (0, true) => Some(Category::RightWall),
            (1, true) => Some(Category::Floor),
            (1, false) => Some(Category::Ceiling),
            (2, true) => Some(Category::FrontWall),
            _ => None,
        }
    }

    /// Index into the per-pixel label probabilities (floor, wall, ceiling,
    /// object).
    pub fn label_index(self) -> usize {
        match self {
            Category::Floor => 0,
            Category::Ceiling => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Floor => "floor",
            Category::Ceiling => "ceiling",
            Category::LeftWall => "left-wall",
            Category::RightWall => "right-wall",
            Category::FrontWall => "front-wall",
        }
    }
}

/// Camera-frame axes spanning a plane perpendicular to `axis`, ascending.
pub fn plane_axes(axis: usize) -> [usize; 2] {
    match axis {
        0 => [1, 2],
        1 => [0, 2],
        _ => [0, 1],
    }
}

/// Axis-aligned rectangle in a plane's 2D coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect2 {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect2 {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Self {
        Rect2 { min, max }
    }

    #[inline]
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }

    pub fn contains_rect(&self, other: &Rect2) -> bool {
        self.contains(other.min) && self.contains(other.max)
    }

    pub fn intersect(&self, other: &Rect2) -> Option<Rect2> {
        let r = Rect2 {
            min: [self.min[0].max(other.min[0]), self.min[1].max(other.min[1])],
            max: [self.max[0].min(other.max[0]), self.max[1].min(other.max[1])],
        };
        (r.min[0] <= r.max[0] && r.min[1] <= r.max[1]).then_some(r)
    }

    pub fn area(&self) -> f64 {
        (self.max[0] - self.min[0]).max(0.0) * (self.max[1] - self.min[1]).max(0.0)
    }

    /// Smallest rectangle containing all points, `None` for no points.
    pub fn bounding(points: impl IntoIterator<Item = [f64; 2]>) -> Option<Rect2> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut r = Rect2::new(first, first);
        for p in it {
            for c in 0..2 {
                r.min[c] = r.min[c].min(p[c]);
                r.max[c] = r.max[c].max(p[c]);
            }
        }
        Some(r)
    }
}

/// Axis-aligned layout surface `X[axis] = offset` in the camera frame, with a
/// rectangular extent and rectangular cut-outs in plane coordinates (see
/// [`plane_axes`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutPlane {
    pub category: Category,
    pub offset: f64,
    pub extent: Rect2,
    #[serde(default)]
    pub holes: Vec<Rect2>,
    #[serde(default)]
    pub score: f64,
}

impl LayoutPlane {
    /// Plane with an extent covering everything in view.
    pub fn unbounded(category: Category, offset: f64) -> Self {
        LayoutPlane {
            category,
            offset,
            extent: Rect2::new([-1e6, -1e6], [1e6, 1e6]),
            holes: Vec::new(),
            score: 0.0,
        }
    }

    #[inline]
    pub fn axis(&self) -> usize {
        self.category.axis()
    }

    /// Unit normal facing the camera.
    pub fn normal(&self) -> Vector3<f64> {
        let mut n = Vector3::zeros();
        n[self.axis()] = if self.offset > 0.0 { -1.0 } else { 1.0 };
        n
    }

    pub fn validate(&self) -> Result<()> {
        if Category::from_axis_offset(self.axis(), self.offset) != Some(self.category) {
            return Err(Error::InvalidInput(format!(
                "{} plane cannot lie at offset {}",
                self.category.name(),
                self.offset
            )));
        }
        if !(self.extent.min[0] <= self.extent.max[0] && self.extent.min[1] <= self.extent.max[1]) {
            return Err(Error::InvalidInput("layout extent is inverted".into()));
        }
        if self.holes.iter().any(|h| !self.extent.contains_rect(h)) {
            return Err(Error::InvalidInput("layout hole outside its extent".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn distance(&self, p: &Vector3<f64>) -> f64 {
        (p[self.axis()] - self.offset).abs()
    }

    #[inline]
    pub fn plane_coords(&self, p: &Vector3<f64>) -> [f64; 2] {
        let [a, b] = plane_axes(self.axis());
        [p[a], p[b]]
    }

    /// Where a camera ray hits the infinite plane: `(depth, plane coords)`.
    #[inline]
    pub fn ray_hit_unbounded(&self, dir: &Vector3<f64>) -> Option<(f64, [f64; 2])> {
        let denom = dir[self.axis()];
        if denom == 0.0 {
            return None;
        }
        let t = self.offset / denom;
        if !(t > 0.0 && t.is_finite()) {
            return None;
        }
        let x = dir * t;
        (x.z > 0.0).then(|| (x.z, self.plane_coords(&x)))
    }

    /// Depth along a camera ray to the bounded surface, honoring holes.
    pub fn ray_depth(&self, dir: &Vector3<f64>) -> Option<f64> {
        let (depth, c) = self.ray_hit_unbounded(dir)?;
        (self.extent.contains(c) && !self.holes.iter().any(|h| h.contains(c))).then_some(depth)
    }

    pub fn render(&self, k: &CameraIntrinsics) -> RenderResult {
        let mut depth = DepthImage::missing(k.width, k.height);
        for v in 0..k.height {
            for u in 0..k.width {
                depth.set(u, v, self.ray_depth(&k.ray(u as f64, v as f64)));
            }
        }
        RenderResult::from_depth(depth)
    }
}

/// Front-most layout surface per pixel.
#[derive(Clone, Debug)]
pub struct LayoutRender {
    pub depth: DepthImage,
    /// Index of the front-most layout, lowest index on exact ties.
    pub owner: Vec<Option<usize>>,
}

impl LayoutRender {
    pub fn category_at(&self, layouts: &[LayoutPlane], idx: usize) -> Option<Category> {
        self.owner[idx].map(|i| layouts[i].category)
    }

    pub fn mask(&self) -> Mask {
        let w = self.depth.width();
        Mask::from_vec(w, self.depth.height(), self.owner.iter().map(|o| o.is_some()).collect()).expect("sized")
    }
}

pub fn render_layouts(layouts: &[LayoutPlane], k: &CameraIntrinsics) -> LayoutRender {
    let mut depth = DepthImage::missing(k.width, k.height);
    let mut owner = vec![None; k.num_pixels()];
    for v in 0..k.height {
        for u in 0..k.width {
            let ray = k.ray(u as f64, v as f64);
            let mut best: Option<(f64, usize)> = None;
            for (i, l) in layouts.iter().enumerate() {
                if let Some(d) = l.ray_depth(&ray) {
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, i));
                    }
                }
            }
            let idx = v * k.width + u;
            depth.set_at(idx, best.map(|b| b.0));
            owner[idx] = best.map(|b| b.1);
        }
    }
    LayoutRender { depth, owner }
}
