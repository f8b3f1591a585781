use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sentinel for missing depth samples.
pub const MISSING: f64 = f64::NAN;

#[inline]
pub fn is_valid_depth(d: f64) -> bool {
    d.is_finite() && d > 0.0
}

/// Per-pixel metric depth in meters, row-major. Missing samples hold a
/// non-finite value; every valid sample is strictly positive.
#[derive(Clone, Debug)]
pub struct DepthImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl DepthImage {
    pub fn missing(width: usize, height: usize) -> Self {
        DepthImage {
            width,
            height,
            data: vec![MISSING; width * height],
        }
    }

    pub fn filled(width: usize, height: usize, depth: f64) -> Self {
        let mut img = Self::missing(width, height);
        img.data.iter_mut().for_each(|d| *d = depth);
        img.normalize();
        img
    }

    /// Builds an image from raw samples. Non-positive and non-finite values
    /// become missing.
    pub fn from_vec(width: usize, height: usize, mut data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "depth buffer holds {} samples, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        for d in data.iter_mut() {
            if !is_valid_depth(*d) {
                *d = MISSING;
            }
        }
        Ok(DepthImage { width, height, data })
    }

    fn normalize(&mut self) {
        for d in self.data.iter_mut() {
            if !is_valid_depth(*d) {
                *d = MISSING;
            }
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Option<f64> {
        self.at(v * self.width + u)
    }

    /// Depth at a linear pixel index, `None` when missing.
    #[inline]
    pub fn at(&self, idx: usize) -> Option<f64> {
        let d = self.data[idx];
        is_valid_depth(d).then_some(d)
    }

    /// Raw samples, missing values included.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn set(&mut self, u: usize, v: usize, depth: Option<f64>) {
        let idx = v * self.width + u;
        self.set_at(idx, depth);
    }

    #[inline]
    pub fn set_at(&mut self, idx: usize, depth: Option<f64>) {
        self.data[idx] = match depth {
            Some(d) if is_valid_depth(d) => d,
            _ => MISSING,
        };
    }

    pub fn valid_count(&self) -> usize {
        self.data.iter().filter(|d| is_valid_depth(**d)).count()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DepthImage {
        let mut out = self.clone();
        for d in out.data.iter_mut() {
            if is_valid_depth(*d) {
                *d = f(*d);
            }
        }
        out.normalize();
        out
    }

    pub(crate) fn check_same_size(&self, width: usize, height: usize) -> Result<()> {
        if self.width != width || self.height != height {
            return Err(Error::size((width, height), (self.width, self.height)));
        }
        Ok(())
    }

    /// Bitwise equality that treats every missing sample as equal.
    pub fn bit_eq(&self, other: &DepthImage) -> bool {
        self.width == other.width
            && self.height == other.height
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| match (is_valid_depth(*a), is_valid_depth(*b)) {
                    (true, true) => a.to_bits() == b.to_bits(),
                    (false, false) => true,
                    _ => false,
                })
    }
}

impl PartialEq for DepthImage {
    fn eq(&self, other: &Self) -> bool {
        self.bit_eq(other)
    }
}

/// Per-pixel probability in `[0, 1]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ProbMap {
    pub fn filled(width: usize, height: usize, p: f64) -> Self {
        ProbMap {
            width,
            height,
            data: vec![p; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "probability map holds {} samples, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if let Some((i, p)) = data.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidInput(format!(
                "probability {p} at pixel {i} outside [0, 1]"
            )));
        }
        Ok(ProbMap { width, height, data })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn at(&self, idx: usize) -> f64 {
        self.data[idx]
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn check_same_size(&self, width: usize, height: usize) -> Result<()> {
        if self.width != width || self.height != height {
            return Err(Error::size((width, height), (self.width, self.height)));
        }
        Ok(())
    }
}

/// Per-pixel boolean mask, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "mask holds {} samples, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Mask { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut m = Mask::new(width, height);
        for v in 0..height {
            for u in 0..width {
                m.data[v * width + u] = f(u, v);
            }
        }
        m
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> bool {
        self.data[v * self.width + u]
    }

    #[inline]
    pub fn at(&self, idx: usize) -> bool {
        self.data[idx]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, value: bool) {
        self.data[v * self.width + u] = value;
    }

    #[inline]
    pub fn set_at(&mut self, idx: usize, value: bool) {
        self.data[idx] = value;
    }

    #[inline]
    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|b| **b).count()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.data.iter().enumerate().filter_map(|(i, b)| b.then_some(i))
    }

    pub fn intersection_count(&self, other: &Mask) -> usize {
        self.data.iter().zip(&other.data).filter(|(a, b)| **a && **b).count()
    }

    pub fn iou(&self, other: &Mask) -> f64 {
        let inter = self.intersection_count(other);
        let union = self.count() + other.count() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    pub(crate) fn check_same_size(&self, width: usize, height: usize) -> Result<()> {
        if self.width != width || self.height != height {
            return Err(Error::size((width, height), (self.width, self.height)));
        }
        Ok(())
    }
}

/// Run-length encoded form used by the text file formats.
#[derive(Serialize, Deserialize)]
struct MaskRle {
    width: usize,
    height: usize,
    /// Alternating run lengths starting with a run of `false`.
    runs: Vec<usize>,
}

impl Serialize for Mask {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut runs = Vec::new();
        let mut current = false;
        let mut len = 0usize;
        for &b in &self.data {
            if b == current {
                len += 1;
            } else {
                runs.push(len);
                current = b;
                len = 1;
            }
        }
        runs.push(len);
        MaskRle {
            width: self.width,
            height: self.height,
            runs,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mask {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rle = MaskRle::deserialize(d)?;
        let mut data = Vec::with_capacity(rle.width * rle.height);
        let mut value = false;
        for run in rle.runs {
            data.extend(std::iter::repeat_n(value, run));
            value = !value;
        }
        Mask::from_vec(rle.width, rle.height, data).map_err(serde::de::Error::custom)
    }
}

/// Per-pixel `(near, far)` depth interval of a rendered solid.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthRange {
    pub near: DepthImage,
    pub far: DepthImage,
}

impl DepthRange {
    #[inline]
    pub fn width(&self) -> usize {
        self.near.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.near.height()
    }

    #[inline]
    pub fn at(&self, idx: usize) -> Option<(f64, f64)> {
        Some((self.near.at(idx)?, self.far.at(idx)?))
    }
}

/// Output of a z-buffer render: the depth map and its coverage mask.
#[derive(Clone, Debug, PartialEq)]
pub struct RenderResult {
    pub depth: DepthImage,
    pub mask: Mask,
}

impl RenderResult {
    /// Builds a render whose mask is the valid-depth set of `depth`.
    pub fn from_depth(depth: DepthImage) -> Self {
        let mask = Mask::from_vec(
            depth.width(),
            depth.height(),
            depth.as_slice().iter().map(|d| is_valid_depth(*d)).collect(),
        )
        .expect("sizes agree");
        RenderResult { depth, mask }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.depth.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.depth.height()
    }
}
