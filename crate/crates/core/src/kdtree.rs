//! Static 3D KD-tree for nearest-neighbor queries.

use nalgebra::Vector3;

const LEAF_SIZE: usize = 8;

#[derive(Debug)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

/// Balanced KD-tree over a fixed point set. Queries return the lowest
/// original index among equidistant neighbors, so results do not depend on
/// tree shape.
#[derive(Debug)]
pub struct KdTree {
    points: Vec<Vector3<f64>>,
    order: Vec<usize>,
    root: Option<Node>,
}

impl KdTree {
    pub fn new(points: Vec<Vector3<f64>>) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        let root = (!points.is_empty()).then(|| build(&points, &mut order, 0, points.len()));
        KdTree { points, order, root }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &Vector3<f64> {
        &self.points[i]
    }

    /// `(index, squared distance)` of the nearest point.
    pub fn nearest(&self, q: &Vector3<f64>) -> Option<(usize, f64)> {
        let root = self.root.as_ref()?;
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(root, q, &mut best);
        Some(best)
    }

    /// Whether any point lies within `radius` (inclusive) of `q`.
    pub fn any_within(&self, q: &Vector3<f64>, radius: f64) -> bool {
        self.nearest(q).is_some_and(|(_, d2)| d2 <= radius * radius)
    }

    fn search(&self, node: &Node, q: &Vector3<f64>, best: &mut (usize, f64)) {
        match node {
            Node::Leaf { start, end } => {
                for &i in &self.order[*start..*end] {
                    let d2 = (self.points[i] - q).norm_squared();
                    if d2 < best.1 || (d2 == best.1 && i < best.0) {
                        *best = (i, d2);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[*axis] - value;
                let (first, second) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.search(first, q, best);
                if diff * diff <= best.1 {
                    self.search(second, q, best);
                }
            }
        }
    }
}

fn build(points: &[Vector3<f64>], order: &mut [usize], start: usize, end: usize) -> Node {
    if end - start <= LEAF_SIZE {
        return Node::Leaf { start, end };
    }
    let slice = &mut order[start..end];
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for &i in slice.iter() {
        lo = lo.inf(&points[i]);
        hi = hi.sup(&points[i]);
    }
    let axis = (hi - lo).imax();
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| points[a][axis].total_cmp(&points[b][axis]));
    let value = points[slice[mid]][axis];
    let split = start + mid;
    Node::Split {
        axis,
        value,
        left: Box::new(build(points, order, start, split)),
        right: Box::new(build(points, order, split, end)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn linear_nearest(points: &[Vector3<f64>], q: &Vector3<f64>) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, p) in points.iter().enumerate() {
            let d2 = (p - q).norm_squared();
            if d2 < best.1 {
                best = (i, d2);
            }
        }
        best
    }

    #[test]
    fn matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1, 5, 9, 100, 1000] {
            let pts: Vec<_> = (0..n).map(|_| Vector3::new(rng.gen(), rng.gen(), rng.gen())).collect();
            let tree = KdTree::new(pts.clone());
            for _ in 0..200 {
                let q = Vector3::new(rng.gen(), rng.gen(), rng.gen::<f64>()) * 1.2;
                assert_eq!(tree.nearest(&q), Some(linear_nearest(&pts, &q)));
            }
        }
    }

    #[test]
    fn duplicate_points_resolve_to_lowest_index() {
        let pts = vec![Vector3::new(1.0, 0.0, 0.0); 20];
        let tree = KdTree::new(pts);
        assert_eq!(tree.nearest(&Vector3::zeros()).unwrap().0, 0);
    }

    #[test]
    fn empty_tree() {
        let tree = KdTree::new(vec![]);
        assert!(tree.nearest(&Vector3::zeros()).is_none());
        assert!(!tree.any_within(&Vector3::zeros(), 10.0));
    }
}
