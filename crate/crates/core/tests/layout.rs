use proptest::prelude::*;
use scenecomp::geometry::{backproject, CameraIntrinsics, DepthImage};
use scenecomp::layout::{
    nms_planes, plane_features, render_layouts, Category, LayoutPlane, PixelLabelProbs, PlaneProbParams, PositionPrior,
    Rect2,
};

fn category() -> impl Strategy<Value = Category> {
    prop_oneof![
        Just(Category::Floor),
        Just(Category::Ceiling),
        Just(Category::LeftWall),
        Just(Category::RightWall),
        Just(Category::FrontWall),
    ]
}

fn planes() -> impl Strategy<Value = Vec<LayoutPlane>> {
    proptest::collection::vec((category(), 0.5..4.0f64, 0.0..10.0f64), 0..25).prop_map(|v| {
        v.into_iter()
            .map(|(c, off, score)| {
                let sign = if matches!(c, Category::Ceiling | Category::LeftWall) {
                    -1.0
                } else {
                    1.0
                };
                LayoutPlane {
                    score,
                    ..LayoutPlane::unbounded(c, sign * off)
                }
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn nms_keeps_a_maximal_separated_set(input in planes(), radius in 0.0..0.5f64) {
        let kept = nms_planes(input.clone(), radius);
        let close = |a: &LayoutPlane, b: &LayoutPlane| a.category == b.category && (a.offset - b.offset).abs() <= radius;
        for (i, a) in kept.iter().enumerate() {
            for b in &kept[i + 1..] {
                prop_assert!(!close(a, b));
            }
        }
        // every dropped plane is covered by a kept one at least as good
        for p in &input {
            if !kept.contains(p) {
                prop_assert!(kept.iter().any(|k| close(k, p) && k.score >= p.score));
            }
        }
        // the best plane of the input always survives
        if let Some(best) = input.iter().map(|p| p.score).reduce(f64::max) {
            prop_assert!(kept.iter().any(|k| k.score == best));
        }
    }

    #[test]
    fn rect_intersection_is_contained_in_both(
        a in (-2.0..2.0f64, -2.0..2.0f64, 0.01..2.0f64, 0.01..2.0f64),
        b in (-2.0..2.0f64, -2.0..2.0f64, 0.01..2.0f64, 0.01..2.0f64),
    ) {
        let r = |(x, y, w, h): (f64, f64, f64, f64)| Rect2::new([x, y], [x + w, y + h]);
        let (ra, rb) = (r(a), r(b));
        if let Some(i) = ra.intersect(&rb) {
            prop_assert!(ra.contains_rect(&i) && rb.contains_rect(&i));
            prop_assert!(i.area() <= ra.area().min(rb.area()) + 1e-12);
        }
    }
}

fn box_room() -> Vec<LayoutPlane> {
    vec![
        LayoutPlane::unbounded(Category::Floor, 1.4),
        LayoutPlane::unbounded(Category::Ceiling, -1.3),
        LayoutPlane::unbounded(Category::LeftWall, -2.0),
        LayoutPlane::unbounded(Category::RightWall, 2.2),
        LayoutPlane::unbounded(Category::FrontWall, 4.5),
    ]
}

#[test]
fn layout_render_is_the_nearest_plane_hit() {
    let k = CameraIntrinsics::from_fov(40, 30, 70.0).unwrap();
    let layouts = box_room();
    let r = render_layouts(&layouts, &k);
    for v in 0..k.height {
        for u in 0..k.width {
            let ray = k.ray(u as f64, v as f64);
            let nearest = layouts
                .iter()
                .filter_map(|l| l.ray_depth(&ray))
                .fold(f64::INFINITY, f64::min);
            let got = r.depth.get(u, v).unwrap();
            assert!((got - nearest).abs() < 1e-9, "({u}, {v}): {got} vs {nearest}");
        }
    }
}

#[test]
fn feature_ratios_and_counts() {
    let k = CameraIntrinsics::from_fov(40, 30, 70.0).unwrap();
    let layouts = box_room();
    let depth: DepthImage = render_layouts(&layouts, &k).depth;
    let cloud = backproject(&depth, &k).unwrap();
    let labels = PixelLabelProbs::uniform(k.width, k.height);
    let prior = PositionPrior::indoor_default();
    let params = PlaneProbParams::default();

    for plane in &layouts {
        let f = plane_features(plane, &cloud, &labels, &prior, &params).unwrap();
        // uniform labels split f1 evenly over the four label channels
        for i in 2..=5 {
            assert!((f.f(i) - f.f(1) / 4.0).abs() < 1e-9);
        }
        for i in 7..=11 {
            let expect = if f.f(6) == 0.0 { 0.0 } else { f.f(i - 6) / f.f(6) };
            assert!((f.f(i) - expect).abs() < 1e-9);
        }
        // nothing in a closed box lies behind one of its own walls
        assert_eq!(f.f(6), 0.0);
        assert_eq!(f.f(12), prior.lookup(plane));
    }

    // a plane in the middle of the room has the far walls behind it
    let inner = LayoutPlane::unbounded(Category::FrontWall, 2.0);
    let f = plane_features(&inner, &cloud, &labels, &prior, &params).unwrap();
    assert!(f.f(6) > 0.0);
    let behind = cloud
        .points
        .iter()
        .filter(|p| p.z - 2.0 >= params.behind_ratio * 2.0)
        .count();
    assert_eq!(f.f(6), behind as f64);
}
