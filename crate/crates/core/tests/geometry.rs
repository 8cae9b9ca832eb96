use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;

use scene_inpaint::synth::{self, CameraSpec, Primitive, Role, SceneSpec, Shape, ViewSpec};
use scene_inpaint::warpmask;
use scene_inpaint::{project_point, relative_transform, unproject_pixel, BinaryMask, CameraIntrinsics, Pose, View};

fn pose_from(axis: [f64; 3], angle: f64, t: [f64; 3]) -> Pose {
    let axis = Vector3::from(axis);
    let r = if axis.norm() < 1e-6 { Rotation3::identity() } else { Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle) };
    Pose::new(*r.matrix(), Vector3::from(t)).unwrap()
}

fn arb_vec() -> impl Strategy<Value = [f64; 3]> {
    [-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64]
}

proptest! {
    #[test]
    fn projection_inverts_unprojection(u in 0.0..319.9f64, v in 0.0..239.9f64, z in 0.05..100.0f64,
                                       fx in 50.0..800.0f64, fy in 50.0..800.0f64) {
        let k = CameraIntrinsics::new(fx, fy, 160.0, 120.0, 320, 240).unwrap();
        let p = unproject_pixel(u, v, z, &k).unwrap();
        let q = project_point(&p, &k).expect("lands back in the image");
        prop_assert!((q.u - u).abs() < 1e-6 && (q.v - v).abs() < 1e-6 && (q.depth - z).abs() < 1e-6);
    }

    #[test]
    fn relative_transforms_compose_to_identity(a1 in arb_vec(), ang1 in -3.1..3.1f64, t1 in arb_vec(),
                                               a2 in arb_vec(), ang2 in -3.1..3.1f64, t2 in arb_vec(), p in arb_vec()) {
        let (pn, pi) = (pose_from(a1, ang1, t1), pose_from(a2, ang2, t2));
        let p = Vector3::from(p);
        let there = relative_transform(&pn, &pi).apply(&p);
        let back = relative_transform(&pi, &pn).apply(&there);
        prop_assert!((back - p).norm() < 1e-6);
        // Going through world coordinates gives the same camera-i point.
        let via_world = pi.apply(&pn.inverse().apply(&p));
        prop_assert!((there - via_world).norm() < 1e-9);
    }

    #[test]
    fn ray_box_matches_dense_sampling(o in [-4.0..4.0f64, -4.0..4.0f64, 2.0..4.0f64], target in [-0.4..0.4f64, -0.4..0.4f64, 0.1..0.9f64]) {
        let (min, max) = ([-0.5, -0.5, 0.0], [0.5, 0.5, 1.0]);
        let shape = Shape::Box { min, max };
        let o = Vector3::from(o);
        let d = (Vector3::from(target) - o).normalize();
        let inside = |s: f64| {
            let p = o + d * s;
            (0..3).all(|a| p[a] >= min[a] && p[a] <= max[a])
        };
        // March to the first inside sample, then bisect the crossing.
        let step = 1e-3;
        let mut s = 0.0;
        while !inside(s) {
            s += step;
            prop_assert!(s < 20.0, "ray aimed into the box must hit it");
        }
        let (mut lo, mut hi) = (s - step, s);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if inside(mid) { hi = mid } else { lo = mid }
        }
        let hit = synth::intersect(&shape, &o, &d, 0.0).unwrap();
        prop_assert!((hit - hi).abs() <= 1e-6, "analytic {hit} vs sampled {hi}");
    }
}

fn top_down_scene(size: usize) -> (SceneSpec, View) {
    let k = CameraIntrinsics::from_fov(size, size, 60.0).unwrap();
    let spec = ViewSpec { id: "top".into(), eye: [0.0, 0.0, 4.0], target: [0.0, 0.0, 0.0], up: [0.0, 1.0, 0.0], intrinsics: k };
    let mut scene = SceneSpec::default_ring();
    scene.cameras = CameraSpec::Explicit { views: vec![spec] };
    let view = scene.views().unwrap().remove(0);
    (scene, view)
}

#[test]
fn top_down_box_footprint_is_projected_rectangle() {
    let (scene, view) = top_down_scene(64);
    let mask = synth::object_mask(&view, &scene);
    // The top face at z = 1 is 3 units from the camera and covers the footprint.
    let corners = [[-0.5, -0.5, 1.0], [0.5, 0.5, 1.0]].map(|c| project_point(&view.pose.apply(&Vector3::from(c)), &view.intrinsics).unwrap());
    let (u0, u1) = (corners[0].u.min(corners[1].u), corners[0].u.max(corners[1].u));
    let (v0, v1) = (corners[0].v.min(corners[1].v), corners[0].v.max(corners[1].v));
    let expected = BinaryMask::from_fn(64, 64, |x, y| {
        let (x, y) = (x as f64, y as f64);
        x >= u0 && x <= u1 && y >= v0 && y <= v1
    });
    assert!(!expected.is_empty());
    assert_eq!(mask, expected);
}

#[test]
fn removal_region_matches_visible_object_footprint() {
    let scene = SceneSpec::default_ring();
    for view in scene.views().unwrap().iter().take(3) {
        let full = synth::render_depth(view, &scene, true);
        let inc = synth::render_depth(view, &scene, false);
        let removal = warpmask::removal_region(&full, &inc, warpmask::default_eps_d(&full).unwrap()).unwrap();
        let footprint = synth::object_mask(view, &scene);
        assert!(removal.is_subset_of(&footprint));
        // Only box pixels within eps_d of the ground behind them (the contact line) may be missing.
        let missing = footprint.minus(&removal).unwrap();
        for (x, y) in missing.pixels() {
            assert!((inc.at(x, y) - full.at(x, y)).abs() as f64 <= warpmask::default_eps_d(&full).unwrap());
        }
        assert!((missing.count() as f64) < 0.05 * footprint.count() as f64);
    }
}

#[test]
fn side_view_sees_the_whole_footprint() {
    // Floating box in front of a backdrop wall, no ground.
    let k = CameraIntrinsics::from_fov(48, 48, 60.0).unwrap();
    let views = vec![
        ViewSpec { id: "front".into(), eye: [0.0, -4.0, 0.5], target: [0.0, 0.0, 0.5], up: [0.0, 0.0, 1.0], intrinsics: k },
        ViewSpec { id: "oblique".into(), eye: [3.0, -3.0, 0.5], target: [0.0, 0.0, 0.5], up: [0.0, 0.0, 1.0], intrinsics: k },
    ];
    let scene = SceneSpec {
        ground: None,
        primitives: vec![
            Primitive { shape: Shape::Box { min: [-0.2, -0.2, 0.3], max: [0.2, 0.2, 0.7] }, role: Role::Object, color: [200, 0, 0] },
            Primitive { shape: Shape::Box { min: [-5.0, 3.0, -5.0], max: [5.0, 3.5, 5.0] }, role: Role::Background, color: [0, 0, 200] },
        ],
        cameras: CameraSpec::Explicit { views },
        sky: [0, 0, 0],
    };
    let vs = scene.validate().unwrap();
    // The oblique camera sees the backdrop behind the front view's box footprint.
    assert!(!synth::object_mask(&vs[0], &scene).is_empty());
    assert!(synth::gt_unseen(&vs[0], &vs, &scene).is_empty());
    // Alone, the front view cannot see anything behind the box.
    assert_eq!(synth::gt_unseen(&vs[0], &vs[..1], &scene), synth::object_mask(&vs[0], &scene));
}

#[test]
fn ring_unseen_region_sits_under_the_box() {
    let scene = SceneSpec::default_ring();
    let views = scene.views().unwrap();
    for view in views.iter().take(2) {
        let u = synth::gt_unseen(view, &views, &scene);
        assert!(!u.is_empty());
        for (x, y) in u.pixels() {
            let (o, d) = synth::pixel_ray(view, x as f64, y as f64);
            let s = (0.0 - o.z) / d.z;
            let p = o + d * s;
            assert!(p.x.abs() <= 0.5 + 1e-9 && p.y.abs() <= 0.5 + 1e-9, "unseen ground point {p:?} outside the box base");
            // Brute-force visibility: every other camera's sight line crosses the box.
            for w in views.iter().filter(|w| w.id != view.id) {
                let to = w.pose.center() - p;
                let hit = synth::intersect(&scene.primitives[0].shape, &(p + to.normalize() * 1e-6), &to.normalize(), 0.0);
                let in_frame = project_point(&w.pose.apply(&p), &w.intrinsics).is_some();
                assert!(in_frame && hit.is_some_and(|s| s < to.norm()));
            }
        }
    }
}
