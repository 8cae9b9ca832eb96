//! Analytic scenes of a ground plane, axis-aligned boxes and spheres, rendered
//! by exact ray casting. World frame is z-up.

use std::path::Path;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{project_point, CameraIntrinsics, Pose, View};
use crate::error::{Error, Result};
use crate::grid::{BinaryMask, DepthMap, Grid, RgbImage};
use crate::io;

const RAY_OFFSET: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Background,
    Object,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    Box { min: [f64; 3], max: [f64; 3] },
    Sphere { center: [f64; 3], radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    #[serde(flatten)]
    pub shape: Shape,
    pub role: Role,
    #[serde(default = "default_color")]
    pub color: [u8; 3],
}

fn default_color() -> [u8; 3] {
    [200, 60, 40]
}

/// Infinite plane `z = height` with a two-tone checker texture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ground {
    pub height: f64,
    #[serde(default = "default_checker")]
    pub colors: [[u8; 3]; 2],
    #[serde(default = "default_tile")]
    pub tile: f64,
}

fn default_checker() -> [[u8; 3]; 2] {
    [[90, 140, 90], [150, 190, 130]]
}

fn default_tile() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CameraSpec {
    /// `count` cameras evenly spaced on a horizontal circle, all aimed at `target`.
    Ring {
        count: usize,
        radius: f64,
        elevation: f64,
        #[serde(default)]
        target: [f64; 3],
        width: usize,
        height: usize,
        hfov_deg: f64,
        #[serde(default)]
        start_deg: f64,
    },
    Explicit { views: Vec<ViewSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSpec {
    pub id: String,
    pub eye: [f64; 3],
    pub target: [f64; 3],
    #[serde(default = "default_up")]
    pub up: [f64; 3],
    pub intrinsics: CameraIntrinsics,
}

fn default_up() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    #[serde(default)]
    pub ground: Option<Ground>,
    #[serde(default)]
    pub primitives: Vec<Primitive>,
    pub cameras: CameraSpec,
    #[serde(default = "default_sky")]
    pub sky: [u8; 3],
}

fn default_sky() -> [u8; 3] {
    [170, 200, 235]
}

fn v3(a: [f64; 3]) -> Vector3<f64> {
    Vector3::new(a[0], a[1], a[2])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Surface {
    Ground,
    Primitive(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    /// Ray parameter; equals z-depth for camera rays built by [`pixel_ray`].
    pub s: f64,
    pub surface: Surface,
}

/// Ray through the center of pixel (x, y) whose direction has unit camera-frame z.
pub fn pixel_ray(view: &View, x: f64, y: f64) -> (Vector3<f64>, Vector3<f64>) {
    let k = &view.intrinsics;
    let d_cam = Vector3::new((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
    (view.pose.center(), view.pose.rotation().transpose() * d_cam)
}

/// Smallest ray parameter > `s_min` at which `o + s d` meets the shape.
pub fn intersect(shape: &Shape, o: &Vector3<f64>, d: &Vector3<f64>, s_min: f64) -> Option<f64> {
    match shape {
        Shape::Box { min, max } => {
            let (mut near, mut far) = (f64::NEG_INFINITY, f64::INFINITY);
            for a in 0..3 {
                if d[a] == 0.0 {
                    if o[a] < min[a] || o[a] > max[a] {
                        return None;
                    }
                    continue;
                }
                let t1 = (min[a] - o[a]) / d[a];
                let t2 = (max[a] - o[a]) / d[a];
                near = near.max(t1.min(t2));
                far = far.min(t1.max(t2));
            }
            if near > far {
                None
            } else if near > s_min {
                Some(near)
            } else if far > s_min {
                Some(far)
            } else {
                None
            }
        }
        Shape::Sphere { center, radius } => {
            let oc = o - v3(*center);
            let a = d.dot(d);
            let b = oc.dot(d);
            let c = oc.dot(&oc) - radius * radius;
            let disc = b * b - a * c;
            if disc < 0.0 {
                return None;
            }
            let sq = disc.sqrt();
            let (s1, s2) = ((-b - sq) / a, (-b + sq) / a);
            if s1 > s_min {
                Some(s1)
            } else if s2 > s_min {
                Some(s2)
            } else {
                None
            }
        }
    }
}

impl SceneSpec {
    /// 1 m box resting on the ground at the origin, eight cameras on a 4 m ring at 2 m height.
    pub fn default_ring() -> Self {
        SceneSpec {
            ground: Some(Ground { height: 0.0, colors: default_checker(), tile: default_tile() }),
            primitives: vec![Primitive {
                shape: Shape::Box { min: [-0.5, -0.5, 0.0], max: [0.5, 0.5, 1.0] },
                role: Role::Object,
                color: default_color(),
            }],
            cameras: CameraSpec::Ring {
                count: 8,
                radius: 4.0,
                elevation: 2.0,
                target: [0.0; 3],
                width: 128,
                height: 128,
                hfov_deg: 40.0,
                start_deg: 0.0,
            },
            sky: default_sky(),
        }
    }

    pub fn views(&self) -> Result<Vec<View>> {
        match &self.cameras {
            CameraSpec::Ring { count, radius, elevation, target, width, height, hfov_deg, start_deg } => {
                let k = CameraIntrinsics::from_fov(*width, *height, *hfov_deg)?;
                (0..*count)
                    .map(|i| {
                        let a = (start_deg + 360.0 * i as f64 / *count as f64).to_radians();
                        let eye = Vector3::new(radius * a.cos(), radius * a.sin(), *elevation);
                        let pose = Pose::look_at(eye, v3(*target), Vector3::z())?;
                        Ok(View { id: format!("view_{i:03}"), intrinsics: k, pose })
                    })
                    .collect()
            }
            CameraSpec::Explicit { views } => views
                .iter()
                .map(|v| {
                    v.intrinsics.validate()?;
                    let pose = Pose::look_at(v3(v.eye), v3(v.target), v3(v.up))?;
                    Ok(View { id: v.id.clone(), intrinsics: v.intrinsics, pose })
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<Vec<View>> {
        let bad = |m: &str| Err(Error::Scene(m.to_string()));
        for p in &self.primitives {
            let ok = match &p.shape {
                Shape::Box { min, max } => (0..3).all(|a| min[a] < max[a] && min[a].is_finite() && max[a].is_finite()),
                Shape::Sphere { center, radius } => *radius > 0.0 && center.iter().all(|c| c.is_finite()),
            };
            if !ok {
                return bad("degenerate primitive");
            }
        }
        if self.ground.is_none() && !self.primitives.iter().any(|p| p.role == Role::Background) {
            return bad("no background surface");
        }
        if !self.primitives.iter().any(|p| p.role == Role::Object) {
            return bad("no object primitive");
        }
        let views = self.views()?;
        if views.is_empty() {
            return bad("no cameras");
        }
        for v in &views {
            if project_point(&v.pose.apply(&Vector3::zeros()), &v.intrinsics).is_none() {
                return Err(Error::Scene(format!("camera {} does not see the scene origin", v.id)));
            }
        }
        let mut ids: Vec<&str> = views.iter().map(|v| v.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("duplicate view id");
        }
        Ok(views)
    }

    pub fn has_objects(&self) -> bool {
        self.primitives.iter().any(|p| p.role == Role::Object)
    }

    /// Nearest surface hit with parameter > `s_min`.
    pub fn cast(&self, o: &Vector3<f64>, d: &Vector3<f64>, include_objects: bool, s_min: f64) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        let mut offer = |s: f64, surface| {
            if best.is_none_or(|b| s < b.s) {
                best = Some(Hit { s, surface });
            }
        };
        if let Some(g) = &self.ground {
            if d.z != 0.0 {
                let s = (g.height - o.z) / d.z;
                if s > s_min {
                    offer(s, Surface::Ground);
                }
            }
        }
        for (i, p) in self.primitives.iter().enumerate() {
            if p.role == Role::Object && !include_objects {
                continue;
            }
            if let Some(s) = intersect(&p.shape, o, d, s_min) {
                offer(s, Surface::Primitive(i));
            }
        }
        best
    }

    fn is_object(&self, surface: Surface) -> bool {
        matches!(surface, Surface::Primitive(i) if self.primitives[i].role == Role::Object)
    }

    fn color_of(&self, surface: Surface, p: &Vector3<f64>) -> [u8; 3] {
        match surface {
            Surface::Ground => {
                let g = self.ground.as_ref().expect("ground hit implies ground");
                let parity = ((p.x / g.tile).floor() + (p.y / g.tile).floor()).rem_euclid(2.0) as usize;
                g.colors[parity]
            }
            Surface::Primitive(i) => self.primitives[i].color,
        }
    }

    /// First surface met travelling from world point `p` toward the center of
    /// `view`, or `None` when the path is clear or `p` is outside the frustum
    /// (`Some(None)` means in frustum and unobstructed).
    fn blocker_toward(&self, p: &Vector3<f64>, view: &View) -> Option<Option<Surface>> {
        project_point(&view.pose.apply(p), &view.intrinsics)?;
        let to_cam = view.pose.center() - p;
        let dist = to_cam.norm();
        let dir = to_cam / dist;
        let origin = p + dir * RAY_OFFSET;
        Some(self.cast(&origin, &dir, true, 0.0).filter(|h| h.s < dist - RAY_OFFSET).map(|h| h.surface))
    }

    /// Whether the world point is directly visible from `view`.
    pub fn visible_from(&self, p: &Vector3<f64>, view: &View) -> bool {
        matches!(self.blocker_toward(p, view), Some(None))
    }

    /// Whether `p` lies inside the frustum of `view` with an object primitive
    /// blocking the line of sight.
    pub fn object_occluded_from(&self, p: &Vector3<f64>, view: &View) -> bool {
        matches!(self.blocker_toward(p, view), Some(Some(s)) if self.is_object(s))
    }
}

fn per_pixel<T: Send>(view: &View, f: impl Fn(usize, usize) -> T + Sync) -> Grid<T> {
    let (w, h) = view.intrinsics.dims();
    let data: Vec<T> = (0..w * h).into_par_iter().map(|i| f(i % w, i / w)).collect();
    Grid::from_vec(w, h, data).expect("sized above")
}

/// Nearest-hit z-depth; 0 where the ray escapes.
pub fn render_depth(view: &View, scene: &SceneSpec, include_objects: bool) -> DepthMap {
    let g = per_pixel(view, |x, y| {
        let (o, d) = pixel_ray(view, x as f64, y as f64);
        scene.cast(&o, &d, include_objects, 0.0).map_or(0.0, |h| h.s as f32)
    });
    DepthMap::new(g).expect("ray parameters are positive")
}

pub fn object_mask(view: &View, scene: &SceneSpec) -> BinaryMask {
    BinaryMask::new(per_pixel(view, |x, y| {
        let (o, d) = pixel_ray(view, x as f64, y as f64);
        scene.cast(&o, &d, true, 0.0).is_some_and(|h| scene.is_object(h.surface))
    }))
}

pub fn render_rgb(view: &View, scene: &SceneSpec, include_objects: bool) -> RgbImage {
    RgbImage::new(per_pixel(view, |x, y| {
        let (o, d) = pixel_ray(view, x as f64, y as f64);
        match scene.cast(&o, &d, include_objects, 0.0) {
            Some(h) => scene.color_of(h.surface, &(o + d * h.s)),
            None => scene.sky,
        }
    }))
}

/// Background point revealed at pixel (x, y) of `view_n` once objects are
/// removed, or `None` when the pixel does not show an object.
fn revealed_point(view_n: &View, scene: &SceneSpec, x: usize, y: usize) -> Option<Vector3<f64>> {
    let (o, d) = pixel_ray(view_n, x as f64, y as f64);
    let full = scene.cast(&o, &d, true, 0.0)?;
    if !scene.is_object(full.surface) {
        return None;
    }
    scene.cast(&o, &d, false, 0.0).map(|h| o + d * h.s)
}

/// Pixels of `view_n` showing an object whose revealed background point is
/// hidden behind an object from every other view in `all_views`.
pub fn gt_unseen(view_n: &View, all_views: &[View], scene: &SceneSpec) -> BinaryMask {
    BinaryMask::new(per_pixel(view_n, |x, y| {
        revealed_point(view_n, scene, x, y)
            .is_some_and(|p| all_views.iter().filter(|w| w.id != view_n.id).all(|w| scene.object_occluded_from(&p, w)))
    }))
}

/// Per-view artifacts of a rendered dataset.
pub struct RenderedView {
    pub view: View,
    pub depth: DepthMap,
    pub depth_incomplete: DepthMap,
    pub mask: BinaryMask,
    pub rgb: RgbImage,
    pub rgb_clean: RgbImage,
    pub gt_unseen: BinaryMask,
}

pub fn render_dataset(scene: &SceneSpec) -> Result<Vec<RenderedView>> {
    let views = scene.validate()?;
    Ok(views
        .iter()
        .map(|v| RenderedView {
            view: v.clone(),
            depth: render_depth(v, scene, true),
            depth_incomplete: render_depth(v, scene, false),
            mask: object_mask(v, scene),
            rgb: render_rgb(v, scene, true),
            rgb_clean: render_rgb(v, scene, false),
            gt_unseen: gt_unseen(v, &views, scene),
        })
        .collect())
}

/// Writes `cameras.json`, `scene.json` and one file per view under
/// `depth/`, `depth_incomplete/`, `masks/`, `rgb/`, `rgb_clean/`, `gt_unseen/`.
pub fn write_dataset(scene: &SceneSpec, out_dir: &Path) -> Result<Vec<View>> {
    let rendered = render_dataset(scene)?;
    let views: Vec<View> = rendered.iter().map(|r| r.view.clone()).collect();
    io::cameras_write(out_dir.join("cameras.json"), &views)?;
    let mut spec = serde_json::to_vec_pretty(scene).map_err(|e| Error::Internal(e.to_string()))?;
    spec.push(b'\n');
    io::write_file(&out_dir.join("scene.json"), &spec)?;
    for r in &rendered {
        let id = &r.view.id;
        io::pfm_write(out_dir.join("depth").join(format!("{id}.pfm")), &r.depth)?;
        io::pfm_write(out_dir.join("depth_incomplete").join(format!("{id}.pfm")), &r.depth_incomplete)?;
        io::pgm_write_mask(out_dir.join("masks").join(format!("{id}.pgm")), &r.mask)?;
        io::ppm_write(out_dir.join("rgb").join(format!("{id}.ppm")), &r.rgb)?;
        io::ppm_write(out_dir.join("rgb_clean").join(format!("{id}.ppm")), &r.rgb_clean)?;
        io::pgm_write_mask(out_dir.join("gt_unseen").join(format!("{id}.pgm")), &r.gt_unseen)?;
    }
    Ok(views)
}
