//! Unseen-region masks from multi-view removal regions.
//!
//! Each view's removal region (where deleting the object changes depth) is
//! gathered into view n through view n's incomplete depth. Pixels that most
//! views agree are hidden form the contour whose bounding box prompts a
//! segmenter; [`refine_unseen_fallback`] stands in for that segmenter.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::camera::{project_point, unproject_pixel, CameraIntrinsics, Pose};
use crate::error::{Error, Result};
use crate::grid::{check_dims, BinaryMask, DepthMap, Field, Grid};
use crate::morphology;

pub const DEFAULT_THETA: f64 = 0.6;

/// Per-pixel fraction of views, in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct VoteGrid(Field);

impl VoteGrid {
    pub fn new(field: Field) -> Result<Self> {
        if field.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Internal("vote outside [0, 1]".into()));
        }
        Ok(VoteGrid(field))
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        VoteGrid(Grid::filled(width, height, 0.0))
    }

    pub fn field(&self) -> &Field {
        &self.0
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.0[(x, y)]
    }
}

/// One percent of the median valid depth.
pub fn default_eps_d(d_full: &DepthMap) -> Result<f64> {
    d_full
        .median_valid()
        .map(|m| 0.01 * m)
        .ok_or_else(|| Error::DegenerateDepth("no valid depth to derive a tolerance from".into()))
}

pub fn removal_region(d_full: &DepthMap, d_incomplete: &DepthMap, eps_d: f64) -> Result<BinaryMask> {
    if !(eps_d > 0.0) {
        return Err(Error::Config(format!("eps_d must be positive, got {eps_d}")));
    }
    let g = d_full.grid().zip_map(d_incomplete.grid(), |&f, &i| {
        (f > 0.0 && i == 0.0) || ((f as f64) - (i as f64)).abs() > eps_d
    })?;
    Ok(BinaryMask::new(g))
}

/// Bilinear sample of a binary mask at continuous pixel coordinates, edges clamped.
fn sample_bilinear(m: &BinaryMask, u: f64, v: f64) -> f64 {
    let (w, h) = m.dims();
    let x0 = u.floor().max(0.0) as usize;
    let y0 = v.floor().max(0.0) as usize;
    let (x0, y0) = (x0.min(w - 1), y0.min(h - 1));
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = ((u - x0 as f64).clamp(0.0, 1.0), (v - y0 as f64).clamp(0.0, 1.0));
    let at = |x, y| if m.at(x, y) { 1.0 } else { 0.0 };
    (1.0 - fy) * ((1.0 - fx) * at(x0, y0) + fx * at(x1, y0)) + fy * ((1.0 - fx) * at(x0, y1) + fx * at(x1, y1))
}

/// Landings this far left of or above pixel 0 still count as inside.
/// Rounding alone puts a pixel that maps onto itself at u = -1e-15.
const LANDING_SLACK: f64 = 1e-6;

fn land(p: &Vector3<f64>, k: &CameraIntrinsics) -> Option<(f64, f64)> {
    if let Some(q) = project_point(p, k) {
        return Some((q.u, q.v));
    }
    if !(p.z > 0.0) {
        return None;
    }
    let (u, v) = (k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy);
    let near = |c: f64, n: usize| c >= -LANDING_SLACK && c < n as f64;
    (near(u, k.width) && near(v, k.height)).then(|| (u.max(0.0), v.max(0.0)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Traversal {
    pub votes: VoteGrid,
    /// Pixels whose correspondence landed inside view i.
    pub landed: BinaryMask,
}

pub fn traverse_removal_detailed(
    r_i: &BinaryMask,
    d_n_incomplete: &DepthMap,
    t_n_to_i: &Pose,
    k_n: &CameraIntrinsics,
    k_i: &CameraIntrinsics,
) -> Result<Traversal> {
    check_dims(k_i.dims(), r_i.dims())?;
    check_dims(k_n.dims(), d_n_incomplete.dims())?;
    let (w, h) = k_n.dims();
    let mut votes = Grid::filled(w, h, 0.0);
    let mut landed = BinaryMask::empty(w, h);
    for y in 0..h {
        for x in 0..w {
            if !d_n_incomplete.is_valid(x, y) {
                continue;
            }
            let p = unproject_pixel(x as f64, y as f64, d_n_incomplete.at(x, y) as f64, k_n)?;
            if let Some((u, v)) = land(&t_n_to_i.apply(&p), k_i) {
                landed.set(x, y, true);
                if sample_bilinear(r_i, u, v) > 0.5 {
                    votes[(x, y)] = 1.0;
                }
            }
        }
    }
    Ok(Traversal { votes: VoteGrid(votes), landed })
}

/// Gathers `r_i` into view n; invalid depth and out-of-frustum landings vote 0.
pub fn traverse_removal(
    r_i: &BinaryMask,
    d_n_incomplete: &DepthMap,
    t_n_to_i: &Pose,
    k_n: &CameraIntrinsics,
    k_i: &CameraIntrinsics,
) -> Result<VoteGrid> {
    Ok(traverse_removal_detailed(r_i, d_n_incomplete, t_n_to_i, k_n, k_i)?.votes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteAverage {
    /// Divide by the number of views; missing correspondences count as 0.
    #[default]
    AllViews,
    /// Divide by the number of views where the pixel found a correspondence.
    ValidOnly,
}

pub fn mean_votes(traversals: &[Traversal], mode: VoteAverage) -> Result<VoteGrid> {
    let first = traversals.first().ok_or(Error::EmptyVotes)?;
    let (w, h) = first.votes.dims();
    let mut sum = Grid::filled(w, h, 0.0);
    let mut count = Grid::filled(w, h, 0usize);
    for t in traversals {
        check_dims((w, h), t.votes.dims())?;
        check_dims((w, h), t.landed.dims())?;
        for (i, (s, v)) in sum.data_mut().iter_mut().zip(t.votes.field().data()).enumerate() {
            *s += v;
            if t.landed.grid().data()[i] {
                count.data_mut()[i] += 1;
            }
        }
    }
    let k = traversals.len() as f64;
    let mean = sum.zip_map(&count, |&s, &c| match mode {
        VoteAverage::AllViews => s / k,
        VoteAverage::ValidOnly if c == 0 => 0.0,
        VoteAverage::ValidOnly => s / c as f64,
    })?;
    VoteGrid::new(mean)
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta <= 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("theta must lie in (0, 1], got {theta}")))
    }
}

/// `C_n`: pixels with mean vote ≥ `theta` inside `r_n`.
pub fn threshold_contour(mean: &VoteGrid, r_n: &BinaryMask, theta: f64) -> Result<BinaryMask> {
    check_theta(theta)?;
    Ok(BinaryMask::new(mean.field().zip_map(r_n.grid(), |&v, &r| r && v >= theta)?))
}

pub fn aggregate_contour(votes: &[VoteGrid], r_n: &BinaryMask, theta: f64) -> Result<BinaryMask> {
    let first = votes.first().ok_or(Error::EmptyVotes)?;
    let mut sum = Grid::filled(first.dims().0, first.dims().1, 0.0);
    for v in votes {
        check_dims(sum.dims(), v.dims())?;
        for (s, x) in sum.data_mut().iter_mut().zip(v.field().data()) {
            *s += x;
        }
    }
    let k = votes.len() as f64;
    threshold_contour(&VoteGrid::new(sum.map(|s| s / k))?, r_n, theta)
}

/// Inclusive pixel bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BBox {
    pub x_min: usize,
    pub y_min: usize,
    pub x_max: usize,
    pub y_max: usize,
}

impl BBox {
    pub fn of(mask: &BinaryMask) -> Option<BBox> {
        mask.pixels().fold(None, |b: Option<BBox>, (x, y)| {
            Some(match b {
                None => BBox { x_min: x, y_min: y, x_max: x, y_max: y },
                Some(b) => BBox { x_min: b.x_min.min(x), y_min: b.y_min.min(y), x_max: b.x_max.max(x), y_max: b.y_max.max(y) },
            })
        })
    }

    /// Grown by `pad` on every side and clamped to a `width`×`height` image.
    pub fn expand(&self, pad: usize, width: usize, height: usize) -> BBox {
        BBox {
            x_min: self.x_min.saturating_sub(pad),
            y_min: self.y_min.saturating_sub(pad),
            x_max: (self.x_max + pad).min(width - 1),
            y_max: (self.y_max + pad).min(height - 1),
        }
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x_min..=self.x_max).contains(&x) && (self.y_min..=self.y_max).contains(&y)
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.x_min <= self.x_max && self.y_min <= self.y_max && self.x_max < width && self.y_max < height
    }

    pub fn to_mask(&self, width: usize, height: usize) -> BinaryMask {
        BinaryMask::from_fn(width, height, |x, y| self.contains(x, y))
    }

    pub fn to_array(&self) -> [usize; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }
}

pub fn bbox_prompt(c_n: &BinaryMask, padding: usize) -> Result<BBox> {
    let b = BBox::of(c_n).ok_or(Error::EmptyContour)?;
    Ok(b.expand(padding, c_n.width(), c_n.height()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBoxPrompt {
    pub view_id: String,
    pub bbox: [usize; 4],
}

/// Writes `unseen_bbox_<view_id>.json` into `dir`.
pub fn write_bbox_prompt(dir: &Path, view_id: &str, bbox: &BBox) -> Result<PathBuf> {
    let path = dir.join(format!("unseen_bbox_{view_id}.json"));
    let rec = BBoxPrompt { view_id: view_id.to_string(), bbox: bbox.to_array() };
    let mut bytes = serde_json::to_vec(&rec).map_err(|e| Error::Internal(e.to_string()))?;
    bytes.push(b'\n');
    crate::io::write_file(&path, &bytes)?;
    Ok(path)
}

/// Deterministic replacement for the box-prompted segmenter.
///
/// Inside `bbox`, pixels of `r_n` with mean vote ≥ `theta` are closed with a
/// disk of `close_radius`, clipped back to `r_n`, and the largest 4-connected
/// component is kept.
pub fn refine_unseen_fallback(
    votes_mean: &VoteGrid,
    r_n: &BinaryMask,
    bbox: &BBox,
    theta: f64,
    close_radius: usize,
) -> Result<BinaryMask> {
    check_theta(theta)?;
    check_dims(votes_mean.dims(), r_n.dims())?;
    let (w, h) = r_n.dims();
    if !bbox.fits(w, h) {
        return Err(Error::Config(format!("bbox {:?} outside {w}x{h} image", bbox.to_array())));
    }
    let seed = BinaryMask::from_fn(w, h, |x, y| bbox.contains(x, y) && r_n.at(x, y) && votes_mean.at(x, y) >= theta);
    let closed = morphology::close(&seed, close_radius).and(&bbox.to_mask(w, h))?.and(r_n)?;
    Ok(morphology::largest_component(&closed))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestedMask {
    pub mask: BinaryMask,
    /// Pixels that were neither 0 nor 255 before thresholding at 128.
    pub gray_pixels: usize,
}

/// Reads a segmenter mask produced out of band; gray values are thresholded at 128.
pub fn ingest_external_mask(path: impl AsRef<Path>, width: usize, height: usize) -> Result<IngestedMask> {
    let path = path.as_ref();
    let gray = crate::io::pgm_read(path)?;
    check_dims((width, height), gray.dims())?;
    let (mask, gray_pixels) = crate::io::mask_from_gray(&gray);
    if gray_pixels > 0 {
        log::warn!("{}: {gray_pixels} intermediate gray value(s) binarized at 128", path.display());
    }
    Ok(IngestedMask { mask, gray_pixels })
}
