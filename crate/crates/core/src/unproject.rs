//! Colored world-frame points from the reference view's aligned depth.

use std::path::Path;

use crate::camera::{unproject_pixel, CameraIntrinsics, Pose};
use crate::error::{Error, Result};
use crate::grid::{check_dims, BinaryMask, DepthMap, RgbImage};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub position: [f64; 3],
    pub color: [u8; 3],
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointSet {
    points: Vec<Point>,
}

impl PointSet {
    pub fn from_points(points: Vec<Point>) -> Self {
        PointSet { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }
}

/// One point per set pixel of `u_final`, row-major, colored from `rgb_ref`.
pub fn init_points(
    rgb_ref: &RgbImage,
    d_aligned: &DepthMap,
    u_final: &BinaryMask,
    k: &CameraIntrinsics,
    pose_ref: &Pose,
) -> Result<PointSet> {
    check_dims(k.dims(), rgb_ref.dims())?;
    check_dims(k.dims(), d_aligned.dims())?;
    check_dims(k.dims(), u_final.dims())?;

    let missing: Vec<(usize, usize)> = u_final.pixels().filter(|&(x, y)| !d_aligned.is_valid(x, y)).collect();
    if !missing.is_empty() {
        return Err(Error::MissingDepth { count: missing.len(), first: missing.into_iter().take(8).collect() });
    }

    let to_world = pose_ref.inverse();
    let points = u_final
        .pixels()
        .map(|(x, y)| {
            let cam = unproject_pixel(x as f64, y as f64, d_aligned.at(x, y) as f64, k)?;
            let w = to_world.apply(&cam);
            Ok(Point { position: [w.x, w.y, w.z], color: rgb_ref.at(x, y) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PointSet { points })
}

pub fn export_ply(points: &PointSet, path: impl AsRef<Path>) -> Result<()> {
    crate::io::ply_write(path, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn principal_point_identity_pose() {
        let k = CameraIntrinsics::new(50.0, 50.0, 2.0, 1.0, 5, 3).unwrap();
        let rgb = RgbImage::filled(5, 3, [9, 8, 7]);
        let d = DepthMap::new(Grid::filled(5, 3, 4.0)).unwrap();
        let mut u = BinaryMask::empty(5, 3);
        u.set(2, 1, true);
        let ps = init_points(&rgb, &d, &u, &k, &Pose::identity()).unwrap();
        assert_eq!(ps.points(), &[Point { position: [0.0, 0.0, 4.0], color: [9, 8, 7] }]);
    }

    #[test]
    fn missing_depth_lists_pixels() {
        let k = CameraIntrinsics::new(50.0, 50.0, 2.0, 1.0, 5, 3).unwrap();
        let mut d = DepthMap::new(Grid::filled(5, 3, 4.0)).unwrap().into_grid();
        d[(1, 2)] = 0.0;
        let d = DepthMap::new(d).unwrap();
        let u = BinaryMask::from_fn(5, 3, |x, _| x < 2);
        match init_points(&RgbImage::filled(5, 3, [0; 3]), &d, &u, &k, &Pose::identity()) {
            Err(Error::MissingDepth { count: 1, first }) => assert_eq!(first, vec![(1, 2)]),
            other => panic!("{other:?}"),
        }
    }
}
