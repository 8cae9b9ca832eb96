//! Pinhole cameras and rigid world-to-camera poses.
//!
//! Camera frame: +Z forward, +X right, +Y down. Pixel `u` grows right and
//! `v` grows down; integer coordinates are pixel centers.

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ORTHONORMAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = CameraIntrinsics { fx, fy, cx, cy, width, height };
        k.validate()?;
        Ok(k)
    }

    /// Square pixels, principal point at the image center, horizontal field of view in degrees.
    pub fn from_fov(width: usize, height: usize, hfov_deg: f64) -> Result<Self> {
        let f = width as f64 / 2.0 / (hfov_deg.to_radians() / 2.0).tan();
        Self::new(f, f, (width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0, width, height)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidIntrinsics(m.to_string()));
        if self.width == 0 || self.height == 0 {
            return bad("width and height must be at least 1");
        }
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return bad("focal lengths must be positive");
        }
        if !(0.0..self.width as f64).contains(&self.cx) || !(0.0..self.height as f64).contains(&self.cy) {
            return bad("principal point outside the image");
        }
        Ok(())
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64
    }
}

/// Rigid transform `p_cam = R p_world + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let dev = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        let det = rotation.determinant();
        if !(dev <= ORTHONORMAL_TOL && (det - 1.0).abs() <= ORTHONORMAL_TOL) || !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::NonOrthonormalRotation(dev.max((det - 1.0).abs())));
        }
        Ok(Pose { rotation, translation })
    }

    pub fn identity() -> Self {
        Pose { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Pose { rotation: Matrix3::identity(), translation: t }
    }

    /// Camera at `eye` looking at `target`; `up` is the world up direction.
    pub fn look_at(eye: Vector3<f64>, target: Vector3<f64>, up: Vector3<f64>) -> Result<Self> {
        let z = (target - eye).try_normalize(1e-12).ok_or_else(|| Error::Scene("eye coincides with target".into()))?;
        let x = z.cross(&up).try_normalize(1e-12).ok_or_else(|| Error::Scene("view direction parallel to up".into()))?;
        let y = z.cross(&x);
        let r = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
        Pose::new(r, -(r * eye))
    }

    /// Row-major 4×4 homogeneous matrix.
    pub fn from_row_major(m: &[f64; 16]) -> Result<Self> {
        let mat = Matrix4::from_row_slice(m);
        let bottom = [mat[(3, 0)], mat[(3, 1)], mat[(3, 2)], mat[(3, 3)]];
        if bottom != [0.0, 0.0, 0.0, 1.0] {
            return Err(Error::NonOrthonormalRotation(f64::NAN));
        }
        Pose::new(mat.fixed_view::<3, 3>(0, 0).into(), mat.fixed_view::<3, 1>(0, 3).into())
    }

    pub fn to_row_major(&self) -> [f64; 16] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)], r[(0, 1)], r[(0, 2)], t[0],
            r[(1, 0)], r[(1, 1)], r[(1, 2)], t[1],
            r[(2, 0)], r[(2, 1)], r[(2, 2)], t[2],
            0.0, 0.0, 0.0, 1.0,
        ]
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose { rotation: rt, translation: -(rt * self.translation) }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Camera center in the source frame.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }
}

/// One calibrated viewpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct View {
    pub id: String,
    pub intrinsics: CameraIntrinsics,
    pub pose: Pose,
}

/// `T_{n→i} = pose_i ∘ pose_n⁻¹`, mapping camera-n coordinates into camera i.
pub fn relative_transform(pose_n: &Pose, pose_i: &Pose) -> Pose {
    pose_i.compose(&pose_n.inverse())
}

pub fn unproject_pixel(u: f64, v: f64, z: f64, k: &CameraIntrinsics) -> Result<Vector3<f64>> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::InvalidDepth(z));
    }
    if !k.contains(u, v) {
        return Err(Error::OutOfBounds { u, v, width: k.width, height: k.height });
    }
    Ok(Vector3::new((u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

/// `None` when the point is behind the camera or lands outside the image.
pub fn project_point(p: &Vector3<f64>, k: &CameraIntrinsics) -> Option<Projection> {
    if !(p.z > 0.0) {
        return None;
    }
    let u = k.fx * p.x / p.z + k.cx;
    let v = k.fy * p.y / p.z + k.cy;
    k.contains(u, v).then_some(Projection { u, v, depth: p.z })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn k100() -> CameraIntrinsics {
        CameraIntrinsics::new(100.0, 100.0, 50.0, 50.0, 200, 100).unwrap()
    }

    #[test]
    fn principal_point_is_optical_axis() {
        let k = k100();
        assert_eq!(unproject_pixel(50.0, 50.0, 3.0, &k).unwrap(), Vector3::new(0.0, 0.0, 3.0));
        let p = project_point(&Vector3::new(0.0, 0.0, 5.0), &k).unwrap();
        assert_eq!((p.u, p.v, p.depth), (50.0, 50.0, 5.0));
    }

    #[test]
    fn offset_pixel() {
        let k = k100();
        assert_eq!(unproject_pixel(150.0, 50.0, 2.0, &k).unwrap(), Vector3::new(2.0, 0.0, 2.0));
        let p = project_point(&Vector3::new(2.0, 0.0, 2.0), &k).unwrap();
        assert_eq!((p.u, p.v, p.depth), (150.0, 50.0, 2.0));
    }

    #[test]
    fn behind_camera_is_out_of_frustum() {
        assert!(project_point(&Vector3::new(0.0, 0.0, -1.0), &k100()).is_none());
        assert!(project_point(&Vector3::new(0.0, 0.0, 0.0), &k100()).is_none());
    }

    #[test]
    fn unproject_errors() {
        let k = k100();
        assert!(matches!(unproject_pixel(1.0, 1.0, 0.0, &k), Err(Error::InvalidDepth(_))));
        assert!(matches!(unproject_pixel(1.0, 1.0, -2.0, &k), Err(Error::InvalidDepth(_))));
        assert!(matches!(unproject_pixel(200.0, 1.0, 1.0, &k), Err(Error::OutOfBounds { .. })));
        assert!(matches!(unproject_pixel(-0.5, 1.0, 1.0, &k), Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn intrinsics_validation() {
        assert!(CameraIntrinsics::new(0.0, 1.0, 0.0, 0.0, 1, 1).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 1.0, 0.0, 1, 1).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 0.0, 0.0, 0, 1).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 0.5, 0.5, 1, 1).is_ok());
    }

    #[test]
    fn relative_transform_cases() {
        let a = Pose::look_at(Vector3::new(4.0, 0.0, 2.0), Vector3::zeros(), Vector3::z()).unwrap();
        let same = relative_transform(&a, &a);
        assert!((same.rotation() - Matrix3::identity()).abs().max() < 1e-12);
        assert!(same.translation().norm() < 1e-12);

        let t = Vector3::new(1.0, -2.0, 0.5);
        let rel = relative_transform(&Pose::identity(), &Pose::from_translation(t));
        assert_eq!(*rel.rotation(), Matrix3::identity());
        assert_eq!(*rel.translation(), t);
    }

    #[test]
    fn non_orthonormal_rotation_rejected() {
        let mut r = Matrix3::identity();
        r[(0, 0)] = 1.01;
        assert!(Pose::new(r, Vector3::zeros()).is_err());
        let reflection = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(Pose::new(reflection, Vector3::zeros()).is_err());
    }

    #[test]
    fn look_at_sees_target_at_principal_point() {
        let k = CameraIntrinsics::from_fov(64, 64, 60.0).unwrap();
        let pose = Pose::look_at(Vector3::new(4.0, 1.0, 2.0), Vector3::new(0.0, 0.0, 0.5), Vector3::z()).unwrap();
        let p = project_point(&pose.apply(&Vector3::new(0.0, 0.0, 0.5)), &k).unwrap();
        assert!(close(p.u, k.cx, 1e-9) && close(p.v, k.cy, 1e-9));
        // world up projects upward in the image (v decreases)
        let above = project_point(&pose.apply(&Vector3::new(0.0, 0.0, 1.0)), &k).unwrap();
        assert!(above.v < p.v);
        assert!(close(pose.center().x, 4.0, 1e-12));
    }

    #[test]
    fn row_major_round_trip() {
        let pose = Pose::look_at(Vector3::new(-3.0, 2.0, 2.0), Vector3::zeros(), Vector3::z()).unwrap();
        let back = Pose::from_row_major(&pose.to_row_major()).unwrap();
        assert_eq!(back, pose);
    }
}
