use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_file, write_file, Format, ParseError, ParseErrorKind};
use crate::camera::{CameraIntrinsics, Pose, View};
use crate::error::Result;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ViewRecord {
    id: String,
    intrinsics: CameraIntrinsics,
    world_to_camera: [f64; 16],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Rig {
    views: Vec<ViewRecord>,
}

fn byte_offset(text: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text.split(|&b| b == b'\n').take(line - 1).map(|l| l.len() + 1).sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

pub fn encode_cameras(views: &[View]) -> Vec<u8> {
    let rig = Rig {
        views: views
            .iter()
            .map(|v| ViewRecord { id: v.id.clone(), intrinsics: v.intrinsics, world_to_camera: v.pose.to_row_major() })
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&rig).expect("plain data serializes");
    out.push(b'\n');
    out
}

/// Parses and validates intrinsics, poses and id uniqueness.
pub fn decode_cameras(bytes: &[u8]) -> std::result::Result<Vec<View>, ParseError> {
    let rig: Rig = serde_json::from_slice(bytes).map_err(|e| {
        ParseError::new(Format::Cameras, byte_offset(bytes, e.line(), e.column()), ParseErrorKind::Json(e.to_string()))
    })?;
    let text = String::from_utf8_lossy(bytes);
    let mut views = Vec::with_capacity(rig.views.len());
    for r in rig.views {
        let at = text.find(&format!("\"{}\"", r.id)).unwrap_or(0);
        let invalid = |m: String| ParseError::new(Format::Cameras, at, ParseErrorKind::Json(format!("view {}: {m}", r.id)));
        r.intrinsics.validate().map_err(|e| invalid(e.to_string()))?;
        let pose = Pose::from_row_major(&r.world_to_camera).map_err(|e| invalid(e.to_string()))?;
        if views.iter().any(|v: &View| v.id == r.id) {
            return Err(invalid("duplicate id".into()));
        }
        views.push(View { id: r.id, intrinsics: r.intrinsics, pose });
    }
    Ok(views)
}

pub fn cameras_write(path: impl AsRef<Path>, views: &[View]) -> Result<()> {
    write_file(path.as_ref(), &encode_cameras(views))
}

pub fn cameras_read(path: impl AsRef<Path>) -> Result<Vec<View>> {
    Ok(decode_cameras(&read_file(path.as_ref())?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn round_trip() {
        let k = CameraIntrinsics::from_fov(64, 48, 55.0).unwrap();
        let views: Vec<View> = (0..3)
            .map(|i| {
                let a = i as f64 * 2.0;
                let eye = Vector3::new(4.0 * a.cos(), 4.0 * a.sin(), 2.0);
                View { id: format!("v{i}"), intrinsics: k, pose: Pose::look_at(eye, Vector3::zeros(), Vector3::z()).unwrap() }
            })
            .collect();
        assert_eq!(decode_cameras(&encode_cameras(&views)).unwrap(), views);
    }

    #[test]
    fn json_error_offset() {
        let bytes = b"{\n  \"views\": [\n    {\"id\": 3}\n  ]\n}";
        let e = decode_cameras(bytes).unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Json(_)));
        assert!(e.offset > 14 && e.offset < 30, "{e}");
    }

    #[test]
    fn bad_rotation_rejected() {
        let mut m = Pose::identity().to_row_major();
        m[0] = 2.0;
        let rig = format!(
            r#"{{"views":[{{"id":"a","intrinsics":{{"fx":1,"fy":1,"cx":0,"cy":0,"width":1,"height":1}},"world_to_camera":{m:?}}}]}}"#
        );
        assert!(decode_cameras(rig.as_bytes()).is_err());
    }
}
