use std::fmt::Write as _;
use std::path::Path;

use super::{read_file, write_file, FormatError};
use crate::error::{Error, Result};

/// Max deviation of `RᵀR` from identity and of `det R` from 1 accepted on load.
pub const POSE_TOLERANCE: f64 = 1e-5;

/// Rigid sensor-to-world transform `x ↦ R·x + t`, translation in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseSE3 {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl Default for PoseSE3 {
    fn default() -> Self {
        PoseSE3::identity()
    }
}

impl PoseSE3 {
    pub fn identity() -> Self {
        PoseSE3 {
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation: [0.0; 3],
        }
    }

    pub fn from_translation(t: [f64; 3]) -> Self {
        PoseSE3 {
            translation: t,
            ..PoseSE3::identity()
        }
    }

    /// Rotation by `angle` radians about the unit `axis` (Rodrigues), then translation.
    pub fn from_axis_angle(axis: [f64; 3], angle: f64, translation: [f64; 3]) -> Self {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        let [x, y, z] = [axis[0] / n, axis[1] / n, axis[2] / n];
        let (s, c) = angle.sin_cos();
        let v = 1.0 - c;
        PoseSE3 {
            rotation: [
                [c + x * x * v, x * y * v - z * s, x * z * v + y * s],
                [y * x * v + z * s, c + y * y * v, y * z * v - x * s],
                [z * x * v - y * s, z * y * v + x * s, c + z * z * v],
            ],
            translation,
        }
    }

    /// Row-major 3×4 `[R | t]`.
    pub fn from_row_major(v: [f64; 12]) -> Self {
        PoseSE3 {
            rotation: [[v[0], v[1], v[2]], [v[4], v[5], v[6]], [v[8], v[9], v[10]]],
            translation: [v[3], v[7], v[11]],
        }
    }

    pub fn to_row_major(&self) -> [f64; 12] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[0][0], r[0][1], r[0][2], t[0], r[1][0], r[1][1], r[1][2], t[1], r[2][0], r[2][1], r[2][2], t[2],
        ]
    }

    /// Largest violation of `RᵀR = I` and `det R = 1`.
    pub fn rigidity_error(&self) -> f64 {
        let r = &self.rotation;
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        if !det.is_finite() {
            return f64::INFINITY;
        }
        worst.max((det - 1.0).abs())
    }

    pub fn is_rigid(&self) -> bool {
        self.rigidity_error() <= POSE_TOLERANCE
    }

    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[0][0] * p[0] + r[0][1] * p[1] + r[0][2] * p[2] + t[0],
            r[1][0] * p[0] + r[1][1] * p[1] + r[1][2] * p[2] + t[1],
            r[2][0] * p[0] + r[2][1] * p[1] + r[2][2] * p[2] + t[2],
        ]
    }

    /// `Rᵀ(x − t)`, exact inverse for a rigid pose.
    pub fn apply_inverse(&self, p: [f64; 3]) -> [f64; 3] {
        let r = &self.rotation;
        let d = [p[0] - self.translation[0], p[1] - self.translation[1], p[2] - self.translation[2]];
        [
            r[0][0] * d[0] + r[1][0] * d[1] + r[2][0] * d[2],
            r[0][1] * d[0] + r[1][1] * d[1] + r[2][1] * d[2],
            r[0][2] * d[0] + r[1][2] * d[1] + r[2][2] * d[2],
        ]
    }
}

/// Formats poses one per line with shortest round-trip float formatting.
pub fn format_poses(poses: &[PoseSE3]) -> String {
    let mut out = String::new();
    for pose in poses {
        let vals = pose.to_row_major();
        for (i, v) in vals.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            // `{:?}` keeps a trailing ".0" so integers stay visibly real
            write!(out, "{v:?}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_poses(text: &str) -> Result<Vec<PoseSE3>, FormatError> {
    let mut poses = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let mut vals = [0.0f64; 12];
        let mut n = 0;
        for tok in line.split_whitespace() {
            if n == 12 {
                return Err(FormatError::PoseSyntax { line: line_no, message: "more than 12 values".into() });
            }
            vals[n] = tok.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| FormatError::PoseSyntax {
                line: line_no,
                message: format!("invalid number {tok:?}"),
            })?;
            n += 1;
        }
        if n != 12 {
            return Err(FormatError::PoseSyntax { line: line_no, message: format!("expected 12 values, found {n}") });
        }
        let pose = PoseSE3::from_row_major(vals);
        let deviation = pose.rigidity_error();
        if deviation > POSE_TOLERANCE {
            return Err(FormatError::PoseNotRigid { line: line_no, deviation });
        }
        poses.push(pose);
    }
    Ok(poses)
}

pub fn read_poses(path: impl AsRef<Path>) -> Result<Vec<PoseSE3>> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|_| {
        Error::format(path, FormatError::PoseSyntax { line: 0, message: "not UTF-8".into() })
    })?;
    parse_poses(text).map_err(|e| Error::format(path, e))
}

pub fn write_poses(poses: &[PoseSE3], path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), format_poses(poses).as_bytes())
}
