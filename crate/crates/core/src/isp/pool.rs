//! Calibration pool: forward-matrix pairs and tone curves.
//!
//! File format (TOML, `schema_version = 1`):
//!
//! ```toml
//! schema_version = 1
//!
//! [[camera]]
//! name = "example"
//! forward_matrix_1 = [0.43, 0.39, 0.14, 0.22, 0.72, 0.06, 0.01, 0.10, 0.71]
//! forward_matrix_2 = [0.44, 0.38, 0.14, 0.22, 0.71, 0.07, 0.02, 0.09, 0.71]
//! tone_curve = [0.0, 0.001, ..., 1.0]   # 1025 strictly increasing samples
//! ```
//!
//! Forward matrices are row-major and map white-balanced camera RGB to XYZ (D50).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{srgb_to_xyz_d50, ToneCurve};
use crate::error::{Error, Result};
use crate::mat3::{self, Mat3};
use crate::rng::sha256_hex;

pub const POOL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub name: String,
    #[serde(with = "row_major")]
    pub forward_matrix_1: Mat3,
    #[serde(with = "row_major")]
    pub forward_matrix_2: Mat3,
    pub tone_curve: ToneCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPool {
    pub schema_version: u32,
    #[serde(rename = "camera")]
    pub entries: Vec<CalibrationEntry>,
}

impl CalibrationPool {
    pub fn new(entries: Vec<CalibrationEntry>) -> Result<Self> {
        let pool = Self {
            schema_version: POOL_SCHEMA_VERSION,
            entries,
        };
        pool.validate()?;
        Ok(pool)
    }

    /// Three synthetic cameras. Each forward matrix is the sRGB-to-XYZ (D50)
    /// matrix times a camera-to-sRGB saturation matrix whose off-diagonal
    /// entries are negative and whose rows sum to one, so white maps to the D50
    /// white point and every in-gamut color stays nonnegative in camera space.
    /// Tone curves are a smoothstep and two power curves.
    pub fn builtin() -> Self {
        // Off-diagonal magnitudes per row; the diagonal restores a unit row sum.
        const DESATURATION: [[[f64; 2]; 3]; 6] = [
            [[0.42, 0.18], [0.22, 0.31], [0.05, 0.47]],
            [[0.55, 0.12], [0.17, 0.40], [0.09, 0.38]],
            [[0.35, 0.25], [0.28, 0.22], [0.12, 0.55]],
            [[0.60, 0.08], [0.20, 0.35], [0.03, 0.42]],
            [[0.30, 0.15], [0.25, 0.45], [0.10, 0.30]],
            [[0.48, 0.22], [0.15, 0.28], [0.07, 0.50]],
        ];
        let base = srgb_to_xyz_d50();
        let fm = |d: &[[f64; 2]; 3]| {
            let mut s = [[0.0; 3]; 3];
            for (i, row) in s.iter_mut().enumerate() {
                let (a, b) = (d[i][0], d[i][1]);
                row[i] = 1.0 + a + b;
                row[(i + 1) % 3] = -a;
                row[(i + 2) % 3] = -b;
            }
            mat3::mul(&base, &s)
        };
        let curves = [
            ("synthetic-a", ToneCurve::smoothstep()),
            (
                "synthetic-b",
                ToneCurve::power(0.8).expect("valid exponent"),
            ),
            (
                "synthetic-c",
                ToneCurve::power(1.25).expect("valid exponent"),
            ),
        ];
        let entries = curves
            .into_iter()
            .enumerate()
            .map(|(i, (name, tone_curve))| CalibrationEntry {
                name: name.to_string(),
                forward_matrix_1: fm(&DESATURATION[2 * i]),
                forward_matrix_2: fm(&DESATURATION[2 * i + 1]),
                tone_curve,
            })
            .collect();
        Self::new(entries).expect("builtin pool is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != POOL_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "calibration pool schema {} unsupported (expected {POOL_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.entries.is_empty() {
            return Err(Error::Config("calibration pool is empty".into()));
        }
        for e in &self.entries {
            for m in [&e.forward_matrix_1, &e.forward_matrix_2] {
                if m.iter().flatten().any(|v| !v.is_finite()) || mat3::inverse(m).is_none() {
                    return Err(Error::Config(format!(
                        "entry {:?} has a singular forward matrix",
                        e.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let pool: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        pool.validate()?;
        Ok(pool)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("pool serializes")
    }

    /// SHA-256 of the canonical serialization; recorded alongside sampled cameras.
    pub fn fingerprint(&self) -> String {
        sha256_hex(
            serde_json::to_string(self)
                .expect("pool serializes")
                .as_bytes(),
        )
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub(crate) mod row_major {
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    use crate::mat3::{from_row_major, to_row_major, Mat3};

    pub fn serialize<S: Serializer>(m: &Mat3, s: S) -> Result<S::Ok, S::Error> {
        to_row_major(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat3, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        from_row_major(&v)
            .ok_or_else(|| D::Error::custom(format!("expected 9 matrix entries, got {}", v.len())))
    }
}
