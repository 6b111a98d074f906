//! Shared plain-text configuration.
//!
//! One `key = value` pair per line, SI units, `#` starts a comment. Optional
//! `[geometry]`, `[servo]`, `[rendering]`, `[experiment]` and `[workspace]`
//! headers group keys; a key under the wrong header is rejected. Every key
//! is optional and falls back to the built-in default.
//!
//! ```text
//! [geometry]
//! base_radius = 0.080
//! upper_arm = 0.035
//! forearm = 0.060
//! effector_radius = 0.010
//! theta_min = -1.5707963267948966
//! theta_max = 1.5707963267948966
//!
//! [experiment]
//! radii = 0.005, 0.010, 0.015, 0.020
//! noise_level = 0.04
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::device::{DeviceError, ServoConfig, DEFAULT_MAX_RATE, DEFAULT_QUANTIZATION};
use crate::geometry::{DeltaGeometry, GeometryError, JointLimits};
use crate::harness::ExperimentConfig;
use crate::rendering::RenderParams;
use crate::workspace::{GridSpec, WorkspaceError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("key `{key}`: {message}")]
    Value { key: String, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Servo(#[from] DeviceError),
    #[error(transparent)]
    Grid(#[from] WorkspaceError),
}

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "geometry",
        &[
            "base_radius",
            "upper_arm",
            "forearm",
            "effector_radius",
            "azimuth_0",
            "azimuth_1",
            "azimuth_2",
            "theta_min",
            "theta_max",
        ],
    ),
    (
        "servo",
        &[
            "torque_limit",
            "max_rate",
            "quantization",
            "theta_min",
            "theta_max",
            "ideal_servo",
        ],
    ),
    ("rendering", &["stiffness", "apex_height", "cone_angle"]),
    (
        "experiment",
        &[
            "radii",
            "height",
            "angular_rate",
            "duration",
            "sample_rate",
            "noise_level",
            "noise_seed",
            "stiffness",
        ],
    ),
    (
        "workspace",
        &["grid_lateral", "grid_z_min", "grid_z_max", "grid_spacing"],
    ),
];

fn known_key(section: Option<&str>, key: &str) -> bool {
    SECTIONS
        .iter()
        .filter(|(s, _)| section.is_none_or(|want| want == *s))
        .any(|(_, keys)| keys.contains(&key))
}

/// Raw key-value pairs after syntax checking.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    values: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(name) = body.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                if !SECTIONS.iter().any(|(s, _)| *s == name) {
                    return Err(ConfigError::Syntax {
                        line,
                        message: format!("unknown section `{name}`"),
                    });
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                message: "expected `key = value`".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    message: "empty key or value".into(),
                });
            }
            if !known_key(section.as_deref(), key) {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("unknown key `{key}`"),
                });
            }
            if let Some((prev, _)) = values.get(key) {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("duplicate key `{key}` (first set on line {prev})"),
                });
            }
            values.insert(key.to_string(), (line, value.to_string()));
        }
        Ok(Self { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(_, v)| v.as_str())
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => parse_f64(key, v),
        }
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.raw(key).map(|v| parse_f64(key, v)).transpose()
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError::Value {
                key: key.into(),
                message: format!("`{v}` is not an unsigned 64-bit integer"),
            }),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some("true" | "1" | "yes") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(v) => Err(ConfigError::Value {
                key: key.into(),
                message: format!("`{v}` is not a boolean"),
            }),
        }
    }

    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| parse_f64(key, s.trim()))
                .collect::<Result<Vec<_>, _>>(),
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v.parse().map_err(|_| ConfigError::Value {
        key: key.into(),
        message: format!("`{v}` is not a number"),
    })?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ConfigError::Value {
            key: key.into(),
            message: "value must be finite".into(),
        })
    }
}

/// Everything a CLI run needs, resolved from one configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub geometry: DeltaGeometry,
    pub servo: ServoConfig,
    pub render: RenderParams,
    pub experiment: ExperimentConfig,
    pub grid: GridSpec,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        Self::from_key_values(&KeyValues::parse(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_text(&text)
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self, ConfigError> {
        let d = DeltaGeometry::default();
        let dl = d.limits();
        let az = d.chain_azimuths();
        let limits = JointLimits::new(kv.f64_or("theta_min", dl.min)?, kv.f64_or("theta_max", dl.max)?)?;
        let geometry = DeltaGeometry::new(
            kv.f64_or("base_radius", d.base_radius())?,
            kv.f64_or("upper_arm", d.upper_arm())?,
            kv.f64_or("forearm", d.forearm())?,
            kv.f64_or("effector_radius", d.effector_radius())?,
            [
                kv.f64_or("azimuth_0", az[0])?,
                kv.f64_or("azimuth_1", az[1])?,
                kv.f64_or("azimuth_2", az[2])?,
            ],
            limits,
        )?;

        let servo = if kv.bool_or("ideal_servo", false)? {
            ServoConfig::ideal(limits)
        } else {
            let max_rate = kv.f64_or("max_rate", DEFAULT_MAX_RATE)?;
            let quantization = kv.f64_or("quantization", DEFAULT_QUANTIZATION)?;
            let torque = match kv.opt_f64("torque_limit")? {
                Some(t) => t,
                None => ServoConfig::calibrated(&geometry)?.torque_limit,
            };
            ServoConfig::new(torque, max_rate, quantization, limits)?
        };

        let rd = RenderParams::default();
        let render = RenderParams {
            stiffness: kv.f64_or("stiffness", rd.stiffness)?,
            apex_height: kv.f64_or("apex_height", rd.apex_height)?,
            cone_angle: kv.f64_or("cone_angle", rd.cone_angle)?,
        };
        for (key, v) in [("stiffness", render.stiffness), ("apex_height", render.apex_height)] {
            if v <= 0.0 {
                return Err(ConfigError::Value {
                    key: key.into(),
                    message: "must be positive".into(),
                });
            }
        }
        if !(render.cone_angle > 0.0 && render.cone_angle < std::f64::consts::FRAC_PI_2) {
            return Err(ConfigError::Value {
                key: "cone_angle".into(),
                message: "must lie strictly between 0 and π/2".into(),
            });
        }

        let ed = ExperimentConfig::default();
        let experiment = ExperimentConfig {
            radii: kv.list_or("radii", &ed.radii)?,
            height: kv.f64_or("height", ed.height)?,
            angular_rate: kv.f64_or("angular_rate", ed.angular_rate)?,
            duration: kv.f64_or("duration", ed.duration)?,
            sample_rate: kv.f64_or("sample_rate", ed.sample_rate)?,
            stiffness: render.stiffness,
            noise_level: kv.f64_or("noise_level", ed.noise_level)?,
        };
        if experiment.radii.is_empty() || experiment.radii.iter().any(|r| *r < 0.0) {
            return Err(ConfigError::Value {
                key: "radii".into(),
                message: "need at least one non-negative radius".into(),
            });
        }
        if experiment.noise_level < 0.0 {
            return Err(ConfigError::Value {
                key: "noise_level".into(),
                message: "must be non-negative".into(),
            });
        }

        let grid = GridSpec::centered(
            kv.f64_or("grid_lateral", 0.05)?,
            kv.f64_or("grid_z_min", -0.09)?,
            kv.f64_or("grid_z_max", -0.01)?,
            kv.f64_or("grid_spacing", 0.001)?,
        )?;

        Ok(Self {
            geometry,
            servo,
            render,
            experiment,
            grid,
            seed: kv.u64_or("noise_seed", 0)?,
            out_dir: PathBuf::from("."),
        })
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::from_key_values(&KeyValues::default()).expect("built-in defaults are valid")
    }
}
