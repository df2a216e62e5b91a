//! Skeleton definitions in TOML.
//!
//! ```toml
//! joints = ["head", "neck", "hip_r", "knee_r"]
//! body_subset = ["head", "neck", "hip_r", "knee_r"]
//! limbs = [["head", "neck"], ["hip_r", "knee_r"]]
//!
//! [lengths_m]
//! "head/neck" = 0.19
//! "hip_r/knee_r" = 0.45
//!
//! [com_weights]
//! head = 0.3
//! "hip_r/knee_r" = 0.7
//! ```
//!
//! Keys of `lengths_m` and `com_weights` join two joint names with `/`; a
//! single name in `com_weights` is a point mass.

use std::path::Path;

use ptzcap_core::skeleton::{SkeletonDefinition, SkeletonModel};
use serde::{Deserialize, Serialize};

use crate::error::FormatError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SkeletonToml {
    joints: Vec<String>,
    #[serde(default)]
    body_subset: Vec<String>,
    limbs: Vec<[String; 2]>,
    lengths_m: toml::Table,
    com_weights: toml::Table,
}

fn number(key: &str, v: &toml::Value) -> Result<f64, FormatError> {
    match v {
        toml::Value::Float(x) => Ok(*x),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(FormatError::Toml(format!("`{key}` must be a number"))),
    }
}

pub fn parse_skeleton(text: &str) -> Result<SkeletonModel, FormatError> {
    let raw: SkeletonToml = toml::from_str(text).map_err(|e| FormatError::Toml(e.to_string()))?;
    let mut lengths_m = Vec::with_capacity(raw.lengths_m.len());
    for (key, v) in &raw.lengths_m {
        let (a, b) = key
            .split_once('/')
            .ok_or_else(|| FormatError::Toml(format!("length key `{key}` must be `joint/joint`")))?;
        lengths_m.push(((a.to_owned(), b.to_owned()), number(key, v)?));
    }
    let com_weights = raw
        .com_weights
        .iter()
        .map(|(key, v)| Ok((key.split('/').map(str::to_owned).collect(), number(key, v)?)))
        .collect::<Result<Vec<_>, FormatError>>()?;
    let def = SkeletonDefinition {
        joints: raw.joints,
        body_subset: raw.body_subset,
        limbs: raw.limbs.into_iter().map(|[a, b]| (a, b)).collect(),
        lengths_m,
        com_weights,
    };
    SkeletonModel::from_definition(&def).map_err(|e| FormatError::Toml(e.to_string()))
}

pub fn render_skeleton(skel: &SkeletonModel) -> String {
    let def = skel.to_definition();
    let raw = SkeletonToml {
        joints: def.joints,
        body_subset: def.body_subset,
        limbs: def.limbs.into_iter().map(|(a, b)| [a, b]).collect(),
        lengths_m: def
            .lengths_m
            .into_iter()
            .map(|((a, b), l)| (format!("{a}/{b}"), toml::Value::Float(l)))
            .collect(),
        com_weights: def
            .com_weights
            .into_iter()
            .map(|(names, w)| (names.join("/"), toml::Value::Float(w)))
            .collect(),
    };
    toml::to_string(&raw).expect("skeleton tables serialize")
}

pub fn load_skeleton(path: &Path) -> Result<SkeletonModel, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::Open {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_skeleton(&text)
}

pub fn save_skeleton(skel: &SkeletonModel, path: &Path) -> Result<(), FormatError> {
    std::fs::write(path, render_skeleton(skel)).map_err(FormatError::Io)
}
