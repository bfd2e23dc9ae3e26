use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::symbols::BodyColumn;
use super::LabanError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

impl JointSpec {
    pub fn clamp(&self, angle: f64) -> f64 {
        angle.clamp(self.min, self.max)
    }
}

/// A robot's joints and the mapping from score columns onto them.
///
/// Upper-arm and head columns map to `[azimuth, elevation]` joints; lower-arm
/// columns map to a single elbow-flexion joint.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RobotModel {
    name: String,
    joints: Vec<JointSpec>,
    column_joint_map: BTreeMap<BodyColumn, Vec<String>>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RawModel {
    name: String,
    joints: Vec<JointSpec>,
    column_joint_map: BTreeMap<String, Vec<String>>,
}

impl RobotModel {
    pub fn new(
        name: impl Into<String>,
        joints: Vec<JointSpec>,
        column_joint_map: BTreeMap<BodyColumn, Vec<String>>,
    ) -> Result<Self, LabanError> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(LabanError::InvalidModel("model name is empty".into()));
        }
        let mut declared = BTreeSet::new();
        for joint in &joints {
            if !(joint.min.is_finite() && joint.max.is_finite() && joint.min < joint.max) {
                return Err(LabanError::InvalidModel(format!(
                    "joint {} has invalid limits [{}, {}]",
                    joint.name, joint.min, joint.max
                )));
            }
            if !declared.insert(joint.name.as_str()) {
                return Err(LabanError::InvalidModel(format!(
                    "joint {} declared twice",
                    joint.name
                )));
            }
        }
        let mut mapped = BTreeSet::new();
        for (column, names) in &column_joint_map {
            if names.len() != column.joint_arity() {
                return Err(LabanError::InvalidModel(format!(
                    "column {column} needs {} joint(s), got {}",
                    column.joint_arity(),
                    names.len()
                )));
            }
            for joint in names {
                if !declared.contains(joint.as_str()) {
                    return Err(LabanError::InvalidModel(format!(
                        "column {column} references undeclared joint {joint}"
                    )));
                }
                if !mapped.insert(joint.as_str()) {
                    return Err(LabanError::InvalidModel(format!("joint {joint} mapped twice")));
                }
            }
        }
        Ok(Self { name, joints, column_joint_map })
    }

    pub fn from_json(text: &str) -> Result<Self, LabanError> {
        let raw: RawModel = serde_json::from_str(text).map_err(|e| {
            if e.is_data() {
                LabanError::InvalidModel(e.to_string())
            } else {
                LabanError::Syntax { line: e.line(), column: e.column(), message: e.to_string() }
            }
        })?;
        let mut map = BTreeMap::new();
        for (token, joints) in raw.column_joint_map {
            let column: BodyColumn = token
                .parse()
                .map_err(|_| LabanError::InvalidModel(format!("unknown column \"{token}\"")))?;
            map.insert(column, joints);
        }
        Self::new(raw.name, raw.joints, map)
    }

    pub fn load(path: &Path) -> Result<Self, LabanError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabanError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization is infallible")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn joints(&self) -> &[JointSpec] {
        &self.joints
    }

    pub fn joint(&self, name: &str) -> Option<&JointSpec> {
        self.joints.iter().find(|j| j.name == name)
    }

    pub fn column_joints(&self, column: BodyColumn) -> Option<&[String]> {
        self.column_joint_map.get(&column).map(Vec::as_slice)
    }

    /// Fails with `ModelMismatch` unless every column is mapped.
    pub fn require_all_columns(&self) -> Result<(), LabanError> {
        for column in BodyColumn::ALL {
            if self.column_joints(column).is_none() {
                return Err(LabanError::ModelMismatch {
                    column,
                    message: format!("model {} has no joints for column {column}", self.name),
                });
            }
        }
        Ok(())
    }

    /// The model with left and right column mappings exchanged.
    pub fn column_swapped(&self) -> RobotModel {
        let column_joint_map = self
            .column_joint_map
            .iter()
            .map(|(c, j)| (c.mirrored(), j.clone()))
            .collect();
        RobotModel { name: self.name.clone(), joints: self.joints.clone(), column_joint_map }
    }
}
