use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::geometry::{direction_to_vector, Vector3};
use super::robot::RobotModel;
use super::score::LabanScore;
use super::symbols::BodyColumn;
use super::LabanError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointKeyframe {
    pub time: f64,
    pub angles: BTreeMap<String, f64>,
}

/// Joint-angle keyframes in radians. Times strictly increase and every
/// keyframe carries the same joint set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TimelineRepr")]
pub struct JointTimeline {
    keyframes: Vec<JointKeyframe>,
    duration: f64,
}

#[derive(Deserialize)]
struct TimelineRepr {
    keyframes: Vec<JointKeyframe>,
    duration: f64,
}

impl TryFrom<TimelineRepr> for JointTimeline {
    type Error = LabanError;

    fn try_from(repr: TimelineRepr) -> Result<Self, Self::Error> {
        JointTimeline::new(repr.keyframes, repr.duration)
    }
}

impl JointTimeline {
    pub fn new(keyframes: Vec<JointKeyframe>, duration: f64) -> Result<Self, LabanError> {
        let Some(first) = keyframes.first() else {
            return Err(LabanError::schema("keyframes", "timeline has no keyframes"));
        };
        if first.time != 0.0 {
            return Err(LabanError::schema("keyframes[0].time", "timeline must start at 0"));
        }
        for (i, pair) in keyframes.windows(2).enumerate() {
            if pair[1].time <= pair[0].time {
                return Err(LabanError::schema(
                    format!("keyframes[{}].time", i + 1),
                    "non-increasing time",
                ));
            }
            if !pair[1].angles.keys().eq(pair[0].angles.keys()) {
                return Err(LabanError::schema(
                    format!("keyframes[{}].angles", i + 1),
                    "joint set differs from previous keyframe",
                ));
            }
        }
        let last = keyframes.last().map(|k| k.time).unwrap_or(0.0);
        if !duration.is_finite() || duration < last {
            return Err(LabanError::schema("duration", "duration precedes last keyframe"));
        }
        Ok(Self { keyframes, duration })
    }

    pub fn keyframes(&self) -> &[JointKeyframe] {
        &self.keyframes
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Linearly interpolated pose at `t`; holds the final pose after the last
    /// keyframe.
    pub fn sample(&self, t: f64) -> Result<BTreeMap<String, f64>, LabanError> {
        if !(0.0..=self.duration).contains(&t) {
            return Err(LabanError::OutOfRange { t, duration: self.duration });
        }
        // index of the first keyframe strictly after t
        let next = self.keyframes.partition_point(|k| k.time <= t);
        let prev = &self.keyframes[next - 1];
        if prev.time == t || next == self.keyframes.len() {
            return Ok(prev.angles.clone());
        }
        let after = &self.keyframes[next];
        let u = (t - prev.time) / (after.time - prev.time);
        Ok(prev
            .angles
            .iter()
            .map(|(joint, &a)| {
                let b = after.angles[joint];
                (joint.clone(), a + (b - a) * u)
            })
            .collect())
    }
}

/// A decoded angle that fell outside its joint limits and was clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct ClampWarning {
    pub time: f64,
    pub joint: String,
    pub requested: f64,
    pub applied: f64,
}

impl std::fmt::Display for ClampWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "t={}: joint {} clamped from {:.6} to {:.6} rad",
            self.time, self.joint, self.requested, self.applied
        )
    }
}

pub fn decode(score: &LabanScore, model: &RobotModel) -> Result<JointTimeline, LabanError> {
    let (timeline, warnings) = decode_with_warnings(score, model)?;
    for w in &warnings {
        tracing::warn!(robot = model.name(), "{w}");
    }
    Ok(timeline)
}

pub fn decode_with_warnings(
    score: &LabanScore,
    model: &RobotModel,
) -> Result<(JointTimeline, Vec<ClampWarning>), LabanError> {
    model.require_all_columns()?;
    let mut warnings = Vec::new();
    let mut keyframes = Vec::with_capacity(score.keyframes().len());

    for (time, pose) in score.resolved_poses() {
        let mut vectors = BTreeMap::new();
        for (column, cell) in &pose {
            vectors.insert(*column, direction_to_vector(cell.direction(), cell.level())?);
        }
        let mut raw: BTreeMap<&str, f64> = BTreeMap::new();
        for column in BodyColumn::ALL {
            let joints = model.column_joints(column).expect("checked above");
            let v = vectors[&column];
            match column.parent() {
                Some(parent) => {
                    let upper: &Vector3 = &vectors[&parent];
                    raw.insert(&joints[0], upper.angle_to(&v));
                }
                None => {
                    raw.insert(&joints[0], v.azimuth());
                    raw.insert(&joints[1], v.elevation());
                }
            }
        }
        let mut angles = BTreeMap::new();
        for joint in model.joints() {
            let requested = raw.get(joint.name.as_str()).copied().unwrap_or(0.0);
            let applied = joint.clamp(requested);
            if applied != requested && raw.contains_key(joint.name.as_str()) {
                warnings.push(ClampWarning { time, joint: joint.name.clone(), requested, applied });
            }
            angles.insert(joint.name.clone(), applied);
        }
        keyframes.push(JointKeyframe { time, angles });
    }
    let timeline = JointTimeline::new(keyframes, score.duration())?;
    Ok((timeline, warnings))
}

pub fn sample(timeline: &JointTimeline, t: f64) -> Result<BTreeMap<String, f64>, LabanError> {
    timeline.sample(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn two_point() -> JointTimeline {
        let kf = |time: f64, a: f64| JointKeyframe {
            time,
            angles: [("j".to_string(), a)].into_iter().collect(),
        };
        JointTimeline::new(vec![kf(0.0, 0.0), kf(2.0, PI)], 3.0).unwrap()
    }

    #[test]
    fn midpoint_and_endpoints() {
        let tl = two_point();
        assert_eq!(tl.sample(1.0).unwrap()["j"], PI / 2.0);
        assert_eq!(tl.sample(0.0).unwrap()["j"], 0.0);
        assert_eq!(tl.sample(2.0).unwrap()["j"], PI);
    }

    #[test]
    fn holds_after_last_keyframe() {
        let tl = two_point();
        assert_eq!(tl.sample(2.5).unwrap()["j"], PI);
        assert_eq!(tl.sample(3.0).unwrap()["j"], PI);
    }

    #[test]
    fn out_of_range() {
        let tl = two_point();
        assert!(matches!(tl.sample(-0.1), Err(LabanError::OutOfRange { .. })));
        assert!(matches!(tl.sample(3.01), Err(LabanError::OutOfRange { .. })));
        assert!(tl.sample(f64::NAN).is_err());
    }

    #[test]
    fn timeline_validation() {
        let kf = |time: f64, joint: &str| JointKeyframe {
            time,
            angles: [(joint.to_string(), 0.0)].into_iter().collect(),
        };
        assert!(JointTimeline::new(vec![kf(0.0, "a"), kf(1.0, "b")], 1.0).is_err());
        assert!(JointTimeline::new(vec![kf(0.0, "a"), kf(0.0, "a")], 1.0).is_err());
        assert!(JointTimeline::new(vec![], 1.0).is_err());
        let json = r#"{"keyframes":[{"time":0.5,"angles":{}}],"duration":1.0}"#;
        assert!(serde_json::from_str::<JointTimeline>(json).is_err());
    }
}
