use std::collections::BTreeMap;

use super::symbols::{BodyColumn, LabanCell};
use super::LabanError;

/// Cells that change at one instant. Columns absent from `cells` hold the
/// value of the most recent earlier keyframe.
#[derive(Debug, Clone, PartialEq)]
pub struct LabanKeyframe {
    time: f64,
    cells: BTreeMap<BodyColumn, LabanCell>,
}

impl LabanKeyframe {
    pub fn new(
        time: f64,
        cells: impl IntoIterator<Item = LabanCell>,
    ) -> Result<Self, LabanError> {
        if !time.is_finite() || time < 0.0 {
            return Err(LabanError::schema("time", format!("invalid keyframe time {time}")));
        }
        let mut map = BTreeMap::new();
        for cell in cells {
            if map.insert(cell.column(), cell).is_some() {
                return Err(LabanError::schema(
                    format!("cells.{}", cell.column()),
                    "column specified twice",
                ));
            }
        }
        if map.is_empty() {
            return Err(LabanError::schema("cells", "keyframe has no cells"));
        }
        Ok(Self { time, cells: map })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn cells(&self) -> &BTreeMap<BodyColumn, LabanCell> {
        &self.cells
    }

    pub fn cell(&self, column: BodyColumn) -> Option<&LabanCell> {
        self.cells.get(&column)
    }

    pub(crate) fn with_time(&self, time: f64) -> Self {
        Self { time, cells: self.cells.clone() }
    }
}

/// A timed, validated sequence of keyframes.
///
/// Invariants: at least one keyframe, the first at `t = 0` naming all five
/// columns, strictly increasing times, and `duration >= last keyframe time`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabanScore {
    keyframes: Vec<LabanKeyframe>,
    duration: f64,
}

impl LabanScore {
    pub fn new(keyframes: Vec<LabanKeyframe>, duration: f64) -> Result<Self, LabanError> {
        let Some(first) = keyframes.first() else {
            return Err(LabanError::schema("keyframes", "score has no keyframes"));
        };
        if first.time != 0.0 {
            return Err(LabanError::schema(
                "keyframes[0].time",
                format!("first keyframe must be at time 0, found {}", first.time),
            ));
        }
        for column in BodyColumn::ALL {
            if first.cell(column).is_none() {
                return Err(LabanError::schema(
                    format!("keyframes[0].cells.{column}"),
                    "missing column at time 0",
                ));
            }
        }
        for (i, pair) in keyframes.windows(2).enumerate() {
            if pair[1].time <= pair[0].time {
                return Err(LabanError::schema(
                    format!("keyframes[{}].time", i + 1),
                    format!("non-increasing time {} after {}", pair[1].time, pair[0].time),
                ));
            }
        }
        let last = keyframes.last().map(|k| k.time).unwrap_or(0.0);
        if !duration.is_finite() || duration < last {
            return Err(LabanError::schema(
                "duration",
                format!("duration {duration} is shorter than last keyframe time {last}"),
            ));
        }
        Ok(Self { keyframes, duration })
    }

    pub fn keyframes(&self) -> &[LabanKeyframe] {
        &self.keyframes
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Fully specified pose at each keyframe, with held columns filled in.
    pub fn resolved_poses(&self) -> Vec<(f64, BTreeMap<BodyColumn, LabanCell>)> {
        let mut current: BTreeMap<BodyColumn, LabanCell> = BTreeMap::new();
        self.keyframes
            .iter()
            .map(|kf| {
                current.extend(kf.cells.iter().map(|(c, cell)| (*c, *cell)));
                (kf.time, current.clone())
            })
            .collect()
    }

    /// The score reflected left/right: columns and directions swap sides.
    pub fn mirrored(&self) -> LabanScore {
        let keyframes = self
            .keyframes
            .iter()
            .map(|kf| LabanKeyframe {
                time: kf.time,
                cells: kf
                    .cells
                    .values()
                    .map(|c| {
                        let m = c.mirrored();
                        (m.column(), m)
                    })
                    .collect(),
            })
            .collect();
        LabanScore { keyframes, duration: self.duration }
    }
}
