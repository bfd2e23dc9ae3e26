//! Direction, level and body-column symbols of the supported Labanotation subset.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Horizontal direction symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Direction {
    Place,
    Forward,
    Back,
    Left,
    Right,
    LeftForward,
    RightForward,
    LeftBack,
    RightBack,
}

impl Direction {
    pub const ALL: [Direction; 9] = [
        Direction::Place,
        Direction::Forward,
        Direction::Back,
        Direction::Left,
        Direction::Right,
        Direction::LeftForward,
        Direction::RightForward,
        Direction::LeftBack,
        Direction::RightBack,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Direction::Place => "place",
            Direction::Forward => "forward",
            Direction::Back => "back",
            Direction::Left => "left",
            Direction::Right => "right",
            Direction::LeftForward => "leftForward",
            Direction::RightForward => "rightForward",
            Direction::LeftBack => "leftBack",
            Direction::RightBack => "rightBack",
        }
    }

    /// Left/right reflection; forward, back and place are their own mirror.
    pub fn mirrored(self) -> Direction {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
            Direction::LeftForward => Direction::RightForward,
            Direction::RightForward => Direction::LeftForward,
            Direction::LeftBack => Direction::RightBack,
            Direction::RightBack => Direction::LeftBack,
            other => other,
        }
    }
}

/// Vertical level symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Level {
    High,
    Middle,
    Low,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::High, Level::Middle, Level::Low];

    pub fn token(self) -> &'static str {
        match self {
            Level::High => "high",
            Level::Middle => "middle",
            Level::Low => "low",
        }
    }
}

/// Body part track of a score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum BodyColumn {
    RightUpperArm,
    RightLowerArm,
    LeftUpperArm,
    LeftLowerArm,
    Head,
}

impl BodyColumn {
    pub const ALL: [BodyColumn; 5] = [
        BodyColumn::RightUpperArm,
        BodyColumn::RightLowerArm,
        BodyColumn::LeftUpperArm,
        BodyColumn::LeftLowerArm,
        BodyColumn::Head,
    ];

    pub fn token(self) -> &'static str {
        match self {
            BodyColumn::RightUpperArm => "rightUpperArm",
            BodyColumn::RightLowerArm => "rightLowerArm",
            BodyColumn::LeftUpperArm => "leftUpperArm",
            BodyColumn::LeftLowerArm => "leftLowerArm",
            BodyColumn::Head => "head",
        }
    }

    pub fn mirrored(self) -> BodyColumn {
        match self {
            BodyColumn::RightUpperArm => BodyColumn::LeftUpperArm,
            BodyColumn::RightLowerArm => BodyColumn::LeftLowerArm,
            BodyColumn::LeftUpperArm => BodyColumn::RightUpperArm,
            BodyColumn::LeftLowerArm => BodyColumn::RightLowerArm,
            BodyColumn::Head => BodyColumn::Head,
        }
    }

    /// Number of joints the column drives in a robot model: azimuth and
    /// elevation for upper arms and head, elbow flexion for lower arms.
    pub fn joint_arity(self) -> usize {
        match self {
            BodyColumn::RightLowerArm | BodyColumn::LeftLowerArm => 1,
            _ => 2,
        }
    }

    /// The upper-arm column a lower-arm column hangs from.
    pub fn parent(self) -> Option<BodyColumn> {
        match self {
            BodyColumn::RightLowerArm => Some(BodyColumn::RightUpperArm),
            BodyColumn::LeftLowerArm => Some(BodyColumn::LeftUpperArm),
            _ => None,
        }
    }
}

/// A token that is not part of the symbol vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownToken(pub String);

macro_rules! token_impls {
    ($ty:ty) => {
        impl FromStr for $ty {
            type Err = UnknownToken;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                <$ty>::ALL
                    .iter()
                    .copied()
                    .find(|v| v.token() == s)
                    .ok_or_else(|| UnknownToken(s.to_string()))
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.token())
            }
        }
    };
}

token_impls!(Direction);
token_impls!(Level);
token_impls!(BodyColumn);

/// One direction/level symbol placed in a body column.
///
/// Construction rejects `(Place, Middle)`, which names no limb direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LabanCell {
    column: BodyColumn,
    direction: Direction,
    level: Level,
}

impl LabanCell {
    pub fn new(column: BodyColumn, direction: Direction, level: Level) -> Option<Self> {
        if direction == Direction::Place && level == Level::Middle {
            return None;
        }
        Some(Self { column, direction, level })
    }

    pub fn column(&self) -> BodyColumn {
        self.column
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn level(&self) -> Level {
        self.level
    }

    /// Reflect the cell through the body's sagittal plane.
    pub fn mirrored(&self) -> LabanCell {
        LabanCell {
            column: self.column.mirrored(),
            direction: self.direction.mirrored(),
            level: self.level,
        }
    }
}

/// Every legal (direction, level) pair: 9 x 3 minus (place, middle).
pub fn legal_symbols() -> impl Iterator<Item = (Direction, Level)> {
    Direction::ALL.into_iter().flat_map(|d| {
        Level::ALL
            .into_iter()
            .filter(move |&l| !(d == Direction::Place && l == Level::Middle))
            .map(move |l| (d, l))
    })
}
