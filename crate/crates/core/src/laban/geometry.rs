//! Body-frame vectors for direction/level symbols.
//!
//! Frame: +X toward the robot's right, +Y forward, +Z up. High and low
//! tilt the horizontal direction by 45 degrees; `place` points straight up
//! (high) or down (low).

use std::f64::consts::FRAC_1_SQRT_2;

use super::symbols::{Direction, Level};
use super::LabanError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vector3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vector3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(&self, other: &Vector3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Heading about +Z, measured from +Y toward +X, in (-pi, pi].
    pub fn azimuth(&self) -> f64 {
        self.x.atan2(self.y)
    }

    pub fn elevation(&self) -> f64 {
        self.z.clamp(-1.0, 1.0).asin()
    }

    /// Angle between two unit vectors, in [0, pi].
    pub fn angle_to(&self, other: &Vector3) -> f64 {
        self.dot(other).clamp(-1.0, 1.0).acos()
    }
}

fn horizontal(direction: Direction) -> (f64, f64) {
    const D: f64 = FRAC_1_SQRT_2;
    match direction {
        Direction::Forward => (0.0, 1.0),
        Direction::Back => (0.0, -1.0),
        Direction::Right => (1.0, 0.0),
        Direction::Left => (-1.0, 0.0),
        Direction::RightForward => (D, D),
        Direction::LeftForward => (-D, D),
        Direction::RightBack => (D, -D),
        Direction::LeftBack => (-D, -D),
        Direction::Place => (0.0, 0.0),
    }
}

pub fn direction_to_vector(direction: Direction, level: Level) -> Result<Vector3, LabanError> {
    if direction == Direction::Place {
        return match level {
            Level::High => Ok(Vector3::new(0.0, 0.0, 1.0)),
            Level::Low => Ok(Vector3::new(0.0, 0.0, -1.0)),
            Level::Middle => Err(LabanError::IllegalCell { direction, level }),
        };
    }
    let (hx, hy) = horizontal(direction);
    let (scale, z) = match level {
        Level::Middle => (1.0, 0.0),
        Level::High => (FRAC_1_SQRT_2, FRAC_1_SQRT_2),
        Level::Low => (FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    };
    Ok(Vector3::new(hx * scale, hy * scale, z))
}
