//! Planar geometry shared by the channel model and the weight matrix.

use serde::{Deserialize, Serialize};

/// A point in the measurement plane, in feet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Linear interpolation, `t = 0` at `self` and `t = 1` at `other`.
    pub fn lerp(&self, other: &Point, t: f64) -> Point {
        Point::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }
}

impl From<[f64; 2]> for Point {
    fn from(p: [f64; 2]) -> Self {
        Point::new(p[0], p[1])
    }
}

/// Ellipse with foci at two node positions and a bound on excess path length.
///
/// A point is inside when the path through it from one focus to the other is
/// shorter than the direct path plus `excess`. The boundary itself is outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub focus_a: Point,
    pub focus_b: Point,
    pub excess: f64,
}

impl Ellipse {
    pub fn new(focus_a: Point, focus_b: Point, excess: f64) -> Self {
        Self {
            focus_a,
            focus_b,
            excess,
        }
    }

    /// Path length through `p` minus the focal distance.
    pub fn excess_path(&self, p: &Point) -> f64 {
        p.distance(&self.focus_a) + p.distance(&self.focus_b) - self.focus_a.distance(&self.focus_b)
    }

    pub fn contains(&self, p: &Point) -> bool {
        let d = self.focus_a.distance(&self.focus_b);
        p.distance(&self.focus_a) + p.distance(&self.focus_b) < d + self.excess
    }
}
