//! Node layouts, target trajectories and the synthetic scatterer model.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("a scene needs at least two nodes, got {0}")]
    TooFewNodes(usize),
    #[error("node {0} has a non-finite position")]
    NonFiniteNode(usize),
    #[error("trajectory waypoint times must be strictly increasing (waypoint {0})")]
    NonMonotoneTrajectory(usize),
    #[error("trajectory has no waypoints")]
    EmptyTrajectory,
    #[error("invalid scatterer model: {0}")]
    ScattererModel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub time: f64,
    pub position: Point,
}

/// Piecewise-linear target path. The target exists only between its first and
/// last waypoint, and is moving on any segment whose endpoints differ.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    waypoints: Vec<Waypoint>,
}

impl Trajectory {
    /// Waypoint times must be strictly increasing.
    pub fn new(waypoints: Vec<Waypoint>) -> Result<Self, SceneError> {
        if waypoints.is_empty() {
            return Err(SceneError::EmptyTrajectory);
        }
        if let Some(i) = waypoints.windows(2).position(|w| !(w[1].time > w[0].time)) {
            return Err(SceneError::NonMonotoneTrajectory(i + 1));
        }
        Ok(Self { waypoints })
    }

    /// A target that stands still at `position` for `[start, end]`.
    pub fn stationary(position: Point, start: f64, end: f64) -> Self {
        Self {
            waypoints: vec![Waypoint { time: start, position }, Waypoint { time: end, position }],
        }
    }

    /// Walk a closed polygon at constant `speed` (ft/s), starting at
    /// `corners[0]` at time `start` and returning to it.
    pub fn closed_path(corners: &[Point], speed: f64, start: f64) -> Self {
        let mut waypoints = vec![Waypoint {
            time: start,
            position: corners[0],
        }];
        let mut t = start;
        for c in corners.iter().skip(1).chain(std::iter::once(&corners[0])) {
            let prev = waypoints.last().unwrap().position;
            t += prev.distance(c) / speed;
            waypoints.push(Waypoint { time: t, position: *c });
        }
        Self { waypoints }
    }

    /// Small random steps around `center`: a new position uniformly inside a
    /// disc of `radius` every `step` seconds over `[start, end]`.
    pub fn jitter<R: Rng>(center: Point, radius: f64, step: f64, start: f64, end: f64, rng: &mut R) -> Self {
        let mut waypoints = Vec::new();
        let mut t = start;
        loop {
            let r = radius * rng.random::<f64>().sqrt();
            let theta = std::f64::consts::TAU * rng.random::<f64>();
            waypoints.push(Waypoint {
                time: t,
                position: Point::new(center.x + r * theta.cos(), center.y + r * theta.sin()),
            });
            if t >= end {
                break;
            }
            t = (t + step).min(end);
        }
        Self { waypoints }
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    pub fn start(&self) -> f64 {
        self.waypoints[0].time
    }

    pub fn end(&self) -> f64 {
        self.waypoints[self.waypoints.len() - 1].time
    }

    /// Index of the segment containing `t`, if `t` is inside the time span.
    fn segment(&self, t: f64) -> Option<usize> {
        if t < self.start() || t > self.end() {
            return None;
        }
        if self.waypoints.len() == 1 {
            return Some(0);
        }
        let i = self.waypoints.partition_point(|w| w.time <= t);
        Some(i.clamp(1, self.waypoints.len() - 1) - 1)
    }

    pub fn position_at(&self, t: f64) -> Option<Point> {
        let i = self.segment(t)?;
        if self.waypoints.len() == 1 {
            return Some(self.waypoints[0].position);
        }
        let (a, b) = (&self.waypoints[i], &self.waypoints[i + 1]);
        let s = (t - a.time) / (b.time - a.time);
        Some(a.position.lerp(&b.position, s))
    }

    /// Position at `t` if the target is in motion then.
    pub fn moving_at(&self, t: f64) -> Option<Point> {
        let i = self.segment(t)?;
        if self.waypoints.len() == 1 {
            return None;
        }
        let (a, b) = (&self.waypoints[i], &self.waypoints[i + 1]);
        if a.position == b.position {
            None
        } else {
            self.position_at(t)
        }
    }
}

/// Parameters of the synthetic multipath environment.
///
/// Every link gets a line-of-sight component carrying `los_fraction` of the
/// link power and `scatterers` further components whose powers decay
/// exponentially with index (e-folding length `decay`). Footprints are
/// ellipses with foci at the link endpoints; scatterer excess-path bounds are
/// uniform in `excess_range`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScattererModel {
    pub scatterers: usize,
    pub los_fraction: f64,
    pub decay: f64,
    pub excess_range: [f64; 2],
    pub los_excess: f64,
    /// Link power in dB at 1 ft.
    pub power_db_at_1ft: f64,
    pub path_loss_exponent: f64,
    /// Ratio of link power to noise power, in the K-factor sense, when
    /// nothing moves.
    pub noise_k_db: f64,
    pub quantize: bool,
}

impl Default for ScattererModel {
    fn default() -> Self {
        Self {
            scatterers: 10,
            los_fraction: 0.95,
            decay: 3.0,
            excess_range: [0.5, 4.0],
            los_excess: 0.25,
            power_db_at_1ft: -40.0,
            path_loss_exponent: 2.0,
            noise_k_db: 20.0,
            quantize: true,
        }
    }
}

impl ScattererModel {
    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |m: &str| Err(SceneError::ScattererModel(m.to_string()));
        if !(self.los_fraction > 0.0 && self.los_fraction <= 1.0) {
            return bad("los_fraction must be in (0, 1]");
        }
        if self.scatterers > 0 && self.los_fraction == 1.0 {
            return bad("los_fraction of 1 leaves no power for scatterers");
        }
        if !(self.decay > 0.0) {
            return bad("decay must be positive");
        }
        let [lo, hi] = self.excess_range;
        if !(lo > 0.0 && hi >= lo) {
            return bad("excess_range must satisfy 0 < min <= max");
        }
        if !(self.los_excess > 0.0) {
            return bad("los_excess must be positive");
        }
        if !self.power_db_at_1ft.is_finite() || !self.path_loss_exponent.is_finite() {
            return bad("power parameters must be finite");
        }
        if self.noise_k_db.is_nan() {
            return bad("noise_k_db must not be NaN");
        }
        Ok(())
    }

    /// Total multipath power (linear) for a link of length `distance` feet.
    pub fn link_power(&self, distance: f64) -> f64 {
        let db = self.power_db_at_1ft - 10.0 * self.path_loss_exponent * distance.max(1.0).log10();
        10f64.powf(db / 10.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub nodes: Vec<Point>,
    pub targets: Vec<Trajectory>,
    pub scatterer_model: ScattererModel,
}

impl Scene {
    pub fn new(
        nodes: Vec<Point>,
        targets: Vec<Trajectory>,
        scatterer_model: ScattererModel,
    ) -> Result<Self, SceneError> {
        if nodes.len() < 2 {
            return Err(SceneError::TooFewNodes(nodes.len()));
        }
        if let Some(i) = nodes.iter().position(|p| !p.is_finite()) {
            return Err(SceneError::NonFiniteNode(i));
        }
        scatterer_model.validate()?;
        Ok(Self {
            nodes,
            targets,
            scatterer_model,
        })
    }

    /// Positions of every target that is moving at time `t`.
    pub fn motion_at(&self, t: f64) -> Vec<Point> {
        self.targets.iter().filter_map(|tr| tr.moving_at(t)).collect()
    }
}

/// `count` nodes spaced evenly (by arc length) around the perimeter of an
/// axis-aligned rectangle, starting at `origin` and running counter-clockwise.
pub fn perimeter_layout(origin: Point, width: f64, height: f64, count: usize) -> Vec<Point> {
    let perimeter = 2.0 * (width + height);
    (0..count)
        .map(|i| {
            let mut s = perimeter * i as f64 / count as f64;
            if s < width {
                return Point::new(origin.x + s, origin.y);
            }
            s -= width;
            if s < height {
                return Point::new(origin.x + width, origin.y + s);
            }
            s -= height;
            if s < width {
                return Point::new(origin.x + width - s, origin.y + height);
            }
            s -= width;
            Point::new(origin.x, origin.y + height - s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn trajectory_interpolates_and_reports_motion() {
        let tr = Trajectory::new(vec![
            Waypoint {
                time: 0.0,
                position: Point::new(0.0, 0.0),
            },
            Waypoint {
                time: 2.0,
                position: Point::new(4.0, 0.0),
            },
            Waypoint {
                time: 3.0,
                position: Point::new(4.0, 0.0),
            },
        ])
        .unwrap();
        assert_eq!(tr.position_at(1.0), Some(Point::new(2.0, 0.0)));
        assert_eq!(tr.moving_at(1.0), Some(Point::new(2.0, 0.0)));
        assert_eq!(tr.position_at(2.5), Some(Point::new(4.0, 0.0)));
        assert_eq!(tr.moving_at(2.5), None);
        assert_eq!(tr.position_at(3.5), None);
        assert_eq!(tr.position_at(-0.1), None);
    }

    #[test]
    fn trajectory_rejects_non_monotone_times() {
        let w = |t| Waypoint {
            time: t,
            position: Point::ORIGIN,
        };
        assert!(Trajectory::new(vec![w(0.0), w(1.0), w(1.0)]).is_err());
        assert!(Trajectory::new(vec![]).is_err());
    }

    #[test]
    fn closed_path_returns_to_start_at_constant_speed() {
        let corners = [Point::new(0.0, 0.0), Point::new(3.0, 0.0), Point::new(3.0, 4.0)];
        let tr = Trajectory::closed_path(&corners, 2.0, 1.0);
        assert_eq!(tr.waypoints().len(), 4);
        assert_eq!(tr.end(), 1.0 + 12.0 / 2.0);
        assert_eq!(tr.position_at(tr.end()), Some(corners[0]));
    }

    #[test]
    fn jitter_stays_in_disc() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let c = Point::new(5.0, 5.0);
        let tr = Trajectory::jitter(c, 0.75, 0.5, 0.0, 10.0, &mut rng);
        assert_eq!(tr.end(), 10.0);
        assert!(tr.waypoints().iter().all(|w| w.position.distance(&c) <= 0.75));
    }

    #[test]
    fn perimeter_layout_spacing() {
        let nodes = perimeter_layout(Point::ORIGIN, 26.0, 30.0, 34);
        assert_eq!(nodes.len(), 34);
        assert_eq!(nodes[0], Point::ORIGIN);
        for p in &nodes {
            let on_edge =
                p.x.abs() < 1e-9 || (p.x - 26.0).abs() < 1e-9 || p.y.abs() < 1e-9 || (p.y - 30.0).abs() < 1e-9;
            assert!(on_edge, "{p:?}");
        }
    }

    #[test]
    fn scene_validation() {
        let m = ScattererModel::default();
        assert_eq!(
            Scene::new(vec![Point::ORIGIN], vec![], m.clone()).unwrap_err(),
            SceneError::TooFewNodes(1)
        );
        assert!(Scene::new(vec![Point::ORIGIN, Point::new(f64::NAN, 0.0)], vec![], m).is_err());
    }
}
