//! Scenario configuration.
//!
//! Every section has defaults, so an empty file is a valid scenario. The
//! `[reconstruction]` table is all-or-nothing: once present, each of its
//! parameters must be given.

use std::path::Path;

use anyhow::{bail, Context, Result};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use vrti::estimator::{LinkMode, VoxelGrid};
use vrti::netsim::Schedule;
use vrti::pipeline::Spot;
use vrti::scene::{perimeter_layout, ScattererModel, Scene, Trajectory};
use vrti::{seed, Point};

use rand::SeedableRng;

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub layout: Layout,
    /// Defaults to the bounding box of the layout.
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub reconstruction: Reconstruction,
    #[serde(default)]
    pub scatterer: ScattererModel,
    #[serde(default)]
    pub trajectory: TrajectorySpec,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub tracker: TrackerConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Layout {
    /// `count` nodes evenly spaced around a `width` x `height` rectangle.
    Perimeter {
        #[serde(default)]
        origin: [f64; 2],
        width: f64,
        height: f64,
        count: usize,
    },
    Explicit {
        nodes: Vec<[f64; 2]>,
    },
}

impl Default for Layout {
    fn default() -> Self {
        Layout::Perimeter {
            origin: [0.0, 0.0],
            width: 26.0,
            height: 30.0,
            count: 34,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub origin: [f64; 2],
    pub width: usize,
    pub height: usize,
}

/// Image reconstruction parameters. `delta_c` and `sigma_x2` are carried
/// for completeness; the estimator does not use them.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reconstruction {
    pub pixel_width: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub psi: f64,
    pub n_buffer: usize,
    pub delta_c: f64,
    pub sigma_x2: f64,
    #[serde(default = "default_link_mode")]
    pub link_mode: LinkMode,
}

fn default_link_mode() -> LinkMode {
    LinkMode::Reciprocal
}

impl Default for Reconstruction {
    fn default() -> Self {
        Self {
            pixel_width: 1.5,
            lambda: 0.1,
            alpha: 10.0,
            psi: 60.0,
            n_buffer: 136,
            delta_c: 5.0,
            sigma_x2: 0.5,
            link_mode: LinkMode::Reciprocal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrajectorySpec {
    None,
    /// Walk the closed polygon `corners` once at `speed` ft/s.
    Path {
        corners: Vec<[f64; 2]>,
        speed: f64,
        #[serde(default)]
        start: f64,
    },
    /// Dwell `dwell` seconds at each spot in turn, stepping to a random point
    /// within `radius` of it every `step` seconds.
    Spots {
        spots: Vec<[f64; 2]>,
        dwell: f64,
        radius: f64,
        step: f64,
    },
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        TrajectorySpec::Path {
            corners: vec![[5.0, 5.0], [21.0, 5.0], [21.0, 25.0], [5.0, 25.0]],
            speed: 0.5,
            start: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    /// Seconds per successful transmission. Not fixed by the method; the
    /// default gives roughly 29 rounds per second with 34 nodes.
    pub slot: f64,
    /// Seconds waited for a lost token. Defaults to twice `slot`.
    pub timeout: Option<f64>,
    pub loss: f64,
    /// Campaign length in seconds. Defaults to the end of the trajectory.
    pub duration: Option<f64>,
    /// Token order. Defaults to `0..n`.
    pub node_order: Option<Vec<usize>>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            slot: 0.001,
            timeout: None,
            loss: 0.0,
            duration: None,
            node_order: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerConfig {
    pub vm: f64,
    pub vn: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self { vm: 0.01, vn: 5.0 }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub loss: Option<f64>,
    pub vm: Option<f64>,
    pub vn: Option<f64>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Read `path`, or use the defaults when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Self::from_toml(&text).with_context(|| format!("invalid config {}", p.display()))
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(l) = o.loss {
            self.schedule.loss = l;
        }
        if let Some(v) = o.vm {
            self.tracker.vm = v;
        }
        if let Some(v) = o.vn {
            self.tracker.vn = v;
        }
    }

    pub fn nodes(&self) -> Vec<Point> {
        match &self.layout {
            Layout::Perimeter {
                origin,
                width,
                height,
                count,
            } => perimeter_layout(Point::from(*origin), *width, *height, *count),
            Layout::Explicit { nodes } => nodes.iter().copied().map(Point::from).collect(),
        }
    }

    pub fn grid(&self) -> Result<VoxelGrid> {
        let px = self.reconstruction.pixel_width;
        let grid = match &self.grid {
            Some(g) => VoxelGrid::new(Point::from(g.origin), g.width, g.height, px)?,
            None => {
                let nodes = self.nodes();
                if nodes.is_empty() {
                    bail!("layout has no nodes");
                }
                let (mut lo, mut hi) = (nodes[0], nodes[0]);
                for p in &nodes {
                    lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
                    hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
                }
                VoxelGrid::covering(lo, hi.x - lo.x, hi.y - lo.y, px)?
            }
        };
        Ok(grid)
    }

    pub fn schedule(&self) -> Result<Schedule> {
        let n = self.nodes().len();
        let s = &self.schedule;
        let timeout = s.timeout.unwrap_or(2.0 * s.slot);
        let order = s.node_order.clone().unwrap_or_else(|| (0..n).collect());
        if order.len() != n {
            bail!("schedule.node_order lists {} nodes but the layout has {n}", order.len());
        }
        Ok(Schedule::new(order, s.slot, timeout)?)
    }

    /// Build the simulated world. Spot jitter is drawn from the scenario seed.
    pub fn scenario(&self) -> Result<Scenario> {
        let nodes = self.nodes();
        let grid = self.grid()?;
        let (targets, truth) = match &self.trajectory {
            TrajectorySpec::None => (vec![], Truth::None),
            TrajectorySpec::Path { corners, speed, start } => {
                if corners.len() < 2 {
                    bail!("trajectory.corners needs at least two points");
                }
                if !(*speed > 0.0) {
                    bail!("trajectory.speed must be positive");
                }
                let corners: Vec<Point> = corners.iter().copied().map(Point::from).collect();
                let tr = Trajectory::closed_path(&corners, *speed, *start);
                (vec![tr.clone()], Truth::Path(tr))
            }
            TrajectorySpec::Spots {
                spots,
                dwell,
                radius,
                step,
            } => {
                if !(*dwell > 0.0 && *step > 0.0 && *radius >= 0.0) {
                    bail!("trajectory dwell and step must be positive and radius non-negative");
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(self.seed, &[seed::label::TRAJECTORY]));
                let mut targets = Vec::new();
                let mut marks = Vec::new();
                for (k, c) in spots.iter().enumerate() {
                    let (start, end) = (k as f64 * dwell, (k + 1) as f64 * dwell);
                    let position = Point::from(*c);
                    targets.push(Trajectory::jitter(position, *radius, *step, start, end, &mut rng));
                    marks.push(Spot { start, end, position });
                }
                (targets, Truth::Spots(marks))
            }
        };
        for p in truth.positions() {
            if !grid.contains(&p) {
                bail!("trajectory point ({}, {}) lies outside the image grid", p.x, p.y);
            }
        }
        let duration = match self.schedule.duration {
            Some(d) => d,
            None => match &truth {
                Truth::None => 60.0,
                Truth::Path(tr) => tr.end(),
                Truth::Spots(s) => s.last().map_or(60.0, |s| s.end),
            },
        };
        let scene = Scene::new(nodes, targets, self.scatterer.clone())?;
        Ok(Scenario {
            scene,
            grid,
            schedule: self.schedule()?,
            duration,
            truth,
        })
    }
}

/// Ground truth known to the experimenter.
#[derive(Debug, Clone, PartialEq)]
pub enum Truth {
    None,
    Path(Trajectory),
    Spots(Vec<Spot>),
}

impl Truth {
    fn positions(&self) -> Vec<Point> {
        match self {
            Truth::None => vec![],
            Truth::Path(tr) => tr.waypoints().iter().map(|w| w.position).collect(),
            Truth::Spots(s) => s.iter().map(|s| s.position).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub scene: Scene,
    pub grid: VoxelGrid,
    pub schedule: Schedule,
    pub duration: f64,
    pub truth: Truth,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = ScenarioConfig::from_toml("").unwrap();
        assert_eq!(c, ScenarioConfig::default());
        assert_eq!(c.nodes().len(), 34);
        let g = c.grid().unwrap();
        assert_eq!((g.width, g.height), (18, 20));
    }

    #[test]
    fn partial_reconstruction_table_names_missing_field() {
        let text = "[reconstruction]\npixel_width = 1.5\nlambda = 0.1\npsi = 60\nn_buffer = 136\ndelta_c = 5\nsigma_x2 = 0.5\n";
        let err = format!("{:#}", ScenarioConfig::from_toml(text).unwrap_err());
        assert!(err.contains("alpha"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ScenarioConfig::from_toml("sed = 3").is_err());
        assert!(ScenarioConfig::from_toml("[tracker]\nvm = 0.1\nvx = 2").is_err());
    }

    #[test]
    fn overrides_win() {
        let mut c = ScenarioConfig::from_toml("seed = 4\n[tracker]\nvm = 0.5\n").unwrap();
        assert_eq!((c.seed, c.tracker.vm, c.tracker.vn), (4, 0.5, 5.0));
        c.apply(&Overrides {
            seed: Some(9),
            vm: Some(0.01),
            ..Overrides::default()
        });
        assert_eq!((c.seed, c.tracker.vm), (9, 0.01));
    }

    #[test]
    fn trajectory_outside_grid_is_rejected() {
        let c = ScenarioConfig::from_toml("[trajectory]\nkind = \"path\"\ncorners = [[1, 1], [40, 1]]\nspeed = 1\n")
            .unwrap();
        assert!(c.scenario().is_err());
    }

    #[test]
    fn spots_are_seeded() {
        let text =
            "[trajectory]\nkind = \"spots\"\nspots = [[5, 5], [10, 10]]\ndwell = 20\nradius = 0.75\nstep = 0.5\n";
        let c = ScenarioConfig::from_toml(text).unwrap();
        let a = c.scenario().unwrap();
        assert_eq!(a.duration, 40.0);
        assert_eq!(a.scene.targets, c.scenario().unwrap().scene.targets);
        let mut d = c.clone();
        d.seed = 1;
        assert_ne!(a.scene.targets, d.scenario().unwrap().scene.targets);
    }
}
