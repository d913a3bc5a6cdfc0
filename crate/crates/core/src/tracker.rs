//! Single-target Kalman tracking on motion images, and path error metrics.
//!
//! The target is modelled as a 2D random walk observed through the
//! coordinates of each image's brightest voxel. With isotropic noise the
//! covariances and gain stay multiples of the identity.

use std::io::Write;

use log::warn;
use nalgebra::{Matrix2, Vector2};
use thiserror::Error;

use crate::estimator::MotionImage;
use crate::geometry::Point;

#[derive(Debug, Error, PartialEq)]
pub enum TrackerError {
    #[error("estimate and truth lengths differ ({estimated} vs {truth})")]
    LengthMismatch { estimated: usize, truth: usize },
    #[error("no samples to average")]
    Empty,
    #[error("tracker variances must be positive (motion {motion_var}, measurement {meas_var})")]
    InvalidParams { motion_var: f64, meas_var: f64 },
}

/// Motion (per frame) and measurement noise variances, in ft^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerParams {
    motion_var: f64,
    meas_var: f64,
}

impl TrackerParams {
    pub fn new(motion_var: f64, meas_var: f64) -> Result<Self, TrackerError> {
        if motion_var > 0.0 && meas_var > 0.0 && motion_var.is_finite() && meas_var.is_finite() {
            Ok(Self { motion_var, meas_var })
        } else {
            Err(TrackerError::InvalidParams { motion_var, meas_var })
        }
    }

    pub fn motion_var(&self) -> f64 {
        self.motion_var
    }

    pub fn meas_var(&self) -> f64 {
        self.meas_var
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackState {
    pub c: Vector2<f64>,
    /// A-posteriori covariance.
    pub p: Matrix2<f64>,
    /// A-priori covariance of the last step.
    pub p_prior: Matrix2<f64>,
    pub g: Matrix2<f64>,
}

impl Default for TrackState {
    /// `c = (0, 0)`, `P = I`.
    fn default() -> Self {
        Self::at(Point::ORIGIN)
    }
}

impl TrackState {
    /// Initial state at `c0` with unit covariance.
    pub fn at(c0: Point) -> Self {
        Self {
            c: Vector2::new(c0.x, c0.y),
            p: Matrix2::identity(),
            p_prior: Matrix2::identity(),
            g: Matrix2::zeros(),
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.c.x, self.c.y)
    }
}

/// Coordinates of the centre of the image's largest voxel.
pub fn peak_measurement(image: &MotionImage) -> Point {
    if image.is_flat() {
        warn!("flat motion image at t={}; peak defaults to voxel 0", image.timestamp);
    }
    image.peak_center()
}

/// One predict/update cycle.
pub fn kalman_step(state: &TrackState, z: Point, params: &TrackerParams) -> TrackState {
    let eye = Matrix2::identity();
    let p_prior = state.p + eye * params.motion_var;
    let innovation_cov = p_prior + eye * params.meas_var;
    // G = P- S^-1; both symmetric, so G' = S^-1 P- solves S G' = P-
    let g = innovation_cov
        .lu()
        .solve(&p_prior)
        .expect("innovation covariance is positive definite")
        .transpose();
    let z = Vector2::new(z.x, z.y);
    TrackState {
        c: state.c + g * (z - state.c),
        p: (eye - g) * p_prior,
        p_prior,
        g,
    }
}

/// Run the filter from the default initial state over `images`, returning
/// the estimate after each frame.
pub fn track_path<'a, I>(images: I, params: &TrackerParams) -> Vec<Point>
where
    I: IntoIterator<Item = &'a MotionImage>,
{
    let mut state = TrackState::default();
    images
        .into_iter()
        .map(|img| {
            state = kalman_step(&state, peak_measurement(img), params);
            state.position()
        })
        .collect()
}

/// Per-sample Euclidean errors and their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackError {
    pub per_sample: Vec<f64>,
    pub average: f64,
}

pub fn avg_error(estimated: &[Point], truth: &[Point]) -> Result<TrackError, TrackerError> {
    if estimated.len() != truth.len() {
        return Err(TrackerError::LengthMismatch {
            estimated: estimated.len(),
            truth: truth.len(),
        });
    }
    if estimated.is_empty() {
        return Err(TrackerError::Empty);
    }
    let per_sample: Vec<f64> = estimated.iter().zip(truth).map(|(e, t)| e.distance(t)).collect();
    let average = per_sample.iter().sum::<f64>() / per_sample.len() as f64;
    Ok(TrackError { per_sample, average })
}

/// Mean of per-position errors.
pub fn spot_error(per_position: &[f64]) -> Result<f64, TrackerError> {
    if per_position.is_empty() {
        return Err(TrackerError::Empty);
    }
    Ok(per_position.iter().sum::<f64>() / per_position.len() as f64)
}

/// One row of a track file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackRow {
    pub frame: usize,
    pub time: f64,
    pub estimate: Point,
    pub truth: Option<Point>,
}

/// Write `frame,time_s,est_x,est_y,true_x,true_y,error_ft` rows, then a
/// `# avg_error_ft=` summary over the rows that carry a truth position, if
/// any do. Rows without truth leave the last three fields empty.
pub fn write_track<W: Write>(mut out: W, rows: &[TrackRow]) -> std::io::Result<Option<f64>> {
    writeln!(out, "frame,time_s,est_x,est_y,true_x,true_y,error_ft")?;
    let mut errors = Vec::with_capacity(rows.len());
    for r in rows {
        match r.truth {
            Some(t) => {
                let e = r.estimate.distance(&t);
                errors.push(e);
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    r.frame, r.time, r.estimate.x, r.estimate.y, t.x, t.y, e
                )?;
            }
            None => writeln!(out, "{},{},{},{},,,", r.frame, r.time, r.estimate.x, r.estimate.y)?,
        }
    }
    let avg = spot_error(&errors).ok();
    if let Some(a) = avg {
        writeln!(out, "# avg_error_ft={a}")?;
    }
    Ok(avg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::VoxelGrid;
    use proptest::prelude::*;

    fn params(q: f64, r: f64) -> TrackerParams {
        TrackerParams::new(q, r).unwrap()
    }

    /// Scalar Riccati recursion for the isotropic filter, from `p = 1`.
    fn riccati(q: f64, r: f64, steps: usize) -> Vec<(f64, f64)> {
        let mut p = 1.0;
        (0..steps)
            .map(|_| {
                let prior = p + q;
                let g = prior / (prior + r);
                p = (1.0 - g) * prior;
                (g, prior)
            })
            .collect()
    }

    #[test]
    fn rejects_non_positive_variances() {
        assert!(TrackerParams::new(0.0, 1.0).is_err());
        assert!(TrackerParams::new(1.0, -1.0).is_err());
    }

    #[test]
    fn peak_measurement_examples() {
        let grid = VoxelGrid::new(Point::new(0.0, 0.0), 5, 4, 1.5).unwrap();
        let mut v = vec![0.0; 20];
        v[grid.index(2, 3)] = 4.0;
        let img = MotionImage::new(v.clone(), grid, 0.0);
        assert_eq!(peak_measurement(&img), Point::new(3.5 * 1.5, 2.5 * 1.5));
        let shifted = MotionImage::new(v.iter().map(|x| x + 17.0).collect(), grid, 0.0);
        assert_eq!(peak_measurement(&shifted), peak_measurement(&img));

        let mut t = vec![0.0; 20];
        t[5] = 1.0;
        t[9] = 1.0;
        assert_eq!(peak_measurement(&MotionImage::new(t, grid, 0.0)), grid.center(5));
        assert_eq!(
            peak_measurement(&MotionImage::new(vec![3.0; 20], grid, 0.0)),
            grid.center(0)
        );
    }

    #[test]
    fn zero_innovation_keeps_estimate() {
        let s = TrackState::at(Point::new(3.0, -2.0));
        let next = kalman_step(&s, Point::new(3.0, -2.0), &params(0.3, 7.0));
        assert_eq!(next.position(), Point::new(3.0, -2.0));
    }

    #[test]
    fn noiseless_measurement_limit() {
        let next = kalman_step(&TrackState::default(), Point::new(4.0, 5.0), &params(0.01, 1e-12));
        assert!((next.g - Matrix2::identity()).amax() < 1e-10);
        assert!(next.position().distance(&Point::new(4.0, 5.0)) < 1e-9);
    }

    #[test]
    fn single_frame_is_first_gain_times_measurement() {
        let p = params(0.01, 5.0);
        let z = Point::new(10.0, 6.0);
        let s = kalman_step(&TrackState::default(), z, &p);
        let g1 = 1.01 / 6.01;
        assert!((s.c.x - g1 * 10.0).abs() < 1e-12);
        assert!((s.c.y - g1 * 6.0).abs() < 1e-12);
    }

    #[test]
    fn steady_state_gain_matches_riccati() {
        let seq = riccati(0.01, 5.0, 5000);
        let (g, prior) = *seq.last().unwrap();
        assert!((g - 0.0437).abs() < 5e-5, "{g}");
        assert!((prior - 0.2287).abs() < 5e-5, "{prior}");

        let p = params(0.01, 5.0);
        let mut s = TrackState::default();
        for (k, &(g, prior)) in seq.iter().enumerate().take(500) {
            s = kalman_step(&s, Point::new(k as f64, -(k as f64)), &p);
            assert_eq!(s.g[(0, 0)], g);
            assert_eq!(s.g[(1, 1)], g);
            assert_eq!(s.p_prior[(0, 0)], prior);
            assert_eq!(
                (s.g[(0, 1)], s.g[(1, 0)], s.p[(0, 1)], s.p[(1, 0)]),
                (0.0, 0.0, 0.0, 0.0)
            );
        }
    }

    #[test]
    fn steady_gain_monotone_in_parameters() {
        let g = |q: f64, r: f64| riccati(q, r, 20000).last().unwrap().0;
        let qs = [1e-4, 1e-3, 1e-2, 0.1, 1.0];
        let rs = [0.5, 1.0, 5.0, 10.0, 50.0];
        for &q in &qs {
            for w in rs.windows(2) {
                assert!(g(q, w[1]) < g(q, w[0]));
            }
        }
        for &r in &rs {
            for w in qs.windows(2) {
                assert!(g(w[1], r) > g(w[0], r));
            }
        }
    }

    #[test]
    fn constant_measurement_converges_monotonically() {
        let grid = VoxelGrid::new(Point::ORIGIN, 10, 10, 1.5).unwrap();
        let mut v = vec![0.0; 100];
        v[grid.index(6, 7)] = 1.0;
        let frames = vec![MotionImage::new(v, grid, 0.0); 300];
        let target = grid.center(grid.index(6, 7));
        let path = track_path(&frames, &params(0.01, 5.0));
        for w in path.windows(2) {
            assert!(w[1].x >= w[0].x && w[1].x <= target.x);
            assert!(w[1].y >= w[0].y && w[1].y <= target.y);
        }
        assert!(path.last().unwrap().distance(&target) < 0.01);
    }

    #[test]
    fn low_mobility_lags_more_on_a_ramp() {
        // argmax advancing 0.05 ft per frame along x
        let lag = |q: f64| {
            let p = params(q, 5.0);
            let mut s = TrackState::default();
            let mut last = 0.0;
            for k in 0..20000 {
                let z = Point::new(0.05 * k as f64, 0.0);
                s = kalman_step(&s, z, &p);
                last = z.x - s.c.x;
            }
            last
        };
        assert!(lag(1e-4) > lag(1e-2));
    }

    #[test]
    fn error_metrics() {
        let a = [Point::new(0.0, 0.0), Point::new(1.0, 1.0)];
        assert_eq!(avg_error(&a, &a).unwrap().average, 0.0);
        let b = [Point::new(3.0, 4.0), Point::new(4.0, 5.0)];
        assert_eq!(avg_error(&b, &a).unwrap().average, 5.0);
        let c = [Point::new(0.0, 0.0), Point::new(4.0, 5.0)];
        assert_eq!(avg_error(&c, &a).unwrap().per_sample, vec![0.0, 5.0]);
        assert_eq!(avg_error(&c, &a).unwrap().average, 2.5);
        assert!(matches!(
            avg_error(&a[..1], &a),
            Err(TrackerError::LengthMismatch { .. })
        ));

        assert!((spot_error(&[1.46; 20]).unwrap() - 1.46).abs() < 1e-12);
        assert_eq!(spot_error(&[0.0, 2.0]).unwrap(), 1.0);
        assert_eq!(spot_error(&[0.7]).unwrap(), 0.7);
        assert_eq!(spot_error(&[]), Err(TrackerError::Empty));
    }

    #[test]
    fn track_file_format() {
        let rows = [
            TrackRow {
                frame: 0,
                time: 0.5,
                estimate: Point::new(1.0, 2.0),
                truth: Some(Point::new(4.0, 6.0)),
            },
            TrackRow {
                frame: 1,
                time: 1.0,
                estimate: Point::new(1.5, 2.0),
                truth: Some(Point::new(1.5, 2.0)),
            },
        ];
        let mut buf = Vec::new();
        assert_eq!(write_track(&mut buf, &rows).unwrap(), Some(2.5));
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "frame,time_s,est_x,est_y,true_x,true_y,error_ft\n0,0.5,1,2,4,6,5\n1,1,1.5,2,1.5,2,0\n# avg_error_ft=2.5\n"
        );
        let mut buf = Vec::new();
        let partial = [TrackRow { truth: None, ..rows[0] }, rows[0]];
        assert_eq!(write_track(&mut buf, &partial).unwrap(), Some(5.0));
        assert!(String::from_utf8(buf).unwrap().contains("\n0,0.5,1,2,,,\n"));
        let mut buf = Vec::new();
        assert_eq!(write_track(&mut buf, &partial[..1]).unwrap(), None);
    }

    proptest! {
        #[test]
        fn covariance_stays_bounded_and_isotropic(
            q in 1e-4f64..10.0,
            r in 1e-3f64..100.0,
            zs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..200),
        ) {
            let p = params(q, r);
            let mut s = TrackState::default();
            let mut bound: f64 = 1.0;
            for (x, y) in zs {
                let prev = s.p[(0, 0)];
                s = kalman_step(&s, Point::new(x, y), &p);
                bound = bound.max(prev + q);
                prop_assert_eq!(s.p[(0, 1)], 0.0);
                prop_assert_eq!(s.p[(1, 0)], 0.0);
                prop_assert_eq!(s.p[(0, 0)], s.p[(1, 1)]);
                prop_assert!(s.p[(0, 0)] > 0.0 && s.p[(0, 0)] <= bound);
                prop_assert!((0.0..=1.0).contains(&s.g[(0, 0)]));
            }
        }

        #[test]
        fn estimate_stays_in_hull_of_measurements(
            zs in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..100),
        ) {
            let p = params(0.01, 5.0);
            let mut s = TrackState::default();
            let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
            for (x, y) in zs {
                lo_x = lo_x.min(x); hi_x = hi_x.max(x);
                lo_y = lo_y.min(y); hi_y = hi_y.max(y);
                s = kalman_step(&s, Point::new(x, y), &p);
                // each update is a convex combination of the old estimate and z
                prop_assert!(s.c.x >= lo_x - 1e-9 && s.c.x <= hi_x + 1e-9);
                prop_assert!(s.c.y >= lo_y - 1e-9 && s.c.y <= hi_y + 1e-9);
            }
        }

        #[test]
        fn translation_equivariance(
            zs in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..100),
            dx in -100.0f64..100.0,
            dy in -100.0f64..100.0,
        ) {
            let p = params(0.01, 5.0);
            let mut a = TrackState::default();
            let mut b = TrackState::at(Point::new(dx, dy));
            for (x, y) in zs {
                a = kalman_step(&a, Point::new(x, y), &p);
                b = kalman_step(&b, Point::new(x + dx, y + dy), &p);
                prop_assert!((b.c.x - (a.c.x + dx)).abs() < 1e-9);
                prop_assert!((b.c.y - (a.c.y + dy)).abs() < 1e-9);
            }
        }
    }
}
