//! Trace-to-track processing shared by the fused and the file-based paths.
//!
//! A trace is split into token rounds, every round's samples are pushed into
//! the link buffers, and one image is reconstructed per round.

use std::ops::Range;

use thiserror::Error;

use crate::estimator::{reconstruct, EstimatorError, MotionImage, TikhonovProjection, VarianceBank};
use crate::geometry::Point;
use crate::netsim::RssSample;
use crate::scene::Trajectory;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("trace refers to unknown node id {0}")]
    UnknownNode(usize),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

/// Split time-ordered samples into token rounds. A new round starts whenever
/// the transmitter does not come later in `node_order` than the previous
/// one, or the same transmitter is heard again at a different time.
pub fn segment_rounds(samples: &[RssSample], node_order: &[usize]) -> Result<Vec<Range<usize>>, PipelineError> {
    let mut position = vec![usize::MAX; node_order.iter().max().map_or(0, |m| m + 1)];
    for (i, &n) in node_order.iter().enumerate() {
        position[n] = i;
    }
    let slot_of = |tx: usize| match position.get(tx) {
        Some(&p) if p != usize::MAX => Ok(p),
        _ => Err(PipelineError::UnknownNode(tx)),
    };

    let mut rounds = Vec::new();
    let mut start = 0;
    let mut prev: Option<(usize, f64)> = None;
    for (i, s) in samples.iter().enumerate() {
        let slot = slot_of(s.tx)?;
        if let Some((p, t)) = prev {
            if slot < p || (slot == p && s.time != t) {
                rounds.push(start..i);
                start = i;
            }
        }
        prev = Some((slot, s.time));
    }
    if start < samples.len() {
        rounds.push(start..samples.len());
    }
    Ok(rounds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub index: usize,
    pub image: MotionImage,
    /// Some link had not yet filled its buffer when this frame was made.
    pub warmup: bool,
}

/// Streaming per-round reconstruction.
#[derive(Debug, Clone)]
pub struct Reconstructor<'a> {
    projection: &'a TikhonovProjection,
    bank: VarianceBank,
    frames: usize,
}

impl<'a> Reconstructor<'a> {
    pub fn new(projection: &'a TikhonovProjection, nodes: usize, n_buffer: usize) -> Self {
        Self {
            projection,
            bank: VarianceBank::new(nodes, n_buffer),
            frames: 0,
        }
    }

    /// Push one round of samples and reconstruct. Samples on links outside
    /// the projection's link index are buffered but do not enter the image.
    pub fn push_round(&mut self, samples: &[RssSample]) -> Result<Frame, PipelineError> {
        let nodes = self.bank.node_count();
        for s in samples {
            for id in [s.tx, s.rx] {
                if id >= nodes {
                    return Err(PipelineError::UnknownNode(id));
                }
            }
            self.bank.push(s.tx, s.rx, s.rss);
        }
        let s_hat = self.bank.variance_vector(&self.projection.links);
        let time = samples.last().map_or(0.0, |s| s.time);
        let image = reconstruct(self.projection, &s_hat)?.with_timestamp(time);
        let frame = Frame {
            index: self.frames,
            image,
            warmup: self.bank.warming_up(&self.projection.links),
        };
        self.frames += 1;
        Ok(frame)
    }
}

/// One frame per token round of `samples`.
pub fn reconstruct_samples(
    samples: &[RssSample],
    node_order: &[usize],
    projection: &TikhonovProjection,
    n_buffer: usize,
) -> Result<Vec<Frame>, PipelineError> {
    let mut r = Reconstructor::new(projection, node_order.len(), n_buffer);
    segment_rounds(samples, node_order)?
        .into_iter()
        .map(|range| r.push_round(&samples[range]))
        .collect()
}

/// Ground-truth position at `t`, holding the first/last marker outside the
/// marked interval.
pub fn truth_at(truth: &Trajectory, t: f64) -> Point {
    let w = truth.waypoints();
    if t <= truth.start() {
        w[0].position
    } else if t >= truth.end() {
        w[w.len() - 1].position
    } else {
        truth.position_at(t).expect("t is inside the marked interval")
    }
}

/// A known position occupied by a mover over `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spot {
    pub start: f64,
    pub end: f64,
    pub position: Point,
}

/// For each spot, the distance between its position and the mean estimate
/// over the last `window` seconds of its interval. `None` when no estimate
/// falls in that window.
pub fn spot_errors(times: &[f64], estimates: &[Point], spots: &[Spot], window: f64) -> Vec<Option<f64>> {
    spots
        .iter()
        .map(|s| {
            let from = (s.end - window).max(s.start);
            let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
            for (t, e) in times.iter().zip(estimates) {
                if *t >= from && *t <= s.end {
                    sx += e.x;
                    sy += e.y;
                    n += 1;
                }
            }
            (n > 0).then(|| Point::new(sx / n as f64, sy / n as f64).distance(&s.position))
        })
        .collect()
}
