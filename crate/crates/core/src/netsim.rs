//! Token-passing measurement protocol.
//!
//! Nodes transmit in a fixed order. Every other node records the RSS of each
//! transmission it hears, and a base station overhears everything. If the
//! node whose turn it is stays silent (its packet was lost), the others wait
//! one timeout and move on to the next node, so a round always completes.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{synth_link_channel, LinkChannel};
use crate::geometry::Point;
use crate::scene::Scene;
use crate::seed;

#[derive(Debug, Error)]
pub enum NetsimError {
    #[error("node order is not a permutation: node {0} appears twice or is out of range")]
    NotPermutation(usize),
    #[error("slot duration must be positive")]
    BadSlot,
    #[error("timeout must be at least one slot")]
    BadTimeout,
    #[error("loss probability {0} is outside [0, 1]")]
    BadLoss(f64),
    #[error("campaign duration must be positive")]
    BadDuration,
    #[error("trace line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    node_order: Vec<usize>,
    slot: Duration,
    timeout: Duration,
}

impl Schedule {
    /// `node_order` must be a permutation of `0..node_order.len()`.
    pub fn new(node_order: Vec<usize>, slot_duration: f64, timeout: f64) -> Result<Self, NetsimError> {
        let mut seen = vec![false; node_order.len()];
        for &n in &node_order {
            if n >= seen.len() || seen[n] {
                return Err(NetsimError::NotPermutation(n));
            }
            seen[n] = true;
        }
        if !(slot_duration > 0.0) || !slot_duration.is_finite() {
            return Err(NetsimError::BadSlot);
        }
        if !(timeout >= slot_duration) || !timeout.is_finite() {
            return Err(NetsimError::BadTimeout);
        }
        Ok(Self {
            node_order,
            slot: Duration::from_secs_f64(slot_duration),
            timeout: Duration::from_secs_f64(timeout),
        })
    }

    /// Nodes `0..n` in id order.
    pub fn sequential(n: usize, slot_duration: f64, timeout: f64) -> Result<Self, NetsimError> {
        Self::new((0..n).collect(), slot_duration, timeout)
    }

    pub fn node_order(&self) -> &[usize] {
        &self.node_order
    }

    pub fn slot_duration(&self) -> f64 {
        self.slot.as_secs_f64()
    }

    pub fn timeout(&self) -> f64 {
        self.timeout.as_secs_f64()
    }
}

/// One received packet's signal strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RssSample {
    #[serde(rename = "time_s")]
    pub time: f64,
    pub tx: usize,
    pub rx: usize,
    #[serde(rename = "rss_db")]
    pub rss: f64,
}

/// Channels for every directed link of a scene.
#[derive(Debug, Clone)]
pub struct LinkChannels {
    nodes: usize,
    channels: Vec<Option<LinkChannel>>,
}

impl LinkChannels {
    /// Synthesize one independent channel per directed link.
    pub fn synthesize(scene: &Scene, master_seed: u64) -> Self {
        let n = scene.nodes.len();
        let mut channels = Vec::with_capacity(n * n);
        for tx in 0..n {
            for rx in 0..n {
                channels.push((tx != rx).then(|| {
                    let s = seed::derive(master_seed, &[seed::label::CHANNEL, tx as u64, rx as u64]);
                    synth_link_channel(scene, tx, rx, s)
                }));
            }
        }
        Self { nodes: n, channels }
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn get(&self, tx: usize, rx: usize) -> Option<&LinkChannel> {
        self.channels.get(tx * self.nodes + rx)?.as_ref()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub samples: Vec<RssSample>,
    pub end: Duration,
    pub transmissions: usize,
    pub lost: usize,
}

/// Run one pass of the token through `schedule`, starting at `start`.
///
/// `round` indexes both the loss stream and the per-link sample stream, so
/// distinct rounds draw independent randomness and any round can be replayed
/// on its own.
pub fn run_round<F>(
    schedule: &Schedule,
    channels: &LinkChannels,
    targets_at: F,
    loss_prob: f64,
    seed: u64,
    round: u64,
    start: Duration,
) -> Round
where
    F: Fn(f64) -> Vec<Point>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, &[seed::label::LOSS]));
    rng.set_stream(round);
    let mut t = start;
    let mut samples = Vec::new();
    let mut lost = 0;
    for &tx in &schedule.node_order {
        if rng.random::<f64>() < loss_prob {
            lost += 1;
            t += schedule.timeout;
            continue;
        }
        let time = t.as_secs_f64();
        let motion = targets_at(time);
        for rx in 0..channels.nodes {
            if let Some(ch) = channels.get(tx, rx) {
                samples.push(RssSample {
                    time,
                    tx,
                    rx,
                    rss: ch.sample_rss(&motion, round),
                });
            }
        }
        t += schedule.slot;
    }
    Round {
        samples,
        end: t,
        transmissions: schedule.node_order.len(),
        lost,
    }
}

/// Time-ordered RSS record of a measurement campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkTrace {
    pub samples: Vec<RssSample>,
    pub sample_period: f64,
}

impl LinkTrace {
    /// Samples of one directed link, in time order.
    pub fn link(&self, tx: usize, rx: usize) -> impl Iterator<Item = &RssSample> {
        self.samples.iter().filter(move |s| s.tx == tx && s.rx == rx)
    }

    /// Number of samples per directed link that appears in the trace.
    pub fn counts(&self) -> BTreeMap<(usize, usize), usize> {
        let mut out = BTreeMap::new();
        for s in &self.samples {
            *out.entry((s.tx, s.rx)).or_insert(0) += 1;
        }
        out
    }
}

/// Result of [`run_campaign`].
#[derive(Debug, Clone)]
pub struct Campaign {
    pub trace: LinkTrace,
    pub rounds: usize,
    pub round_ends: Vec<f64>,
}

/// Repeat rounds until `duration` seconds have elapsed, moving targets along
/// their trajectories. Channels come from `seed`, losses from `seed` too.
pub fn run_campaign(
    scene: &Scene,
    schedule: &Schedule,
    duration: f64,
    loss_prob: f64,
    seed: u64,
) -> Result<Campaign, NetsimError> {
    let channels = LinkChannels::synthesize(scene, seed);
    run_campaign_with(scene, &channels, schedule, duration, loss_prob, seed)
}

/// [`run_campaign`] against pre-built channels.
pub fn run_campaign_with(
    scene: &Scene,
    channels: &LinkChannels,
    schedule: &Schedule,
    duration: f64,
    loss_prob: f64,
    seed: u64,
) -> Result<Campaign, NetsimError> {
    let mut samples = Vec::new();
    let mut round_ends = Vec::new();
    for_each_round(scene, channels, schedule, duration, loss_prob, seed, |r| {
        samples.extend(r.samples);
        round_ends.push(r.end.as_secs_f64());
    })?;
    let rounds = round_ends.len();
    let end = round_ends.last().copied().unwrap_or(0.0);
    Ok(Campaign {
        trace: LinkTrace {
            samples,
            sample_period: end / rounds as f64,
        },
        rounds,
        round_ends,
    })
}

/// Stream the rounds of a campaign to `f` without keeping them. Returns the
/// number of rounds run.
pub fn for_each_round<F>(
    scene: &Scene,
    channels: &LinkChannels,
    schedule: &Schedule,
    duration: f64,
    loss_prob: f64,
    seed: u64,
    mut f: F,
) -> Result<usize, NetsimError>
where
    F: FnMut(Round),
{
    if !(0.0..=1.0).contains(&loss_prob) {
        return Err(NetsimError::BadLoss(loss_prob));
    }
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(NetsimError::BadDuration);
    }
    let end = Duration::from_secs_f64(duration);
    let mut t = Duration::ZERO;
    let mut round = 0u64;
    while t < end {
        let r = run_round(
            schedule,
            channels,
            |time| scene.motion_at(time),
            loss_prob,
            seed,
            round,
            t,
        );
        t = r.end;
        f(r);
        round += 1;
    }
    Ok(round as usize)
}

pub const TRACE_HEADER: [&str; 4] = ["time_s", "tx", "rx", "rss_db"];

/// Write samples as `time_s,tx,rx,rss_db` CSV.
pub fn write_trace<W: Write>(out: W, samples: &[RssSample]) -> Result<(), NetsimError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for s in samples {
        // `Display` for f64 is the shortest representation that parses back
        // to the same value, and prints whole numbers without a fraction.
        w.write_record([
            s.time.to_string(),
            s.tx.to_string(),
            s.rx.to_string(),
            s.rss.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a trace CSV. Rows must be in non-decreasing time order.
pub fn read_trace<R: Read>(input: R) -> Result<Vec<RssSample>, NetsimError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(TRACE_HEADER) {
        return Err(NetsimError::Malformed {
            line: 1,
            message: format!("expected header {}", TRACE_HEADER.join(",")),
        });
    }
    let mut out: Vec<RssSample> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| NetsimError::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let s: RssSample = record.deserialize(Some(&header)).map_err(|e| NetsimError::Malformed {
            line,
            message: e.to_string(),
        })?;
        if !s.time.is_finite() || s.time < 0.0 || !s.rss.is_finite() {
            return Err(NetsimError::Malformed {
                line,
                message: "time must be finite and non-negative, rss finite".into(),
            });
        }
        if s.tx == s.rx {
            return Err(NetsimError::Malformed {
                line,
                message: format!("tx and rx are both {}", s.tx),
            });
        }
        if out.last().is_some_and(|p| p.time > s.time) {
            return Err(NetsimError::Malformed {
                line,
                message: "rows are not in time order".into(),
            });
        }
        out.push(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{perimeter_layout, ScattererModel, Trajectory};

    fn scene(n: usize, model: ScattererModel) -> Scene {
        Scene::new(perimeter_layout(Point::ORIGIN, 26.0, 30.0, n), vec![], model).unwrap()
    }

    #[test]
    fn schedule_validation() {
        assert!(matches!(
            Schedule::new(vec![0, 0], 1e-3, 2e-3),
            Err(NetsimError::NotPermutation(0))
        ));
        assert!(matches!(
            Schedule::new(vec![0, 2], 1e-3, 2e-3),
            Err(NetsimError::NotPermutation(2))
        ));
        assert!(matches!(
            Schedule::new(vec![1, 0], 0.0, 2e-3),
            Err(NetsimError::BadSlot)
        ));
        assert!(matches!(
            Schedule::new(vec![1, 0], 2e-3, 1e-3),
            Err(NetsimError::BadTimeout)
        ));
        assert!(Schedule::new(vec![1, 0], 1e-3, 1e-3).is_ok());
    }

    #[test]
    fn complete_round_counts() {
        let s = scene(34, ScattererModel::default());
        let ch = LinkChannels::synthesize(&s, 1);
        let sched = Schedule::sequential(34, 1e-3, 3e-3).unwrap();
        let r = run_round(&sched, &ch, |_| vec![], 0.0, 5, 0, Duration::ZERO);
        assert_eq!(r.samples.len(), 34 * 33);
        assert_eq!(r.end, Duration::from_millis(34));

        let all_lost = run_round(&sched, &ch, |_| vec![], 1.0, 5, 0, Duration::ZERO);
        assert!(all_lost.samples.is_empty());
        assert_eq!(all_lost.end, Duration::from_millis(3 * 34));
        assert_eq!(all_lost.lost, 34);
    }

    #[test]
    fn round_is_deterministic() {
        let s = scene(8, ScattererModel::default());
        let ch = LinkChannels::synthesize(&s, 1);
        let sched = Schedule::sequential(8, 1e-3, 3e-3).unwrap();
        let motion = |_| vec![Point::new(13.0, 15.0)];
        let a = run_round(&sched, &ch, motion, 0.3, 9, 4, Duration::ZERO);
        let b = run_round(&sched, &ch, motion, 0.3, 9, 4, Duration::ZERO);
        assert_eq!(a, b);
    }

    #[test]
    fn static_targets_give_constant_traces() {
        let model = ScattererModel {
            noise_k_db: f64::INFINITY,
            ..Default::default()
        };
        let mut s = scene(6, model);
        s.targets
            .push(Trajectory::stationary(Point::new(13.0, 15.0), 0.0, 10.0));
        let sched = Schedule::sequential(6, 1e-3, 2e-3).unwrap();
        let c = run_campaign(&s, &sched, 1.0, 0.0, 3).unwrap();
        for (&(tx, rx), &n) in &c.trace.counts() {
            assert_eq!(n, c.rounds);
            let first = c.trace.link(tx, rx).next().unwrap().rss;
            assert!(c.trace.link(tx, rx).all(|x| x.rss == first));
        }
    }

    #[test]
    fn single_round_duration() {
        let s = scene(34, ScattererModel::default());
        let sched = Schedule::sequential(34, 1e-3, 3e-3).unwrap();
        let c = run_campaign(&s, &sched, 0.034, 0.0, 3).unwrap();
        assert_eq!(c.rounds, 1);
        assert!(c.trace.counts().values().all(|&n| n <= 1));
    }

    #[test]
    fn per_link_counts_at_ten_percent_loss() {
        let s = scene(10, ScattererModel::default());
        let sched = Schedule::sequential(10, 1e-3, 1e-3).unwrap();
        // equal slot and timeout, so 100 rounds take exactly 1 s
        let c = run_campaign(&s, &sched, 1.0, 0.1, 11).unwrap();
        assert_eq!(c.rounds, 100);
        let sd = (100.0 * 0.1 * 0.9f64).sqrt();
        let counts = c.trace.counts();
        let mean = counts.values().sum::<usize>() as f64 / counts.len() as f64;
        assert!((mean - 90.0).abs() < 3.0 * sd, "mean count {mean}");
        for &n in counts.values() {
            assert!((n as f64 - 90.0).abs() < 5.0 * sd, "{n}");
        }
    }

    #[test]
    fn link_timestamps_strictly_increase() {
        let s = scene(6, ScattererModel::default());
        let sched = Schedule::sequential(6, 1e-3, 4e-3).unwrap();
        let c = run_campaign(&s, &sched, 0.5, 0.4, 2).unwrap();
        for &(tx, rx) in c.trace.counts().keys() {
            let times: Vec<f64> = c.trace.link(tx, rx).map(|s| s.time).collect();
            assert!(times.windows(2).all(|w| w[1] - w[0] >= 1e-3 - 1e-12));
        }
    }

    #[test]
    fn rejects_bad_campaign_arguments() {
        let s = scene(4, ScattererModel::default());
        let sched = Schedule::sequential(4, 1e-3, 1e-3).unwrap();
        assert!(matches!(
            run_campaign(&s, &sched, 1.0, 1.5, 0),
            Err(NetsimError::BadLoss(_))
        ));
        assert!(matches!(
            run_campaign(&s, &sched, 0.0, 0.0, 0),
            Err(NetsimError::BadDuration)
        ));
    }

    #[test]
    fn trace_csv_round_trip() {
        let samples = vec![
            RssSample {
                time: 0.0,
                tx: 0,
                rx: 1,
                rss: -52.0,
            },
            RssSample {
                time: 0.001,
                tx: 0,
                rx: 2,
                rss: -61.25,
            },
        ];
        let mut buf = Vec::new();
        write_trace(&mut buf, &samples).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "time_s,tx,rx,rss_db\n0,0,1,-52\n0.001,0,2,-61.25\n");
        assert_eq!(read_trace(buf.as_slice()).unwrap(), samples);
    }

    #[test]
    fn malformed_rows_report_line() {
        let text = "time_s,tx,rx,rss_db\n0.0,0,1,-52\n0.1,0,x,-50\n";
        match read_trace(text.as_bytes()) {
            Err(NetsimError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let text = "time_s,tx,rx,rss_db\n0.2,0,1,-52\n0.1,0,2,-50\n";
        assert!(matches!(
            read_trace(text.as_bytes()),
            Err(NetsimError::Malformed { line: 3, .. })
        ));
    }
}
