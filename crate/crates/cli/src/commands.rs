//! Subcommand implementations. Each writes its artifacts under an output
//! directory; the fused `run` writes the same files, in the same layout, as
//! `simulate`, `reconstruct` and `track` chained through the file system.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use vrti::channel::log_ricean_variance;
use vrti::estimator::{
    build_projection, build_weight_matrix, read_frame_csv, write_frame_csv, write_frame_pgm, TikhonovProjection,
    VoxelGrid,
};
use vrti::netsim::{read_trace, run_campaign, write_trace, RssSample};
use vrti::pipeline::{reconstruct_samples, spot_errors, truth_at, Frame, Spot};
use vrti::scene::{Trajectory, Waypoint};
use vrti::tracker::{spot_error, track_path, write_track, TrackRow, TrackerParams};
use vrti::Point;

use crate::config::{ScenarioConfig, Truth};

pub const TRACE_FILE: &str = "trace.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const SPOTS_FILE: &str = "spots.csv";
pub const FRAMES_DIR: &str = "frames";
pub const MANIFEST_FILE: &str = "manifest.csv";
pub const TRACK_FILE: &str = "track.csv";

/// Estimates averaged over this many seconds at the end of each spot.
pub const SPOT_WINDOW: f64 = 10.0;

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn csv_reader<R: std::io::Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateReport {
    pub samples: usize,
    pub rounds: usize,
    pub trace: PathBuf,
}

pub fn simulate(cfg: &ScenarioConfig, out: &Path) -> Result<SimulateReport> {
    let (samples, rounds, truth) = simulate_in_memory(cfg)?;
    write_outputs(out, &samples, &truth)?;
    Ok(SimulateReport {
        samples: samples.len(),
        rounds,
        trace: out.join(TRACE_FILE),
    })
}

fn simulate_in_memory(cfg: &ScenarioConfig) -> Result<(Vec<RssSample>, usize, Truth)> {
    let sc = cfg.scenario()?;
    let c = run_campaign(&sc.scene, &sc.schedule, sc.duration, cfg.schedule.loss, cfg.seed)?;
    log::info!("simulated {} rounds, {} samples", c.rounds, c.trace.samples.len());
    Ok((c.trace.samples, c.rounds, sc.truth))
}

fn write_outputs(out: &Path, samples: &[RssSample], truth: &Truth) -> Result<()> {
    let mut w = create(&out.join(TRACE_FILE))?;
    write_trace(&mut w, samples)?;
    w.flush()?;
    match truth {
        Truth::None => {}
        Truth::Path(tr) => write_truth(&mut create(&out.join(TRUTH_FILE))?, tr)?,
        Truth::Spots(s) => write_spots(&mut create(&out.join(SPOTS_FILE))?, s)?,
    }
    Ok(())
}

/// `time_s,x,y` markers, interpolated linearly in between.
pub fn write_truth<W: Write>(mut out: W, truth: &Trajectory) -> Result<()> {
    writeln!(out, "time_s,x,y")?;
    for w in truth.waypoints() {
        writeln!(out, "{},{},{}", w.time, w.position.x, w.position.y)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_truth(path: &Path) -> Result<Trajectory> {
    let mut rdr = csv_reader(open(path)?);
    let mut marks = Vec::new();
    for (i, rec) in rdr.deserialize::<(f64, f64, f64)>().enumerate() {
        let (time, x, y) = rec.with_context(|| format!("{}: row {}", path.display(), i + 1))?;
        marks.push(Waypoint {
            time,
            position: Point::new(x, y),
        });
    }
    Trajectory::new(marks).with_context(|| format!("invalid truth file {}", path.display()))
}

/// `spot,start_s,end_s,x,y`.
pub fn write_spots<W: Write>(mut out: W, spots: &[Spot]) -> Result<()> {
    writeln!(out, "spot,start_s,end_s,x,y")?;
    for (k, s) in spots.iter().enumerate() {
        writeln!(out, "{k},{},{},{},{}", s.start, s.end, s.position.x, s.position.y)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_spots(path: &Path) -> Result<Vec<Spot>> {
    let mut rdr = csv_reader(open(path)?);
    let mut spots = Vec::new();
    for (i, rec) in rdr.deserialize::<(usize, f64, f64, f64, f64)>().enumerate() {
        let (_, start, end, x, y) = rec.with_context(|| format!("{}: row {}", path.display(), i + 1))?;
        if !(end > start) {
            bail!("{}: spot on row {} ends before it starts", path.display(), i + 1);
        }
        spots.push(Spot {
            start,
            end,
            position: Point::new(x, y),
        });
    }
    if spots.is_empty() {
        bail!("{} lists no spots", path.display());
    }
    Ok(spots)
}

pub fn projection(cfg: &ScenarioConfig) -> Result<TikhonovProjection> {
    let r = &cfg.reconstruction;
    let grid = cfg.grid()?;
    let w = build_weight_matrix(&cfg.nodes(), &grid, r.lambda, r.psi, r.link_mode)?;
    Ok(build_projection(&w, r.alpha, &grid)?)
}

fn frames_from_samples(cfg: &ScenarioConfig, samples: &[RssSample]) -> Result<Vec<Frame>> {
    let proj = projection(cfg)?;
    let schedule = cfg.schedule()?;
    Ok(reconstruct_samples(
        samples,
        schedule.node_order(),
        &proj,
        cfg.reconstruction.n_buffer,
    )?)
}

fn frame_stem(k: usize) -> String {
    format!("frame_{k:05}")
}

/// One `frame_<k>.pgm` and `frame_<k>.csv` per frame plus a
/// `frame,time_s,warmup` manifest.
pub fn write_frames(dir: &Path, frames: &[Frame]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut manifest = create(&dir.join(MANIFEST_FILE))?;
    writeln!(manifest, "frame,time_s,warmup")?;
    for f in frames {
        let stem = frame_stem(f.index);
        let mut pgm = create(&dir.join(format!("{stem}.pgm")))?;
        write_frame_pgm(&mut pgm, &f.image)?;
        pgm.flush()?;
        let mut csv = create(&dir.join(format!("{stem}.csv")))?;
        write_frame_csv(&mut csv, &f.image)?;
        csv.flush()?;
        writeln!(manifest, "{},{},{}", f.index, f.image.timestamp, f.warmup)?;
    }
    manifest.flush()?;
    Ok(())
}

pub fn read_frames(dir: &Path, grid: &VoxelGrid) -> Result<Vec<Frame>> {
    let path = dir.join(MANIFEST_FILE);
    let mut rdr = csv_reader(open(&path)?);
    let mut frames = Vec::new();
    for (i, rec) in rdr.deserialize::<(usize, f64, bool)>().enumerate() {
        let (index, time, warmup) = rec.with_context(|| format!("{}: row {}", path.display(), i + 1))?;
        let fp = dir.join(format!("{}.csv", frame_stem(index)));
        let image = read_frame_csv(open(&fp)?, *grid, time).with_context(|| format!("reading {}", fp.display()))?;
        frames.push(Frame { index, image, warmup });
    }
    Ok(frames)
}

pub fn reconstruct(cfg: &ScenarioConfig, trace: &Path, out: &Path) -> Result<usize> {
    let samples = read_trace(open(trace)?).with_context(|| format!("reading {}", trace.display()))?;
    let frames = frames_from_samples(cfg, &samples)?;
    write_frames(out, &frames)?;
    Ok(frames.len())
}

pub enum TrackSource<'a> {
    Frames(&'a Path),
    Trace(&'a Path),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackReport {
    pub frames: usize,
    /// Mean error over post-warm-up frames, when a truth path is known.
    pub avg_error: Option<f64>,
    /// Mean spot error and the per-spot errors, when spots are known.
    pub zeta: Option<f64>,
    pub spot_errors: Vec<f64>,
}

pub fn track(
    cfg: &ScenarioConfig,
    source: TrackSource<'_>,
    truth: Option<&Path>,
    spots: Option<&Path>,
    out: &Path,
) -> Result<TrackReport> {
    let truth = truth.map(read_truth).transpose()?;
    let spots = spots.map(read_spots).transpose()?;
    let frames = match source {
        TrackSource::Frames(dir) => read_frames(dir, &cfg.grid()?)?,
        TrackSource::Trace(path) => {
            let samples = read_trace(open(path)?).with_context(|| format!("reading {}", path.display()))?;
            frames_from_samples(cfg, &samples)?
        }
    };
    track_frames(cfg, &frames, truth.as_ref(), spots.as_deref(), out)
}

fn track_frames(
    cfg: &ScenarioConfig,
    frames: &[Frame],
    truth: Option<&Trajectory>,
    spots: Option<&[Spot]>,
    out: &Path,
) -> Result<TrackReport> {
    let params = TrackerParams::new(cfg.tracker.vm, cfg.tracker.vn)?;
    let estimates = track_path(frames.iter().map(|f| &f.image), &params);
    let rows: Vec<TrackRow> = frames
        .iter()
        .zip(&estimates)
        .map(|(f, e)| TrackRow {
            frame: f.index,
            time: f.image.timestamp,
            estimate: *e,
            truth: truth.filter(|_| !f.warmup).map(|t| truth_at(t, f.image.timestamp)),
        })
        .collect();
    let mut w = create(&out.join(TRACK_FILE))?;
    let avg_error = write_track(&mut w, &rows)?;
    w.flush()?;

    let mut report = TrackReport {
        frames: frames.len(),
        avg_error,
        ..TrackReport::default()
    };
    if let Some(spots) = spots {
        let times: Vec<f64> = frames.iter().map(|f| f.image.timestamp).collect();
        let errs = spot_errors(&times, &estimates, spots, SPOT_WINDOW);
        if let Some(k) = errs.iter().position(Option::is_none) {
            bail!("spot {k} has no frames in its final {SPOT_WINDOW} s");
        }
        report.spot_errors = errs.into_iter().flatten().collect();
        report.zeta = Some(spot_error(&report.spot_errors)?);
    }
    Ok(report)
}

/// `k_db,variance_db2` rows over `min..=max` in steps of `step`.
pub fn theory<W: Write>(mut out: W, min: f64, max: f64, step: f64) -> Result<usize> {
    if !(min < max) || !(step > 0.0) || !min.is_finite() || !max.is_finite() {
        bail!("theory needs min < max and step > 0");
    }
    let n = ((max - min) / step + 1e-9).floor() as usize + 1;
    writeln!(out, "k_db,variance_db2")?;
    for i in 0..n {
        let k = min + i as f64 * step;
        writeln!(out, "{k},{}", log_ricean_variance(k)?)?;
    }
    out.flush()?;
    Ok(n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub simulate: SimulateReport,
    pub track: TrackReport,
}

/// The whole pipeline in memory, writing the same artifacts as the chained
/// subcommands.
pub fn run(cfg: &ScenarioConfig, out: &Path) -> Result<RunReport> {
    let (samples, rounds, truth) = simulate_in_memory(cfg)?;
    write_outputs(out, &samples, &truth)?;
    let frames = frames_from_samples(cfg, &samples)?;
    write_frames(&out.join(FRAMES_DIR), &frames)?;
    let (path, spots) = match &truth {
        Truth::Path(t) => (Some(t), None),
        Truth::Spots(s) => (None, Some(s.as_slice())),
        Truth::None => (None, None),
    };
    let track = track_frames(cfg, &frames, path, spots, out)?;
    Ok(RunReport {
        simulate: SimulateReport {
            samples: samples.len(),
            rounds,
            trace: out.join(TRACE_FILE),
        },
        track,
    })
}
