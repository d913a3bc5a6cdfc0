//! Multipath link model and log-Ricean RSS statistics.
//!
//! A link's received voltage is the phasor sum of its multipath components
//! plus complex Gaussian noise. Components whose footprint contains a moving
//! target have uniformly random phase; the rest add up to a fixed phasor. The
//! envelope is then Ricean and its power in dB is log-Ricean, with a variance
//! that depends only on the K-factor.

use std::f64::consts::{LN_10, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::geometry::{Ellipse, Point};
use crate::quadrature::{self, QuadratureError, Tolerance};
use crate::scene::Scene;
use crate::special::ln_bessel_i0;

/// `ln(10)/20`: converts dB of power into natural log of amplitude.
pub const DB_TO_NEPER: f64 = LN_10 / 20.0;

/// Floor applied to `|V|^2` before conversion to dB.
pub const POWER_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct MultipathComponent {
    pub amplitude: f64,
    pub phase: f64,
    pub footprint: Ellipse,
}

impl MultipathComponent {
    pub fn power(&self) -> f64 {
        self.amplitude * self.amplitude
    }

    fn is_changing(&self, motion: &[Point]) -> bool {
        motion.iter().any(|p| self.footprint.contains(p))
    }
}

/// Static (coherent) power and per-quadrature diffuse variance of a Ricean
/// envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiceanParams {
    v_bar_sq: f64,
    sigma_sq: f64,
}

impl RiceanParams {
    pub fn new(v_bar_sq: f64, sigma_sq: f64) -> Option<Self> {
        (v_bar_sq >= 0.0 && sigma_sq > 0.0 && v_bar_sq.is_finite() && sigma_sq.is_finite())
            .then_some(Self { v_bar_sq, sigma_sq })
    }

    /// Parameters with unit diffuse variance and the given K in dB.
    /// `-inf` gives the Rayleigh case.
    pub fn from_k_db(k_db: f64) -> Self {
        let k = if k_db == f64::NEG_INFINITY {
            0.0
        } else {
            10f64.powf(k_db / 10.0)
        };
        Self {
            v_bar_sq: 2.0 * k,
            sigma_sq: 1.0,
        }
    }

    pub fn v_bar_sq(&self) -> f64 {
        self.v_bar_sq
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            v_bar_sq: self.v_bar_sq * factor,
            sigma_sq: self.sigma_sq * factor,
        }
    }
}

pub fn k_factor(params: &RiceanParams) -> f64 {
    params.v_bar_sq / (2.0 * params.sigma_sq)
}

/// K in dB from the static power and the two contributions to `sigma^2`.
/// Returns `-inf` when there is no static power.
pub fn k_db(v_bar_sq: f64, changing_power: f64, noise_power: f64) -> f64 {
    let diffuse = changing_power + noise_power;
    assert!(diffuse > 0.0, "diffuse power must be positive");
    if v_bar_sq == 0.0 {
        return f64::NEG_INFINITY;
    }
    -3.0 + 10.0 * v_bar_sq.log10() - 10.0 * diffuse.log10()
}

/// Natural log of the log-Ricean density at `r_db`.
pub fn ln_log_ricean_pdf(r_db: f64, params: &RiceanParams) -> f64 {
    let c = DB_TO_NEPER;
    let s2 = params.sigma_sq;
    let amp = (c * r_db).exp();
    let pow = amp * amp;
    let mut ln_f = c.ln() + 2.0 * c * r_db - s2.ln() - (pow + params.v_bar_sq) / (2.0 * s2);
    if params.v_bar_sq > 0.0 {
        ln_f += ln_bessel_i0(amp * params.v_bar_sq.sqrt() / s2);
    }
    ln_f
}

/// Density of `20 log10 R` for a Ricean envelope `R`, per dB.
pub fn log_ricean_pdf(r_db: f64, params: &RiceanParams) -> f64 {
    let ln_f = ln_log_ricean_pdf(r_db, params);
    if ln_f.is_nan() {
        0.0
    } else {
        ln_f.exp()
    }
}

/// Mean and variance of a log-Ricean variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRiceanMoments {
    pub mass: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Integration breakpoints around the mean received power (dB). The lower
/// tail falls off like `10^(r/10)`, so it extends much further than the
/// upper tail, which is double-exponential.
fn breakpoints(params: &RiceanParams) -> Vec<f64> {
    let centre = 10.0 * (params.v_bar_sq + 2.0 * params.sigma_sq).log10();
    [-200.0, -40.0, -20.0, -5.0, -1.0, 1.0, 5.0, 20.0, 40.0]
        .iter()
        .map(|d| centre + d)
        .collect()
}

pub fn log_ricean_moments(params: &RiceanParams) -> Result<LogRiceanMoments, QuadratureError> {
    let tol = Tolerance::default();
    let breaks = breakpoints(params);
    let mass = quadrature::integrate(|r| log_ricean_pdf(r, params), &breaks, tol)?;
    let mean = quadrature::integrate(|r| r * log_ricean_pdf(r, params), &breaks, tol)?;
    let variance = quadrature::integrate(
        |r| {
            let d = r - mean;
            d * d * log_ricean_pdf(r, params)
        },
        &breaks,
        tol,
    )?;
    Ok(LogRiceanMoments { mass, mean, variance })
}

/// Variance (dB^2) of received power in dB for a Ricean channel with the
/// given K-factor in dB. Accepts `-inf` for the Rayleigh limit.
pub fn log_ricean_variance(k_db: f64) -> Result<f64, QuadratureError> {
    assert!(!k_db.is_nan() && k_db != f64::INFINITY, "k_db must be finite or -inf");
    log_ricean_moments(&RiceanParams::from_k_db(k_db)).map(|m| m.variance)
}

/// One directed link's multipath channel.
///
/// Sampling is a pure function of the channel, the moving-target positions
/// and the sample index: the random stream for index `k` is stream `k` of a
/// ChaCha generator keyed by the channel seed.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkChannel {
    pub tx: usize,
    pub rx: usize,
    pub components: Vec<MultipathComponent>,
    pub noise_std: f64,
    pub seed: u64,
    pub quantize: bool,
}

impl LinkChannel {
    pub fn total_power(&self) -> f64 {
        self.components.iter().map(MultipathComponent::power).sum()
    }

    /// Ricean parameters of this link while targets move at `motion`, or
    /// `None` when nothing on the link is random.
    pub fn ricean_params(&self, motion: &[Point]) -> Option<RiceanParams> {
        let (mut re, mut im, mut changing) = (0.0, 0.0, 0.0);
        for c in &self.components {
            if c.is_changing(motion) {
                changing += c.power();
            } else {
                re += c.amplitude * c.phase.cos();
                im += c.amplitude * c.phase.sin();
            }
        }
        // a uniform-phase component of power P puts P/2 in each quadrature
        RiceanParams::new(re * re + im * im, 0.5 * changing + self.noise_std * self.noise_std)
    }

    pub fn k_db(&self, motion: &[Point]) -> Option<f64> {
        self.ricean_params(motion).map(|p| 10.0 * k_factor(&p).log10())
    }

    /// RSS in dB for sample `time_index` with targets moving at `motion`.
    pub fn sample_rss(&self, motion: &[Point], time_index: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(time_index);
        let (mut re, mut im) = (0.0, 0.0);
        for c in &self.components {
            let phase = if c.is_changing(motion) {
                TAU * rng.random::<f64>()
            } else {
                c.phase
            };
            re += c.amplitude * phase.cos();
            im += c.amplitude * phase.sin();
        }
        if self.noise_std > 0.0 {
            let ni: f64 = rng.sample(StandardNormal);
            let nq: f64 = rng.sample(StandardNormal);
            re += self.noise_std * ni;
            im += self.noise_std * nq;
        }
        let db = 10.0 * (re * re + im * im).max(POWER_FLOOR).log10();
        if self.quantize {
            db.round()
        } else {
            db
        }
    }
}

/// Build the channel for link `tx -> rx` from the scene's scatterer model.
///
/// The line-of-sight component carries `los_fraction` of the link power; the
/// scatterers share the rest with exponentially decaying powers. All static
/// phases and footprint sizes are drawn from `seed`.
pub fn synth_link_channel(scene: &Scene, tx: usize, rx: usize, seed: u64) -> LinkChannel {
    assert_ne!(tx, rx, "a link needs two distinct nodes");
    let model = &scene.scatterer_model;
    let (a, b) = (scene.nodes[tx], scene.nodes[rx]);
    let total = model.link_power(a.distance(&b));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let los_power = if model.scatterers == 0 {
        total
    } else {
        total * model.los_fraction
    };
    let mut components = vec![MultipathComponent {
        amplitude: los_power.sqrt(),
        phase: TAU * rng.random::<f64>(),
        footprint: Ellipse::new(a, b, model.los_excess),
    }];

    let profile: Vec<f64> = (0..model.scatterers)
        .map(|i| (-(i as f64) / model.decay).exp())
        .collect();
    let norm: f64 = profile.iter().sum();
    let scattered = total - los_power;
    let [lo, hi] = model.excess_range;
    for p in profile {
        let excess = lo + (hi - lo) * rng.random::<f64>();
        components.push(MultipathComponent {
            amplitude: (scattered * p / norm).sqrt(),
            phase: TAU * rng.random::<f64>(),
            footprint: Ellipse::new(a, b, excess),
        });
    }

    let noise_std = if model.noise_k_db == f64::INFINITY {
        0.0
    } else {
        // K = total / (2 sigma_nu^2)
        (total / (2.0 * 10f64.powf(model.noise_k_db / 10.0))).sqrt()
    };

    LinkChannel {
        tx,
        rx,
        components,
        noise_std,
        seed: rng.random(),
        quantize: model.quantize,
    }
}
