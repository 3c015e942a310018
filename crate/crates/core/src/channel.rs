//! Narrowband time-selective fading.
//!
//! A realization is a sum of phasors, one per propagation path, each rotating
//! at its own Doppler rate:
//!
//! ```text
//! H(t) = Σ_l a_l · exp(-j φ_l(t)),   φ_l(t) = 2π f_c d_l / c + 2π f_c v t cos θ_l / c
//! ```
//!
//! Path delays are carried on [`PathComponent`] but do not enter the gain: the
//! channel is flat (no inter-symbol interference), so every symbol sees a
//! single complex coefficient. Samples live on a uniform grid and off-grid
//! times resolve to the nearest grid point.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub const SPEED_OF_LIGHT_MPS: f64 = 2.99792458e8;

/// Simulation grid spacing, 3.125e-2 ms.
pub const DEFAULT_TIME_STEP_S: f64 = 3.125e-5;

pub const DEFAULT_PATH_COUNT: usize = 8;

/// Range path distances are drawn from, in metres.
pub const DISTANCE_RANGE_M: (f64, f64) = (10.0, 500.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathComponent {
    pub amplitude: f64,
    pub distance_m: f64,
    /// Arrival angle in `[0, 2π)`.
    pub arrival_angle: f64,
    /// Propagation delay `d / c`. Unused by the flat-fading gain.
    pub path_delay_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelConfig {
    pub carrier_hz: f64,
    pub velocity_mps: f64,
    pub lightspeed_mps: f64,
    pub path_count: usize,
    /// Scaling factor applied to the normalized Doppler value.
    pub doppler_scale: f64,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn new(carrier_hz: f64, velocity_mps: f64, seed: u64) -> Self {
        ChannelConfig {
            carrier_hz,
            velocity_mps,
            lightspeed_mps: SPEED_OF_LIGHT_MPS,
            path_count: DEFAULT_PATH_COUNT,
            doppler_scale: 1.0,
            seed,
        }
    }

    pub fn with_velocity(&self, velocity_mps: f64) -> Self {
        ChannelConfig {
            velocity_mps,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.carrier_hz.is_finite() && self.carrier_hz > 0.0) {
            return bad("carrier_hz must be positive and finite");
        }
        if !(self.velocity_mps.is_finite() && self.velocity_mps >= 0.0) {
            return bad("velocity_mps must be non-negative and finite");
        }
        if !(self.lightspeed_mps.is_finite() && self.lightspeed_mps > 0.0) {
            return bad("lightspeed_mps must be positive");
        }
        if self.path_count == 0 {
            return bad("path_count must be at least 1");
        }
        if !self.doppler_scale.is_finite() {
            return bad("doppler_scale must be finite");
        }
        Ok(())
    }

    /// Maximum Doppler shift `f_c v / c` in Hz.
    pub fn doppler_hz(&self) -> f64 {
        self.carrier_hz * self.velocity_mps / self.lightspeed_mps
    }

    /// The random stream that drives path synthesis for this config.
    pub fn path_rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Draws a random scene: Rayleigh amplitudes normalized to unit total power,
/// uniform arrival angles and uniform distances over [`DISTANCE_RANGE_M`].
pub fn synthesize_paths<R: Rng + ?Sized>(
    config: &ChannelConfig,
    rng: &mut R,
) -> Vec<PathComponent> {
    let (d_min, d_max) = DISTANCE_RANGE_M;
    let mut paths: Vec<PathComponent> = (0..config.path_count)
        .map(|_| {
            let u: f64 = rng.random();
            let amplitude = (-2.0 * (1.0 - u).ln()).sqrt();
            let arrival_angle = rng.random::<f64>() * TAU;
            let distance_m = d_min + rng.random::<f64>() * (d_max - d_min);
            PathComponent {
                amplitude,
                distance_m,
                arrival_angle,
                path_delay_s: distance_m / config.lightspeed_mps,
            }
        })
        .collect();

    let norm = paths
        .iter()
        .map(|p| p.amplitude * p.amplitude)
        .sum::<f64>()
        .sqrt();
    if norm > 0.0 {
        for p in &mut paths {
            p.amplitude /= norm;
        }
    } else {
        // every draw hit u = 0; fall back to equal amplitudes
        let a = (1.0 / paths.len() as f64).sqrt();
        for p in &mut paths {
            p.amplitude = a;
        }
    }
    paths
}

/// Phase of one path at time `t`: static propagation term plus Doppler rotation.
pub fn phase_at(path: &PathComponent, t: f64, config: &ChannelConfig) -> f64 {
    let k = TAU * config.carrier_hz / config.lightspeed_mps;
    k * path.distance_m + k * config.velocity_mps * t * path.arrival_angle.cos()
}

/// `λ f_c v / c`.
pub fn normalized_doppler(config: &ChannelConfig) -> f64 {
    config.doppler_scale * config.carrier_hz * config.velocity_mps / config.lightspeed_mps
}

/// A sampled CSI trajectory, power-normalized to unit mean `|H|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    samples: Vec<C64>,
    time_step_s: f64,
    start_time_s: f64,
    paths: Vec<PathComponent>,
    config: ChannelConfig,
}

/// Evaluates the multipath sum on the grid `start + i·step`, `i < n`, and
/// normalizes it. Samples cover `[0, duration]` inclusive of both endpoints
/// when `duration` is a whole number of steps.
pub fn realize_channel(
    paths: &[PathComponent],
    config: &ChannelConfig,
    duration_s: f64,
    time_step_s: f64,
) -> Result<ChannelRealization> {
    config.validate()?;
    if !(time_step_s.is_finite() && time_step_s > 0.0) {
        return Err(Error::InvalidConfig("time_step_s must be positive".into()));
    }
    if !(duration_s.is_finite() && duration_s >= time_step_s) {
        return Err(Error::DurationTooShort {
            duration_s,
            time_step_s,
        });
    }
    if paths.is_empty() {
        return Err(Error::InvalidConfig("at least one path is required".into()));
    }

    let n = (duration_s / time_step_s + 1e-9).floor() as usize + 1;
    let k = TAU * config.carrier_hz / config.lightspeed_mps;
    // (amplitude, static phase, Doppler angular rate)
    let terms: Vec<(f64, f64, f64)> = paths
        .iter()
        .map(|p| {
            let static_phase = (k * p.distance_m).rem_euclid(TAU);
            let rate = k * config.velocity_mps * p.arrival_angle.cos();
            (p.amplitude, static_phase, rate)
        })
        .collect();

    let mut samples: Vec<C64> = (0..n)
        .map(|i| {
            let t = i as f64 * time_step_s;
            terms
                .iter()
                .map(|&(a, phi0, rate)| C64::from_polar(a, -(phi0 + rate * t)))
                .sum()
        })
        .collect();

    let mean_power = samples.iter().map(|h| h.norm_sqr()).sum::<f64>() / n as f64;
    if !(mean_power > 0.0) {
        return Err(Error::InvalidConfig(
            "realization has zero power; cannot normalize".into(),
        ));
    }
    let scale = mean_power.sqrt().recip();
    for h in &mut samples {
        *h *= scale;
    }

    Ok(ChannelRealization {
        samples,
        time_step_s,
        start_time_s: 0.0,
        paths: paths.to_vec(),
        config: config.clone(),
    })
}

impl ChannelRealization {
    /// Synthesizes paths from `config.seed` and realizes them.
    pub fn generate(config: &ChannelConfig, duration_s: f64, time_step_s: f64) -> Result<Self> {
        config.validate()?;
        let paths = synthesize_paths(config, &mut config.path_rng());
        realize_channel(&paths, config, duration_s, time_step_s)
    }

    /// Builds a realization from explicit samples, without normalization.
    /// Used for identity channels and hand-built test trajectories.
    pub fn from_samples(
        samples: Vec<C64>,
        time_step_s: f64,
        config: ChannelConfig,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::TooFewSamples { min: 1, actual: 0 });
        }
        if !(time_step_s.is_finite() && time_step_s > 0.0) {
            return Err(Error::InvalidConfig("time_step_s must be positive".into()));
        }
        Ok(ChannelRealization {
            samples,
            time_step_s,
            start_time_s: 0.0,
            paths: Vec::new(),
            config,
        })
    }

    /// `H ≡ 1` over `n` samples.
    pub fn unity(n: usize, time_step_s: f64) -> Result<Self> {
        let config = ChannelConfig {
            velocity_mps: 0.0,
            path_count: 1,
            ..ChannelConfig::new(1.0, 0.0, 0)
        };
        Self::from_samples(vec![C64::new(1.0, 0.0); n], time_step_s, config)
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [C64] {
        &mut self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time_step_s(&self) -> f64 {
        self.time_step_s
    }

    pub fn start_time_s(&self) -> f64 {
        self.start_time_s
    }

    pub fn end_time_s(&self) -> f64 {
        self.time_of(self.samples.len() - 1)
    }

    pub fn paths(&self) -> &[PathComponent] {
        &self.paths
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.config
    }

    pub fn time_of(&self, index: usize) -> f64 {
        self.start_time_s + index as f64 * self.time_step_s
    }

    /// Nearest grid index for `t`. Times within half a step of either end
    /// still resolve.
    pub fn index_of(&self, t_s: f64) -> Result<usize> {
        let pos = (t_s - self.start_time_s) / self.time_step_s;
        let last = (self.samples.len() - 1) as f64;
        if !pos.is_finite() || pos < -0.5 || pos > last + 0.5 {
            return Err(Error::OutOfSpan {
                t_s,
                start_s: self.start_time_s,
                end_s: self.end_time_s(),
            });
        }
        Ok(pos.round().clamp(0.0, last) as usize)
    }

    /// CSI at `t` (nearest grid point).
    pub fn at(&self, t_s: f64) -> Result<C64> {
        self.index_of(t_s).map(|i| self.samples[i])
    }

    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|h| h.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

/// Signal-to-noise ratio, with an explicit sentinel for the noiseless channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Snr {
    Db(f64),
    Noiseless,
}

impl Snr {
    pub fn is_noiseless(self) -> bool {
        matches!(self, Snr::Noiseless)
    }

    /// `10^(-snr/10)`, or zero for the noiseless sentinel.
    pub fn inverse_linear(self) -> f64 {
        match self {
            Snr::Db(db) => 10f64.powf(-db / 10.0),
            Snr::Noiseless => 0.0,
        }
    }
}

impl fmt::Display for Snr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Snr::Db(db) => write!(f, "{db}"),
            Snr::Noiseless => f.write_str("inf"),
        }
    }
}

impl FromStr for Snr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "noiseless" => Ok(Snr::Noiseless),
            _ => s
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Snr::Db)
                .ok_or_else(|| Error::InvalidConfig(format!("bad SNR value '{s}'"))),
        }
    }
}

impl Serialize for Snr {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Snr::Db(db) => serializer.serialize_f64(*db),
            Snr::Noiseless => serializer.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseSpec {
    pub snr: Snr,
    /// Average symbol energy `E_s`.
    pub symbol_power: f64,
}

impl NoiseSpec {
    pub fn new(snr: Snr, symbol_power: f64) -> Result<Self> {
        if !(symbol_power.is_finite() && symbol_power > 0.0) {
            return Err(Error::InvalidConfig("symbol_power must be positive".into()));
        }
        Ok(NoiseSpec { snr, symbol_power })
    }

    pub fn noiseless() -> Self {
        NoiseSpec {
            snr: Snr::Noiseless,
            symbol_power: 1.0,
        }
    }

    /// `σ_n² = E_s · 10^(-snr/10)`.
    pub fn variance(&self) -> f64 {
        self.symbol_power * self.snr.inverse_linear()
    }

    /// One complex Gaussian draw with variance `σ_n²` split evenly between
    /// the real and imaginary parts.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> C64 {
        if self.snr.is_noiseless() {
            return C64::new(0.0, 0.0);
        }
        let sigma = (self.variance() / 2.0).sqrt();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(sigma * re, sigma * im)
    }
}

/// `Y = H·X + N`, element-wise.
pub fn apply_channel<R: Rng + ?Sized>(
    x: &[C64],
    h: &[C64],
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<Vec<C64>> {
    if x.len() != h.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: h.len(),
        });
    }
    Ok(x.iter()
        .zip(h)
        .map(|(&x, &h)| h * x + noise.sample(rng))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetKind {
    Noiseless,
    Awgn,
    Dynamic,
}

/// The three channel conditions used for staged evaluation.
#[derive(Debug, Clone)]
pub enum ChannelPreset {
    /// `Y = X`.
    Noiseless,
    /// `Y = X + N`.
    Awgn(NoiseSpec),
    /// `Y = H·X + N` over a fading realization.
    Dynamic(ChannelRealization, NoiseSpec),
}

/// Builds a preset. `dynamic` is required for [`PresetKind::Dynamic`] and
/// ignored otherwise.
pub fn channel_preset(
    kind: PresetKind,
    noise: NoiseSpec,
    dynamic: Option<ChannelRealization>,
) -> Result<ChannelPreset> {
    match kind {
        PresetKind::Noiseless => Ok(ChannelPreset::Noiseless),
        PresetKind::Awgn => Ok(ChannelPreset::Awgn(noise)),
        PresetKind::Dynamic => dynamic
            .map(|r| ChannelPreset::Dynamic(r, noise))
            .ok_or_else(|| Error::InvalidConfig("dynamic preset needs a realization".into())),
    }
}

impl ChannelPreset {
    pub fn kind(&self) -> PresetKind {
        match self {
            ChannelPreset::Noiseless => PresetKind::Noiseless,
            ChannelPreset::Awgn(_) => PresetKind::Awgn,
            ChannelPreset::Dynamic(..) => PresetKind::Dynamic,
        }
    }

    /// Passes `x` through the preset. The dynamic preset consumes CSI samples
    /// from the start of its realization, one per symbol.
    pub fn apply<R: Rng + ?Sized>(&self, x: &[C64], rng: &mut R) -> Result<Vec<C64>> {
        match self {
            ChannelPreset::Noiseless => Ok(x.to_vec()),
            ChannelPreset::Awgn(noise) => Ok(x.iter().map(|&s| s + noise.sample(rng)).collect()),
            ChannelPreset::Dynamic(realization, noise) => {
                let h = realization.samples();
                if h.len() < x.len() {
                    return Err(Error::LengthMismatch {
                        expected: x.len(),
                        actual: h.len(),
                    });
                }
                apply_channel(x, &h[..x.len()], noise, rng)
            }
        }
    }
}

/// Normalized autocorrelation magnitude `|Σ H[i+lag] H*[i]| / Σ |H[i]|²`.
pub fn autocorrelation(samples: &[C64], lag: usize) -> f64 {
    if lag >= samples.len() {
        return 0.0;
    }
    let n = samples.len() - lag;
    let cross: C64 = (0..n).map(|i| samples[i + lag] * samples[i].conj()).sum();
    let power: f64 = samples[..n].iter().map(|h| h.norm_sqr()).sum();
    if power > 0.0 {
        cross.norm() / power
    } else {
        0.0
    }
}
