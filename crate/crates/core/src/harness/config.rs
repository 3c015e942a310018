//! Experiment settings and their flat `key = value` file format.
//!
//! Keys match the CLI long flags; `_` and `-` are interchangeable. Lists
//! are comma-separated. `#` starts a comment.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::aging::{Scenario, TauAttnSign, DEFAULT_PILOT_PERIOD_S};
use crate::channel::{Snr, DEFAULT_TIME_STEP_S};
use crate::codec::CodecConfig;
use crate::error::{Error, Result};
use crate::transport::ScorerParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    NmseTable,
    PermGain,
    SnrSweep,
    Transmit,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::NmseTable => "nmse-table",
            ExperimentKind::PermGain => "perm-gain",
            ExperimentKind::SnrSweep => "snr-sweep",
            ExperimentKind::Transmit => "transmit",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "nmse-table" => Ok(ExperimentKind::NmseTable),
            "perm-gain" => Ok(ExperimentKind::PermGain),
            "snr-sweep" => Ok(ExperimentKind::SnrSweep),
            "transmit" => Ok(ExperimentKind::Transmit),
            other => Err(Error::InvalidConfig(format!(
                "unknown experiment '{other}'"
            ))),
        }
    }
}

/// How a trial arranges feature-channels on slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PermutationMode {
    Scored,
    Identity,
}

impl PermutationMode {
    pub fn name(self) -> &'static str {
        match self {
            PermutationMode::Scored => "scored",
            PermutationMode::Identity => "identity",
        }
    }
}

impl FromStr for PermutationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "scored" => Ok(PermutationMode::Scored),
            "identity" => Ok(PermutationMode::Identity),
            other => Err(Error::InvalidConfig(format!(
                "unknown permutation mode '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub velocities_mps: Vec<f64>,
    pub snr_list: Vec<Snr>,
    pub scenario: Scenario,
    pub mode: PermutationMode,
    pub pilot_period_s: f64,
    pub carrier_hz: f64,
    pub trials: usize,
    pub seed: u64,
    pub codec: CodecConfig,
    pub scorer: ScorerParams,
    pub tau_attn_sign: TauAttnSign,
    pub trajectory_s: f64,
    pub time_step_s: f64,
    /// Input images; empty selects the synthetic scene set.
    pub images: Vec<PathBuf>,
    pub image_count: usize,
    pub image_size: usize,
    /// Where outputs go; not part of the result, so not serialized.
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
    pub svg: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::PermGain,
            velocities_mps: vec![2.0, 6.0, 10.0, 15.0, 21.0],
            snr_list: (-2..=6).map(|i| Snr::Db(3.0 * i as f64)).collect(),
            scenario: Scenario::Aging,
            mode: PermutationMode::Scored,
            pilot_period_s: DEFAULT_PILOT_PERIOD_S,
            carrier_hz: 2.4e9,
            trials: 100,
            seed: 0,
            codec: CodecConfig::new(16, 128),
            scorer: ScorerParams::default(),
            tau_attn_sign: TauAttnSign::Literal,
            trajectory_s: 4.0,
            time_step_s: DEFAULT_TIME_STEP_S,
            images: Vec::new(),
            image_count: 8,
            image_size: 128,
            out_dir: None,
            svg: false,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse '{value}'")))
}

fn parse_list<T>(key: &str, value: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let items = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect::<Result<Vec<_>>>()?;
    if items.is_empty() {
        return Err(Error::InvalidConfig(format!("{key}: empty list")));
    }
    Ok(items)
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::InvalidConfig(format!(
            "{key}: expected a boolean, got '{value}'"
        ))),
    }
}

impl ExperimentConfig {
    /// Every key recognized by [`ExperimentConfig::set`].
    pub const KEYS: &'static [&'static str] = &[
        "experiment",
        "velocities",
        "snr",
        "scenario",
        "mode",
        "pilot-period-ms",
        "carrier-hz",
        "trials",
        "seed",
        "block-edge",
        "kept-coefficients",
        "noise-weight",
        "aging-weight",
        "tau-attn-sign",
        "trajectory-s",
        "time-step-s",
        "images",
        "image-count",
        "image-size",
        "out",
        "svg",
    ];

    pub fn for_experiment(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment: kind,
            ..Default::default()
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().to_ascii_lowercase().replace('_', "-");
        let v = value.trim();
        match key.as_str() {
            "experiment" => self.experiment = v.parse()?,
            "velocities" => {
                self.velocities_mps = parse_list(&key, v, |s| parse_num(&key, s))?;
            }
            "snr" => self.snr_list = parse_list(&key, v, str::parse)?,
            "scenario" => self.scenario = v.parse()?,
            "mode" => self.mode = v.parse()?,
            "pilot-period-ms" => self.pilot_period_s = parse_num::<f64>(&key, v)? / 1e3,
            "carrier-hz" => self.carrier_hz = parse_num(&key, v)?,
            "trials" => self.trials = parse_num(&key, v)?,
            "seed" => self.seed = parse_num(&key, v)?,
            "block-edge" => self.codec.block_edge = parse_num(&key, v)?,
            "kept-coefficients" => self.codec.kept_coefficients = parse_num(&key, v)?,
            "noise-weight" => self.scorer.noise_weight = parse_num(&key, v)?,
            "aging-weight" => self.scorer.aging_weight = parse_num(&key, v)?,
            "tau-attn-sign" => {
                self.tau_attn_sign = match v.to_ascii_lowercase().as_str() {
                    "literal" => TauAttnSign::Literal,
                    "elapsed" => TauAttnSign::Elapsed,
                    _ => return Err(Error::InvalidConfig(format!("{key}: '{v}'"))),
                }
            }
            "trajectory-s" => self.trajectory_s = parse_num(&key, v)?,
            "time-step-s" => self.time_step_s = parse_num(&key, v)?,
            "images" => self.images = parse_list(&key, v, |s| Ok(PathBuf::from(s)))?,
            "image-count" => self.image_count = parse_num(&key, v)?,
            "image-size" => self.image_size = parse_num(&key, v)?,
            "out" => self.out_dir = Some(PathBuf::from(v)),
            "svg" => self.svg = parse_bool(&key, v)?,
            _ => return Err(Error::InvalidConfig(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Applies a config file's contents on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected 'key = value'", n + 1))
            })?;
            self.set(key, value)
                .map_err(|e| Error::InvalidConfig(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.velocities_mps.is_empty() || self.snr_list.is_empty() {
            return bad("sweep lists must be non-empty".into());
        }
        if let Some(v) = self
            .velocities_mps
            .iter()
            .find(|v| !(v.is_finite() && **v >= 0.0))
        {
            return bad(format!("velocity {v} must be non-negative"));
        }
        if !(self.pilot_period_s.is_finite() && self.pilot_period_s > 0.0) {
            return bad("pilot period must be positive".into());
        }
        if !(self.carrier_hz.is_finite() && self.carrier_hz > 0.0) {
            return bad("carrier frequency must be positive".into());
        }
        if !(self.time_step_s.is_finite() && self.time_step_s > 0.0) {
            return bad("time step must be positive".into());
        }
        if self.images.is_empty() {
            if self.image_count == 0 {
                return bad("image-count must be at least 1".into());
            }
            self.codec.validate(self.image_size, self.image_size, 3)?;
        }
        let window = self.window_s();
        if !(self.trajectory_s >= window + self.time_step_s) {
            return bad(format!(
                "trajectory {} s cannot hold a {window} s transmission window",
                self.trajectory_s
            ));
        }
        Ok(())
    }

    /// Transmission window `K·Δt`.
    pub fn window_s(&self) -> f64 {
        self.codec.slot_count() as f64 * self.time_step_s
    }

    /// Config-file rendering that [`ExperimentConfig::parse`] reads back.
    pub fn to_text(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let mut lines = vec![
            format!("experiment = {}", self.experiment),
            format!(
                "velocities = {}",
                join(self.velocities_mps.iter().map(f64::to_string).collect())
            ),
            format!(
                "snr = {}",
                join(self.snr_list.iter().map(Snr::to_string).collect())
            ),
            format!("scenario = {}", self.scenario.name()),
            format!("mode = {}", self.mode.name()),
            format!("pilot-period-ms = {}", self.pilot_period_s * 1e3),
            format!("carrier-hz = {}", self.carrier_hz),
            format!("trials = {}", self.trials),
            format!("seed = {}", self.seed),
            format!("block-edge = {}", self.codec.block_edge),
            format!("kept-coefficients = {}", self.codec.kept_coefficients),
            format!("noise-weight = {}", self.scorer.noise_weight),
            format!("aging-weight = {}", self.scorer.aging_weight),
            format!(
                "tau-attn-sign = {}",
                match self.tau_attn_sign {
                    TauAttnSign::Literal => "literal",
                    TauAttnSign::Elapsed => "elapsed",
                }
            ),
            format!("trajectory-s = {}", self.trajectory_s),
            format!("time-step-s = {}", self.time_step_s),
            format!("image-count = {}", self.image_count),
            format!("image-size = {}", self.image_size),
            format!("svg = {}", self.svg),
        ];
        if !self.images.is_empty() {
            lines.push(format!(
                "images = {}",
                join(
                    self.images
                        .iter()
                        .map(|p| p.display().to_string())
                        .collect()
                )
            ));
        }
        if let Some(out) = &self.out_dir {
            lines.push(format!("out = {}", out.display()));
        }
        lines.join("\n") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.snr_list.len(), 9);
        assert_eq!(cfg.snr_list[0], Snr::Db(-6.0));
        assert_eq!(cfg.snr_list[8], Snr::Db(18.0));
        assert!((cfg.window_s() - 2e-3).abs() < 1e-15);
    }

    #[test]
    fn parses_flat_file() {
        let cfg = ExperimentConfig::parse(
            "# aging sweep\n\
             experiment = nmse-table\n\
             velocities = 2, 6 ,10\n\
             snr = -3, inf\n\
             pilot_period_ms = 2.5   # shorter\n\
             scenario = withcp\n\
             seed = 7\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::NmseTable);
        assert_eq!(cfg.velocities_mps, vec![2.0, 6.0, 10.0]);
        assert_eq!(cfg.snr_list, vec![Snr::Db(-3.0), Snr::Noiseless]);
        assert!((cfg.pilot_period_s - 2.5e-3).abs() < 1e-18);
        assert_eq!(cfg.scenario, Scenario::WithCp);
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn text_round_trips() {
        let mut cfg = ExperimentConfig::for_experiment(ExperimentKind::SnrSweep);
        cfg.set("snr", "0,inf").unwrap();
        cfg.set("out", "/tmp/x").unwrap();
        cfg.set("images", "a.ppm,b.png").unwrap();
        let mut back = ExperimentConfig::default();
        back.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse("trials = 0").is_err());
        assert!(ExperimentConfig::parse("velocities =").is_err());
        assert!(ExperimentConfig::parse("bogus = 1").is_err());
        assert!(ExperimentConfig::parse("seed 4").is_err());
        assert!(ExperimentConfig::parse("kept-coefficients = 7").is_err());
        assert!(ExperimentConfig::parse("trajectory-s = 0.001").is_err());
        assert!(ExperimentConfig::parse("velocities = -1").is_err());
    }
}
