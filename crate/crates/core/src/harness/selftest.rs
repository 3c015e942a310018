//! Fast end-to-end invariant checks, run by the `selftest` subcommand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind, PermutationMode};
use super::experiments::run_perm_gain;
use super::output::gain_artifacts;
use super::trial::{run_trial, LinkSettings, Payload, TrialChannel};
use crate::aging::{tau_ag, Scenario};
use crate::channel::{NoiseSpec, Snr, C64};
use crate::codec::{synth, CodecConfig};
use crate::error::Result;
use crate::metrics::{measured_snr, Decibels};
use crate::transport::{
    demodulate, inverse_permute, modulate, permute, FeatureBlock, PermutationRule,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &'static str, result: Result<(bool, String)>) -> Check {
    match result {
        Ok((passed, detail)) => Check {
            name,
            passed,
            detail,
        },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn lossless_path(seed: u64) -> Result<(bool, String)> {
    let codec = CodecConfig::lossless(16, 3);
    let link = LinkSettings {
        trajectory_s: 0.05,
        codec,
        ..LinkSettings::from_config(&ExperimentConfig::default())
    };
    let payload = Payload::new("synth", synth::scene(seed, 64, 64), &codec)?;
    let channel = TrialChannel::new(&link, seed, 15.0)?;
    let out = run_trial(
        &link,
        &channel,
        &payload,
        Snr::Noiseless,
        Scenario::WithCp,
        PermutationMode::Scored,
    )?;
    let db = out.record.report.psnr_db;
    Ok((
        db.is_infinite() || db >= Decibels::Finite(50.0),
        format!("psnr {db} dB"),
    ))
}

fn round_trips(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..100 {
        let tokens = rng.random_range(1..8);
        let k = rng.random_range(1..8);
        let values = (0..tokens * 2 * k)
            .map(|_| rng.random_range(-10.0..10.0))
            .collect();
        let block = FeatureBlock::new(tokens, 2 * k, values)?;
        let mut map: Vec<usize> = (0..k).collect();
        for i in (1..k).rev() {
            map.swap(i, rng.random_range(0..=i));
        }
        let rule = PermutationRule::from_slot_map(map)?;
        let modem = demodulate(&modulate(&block, 0.0, 1e-3)?)?;
        let perm = inverse_permute(&permute(&block, &rule)?, &rule)?;
        if modem != block || perm != block {
            return Ok((false, "round trip altered a block".into()));
        }
    }
    Ok((true, "100 blocks".into()))
}

fn sawtooth(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tp = 4e-3;
    for _ in 0..10_000 {
        let t = rng.random_range(0.0..10.0);
        let tau = tau_ag(t, tp)?;
        if !(0.0..tp).contains(&tau) {
            return Ok((false, format!("tau_ag({t}) = {tau}")));
        }
    }
    let at_pilot = tau_ag(25.0 * tp, tp)?;
    Ok((
        at_pilot < 1e-12 || tp - at_pilot < 1e-12,
        "10000 points".into(),
    ))
}

fn noise_calibration(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sent = vec![C64::new(1.0, 0.0); 200_000];
    let mut worst: f64 = 0.0;
    for db in [0.0, 10.0] {
        let noise = NoiseSpec::new(Snr::Db(db), 1.0)?;
        let rx: Vec<C64> = sent.iter().map(|x| x + noise.sample(&mut rng)).collect();
        let got = measured_snr(&sent, &rx)?.value_or(f64::INFINITY);
        worst = worst.max((got - db).abs());
    }
    Ok((worst <= 0.1, format!("max deviation {worst:.4} dB")))
}

fn determinism(seed: u64) -> Result<(bool, String)> {
    let cfg = ExperimentConfig {
        experiment: ExperimentKind::PermGain,
        velocities_mps: vec![15.0],
        snr_list: vec![Snr::Db(6.0)],
        trials: 3,
        seed,
        trajectory_s: 0.05,
        image_count: 2,
        image_size: 64,
        svg: true,
        ..Default::default()
    };
    let a = gain_artifacts(&cfg, &run_perm_gain(&cfg)?)?;
    let b = gain_artifacts(&cfg, &run_perm_gain(&cfg)?)?;
    Ok((a == b, format!("{} artifacts compared", a.files.len())))
}

pub fn run_selftest(seed: u64) -> SelftestReport {
    SelftestReport {
        seed,
        checks: vec![
            check("lossless-path", lossless_path(seed)),
            check("round-trips", round_trips(seed)),
            check("sawtooth", sawtooth(seed)),
            check("noise-calibration", noise_calibration(seed)),
            check("determinism", determinism(seed)),
        ],
    }
}
