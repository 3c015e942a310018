use std::path::Path;

use serde::Serialize;

use super::config::{ExperimentConfig, PermutationMode};
use super::trial::{
    run_trial, trial_seed, LinkSettings, Payload, TrialChannel, TrialOutcome, TrialRecord,
};
use crate::aging::{tau_attn, AgingSchedule, Scenario, Side};
use crate::channel::{ChannelConfig, ChannelRealization, Snr};
use crate::codec::{compression_ratio, load_image, synth, Image};
use crate::error::{Error, Result};
use crate::metrics::{mean_db, Decibels, PSNR_CAP_DB};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Maps `f` over `0..n`, in parallel when enabled; output order is the index order.
fn map_indices<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sample mean and standard deviation (`n − 1` denominator; 0 for one value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Loads the configured images, or builds the synthetic scene set.
pub fn load_payloads(cfg: &ExperimentConfig) -> Result<Vec<Payload>> {
    if cfg.images.is_empty() {
        return synth::scene_set(0, cfg.image_count, cfg.image_size, cfg.image_size)
            .into_iter()
            .enumerate()
            .map(|(i, img)| Payload::new(format!("synth-{i}"), img, &cfg.codec))
            .collect();
    }
    cfg.images
        .iter()
        .map(|p| payload_from_path(p, cfg))
        .collect()
}

fn payload_from_path(path: &Path, cfg: &ExperimentConfig) -> Result<Payload> {
    let img = load_image(path)?;
    let name = path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    );
    Payload::new(name, img, &cfg.codec)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NmseRow {
    pub velocity_mps: f64,
    pub mean_nmse: f64,
    pub std_nmse: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NmseTrial {
    pub trial_seed: u64,
    pub velocity_mps: f64,
    pub nmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NmseTable {
    pub scenario: Scenario,
    pub rows: Vec<NmseRow>,
    pub trials: Vec<NmseTrial>,
}

/// Mean CSI NMSE over each trial's whole trajectory, per velocity.
pub fn run_nmse_table(cfg: &ExperimentConfig) -> Result<NmseTable> {
    cfg.validate()?;
    let per_trial = map_indices(cfg.trials, |i| {
        let seed = trial_seed(cfg.seed, i);
        cfg.velocities_mps
            .iter()
            .map(|&v| {
                let chan = ChannelConfig::new(cfg.carrier_hz, v, seed);
                let r = ChannelRealization::generate(&chan, cfg.trajectory_s, cfg.time_step_s)?;
                let nmse =
                    AgingSchedule::new(&r, cfg.pilot_period_s, cfg.scenario)?.trajectory_nmse()?;
                Ok(NmseTrial {
                    trial_seed: seed,
                    velocity_mps: v,
                    nmse,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let rows = cfg
        .velocities_mps
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let values: Vec<f64> = per_trial.iter().map(|t| t[j].nmse).collect();
            let (mean_nmse, std_nmse) = mean_std(&values);
            NmseRow {
                velocity_mps: v,
                mean_nmse,
                std_nmse,
                trials: values.len(),
            }
        })
        .collect();
    // velocity-major, like the summary rows
    let trials = (0..cfg.velocities_mps.len())
        .flat_map(|j| per_trial.iter().map(move |t| t[j].clone()))
        .collect();
    Ok(NmseTable {
        scenario: cfg.scenario,
        rows,
        trials,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainPair {
    pub trial_seed: u64,
    pub image: String,
    pub velocity_mps: f64,
    pub snr_db: Snr,
    pub psnr_scored_db: Decibels,
    pub psnr_identity_db: Decibels,
    pub gain_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainRow {
    pub velocity_mps: f64,
    pub snr_db: Snr,
    pub mean_psnr_scored_db: Decibels,
    pub mean_psnr_identity_db: Decibels,
    pub mean_gain_db: f64,
    pub std_gain_db: f64,
    /// Normal-approximation 95% interval of the mean gain.
    pub ci95_low_db: f64,
    pub ci95_high_db: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainTable {
    pub scenario: Scenario,
    pub rows: Vec<GainRow>,
    pub pairs: Vec<GainPair>,
}

/// Paired PSNR of scored against identity permutation on identical draws.
pub fn run_perm_gain(cfg: &ExperimentConfig) -> Result<GainTable> {
    cfg.validate()?;
    let link = LinkSettings::from_config(cfg);
    let payloads = load_payloads(cfg)?;
    if payloads.is_empty() {
        return Err(Error::InvalidConfig("no input images".into()));
    }
    let cells: Vec<(f64, Snr)> = cfg
        .velocities_mps
        .iter()
        .flat_map(|&v| cfg.snr_list.iter().map(move |&s| (v, s)))
        .collect();

    let per_trial = map_indices(cfg.trials, |i| {
        let seed = trial_seed(cfg.seed, i);
        let payload = &payloads[i % payloads.len()];
        let mut out = Vec::with_capacity(cells.len());
        for &v in &cfg.velocities_mps {
            let channel = TrialChannel::new(&link, seed, v)?;
            for &snr in &cfg.snr_list {
                let run = |mode| run_trial(&link, &channel, payload, snr, cfg.scenario, mode);
                let scored = run(PermutationMode::Scored)?.record.report.psnr_db;
                let identity = run(PermutationMode::Identity)?.record.report.psnr_db;
                out.push(GainPair {
                    trial_seed: seed,
                    image: payload.name.clone(),
                    velocity_mps: v,
                    snr_db: snr,
                    psnr_scored_db: scored,
                    psnr_identity_db: identity,
                    gain_db: scored.value_or(PSNR_CAP_DB) - identity.value_or(PSNR_CAP_DB),
                });
            }
        }
        Ok(out)
    })?;

    let rows = cells
        .iter()
        .enumerate()
        .map(|(c, &(velocity_mps, snr_db))| {
            let pairs: Vec<&GainPair> = per_trial.iter().map(|t| &t[c]).collect();
            let gains: Vec<f64> = pairs.iter().map(|p| p.gain_db).collect();
            let (mean, std) = mean_std(&gains);
            let half = Z95 * std / (gains.len() as f64).sqrt();
            let scored: Vec<Decibels> = pairs.iter().map(|p| p.psnr_scored_db).collect();
            let identity: Vec<Decibels> = pairs.iter().map(|p| p.psnr_identity_db).collect();
            GainRow {
                velocity_mps,
                snr_db,
                mean_psnr_scored_db: mean_db(&scored),
                mean_psnr_identity_db: mean_db(&identity),
                mean_gain_db: mean,
                std_gain_db: std,
                ci95_low_db: mean - half,
                ci95_high_db: mean + half,
                pairs: gains.len(),
            }
        })
        .collect();
    let pairs = (0..cells.len())
        .flat_map(|c| per_trial.iter().map(move |t| t[c].clone()))
        .collect();
    Ok(GainTable {
        scenario: cfg.scenario,
        rows,
        pairs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub velocity_mps: f64,
    pub snr_db: Snr,
    pub scenario: Scenario,
    pub mean_psnr_db: Decibels,
    pub std_psnr_db: f64,
    pub mean_nmse: f64,
    pub mean_spearman: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub mode: PermutationMode,
    /// Codec-only PSNR averaged over the image set.
    pub codec_psnr_db: Decibels,
    pub rows: Vec<SweepRow>,
    pub trials: Vec<TrialRecord>,
}

pub const SWEEP_SCENARIOS: [Scenario; 2] = [Scenario::WithCp, Scenario::Aging];

/// Mean PSNR per SNR for both scenarios on identical channel and noise draws.
pub fn run_snr_sweep(cfg: &ExperimentConfig) -> Result<SweepTable> {
    cfg.validate()?;
    let link = LinkSettings::from_config(cfg);
    let payloads = load_payloads(cfg)?;
    if payloads.is_empty() {
        return Err(Error::InvalidConfig("no input images".into()));
    }
    let cells: Vec<(f64, Scenario, Snr)> = cfg
        .velocities_mps
        .iter()
        .flat_map(|&v| {
            SWEEP_SCENARIOS
                .iter()
                .flat_map(move |&sc| cfg.snr_list.iter().map(move |&s| (v, sc, s)))
        })
        .collect();

    let per_trial = map_indices(cfg.trials, |i| {
        let seed = trial_seed(cfg.seed, i);
        let payload = &payloads[i % payloads.len()];
        let mut out = Vec::with_capacity(cells.len());
        for &v in &cfg.velocities_mps {
            let channel = TrialChannel::new(&link, seed, v)?;
            for sc in SWEEP_SCENARIOS {
                for &snr in &cfg.snr_list {
                    let mut record = run_trial(&link, &channel, payload, snr, sc, cfg.mode)?.record;
                    record.report.per_slot_impairment.clear();
                    out.push(record);
                }
            }
        }
        Ok(out)
    })?;

    let rows = cells
        .iter()
        .enumerate()
        .map(|(c, &(velocity_mps, scenario, snr_db))| {
            let recs: Vec<&TrialRecord> = per_trial.iter().map(|t| &t[c]).collect();
            let psnr: Vec<Decibels> = recs.iter().map(|r| r.report.psnr_db).collect();
            let capped: Vec<f64> = psnr.iter().map(|d| d.value_or(PSNR_CAP_DB)).collect();
            let nmse: Vec<f64> = recs.iter().map(|r| r.report.nmse).collect();
            let rho: Vec<f64> = recs
                .iter()
                .map(|r| r.report.score_impairment_spearman)
                .collect();
            SweepRow {
                velocity_mps,
                snr_db,
                scenario,
                mean_psnr_db: mean_db(&psnr),
                std_psnr_db: mean_std(&capped).1,
                mean_nmse: mean_std(&nmse).0,
                mean_spearman: mean_std(&rho).0,
                trials: recs.len(),
            }
        })
        .collect();

    let codec_psnr: Vec<Decibels> = payloads
        .iter()
        .map(|p| p.codec_mse(&cfg.codec).map(crate::metrics::psnr_from_mse))
        .collect::<Result<_>>()?;
    let trials = (0..cells.len())
        .flat_map(|c| per_trial.iter().map(move |t| t[c].clone()))
        .collect();
    Ok(SweepTable {
        mode: cfg.mode,
        codec_psnr_db: mean_db(&codec_psnr),
        rows,
        trials,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TransmitReport {
    pub record: TrialRecord,
    pub compression_ratio: String,
    pub t_end_s: f64,
    pub slot_scores: Vec<f64>,
    /// `slot_map[k]` is the 0-based complex feature-channel sent in slot `k`.
    pub slot_map: Vec<usize>,
    pub importance: Vec<usize>,
    pub tau_attn_tx_s: Vec<f64>,
    pub tau_attn_rx_s: Vec<f64>,
    pub invariant_violations: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct TransmitResult {
    pub original: Image,
    pub reconstructed: Image,
    pub report: TransmitReport,
}

/// One transmission at the first configured velocity and SNR. Uses the
/// given image, else the first configured image, else a synthetic scene.
pub fn run_transmit(cfg: &ExperimentConfig, image: Option<&Path>) -> Result<TransmitResult> {
    cfg.validate()?;
    let link = LinkSettings::from_config(cfg);
    let payload = match image.or(cfg.images.first().map(|p| p.as_path())) {
        Some(path) => payload_from_path(path, cfg)?,
        None => load_payloads(&ExperimentConfig {
            image_count: 1,
            ..cfg.clone()
        })?
        .remove(0),
    };
    let seed = trial_seed(cfg.seed, 0);
    let channel = TrialChannel::new(&link, seed, cfg.velocities_mps[0])?;
    let outcome: TrialOutcome = run_trial(
        &link,
        &channel,
        &payload,
        cfg.snr_list[0],
        cfg.scenario,
        cfg.mode,
    )?;

    let k = payload.block.slot_count();
    let taus = |side| {
        (1..=k)
            .map(|j| {
                tau_attn(
                    j,
                    side,
                    channel.t_beg,
                    channel.t_end,
                    k,
                    cfg.pilot_period_s,
                    cfg.tau_attn_sign,
                )
            })
            .collect::<Result<Vec<_>>>()
    };
    let (h, w, m) = payload.image.dims();
    let report = TransmitReport {
        compression_ratio: compression_ratio(&cfg.codec, h, w, m)?.to_string(),
        t_end_s: channel.t_end,
        slot_scores: outcome.scores.scores().to_vec(),
        slot_map: outcome.rule.slot_map().to_vec(),
        importance: payload.importance.clone(),
        tau_attn_tx_s: taus(Side::Tx)?,
        tau_attn_rx_s: taus(Side::Rx)?,
        invariant_violations: outcome.record.report.violations(),
        record: outcome.record,
    };
    Ok(TransmitResult {
        original: payload.image,
        reconstructed: outcome.reconstructed,
        report,
    })
}
