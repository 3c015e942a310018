//! Browser bindings for the `fadelink` simulator.
//!
//! Each export is a thin wrapper over a plain function that returns
//! `fadelink::Result`, so the logic stays testable off the browser.

use wasm_bindgen::prelude::*;

use fadelink::aging::{AgingSchedule, Scenario};
use fadelink::channel::{ChannelConfig, ChannelRealization, Snr, DEFAULT_TIME_STEP_S};
use fadelink::codec::{synth, Image};
use fadelink::harness::{run_nmse_table, run_transmit, ExperimentConfig, PermutationMode};
use fadelink::Result;

const DEMO_IMAGE_EDGE: usize = 64;

fn js(e: fadelink::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn demo_config(seed: u64, pilot_period_ms: f64) -> ExperimentConfig {
    ExperimentConfig {
        seed,
        pilot_period_s: pilot_period_ms / 1e3,
        image_count: 1,
        image_size: DEMO_IMAGE_EDGE,
        ..Default::default()
    }
}

/// `[t, |H|, |Ĥ|]` triples over `duration_ms`, flattened.
pub fn trace(
    velocity_mps: f64,
    seed: u64,
    pilot_period_ms: f64,
    duration_ms: f64,
) -> Result<Vec<f64>> {
    let cfg = demo_config(seed, pilot_period_ms);
    let chan = ChannelConfig::new(cfg.carrier_hz, velocity_mps, seed);
    let realization = ChannelRealization::generate(&chan, duration_ms / 1e3, DEFAULT_TIME_STEP_S)?;
    let schedule = AgingSchedule::new(&realization, cfg.pilot_period_s, Scenario::Aging)?;
    let mut out = Vec::with_capacity(3 * realization.len());
    for (i, h) in realization.samples().iter().enumerate() {
        let t = realization.time_of(i);
        out.extend([t, h.norm(), schedule.csi_estimate(t)?.norm()]);
    }
    Ok(out)
}

/// Mean NMSE per velocity, in the order given.
pub fn nmse_means(
    velocities: &[f64],
    trials: usize,
    seed: u64,
    pilot_period_ms: f64,
) -> Result<Vec<f64>> {
    let cfg = ExperimentConfig {
        velocities_mps: velocities.to_vec(),
        trials,
        trajectory_s: 1.0,
        ..demo_config(seed, pilot_period_ms)
    };
    Ok(run_nmse_table(&cfg)?
        .rows
        .iter()
        .map(|r| r.mean_nmse)
        .collect())
}

fn rgba(img: &Image) -> Vec<u8> {
    img.pixels()
        .chunks_exact(3)
        .flat_map(|p| [p[0], p[1], p[2], 255])
        .collect()
}

/// Outcome of one demo transmission.
#[wasm_bindgen]
pub struct TransmitView {
    edge: usize,
    original: Vec<u8>,
    reconstructed: Vec<u8>,
    psnr_db: f64,
    nmse: f64,
    scores: Vec<f64>,
    slot_map: Vec<u32>,
}

#[wasm_bindgen]
impl TransmitView {
    #[wasm_bindgen(getter)]
    pub fn edge(&self) -> usize {
        self.edge
    }

    /// RGBA bytes, ready for `ImageData`.
    pub fn original(&self) -> Vec<u8> {
        self.original.clone()
    }

    pub fn reconstructed(&self) -> Vec<u8> {
        self.reconstructed.clone()
    }

    /// `Infinity` for a bit-exact reconstruction.
    #[wasm_bindgen(getter)]
    pub fn psnr_db(&self) -> f64 {
        self.psnr_db
    }

    #[wasm_bindgen(getter)]
    pub fn nmse(&self) -> f64 {
        self.nmse
    }

    pub fn scores(&self) -> Vec<f64> {
        self.scores.clone()
    }

    /// Feature-channel carried by each slot.
    pub fn slot_map(&self) -> Vec<u32> {
        self.slot_map.clone()
    }
}

pub fn transmit_view(
    velocity_mps: f64,
    snr_db: f64,
    scenario: &str,
    mode: &str,
    seed: u64,
) -> Result<TransmitView> {
    let snr = if snr_db.is_infinite() {
        Snr::Noiseless
    } else {
        Snr::Db(snr_db)
    };
    let cfg = ExperimentConfig {
        velocities_mps: vec![velocity_mps],
        snr_list: vec![snr],
        scenario: scenario.parse()?,
        mode: mode.parse::<PermutationMode>()?,
        trajectory_s: 1.0,
        ..demo_config(seed, 4.0)
    };
    let result = run_transmit(&cfg, None)?;
    let report = result.report;
    Ok(TransmitView {
        edge: DEMO_IMAGE_EDGE,
        original: rgba(&result.original),
        reconstructed: rgba(&result.reconstructed),
        psnr_db: report.record.report.psnr_db.value_or(f64::INFINITY),
        nmse: report.record.report.nmse,
        scores: report.slot_scores,
        slot_map: report.slot_map.iter().map(|&c| c as u32).collect(),
    })
}

#[wasm_bindgen]
pub fn channel_trace(
    velocity_mps: f64,
    seed: u64,
    pilot_period_ms: f64,
    duration_ms: f64,
) -> std::result::Result<Vec<f64>, JsError> {
    trace(velocity_mps, seed, pilot_period_ms, duration_ms).map_err(js)
}

#[wasm_bindgen]
pub fn nmse_curve(
    velocities: &[f64],
    trials: usize,
    seed: u64,
    pilot_period_ms: f64,
) -> std::result::Result<Vec<f64>, JsError> {
    nmse_means(velocities, trials, seed, pilot_period_ms).map_err(js)
}

#[wasm_bindgen]
pub fn transmit_demo(
    velocity_mps: f64,
    snr_db: f64,
    scenario: &str,
    mode: &str,
    seed: u64,
) -> std::result::Result<TransmitView, JsError> {
    transmit_view(velocity_mps, snr_db, scenario, mode, seed).map_err(js)
}

/// A synthetic scene as RGBA, for previews before the first transmission.
#[wasm_bindgen]
pub fn scene_rgba(seed: u64) -> Vec<u8> {
    rgba(&synth::scene(seed, DEMO_IMAGE_EDGE, DEMO_IMAGE_EDGE))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_freezes_estimate_between_pilots() {
        let t = trace(15.0, 1, 4.0, 20.0).unwrap();
        assert_eq!(t.len() % 3, 0);
        // first sample sits on a pilot
        assert_eq!(t[1], t[2]);
        let estimates: Vec<f64> = t.chunks(3).take(100).map(|c| c[2]).collect();
        assert_eq!(estimates[1], estimates[0]);
    }

    #[test]
    fn nmse_grows_with_speed() {
        let m = nmse_means(&[2.0, 21.0], 4, 0, 4.0).unwrap();
        assert!(m[1] > m[0]);
    }

    #[test]
    fn transmit_view_shapes() {
        let v = transmit_view(15.0, 6.0, "aging", "scored", 0).unwrap();
        assert_eq!(v.original().len(), 4 * v.edge() * v.edge());
        assert_eq!(v.reconstructed().len(), v.original().len());
        assert_eq!(v.scores().len(), v.slot_map().len());
        assert!(v.psnr_db().is_finite());
        assert!(transmit_view(15.0, 6.0, "sideways", "scored", 0).is_err());
    }

    #[test]
    fn scene_is_rgba() {
        assert_eq!(scene_rgba(2).len(), 4 * DEMO_IMAGE_EDGE * DEMO_IMAGE_EDGE);
    }
}
