//! Slot quality scores and the impairment oracle they are judged against.
//!
//! A slot's risk combines the zero-forcing noise gain `σ²/|Ĥ|²` with the
//! expected CSI mismatch after an aging delay `τ` under Clarke's model,
//! `E|H(t+τ) - H(t)|² = 2(1 - J₀(2π f_D τ))`. Scores are `tanh(risk)`;
//! ordering always uses the risk itself, so saturation near 1 never creates
//! artificial ties.

use std::f64::consts::TAU;

use serde::Serialize;

use super::{FeatureBlock, ZF_FLOOR};
use crate::aging::{tau_ag, unit_times, Scenario, Side, SideInfo};
use crate::error::{Error, Result};

const SCORE_MIN: f64 = f64::MIN_POSITIVE;
const SCORE_MAX: f64 = 1.0 - f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScorerParams {
    pub noise_weight: f64,
    pub aging_weight: f64,
}

impl Default for ScorerParams {
    fn default() -> Self {
        ScorerParams {
            noise_weight: 1.0,
            aging_weight: 1.0,
        }
    }
}

/// Per-slot scores in `(0, 1)`; smaller means a better slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotScore {
    scores: Vec<f64>,
    /// Monotone pre-image of `scores` used for ordering.
    risk: Vec<f64>,
}

impl SlotScore {
    /// Wraps externally produced scores.
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if let Some(bad) = scores.iter().find(|s| !(**s > 0.0 && **s < 1.0)) {
            return Err(Error::InvalidConfig(format!("score {bad} outside (0, 1)")));
        }
        Ok(SlotScore {
            risk: scores.clone(),
            scores,
        })
    }

    /// Scores from non-negative risks via `tanh`, clamped into the open interval.
    pub fn from_risk(risk: Vec<f64>) -> Self {
        let scores = risk
            .iter()
            .map(|r| r.tanh().clamp(SCORE_MIN, SCORE_MAX))
            .collect();
        SlotScore { scores, risk }
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn risk(&self) -> &[f64] {
        &self.risk
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Slot indices from best to worst; ties resolve to the lower index.
    pub fn ascending_slots(&self) -> Vec<usize> {
        let mut slots: Vec<usize> = (0..self.risk.len()).collect();
        slots.sort_by(|&a, &b| self.risk[a].total_cmp(&self.risk[b]).then(a.cmp(&b)));
        slots
    }
}

/// Aging delay attributed to slot `k` (1-based): `τ_ag(T[k])`, or zero when
/// channel prediction is available.
pub fn tau_permu(
    k: usize,
    t_beg: f64,
    t_end: f64,
    slots: usize,
    pilot_period_s: f64,
    scenario: Scenario,
) -> Result<f64> {
    if k == 0 || k > slots {
        return Err(Error::IndexOutOfRange {
            index: k,
            max: slots,
        });
    }
    match scenario {
        Scenario::WithCp => Ok(0.0),
        Scenario::Aging => tau_ag(unit_times(t_beg, t_end, slots)?[k - 1], pilot_period_s),
    }
}

/// `2(1 - J₀(2π f_D τ))`.
pub fn clarke_mismatch(doppler_hz: f64, tau_s: f64) -> f64 {
    2.0 * (1.0 - libm::j0(TAU * doppler_hz * tau_s))
}

/// Scores every slot from transmitter-side information only, so both ends
/// can reproduce the same result.
pub fn score_slots(info: &SideInfo, params: &ScorerParams) -> Result<SlotScore> {
    if info.side != Side::Tx {
        return Err(Error::InvalidConfig(
            "slot scores must be computed from the transmitter view".into(),
        ));
    }
    let inverse_snr = info.snr.inverse_linear();
    let risk = info
        .slot_csi
        .iter()
        .zip(&info.aging_delays)
        .enumerate()
        .map(|(k, (h, &tau))| {
            let mag = h.norm();
            if mag < ZF_FLOOR {
                return Err(Error::ZfSingular {
                    unit: k + 1,
                    magnitude: mag,
                });
            }
            let noise = params.noise_weight * inverse_snr / (mag * mag);
            let aging = match info.scenario {
                Scenario::WithCp => 0.0,
                Scenario::Aging => params.aging_weight * clarke_mismatch(info.doppler_hz, tau),
            };
            Ok(noise + aging)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SlotScore::from_risk(risk))
}

/// Squared reconstruction error of each complex slot, summed over tokens
/// and both halves. This is the argument of the `tanh` in [`impairment`].
pub fn impairment_energy(sent: &FeatureBlock, received: &FeatureBlock) -> Result<Vec<f64>> {
    sent.check_shape(received)?;
    let k = sent.slot_count();
    let mut energy = vec![0.0; k];
    for (s, r) in sent.rows().zip(received.rows()) {
        for (slot, e) in energy.iter_mut().enumerate() {
            let dr = s[slot] - r[slot];
            let di = s[slot + k] - r[slot + k];
            *e += dr * dr + di * di;
        }
    }
    Ok(energy)
}

/// `tanh` of [`impairment_energy`], in `[0, 1)`.
pub fn impairment(sent: &FeatureBlock, received: &FeatureBlock) -> Result<Vec<f64>> {
    Ok(impairment_energy(sent, received)?
        .into_iter()
        .map(f64::tanh)
        .collect())
}
