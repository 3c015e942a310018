//! Feature blocks on the air.
//!
//! A block of `L` tokens by `C` feature-channels is sent as `K = C/2` time
//! units. Unit `k` carries the `L` complex symbols `F[l][k] + j·F[l][k+K]`
//! and sees one CSI value, `H(T[k])`, for all of them. The receiver
//! equalizes each unit by the CSI estimate available at `T[k]`.

mod permutation;
mod scoring;

pub use permutation::{build_permutation, inverse_permute, permute, PermutationRule};
pub use scoring::{
    clarke_mismatch, impairment, impairment_energy, score_slots, tau_permu, ScorerParams, SlotScore,
};

use rand::Rng;
use serde::Serialize;

use crate::aging::{unit_times, AgingSchedule};
use crate::channel::{NoiseSpec, C64};
use crate::error::{Error, Result};

/// Smallest CSI-estimate magnitude zero-forcing will divide by.
pub const ZF_FLOOR: f64 = 1e-9;

/// `L × C` real matrix, row-major (token-major).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureBlock {
    tokens: usize,
    channels: usize,
    values: Vec<f64>,
}

impl FeatureBlock {
    pub fn new(tokens: usize, channels: usize, values: Vec<f64>) -> Result<Self> {
        if !channels.is_multiple_of(2) {
            return Err(Error::OddChannelCount(channels));
        }
        if values.len() != tokens * channels {
            return Err(Error::LengthMismatch {
                expected: tokens * channels,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("feature values must be finite".into()));
        }
        Ok(FeatureBlock {
            tokens,
            channels,
            values,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let channels = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != channels) {
            return Err(Error::LengthMismatch {
                expected: channels,
                actual: bad.len(),
            });
        }
        Self::new(rows.len(), channels, rows.concat())
    }

    pub fn zeros(tokens: usize, channels: usize) -> Result<Self> {
        Self::new(tokens, channels, vec![0.0; tokens * channels])
    }

    pub fn token_count(&self) -> usize {
        self.tokens
    }

    pub fn channel_count(&self) -> usize {
        self.channels
    }

    /// Number of complex slots, `C/2`.
    pub fn slot_count(&self) -> usize {
        self.channels / 2
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.tokens, self.channels)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, token: usize, channel: usize) -> f64 {
        self.values[token * self.channels + channel]
    }

    pub fn row(&self, token: usize) -> &[f64] {
        &self.values[token * self.channels..(token + 1) * self.channels]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.channels.max(1))
    }

    /// Mean of the squared values.
    pub fn mean_power(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64
    }

    pub(crate) fn check_shape(&self, other: &FeatureBlock) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                actual: other.shape(),
            });
        }
        Ok(())
    }
}

/// `K` units of `L` complex symbols with their transmission instants.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    units: Vec<Vec<C64>>,
    unit_times: Vec<f64>,
}

impl SymbolFrame {
    pub fn new(units: Vec<Vec<C64>>, unit_times: Vec<f64>) -> Result<Self> {
        if units.len() != unit_times.len() {
            return Err(Error::LengthMismatch {
                expected: units.len(),
                actual: unit_times.len(),
            });
        }
        if let Some(first) = units.first() {
            if let Some(bad) = units.iter().find(|u| u.len() != first.len()) {
                return Err(Error::LengthMismatch {
                    expected: first.len(),
                    actual: bad.len(),
                });
            }
        }
        if unit_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig(
                "unit times must be strictly increasing".into(),
            ));
        }
        Ok(SymbolFrame { units, unit_times })
    }

    pub fn units(&self) -> &[Vec<C64>] {
        &self.units
    }

    pub fn unit_times(&self) -> &[f64] {
        &self.unit_times
    }

    pub fn unit_count(&self) -> usize {
        self.units.len()
    }

    pub fn symbols_per_unit(&self) -> usize {
        self.units.first().map_or(0, Vec::len)
    }

    /// All symbols in transmission order.
    pub fn symbols(&self) -> impl Iterator<Item = &C64> {
        self.units.iter().flatten()
    }

    /// Mean `|s|²` over the frame.
    pub fn mean_power(&self) -> f64 {
        let n = self.unit_count() * self.symbols_per_unit();
        if n == 0 {
            return 0.0;
        }
        self.symbols().map(|s| s.norm_sqr()).sum::<f64>() / n as f64
    }
}

/// Packs a block into `K = C/2` units, channel-major: unit `k` holds every
/// token's `F[l][k] + j·F[l][k+K]`.
pub fn modulate(block: &FeatureBlock, t_beg: f64, t_end: f64) -> Result<SymbolFrame> {
    if !block.channel_count().is_multiple_of(2) {
        return Err(Error::OddChannelCount(block.channel_count()));
    }
    let k_units = block.slot_count();
    let times = unit_times(t_beg, t_end, k_units)?;
    let units = (0..k_units)
        .map(|k| {
            block
                .rows()
                .map(|row| C64::new(row[k], row[k + k_units]))
                .collect()
        })
        .collect();
    SymbolFrame::new(units, times)
}

/// Inverse of [`modulate`].
pub fn demodulate(frame: &SymbolFrame) -> Result<FeatureBlock> {
    let k_units = frame.unit_count();
    let tokens = frame.symbols_per_unit();
    let channels = 2 * k_units;
    let mut values = vec![0.0; tokens * channels];
    for (k, unit) in frame.units().iter().enumerate() {
        for (l, s) in unit.iter().enumerate() {
            values[l * channels + k] = s.re;
            values[l * channels + k + k_units] = s.im;
        }
    }
    FeatureBlock::new(tokens, channels, values)
}

/// Sends every unit through the channel and zero-forces it:
/// `ŝ = (H(T[k])·s + N) / Ĥ(T[k])`.
pub fn transmit<R: Rng + ?Sized>(
    frame: &SymbolFrame,
    schedule: &AgingSchedule<'_>,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<SymbolFrame> {
    let gains = frame
        .unit_times()
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let h = schedule.truth(t)?;
            let est = schedule.csi_estimate(t)?;
            if est.norm() < ZF_FLOOR {
                return Err(Error::ZfSingular {
                    unit: k + 1,
                    magnitude: est.norm(),
                });
            }
            Ok((h, est))
        })
        .collect::<Result<Vec<_>>>()?;

    let units = frame
        .units()
        .iter()
        .zip(&gains)
        .map(|(unit, &(h, est))| {
            unit.iter()
                .map(|&s| (h * s + noise.sample(rng)) / est)
                .collect()
        })
        .collect();
    SymbolFrame::new(units, frame.unit_times().to_vec())
}

/// Forward map of the whole air interface: modulate, transmit, demodulate.
pub fn perturb<R: Rng + ?Sized>(
    block: &FeatureBlock,
    schedule: &AgingSchedule<'_>,
    noise: &NoiseSpec,
    t_beg: f64,
    t_end: f64,
    rng: &mut R,
) -> Result<FeatureBlock> {
    let frame = modulate(block, t_beg, t_end)?;
    let received = transmit(&frame, schedule, noise, rng)?;
    demodulate(&received)
}
