//! Image quality and rank statistics.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::channel::C64;
use crate::codec::Image;
use crate::error::{Error, Result};

pub use crate::aging::csi_nmse as nmse;

/// Peak signal value of 8-bit samples.
pub const PEAK: f64 = 255.0;

/// A decibel figure that is `+∞` exactly when the error is zero.
/// Serializes as a number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum Decibels {
    Finite(f64),
    Infinite,
}

impl Decibels {
    fn from_ratio(signal: f64, error: f64) -> Self {
        if error == 0.0 {
            Decibels::Infinite
        } else {
            Decibels::Finite(10.0 * (signal / error).log10())
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Decibels::Infinite)
    }

    /// Finite value, or `cap` for the sentinel.
    pub fn value_or(self, cap: f64) -> f64 {
        match self {
            Decibels::Finite(db) => db,
            Decibels::Infinite => cap,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Decibels::Finite(db) => Some(db),
            Decibels::Infinite => None,
        }
    }
}

impl fmt::Display for Decibels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decibels::Finite(db) => write!(f, "{db:.4}"),
            Decibels::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Decibels {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Decibels::Finite(db) => s.serialize_f64(*db),
            Decibels::Infinite => s.serialize_str("inf"),
        }
    }
}

/// `‖S − Ŝ‖² / (H₀ W₀ m)`.
pub fn mse(original: &Image, reconstructed: &Image) -> Result<f64> {
    if original.dims() != reconstructed.dims() {
        let (h, w, m) = original.dims();
        let (h2, w2, m2) = reconstructed.dims();
        return Err(Error::ShapeMismatch {
            expected: (h, w * m),
            actual: (h2, w2 * m2),
        });
    }
    let se: u64 = original
        .pixels()
        .iter()
        .zip(reconstructed.pixels())
        .map(|(&a, &b)| u64::from(a.abs_diff(b)).pow(2))
        .sum();
    Ok(se as f64 / original.pixels().len() as f64)
}

pub fn psnr_from_mse(mse: f64) -> Decibels {
    Decibels::from_ratio(PEAK * PEAK, mse)
}

pub fn psnr(original: &Image, reconstructed: &Image) -> Result<Decibels> {
    Ok(psnr_from_mse(mse(original, reconstructed)?))
}

/// `10 log₁₀(‖x‖² / ‖y − x‖²)`, the residual taken as noise.
pub fn measured_snr(sent: &[C64], received: &[C64]) -> Result<Decibels> {
    if sent.len() != received.len() {
        return Err(Error::LengthMismatch {
            expected: sent.len(),
            actual: received.len(),
        });
    }
    let signal: f64 = sent.iter().map(C64::norm_sqr).sum();
    let noise: f64 = sent
        .iter()
        .zip(received)
        .map(|(x, y)| (y - x).norm_sqr())
        .sum();
    Ok(Decibels::from_ratio(signal, noise))
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j share ranks i+1..=j
        let avg = (i + j + 1) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        i = j;
    }
    ranks
}

/// Spearman's ρ as the Pearson correlation of average ranks.
/// A constant argument carries no ordering information and yields 0.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::TooFewSamples {
            min: 2,
            actual: a.len(),
        });
    }
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let mean = (a.len() + 1) as f64 / 2.0;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        let (dx, dy) = (x - mean, y - mean);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Ok(0.0);
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Stand-in for the `+∞` sentinel when PSNR values are averaged.
pub const PSNR_CAP_DB: f64 = 100.0;

/// Arithmetic mean in dB, counting the sentinel as [`PSNR_CAP_DB`]. The
/// mean of sentinels alone, or of nothing, is the sentinel.
pub fn mean_db(values: &[Decibels]) -> Decibels {
    if values.iter().all(|d| d.is_infinite()) {
        return Decibels::Infinite;
    }
    let sum: f64 = values.iter().map(|d| d.value_or(PSNR_CAP_DB)).sum();
    Decibels::Finite(sum / values.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityReport {
    pub mse: f64,
    pub psnr_db: Decibels,
    /// CSI NMSE of the receiver's estimates over the transmission window.
    pub nmse: f64,
    pub snr_measured_db: Decibels,
    pub per_slot_impairment: Vec<f64>,
    pub score_impairment_spearman: f64,
}

impl QualityReport {
    /// Checks the report's own invariants.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.mse >= 0.0) {
            out.push(format!("mse {} is negative", self.mse));
        }
        if !(self.nmse >= 0.0) {
            out.push(format!("nmse {} is negative", self.nmse));
        }
        if self.psnr_db.is_infinite() != (self.mse == 0.0) {
            out.push("psnr sentinel disagrees with mse".into());
        }
        if !(-1.0..=1.0).contains(&self.score_impairment_spearman) {
            out.push(format!(
                "spearman {} outside [-1, 1]",
                self.score_impairment_spearman
            ));
        }
        if self
            .per_slot_impairment
            .iter()
            .any(|v| !(0.0..=1.0).contains(v))
        {
            out.push("impairment outside [0, 1]".into());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(pixels: Vec<u8>) -> Image {
        let n = pixels.len() / 3;
        Image::new(1, n, 3, pixels).unwrap()
    }

    #[test]
    fn psnr_examples() {
        let a = img(vec![10, 20, 30]);
        assert_eq!(psnr(&a, &a).unwrap(), Decibels::Infinite);

        let zeros = img(vec![0; 3]);
        let full = img(vec![255; 3]);
        assert_eq!(psnr(&zeros, &full).unwrap(), Decibels::Finite(0.0));

        let off = img(vec![11, 21, 31]);
        let db = psnr(&a, &off).unwrap().finite().unwrap();
        assert!((db - 48.130_803_608_679_1).abs() < 1e-9);

        assert!(psnr(&a, &img(vec![0; 6])).is_err());
    }

    #[test]
    fn infinite_serializes_as_string() {
        assert_eq!(
            serde_json::to_string(&Decibels::Infinite).unwrap(),
            "\"inf\""
        );
        assert_eq!(
            serde_json::to_string(&Decibels::Finite(1.5)).unwrap(),
            "1.5"
        );
    }

    #[test]
    fn spearman_examples() {
        let a = [0.3, 1.2, -4.0, 9.0];
        assert_eq!(spearman(&a, &a).unwrap(), 1.0);
        let rev: Vec<f64> = a.iter().map(|x| -x).collect();
        assert!((spearman(&a, &rev).unwrap() + 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(spearman(&[1.0], &[1.0]).is_err());
        assert!(spearman(&[1.0, 2.0], &[1.0]).is_err());
        assert_eq!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn ties_share_average_rank() {
        assert_eq!(
            average_ranks(&[5.0, 1.0, 5.0, 3.0]),
            vec![3.5, 1.0, 3.5, 2.0]
        );
        // with ties: ranks a = [1, 2.5, 2.5, 4], b = [1, 2, 3, 4]
        let rho = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let want = 4.5 / (4.5f64 * 5.0).sqrt();
        assert!((rho - want).abs() < 1e-15);
    }

    #[test]
    fn measured_snr_examples() {
        let x = vec![C64::new(1.0, 0.0); 4];
        assert_eq!(measured_snr(&x, &x).unwrap(), Decibels::Infinite);
        let y: Vec<C64> = x.iter().map(|v| v + C64::new(0.0, 1.0)).collect();
        assert_eq!(measured_snr(&x, &y).unwrap(), Decibels::Finite(0.0));
    }

    #[test]
    fn db_mean_caps_sentinels() {
        let v = [Decibels::Finite(10.0), Decibels::Finite(20.0)];
        assert_eq!(mean_db(&v), Decibels::Finite(15.0));
        let v = [Decibels::Finite(40.0), Decibels::Infinite];
        assert_eq!(mean_db(&v), Decibels::Finite(70.0));
        assert_eq!(mean_db(&[Decibels::Infinite]), Decibels::Infinite);
        assert_eq!(mean_db(&[]), Decibels::Infinite);
    }
}
