//! Pilot-periodic CSI acquisition and channel aging.
//!
//! Pilots arrive every `T_p` seconds starting at `t = 0`. With channel
//! prediction (`WithCp`) the estimate equals the true CSI at every instant;
//! without it (`Aging`) the estimate is frozen at the latest pilot, so its
//! error grows with the sawtooth delay `τ_ag(t) = t - ⌊t/T_p⌋·T_p`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::channel::{normalized_doppler, ChannelRealization, Snr, C64};
use crate::error::{Error, Result};

/// Default pilot period, 4 ms.
pub const DEFAULT_PILOT_PERIOD_S: f64 = 4.0e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Error-free channel prediction at every instant.
    WithCp,
    /// CSI frozen at the most recent pilot.
    Aging,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::WithCp => "withcp",
            Scenario::Aging => "aging",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "withcp" | "with-cp" | "cp" => Ok(Scenario::WithCp),
            "aging" => Ok(Scenario::Aging),
            other => Err(Error::InvalidConfig(format!(
                "unknown scenario '{other}' (expected withcp or aging)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Tx,
    Rx,
}

/// How the transmitter-side attention delay treats elapsed time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TauAttnSign {
    /// `τ_ag(t_beg) + (t_beg - T[k])`, which goes negative for `k > 1`.
    #[default]
    Literal,
    /// `τ_ag(t_beg) + (T[k] - t_beg)`, the age of the transmitter's CSI at `T[k]`.
    Elapsed,
}

/// Time since the most recent pilot, in `[0, T_p)`.
pub fn tau_ag(t_s: f64, pilot_period_s: f64) -> Result<f64> {
    if t_s < 0.0 || t_s.is_nan() {
        return Err(Error::NegativeTime(t_s));
    }
    if !(pilot_period_s.is_finite() && pilot_period_s > 0.0) {
        return Err(Error::InvalidConfig("pilot period must be positive".into()));
    }
    let n = (t_s / pilot_period_s).floor();
    let mut r = t_s - n * pilot_period_s;
    // the quotient can round across an integer; fold back into range
    if r >= pilot_period_s {
        r -= pilot_period_s;
    }
    if r < 0.0 {
        r = 0.0;
    }
    Ok(r)
}

/// `T[k] = t_beg + (k-1)/(K-1)·(t_end - t_beg)` for `k = 1..=K`.
pub fn timeline(t_beg: f64, t_end: f64, slots: usize) -> Result<Vec<f64>> {
    if slots < 2 {
        return Err(Error::InvalidConfig(format!(
            "timeline needs at least 2 instants, got {slots}"
        )));
    }
    if !(t_end > t_beg) {
        return Err(Error::InvalidConfig(format!(
            "t_end ({t_end}) must exceed t_beg ({t_beg})"
        )));
    }
    let span = t_end - t_beg;
    let last = (slots - 1) as f64;
    Ok((0..slots)
        .map(|i| {
            if i == slots - 1 {
                t_end
            } else {
                t_beg + i as f64 / last * span
            }
        })
        .collect())
}

/// Attention delay for time index `k` (1-based).
pub fn tau_attn(
    k: usize,
    side: Side,
    t_beg: f64,
    t_end: f64,
    slots: usize,
    pilot_period_s: f64,
    sign: TauAttnSign,
) -> Result<f64> {
    if k == 0 || k > slots {
        return Err(Error::IndexOutOfRange {
            index: k,
            max: slots,
        });
    }
    let t_k = timeline(t_beg, t_end, slots)?[k - 1];
    match side {
        Side::Tx => {
            let base = tau_ag(t_beg, pilot_period_s)?;
            Ok(match sign {
                TauAttnSign::Literal => base + (t_beg - t_k),
                TauAttnSign::Elapsed => base + (t_k - t_beg),
            })
        }
        Side::Rx => tau_ag(t_k, pilot_period_s),
    }
}

/// Pilot schedule over one channel realization.
#[derive(Debug, Clone, Copy)]
pub struct AgingSchedule<'a> {
    pilot_period_s: f64,
    scenario: Scenario,
    realization: &'a ChannelRealization,
}

impl<'a> AgingSchedule<'a> {
    pub fn new(
        realization: &'a ChannelRealization,
        pilot_period_s: f64,
        scenario: Scenario,
    ) -> Result<Self> {
        if !(pilot_period_s.is_finite() && pilot_period_s > 0.0) {
            return Err(Error::InvalidConfig("pilot period must be positive".into()));
        }
        Ok(AgingSchedule {
            pilot_period_s,
            scenario,
            realization,
        })
    }

    pub fn pilot_period_s(&self) -> f64 {
        self.pilot_period_s
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn realization(&self) -> &'a ChannelRealization {
        self.realization
    }

    /// True CSI at `t`.
    pub fn truth(&self, t_s: f64) -> Result<C64> {
        self.realization.at(t_s)
    }

    /// Instant of the most recent pilot at or before `t`.
    pub fn last_pilot(&self, t_s: f64) -> Result<f64> {
        Ok(t_s - tau_ag(t_s, self.pilot_period_s)?)
    }

    /// CSI estimate available at `t` under this schedule's scenario.
    pub fn csi_estimate(&self, t_s: f64) -> Result<C64> {
        // range-check t itself even when the lookup lands on an earlier pilot
        let truth = self.realization.at(t_s)?;
        match self.scenario {
            Scenario::WithCp => Ok(truth),
            Scenario::Aging => {
                if t_s < 0.0 {
                    return Err(Error::NegativeTime(t_s));
                }
                self.realization.at(self.last_pilot(t_s)?)
            }
        }
    }

    /// NMSE of the estimate against the truth over every grid sample.
    pub fn trajectory_nmse(&self) -> Result<f64> {
        let r = self.realization;
        let estimates = (0..r.len())
            .map(|i| self.csi_estimate(r.time_of(i)))
            .collect::<Result<Vec<_>>>()?;
        csi_nmse(&estimates, r.samples())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CsiSample {
    pub t_s: f64,
    pub h: [f64; 2],
}

/// Physical-layer side information as seen by one end of the link.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideInfo {
    pub side: Side,
    pub scenario: Scenario,
    pub snr: Snr,
    /// Causal CSI estimates on the realization grid, up to the horizon
    /// (`t_beg` for Tx, `t_end` for Rx).
    pub csi_view: Vec<CsiSample>,
    pub norm_doppler: f64,
    /// Maximum Doppler shift `f_c v / c` in Hz.
    pub doppler_hz: f64,
    pub pilot_period_s: f64,
    pub t_beg: f64,
    pub t_end: f64,
    /// Transmission instants `T[k]`.
    pub unit_times: Vec<f64>,
    /// `τ_ag(T[k])` for each instant.
    pub aging_delays: Vec<f64>,
    /// CSI this side attributes to each instant: Tx uses `Ĥ(T[1])` under
    /// aging (the predicted `H(T[k])` with prediction); Rx uses `Ĥ(T[k])`.
    pub slot_csi: Vec<C64>,
}

impl SideInfo {
    pub fn horizon(&self) -> f64 {
        match self.side {
            Side::Tx => self.t_beg,
            Side::Rx => self.t_end,
        }
    }

    pub fn slot_count(&self) -> usize {
        self.unit_times.len()
    }
}

/// Instants of a `K`-unit transmission over `[t_beg, t_end]`. A single unit
/// is sent at `t_beg`.
pub fn unit_times(t_beg: f64, t_end: f64, slots: usize) -> Result<Vec<f64>> {
    match slots {
        0 => Err(Error::InvalidConfig("need at least one unit".into())),
        1 => Ok(vec![t_beg]),
        _ => timeline(t_beg, t_end, slots),
    }
}

/// Assembles side information for one end of a `K`-unit transmission.
pub fn side_info(
    schedule: &AgingSchedule<'_>,
    snr: Snr,
    t_beg: f64,
    t_end: f64,
    side: Side,
    slots: usize,
) -> Result<SideInfo> {
    if !(t_end > t_beg) {
        return Err(Error::InvalidConfig(format!(
            "t_end ({t_end}) must exceed t_beg ({t_beg})"
        )));
    }
    let r = schedule.realization();
    // both ends of the window must be on the trajectory
    r.index_of(t_beg)?;
    r.index_of(t_end)?;

    let horizon = match side {
        Side::Tx => t_beg,
        Side::Rx => t_end,
    };
    let last = r.index_of(horizon)?;
    let last = if r.time_of(last) > horizon {
        last.checked_sub(1)
    } else {
        Some(last)
    };
    let csi_view = match last {
        Some(last) => (0..=last)
            .map(|i| {
                let t = r.time_of(i);
                schedule.csi_estimate(t).map(|h| CsiSample {
                    t_s: t,
                    h: [h.re, h.im],
                })
            })
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };

    let times = unit_times(t_beg, t_end, slots)?;
    let aging_delays = times
        .iter()
        .map(|&t| tau_ag(t, schedule.pilot_period_s()))
        .collect::<Result<Vec<_>>>()?;
    let slot_csi = match (side, schedule.scenario()) {
        (Side::Tx, Scenario::Aging) => vec![schedule.csi_estimate(times[0])?; slots],
        _ => times
            .iter()
            .map(|&t| schedule.csi_estimate(t))
            .collect::<Result<Vec<_>>>()?,
    };

    Ok(SideInfo {
        side,
        scenario: schedule.scenario(),
        snr,
        csi_view,
        norm_doppler: normalized_doppler(r.config()),
        doppler_hz: r.config().doppler_hz(),
        pilot_period_s: schedule.pilot_period_s(),
        t_beg,
        t_end,
        unit_times: times,
        aging_delays,
        slot_csi,
    })
}

/// `‖Ĥ - H‖² / ‖H‖²`.
pub fn csi_nmse(estimate: &[C64], ground_truth: &[C64]) -> Result<f64> {
    if estimate.len() != ground_truth.len() {
        return Err(Error::LengthMismatch {
            expected: ground_truth.len(),
            actual: estimate.len(),
        });
    }
    let energy: f64 = ground_truth.iter().map(|h| h.norm_sqr()).sum();
    if energy == 0.0 {
        return Err(Error::ZeroGroundTruth);
    }
    let err: f64 = estimate
        .iter()
        .zip(ground_truth)
        .map(|(e, h)| (e - h).norm_sqr())
        .sum();
    Ok(err / energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelConfig, DEFAULT_TIME_STEP_S};

    const MS: f64 = 1e-3;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn sawtooth_examples() {
        assert!(close(tau_ag(5.0 * MS, 4.0 * MS).unwrap(), 1.0 * MS));
        assert_eq!(tau_ag(4.0 * MS, 4.0 * MS).unwrap(), 0.0);
        assert!(close(tau_ag(3.9 * MS, 4.0 * MS).unwrap(), 3.9 * MS));
        assert!(matches!(tau_ag(-1.0, 1.0), Err(Error::NegativeTime(_))));
    }

    #[test]
    fn timeline_examples() {
        assert_eq!(timeline(0.0, 1.0, 2).unwrap(), vec![0.0, 1.0]);
        assert_eq!(timeline(0.0, 1.0, 3).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(
            timeline(2.0, 4.0, 5).unwrap(),
            vec![2.0, 2.5, 3.0, 3.5, 4.0]
        );
        assert!(timeline(0.0, 1.0, 1).is_err());
        assert!(timeline(1.0, 1.0, 3).is_err());
    }

    #[test]
    fn tau_attn_examples() {
        let tp = 4.0 * MS;
        let (tb, te) = (1.5 * MS, 3.0 * MS);
        let first = tau_attn(1, Side::Tx, tb, te, 4, tp, TauAttnSign::Literal).unwrap();
        assert!(close(first, tau_ag(tb, tp).unwrap()));

        // T[2] = 4 ms sits on a pilot
        let rx = tau_attn(2, Side::Rx, 0.0, 8.0 * MS, 3, tp, TauAttnSign::Literal).unwrap();
        assert_eq!(rx, 0.0);

        let lit = tau_attn(2, Side::Tx, 0.0, 1.0 * MS, 2, tp, TauAttnSign::Literal).unwrap();
        assert!(close(lit, -MS));
        let el = tau_attn(2, Side::Tx, 0.0, 1.0 * MS, 2, tp, TauAttnSign::Elapsed).unwrap();
        assert!(close(el, 1.0 * MS));

        assert!(matches!(
            tau_attn(0, Side::Tx, 0.0, 1.0, 2, tp, TauAttnSign::Literal),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(tau_attn(3, Side::Rx, 0.0, 1.0, 2, tp, TauAttnSign::Literal).is_err());
    }

    #[test]
    fn nmse_examples() {
        let h: Vec<C64> = (0..8)
            .map(|i| C64::from_polar(1.0 + i as f64, i as f64))
            .collect();
        assert_eq!(csi_nmse(&h, &h).unwrap(), 0.0);
        let doubled: Vec<C64> = h.iter().map(|x| x * 2.0).collect();
        assert!(close(csi_nmse(&doubled, &h).unwrap(), 1.0));
        let zero = vec![C64::new(0.0, 0.0); 8];
        assert!(close(csi_nmse(&zero, &h).unwrap(), 1.0));
        assert!(matches!(csi_nmse(&h, &zero), Err(Error::ZeroGroundTruth)));
        assert!(csi_nmse(&h[..3], &h).is_err());
    }

    fn realization(v: f64, seed: u64, duration: f64) -> ChannelRealization {
        ChannelRealization::generate(
            &ChannelConfig::new(2.4e9, v, seed),
            duration,
            DEFAULT_TIME_STEP_S,
        )
        .unwrap()
    }

    #[test]
    fn withcp_estimate_is_exact() {
        let r = realization(15.0, 3, 0.05);
        let s = AgingSchedule::new(&r, 4.0 * MS, Scenario::WithCp).unwrap();
        for i in (0..r.len()).step_by(37) {
            let t = r.time_of(i);
            assert_eq!(s.csi_estimate(t).unwrap(), r.samples()[i]);
        }
        assert_eq!(s.trajectory_nmse().unwrap(), 0.0);
    }

    #[test]
    fn aging_estimate_is_exact_at_pilots_and_frozen_between() {
        let r = realization(15.0, 3, 0.05);
        let s = AgingSchedule::new(&r, 4.0 * MS, Scenario::Aging).unwrap();
        for n in 0..12 {
            let t = n as f64 * 4.0 * MS;
            assert_eq!(s.csi_estimate(t).unwrap(), r.at(t).unwrap());
            let later = t + 2.5 * MS;
            assert_eq!(s.csi_estimate(later).unwrap(), r.at(t).unwrap());
        }
        assert!(s.csi_estimate(1.0).is_err());
    }

    #[test]
    fn faster_motion_ages_csi_more() {
        let mean = |v: f64| {
            (0..10)
                .map(|seed| {
                    let r = realization(v, seed, 0.5);
                    AgingSchedule::new(&r, 4.0 * MS, Scenario::Aging)
                        .unwrap()
                        .trajectory_nmse()
                        .unwrap()
                })
                .sum::<f64>()
                / 10.0
        };
        assert!(mean(15.0) > mean(2.0));
        assert_eq!(mean(0.0), 0.0);
    }

    #[test]
    fn tx_view_is_causal() {
        let r = realization(10.0, 8, 0.05);
        let s = AgingSchedule::new(&r, 4.0 * MS, Scenario::Aging).unwrap();
        let (tb, te) = (10.3 * MS, 12.3 * MS);
        let tx = side_info(&s, Snr::Db(6.0), tb, te, Side::Tx, 16).unwrap();
        assert!(tx.csi_view.iter().all(|c| c.t_s <= tb));
        assert!(!tx.csi_view.is_empty());
        let rx = side_info(&s, Snr::Db(6.0), tb, te, Side::Rx, 16).unwrap();
        assert!(rx.csi_view.iter().all(|c| c.t_s <= te));
        assert!(rx.csi_view.len() > tx.csi_view.len());
        // Tx attributes the window-start estimate to every slot
        assert!(tx
            .slot_csi
            .iter()
            .all(|&h| h == s.csi_estimate(tb).unwrap()));
        assert_eq!(tx.aging_delays.len(), 16);
    }

    #[test]
    fn withcp_view_matches_truth() {
        let r = realization(10.0, 8, 0.05);
        let s = AgingSchedule::new(&r, 4.0 * MS, Scenario::WithCp).unwrap();
        let info = side_info(&s, Snr::Db(0.0), 5.0 * MS, 7.0 * MS, Side::Rx, 4).unwrap();
        for (i, c) in info.csi_view.iter().enumerate() {
            assert_eq!(C64::new(c.h[0], c.h[1]), r.samples()[i]);
        }
    }

    #[test]
    fn aging_view_is_piecewise_constant_between_pilots() {
        let r = realization(15.0, 1, 0.05);
        let s = AgingSchedule::new(&r, 4.0 * MS, Scenario::Aging).unwrap();
        let info = side_info(&s, Snr::Db(0.0), 40.0 * MS, 41.0 * MS, Side::Tx, 2).unwrap();
        let per_pilot = (4.0 * MS / DEFAULT_TIME_STEP_S).round() as usize;
        for chunk in info.csi_view.chunks(per_pilot) {
            assert!(chunk.iter().all(|c| c.h == chunk[0].h));
        }
        assert_ne!(info.csi_view[0].h, info.csi_view[per_pilot].h);
    }

    #[test]
    fn side_info_rejects_out_of_span_window() {
        let r = realization(10.0, 8, 0.01);
        let s = AgingSchedule::new(&r, 4.0 * MS, Scenario::Aging).unwrap();
        assert!(side_info(&s, Snr::Db(0.0), 5.0 * MS, 20.0 * MS, Side::Tx, 4).is_err());
        assert!(side_info(&s, Snr::Db(0.0), 5.0 * MS, 5.0 * MS, Side::Tx, 4).is_err());
    }
}
