//! CSV, JSON and SVG renderings of experiment results.
//!
//! Every CSV starts with the schema line [`CSV_HEADER`]. Floats use Rust's
//! shortest round-trip formatting, so output is a pure function of the data.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::experiments::{GainTable, NmseTable, SweepTable};
use crate::channel::Snr;
use crate::error::{Error, Result};
use crate::metrics::Decibels;

pub const CSV_HEADER: &str = "# fadelink-csv-v1";
pub const SUMMARY_FORMAT: &str = "fadelink-summary-v1";

fn db(d: Decibels) -> String {
    match d {
        Decibels::Finite(v) => v.to_string(),
        Decibels::Infinite => "inf".into(),
    }
}

fn csv(columns: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut out = format!("{CSV_HEADER}\n{}\n", columns.join(","));
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// A run's outputs, keyed by file name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b.as_slice())
    }

    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.files
            .iter()
            .map(|(name, bytes)| {
                let path = dir.join(name);
                fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
                Ok(path)
            })
            .collect()
    }
}

#[derive(Serialize)]
struct Summary<'a, T: Serialize> {
    format: &'static str,
    experiment: &'a str,
    base_seed: u64,
    config: &'a ExperimentConfig,
    result: &'a T,
}

pub fn summary_json<T: Serialize>(cfg: &ExperimentConfig, result: &T) -> Result<String> {
    let summary = Summary {
        format: SUMMARY_FORMAT,
        experiment: cfg.experiment.name(),
        base_seed: cfg.seed,
        config: cfg,
        result,
    };
    serde_json::to_string_pretty(&summary)
        .map(|s| s + "\n")
        .map_err(|e| Error::InvalidConfig(format!("cannot serialize summary: {e}")))
}

pub fn nmse_csv(table: &NmseTable, seed: u64) -> String {
    csv(
        &[
            "velocity_mps",
            "mean_nmse",
            "std_nmse",
            "trials",
            "scenario",
            "base_seed",
        ],
        table.rows.iter().map(|r| {
            vec![
                r.velocity_mps.to_string(),
                r.mean_nmse.to_string(),
                r.std_nmse.to_string(),
                r.trials.to_string(),
                table.scenario.to_string(),
                seed.to_string(),
            ]
        }),
    )
}

pub fn nmse_trials_csv(table: &NmseTable) -> String {
    csv(
        &["trial_seed", "velocity_mps", "nmse"],
        table.trials.iter().map(|t| {
            vec![
                t.trial_seed.to_string(),
                t.velocity_mps.to_string(),
                t.nmse.to_string(),
            ]
        }),
    )
}

pub fn gain_csv(table: &GainTable, seed: u64) -> String {
    csv(
        &[
            "velocity_mps",
            "snr_db",
            "scenario",
            "mean_psnr_scored_db",
            "mean_psnr_identity_db",
            "mean_gain_db",
            "std_gain_db",
            "ci95_low_db",
            "ci95_high_db",
            "pairs",
            "base_seed",
        ],
        table.rows.iter().map(|r| {
            vec![
                r.velocity_mps.to_string(),
                r.snr_db.to_string(),
                table.scenario.to_string(),
                db(r.mean_psnr_scored_db),
                db(r.mean_psnr_identity_db),
                r.mean_gain_db.to_string(),
                r.std_gain_db.to_string(),
                r.ci95_low_db.to_string(),
                r.ci95_high_db.to_string(),
                r.pairs.to_string(),
                seed.to_string(),
            ]
        }),
    )
}

pub fn gain_pairs_csv(table: &GainTable) -> String {
    csv(
        &[
            "trial_seed",
            "image",
            "velocity_mps",
            "snr_db",
            "psnr_scored_db",
            "psnr_identity_db",
            "gain_db",
        ],
        table.pairs.iter().map(|p| {
            vec![
                p.trial_seed.to_string(),
                p.image.clone(),
                p.velocity_mps.to_string(),
                p.snr_db.to_string(),
                db(p.psnr_scored_db),
                db(p.psnr_identity_db),
                p.gain_db.to_string(),
            ]
        }),
    )
}

pub fn sweep_csv(table: &SweepTable, seed: u64) -> String {
    csv(
        &[
            "velocity_mps",
            "snr_db",
            "scenario",
            "mean_psnr_db",
            "std_psnr_db",
            "mean_nmse",
            "mean_spearman",
            "trials",
            "mode",
            "base_seed",
        ],
        table.rows.iter().map(|r| {
            vec![
                r.velocity_mps.to_string(),
                r.snr_db.to_string(),
                r.scenario.to_string(),
                db(r.mean_psnr_db),
                r.std_psnr_db.to_string(),
                r.mean_nmse.to_string(),
                r.mean_spearman.to_string(),
                r.trials.to_string(),
                table.mode.name().to_string(),
                seed.to_string(),
            ]
        }),
    )
}

pub fn sweep_trials_csv(table: &SweepTable) -> String {
    csv(
        &[
            "trial_seed",
            "image",
            "velocity_mps",
            "snr_db",
            "scenario",
            "mode",
            "t_beg_s",
            "mse",
            "psnr_db",
            "nmse",
            "snr_measured_db",
            "spearman",
        ],
        table.trials.iter().map(|t| {
            vec![
                t.trial_seed.to_string(),
                t.image.clone(),
                t.velocity_mps.to_string(),
                t.snr_db.to_string(),
                t.scenario.to_string(),
                t.mode.name().to_string(),
                t.t_beg_s.to_string(),
                t.report.mse.to_string(),
                db(t.report.psnr_db),
                t.report.nmse.to_string(),
                db(t.report.snr_measured_db),
                t.report.score_impairment_spearman.to_string(),
            ]
        }),
    )
}

/// One polyline of a chart.
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Line chart as standalone SVG text.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (64.0, 160.0, 40.0, 56.0);
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x0 > x1 {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.3}</text>"#,
            sx(xv),
            top + ph + 18.0,
            xv
        );
        let _ = writeln!(
            s,
            r##"<line x1="{left}" x2="{:.1}" y1="{:.1}" y2="{:.1}" stroke="#ddd"/>"##,
            left + pw,
            sy(yv),
            sy(yv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3}</text>"#,
            left - 6.0,
            sy(yv) + 4.0,
            yv
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        h - 14.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="2" points="{}"/>"#,
            path.join(" ")
        );
        let ly = top + 14.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" x2="{:.1}" y1="{ly:.1}" y2="{ly:.1}" stroke="{colour}" stroke-width="2"/>"#,
            left + pw + 10.0,
            left + pw + 30.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            left + pw + 36.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn finite_snr(snr: Snr) -> Option<f64> {
    match snr {
        Snr::Db(v) => Some(v),
        Snr::Noiseless => None,
    }
}

pub fn sweep_svg(table: &SweepTable) -> String {
    let mut keys: Vec<(f64, crate::aging::Scenario)> = Vec::new();
    for r in &table.rows {
        if !keys.contains(&(r.velocity_mps, r.scenario)) {
            keys.push((r.velocity_mps, r.scenario));
        }
    }
    let series: Vec<Series> = keys
        .iter()
        .map(|&(v, sc)| Series {
            label: format!("{sc}, {v} m/s"),
            points: table
                .rows
                .iter()
                .filter(|r| r.velocity_mps == v && r.scenario == sc)
                .filter_map(|r| Some((finite_snr(r.snr_db)?, r.mean_psnr_db.finite()?)))
                .collect(),
        })
        .collect();
    line_chart("Mean PSNR versus SNR", "SNR (dB)", "PSNR (dB)", &series)
}

pub fn gain_svg(table: &GainTable) -> String {
    let mut velocities: Vec<f64> = Vec::new();
    for r in &table.rows {
        if !velocities.contains(&r.velocity_mps) {
            velocities.push(r.velocity_mps);
        }
    }
    let series: Vec<Series> = velocities
        .iter()
        .map(|&v| Series {
            label: format!("{v} m/s"),
            points: table
                .rows
                .iter()
                .filter(|r| r.velocity_mps == v)
                .filter_map(|r| Some((finite_snr(r.snr_db)?, r.mean_gain_db)))
                .collect(),
        })
        .collect();
    line_chart(
        "Permutation gain versus SNR",
        "SNR (dB)",
        "PSNR gain (dB)",
        &series,
    )
}

pub fn nmse_artifacts(cfg: &ExperimentConfig, table: &NmseTable) -> Result<Artifacts> {
    Ok(Artifacts {
        files: vec![
            (
                "nmse-table.csv".into(),
                nmse_csv(table, cfg.seed).into_bytes(),
            ),
            (
                "nmse-table-trials.csv".into(),
                nmse_trials_csv(table).into_bytes(),
            ),
            (
                "nmse-table.json".into(),
                summary_json(cfg, &table.rows)?.into_bytes(),
            ),
        ],
    })
}

pub fn gain_artifacts(cfg: &ExperimentConfig, table: &GainTable) -> Result<Artifacts> {
    let mut files = vec![
        (
            "perm-gain.csv".to_string(),
            gain_csv(table, cfg.seed).into_bytes(),
        ),
        (
            "perm-gain-pairs.csv".into(),
            gain_pairs_csv(table).into_bytes(),
        ),
        (
            "perm-gain.json".into(),
            summary_json(cfg, &table.rows)?.into_bytes(),
        ),
    ];
    if cfg.svg {
        files.push(("perm-gain.svg".into(), gain_svg(table).into_bytes()));
    }
    Ok(Artifacts { files })
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    mode: &'a str,
    codec_psnr_db: Decibels,
    rows: &'a [super::experiments::SweepRow],
}

pub fn sweep_artifacts(cfg: &ExperimentConfig, table: &SweepTable) -> Result<Artifacts> {
    let summary = SweepSummary {
        mode: table.mode.name(),
        codec_psnr_db: table.codec_psnr_db,
        rows: &table.rows,
    };
    let mut files = vec![
        (
            "snr-sweep.csv".to_string(),
            sweep_csv(table, cfg.seed).into_bytes(),
        ),
        (
            "snr-sweep-trials.csv".into(),
            sweep_trials_csv(table).into_bytes(),
        ),
        (
            "snr-sweep.json".into(),
            summary_json(cfg, &summary)?.into_bytes(),
        ),
    ];
    if cfg.svg {
        files.push(("snr-sweep.svg".into(), sweep_svg(table).into_bytes()));
    }
    Ok(Artifacts { files })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aging::Scenario;
    use crate::harness::experiments::NmseRow;

    #[test]
    fn csv_has_schema_line() {
        let table = NmseTable {
            scenario: Scenario::Aging,
            rows: vec![NmseRow {
                velocity_mps: 2.0,
                mean_nmse: 0.25,
                std_nmse: 0.0,
                trials: 1,
            }],
            trials: vec![],
        };
        let text = nmse_csv(&table, 9);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(
            lines.next(),
            Some("velocity_mps,mean_nmse,std_nmse,trials,scenario,base_seed")
        );
        assert_eq!(lines.next(), Some("2,0.25,0,1,aging,9"));
    }

    #[test]
    fn svg_is_well_formed_text() {
        let svg = line_chart(
            "a < b",
            "x",
            "y",
            &[Series {
                label: "s".into(),
                points: vec![(0.0, 1.0), (1.0, 2.0)],
            }],
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a &lt; b"));
        assert!(svg.contains("<polyline"));
        // degenerate input still renders
        assert!(line_chart("t", "x", "y", &[]).contains("</svg>"));
    }
}
