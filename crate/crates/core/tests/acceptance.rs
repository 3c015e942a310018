//! Acceptance gate: nine criteria, each with its tolerance and time budget.
//! Prints one PASS/FAIL line per criterion and exits non-zero on any failure.

use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fadelink::aging::{tau_ag, Scenario};
use fadelink::channel::{NoiseSpec, Snr, C64};
use fadelink::codec::{synth, CodecConfig, Image};
use fadelink::harness::{
    run_nmse_table, run_perm_gain, run_snr_sweep, run_trial, trial_seed, ExperimentConfig,
    ExperimentKind, LinkSettings, Payload, PermutationMode, TrialChannel,
};
use fadelink::metrics::{measured_snr, Decibels};
use fadelink::transport::{
    demodulate, inverse_permute, modulate, permute, FeatureBlock, PermutationRule,
};

type Verdict = Result<(bool, String), String>;

/// Name, time budget in seconds, check.
type Criterion = (&'static str, u64, fn() -> Verdict);

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn lossless_path() -> Verdict {
    let codec = CodecConfig::lossless(16, 3);
    let link = LinkSettings::from_config(&ExperimentConfig {
        codec,
        ..Default::default()
    });
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let noise = Image::new(
        128,
        128,
        3,
        (0..128 * 128 * 3).map(|_| rng.random()).collect(),
    )
    .map_err(err)?;
    let mut images: Vec<(String, Image)> = (0..4)
        .map(|i| (format!("scene-{i}"), synth::scene(i, 128, 128)))
        .collect();
    images.push(("noise".into(), noise));

    let (mut min_psnr, mut max_rel) = (Decibels::Infinite, 0.0f64);
    for (i, (name, img)) in images.into_iter().enumerate() {
        let payload = Payload::new(name, img, &codec).map_err(err)?;
        let channel = TrialChannel::new(&link, trial_seed(7, i), 15.0).map_err(err)?;
        for mode in [PermutationMode::Scored, PermutationMode::Identity] {
            let out = run_trial(
                &link,
                &channel,
                &payload,
                Snr::Noiseless,
                Scenario::WithCp,
                mode,
            )
            .map_err(err)?;
            let restored = inverse_permute(&out.received, &out.rule).map_err(err)?;
            let diff: f64 = restored
                .values()
                .iter()
                .zip(payload.block.values())
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            let norm: f64 = payload.block.values().iter().map(|v| v * v).sum();
            max_rel = max_rel.max((diff / norm).sqrt());
            if out.record.report.psnr_db < min_psnr {
                min_psnr = out.record.report.psnr_db;
            }
        }
    }
    let ok = min_psnr >= Decibels::Finite(50.0) && max_rel <= 1e-9;
    Ok((
        ok,
        format!("min PSNR {min_psnr} dB over 5 images, max feature error {max_rel:.2e} relative"),
    ))
}

fn round_trips() -> Verdict {
    let mut runner = TestRunner::new_with_rng(
        Config {
            cases: 1000,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    let strategy = (1usize..16, 1usize..16).prop_flat_map(|(tokens, k)| {
        (
            Just(tokens),
            Just(k),
            prop::collection::vec(-1e3f64..1e3, tokens * 2 * k),
            Just((0..k).collect::<Vec<_>>()).prop_shuffle(),
        )
    });
    runner
        .run(&strategy, |(tokens, k, values, map)| {
            let block = FeatureBlock::new(tokens, 2 * k, values).unwrap();
            let rule = PermutationRule::from_slot_map(map).unwrap();
            let frame = modulate(&block, 0.0, 1e-3).unwrap();
            prop_assert_eq!(&demodulate(&frame).unwrap(), &block);
            let z = permute(&block, &rule).unwrap();
            prop_assert_eq!(&inverse_permute(&z, &rule).unwrap(), &block);
            Ok(())
        })
        .map_err(err)?;
    Ok((
        true,
        "1000 random blocks exact under both round trips".into(),
    ))
}

fn sawtooth() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_period = 0.0f64;
    for _ in 0..100_000 {
        let tp = rng.random_range(1e-4..1e-1);
        let t = rng.random_range(0.0..100.0 * tp);
        let tau = tau_ag(t, tp).map_err(err)?;
        if !(0.0..tp).contains(&tau) {
            return Ok((false, format!("tau_ag({t}, {tp}) = {tau} outside [0, T_p)")));
        }
        let n = rng.random_range(1..50) as f64;
        let shifted = tau_ag(t + n * tp, tp).map_err(err)?;
        // distance on the circle of circumference T_p
        let d = (shifted - tau).abs();
        worst_period = worst_period.max(d.min(tp - d) / tp);
        let at_pilot = tau_ag(n * tp, tp).map_err(err)?;
        let d0 = at_pilot.min(tp - at_pilot) / tp;
        if d0 > 1e-9 {
            return Ok((false, format!("tau_ag({}·T_p) = {at_pilot}", n)));
        }
    }
    Ok((
        worst_period < 1e-9,
        format!("1e5 points, worst periodicity error {worst_period:.1e}·T_p"),
    ))
}

fn noise_calibration() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 1_000_000;
    // unit-energy QPSK
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let sent: Vec<C64> = (0..n)
        .map(|_| {
            C64::new(
                if rng.random() { s } else { -s },
                if rng.random() { s } else { -s },
            )
        })
        .collect();
    let mut worst = 0.0f64;
    for i in -2..=6 {
        let want = 3.0 * i as f64;
        let noise = NoiseSpec::new(Snr::Db(want), 1.0).map_err(err)?;
        let rx: Vec<C64> = sent.iter().map(|x| x + noise.sample(&mut rng)).collect();
        let got = measured_snr(&sent, &rx)
            .map_err(err)?
            .value_or(f64::INFINITY);
        worst = worst.max((got - want).abs());
    }
    Ok((
        worst <= 0.1,
        format!("9 SNRs × 1e6 symbols, worst deviation {worst:.4} dB"),
    ))
}

fn nmse_trend() -> Verdict {
    let cfg = ExperimentConfig {
        experiment: ExperimentKind::NmseTable,
        velocities_mps: vec![2.0, 6.0, 10.0, 15.0, 21.0],
        trials: 50,
        carrier_hz: 2.4e9,
        pilot_period_s: 4e-3,
        ..Default::default()
    };
    let table = run_nmse_table(&cfg).map_err(err)?;
    let means: Vec<f64> = table.rows.iter().map(|r| r.mean_nmse).collect();
    let increasing = means.windows(2).all(|w| w[1] > w[0]);
    let ratio = means[4] / means[0];
    let shown: Vec<String> = means.iter().map(|m| format!("{m:.4}")).collect();
    Ok((
        increasing && ratio >= 10.0,
        format!("NMSE [{}], v21/v2 = {ratio:.1}×", shown.join(", ")),
    ))
}

fn scorer_validity() -> Verdict {
    let cfg = ExperimentConfig::default();
    let link = LinkSettings::from_config(&cfg);
    let payloads = fadelink::harness::load_payloads(&cfg).map_err(err)?;
    let trials = 100;
    let mut rhos = Vec::with_capacity(trials);
    for i in 0..trials {
        let channel = TrialChannel::new(&link, trial_seed(6, i), 15.0).map_err(err)?;
        let out = run_trial(
            &link,
            &channel,
            &payloads[i % payloads.len()],
            Snr::Db(6.0),
            Scenario::Aging,
            PermutationMode::Scored,
        )
        .map_err(err)?;
        rhos.push(out.record.report.score_impairment_spearman);
    }
    let mean = rhos.iter().sum::<f64>() / rhos.len() as f64;
    Ok((
        mean >= 0.6,
        format!("mean Spearman {mean:.3} over {trials} trials (need ≥ 0.6)"),
    ))
}

fn permutation_gain() -> Verdict {
    let cfg = ExperimentConfig {
        velocities_mps: vec![2.0, 15.0],
        snr_list: vec![Snr::Db(6.0)],
        scenario: Scenario::Aging,
        codec: CodecConfig::new(16, 128),
        trials: 200,
        seed: 7,
        ..Default::default()
    };
    let table = run_perm_gain(&cfg).map_err(err)?;
    let slow = &table.rows[0];
    let fast = &table.rows[1];
    let ok = fast.ci95_low_db > 0.0 && fast.mean_gain_db >= 0.5;
    Ok((
        ok,
        format!(
            "v=15: gain {:.3} dB, 95% CI [{:.3}, {:.3}] over {} pairs; v=2: gain {:.3} dB",
            fast.mean_gain_db, fast.ci95_low_db, fast.ci95_high_db, fast.pairs, slow.mean_gain_db
        ),
    ))
}

fn scenario_ordering() -> Verdict {
    let cfg = ExperimentConfig {
        experiment: ExperimentKind::SnrSweep,
        velocities_mps: vec![10.0, 15.0, 21.0],
        trials: 100,
        seed: 8,
        ..Default::default()
    };
    let table = run_snr_sweep(&cfg).map_err(err)?;
    let mut worst = f64::INFINITY;
    let mut cells = 0;
    for with_cp in table.rows.iter().filter(|r| r.scenario == Scenario::WithCp) {
        let aging = table
            .rows
            .iter()
            .find(|r| {
                r.scenario == Scenario::Aging
                    && r.velocity_mps == with_cp.velocity_mps
                    && r.snr_db == with_cp.snr_db
            })
            .ok_or("missing aging cell")?;
        let margin = with_cp.mean_psnr_db.value_or(f64::INFINITY)
            - aging.mean_psnr_db.value_or(f64::INFINITY);
        worst = worst.min(margin);
        cells += 1;
    }
    Ok((
        worst >= 0.0,
        format!("{cells} (velocity, SNR) cells, smallest WithCP − Aging margin {worst:.3} dB"),
    ))
}

fn determinism() -> Verdict {
    let exe = env!("CARGO_BIN_EXE_fadelink");
    let root = tempfile::tempdir().map_err(err)?;
    let runs: [&[&str]; 4] = [
        &["selftest", "--seed", "5"],
        &[
            "nmse-table",
            "--seed",
            "5",
            "--trials",
            "4",
            "--trajectory-s",
            "0.5",
        ],
        &[
            "perm-gain",
            "--seed",
            "5",
            "--trials",
            "6",
            "--velocities",
            "15",
            "--snr",
            "0,6",
            "--trajectory-s",
            "0.2",
            "--svg",
        ],
        &[
            "snr-sweep",
            "--seed",
            "5",
            "--trials",
            "4",
            "--velocities",
            "10",
            "--snr",
            "-6,6,inf",
            "--trajectory-s",
            "0.2",
            "--svg",
        ],
    ];
    let mut compared = 0;
    for (i, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let dir = root.path().join(format!("{i}-{rep}"));
            let status = Command::new(exe)
                .args(*args)
                .arg("--out")
                .arg(&dir)
                .output()
                .map_err(err)?;
            if !status.status.success() {
                return Ok((
                    false,
                    format!("`{}` exited with {}", args.join(" "), status.status),
                ));
            }
            let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&dir)
                .map_err(err)?
                .map(|e| {
                    let e = e.unwrap();
                    (
                        e.file_name().to_string_lossy().into_owned(),
                        fs::read(e.path()).unwrap(),
                    )
                })
                .collect();
            files.sort();
            outputs.push(files);
        }
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            return Ok((
                false,
                format!("`{}` outputs differ between reruns", args.join(" ")),
            ));
        }
        compared += outputs[0].len();
    }
    Ok((
        true,
        format!("{compared} files byte-identical across reruns of 4 commands"),
    ))
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let criteria: [Criterion; 9] = [
        ("lossless-path oracle", 5, lossless_path),
        ("round-trip identities", 10, round_trips),
        ("sawtooth law", 1, sawtooth),
        ("noise calibration", 30, noise_calibration),
        ("aging NMSE trend", 120, nmse_trend),
        ("scorer validity", 120, scorer_validity),
        ("permutation gain", 300, permutation_gain),
        ("scenario ordering", 300, scenario_ordering),
        ("determinism", 60, determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let (ok, detail) = match verdict {
            Ok((ok, detail)) => (ok && in_time, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "[{}] {}. {name}: {detail} ({:.2} s, budget {budget} s)",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64(),
        );
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
