//! Seeded Monte Carlo experiments over the full pipeline.

mod config;
mod experiments;
pub mod output;
mod selftest;
mod trial;

pub use config::{ExperimentConfig, ExperimentKind, PermutationMode};
pub use experiments::{
    load_payloads, mean_std, run_nmse_table, run_perm_gain, run_snr_sweep, run_transmit, GainPair,
    GainRow, GainTable, NmseRow, NmseTable, NmseTrial, SweepRow, SweepTable, TransmitReport,
    TransmitResult, SWEEP_SCENARIOS,
};
pub use output::Artifacts;
pub use selftest::{run_selftest, Check, SelftestReport};
pub use trial::{
    run_trial, trial_seed, LinkSettings, Payload, TrialChannel, TrialOutcome, TrialRecord,
};
