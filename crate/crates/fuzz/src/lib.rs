//! Coverage-guided fuzzing of simulated RTL designs, testbench generation
//! and coverage reporting.

pub mod campaign;
pub mod corpus;
pub mod harness;
pub mod mutate;
pub mod report;
pub mod schedule;
pub mod template;
pub mod triage;

pub use campaign::{
    default_seed, run_campaign, Campaign, CampaignConfig, CampaignError, CampaignStats, ConfigError, ConfigErrorKind,
};
pub use corpus::{Corpus, CorpusEntry, Origin};
pub use harness::{gen_replay_tb, gen_wrapper_tb, GenError, TbKind, TbModel};
pub use report::{emit_csv, emit_plot, merge_campaign_covs, read_csv, render_plot, CoverageSample, XAxis};
pub use triage::{CrashRecord, CrashSet};
