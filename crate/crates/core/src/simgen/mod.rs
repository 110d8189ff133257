//! Synthetic experiments: the seven correlated-design settings, responses at
//! a target theoretical R², and TPR / coverage metrics over replications.

mod config;
mod experiment;
mod generate;
mod metrics;

pub use config::{
    BetaSpec, ExperimentFile, LambdaSpec, MethodSpec, RuleSpec, ScenarioSpec, Setting, SimConfig,
};
pub use experiment::{run_experiment, run_replication, run_scenario, ReplicationOutcome, ReportRow, SimReport};
pub use generate::{
    empirical_signal_variance, gen_design, gen_response, substream, GeneratedDesign, Purpose,
};
pub use metrics::{evaluate, Metrics};
