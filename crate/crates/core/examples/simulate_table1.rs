//! Runs an experiment file and prints the report as CSV.
//!
//! cargo run --release --example simulate_table1 [config.cfg]

use std::path::PathBuf;

use bitscreen::simgen::{run_experiment, ExperimentFile};

fn main() -> bitscreen::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let path = std::env::args()
        .nth(1)
        .map_or(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data/table1_scaled.cfg"), PathBuf::from);
    let text = std::fs::read_to_string(&path).map_err(|e| bitscreen::Error::Input(format!("{}: {e}", path.display())))?;
    let report = run_experiment(&ExperimentFile::from_toml(&text)?)?;
    report.write_csv(std::io::stdout().lock())
}
