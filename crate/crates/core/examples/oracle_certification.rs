//! Checks the fast engine against exhaustive greedy re-evaluation of the
//! exact posterior, then shows what a hyperparameter mismatch looks like.

use std::path::Path;

use bitscreen::bits;
use bitscreen::io;
use bitscreen::linalg::CenteredResponse;
use bitscreen::posterior::{Hyperparams, DEFAULT_ORACLE_MAX_P};

fn main() -> bitscreen::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let design = io::read_design(&data.join("small.csv"))?;
    let response = CenteredResponse::new(&io::read_response(&data.join("small_y.txt"))?)?;

    for lambda in [0.1, 1.0, 50.0] {
        let h = Hyperparams::new(lambda, 0.1)?;
        let c = bits::certify(&design, &response, h, h, 8, DEFAULT_ORACLE_MAX_P, 1e-8)?;
        println!(
            "lambda {lambda:5}: {} (max |dpi| {:.1e}) path {:?}",
            if c.passed { "PASS" } else { "FAIL" },
            c.max_abs_diff,
            c.fast_path
        );
    }

    let c = bits::certify(
        &design,
        &response,
        Hyperparams::new(0.01, 0.1)?,
        Hyperparams::new(40.0, 0.1)?,
        8,
        DEFAULT_ORACLE_MAX_P,
        1e-8,
    )?;
    println!("mismatched lambda: passed = {}, first divergence at step {:?}", c.passed, c.first_divergence);
    Ok(())
}
