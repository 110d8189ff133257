//! Screen a dense CSV design with BITS and the PP stopping rule.
//!
//! cargo run --example screen_dense [design.csv] [response.txt]

use std::path::PathBuf;

use bitscreen::bits;
use bitscreen::io;
use bitscreen::linalg::CenteredResponse;
use bitscreen::posterior::Hyperparams;
use bitscreen::stopping::StopRule;

fn main() -> bitscreen::Result<()> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let mut args = std::env::args().skip(1);
    let x = args.next().map_or(data.join("small.csv"), PathBuf::from);
    let y = args.next().map_or(data.join("small_y.txt"), PathBuf::from);

    let design = io::read_design(&x)?;
    let response = CenteredResponse::new(&io::read_response(&y)?)?;
    let hyper = Hyperparams::new(1.0, 0.1)?;
    let res = bits::screen(&design, &response, hyper, StopRule::Pp { cap: None }, None)?;

    let names = design.names();
    println!("null model   log posterior {:10.4}", res.null_log_posterior);
    for (k, (&j, pi)) in res.path.iter().zip(&res.pi_trace).enumerate() {
        let name = names.map_or(format!("col {j}"), |n| n[j].clone());
        let mark = if k < res.selected.len() { "*" } else { " " };
        println!("{mark} step {:2}  {name:>6}  log posterior {pi:10.4}", k + 1);
    }
    println!("stop: {} after {} variables", res.stop_reason, res.selected.len());
    Ok(())
}
