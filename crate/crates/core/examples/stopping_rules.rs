//! One simulated path, four ways to cut it.

use bitscreen::bits;
use bitscreen::linalg::{CenteredResponse, StandardizedDesign};
use bitscreen::posterior::Hyperparams;
use bitscreen::simgen::{gen_design, gen_response, Setting, SimConfig};
use bitscreen::stopping::StopRule;

fn main() -> bitscreen::Result<()> {
    let config = SimConfig::new(Setting::Ar1, 150, 1000).with_seed(3);
    let generated = gen_design(&config, 0)?;
    let y = gen_response(&generated, &config, 0)?;
    let design = StandardizedDesign::dense(generated.z)?;
    let response = CenteredResponse::new(&y)?;
    let w = (config.n as f64).powf(-0.6);
    let hyper = Hyperparams::new(config.p as f64 / config.n as f64, w)?;
    println!("truth: {:?}", config.beta.truth);

    let rules = [
        ("fixed 15", StopRule::FixedSize(15)),
        ("pp", StopRule::Pp { cap: None }),
        ("pp largest drop", StopRule::PpLargestDrop { cap: Some(40) }),
        ("ebic", StopRule::Ebic { max_k: Some(40), include_null: false }),
    ];
    for (name, rule) in rules {
        let res = bits::screen(&design, &response, hyper, rule, None)?;
        let mut sel = res.selected.clone();
        sel.sort_unstable();
        println!("{name:>16}: {:2} kept ({}) {:?}", sel.len(), res.stop_reason, sel);
    }
    Ok(())
}
