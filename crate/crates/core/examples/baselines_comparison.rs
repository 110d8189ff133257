//! BITS against SIS, HOLP and forward regression on the extreme-correlation
//! design, where marginal screening is misled.

use bitscreen::baselines;
use bitscreen::bits;
use bitscreen::linalg::{CenteredResponse, StandardizedDesign};
use bitscreen::posterior::Hyperparams;
use bitscreen::simgen::{evaluate, gen_design, gen_response, Setting, SimConfig};
use bitscreen::stopping::StopRule;

fn main() -> bitscreen::Result<()> {
    let config = SimConfig::new(Setting::ExtremeCorrelation, 200, 2000).with_seed(1);
    let generated = gen_design(&config, 0)?;
    let y = gen_response(&generated, &config, 0)?;
    let design = StandardizedDesign::dense(generated.z)?;
    let response = CenteredResponse::new(&y)?;
    let n = design.n();
    let truth = &config.beta.truth;

    let hyper = Hyperparams::new(design.p() as f64 / n as f64, 0.1)?;
    let b = bits::screen(&design, &response, hyper, StopRule::FixedSize(n - 1), None)?;
    let sis = baselines::sis_rank(&design, &response)?;
    let holp = baselines::holp_rank(&design, &response)?;
    let fr = baselines::fr_screen(&design, &response, n - 1)?;

    let rows = [
        ("BITS", b.selected),
        ("SIS", sis.ranking[..n].to_vec()),
        ("HOLP", holp.ranking[..n].to_vec()),
        ("FR", fr.ranking),
    ];
    for (name, sel) in rows {
        let m = evaluate(std::slice::from_ref(&sel), truth);
        let first = sel.iter().position(|j| !truth.contains(j)).unwrap_or(sel.len());
        println!("{name:>5}: size {:3}, TPR {:.2}, first noise variable at rank {}", sel.len(), m.tpr, first + 1);
    }
    Ok(())
}
