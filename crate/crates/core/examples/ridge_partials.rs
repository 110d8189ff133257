//! Ridge partial correlations: the one-step posterior ratio computed from
//! partial variances agrees with the difference of exact log posteriors.

use bitscreen::linalg::{CenteredResponse, StandardizedDesign};
use bitscreen::posterior::{log_posterior_exact, posterior_ratio_via_partials, ridge_partials, Hyperparams, ModelIndex};
use bitscreen::simgen::{gen_design, gen_response, Setting, SimConfig};

fn main() -> bitscreen::Result<()> {
    let config = SimConfig::new(Setting::Group, 80, 40).with_seed(9);
    let generated = gen_design(&config, 0)?;
    let y = gen_response(&generated, &config, 0)?;
    let design = StandardizedDesign::dense(generated.z)?;
    let response = CenteredResponse::new(&y)?;

    // Columns 0..5 are near-copies; 20 is noise.
    let gamma = ModelIndex::new(vec![0, 5])?;
    for lambda in [0.01, 10.0] {
        let h = Hyperparams::new(lambda, 0.1)?;
        println!("lambda = {lambda}, model {:?}", gamma.indices());
        for i in [1, 10, 20] {
            let rp = ridge_partials(&design, &response, &gamma, i, h)?;
            let via = posterior_ratio_via_partials(&design, &response, &gamma, i, h)?;
            let direct = log_posterior_exact(&design, &response, &gamma.with(i)?, h)?
                - log_posterior_exact(&design, &response, &gamma, h)?;
            println!(
                "  add {i:2}: v_i {:8.5}  R^2 {:.4}  log ratio {via:9.4}  (direct {direct:9.4})",
                rp.v_i,
                rp.r_squared()
            );
        }
    }
    Ok(())
}
