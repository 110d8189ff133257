//! A sparse 0/1/2 genotype matrix in Matrix Market format, screened without
//! densifying; compares the PP and EBIC cut points on the same path.

use std::path::Path;

use bitscreen::bits;
use bitscreen::io;
use bitscreen::linalg::{CenteredResponse, RawMatrix};
use bitscreen::posterior::Hyperparams;
use bitscreen::stopping::{self, StopRule};

fn main() -> bitscreen::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let design = io::read_design(&data.join("z.mtx"))?;
    let response = CenteredResponse::new(&io::read_response(&data.join("y.txt"))?)?;
    if let RawMatrix::Sparse(z) = design.raw() {
        let fill = z.nnz() as f64 / (design.n() * design.p()) as f64;
        println!("{} x {} markers, {:.0}% nonzero", design.n(), design.p(), 100.0 * fill);
    }

    let hyper = Hyperparams::new(200.0, 0.1)?;
    let res = bits::screen(&design, &response, hyper, StopRule::FixedSize(20), None)?;
    let pp = stopping::pp_decide(&res.pi_trace, res.null_log_posterior);
    let ebic = stopping::ebic_decide(&design, &response, &res.path, res.path.len(), false)?;
    println!("first 20 markers: {:?}", res.path);
    println!("PP keeps   {:?}", &res.path[..pp.size]);
    println!("EBIC keeps {:?}", &res.path[..ebic.size]);
    Ok(())
}
