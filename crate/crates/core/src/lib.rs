//! Bayesian iterative screening (BITS) for ultra-high-dimensional linear
//! regression.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: the implicitly standardized design matrix (dense or CSC),
//!   the centered response and the packed incremental Cholesky factor.
//! - [`posterior`]: exact marginal posterior of a model under the ridge /
//!   Bernoulli hierarchical prior, ridge partial correlations and the
//!   brute-force greedy oracle.
//! - [`bits`]: the fast screening engine built on one-step delayed Cholesky
//!   updates, `O(k² + kn + np)` per iteration.
//! - [`stopping`]: PP, PP largest-drop, EBIC and fixed-size rules.
//! - [`baselines`]: SIS, HOLP and forward regression.
//! - [`simgen`]: synthetic designs, responses and TPR / CP metrics.
//! - [`io`] and [`cli`]: file formats and the `bitscreen` command line.
//!
//! ```no_run
//! use bitscreen::{bits, linalg::{CenteredResponse, StandardizedDesign, DenseMatrix}};
//! use bitscreen::posterior::Hyperparams;
//! use bitscreen::stopping::StopRule;
//!
//! # fn main() -> bitscreen::Result<()> {
//! let z = DenseMatrix::from_rows(&[vec![1.0, 0.2], vec![0.0, 1.3], vec![2.0, 0.1]])?;
//! let design = StandardizedDesign::dense(z)?;
//! let response = CenteredResponse::new(&[1.0, 0.5, 2.2])?;
//! let hyper = Hyperparams::new(1.0, 0.1)?;
//! let result = bits::screen(&design, &response, hyper, StopRule::Pp { cap: None }, None)?;
//! println!("{:?}", result.selected);
//! # Ok(())
//! # }
//! ```

pub mod baselines;
pub mod bits;
pub mod cli;
mod error;
pub mod io;
pub mod linalg;
pub mod posterior;
pub mod simgen;
pub mod stopping;

pub use error::{Error, Result};
