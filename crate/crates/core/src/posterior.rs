//! Exact marginal posterior of a model under the hierarchical prior
//!
//! ```text
//! y | β₀, β, γ, σ² ~ N(1β₀ + X_γ β_γ, σ² I)
//! f(β₀, σ²) ∝ 1/σ²,   β_j | γ, σ² ~ N(0, γ_j σ²/λ),   γ ~ Bernoulli(w)^p
//! ```
//!
//! for which, up to an additive constant shared by all models,
//!
//! ```text
//! log f(γ|y) = |γ|/2·log λ − ½ log|X_γᵀX_γ + λI| − (n−1)/2·log RSS_λ(γ) + |γ|·log(w/(1−w))
//! RSS_λ(γ)   = ỹᵀỹ − ỹᵀX_γ (X_γᵀX_γ + λI)⁻¹ X_γᵀỹ
//! ```
//!
//! The constant (the `Γ((n−1)/2)/π^{(n−1)/2}` factor and the normalizer of
//! `f(γ|y)`) is fixed to zero. Everything here refactorizes from scratch with
//! a dense Cholesky and never touches the incremental engine in
//! [`crate::bits`]; that separation is what makes it usable as an oracle.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::linalg::{CenteredResponse, StandardizedDesign};
use crate::{Error, Result};

/// Ridge precision `λ > 0` and prior inclusion probability `w ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    lambda: f64,
    w: f64,
}

impl Hyperparams {
    pub fn new(lambda: f64, w: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Config(format!("lambda must be positive, got {lambda}")));
        }
        if !(w > 0.0 && w < 1.0) {
            return Err(Error::Config(format!("w must lie in (0, 1), got {w}")));
        }
        Ok(Self { lambda, w })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    /// `log(w / (1 − w))`.
    pub fn log_prior_odds(&self) -> f64 {
        (self.w / (1.0 - self.w)).ln()
    }
}

/// A model `γ`: sorted, unique column indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ModelIndex(Vec<usize>);

impl ModelIndex {
    pub fn new(mut cols: Vec<usize>) -> Result<Self> {
        cols.sort_unstable();
        if cols.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Input("model contains a repeated index".into()));
        }
        Ok(Self(cols))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn with(&self, j: usize) -> Result<Self> {
        let mut v = self.0.clone();
        v.push(j);
        Self::new(v)
    }
}

/// Ridge partial variances and the ridge partial correlation of a candidate
/// `i` given `X_γ`.
///
/// `r` keeps the leading minus sign of its defining formula,
/// `R = −v_iy / √(v_i · v_y)`; only `R²` enters the posterior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgePartials {
    pub v_i: f64,
    pub v_iy: f64,
    pub v_y: f64,
    pub r: f64,
}

impl RidgePartials {
    pub fn r_squared(&self) -> f64 {
        self.r * self.r
    }
}

/// Fresh dense factorization of `X_γᵀX_γ + λI` with `X_γ` materialized.
struct RidgeFit {
    x: DMatrix<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    xty: DVector<f64>,
    /// `(X_γᵀX_γ + λI)⁻¹ X_γᵀỹ`
    beta: DVector<f64>,
}

impl RidgeFit {
    fn new(design: &StandardizedDesign, response: &CenteredResponse, gamma: &ModelIndex, lambda: f64) -> Result<Self> {
        let n = design.n();
        check_model(design, response, gamma)?;
        let k = gamma.len();
        let mut x = DMatrix::zeros(n, k);
        for (c, &j) in gamma.indices().iter().enumerate() {
            x.set_column(c, &DVector::from_vec(design.x_col(j)?));
        }
        let mut a = x.transpose() * &x;
        for d in 0..k {
            a[(d, d)] += lambda;
        }
        let chol = a
            .cholesky()
            .ok_or_else(|| Error::Breakdown("ridge Gram matrix is not positive definite".into()))?;
        let y = DVector::from_column_slice(response.values());
        let xty = x.transpose() * y;
        let beta = chol.solve(&xty);
        Ok(Self { x, chol, xty, beta })
    }

    fn log_det(&self) -> f64 {
        let l = self.chol.l_dirty();
        2.0 * (0..l.nrows()).map(|d| l[(d, d)].ln()).sum::<f64>()
    }

    fn rss(&self, response: &CenteredResponse) -> f64 {
        response.norm_sq() - self.xty.dot(&self.beta)
    }
}

fn check_model(design: &StandardizedDesign, response: &CenteredResponse, gamma: &ModelIndex) -> Result<()> {
    if response.len() != design.n() {
        return Err(Error::Dimension(format!(
            "response has {} values, design has {} rows",
            response.len(),
            design.n()
        )));
    }
    if gamma.len() >= design.n() {
        return Err(Error::Dimension(format!(
            "model size {} must be below n = {}",
            gamma.len(),
            design.n()
        )));
    }
    for &j in gamma.indices() {
        if j >= design.p() {
            return Err(Error::Dimension(format!("column {j} out of range")));
        }
        if !design.is_admissible(j) {
            return Err(Error::Inadmissible(j));
        }
    }
    Ok(())
}

/// `RSS_λ(γ)` by direct factorization.
pub fn ridge_rss(design: &StandardizedDesign, response: &CenteredResponse, gamma: &ModelIndex, lambda: f64) -> Result<f64> {
    Ok(RidgeFit::new(design, response, gamma, lambda)?.rss(response))
}

/// Log posterior of `γ` (additive constant dropped).
pub fn log_posterior_exact(
    design: &StandardizedDesign,
    response: &CenteredResponse,
    gamma: &ModelIndex,
    hyper: Hyperparams,
) -> Result<f64> {
    let n = design.n() as f64;
    let k = gamma.len() as f64;
    let (log_det, rss) = if gamma.is_empty() {
        check_model(design, response, gamma)?;
        (0.0, response.norm_sq())
    } else {
        let fit = RidgeFit::new(design, response, gamma, hyper.lambda())?;
        (fit.log_det(), fit.rss(response))
    };
    if !(rss > 0.0) {
        return Err(Error::Breakdown(format!("non-positive ridge RSS {rss:e}")));
    }
    Ok(0.5 * k * hyper.lambda().ln() - 0.5 * log_det - 0.5 * (n - 1.0) * rss.ln() + k * hyper.log_prior_odds())
}

/// Ridge partial variances / correlation of candidate `i ∉ γ`.
pub fn ridge_partials(
    design: &StandardizedDesign,
    response: &CenteredResponse,
    gamma: &ModelIndex,
    i: usize,
    hyper: Hyperparams,
) -> Result<RidgePartials> {
    if gamma.contains(i) {
        return Err(Error::Input(format!("candidate {i} is already in the model")));
    }
    check_model(design, response, gamma)?;
    let n = design.n() as f64;
    let lambda = hyper.lambda();
    let xi = DVector::from_vec(design.x_col(i)?);
    let y = DVector::from_column_slice(response.values());
    let xi_xi = xi.dot(&xi);
    let xi_y = xi.dot(&y);
    let (v_i, v_iy, v_y) = if gamma.is_empty() {
        ((xi_xi + lambda) / n, xi_y / n, response.norm_sq() / n)
    } else {
        let fit = RidgeFit::new(design, response, gamma, lambda)?;
        let g = fit.x.transpose() * &xi;
        let a_inv_g = fit.chol.solve(&g);
        (
            (xi_xi + lambda - g.dot(&a_inv_g)) / n,
            (xi_y - fit.beta.dot(&g)) / n,
            fit.rss(response) / n,
        )
    };
    if !(v_y > 0.0) || !(v_i > 0.0) {
        return Err(Error::Breakdown("non-positive ridge partial variance".into()));
    }
    Ok(RidgePartials {
        v_i,
        v_iy,
        v_y,
        r: -v_iy / (v_i * v_y).sqrt(),
    })
}

/// `log f(γ + e_i | y) − log f(γ | y)` computed from the ridge partials:
///
/// ```text
/// log(w/(1−w)) + ½ log(λ/n) − ½ log v_i − (n−1)/2 · log(1 − R²)
/// ```
pub fn posterior_ratio_via_partials(
    design: &StandardizedDesign,
    response: &CenteredResponse,
    gamma: &ModelIndex,
    i: usize,
    hyper: Hyperparams,
) -> Result<f64> {
    let rp = ridge_partials(design, response, gamma, i, hyper)?;
    let n = design.n() as f64;
    let r2 = rp.r_squared();
    if r2 >= 1.0 {
        return Err(Error::Breakdown(format!("ridge partial R² = {r2} is not below 1")));
    }
    Ok(hyper.log_prior_odds() + 0.5 * (hyper.lambda() / n).ln() - 0.5 * rp.v_i.ln()
        - 0.5 * (n - 1.0) * (-r2).ln_1p())
}

/// Greedy path produced by exhaustive re-evaluation of the posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct OraclePath {
    pub path: Vec<usize>,
    /// `trace[0]` is the null model, `trace[k]` the model after `k` steps.
    pub trace: Vec<f64>,
}

/// Default upper bound on `p` accepted by [`oracle_greedy_path`].
pub const DEFAULT_ORACLE_MAX_P: usize = 5000;

/// Reference greedy screening: at every step scores every remaining
/// admissible column with [`log_posterior_exact`] and keeps the argmax
/// (lowest index on ties). Cost is `O(steps · p · k³)`.
pub fn oracle_greedy_path(
    design: &StandardizedDesign,
    response: &CenteredResponse,
    hyper: Hyperparams,
    steps: usize,
    max_p: usize,
) -> Result<OraclePath> {
    if design.p() > max_p {
        return Err(Error::Config(format!(
            "oracle refuses p = {} (cap {max_p}); subsample columns or raise the cap",
            design.p()
        )));
    }
    if steps >= design.n() {
        return Err(Error::Dimension(format!("steps {steps} must be below n = {}", design.n())));
    }
    let mut gamma = ModelIndex::empty();
    let mut path = Vec::with_capacity(steps);
    let mut trace = vec![log_posterior_exact(design, response, &gamma, hyper)?];
    for _ in 0..steps {
        let scores: Vec<Option<f64>> = (0..design.p())
            .into_par_iter()
            .map(|j| {
                if !design.is_admissible(j) || gamma.contains(j) {
                    return Ok(None);
                }
                log_posterior_exact(design, response, &gamma.with(j)?, hyper).map(Some)
            })
            .collect::<Result<_>>()?;
        let mut best: Option<(usize, f64)> = None;
        for (j, s) in scores.into_iter().enumerate() {
            if let Some(s) = s {
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((j, s));
                }
            }
        }
        let Some((j, s)) = best else { break };
        gamma = gamma.with(j)?;
        path.push(j);
        trace.push(s);
    }
    Ok(OraclePath { path, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian_problem(n: usize, p: usize, seed: u64) -> (StandardizedDesign, CenteredResponse) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..n * p).map(|_| StandardNormal.sample(&mut rng)).collect();
        let z = DenseMatrix::from_col_major(n, p, data).unwrap();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let e: f64 = StandardNormal.sample(&mut rng);
                1.5 * z.get(i, 0) - z.get(i, 2) + 0.8 * z.get(i, 4) + e
            })
            .collect();
        (StandardizedDesign::dense(z).unwrap(), CenteredResponse::new(&y).unwrap())
    }

    /// Same quantity through a QR of the augmented matrix `[X_γ; √λ I]`.
    fn log_posterior_qr(d: &StandardizedDesign, r: &CenteredResponse, gamma: &[usize], h: Hyperparams) -> f64 {
        let n = d.n();
        let k = gamma.len();
        let mut a = DMatrix::zeros(n + k, k);
        for (c, &j) in gamma.iter().enumerate() {
            let x = d.x_col(j).unwrap();
            for i in 0..n {
                a[(i, c)] = x[i];
            }
            a[(n + c, c)] = h.lambda().sqrt();
        }
        let mut yb = DVector::zeros(n + k);
        for i in 0..n {
            yb[i] = r.values()[i];
        }
        let qr = a.qr();
        let rr = qr.r();
        let log_det: f64 = (0..k).map(|d| 2.0 * rr[(d, d)].abs().ln()).sum();
        let qty = qr.q().transpose() * &yb;
        let rss = yb.norm_squared() - qty.norm_squared();
        let (nf, kf) = (n as f64, k as f64);
        0.5 * kf * h.lambda().ln() - 0.5 * log_det - 0.5 * (nf - 1.0) * rss.ln() + kf * h.log_prior_odds()
    }

    #[test]
    fn hyperparams_validated() {
        assert!(Hyperparams::new(0.0, 0.1).is_err());
        assert!(Hyperparams::new(1.0, 1.0).is_err());
        assert!(Hyperparams::new(1.0, 0.0).is_err());
        assert!(Hyperparams::new(1.0, 0.5).unwrap().log_prior_odds().abs() < 1e-15);
    }

    #[test]
    fn null_model_value() {
        let (d, r) = gaussian_problem(30, 6, 1);
        let h = Hyperparams::new(2.0, 0.1).unwrap();
        let v = log_posterior_exact(&d, &r, &ModelIndex::empty(), h).unwrap();
        assert!((v + 14.5 * r.norm_sq().ln()).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_zero_correlation_column() {
        // X_0 orthogonal to y: y = (1,-1,1,-1), z = (1,1,-1,-1)
        let z = DenseMatrix::from_rows(&[vec![1.0], vec![1.0], vec![-1.0], vec![-1.0]]).unwrap();
        let d = StandardizedDesign::dense(z).unwrap();
        let r = CenteredResponse::new(&[1.0, -1.0, 1.0, -1.0]).unwrap();
        let h = Hyperparams::new(0.7, 0.2).unwrap();
        let null = log_posterior_exact(&d, &r, &ModelIndex::empty(), h).unwrap();
        let one = log_posterior_exact(&d, &r, &ModelIndex::new(vec![0]).unwrap(), h).unwrap();
        let want = null + 0.5 * 0.7f64.ln() - 0.5 * 4.7f64.ln() + h.log_prior_odds();
        assert!((one - want).abs() < 1e-12);
    }

    #[test]
    fn matches_qr_oracle() {
        let (d, r) = gaussian_problem(30, 6, 7);
        for (lambda, gamma) in [(0.3, vec![0, 2, 5]), (5.0, vec![1, 3, 4]), (30.0, vec![0, 1, 2])] {
            let h = Hyperparams::new(lambda, 0.05).unwrap();
            let a = log_posterior_exact(&d, &r, &ModelIndex::new(gamma.clone()).unwrap(), h).unwrap();
            let b = log_posterior_qr(&d, &r, &gamma, h);
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn model_size_guard() {
        let (d, r) = gaussian_problem(4, 6, 2);
        let h = Hyperparams::new(1.0, 0.1).unwrap();
        let g = ModelIndex::new(vec![0, 1, 2, 3]).unwrap();
        assert!(matches!(log_posterior_exact(&d, &r, &g, h), Err(Error::Dimension(_))));
        assert!(ModelIndex::new(vec![1, 1]).is_err());
    }

    #[test]
    fn partials_empty_model() {
        let (d, r) = gaussian_problem(25, 5, 3);
        let h = Hyperparams::new(3.0, 0.1).unwrap();
        let rp = ridge_partials(&d, &r, &ModelIndex::empty(), 2, h).unwrap();
        assert!((rp.v_i - (1.0 + 3.0 / 25.0)).abs() < 1e-12);
        let xty = d.x_col_dot(2, r.values()).unwrap();
        assert!((rp.v_iy - xty / 25.0).abs() < 1e-12);
        assert!(ridge_partials(&d, &r, &ModelIndex::new(vec![2]).unwrap(), 2, h).is_err());
    }

    #[test]
    fn partials_orthogonal_design() {
        // Orthogonal centered columns: Hadamard-like 8x3.
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|i| {
                let b = |k: usize| if (i >> k) & 1 == 1 { 1.0 } else { -1.0 };
                vec![b(0), b(1), b(2)]
            })
            .collect();
        let d = StandardizedDesign::dense(DenseMatrix::from_rows(&rows).unwrap()).unwrap();
        let y = [1.0, 3.0, -2.0, 0.5, 4.0, -1.0, 2.2, 0.1];
        let r = CenteredResponse::new(&y).unwrap();
        let h = Hyperparams::new(1.5, 0.1).unwrap();
        let gamma = ModelIndex::new(vec![0]).unwrap();
        let rp = ridge_partials(&d, &r, &gamma, 2, h).unwrap();
        let rss = ridge_rss(&d, &r, &gamma, 1.5).unwrap();
        let xty = d.x_col_dot(2, r.values()).unwrap();
        let want = xty * xty / ((8.0 + 1.5) * rss);
        assert!((rp.r_squared() - want).abs() < 1e-12);
        assert!((8.0 * rp.v_y - rss).abs() < 1e-10 * rss);
    }

    #[test]
    fn partials_approach_classical_partial_correlation() {
        let (d, r) = gaussian_problem(40, 5, 4);
        let h = Hyperparams::new(1e-9, 0.1).unwrap();
        let gamma = [0usize, 3];
        let rp = ridge_partials(&d, &r, &ModelIndex::new(gamma.to_vec()).unwrap(), 1, h).unwrap();
        // residualize y and X_1 on X_γ by OLS, then correlate
        let mut xg = DMatrix::zeros(40, 2);
        for (c, &j) in gamma.iter().enumerate() {
            xg.set_column(c, &DVector::from_vec(d.x_col(j).unwrap()));
        }
        let resid = |v: DVector<f64>| {
            let coef = (xg.transpose() * &xg).try_inverse().unwrap() * (xg.transpose() * &v);
            v - &xg * coef
        };
        let ey = resid(DVector::from_column_slice(r.values()));
        let ex = resid(DVector::from_vec(d.x_col(1).unwrap()));
        let classical = ey.dot(&ex) / (ey.norm() * ex.norm());
        assert!((rp.r.abs() - classical.abs()).abs() < 1e-6);
    }

    #[test]
    fn ratio_identity_small() {
        let (d, r) = gaussian_problem(30, 8, 5);
        for lambda in [0.1, 1.0, 8.0] {
            for w in [0.5, 0.01] {
                let h = Hyperparams::new(lambda, w).unwrap();
                let g = ModelIndex::new(vec![1, 4]).unwrap();
                for i in [0, 2, 7] {
                    let via = posterior_ratio_via_partials(&d, &r, &g, i, h).unwrap();
                    let direct = log_posterior_exact(&d, &r, &g.with(i).unwrap(), h).unwrap()
                        - log_posterior_exact(&d, &r, &g, h).unwrap();
                    assert!((via - direct).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn ratio_for_uncorrelated_candidate() {
        let z = DenseMatrix::from_rows(&[vec![1.0], vec![1.0], vec![-1.0], vec![-1.0]]).unwrap();
        let d = StandardizedDesign::dense(z).unwrap();
        let r = CenteredResponse::new(&[1.0, -1.0, 1.0, -1.0]).unwrap();
        let h = Hyperparams::new(2.0, 0.3).unwrap();
        let rp = ridge_partials(&d, &r, &ModelIndex::empty(), 0, h).unwrap();
        assert_eq!(rp.r_squared(), 0.0);
        let got = posterior_ratio_via_partials(&d, &r, &ModelIndex::empty(), 0, h).unwrap();
        let want = (0.3f64 / 0.7).ln() + 0.5 * (2.0f64 / 4.0).ln() - 0.5 * rp.v_i.ln();
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn rss_bounds_and_monotone_in_lambda() {
        let (d, r) = gaussian_problem(30, 6, 9);
        let g = ModelIndex::new(vec![0, 2, 3]).unwrap();
        let ols = ridge_rss(&d, &r, &g, 1e-12).unwrap();
        let mut prev = ols;
        for lambda in [0.01, 0.1, 1.0, 10.0, 100.0, 1e4] {
            let rss = ridge_rss(&d, &r, &g, lambda).unwrap();
            assert!(rss >= prev - 1e-12);
            assert!(rss <= r.norm_sq() + 1e-12);
            prev = rss;
        }
    }

    #[test]
    fn oracle_edge_cases() {
        let (d, r) = gaussian_problem(20, 5, 6);
        let h = Hyperparams::new(1.0, 0.1).unwrap();
        let o = oracle_greedy_path(&d, &r, h, 0, DEFAULT_ORACLE_MAX_P).unwrap();
        assert!(o.path.is_empty());
        assert_eq!(o.trace.len(), 1);
        assert!(matches!(oracle_greedy_path(&d, &r, h, 2, 4), Err(Error::Config(_))));
        let o = oracle_greedy_path(&d, &r, h, 3, DEFAULT_ORACLE_MAX_P).unwrap();
        assert_eq!(o.path[0], 0);
        // w changes values, never the path
        let o2 = oracle_greedy_path(&d, &r, Hyperparams::new(1.0, 0.6).unwrap(), 3, 100).unwrap();
        assert_eq!(o.path, o2.path);
    }

    #[test]
    fn oracle_two_column_dominant_first() {
        let z = DenseMatrix::from_rows(&[
            vec![1.0, 1.0],
            vec![-1.0, 1.0],
            vec![1.0, -1.0],
            vec![-1.0, -1.0],
            vec![1.0, 1.0],
            vec![-1.0, -1.0],
        ])
        .unwrap();
        let d = StandardizedDesign::dense(z.clone()).unwrap();
        let y: Vec<f64> = (0..6).map(|i| 2.0 * z.get(i, 0) + 0.01 * (i as f64).sin()).collect();
        let r = CenteredResponse::new(&y).unwrap();
        let o = oracle_greedy_path(&d, &r, Hyperparams::new(1.0, 0.1).unwrap(), 1, 10).unwrap();
        assert_eq!(o.path, vec![0]);
    }
}
