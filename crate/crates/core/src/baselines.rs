//! Frequentist screening baselines: SIS, HOLP and forward regression.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::bits::{self, Criterion};
use crate::linalg::{CenteredResponse, StandardizedDesign};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sis,
    Holp,
    Fr,
}

#[derive(Debug, Clone)]
pub struct BaselineResult {
    pub method: Method,
    /// Column indices, best first (selection order for FR).
    pub ranking: Vec<usize>,
    /// `|X_jᵀỹ|` for SIS, `|β̂_j|` for HOLP, RSS after each step for FR;
    /// aligned with `ranking`.
    pub scores: Vec<f64>,
    /// HOLP only: the Gram system needed a ridge jitter.
    pub jittered: bool,
}

fn rank_by_magnitude(design: &StandardizedDesign, values: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let mut idx: Vec<usize> = (0..design.p()).filter(|&j| design.is_admissible(j)).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .abs()
            .partial_cmp(&values[a].abs())
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let scores = idx.iter().map(|&j| values[j].abs()).collect();
    (idx, scores)
}

fn check(design: &StandardizedDesign, response: &CenteredResponse) -> Result<()> {
    if design.n() != response.len() {
        return Err(Error::Dimension(format!(
            "design has {} rows but response has {} values",
            design.n(),
            response.len()
        )));
    }
    Ok(())
}

/// Sure independence screening: rank by `|X_jᵀỹ|`.
pub fn sis_rank(design: &StandardizedDesign, response: &CenteredResponse) -> Result<BaselineResult> {
    check(design, response)?;
    let r = design.xt_v(response.values())?;
    let (ranking, scores) = rank_by_magnitude(design, &r);
    Ok(BaselineResult {
        method: Method::Sis,
        ranking,
        scores,
        jittered: false,
    })
}

/// HOLP coefficients `β̂ = Xᵀ(XXᵀ)⁻¹ỹ` from the `n × n` row Gram, in
/// column order, plus whether a jitter was needed.
///
/// Centered columns put `1` in the null space of `XXᵀ`. Since `ỹ ⊥ 1`, the
/// system is solved as `(XXᵀ + c·11ᵀ/n) a = ỹ` with `c = tr(XXᵀ)/n`, which
/// yields the same `β̂` whenever the centered rank is `n − 1`. If the system
/// is still singular a `1e-8·tr/n` ridge is added.
pub fn holp_coefficients(design: &StandardizedDesign, response: &CenteredResponse) -> Result<(Vec<f64>, bool)> {
    check(design, response)?;
    let n = design.n();
    let nf = n as f64;
    let mut g = DMatrix::from_vec(n, n, design.row_gram());
    let trace = g.trace();
    g.add_scalar_mut(trace / (nf * nf));
    let y = DVector::from_column_slice(response.values());

    let solve = |m: DMatrix<f64>| -> Option<DVector<f64>> {
        let chol = m.cholesky()?;
        let l = chol.l_dirty();
        let diag: Vec<f64> = (0..n).map(|i| l[(i, i)] * l[(i, i)]).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < 1e-12 * max {
            return None;
        }
        Some(chol.solve(&y))
    };
    let (a, jittered) = match solve(g.clone()) {
        Some(a) => (a, false),
        None => {
            log::warn!("HOLP row Gram is singular; adding ridge jitter");
            for i in 0..n {
                g[(i, i)] += 1e-8 * trace / nf;
            }
            let a = g
                .cholesky()
                .ok_or_else(|| Error::Breakdown("HOLP Gram not positive definite after jitter".into()))?
                .solve(&y);
            (a, true)
        }
    };
    Ok((design.xt_v(a.as_slice())?, jittered))
}

/// Ranks columns by `|β̂_j|` from [`holp_coefficients`].
pub fn holp_rank(design: &StandardizedDesign, response: &CenteredResponse) -> Result<BaselineResult> {
    let (beta, jittered) = holp_coefficients(design, response)?;
    let (ranking, scores) = rank_by_magnitude(design, &beta);
    Ok(BaselineResult {
        method: Method::Holp,
        ranking,
        scores,
        jittered,
    })
}

/// Forward regression: at each step add the candidate with the largest OLS
/// RSS reduction, skipping candidates whose partial variance falls below
/// `1e-10·n`. Runs at most `min(max_steps, n − 1)` steps.
pub fn fr_screen(design: &StandardizedDesign, response: &CenteredResponse, max_steps: usize) -> Result<BaselineResult> {
    check(design, response)?;
    let steps = max_steps.min(design.n() - 1);
    let mut ranking = Vec::new();
    let mut scores = Vec::new();
    if steps > 0 {
        let mut state = bits::start(design, response, 0.0, 0.0, Criterion::RssReduction)?;
        while state.order() < steps {
            match bits::advance(&mut state, design) {
                Ok(Some(_)) => {}
                Ok(None) | Err(Error::Input(_)) => break,
                Err(Error::Breakdown(msg)) => {
                    log::debug!("forward regression stopped: {msg}");
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        ranking = state.path().to_vec();
        scores = state.rss_trace().to_vec();
    }
    Ok(BaselineResult {
        method: Method::Fr,
        ranking,
        scores,
        jittered: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn walsh(n_log2: u32, p: usize) -> DenseMatrix {
        let n = 1usize << n_log2;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..p)
                    .map(|c| if (i & (c + 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect();
        DenseMatrix::from_rows(&rows).unwrap()
    }

    fn gaussian(n: usize, p: usize, seed: u64) -> (StandardizedDesign, CenteredResponse) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..n * p).map(|_| StandardNormal.sample(&mut rng)).collect();
        let z = DenseMatrix::from_col_major(n, p, data).unwrap();
        let y: Vec<f64> = (0..n)
            .map(|i| 2.0 * z.get(i, 0) + z.get(i, 5 % p) - z.get(i, 9 % p) + Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect();
        (StandardizedDesign::dense(z).unwrap(), CenteredResponse::new(&y).unwrap())
    }

    #[test]
    fn sis_orthogonal_noiseless() {
        let z = walsh(3, 3);
        let y: Vec<f64> = (0..8).map(|i| 3.0 * z.get(i, 0) + 2.0 * z.get(i, 1)).collect();
        let d = StandardizedDesign::dense(z).unwrap();
        let r = CenteredResponse::new(&y).unwrap();
        let s = sis_rank(&d, &r).unwrap();
        assert_eq!(s.ranking, vec![0, 1, 2]);
        assert!(s.scores.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn sis_skips_constant_column() {
        let mut z = walsh(3, 3);
        z.col_mut(1).iter_mut().for_each(|v| *v = 1.0);
        let y: Vec<f64> = (0..8).map(|i| z.get(i, 0) + 0.5 * z.get(i, 2)).collect();
        let d = StandardizedDesign::dense(z).unwrap();
        let s = sis_rank(&d, &CenteredResponse::new(&y).unwrap()).unwrap();
        assert_eq!(s.ranking, vec![0, 2]);
    }

    #[test]
    fn holp_interpolates() {
        let (d, r) = gaussian(30, 120, 4);
        let h = holp_rank(&d, &r).unwrap();
        assert!(!h.jittered);
        let (beta, _) = holp_coefficients(&d, &r).unwrap();
        let cols: Vec<usize> = (0..d.p()).collect();
        let fit = d.x_combine(&cols, &beta).unwrap();
        let err: f64 = fit.iter().zip(r.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err / r.norm_sq().sqrt() < 1e-6);
        assert!(h.ranking[..3].contains(&0));
    }

    #[test]
    fn holp_orthogonal_square_matches_sis() {
        let z = walsh(4, 15);
        let coef = [3.0, -2.5, 2.0, 1.5, -1.0, 0.9, 0.8, -0.7, 0.6, 0.5, 0.4, -0.3, 0.2, 0.1, 0.05];
        let y: Vec<f64> = (0..16).map(|i| (0..15).map(|j| coef[j] * z.get(i, j)).sum()).collect();
        let d = StandardizedDesign::dense(z).unwrap();
        let r = CenteredResponse::new(&y).unwrap();
        let h = holp_rank(&d, &r).unwrap();
        let s = sis_rank(&d, &r).unwrap();
        assert_eq!(h.ranking, s.ranking);
    }

    #[test]
    fn holp_singular_gram_is_jittered() {
        let z = walsh(3, 2);
        let y: Vec<f64> = (0..8).map(|i| z.get(i, 0) - 2.0 * z.get(i, 1) + (i as f64 * 0.3).sin()).collect();
        let d = StandardizedDesign::dense(z).unwrap();
        let h = holp_rank(&d, &CenteredResponse::new(&y).unwrap()).unwrap();
        assert!(h.jittered);
        assert_eq!(h.ranking, vec![1, 0]);
    }

    /// Per-step brute force: refit OLS for every candidate and keep the
    /// smallest RSS.
    fn fr_brute(d: &StandardizedDesign, r: &CenteredResponse, steps: usize) -> Vec<usize> {
        let n = d.n();
        let y = DVector::from_column_slice(r.values());
        let mut path: Vec<usize> = Vec::new();
        for _ in 0..steps {
            let mut best = (usize::MAX, f64::INFINITY);
            for j in 0..d.p() {
                if path.contains(&j) {
                    continue;
                }
                let cols: Vec<usize> = path.iter().cloned().chain([j]).collect();
                let mut x = DMatrix::zeros(n, cols.len());
                for (c, &k) in cols.iter().enumerate() {
                    x.set_column(c, &DVector::from_vec(d.x_col(k).unwrap()));
                }
                let beta = (x.transpose() * &x).cholesky().unwrap().solve(&(x.transpose() * &y));
                let rss = (&y - &x * beta).norm_squared();
                if rss < best.1 {
                    best = (j, rss);
                }
            }
            path.push(best.0);
        }
        path
    }

    #[test]
    fn fr_matches_refit_oracle() {
        for seed in 0..3 {
            let (d, r) = gaussian(40, 15, 10 + seed);
            let fr = fr_screen(&d, &r, 8).unwrap();
            assert_eq!(fr.ranking, fr_brute(&d, &r, 8));
            assert!(fr.scores.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn fr_orthogonal_equals_sis_prefix() {
        let z = walsh(4, 10);
        let coef = [0.3, 2.0, -1.1, 0.8, 1.6, -0.2, 0.5, 0.05, 1.3, -0.9];
        let y: Vec<f64> = (0..16)
            .map(|i| (0..10).map(|j| coef[j] * z.get(i, j)).sum::<f64>() + 0.01 * (i as f64).cos())
            .collect();
        let d = StandardizedDesign::dense(z).unwrap();
        let r = CenteredResponse::new(&y).unwrap();
        let fr = fr_screen(&d, &r, 6).unwrap();
        let sis = sis_rank(&d, &r).unwrap();
        assert_eq!(fr.ranking, sis.ranking[..6]);
    }

    #[test]
    fn fr_skips_duplicates_and_caps() {
        let (d0, r) = gaussian(12, 6, 21);
        let mut z = DenseMatrix::zeros(12, 7);
        for j in 0..6 {
            z.col_mut(j).copy_from_slice(&d0.x_col(j).unwrap());
        }
        let c0 = d0.x_col(0).unwrap();
        z.col_mut(6).copy_from_slice(&c0);
        let d = StandardizedDesign::dense(z).unwrap();
        let fr = fr_screen(&d, &r, 50).unwrap();
        assert!(fr.ranking.len() <= 11);
        assert!(!(fr.ranking.contains(&0) && fr.ranking.contains(&6)));
    }
}
