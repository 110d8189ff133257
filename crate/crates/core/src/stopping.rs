//! Rules deciding how much of a screening path to keep.

use crate::linalg::{CenteredResponse, StandardizedDesign, TriangularFactor};
use crate::{Error, Result};

/// Pivot threshold (times `n`) below which an EBIC refit column counts as
/// collinear with its predecessors.
const EBIC_COLLINEAR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Keep the first `m` indices.
    FixedSize(usize),
    /// Stop at the first strict drop of the log posterior.
    Pp { cap: Option<usize> },
    /// Cut at the largest single drop `π_m − π_{m+1}` over a path of length `cap`.
    PpLargestDrop { cap: Option<usize> },
    /// Minimize EBIC over the first `max_k` path entries (default
    /// [`default_ebic_max_k`]).
    Ebic { max_k: Option<usize>, include_null: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PpDecision {
    pub size: usize,
    /// Whether a drop was seen (as opposed to the trace running out).
    pub dropped: bool,
}

/// PP rule on `π_1 … π_k`: the first `k` with `π_k < π_{k−1}` keeps `k − 1`
/// variables; `π_1` is compared against the null model. Ties continue.
pub fn pp_decide(pi_trace: &[f64], null_log_posterior: f64) -> PpDecision {
    let mut prev = null_log_posterior;
    for (k, &pi) in pi_trace.iter().enumerate() {
        if pi < prev {
            return PpDecision { size: k, dropped: true };
        }
        prev = pi;
    }
    PpDecision {
        size: pi_trace.len(),
        dropped: false,
    }
}

/// `argmax_{1 ≤ m < cap} (π_m − π_{m+1})`, lowest `m` on ties.
pub fn pp_largest_drop_decide(pi_trace: &[f64], cap: usize) -> Result<usize> {
    let cap = cap.min(pi_trace.len());
    if cap < 2 {
        return Err(Error::Input(format!(
            "largest-drop rule needs at least 2 posterior values, got {cap}"
        )));
    }
    let mut best = (1, f64::NEG_INFINITY);
    for m in 1..cap {
        let drop = pi_trace[m - 1] - pi_trace[m];
        if drop > best.1 {
            best = (m, drop);
        }
    }
    Ok(best.0)
}

/// Default EBIC search range `min(⌊n / ln n⌋, n − 1)`.
///
/// Greedy paths with `p ≫ n` approach interpolation well before `n − 1`
/// steps, where `log σ̂²` falls without bound and the minimum would sit at
/// the end of the path. Pass an explicit `max_k` to scan further.
pub fn default_ebic_max_k(n: usize) -> usize {
    let nf = n as f64;
    ((nf / nf.ln()).floor() as usize).clamp(1, n.saturating_sub(1).max(1))
}

pub fn fixed_size_decide(path_len: usize, m: usize) -> usize {
    m.min(path_len)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EbicDecision {
    pub size: usize,
    /// `EBIC(0) … EBIC(max_k)`.
    pub values: Vec<f64>,
    /// Path positions treated as collinear with their predecessors.
    pub skipped: Vec<usize>,
}

/// `EBIC(k) = log σ̂²_(k) + k (log n + 2 log p) / n`, with `n σ̂²_(k)` the OLS
/// residual sum of squares of the first `k` path entries. The OLS fits are
/// obtained by an unpenalized Cholesky grown along the path.
pub fn ebic_decide(
    design: &StandardizedDesign,
    response: &CenteredResponse,
    path: &[usize],
    max_k: usize,
    include_null: bool,
) -> Result<EbicDecision> {
    let n = design.n();
    if max_k >= n {
        return Err(Error::Dimension(format!("EBIC max_k {max_k} must be below n = {n}")));
    }
    let max_k = max_k.min(path.len());
    let nf = n as f64;
    let penalty = (nf.ln() + 2.0 * (design.p() as f64).ln()) / nf;
    let y = response.values();
    let floor = 1e-12 * response.norm_sq();

    let mut factor = TriangularFactor::with_capacity(max_k);
    let mut c: Vec<f64> = Vec::with_capacity(max_k);
    let mut rss = response.norm_sq();
    let mut skipped = Vec::new();
    let mut values = Vec::with_capacity(max_k + 1);
    values.push((rss.max(floor) / nf).ln());
    for (k, &j) in path[..max_k].iter().enumerate() {
        let xj = design.x_col(j)?;
        let g = factor
            .path_order()
            .iter()
            .map(|&m| design.x_col_dot(m, &xj))
            .collect::<Result<Vec<_>>>()?;
        let alpha = factor.solve_lower(&g)?;
        let xjxj: f64 = xj.iter().map(|v| v * v).sum();
        let b2 = xjxj - alpha.iter().map(|a| a * a).sum::<f64>();
        if b2 < EBIC_COLLINEAR * nf {
            skipped.push(k);
        } else {
            let b = b2.sqrt();
            let xty: f64 = xj.iter().zip(y).map(|(a, b)| a * b).sum();
            let ck = (xty - alpha.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>()) / b;
            factor.append(&alpha, b, j)?;
            c.push(ck);
            rss -= ck * ck;
        }
        values.push((rss.max(floor) / nf).ln() + (k + 1) as f64 * penalty);
    }
    let start = if include_null { 0 } else { 1.min(values.len() - 1) };
    let mut size = start;
    for k in start..values.len() {
        if values[k] < values[size] {
            size = k;
        }
    }
    Ok(EbicDecision { size, values, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use nalgebra::{DMatrix, DVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn pp_examples() {
        let inc: Vec<f64> = (0..10).map(|k| k as f64).collect();
        assert_eq!(pp_decide(&inc, -100.0), PpDecision { size: 10, dropped: false });
        assert_eq!(pp_decide(&[-5.0], -4.0), PpDecision { size: 0, dropped: true });
        assert_eq!(pp_decide(&[-5.0, -4.0, -4.5], -10.0).size, 2);
        // ties continue
        assert_eq!(pp_decide(&[-5.0, -5.0, -4.0], -10.0), PpDecision { size: 3, dropped: false });
        assert_eq!(pp_decide(&[], 0.0).size, 0);
    }

    #[test]
    fn largest_drop_examples() {
        assert_eq!(pp_largest_drop_decide(&[0.0, 5.0, 1.0, 2.0], 4).unwrap(), 2);
        // increasing: smallest rise wins
        assert_eq!(pp_largest_drop_decide(&[0.0, 5.0, 6.0, 10.0], 4).unwrap(), 2);
        assert!(pp_largest_drop_decide(&[1.0], 4).is_err());
        // cap restricts the scan
        assert_eq!(pp_largest_drop_decide(&[0.0, 1.0, 2.0, -9.0], 3).unwrap(), 1);
    }

    #[test]
    fn largest_drop_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let t: Vec<f64> = (0..12).map(|_| StandardNormal.sample(&mut rng)).collect();
            let got = pp_largest_drop_decide(&t, 12).unwrap();
            let drops: Vec<f64> = t.windows(2).map(|w| w[0] - w[1]).collect();
            let best = drops.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(drops[got - 1], best);
        }
    }

    #[test]
    fn fixed_size() {
        assert_eq!(fixed_size_decide(10, 0), 0);
        assert_eq!(fixed_size_decide(10, 4), 4);
        assert_eq!(fixed_size_decide(10, 50), 10);
    }

    fn ebic_brute(d: &StandardizedDesign, r: &CenteredResponse, path: &[usize], max_k: usize) -> Vec<f64> {
        let n = d.n();
        let nf = n as f64;
        let pen = (nf.ln() + 2.0 * (d.p() as f64).ln()) / nf;
        let y = DVector::from_column_slice(r.values());
        (0..=max_k)
            .map(|k| {
                let rss = if k == 0 {
                    y.norm_squared()
                } else {
                    let mut x = DMatrix::zeros(n, k);
                    for (c, &j) in path[..k].iter().enumerate() {
                        x.set_column(c, &DVector::from_vec(d.x_col(j).unwrap()));
                    }
                    let svd = x.clone().svd(true, true);
                    let beta = svd.solve(&y, 1e-9).unwrap();
                    (&y - &x * beta).norm_squared()
                };
                (rss / nf).ln() + k as f64 * pen
            })
            .collect()
    }

    #[test]
    fn ebic_one_strong_variable() {
        let (n, p) = (100, 1000);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let data: Vec<f64> = (0..n * p).map(|_| StandardNormal.sample(&mut rng)).collect();
        let z = DenseMatrix::from_col_major(n, p, data).unwrap();
        let y: Vec<f64> = (0..n).map(|i| 3.0 * z.get(i, 0) + Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
        let d = StandardizedDesign::dense(z).unwrap();
        let r = CenteredResponse::new(&y).unwrap();
        let path: Vec<usize> = (0..10).collect();
        let dec = ebic_decide(&d, &r, &path, 10, false).unwrap();
        let brute = ebic_brute(&d, &r, &path, 10);
        for k in 0..=10 {
            assert!((dec.values[k] - brute[k]).abs() < 1e-9);
        }
        assert_eq!(dec.size, 1);
    }

    #[test]
    fn ebic_null_signal_small() {
        let (n, p) = (60, 200);
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let data: Vec<f64> = (0..n * p).map(|_| StandardNormal.sample(&mut rng)).collect();
        let z = DenseMatrix::from_col_major(n, p, data).unwrap();
        let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let d = StandardizedDesign::dense(z).unwrap();
        let r = CenteredResponse::new(&y).unwrap();
        let path: Vec<usize> = (0..15).collect();
        let dec = ebic_decide(&d, &r, &path, 15, true).unwrap();
        assert_eq!(dec.size, 0);
        let brute = ebic_brute(&d, &r, &path, 15);
        let want = (0..=15).min_by(|&a, &b| brute[a].partial_cmp(&brute[b]).unwrap()).unwrap();
        assert_eq!(dec.size, want);
        assert_eq!(ebic_decide(&d, &r, &path, 15, false).unwrap().size, 1);
    }

    #[test]
    fn ebic_duplicate_is_skipped() {
        let (n, p) = (40, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let mut z = DenseMatrix::zeros(n, p);
        for j in 0..4 {
            for i in 0..n {
                z.set(i, j, StandardNormal.sample(&mut rng));
            }
        }
        let c0 = z.col(0).to_vec();
        z.col_mut(4).iter_mut().zip(&c0).for_each(|(a, b)| *a = 2.0 * b + 1.0);
        let y: Vec<f64> = (0..n).map(|i| z.get(i, 0) + z.get(i, 1) + 0.5 * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
        let d = StandardizedDesign::dense(z).unwrap();
        let r = CenteredResponse::new(&y).unwrap();
        let dec = ebic_decide(&d, &r, &[0, 4, 1], 3, false).unwrap();
        assert_eq!(dec.skipped, vec![1]);
        let pen = ((n as f64).ln() + 2.0 * (p as f64).ln()) / n as f64;
        assert!((dec.values[2] - dec.values[1] - pen).abs() < 1e-9);
        assert!(ebic_decide(&d, &r, &[0, 4, 1], 40, false).is_err());
    }
}
