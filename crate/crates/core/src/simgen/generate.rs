use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::{Setting, SimConfig};
use crate::linalg::DenseMatrix;
use crate::{Error, Result};

/// Independent random streams used inside one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Design = 0,
    Response = 1,
    Loadings = 2,
}

/// ChaCha20 seeded from `master`, stream `(rep << 8) | purpose`.
///
/// Streams never overlap, so replications can run in any order or in parallel.
pub fn substream(master: u64, rep: u64, purpose: Purpose) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master);
    rng.set_stream((rep << 8) | purpose as u64);
    rng
}

fn normal(rng: &mut ChaCha20Rng) -> f64 {
    Distribution::<f64>::sample(&StandardNormal, rng)
}

/// Raw design of one replication plus what is needed for the response.
#[derive(Debug, Clone)]
pub struct GeneratedDesign {
    pub z: DenseMatrix,
    /// `F`, `p × k` column-major, for the factor settings.
    pub loadings: Option<Vec<f64>>,
    /// `βᵀΣβ`.
    pub signal_variance: f64,
    pub beta: Vec<f64>,
}

/// Draws one row of `N(0, Σ)` at a time.
struct RowSampler<'a> {
    config: &'a SimConfig,
    loadings: Option<Vec<f64>>,
    latent: Vec<f64>,
}

impl<'a> RowSampler<'a> {
    fn new(config: &'a SimConfig, rep: u64) -> Self {
        let p = config.p;
        let k = config.k_factors;
        let loadings = match config.setting {
            Setting::Factor => {
                let mut rng = substream(config.seed, rep, Purpose::Loadings);
                Some((0..p * k).map(|_| normal(&mut rng)).collect())
            }
            Setting::SparseFactor => {
                let mut rng = substream(config.seed, rep, Purpose::Loadings);
                let mut f = vec![0.0; p * k];
                for j in 0..k {
                    for i in 5 * j..5 * j + 5 {
                        f[j * p + i] = normal(&mut rng);
                    }
                }
                Some(f)
            }
            _ => None,
        };
        Self {
            config,
            loadings,
            latent: vec![0.0; k.max(9)],
        }
    }

    fn fill(&mut self, rng: &mut ChaCha20Rng, row: &mut [f64]) {
        let c = self.config;
        let p = c.p;
        match c.setting {
            Setting::Iid => row.iter_mut().for_each(|x| *x = normal(rng)),
            Setting::CompoundSymmetry => {
                let shared = normal(rng) * c.rho.sqrt();
                let own = (1.0 - c.rho).sqrt();
                row.iter_mut().for_each(|x| *x = shared + own * normal(rng));
            }
            Setting::Ar1 => {
                let innov = (1.0 - c.rho * c.rho).sqrt();
                row[0] = normal(rng);
                for j in 1..p {
                    row[j] = c.rho * row[j - 1] + innov * normal(rng);
                }
            }
            Setting::Factor | Setting::SparseFactor => {
                let k = c.k_factors;
                let f = self.loadings.as_ref().unwrap();
                for l in &mut self.latent[..k] {
                    *l = normal(rng);
                }
                let noise = if c.setting == Setting::Factor { 1.0 } else { 0.1 };
                for (j, x) in row.iter_mut().enumerate() {
                    let mut s = noise * normal(rng);
                    for (m, l) in self.latent[..k].iter().enumerate() {
                        s += f[m * p + j] * l;
                    }
                    *x = s;
                }
            }
            Setting::Group => {
                for g in 0..3 {
                    let z = normal(rng);
                    for m in 0..5 {
                        row[5 * g + m] = z + 0.1 * normal(rng);
                    }
                }
                row[15..].iter_mut().for_each(|x| *x = normal(rng));
            }
            Setting::ExtremeCorrelation => {
                for w in &mut self.latent[..9] {
                    *w = normal(rng);
                }
                let wsum: f64 = self.latent[..9].iter().sum();
                let r2 = std::f64::consts::SQRT_2;
                for (j, x) in row.iter_mut().enumerate() {
                    let z = normal(rng);
                    *x = if j < 9 { (z + self.latent[j]) / r2 } else { 0.5 * (z + wsum) };
                }
            }
        }
    }
}

/// `βᵀΣβ` in closed form for every setting. For the factor settings `Σ`
/// is conditional on the drawn loadings.
fn signal_variance(config: &SimConfig, beta: &[f64], loadings: Option<&[f64]>) -> f64 {
    let p = config.p;
    let norm2 = |b: &[f64]| b.iter().map(|v| v * v).sum::<f64>();
    let sum = |b: &[f64]| b.iter().sum::<f64>();
    let f_t_beta = |f: &[f64]| {
        (0..config.k_factors)
            .map(|m| {
                let s: f64 = f[m * p..(m + 1) * p].iter().zip(beta).map(|(a, b)| a * b).sum();
                s * s
            })
            .sum::<f64>()
    };
    match config.setting {
        Setting::Iid => norm2(beta),
        Setting::CompoundSymmetry => config.rho * sum(beta).powi(2) + (1.0 - config.rho) * norm2(beta),
        Setting::Ar1 => {
            let nz: Vec<(usize, f64)> = beta.iter().copied().enumerate().filter(|b| b.1 != 0.0).collect();
            let mut s = 0.0;
            for &(i, bi) in &nz {
                for &(j, bj) in &nz {
                    s += bi * bj * config.rho.powi(i.abs_diff(j) as i32);
                }
            }
            s
        }
        Setting::Factor => f_t_beta(loadings.unwrap()) + norm2(beta),
        Setting::SparseFactor => f_t_beta(loadings.unwrap()) + 0.01 * norm2(beta),
        Setting::Group => {
            let groups: f64 = (0..3).map(|g| sum(&beta[5 * g..5 * g + 5]).powi(2)).sum();
            groups + 0.01 * norm2(&beta[..15]) + norm2(&beta[15..])
        }
        Setting::ExtremeCorrelation => {
            let (a, b) = beta.split_at(9);
            norm2(a)
                + sum(a) * sum(b) / std::f64::consts::SQRT_2
                + 2.25 * sum(b).powi(2)
                + 0.25 * norm2(b)
        }
    }
}

/// Raw `n × p` design of replication `rep`. Deterministic in `(config, rep)`.
pub fn gen_design(config: &SimConfig, rep: u64) -> Result<GeneratedDesign> {
    config.validate()?;
    let (n, p) = (config.n, config.p);
    let mut sampler = RowSampler::new(config, rep);
    let mut rng = substream(config.seed, rep, Purpose::Design);
    let mut data = vec![0.0; n * p];
    let mut row = vec![0.0; p];
    for i in 0..n {
        sampler.fill(&mut rng, &mut row);
        for (j, &v) in row.iter().enumerate() {
            data[j * n + i] = v;
        }
    }
    let beta = config.beta.dense(p);
    let signal_variance = signal_variance(config, &beta, sampler.loadings.as_deref());
    Ok(GeneratedDesign {
        z: DenseMatrix::from_col_major(n, p, data)?,
        loadings: sampler.loadings,
        signal_variance,
        beta,
    })
}

/// `y = Zβ + σε` with `σ² = βᵀΣβ (1 − R²)/R²`.
pub fn gen_response(design: &GeneratedDesign, config: &SimConfig, rep: u64) -> Result<Vec<f64>> {
    if !(config.r_squared > 0.0 && config.r_squared < 1.0) {
        return Err(Error::Config(format!("r_squared must lie in (0, 1), got {}", config.r_squared)));
    }
    if !(design.signal_variance > 0.0) {
        return Err(Error::Config("zero signal: beta is zero, so no R² target can be met".into()));
    }
    let sigma = (design.signal_variance * (1.0 - config.r_squared) / config.r_squared).sqrt();
    let n = design.z.nrows();
    let mut y = vec![0.0; n];
    for (j, &b) in design.beta.iter().enumerate() {
        if b != 0.0 {
            for (yi, zi) in y.iter_mut().zip(design.z.col(j)) {
                *yi += b * zi;
            }
        }
    }
    let mut rng = substream(config.seed, rep, Purpose::Response);
    for yi in &mut y {
        *yi += sigma * normal(&mut rng);
    }
    Ok(y)
}

/// Monte Carlo `E[(xᵀβ)²]` over `rows` fresh rows (same loadings as
/// replication `rep`), streamed without storing the design.
pub fn empirical_signal_variance(config: &SimConfig, rep: u64, rows: usize) -> Result<f64> {
    config.validate()?;
    let mut sampler = RowSampler::new(config, rep);
    let mut rng = substream(config.seed ^ 0x5eed, rep, Purpose::Design);
    let beta = config.beta.dense(config.p);
    let mut row = vec![0.0; config.p];
    let mut acc = 0.0;
    for _ in 0..rows {
        sampler.fill(&mut rng, &mut row);
        let s: f64 = config.beta.truth.iter().map(|&j| row[j] * beta[j]).sum();
        acc += s * s;
    }
    Ok(acc / rows as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::BetaSpec;

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let mut sab = 0.0;
        let mut saa = 0.0;
        let mut sbb = 0.0;
        for (x, y) in a.iter().zip(b) {
            sab += (x - ma) * (y - mb);
            saa += (x - ma) * (x - ma);
            sbb += (y - mb) * (y - mb);
        }
        sab / (saa * sbb).sqrt()
    }

    #[test]
    fn deterministic() {
        let c = SimConfig::new(Setting::Factor, 30, 40).with_seed(3);
        let a = gen_design(&c, 2).unwrap();
        let b = gen_design(&c, 2).unwrap();
        assert_eq!(a.z, b.z);
        assert_eq!(gen_response(&a, &c, 2).unwrap(), gen_response(&b, &c, 2).unwrap());
        let other = gen_design(&c, 3).unwrap();
        assert_ne!(a.z, other.z);
    }

    #[test]
    fn iid_signal_and_noise() {
        let c = SimConfig::new(Setting::Iid, 10, 20).with_r_squared(0.5);
        let d = gen_design(&c, 0).unwrap();
        assert_eq!(d.signal_variance, 36.0);
        let emp = empirical_signal_variance(&c, 0, 100_000).unwrap();
        assert!((emp - 36.0).abs() < 0.03 * 36.0, "{emp}");
    }

    #[test]
    fn closed_forms_match_monte_carlo() {
        let cases = [
            SimConfig::new(Setting::CompoundSymmetry, 10, 30),
            SimConfig::new(Setting::Ar1, 10, 30),
            SimConfig::new(Setting::Factor, 10, 30),
            SimConfig::new(Setting::Group, 10, 30),
            SimConfig::new(Setting::ExtremeCorrelation, 10, 30),
            SimConfig::new(Setting::SparseFactor, 10, 30),
            SimConfig::new(Setting::Ar1, 10, 30).with_beta(BetaSpec {
                truth: vec![1, 2, 7],
                values: vec![1.0, -2.0, 0.5],
            }),
        ];
        for c in cases {
            let d = gen_design(&c, 1).unwrap();
            let emp = empirical_signal_variance(&c, 1, 100_000).unwrap();
            let rel = (emp - d.signal_variance).abs() / d.signal_variance;
            assert!(rel < 0.03, "{:?}: closed {} vs mc {emp}", c.setting, d.signal_variance);
        }
        let d = gen_design(&SimConfig::new(Setting::CompoundSymmetry, 5, 30), 0).unwrap();
        assert_eq!(d.signal_variance, 180.0);
    }

    #[test]
    fn ar1_lag_two_correlation() {
        let n = 4000;
        let c = SimConfig::new(Setting::Ar1, n, 20);
        let d = gen_design(&c, 0).unwrap();
        let r = corr(d.z.col(0), d.z.col(2));
        assert!((r - 0.25).abs() < 3.0 / (n as f64).sqrt(), "{r}");
    }

    #[test]
    fn compound_symmetry_zero_rho_is_iid() {
        let n = 2000;
        let c = SimConfig::new(Setting::CompoundSymmetry, n, 10).with_rho(0.0);
        let d = gen_design(&c, 0).unwrap();
        for j in 1..10 {
            let r = corr(d.z.col(0), d.z.col(j));
            assert!(r.abs() < 4.0 / (n as f64).sqrt(), "{r}");
        }
    }

    #[test]
    fn covariance_spot_checks() {
        let n = 20_000;
        let tol = 5.0 / (n as f64).sqrt();
        let cov = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / n as f64;
        let d = gen_design(&SimConfig::new(Setting::Group, n, 20), 0).unwrap();
        assert!((cov(d.z.col(0), d.z.col(1)) - 1.0).abs() < tol);
        assert!((cov(d.z.col(0), d.z.col(0)) - 1.01).abs() < 2.0 * tol);
        assert!(cov(d.z.col(0), d.z.col(5)).abs() < tol);
        let d = gen_design(&SimConfig::new(Setting::ExtremeCorrelation, n, 20), 0).unwrap();
        assert!((cov(d.z.col(0), d.z.col(12)) - 0.5 / std::f64::consts::SQRT_2).abs() < tol);
        assert!((cov(d.z.col(10), d.z.col(12)) - 2.25).abs() < 4.0 * tol);
        assert!((cov(d.z.col(3), d.z.col(3)) - 1.0).abs() < tol);
    }

    #[test]
    fn extreme_correlation_marginals() {
        let n = 20_000;
        let c = SimConfig::new(Setting::ExtremeCorrelation, n, 30);
        let d = gen_design(&c, 0).unwrap();
        let y = gen_response(&d, &c, 0).unwrap();
        let imp: f64 = (0..9).map(|j| corr(&y, d.z.col(j)).abs()).sum::<f64>() / 9.0;
        let unimp: f64 = (9..30).map(|j| corr(&y, d.z.col(j)).abs()).sum::<f64>() / 21.0;
        assert!(unimp > imp, "{unimp} vs {imp}");
    }

    #[test]
    fn zero_beta_is_config_error() {
        let c = SimConfig::new(Setting::Iid, 10, 20).with_beta(BetaSpec { truth: vec![], values: vec![] });
        let d = gen_design(&c, 0).unwrap();
        assert!(matches!(gen_response(&d, &c, 0), Err(Error::Config(_))));
    }
}
