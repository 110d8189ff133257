use std::collections::BTreeSet;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentFile, LambdaSpec, MethodSpec, RuleSpec, SimConfig};
use super::generate::{gen_design, gen_response};
use super::metrics::{evaluate, Metrics};
use crate::baselines;
use crate::bits::{self, ScreeningState};
use crate::linalg::{CenteredResponse, StandardizedDesign};
use crate::posterior::Hyperparams;
use crate::stopping;
use crate::{Error, Result};

const BITS_ALL: [LambdaSpec; 3] = [LambdaSpec::POverN, LambdaSpec::NLogNOverP, LambdaSpec::NOverP];

/// One line of a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub setting: String,
    pub n: usize,
    pub p: usize,
    pub r_squared: f64,
    pub method: String,
    pub rule: String,
    #[serde(flatten)]
    pub metrics: Metrics,
    /// Mean wall time per replication of the method (shared across rules).
    pub seconds: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub rows: Vec<ReportRow>,
}

impl SimReport {
    /// CSV with columns `setting, method, rule, TPR, CP, mean_size,
    /// median_size, seconds`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Input(format!("cannot write report: {e}"));
        w.write_record(["setting", "method", "rule", "TPR", "CP", "mean_size", "median_size", "seconds"])
            .map_err(err)?;
        for r in &self.rows {
            w.write_record([
                r.setting.clone(),
                r.method.clone(),
                r.rule.clone(),
                format!("{:.4}", r.metrics.tpr),
                format!("{:.4}", r.metrics.cp),
                format!("{:.2}", r.metrics.mean_size),
                format!("{:.1}", r.metrics.median_size),
                format!("{:.4}", r.seconds),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::Input(format!("cannot write report: {e}")))?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Selections of one replication, one entry per supported `(method, rule)`.
#[derive(Debug, Clone)]
pub struct ReplicationOutcome {
    pub selections: Vec<(MethodSpec, RuleSpec, Vec<usize>)>,
    pub seconds: Vec<(MethodSpec, f64)>,
}

struct BitsRun {
    path: Vec<usize>,
    pi_trace: Vec<f64>,
    null: f64,
    seconds: f64,
}

fn bits_run(
    design: &StandardizedDesign,
    response: &CenteredResponse,
    hyper: Hyperparams,
    len: usize,
    until_drop: bool,
) -> Result<BitsRun> {
    let t0 = Instant::now();
    let null = -0.5 * (design.n() as f64 - 1.0) * response.norm_sq().ln();
    let limit = bits::default_max_steps(design);
    let mut state: Option<ScreeningState> = None;
    loop {
        let (order, dropped) = state
            .as_ref()
            .map_or((0, false), |s| (s.order(), stopping::pp_decide(s.pi_trace(), null).dropped));
        if order >= limit || (order >= len && (!until_drop || dropped)) {
            break;
        }
        let step = match state.as_mut() {
            None => bits::first_step(design, response, hyper).map(|s| {
                state = Some(s);
                true
            }),
            Some(s) => bits::advance(s, design).map(|x| x.is_some()),
        };
        match step {
            Ok(true) => {}
            Ok(false) | Err(Error::Breakdown(_)) => break,
            Err(e) => return Err(e),
        }
    }
    let (path, pi_trace) = state.map_or((Vec::new(), Vec::new()), |s| (s.path().to_vec(), s.pi_trace().to_vec()));
    Ok(BitsRun {
        path,
        pi_trace,
        null,
        seconds: t0.elapsed().as_secs_f64(),
    })
}

fn path_len_for(rules: &[RuleSpec], n: usize) -> usize {
    rules
        .iter()
        .map(|r| match r {
            RuleSpec::N | RuleSpec::PpLargestDrop => n - 1,
            RuleSpec::Ebic(k) => k.unwrap_or(stopping::default_ebic_max_k(n)).min(n - 1),
            RuleSpec::Fixed(m) => *m,
            RuleSpec::Pp => 0,
        })
        .max()
        .unwrap_or(0)
}

fn bits_select(
    run: &BitsRun,
    rule: RuleSpec,
    design: &StandardizedDesign,
    response: &CenteredResponse,
) -> Result<Vec<usize>> {
    let size = match rule {
        RuleSpec::N => run.path.len(),
        RuleSpec::Fixed(m) => stopping::fixed_size_decide(run.path.len(), m),
        RuleSpec::Pp => stopping::pp_decide(&run.pi_trace, run.null).size,
        RuleSpec::PpLargestDrop => {
            if run.pi_trace.len() < 2 {
                run.pi_trace.len()
            } else {
                stopping::pp_largest_drop_decide(&run.pi_trace, run.pi_trace.len())?
            }
        }
        RuleSpec::Ebic(k) => path_ebic(&run.path, k, design, response)?,
    };
    Ok(run.path[..size].to_vec())
}

fn path_ebic(path: &[usize], k: Option<usize>, design: &StandardizedDesign, response: &CenteredResponse) -> Result<usize> {
    let n = design.n();
    let max_k = k.unwrap_or(stopping::default_ebic_max_k(n)).min(path.len()).min(n - 1);
    Ok(stopping::ebic_decide(design, response, path, max_k, false)?.size)
}

/// Screens one generated replication with every requested method and rule.
/// Unsupported `(method, rule)` pairs are left out.
pub fn run_replication(
    config: &SimConfig,
    rep: u64,
    methods: &[MethodSpec],
    rules: &[RuleSpec],
    w: f64,
) -> Result<ReplicationOutcome> {
    let generated = gen_design(config, rep)?;
    let y = gen_response(&generated, config, rep)?;
    let design = StandardizedDesign::dense(generated.z)?;
    let response = CenteredResponse::new(&y)?;
    let (n, p) = (config.n, config.p);
    let mut selections = Vec::new();
    let mut seconds = Vec::new();

    for &method in methods {
        let rules: Vec<RuleSpec> = rules.iter().copied().filter(|&r| method.supports(r)).collect();
        if rules.is_empty() {
            continue;
        }
        let top = |ranking: &[usize], rule: RuleSpec| -> Vec<usize> {
            let m = match rule {
                RuleSpec::Fixed(m) => m,
                _ => n,
            };
            ranking[..m.min(ranking.len())].to_vec()
        };
        match method {
            MethodSpec::Bits(lambda) => {
                let hyper = Hyperparams::new(lambda.resolve(n, p), w)?;
                let until_drop = rules.contains(&RuleSpec::Pp);
                let run = bits_run(&design, &response, hyper, path_len_for(&rules, n), until_drop)?;
                for &rule in &rules {
                    selections.push((method, rule, bits_select(&run, rule, &design, &response)?));
                }
                seconds.push((method, run.seconds));
            }
            MethodSpec::BitsAll => {
                let until_drop = rules.contains(&RuleSpec::Pp);
                let len = path_len_for(&rules, n);
                let mut unions = vec![BTreeSet::new(); rules.len()];
                let mut secs = 0.0;
                for lambda in BITS_ALL {
                    let hyper = Hyperparams::new(lambda.resolve(n, p), w)?;
                    let run = bits_run(&design, &response, hyper, len, until_drop)?;
                    secs += run.seconds;
                    for (u, &rule) in unions.iter_mut().zip(&rules) {
                        u.extend(bits_select(&run, rule, &design, &response)?);
                    }
                }
                for (u, &rule) in unions.into_iter().zip(&rules) {
                    selections.push((method, rule, u.into_iter().collect()));
                }
                seconds.push((method, secs));
            }
            MethodSpec::Sis | MethodSpec::Holp => {
                let t0 = Instant::now();
                let res = if method == MethodSpec::Sis {
                    baselines::sis_rank(&design, &response)?
                } else {
                    baselines::holp_rank(&design, &response)?
                };
                seconds.push((method, t0.elapsed().as_secs_f64()));
                for &rule in &rules {
                    selections.push((method, rule, top(&res.ranking, rule)));
                }
            }
            MethodSpec::Fr => {
                let t0 = Instant::now();
                let res = baselines::fr_screen(&design, &response, path_len_for(&rules, n))?;
                seconds.push((method, t0.elapsed().as_secs_f64()));
                for &rule in &rules {
                    let sel = match rule {
                        RuleSpec::Ebic(k) => {
                            let k = path_ebic(&res.ranking, k, &design, &response)?;
                            res.ranking[..k].to_vec()
                        }
                        _ => top(&res.ranking, rule),
                    };
                    selections.push((method, rule, sel));
                }
            }
        }
    }
    Ok(ReplicationOutcome { selections, seconds })
}

/// Runs all replications of one scenario in parallel and summarizes them.
/// Failed replications are logged and counted, not fatal.
pub fn run_scenario(config: &SimConfig, methods: &[MethodSpec], rules: &[RuleSpec], w: f64) -> Result<Vec<ReportRow>> {
    config.validate()?;
    if !(w > 0.0 && w < 1.0) {
        return Err(Error::Config(format!("w must lie in (0, 1), got {w}")));
    }
    for &m in methods {
        for &r in rules {
            if !m.supports(r) {
                log::warn!("{} has no `{}` rule; skipped", m.label(), r.label());
            }
        }
    }
    let outcomes: Vec<Result<ReplicationOutcome>> = (0..config.replications as u64)
        .into_par_iter()
        .map(|rep| run_replication(config, rep, methods, rules, w))
        .collect();
    let mut ok = Vec::new();
    let mut failures = 0;
    for (rep, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(o) => ok.push(o),
            Err(e) => {
                log::warn!("{} replication {rep} failed: {e}", config.setting);
                failures += 1;
            }
        }
    }

    let truth = &config.beta.truth;
    let mut rows = Vec::new();
    for &method in methods {
        let secs: Vec<f64> = ok
            .iter()
            .flat_map(|o| o.seconds.iter().filter(|s| s.0 == method).map(|s| s.1))
            .collect();
        let seconds = if secs.is_empty() { 0.0 } else { secs.iter().sum::<f64>() / secs.len() as f64 };
        for &rule in rules.iter().filter(|&&r| method.supports(r)) {
            let selected: Vec<Vec<usize>> = ok
                .iter()
                .filter_map(|o| {
                    o.selections
                        .iter()
                        .find(|s| s.0 == method && s.1 == rule)
                        .map(|s| s.2.clone())
                })
                .collect();
            rows.push(ReportRow {
                setting: config.setting.to_string(),
                n: config.n,
                p: config.p,
                r_squared: config.r_squared,
                method: method.label(),
                rule: rule.label(),
                metrics: evaluate(&selected, truth),
                seconds,
                failures,
            });
        }
    }
    Ok(rows)
}

/// Every scenario of an experiment file, in order.
pub fn run_experiment(file: &ExperimentFile) -> Result<SimReport> {
    let mut rows = Vec::new();
    for s in &file.scenarios {
        let config = file.sim_config(s)?;
        log::info!("scenario {} n={} p={} reps={}", config.setting, config.n, config.p, config.replications);
        rows.extend(run_scenario(&config, &s.methods, &s.rules, file.w)?);
    }
    Ok(SimReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::Setting;

    fn small() -> SimConfig {
        SimConfig::new(Setting::Iid, 60, 150).with_replications(3).with_seed(11)
    }

    #[test]
    fn union_dominates_components() {
        let c = small();
        let methods = [
            MethodSpec::Bits(LambdaSpec::POverN),
            MethodSpec::Bits(LambdaSpec::NLogNOverP),
            MethodSpec::Bits(LambdaSpec::NOverP),
            MethodSpec::BitsAll,
        ];
        for rep in 0..3 {
            let o = run_replication(&c, rep, &methods, &[RuleSpec::Pp, RuleSpec::N], 0.1).unwrap();
            for rule in [RuleSpec::Pp, RuleSpec::N] {
                let all = &o.selections.iter().find(|s| s.0 == MethodSpec::BitsAll && s.1 == rule).unwrap().2;
                for s in o.selections.iter().filter(|s| s.1 == rule) {
                    assert!(s.2.iter().all(|j| all.contains(j)));
                }
                assert!(all.len() < 3 * c.n);
            }
        }
    }

    #[test]
    fn rule_sizes() {
        let c = small();
        let methods = [MethodSpec::Bits(LambdaSpec::POverN), MethodSpec::Sis, MethodSpec::Fr];
        let o = run_replication(&c, 0, &methods, &[RuleSpec::N, RuleSpec::Fixed(7), RuleSpec::Pp], 0.1).unwrap();
        let get = |m, r| o.selections.iter().find(|s| s.0 == m && s.1 == r).map(|s| s.2.len());
        assert_eq!(get(MethodSpec::Bits(LambdaSpec::POverN), RuleSpec::N), Some(59));
        assert_eq!(get(MethodSpec::Bits(LambdaSpec::POverN), RuleSpec::Fixed(7)), Some(7));
        assert_eq!(get(MethodSpec::Sis, RuleSpec::N), Some(60));
        assert_eq!(get(MethodSpec::Sis, RuleSpec::Pp), None);
        let fr = get(MethodSpec::Fr, RuleSpec::N).unwrap();
        // OLS may reach a perfect fit before n − 1 steps.
        assert!((50..=59).contains(&fr), "{fr}");
    }

    #[test]
    fn deterministic_apart_from_timing() {
        let c = small();
        let run = || {
            let mut rows = run_scenario(&c, &[MethodSpec::Bits(LambdaSpec::POverN), MethodSpec::Holp], &[RuleSpec::N, RuleSpec::Pp], 0.1).unwrap();
            rows.iter_mut().for_each(|r| r.seconds = 0.0);
            rows
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn csv_has_expected_header() {
        let rows = run_scenario(&small(), &[MethodSpec::Sis], &[RuleSpec::N], 0.1).unwrap();
        let mut buf = Vec::new();
        SimReport { rows }.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("setting,method,rule,TPR,CP,mean_size,median_size,seconds\niid,SIS,n,"));
    }
}
