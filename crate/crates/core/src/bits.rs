//! Fast BITS engine with one-step delayed Cholesky updates.
//!
//! With `R_{k−1}` the Cholesky factor of `X_γᵀX_γ + λI` for the first `k−1`
//! path entries, the engine keeps, for every candidate column `i`,
//!
//! ```text
//! s_i = R_{k−1}^{-ᵀ} X_γᵀ X_i        (never stored)
//! ζ_i = ‖s_i‖²,   ω_i = √(n + λ − ζ_i),   u_i = (X_iᵀỹ − s_iᵀ v) / ω_i
//! ```
//!
//! so that appending `i` gives pivot `ω_i` and RSS reduction `u_i²`. After
//! `i_k` is chosen, its factor column is appended one iteration later: the
//! off-diagonal part `α` needs a forward solve against `R_{k−1}`, and the new
//! row of `R^{-ᵀ}X_γᵀX` is
//!
//! ```text
//! η = b⁻¹ · Xᵀ (X_{i_k} − X_γ R_{k−1}^{-1} α)
//! ```
//!
//! which costs one `Xᵀ·` pass. `ζ`, `ω`, `u` are then refreshed in `O(p)`.
//! Per iteration: `O(k²)` for the solves, `O(kn)` for `X_γᵀX_{i_k}` and the
//! combination, `O(np)` for the pass (`O(nnz)` for sparse input).

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::linalg::{CenteredResponse, StandardizedDesign, TriangularFactor};
use crate::posterior::Hyperparams;
use crate::stopping::{self, StopRule};
use crate::{Error, Result};

/// How candidates are ranked at each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Criterion {
    /// `−log ω_i − (n−1)/2 · log(RSS − u_i²)`.
    Posterior,
    /// `u_i²` (forward regression); candidates with `ω_i² < 1e-10·n` are
    /// dropped as collinear.
    RssReduction,
}

/// Relative floor for the residual sum of squares.
const RSS_FLOOR: f64 = 1e-12;
/// Relative floor for `ω²` (times `λ`).
const OMEGA_FLOOR: f64 = 1e-12;
/// FR collinearity threshold (times `n`).
const COLLINEAR: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ScreeningState {
    criterion: Criterion,
    n: usize,
    lambda: f64,
    log_odds: f64,
    y_norm_sq: f64,
    /// Factor for `path[..k−1]`; the last path entry is pending.
    factor: TriangularFactor,
    pending_b: f64,
    path: Vec<usize>,
    v: Vec<f64>,
    rss: f64,
    u: Vec<f64>,
    zeta: Vec<f64>,
    omega: Vec<f64>,
    pi_trace: Vec<f64>,
    rss_trace: Vec<f64>,
    selected_mask: Vec<bool>,
    blocked: Vec<bool>,
    remaining: usize,
}

impl ScreeningState {
    /// Number of selected variables `k`.
    pub fn order(&self) -> usize {
        self.path.len()
    }

    pub fn path(&self) -> &[usize] {
        &self.path
    }

    /// `π_1 … π_k`.
    pub fn pi_trace(&self) -> &[f64] {
        &self.pi_trace
    }

    /// `RSS_λ(γ^(1)) … RSS_λ(γ^(k))`.
    pub fn rss_trace(&self) -> &[f64] {
        &self.rss_trace
    }

    /// Factor of order `k − 1` (the delayed one).
    pub fn factor(&self) -> &TriangularFactor {
        &self.factor
    }

    /// Pivot `b_k` of the pending column.
    pub fn pending_pivot(&self) -> f64 {
        self.pending_b
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// `‖ỹ‖² − ‖v_k‖²`.
    pub fn rss(&self) -> f64 {
        self.rss
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn selected_mask(&self) -> &[bool] {
        &self.selected_mask
    }

    /// Admissible, unselected candidates left.
    pub fn remaining(&self) -> usize {
        self.remaining
    }

    /// Factor of order `k`, obtained by appending the pending column to a
    /// copy of the delayed factor.
    pub fn completed_factor(&self, design: &StandardizedDesign) -> Result<TriangularFactor> {
        let mut f = self.factor.clone();
        if let Some(&last) = self.path.last() {
            let alpha = alpha_for(&f, design, last)?;
            f.append(&alpha, self.pending_b, last)?;
        }
        Ok(f)
    }

    fn floor_rss(&self) -> f64 {
        RSS_FLOOR * self.y_norm_sq
    }

    fn omega_sq_floor(&self) -> f64 {
        (OMEGA_FLOOR * self.lambda).max(f64::MIN_POSITIVE)
    }

    /// Argmax over unblocked candidates; lowest index wins ties.
    fn select(&self) -> Result<(usize, f64)> {
        let floor = self.floor_rss();
        let half_nm1 = 0.5 * (self.n as f64 - 1.0);
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.u.len() {
            if self.blocked[i] {
                continue;
            }
            let u2 = self.u[i] * self.u[i];
            let score = match self.criterion {
                Criterion::Posterior => -self.omega[i].ln() - half_nm1 * (self.rss - u2).max(floor).ln(),
                Criterion::RssReduction => u2,
            };
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((i, score));
            }
        }
        best.ok_or_else(|| Error::Input("no admissible candidates remain".into()))
    }

    /// Records the selection of `i` (the argmax just computed).
    fn commit(&mut self, i: usize) -> Result<usize> {
        let b = self.omega[i];
        if self.criterion == Criterion::Posterior && b * b <= self.omega_sq_floor() * (1.0 + 1e-9) {
            return Err(Error::Breakdown(format!("pivot for column {i} collapsed to the floor")));
        }
        let ui = self.u[i];
        let rss = self.rss - ui * ui;
        if rss <= self.floor_rss() {
            return Err(Error::Breakdown(format!("residual vanishes when adding column {i} (perfect fit)")));
        }
        self.path.push(i);
        self.v.push(ui);
        self.rss = rss;
        self.pending_b = b;
        self.selected_mask[i] = true;
        self.blocked[i] = true;
        self.remaining -= 1;
        self.rss_trace.push(rss);
        if self.criterion == Criterion::Posterior {
            let k = self.path.len() as f64;
            let log_det = self.factor.log_det() + b.ln();
            let pi = 0.5 * k * self.lambda.ln() - log_det - 0.5 * (self.n as f64 - 1.0) * rss.ln() + k * self.log_odds;
            self.pi_trace.push(pi);
        }
        Ok(i)
    }

    /// Folds a new row `η` of `R^{-ᵀ}X_γᵀX` into `ζ`, `ω` and `u`.
    fn absorb(&mut self, eta: &[f64]) {
        let c = *self.v.last().expect("absorb after a selection");
        let n_lambda = self.n as f64 + self.lambda;
        let floor = self.omega_sq_floor();
        let collinear = COLLINEAR * self.n as f64;
        for i in 0..self.u.len() {
            if self.blocked[i] {
                continue;
            }
            let e = eta[i];
            self.zeta[i] += e * e;
            let omega_sq = n_lambda - self.zeta[i];
            if self.criterion == Criterion::RssReduction && omega_sq < collinear {
                self.blocked[i] = true;
                self.remaining -= 1;
                continue;
            }
            let new_omega = omega_sq.max(floor).sqrt();
            self.u[i] = (self.u[i] * self.omega[i] - c * e) / new_omega;
            self.omega[i] = new_omega;
        }
    }
}

fn alpha_for(factor: &TriangularFactor, design: &StandardizedDesign, j: usize) -> Result<Vec<f64>> {
    let xj = design.x_col(j)?;
    let g = factor
        .path_order()
        .iter()
        .map(|&m| design.x_col_dot(m, &xj))
        .collect::<Result<Vec<f64>>>()?;
    factor.solve_lower(&g)
}

fn check_inputs(design: &StandardizedDesign, response: &CenteredResponse) -> Result<()> {
    if design.n() != response.len() {
        return Err(Error::Dimension(format!(
            "design has {} rows but response has {} values",
            design.n(),
            response.len()
        )));
    }
    if design.n_admissible() == 0 {
        return Err(Error::Input("design has no admissible (non-constant) column".into()));
    }
    Ok(())
}

pub(crate) fn start(
    design: &StandardizedDesign,
    response: &CenteredResponse,
    lambda: f64,
    log_odds: f64,
    criterion: Criterion,
) -> Result<ScreeningState> {
    check_inputs(design, response)?;
    let n = design.n();
    let p = design.p();
    let r = design.xt_v(response.values())?;
    let b1 = (n as f64 + lambda).sqrt();
    let blocked: Vec<bool> = design.admissible().iter().map(|a| !a).collect();
    let mut state = ScreeningState {
        criterion,
        n,
        lambda,
        log_odds,
        y_norm_sq: response.norm_sq(),
        factor: TriangularFactor::with_capacity(64),
        pending_b: 0.0,
        path: Vec::new(),
        v: Vec::new(),
        rss: response.norm_sq(),
        u: r.iter().map(|ri| ri / b1).collect(),
        zeta: vec![0.0; p],
        omega: vec![b1; p],
        pi_trace: Vec::new(),
        rss_trace: Vec::new(),
        selected_mask: vec![false; p],
        blocked,
        remaining: design.n_admissible(),
    };
    // i₁ = argmax r_i² over admissible columns, lowest index on ties.
    let mut best: Option<(usize, f64)> = None;
    for (i, ri) in r.iter().enumerate() {
        if state.blocked[i] {
            continue;
        }
        if best.is_none_or(|(_, b)| ri * ri > b) {
            best = Some((i, ri * ri));
        }
    }
    let (i1, _) = best.expect("at least one admissible column");
    state.commit(i1)?;
    Ok(state)
}

/// Step 1: `r = Xᵀỹ`, `i₁ = argmax r_i²`, `R₁ = √(n+λ)`, `v₁ = r_{i₁}/b₁`.
pub fn first_step(design: &StandardizedDesign, response: &CenteredResponse, hyper: Hyperparams) -> Result<ScreeningState> {
    start(design, response, hyper.lambda(), hyper.log_prior_odds(), Criterion::Posterior)
}

/// Step 2: `S₁ = Xᵀ X_{i₁} / b₁`, `ζ₁ = S₁ ⊙ S₁`, `u₁ = (r − v₁ S₁) ⊘ ω₁`.
pub fn second_step(state: &mut ScreeningState, design: &StandardizedDesign) -> Result<usize> {
    if state.order() != 1 {
        return Err(Error::Input(format!("second step needs a state of order 1, got {}", state.order())));
    }
    let i1 = state.path[0];
    let b1 = state.pending_b;
    let x1 = design.x_col(i1)?;
    let mut s1 = design.xt_v(&x1)?;
    s1.iter_mut().for_each(|s| *s /= b1);
    state.factor.append(&[], b1, i1)?;
    state.absorb(&s1);
    let (i, _) = state.select()?;
    state.commit(i)
}

/// Generic iteration for `k ≥ 3`: appends the pending column `i_{k−1}` to the
/// factor, refreshes candidate scores and selects `i_k`.
pub fn iterate(state: &mut ScreeningState, design: &StandardizedDesign) -> Result<usize> {
    if state.order() < 2 {
        return Err(Error::Input(format!("iterate needs a state of order ≥ 2, got {}", state.order())));
    }
    let j = *state.path.last().unwrap();
    let b = state.pending_b;
    let alpha = alpha_for(&state.factor, design, j)?;
    let w = state.factor.solve_upper(&alpha)?;
    let mut q = design.x_combine(state.factor.path_order(), &w)?;
    let xj = design.x_col(j)?;
    for (qi, xi) in q.iter_mut().zip(&xj) {
        *qi = xi - *qi;
    }
    let mut eta = design.xt_v(&q)?;
    eta.iter_mut().for_each(|e| *e /= b);
    state.factor.append(&alpha, b, j)?;
    state.absorb(&eta);
    let (i, _) = state.select()?;
    state.commit(i)
}

/// Takes one more step, dispatching on the current order. Returns `None`
/// when no candidate remains.
pub fn advance(state: &mut ScreeningState, design: &StandardizedDesign) -> Result<Option<usize>> {
    if state.remaining == 0 {
        return Ok(None);
    }
    match state.order() {
        0 => unreachable!("states are created by first_step"),
        1 => second_step(state, design).map(Some),
        _ => iterate(state, design).map(Some),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    FixedSize,
    PpDrop,
    PpLargestDrop,
    EbicMinimum,
    PerfectFit,
    Exhausted,
    Cap,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = serde_json::to_value(self).unwrap();
        write!(f, "{}", s.as_str().unwrap())
    }
}

#[derive(Debug, Clone)]
pub struct ScreeningResult {
    pub path: Vec<usize>,
    pub pi_trace: Vec<f64>,
    /// `log f(∅|y)` in the same convention as `pi_trace`.
    pub null_log_posterior: f64,
    pub stop_reason: StopReason,
    pub selected: Vec<usize>,
    pub timings: Vec<Duration>,
}

/// Default path-length limit `min(n − 1, #admissible)`.
pub fn default_max_steps(design: &StandardizedDesign) -> usize {
    (design.n() - 1).min(design.n_admissible())
}

/// Runs BITS until the stopping rule decides, `max_steps` is reached or the
/// admissible columns run out.
pub fn screen(
    design: &StandardizedDesign,
    response: &CenteredResponse,
    hyper: Hyperparams,
    rule: StopRule,
    max_steps: Option<usize>,
) -> Result<ScreeningResult> {
    check_inputs(design, response)?;
    let n = design.n() as f64;
    let null = -0.5 * (n - 1.0) * response.norm_sq().ln();
    let limit = default_max_steps(design);
    let max_steps = max_steps.map_or(limit, |m| m.min(limit));
    let target = match rule {
        StopRule::FixedSize(m) => m.min(max_steps),
        StopRule::Pp { cap } | StopRule::PpLargestDrop { cap } => cap.map_or(max_steps, |c| c.min(max_steps)),
        StopRule::Ebic { max_k, .. } => max_k.unwrap_or(stopping::default_ebic_max_k(design.n())).min(max_steps),
    };

    let mut timings = Vec::with_capacity(target);
    let mut state: Option<ScreeningState> = None;
    let mut halted: Option<StopReason> = None;
    while state.as_ref().map_or(0, |s| s.order()) < target {
        let t0 = Instant::now();
        let step = match state.as_mut() {
            None => first_step(design, response, hyper).map(|s| {
                state = Some(s);
            }),
            Some(s) => match advance(s, design) {
                Ok(Some(_)) => Ok(()),
                Ok(None) => {
                    halted = Some(StopReason::Exhausted);
                    break;
                }
                Err(e) => Err(e),
            },
        };
        match step {
            Ok(()) => timings.push(t0.elapsed()),
            Err(Error::Breakdown(msg)) => {
                log::warn!("screening stopped early: {msg}");
                halted = Some(StopReason::PerfectFit);
                break;
            }
            Err(e) => return Err(e),
        }
        let s = state.as_ref().unwrap();
        if let StopRule::Pp { .. } = rule {
            if stopping::pp_decide(s.pi_trace(), null).dropped {
                break;
            }
        }
        if s.remaining() == 0 && s.order() < target {
            halted = Some(StopReason::Exhausted);
            break;
        }
    }

    let (path, pi_trace) = match state {
        Some(s) => (s.path, s.pi_trace),
        None => (Vec::new(), Vec::new()),
    };
    let fallback = halted.unwrap_or(if path.len() == design.n_admissible() {
        StopReason::Exhausted
    } else {
        StopReason::Cap
    });
    let (size, stop_reason) = match rule {
        StopRule::FixedSize(m) => {
            let size = stopping::fixed_size_decide(path.len(), m);
            (size, if path.len() == m { StopReason::FixedSize } else { fallback })
        }
        StopRule::Pp { .. } => {
            let d = stopping::pp_decide(&pi_trace, null);
            (d.size, if d.dropped { StopReason::PpDrop } else { fallback })
        }
        StopRule::PpLargestDrop { .. } => {
            if pi_trace.len() >= 2 {
                let size = stopping::pp_largest_drop_decide(&pi_trace, pi_trace.len())?;
                (size, StopReason::PpLargestDrop)
            } else {
                (pi_trace.len(), fallback)
            }
        }
        StopRule::Ebic { include_null, .. } => {
            if path.is_empty() {
                (0, fallback)
            } else {
                let d = stopping::ebic_decide(design, response, &path, path.len(), include_null)?;
                (d.size, StopReason::EbicMinimum)
            }
        }
    };
    Ok(ScreeningResult {
        selected: path[..size].to_vec(),
        path,
        pi_trace,
        null_log_posterior: null,
        stop_reason,
        timings,
    })
}

/// Outcome of comparing the fast engine with the brute-force oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub passed: bool,
    pub steps: usize,
    pub fast_path: Vec<usize>,
    pub oracle_path: Vec<usize>,
    /// `max_k |π_k^fast − π_k^oracle|` over the compared steps.
    pub max_abs_diff: f64,
    /// 1-based step of the first path or posterior mismatch.
    pub first_divergence: Option<usize>,
}

/// Runs `steps` iterations of the engine under `fast` and of
/// [`oracle_greedy_path`](crate::posterior::oracle_greedy_path) under
/// `oracle`, and compares paths and log posteriors at tolerance `tol`.
pub fn certify(
    design: &StandardizedDesign,
    response: &CenteredResponse,
    fast: Hyperparams,
    oracle: Hyperparams,
    steps: usize,
    max_p: usize,
    tol: f64,
) -> Result<OracleCheck> {
    let o = crate::posterior::oracle_greedy_path(design, response, oracle, steps, max_p)?;
    let f = screen(design, response, fast, StopRule::FixedSize(steps), None)?;
    let compared = f.path.len().min(o.path.len());
    let mut max_abs_diff: f64 = 0.0;
    let mut first_divergence = None;
    for k in 0..compared {
        let d = (f.pi_trace[k] - o.trace[k + 1]).abs();
        max_abs_diff = max_abs_diff.max(d);
        if first_divergence.is_none() && (f.path[k] != o.path[k] || !(d <= tol)) {
            first_divergence = Some(k + 1);
        }
    }
    if first_divergence.is_none() && f.path.len() != o.path.len() {
        first_divergence = Some(compared + 1);
    }
    Ok(OracleCheck {
        passed: first_divergence.is_none(),
        steps,
        fast_path: f.path,
        oracle_path: o.path,
        max_abs_diff,
        first_divergence,
    })
}
