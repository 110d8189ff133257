use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    /// `Σ = I`.
    Iid,
    /// `Σ = ρ11ᵀ + (1−ρ)I`.
    CompoundSymmetry,
    /// `Σ_ij = ρ^|i−j|`.
    Ar1,
    /// `Σ = FFᵀ + I`, `F` is `p × k` standard normal.
    Factor,
    /// Three groups of five near-copies of a latent variable.
    Group,
    /// Noise columns share all nine truth-side components.
    ExtremeCorrelation,
    /// `Σ = FFᵀ + 0.01I` with `F` block-banded over the first 25 rows.
    SparseFactor,
}

impl Setting {
    pub const ALL: [Setting; 7] = [
        Setting::Iid,
        Setting::CompoundSymmetry,
        Setting::Ar1,
        Setting::Factor,
        Setting::Group,
        Setting::ExtremeCorrelation,
        Setting::SparseFactor,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Setting::Iid => "iid",
            Setting::CompoundSymmetry => "compound_symmetry",
            Setting::Ar1 => "ar1",
            Setting::Factor => "factor",
            Setting::Group => "group",
            Setting::ExtremeCorrelation => "extreme_correlation",
            Setting::SparseFactor => "sparse_factor",
        }
    }

    /// Default truth set and coefficients.
    pub fn default_beta(&self) -> BetaSpec {
        match self {
            Setting::Group => BetaSpec::constant(15, 2.0),
            Setting::SparseFactor => BetaSpec::constant(25, 3.0),
            _ => BetaSpec::constant(9, 2.0),
        }
    }

    pub fn default_k_factors(&self) -> usize {
        match self {
            Setting::SparseFactor => 5,
            _ => 10,
        }
    }

    fn min_p(&self) -> usize {
        match self {
            Setting::Group => 15,
            Setting::ExtremeCorrelation => 10,
            Setting::SparseFactor => 25,
            _ => 1,
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Setting::ALL
            .iter()
            .find(|x| x.name() == s)
            .copied()
            .ok_or_else(|| {
                let valid: Vec<&str> = Setting::ALL.iter().map(|x| x.name()).collect();
                Error::Config(format!("unknown setting `{s}`; valid settings: {}", valid.join(", ")))
            })
    }
}

/// Nonzero coefficients `β_j = values[k]` at `j = truth[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaSpec {
    pub truth: Vec<usize>,
    pub values: Vec<f64>,
}

impl BetaSpec {
    /// `β_j = value` for `j < count`.
    pub fn constant(count: usize, value: f64) -> Self {
        Self {
            truth: (0..count).collect(),
            values: vec![value; count],
        }
    }

    pub fn dense(&self, p: usize) -> Vec<f64> {
        let mut b = vec![0.0; p];
        for (&j, &v) in self.truth.iter().zip(&self.values) {
            b[j] = v;
        }
        b
    }
}

/// One simulated design.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub setting: Setting,
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub k_factors: usize,
    pub r_squared: f64,
    pub beta: BetaSpec,
    pub replications: usize,
    pub seed: u64,
}

impl SimConfig {
    /// Defaults: `ρ = 0.5`, per-setting `β` and factor count, `R² = 0.7`,
    /// 100 replications.
    pub fn new(setting: Setting, n: usize, p: usize) -> Self {
        Self {
            setting,
            n,
            p,
            rho: 0.5,
            k_factors: setting.default_k_factors(),
            r_squared: 0.7,
            beta: setting.default_beta(),
            replications: 100,
            seed: 0,
        }
    }

    pub fn with_r_squared(mut self, r2: f64) -> Self {
        self.r_squared = r2;
        self
    }

    pub fn with_replications(mut self, reps: usize) -> Self {
        self.replications = reps;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_beta(mut self, beta: BetaSpec) -> Self {
        self.beta = beta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if self.p < self.setting.min_p() {
            return bad(format!("setting {} needs p ≥ {}, got {}", self.setting, self.setting.min_p(), self.p));
        }
        if !(self.rho.abs() < 1.0) {
            return bad(format!("rho must satisfy |rho| < 1, got {}", self.rho));
        }
        if self.setting == Setting::CompoundSymmetry && self.rho < 0.0 {
            return bad("compound symmetry needs rho ≥ 0".into());
        }
        if self.k_factors == 0 {
            return bad("k_factors must be at least 1".into());
        }
        if self.setting == Setting::SparseFactor && self.p < 5 * self.k_factors {
            return bad(format!("sparse_factor needs p ≥ 5·k_factors = {}", 5 * self.k_factors));
        }
        if !(self.r_squared > 0.0 && self.r_squared < 1.0) {
            return bad(format!("r_squared must lie in (0, 1), got {}", self.r_squared));
        }
        if self.beta.truth.len() != self.beta.values.len() {
            return bad("beta truth and values differ in length".into());
        }
        if self.beta.truth.len() > self.p || self.beta.truth.iter().any(|&j| j >= self.p) {
            return bad("beta truth indices must lie below p".into());
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        Ok(())
    }
}

/// Ridge precision choices used in the comparison tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaSpec {
    /// `p/n`
    POverN,
    /// `n log n / p`
    NLogNOverP,
    /// `n/p`
    NOverP,
    Value(f64),
}

impl LambdaSpec {
    pub fn resolve(&self, n: usize, p: usize) -> f64 {
        let (n, p) = (n as f64, p as f64);
        match *self {
            LambdaSpec::POverN => p / n,
            LambdaSpec::NLogNOverP => n * n.ln() / p,
            LambdaSpec::NOverP => n / p,
            LambdaSpec::Value(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MethodSpec {
    Bits(LambdaSpec),
    /// Union of the three standard BITS paths.
    BitsAll,
    Sis,
    Holp,
    Fr,
}

impl MethodSpec {
    pub fn label(&self) -> String {
        match self {
            MethodSpec::Bits(LambdaSpec::POverN) => "BITS1".into(),
            MethodSpec::Bits(LambdaSpec::NLogNOverP) => "BITS2".into(),
            MethodSpec::Bits(LambdaSpec::NOverP) => "BITS3".into(),
            MethodSpec::Bits(LambdaSpec::Value(v)) => format!("BITS(lambda={v})"),
            MethodSpec::BitsAll => "BITS(ALL)".into(),
            MethodSpec::Sis => "SIS".into(),
            MethodSpec::Holp => "HOLP".into(),
            MethodSpec::Fr => "FR".into(),
        }
    }

    /// Whether the method produces a selection under `rule`.
    pub fn supports(&self, rule: RuleSpec) -> bool {
        match self {
            MethodSpec::Bits(_) => true,
            MethodSpec::BitsAll => matches!(rule, RuleSpec::N | RuleSpec::Pp),
            MethodSpec::Sis | MethodSpec::Holp => matches!(rule, RuleSpec::N | RuleSpec::Fixed(_)),
            MethodSpec::Fr => matches!(rule, RuleSpec::N | RuleSpec::Fixed(_) | RuleSpec::Ebic(_)),
        }
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "bits1" => MethodSpec::Bits(LambdaSpec::POverN),
            "bits2" => MethodSpec::Bits(LambdaSpec::NLogNOverP),
            "bits3" => MethodSpec::Bits(LambdaSpec::NOverP),
            "bits_all" | "bits(all)" => MethodSpec::BitsAll,
            "sis" => MethodSpec::Sis,
            "holp" => MethodSpec::Holp,
            "fr" => MethodSpec::Fr,
            other => match other.strip_prefix("bits:") {
                Some(v) => {
                    let lambda: f64 = v
                        .parse()
                        .map_err(|_| Error::Config(format!("bad lambda in method `{s}`")))?;
                    if !(lambda > 0.0) {
                        return Err(Error::Config(format!("lambda must be positive in `{s}`")));
                    }
                    MethodSpec::Bits(LambdaSpec::Value(lambda))
                }
                None => {
                    return Err(Error::Config(format!(
                        "unknown method `{s}`; valid: bits1, bits2, bits3, bits:<lambda>, bits_all, sis, holp, fr"
                    )))
                }
            },
        })
    }
}

impl TryFrom<String> for MethodSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MethodSpec> for String {
    fn from(m: MethodSpec) -> String {
        match m {
            MethodSpec::Bits(LambdaSpec::POverN) => "bits1".into(),
            MethodSpec::Bits(LambdaSpec::NLogNOverP) => "bits2".into(),
            MethodSpec::Bits(LambdaSpec::NOverP) => "bits3".into(),
            MethodSpec::Bits(LambdaSpec::Value(v)) => format!("bits:{v}"),
            MethodSpec::BitsAll => "bits_all".into(),
            MethodSpec::Sis => "sis".into(),
            MethodSpec::Holp => "holp".into(),
            MethodSpec::Fr => "fr".into(),
        }
    }
}

/// Screened-model size rules used in experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum RuleSpec {
    /// `n − 1` indices (the largest path the engines produce), or the top `n`
    /// for rankings.
    N,
    Fixed(usize),
    Pp,
    PpLargestDrop,
    /// EBIC over the first `k` path entries; `None` is
    /// [`default_ebic_max_k`](crate::stopping::default_ebic_max_k).
    Ebic(Option<usize>),
}

impl RuleSpec {
    pub fn label(&self) -> String {
        String::from(*self)
    }
}

impl FromStr for RuleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "n" => RuleSpec::N,
            "pp" => RuleSpec::Pp,
            "pp-largest-drop" | "pp_largest_drop" => RuleSpec::PpLargestDrop,
            "ebic" => RuleSpec::Ebic(None),
            other => {
                let size = |m: &str| {
                    m.parse::<usize>()
                        .map_err(|_| Error::Config(format!("bad size in rule `{s}`")))
                };
                if let Some(m) = other.strip_prefix("fixed:") {
                    RuleSpec::Fixed(size(m)?)
                } else if let Some(m) = other.strip_prefix("ebic:") {
                    RuleSpec::Ebic(Some(size(m)?))
                } else {
                    return Err(Error::Config(format!(
                        "unknown rule `{s}`; valid: n, fixed:<m>, pp, pp-largest-drop, ebic, ebic:<k>"
                    )));
                }
            }
        })
    }
}

impl TryFrom<String> for RuleSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<RuleSpec> for String {
    fn from(r: RuleSpec) -> String {
        match r {
            RuleSpec::N => "n".into(),
            RuleSpec::Fixed(m) => format!("fixed:{m}"),
            RuleSpec::Pp => "pp".into(),
            RuleSpec::PpLargestDrop => "pp-largest-drop".into(),
            RuleSpec::Ebic(None) => "ebic".into(),
            RuleSpec::Ebic(Some(k)) => format!("ebic:{k}"),
        }
    }
}

/// One `[[scenario]]` table of an experiment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub setting: String,
    pub n: usize,
    pub p: usize,
    #[serde(default = "default_r2")]
    pub r_squared: f64,
    pub rho: Option<f64>,
    pub k_factors: Option<usize>,
    /// Truth indices (0-based); defaults per setting.
    pub truth: Option<Vec<usize>>,
    /// Coefficients aligned with `truth`.
    pub beta: Option<Vec<f64>>,
    pub replications: Option<usize>,
    pub methods: Vec<MethodSpec>,
    pub rules: Vec<RuleSpec>,
}

fn default_r2() -> f64 {
    0.7
}

fn default_w() -> f64 {
    0.1
}

fn default_reps() -> usize {
    100
}

/// Experiment file (TOML). See `bitscreen formats` for the schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_reps")]
    pub replications: usize,
    /// Prior inclusion probability used by the PP rules.
    #[serde(default = "default_w")]
    pub w: f64,
    #[serde(rename = "scenario")]
    pub scenarios: Vec<ScenarioSpec>,
}

impl ExperimentFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        let f: ExperimentFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if f.scenarios.is_empty() {
            return Err(Error::Config("experiment has no [[scenario]] tables".into()));
        }
        if !(f.w > 0.0 && f.w < 1.0) {
            return Err(Error::Config(format!("w must lie in (0, 1), got {}", f.w)));
        }
        for s in &f.scenarios {
            f.sim_config(s)?;
        }
        Ok(f)
    }

    pub fn sim_config(&self, s: &ScenarioSpec) -> Result<SimConfig> {
        let setting: Setting = s.setting.parse()?;
        let mut c = SimConfig::new(setting, s.n, s.p)
            .with_r_squared(s.r_squared)
            .with_replications(s.replications.unwrap_or(self.replications))
            .with_seed(self.seed);
        if let Some(rho) = s.rho {
            c.rho = rho;
        }
        if let Some(k) = s.k_factors {
            c.k_factors = k;
        }
        match (&s.truth, &s.beta) {
            (Some(t), Some(b)) => c.beta = BetaSpec { truth: t.clone(), values: b.clone() },
            (None, None) => {}
            _ => return Err(Error::Config("`truth` and `beta` must be given together".into())),
        }
        c.validate()?;
        Ok(c)
    }
}
