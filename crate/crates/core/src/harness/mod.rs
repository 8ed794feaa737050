//! Experiment specifications, per-sample statistics and reports.
//!
//! An [`ExperimentSpec`] is read from JSON, merged with the named default
//! tolerances of its experiment kind, and run by [`run`]. Every verdict in the
//! resulting [`ExperimentReport`] names the tolerance it was judged against,
//! and the report echoes the merged spec so it can be re-run as is.

pub mod experiments;
pub mod stats;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SgError};
use crate::partition::{ABSOLUTE_NMAX_LIMIT, DEFAULT_NMAX_LIMIT};
use crate::trees::PlaneTree;
use crate::weights::WeightFamily;

pub use experiments::run;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Thm1Star,
    Thm2Poisson,
    Thm3Profile,
    Thm4Gaussian,
    RzExpansion,
    Rag1Trivial,
    Identities,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Thm1Star => "thm1_star",
            ExperimentKind::Thm2Poisson => "thm2_poisson",
            ExperimentKind::Thm3Profile => "thm3_profile",
            ExperimentKind::Thm4Gaussian => "thm4_gaussian",
            ExperimentKind::RzExpansion => "rz_expansion",
            ExperimentKind::Rag1Trivial => "rag1_trivial",
            ExperimentKind::Identities => "identities",
        }
    }

    pub fn samples_trees(self) -> bool {
        !matches!(self, ExperimentKind::RzExpansion | ExperimentKind::Identities)
    }

    /// Named tolerances and their defaults.
    pub fn default_tolerances(self) -> BTreeMap<String, f64> {
        let pairs: &[(&str, f64)] = match self {
            ExperimentKind::Thm1Star => &[("star_fraction_min", 0.95), ("trend_slack", 0.01)],
            ExperimentKind::Thm2Poisson => &[
                ("z_ratio", 0.01),
                ("tv_poisson", 0.05),
                ("branch_event_min", 0.95),
            ],
            ExperimentKind::Thm3Profile => &[
                ("max_degree_min", 0.99),
                ("branch_size_min", 0.99),
                ("ratio_window", 0.2),
                ("ratio_fraction_min", 0.95),
                ("tv_poisson", 0.05),
            ],
            ExperimentKind::Thm4Gaussian => &[("ks_max", 0.03), ("ks_explicit_gap", 0.03), ("corr_max", 0.05)],
            ExperimentKind::RzExpansion => &[
                ("rz_bound_factor", 5.0),
                ("coarse_ratio_lo", 0.5),
                ("coarse_ratio_hi", 1.5),
            ],
            ExperimentKind::Rag1Trivial => &[("z_ratio", 0.01), ("star_fraction_min", 0.99)],
            ExperimentKind::Identities => &[("lsum_max", 1e-9)],
        };
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn default_samples() -> usize {
    1000
}

fn default_radius() -> usize {
    3
}

fn default_epsilons() -> Vec<f64> {
    vec![0.1, 0.5]
}

fn default_lsum_bound() -> usize {
    300
}

fn default_l1_bound() -> usize {
    50
}

fn default_exact_bound() -> usize {
    12
}

/// One experiment, as read from a JSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: ExperimentKind,
    pub weights: WeightFamily,
    #[serde(default)]
    pub n_values: Vec<usize>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Overrides of the named default tolerances.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    /// Left-ball radius for `thm1_star`.
    #[serde(default = "default_radius")]
    pub radius: usize,
    /// Epsilon grid for the domination inequality in `identities`.
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    /// `identities`: the additive identity is swept over `N, n <= lsum_bound`.
    #[serde(default = "default_lsum_bound")]
    pub lsum_bound: usize,
    /// `identities`: the domination inequality is swept over `N, n <= l1_bound`.
    #[serde(default = "default_l1_bound")]
    pub l1_bound: usize,
    /// `identities`: exact residuals are checked for `N, n <= exact_bound`
    /// when the family is rational.
    #[serde(default = "default_exact_bound")]
    pub exact_bound: usize,
    #[serde(default)]
    pub truncate: bool,
    #[serde(default)]
    pub allow_large: bool,
    /// Directory for per-sample CSV files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emit_csv: Option<String>,
}

impl ExperimentSpec {
    pub fn new(experiment: ExperimentKind, weights: WeightFamily, n_values: Vec<usize>) -> Self {
        ExperimentSpec {
            experiment,
            weights,
            n_values,
            samples: default_samples(),
            seed: 0,
            tolerances: BTreeMap::new(),
            radius: default_radius(),
            epsilons: default_epsilons(),
            lsum_bound: default_lsum_bound(),
            l1_bound: default_l1_bound(),
            exact_bound: default_exact_bound(),
            truncate: false,
            allow_large: false,
            emit_csv: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// The spec with every default tolerance filled in. Unknown tolerance
    /// names and nonpositive values are rejected.
    pub fn merged(&self) -> Result<Self> {
        let mut out = self.clone();
        let mut tol = self.experiment.default_tolerances();
        for (k, v) in &self.tolerances {
            if !tol.contains_key(k) {
                return Err(SgError::Domain(format!(
                    "unknown tolerance '{k}' for {}; known: {:?}",
                    self.experiment,
                    tol.keys().collect::<Vec<_>>()
                )));
            }
            tol.insert(k.clone(), *v);
        }
        if let Some((k, v)) = tol.iter().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(SgError::Domain(format!("tolerance '{k}' must be positive, got {v}")));
        }
        out.tolerances = tol;
        Ok(out)
    }

    pub fn tolerance(&self, name: &str) -> Result<f64> {
        self.tolerances
            .get(name)
            .copied()
            .or_else(|| self.experiment.default_tolerances().get(name).copied())
            .ok_or_else(|| SgError::Domain(format!("no tolerance named '{name}'")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(SgError::Domain("sample count must be at least 1".into()));
        }
        if self.experiment != ExperimentKind::Identities && self.n_values.is_empty() {
            return Err(SgError::Domain("n_values must not be empty".into()));
        }
        let limit = if self.allow_large { ABSOLUTE_NMAX_LIMIT } else { DEFAULT_NMAX_LIMIT };
        let min_n = if self.experiment.samples_trees() { 2 } else { 1 };
        if let Some(&n) = self.n_values.iter().find(|&&n| n < min_n || n > limit) {
            return Err(SgError::OutOfRange {
                what: "N",
                value: n,
                min: min_n,
                max: limit,
            });
        }
        if self.experiment == ExperimentKind::Thm1Star && self.radius == 0 {
            return Err(SgError::Domain("radius must be at least 1".into()));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(SgError::Domain(format!("epsilon must be positive, got {e}")));
        }
        self.merged().map(|_| ())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

impl Comparison {
    fn holds(self, statistic: f64, bound: f64) -> bool {
        match self {
            Comparison::Lt => statistic < bound,
            Comparison::Le => statistic <= bound,
            Comparison::Ge => statistic >= bound,
        }
    }
}

/// A pass/fail judgement of one recorded statistic against a named tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub statistic: f64,
    pub comparison: Comparison,
    /// Name of the tolerance in the spec; `None` for exact checks against 0.
    pub tolerance_name: Option<String>,
    pub bound: f64,
    pub passed: bool,
}

impl Verdict {
    pub fn against(spec: &ExperimentSpec, name: impl Into<String>, statistic: f64, cmp: Comparison, tolerance: &str) -> Result<Self> {
        let bound = spec.tolerance(tolerance)?;
        Ok(Self::with_bound(name, statistic, cmp, Some(tolerance), bound))
    }

    pub fn with_bound(name: impl Into<String>, statistic: f64, cmp: Comparison, tolerance: Option<&str>, bound: f64) -> Self {
        Verdict {
            name: name.into(),
            statistic,
            comparison: cmp,
            tolerance_name: tolerance.map(str::to_string),
            bound,
            passed: cmp.holds(statistic, bound),
        }
    }

    /// An exact check: the statistic must be zero.
    pub fn exact_zero(name: impl Into<String>, statistic: f64) -> Self {
        Self::with_bound(name, statistic, Comparison::Le, None, 0.0)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cmp = match self.comparison {
            Comparison::Lt => "<",
            Comparison::Le => "<=",
            Comparison::Ge => ">=",
        };
        write!(
            f,
            "[{}] {}: {} {} {}{}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.statistic,
            cmp,
            self.bound,
            self.tolerance_name.as_deref().map(|t| format!(" ({t})")).unwrap_or_default()
        )
    }
}

/// Statistics and predictions recorded at one `N`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PerN {
    pub n: usize,
    pub statistics: BTreeMap<String, f64>,
    pub predictions: BTreeMap<String, f64>,
}

impl PerN {
    pub fn new(n: usize) -> Self {
        PerN {
            n,
            ..Default::default()
        }
    }

    pub fn stat(&mut self, name: impl Into<String>, v: f64) {
        self.statistics.insert(name.into(), v);
    }

    pub fn predict(&mut self, name: impl Into<String>, v: f64) {
        self.predictions.insert(name.into(), v);
    }

    pub fn summary(&mut self, prefix: &str, s: &stats::Summary) {
        for (k, v) in [
            ("mean", s.mean),
            ("sd", s.sd),
            ("min", s.min),
            ("q05", s.q05),
            ("median", s.median),
            ("q95", s.q95),
            ("max", s.max),
        ] {
            self.stat(format!("{prefix}.{k}"), v);
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Timings {
    pub table_build_ms: u128,
    pub sampling_ms: u128,
    pub total_ms: u128,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// The merged spec; running it again reproduces every statistic.
    pub spec: ExperimentSpec,
    pub rng: String,
    pub per_n: Vec<PerN>,
    pub verdicts: Vec<Verdict>,
    pub warnings: Vec<String>,
    pub timings: Timings,
    pub passed: bool,
}

impl ExperimentReport {
    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn at(&self, n: usize) -> Option<&PerN> {
        self.per_n.iter().find(|p| p.n == n)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Per-sample statistics of one tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SampleStats {
    pub sigma_s: usize,
    /// `x[i]` is `X_{i+2}` for `i = 0..count_upto-1`: counts of degrees `2, 3, ...`.
    pub x: Vec<usize>,
    pub max_non_s_degree: usize,
    pub max_branch_size: usize,
    pub branches_of_size_two: usize,
    pub is_star: bool,
    pub left_ball_is_star: Option<bool>,
}

impl SampleStats {
    /// `X_d` for `d >= 2` (0 beyond the recorded range).
    pub fn x_degree(&self, degree: usize) -> usize {
        self.x.get(degree.wrapping_sub(2)).copied().unwrap_or(0)
    }
}

/// Computes [`SampleStats`], recording `X_2..=X_{max_degree}` and, when a
/// radius is given, whether the left ball equals that of the infinite star.
pub fn sample_stats(t: &PlaneTree, max_degree: usize, radius: Option<usize>) -> SampleStats {
    let profile = t.degree_profile();
    let branches = t.branch_sizes();
    SampleStats {
        sigma_s: profile.sigma_s.unwrap_or(1),
        x: (2..=max_degree).map(|d| profile.x(d)).collect(),
        max_non_s_degree: profile.max_non_s_degree,
        max_branch_size: branches.iter().copied().max().unwrap_or(0),
        branches_of_size_two: branches.iter().filter(|&&b| b == 2).count(),
        is_star: t.outdeg().iter().skip(1).all(|&d| d == 0),
        left_ball_is_star: radius.map(|r| t.left_ball(r) == PlaneTree::star(r)),
    }
}

/// CSV of per-sample statistics, with `#` header lines carrying the spec,
/// seed and generator identifier when `header` is given.
pub fn write_sample_csv<W: Write>(mut w: W, rows: &[SampleStats], header: Option<(&ExperimentSpec, usize)>) -> Result<()> {
    if let Some((spec, n)) = header {
        writeln!(w, "# spec: {}", serde_json::to_string(spec)?)?;
        writeln!(w, "# N: {n}")?;
        writeln!(w, "# seed: {}", spec.seed)?;
        writeln!(w, "# rng: {}", crate::sampler::RNG_ID)?;
    }
    let width = rows.first().map_or(0, |r| r.x.len());
    let mut cols = vec!["sample".to_string(), "sigma_s".to_string()];
    cols.extend((0..width).map(|i| format!("X_{}", i + 2)));
    cols.extend(["max_non_s_degree", "max_branch_size"].map(String::from));
    writeln!(w, "{}", cols.join(","))?;
    for (i, r) in rows.iter().enumerate() {
        let mut fields = vec![i.to_string(), r.sigma_s.to_string()];
        fields.extend(r.x.iter().map(|x| x.to_string()));
        fields.push(r.max_non_s_degree.to_string());
        fields.push(r.max_branch_size.to_string());
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()?;
    Ok(())
}
