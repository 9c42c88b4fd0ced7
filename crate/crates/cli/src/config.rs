//! Experiment configuration: JSON parsing with path-to-field errors and
//! validation of every parameter before any computation starts.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;
use treetrace::{gate, Params, SymmetryIndex};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { path: path.into(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    GateSweep,
    TraceConvergence,
    KernelCheck,
    Diagnostics,
    NormEquivalence,
    BasisGram,
    Parseval,
    IdentificationIsometry,
    LiftRoundtrip,
    GagliardoAnchor,
    PerturbedTransport,
}

impl Kind {
    pub const ALL: [Kind; 11] = [
        Kind::GateSweep,
        Kind::TraceConvergence,
        Kind::KernelCheck,
        Kind::Diagnostics,
        Kind::NormEquivalence,
        Kind::BasisGram,
        Kind::Parseval,
        Kind::IdentificationIsometry,
        Kind::LiftRoundtrip,
        Kind::GagliardoAnchor,
        Kind::PerturbedTransport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::GateSweep => "gate-sweep",
            Kind::TraceConvergence => "trace-convergence",
            Kind::KernelCheck => "kernel-check",
            Kind::Diagnostics => "diagnostics",
            Kind::NormEquivalence => "norm-equivalence",
            Kind::BasisGram => "basis-gram",
            Kind::Parseval => "parseval",
            Kind::IdentificationIsometry => "identification-isometry",
            Kind::LiftRoundtrip => "lift-roundtrip",
            Kind::GagliardoAnchor => "gagliardo-anchor",
            Kind::PerturbedTransport => "perturbed-transport",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Kind::GateSweep => "sweep alpha and record the gate condition and sigma",
            Kind::TraceConvergence => "embedded trace: discrepancy between the two limits per generation",
            Kind::KernelCheck => "trace coefficients of compactly supported functions",
            Kind::Diagnostics => "regularity constants of a multiscale decomposition",
            Kind::NormEquivalence => "ratios of approximation, Besov and Gagliardo norms over a family",
            Kind::BasisGram => "Gram matrix of the harmonic basis",
            Kind::Parseval => "symmetry decomposition of random functions",
            Kind::IdentificationIsometry => "norm ratio of identified coefficient sequences",
            Kind::LiftRoundtrip => "embedded trace of lifted piecewise constants",
            Kind::GagliardoAnchor => "Gagliardo seminorm of half indicators",
            Kind::PerturbedTransport => "norm distortion and trace of the pullback on perturbed trees",
        }
    }

    /// Whether the experiment draws random numbers.
    pub fn needs_seed(self) -> bool {
        matches!(
            self,
            Kind::KernelCheck
                | Kind::Parseval
                | Kind::IdentificationIsometry
                | Kind::LiftRoundtrip
                | Kind::GagliardoAnchor
                | Kind::PerturbedTransport
        )
    }

    fn needs_tree(self) -> bool {
        !matches!(self, Kind::Diagnostics | Kind::GagliardoAnchor | Kind::NormEquivalence)
    }

    fn needs_decomposition(self) -> bool {
        matches!(
            self,
            Kind::TraceConvergence
                | Kind::Diagnostics
                | Kind::NormEquivalence
                | Kind::IdentificationIsometry
                | Kind::LiftRoundtrip
        )
    }

    /// Summary statistics the experiment reports (checkable from a config).
    pub fn stats(self) -> &'static [&'static str] {
        match self {
            Kind::GateSweep => &["lower_flip", "upper_flip", "max_sigma_gap", "sigma_at_reference"],
            Kind::TraceConvergence => &["fitted_ratio", "target_ratio", "ratio_rel_gap"],
            Kind::KernelCheck => &["max_abs"],
            Kind::Diagnostics => &["c1_observed", "c2_observed", "k_observed", "max_volume_error", "c2_drift"],
            Kind::NormEquivalence => &[
                "spread_a_besov",
                "spread_a_gagliardo",
                "spread_besov_gagliardo",
                "max_spread",
                "max_besov_tail_fraction",
            ],
            Kind::BasisGram => &["max_deviation"],
            Kind::Parseval => &["max_reconstruction", "max_cross", "max_energy_gap"],
            Kind::IdentificationIsometry => &["max_deviation"],
            Kind::LiftRoundtrip => &["max_error"],
            Kind::GagliardoAnchor => &["max_exact_gap", "max_z_score"],
            Kind::PerturbedTransport => &[
                "min_l2_ratio",
                "max_l2_ratio",
                "min_h1_ratio",
                "max_h1_ratio",
                "max_trace_gap",
                "distortion",
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeConfig {
    pub p: usize,
    pub ell: f64,
    /// Not needed by the gate sweep, which supplies its own range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl TreeConfig {
    pub fn params(&self) -> Params {
        Params::new(self.p, self.ell, self.alpha.unwrap_or(1.0 / self.p as f64))
            .expect("validated before use")
    }

    fn validate(&self, path: &str, with_alpha: bool, gated: bool) -> Result<(), ConfigError> {
        if self.p < 2 {
            return Err(invalid(&format!("{path}.p"), "branching number must be at least 2"));
        }
        if !(self.ell > 0.0 && self.ell < 1.0) {
            return Err(invalid(&format!("{path}.ell"), "edge length ratio must lie in (0, 1)"));
        }
        match self.alpha {
            None if with_alpha => return Err(invalid(&format!("{path}.alpha"), "missing weight ratio")),
            Some(a) if !(a > 0.0 && a.is_finite()) => {
                return Err(invalid(&format!("{path}.alpha"), "weight ratio must be positive"))
            }
            _ => {}
        }
        if gated && with_alpha && !gate(&self.params()) {
            return Err(invalid(path, "parameters violate ell < alpha*p < 1/ell"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionConfig {
    pub d: usize,
    pub p: usize,
    pub depth: usize,
}

impl DecompositionConfig {
    fn validate(&self, path: &str) -> Result<(), ConfigError> {
        if self.d == 0 || self.d > 3 {
            return Err(invalid(&format!("{path}.d"), "dimension must be 1, 2 or 3"));
        }
        if self.p < 2 {
            return Err(invalid(&format!("{path}.p"), "branching number must be at least 2"));
        }
        let cells = (self.p as f64).powi(self.depth as i32);
        if cells > 4.0e6 {
            return Err(invalid(&format!("{path}.depth"), format!("{cells:e} cells at the finest level")));
        }
        Ok(())
    }
}

/// `[from, to]`, both inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Range(pub usize, pub usize);

fn check_range(r: Range, path: &str, lo: usize) -> Result<(), ConfigError> {
    if r.0 > r.1 || r.0 < lo {
        return Err(invalid(path, format!("expected {lo} <= from <= to")));
    }
    Ok(())
}

fn check_count(n: usize, path: &str) -> Result<(), ConfigError> {
    if n == 0 {
        return Err(invalid(path, "must be positive"));
    }
    Ok(())
}

fn check_samples(m: usize, path: &str) -> Result<(), ConfigError> {
    if m < 2 {
        return Err(invalid(path, "need at least two samples per edge"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSweepCorpus {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub steps: usize,
    /// Alpha at which sigma is reported as a summary statistic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    pub z: SymmetryIndex,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConvergenceCorpus {
    pub coefficients: Vec<CoefficientConfig>,
    pub levels: Range,
    #[serde(default = "default_samples")]
    pub samples_per_edge: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomFunctionCorpus {
    pub count: usize,
    pub tree_depth: usize,
    #[serde(default = "default_samples")]
    pub samples_per_edge: usize,
    /// Odd-numbered trials use this tree instead.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alternate_tree: Option<TreeConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelCorpus {
    pub count: usize,
    pub tree_depth: usize,
    /// Supports cycle through generations `1..=max_support`.
    pub max_support: usize,
    #[serde(default = "default_samples")]
    pub samples_per_edge: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alternate_tree: Option<TreeConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Unit-norm, mean-zero function on the first two sibling cells of
    /// level `n`.
    Haar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormEquivalenceCorpus {
    pub family: Family,
    pub levels: Range,
    pub r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub besov_levels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisGramCorpus {
    /// Indices with `nu < depth` are included.
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsometryCorpus {
    pub count: usize,
    /// Indices with `nu < depth` may appear.
    pub depth: usize,
    /// Probability that an index carries a nonzero coefficient.
    pub density: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alternate_decomposition: Option<DecompositionConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftCorpus {
    pub count: usize,
    pub level: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GagliardoCorpus {
    pub s: f64,
    /// Levels at which the 1-D half indicator is represented.
    pub levels: Vec<usize>,
    pub mc_samples: usize,
    /// Independent value of the 2-D half-square seminorm, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_2d: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportCorpus {
    pub count: usize,
    pub tree_depth: usize,
    pub distortion: f64,
    #[serde(default = "default_samples")]
    pub samples_per_edge: usize,
}

fn default_samples() -> usize {
    3
}

/// Kind-specific corpus descriptor.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Corpus {
    GateSweep(GateSweepCorpus),
    TraceConvergence(TraceConvergenceCorpus),
    KernelCheck(KernelCorpus),
    Diagnostics,
    NormEquivalence(NormEquivalenceCorpus),
    BasisGram(BasisGramCorpus),
    Parseval(RandomFunctionCorpus),
    IdentificationIsometry(IsometryCorpus),
    LiftRoundtrip(LiftCorpus),
    GagliardoAnchor(GagliardoCorpus),
    PerturbedTransport(TransportCorpus),
}

/// A bound on one summary statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub stat: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotSpec {
    pub x: String,
    pub y: Vec<String>,
    #[serde(default)]
    pub log10: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: String,
    kind: Kind,
    #[serde(default)]
    tree: Option<TreeConfig>,
    #[serde(default)]
    decomposition: Option<DecompositionConfig>,
    #[serde(default)]
    corpus: serde_json::Value,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    output: Option<PathBuf>,
    #[serde(default)]
    checks: Vec<Check>,
    #[serde(default)]
    plot: Option<PlotSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: Kind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tree: Option<TreeConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionConfig>,
    pub corpus: Corpus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plot: Option<PlotSpec>,
}

fn parse<T: DeserializeOwned>(value: serde_json::Value, prefix: &str) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." { prefix.to_string() } else { format!("{prefix}.{inner}") };
        ConfigError::Parse { path, message: e.into_inner().to_string() }
    })
}

impl ExperimentConfig {
    /// Reads and validates a config; `seed` replaces the configured seed.
    pub fn from_path(path: &Path, seed: Option<u64>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::from_json_with_seed(&text, seed)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Self::from_json_with_seed(text, None)
    }

    pub fn from_json_with_seed(text: &str, seed: Option<u64>) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawConfig = serde_path_to_error::deserialize(de)
            .map_err(|e| ConfigError::Parse { path: e.path().to_string(), message: e.into_inner().to_string() })?;
        let value = raw.corpus;
        let corpus = match raw.kind {
            Kind::GateSweep => Corpus::GateSweep(parse(value, "corpus")?),
            Kind::TraceConvergence => Corpus::TraceConvergence(parse(value, "corpus")?),
            Kind::KernelCheck => Corpus::KernelCheck(parse(value, "corpus")?),
            Kind::Diagnostics => {
                if !(value.is_null() || value.as_object().is_some_and(|m| m.is_empty())) {
                    return Err(invalid("corpus", "diagnostics takes no corpus"));
                }
                Corpus::Diagnostics
            }
            Kind::NormEquivalence => Corpus::NormEquivalence(parse(value, "corpus")?),
            Kind::BasisGram => Corpus::BasisGram(parse(value, "corpus")?),
            Kind::Parseval => Corpus::Parseval(parse(value, "corpus")?),
            Kind::IdentificationIsometry => Corpus::IdentificationIsometry(parse(value, "corpus")?),
            Kind::LiftRoundtrip => Corpus::LiftRoundtrip(parse(value, "corpus")?),
            Kind::GagliardoAnchor => Corpus::GagliardoAnchor(parse(value, "corpus")?),
            Kind::PerturbedTransport => Corpus::PerturbedTransport(parse(value, "corpus")?),
        };
        let config = ExperimentConfig {
            name: raw.name,
            kind: raw.kind,
            tree: raw.tree,
            decomposition: raw.decomposition,
            corpus,
            seed: seed.or(raw.seed),
            output: raw.output,
            checks: raw.checks,
            plot: raw.plot,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn tree(&self) -> &TreeConfig {
        self.tree.as_ref().expect("validated")
    }

    pub fn decomposition(&self) -> &DecompositionConfig {
        self.decomposition.as_ref().expect("validated")
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let kind = self.kind;
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(invalid("name", "must be a non-empty file stem"));
        }
        if kind.needs_seed() && self.seed.is_none() {
            return Err(invalid("seed", format!("{} draws random numbers and needs a seed", kind.name())));
        }
        match (&self.tree, kind.needs_tree()) {
            (None, true) => return Err(invalid("tree", "missing")),
            (Some(_), false) => return Err(invalid("tree", format!("not used by {}", kind.name()))),
            (Some(t), true) => t.validate("tree", kind != Kind::GateSweep, true)?,
            _ => {}
        }
        match (&self.decomposition, kind.needs_decomposition()) {
            (None, true) => return Err(invalid("decomposition", "missing")),
            (Some(_), false) => return Err(invalid("decomposition", format!("not used by {}", kind.name()))),
            (Some(d), true) => d.validate("decomposition")?,
            _ => {}
        }
        if let (Some(t), Some(d)) = (&self.tree, &self.decomposition) {
            if t.p != d.p {
                return Err(invalid("decomposition.p", "must equal tree.p"));
            }
        }
        self.validate_corpus()?;
        for (i, c) in self.checks.iter().enumerate() {
            if !kind.stats().contains(&c.stat.as_str()) {
                return Err(invalid(
                    &format!("checks[{i}].stat"),
                    format!("unknown statistic {:?}; {} reports {:?}", c.stat, kind.name(), kind.stats()),
                ));
            }
            if c.min.is_none() && c.max.is_none() {
                return Err(invalid(&format!("checks[{i}]"), "needs min or max"));
            }
        }
        if let Some(plot) = &self.plot {
            let columns = crate::experiments::columns(kind);
            for (field, col) in std::iter::once(("plot.x".to_string(), &plot.x))
                .chain(plot.y.iter().enumerate().map(|(i, c)| (format!("plot.y[{i}]"), c)))
            {
                if !columns.contains(&col.as_str()) {
                    return Err(invalid(&field, format!("unknown column {col:?}; table has {columns:?}")));
                }
            }
        }
        Ok(())
    }

    fn validate_corpus(&self) -> Result<(), ConfigError> {
        match &self.corpus {
            Corpus::GateSweep(c) => {
                if !(c.alpha_min > 0.0 && c.alpha_min < c.alpha_max && c.alpha_max.is_finite()) {
                    return Err(invalid("corpus.alpha_min", "need 0 < alpha_min < alpha_max"));
                }
                check_count(c.steps, "corpus.steps")?;
                if let Some(a) = c.reference_alpha {
                    if !(a > 0.0 && a.is_finite()) {
                        return Err(invalid("corpus.reference_alpha", "must be positive"));
                    }
                }
            }
            Corpus::TraceConvergence(c) => {
                if c.coefficients.is_empty() {
                    return Err(invalid("corpus.coefficients", "at least one coefficient"));
                }
                let p = self.tree().p;
                for (i, e) in c.coefficients.iter().enumerate() {
                    e.z.validate(p).map_err(|err| invalid(&format!("corpus.coefficients[{i}].z"), err.to_string()))?;
                }
                check_range(c.levels, "corpus.levels", 1)?;
                if c.levels.1 > self.decomposition().depth {
                    return Err(invalid("corpus.levels", "finest level exceeds the decomposition depth"));
                }
                check_samples(c.samples_per_edge, "corpus.samples_per_edge")?;
            }
            Corpus::KernelCheck(c) => {
                check_count(c.count, "corpus.count")?;
                check_count(c.max_support, "corpus.max_support")?;
                if c.max_support >= c.tree_depth {
                    return Err(invalid("corpus.max_support", "support must end above the tree depth"));
                }
                check_samples(c.samples_per_edge, "corpus.samples_per_edge")?;
                if let Some(t) = &c.alternate_tree {
                    t.validate("corpus.alternate_tree", true, true)?;
                }
            }
            Corpus::Diagnostics => {}
            Corpus::NormEquivalence(c) => {
                check_range(c.levels, "corpus.levels", 1)?;
                if c.levels.1 > self.decomposition().depth {
                    return Err(invalid("corpus.levels", "finest level exceeds the decomposition depth"));
                }
                if !(c.r > 0.0 && c.r < 0.5) {
                    return Err(invalid("corpus.r", "smoothness must lie in (0, 1/2)"));
                }
                if self.decomposition().d >= 2 && c.mc_samples.is_none() {
                    return Err(invalid("corpus.mc_samples", "needed for d >= 2"));
                }
                if self.decomposition().d > 2 {
                    return Err(invalid("decomposition.d", "Gagliardo seminorms are available for d <= 2"));
                }
                if self.decomposition().d >= 2 && self.seed.is_none() {
                    return Err(invalid("seed", "the Monte Carlo path needs a seed"));
                }
            }
            Corpus::BasisGram(c) => check_count(c.depth, "corpus.depth")?,
            Corpus::Parseval(c) => {
                check_count(c.count, "corpus.count")?;
                check_samples(c.samples_per_edge, "corpus.samples_per_edge")?;
                if let Some(t) = &c.alternate_tree {
                    t.validate("corpus.alternate_tree", true, true)?;
                }
            }
            Corpus::IdentificationIsometry(c) => {
                check_count(c.count, "corpus.count")?;
                if !(c.density > 0.0 && c.density <= 1.0) {
                    return Err(invalid("corpus.density", "must lie in (0, 1]"));
                }
                let decs = std::iter::once(("decomposition", self.decomposition())).chain(
                    c.alternate_decomposition.as_ref().map(|d| ("corpus.alternate_decomposition", d)),
                );
                for (path, d) in decs {
                    d.validate(path)?;
                    if d.p != self.tree().p {
                        return Err(invalid(&format!("{path}.p"), "must equal tree.p"));
                    }
                    if d.depth < c.depth {
                        return Err(invalid(&format!("{path}.depth"), "must be at least corpus.depth"));
                    }
                }
            }
            Corpus::LiftRoundtrip(c) => {
                check_count(c.count, "corpus.count")?;
                if c.level > self.decomposition().depth {
                    return Err(invalid("corpus.level", "exceeds the decomposition depth"));
                }
            }
            Corpus::GagliardoAnchor(c) => {
                if !(c.s > 0.0 && c.s < 0.5) {
                    return Err(invalid("corpus.s", "must lie in (0, 1/2)"));
                }
                if c.levels.is_empty() || c.levels.iter().any(|&l| l == 0 || l > 20) {
                    return Err(invalid("corpus.levels", "levels must lie in 1..=20"));
                }
                check_count(c.mc_samples, "corpus.mc_samples")?;
            }
            Corpus::PerturbedTransport(c) => {
                check_count(c.count, "corpus.count")?;
                if !(c.distortion >= 1.0 && c.distortion.is_finite()) {
                    return Err(invalid("corpus.distortion", "must be at least 1"));
                }
                check_samples(c.samples_per_edge, "corpus.samples_per_edge")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GATE: &str = r#"{"name":"g","kind":"gate-sweep","tree":{"p":2,"ell":0.5},
        "corpus":{"alpha_min":0.1,"alpha_max":1.5,"steps":10}}"#;

    #[test]
    fn parses_a_minimal_config() {
        let c = ExperimentConfig::from_json(GATE).unwrap();
        assert_eq!(c.kind, Kind::GateSweep);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = GATE.replace("\"steps\":10", "\"steps\":\"ten\"");
        let err = ExperimentConfig::from_json(&bad).unwrap_err().to_string();
        assert!(err.starts_with("corpus.steps:"), "{err}");
        let bad = GATE.replace("\"ell\":0.5", "\"ell\":1.5");
        let err = ExperimentConfig::from_json(&bad).unwrap_err().to_string();
        assert!(err.starts_with("tree.ell:"), "{err}");
        let bad = GATE.replace("gate-sweep", "gate-swep");
        let err = ExperimentConfig::from_json(&bad).unwrap_err().to_string();
        assert!(err.starts_with("kind:"), "{err}");
    }

    #[test]
    fn random_kinds_need_a_seed() {
        let text = r#"{"name":"k","kind":"lift-roundtrip","tree":{"p":2,"ell":0.5,"alpha":0.5},
            "decomposition":{"d":1,"p":2,"depth":4},"corpus":{"count":2,"level":3}}"#;
        let err = ExperimentConfig::from_json(text).unwrap_err().to_string();
        assert!(err.starts_with("seed:"), "{err}");
    }

    #[test]
    fn ungated_parameters_are_rejected() {
        let text = r#"{"name":"k","kind":"basis-gram","tree":{"p":2,"ell":0.5,"alpha":0.2},
            "corpus":{"depth":2}}"#;
        let err = ExperimentConfig::from_json(text).unwrap_err().to_string();
        assert!(err.starts_with("tree:"), "{err}");
    }
}
