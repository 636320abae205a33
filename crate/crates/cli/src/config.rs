//! Run configuration. One TOML file; section names follow the library modules.
//!
//! ```toml
//! seed = 7
//! workers = 4
//! output = "runs/ctf"
//!
//! [env]
//! kind = "ctf"
//! map = "../maps/ctf_5x5.txt"
//! starts = "territory"
//!
//! [[predicates]]
//! name = "psi_ba_rf"
//! feature = "d_ba_rf"
//! threshold = 1.0
//!
//! [target]
//! explanation = "F(psi_ba_rf) & G(!psi_ba_ra | psi_ba_bt)"
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::fs;
use std::path::{Path, PathBuf};

use ltl_explain::envs::{MapKind, CTF_FEATURES, NAV_FEATURES};
use ltl_explain::formula::{AtomicPredicate, PredicateSet};
use ltl_explain::{MetricConfig, ProductConfig, SearchParams, TrainerConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Where agents start on a capture-the-flag map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Starts {
    /// Each agent on its own flag.
    Flags,
    /// Blue anywhere in blue territory, red anywhere in red territory except its flag.
    Territory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    pub kind: MapKind,
    pub map: PathBuf,
    #[serde(default = "default_starts")]
    pub starts: Starts,
    /// Explicit `[row, col]` start cells; override `starts` when both are set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blue_starts: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub red_starts: Option<Vec<[usize; 2]>>,
    #[serde(default = "default_kill")]
    pub kill_probability: f64,
    #[serde(default = "default_chase")]
    pub chase_radius: f64,
}

fn default_starts() -> Starts {
    Starts::Flags
}

fn default_kill() -> f64 {
    ltl_explain::envs::DEFAULT_KILL_PROBABILITY
}

fn default_chase() -> f64 {
    ltl_explain::envs::DEFAULT_CHASE_RADIUS
}

/// A feature given by position or by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureRef {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredicateSpec {
    pub name: String,
    pub feature: FeatureRef,
    pub threshold: f64,
}

/// Exactly one of `explanation`, `policy` or `shaped` must be set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PathBuf>,
    /// Progress-shaped navigation reward, no temporal logic involved.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub shaped: bool,
    /// Trainer replicates for an explanation target; the highest-entropy one wins.
    #[serde(default = "one")]
    pub replicates: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Explanation(String),
    Policy(PathBuf),
    Shaped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env: Option<EnvSection>,
    pub predicates: Vec<PredicateSpec>,
    #[serde(default)]
    pub product: ProductConfig,
    #[serde(default)]
    pub trainer: TrainerConfig,
    #[serde(default)]
    pub metrics: MetricConfig,
    #[serde(default)]
    pub search: SearchParams,
    #[serde(default)]
    pub target: TargetSection,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Command-line overrides applied after loading.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Parses and resolves relative paths without validating.
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// [`RunConfig::read`], then `overrides`, then validation.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg = Self::read(path)?;
        if let Some(seed) = overrides.seed {
            cfg.seed = seed;
        }
        if let Some(w) = overrides.workers {
            cfg.workers = w;
        }
        if let Some(out) = &overrides.out {
            cfg.output = absolute(out);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = absolute(&base.join(&*p));
            }
        };
        fix(&mut self.output);
        if let Some(env) = &mut self.env {
            fix(&mut env.map);
        }
        if let Some(p) = &mut self.target.policy {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.predicates.is_empty() {
            return bad("no predicates defined".into());
        }
        if self.workers == 0 {
            return bad("workers must be positive".into());
        }
        if let Some(env) = &self.env {
            if !env.map.is_file() {
                return bad(format!("map file {} does not exist", env.map.display()));
            }
            if !(0.0..=1.0).contains(&env.kill_probability) {
                return bad(format!("kill_probability {} outside [0, 1]", env.kill_probability));
            }
            if !(env.chase_radius >= 0.0) {
                return bad(format!("chase_radius {} is negative", env.chase_radius));
            }
        }
        if let Some(p) = &self.target.policy {
            if !p.is_file() {
                return bad(format!("target policy file {} does not exist", p.display()));
            }
        }
        if self.target.replicates == 0 {
            return bad("target replicates must be positive".into());
        }
        self.product.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.trainer.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.search.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn target(&self) -> Result<Target, CliError> {
        let t = &self.target;
        match (&t.explanation, &t.policy, t.shaped) {
            (Some(e), None, false) => Ok(Target::Explanation(e.clone())),
            (None, Some(p), false) => Ok(Target::Policy(p.clone())),
            (None, None, true) => Ok(Target::Shaped),
            _ => Err(CliError::Config(
                "[target] needs exactly one of `explanation`, `policy` or `shaped = true`".into(),
            )),
        }
    }

    pub fn env(&self) -> Result<&EnvSection, CliError> {
        self.env.as_ref().ok_or_else(|| CliError::Config("config has no [env] section".into()))
    }

    pub fn predicate_names(&self) -> Vec<String> {
        self.predicates.iter().map(|p| p.name.clone()).collect()
    }

    /// Predicates with feature names resolved against `features`.
    pub fn predicate_set(&self, features: &[&str]) -> Result<PredicateSet<f64>, CliError> {
        let preds = self
            .predicates
            .iter()
            .enumerate()
            .map(|(index, p)| {
                let feature = match &p.feature {
                    FeatureRef::Index(i) if *i < features.len() => *i,
                    FeatureRef::Index(i) => {
                        return Err(CliError::Config(format!(
                            "predicate {}: feature index {i} out of range ({} features)",
                            p.name,
                            features.len()
                        )))
                    }
                    FeatureRef::Name(n) => features.iter().position(|f| f == n).ok_or_else(|| {
                        CliError::Config(format!(
                            "predicate {}: unknown feature `{n}` (expected one of {})",
                            p.name,
                            features.join(", ")
                        ))
                    })?,
                };
                Ok(AtomicPredicate { index, name: p.name.clone(), feature, threshold: p.threshold })
            })
            .collect::<Result<Vec<_>, _>>()?;
        PredicateSet::new(preds).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Feature names of the configured environment family.
    pub fn feature_names(&self) -> Result<&'static [&'static str], CliError> {
        Ok(match self.env()?.kind {
            MapKind::Ctf => &CTF_FEATURES,
            MapKind::Nav => &NAV_FEATURES,
        })
    }

    /// The resolved configuration as TOML; loading it reproduces this run.
    pub fn to_manifest(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Invariant(format!("manifest serialization: {e}")))
    }
}

fn absolute(p: &Path) -> PathBuf {
    fs::canonicalize(p)
        .or_else(|_| std::path::absolute(p))
        .unwrap_or_else(|_| p.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        seed = 5
        [[predicates]]
        name = "a"
        feature = "d_goal"
        threshold = 0.5
        [[predicates]]
        name = "b"
        feature = 2
        threshold = 1.5
    "#;

    fn parse(extra: &str) -> RunConfig {
        toml::from_str(&format!("{BASE}\n{extra}")).unwrap()
    }

    #[test]
    fn target_needs_exactly_one_variant() {
        assert!(parse("").target().is_err());
        assert_eq!(
            parse("[target]\nexplanation = \"F(a) & G(b)\"").target().unwrap(),
            Target::Explanation("F(a) & G(b)".into())
        );
        assert_eq!(parse("[target]\nshaped = true").target().unwrap(), Target::Shaped);
        assert!(parse("[target]\nshaped = true\nexplanation = \"F(a) & G(b)\"").target().is_err());
    }

    #[test]
    fn features_resolve_by_name_or_index() {
        let set = parse("").predicate_set(&NAV_FEATURES).unwrap();
        assert_eq!(set.get(0).feature, 0);
        assert_eq!(set.get(1).feature, 2);
        let err = parse("").predicate_set(&CTF_FEATURES).unwrap_err();
        assert!(err.to_string().contains("d_goal"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn defaults_fill_every_section_and_round_trip() {
        let cfg = parse("");
        assert_eq!(cfg.workers, 1);
        assert_eq!(cfg.search, SearchParams::default());
        let again: RunConfig = toml::from_str(&cfg.to_manifest().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>(&format!("{BASE}\nsede = 3")).is_err());
    }
}
