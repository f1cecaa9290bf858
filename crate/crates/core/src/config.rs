//! Experiment configuration: a single TOML document describing the group,
//! the tree action, the marked set, and command parameters.
//!
//! Configs are strict (unknown keys rejected), round-trip through
//! serialization identically, and words are written in the same syntax the
//! group parser uses: whitespace-separated generator labels with an
//! optional `^k` / `^-1` exponent suffix.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::displacement::{ProductAction, ProductMode};
use crate::group::{GroupElement, GroupSpec, MarkedSubset, Perm};
use crate::ratio::Ratio;
use crate::schreier::{FiniteQuotient, SubgroupDesignator, VerifyParams};
use crate::tree::{TreeAction, TreeKind};
use crate::{Error, Result};

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    /// `free`, `free-product`, `direct`, or `permutation`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orders: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<GroupConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<u16>,
    /// Generator permutations in cycle notation, for `permutation`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gens: Option<Vec<String>>,
}

impl GroupConfig {
    pub fn to_spec(&self) -> Result<GroupSpec> {
        let need = |o: &Option<Vec<String>>| -> Result<Vec<String>> {
            o.clone().ok_or_else(|| Error::Config("group.labels is required".into()))
        };
        let spec = match self.kind.as_str() {
            "free" => GroupSpec::Free { labels: need(&self.labels)? },
            "free-product" => GroupSpec::FreeProduct {
                labels: need(&self.labels)?,
                orders: self
                    .orders
                    .clone()
                    .ok_or_else(|| Error::Config("group.orders is required".into()))?,
            },
            "direct" => {
                let factors = self
                    .factors
                    .clone()
                    .ok_or_else(|| Error::Config("group.factors is required".into()))?;
                GroupSpec::Direct {
                    factors: factors.iter().map(|f| f.to_spec()).collect::<Result<_>>()?,
                }
            }
            "permutation" => {
                let degree = self
                    .degree
                    .ok_or_else(|| Error::Config("group.degree is required".into()))?;
                let labels = need(&self.labels)?;
                let gens = self
                    .gens
                    .clone()
                    .ok_or_else(|| Error::Config("group.gens is required".into()))?
                    .iter()
                    .map(|s| Perm::parse(s, degree))
                    .collect::<Result<_>>()?;
                GroupSpec::Permutation { degree, labels, gens }
            }
            other => {
                return Err(Error::Config(format!("unknown group kind {other:?}")))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// One element of the marked set: a word for a single group, a tuple of
/// words for a direct product.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WordSpec {
    Single(String),
    Tuple(Vec<String>),
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionConfig {
    /// `cayley` or `bass-serre`; single-tree actions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<String>,
    /// Per-factor tree kinds for product actions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trees: Option<Vec<String>>,
    /// `direct` or `diagonal`, for product actions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
}

fn parse_kind(s: &str) -> Result<TreeKind> {
    match s {
        "cayley" => Ok(TreeKind::Cayley),
        "bass-serre" => Ok(TreeKind::BassSerre),
        other => Err(Error::Config(format!("unknown tree kind {other:?}"))),
    }
}

fn natural_kind(spec: &GroupSpec) -> Result<TreeKind> {
    match spec {
        GroupSpec::Free { .. } => Ok(TreeKind::Cayley),
        GroupSpec::FreeProduct { .. } => Ok(TreeKind::BassSerre),
        _ => Err(Error::Config("no natural tree for this group kind".into())),
    }
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[derive(Default)]
pub struct ParamsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    /// Transfer threshold M.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<String>,
    /// Declared commutator-growth constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<String>,
    /// Chained-bound index d.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<u64>,
}


impl ParamsConfig {
    pub fn alpha(&self) -> Result<Option<Ratio>> {
        self.alpha.as_deref().map(str::parse).transpose()
    }
    pub fn beta(&self) -> Result<Option<Ratio>> {
        self.beta.as_deref().map(str::parse).transpose()
    }
    pub fn c(&self) -> Result<Option<Ratio>> {
        self.c.as_deref().map(str::parse).transpose()
    }
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuotientConfig {
    pub degree: u16,
    /// Generator images in cycle notation, aligned with the group alphabet.
    pub images: Vec<String>,
    /// `kernel` or `stabilizer`.
    #[serde(default = "default_subgroup")]
    pub subgroup: String,
    /// 1-based stabilized point, when `subgroup = "stabilizer"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<u16>,
}

fn default_subgroup() -> String {
    "kernel".into()
}

impl QuotientConfig {
    pub fn to_quotient(&self, spec: &GroupSpec) -> Result<FiniteQuotient> {
        let images = self
            .images
            .iter()
            .map(|s| Perm::parse(s, self.degree))
            .collect::<Result<_>>()?;
        FiniteQuotient::new(spec.clone(), self.degree, images)
    }

    pub fn designator(&self) -> Result<SubgroupDesignator> {
        match self.subgroup.as_str() {
            "kernel" => Ok(SubgroupDesignator::Kernel),
            "stabilizer" => {
                let p = self
                    .point
                    .ok_or_else(|| Error::Config("quotient.point is required".into()))?;
                if p == 0 || p > self.degree {
                    return Err(Error::Config(format!(
                        "point {p} out of range 1..={}",
                        self.degree
                    )));
                }
                Ok(SubgroupDesignator::Stabilizer { point: p - 1 })
            }
            other => Err(Error::Config(format!("unknown subgroup designator {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CapsConfig {
    /// Hard cap on enumerated set sizes.
    pub elements: usize,
    /// Cap for integer parameter searches (powers n1, n3, ...).
    pub search: u32,
    /// Word-length ball for axis-stabilizer intersections.
    pub f_word_bound: u64,
    /// Exhaustive depth of the Schreier generation check.
    pub exhaustive_depth: u32,
    /// Random long words in the Schreier generation check.
    pub samples: usize,
    /// Reported witnesses per output record.
    pub witnesses: usize,
}

impl Default for CapsConfig {
    fn default() -> Self {
        CapsConfig {
            elements: 10_000_000,
            search: 64,
            f_word_bound: 5,
            exhaustive_depth: 5,
            samples: 200,
            witnesses: 10,
        }
    }
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    /// Named PRNG; only `chacha8` is recognized, so configs stay
    /// reproducible across implementations.
    #[serde(default = "default_rng")]
    pub rng: String,
    pub group: GroupConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<ActionConfig>,
    #[serde(default)]
    pub set: Vec<WordSpec>,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quotient: Option<QuotientConfig>,
    #[serde(default)]
    pub caps: CapsConfig,
}

fn default_rng() -> String {
    "chacha8".into()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.rng != "chacha8" {
            return Err(Error::Config(format!(
                "unknown rng {:?}; only \"chacha8\" is supported",
                cfg.rng
            )));
        }
        cfg.group.to_spec()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn spec(&self) -> Result<GroupSpec> {
        self.group.to_spec()
    }

    /// Parse the marked set against the group.
    pub fn marked_set(&self) -> Result<MarkedSubset> {
        let spec = self.spec()?;
        if self.set.is_empty() {
            return Err(Error::Config("set must contain at least one word".into()));
        }
        let mut elements = Vec::with_capacity(self.set.len());
        for w in &self.set {
            elements.push(self.parse_word_spec(&spec, w)?);
        }
        MarkedSubset::new(spec, elements)
    }

    pub fn parse_word_spec(&self, spec: &GroupSpec, w: &WordSpec) -> Result<GroupElement> {
        match w {
            WordSpec::Single(s) => spec.parse_word(s),
            WordSpec::Tuple(parts) => spec.parse_tuple(parts),
        }
    }

    /// The single-tree action (non-product groups).
    pub fn tree_action(&self) -> Result<TreeAction> {
        let spec = self.spec()?;
        let kind = match self.action.as_ref().and_then(|a| a.tree.as_deref()) {
            Some(s) => parse_kind(s)?,
            None => natural_kind(&spec)?,
        };
        TreeAction::new(spec, kind)
    }

    /// The product action (direct-product groups or diagonal mode).
    pub fn product_action(&self) -> Result<ProductAction> {
        let spec = self.spec()?;
        let action = self.action.as_ref();
        let mode = match action.and_then(|a| a.mode.as_deref()) {
            Some("diagonal") => ProductMode::Diagonal,
            Some("direct") | None => ProductMode::Direct,
            Some(other) => {
                return Err(Error::Config(format!("unknown action mode {other:?}")))
            }
        };
        let factor_specs: Vec<GroupSpec> = match (&spec, mode) {
            (GroupSpec::Direct { factors }, ProductMode::Direct) => factors.clone(),
            (_, ProductMode::Direct) => {
                return Err(Error::Config(
                    "direct product action needs a direct-product group".into(),
                ))
            }
            (s, ProductMode::Diagonal) => {
                let n = action
                    .and_then(|a| a.trees.as_ref().map(Vec::len))
                    .unwrap_or(1);
                vec![s.clone(); n]
            }
        };
        let kinds: Vec<TreeKind> = match action.and_then(|a| a.trees.as_ref()) {
            Some(ts) => {
                if ts.len() != factor_specs.len() {
                    return Err(Error::Config("action.trees length mismatch".into()));
                }
                ts.iter().map(|s| parse_kind(s)).collect::<Result<_>>()?
            }
            None => factor_specs
                .iter()
                .map(natural_kind)
                .collect::<Result<_>>()?,
        };
        let factors = factor_specs
            .into_iter()
            .zip(kinds)
            .map(|(s, k)| TreeAction::new(s, k))
            .collect::<Result<_>>()?;
        ProductAction::new(spec, mode, factors)
    }

    pub fn verify_params(&self) -> VerifyParams {
        VerifyParams {
            exhaustive_depth: self.caps.exhaustive_depth,
            samples: self.caps.samples,
            seed: self.seed,
            cap: self.caps.elements,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const F2_GROWTH: &str = r#"
seed = 7
set = ["a", "b", "a^-1", "b^-1"]

[group]
kind = "free"
labels = ["a", "b"]

[action]
tree = "cayley"

[params]
n_max = 8
alpha = "1/4"
beta = "1/2"
"#;

    #[test]
    fn parse_and_round_trip() {
        let cfg = ExperimentConfig::from_toml(F2_GROWTH).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.marked_set().unwrap().elements.len(), 4);
        assert_eq!(cfg.params.alpha().unwrap().unwrap(), Ratio::new(1, 4).unwrap());
        let text = cfg.to_toml().unwrap();
        let cfg2 = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, cfg2);
        assert_eq!(cfg2.to_toml().unwrap(), text);
    }

    #[test]
    fn rejects_unknown_keys_and_rng() {
        assert!(ExperimentConfig::from_toml("[group]\nkind = \"free\"\nbogus = 1").is_err());
        let bad_rng = "rng = \"mt19937\"\n[group]\nkind = \"free\"\nlabels = [\"a\"]";
        assert!(ExperimentConfig::from_toml(bad_rng).is_err());
    }

    #[test]
    fn product_config() {
        let text = r#"
set = [["a", "c"], ["b", "1"], ["a^-1", "c^-1"], ["b^-1", "1"]]

[group]
kind = "direct"
[[group.factors]]
kind = "free"
labels = ["a", "b"]
[[group.factors]]
kind = "free"
labels = ["c", "d"]

[params]
m = 1
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let p = cfg.product_action().unwrap();
        assert_eq!(p.factors.len(), 2);
        let u = cfg.marked_set().unwrap();
        assert_eq!(u.elements.len(), 4);
    }

    #[test]
    fn quotient_config() {
        let text = r#"
set = ["a", "b"]

[group]
kind = "free"
labels = ["a", "b"]

[quotient]
degree = 3
images = ["(1 2 3)", "(1 2)"]
subgroup = "stabilizer"
point = 1
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let q = cfg.quotient.as_ref().unwrap();
        let spec = cfg.spec().unwrap();
        q.to_quotient(&spec).unwrap();
        assert_eq!(
            q.designator().unwrap(),
            SubgroupDesignator::Stabilizer { point: 0 }
        );
    }
}
