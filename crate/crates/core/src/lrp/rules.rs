use serde::{Deserialize, Serialize};

use super::composite_assignment;
use crate::error::{Error, Result};
use crate::nn::{LayerSpec, NetworkSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Z,
    Epsilon,
    #[serde(alias = "alpha_beta")]
    Alphabeta,
    FlatIdentity,
    Composite,
}

impl Rule {
    pub const ALL: [Rule; 5] = [Rule::Z, Rule::Epsilon, Rule::Alphabeta, Rule::FlatIdentity, Rule::Composite];

    pub fn as_str(self) -> &'static str {
        match self {
            Rule::Z => "z",
            Rule::Epsilon => "epsilon",
            Rule::Alphabeta => "alphabeta",
            Rule::FlatIdentity => "flat_identity",
            Rule::Composite => "composite",
        }
    }
}

impl std::str::FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "z" => Ok(Rule::Z),
            "epsilon" | "eps" => Ok(Rule::Epsilon),
            "alphabeta" | "alpha_beta" | "ab" => Ok(Rule::Alphabeta),
            "flat_identity" | "flat" => Ok(Rule::FlatIdentity),
            "composite" => Ok(Rule::Composite),
            other => Err(Error::Config(format!("unknown relevance rule `{other}`"))),
        }
    }
}

/// Rule applied at one layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum LayerRule {
    Z,
    Epsilon(f64),
    AlphaBeta { alpha: f64, beta: f64 },
    /// Uniform redistribution over the receptive field (weight support).
    Flat,
    /// Relevance passes unchanged (ReLU, flatten) or is routed (max pool).
    PassThrough,
}

impl LayerRule {
    pub fn name(&self) -> String {
        match self {
            LayerRule::Z => "z".into(),
            LayerRule::Epsilon(e) => format!("epsilon({e:e})"),
            LayerRule::AlphaBeta { alpha, beta } => format!("alpha{alpha}beta{beta}"),
            LayerRule::Flat => "flat".into(),
            LayerRule::PassThrough => "pass".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    pub rule: Rule,
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Explicit per-layer rules for [`Rule::Composite`]; derived from the
    /// network when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composite_map: Option<Vec<LayerRule>>,
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self { rule: Rule::Composite, epsilon: 1e-6, alpha: 1.0, beta: 0.0, composite_map: None }
    }
}

impl RuleConfig {
    pub fn z() -> Self {
        Self { rule: Rule::Z, ..Self::default() }
    }

    pub fn epsilon(epsilon: f64) -> Self {
        Self { rule: Rule::Epsilon, epsilon, ..Self::default() }
    }

    pub fn alpha_beta(alpha: f64, beta: f64) -> Self {
        Self { rule: Rule::Alphabeta, alpha, beta, ..Self::default() }
    }

    pub fn flat() -> Self {
        Self { rule: Rule::FlatIdentity, ..Self::default() }
    }

    pub fn composite() -> Self {
        Self::default()
    }

    pub fn with_rule(rule: Rule) -> Self {
        Self { rule, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if self.alpha < 0.0 || self.beta < 0.0 || (self.alpha + self.beta - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("alpha and beta must be >= 0 and sum to 1, got {} and {}", self.alpha, self.beta)));
        }
        Ok(())
    }

    /// Rule for every layer of `net`.
    pub fn resolve(&self, net: &NetworkSpec) -> Result<Vec<LayerRule>> {
        self.validate()?;
        let uniform = match self.rule {
            Rule::Z => LayerRule::Z,
            Rule::Epsilon => LayerRule::Epsilon(self.epsilon),
            Rule::Alphabeta => LayerRule::AlphaBeta { alpha: self.alpha, beta: self.beta },
            Rule::FlatIdentity => LayerRule::Flat,
            Rule::Composite => {
                let map = match &self.composite_map {
                    Some(m) => m.clone(),
                    None => composite_assignment(net, self.epsilon)?,
                };
                if map.len() != net.layers().len() {
                    return Err(Error::Assignment(format!("{} rules for {} layers", map.len(), net.layers().len())));
                }
                for (k, (rule, layer)) in map.iter().zip(net.layers()).enumerate() {
                    let linear = matches!(layer, LayerSpec::Conv2d(_) | LayerSpec::Dense(_) | LayerSpec::AvgPool(_));
                    if linear == (*rule == LayerRule::PassThrough) {
                        return Err(Error::Assignment(format!("rule {} does not fit layer {k} ({})", rule.name(), layer.kind_name())));
                    }
                }
                return Ok(map);
            }
        };
        Ok(net
            .layers()
            .iter()
            .map(|l| match l {
                LayerSpec::Conv2d(_) | LayerSpec::Dense(_) | LayerSpec::AvgPool(_) => uniform,
                _ => LayerRule::PassThrough,
            })
            .collect())
    }
}
