//! Resolved configuration: defaults, then the config file, then flags.

use std::fs;
use std::path::Path;

use anyhow::Context;
use hfpoint::graph::{DenoisePolicy, GraphParams};
use hfpoint::metrics::MetricConfig;
use hfpoint::pipeline::{PairingRules, PipelineConfig};
use hfpoint::protocol;
use serde::{Deserialize, Serialize};

use crate::args::{DenoiseArgs, GraphArgs, MetricArgs, PolicyArg};
use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HfSettings {
    /// Points kept by `hf extract`.
    pub m: usize,
    /// Normalize to the unit sphere before building the graph.
    pub normalize: bool,
    pub graph: GraphParams<f64>,
    pub denoise: DenoisePolicy,
}

impl Default for HfSettings {
    fn default() -> Self {
        HfSettings {
            m: protocol::HF_PATCH_M,
            normalize: true,
            graph: GraphParams::default(),
            denoise: DenoisePolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Seed for the sampling commands.
    pub seed: u64,
    pub hf: HfSettings,
    pub metrics: MetricConfig,
    pub pipeline: PipelineConfig,
    pub pairing: PairingRules,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Settings::default());
        };
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))
            .map_err(Failure::io)?;
        toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))
            .map_err(Failure::argument)
    }
}

pub fn apply_graph(graph: &mut GraphParams<f64>, args: &GraphArgs) {
    if let Some(e) = args.epsilon {
        graph.epsilon = e;
        if args.sigma.is_none() {
            graph.sigma = e / 2.0;
        }
    }
    if let Some(s) = args.sigma {
        graph.sigma = s;
    }
    if let Some(k) = args.fallback_k {
        graph.fallback_k = k;
    }
}

pub fn apply_metric(config: &mut MetricConfig, args: &MetricArgs) {
    if let Some(v) = args.r_q_sq {
        config.r_q_sq = v;
    }
    if let Some(v) = args.seeds {
        config.seed_count = Some(v);
    }
    if let Some(v) = args.hf_m {
        config.hf_m = v;
    }
}

/// Overrides `policy` with the flags; switching policy starts from that
/// policy's defaults.
pub fn apply_denoise(policy: DenoisePolicy, args: &DenoiseArgs) -> DenoisePolicy {
    let mut policy = match (args.policy, policy) {
        (Some(PolicyArg::Trim), DenoisePolicy::Smooth { .. }) => DenoisePolicy::default(),
        (Some(PolicyArg::Smooth), DenoisePolicy::Trim { .. }) => DenoisePolicy::default_smooth(),
        (_, p) => p,
    };
    match &mut policy {
        DenoisePolicy::Trim { kappa } => {
            if let Some(k) = args.kappa {
                *kappa = k;
            }
        }
        DenoisePolicy::Smooth { beta, iterations } => {
            if let Some(b) = args.beta {
                *beta = b;
            }
            if let Some(i) = args.iterations {
                *iterations = i;
            }
        }
    }
    policy
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_then_flags() {
        let mut s: Settings = toml::from_str(
            r#"
            seed = 9
            [metrics]
            hf_m = 1024
            [pipeline]
            ratio = 2
            "#,
        )
        .unwrap();
        assert_eq!(s.seed, 9);
        assert_eq!(s.metrics.hf_m, 1024);
        assert_eq!(s.metrics.r_q_sq, 0.012);
        assert_eq!(s.pipeline.ratio, 2);
        assert_eq!(s.pipeline.patch_size, 256);

        apply_metric(
            &mut s.metrics,
            &MetricArgs {
                hf_m: Some(512),
                ..Default::default()
            },
        );
        assert_eq!(s.metrics.hf_m, 512);
        apply_graph(
            &mut s.hf.graph,
            &GraphArgs {
                epsilon: Some(0.2),
                ..Default::default()
            },
        );
        assert_eq!((s.hf.graph.epsilon, s.hf.graph.sigma), (0.2, 0.1));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<Settings>("bogus = 1").is_err());
        assert!(toml::from_str::<Settings>("[hf.graph]\nradius = 1").is_err());
    }

    #[test]
    fn partial_graph_tables_fill_defaults() {
        let s: Settings = toml::from_str("[hf.graph]\nepsilon = 0.4").unwrap();
        assert_eq!(s.hf.graph, GraphParams::with_epsilon(0.4));
        let s: Settings = toml::from_str("[pipeline.graph]\nsigma = 0.1").unwrap();
        assert_eq!(
            (s.pipeline.graph.epsilon, s.pipeline.graph.sigma),
            (0.5, 0.1)
        );
    }

    #[test]
    fn policy_switch() {
        let p = apply_denoise(
            DenoisePolicy::default(),
            &DenoiseArgs {
                policy: Some(PolicyArg::Smooth),
                beta: Some(0.25),
                ..Default::default()
            },
        );
        assert_eq!(
            p,
            DenoisePolicy::Smooth {
                beta: 0.25,
                iterations: 1
            }
        );
    }
}
