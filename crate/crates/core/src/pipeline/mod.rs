//! Test-time patch pipeline: FPS seeds, k-nearest patches, per-patch
//! upsampling and denoising, fusion and a final FPS down to r·N points.

mod dataset;
mod plugin;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{normalize_unit_sphere, NormalizationTransform, PointCloud};
use crate::graph::{denoise_patch, DenoisePolicy, GraphParams};
use crate::protocol;
use crate::sampling::{fps, FpsStart};
use crate::scalar::Real;
use crate::spatial::KdTree;

pub use dataset::{
    batch_evaluate, ingest_dataset, BatchReport, DatasetPair, Ingested, PairOutcome, PairWarning,
    PairingRules,
};
pub use plugin::{PluginSpec, PluginUpsampler, DEFAULT_PLUGIN_TIMEOUT_SECS};

/// Smallest accepted patch size.
pub const MIN_PATCH_SIZE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builtin {
    /// Every point copied r times. A baseline, not a real upsampler.
    Duplicate,
    /// Each point plus r−1 points on the segment to its nearest neighbor.
    /// A baseline, not a real upsampler.
    Midpoint,
}

impl std::str::FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "duplicate" => Ok(Builtin::Duplicate),
            "midpoint" => Ok(Builtin::Midpoint),
            _ => Err(Error::InvalidParameter(format!(
                "unknown builtin upsampler '{s}' (expected duplicate or midpoint)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum UpsamplerSpec {
    Builtin { name: Builtin },
    Plugin(PluginSpec),
}

impl Default for UpsamplerSpec {
    fn default() -> Self {
        UpsamplerSpec::Builtin {
            name: Builtin::Midpoint,
        }
    }
}

impl UpsamplerSpec {
    pub fn build<T: Real>(&self) -> Box<dyn Upsampler<T>> {
        match self {
            UpsamplerSpec::Builtin { name } => Box::new(*name),
            UpsamplerSpec::Plugin(spec) => Box::new(PluginUpsampler::new(spec.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub patch_size: usize,
    pub ratio: usize,
    /// Expected number of patches covering each input point.
    pub coverage_factor: f64,
    /// `None` disables denoising.
    pub denoise: Option<DenoisePolicy>,
    pub graph: GraphParams<f64>,
    pub upsampler: UpsamplerSpec,
    /// Drives the random start of the patch-seed FPS.
    pub seed: u64,
    /// Worker threads for patch processing; `None` uses the current pool.
    /// Never affects the output.
    pub workers: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            patch_size: protocol::PATCH_SIZE,
            ratio: protocol::RATIO,
            coverage_factor: 3.0,
            denoise: Some(DenoisePolicy::default()),
            graph: GraphParams::default(),
            upsampler: UpsamplerSpec::default(),
            seed: 0,
            workers: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch_size < MIN_PATCH_SIZE {
            return Err(Error::out_of_range(
                "patch_size",
                self.patch_size,
                format!("[{MIN_PATCH_SIZE}, ∞)"),
            ));
        }
        if self.ratio == 0 {
            return Err(Error::out_of_range("ratio", self.ratio, "[1, ∞)"));
        }
        if !(self.coverage_factor >= 1.0 && self.coverage_factor.is_finite()) {
            return Err(Error::out_of_range(
                "coverage_factor",
                self.coverage_factor,
                "[1, ∞)",
            ));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidParameter("workers must be at least 1".into()));
        }
        self.graph.validate()
    }

    pub fn seed_count(&self, n: usize) -> usize {
        ((self.coverage_factor * n as f64 / self.patch_size as f64).ceil() as usize).clamp(1, n)
    }
}

/// A normalized patch with the indices it was cut from.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch<T> {
    pub indices: Vec<usize>,
    pub cloud: PointCloud<T>,
    pub transform: NormalizationTransform<T>,
}

pub fn extract_patches<T: Real>(
    cloud: &PointCloud<T>,
    config: &PipelineConfig,
) -> Result<Vec<Patch<T>>> {
    config.validate()?;
    if cloud.len() < config.patch_size {
        return Err(Error::out_of_range(
            "cloud size",
            cloud.len(),
            format!(
                "[{}, ∞) for patch_size {}",
                config.patch_size, config.patch_size
            ),
        ));
    }
    let seeds = fps(
        cloud,
        config.seed_count(cloud.len()),
        FpsStart::Random(config.seed),
    )?;
    let tree = KdTree::from_cloud(cloud);
    seeds
        .par_iter()
        .map(|&s| {
            let indices = tree.knn_indices(cloud[s], config.patch_size)?;
            let (patch, transform) = normalize_unit_sphere(&cloud.select(&indices)?)?;
            Ok(Patch {
                indices,
                cloud: patch,
                transform,
            })
        })
        .collect()
}

/// Upsamples one normalized patch by `ratio`.
pub trait Upsampler<T: Real>: Send + Sync {
    fn upsample(
        &self,
        patch_index: usize,
        patch: &PointCloud<T>,
        ratio: usize,
    ) -> Result<PointCloud<T>>;
}

impl<T: Real> Upsampler<T> for Builtin {
    fn upsample(
        &self,
        _patch_index: usize,
        patch: &PointCloud<T>,
        ratio: usize,
    ) -> Result<PointCloud<T>> {
        match self {
            Builtin::Duplicate => {
                let mut out = Vec::with_capacity(patch.len() * ratio);
                for &p in patch {
                    out.extend(std::iter::repeat_n(p, ratio));
                }
                PointCloud::new(out)
            }
            Builtin::Midpoint => midpoint(patch, ratio),
        }
    }
}

fn midpoint<T: Real>(patch: &PointCloud<T>, ratio: usize) -> Result<PointCloud<T>> {
    let target = patch.len() * ratio;
    if patch.len() < 2 || ratio == 1 {
        return Builtin::Duplicate.upsample(0, patch, ratio);
    }
    let tree = KdTree::from_cloud(patch);
    let mut out = patch.points().to_vec();
    for (i, &p) in patch.iter().enumerate() {
        let neighbor = tree
            .knn(p, 2)?
            .into_iter()
            .find(|n| n.index != i)
            .expect("two points");
        let q = patch[neighbor.index];
        for k in 1..ratio {
            out.push(p.lerp(q, T::lit(k as f64 / ratio as f64)));
        }
    }
    let out = PointCloud::new(out)?;
    if out.len() > target {
        return out.select(&fps(&out, target, FpsStart::FarthestFromCentroid)?);
    }
    Ok(out)
}

/// Runs `upsampler` and checks the returned cardinality.
pub fn run_upsampler<T: Real>(
    upsampler: &dyn Upsampler<T>,
    patch_index: usize,
    patch: &PointCloud<T>,
    ratio: usize,
) -> Result<PointCloud<T>> {
    let out = upsampler.upsample(patch_index, patch, ratio)?;
    let expected = patch.len() * ratio;
    if out.len() != expected {
        return Err(Error::Plugin {
            patch: patch_index,
            message: format!("expected {expected} points, got {}", out.len()),
        });
    }
    Ok(out)
}

/// Maps every part back through its inverse transform, concatenates in
/// order and keeps `target` points by FPS.
pub fn fuse_patches<T: Real>(
    parts: &[(PointCloud<T>, NormalizationTransform<T>)],
    target: usize,
) -> Result<PointCloud<T>> {
    let restored: Vec<_> = parts.iter().map(|(c, t)| t.invert_cloud(c)).collect();
    let total: usize = restored.iter().map(PointCloud::len).sum();
    if target == 0 || total < target {
        return Err(Error::out_of_range(
            "fusion target",
            target,
            format!("[1, {total}] (fused point count)"),
        ));
    }
    let fused = PointCloud::concat(&restored)?;
    fused.select(&fps(&fused, target, FpsStart::FarthestFromCentroid)?)
}

/// Summary of one pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct Upsampled<T> {
    pub cloud: PointCloud<T>,
    pub patches: usize,
    /// Points removed by per-patch denoising, summed over patches.
    pub denoised_away: usize,
}

pub fn upsample_cloud<T: Real>(
    cloud: &PointCloud<T>,
    config: &PipelineConfig,
) -> Result<Upsampled<T>> {
    let upsampler = config.upsampler.build::<T>();
    upsample_with(cloud, config, upsampler.as_ref())
}

/// [`upsample_cloud`] with an explicit upsampler implementation.
pub fn upsample_with<T: Real>(
    cloud: &PointCloud<T>,
    config: &PipelineConfig,
    upsampler: &dyn Upsampler<T>,
) -> Result<Upsampled<T>> {
    config.validate()?;
    let run = || -> Result<Upsampled<T>> {
        let patches = extract_patches(cloud, config)?;
        let params = config.graph.cast::<T>();
        let processed: Vec<(PointCloud<T>, NormalizationTransform<T>, usize)> = patches
            .par_iter()
            .enumerate()
            .map(|(i, patch)| {
                let up = run_upsampler(upsampler, i, &patch.cloud, config.ratio)?;
                let (up, removed) = match config.denoise {
                    Some(policy) => {
                        let before = up.len();
                        let d = denoise_patch(&up, &params, policy)?;
                        (d.cloud, before - d.kept.len())
                    }
                    None => (up, 0),
                };
                Ok((up, patch.transform, removed))
            })
            .collect::<Result<_>>()?;
        let denoised_away = processed.iter().map(|p| p.2).sum();
        let parts: Vec<_> = processed.into_iter().map(|(c, t, _)| (c, t)).collect();
        Ok(Upsampled {
            cloud: fuse_patches(&parts, config.ratio * cloud.len())?,
            patches: parts.len(),
            denoised_away,
        })
    };
    match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}
