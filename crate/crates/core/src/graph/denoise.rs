//! Graph-filter cleanup of an upsampled patch before fusion.

use serde::{Deserialize, Serialize};

use super::{build_graph, highpass_response, variation_scores, GraphParams};
use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "policy")]
pub enum DenoisePolicy {
    /// Drop points whose score exceeds `mean + kappa * stddev`.
    Trim { kappa: f64 },
    /// `x ← x − beta · (I − A)x`, rebuilding the graph each iteration.
    Smooth { beta: f64, iterations: usize },
}

impl Default for DenoisePolicy {
    fn default() -> Self {
        DenoisePolicy::Trim { kappa: 3.0 }
    }
}

impl DenoisePolicy {
    pub fn default_smooth() -> Self {
        DenoisePolicy::Smooth {
            beta: 0.5,
            iterations: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Denoised<T> {
    pub cloud: PointCloud<T>,
    /// Surviving input indices, ascending.
    pub kept: Vec<usize>,
}

pub fn denoise_patch<T: Real>(
    cloud: &PointCloud<T>,
    params: &GraphParams<T>,
    policy: DenoisePolicy,
) -> Result<Denoised<T>> {
    match policy {
        DenoisePolicy::Trim { kappa } => trim(cloud, params, T::lit(kappa)),
        DenoisePolicy::Smooth { beta, iterations } => {
            let beta = T::lit(beta);
            let mut current = cloud.clone();
            for _ in 0..iterations {
                let graph = build_graph(&current, params)?;
                let residual = highpass_response(&graph, &current)?;
                current = PointCloud::new(
                    current
                        .iter()
                        .zip(&residual)
                        .map(|(&x, &r)| x - r * beta)
                        .collect(),
                )?;
            }
            if iterations == 0 {
                build_graph(cloud, params)?;
            }
            Ok(Denoised {
                cloud: current,
                kept: (0..cloud.len()).collect(),
            })
        }
    }
}

fn trim<T: Real>(cloud: &PointCloud<T>, params: &GraphParams<T>, kappa: T) -> Result<Denoised<T>> {
    let graph = build_graph(cloud, params)?;
    let scores = variation_scores(&highpass_response(&graph, cloud)?);
    let n = T::from_usize(scores.len()).unwrap();
    // index-ordered reductions
    let mean = scores.values().iter().copied().sum::<T>() / n;
    let var = scores
        .values()
        .iter()
        .map(|&s| (s - mean) * (s - mean))
        .sum::<T>()
        / n;
    let threshold = mean + kappa * var.sqrt();
    let kept: Vec<usize> = (0..cloud.len())
        .filter(|&i| scores.values()[i] <= threshold)
        .collect();
    if kept.is_empty() {
        return Err(Error::Degenerate("trim removed every point".into()));
    }
    Ok(Denoised {
        cloud: cloud.select(&kept)?,
        kept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{normalize_unit_sphere, Point3, TriangleMesh};
    use crate::sampling::{poisson_disk_sample, rng_from_seed};
    use rand::Rng;

    type P = Point3<f64>;

    /// Poisson-disk sample of the square `[-half, half]²` at z = 0.
    fn plane(n: usize, half: f64, seed: u64) -> PointCloud<f64> {
        let sq = TriangleMesh::new(
            vec![
                P::new(-half, -half, 0.0),
                P::new(half, -half, 0.0),
                P::new(half, half, 0.0),
                P::new(-half, half, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        poisson_disk_sample(&sq, n, seed).unwrap()
    }

    fn mean_spacing(c: &PointCloud<f64>) -> f64 {
        let tree = crate::KdTree::from_cloud(c);
        c.iter()
            .map(|p| tree.knn(*p, 2).unwrap()[1].dist_sq.sqrt())
            .sum::<f64>()
            / c.len() as f64
    }

    #[test]
    fn clean_plane_survives_trim() {
        for seed in 0..5 {
            let c = plane(8192, 2.0, seed);
            let d = denoise_patch(&c, &GraphParams::default(), DenoisePolicy::default()).unwrap();
            assert!(
                d.kept.len() as f64 >= 0.99 * c.len() as f64,
                "kept {}",
                d.kept.len()
            );
        }
    }

    // Ten spacings on this plane is about 0.37: far from the surface but
    // still inside the default ε-ball, where the high-pass response sees it.
    #[test]
    fn plane_outliers_removed() {
        for seed in 0..10 {
            let clean = plane(8192, 2.0, seed);
            let spacing = mean_spacing(&clean);
            let mut rng = rng_from_seed(100 + seed);
            let n_out = clean.len() / 20;
            let mut pts = clean.points().to_vec();
            let mut is_outlier = vec![false; pts.len()];
            for _ in 0..n_out {
                let base = clean[rng.random_range(0..clean.len())];
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                pts.push(base + P::new(0.0, 0.0, sign * 10.0 * spacing));
                is_outlier.push(true);
            }
            let noisy = PointCloud::new(pts).unwrap();
            let d =
                denoise_patch(&noisy, &GraphParams::default(), DenoisePolicy::default()).unwrap();
            let kept_out = d.kept.iter().filter(|&&i| is_outlier[i]).count();
            let kept_clean = d.kept.len() - kept_out;
            let removed_out = n_out - kept_out;
            let removed_clean = clean.len() - kept_clean;
            assert!(
                removed_out as f64 >= 0.9 * n_out as f64,
                "seed {seed}: {removed_out}/{n_out}"
            );
            assert!(
                removed_clean as f64 <= 0.02 * clean.len() as f64,
                "seed {seed}: {removed_clean}"
            );
        }
    }

    #[test]
    fn smooth_zero_step_is_identity() {
        let c = normalize_unit_sphere(&plane(200, 1.0, 1)).unwrap().0;
        let d = denoise_patch(
            &c,
            &GraphParams::default(),
            DenoisePolicy::Smooth {
                beta: 0.0,
                iterations: 3,
            },
        )
        .unwrap();
        assert_eq!(d.cloud, c);
    }

    #[test]
    fn smooth_pulls_outlier_in() {
        let mut pts = normalize_unit_sphere(&plane(300, 1.0, 2))
            .unwrap()
            .0
            .into_points();
        pts.push(P::new(0.0, 0.0, 0.3));
        let c = PointCloud::new(pts).unwrap();
        let d =
            denoise_patch(&c, &GraphParams::default(), DenoisePolicy::default_smooth()).unwrap();
        assert_eq!(d.cloud.len(), c.len());
        assert!(d.cloud[300].z.abs() < 0.3 * 0.6);
    }

    #[test]
    fn needs_two_points() {
        let c: PointCloud<f64> = PointCloud::from_f64_triples(&[[0.0; 3]]).unwrap();
        assert!(denoise_patch(&c, &GraphParams::default(), DenoisePolicy::default()).is_err());
    }
}
