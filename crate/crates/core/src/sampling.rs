//! Farthest point sampling, Monte-Carlo sampling, and Poisson-disk sampling
//! by weighted sample elimination.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud, TriangleMesh};
use crate::scalar::Real;
use crate::spatial::KdTree;

/// How farthest point sampling picks its first index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "seed")]
pub enum FpsStart {
    /// Point with index 0.
    First,
    /// Point farthest from the centroid.
    #[default]
    FarthestFromCentroid,
    /// Uniformly random index drawn from the given seed.
    Random(u64),
}

/// Output of farthest point sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct FpsSelection<T> {
    pub indices: Vec<usize>,
    /// Distance from each pick to the previously selected set at the time it
    /// was chosen; the first entry is infinite.
    pub pick_distances: Vec<T>,
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn first_index<T: Real>(cloud: &PointCloud<T>, start: FpsStart) -> usize {
    match start {
        FpsStart::First => 0,
        FpsStart::FarthestFromCentroid => {
            let c = cloud.centroid();
            let mut best = (T::neg_infinity(), 0);
            for (i, p) in cloud.iter().enumerate() {
                let d = p.dist_sq(c);
                if d > best.0 {
                    best = (d, i);
                }
            }
            best.1
        }
        FpsStart::Random(seed) => rng_from_seed(seed).random_range(0..cloud.len()),
    }
}

/// Greedy max-min subset of `k` indices; ties go to the lowest index.
pub fn fps<T: Real>(cloud: &PointCloud<T>, k: usize, start: FpsStart) -> Result<Vec<usize>> {
    Ok(fps_with_distances(cloud, k, start)?.indices)
}

pub fn fps_with_distances<T: Real>(
    cloud: &PointCloud<T>,
    k: usize,
    start: FpsStart,
) -> Result<FpsSelection<T>> {
    let n = cloud.len();
    if k == 0 || k > n {
        return Err(Error::out_of_range("fps k", k, format!("[1, {n}]")));
    }
    let pts = cloud.points();
    // selected entries are marked with -1 so they never win the argmax
    let mut min_d = vec![T::infinity(); n];
    let mut indices = Vec::with_capacity(k);
    let mut pick_distances = Vec::with_capacity(k);
    let mut current = first_index(cloud, start);
    let mut current_d = T::infinity();
    loop {
        indices.push(current);
        pick_distances.push(current_d.sqrt());
        min_d[current] = -T::one();
        if indices.len() == k {
            break;
        }
        let c = pts[current];
        let mut best = (-T::one(), usize::MAX);
        for (i, (d, p)) in min_d.iter_mut().zip(pts).enumerate() {
            if *d < T::zero() {
                continue;
            }
            let nd = c.dist_sq(*p);
            if nd < *d {
                *d = nd;
            }
            if *d > best.0 {
                best = (*d, i);
            }
        }
        current = best.1;
        current_d = best.0;
    }
    Ok(FpsSelection {
        indices,
        pick_distances,
    })
}

/// Area-uniform sampling of `n` points on a triangle mesh.
pub fn monte_carlo_mesh<T: Real>(
    mesh: &TriangleMesh<T>,
    n: usize,
    seed: u64,
) -> Result<PointCloud<T>> {
    let mut rng = rng_from_seed(seed);
    PointCloud::new(sample_surface(mesh, n, &mut rng)?)
}

fn sample_surface<T: Real, R: Rng>(
    mesh: &TriangleMesh<T>,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Point3<T>>> {
    if n == 0 {
        return Err(Error::out_of_range("sample count", 0, "[1, inf)"));
    }
    let mut cumulative = Vec::with_capacity(mesh.triangles().len());
    let mut total = 0.0f64;
    for t in 0..mesh.triangles().len() {
        total += mesh.triangle_area(t).as_f64();
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::Degenerate("mesh has zero surface area".into()));
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * total;
        let t = cumulative
            .partition_point(|&c| c <= u)
            .min(cumulative.len() - 1);
        let [a, b, c] = mesh.corners(t);
        let s = rng.random::<f64>().sqrt();
        let r2 = rng.random::<f64>();
        let wa = T::lit(1.0 - s);
        let wb = T::lit(s * (1.0 - r2));
        let wc = T::lit(s * r2);
        out.push(a * wa + b * wb + c * wc);
    }
    Ok(out)
}

/// Uniform sampling of `n` distinct points of a cloud, without replacement.
pub fn monte_carlo_cloud<T: Real>(
    cloud: &PointCloud<T>,
    n: usize,
    seed: u64,
) -> Result<PointCloud<T>> {
    if n == 0 || n > cloud.len() {
        return Err(Error::out_of_range(
            "sample count",
            n,
            format!("[1, {}]", cloud.len()),
        ));
    }
    let mut rng = rng_from_seed(seed);
    let idx = rand::seq::index::sample(&mut rng, cloud.len(), n).into_vec();
    cloud.select(&idx)
}

/// Source for Monte-Carlo sampling.
#[derive(Debug, Clone, Copy)]
pub enum SampleSource<'a, T> {
    Mesh(&'a TriangleMesh<T>),
    Cloud(&'a PointCloud<T>),
}

pub fn monte_carlo_sample<T: Real>(
    source: SampleSource<'_, T>,
    n: usize,
    seed: u64,
) -> Result<PointCloud<T>> {
    match source {
        SampleSource::Mesh(m) => monte_carlo_mesh(m, n, seed),
        SampleSource::Cloud(c) => monte_carlo_cloud(c, n, seed),
    }
}

/// Candidate pool multiplier for sample elimination.
pub const POISSON_OVERSAMPLE: usize = 4;
const ELIMINATION_ALPHA: f64 = 8.0;
const ELIMINATION_BETA: f64 = 0.65;
const ELIMINATION_GAMMA: f64 = 1.5;

#[derive(PartialEq)]
struct HeapEntry {
    weight: f64,
    index: usize,
    version: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    // heaviest first, then lowest index
    fn cmp(&self, o: &Self) -> Ordering {
        self.weight
            .partial_cmp(&o.weight)
            .unwrap_or(Ordering::Equal)
            .then(o.index.cmp(&self.index))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Exactly `n` well-spaced surface points: a 4x Monte-Carlo pool is thinned
/// by repeatedly removing the sample with the largest neighbor-density
/// weight until `n` remain.
pub fn poisson_disk_sample<T: Real>(
    mesh: &TriangleMesh<T>,
    n: usize,
    seed: u64,
) -> Result<PointCloud<T>> {
    let mut rng = rng_from_seed(seed);
    let pool = sample_surface(mesh, n * POISSON_OVERSAMPLE, &mut rng)?;
    let area = mesh.area().as_f64();
    let pool_f64: Vec<Point3<f64>> = pool.iter().map(|p| p.cast()).collect();
    let keep = eliminate(&pool_f64, n, area);
    PointCloud::new(keep.into_iter().map(|i| pool[i]).collect())
}

fn eliminate(pool: &[Point3<f64>], n: usize, area: f64) -> Vec<usize> {
    let m = pool.len();
    let r_max = (area / (2.0 * 3f64.sqrt() * n as f64)).sqrt();
    let r_min = r_max * (1.0 - (n as f64 / m as f64).powf(ELIMINATION_GAMMA)) * ELIMINATION_BETA;
    let d_max = 2.0 * r_max;
    let weight = |d_sq: f64| {
        let d = d_sq.sqrt().max(2.0 * r_min);
        (1.0 - d / d_max).powf(ELIMINATION_ALPHA)
    };

    let tree = KdTree::new(pool.to_vec());
    let neighbors: Vec<Vec<(usize, f64)>> = pool
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut list: Vec<(usize, f64)> = tree
                .within(*p, d_max * d_max, false)
                .into_iter()
                .filter(|nb| nb.index != i)
                .map(|nb| (nb.index, weight(nb.dist_sq)))
                .filter(|&(_, w)| w > 0.0)
                .collect();
            list.sort_unstable_by_key(|&(j, _)| j);
            list
        })
        .collect();

    let mut weights: Vec<f64> = neighbors
        .iter()
        .map(|l| l.iter().map(|&(_, w)| w).sum())
        .collect();
    let mut version = vec![0u32; m];
    let mut alive = vec![true; m];
    let mut heap: BinaryHeap<HeapEntry> = (0..m)
        .map(|i| HeapEntry {
            weight: weights[i],
            index: i,
            version: 0,
        })
        .collect();

    let mut remaining = m;
    while remaining > n {
        let Some(top) = heap.pop() else { break };
        if !alive[top.index] || top.version != version[top.index] {
            continue;
        }
        alive[top.index] = false;
        remaining -= 1;
        for &(j, w) in &neighbors[top.index] {
            if alive[j] {
                weights[j] -= w;
                version[j] += 1;
                heap.push(HeapEntry {
                    weight: weights[j],
                    index: j,
                    version: version[j],
                });
            }
        }
    }
    (0..m).filter(|&i| alive[i]).collect()
}
