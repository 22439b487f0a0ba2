//! Evaluation metrics (CD, HD, P2F, uniformity, HF_CD, HF_HD) and the
//! weighted non-adversarial loss report.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bvh::TriangleBvh;
use crate::error::{Error, Result};
use crate::geometry::{normalize_unit_sphere, Point3, PointCloud, TriangleMesh};
use crate::graph::{extract_hf_points, GraphParams};
use crate::protocol;
use crate::sampling::{fps, FpsStart};
use crate::scalar::Real;
use crate::spatial::KdTree;
use crate::transport::{identity_distribution_loss, reconstruction_loss, Solver};

pub const SCHEMA_VERSION: u32 = 1;

/// Fraction of |P| used as the uniformity seed count when none is given.
pub const SEED_FRACTION: f64 = 0.05;

fn sum_in_order<T: Real>(values: &[T]) -> T {
    values.iter().fold(T::zero(), |a, &b| a + b)
}

/// Squared distance from every point of `from` to its nearest point in `to`.
pub fn nearest_sq<T: Real>(from: &PointCloud<T>, to: &KdTree<T>) -> Vec<T> {
    from.points()
        .par_iter()
        .map(|&p| to.nearest(p).dist_sq)
        .collect()
}

fn check_non_empty<T: Real>(p: &PointCloud<T>, q: &PointCloud<T>) -> Result<()> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::Empty("point cloud"));
    }
    Ok(())
}

fn directed_terms<T: Real>(p: &PointCloud<T>, q: &PointCloud<T>) -> (Vec<T>, Vec<T>) {
    let tp = KdTree::from_cloud(p);
    let tq = KdTree::from_cloud(q);
    (nearest_sq(p, &tq), nearest_sq(q, &tp))
}

fn chamfer_from_terms<T: Real>(pq: &[T], qp: &[T]) -> T {
    let (sp, sq) = (sum_in_order(pq), sum_in_order(qp));
    let (np, nq) = (T::lit(pq.len() as f64), T::lit(qp.len() as f64));
    if pq.len() == qp.len() {
        (sp + sq) / np
    } else {
        sp / np + sq / nq
    }
}

fn hausdorff_from_terms<T: Real>(pq: &[T], qp: &[T]) -> T {
    pq.iter().chain(qp).fold(T::zero(), |a, &b| a.max(b)).sqrt()
}

/// Chamfer distance on squared nearest-neighbor distances. For equal sizes
/// the two directional sums share the 1/|P| factor; otherwise each
/// direction is averaged over its own set and the averages are added.
pub fn chamfer<T: Real>(p: &PointCloud<T>, q: &PointCloud<T>) -> Result<T> {
    check_non_empty(p, q)?;
    let (pq, qp) = directed_terms(p, q);
    Ok(chamfer_from_terms(&pq, &qp))
}

/// Symmetric Hausdorff distance (unsquared).
pub fn hausdorff<T: Real>(p: &PointCloud<T>, q: &PointCloud<T>) -> Result<T> {
    check_non_empty(p, q)?;
    let (pq, qp) = directed_terms(p, q);
    Ok(hausdorff_from_terms(&pq, &qp))
}

/// Mean and max point-to-surface distance.
pub fn point_to_surface<T: Real>(p: &PointCloud<T>, mesh: &TriangleMesh<T>) -> Result<(T, T)> {
    if p.is_empty() {
        return Err(Error::Empty("point cloud"));
    }
    if mesh.triangles().is_empty() {
        return Err(Error::Empty("mesh"));
    }
    let bvh = TriangleBvh::new(mesh);
    let d: Vec<T> = p
        .points()
        .par_iter()
        .map(|&x| bvh.distance(x).expect("non-empty mesh"))
        .collect();
    let mean = sum_in_order(&d) / T::lit(d.len() as f64);
    let max = d.iter().fold(T::zero(), |a, &b| a.max(b));
    Ok((mean, max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    /// Squared ball radius of the uniformity queries.
    pub r_q_sq: f64,
    /// Uniformity seed count; `None` means ⌈0.05·|P|⌉.
    pub seed_count: Option<usize>,
    /// HF points per cloud for HF_CD / HF_HD.
    pub hf_m: usize,
    pub graph: GraphParams<f64>,
    /// Upsampling ratio and input size; when both are set the expected ball
    /// population is r·N·r_q², otherwise |P|·r_q².
    pub ratio: Option<usize>,
    pub input_size: Option<usize>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            r_q_sq: protocol::R_Q_SQ,
            seed_count: None,
            hf_m: protocol::HF_METRIC_M,
            graph: GraphParams::default(),
            ratio: None,
            input_size: None,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_q_sq > 0.0 && self.r_q_sq.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "r_q_sq must be positive, got {}",
                self.r_q_sq
            )));
        }
        if self.seed_count == Some(0) {
            return Err(Error::InvalidParameter(
                "seed_count must be at least 1".into(),
            ));
        }
        if self.hf_m == 0 {
            return Err(Error::InvalidParameter("hf_m must be at least 1".into()));
        }
        self.graph.validate()
    }

    pub fn seeds_for(&self, n: usize) -> usize {
        self.seed_count
            .unwrap_or_else(|| (SEED_FRACTION * n as f64).ceil() as usize)
            .clamp(1, n)
    }

    pub fn expected_ball_count(&self, n: usize) -> f64 {
        let population = match (self.ratio, self.input_size) {
            (Some(r), Some(input)) => (r * input) as f64,
            _ => n as f64,
        };
        population * self.r_q_sq
    }
}

fn nearest_within<T: Real>(pts: &[Point3<T>]) -> Vec<T> {
    if pts.len() <= 256 {
        return (0..pts.len())
            .map(|j| {
                pts.iter()
                    .enumerate()
                    .filter(|&(k, _)| k != j)
                    .map(|(_, q)| pts[j].dist_sq(*q))
                    .fold(T::infinity(), |a, b| a.min(b))
                    .sqrt()
            })
            .collect();
    }
    let tree = KdTree::new(pts.to_vec());
    pts.iter()
        .map(|&p| {
            tree.knn(p, 2).expect("at least two points")[1]
                .dist_sq
                .sqrt()
        })
        .collect()
}

/// Sum over FPS-seeded balls of imbalance × clustering deviation.
pub fn uniformity<T: Real>(p: &PointCloud<T>, config: &MetricConfig) -> Result<T> {
    config.validate()?;
    let seeds = fps(p, config.seeds_for(p.len()), FpsStart::FarthestFromCentroid)?;
    let tree = KdTree::from_cloud(p);
    let r_q_sq = T::lit(config.r_q_sq);
    let r_q = r_q_sq.sqrt();
    let n_hat = T::lit(config.expected_ball_count(p.len()));
    let area = T::lit(2.0 * std::f64::consts::PI) * r_q_sq / T::lit(3f64.sqrt());
    let terms: Vec<T> = seeds
        .par_iter()
        .map(|&s| {
            let ball = tree.radius_query(p[s], r_q);
            let count = T::lit(ball.len() as f64);
            let imbalance = (count - n_hat).powi(2) / n_hat;
            if ball.len() < 2 {
                return T::zero();
            }
            let d_hat = (area / count).sqrt();
            let members: Vec<_> = ball.iter().map(|&i| p[i]).collect();
            let cluster = nearest_within(&members)
                .into_iter()
                .map(|d| (d - d_hat).powi(2) / d_hat)
                .fold(T::zero(), |a, b| a + b);
            imbalance * cluster
        })
        .collect();
    Ok(sum_in_order(&terms))
}

fn hf_pair<T: Real>(
    up: &PointCloud<T>,
    gt: &PointCloud<T>,
    config: &MetricConfig,
) -> Result<(PointCloud<T>, PointCloud<T>)> {
    config.validate()?;
    let params = config.graph.cast::<T>();
    Ok((
        extract_hf_points(up, config.hf_m, &params)?.cloud,
        extract_hf_points(gt, config.hf_m, &params)?.cloud,
    ))
}

/// Chamfer distance between the HF subsets of both clouds.
pub fn hf_cd<T: Real>(up: &PointCloud<T>, gt: &PointCloud<T>, config: &MetricConfig) -> Result<T> {
    let (a, b) = hf_pair(up, gt, config)?;
    chamfer(&a, &b)
}

/// Hausdorff distance between the HF subsets of both clouds.
pub fn hf_hd<T: Real>(up: &PointCloud<T>, gt: &PointCloud<T>, config: &MetricConfig) -> Result<T> {
    let (a, b) = hf_pair(up, gt, config)?;
    hausdorff(&a, &b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub reconstruction: f64,
    pub uniform: f64,
    pub identity: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        let (reconstruction, uniform, identity) = protocol::LOSS_WEIGHTS;
        LossWeights {
            reconstruction,
            uniform,
            identity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    pub weights: LossWeights,
    pub solver: Solver,
}

/// Raw and weighted non-adversarial loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub reconstruction: f64,
    pub uniform: f64,
    pub identity: f64,
    pub weights: LossWeights,
    pub total: f64,
}

/// Loss terms on the clouds as given (no normalization). The uniform term
/// uses the expected ball population r·N·r_q² with r = |up| / |ori|.
pub fn loss_report<T: Real>(
    up: &PointCloud<T>,
    gt: &PointCloud<T>,
    original: &PointCloud<T>,
    metric: &MetricConfig,
    loss: &LossConfig,
) -> Result<LossReport> {
    if !up.len().is_multiple_of(original.len()) {
        return Err(Error::SizeMismatch(format!(
            "upsampled size {} is not a multiple of input size {}",
            up.len(),
            original.len()
        )));
    }
    let uni_config = MetricConfig {
        ratio: Some(up.len() / original.len()),
        input_size: Some(original.len()),
        ..*metric
    };
    let reconstruction = reconstruction_loss(up, gt, &loss.solver)?.as_f64();
    let uniform = uniformity(up, &uni_config)?.as_f64();
    let identity = identity_distribution_loss(up, original, &loss.solver)?.as_f64();
    let w = loss.weights;
    Ok(LossReport {
        reconstruction,
        uniform,
        identity,
        weights: w,
        total: w.reconstruction * reconstruction + w.uniform * uniform + w.identity * identity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Cd,
    Hd,
    P2f,
    Uniformity,
    HfCd,
    HfHd,
}

impl Metric {
    /// Also the fixed CSV column order.
    pub const ALL: [Metric; 6] = [
        Metric::Cd,
        Metric::Hd,
        Metric::P2f,
        Metric::Uniformity,
        Metric::HfCd,
        Metric::HfHd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Cd => "cd",
            Metric::Hd => "hd",
            Metric::P2f => "p2f",
            Metric::Uniformity => "uniformity",
            Metric::HfCd => "hf_cd",
            Metric::HfHd => "hf_hd",
        }
    }

    /// Parses a comma-separated list such as `cd,hd,hf_cd`.
    pub fn parse_list(s: &str) -> Result<Vec<Metric>> {
        let mut out: Vec<Metric> = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        out.sort_unstable();
        out.dedup();
        if out.is_empty() {
            return Err(Error::InvalidParameter("no metrics selected".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown metric '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricValues {
    pub cd: Option<f64>,
    pub hd: Option<f64>,
    /// Mean over points.
    pub p2f: Option<f64>,
    pub p2f_max: Option<f64>,
    pub uniformity: Option<f64>,
    pub hf_cd: Option<f64>,
    pub hf_hd: Option<f64>,
}

impl MetricValues {
    pub fn get(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Cd => self.cd,
            Metric::Hd => self.hd,
            Metric::P2f => self.p2f,
            Metric::Uniformity => self.uniformity,
            Metric::HfCd => self.hf_cd,
            Metric::HfHd => self.hf_hd,
        }
    }

    /// Cells in [`Metric::ALL`] order; missing values are empty.
    pub fn csv_cells(&self) -> Vec<String> {
        Metric::ALL
            .iter()
            .map(|&m| self.get(m).map(|v| v.to_string()).unwrap_or_default())
            .collect()
    }
}

pub fn csv_header() -> Vec<&'static str> {
    Metric::ALL.iter().map(|m| m.name()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub schema_version: u32,
    pub values: MetricValues,
    pub config: MetricConfig,
    /// Which metrics were requested.
    pub metrics: Vec<Metric>,
    /// Statistic reported as `p2f`.
    pub p2f_statistic: String,
    /// Input identities (file path, digest, point count), filled by callers.
    pub inputs: BTreeMap<String, serde_json::Value>,
}

impl MetricReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(csv_header()).map_err(csv_error)?;
        w.write_record(self.values.csv_cells()).map_err(csv_error)?;
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    Error::Stream(std::io::Error::other(e))
}

/// Computes the requested metrics after normalizing every input with the
/// ground truth's unit-sphere transform. Each cloud is HF-extracted once.
pub fn evaluate_all<T: Real>(
    up: &PointCloud<T>,
    gt: &PointCloud<T>,
    mesh: Option<&TriangleMesh<T>>,
    config: &MetricConfig,
    which: &[Metric],
) -> Result<MetricReport> {
    config.validate()?;
    let wants = |m| which.contains(&m);
    if wants(Metric::P2f) && mesh.is_none() {
        return Err(Error::InvalidParameter("p2f requires a mesh".into()));
    }
    let (gt_n, transform) = normalize_unit_sphere(gt)?;
    let up_n = transform.apply_cloud(up);
    let mut values = MetricValues::default();

    if wants(Metric::Cd) || wants(Metric::Hd) {
        let (pq, qp) = directed_terms(&up_n, &gt_n);
        if wants(Metric::Cd) {
            values.cd = Some(chamfer_from_terms(&pq, &qp).as_f64());
        }
        if wants(Metric::Hd) {
            values.hd = Some(hausdorff_from_terms(&pq, &qp).as_f64());
        }
    }
    if let (true, Some(mesh)) = (wants(Metric::P2f), mesh) {
        let (mean, max) = point_to_surface(&up_n, &transform.apply_mesh(mesh))?;
        values.p2f = Some(mean.as_f64());
        values.p2f_max = Some(max.as_f64());
    }
    if wants(Metric::Uniformity) {
        values.uniformity = Some(uniformity(&up_n, config)?.as_f64());
    }
    if wants(Metric::HfCd) || wants(Metric::HfHd) {
        let (a, b) = hf_pair(&up_n, &gt_n, config)?;
        let (pq, qp) = directed_terms(&a, &b);
        if wants(Metric::HfCd) {
            values.hf_cd = Some(chamfer_from_terms(&pq, &qp).as_f64());
        }
        if wants(Metric::HfHd) {
            values.hf_hd = Some(hausdorff_from_terms(&pq, &qp).as_f64());
        }
    }
    let mut metrics = which.to_vec();
    metrics.sort_unstable();
    metrics.dedup();
    let mut inputs = BTreeMap::new();
    inputs.insert("up_points".to_string(), up.len().into());
    inputs.insert("gt_points".to_string(), gt.len().into());
    Ok(MetricReport {
        schema_version: SCHEMA_VERSION,
        values,
        config: *config,
        metrics,
        p2f_statistic: "mean".into(),
        inputs,
    })
}
