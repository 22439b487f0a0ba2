//! ε-ball neighborhood graphs, polynomial graph filters, per-point
//! variation scores and high-frequency point extraction.
//!
//! The shift operator is the Gaussian-weighted ε-ball adjacency with each
//! row normalized to sum to one, so applying it replaces a node's signal by
//! a weighted average of its neighbors. The Haar-like high-pass filter
//! `I - A` then measures how far each point sits from that average.

mod denoise;
mod spectral;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};
use crate::scalar::Real;
use crate::spatial::KdTree;

pub use denoise::{denoise_patch, DenoisePolicy, Denoised};
pub use spectral::{graph_spectrum, spectral_reference_filter, GraphSpectrum, SPECTRAL_MAX_NODES};

pub use crate::protocol::EPSILON as DEFAULT_EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", from = "PartialGraphParams<T>")]
pub struct GraphParams<T: Real> {
    /// Edges connect points strictly closer than this.
    pub epsilon: T,
    /// Gaussian kernel width.
    pub sigma: T,
    /// Neighbors used for a node with nothing inside the ε-ball.
    pub fallback_k: usize,
}

/// Serialized form; omitted fields take their defaults, and an omitted
/// `sigma` follows `epsilon`.
#[derive(Deserialize)]
#[serde(bound = "", deny_unknown_fields)]
struct PartialGraphParams<T: Real> {
    epsilon: Option<T>,
    sigma: Option<T>,
    fallback_k: Option<usize>,
}

impl<T: Real> From<PartialGraphParams<T>> for GraphParams<T> {
    fn from(p: PartialGraphParams<T>) -> Self {
        let mut params = Self::with_epsilon(p.epsilon.unwrap_or(T::lit(DEFAULT_EPSILON)));
        if let Some(sigma) = p.sigma {
            params.sigma = sigma;
        }
        if let Some(k) = p.fallback_k {
            params.fallback_k = k;
        }
        params
    }
}

impl<T: Real> Default for GraphParams<T> {
    fn default() -> Self {
        Self::with_epsilon(T::lit(DEFAULT_EPSILON))
    }
}

impl<T: Real> GraphParams<T> {
    /// `sigma` defaults to half the radius.
    pub fn with_epsilon(epsilon: T) -> Self {
        Self {
            epsilon,
            sigma: epsilon * T::lit(0.5),
            fallback_k: 1,
        }
    }

    pub fn cast<U: Real>(&self) -> GraphParams<U> {
        GraphParams {
            epsilon: U::lit(self.epsilon.as_f64()),
            sigma: U::lit(self.sigma.as_f64()),
            fallback_k: self.fallback_k,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > T::zero() && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.sigma > T::zero() && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.fallback_k == 0 {
            return Err(Error::InvalidParameter(
                "fallback_k must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Row-normalized sparse adjacency in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodGraph<T> {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<T>,
    /// ln of each row's raw Gaussian weight sum, kept for the spectral oracle.
    log_mass: Vec<f64>,
}

impl<T: Real> NeighborhoodGraph<T> {
    /// Number of nodes K.
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len()
    }

    /// Neighbor indices (ascending) and their normalized weights.
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.neighbors[r.clone()], &self.weights[r])
    }

    pub(crate) fn log_mass(&self) -> &[f64] {
        &self.log_mass
    }

    /// Dense copy of the shift operator (row-major), for small graphs.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let k = self.len();
        let mut m = vec![vec![T::zero(); k]; k];
        for (i, row) in m.iter_mut().enumerate() {
            let (nb, w) = self.row(i);
            for (&j, &wij) in nb.iter().zip(w) {
                row[j] = wij;
            }
        }
        m
    }
}

/// Builds the ε-ball graph with Gaussian weights `exp(-d²/(2σ²))`,
/// row-normalized. Nodes with no neighbor inside the ball connect to their
/// `fallback_k` nearest points instead.
pub fn build_graph<T: Real>(
    cloud: &PointCloud<T>,
    params: &GraphParams<T>,
) -> Result<NeighborhoodGraph<T>> {
    params.validate()?;
    let n = cloud.len();
    if n < 2 {
        return Err(Error::out_of_range("graph node count", n, "[2, inf)"));
    }
    let tree = KdTree::from_cloud(cloud);
    let eps_sq = params.epsilon * params.epsilon;
    let two_sigma_sq = T::lit(2.0) * params.sigma * params.sigma;
    let fallback = params.fallback_k.min(n - 1);

    let rows: Vec<(Vec<usize>, Vec<T>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = cloud[i];
            let mut nb: Vec<(usize, T)> = tree
                .within(x, eps_sq, false)
                .into_iter()
                .filter(|c| c.index != i)
                .map(|c| (c.index, c.dist_sq))
                .collect();
            if nb.is_empty() {
                nb = tree
                    .knn(x, fallback + 1)
                    .expect("k within range")
                    .into_iter()
                    .filter(|c| c.index != i)
                    .take(fallback)
                    .map(|c| (c.index, c.dist_sq))
                    .collect();
            }
            nb.sort_unstable_by_key(|&(j, _)| j);
            // weights relative to the closest neighbor so long fallback
            // edges do not underflow to zero
            let d_min = nb.iter().map(|&(_, d)| d).fold(T::infinity(), T::min);
            let raw: Vec<T> = nb
                .iter()
                .map(|&(_, d)| (-(d - d_min) / two_sigma_sq).exp())
                .collect();
            let total: T = raw.iter().copied().sum();
            let log_mass = (-d_min / two_sigma_sq).as_f64() + total.as_f64().ln();
            let (idx, w): (Vec<usize>, Vec<T>) = nb
                .iter()
                .zip(&raw)
                .map(|(&(j, _), &r)| (j, r / total))
                .filter(|&(_, w)| w > T::zero())
                .unzip();
            (idx, w, log_mass)
        })
        .collect();

    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    let mut neighbors = Vec::new();
    let mut weights = Vec::new();
    let mut log_mass = Vec::with_capacity(n);
    for (idx, w, lm) in rows {
        neighbors.extend(idx);
        weights.extend(w);
        offsets.push(neighbors.len());
        log_mass.push(lm);
    }
    Ok(NeighborhoodGraph {
        offsets,
        neighbors,
        weights,
        log_mass,
    })
}

/// A value carried per node by a graph signal.
pub trait SignalValue<T>: Copy + Send + Sync {
    const DIM: usize;
    fn zero() -> Self;
    /// `self + w * other`
    fn add_scaled(self, w: T, other: Self) -> Self;
    fn component(&self, k: usize) -> T;
    fn from_components(c: &[T]) -> Self;
}

macro_rules! scalar_signal {
    ($t:ty) => {
        impl SignalValue<$t> for $t {
            const DIM: usize = 1;
            #[inline]
            fn zero() -> Self {
                0.0
            }
            #[inline]
            fn add_scaled(self, w: $t, other: Self) -> Self {
                self + w * other
            }
            fn component(&self, _k: usize) -> $t {
                *self
            }
            fn from_components(c: &[$t]) -> Self {
                c[0]
            }
        }
    };
}

scalar_signal!(f32);
scalar_signal!(f64);

impl<T: Real> SignalValue<T> for Point3<T> {
    const DIM: usize = 3;
    #[inline]
    fn zero() -> Self {
        Point3::zero()
    }
    #[inline]
    fn add_scaled(self, w: T, other: Self) -> Self {
        self + other * w
    }
    fn component(&self, k: usize) -> T {
        self[k]
    }
    fn from_components(c: &[T]) -> Self {
        Point3::new(c[0], c[1], c[2])
    }
}

fn check_len<T: Real, S>(graph: &NeighborhoodGraph<T>, signal: &[S]) -> Result<()> {
    if signal.len() != graph.len() {
        return Err(Error::SizeMismatch(format!(
            "signal has {} entries, graph has {} nodes",
            signal.len(),
            graph.len()
        )));
    }
    Ok(())
}

/// `y = A s`.
pub fn apply_shift<T: Real, S: SignalValue<T>>(
    graph: &NeighborhoodGraph<T>,
    signal: &[S],
) -> Result<Vec<S>> {
    check_len(graph, signal)?;
    Ok(shift_unchecked(graph, signal))
}

fn shift_unchecked<T: Real, S: SignalValue<T>>(
    graph: &NeighborhoodGraph<T>,
    signal: &[S],
) -> Vec<S> {
    (0..graph.len())
        .into_par_iter()
        .map(|i| {
            let (nb, w) = graph.row(i);
            nb.iter()
                .zip(w)
                .fold(S::zero(), |acc, (&j, &wij)| acc.add_scaled(wij, signal[j]))
        })
        .collect()
}

/// Coefficients `h_0 .. h_{L-1}` of a polynomial in the shift operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FilterTaps<T: Real>(Vec<T>);

impl<T: Real> FilterTaps<T> {
    pub fn new(taps: Vec<T>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidParameter(
                "filter needs at least one tap".into(),
            ));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter("filter taps must be finite".into()));
        }
        Ok(Self(taps))
    }

    pub fn identity() -> Self {
        Self(vec![T::one()])
    }

    /// `I - A`
    pub fn haar_highpass() -> Self {
        Self(vec![T::one(), -T::one()])
    }

    pub fn coefficients(&self) -> &[T] {
        &self.0
    }

    /// `H(λ) = Σ h_l λ^l`
    pub fn response(&self, lambda: T) -> T {
        self.0
            .iter()
            .rev()
            .fold(T::zero(), |acc, &h| acc * lambda + h)
    }
}

/// `Σ_l h_l A^l s`, evaluated with `L-1` successive shifts.
pub fn apply_polynomial_filter<T: Real, S: SignalValue<T>>(
    graph: &NeighborhoodGraph<T>,
    taps: &FilterTaps<T>,
    signal: &[S],
) -> Result<Vec<S>> {
    check_len(graph, signal)?;
    let h = taps.coefficients();
    let mut out: Vec<S> = signal
        .iter()
        .map(|&s| S::zero().add_scaled(h[0], s))
        .collect();
    let mut current = signal.to_vec();
    for &hl in &h[1..] {
        current = shift_unchecked(graph, &current);
        for (o, &c) in out.iter_mut().zip(&current) {
            *o = o.add_scaled(hl, c);
        }
    }
    Ok(out)
}

/// Per-point response of `I - A`: each point minus its weighted neighbor
/// average.
pub fn highpass_response<T: Real>(
    graph: &NeighborhoodGraph<T>,
    cloud: &PointCloud<T>,
) -> Result<Vec<Point3<T>>> {
    apply_polynomial_filter(graph, &FilterTaps::haar_highpass(), cloud.points())
}

/// Non-negative per-point variation amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationScores<T>(pub Vec<T>);

impl<T: Real> VariationScores<T> {
    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Indices ordered by descending score, ties by lowest index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.0.len()).collect();
        idx.sort_by(|&a, &b| {
            self.0[b]
                .partial_cmp(&self.0[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        idx
    }
}

pub fn variation_scores<T: Real>(residuals: &[Point3<T>]) -> VariationScores<T> {
    VariationScores(residuals.iter().map(|r| r.norm()).collect())
}

/// Builds the graph over `cloud` and returns its variation scores.
pub fn score_cloud<T: Real>(
    cloud: &PointCloud<T>,
    params: &GraphParams<T>,
) -> Result<VariationScores<T>> {
    let graph = build_graph(cloud, params)?;
    Ok(variation_scores(&highpass_response(&graph, cloud)?))
}

/// Top-M high-frequency points.
#[derive(Debug, Clone, PartialEq)]
pub struct HfExtraction<T> {
    /// Selected indices in descending score order.
    pub indices: Vec<usize>,
    /// Scores of the selected points, non-increasing.
    pub scores: Vec<T>,
    /// The selected points, same order as `indices`.
    pub cloud: PointCloud<T>,
}

pub fn extract_hf_points<T: Real>(
    cloud: &PointCloud<T>,
    m: usize,
    params: &GraphParams<T>,
) -> Result<HfExtraction<T>> {
    if m == 0 || m > cloud.len() {
        return Err(Error::out_of_range("M", m, format!("[1, {}]", cloud.len())));
    }
    let scores = score_cloud(cloud, params)?;
    let mut indices = scores.ranking();
    indices.truncate(m);
    Ok(HfExtraction {
        scores: indices.iter().map(|&i| scores.0[i]).collect(),
        cloud: cloud.select(&indices)?,
        indices,
    })
}
