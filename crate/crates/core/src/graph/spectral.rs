//! Graph-Fourier reference path: `V · diag(H(λ)) · V⁻¹ · s`.
//!
//! The row-normalized shift `A = D⁻¹W` is similar to the symmetric matrix
//! `D^½ A D^-½` whenever the raw weights `W` are symmetric, so its
//! eigenvalues are real and the eigenbasis comes from a symmetric solver.
//! Graphs with one-directional fallback edges are not reversible and are
//! rejected. Dense and O(K³); meant as a test oracle only.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{FilterTaps, NeighborhoodGraph, SignalValue};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const SPECTRAL_MAX_NODES: usize = 1024;

const SYMMETRY_TOLERANCE: f64 = 1e-9;
const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// Eigen-decomposition of the shift operator, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct GraphSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors of `A`.
    pub basis: DMatrix<f64>,
    /// The graph Fourier transform `V⁻¹`.
    pub gft: DMatrix<f64>,
    /// `‖A V − V Λ‖_F / ‖A‖_F`
    pub residual: f64,
}

pub fn graph_spectrum<T: Real>(graph: &NeighborhoodGraph<T>) -> Result<GraphSpectrum> {
    let k = graph.len();
    if k > SPECTRAL_MAX_NODES {
        return Err(Error::out_of_range(
            "spectral node count",
            k,
            format!("[1, {SPECTRAL_MAX_NODES}]"),
        ));
    }
    let mut a = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        let (nb, w) = graph.row(i);
        for (&j, &wij) in nb.iter().zip(w) {
            a[(i, j)] = wij.as_f64();
        }
    }
    let lm = graph.log_mass();
    let shift = lm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let half_sqrt: Vec<f64> = lm.iter().map(|&l| (0.5 * (l - shift)).exp()).collect();

    let mut s = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            s[(i, j)] = half_sqrt[i] * a[(i, j)] / half_sqrt[j];
        }
    }
    let scale = s.amax().max(f64::MIN_POSITIVE);
    let asym = (&s - s.transpose()).amax() / scale;
    if asym > SYMMETRY_TOLERANCE {
        return Err(Error::Numerical(format!(
            "shift operator is not reversible (relative asymmetry {asym:.3e}); \
             the graph has one-directional edges"
        )));
    }
    let s = (&s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(s);

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| {
        eig.eigenvalues[y]
            .partial_cmp(&eig.eigenvalues[x])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.cmp(&y))
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&c| eig.eigenvalues[c]).collect();
    let mut basis = DMatrix::<f64>::zeros(k, k);
    let mut gft = DMatrix::<f64>::zeros(k, k);
    for (col, &c) in order.iter().enumerate() {
        for i in 0..k {
            let u = eig.eigenvectors[(i, c)];
            basis[(i, col)] = u / half_sqrt[i];
            gft[(col, i)] = u * half_sqrt[i];
        }
    }

    let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eigenvalues.clone()));
    let residual = (&a * &basis - &basis * lambda).norm() / a.norm().max(f64::MIN_POSITIVE);
    if !(residual <= RESIDUAL_TOLERANCE) {
        return Err(Error::Numerical(format!(
            "eigendecomposition is numerically defective: residual {residual:.3e}"
        )));
    }
    Ok(GraphSpectrum {
        eigenvalues,
        basis,
        gft,
        residual,
    })
}

/// Filters `signal` in the graph Fourier domain. Agrees with
/// [`super::apply_polynomial_filter`] up to rounding.
pub fn spectral_reference_filter<T: Real, S: SignalValue<T>>(
    graph: &NeighborhoodGraph<T>,
    taps: &FilterTaps<T>,
    signal: &[S],
) -> Result<Vec<S>> {
    let k = graph.len();
    if signal.len() != k {
        return Err(Error::SizeMismatch(format!(
            "signal has {} entries, graph has {k} nodes",
            signal.len()
        )));
    }
    let spectrum = graph_spectrum(graph)?;
    let h: Vec<f64> = taps.coefficients().iter().map(|c| c.as_f64()).collect();
    let response: Vec<f64> = spectrum
        .eigenvalues
        .iter()
        .map(|&l| h.iter().rev().fold(0.0, |acc, &c| acc * l + c))
        .collect();

    let dim = S::DIM;
    let sig = DMatrix::<f64>::from_fn(k, dim, |i, c| signal[i].component(c).as_f64());
    let mut spectral = &spectrum.gft * sig;
    for (row, &r) in response.iter().enumerate() {
        for c in 0..dim {
            spectral[(row, c)] *= r;
        }
    }
    let out = &spectrum.basis * spectral;
    Ok((0..k)
        .map(|i| {
            let comps: Vec<T> = (0..dim).map(|c| T::lit(out[(i, c)])).collect();
            S::from_components(&comps)
        })
        .collect())
}
