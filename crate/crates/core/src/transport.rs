//! Equal-size optimal assignment under Euclidean ground cost, and the
//! reconstruction / identity-distribution losses built on it.

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::sampling::{fps, FpsStart};
use crate::scalar::Real;

/// Largest instance accepted by [`exact_emd`].
pub const EXACT_MAX_POINTS: usize = 4096;

/// [`Solver::Auto`] switches from the exact solver to the auction above this.
pub const AUTO_EXACT_LIMIT: usize = 1024;

const UNASSIGNED: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Optimality {
    Exact,
    /// `bound` is n·ε for the last completed ε phase: the plan costs at most
    /// that much above the optimum. `None` when the round cap was hit before
    /// any phase completed and the plan was finished greedily.
    Approximate {
        terminal_epsilon: f64,
        max_rounds: usize,
        capped: bool,
        bound: Option<f64>,
    },
}

/// A bijection `source i -> target mapping[i]` with its total cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AssignmentPlan<T: Real> {
    pub mapping: Vec<usize>,
    pub total_cost: T,
    pub optimality: Optimality,
}

impl<T: Real> AssignmentPlan<T> {
    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    /// Two-column `source,target` CSV with a header row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["source", "target"]).map_err(csv_error)?;
        for (s, t) in self.mapping.iter().enumerate() {
            w.write_record([s.to_string(), t.to_string()])
                .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Stream(std::io::Error::other(e))
}

/// Sum of ‖p_i − q_mapping[i]‖ in source order.
pub fn plan_cost<T: Real>(p: &PointCloud<T>, q: &PointCloud<T>, mapping: &[usize]) -> T {
    mapping
        .iter()
        .enumerate()
        .map(|(i, &j)| p[i].dist(q[j]))
        .fold(T::zero(), |a, b| a + b)
}

fn check_sizes<T: Real>(p: &PointCloud<T>, q: &PointCloud<T>) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::SizeMismatch(format!(
            "assignment needs equal sizes, got {} and {}",
            p.len(),
            q.len()
        )));
    }
    Ok(())
}

struct Costs {
    p: Vec<[f64; 3]>,
    q: Vec<[f64; 3]>,
}

impl Costs {
    fn new<T: Real>(p: &PointCloud<T>, q: &PointCloud<T>) -> Self {
        let conv = |c: &PointCloud<T>| {
            c.iter()
                .map(|x| [x.x.as_f64(), x.y.as_f64(), x.z.as_f64()])
                .collect()
        };
        Costs {
            p: conv(p),
            q: conv(q),
        }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.p[i], self.q[j]);
        let (dx, dy, dz) = (a[0] - b[0], a[1] - b[1], a[2] - b[2]);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Minimum-cost perfect matching by shortest augmenting paths with dual
/// potentials (O(n³)).
pub fn exact_emd<T: Real>(p: &PointCloud<T>, q: &PointCloud<T>) -> Result<AssignmentPlan<T>> {
    check_sizes(p, q)?;
    let n = p.len();
    if n > EXACT_MAX_POINTS {
        return Err(Error::out_of_range(
            "exact EMD size",
            n,
            format!("[1, {EXACT_MAX_POINTS}]"),
        ));
    }
    let c = Costs::new(p, q);
    // 1-based with column 0 as the virtual source of each augmentation.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = c.get(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if !delta.is_finite() {
                return Err(Error::Numerical("assignment potentials diverged".into()));
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        while j0 != 0 {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
        }
    }
    let mut mapping = vec![0; n];
    for j in 1..=n {
        mapping[owner[j] - 1] = j - 1;
    }
    Ok(AssignmentPlan {
        total_cost: plan_cost(p, q, &mapping),
        mapping,
        optimality: Optimality::Exact,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuctionParams {
    /// ε is divided by this between phases.
    pub epsilon_scale: f64,
    /// Final bidding increment; `None` means 1e-7 · max cost / n.
    pub terminal_epsilon: Option<f64>,
    /// Cap on the number of bids; `None` means 1000 · n.
    pub max_rounds: Option<usize>,
}

impl Default for AuctionParams {
    fn default() -> Self {
        AuctionParams {
            epsilon_scale: 4.0,
            terminal_epsilon: None,
            max_rounds: None,
        }
    }
}

/// Forward auction with ε-scaling. The result is always a valid
/// permutation; its cost is within n·ε of the optimum when every phase
/// completed before the round cap.
pub fn approx_emd<T: Real>(
    p: &PointCloud<T>,
    q: &PointCloud<T>,
    params: &AuctionParams,
) -> Result<AssignmentPlan<T>> {
    check_sizes(p, q)?;
    if !(params.epsilon_scale > 1.0 && params.epsilon_scale.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon_scale must exceed 1, got {}",
            params.epsilon_scale
        )));
    }
    if let Some(e) = params.terminal_epsilon {
        if !(e > 0.0 && e.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "terminal epsilon must be positive, got {e}"
            )));
        }
    }
    let n = p.len();
    let c = Costs::new(p, q);
    let mut c_max = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            c_max = c_max.max(c.get(i, j));
        }
    }
    let max_rounds = params.max_rounds.unwrap_or(1000 * n);
    let eps_final = params.terminal_epsilon.unwrap_or(if c_max > 0.0 {
        1e-7 * c_max / n as f64
    } else {
        1e-12
    });

    let mut prices = vec![0.0f64; n];
    let mut eps = (c_max / params.epsilon_scale).max(eps_final);
    let mut rounds = 0usize;
    let mut completed: Option<(Vec<usize>, f64)> = None;
    let mut capped = false;
    let mut assigned = vec![UNASSIGNED; n];

    'phases: loop {
        let mut owner = vec![UNASSIGNED; n];
        assigned.fill(UNASSIGNED);
        let mut queue: VecDeque<usize> = (0..n).collect();
        while let Some(i) = queue.pop_front() {
            if rounds >= max_rounds {
                capped = true;
                queue.push_front(i);
                break 'phases;
            }
            rounds += 1;
            let (mut best_j, mut v1, mut v2) = (0, f64::NEG_INFINITY, f64::NEG_INFINITY);
            for (j, &price) in prices.iter().enumerate() {
                let val = -c.get(i, j) - price;
                if val > v1 {
                    v2 = v1;
                    v1 = val;
                    best_j = j;
                } else if val > v2 {
                    v2 = val;
                }
            }
            let increment = if v2.is_finite() { v1 - v2 + eps } else { eps };
            prices[best_j] += increment;
            let prev = owner[best_j];
            if prev != UNASSIGNED {
                assigned[prev] = UNASSIGNED;
                queue.push_back(prev);
            }
            owner[best_j] = i;
            assigned[i] = best_j;
        }
        completed = Some((assigned.clone(), eps));
        if eps <= eps_final {
            break;
        }
        eps = (eps / params.epsilon_scale).max(eps_final);
    }

    let (mapping, bound) = match completed {
        Some((m, e)) => (m, Some(n as f64 * e)),
        None => (greedy_complete(&c, assigned), None),
    };
    Ok(AssignmentPlan {
        total_cost: plan_cost(p, q, &mapping),
        mapping,
        optimality: Optimality::Approximate {
            terminal_epsilon: eps_final,
            max_rounds,
            capped,
            bound,
        },
    })
}

/// Assigns every unassigned source, in index order, to its cheapest free
/// target.
fn greedy_complete(c: &Costs, mut assigned: Vec<usize>) -> Vec<usize> {
    let n = assigned.len();
    let mut taken = vec![false; n];
    for &j in &assigned {
        if j != UNASSIGNED {
            taken[j] = true;
        }
    }
    for (i, slot) in assigned.iter_mut().enumerate() {
        if *slot != UNASSIGNED {
            continue;
        }
        let j = (0..n)
            .filter(|&j| !taken[j])
            .min_by(|&a, &b| c.get(i, a).total_cmp(&c.get(i, b)).then(a.cmp(&b)))
            .expect("a free target remains");
        taken[j] = true;
        *slot = j;
    }
    assigned
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Solver {
    Exact,
    Auction(AuctionParams),
    /// Exact up to [`AUTO_EXACT_LIMIT`] points, default auction above.
    #[default]
    Auto,
}

impl Solver {
    pub fn solve<T: Real>(
        &self,
        p: &PointCloud<T>,
        q: &PointCloud<T>,
    ) -> Result<AssignmentPlan<T>> {
        match self {
            Solver::Exact => exact_emd(p, q),
            Solver::Auction(params) => approx_emd(p, q, params),
            Solver::Auto if p.len() <= AUTO_EXACT_LIMIT => exact_emd(p, q),
            Solver::Auto => approx_emd(p, q, &AuctionParams::default()),
        }
    }
}

/// Total assignment cost between the upsampled and target clouds.
pub fn reconstruction_loss<T: Real>(
    up: &PointCloud<T>,
    target: &PointCloud<T>,
    solver: &Solver,
) -> Result<T> {
    Ok(solver.solve(up, target)?.total_cost)
}

/// FPS-downsamples `up` to the size of `original` (farthest-from-centroid
/// start) and returns the assignment cost between the two.
pub fn identity_distribution_loss<T: Real>(
    up: &PointCloud<T>,
    original: &PointCloud<T>,
    solver: &Solver,
) -> Result<T> {
    let n = original.len();
    if !up.len().is_multiple_of(n) {
        return Err(Error::SizeMismatch(format!(
            "upsampled size {} is not a multiple of {}",
            up.len(),
            n
        )));
    }
    let picked = up.select(&fps(up, n, FpsStart::FarthestFromCentroid)?)?;
    reconstruction_loss(&picked, original, solver)
}
