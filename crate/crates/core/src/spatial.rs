//! k-d tree over a point set with exact k-nearest and radius queries.
//!
//! Results are identical to an exhaustive scan: candidates are ordered by
//! `(squared distance, index)` and subtrees are only pruned when their lower
//! bound is strictly worse than the current k-th candidate.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};
use crate::scalar::Real;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node<T> {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: T,
        left: usize,
        right: usize,
    },
}

/// Immutable acceleration structure; safe to query from many threads.
#[derive(Debug, Clone)]
pub struct KdTree<T> {
    points: Vec<Point3<T>>,
    order: Vec<usize>,
    nodes: Vec<Node<T>>,
}

/// A neighbor found by a query: point index and squared distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor<T> {
    pub index: usize,
    pub dist_sq: T,
}

impl<T: Real> Eq for Neighbor<T> {}

impl<T: Real> Ord for Neighbor<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist_sq
            .partial_cmp(&other.dist_sq)
            .unwrap_or(Ordering::Equal)
            .then(self.index.cmp(&other.index))
    }
}

impl<T: Real> PartialOrd for Neighbor<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> KdTree<T> {
    pub fn from_cloud(cloud: &PointCloud<T>) -> Self {
        Self::new(cloud.points().to_vec())
    }

    pub fn new(points: Vec<Point3<T>>) -> Self {
        let mut tree = Self {
            order: (0..points.len()).collect(),
            points,
            nodes: Vec::new(),
        };
        if !tree.points.is_empty() {
            tree.build(0, tree.points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3<T>] {
        &self.points
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        // split on the axis of largest extent
        let (mut lo, mut hi) = (
            self.points[self.order[start]],
            self.points[self.order[start]],
        );
        for &i in &self.order[start..end] {
            lo = lo.min_by_component(self.points[i]);
            hi = hi.max_by_component(self.points[i]);
        }
        let ext = hi - lo;
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a]
                .axis(axis)
                .partial_cmp(&points[b].axis(axis))
                .unwrap_or(Ordering::Equal)
        });
        let value = self.points[self.order[mid]].axis(axis);
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// The `k` nearest points, ascending by distance with ties by index.
    pub fn knn(&self, query: Point3<T>, k: usize) -> Result<Vec<Neighbor<T>>> {
        if k == 0 || k > self.points.len() {
            return Err(Error::out_of_range(
                "k",
                k,
                format!("[1, {}]", self.points.len()),
            ));
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.knn_rec(0, query, k, &mut heap);
        Ok(heap.into_sorted_vec())
    }

    pub fn knn_indices(&self, query: Point3<T>, k: usize) -> Result<Vec<usize>> {
        Ok(self.knn(query, k)?.into_iter().map(|n| n.index).collect())
    }

    fn knn_rec(&self, node: usize, q: Point3<T>, k: usize, heap: &mut BinaryHeap<Neighbor<T>>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let cand = Neighbor {
                        index: i,
                        dist_sq: q.dist_sq(self.points[i]),
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q.axis(axis) - value;
                let (near, far) = if diff < T::zero() {
                    (left, right)
                } else {
                    (right, left)
                };
                self.knn_rec(near, q, k, heap);
                if heap.len() < k || diff * diff <= heap.peek().unwrap().dist_sq {
                    self.knn_rec(far, q, k, heap);
                }
            }
        }
    }

    /// Single nearest neighbor (lowest index among ties).
    pub fn nearest(&self, query: Point3<T>) -> Neighbor<T> {
        assert!(!self.points.is_empty(), "nearest on empty tree");
        let mut best = Neighbor {
            index: usize::MAX,
            dist_sq: T::infinity(),
        };
        self.nearest_rec(0, query, &mut best);
        best
    }

    fn nearest_rec(&self, node: usize, q: Point3<T>, best: &mut Neighbor<T>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let cand = Neighbor {
                        index: i,
                        dist_sq: q.dist_sq(self.points[i]),
                    };
                    if cand < *best {
                        *best = cand;
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q.axis(axis) - value;
                let (near, far) = if diff < T::zero() {
                    (left, right)
                } else {
                    (right, left)
                };
                self.nearest_rec(near, q, best);
                if diff * diff <= best.dist_sq {
                    self.nearest_rec(far, q, best);
                }
            }
        }
    }

    /// Indices with distance ≤ `radius`, ascending by index.
    pub fn radius_query(&self, center: Point3<T>, radius: T) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .within(center, radius * radius, true)
            .into_iter()
            .map(|n| n.index)
            .collect();
        out.sort_unstable();
        out
    }

    /// Every point with squared distance ≤ `radius_sq` (or `<` when
    /// `inclusive` is false), in unspecified order.
    pub fn within(&self, center: Point3<T>, radius_sq: T, inclusive: bool) -> Vec<Neighbor<T>> {
        let mut out = Vec::new();
        if !self.points.is_empty() {
            self.within_rec(0, center, radius_sq, inclusive, &mut out);
        }
        out
    }

    fn within_rec(
        &self,
        node: usize,
        q: Point3<T>,
        r_sq: T,
        inclusive: bool,
        out: &mut Vec<Neighbor<T>>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d = q.dist_sq(self.points[i]);
                    if d < r_sq || (inclusive && d == r_sq) {
                        out.push(Neighbor {
                            index: i,
                            dist_sq: d,
                        });
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q.axis(axis) - value;
                let d = diff * diff;
                let (near, far) = if diff < T::zero() {
                    (left, right)
                } else {
                    (right, left)
                };
                self.within_rec(near, q, r_sq, inclusive, out);
                if d < r_sq || (inclusive && d == r_sq) {
                    self.within_rec(far, q, r_sq, inclusive, out);
                }
            }
        }
    }
}
