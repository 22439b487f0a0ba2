//! Bounding-volume hierarchy over mesh triangles for closest-point queries.

use crate::geometry::{closest_point_on_triangle, Point3, TriangleMesh};
use crate::scalar::Real;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy)]
struct Aabb<T> {
    min: Point3<T>,
    max: Point3<T>,
}

impl<T: Real> Aabb<T> {
    fn of(points: &[Point3<T>]) -> Self {
        let mut b = Aabb {
            min: points[0],
            max: points[0],
        };
        for &p in &points[1..] {
            b.min = b.min.min_by_component(p);
            b.max = b.max.max_by_component(p);
        }
        b
    }

    fn union(self, o: Self) -> Self {
        Aabb {
            min: self.min.min_by_component(o.min),
            max: self.max.max_by_component(o.max),
        }
    }

    fn dist_sq(&self, p: Point3<T>) -> T {
        let mut d = T::zero();
        for axis in 0..3 {
            let v = p.axis(axis);
            let lo = self.min.axis(axis);
            let hi = self.max.axis(axis);
            let e = if v < lo {
                lo - v
            } else if v > hi {
                v - hi
            } else {
                T::zero()
            };
            d += e * e;
        }
        d
    }
}

#[derive(Debug, Clone)]
enum Node<T> {
    Leaf {
        bounds: Aabb<T>,
        start: usize,
        end: usize,
    },
    Inner {
        bounds: Aabb<T>,
        left: usize,
        right: usize,
    },
}

impl<T: Real> Node<T> {
    fn bounds(&self) -> &Aabb<T> {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Result of a closest-point query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceHit<T> {
    pub triangle: usize,
    pub point: Point3<T>,
    pub dist_sq: T,
}

#[derive(Debug, Clone)]
pub struct TriangleBvh<T> {
    corners: Vec<[Point3<T>; 3]>,
    order: Vec<usize>,
    nodes: Vec<Node<T>>,
}

impl<T: Real> TriangleBvh<T> {
    pub fn new(mesh: &TriangleMesh<T>) -> Self {
        let corners: Vec<_> = (0..mesh.triangles().len())
            .map(|t| mesh.corners(t))
            .collect();
        let boxes: Vec<_> = corners.iter().map(|c| Aabb::of(c)).collect();
        let centres: Vec<_> = corners
            .iter()
            .map(|c| (c[0] + c[1] + c[2]) / T::lit(3.0))
            .collect();
        let mut bvh = TriangleBvh {
            corners,
            order: (0..boxes.len()).collect(),
            nodes: Vec::new(),
        };
        if !boxes.is_empty() {
            bvh.build(&boxes, &centres, 0, boxes.len());
        }
        bvh
    }

    fn build(
        &mut self,
        boxes: &[Aabb<T>],
        centres: &[Point3<T>],
        start: usize,
        end: usize,
    ) -> usize {
        let bounds = self.order[start..end]
            .iter()
            .map(|&t| boxes[t])
            .reduce(Aabb::union)
            .expect("non-empty range");
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { bounds, start, end });
            return id;
        }
        self.nodes.push(Node::Leaf { bounds, start, end });
        let c = Aabb::of(
            &self.order[start..end]
                .iter()
                .map(|&t| centres[t])
                .collect::<Vec<_>>(),
        );
        let ext = c.max - c.min;
        let axis = (0..3)
            .max_by(|&a, &b| {
                ext.axis(a)
                    .partial_cmp(&ext.axis(b))
                    .unwrap()
                    .then(b.cmp(&a))
            })
            .unwrap();
        let mid = (start + end) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centres[a]
                .axis(axis)
                .partial_cmp(&centres[b].axis(axis))
                .unwrap()
                .then(a.cmp(&b))
        });
        let left = self.build(boxes, centres, start, mid);
        let right = self.build(boxes, centres, mid, end);
        self.nodes[id] = Node::Inner {
            bounds,
            left,
            right,
        };
        id
    }

    pub fn triangle_count(&self) -> usize {
        self.corners.len()
    }

    /// Closest surface point to `q`; `None` only for an empty hierarchy.
    pub fn closest(&self, q: Point3<T>) -> Option<SurfaceHit<T>> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<SurfaceHit<T>> = None;
        let mut stack = vec![(self.nodes[0].bounds().dist_sq(q), 0usize)];
        while let Some((bound, id)) = stack.pop() {
            if best.is_some_and(|b| bound > b.dist_sq) {
                continue;
            }
            match &self.nodes[id] {
                Node::Leaf { start, end, .. } => {
                    for &t in &self.order[*start..*end] {
                        let [a, b, c] = self.corners[t];
                        let point = closest_point_on_triangle(q, a, b, c);
                        let dist_sq = q.dist_sq(point);
                        let better = match best {
                            None => true,
                            Some(h) => {
                                dist_sq < h.dist_sq || (dist_sq == h.dist_sq && t < h.triangle)
                            }
                        };
                        if better {
                            best = Some(SurfaceHit {
                                triangle: t,
                                point,
                                dist_sq,
                            });
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[*left].bounds().dist_sq(q);
                    let dr = self.nodes[*right].bounds().dist_sq(q);
                    // Nearer child goes on top of the stack.
                    if dl <= dr {
                        stack.push((dr, *right));
                        stack.push((dl, *left));
                    } else {
                        stack.push((dl, *left));
                        stack.push((dr, *right));
                    }
                }
            }
        }
        best
    }

    pub fn distance(&self, q: Point3<T>) -> Option<T> {
        self.closest(q).map(|h| h.dist_sq.sqrt())
    }
}
