//! Points, clouds, meshes and the unit-sphere normalization.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Point3<T> {
    #[inline]
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn from_f64(x: f64, y: f64, z: f64) -> Self {
        Self::new(T::lit(x), T::lit(y), T::lit(z))
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_sq().sqrt()
    }

    /// Squared Euclidean distance; every nearest-neighbor routine compares
    /// this exact expression so accelerated and exhaustive searches agree
    /// bit for bit.
    #[inline]
    pub fn dist_sq(self, o: Self) -> T {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        let dz = self.z - o.z;
        dx * dx + dy * dy + dz * dz
    }

    #[inline]
    pub fn dist(self, o: Self) -> T {
        self.dist_sq(o).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    #[inline]
    pub fn axis(self, axis: usize) -> T {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    pub fn lerp(self, o: Self, t: T) -> Self {
        self + (o - self) * t
    }

    pub fn min_by_component(self, o: Self) -> Self {
        Self::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max_by_component(self, o: Self) -> Self {
        Self::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn cast<U: Real>(self) -> Point3<U> {
        Point3::new(
            U::lit(self.x.as_f64()),
            U::lit(self.y.as_f64()),
            U::lit(self.z.as_f64()),
        )
    }
}

impl<T: Real> Index<usize> for Point3<T> {
    type Output = T;
    fn index(&self, axis: usize) -> &T {
        match axis {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("axis {axis} out of range"),
        }
    }
}

impl<T: Real> Add for Point3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Point3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Neg for Point3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> Mul<T> for Point3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Div<T> for Point3<T> {
    type Output = Self;
    #[inline]
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

impl<T: Real> AddAssign for Point3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> SubAssign for Point3<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Real> From<[T; 3]> for Point3<T> {
    fn from(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl<T: Real> From<Point3<T>> for [T; 3] {
    fn from(p: Point3<T>) -> Self {
        [p.x, p.y, p.z]
    }
}

/// Ordered, non-empty collection of finite points. Indices are identities.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<T> {
    points: Vec<Point3<T>>,
}

impl<T: Real> PointCloud<T> {
    pub fn new(points: Vec<Point3<T>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("point cloud"));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { points })
    }

    pub fn from_f64_triples(triples: &[[f64; 3]]) -> Result<Self> {
        Self::new(
            triples
                .iter()
                .map(|t| Point3::from_f64(t[0], t[1], t[2]))
                .collect(),
        )
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; kept for API symmetry with slices.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn points(&self) -> &[Point3<T>] {
        &self.points
    }

    #[inline]
    pub fn get(&self, i: usize) -> Point3<T> {
        self.points[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point3<T>> {
        self.points.iter()
    }

    pub fn into_points(self) -> Vec<Point3<T>> {
        self.points
    }

    /// Points at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| self.points[i]).collect())
    }

    /// Mean of all points, accumulated in index order.
    pub fn centroid(&self) -> Point3<T> {
        let mut acc = Point3::zero();
        for p in &self.points {
            acc += *p;
        }
        acc / T::from_usize(self.points.len()).unwrap()
    }

    pub fn map(&self, f: impl Fn(Point3<T>) -> Point3<T>) -> Result<Self> {
        Self::new(self.points.iter().map(|&p| f(p)).collect())
    }

    pub fn concat(parts: &[Self]) -> Result<Self> {
        Self::new(
            parts
                .iter()
                .flat_map(|c| c.points.iter().copied())
                .collect(),
        )
    }

    pub fn cast<U: Real>(&self) -> PointCloud<U> {
        PointCloud {
            points: self.points.iter().map(|p| p.cast()).collect(),
        }
    }
}

impl<T> Index<usize> for PointCloud<T> {
    type Output = Point3<T>;
    fn index(&self, i: usize) -> &Point3<T> {
        &self.points[i]
    }
}

impl<'a, T> IntoIterator for &'a PointCloud<T> {
    type Item = &'a Point3<T>;
    type IntoIter = std::slice::Iter<'a, Point3<T>>;
    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh<T> {
    vertices: Vec<Point3<T>>,
    triangles: Vec<[usize; 3]>,
}

impl<T: Real> TriangleMesh<T> {
    pub fn new(vertices: Vec<Point3<T>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let n = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::out_of_range(
                    "triangle vertex index",
                    format!("{tri:?} (triangle {t})"),
                    format!("[0, {n})"),
                ));
            }
        }
        Ok(Self {
            vertices,
            triangles,
        })
    }

    pub fn vertices(&self) -> &[Point3<T>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    #[inline]
    pub fn corners(&self, t: usize) -> [Point3<T>; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> T {
        let [a, b, c] = self.corners(t);
        (b - a).cross(c - a).norm() * T::lit(0.5)
    }

    pub fn area(&self) -> T {
        (0..self.triangles.len())
            .map(|t| self.triangle_area(t))
            .sum()
    }

    pub fn map_vertices(&self, f: impl Fn(Point3<T>) -> Point3<T>) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&p| f(p)).collect(),
            triangles: self.triangles.clone(),
        }
    }
}

/// `normalized = (p - centroid) / scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationTransform<T> {
    pub centroid: Point3<T>,
    pub scale: T,
}

impl<T: Real> NormalizationTransform<T> {
    pub fn identity() -> Self {
        Self {
            centroid: Point3::zero(),
            scale: T::one(),
        }
    }

    #[inline]
    pub fn apply(&self, p: Point3<T>) -> Point3<T> {
        (p - self.centroid) / self.scale
    }

    #[inline]
    pub fn invert(&self, p: Point3<T>) -> Point3<T> {
        p * self.scale + self.centroid
    }

    pub fn apply_cloud(&self, cloud: &PointCloud<T>) -> PointCloud<T> {
        PointCloud {
            points: cloud.points.iter().map(|&p| self.apply(p)).collect(),
        }
    }

    pub fn invert_cloud(&self, cloud: &PointCloud<T>) -> PointCloud<T> {
        PointCloud {
            points: cloud.points.iter().map(|&p| self.invert(p)).collect(),
        }
    }

    pub fn apply_mesh(&self, mesh: &TriangleMesh<T>) -> TriangleMesh<T> {
        mesh.map_vertices(|p| self.apply(p))
    }
}

/// Centers the cloud on its centroid and scales it so the farthest point
/// sits at distance 1.
pub fn normalize_unit_sphere<T: Real>(
    cloud: &PointCloud<T>,
) -> Result<(PointCloud<T>, NormalizationTransform<T>)> {
    let centroid = cloud.centroid();
    let scale = cloud
        .iter()
        .map(|p| p.dist(centroid))
        .fold(T::zero(), T::max);
    if !(scale > T::zero()) {
        return Err(Error::Degenerate(
            "all points coincide; normalization scale is zero".into(),
        ));
    }
    let transform = NormalizationTransform { centroid, scale };
    Ok((transform.apply_cloud(cloud), transform))
}

/// Closest point on triangle `abc` to `p` (Voronoi-region walk).
pub fn closest_point_on_triangle<T: Real>(
    p: Point3<T>,
    a: Point3<T>,
    b: Point3<T>,
    c: Point3<T>,
) -> Point3<T> {
    let zero = T::zero();
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= zero && d2 <= zero {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= zero && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= zero && d1 >= zero && d3 <= zero {
        let denom = d1 - d3;
        let v = if denom > zero { d1 / denom } else { zero };
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= zero && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= zero && d2 >= zero && d6 <= zero {
        let denom = d2 - d6;
        let w = if denom > zero { d2 / denom } else { zero };
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= zero && (d4 - d3) >= zero && (d5 - d6) >= zero {
        let denom = (d4 - d3) + (d5 - d6);
        let w = if denom > zero {
            (d4 - d3) / denom
        } else {
            zero
        };
        return b + (c - b) * w;
    }
    let denom = va + vb + vc;
    if !(denom > zero) {
        // Degenerate (zero-area) triangle that slipped past the region tests.
        return [
            closest_on_segment(p, a, b),
            closest_on_segment(p, b, c),
            closest_on_segment(p, a, c),
        ]
        .into_iter()
        .fold(a, |best, q| {
            if q.dist_sq(p) < best.dist_sq(p) {
                q
            } else {
                best
            }
        });
    }
    let v = vb / denom;
    let w = vc / denom;
    a + ab * v + ac * w
}

fn closest_on_segment<T: Real>(p: Point3<T>, a: Point3<T>, b: Point3<T>) -> Point3<T> {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == T::zero() {
        return a;
    }
    let t = ((p - a).dot(ab) / len_sq).max(T::zero()).min(T::one());
    a + ab * t
}
