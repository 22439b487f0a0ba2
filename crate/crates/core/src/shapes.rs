//! Small analytic meshes used by tests, benchmarks and demos.

use std::collections::HashMap;

use crate::geometry::{Point3, TriangleMesh};
use crate::scalar::Real;

/// Axis-aligned square [-half, half]² in the z = 0 plane, two triangles.
pub fn square<T: Real>(half: f64) -> TriangleMesh<T> {
    let v = [[-half, -half], [half, -half], [half, half], [-half, half]]
        .iter()
        .map(|c| Point3::from_f64(c[0], c[1], 0.0))
        .collect();
    TriangleMesh::new(v, vec![[0, 1, 2], [0, 2, 3]]).expect("static mesh")
}

/// Surface of the cube [-half, half]³, twelve triangles with outward winding.
pub fn cube<T: Real>(half: f64) -> TriangleMesh<T> {
    let mut v = Vec::with_capacity(8);
    for i in 0..8 {
        let s = |bit: usize| if i & bit != 0 { half } else { -half };
        v.push(Point3::from_f64(s(1), s(2), s(4)));
    }
    let quads = [
        [0, 2, 3, 1],
        [4, 5, 7, 6],
        [0, 1, 5, 4],
        [2, 6, 7, 3],
        [0, 4, 6, 2],
        [1, 3, 7, 5],
    ];
    let tris = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    TriangleMesh::new(v, tris).expect("static mesh")
}

/// Unit icosphere: an icosahedron refined `subdivisions` times with every
/// vertex projected back onto the unit sphere.
pub fn icosphere<T: Real>(subdivisions: usize) -> TriangleMesh<T> {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let base = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let mut v: Vec<Point3<f64>> = base
        .iter()
        .map(|a| {
            let p = Point3::new(a[0], a[1], a[2]);
            p / p.norm()
        })
        .collect();
    let mut f: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache = HashMap::new();
        let mut mid = |a: usize, b: usize, v: &mut Vec<Point3<f64>>| {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let m = (v[a] + v[b]) * 0.5;
                v.push(m / m.norm());
                v.len() - 1
            })
        };
        let mut next = Vec::with_capacity(f.len() * 4);
        for t in &f {
            let ab = mid(t[0], t[1], &mut v);
            let bc = mid(t[1], t[2], &mut v);
            let ca = mid(t[2], t[0], &mut v);
            next.extend([[t[0], ab, ca], [t[1], bc, ab], [t[2], ca, bc], [ab, bc, ca]]);
        }
        f = next;
    }
    TriangleMesh::new(v.into_iter().map(|p| p.cast()).collect(), f).expect("static mesh")
}
