//! Discretizations of the sphere.
//!
//! [`IcoGrid`] is a geodesic vertex grid used to seed minimizations;
//! [`SphereMesh`] is a closed quadrilateral mesh (gnomonic projection of a
//! subdivided cube) used for plaquette sums.

use std::collections::HashMap;

use crate::model::{cross, SpherePoint};

/// Geodesic grid: icosahedron faces split into `frequency^2` triangles.
#[derive(Debug, Clone)]
pub struct IcoGrid {
    pub frequency: usize,
    pub vertices: Vec<SpherePoint>,
    pub neighbors: Vec<Vec<usize>>,
}

fn icosahedron() -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v = Vec::with_capacity(12);
    for s1 in [1.0, -1.0] {
        for s2 in [1.0, -1.0] {
            v.push([0.0, s1, s2 * phi]);
            v.push([s1, s2 * phi, 0.0]);
            v.push([s2 * phi, 0.0, s1]);
        }
    }
    let d2 = |a: [f64; 3], b: [f64; 3]| (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>();
    let adjacent = |i: usize, j: usize| (d2(v[i], v[j]) - 4.0).abs() < 1e-9;
    let mut faces = Vec::with_capacity(20);
    for i in 0..12 {
        for j in i + 1..12 {
            for k in j + 1..12 {
                if adjacent(i, j) && adjacent(j, k) && adjacent(i, k) {
                    faces.push([i, j, k]);
                }
            }
        }
    }
    debug_assert_eq!(faces.len(), 20);
    (v, faces)
}

impl IcoGrid {
    /// `10 f^2 + 2` vertices. Panics if `frequency == 0`.
    // Barycentric (i, j) indices read more clearly than iterator chains here.
    #[allow(clippy::needless_range_loop)]
    pub fn new(frequency: usize) -> Self {
        assert!(frequency >= 1, "grid frequency must be positive");
        let n = frequency;
        let (corners, faces) = icosahedron();
        let mut index: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
        let mut vertices = Vec::new();
        let mut edges: Vec<(usize, usize)> = Vec::new();

        for face in &faces {
            // Local ids indexed by (i, j) with weight k = n - i - j on face[0].
            let mut local = vec![vec![0usize; n + 1]; n + 1];
            for i in 0..=n {
                for j in 0..=n - i {
                    let k = n - i - j;
                    // Canonical key: corner ids in ascending order, zero weights dropped.
                    let mut key: Vec<(usize, usize)> = [(face[0], k), (face[1], i), (face[2], j)]
                        .into_iter()
                        .filter(|&(_, w)| w > 0)
                        .collect();
                    key.sort_unstable();
                    let id = *index.entry(key.clone()).or_insert_with(|| {
                        let mut p = [0.0; 3];
                        for &(c, w) in &key {
                            for (pk, ck) in p.iter_mut().zip(corners[c]) {
                                *pk += w as f64 * ck;
                            }
                        }
                        vertices.push(SpherePoint::from_array(p));
                        vertices.len() - 1
                    });
                    local[i][j] = id;
                }
            }
            for i in 0..n {
                for j in 0..n - i {
                    let (a, b, c) = (local[i][j], local[i + 1][j], local[i][j + 1]);
                    edges.extend([(a, b), (b, c), (a, c)]);
                    if j + 1 < n - i {
                        let d = local[i + 1][j + 1];
                        edges.extend([(b, d), (c, d)]);
                    }
                }
            }
        }

        let mut neighbors = vec![Vec::new(); vertices.len()];
        for (a, b) in edges {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        IcoGrid {
            frequency,
            vertices,
            neighbors,
        }
    }

    /// Vertices whose value does not exceed any neighbour's.
    pub fn local_minima(&self, values: &[f64]) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&i| self.neighbors[i].iter().all(|&j| values[i] <= values[j]))
            .collect()
    }
}

/// Closed quadrilateral mesh of the sphere from a cube with `size x size`
/// cells per face.
///
/// Plaquettes list their corners counter-clockwise seen from outside, so the
/// outward normal orients every cell.
#[derive(Debug, Clone)]
pub struct SphereMesh {
    pub size: usize,
    pub vertices: Vec<SpherePoint>,
    pub plaquettes: Vec<[usize; 4]>,
}

impl SphereMesh {
    /// Panics if `size == 0`.
    pub fn cube_gnomonic(size: usize) -> Self {
        assert!(size >= 1, "mesh size must be positive");
        let m = size as i64;
        let mut index: HashMap<[i64; 3], usize> = HashMap::new();
        let mut vertices = Vec::new();
        let mut plaquettes = Vec::with_capacity(6 * size * size);

        let mut vid = |key: [i64; 3]| -> usize {
            *index.entry(key).or_insert_with(|| {
                vertices.push(SpherePoint::new(key[0] as f64, key[1] as f64, key[2] as f64));
                vertices.len() - 1
            })
        };

        for axis in 0..3 {
            for sign in [1i64, -1] {
                let mut normal = [0i64; 3];
                normal[axis] = sign;
                let mut e1 = [0i64; 3];
                e1[(axis + 1) % 3] = 1;
                let e2 = icross(normal, e1);
                // Integer lattice on the cube [-m, m]^3 with spacing 2.
                let corner = |i: i64, j: i64| -> [i64; 3] {
                    let mut k = [0i64; 3];
                    for d in 0..3 {
                        k[d] = normal[d] * m + e1[d] * (2 * i - m) + e2[d] * (2 * j - m);
                    }
                    k
                };
                for i in 0..m {
                    for j in 0..m {
                        plaquettes.push([
                            vid(corner(i, j)),
                            vid(corner(i + 1, j)),
                            vid(corner(i + 1, j + 1)),
                            vid(corner(i, j + 1)),
                        ]);
                    }
                }
            }
        }
        SphereMesh {
            size,
            vertices,
            plaquettes,
        }
    }

    /// Signed solid angle of a plaquette (two spherical triangles).
    pub fn plaquette_area(&self, k: usize) -> f64 {
        let q = self.plaquettes[k];
        let v = |i: usize| self.vertices[q[i]].to_array();
        signed_solid_angle(v(0), v(1), v(2)) + signed_solid_angle(v(0), v(2), v(3))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.plaquettes.len()).map(|k| self.plaquette_area(k)).sum()
    }

    /// Every directed edge appears exactly once, together with its reverse.
    pub fn is_closed_and_oriented(&self) -> bool {
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for q in &self.plaquettes {
            for i in 0..4 {
                *count.entry((q[i], q[(i + 1) % 4])).or_default() += 1;
            }
        }
        count
            .iter()
            .all(|(&(a, b), &n)| n == 1 && count.get(&(b, a)) == Some(&1))
    }
}

fn icross(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Solid angle of the spherical triangle `abc`, positive when counter-clockwise
/// seen from outside (Van Oosterom-Strackee).
pub fn signed_solid_angle(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let dot = |u: [f64; 3], v: [f64; 3]| u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    let num = dot(a, cross(b, c));
    let den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    2.0 * num.atan2(den)
}
