//! The octahedral rotation group `O` acting on the sphere and its
//! zero-dimensional strata.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::SpherePoint;

/// A proper rotation of the cube, stored as a signed permutation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CubeRotation {
    perm: [usize; 3],
    signs: [i8; 3],
}

impl CubeRotation {
    /// `(g p)_i = signs[i] * p[perm[i]]`.
    pub fn apply(&self, p: &SpherePoint) -> SpherePoint {
        let v = p.to_array();
        SpherePoint {
            x: f64::from(self.signs[0]) * v[self.perm[0]],
            y: f64::from(self.signs[1]) * v[self.perm[1]],
            z: f64::from(self.signs[2]) * v[self.perm[2]],
        }
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            m[i][self.perm[i]] = f64::from(self.signs[i]);
        }
        m
    }

    pub fn is_identity(&self) -> bool {
        self.perm == [0, 1, 2] && self.signs == [1, 1, 1]
    }
}

fn permutation_parity(p: [usize; 3]) -> i8 {
    let mut inversions = 0;
    for i in 0..3 {
        for j in i + 1..3 {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// The 24 rotations of `O`: signed permutations with determinant +1.
pub fn octahedral_rotations() -> Vec<CubeRotation> {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = Vec::with_capacity(24);
    for perm in PERMS {
        for bits in 0..8u8 {
            let signs = [
                if bits & 1 == 0 { 1 } else { -1 },
                if bits & 2 == 0 { 1 } else { -1 },
                if bits & 4 == 0 { 1 } else { -1 },
            ];
            if permutation_parity(perm) * signs[0] * signs[1] * signs[2] == 1 {
                out.push(CubeRotation { perm, signs });
            }
        }
    }
    out
}

/// Zero-dimensional strata of `O` on the sphere, named by their stabilizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OrbitType {
    C2,
    C3,
    C4,
}

impl OrbitType {
    pub const ALL: [OrbitType; 3] = [OrbitType::C2, OrbitType::C3, OrbitType::C4];

    /// `|O| / |C_n|`.
    pub fn size(self) -> usize {
        match self {
            OrbitType::C4 => 6,
            OrbitType::C3 => 8,
            OrbitType::C2 => 12,
        }
    }

    pub fn from_size(n: usize) -> Option<Self> {
        match n {
            6 => Some(OrbitType::C4),
            8 => Some(OrbitType::C3),
            12 => Some(OrbitType::C2),
            _ => None,
        }
    }
}

impl fmt::Display for OrbitType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OrbitType::C2 => "C2",
            OrbitType::C3 => "C3",
            OrbitType::C4 => "C4",
        };
        f.write_str(s)
    }
}

/// Points of the orbit: face centres (C4), vertices (C3) or edge midpoints (C2)
/// of the cube, projected onto the sphere.
pub fn orbit_points(kind: OrbitType) -> Vec<SpherePoint> {
    let mut pts = Vec::with_capacity(kind.size());
    match kind {
        OrbitType::C4 => {
            for axis in 0..3 {
                for s in [1.0, -1.0] {
                    let mut v = [0.0; 3];
                    v[axis] = s;
                    pts.push(SpherePoint::from_array(v));
                }
            }
        }
        OrbitType::C3 => {
            for sx in [1.0, -1.0] {
                for sy in [1.0, -1.0] {
                    for sz in [1.0, -1.0] {
                        pts.push(SpherePoint::new(sx, sy, sz));
                    }
                }
            }
        }
        OrbitType::C2 => {
            for zero in (0..3).rev() {
                let (i, j) = match zero {
                    0 => (1, 2),
                    1 => (0, 2),
                    _ => (0, 1),
                };
                for si in [1.0, -1.0] {
                    for sj in [1.0, -1.0] {
                        let mut v = [0.0; 3];
                        v[i] = si;
                        v[j] = sj;
                        pts.push(SpherePoint::from_array(v));
                    }
                }
            }
        }
    }
    pts
}

/// Orbit type of the stratum point nearest to `p`, if within `radius` radians.
pub fn classify_point(p: &SpherePoint, radius: f64) -> Option<OrbitType> {
    OrbitType::ALL
        .into_iter()
        .find(|&kind| orbit_points(kind).iter().any(|q| q.angle_to(p) <= radius))
}

/// Number of group elements fixing `p` to within `tol`.
pub fn stabilizer_order(p: &SpherePoint, tol: f64) -> usize {
    octahedral_rotations()
        .iter()
        .filter(|g| g.apply(p).angle_to(p) <= tol)
        .count()
}
