//! First Chern numbers of eigen-line bundles over the sphere.
//!
//! Each band's flux through a plaquette is the argument of the product of
//! eigenvector overlaps around it (a lattice field strength). The sum over a
//! closed mesh is an integer multiple of `2 pi` for any choice of eigenvector
//! phases, so rounding only absorbs discretization error.
//!
//! Sign convention: plaquettes are traversed counter-clockwise seen from
//! outside and the total is multiplied by [`ORIENTATION`]. With this choice
//! the lowest band of the Coriolis-only model carries `-2`, and a band's
//! number of quantum levels at rotational quantum number `J` is
//! `(2J + 1) + C` (see [`crate::quantum`]).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::SphereMesh;
use crate::model::{ControlPoint, HamiltonianFamily, SpherePoint};
use crate::spectral::eigensolve;

/// Global orientation factor applied to every plaquette sum.
pub const ORIENTATION: f64 = -1.0;
pub const DEFAULT_MESH: usize = 64;
pub const DEFAULT_GAP_FLOOR: f64 = 1e-6;
pub const MAX_DEVIATION: f64 = 0.01;
/// Doublings allowed in [`refine_until_stable`].
pub const MAX_DOUBLINGS: usize = 3;
pub const MIN_START_MESH: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernOptions {
    pub gap_floor: f64,
    pub max_deviation: f64,
}

impl Default for ChernOptions {
    fn default() -> Self {
        ChernOptions {
            gap_floor: DEFAULT_GAP_FLOOR,
            max_deviation: MAX_DEVIATION,
        }
    }
}

/// Integer Chern numbers of all bands, ascending in energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChernRecord {
    pub control: Option<ControlPoint>,
    pub chern: Vec<i64>,
    pub mesh_size: usize,
    pub min_gap: f64,
    pub min_gap_point: SpherePoint,
    pub max_deviation: f64,
    pub raw: Vec<f64>,
}

impl ChernRecord {
    pub fn sum(&self) -> i64 {
        self.chern.iter().sum()
    }
}

/// Raw (unrounded) oriented flux per band divided by `2 pi`.
///
/// `states[v]` holds the eigenvectors at mesh vertex `v` as columns, one per
/// band. Plaquette phases are evaluated in parallel and summed in mesh order,
/// so the result does not depend on the thread count.
pub fn band_fluxes(mesh: &SphereMesh, states: &[DMatrix<Complex64>]) -> Vec<f64> {
    assert_eq!(states.len(), mesh.vertices.len(), "one state matrix per vertex");
    let bands = states.first().map_or(0, |s| s.ncols());
    let per_plaquette: Vec<Vec<f64>> = mesh
        .plaquettes
        .par_iter()
        .map(|q| {
            (0..bands)
                .map(|n| {
                    let mut w = Complex64::new(1.0, 0.0);
                    for i in 0..4 {
                        let a = states[q[i]].column(n);
                        let b = states[q[(i + 1) % 4]].column(n);
                        w *= a.dotc(&b);
                    }
                    w.arg()
                })
                .collect()
        })
        .collect();
    let mut total = vec![0.0; bands];
    for f in &per_plaquette {
        for (t, x) in total.iter_mut().zip(f) {
            *t += x;
        }
    }
    total
        .into_iter()
        .map(|t| ORIENTATION * t / (2.0 * std::f64::consts::PI))
        .collect()
}

fn compute_once<H: HamiltonianFamily>(family: &H, mesh_size: usize, opts: &ChernOptions) -> Result<ChernRecord> {
    let mesh = SphereMesh::cube_gnomonic(mesh_size);
    let spectra: Vec<_> = mesh
        .vertices
        .par_iter()
        .map(|p| eigensolve(&family.hamiltonian(p)))
        .collect();

    let (gap_idx, min_gap) = spectra
        .iter()
        .enumerate()
        .map(|(i, s)| (i, s.min_gap))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("mesh has vertices");
    let min_gap_point = mesh.vertices[gap_idx];
    if min_gap <= opts.gap_floor {
        return Err(Error::NearDegeneracy {
            point: min_gap_point,
            gap: min_gap,
            floor: opts.gap_floor,
        });
    }

    let states: Vec<_> = spectra.into_iter().map(|s| s.eigenvectors).collect();
    let raw = band_fluxes(&mesh, &states);
    let chern: Vec<i64> = raw.iter().map(|r| r.round() as i64).collect();
    let max_deviation = raw.iter().map(|r| (r - r.round()).abs()).fold(0.0, f64::max);
    Ok(ChernRecord {
        control: family.control(),
        chern,
        mesh_size,
        min_gap,
        min_gap_point,
        max_deviation,
        raw,
    })
}

/// Chern numbers on a `mesh_size` cube mesh, retried once at `2 * mesh_size`
/// if the plaquette sums are not close enough to integers.
pub fn chern_numbers<H: HamiltonianFamily>(family: &H, mesh_size: usize, opts: &ChernOptions) -> Result<ChernRecord> {
    if mesh_size == 0 {
        return Err(Error::InvalidInput("mesh size must be positive".into()));
    }
    let first = compute_once(family, mesh_size, opts)?;
    if first.max_deviation <= opts.max_deviation {
        return Ok(first);
    }
    let retry = compute_once(family, 2 * mesh_size, opts)?;
    if retry.max_deviation <= opts.max_deviation {
        Ok(retry)
    } else {
        Err(Error::NonIntegral {
            deviation: retry.max_deviation,
            mesh_size: retry.mesh_size,
        })
    }
}

/// Doubles the mesh until two consecutive results agree.
pub fn refine_until_stable<H: HamiltonianFamily>(
    family: &H,
    start_mesh: usize,
    opts: &ChernOptions,
) -> Result<ChernRecord> {
    if start_mesh < MIN_START_MESH {
        return Err(Error::InvalidInput(format!(
            "starting mesh {start_mesh} < {MIN_START_MESH}"
        )));
    }
    let mut prev = chern_numbers(family, start_mesh, opts)?;
    for _ in 0..MAX_DOUBLINGS {
        let next = chern_numbers(family, 2 * prev.mesh_size, opts)?;
        if next.chern == prev.chern {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Unstable {
        mesh_size: prev.mesh_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FnFamily, HermitianMatrix, TripletModel};

    fn pauli_family(sign: f64) -> impl HamiltonianFamily {
        FnFamily::new(2, move |p: &SpherePoint| {
            let c = |re: f64, im: f64| Complex64::new(re, im);
            HermitianMatrix::new_unchecked(DMatrix::from_row_slice(
                2,
                2,
                &[
                    c(sign * p.z, 0.0),
                    c(sign * p.x, -sign * p.y),
                    c(sign * p.x, sign * p.y),
                    c(-sign * p.z, 0.0),
                ],
            ))
        })
    }

    #[test]
    fn coriolis_model_at_centre() {
        let r = chern_numbers(
            &TripletModel::new(ControlPoint::new(0.0, 0.0)),
            16,
            &ChernOptions::default(),
        )
        .unwrap();
        assert_eq!(r.chern, vec![-2, 0, 2]);
        assert!(r.max_deviation < 1e-6);
        assert_eq!(r.control, Some(ControlPoint::new(0.0, 0.0)));
    }

    #[test]
    fn constant_family_is_trivial() {
        let fam = FnFamily::new(3, |_: &SpherePoint| {
            HermitianMatrix::from_real_diagonal(&[1.0, 2.0, 3.0])
        });
        let r = chern_numbers(&fam, 16, &ChernOptions::default()).unwrap();
        assert_eq!(r.chern, vec![0, 0, 0]);
        assert_eq!(r.control, None);
    }

    #[test]
    fn monopole_orientation() {
        let r = chern_numbers(&pauli_family(1.0), 16, &ChernOptions::default()).unwrap();
        assert_eq!(r.chern, vec![1, -1]);
        let r = chern_numbers(&pauli_family(-1.0), 16, &ChernOptions::default()).unwrap();
        assert_eq!(r.chern, vec![-1, 1]);
    }

    #[test]
    fn refine_rejects_small_start() {
        let fam = TripletModel::new(ControlPoint::new(0.0, 0.0));
        assert!(matches!(
            refine_until_stable(&fam, 8, &ChernOptions::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn near_wall_is_rejected() {
        let fam = TripletModel::new(ControlPoint::new(1.0 / 3.0 + 1e-12, 0.0));
        let r = refine_until_stable(&fam, 16, &ChernOptions::default());
        assert!(matches!(
            r,
            Err(Error::NearDegeneracy { .. }) | Err(Error::Unstable { .. })
        ));
    }
}
