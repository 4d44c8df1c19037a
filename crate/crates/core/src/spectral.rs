//! Eigen-decomposition, the cubic discriminant and degeneracy search on the sphere.

use faer::{Mat, Side};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::IcoGrid;
use crate::model::{ControlPoint, HamiltonianFamily, HermitianMatrix, SpherePoint, TripletModel};
use crate::symmetry::{classify_point, OrbitType};

/// Ascending eigenvalues with orthonormal eigenvectors as columns.
///
/// Each eigenvector's largest-magnitude component is real and positive
/// (first such index on ties).
#[derive(Debug, Clone)]
pub struct BandSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<Complex64>,
    pub min_gap: f64,
}

fn to_faer(m: &DMatrix<Complex64>) -> Mat<Complex64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(h: &HermitianMatrix) -> Vec<f64> {
    to_faer(h.matrix())
        .self_adjoint_eigenvalues(Side::Lower)
        .expect("self-adjoint eigenvalue iteration converges")
}

// faer rather than nalgebra: nalgebra's symmetric solver returns inaccurate
// eigenvectors when off-diagonal entries are tiny.
pub fn eigensolve(h: &HermitianMatrix) -> BandSpectrum {
    let n = h.dim();
    let eig = to_faer(h.matrix())
        .self_adjoint_eigen(Side::Lower)
        .expect("self-adjoint eigen iteration converges");
    let eigenvalues: Vec<f64> = (0..n).map(|k| eig.S()[k].re).collect();
    let u = eig.U();
    let mut eigenvectors = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for col in 0..n {
        let mut lead = 0;
        let mut best = -1.0;
        for k in 0..n {
            // Small slack so round-off does not decide between equal components.
            if u[(k, col)].norm() > best * (1.0 + 1e-12) {
                best = u[(k, col)].norm();
                lead = k;
            }
        }
        let phase = if best > 0.0 {
            u[(lead, col)].conj() / best
        } else {
            Complex64::new(1.0, 0.0)
        };
        for k in 0..n {
            eigenvectors[(k, col)] = u[(k, col)] * phase;
        }
    }
    let min_gap = eigenvalues
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    BandSpectrum {
        eigenvalues,
        eigenvectors,
        min_gap,
    }
}

/// Discriminant of the characteristic polynomial of a 3x3 Hermitian matrix,
/// `prod_{i<j} (l_i - l_j)^2`, from traces of the traceless part:
/// `tr(A^2)^3 / 2 - 3 tr(A^3)^2`.
pub fn discriminant(h: &HermitianMatrix) -> Result<f64> {
    if h.dim() != 3 {
        return Err(Error::UnsupportedDimension(h.dim()));
    }
    Ok(discriminant3(h.matrix()))
}

fn discriminant3(m: &DMatrix<Complex64>) -> f64 {
    let shift = (m[(0, 0)].re + m[(1, 1)].re + m[(2, 2)].re) / 3.0;
    let mut a = [[Complex64::new(0.0, 0.0); 3]; 3];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            *e = m[(i, j)];
        }
        row[i].re -= shift;
    }
    let mut t2 = 0.0;
    for row in &a {
        for e in row {
            t2 += e.norm_sqr();
        }
    }
    let mut t3 = Complex64::new(0.0, 0.0);
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                t3 += a[i][j] * a[j][k] * a[k][i];
            }
        }
    }
    0.5 * t2 * t2 * t2 - 3.0 * t3.re * t3.re
}

/// Result of a global minimization over the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereMinimum {
    pub value: f64,
    pub point: SpherePoint,
}

/// Seeds refined by local descent in [`min_discriminant`].
pub const DESCENT_SEEDS: usize = 20;

/// Damped Newton descent in the tangent plane, re-centred every step.
pub fn descend<F>(f: &F, start: SpherePoint) -> SphereMinimum
where
    F: Fn(&SpherePoint) -> f64,
{
    let mut p = start;
    let mut fp = f(&p);
    for _ in 0..200 {
        let (tu, tv) = p.tangent_frame();
        let at = |u: f64, v: f64| f(&p.displaced(tu, tv, u, v));
        let h = 1e-4;
        let (fpu, fmu, fpv, fmv) = (at(h, 0.0), at(-h, 0.0), at(0.0, h), at(0.0, -h));
        let g = [(fpu - fmu) / (2.0 * h), (fpv - fmv) / (2.0 * h)];
        let huu = (fpu - 2.0 * fp + fmu) / (h * h);
        let hvv = (fpv - 2.0 * fp + fmv) / (h * h);
        let huv = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
        let det = huu * hvv - huv * huv;

        let mut step = if huu > 0.0 && det > 0.0 {
            [-(hvv * g[0] - huv * g[1]) / det, -(huu * g[1] - huv * g[0]) / det]
        } else {
            let scale = huu.abs().max(hvv.abs()).max(1.0);
            [-g[0] / scale, -g[1] / scale]
        };
        let len = step[0].hypot(step[1]);
        if len > 0.2 {
            step = [step[0] * 0.2 / len, step[1] * 0.2 / len];
        }
        if len < 1e-14 {
            break;
        }

        let mut accepted = false;
        let mut scale = 1.0;
        for _ in 0..40 {
            let q = p.displaced(tu, tv, scale * step[0], scale * step[1]);
            let fq = f(&q);
            if fq < fp {
                p = q;
                fp = fq;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted || fp <= 0.0 {
            break;
        }
    }
    SphereMinimum { value: fp, point: p }
}

fn seeds_from_grid(grid: &IcoGrid, values: &[f64], count: usize) -> Vec<usize> {
    let mut minima = grid.local_minima(values);
    minima.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    minima.truncate(count);
    if minima.len() < count {
        let mut rest: Vec<usize> = (0..values.len()).filter(|i| !minima.contains(i)).collect();
        rest.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        minima.extend(rest.into_iter().take(count - minima.len()));
    }
    minima
}

/// Global minimum of the discriminant of a 3-level family over the sphere.
pub fn min_discriminant_of<H: HamiltonianFamily>(family: &H, grid_density: usize) -> Result<SphereMinimum> {
    if grid_density < 8 {
        return Err(Error::InvalidInput(format!("grid density {grid_density} < 8")));
    }
    if family.dim() != 3 {
        return Err(Error::UnsupportedDimension(family.dim()));
    }
    let f = |p: &SpherePoint| discriminant3(family.hamiltonian(p).matrix());
    let grid = IcoGrid::new(grid_density);
    let values: Vec<f64> = grid.vertices.par_iter().map(&f).collect();
    let seeds = seeds_from_grid(&grid, &values, DESCENT_SEEDS);
    let best = seeds
        .par_iter()
        .map(|&i| descend(&f, grid.vertices[i]))
        .collect::<Vec<_>>()
        .into_iter()
        .min_by(|x, y| x.value.total_cmp(&y.value))
        .expect("grid is nonempty");
    Ok(best)
}

pub fn min_discriminant(c: ControlPoint, grid_density: usize) -> Result<SphereMinimum> {
    min_discriminant_of(&TripletModel::new(c), grid_density)
}

/// Default discriminant threshold for degeneracy detection.
pub const DEFAULT_DISC_TOL: f64 = 1e-9;
/// Points closer than this (radians) are merged.
pub const MERGE_RADIUS: f64 = 1e-3;
/// Distance (radians) within which a point is matched to a stratum axis.
pub const AXIS_MATCH_RADIUS: f64 = 1e-4;
/// Grid frequency used to seed [`find_degeneracies`].
pub const SEARCH_DENSITY: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitLabel {
    C2,
    C3,
    C4,
    Generic,
    None,
}

impl From<OrbitType> for OrbitLabel {
    fn from(t: OrbitType) -> Self {
        match t {
            OrbitType::C2 => OrbitLabel::C2,
            OrbitType::C3 => OrbitLabel::C3,
            OrbitType::C4 => OrbitLabel::C4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyPoint {
    pub point: SpherePoint,
    pub band_pair: (usize, usize),
    pub discriminant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracySet {
    pub control: Option<ControlPoint>,
    pub points: Vec<DegeneracyPoint>,
    pub label: OrbitLabel,
}

impl DegeneracySet {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
}

/// All local minima of the discriminant below `tol`, merged and labelled.
pub fn find_degeneracies_of<H: HamiltonianFamily>(family: &H, tol: f64) -> Result<DegeneracySet> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    if family.dim() != 3 {
        return Err(Error::UnsupportedDimension(family.dim()));
    }
    let f = |p: &SpherePoint| discriminant3(family.hamiltonian(p).matrix());
    let grid = IcoGrid::new(SEARCH_DENSITY);
    let values: Vec<f64> = grid.vertices.par_iter().map(&f).collect();
    let seeds = grid.local_minima(&values);
    let mut found: Vec<SphereMinimum> = seeds
        .par_iter()
        .map(|&i| descend(&f, grid.vertices[i]))
        .collect::<Vec<_>>()
        .into_iter()
        .filter(|m| m.value <= tol)
        .collect();
    found.sort_by(|x, y| x.value.total_cmp(&y.value));

    let mut merged: Vec<SphereMinimum> = Vec::new();
    for m in found {
        if merged.iter().all(|k| k.point.angle_to(&m.point) > MERGE_RADIUS) {
            merged.push(m);
        }
    }

    let points: Vec<DegeneracyPoint> = merged
        .into_iter()
        .map(|m| {
            let spectrum = eigensolve(&family.hamiltonian(&m.point));
            let k = (0..spectrum.eigenvalues.len() - 1)
                .min_by(|&i, &j| {
                    let gi = spectrum.eigenvalues[i + 1] - spectrum.eigenvalues[i];
                    let gj = spectrum.eigenvalues[j + 1] - spectrum.eigenvalues[j];
                    gi.total_cmp(&gj)
                })
                .unwrap_or(0);
            DegeneracyPoint {
                point: m.point,
                band_pair: (k, k + 1),
                discriminant: m.value,
            }
        })
        .collect();

    let label = orbit_label(&points);
    Ok(DegeneracySet {
        control: family.control(),
        points,
        label,
    })
}

pub fn find_degeneracies(c: ControlPoint, tol: f64) -> Result<DegeneracySet> {
    find_degeneracies_of(&TripletModel::new(c), tol)
}

fn orbit_label(points: &[DegeneracyPoint]) -> OrbitLabel {
    if points.is_empty() {
        return OrbitLabel::None;
    }
    match OrbitType::from_size(points.len()) {
        Some(kind)
            if points
                .iter()
                .all(|d| classify_point(&d.point, AXIS_MATCH_RADIUS) == Some(kind)) =>
        {
            kind.into()
        }
        _ => OrbitLabel::Generic,
    }
}
