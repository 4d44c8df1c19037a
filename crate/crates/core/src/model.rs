//! The three-state rovibrational model over the rotational phase sphere.
//!
//! The Hamiltonian of an `F2` vibrational triplet in a cubic (`O`) molecule,
//! restricted to rotational operators of degree at most two, reads
//!
//! ```text
//! H(x, y, z; a, b) = F1(x, y, z) + a D(x, y, z) + b S(x, y, z)
//! ```
//!
//! with `F1` the antisymmetric Coriolis block, `D` the diagonal `E`-type
//! quadrupole and `S` the symmetric `F2`-type block. `(x, y, z)` are the
//! classical limits of `J/|J|` on the unit sphere.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// A point `(a, b)` of the control-parameter plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPoint {
    pub a: f64,
    pub b: f64,
}

impl ControlPoint {
    pub const fn new(a: f64, b: f64) -> Self {
        ControlPoint { a, b }
    }

    pub fn checked(a: f64, b: f64) -> Result<Self> {
        if a.is_finite() && b.is_finite() {
            Ok(ControlPoint { a, b })
        } else {
            Err(Error::InvalidInput(format!("control point ({a}, {b}) is not finite")))
        }
    }

    /// `self + t * dir`.
    pub fn offset(&self, dir: [f64; 2], t: f64) -> Self {
        ControlPoint::new(self.a + t * dir[0], self.b + t * dir[1])
    }
}

impl fmt::Display for ControlPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(a={}, b={})", self.a, self.b)
    }
}

/// A unit vector on the classical phase sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl SpherePoint {
    /// Normalizes `(x, y, z)` onto the sphere.
    ///
    /// Panics if the vector is zero or not finite.
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self::try_new(x, y, z).expect("sphere point needs a finite nonzero vector")
    }

    pub fn try_new(x: f64, y: f64, z: f64) -> Option<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n == 0.0 {
            return None;
        }
        Some(SpherePoint {
            x: x / n,
            y: y / n,
            z: z / n,
        })
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &SpherePoint) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Great-circle distance in radians.
    pub fn angle_to(&self, other: &SpherePoint) -> f64 {
        let c = cross(self.to_array(), other.to_array());
        norm(c).atan2(self.dot(other))
    }

    /// Orthonormal tangent pair `(u, v)` with `u x v = self`.
    pub fn tangent_frame(&self) -> ([f64; 3], [f64; 3]) {
        let p = self.to_array();
        // Seed with the coordinate axis least aligned with p.
        let mut seed = [0.0; 3];
        let k = (0..3).min_by(|&i, &j| p[i].abs().total_cmp(&p[j].abs())).unwrap_or(0);
        seed[k] = 1.0;
        let u = normalized(cross(seed, p));
        let v = cross(p, u);
        (u, v)
    }

    /// `normalize(self + u * tu + v * tv)`.
    pub fn displaced(&self, tu: [f64; 3], tv: [f64; 3], u: f64, v: f64) -> SpherePoint {
        SpherePoint::new(
            self.x + u * tu[0] + v * tv[0],
            self.y + u * tu[1] + v * tv[1],
            self.z + u * tu[2] + v * tv[2],
        )
    }
}

impl fmt::Display for SpherePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6}, {:.6})", self.x, self.y, self.z)
    }
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

pub(crate) fn normalized(a: [f64; 3]) -> [f64; 3] {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Tolerance for the Hermiticity check in [`HermitianMatrix::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Square complex matrix equal to its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(DMatrix<Complex64>);

impl HermitianMatrix {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidInput(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        let dev = hermitian_deviation(&m);
        if dev > HERMITIAN_TOL * (1.0 + m.norm()) {
            return Err(Error::NotHermitian(dev));
        }
        Ok(HermitianMatrix(m))
    }

    /// Wraps `m` without checking. Callers guarantee Hermiticity by construction.
    pub fn new_unchecked(m: DMatrix<Complex64>) -> Self {
        HermitianMatrix(m)
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        HermitianMatrix(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(d[i], 0.0)
            } else {
                C0
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    /// `max |H_ij - conj(H_ji)|`.
    pub fn hermiticity_residual(&self) -> f64 {
        hermitian_deviation(&self.0)
    }
}

fn hermitian_deviation(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Classical values of the lowest-degree rotational tensors at a sphere point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationalTensors {
    pub e1: f64,
    pub e2: f64,
    pub f1: [f64; 3],
    pub f2: [f64; 3],
    pub a1: f64,
}

pub fn rotational_tensors(p: &SpherePoint) -> RotationalTensors {
    let (x, y, z) = (p.x, p.y, p.z);
    let (x2, y2, z2) = (x * x, y * y, z * z);
    RotationalTensors {
        e1: 2.0 * z2 - x2 - y2,
        e2: 3f64.sqrt() * (x2 - y2),
        f1: [x, y, z],
        f2: [y * z, z * x, x * y],
        a1: x2 * x2 + y2 * y2 + z2 * z2,
    }
}

/// A smooth map from the sphere to Hermitian matrices of fixed dimension.
pub trait HamiltonianFamily: Sync {
    fn dim(&self) -> usize;

    fn hamiltonian(&self, p: &SpherePoint) -> HermitianMatrix;

    /// The control point the family was built for, if it has one.
    fn control(&self) -> Option<ControlPoint> {
        None
    }
}

/// Adapts a closure `p -> H(p)` to [`HamiltonianFamily`].
pub struct FnFamily<F> {
    dim: usize,
    f: F,
}

impl<F> FnFamily<F>
where
    F: Fn(&SpherePoint) -> HermitianMatrix + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnFamily { dim, f }
    }
}

impl<F> HamiltonianFamily for FnFamily<F>
where
    F: Fn(&SpherePoint) -> HermitianMatrix + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn hamiltonian(&self, p: &SpherePoint) -> HermitianMatrix {
        (self.f)(p)
    }
}

/// The three-state model at a fixed control point.
///
/// `a1_offset` multiplies the scalar `x^4 + y^4 + z^4` term, which only
/// shifts all three levels together and is zero by default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripletModel {
    pub control: ControlPoint,
    pub a1_offset: f64,
}

impl TripletModel {
    pub fn new(control: ControlPoint) -> Self {
        TripletModel {
            control,
            a1_offset: 0.0,
        }
    }

    pub fn with_a1_offset(mut self, coeff: f64) -> Self {
        self.a1_offset = coeff;
        self
    }
}

impl HamiltonianFamily for TripletModel {
    fn dim(&self) -> usize {
        3
    }

    fn hamiltonian(&self, p: &SpherePoint) -> HermitianMatrix {
        let mut h = build_hamiltonian(p, self.control);
        if self.a1_offset != 0.0 {
            let shift = self.a1_offset * rotational_tensors(p).a1;
            for i in 0..3 {
                h.0[(i, i)].re += shift;
            }
        }
        h
    }

    fn control(&self) -> Option<ControlPoint> {
        Some(self.control)
    }
}

/// The 3x3 model matrix at sphere point `p` and control point `c`.
pub fn build_hamiltonian(p: &SpherePoint, c: ControlPoint) -> HermitianMatrix {
    let (x, y, z) = (p.x, p.y, p.z);
    let (x2, y2, z2) = (x * x, y * y, z * z);
    let re = |v: f64| Complex64::new(v, 0.0);
    let im = |v: f64| Complex64::new(0.0, v);

    let d = [
        c.a * (y2 + z2 - 2.0 * x2),
        c.a * (z2 + x2 - 2.0 * y2),
        c.a * (x2 + y2 - 2.0 * z2),
    ];
    let h01 = im(z) + re(c.b * x * y);
    let h02 = im(-y) + re(c.b * z * x);
    let h12 = im(x) + re(c.b * y * z);

    let m = DMatrix::from_row_slice(
        3,
        3,
        &[
            re(d[0]),
            h01,
            h02,
            h01.conj(),
            re(d[1]),
            h12,
            h02.conj(),
            h12.conj(),
            re(d[2]),
        ],
    );
    HermitianMatrix(m)
}

/// Finite-difference step for the local Jacobian.
pub const LINEARIZE_STEP: f64 = 1e-5;
/// Second step used to confirm the Jacobian sign.
pub const LINEARIZE_CHECK_STEP: f64 = 1e-6;
/// Threshold on `(lambda_j - lambda_i)^2` for a band pair to count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Threshold on `|det J| / (|J_u| |J_v| |J_t|)`.
pub const RANK_TOL: f64 = 1e-6;

/// First-order two-level Hamiltonian `h0 + h . sigma` near a degeneracy.
///
/// `h(u, v, t) = offset + jacobian * (u, v, t)`, where `(u, v)` are
/// coordinates on the tangent plane at `base` (`tangent_u x tangent_v = base`)
/// and `t` is the signed displacement of the control point along `direction`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTwoLevel {
    pub base: SpherePoint,
    pub control: ControlPoint,
    pub band_pair: (usize, usize),
    pub tangent_u: [f64; 3],
    pub tangent_v: [f64; 3],
    pub direction: [f64; 2],
    pub offset: [f64; 3],
    /// Rows `h1, h2, h3`; columns `u, v, t`.
    pub jacobian: [[f64; 3]; 3],
    /// Largest entrywise difference between the Jacobians at the two steps.
    pub fd_discrepancy: f64,
}

impl LocalTwoLevel {
    pub fn coefficients(&self, u: f64, v: f64, t: f64) -> [f64; 3] {
        let j = &self.jacobian;
        let mut h = self.offset;
        for (k, hk) in h.iter_mut().enumerate() {
            *hk += j[k][0] * u + j[k][1] * v + j[k][2] * t;
        }
        h
    }

    /// Eigenvalue splitting `2 |h|`.
    pub fn splitting(&self, u: f64, v: f64, t: f64) -> f64 {
        2.0 * norm(self.coefficients(u, v, t))
    }

    pub fn jacobian_det(&self) -> f64 {
        det3(&self.jacobian)
    }

    /// `|det| / (|col_u| |col_v| |col_t|)`, in `[0, 1]`.
    pub fn normalized_det(&self) -> f64 {
        normalized_det(&self.jacobian)
    }

    /// Sign of the Jacobian determinant.
    pub fn orientation(&self) -> i32 {
        if self.jacobian_det() >= 0.0 {
            1
        } else {
            -1
        }
    }
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn normalized_det(m: &[[f64; 3]; 3]) -> f64 {
    let col = |k: usize| norm([m[0][k], m[1][k], m[2][k]]);
    let scale = col(0) * col(1) * col(2);
    if scale == 0.0 {
        0.0
    } else {
        det3(m).abs() / scale
    }
}

/// Projects the model onto the degenerate eigenspace of `band_pair` at
/// `(p0, c0)` and expands the Pauli coefficients to first order.
pub fn linearize(
    p0: &SpherePoint,
    c0: ControlPoint,
    band_pair: (usize, usize),
    direction: [f64; 2],
) -> Result<LocalTwoLevel> {
    let (lo, hi) = band_pair;
    if lo >= hi || hi >= 3 {
        return Err(Error::InvalidInput(format!("invalid band pair {band_pair:?}")));
    }
    let dn = (direction[0] * direction[0] + direction[1] * direction[1]).sqrt();
    if (dn - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "direction must be a unit vector, |d| = {dn}"
        )));
    }

    let spectrum = crate::spectral::eigensolve(&build_hamiltonian(p0, c0));
    let gap = spectrum.eigenvalues[hi] - spectrum.eigenvalues[lo];
    if gap * gap > DEGENERACY_TOL {
        return Err(Error::NotDegenerate { pair: band_pair, gap });
    }
    let basis = [
        spectrum.eigenvectors.column(lo).clone_owned(),
        spectrum.eigenvectors.column(hi).clone_owned(),
    ];
    let (tu, tv) = p0.tangent_frame();

    let pauli = |u: f64, v: f64, t: f64| -> [f64; 3] {
        let p = p0.displaced(tu, tv, u, v);
        let h = build_hamiltonian(&p, c0.offset(direction, t));
        let m = h.matrix();
        let h_basis = [m * &basis[0], m * &basis[1]];
        let mut proj = [[C0; 2]; 2];
        for (r, row) in proj.iter_mut().enumerate() {
            for (s, entry) in row.iter_mut().enumerate() {
                *entry = basis[r].dotc(&h_basis[s]);
            }
        }
        [proj[0][1].re, -proj[0][1].im, 0.5 * (proj[0][0].re - proj[1][1].re)]
    };

    let jacobian_at = |step: f64| -> [[f64; 3]; 3] {
        let mut jac = [[0.0; 3]; 3];
        for k in 0..3 {
            let mut e = [0.0; 3];
            e[k] = step;
            let plus = pauli(e[0], e[1], e[2]);
            let minus = pauli(-e[0], -e[1], -e[2]);
            for r in 0..3 {
                jac[r][k] = (plus[r] - minus[r]) / (2.0 * step);
            }
        }
        jac
    };

    let jacobian = jacobian_at(LINEARIZE_STEP);
    let check = jacobian_at(LINEARIZE_CHECK_STEP);
    let fd_discrepancy = jacobian
        .iter()
        .flatten()
        .zip(check.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let nd = normalized_det(&jacobian);
    if nd < RANK_TOL || det3(&jacobian).signum() != det3(&check).signum() {
        return Err(Error::RankDeficient { normalized_det: nd });
    }

    Ok(LocalTwoLevel {
        base: *p0,
        control: c0,
        band_pair,
        tangent_u: tu,
        tangent_v: tv,
        direction,
        offset: pauli(0.0, 0.0, 0.0),
        jacobian,
        fd_discrepancy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn eigenvalues(p: &SpherePoint, c: ControlPoint) -> Vec<f64> {
        crate::spectral::eigensolve(&build_hamiltonian(p, c)).eigenvalues
    }

    #[test]
    fn tensors_at_pole() {
        let t = rotational_tensors(&SpherePoint::new(0.0, 0.0, 1.0));
        assert_eq!(t.e1, 2.0);
        assert_eq!(t.e2, 0.0);
        assert_eq!(t.f1, [0.0, 0.0, 1.0]);
        assert_eq!(t.f2, [0.0, 0.0, 0.0]);
        assert_eq!(t.a1, 1.0);
    }

    #[test]
    fn tensors_on_x_axis() {
        let t = rotational_tensors(&SpherePoint::new(1.0, 0.0, 0.0));
        assert_eq!(t.e1, -1.0);
        assert_abs_diff_eq!(t.e2, 3f64.sqrt(), epsilon = 1e-15);
        assert_eq!(t.a1, 1.0);
    }

    #[test]
    fn tensors_on_c3_axis() {
        let t = rotational_tensors(&SpherePoint::new(1.0, 1.0, 1.0));
        assert_abs_diff_eq!(t.e1, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.e2, 0.0, epsilon = 1e-15);
        for v in t.f2 {
            assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn coriolis_only_at_pole() {
        let h = build_hamiltonian(&SpherePoint::new(0.0, 0.0, 1.0), ControlPoint::new(0.0, 0.0));
        let m = h.matrix();
        for i in 0..3 {
            for j in 0..3 {
                let expected = match (i, j) {
                    (0, 1) => Complex64::new(0.0, 1.0),
                    (1, 0) => Complex64::new(0.0, -1.0),
                    _ => C0,
                };
                assert_eq!(m[(i, j)], expected, "entry ({i},{j})");
            }
        }
        let ev = eigenvalues(&SpherePoint::new(0.0, 0.0, 1.0), ControlPoint::new(0.0, 0.0));
        for (e, x) in ev.iter().zip([-1.0, 0.0, 1.0]) {
            assert_abs_diff_eq!(*e, x, epsilon = 1e-12);
        }
    }

    #[test]
    fn c4_point_spectrum() {
        let (a, b) = (0.37, -1.9);
        let ev = eigenvalues(&SpherePoint::new(0.0, 0.0, 1.0), ControlPoint::new(a, b));
        let mut expected = [a - 1.0, -2.0 * a, a + 1.0];
        expected.sort_by(f64::total_cmp);
        for (e, x) in ev.iter().zip(expected) {
            assert_abs_diff_eq!(*e, x, epsilon = 1e-12);
        }
    }

    #[test]
    fn c3_point_spectrum() {
        let b = 0.8;
        let ev = eigenvalues(&SpherePoint::new(1.0, 1.0, 1.0), ControlPoint::new(0.0, b));
        let mut expected = [-1.0 - b / 3.0, 1.0 - b / 3.0, 2.0 * b / 3.0];
        expected.sort_by(f64::total_cmp);
        for (e, x) in ev.iter().zip(expected) {
            assert_abs_diff_eq!(*e, x, epsilon = 1e-12);
        }
    }

    #[test]
    fn a1_offset_shifts_uniformly() {
        let p = SpherePoint::new(0.3, -0.5, 0.8);
        let c = ControlPoint::new(0.2, 0.4);
        let base = TripletModel::new(c).hamiltonian(&p);
        let shifted = TripletModel::new(c).with_a1_offset(2.0).hamiltonian(&p);
        let s = 2.0 * rotational_tensors(&p).a1;
        let e0 = crate::spectral::eigensolve(&base).eigenvalues;
        let e1 = crate::spectral::eigensolve(&shifted).eigenvalues;
        for (x, y) in e0.iter().zip(&e1) {
            assert_abs_diff_eq!(y - x, s, epsilon = 1e-12);
        }
    }

    #[test]
    fn tangent_frame_is_right_handed() {
        for p in [
            SpherePoint::new(0.0, 0.0, 1.0),
            SpherePoint::new(1.0, 1.0, 1.0),
            SpherePoint::new(-0.2, 0.9, -0.1),
        ] {
            let (u, v) = p.tangent_frame();
            let n = cross(u, v);
            for (a, b) in n.iter().zip(p.to_array()) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn hermitian_constructor_rejects_asymmetric() {
        let mut m = DMatrix::from_element(2, 2, C0);
        m[(0, 1)] = Complex64::new(1.0, 1.0);
        m[(1, 0)] = Complex64::new(1.0, 1.0);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn linearize_c4_point() {
        let lt = linearize(
            &SpherePoint::new(0.0, 0.0, 1.0),
            ControlPoint::new(1.0 / 3.0, 0.0),
            (0, 1),
            [1.0, 0.0],
        )
        .unwrap();
        assert!(lt.normalized_det() > 1e-3, "det {}", lt.jacobian_det());
        assert!(crate::model::norm(lt.offset) < 1e-9);
    }

    #[test]
    fn linearize_c3_point() {
        // At b = 1 the C3 triple (-4/3, 2/3, 2/3) degenerates in (middle, upper).
        let lt = linearize(
            &SpherePoint::new(1.0, 1.0, 1.0),
            ControlPoint::new(0.0, 1.0),
            (1, 2),
            [0.0, 1.0],
        )
        .unwrap();
        assert!(lt.normalized_det() > 1e-3, "det {}", lt.jacobian_det());
    }

    #[test]
    fn linearize_gapped_input() {
        let r = linearize(
            &SpherePoint::new(0.0, 0.0, 1.0),
            ControlPoint::new(0.0, 0.0),
            (0, 1),
            [1.0, 0.0],
        );
        assert!(matches!(r, Err(Error::NotDegenerate { .. })));
    }

    #[test]
    fn linearize_rejects_non_unit_direction() {
        let r = linearize(
            &SpherePoint::new(0.0, 0.0, 1.0),
            ControlPoint::new(1.0 / 3.0, 0.0),
            (0, 1),
            [2.0, 0.0],
        );
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn linearization_matches_exact_gap_to_second_order() {
        let c0 = ControlPoint::new(1.0 / 3.0, 0.4);
        let p0 = SpherePoint::new(0.0, 0.0, 1.0);
        let lt = linearize(&p0, c0, (0, 1), [1.0, 0.0]).unwrap();
        let err = |s: f64| {
            let (u, v, t) = (0.7 * s, -0.4 * s, 0.5 * s);
            let p = p0.displaced(lt.tangent_u, lt.tangent_v, u, v);
            let ev = eigenvalues(&p, c0.offset(lt.direction, t));
            ((ev[1] - ev[0]) - lt.splitting(u, v, t)).abs()
        };
        let mut prev_ratio = f64::INFINITY;
        let mut step = 1e-2;
        for _ in 0..4 {
            let ratio = err(step) / step;
            assert!(ratio < prev_ratio, "error/step did not shrink: {ratio} >= {prev_ratio}");
            prev_ratio = ratio;
            step /= 2.0;
        }
        assert!(prev_ratio < 0.05);
    }
}
