//! The full quantum parent of the semi-quantum model at rotational quantum
//! number `J`, and the count of levels in each band.
//!
//! The classical coordinates `(x, y, z)` are replaced by the body-fixed
//! operators `K = -J / sqrt(J (J + 1))` acting on the `2J + 1` rotational
//! states. Body-fixed components obey `[K_x, K_y] = -i K_z / sqrt(J (J + 1))`,
//! which is what makes the lowest band of the Coriolis-only model hold
//! `2J - 1` levels, matching its Chern number `-2` via `n = 2J + 1 + C`.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ControlPoint, HermitianMatrix};
use crate::spectral::hermitian_eigenvalues;

/// Space-fixed `J_x, J_y, J_z` in the `|J, m>` basis, `m = J, J-1, ..., -J`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularMomentumRep {
    pub j: u32,
    pub jx: DMatrix<Complex64>,
    pub jy: DMatrix<Complex64>,
    pub jz: DMatrix<Complex64>,
}

impl AngularMomentumRep {
    pub fn dim(&self) -> usize {
        2 * self.j as usize + 1
    }
}

pub fn angular_momentum(j: u32) -> Result<AngularMomentumRep> {
    if j < 1 {
        return Err(Error::InvalidJ(j));
    }
    let d = 2 * j as usize + 1;
    let jf = f64::from(j);
    let m = |k: usize| jf - k as f64;
    let mut jplus = DMatrix::<Complex64>::zeros(d, d);
    for k in 1..d {
        let mk = m(k);
        jplus[(k - 1, k)] = Complex64::new((jf * (jf + 1.0) - mk * (mk + 1.0)).sqrt(), 0.0);
    }
    let jminus = jplus.adjoint();
    let jx = (&jplus + &jminus).map(|v| v * 0.5);
    let jy = (&jplus - &jminus).map(|v| v * Complex64::new(0.0, -0.5));
    let jz = DMatrix::from_fn(d, d, |r, c| {
        if r == c {
            Complex64::new(m(r), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(AngularMomentumRep { j, jx, jy, jz })
}

/// Ordering of the quadratic monomials `x_i x_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ordering {
    /// `(X_i X_j + X_j X_i) / 2`.
    #[default]
    Weyl,
    /// `X_i X_j` above the block diagonal, its adjoint below.
    Naive,
}

/// Quantum Hamiltonian of dimension `3 (2J + 1)`, vibrational index major:
/// block `(r, s)` is the rotational operator multiplying `|r><s|`.
pub fn build_quantum_hamiltonian(j: u32, c: ControlPoint, ordering: Ordering) -> Result<HermitianMatrix> {
    let rep = angular_momentum(j)?;
    let d = rep.dim();
    let scale = -1.0 / (f64::from(j) * (f64::from(j) + 1.0)).sqrt();
    let k = [&rep.jx, &rep.jy, &rep.jz].map(|m| m.map(|v| v * scale));
    let [x, y, z] = &k;
    let prod = |p: &DMatrix<Complex64>, q: &DMatrix<Complex64>| -> DMatrix<Complex64> {
        match ordering {
            Ordering::Weyl => (p * q + q * p).map(|v| v * 0.5),
            Ordering::Naive => p * q,
        }
    };
    let i = Complex64::new(0.0, 1.0);
    let (x2, y2, z2) = (x * x, y * y, z * z);
    let a = Complex64::new(c.a, 0.0);
    let b = Complex64::new(c.b, 0.0);

    let diag = [
        (&y2 + &z2 - &x2 * Complex64::new(2.0, 0.0)) * a,
        (&z2 + &x2 - &y2 * Complex64::new(2.0, 0.0)) * a,
        (&x2 + &y2 - &z2 * Complex64::new(2.0, 0.0)) * a,
    ];
    let h01 = z * i + prod(x, y) * b;
    let h02 = y * (-i) + prod(z, x) * b;
    let h12 = x * i + prod(y, z) * b;

    let mut h = DMatrix::<Complex64>::zeros(3 * d, 3 * d);
    for (r, block) in diag.iter().enumerate() {
        h.view_mut((r * d, r * d), (d, d)).copy_from(block);
    }
    for ((r, s), block) in [((0, 1), &h01), ((0, 2), &h02), ((1, 2), &h12)] {
        h.view_mut((r * d, s * d), (d, d)).copy_from(block);
        h.view_mut((s * d, r * d), (d, d)).copy_from(&block.adjoint());
    }
    HermitianMatrix::new(h)
}

/// Sorted eigenvalues of the quantum Hamiltonian.
pub fn quantum_spectrum(j: u32, c: ControlPoint, ordering: Ordering) -> Result<Vec<f64>> {
    let h = build_quantum_hamiltonian(j, c, ordering)?;
    Ok(hermitian_eigenvalues(&h))
}

/// Minimum ratio between the second and third largest level spacings.
pub const GAP_RATIO: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumBandCount {
    pub j: u32,
    pub control: ControlPoint,
    pub eigenvalues: Vec<f64>,
    /// Index of the first level of the second and third bands.
    pub boundaries: [usize; 2],
    pub counts: [usize; 3],
    /// The two band gaps, lower first.
    pub gaps: [f64; 2],
    /// Second over third largest spacing; `None` when the third is zero.
    pub gap_ratio: Option<f64>,
    pub expected_chern: Option<Vec<i64>>,
    pub matches: Option<bool>,
}

impl QuantumBandCount {
    /// `n_i - (2J + 1)`, the Chern numbers implied by the counts.
    pub fn implied_chern(&self) -> Vec<i64> {
        let base = 2 * i64::from(self.j) + 1;
        self.counts.iter().map(|&n| n as i64 - base).collect()
    }
}

/// Splits `eigenvalues` (sorted) at the two largest spacings.
pub fn split_bands(eigenvalues: &[f64]) -> Result<([usize; 2], [f64; 2], Option<f64>)> {
    if eigenvalues.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "{} levels cannot form three bands",
            eigenvalues.len()
        )));
    }
    let gaps: Vec<f64> = eigenvalues.windows(2).map(|w| w[1] - w[0]).collect();
    let mut order: Vec<usize> = (0..gaps.len()).collect();
    // Stable sort keeps the lower index first among equal gaps.
    order.sort_by(|&p, &q| gaps[q].total_cmp(&gaps[p]));
    let (second, third) = (gaps[order[1]], gaps[order[2]]);
    if second < GAP_RATIO * third {
        return Err(Error::AmbiguousBands { second, third });
    }
    let (lo, hi) = if order[0] < order[1] {
        (order[0], order[1])
    } else {
        (order[1], order[0])
    };
    let ratio = (third > 0.0).then(|| second / third);
    Ok(([lo + 1, hi + 1], [gaps[lo], gaps[hi]], ratio))
}

pub fn count_bands(j: u32, c: ControlPoint, expected_chern: Option<&[i64]>) -> Result<QuantumBandCount> {
    let eigenvalues = quantum_spectrum(j, c, Ordering::Weyl)?;
    let (boundaries, gaps, gap_ratio) = split_bands(&eigenvalues)?;
    let n = eigenvalues.len();
    let counts = [boundaries[0], boundaries[1] - boundaries[0], n - boundaries[1]];
    let mut out = QuantumBandCount {
        j,
        control: c,
        eigenvalues,
        boundaries,
        counts,
        gaps,
        gap_ratio,
        expected_chern: expected_chern.map(<[i64]>::to_vec),
        matches: None,
    };
    if let Some(chern) = expected_chern {
        out.matches = Some(out.implied_chern() == chern);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub j: u32,
    pub count: Option<QuantumBandCount>,
    pub error: Option<String>,
}

impl SweepEntry {
    pub fn matches(&self) -> bool {
        self.count.as_ref().and_then(|c| c.matches) == Some(true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub control: ControlPoint,
    pub expected_chern: Option<Vec<i64>>,
    pub entries: Vec<SweepEntry>,
    /// Smallest `J` from which every later `J` in the sweep matches.
    pub j_star: Option<u32>,
}

/// Band counts for each `J` in `js`; per-`J` failures are recorded inline.
pub fn sweep_j(c: ControlPoint, js: &[u32], expected_chern: Option<&[i64]>) -> SweepReport {
    let entries: Vec<SweepEntry> = js
        .par_iter()
        .map(|&j| match count_bands(j, c, expected_chern) {
            Ok(count) => SweepEntry {
                j,
                count: Some(count),
                error: None,
            },
            Err(e) => SweepEntry {
                j,
                count: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let j_star = if expected_chern.is_some() {
        let tail = entries.iter().rev().take_while(|e| e.matches()).count();
        (tail > 0).then(|| entries[entries.len() - tail].j)
    } else {
        None
    };
    SweepReport {
        control: c,
        expected_chern: expected_chern.map(<[i64]>::to_vec),
        entries,
        j_star,
    }
}

/// CSV with columns `J,E_index,E_value,band_index`.
pub fn spectrum_csv(counts: &[QuantumBandCount]) -> String {
    let mut out = String::from("J,E_index,E_value,band_index\n");
    for q in counts {
        for (k, e) in q.eigenvalues.iter().enumerate() {
            let band = if k < q.boundaries[0] {
                0
            } else if k < q.boundaries[1] {
                1
            } else {
                2
            };
            let _ = writeln!(out, "{},{},{:.12e},{}", q.j, k, e, band);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(m: &DMatrix<Complex64>) -> f64 {
        m.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn j1_matrices() {
        let r = angular_momentum(1).unwrap();
        let diag: Vec<f64> = (0..3).map(|k| r.jz[(k, k)].re).collect();
        assert_eq!(diag, vec![1.0, 0.0, -1.0]);
        let cas = &r.jx * &r.jx + &r.jy * &r.jy + &r.jz * &r.jz;
        assert!(max_abs(&(cas - DMatrix::identity(3, 3).map(|v: Complex64| v * 2.0))) < 1e-12);
    }

    #[test]
    fn commutators_and_casimir() {
        for j in [1, 3, 8] {
            let r = angular_momentum(j).unwrap();
            let i = Complex64::new(0.0, 1.0);
            let comm = |p: &DMatrix<Complex64>, q: &DMatrix<Complex64>| p * q - q * p;
            assert!(max_abs(&(comm(&r.jx, &r.jy) - &r.jz * i)) < 1e-10);
            assert!(max_abs(&(comm(&r.jy, &r.jz) - &r.jx * i)) < 1e-10);
            assert!(max_abs(&(comm(&r.jz, &r.jx) - &r.jy * i)) < 1e-10);
            let jj = f64::from(j * (j + 1));
            let cas = &r.jx * &r.jx + &r.jy * &r.jy + &r.jz * &r.jz;
            let id = DMatrix::<Complex64>::identity(r.dim(), r.dim()).map(|v| v * jj);
            assert!(max_abs(&(cas - id)) < 1e-10);
        }
    }

    #[test]
    fn j0_is_rejected() {
        assert!(matches!(angular_momentum(0), Err(Error::InvalidJ(0))));
        assert!(matches!(
            count_bands(0, ControlPoint::new(0.0, 0.0), None),
            Err(Error::InvalidJ(0))
        ));
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let h = build_quantum_hamiltonian(1, ControlPoint::new(0.0, 0.0), Ordering::Weyl).unwrap();
        assert_eq!(h.dim(), 9);
        assert!(h.hermiticity_residual() <= 1e-12);
        let h = build_quantum_hamiltonian(4, ControlPoint::new(0.4, -1.3), Ordering::Naive).unwrap();
        assert!(h.hermiticity_residual() <= 1e-12);
    }

    #[test]
    fn coriolis_counts_at_j10() {
        let q = count_bands(10, ControlPoint::new(0.0, 0.0), Some(&[-2, 0, 2])).unwrap();
        assert_eq!(q.counts, [19, 21, 23]);
        assert_eq!(q.matches, Some(true));
        assert_eq!(q.implied_chern(), vec![-2, 0, 2]);
    }

    #[test]
    fn classical_limit_band_edges() {
        let j = 40;
        let q = count_bands(j, ControlPoint::new(0.0, 0.0), None).unwrap();
        let e = &q.eigenvalues;
        let tol = 2.0 / f64::from(j);
        assert!((e[0] + 1.0).abs() < tol);
        assert!((e[e.len() - 1] - 1.0).abs() < tol);
        let middle = &e[q.boundaries[0]..q.boundaries[1]];
        assert!(middle.iter().all(|v| v.abs() < tol));
    }

    #[test]
    fn ordering_does_not_change_counts() {
        for c in [
            ControlPoint::new(0.0, 0.0),
            ControlPoint::new(1.0, 2.0),
            ControlPoint::new(-1.0, -2.0),
        ] {
            let weyl = quantum_spectrum(10, c, Ordering::Weyl).unwrap();
            let naive = quantum_spectrum(10, c, Ordering::Naive).unwrap();
            let shift = weyl.iter().zip(&naive).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(shift < 1.0 / 10.0, "shift {shift}");
            assert_eq!(split_bands(&weyl).unwrap().0, split_bands(&naive).unwrap().0);
        }
    }

    #[test]
    fn narrow_gap_is_ambiguous_until_larger_j() {
        // Counts are right at J = 10 but the band gaps barely beat the
        // intra-band spacing.
        let c = ControlPoint::new(1.0, 0.0);
        assert!(matches!(count_bands(10, c, None), Err(Error::AmbiguousBands { .. })));
        let q = count_bands(20, c, Some(&[4, -6, 2])).unwrap();
        assert_eq!(q.counts, [45, 35, 43]);
        assert_eq!(q.matches, Some(true));
    }

    #[test]
    fn near_wall_small_j_is_ambiguous() {
        let r = count_bands(2, ControlPoint::new(1.0 / 3.0 + 1e-3, 0.0), None);
        assert!(matches!(r, Err(Error::AmbiguousBands { .. })), "{r:?}");
    }

    #[test]
    fn sweep_reports_threshold() {
        let js: Vec<u32> = (5..=8).collect();
        let rep = sweep_j(ControlPoint::new(0.0, 0.0), &js, Some(&[-2, 0, 2]));
        assert!(rep.entries.iter().all(SweepEntry::matches));
        assert_eq!(rep.j_star, Some(5));
        let csv = spectrum_csv(&rep.entries.iter().filter_map(|e| e.count.clone()).collect::<Vec<_>>());
        assert_eq!(csv.lines().count(), 1 + (11 + 13 + 15 + 17) * 3);
    }
}
