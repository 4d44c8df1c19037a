use chernwall::chern::band_fluxes;
use chernwall::mesh::SphereMesh;
use chernwall::model::HermitianMatrix;
use chernwall::symmetry::octahedral_rotations;
use chernwall::walls::{delta_chern, wall_distance};
use chernwall::{
    build_hamiltonian, chern_numbers, discriminant, eigensolve, ChernOptions, ControlPoint, SpherePoint, TripletModel,
    WallId,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn sphere_point() -> impl Strategy<Value = SpherePoint> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter("nonzero", |(x, y, z)| x * x + y * y + z * z > 1e-4)
        .prop_map(|(x, y, z)| SpherePoint::new(x, y, z))
}

fn control() -> impl Strategy<Value = ControlPoint> {
    (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b)| ControlPoint::new(a, b))
}

fn hermitian3() -> impl Strategy<Value = HermitianMatrix> {
    prop::collection::vec(-2.0f64..2.0, 9).prop_map(|v| {
        let c = Complex64::new;
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(v[0], 0.0),
                c(v[3], v[4]),
                c(v[5], v[6]),
                c(v[3], -v[4]),
                c(v[1], 0.0),
                c(v[7], v[8]),
                c(v[5], -v[6]),
                c(v[7], -v[8]),
                c(v[2], 0.0),
            ],
        );
        HermitianMatrix::new(m).unwrap()
    })
}

proptest! {
    #[test]
    fn hamiltonian_is_hermitian_and_traceless(p in sphere_point(), c in control()) {
        let h = build_hamiltonian(&p, c);
        prop_assert!(h.hermiticity_residual() <= 1e-12);
        prop_assert!(h.trace().abs() <= 1e-12);
    }

    #[test]
    fn spectrum_is_octahedrally_invariant(p in sphere_point(), c in control(), k in 0usize..24) {
        let g = octahedral_rotations()[k];
        let e = eigensolve(&build_hamiltonian(&p, c)).eigenvalues;
        let f = eigensolve(&build_hamiltonian(&g.apply(&p), c)).eigenvalues;
        for (x, y) in e.iter().zip(f.iter()) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn eigenpairs_reconstruct(p in sphere_point(), c in control()) {
        let h = build_hamiltonian(&p, c);
        let s = eigensolve(&h);
        for n in 0..3 {
            let v = s.eigenvectors.column(n);
            let r = h.matrix() * v - v * Complex64::new(s.eigenvalues[n], 0.0);
            prop_assert!(r.norm() <= 1e-12, "residual {}", r.norm());
        }
        prop_assert!(s.eigenvalues[0] <= s.eigenvalues[1] && s.eigenvalues[1] <= s.eigenvalues[2]);
    }

    #[test]
    fn discriminant_is_product_of_squared_differences(h in hermitian3()) {
        let e = eigensolve(&h).eigenvalues;
        let prod = ((e[0] - e[1]) * (e[0] - e[2]) * (e[1] - e[2])).powi(2);
        let d = discriminant(&h).unwrap();
        let spread = (e[2] - e[0]).max(1e-3);
        prop_assert!((d - prod).abs() <= 1e-8 * spread.powi(6), "{d} vs {prod}");
    }

    #[test]
    fn crossing_reversal_negates(b in -2.5f64..2.5, tilt in -2.0f64..2.0) {
        let w = WallId::APlusThird.wall();
        let c = ControlPoint::new(1.0 / 3.0, b);
        let clearance = WallId::ALL[1..].iter().map(|o| o.wall().distance(c)).fold(f64::INFINITY, f64::min);
        prop_assume!(clearance >= 0.15);
        let fwd = delta_chern(&w, c, [1.0, tilt]).unwrap();
        let back = delta_chern(&w, c, [-1.0, -tilt]).unwrap();
        let neg: Vec<i64> = fwd.delta.iter().map(|d| -d).collect();
        prop_assert_eq!(back.delta, neg);
        prop_assert_eq!(fwd.sum(), 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn chern_triples_sum_to_zero(c in (-1.2f64..1.2, -2.5f64..2.5).prop_map(|(a, b)| ControlPoint::new(a, b))) {
        prop_assume!(wall_distance(c) >= 0.1);
        let r = chern_numbers(&TripletModel::new(c), 32, &ChernOptions::default()).unwrap();
        prop_assert_eq!(r.sum(), 0);
    }

    #[test]
    fn chern_numbers_are_gauge_invariant(seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mesh = SphereMesh::cube_gnomonic(16);
        let c = ControlPoint::new(1.0, 2.0);
        let states: Vec<DMatrix<Complex64>> = mesh.vertices.iter().map(|p| eigensolve(&build_hamiltonian(p, c)).eigenvectors).collect();
        let base: Vec<i64> = band_fluxes(&mesh, &states).iter().map(|x| x.round() as i64).collect();
        let twisted: Vec<DMatrix<Complex64>> = states
            .iter()
            .map(|s| {
                let mut t = s.clone();
                for mut col in t.column_iter_mut() {
                    col *= Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
                }
                t
            })
            .collect();
        let after: Vec<i64> = band_fluxes(&mesh, &twisted).iter().map(|x| x.round() as i64).collect();
        prop_assert_eq!(base, after);
    }
}
