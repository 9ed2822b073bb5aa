mod common;

use common::*;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use tcvqite::ansatz::{build_hva, perturb_parameters, AnsatzProgram, ParameterVector};
use tcvqite::model::{build_hubbard, build_tc_hubbard, number_operator, sz_operator, HubbardParams, LatticeSpec};
use tcvqite::oracle::{eigenvalues, exact_imaginary_time, ground_pair};
use tcvqite::pauli::{PauliString, PauliTerm};
use tcvqite::statevector::{apply_rotation, inner, Amplitudes, StateVector};

fn lat(r: usize, cols: usize) -> LatticeSpec {
    LatticeSpec::new(r, cols).unwrap()
}

fn commutator_norm(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a * b - b * a).iter().map(|x| x.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn tc_is_a_similarity_transform(j in -1.0..1.0f64, u in 0.0..6.0f64) {
        for l in [lat(1, 2), lat(2, 2)] {
            let p = HubbardParams::new(1.0, u, j).unwrap();
            let h = kron_sum(&build_hubbard(&l, &p).unwrap());
            let d = gutzwiller_diag(l.qubit_count(), j);
            let d_inv = gutzwiller_diag(l.qubit_count(), -j);
            let expect = &d_inv * h * &d;
            let tc = kron_sum(&build_tc_hubbard(&l, &p).unwrap());
            prop_assert!(max_diff(&tc, &expect) < 1e-10);
        }
    }

    #[test]
    fn rotations_preserve_norm_and_compose(a in -4.0..4.0f64, b in -4.0..4.0f64, idx in 0usize..64, seed in 0u64..1000) {
        let letters = [tcvqite::pauli::Pauli::I, tcvqite::pauli::Pauli::X, tcvqite::pauli::Pauli::Y, tcvqite::pauli::Pauli::Z];
        let s = PauliString::from_letters(&[letters[idx % 4], letters[(idx / 4) % 4], letters[idx / 16]]);
        let g = PauliTerm::unit(s);
        let amps: Vec<Complex64> = (0..8).map(|k| c(((seed + k) as f64).sin(), ((seed * 3 + k) as f64).cos())).collect();
        let psi = StateVector::from_amplitudes(3, amps).unwrap();
        let once = apply_rotation(&g, a + b, &psi).unwrap();
        let twice = apply_rotation(&g, b, &apply_rotation(&g, a, &psi).unwrap()).unwrap();
        prop_assert!((once.norm() - 1.0).abs() < 1e-12);
        for (x, y) in once.amplitudes().iter().zip(twice.amplitudes()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
        let back = apply_rotation(&g, -a, &apply_rotation(&g, a, &psi).unwrap()).unwrap();
        prop_assert!((inner(&back, &psi).unwrap() - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn tangents_match_finite_differences(seed in 0u64..500) {
        let l = lat(1, 2);
        let p = HubbardParams::new(1.0, 4.0, -0.5).unwrap();
        let a = build_hva(&l, &p, 2, Some(2)).unwrap();
        let th = perturb_parameters(&ParameterVector::zeros(a.parameter_count()), 1.0, seed).unwrap();
        let phi = a.evaluate(&th).unwrap();
        let h = 1e-6;
        for i in 0..a.parameter_count() {
            let mut v = th.as_slice().to_vec();
            v[i] += h;
            let moved = a.evaluate(&ParameterVector::new(v).unwrap()).unwrap();
            let t = a.tangent(&th, i).unwrap();
            for ((m, p0), d) in moved.amplitudes().iter().zip(phi.amplitudes()).zip(t.amplitudes()) {
                prop_assert!(((m - p0) / h - d).norm() < 1e-5);
            }
        }
    }
}

#[test]
fn tc_conserves_particle_number_and_spin() {
    let l = lat(2, 2);
    let tc = kron_sum(&build_tc_hubbard(&l, &HubbardParams::new(1.0, 4.0, -0.5).unwrap()).unwrap());
    assert!(commutator_norm(&tc, &kron_sum(&number_operator(8))) < 1e-12);
    assert!(commutator_norm(&tc, &kron_sum(&sz_operator(&l))) < 1e-12);
}

#[test]
fn tc_is_isospectral_on_square() {
    let l = lat(2, 2);
    let reg = eigenvalues(&build_hubbard(&l, &HubbardParams::new(1.0, 4.0, 0.0).unwrap()).unwrap()).unwrap();
    for j in [-0.6, -0.5, 0.3] {
        let tc = eigenvalues(&build_tc_hubbard(&l, &HubbardParams::new(1.0, 4.0, j).unwrap()).unwrap()).unwrap();
        assert_eq!(reg.len(), tc.len());
        for (a, b) in reg.iter().zip(&tc) {
            assert!((a.re - b.re).abs() < 1e-8 && b.im.abs() < 1e-8, "J={j}: {a} vs {b}");
        }
    }
}

#[test]
fn ground_vectors_are_left_and_right_eigenvectors() {
    let l = lat(2, 2);
    let p = HubbardParams::new(1.0, 4.0, -0.5).unwrap();
    let h = build_tc_hubbard(&l, &p).unwrap();
    let m = kron_sum(&h);
    let g = ground_pair(&h).unwrap();
    let v = DMatrix::from_column_slice(256, 1, g.right_vector.amplitudes());
    let w = DMatrix::from_column_slice(256, 1, g.left_vector.amplitudes());
    let e = c(g.eigenvalue, 0.0);
    assert!(max_diff(&(&m * &v), &(&v * e)) < 1e-10);
    assert!(max_diff(&(m.adjoint() * &w), &(&w * e)) < 1e-10);
    // left and right ground vectors differ for J != 0
    let overlap = inner(&g.left_vector, &g.right_vector).unwrap().norm();
    assert!(overlap < 1.0 - 1e-6 && overlap > 0.1);
    // D maps the regular ground state onto the right vector: v ∝ D^{-1} ψ
    let reg = ground_pair(&build_hubbard(&l, &p).unwrap()).unwrap();
    let psi = DMatrix::from_column_slice(256, 1, reg.right_vector.amplitudes());
    let mapped = gutzwiller_diag(8, 0.5) * psi;
    let mapped = StateVector::from_amplitudes(8, mapped.iter().copied().collect()).unwrap();
    assert!(g.right_space.fidelity(&mapped).unwrap() > 1.0 - 1e-10);
}

#[test]
fn imaginary_time_reaches_right_ground() {
    let l = lat(2, 2);
    let p = HubbardParams::new(1.0, 4.0, -0.5).unwrap();
    let h = build_tc_hubbard(&l, &p).unwrap();
    let g = ground_pair(&h).unwrap();
    let a = build_hva(&l, &p, 0, None).unwrap();
    let out = exact_imaginary_time(&h, a.reference(), 50.0).unwrap();
    assert!(g.right_space.fidelity(&out).unwrap() > 1.0 - 1e-8);
    let adj = exact_imaginary_time(&h.adjoint(), a.reference(), 50.0).unwrap();
    assert!(g.left_space.fidelity(&adj).unwrap() > 1.0 - 1e-8);
}

#[test]
fn custom_ansatz_rejects_scaled_generators() {
    let r = StateVector::basis(2, 0).unwrap();
    let bad = PauliTerm::new(c(0.5, 0.0), "XY".parse().unwrap());
    assert!(AnsatzProgram::new(r, vec![bad], 1).is_err());
}
