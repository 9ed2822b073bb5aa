mod common;

use common::*;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use tcvqite::fermion::{jordan_wigner, FermionSum, FermionTerm, Ladder};
use tcvqite::oracle::dense_matrix;
use tcvqite::pauli::{add_into, multiply_pauli, OperatorSum, Pauli, PauliString, PauliTerm};
use tcvqite::statevector::{apply_sum, Amplitudes, StateVector};

fn letter() -> impl Strategy<Value = Pauli> {
    prop_oneof![Just(Pauli::I), Just(Pauli::X), Just(Pauli::Y), Just(Pauli::Z)]
}

fn string(n: usize) -> impl Strategy<Value = PauliString> {
    prop::collection::vec(letter(), n).prop_map(|l| PauliString::from_letters(&l))
}

fn coeff() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| c(a, b))
}

fn term(n: usize) -> impl Strategy<Value = PauliTerm> {
    (coeff(), string(n)).prop_map(|(k, s)| PauliTerm::new(k, s))
}

fn sum(n: usize) -> impl Strategy<Value = OperatorSum> {
    prop::collection::vec(term(n), 0..8).prop_map(move |ts| OperatorSum::from_terms(n, ts).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn string_product_matches_matrices(a in term(3), b in term(3)) {
        let p = multiply_pauli(&a, &b).unwrap();
        let dense = kron_string(&a.string) * a.coeff * kron_string(&b.string) * b.coeff;
        prop_assert!(max_diff(&(kron_string(&p.string) * p.coeff), &dense) < 1e-12);
    }

    #[test]
    fn sum_product_matches_matrices(a in sum(3), b in sum(3)) {
        let p = a.multiply(&b).unwrap();
        prop_assert!(max_diff(&kron_sum(&p), &(kron_sum(&a) * kron_sum(&b))) < 1e-10);
    }

    #[test]
    fn dense_builder_agrees_with_kronecker(h in sum(4)) {
        prop_assert!(max_diff(&dense_matrix(&h).unwrap(), &kron_sum(&h)) < 1e-12);
        prop_assert!(max_diff(&dense_matrix(&h.adjoint()).unwrap(), &kron_sum(&h).adjoint()) < 1e-12);
    }

    #[test]
    fn operator_application_matches_matrix(h in sum(3), re in prop::collection::vec(-1.0..1.0f64, 8), im in prop::collection::vec(-1.0..1.0f64, 8)) {
        prop_assume!(re.iter().chain(&im).any(|v| v.abs() > 1e-3));
        let amps: Vec<Complex64> = re.iter().zip(&im).map(|(a, b)| c(*a, *b)).collect();
        let s = StateVector::from_amplitudes(3, amps).unwrap();
        let out = apply_sum(&h, &s).unwrap();
        let v = DMatrix::from_column_slice(8, 1, s.amplitudes());
        let expect = kron_sum(&h) * v;
        for (x, y) in out.amplitudes().iter().zip(expect.iter()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn adding_terms_commutes(h in sum(3), a in term(3), b in term(3)) {
        let ab = add_into(&add_into(&h, a).unwrap(), b).unwrap();
        let ba = add_into(&add_into(&h, b).unwrap(), a).unwrap();
        prop_assert!(ab.max_abs_diff(&ba) < 1e-14);
    }

    #[test]
    fn text_round_trip(h in sum(4)) {
        let back = OperatorSum::from_text(&h.to_text(), 4).unwrap();
        prop_assert!(back.max_abs_diff(&h) < 1e-15);
    }

    #[test]
    fn commutation_flag_matches_matrices(a in string(3), b in string(3)) {
        let (ma, mb) = (kron_string(&a), kron_string(&b));
        let commutator = &ma * &mb - &mb * &ma;
        let zero = commutator.iter().all(|x| x.norm() < 1e-12);
        prop_assert_eq!(a.commutes_with(&b), zero);
    }
}

fn ladder_matrix(n: usize, op: Ladder) -> DMatrix<Complex64> {
    let mut f = FermionSum::new(n);
    f.push(FermionTerm::real(1.0, vec![op])).unwrap();
    kron_sum(&jordan_wigner(&f).unwrap())
}

#[test]
fn canonical_anticommutation() {
    let n = 4;
    let id = DMatrix::<Complex64>::identity(16, 16);
    for p in 0..n {
        for q in 0..n {
            let (ap, aq) = (ladder_matrix(n, Ladder::annihilate(p)), ladder_matrix(n, Ladder::annihilate(q)));
            let aq_dag = ladder_matrix(n, Ladder::create(q));
            let mixed = &ap * &aq_dag + &aq_dag * &ap;
            let expect = if p == q { id.clone() } else { DMatrix::zeros(16, 16) };
            assert!(max_diff(&mixed, &expect) < 1e-14, "{{a_{p}, a†_{q}}}");
            let same = &ap * &aq + &aq * &ap;
            assert!(same.iter().all(|x| x.norm() < 1e-14), "{{a_{p}, a_{q}}}");
            assert!(max_diff(&aq_dag, &aq.adjoint()) < 1e-15);
        }
    }
}

#[test]
fn number_operator_counts_set_bits() {
    let n = 3;
    for p in 0..n {
        let np = ladder_matrix(n, Ladder::create(p)) * ladder_matrix(n, Ladder::annihilate(p));
        for b in 0..8usize {
            assert!((np[(b, b)] - c(((b >> p) & 1) as f64, 0.0)).norm() < 1e-15);
        }
    }
}
