#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use tcvqite::pauli::{OperatorSum, Pauli, PauliString};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn letter_matrix(p: Pauli) -> DMatrix<Complex64> {
    let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
    match p {
        Pauli::I => DMatrix::from_row_slice(2, 2, &[l, o, o, l]),
        Pauli::X => DMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        Pauli::Y => DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        Pauli::Z => DMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
    }
}

/// `P_{n-1} ⊗ … ⊗ P_0`, so qubit 0 is the least significant index bit.
pub fn kron_string(s: &PauliString) -> DMatrix<Complex64> {
    let mut m = DMatrix::from_element(1, 1, c(1.0, 0.0));
    for q in (0..s.qubit_count()).rev() {
        m = m.kronecker(&letter_matrix(s.letter(q)));
    }
    m
}

pub fn kron_sum(h: &OperatorSum) -> DMatrix<Complex64> {
    let d = 1usize << h.qubit_count();
    let mut m = DMatrix::zeros(d, d);
    for t in h.iter() {
        m += kron_string(&t.string) * t.coeff;
    }
    m
}

pub fn max_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `exp(J Σ n↑n↓)` as a diagonal matrix, site `s` on qubits `2s`, `2s+1`.
pub fn gutzwiller_diag(qubits: usize, j: f64) -> DMatrix<Complex64> {
    let d = 1usize << qubits;
    DMatrix::from_fn(d, d, |r, col| {
        if r != col {
            return c(0.0, 0.0);
        }
        let doubles = (0..qubits / 2).filter(|s| (r >> (2 * s)) & 3 == 3).count();
        c((j * doubles as f64).exp(), 0.0)
    })
}
