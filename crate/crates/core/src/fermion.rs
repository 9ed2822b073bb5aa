//! Fermionic operator products and their Jordan-Wigner image.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{OperatorSum, PauliString, PauliTerm};

/// A single ladder operator: `a_mode` or, with `dagger`, `a†_mode`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ladder {
    pub mode: usize,
    pub dagger: bool,
}

impl Ladder {
    pub fn create(mode: usize) -> Self {
        Self { mode, dagger: true }
    }

    pub fn annihilate(mode: usize) -> Self {
        Self { mode, dagger: false }
    }
}

/// Coefficient times an ordered product of ladder operators (leftmost acts last).
#[derive(Clone, Debug, PartialEq)]
pub struct FermionTerm {
    pub coeff: Complex64,
    pub factors: Vec<Ladder>,
}

impl FermionTerm {
    pub fn new(coeff: Complex64, factors: Vec<Ladder>) -> Self {
        Self { coeff, factors }
    }

    pub fn real(coeff: f64, factors: Vec<Ladder>) -> Self {
        Self::new(Complex64::new(coeff, 0.0), factors)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FermionSum {
    mode_count: usize,
    terms: Vec<FermionTerm>,
}

impl FermionSum {
    pub fn new(mode_count: usize) -> Self {
        Self { mode_count, terms: Vec::new() }
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn terms(&self) -> &[FermionTerm] {
        &self.terms
    }

    pub fn push(&mut self, term: FermionTerm) -> Result<()> {
        if let Some(bad) = term.factors.iter().find(|f| f.mode >= self.mode_count) {
            return Err(Error::IndexOutOfRange { index: bad.mode, len: self.mode_count });
        }
        self.terms.push(term);
        Ok(())
    }

    /// Hermitian conjugate: reverses each product and flips every dagger.
    pub fn adjoint(&self) -> FermionSum {
        let terms = self
            .terms
            .iter()
            .map(|t| FermionTerm {
                coeff: t.coeff.conj(),
                factors: t.factors.iter().rev().map(|f| Ladder { mode: f.mode, dagger: !f.dagger }).collect(),
            })
            .collect();
        FermionSum { mode_count: self.mode_count, terms }
    }
}

/// Jordan-Wigner image of one ladder operator:
/// `a_p = ½(X_p + iY_p) Z_{p-1} ... Z_0`, `a†_p = ½(X_p − iY_p) Z_{p-1} ... Z_0`.
pub fn ladder_image(mode_count: usize, op: Ladder) -> Result<OperatorSum> {
    if op.mode >= mode_count {
        return Err(Error::IndexOutOfRange { index: op.mode, len: mode_count });
    }
    let parity = (1u64 << op.mode) - 1;
    let bit = 1u64 << op.mode;
    let x_string = PauliString::from_masks(mode_count, bit, parity)?;
    let y_string = PauliString::from_masks(mode_count, bit, parity | bit)?;
    let y_coeff = if op.dagger { Complex64::new(0.0, -0.5) } else { Complex64::new(0.0, 0.5) };
    OperatorSum::from_terms(
        mode_count,
        [PauliTerm::new(Complex64::new(0.5, 0.0), x_string), PauliTerm::new(y_coeff, y_string)],
    )
}

/// Maps a fermionic sum to qubits, one qubit per mode.
pub fn jordan_wigner(f: &FermionSum) -> Result<OperatorSum> {
    let n = f.mode_count();
    let mut out = OperatorSum::new(n);
    for term in f.terms() {
        let mut product = OperatorSum::identity(n, term.coeff);
        for &op in &term.factors {
            product = product.multiply(&ladder_image(n, op)?)?;
        }
        out.add_sum(&product)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn annihilator_image() {
        let a0 = ladder_image(1, Ladder::annihilate(0)).unwrap();
        assert_eq!(a0.coefficient(&"X".parse().unwrap()), c(0.5, 0.0));
        assert_eq!(a0.coefficient(&"Y".parse().unwrap()), c(0.0, 0.5));
        assert_eq!(a0.len(), 2);
    }

    #[test]
    fn number_operator() {
        let mut f = FermionSum::new(1);
        f.push(FermionTerm::real(1.0, vec![Ladder::create(0), Ladder::annihilate(0)])).unwrap();
        let q = jordan_wigner(&f).unwrap();
        let expect = OperatorSum::from_text("0.5 0.0 I\n-0.5 0.0 Z\n", 1).unwrap();
        assert!(q.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn hopping_pair() {
        let mut f = FermionSum::new(2);
        f.push(FermionTerm::real(1.0, vec![Ladder::create(0), Ladder::annihilate(1)])).unwrap();
        f.push(FermionTerm::real(1.0, vec![Ladder::create(1), Ladder::annihilate(0)])).unwrap();
        let q = jordan_wigner(&f).unwrap();
        let expect = OperatorSum::from_text("0.5 0.0 XX\n0.5 0.0 YY\n", 2).unwrap();
        assert!(q.max_abs_diff(&expect) < 1e-15, "{}", q.to_text());
    }

    #[test]
    fn mode_out_of_range() {
        let mut f = FermionSum::new(2);
        assert!(f.push(FermionTerm::real(1.0, vec![Ladder::create(2)])).is_err());
        assert!(ladder_image(2, Ladder::create(5)).is_err());
    }

    #[test]
    fn adjoint_reverses_products() {
        let mut f = FermionSum::new(3);
        f.push(FermionTerm::new(c(1.0, 2.0), vec![Ladder::create(0), Ladder::annihilate(2)])).unwrap();
        let a = f.adjoint();
        assert_eq!(a.terms()[0].coeff, c(1.0, -2.0));
        assert_eq!(a.terms()[0].factors, vec![Ladder::create(2), Ladder::annihilate(0)]);
    }
}
