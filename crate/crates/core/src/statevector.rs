//! Dense statevector simulation.
//!
//! Qubit `k` is bit `k` of the basis-state index (qubit 0 is least significant).

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{i_pow, OperatorSum, PauliString, PauliTerm};

const NORM_TOLERANCE: f64 = 1e-10;
const UNIT_COEFF_TOLERANCE: f64 = 1e-12;

/// Read access to a dense amplitude vector.
pub trait Amplitudes {
    fn amplitudes(&self) -> &[Complex64];

    fn qubit_count(&self) -> usize {
        self.amplitudes().len().trailing_zeros() as usize
    }

    fn norm(&self) -> f64 {
        self.amplitudes().iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// A normalized pure state on `qubit_count` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

/// An unnormalized vector in the same space, e.g. `H|φ>` or `∂|φ>/∂θ`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    amps: Vec<Complex64>,
}

impl Amplitudes for StateVector {
    fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }
}

impl Amplitudes for TangentVector {
    fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }
}

fn check_len(qubits: usize, len: usize) -> Result<()> {
    if qubits >= usize::BITS as usize - 1 || len != 1usize << qubits {
        return Err(Error::DimensionMismatch { expected: 1usize << qubits.min(40), found: len });
    }
    Ok(())
}

impl StateVector {
    /// Computational basis state `|index>`.
    pub fn basis(qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << qubits;
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, len: dim });
        }
        let mut amps = vec![Complex64::default(); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    pub fn zero(qubits: usize) -> Self {
        Self::basis(qubits, 0).expect("index 0 is always valid")
    }

    /// Normalizes `amps`; fails for a zero or non-finite vector.
    pub fn from_amplitudes(qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_len(qubits, amps.len())?;
        normalized(amps)
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// Multiplies by a phase so the first amplitude with magnitude above
    /// `threshold` is real and positive.
    pub fn fix_phase(mut self, threshold: f64) -> Self {
        if let Some(a) = self.amps.iter().find(|a| a.norm() > threshold) {
            let phase = a.conj() / a.norm();
            for x in &mut self.amps {
                *x *= phase;
            }
        }
        self
    }

    /// Little-endian binary form: `u64` qubit count, then interleaved `(re, im)` doubles.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 16 * self.amps.len());
        out.extend_from_slice(&(self.qubit_count() as u64).to_le_bytes());
        for a in &self.amps {
            out.extend_from_slice(&a.re.to_le_bytes());
            out.extend_from_slice(&a.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 {
            return Err(Error::invalid("statevector data shorter than its header"));
        }
        let qubits = u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes")) as usize;
        if qubits > 40 {
            return Err(Error::TooManyQubits { qubits, cap: 40 });
        }
        let body = &bytes[8..];
        if body.len() != 16 << qubits {
            return Err(Error::invalid(format!(
                "statevector body has {} bytes, expected {} for {qubits} qubits",
                body.len(),
                16usize << qubits
            )));
        }
        let amps = body
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                    f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
                )
            })
            .collect::<Vec<_>>();
        let s = Self { amps };
        if (s.norm() - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::invalid("stored statevector is not normalized"));
        }
        Ok(s)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

impl TangentVector {
    pub fn zeros(qubits: usize) -> Self {
        Self { amps: vec![Complex64::default(); 1usize << qubits] }
    }

    pub fn from_amplitudes(qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_len(qubits, amps.len())?;
        Ok(Self { amps })
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    /// Normalizes into a state; fails for a zero vector.
    pub fn normalize(self) -> Result<StateVector> {
        normalized(self.amps)
    }
}

impl From<StateVector> for TangentVector {
    fn from(s: StateVector) -> Self {
        Self { amps: s.amps }
    }
}

fn normalized(mut amps: Vec<Complex64>) -> Result<StateVector> {
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if !norm.is_finite() || norm == 0.0 {
        return Err(Error::numerical(format!("cannot normalize vector with norm {norm}")));
    }
    for a in &mut amps {
        *a /= norm;
    }
    Ok(StateVector { amps })
}

fn check_qubits(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Accumulates `coeff * P * input` into `out`.
pub(crate) fn accumulate_pauli(string: &PauliString, coeff: Complex64, input: &[Complex64], out: &mut [Complex64]) {
    let x = string.x_mask() as usize;
    let z = string.z_mask() as usize;
    let base = coeff * i_pow(string.y_count());
    for (b, a) in input.iter().enumerate() {
        let v = if (b & z).count_ones() & 1 == 1 { -base * a } else { base * a };
        out[b ^ x] += v;
    }
}

/// In-place `e^{iθP}` for a unit-coefficient string `P`, using
/// `e^{iθP} = cos θ + i sin θ P`.
pub(crate) fn rotate_in_place(string: &PauliString, angle: f64, amps: &mut [Complex64]) {
    if angle == 0.0 {
        return;
    }
    let (sin, cos) = angle.sin_cos();
    let x = string.x_mask() as usize;
    let z = string.z_mask() as usize;
    // i sin θ * i^{#Y}
    let base = Complex64::new(0.0, sin) * i_pow(string.y_count());
    let sign = |b: usize| (b & z).count_ones() & 1 == 1;
    if x == 0 {
        let plus = Complex64::new(cos, 0.0) + base;
        let minus = Complex64::new(cos, 0.0) - base;
        for (b, a) in amps.iter_mut().enumerate() {
            *a *= if sign(b) { minus } else { plus };
        }
        return;
    }
    let top = 1usize << (usize::BITS - 1 - x.leading_zeros());
    // (f & z) = (b & z) ^ (x & z), so the partner's phase differs by a fixed sign
    let flip = sign(x);
    for block in (0..amps.len()).step_by(2 * top) {
        for b in block..block + top {
            let f = b ^ x;
            let (ab, af) = (amps[b], amps[f]);
            // P|b> = pb|f>, P|f> = pf|b>
            let pb = if sign(b) { -base } else { base };
            let pf = if flip { -pb } else { pb };
            amps[b] = cos * ab + pf * af;
            amps[f] = cos * af + pb * ab;
        }
    }
}

/// `coeff * P|s>` for a single weighted string.
pub fn apply_pauli(term: &PauliTerm, s: &impl Amplitudes) -> Result<TangentVector> {
    check_qubits(term.qubit_count(), s.qubit_count())?;
    let mut out = vec![Complex64::default(); s.amplitudes().len()];
    accumulate_pauli(&term.string, term.coeff, s.amplitudes(), &mut out);
    Ok(TangentVector { amps: out })
}

/// `e^{iθP}|s>`; the generator must have coefficient exactly 1.
pub fn apply_rotation(generator: &PauliTerm, angle: f64, s: &StateVector) -> Result<StateVector> {
    check_qubits(generator.qubit_count(), s.qubit_count())?;
    if (generator.coeff - Complex64::new(1.0, 0.0)).norm() > UNIT_COEFF_TOLERANCE {
        return Err(Error::NonUnitGenerator(generator.coeff.to_string()));
    }
    let mut amps = s.amps.clone();
    rotate_in_place(&generator.string, angle, &mut amps);
    Ok(StateVector { amps })
}

/// `H|s>` accumulated term by term in the sum's fixed order.
pub fn apply_sum(h: &OperatorSum, s: &impl Amplitudes) -> Result<TangentVector> {
    check_qubits(h.qubit_count(), s.qubit_count())?;
    let mut out = vec![Complex64::default(); s.amplitudes().len()];
    for t in h.iter() {
        accumulate_pauli(&t.string, t.coeff, s.amplitudes(), &mut out);
    }
    Ok(TangentVector { amps: out })
}

/// `<a|b>`, conjugating the left argument.
pub fn inner(a: &impl Amplitudes, b: &impl Amplitudes) -> Result<Complex64> {
    let (x, y) = (a.amplitudes(), b.amplitudes());
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    Ok(dot(x, y))
}

#[inline]
pub(crate) fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        re += a.re * b.re + a.im * b.im;
        im += a.re * b.im - a.im * b.re;
    }
    Complex64::new(re, im)
}

/// `<s|H|s>`; complex in general since `H` need not be Hermitian.
pub fn expectation(h: &OperatorSum, s: &StateVector) -> Result<Complex64> {
    let hs = apply_sum(h, s)?;
    Ok(dot(&s.amps, &hs.amps))
}

/// Pure-state fidelity `|<a|b>|^2` of two vectors, each normalized first.
pub fn fidelity(a: &impl Amplitudes, b: &impl Amplitudes) -> Result<f64> {
    let overlap = inner(a, b)?;
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::numerical("fidelity of a zero vector"));
    }
    Ok((overlap.norm_sqr() / (na * na * nb * nb)).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn term(coeff: Complex64, letters: &str) -> PauliTerm {
        PauliTerm::parse(coeff, letters).unwrap()
    }

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() < tol)
    }

    #[test]
    fn pauli_on_basis_states() {
        let zero = StateVector::zero(1);
        let one = StateVector::basis(1, 1).unwrap();
        let v = apply_pauli(&term(c(1.0, 0.0), "X"), &zero).unwrap();
        assert_eq!(v.amplitudes(), one.amplitudes());
        let v = apply_pauli(&term(c(1.0, 0.0), "Z"), &one).unwrap();
        assert_eq!(v.amplitudes(), &[c(0.0, 0.0), c(-1.0, 0.0)]);
        let v = apply_pauli(&term(c(0.0, 2.0), "Y"), &zero).unwrap();
        assert_eq!(v.amplitudes(), &[c(0.0, 0.0), c(-2.0, 0.0)]);
        assert!(apply_pauli(&term(c(1.0, 0.0), "XX"), &zero).is_err());
    }

    #[test]
    fn rotation_examples() {
        let zero = StateVector::zero(1);
        let x = term(c(1.0, 0.0), "X");
        assert_eq!(apply_rotation(&x, 0.0, &zero).unwrap(), zero);
        let r = apply_rotation(&term(c(1.0, 0.0), "Z"), 0.3, &zero).unwrap();
        assert!(close(r.amplitudes(), &[Complex64::from_polar(1.0, 0.3), c(0.0, 0.0)], 1e-15));
        let r = apply_rotation(&x, FRAC_PI_2, &zero).unwrap();
        assert!(close(r.amplitudes(), &[c(0.0, 0.0), c(0.0, 1.0)], 1e-15));
        let err = apply_rotation(&term(c(2.0, 0.0), "X"), 0.1, &zero).unwrap_err();
        assert!(matches!(err, Error::NonUnitGenerator(_)));
    }

    #[test]
    fn rotation_matches_two_term_formula_with_y() {
        let s = StateVector::from_amplitudes(2, vec![c(0.1, 0.2), c(-0.3, 0.5), c(0.7, -0.1), c(0.2, 0.2)]).unwrap();
        let g = term(c(1.0, 0.0), "YZ");
        let r = apply_rotation(&g, 0.7, &s).unwrap();
        let p = apply_pauli(&g, &s).unwrap();
        let expect: Vec<Complex64> =
            s.amplitudes().iter().zip(p.amplitudes()).map(|(a, b)| 0.7f64.cos() * a + c(0.0, 0.7f64.sin()) * b).collect();
        assert!(close(r.amplitudes(), &expect, 1e-14));
    }

    #[test]
    fn sums() {
        let s = StateVector::from_amplitudes(1, vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let id = OperatorSum::identity(1, c(2.5, -1.0));
        let v = apply_sum(&id, &s).unwrap();
        assert!(close(v.amplitudes(), &[c(2.5, -1.0) * 0.6, c(2.5, -1.0) * c(0.0, 0.8)], 1e-15));
        let v = apply_sum(&OperatorSum::new(1), &s).unwrap();
        assert!(v.amplitudes().iter().all(|a| *a == c(0.0, 0.0)));
    }

    #[test]
    fn inner_products() {
        let s = StateVector::from_amplitudes(1, vec![c(0.6, 0.1), c(0.3, 0.8)]).unwrap();
        assert!((inner(&s, &s).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(inner(&StateVector::zero(1), &StateVector::basis(1, 1).unwrap()).unwrap(), c(0.0, 0.0));
        let is = TangentVector::from_amplitudes(1, s.amplitudes().iter().map(|a| a * c(0.0, 1.0)).collect()).unwrap();
        assert!((inner(&s, &is).unwrap() - c(0.0, 1.0)).norm() < 1e-15);
        assert!(inner(&s, &StateVector::zero(2)).is_err());
    }

    #[test]
    fn expectation_values() {
        let plus = StateVector::from_amplitudes(1, vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let z = OperatorSum::from_text("1.0 0.0 Z\n", 1).unwrap();
        assert!(expectation(&z, &plus).unwrap().norm() < 1e-15);
        let h = OperatorSum::from_text("0.3 0.0 X\n-0.7 0.0 Y\n1.0 0.0 Z\n", 1).unwrap();
        let s = StateVector::from_amplitudes(1, vec![c(0.2, 0.4), c(-0.5, 0.1)]).unwrap();
        assert!(expectation(&h, &s).unwrap().im.abs() < 1e-15);
    }

    #[test]
    fn binary_round_trip_and_layout() {
        let s = StateVector::from_amplitudes(1, vec![c(0.6, 0.0), c(0.0, -0.8)]).unwrap();
        let bytes = s.to_bytes();
        assert_eq!(bytes.len(), 8 + 32);
        assert_eq!(&bytes[..8], &1u64.to_le_bytes());
        assert_eq!(&bytes[8..16], &0.6f64.to_le_bytes());
        assert_eq!(&bytes[32..40], &(-0.8f64).to_le_bytes());
        assert_eq!(StateVector::from_bytes(&bytes).unwrap(), s);
        assert!(StateVector::from_bytes(&bytes[..20]).is_err());
    }

    #[test]
    fn phase_fix() {
        let s = StateVector::from_amplitudes(2, vec![c(0.0, 0.0), c(0.0, -0.6), c(0.8, 0.0), c(0.0, 0.0)])
            .unwrap()
            .fix_phase(1e-12);
        assert!((s.amplitudes()[1] - c(0.6, 0.0)).norm() < 1e-15);
        assert!((s.amplitudes()[2] - c(0.0, 0.8)).norm() < 1e-15);
    }
}
