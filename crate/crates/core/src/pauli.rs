//! Pauli strings, weighted Pauli terms and simplified operator sums.
//!
//! A Pauli string on `n` qubits is stored in symplectic form as two bit masks,
//! `x` and `z`, with qubit `k` on bit `k`. The operator it denotes is the tensor
//! product of single-qubit letters where `(x, z) = (0, 0)` is `I`, `(1, 0)` is
//! `X`, `(0, 1)` is `Z` and `(1, 1)` is `Y`. Using `Y = iXZ`, every string equals
//! `i^{|x & z|} X^x Z^z`, which is how phases are tracked through products.
//!
//! Text form: one term per line, `<re> <im> <letters>`, where `letters[k]` is the
//! letter on qubit `k` (so qubit 0 is the leftmost character).

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default magnitude below which coefficients are dropped from an [`OperatorSum`].
pub const DEFAULT_DROP_TOLERANCE: f64 = 1e-12;

/// Largest qubit count representable by the bit-mask encoding.
pub const MAX_QUBITS: usize = 64;

const I_POW: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];

/// `i^k` for any integer `k`.
#[inline]
pub fn i_pow(k: u32) -> Complex64 {
    I_POW[(k & 3) as usize]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// A phase-free tensor product of single-qubit Pauli letters.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    x: u64,
    z: u64,
    n: usize,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits are supported");
        Self { x: 0, z: 0, n }
    }

    /// Builds a string from raw masks. Bits at or above `n` must be clear.
    pub fn from_masks(n: usize, x: u64, z: u64) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits { qubits: n, cap: MAX_QUBITS });
        }
        let valid = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        if (x | z) & !valid != 0 {
            return Err(Error::invalid("pauli mask has bits beyond the qubit count"));
        }
        Ok(Self { x, z, n })
    }

    /// Builds a string from `(qubit, letter)` pairs; unspecified qubits are `I`.
    pub fn from_sparse(n: usize, letters: &[(usize, Pauli)]) -> Result<Self> {
        let mut s = Self::identity(n);
        for &(q, p) in letters {
            if q >= n {
                return Err(Error::IndexOutOfRange { index: q, len: n });
            }
            s.set(q, p);
        }
        Ok(s)
    }

    pub fn from_letters(letters: &[Pauli]) -> Self {
        let mut s = Self::identity(letters.len());
        for (q, &p) in letters.iter().enumerate() {
            s.set(q, p);
        }
        s
    }

    fn set(&mut self, q: usize, p: Pauli) {
        let (xb, zb) = p.bits();
        let bit = 1u64 << q;
        self.x = if xb { self.x | bit } else { self.x & !bit };
        self.z = if zb { self.z | bit } else { self.z & !bit };
    }

    pub fn qubit_count(&self) -> usize {
        self.n
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn letter(&self, q: usize) -> Pauli {
        Pauli::from_bits(self.x >> q & 1 == 1, self.z >> q & 1 == 1)
    }

    pub fn letters(&self) -> Vec<Pauli> {
        (0..self.n).map(|q| self.letter(q)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// True when the string contains only `I` and `Z` letters.
    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    /// Number of `Y` letters.
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Action on a computational basis state: `P|b> = phase * |b'>`.
    #[inline]
    pub fn apply_to_basis(&self, basis: usize) -> (Complex64, usize) {
        let b = basis as u64;
        let sign = (b & self.z).count_ones() & 1;
        let phase = i_pow(self.y_count() + 2 * sign);
        (phase, (b ^ self.x) as usize)
    }

    /// Product `self * other` as a phase and a string.
    pub fn multiply(&self, other: &PauliString) -> Result<(Complex64, PauliString)> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        let out = PauliString { x: self.x ^ other.x, z: self.z ^ other.z, n: self.n };
        // i^{ya} X^xa Z^za i^{yb} X^xb Z^zb = i^{ya+yb} (-1)^{|za & xb|} X^x Z^z
        let exponent = self.y_count() + other.y_count() + 2 * (self.z & other.x).count_ones()
            + 4 * MAX_QUBITS as u32
            - out.y_count();
        Ok((i_pow(exponent), out))
    }

    /// True when the two strings commute.
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n {
            write!(f, "{}", self.letter(q).as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| Error::invalid(format!("bad pauli letter {c:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if letters.len() > MAX_QUBITS {
            return Err(Error::TooManyQubits { qubits: letters.len(), cap: MAX_QUBITS });
        }
        Ok(Self::from_letters(&letters))
    }
}

// Lexicographic order of the letter strings, qubit 0 first, with I < X < Y < Z.
impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        let diff = (self.x ^ other.x) | (self.z ^ other.z);
        if diff == 0 {
            return self.n.cmp(&other.n);
        }
        let q = diff.trailing_zeros() as usize;
        if q >= self.n.min(other.n) {
            return self.n.cmp(&other.n);
        }
        self.letter(q).cmp(&other.letter(q))
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A Pauli string with a complex coefficient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliTerm {
    pub coeff: Complex64,
    pub string: PauliString,
}

impl PauliTerm {
    pub fn new(coeff: Complex64, string: PauliString) -> Self {
        Self { coeff, string }
    }

    pub fn unit(string: PauliString) -> Self {
        Self { coeff: Complex64::new(1.0, 0.0), string }
    }

    pub fn parse(coeff: Complex64, letters: &str) -> Result<Self> {
        Ok(Self { coeff, string: letters.parse()? })
    }

    pub fn qubit_count(&self) -> usize {
        self.string.qubit_count()
    }
}

/// Operator product of two terms, with the phase folded into the coefficient.
pub fn multiply_pauli(a: &PauliTerm, b: &PauliTerm) -> Result<PauliTerm> {
    let (phase, string) = a.string.multiply(&b.string)?;
    Ok(PauliTerm { coeff: a.coeff * b.coeff * phase, string })
}

/// A simplified weighted sum of Pauli strings.
///
/// No two stored terms share a string and coefficients with magnitude below the
/// drop tolerance are removed. Iteration order is the lexicographic order of
/// the letter strings.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSum {
    qubit_count: usize,
    terms: BTreeMap<PauliString, Complex64>,
    tolerance: f64,
}

impl OperatorSum {
    pub fn new(qubit_count: usize) -> Self {
        Self::with_tolerance(qubit_count, DEFAULT_DROP_TOLERANCE)
    }

    pub fn with_tolerance(qubit_count: usize, tolerance: f64) -> Self {
        assert!(qubit_count <= MAX_QUBITS, "at most {MAX_QUBITS} qubits are supported");
        Self { qubit_count, terms: BTreeMap::new(), tolerance }
    }

    pub fn identity(qubit_count: usize, coeff: Complex64) -> Self {
        let mut s = Self::new(qubit_count);
        s.add_term(PauliTerm::new(coeff, PauliString::identity(qubit_count)))
            .expect("matching qubit count");
        s
    }

    pub fn from_terms(qubit_count: usize, terms: impl IntoIterator<Item = PauliTerm>) -> Result<Self> {
        let mut s = Self::new(qubit_count);
        for t in terms {
            s.add_term(t)?;
        }
        Ok(s)
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of stored terms other than the identity.
    pub fn non_identity_len(&self) -> usize {
        self.terms.keys().filter(|s| !s.is_identity()).count()
    }

    pub fn coefficient(&self, string: &PauliString) -> Complex64 {
        self.terms.get(string).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = PauliTerm> + '_ {
        self.terms.iter().map(|(s, c)| PauliTerm::new(*c, *s))
    }

    /// Merges `term` into the sum in place.
    pub fn add_term(&mut self, term: PauliTerm) -> Result<()> {
        if term.qubit_count() != self.qubit_count {
            return Err(Error::DimensionMismatch { expected: self.qubit_count, found: term.qubit_count() });
        }
        let entry = self.terms.entry(term.string).or_default();
        *entry += term.coeff;
        if entry.norm() < self.tolerance {
            self.terms.remove(&term.string);
        }
        Ok(())
    }

    pub fn add_sum(&mut self, other: &OperatorSum) -> Result<()> {
        if other.qubit_count != self.qubit_count {
            return Err(Error::DimensionMismatch { expected: self.qubit_count, found: other.qubit_count });
        }
        for t in other.iter() {
            self.add_term(t)?;
        }
        Ok(())
    }

    pub fn scale(&self, factor: Complex64) -> OperatorSum {
        let mut out = OperatorSum::with_tolerance(self.qubit_count, self.tolerance);
        for t in self.iter() {
            out.add_term(PauliTerm::new(t.coeff * factor, t.string)).expect("same qubit count");
        }
        out
    }

    /// Operator product, expanded term by term and simplified.
    pub fn multiply(&self, other: &OperatorSum) -> Result<OperatorSum> {
        if other.qubit_count != self.qubit_count {
            return Err(Error::DimensionMismatch { expected: self.qubit_count, found: other.qubit_count });
        }
        let mut out = OperatorSum::with_tolerance(self.qubit_count, self.tolerance);
        for a in self.iter() {
            for b in other.iter() {
                out.add_term(multiply_pauli(&a, &b)?)?;
            }
        }
        Ok(out)
    }

    /// Hermitian conjugate. Pauli strings are self-adjoint, so only the
    /// coefficients are conjugated.
    pub fn adjoint(&self) -> OperatorSum {
        let terms = self.terms.iter().map(|(s, c)| (*s, c.conj())).collect();
        OperatorSum { qubit_count: self.qubit_count, terms, tolerance: self.tolerance }
    }

    pub fn is_hermitian(&self) -> bool {
        self.terms.values().all(|c| c.im.abs() < self.tolerance)
    }

    /// Largest coefficient deviation between two sums over the union of their strings.
    pub fn max_abs_diff(&self, other: &OperatorSum) -> f64 {
        let mut worst: f64 = 0.0;
        for (s, c) in &self.terms {
            worst = worst.max((c - other.coefficient(s)).norm());
        }
        for (s, c) in &other.terms {
            if !self.terms.contains_key(s) {
                worst = worst.max(c.norm());
            }
        }
        worst
    }

    /// Text form, one `<re> <im> <letters>` line per term in letter order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (s, c) in &self.terms {
            out.push_str(&format!("{:?} {:?} {}\n", c.re, c.im, s));
        }
        out
    }

    /// Parses the text form. Blank lines and lines starting with `#` are skipped.
    pub fn from_text(text: &str, qubit_count: usize) -> Result<OperatorSum> {
        let mut out = OperatorSum::new(qubit_count);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: lineno + 1, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(parse_err(format!("expected 3 fields, found {}", fields.len())));
            }
            let re: f64 = fields[0].parse().map_err(|e| parse_err(format!("real part: {e}")))?;
            let im: f64 = fields[1].parse().map_err(|e| parse_err(format!("imaginary part: {e}")))?;
            let string: PauliString = fields[2].parse().map_err(|e: Error| parse_err(e.to_string()))?;
            if string.qubit_count() != qubit_count {
                return Err(parse_err(format!(
                    "letters cover {} qubits, expected {qubit_count}",
                    string.qubit_count()
                )));
            }
            out.add_term(PauliTerm::new(Complex64::new(re, im), string))?;
        }
        Ok(out)
    }
}

/// Adds `term` to `sum`, returning the merged sum.
pub fn add_into(sum: &OperatorSum, term: PauliTerm) -> Result<OperatorSum> {
    let mut out = sum.clone();
    out.add_term(term)?;
    Ok(out)
}
