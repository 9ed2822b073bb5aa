//! Fermi-Hubbard Hamiltonians on open rectangular lattices.
//!
//! Spin orbitals are indexed `2 * site + spin` with spin up = 0 and spin
//! down = 1; sites are numbered row-major. Same-site up/down pairs therefore
//! sit on neighbouring qubits.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{jordan_wigner, FermionSum, FermionTerm, Ladder};
use crate::pauli::{OperatorSum, PauliString};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Open,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub rows: usize,
    pub cols: usize,
    pub boundary: Boundary,
}

impl LatticeSpec {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!("lattice must be at least 1x1, got {rows}x{cols}")));
        }
        Ok(Self { rows, cols, boundary: Boundary::Open })
    }

    pub fn sites(&self) -> usize {
        self.rows * self.cols
    }

    pub fn qubit_count(&self) -> usize {
        2 * self.sites()
    }

    /// Nearest-neighbour pairs `(i, j)` with `i < j`. Sites are visited in
    /// row-major order, emitting the right neighbour before the one below.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let i = r * self.cols + c;
                if c + 1 < self.cols {
                    out.push((i, i + 1));
                }
                if r + 1 < self.rows {
                    out.push((i, i + self.cols));
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HubbardParams {
    pub t: f64,
    pub u: f64,
    pub j: f64,
}

impl HubbardParams {
    pub fn new(t: f64, u: f64, j: f64) -> Result<Self> {
        let p = Self { t, u, j };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t.is_finite() && self.u.is_finite() && self.j.is_finite()) {
            return Err(Error::invalid("hubbard parameters must be finite"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spin {
    Up = 0,
    Down = 1,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];

    pub fn opposite(self) -> Spin {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }
}

/// Spin-orbital (mode, qubit) index of `site` with `spin`.
pub fn mode(site: usize, spin: Spin) -> usize {
    2 * site + spin as usize
}

fn hopping(lat: &LatticeSpec, t: f64) -> Result<FermionSum> {
    let mut f = FermionSum::new(lat.qubit_count());
    for (i, j) in lat.edges() {
        for s in Spin::BOTH {
            let (p, q) = (mode(i, s), mode(j, s));
            f.push(FermionTerm::real(-t, vec![Ladder::create(p), Ladder::annihilate(q)]))?;
            f.push(FermionTerm::real(-t, vec![Ladder::create(q), Ladder::annihilate(p)]))?;
        }
    }
    Ok(f)
}

fn double_occupancy(lat: &LatticeSpec, weight: f64) -> Result<FermionSum> {
    let mut f = FermionSum::new(lat.qubit_count());
    for i in 0..lat.sites() {
        let (up, down) = (mode(i, Spin::Up), mode(i, Spin::Down));
        f.push(FermionTerm::real(
            weight,
            vec![Ladder::create(up), Ladder::annihilate(up), Ladder::create(down), Ladder::annihilate(down)],
        ))?;
    }
    Ok(f)
}

/// Regular Hubbard Hamiltonian
/// `-t Σ_{<ij>,σ} (a†_iσ a_jσ + h.c.) + U Σ_i n_i↑ n_i↓` on qubits.
pub fn build_hubbard(lat: &LatticeSpec, p: &HubbardParams) -> Result<OperatorSum> {
    p.validate()?;
    let mut h = jordan_wigner(&hopping(lat, p.t)?)?;
    h.add_sum(&jordan_wigner(&double_occupancy(lat, p.u)?)?)?;
    Ok(h)
}

/// Gutzwiller-transcorrelated Hamiltonian `e^{-Jĝ} H e^{Jĝ}` with
/// `ĝ = Σ_i n_i↑ n_i↓`, written as `H` plus correlated hopping corrections on
/// every ordered neighbour pair.
pub fn build_tc_hubbard(lat: &LatticeSpec, p: &HubbardParams) -> Result<OperatorSum> {
    let mut h = build_hubbard(lat, p)?;
    if p.j == 0.0 {
        return Ok(h);
    }
    let up_factor = p.j.exp() - 1.0;
    let down_factor = (-p.j).exp() - 1.0;
    let pair_factor = -2.0 * (p.j.cosh() - 1.0);

    let mut f = FermionSum::new(lat.qubit_count());
    for (a, b) in lat.edges() {
        for (i, j) in [(a, b), (b, a)] {
            for s in Spin::BOTH {
                let hop = [Ladder::create(mode(i, s)), Ladder::annihilate(mode(j, s))];
                let n_j = [Ladder::create(mode(j, s.opposite())), Ladder::annihilate(mode(j, s.opposite()))];
                let n_i = [Ladder::create(mode(i, s.opposite())), Ladder::annihilate(mode(i, s.opposite()))];
                f.push(FermionTerm::real(-p.t * up_factor, [&hop[..], &n_j[..]].concat()))?;
                f.push(FermionTerm::real(-p.t * down_factor, [&hop[..], &n_i[..]].concat()))?;
                f.push(FermionTerm::real(-p.t * pair_factor, [&hop[..], &n_i[..], &n_j[..]].concat()))?;
            }
        }
    }
    h.add_sum(&jordan_wigner(&f)?)?;
    Ok(h)
}

/// The regular Hamiltonian with the on-site interaction switched off.
pub fn build_noninteracting(lat: &LatticeSpec, p: &HubbardParams) -> Result<OperatorSum> {
    build_hubbard(lat, &HubbardParams { u: 0.0, ..*p })
}

/// `Σ_i n_i↑ n_i↓`, diagonal in the computational basis.
pub fn gutzwiller_generator(lat: &LatticeSpec) -> Result<OperatorSum> {
    jordan_wigner(&double_occupancy(lat, 1.0)?)
}

/// Total particle number `N = Σ_p n_p`.
pub fn number_operator(qubits: usize) -> OperatorSum {
    let mut n = OperatorSum::identity(qubits, Complex64::new(qubits as f64 / 2.0, 0.0));
    for q in 0..qubits {
        let z = PauliString::from_masks(qubits, 0, 1 << q).expect("valid mask");
        n.add_term(crate::pauli::PauliTerm::new(Complex64::new(-0.5, 0.0), z)).expect("same size");
    }
    n
}

/// Total `S_z = ½ Σ_i (n_i↑ − n_i↓)`.
pub fn sz_operator(lat: &LatticeSpec) -> OperatorSum {
    let n = lat.qubit_count();
    let mut s = OperatorSum::new(n);
    for i in 0..lat.sites() {
        for (spin, sign) in [(Spin::Up, -0.25), (Spin::Down, 0.25)] {
            let z = PauliString::from_masks(n, 0, 1 << mode(i, spin)).expect("valid mask");
            s.add_term(crate::pauli::PauliTerm::new(Complex64::new(sign, 0.0), z)).expect("same size");
        }
    }
    s
}
