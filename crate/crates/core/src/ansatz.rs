//! Hamiltonian-variational ansatz: layers of Pauli rotations generated by the
//! strings of the regular Hubbard Hamiltonian, applied to a non-interacting
//! reference state, with one extra parameter for the global phase.
//!
//! Parameter 0 is the global phase; parameter `1 + l * G + j` drives generator
//! `j` of layer `l`, where `G` is the number of generators per layer. The state
//! is `e^{iθ₀} R_M ⋯ R_2 R_1 |ref>` with `R_k = e^{iθ_k P_k}`, so the first
//! generator of the first layer acts first.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_hubbard, build_noninteracting, mode, HubbardParams, LatticeSpec, Spin};
use crate::oracle::{ground_pair, SparseOperator};
use crate::pauli::{PauliString, PauliTerm};
use crate::statevector::{accumulate_pauli, rotate_in_place, Amplitudes, StateVector, TangentVector};

const LEVEL_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector {
    values: Vec<f64>,
}

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("parameter vector has non-finite entries"));
        }
        Ok(Self { values })
    }

    pub fn zeros(len: usize) -> Self {
        Self { values: vec![0.0; len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

/// A layered Pauli-rotation circuit with a global-phase parameter.
#[derive(Clone, Debug)]
pub struct AnsatzProgram {
    reference: StateVector,
    generators: Vec<PauliString>,
    layers: usize,
}

impl AnsatzProgram {
    /// `generators` is one layer; every generator must have unit coefficient.
    pub fn new(reference: StateVector, generators: Vec<PauliTerm>, layers: usize) -> Result<Self> {
        let n = reference.qubit_count();
        let mut strings = Vec::with_capacity(generators.len());
        for g in generators {
            if g.qubit_count() != n {
                return Err(Error::DimensionMismatch { expected: n, found: g.qubit_count() });
            }
            if (g.coeff - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
                return Err(Error::NonUnitGenerator(g.coeff.to_string()));
            }
            strings.push(g.string);
        }
        Ok(Self { reference, generators: strings, layers })
    }

    pub fn reference(&self) -> &StateVector {
        &self.reference
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.generators
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn qubit_count(&self) -> usize {
        self.reference.qubit_count()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers * self.generators.len() + 1
    }

    /// Generator string driven by parameter `index`, or `None` for the global phase.
    pub fn generator_of(&self, index: usize) -> Option<&PauliString> {
        if index == 0 || index >= self.parameter_count() {
            return None;
        }
        Some(&self.generators[(index - 1) % self.generators.len()])
    }

    fn rotations<'a>(&'a self, theta: &'a ParameterVector) -> impl Iterator<Item = (&'a PauliString, f64)> + 'a {
        theta.as_slice()[1..].iter().enumerate().map(|(k, &angle)| (&self.generators[k % self.generators.len()], angle))
    }

    fn check(&self, theta: &ParameterVector) -> Result<()> {
        if theta.len() != self.parameter_count() {
            return Err(Error::DimensionMismatch { expected: self.parameter_count(), found: theta.len() });
        }
        Ok(())
    }

    pub fn evaluate(&self, theta: &ParameterVector) -> Result<StateVector> {
        self.check(theta)?;
        let mut amps = self.reference.amplitudes().to_vec();
        for (g, angle) in self.rotations(theta) {
            rotate_in_place(g, angle, &mut amps);
        }
        let phase = Complex64::from_polar(1.0, theta.as_slice()[0]);
        for a in &mut amps {
            *a *= phase;
        }
        StateVector::from_amplitudes(self.qubit_count(), amps)
    }

    /// Analytic `∂|φ(θ)>/∂θ_index`.
    pub fn tangent(&self, theta: &ParameterVector, index: usize) -> Result<TangentVector> {
        self.check(theta)?;
        if index >= self.parameter_count() {
            return Err(Error::IndexOutOfRange { index, len: self.parameter_count() });
        }
        let n = self.qubit_count();
        let phase = Complex64::from_polar(1.0, theta.as_slice()[0]);
        let mut amps = self.reference.amplitudes().to_vec();
        if index == 0 {
            for (g, angle) in self.rotations(theta) {
                rotate_in_place(g, angle, &mut amps);
            }
            let f = phase * Complex64::new(0.0, 1.0);
            amps.iter_mut().for_each(|a| *a *= f);
            return TangentVector::from_amplitudes(n, amps);
        }
        for (k, (g, angle)) in self.rotations(theta).enumerate() {
            rotate_in_place(g, angle, &mut amps);
            if k + 1 == index {
                let mut inserted = vec![Complex64::default(); amps.len()];
                accumulate_pauli(g, Complex64::new(0.0, 1.0), &amps, &mut inserted);
                amps = inserted;
            }
        }
        amps.iter_mut().for_each(|a| *a *= phase);
        TangentVector::from_amplitudes(n, amps)
    }

    /// The state together with every analytic tangent, in parameter order.
    ///
    /// Each `iP_k` insertion is carried forward through the remaining
    /// rotations, about `M²/2` rotation applications for `M` rotation
    /// parameters. Each tangent is pushed through all of its rotations before
    /// the next is started, which keeps the working vector in cache.
    pub fn state_and_tangents(&self, theta: &ParameterVector) -> Result<(StateVector, Vec<Vec<Complex64>>)> {
        self.check(theta)?;
        let m = self.parameter_count();
        let rotations: Vec<(&PauliString, f64)> = self.rotations(theta).collect();
        let mut state = self.reference.amplitudes().to_vec();
        let mut tangents: Vec<Vec<Complex64>> = Vec::with_capacity(m);
        tangents.push(Vec::new());
        for (k, &(g, angle)) in rotations.iter().enumerate() {
            rotate_in_place(g, angle, &mut state);
            let mut t = vec![Complex64::default(); state.len()];
            accumulate_pauli(g, Complex64::new(0.0, 1.0), &state, &mut t);
            for &(later, a) in &rotations[k + 1..] {
                rotate_in_place(later, a, &mut t);
            }
            tangents.push(t);
        }
        let phase = Complex64::from_polar(1.0, theta.as_slice()[0]);
        for a in &mut state {
            *a *= phase;
        }
        for t in tangents.iter_mut().skip(1) {
            t.iter_mut().for_each(|a| *a *= phase);
        }
        tangents[0] = state.iter().map(|a| a * Complex64::new(0.0, 1.0)).collect();
        Ok((StateVector::from_amplitudes(self.qubit_count(), state)?, tangents))
    }
}

/// Shifts each entry by an independent uniform draw from `[-bound, bound]`.
///
/// The draws come from a ChaCha8 stream seeded with `seed`, one per entry in
/// index order.
pub fn perturb_parameters(theta: &ParameterVector, bound: f64, seed: u64) -> Result<ParameterVector> {
    if !(bound >= 0.0) || !bound.is_finite() {
        return Err(Error::invalid(format!("perturbation bound must be finite and non-negative, got {bound}")));
    }
    if bound == 0.0 {
        return Ok(theta.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = theta.as_slice().iter().map(|v| v + rng.gen_range(-bound..=bound)).collect();
    ParameterVector::new(values)
}

/// Generators of one ansatz layer: the non-identity strings of the regular
/// Hamiltonian with unit coefficient. Hopping strings come first (edge order,
/// spin up then down, `X…X` before `Y…Y`), then per site `Z↑`, `Z↓`, `Z↑Z↓`.
pub fn hva_generators(lat: &LatticeSpec, p: &HubbardParams) -> Result<Vec<PauliString>> {
    let n = lat.qubit_count();
    let h = build_hubbard(lat, p)?;
    let mut out = Vec::new();
    for (i, j) in lat.edges() {
        for s in Spin::BOTH {
            let (a, b) = (mode(i, s), mode(j, s));
            let between = ((1u64 << b) - 1) & !((1u64 << (a + 1)) - 1);
            let ends = (1u64 << a) | (1u64 << b);
            out.push(PauliString::from_masks(n, ends, between)?);
            out.push(PauliString::from_masks(n, ends, between | ends)?);
        }
    }
    for i in 0..lat.sites() {
        let (up, down) = (1u64 << mode(i, Spin::Up), 1u64 << mode(i, Spin::Down));
        for z in [up, down, up | down] {
            out.push(PauliString::from_masks(n, 0, z)?);
        }
    }
    out.retain(|s| h.coefficient(s).norm() > h.tolerance());
    if out.len() != h.non_identity_len() {
        return Err(Error::numerical("generator list does not cover the hamiltonian"));
    }
    Ok(out)
}

/// Particle number of the regular Hamiltonian's ground state.
pub fn ground_particle_number(lat: &LatticeSpec, p: &HubbardParams) -> Result<usize> {
    let g = ground_pair(&build_hubbard(lat, p)?)?;
    let mut found = None;
    for v in g.right_space.basis() {
        let n = mean_particle_number(v);
        let rounded = n.round();
        if (n - rounded).abs() > 1e-6 {
            return Err(Error::numerical(format!("ground state has non-integer particle number {n}")));
        }
        match found {
            None => found = Some(rounded as usize),
            Some(prev) if prev != rounded as usize => {
                return Err(Error::numerical("degenerate ground states differ in particle number"))
            }
            _ => {}
        }
    }
    found.ok_or_else(|| Error::numerical("empty ground space"))
}

/// `<N>` for a normalized state.
pub fn mean_particle_number(s: &impl Amplitudes) -> f64 {
    s.amplitudes().iter().enumerate().map(|(b, a)| a.norm_sqr() * b.count_ones() as f64).sum()
}

fn lowest_hermitian(m: DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::numerical("hermitian eigensolver did not converge"))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Lowest eigenstate of the non-interacting Hamiltonian with `particles`
/// fermions.
///
/// A degenerate lowest level is resolved by diagonalizing the interacting
/// Hamiltonian inside it and keeping its lowest state. The first significant
/// amplitude is made real and positive.
pub fn prepare_initial_state(lat: &LatticeSpec, p: &HubbardParams, particles: usize) -> Result<StateVector> {
    let n = lat.qubit_count();
    if particles > n {
        return Err(Error::invalid(format!("{particles} particles do not fit in {n} spin orbitals")));
    }
    let sector: Vec<usize> = (0..1usize << n).filter(|b| b.count_ones() as usize == particles).collect();
    let free = SparseOperator::from_sum(&build_noninteracting(lat, p)?)?.restrict(&sector);
    let (levels, vectors) = lowest_hermitian(free)?;
    let degenerate = levels.iter().take_while(|&&e| e - levels[0] < LEVEL_TOLERANCE).count();

    let local: Vec<Complex64> = if degenerate == 1 {
        vectors.column(0).iter().copied().collect()
    } else {
        let basis = vectors.columns(0, degenerate).into_owned();
        let full = SparseOperator::from_sum(&build_hubbard(lat, p)?)?.restrict(&sector);
        let projected = basis.adjoint() * &full * &basis;
        let projected = (&projected + projected.adjoint()) * Complex64::new(0.5, 0.0);
        let (_, inner) = lowest_hermitian(projected)?;
        (&basis * inner.column(0)).iter().copied().collect()
    };

    let mut amps = vec![Complex64::default(); 1usize << n];
    for (&b, v) in sector.iter().zip(local) {
        amps[b] = v;
    }
    Ok(StateVector::from_amplitudes(n, amps)?.fix_phase(1e-10))
}

/// Hamiltonian-variational ansatz for the lattice. Without `particles` the
/// reference uses the particle number of the interacting ground state.
pub fn build_hva(lat: &LatticeSpec, p: &HubbardParams, layers: usize, particles: Option<usize>) -> Result<AnsatzProgram> {
    let particles = match particles {
        Some(n) => n,
        None => ground_particle_number(lat, p)?,
    };
    let reference = prepare_initial_state(lat, p, particles)?;
    let generators = hva_generators(lat, p)?.into_iter().map(PauliTerm::unit).collect();
    AnsatzProgram::new(reference, generators, layers)
}
