//! Exact spectral reference for small operator sums.
//!
//! The operator is first split into the connected components of its
//! matrix-element graph (for Hubbard models these are the fixed `(N↑, N↓)`
//! sectors). Each block is handled densely: eigenvalues from a complex Schur
//! decomposition, eigenvectors from the null space of `B − λI` via SVD, and
//! imaginary-time propagation from a scaling-and-squaring matrix exponential.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::OperatorSum;
use crate::statevector::{self, apply_sum, Amplitudes, StateVector, TangentVector};

/// Default qubit cap for dense matrices (a 14-qubit complex matrix is 4 GiB).
pub const DEFAULT_DENSE_QUBIT_CAP: usize = 14;

/// Eigenvalues closer than this to the ground value are treated as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-8;

const ENTRY_DROP: f64 = 1e-13;
const SCHUR_EPSILONS: [f64; 4] = [f64::EPSILON, 1e-15, 1e-14, 1e-13];
const MAX_SWEEPS: usize = 20_000;
const PHASE_THRESHOLD: f64 = 1e-10;

/// Dense matrix of `h` in the computational basis (qubit 0 = least significant bit).
pub fn dense_matrix(h: &OperatorSum) -> Result<DMatrix<Complex64>> {
    dense_matrix_with_cap(h, DEFAULT_DENSE_QUBIT_CAP)
}

pub fn dense_matrix_with_cap(h: &OperatorSum, cap: usize) -> Result<DMatrix<Complex64>> {
    let n = h.qubit_count();
    if n > cap {
        return Err(Error::TooManyQubits { qubits: n, cap });
    }
    let dim = 1usize << n;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for t in h.iter() {
        for b in 0..dim {
            let (phase, row) = t.string.apply_to_basis(b);
            m[(row, b)] += t.coeff * phase;
        }
    }
    Ok(m)
}

/// Column-sparse matrix with duplicate entries merged.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    columns: Vec<Vec<(usize, Complex64)>>,
}

impl SparseOperator {
    pub fn from_sum(h: &OperatorSum) -> Result<Self> {
        let n = h.qubit_count();
        if n > 24 {
            return Err(Error::TooManyQubits { qubits: n, cap: 24 });
        }
        let dim = 1usize << n;
        let terms: Vec<_> = h.iter().collect();
        let mut columns = Vec::with_capacity(dim);
        for b in 0..dim {
            let mut col: Vec<(usize, Complex64)> = terms
                .iter()
                .map(|t| {
                    let (phase, row) = t.string.apply_to_basis(b);
                    (row, t.coeff * phase)
                })
                .collect();
            col.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, Complex64)> = Vec::with_capacity(col.len());
            for (row, v) in col {
                match merged.last_mut() {
                    Some(last) if last.0 == row => last.1 += v,
                    _ => merged.push((row, v)),
                }
            }
            merged.retain(|e| e.1.norm() > ENTRY_DROP);
            columns.push(merged);
        }
        Ok(Self { columns })
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    /// Connected components of the coupling graph, each sorted ascending,
    /// ordered by their smallest basis index.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let dim = self.dim();
        let mut parent: Vec<usize> = (0..dim).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for (col, entries) in self.columns.iter().enumerate() {
            for &(row, _) in entries {
                let (a, b) = (find(&mut parent, row), find(&mut parent, col));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut label = vec![usize::MAX; dim];
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for i in 0..dim {
            let root = find(&mut parent, i);
            if label[root] == usize::MAX {
                label[root] = blocks.len();
                blocks.push(Vec::new());
            }
            blocks[label[root]].push(i);
        }
        blocks
    }

    /// Dense restriction `P_S H P_S` onto the basis states in `indices` (sorted).
    pub fn restrict(&self, indices: &[usize]) -> DMatrix<Complex64> {
        let k = indices.len();
        let mut m = DMatrix::<Complex64>::zeros(k, k);
        for (j, &col) in indices.iter().enumerate() {
            for &(row, v) in &self.columns[col] {
                if let Ok(i) = indices.binary_search(&row) {
                    m[(i, j)] = v;
                }
            }
        }
        m
    }
}

fn block_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    if m.nrows() == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    // The QR sweep can stall at the tightest deflation threshold; loosen it
    // gradually, keeping eigenvalue errors around eps * |B|.
    for eps in SCHUR_EPSILONS {
        if let Some(schur) = nalgebra::Schur::try_new(m.clone(), eps, MAX_SWEEPS) {
            let values = schur
                .eigenvalues()
                .ok_or_else(|| Error::numerical("schur form is not triangular"))?;
            return Ok(values.iter().copied().collect());
        }
    }
    Err(Error::numerical(format!("schur decomposition of a {0}x{0} block did not converge", m.nrows())))
}

/// All eigenvalues of `h`, sorted by real part then imaginary part.
pub fn eigenvalues(h: &OperatorSum) -> Result<Vec<Complex64>> {
    let sparse = SparseOperator::from_sum(h)?;
    let mut all = Vec::with_capacity(sparse.dim());
    for block in sparse.blocks() {
        all.extend(block_eigenvalues(&sparse.restrict(&block))?);
    }
    all.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(all)
}

/// An orthonormal basis of a (possibly one-dimensional) eigenspace.
#[derive(Clone, Debug)]
pub struct Subspace {
    basis: Vec<StateVector>,
}

impl Subspace {
    pub fn single(v: StateVector) -> Self {
        Self { basis: vec![v] }
    }

    pub fn basis(&self) -> &[StateVector] {
        &self.basis
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// Squared norm of the projection of the normalized `s` onto the subspace.
    pub fn fidelity(&self, s: &impl Amplitudes) -> Result<f64> {
        let norm = s.norm();
        if norm == 0.0 {
            return Err(Error::numerical("fidelity of a zero vector"));
        }
        let mut total = 0.0;
        for b in &self.basis {
            total += statevector::inner(b, s)?.norm_sqr();
        }
        Ok((total / (norm * norm)).min(1.0))
    }
}

/// Lowest eigenpair of a (possibly non-Hermitian) operator with real spectrum.
#[derive(Clone, Debug)]
pub struct SpectralResult {
    pub eigenvalue: f64,
    pub eigenvalue_imag: f64,
    pub right_vector: StateVector,
    pub left_vector: StateVector,
    pub right_residual: f64,
    pub left_residual: f64,
    pub right_space: Subspace,
    pub left_space: Subspace,
}

impl SpectralResult {
    pub fn degeneracy(&self) -> usize {
        self.right_space.dimension()
    }
}

fn embed(qubits: usize, indices: &[usize], local: impl Iterator<Item = Complex64>) -> Result<StateVector> {
    let mut amps = vec![Complex64::default(); 1usize << qubits];
    for (&i, v) in indices.iter().zip(local) {
        amps[i] = v;
    }
    StateVector::from_amplitudes(qubits, amps)
}

fn residual(h: &OperatorSum, v: &StateVector, lambda: Complex64) -> Result<f64> {
    let hv = apply_sum(h, v)?;
    Ok(hv
        .amplitudes()
        .iter()
        .zip(v.amplitudes())
        .map(|(a, b)| (a - lambda * b).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

fn gram_schmidt(vectors: Vec<StateVector>) -> Result<Vec<StateVector>> {
    let mut out: Vec<StateVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut amps = v.into_amplitudes();
        for b in &out {
            let overlap = statevector::dot(b.amplitudes(), &amps);
            for (a, x) in amps.iter_mut().zip(b.amplitudes()) {
                *a -= overlap * x;
            }
        }
        let qubits = amps.len().trailing_zeros() as usize;
        out.push(StateVector::from_amplitudes(qubits, amps)?);
    }
    Ok(out)
}

/// The `count` right-singular vectors of `m` with the smallest singular values.
///
/// Only `V` is used: the left factor returned for (near-)zero singular values
/// is not reliable in this SVD, so left null vectors are computed from `m†`.
fn null_vectors(m: DMatrix<Complex64>, count: usize, scale: f64) -> Result<Vec<Vec<Complex64>>> {
    let svd = SCHUR_EPSILONS
        .iter()
        .find_map(|&eps| m.clone().try_svd(false, true, eps, MAX_SWEEPS))
        .ok_or_else(|| Error::numerical("svd did not converge"))?;
    let v_t = svd.v_t.as_ref().ok_or_else(|| Error::numerical("svd did not return V"))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let mut out = Vec::with_capacity(count);
    for &row in order.iter().take(count) {
        let sigma = svd.singular_values[row];
        if sigma > 1e-6 * scale {
            return Err(Error::numerical(format!("eigenvalue looks defective (singular value {sigma:.3e})")));
        }
        out.push(v_t.row(row).iter().map(|x| x.conj()).collect());
    }
    Ok(out)
}

/// Ground eigenpair: the eigenvalue with the smallest real part together with
/// its right eigenvectors (`H v = λ v`) and left eigenvectors (`H† w = λ̄ w`).
///
/// A degenerate ground level (eigenvalues within [`DEGENERACY_TOLERANCE`]) is
/// returned as orthonormal bases in `right_space` / `left_space`; the
/// representative vectors are the first basis vectors. Every vector has its
/// first significant amplitude made real and positive.
pub fn ground_pair(h: &OperatorSum) -> Result<SpectralResult> {
    let qubits = h.qubit_count();
    let sparse = SparseOperator::from_sum(h)?;
    let blocks: Vec<(Vec<usize>, DMatrix<Complex64>)> = sparse
        .blocks()
        .into_iter()
        .map(|b| {
            let m = sparse.restrict(&b);
            (b, m)
        })
        .collect();

    let mut spectra = Vec::with_capacity(blocks.len());
    for (_, m) in &blocks {
        spectra.push(block_eigenvalues(m)?);
    }
    let ground = spectra
        .iter()
        .flatten()
        .copied()
        .min_by(|a, b| a.re.total_cmp(&b.re))
        .ok_or_else(|| Error::invalid("empty operator space"))?;
    if ground.im.abs() > DEGENERACY_TOLERANCE {
        return Err(Error::numerical(format!("ground eigenvalue {ground} is not real")));
    }

    let mut right = Vec::new();
    let mut left = Vec::new();
    let mut cluster = Vec::new();
    for ((indices, m), values) in blocks.iter().zip(&spectra) {
        let here: Vec<Complex64> =
            values.iter().copied().filter(|v| (v - ground).norm() < DEGENERACY_TOLERANCE).collect();
        if here.is_empty() {
            continue;
        }
        cluster.extend_from_slice(&here);
        let k = indices.len();
        let shifted = m - DMatrix::<Complex64>::identity(k, k) * ground;
        let scale = m.iter().map(|x| x.norm()).fold(1.0, f64::max);
        for v in null_vectors(shifted.clone(), here.len(), scale)? {
            right.push(embed(qubits, indices, v.into_iter())?);
        }
        for w in null_vectors(shifted.adjoint(), here.len(), scale)? {
            left.push(embed(qubits, indices, w.into_iter())?);
        }
    }

    let right = gram_schmidt(right)?.into_iter().map(|v| v.fix_phase(PHASE_THRESHOLD)).collect::<Vec<_>>();
    let left = gram_schmidt(left)?.into_iter().map(|v| v.fix_phase(PHASE_THRESHOLD)).collect::<Vec<_>>();

    // Biorthogonal Rayleigh quotient refines the non-degenerate value.
    let mut lambda = cluster.iter().sum::<Complex64>() / cluster.len() as f64;
    if right.len() == 1 {
        let hv = apply_sum(h, &right[0])?;
        let num = statevector::inner(&left[0], &hv)?;
        let den = statevector::inner(&left[0], &right[0])?;
        if den.norm() > 1e-8 {
            lambda = num / den;
        }
    }

    let adjoint = h.adjoint();
    let mut right_residual: f64 = 0.0;
    for v in &right {
        right_residual = right_residual.max(residual(h, v, lambda)?);
    }
    let mut left_residual: f64 = 0.0;
    for w in &left {
        left_residual = left_residual.max(residual(&adjoint, w, lambda.conj())?);
    }

    Ok(SpectralResult {
        eigenvalue: lambda.re,
        eigenvalue_imag: lambda.im,
        right_vector: right[0].clone(),
        left_vector: left[0].clone(),
        right_residual,
        left_residual,
        right_space: Subspace { basis: right },
        left_space: Subspace { basis: left },
    })
}

/// Pure-state fidelity `|<a|b>|^2`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    statevector::fidelity(a, b)
}

/// `exp(m)` by scaling and squaring with a degree-18 Taylor polynomial.
///
/// The matrix is scaled so its 1-norm is at most 1/2, where the truncated
/// Taylor remainder is below 1e-22 relative; the result therefore carries only
/// rounding error, amplified by at most a factor `2^s` over `s` squarings.
pub fn expm(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = m.nrows();
    let norm1 = (0..n).map(|j| m.column(j).iter().map(|x| x.norm()).sum::<f64>()).fold(0.0, f64::max);
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm1 * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let a = m * Complex64::new(scale, 0.0);
    let mut result = DMatrix::<Complex64>::identity(n, n);
    let mut power = DMatrix::<Complex64>::identity(n, n);
    for k in 1..=18 {
        power = &power * &a * Complex64::new(1.0 / k as f64, 0.0);
        result += &power;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Normalized `e^{-Hτ}|s>`.
///
/// Time is split into chunks of length at most 1; each block's chunk
/// propagator comes from [`expm`] and the state is renormalized after every
/// chunk, so large `τ` neither overflows nor loses the relative block weights.
pub fn exact_imaginary_time(h: &OperatorSum, s: &StateVector, tau: f64) -> Result<StateVector> {
    if tau < 0.0 || !tau.is_finite() {
        return Err(Error::invalid(format!("imaginary time must be finite and non-negative, got {tau}")));
    }
    if h.qubit_count() != s.qubit_count() {
        return Err(Error::DimensionMismatch { expected: h.qubit_count(), found: s.qubit_count() });
    }
    if h.qubit_count() > DEFAULT_DENSE_QUBIT_CAP {
        return Err(Error::TooManyQubits { qubits: h.qubit_count(), cap: DEFAULT_DENSE_QUBIT_CAP });
    }
    if tau == 0.0 {
        return Ok(s.clone());
    }
    let sparse = SparseOperator::from_sum(h)?;
    let blocks = sparse.blocks();
    let chunks = tau.ceil() as usize;
    let step = tau / chunks as f64;
    let propagators: Vec<DMatrix<Complex64>> = blocks
        .iter()
        .map(|b| expm(&(sparse.restrict(b) * Complex64::new(-step, 0.0))))
        .collect();

    let qubits = s.qubit_count();
    let mut amps = s.amplitudes().to_vec();
    for _ in 0..chunks {
        let mut next = vec![Complex64::default(); amps.len()];
        for (indices, prop) in blocks.iter().zip(&propagators) {
            let local = nalgebra::DVector::from_iterator(indices.len(), indices.iter().map(|&i| amps[i]));
            let evolved = prop * local;
            for (&i, v) in indices.iter().zip(evolved.iter()) {
                next[i] = *v;
            }
        }
        amps = TangentVector::from_amplitudes(qubits, next)?.normalize()?.into_amplitudes();
    }
    StateVector::from_amplitudes(qubits, amps)
}
