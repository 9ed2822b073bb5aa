//! Variational imaginary-time evolution by McLachlan's principle, with plain
//! gradient descent on the same energy functional for comparison.
//!
//! For a state `|φ(θ)>` and operator `H` the update solves `A θ̇ = −C` with
//! `A_ij = Re<∂_iφ|∂_jφ>` and `C_i = Re<∂_iφ|H|φ>`, then takes an explicit
//! Euler step. `H` need not be Hermitian.

use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{AnsatzProgram, ParameterVector};
use crate::error::{Error, Result};
use crate::oracle::Subspace;
use crate::pauli::OperatorSum;
use crate::statevector::{apply_sum, dot, Amplitudes, StateVector};

/// Updates whose step `‖θ̇‖·δτ` exceeds this are treated as divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TangentMode {
    Analytic,
    FiniteDifference,
}

/// Which operator drives the evolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// The transcorrelated Hamiltonian `H'`.
    RightTc,
    /// Its adjoint `H'†`, whose right eigenvectors are the left ones of `H'`.
    LeftTc,
    /// The regular Hamiltonian.
    Regular,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::RightTc => "right_tc",
            Target::LeftTc => "left_tc",
            Target::Regular => "regular",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ImaginaryTime,
    GradientDescent,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ImaginaryTime => "imaginary_time",
            Method::GradientDescent => "gradient_descent",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dtau: f64,
    pub steps: usize,
    pub svd_cutoff: f64,
    pub tangent_mode: TangentMode,
    pub fd_step: f64,
    pub record_interval: usize,
    /// Keep a copy of the parameters in every record.
    #[serde(default)]
    pub snapshot_parameters: bool,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dtau: 0.01,
            steps: 500,
            svd_cutoff: 1e-6,
            tangent_mode: TangentMode::Analytic,
            fd_step: 1e-10,
            record_interval: 10,
            snapshot_parameters: false,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dtau > 0.0 && self.dtau.is_finite()) {
            return Err(Error::invalid(format!("dtau must be positive, got {}", self.dtau)));
        }
        if !(self.svd_cutoff >= 0.0 && self.svd_cutoff.is_finite()) {
            return Err(Error::invalid(format!("svd_cutoff must be non-negative, got {}", self.svd_cutoff)));
        }
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            return Err(Error::invalid(format!("fd_step must be positive, got {}", self.fd_step)));
        }
        if self.record_interval == 0 {
            return Err(Error::invalid("record_interval must be at least 1"));
        }
        Ok(())
    }
}

/// The linear system of one McLachlan step, evaluated at the current state.
#[derive(Clone, Debug)]
pub struct McLachlanSystem {
    pub a: DMatrix<f64>,
    pub c: DVector<f64>,
    pub energy: Complex64,
    pub state: StateVector,
}

fn tangents(ansatz: &AnsatzProgram, theta: &ParameterVector, mode: TangentMode, fd_step: f64) -> Result<(StateVector, Vec<Vec<Complex64>>)> {
    match mode {
        TangentMode::Analytic => ansatz.state_and_tangents(theta),
        TangentMode::FiniteDifference => {
            let state = ansatz.evaluate(theta)?;
            let mut out = Vec::with_capacity(theta.len());
            for i in 0..theta.len() {
                let mut shifted = theta.as_slice().to_vec();
                shifted[i] += fd_step;
                let moved = ansatz.evaluate(&ParameterVector::new(shifted)?)?;
                out.push(moved.amplitudes().iter().zip(state.amplitudes()).map(|(a, b)| (a - b) / fd_step).collect());
            }
            Ok((state, out))
        }
    }
}

fn assemble_parts(
    ansatz: &AnsatzProgram,
    theta: &ParameterVector,
    h: &OperatorSum,
    mode: TangentMode,
    fd_step: f64,
    with_metric: bool,
) -> Result<McLachlanSystem> {
    let (state, t) = tangents(ansatz, theta, mode, fd_step)?;
    let hphi = apply_sum(h, &state)?;
    let energy = dot(state.amplitudes(), hphi.amplitudes());
    let m = t.len();
    let c = DVector::from_iterator(m, t.iter().map(|ti| dot(ti, hphi.amplitudes()).re));
    let a = if with_metric {
        let rows: Vec<Vec<f64>> = (0..m).into_par_iter().map(|i| (i..m).map(|j| dot(&t[i], &t[j]).re).collect()).collect();
        let mut a = DMatrix::zeros(m, m);
        for (i, row) in rows.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                a[(i, i + k)] = v;
                a[(i + k, i)] = v;
            }
        }
        a
    } else {
        DMatrix::identity(m, m)
    };
    if !energy.re.is_finite() || c.iter().any(|v| !v.is_finite()) || a.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("non-finite entries in the McLachlan system"));
    }
    Ok(McLachlanSystem { a, c, energy, state })
}

/// Builds `A`, `C` and the energy `<φ|H|φ>` at `theta`.
pub fn assemble(ansatz: &AnsatzProgram, theta: &ParameterVector, h: &OperatorSum, mode: TangentMode, fd_step: f64) -> Result<McLachlanSystem> {
    assemble_parts(ansatz, theta, h, mode, fd_step, true)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Update {
    pub theta_dot: DVector<f64>,
    pub rank: usize,
}

/// `θ̇ = −A⁺C`, with singular values at or below `cutoff` discarded from the
/// pseudo-inverse. `A` is symmetrized first, so its singular values are the
/// absolute eigenvalues.
pub fn solve_update(sys: &McLachlanSystem, cutoff: f64) -> Result<Update> {
    let m = sys.c.len();
    if sys.a.nrows() != m || sys.a.ncols() != m {
        return Err(Error::DimensionMismatch { expected: m, found: sys.a.nrows() });
    }
    let sym = (&sys.a + sys.a.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::numerical("metric decomposition did not converge"))?;
    let q = &eig.eigenvectors;
    let projected = q.transpose() * &sys.c;
    let mut scaled = DVector::zeros(m);
    let mut rank = 0;
    for k in 0..m {
        let lambda = eig.eigenvalues[k];
        if lambda.abs() > cutoff {
            scaled[k] = -projected[k] / lambda;
            rank += 1;
        }
    }
    let theta_dot = q * scaled;
    if theta_dot.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("non-finite parameter update"));
    }
    Ok(Update { theta_dot, rank })
}

/// `θ + δτ θ̇`.
pub fn euler_step(theta: &ParameterVector, theta_dot: &DVector<f64>, dtau: f64) -> Result<ParameterVector> {
    if theta.len() != theta_dot.len() {
        return Err(Error::DimensionMismatch { expected: theta.len(), found: theta_dot.len() });
    }
    ParameterVector::new(theta.as_slice().iter().zip(theta_dot.iter()).map(|(t, d)| t + dtau * d).collect())
}

/// Eigenspaces the fidelities are measured against.
#[derive(Clone, Debug, Default)]
pub struct References {
    pub right: Option<Subspace>,
    pub left: Option<Subspace>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub tau: f64,
    pub e_real: f64,
    pub e_imag: f64,
    pub fid_right: Option<f64>,
    pub fid_left: Option<f64>,
    pub grad_norm: f64,
    pub a_rank: usize,
    pub theta: Option<ParameterVector>,
}

#[derive(Clone, Debug, Default)]
pub struct EvolutionTrace {
    pub records: Vec<Record>,
    pub final_theta: Option<ParameterVector>,
    pub steps_completed: usize,
}

pub const TRACE_HEADER: &str = "tau,e_real,e_imag,fid_right,fid_left,grad_norm,a_rank";

/// C-style `%.12e`: two-digit signed exponent.
pub fn format_sci(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
}

fn optional(x: Option<f64>) -> String {
    x.map(format_sci).unwrap_or_default()
}

impl EvolutionTrace {
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                format_sci(r.tau),
                format_sci(r.e_real),
                format_sci(r.e_imag),
                optional(r.fid_right),
                optional(r.fid_left),
                format_sci(r.grad_norm),
                r.a_rank
            )?;
        }
        Ok(())
    }

    pub fn last(&self) -> Option<&Record> {
        self.records.last()
    }
}

/// A run that stopped early; `trace` holds everything recorded before the failure.
#[derive(Clone, Debug)]
pub struct EvolutionFailure {
    pub trace: EvolutionTrace,
    pub error: Error,
}

impl fmt::Display for EvolutionFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "evolution stopped after {} steps: {}", self.trace.steps_completed, self.error)
    }
}

impl std::error::Error for EvolutionFailure {}

impl From<Error> for EvolutionFailure {
    fn from(error: Error) -> Self {
        Self { trace: EvolutionTrace::default(), error }
    }
}

fn run(
    ansatz: &AnsatzProgram,
    theta0: &ParameterVector,
    h: &OperatorSum,
    cfg: &EvolutionConfig,
    refs: &References,
    method: Method,
) -> std::result::Result<EvolutionTrace, EvolutionFailure> {
    cfg.validate()?;
    if h.qubit_count() != ansatz.qubit_count() {
        return Err(Error::DimensionMismatch { expected: ansatz.qubit_count(), found: h.qubit_count() }.into());
    }
    if theta0.len() != ansatz.parameter_count() {
        return Err(Error::DimensionMismatch { expected: ansatz.parameter_count(), found: theta0.len() }.into());
    }
    let mut trace = EvolutionTrace::default();
    let mut theta = theta0.clone();
    let metric = method == Method::ImaginaryTime;
    for step in 0..=cfg.steps {
        let outcome = (|| -> Result<(Record, Update)> {
            let sys = assemble_parts(ansatz, &theta, h, cfg.tangent_mode, cfg.fd_step, metric)?;
            let update = if metric {
                solve_update(&sys, cfg.svd_cutoff)?
            } else {
                Update { theta_dot: -&sys.c, rank: sys.c.len() }
            };
            let fid = |s: &Option<Subspace>| s.as_ref().map(|s| s.fidelity(&sys.state)).transpose();
            let record = Record {
                tau: step as f64 * cfg.dtau,
                e_real: sys.energy.re,
                e_imag: sys.energy.im,
                fid_right: fid(&refs.right)?,
                fid_left: fid(&refs.left)?,
                grad_norm: sys.c.norm(),
                a_rank: update.rank,
                theta: cfg.snapshot_parameters.then(|| theta.clone()),
            };
            Ok((record, update))
        })();
        let (record, update) = match outcome {
            Ok(v) => v,
            Err(error) => return Err(EvolutionFailure { trace, error }),
        };
        if step % cfg.record_interval == 0 || step == cfg.steps {
            trace.records.push(record);
        }
        if step == cfg.steps {
            break;
        }
        let size = update.theta_dot.norm() * cfg.dtau;
        if !(size <= DIVERGENCE_LIMIT) {
            let error = Error::numerical(format!("parameter update of size {size:e} at step {step}"));
            return Err(EvolutionFailure { trace, error });
        }
        theta = match euler_step(&theta, &update.theta_dot, cfg.dtau) {
            Ok(t) => t,
            Err(error) => return Err(EvolutionFailure { trace, error }),
        };
        trace.steps_completed = step + 1;
    }
    trace.final_theta = Some(theta);
    Ok(trace)
}

/// Variational imaginary-time evolution under `h` for `cfg.steps` steps.
/// A record is kept every `record_interval` steps and after the last step.
pub fn evolve(
    ansatz: &AnsatzProgram,
    theta0: &ParameterVector,
    h: &OperatorSum,
    cfg: &EvolutionConfig,
    refs: &References,
) -> std::result::Result<EvolutionTrace, EvolutionFailure> {
    run(ansatz, theta0, h, cfg, refs, Method::ImaginaryTime)
}

/// Gradient descent `θ̇ = −C` with the same step size and bookkeeping as
/// [`evolve`]. The reported rank is the parameter count.
pub fn gradient_descent(
    ansatz: &AnsatzProgram,
    theta0: &ParameterVector,
    h: &OperatorSum,
    cfg: &EvolutionConfig,
    refs: &References,
) -> std::result::Result<EvolutionTrace, EvolutionFailure> {
    run(ansatz, theta0, h, cfg, refs, Method::GradientDescent)
}

pub fn run_method(
    method: Method,
    ansatz: &AnsatzProgram,
    theta0: &ParameterVector,
    h: &OperatorSum,
    cfg: &EvolutionConfig,
    refs: &References,
) -> std::result::Result<EvolutionTrace, EvolutionFailure> {
    run(ansatz, theta0, h, cfg, refs, method)
}
