//! Repeated, seeded evolution runs and their aggregate statistics.
//!
//! Every job is identified by `(layers, method, target, repetition)`; the
//! perturbation seed of repetition `r` is `seed_base + r`. Jobs run on a
//! bounded rayon pool and results are assembled in job order, so output does
//! not depend on scheduling.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build_hva, ground_particle_number, perturb_parameters, prepare_initial_state, AnsatzProgram, ParameterVector};
use crate::error::{Error, Result};
use crate::evolution::{run_method, EvolutionConfig, EvolutionTrace, Method, References, Target};
use crate::model::{build_hubbard, build_tc_hubbard, HubbardParams, LatticeSpec};
use crate::oracle::{ground_pair, SpectralResult, Subspace};
use crate::pauli::OperatorSum;
use crate::statevector::{expectation, StateVector};

pub const DEFAULT_PERTURB_BOUND: f64 = 0.02 * PI;
pub const THREADS_ENV: &str = "TCVQITE_THREADS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub lattice: LatticeSpec,
    pub params: HubbardParams,
    pub layers_list: Vec<usize>,
    pub repetitions: usize,
    pub methods: Vec<Method>,
    pub targets: Vec<Target>,
    pub evolution: EvolutionConfig,
    pub seed_base: u64,
    pub perturb_bound: f64,
    /// Reference-state particle number; inferred from the ground state when absent.
    pub particles: Option<usize>,
}

impl ExperimentSpec {
    pub fn new(lattice: LatticeSpec, params: HubbardParams) -> Self {
        Self {
            lattice,
            params,
            layers_list: vec![0, 1, 2, 3],
            repetitions: 10,
            methods: vec![Method::ImaginaryTime],
            targets: vec![Target::RightTc],
            evolution: EvolutionConfig::default(),
            seed_base: 0,
            perturb_bound: DEFAULT_PERTURB_BOUND,
            particles: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.evolution.validate()?;
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions must be at least 1"));
        }
        if self.layers_list.is_empty() || self.methods.is_empty() || self.targets.is_empty() {
            return Err(Error::invalid("layers_list, methods and targets must be nonempty"));
        }
        if !(self.perturb_bound >= 0.0 && self.perturb_bound.is_finite()) {
            return Err(Error::invalid(format!("perturb_bound must be non-negative, got {}", self.perturb_bound)));
        }
        if self.seed_base.checked_add(self.repetitions as u64).is_none() {
            return Err(Error::invalid("seed_base + repetitions overflows"));
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.repetitions as u64).map(|r| self.seed_base + r).collect()
    }
}

/// Operators, exact ground data and reference state shared by all jobs of a spec.
#[derive(Clone, Debug)]
pub struct Problem {
    pub regular: OperatorSum,
    pub tc: OperatorSum,
    pub tc_adjoint: OperatorSum,
    pub regular_ground: SpectralResult,
    pub tc_ground: SpectralResult,
    pub reference: StateVector,
    pub particles: usize,
}

impl Problem {
    pub fn new(lat: &LatticeSpec, p: &HubbardParams, particles: Option<usize>) -> Result<Self> {
        let regular = build_hubbard(lat, p)?;
        let tc = build_tc_hubbard(lat, p)?;
        let tc_adjoint = tc.adjoint();
        let regular_ground = ground_pair(&regular)?;
        let tc_ground = if p.j == 0.0 { regular_ground.clone() } else { ground_pair(&tc)? };
        let particles = match particles {
            Some(n) => n,
            None => ground_particle_number(lat, p)?,
        };
        let reference = prepare_initial_state(lat, p, particles)?;
        Ok(Self { regular, tc, tc_adjoint, regular_ground, tc_ground, reference, particles })
    }

    pub fn operator(&self, target: Target) -> &OperatorSum {
        match target {
            Target::RightTc => &self.tc,
            Target::LeftTc => &self.tc_adjoint,
            Target::Regular => &self.regular,
        }
    }

    /// Right and left ground spaces of the operator that `target` evolves under.
    pub fn references(&self, target: Target) -> References {
        let (right, left) = match target {
            Target::RightTc => (&self.tc_ground.right_space, &self.tc_ground.left_space),
            Target::LeftTc => (&self.tc_ground.left_space, &self.tc_ground.right_space),
            Target::Regular => (&self.regular_ground.right_space, &self.regular_ground.left_space),
        };
        References { right: Some(right.clone()), left: Some(left.clone()) }
    }

    /// The state each target is scored against: its own lowest right eigenvector.
    pub fn target_space(&self, target: Target) -> &Subspace {
        match target {
            Target::RightTc => &self.tc_ground.right_space,
            Target::LeftTc => &self.tc_ground.left_space,
            Target::Regular => &self.regular_ground.right_space,
        }
    }

    pub fn ground_energy(&self) -> f64 {
        self.regular_ground.eigenvalue
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JobKey {
    pub layers: usize,
    pub method: Method,
    pub target: Target,
    pub seed: u64,
}

/// Final-state summary of one run; `error` is set when the run failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub key: JobKey,
    pub fidelity: Option<f64>,
    pub abs_re_residual: Option<f64>,
    pub abs_im_residual: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub layers: usize,
    pub method: Method,
    pub target: Target,
    pub mean_fid: f64,
    pub stderr_fid: f64,
    pub mean_abs_re_resid: f64,
    pub mean_abs_im_resid: Option<f64>,
    pub completed: usize,
}

#[derive(Clone, Debug, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub runs: Vec<RunSummary>,
}

pub const SWEEP_HEADER: &str = "layers,method,target,mean_fid,stderr_fid,mean_abs_re_resid,mean_abs_im_resid";

impl SweepResult {
    pub fn write_csv(&self, mut w: impl std::io::Write) -> Result<()> {
        use crate::evolution::format_sci;
        writeln!(w, "{SWEEP_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.layers,
                r.method.name(),
                r.target.name(),
                format_sci(r.mean_fid),
                format_sci(r.stderr_fid),
                format_sci(r.mean_abs_re_resid),
                r.mean_abs_im_resid.map(format_sci).unwrap_or_default()
            )?;
        }
        Ok(())
    }

    pub fn row(&self, layers: usize, method: Method, target: Target) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.layers == layers && r.method == method && r.target == target)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RunSummary> {
        self.runs.iter().filter(|r| r.error.is_some())
    }
}

/// Sample mean and standard error (sample standard deviation over `√n`).
/// The error is zero for fewer than two samples.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Worker pool sized by `TCVQITE_THREADS`, or by the available parallelism.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::invalid(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?,
        Err(_) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| Error::invalid(e.to_string()))
}

/// Callback invoked with each finished trace (complete or partial).
pub type TraceSink<'a> = dyn Fn(&JobKey, &EvolutionTrace) + Sync + 'a;

fn run_job(problem: &Problem, ansatz: &AnsatzProgram, key: JobKey, spec: &ExperimentSpec, sink: Option<&TraceSink>) -> RunSummary {
    let outcome = (|| -> Result<(EvolutionTrace, Option<Error>)> {
        let theta0 = perturb_parameters(&ParameterVector::zeros(ansatz.parameter_count()), spec.perturb_bound, key.seed)?;
        let h = problem.operator(key.target);
        match run_method(key.method, ansatz, &theta0, h, &spec.evolution, &problem.references(key.target)) {
            Ok(trace) => Ok((trace, None)),
            Err(failure) => Ok((failure.trace, Some(failure.error))),
        }
    })();
    let (trace, error) = match outcome {
        Ok(v) => v,
        Err(e) => (EvolutionTrace::default(), Some(e)),
    };
    if let Some(sink) = sink {
        sink(&key, &trace);
    }
    if let Some(e) = error {
        return RunSummary { key, fidelity: None, abs_re_residual: None, abs_im_residual: None, error: Some(e.to_string()) };
    }
    let scored = (|| -> Result<RunSummary> {
        let theta = trace.final_theta.as_ref().ok_or_else(|| Error::numerical("missing final parameters"))?;
        let state = ansatz.evaluate(theta)?;
        let energy = expectation(problem.operator(key.target), &state)?;
        Ok(RunSummary {
            key,
            fidelity: Some(problem.target_space(key.target).fidelity(&state)?),
            abs_re_residual: Some((energy.re - problem.ground_energy()).abs()),
            abs_im_residual: Some(energy.im.abs()),
            error: None,
        })
    })();
    scored.unwrap_or_else(|e| RunSummary { key, fidelity: None, abs_re_residual: None, abs_im_residual: None, error: Some(e.to_string()) })
}

fn depth_zero_row(problem: &Problem, method: Method, target: Target) -> Result<SweepRow> {
    let state = &problem.reference;
    let energy = expectation(problem.operator(target), state)?;
    Ok(SweepRow {
        layers: 0,
        method,
        target,
        mean_fid: problem.target_space(target).fidelity(state)?,
        stderr_fid: 0.0,
        mean_abs_re_resid: (energy.re - problem.ground_energy()).abs(),
        mean_abs_im_resid: None,
        completed: 1,
    })
}

/// Every `(layers, method, target)` combination in `spec`, `repetitions`
/// perturbed runs each. A depth-0 entry is scored on the unperturbed
/// reference state. Failed runs are listed in `runs` and left out of the means.
pub fn run_sweep(spec: &ExperimentSpec, sink: Option<&TraceSink>) -> Result<SweepResult> {
    spec.validate()?;
    let problem = Problem::new(&spec.lattice, &spec.params, spec.particles)?;
    run_sweep_with(spec, &problem, sink)
}

pub fn run_sweep_with(spec: &ExperimentSpec, problem: &Problem, sink: Option<&TraceSink>) -> Result<SweepResult> {
    spec.validate()?;
    let mut ansatze = Vec::new();
    for &layers in &spec.layers_list {
        if layers > 0 && !ansatze.iter().any(|(l, _)| *l == layers) {
            ansatze.push((layers, build_hva(&spec.lattice, &spec.params, layers, Some(problem.particles))?));
        }
    }
    let mut keys = Vec::new();
    for &layers in spec.layers_list.iter().filter(|&&l| l > 0) {
        for &method in &spec.methods {
            for &target in &spec.targets {
                for seed in spec.seeds() {
                    keys.push(JobKey { layers, method, target, seed });
                }
            }
        }
    }
    let pool = worker_pool()?;
    let runs: Vec<RunSummary> = pool.install(|| {
        keys.par_iter()
            .map(|&key| {
                let ansatz = &ansatze.iter().find(|(l, _)| *l == key.layers).expect("ansatz built").1;
                run_job(problem, ansatz, key, spec, sink)
            })
            .collect()
    });

    let mut rows = Vec::new();
    for &layers in &spec.layers_list {
        for &method in &spec.methods {
            for &target in &spec.targets {
                if layers == 0 {
                    rows.push(depth_zero_row(problem, method, target)?);
                    continue;
                }
                let done: Vec<&RunSummary> = runs
                    .iter()
                    .filter(|r| r.key.layers == layers && r.key.method == method && r.key.target == target && r.error.is_none())
                    .collect();
                let fids: Vec<f64> = done.iter().filter_map(|r| r.fidelity).collect();
                let (mean_fid, stderr_fid) = mean_and_stderr(&fids);
                let re: Vec<f64> = done.iter().filter_map(|r| r.abs_re_residual).collect();
                let im: Vec<f64> = done.iter().filter_map(|r| r.abs_im_residual).collect();
                rows.push(SweepRow {
                    layers,
                    method,
                    target,
                    mean_fid,
                    stderr_fid,
                    mean_abs_re_resid: mean_and_stderr(&re).0,
                    mean_abs_im_resid: Some(mean_and_stderr(&im).0),
                    completed: done.len(),
                });
            }
        }
    }
    Ok(SweepResult { rows, runs })
}

/// Depth sweep comparing methods; scored against `spec.targets`.
pub fn run_depth_sweep(spec: &ExperimentSpec, sink: Option<&TraceSink>) -> Result<SweepResult> {
    run_sweep(spec, sink)
}

/// Imaginary-time runs for each target, each scored against its own eigenvector.
pub fn run_target_comparison(spec: &ExperimentSpec, sink: Option<&TraceSink>) -> Result<SweepResult> {
    if spec.targets.is_empty() {
        return Err(Error::invalid("targets must be nonempty"));
    }
    run_sweep(spec, sink)
}

/// A single seeded run at `seed_base`, with fidelities against the exact
/// ground spaces of the evolving operator.
pub fn run_single(spec: &ExperimentSpec) -> Result<EvolutionTrace> {
    spec.validate()?;
    if spec.layers_list.len() != 1 || spec.methods.len() != 1 || spec.targets.len() != 1 {
        return Err(Error::invalid("a single run takes exactly one layers entry, method and target"));
    }
    let problem = Problem::new(&spec.lattice, &spec.params, spec.particles)?;
    let ansatz = build_hva(&spec.lattice, &spec.params, spec.layers_list[0], Some(problem.particles))?;
    let theta0 = perturb_parameters(&ParameterVector::zeros(ansatz.parameter_count()), spec.perturb_bound, spec.seed_base)?;
    let target = spec.targets[0];
    run_method(spec.methods[0], &ansatz, &theta0, problem.operator(target), &spec.evolution, &problem.references(target))
        .map_err(|f| f.error)
}

#[derive(Clone, Debug, PartialEq)]
pub struct JScan {
    pub best_j: f64,
    /// `(J, mean fidelity, standard error)` in grid order.
    pub points: Vec<(f64, f64, f64)>,
}

/// Mean right-TC fidelity of imaginary-time runs at correlator strength `j`,
/// using `spec`'s first layers entry. Returns `(J, mean, standard error)`.
pub fn scan_point(spec: &ExperimentSpec, j: f64, sink: Option<&TraceSink>) -> Result<(f64, f64, f64)> {
    let layers = *spec.layers_list.first().ok_or_else(|| Error::invalid("layers_list must be nonempty"))?;
    let point = ExperimentSpec {
        params: HubbardParams::new(spec.params.t, spec.params.u, j)?,
        layers_list: vec![layers],
        methods: vec![Method::ImaginaryTime],
        targets: vec![Target::RightTc],
        ..spec.clone()
    };
    let result = run_sweep(&point, sink)?;
    let row = &result.rows[0];
    if row.completed == 0 {
        return Err(Error::numerical(format!("every run failed at J = {j}")));
    }
    Ok((j, row.mean_fid, row.stderr_fid))
}

/// The `J` with the highest mean fidelity; ties go to the smaller `|J|`, then
/// to the smaller `J`.
pub fn best_j(points: &[(f64, f64, f64)]) -> Result<f64> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].0.abs().total_cmp(&points[b].0.abs()).then(points[a].0.total_cmp(&points[b].0)));
    let mut best = *order.first().ok_or_else(|| Error::invalid("J grid must be nonempty"))?;
    for &i in &order[1..] {
        if points[i].1 > points[best].1 {
            best = i;
        }
    }
    Ok(points[best].0)
}

/// Scans `j_grid` with [`scan_point`] and picks the best value with [`best_j`].
pub fn optimize_j(spec: &ExperimentSpec, j_grid: &[f64], sink: Option<&TraceSink>) -> Result<JScan> {
    if j_grid.is_empty() {
        return Err(Error::invalid("J grid must be nonempty"));
    }
    let points = j_grid.iter().map(|&j| scan_point(spec, j, sink)).collect::<Result<Vec<_>>>()?;
    Ok(JScan { best_j: best_j(&points)?, points })
}
