//! Command-line front end: builders, the exact oracle, single runs, sweeps
//! and the J scan, all writing under `<output>/<name>/`.

pub mod config;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};
use tcvqite::ansatz::{build_hva, hva_generators, perturb_parameters, ParameterVector};
use tcvqite::evolution::{format_sci, run_method, EvolutionTrace};
use tcvqite::experiments::{best_j, run_depth_sweep, run_target_comparison, scan_point, ExperimentSpec, JobKey, Problem, SweepResult};
use tcvqite::model::{build_hubbard, build_tc_hubbard};
use tcvqite::oracle::{ground_pair, SpectralResult};
use tcvqite::Error;

pub use config::{Command, Flags, RunConfig, MANIFEST_KEY};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Clone, Debug, PartialEq)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    /// One-line JSON description for stderr.
    pub fn machine_line(&self) -> String {
        let (kind, message) = match self {
            CliError::Config(m) => ("config", m),
            CliError::Numerical(m) => ("numerical", m),
        };
        json!({ "error": kind, "message": message }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) => CliError::Numerical(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tcvqite", version, about = "Variational imaginary-time evolution for transcorrelated Hubbard models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Write the regular and transcorrelated Hamiltonians and one ansatz layer
    Build(Flags),
    /// Exact lowest eigenpairs of both Hamiltonians
    Exact(Flags),
    /// One seeded evolution run
    Evolve(Flags),
    /// Depth sweep over layers and methods
    Sweep(Flags),
    /// Compare evolution targets (right TC, left TC, regular)
    CompareTargets(Flags),
    /// Scan the correlator strength J
    OptimizeJ(Flags),
}

impl Sub {
    pub fn split(&self) -> (Command, &Flags) {
        match self {
            Sub::Build(f) => (Command::Build, f),
            Sub::Exact(f) => (Command::Exact, f),
            Sub::Evolve(f) => (Command::Evolve, f),
            Sub::Sweep(f) => (Command::Sweep, f),
            Sub::CompareTargets(f) => (Command::CompareTargets, f),
            Sub::OptimizeJ(f) => (Command::OptimizeJ, f),
        }
    }
}

pub fn parse_config(command: Command, flags: &Flags) -> Result<RunConfig, CliError> {
    let file = match &flags.config {
        Some(path) => config::read_config_file(path)?,
        None => config::ConfigFile::default(),
    };
    RunConfig::resolve(command, &file, flags)
}

/// Writes via a temporary sibling and a rename, so an interrupted run never
/// leaves a truncated file behind.
fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Config(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

fn trace_bytes(trace: &EvolutionTrace) -> Vec<u8> {
    let mut buf = Vec::new();
    trace.write_csv(&mut buf).expect("writing to memory");
    buf
}

fn job_dir(key: &JobKey) -> String {
    format!("L{}_{}_{}", key.layers, key.method.name(), key.target.name())
}

fn write_manifest(cfg: &RunConfig, command: Command, extra: Value) -> Result<(), CliError> {
    let mut obj = match serde_json::to_value(cfg).expect("config serializes") {
        Value::Object(m) => m,
        _ => unreachable!(),
    };
    let mut meta = Map::new();
    meta.insert("subcommand".into(), json!(command.name()));
    meta.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    meta.insert("seeds".into(), json!((0..cfg.repetitions as u64).map(|r| cfg.seed + r).collect::<Vec<_>>()));
    if let Value::Object(more) = extra {
        meta.extend(more);
    }
    obj.insert(MANIFEST_KEY.into(), Value::Object(meta));
    let mut text = serde_json::to_string_pretty(&Value::Object(obj)).expect("json");
    text.push('\n');
    write_file(&cfg.out_dir().join("manifest.json"), text.as_bytes())
}

fn spectral_json(g: &SpectralResult) -> Value {
    json!({
        "eigenvalue": g.eigenvalue,
        "eigenvalue_imag": g.eigenvalue_imag,
        "right_residual": g.right_residual,
        "left_residual": g.left_residual,
        "degeneracy": g.degeneracy(),
    })
}

fn failures_json(sweep: &SweepResult) -> Value {
    Value::Array(
        sweep
            .failures()
            .map(|r| {
                json!({
                    "layers": r.key.layers,
                    "method": r.key.method.name(),
                    "target": r.key.target.name(),
                    "seed": r.key.seed,
                    "error": r.error,
                })
            })
            .collect(),
    )
}

fn cmd_build(cfg: &RunConfig) -> Result<String, CliError> {
    let (lat, p) = (cfg.lattice(), cfg.params());
    let regular = build_hubbard(&lat, &p)?;
    let tc = build_tc_hubbard(&lat, &p)?;
    let gens = hva_generators(&lat, &p)?;
    let dir = cfg.out_dir();
    write_file(&dir.join("hamiltonian.txt"), tc.to_text().as_bytes())?;
    write_file(&dir.join("hamiltonian_regular.txt"), regular.to_text().as_bytes())?;
    let layer: String = gens.iter().map(|g| format!("{g}\n")).collect();
    write_file(&dir.join("generators.txt"), layer.as_bytes())?;
    let parameters = cfg.layers * gens.len() + 1;
    write_manifest(cfg, Command::Build, json!({ "parameter_count": parameters }))?;
    Ok(format!(
        "qubits {}\nregular terms {}\ntc terms {}\ngenerators per layer {}\nparameters {}\n",
        lat.qubit_count(),
        regular.non_identity_len(),
        tc.non_identity_len(),
        gens.len(),
        parameters
    ))
}

fn cmd_exact(cfg: &RunConfig) -> Result<String, CliError> {
    let (lat, p) = (cfg.lattice(), cfg.params());
    let regular = ground_pair(&build_hubbard(&lat, &p)?)?;
    let tc = ground_pair(&build_tc_hubbard(&lat, &p)?)?;
    let dir = cfg.out_dir();
    let report = json!({ "regular": spectral_json(&regular), "tc": spectral_json(&tc) });
    let mut text = serde_json::to_string_pretty(&report).expect("json");
    text.push('\n');
    write_file(&dir.join("exact.json"), text.as_bytes())?;
    if cfg.dump_eigenvectors {
        write_file(&dir.join("regular.bin"), &regular.right_vector.to_bytes())?;
        write_file(&dir.join("tc_right.bin"), &tc.right_vector.to_bytes())?;
        write_file(&dir.join("tc_left.bin"), &tc.left_vector.to_bytes())?;
    }
    write_manifest(cfg, Command::Exact, json!({}))?;
    Ok(text)
}

fn cmd_evolve(cfg: &RunConfig) -> Result<String, CliError> {
    let (lat, p) = (cfg.lattice(), cfg.params());
    let problem = Problem::new(&lat, &p, cfg.particles)?;
    let ansatz = build_hva(&lat, &p, cfg.layers, Some(problem.particles))?;
    let theta0 = perturb_parameters(&ParameterVector::zeros(ansatz.parameter_count()), cfg.perturb_bound, cfg.seed)?;
    let h = problem.operator(cfg.target);
    let result = run_method(cfg.method, &ansatz, &theta0, h, &cfg.evolution(), &problem.references(cfg.target));
    let (trace, error) = match result {
        Ok(t) => (t, None),
        Err(f) => (f.trace, Some(f.error)),
    };
    let dir = cfg.out_dir();
    write_file(&dir.join(format!("trace_{}.csv", cfg.seed)), &trace_bytes(&trace))?;
    write_manifest(
        cfg,
        Command::Evolve,
        json!({ "seeds": [cfg.seed], "particles": problem.particles, "ground_energy": problem.ground_energy() }),
    )?;
    if let Some(e) = error {
        return Err(e.into());
    }
    let last = trace.last().expect("at least one record");
    Ok(format!(
        "ground {:.12}\nfinal tau {:.6} energy {:.12} {:+.3e}i fidelity {:.12}\n",
        problem.ground_energy(),
        last.tau,
        last.e_real,
        last.e_imag,
        last.fid_right.unwrap_or(f64::NAN)
    ))
}

fn sweep_sink(root: PathBuf) -> impl Fn(&JobKey, &EvolutionTrace) + Sync {
    move |key: &JobKey, trace: &EvolutionTrace| {
        let path = root.join(job_dir(key)).join(format!("trace_{}.csv", key.seed));
        // a failed trace write surfaces as a missing file; the sweep itself continues
        if let Err(e) = write_file(&path, &trace_bytes(trace)) {
            eprintln!("{}", e.machine_line());
        }
    }
}

fn cmd_sweep(cfg: &RunConfig, command: Command) -> Result<String, CliError> {
    let dir = cfg.out_dir();
    let sink = sweep_sink(dir.clone());
    let spec = cfg.experiment();
    let result = match command {
        Command::CompareTargets => run_target_comparison(&spec, Some(&sink))?,
        _ => run_depth_sweep(&spec, Some(&sink))?,
    };
    let mut csv = Vec::new();
    result.write_csv(&mut csv)?;
    write_file(&dir.join("sweep.csv"), &csv)?;
    write_manifest(cfg, command, json!({ "failures": failures_json(&result) }))?;
    let failed = result.failures().count();
    let mut out = String::from_utf8(csv).expect("ascii");
    if failed > 0 {
        out.push_str(&format!("{failed} runs failed; see manifest.json\n"));
    }
    Ok(out)
}

fn cmd_optimize_j(cfg: &RunConfig) -> Result<String, CliError> {
    let dir = cfg.out_dir();
    let spec = ExperimentSpec { layers_list: vec![cfg.layers], ..cfg.experiment() };
    let mut points = Vec::with_capacity(cfg.j_grid.len());
    for &j in &cfg.j_grid {
        let sink = sweep_sink(dir.join(format!("J{j:+.4}")));
        points.push(scan_point(&spec, j, Some(&sink))?);
    }
    let best = best_j(&points)?;
    let mut csv = String::from("j,mean_fid,stderr_fid\n");
    for &(j, m, s) in &points {
        csv.push_str(&format!("{},{},{}\n", format_sci(j), format_sci(m), format_sci(s)));
    }
    write_file(&dir.join("j_scan.csv"), csv.as_bytes())?;
    write_manifest(cfg, Command::OptimizeJ, json!({ "best_j": best }))?;
    Ok(format!("{csv}best_j {best}\n"))
}

/// Runs one subcommand and returns its stdout text.
pub fn dispatch(command: Command, cfg: &RunConfig) -> Result<String, CliError> {
    match command {
        Command::Build => cmd_build(cfg),
        Command::Exact => cmd_exact(cfg),
        Command::Evolve => cmd_evolve(cfg),
        Command::Sweep | Command::CompareTargets => cmd_sweep(cfg, command),
        Command::OptimizeJ => cmd_optimize_j(cfg),
    }
}

/// Parses, dispatches and reports; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let (command, flags) = cli.command.split();
    let outcome = parse_config(command, flags).and_then(|cfg| dispatch(command, &cfg));
    match outcome {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("{}", e.machine_line());
            e.exit_code()
        }
    }
}
