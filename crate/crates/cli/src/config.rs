//! Run configuration: a flat JSON file, overridden key by key by flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use tcvqite::evolution::{EvolutionConfig, Method, TangentMode, Target};
use tcvqite::experiments::{ExperimentSpec, DEFAULT_PERTURB_BOUND};
use tcvqite::model::{HubbardParams, LatticeSpec};

use crate::CliError;

/// Key reserved for run metadata in manifests; ignored when read back.
pub const MANIFEST_KEY: &str = "manifest";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Build,
    Exact,
    Evolve,
    Sweep,
    CompareTargets,
    OptimizeJ,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Build => "build",
            Command::Exact => "exact",
            Command::Evolve => "evolve",
            Command::Sweep => "sweep",
            Command::CompareTargets => "compare-targets",
            Command::OptimizeJ => "optimize-j",
        }
    }
}

/// Every key a config file may set. All keys are optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub output: Option<PathBuf>,
    pub name: Option<String>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub t: Option<f64>,
    pub u: Option<f64>,
    pub j: Option<f64>,
    pub layers: Option<usize>,
    pub layers_list: Option<Vec<usize>>,
    pub particles: Option<usize>,
    pub perturb_bound: Option<f64>,
    pub seed: Option<u64>,
    pub repetitions: Option<usize>,
    pub method: Option<Method>,
    pub methods: Option<Vec<Method>>,
    pub target: Option<Target>,
    pub targets: Option<Vec<Target>>,
    pub dtau: Option<f64>,
    pub steps: Option<usize>,
    pub svd_cutoff: Option<f64>,
    pub tangent_mode: Option<TangentMode>,
    pub fd_step: Option<f64>,
    pub record_interval: Option<usize>,
    pub j_grid: Option<Vec<f64>>,
    pub dump_eigenvectors: Option<bool>,
    #[serde(rename = "manifest")]
    pub _manifest: Option<serde_json::Value>,
}

fn parse_enum<T: for<'de> Deserialize<'de>>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.trim().replace('-', "_"))).map_err(|_| format!("unknown value {s:?}"))
}

/// Command-line overrides; each flag mirrors the config key of the same name.
#[derive(Clone, Debug, Default, Args)]
pub struct Flags {
    /// JSON config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub t: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub u: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub j: Option<f64>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub layers_list: Option<Vec<usize>>,
    #[arg(long)]
    pub particles: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub perturb_bound: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[arg(long, value_parser = parse_enum::<Method>)]
    pub method: Option<Method>,
    #[arg(long, value_delimiter = ',', value_parser = parse_enum::<Method>)]
    pub methods: Option<Vec<Method>>,
    #[arg(long, value_parser = parse_enum::<Target>)]
    pub target: Option<Target>,
    #[arg(long, value_delimiter = ',', value_parser = parse_enum::<Target>)]
    pub targets: Option<Vec<Target>>,
    #[arg(long, allow_negative_numbers = true)]
    pub dtau: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub svd_cutoff: Option<f64>,
    #[arg(long, value_parser = parse_enum::<TangentMode>)]
    pub tangent_mode: Option<TangentMode>,
    #[arg(long, allow_negative_numbers = true)]
    pub fd_step: Option<f64>,
    #[arg(long)]
    pub record_interval: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub j_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub dump_eigenvectors: Option<bool>,
}

/// The effective configuration, with every default filled in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub output: PathBuf,
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub t: f64,
    pub u: f64,
    pub j: f64,
    pub layers: usize,
    pub layers_list: Vec<usize>,
    pub particles: Option<usize>,
    pub perturb_bound: f64,
    pub seed: u64,
    pub repetitions: usize,
    pub method: Method,
    pub methods: Vec<Method>,
    pub target: Target,
    pub targets: Vec<Target>,
    pub dtau: f64,
    pub steps: usize,
    pub svd_cutoff: f64,
    pub tangent_mode: TangentMode,
    pub fd_step: f64,
    pub record_interval: usize,
    pub j_grid: Vec<f64>,
    pub dump_eigenvectors: bool,
}

pub fn default_j_grid() -> Vec<f64> {
    (0..=10).map(|k| (k as f64 - 10.0) / 10.0).collect()
}

pub fn read_config_file(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config_text(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Parses config JSON; an empty or blank file is an empty config.
pub fn parse_config_text(text: &str) -> Result<ConfigFile, CliError> {
    if text.trim().is_empty() {
        return Ok(ConfigFile::default());
    }
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("line {} column {}: {e}", e.line(), e.column())))
}

macro_rules! pick {
    ($flags:expr, $file:expr, $key:ident, $default:expr) => {
        $flags.$key.clone().or_else(|| $file.$key.clone()).unwrap_or_else(|| $default)
    };
}

impl RunConfig {
    /// Merges `file` and `flags` (flags win), applies defaults and validates.
    pub fn resolve(command: Command, file: &ConfigFile, flags: &Flags) -> Result<Self, CliError> {
        let (default_methods, default_targets) = match command {
            Command::Sweep => (vec![Method::ImaginaryTime, Method::GradientDescent], vec![Target::RightTc]),
            Command::CompareTargets => (vec![Method::ImaginaryTime], vec![Target::RightTc, Target::Regular, Target::LeftTc]),
            _ => (vec![Method::ImaginaryTime], vec![Target::RightTc]),
        };
        let evo = EvolutionConfig::default();
        let cfg = RunConfig {
            output: pick!(flags, file, output, PathBuf::from("runs")),
            name: pick!(flags, file, name, command.name().to_string()),
            rows: pick!(flags, file, rows, 2),
            cols: pick!(flags, file, cols, 2),
            t: pick!(flags, file, t, 1.0),
            u: pick!(flags, file, u, 4.0),
            j: pick!(flags, file, j, -0.5),
            layers: pick!(flags, file, layers, 3),
            layers_list: pick!(flags, file, layers_list, vec![0, 1, 2, 3]),
            particles: flags.particles.or(file.particles),
            perturb_bound: pick!(flags, file, perturb_bound, DEFAULT_PERTURB_BOUND),
            seed: pick!(flags, file, seed, 0),
            repetitions: pick!(flags, file, repetitions, 10),
            method: pick!(flags, file, method, Method::ImaginaryTime),
            methods: pick!(flags, file, methods, default_methods),
            target: pick!(flags, file, target, Target::RightTc),
            targets: pick!(flags, file, targets, default_targets),
            dtau: pick!(flags, file, dtau, evo.dtau),
            steps: pick!(flags, file, steps, evo.steps),
            svd_cutoff: pick!(flags, file, svd_cutoff, evo.svd_cutoff),
            tangent_mode: pick!(flags, file, tangent_mode, evo.tangent_mode),
            fd_step: pick!(flags, file, fd_step, evo.fd_step),
            record_interval: pick!(flags, file, record_interval, evo.record_interval),
            j_grid: pick!(flags, file, j_grid, default_j_grid()),
            dump_eigenvectors: pick!(flags, file, dump_eigenvectors, false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, why: &str| Err(CliError::Config(format!("{field}: {why}")));
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name == ".." || self.name == "." {
            return bad("name", "must be a plain directory name");
        }
        if self.rows == 0 || self.cols == 0 {
            return bad(if self.rows == 0 { "rows" } else { "cols" }, "must be at least 1");
        }
        if 2 * self.rows * self.cols > 24 {
            return bad("rows", "lattice exceeds 24 qubits");
        }
        for (field, v) in [("t", self.t), ("u", self.u), ("j", self.j)] {
            if !v.is_finite() {
                return bad(field, "must be finite");
            }
        }
        if !(self.perturb_bound >= 0.0 && self.perturb_bound.is_finite()) {
            return bad("perturb_bound", "must be finite and non-negative");
        }
        if self.repetitions == 0 {
            return bad("repetitions", "must be at least 1");
        }
        if self.layers_list.is_empty() {
            return bad("layers_list", "must be nonempty");
        }
        if self.methods.is_empty() {
            return bad("methods", "must be nonempty");
        }
        if self.targets.is_empty() {
            return bad("targets", "must be nonempty");
        }
        if !(self.dtau > 0.0 && self.dtau.is_finite()) {
            return bad("dtau", "must be positive");
        }
        if !(self.svd_cutoff >= 0.0 && self.svd_cutoff.is_finite()) {
            return bad("svd_cutoff", "must be finite and non-negative");
        }
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            return bad("fd_step", "must be positive");
        }
        if self.record_interval == 0 {
            return bad("record_interval", "must be at least 1");
        }
        if self.j_grid.is_empty() || self.j_grid.iter().any(|j| !j.is_finite()) {
            return bad("j_grid", "must be a nonempty list of finite values");
        }
        if self.seed.checked_add(self.repetitions as u64).is_none() {
            return bad("seed", "seed + repetitions overflows");
        }
        if let Some(n) = self.particles {
            if n > 2 * self.rows * self.cols {
                return bad("particles", "exceeds the number of spin orbitals");
            }
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.output.join(&self.name)
    }

    pub fn lattice(&self) -> LatticeSpec {
        LatticeSpec::new(self.rows, self.cols).expect("validated")
    }

    pub fn params(&self) -> HubbardParams {
        HubbardParams::new(self.t, self.u, self.j).expect("validated")
    }

    pub fn evolution(&self) -> EvolutionConfig {
        EvolutionConfig {
            dtau: self.dtau,
            steps: self.steps,
            svd_cutoff: self.svd_cutoff,
            tangent_mode: self.tangent_mode,
            fd_step: self.fd_step,
            record_interval: self.record_interval,
            snapshot_parameters: false,
        }
    }

    pub fn experiment(&self) -> ExperimentSpec {
        ExperimentSpec {
            lattice: self.lattice(),
            params: self.params(),
            layers_list: self.layers_list.clone(),
            repetitions: self.repetitions,
            methods: self.methods.clone(),
            targets: self.targets.clone(),
            evolution: self.evolution(),
            seed_base: self.seed,
            perturb_bound: self.perturb_bound,
            particles: self.particles,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_plus_flags() {
        let flags = Flags { rows: Some(2), cols: Some(2), t: Some(1.0), u: Some(4.0), j: Some(-0.5), layers: Some(3), ..Default::default() };
        let cfg = RunConfig::resolve(Command::Evolve, &parse_config_text("").unwrap(), &flags).unwrap();
        assert_eq!((cfg.rows, cfg.cols, cfg.layers, cfg.j), (2, 2, 3, -0.5));
        assert_eq!(cfg.dtau, 0.01);
        assert_eq!(cfg.record_interval, 10);
        assert_eq!(cfg.perturb_bound, 0.02 * std::f64::consts::PI);
    }

    #[test]
    fn flags_override_file() {
        let file = parse_config_text(r#"{"layers": 2, "dtau": 0.02}"#).unwrap();
        let flags = Flags { layers: Some(3), ..Default::default() };
        let cfg = RunConfig::resolve(Command::Evolve, &file, &flags).unwrap();
        assert_eq!(cfg.layers, 3);
        assert_eq!(cfg.dtau, 0.02);
    }

    #[test]
    fn validation_names_field() {
        let file = parse_config_text(r#"{"dtau": -1}"#).unwrap();
        let err = RunConfig::resolve(Command::Evolve, &file, &Flags::default()).unwrap_err();
        assert!(matches!(&err, CliError::Config(m) if m.starts_with("dtau")), "{err:?}");
    }

    #[test]
    fn unknown_keys_rejected_with_position() {
        let err = parse_config_text("{\n  \"rows\": 2,\n  \"colz\": 3\n}").unwrap_err();
        assert!(matches!(&err, CliError::Config(m) if m.contains("line 3") && m.contains("colz")), "{err:?}");
        assert!(parse_config_text(r#"{"manifest": {"seeds": [1]}}"#).is_ok());
    }

    #[test]
    fn effective_config_round_trips() {
        let cfg = RunConfig::resolve(Command::Sweep, &ConfigFile::default(), &Flags::default()).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let again = RunConfig::resolve(Command::Sweep, &parse_config_text(&text).unwrap(), &Flags::default()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.methods, vec![Method::ImaginaryTime, Method::GradientDescent]);
        assert_eq!(cfg.j_grid.len(), 11);
    }

    #[test]
    fn enum_names() {
        assert_eq!(parse_enum::<Target>("left-tc").unwrap(), Target::LeftTc);
        assert_eq!(parse_enum::<Method>("gradient_descent").unwrap(), Method::GradientDescent);
        assert!(parse_enum::<Method>("adam").is_err());
    }
}
