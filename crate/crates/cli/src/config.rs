//! Run configuration. JSON keys are kebab-case and unknown keys are rejected.

use std::path::PathBuf;

use halfcmc::cgrid::ConformalGrid;
use halfcmc::derived::SaEarpParams;
use halfcmc::gaussmaps::{BuiltinMap, SolverOptions};
use halfcmc::surface::VerifyOptions;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const MIN_RESOLUTION: usize = 5;
pub const MAX_RESOLUTION: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Synthesize,
    Verify,
    Parallel,
    Conformal,
    SaEarp,
    Minimal,
    SolveGauss,
    Reflect,
    Examples,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Synthesize => "synthesize",
            Command::Verify => "verify",
            Command::Parallel => "parallel",
            Command::Conformal => "conformal",
            Command::SaEarp => "sa-earp",
            Command::Minimal => "minimal",
            Command::SolveGauss => "solve-gauss",
            Command::Reflect => "reflect",
            Command::Examples => "examples",
        }
    }
}

/// Rectangle `[s_min, s_max] × [t_min, t_max]` and node counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Domain {
    pub rect: [f64; 4],
    pub resolution: [usize; 2],
}

impl Default for Domain {
    fn default() -> Self {
        Self { rect: [-1.0, 1.0, -1.0, 1.0], resolution: [201, 201] }
    }
}

impl Domain {
    pub fn square(r: f64, n: usize) -> Self {
        Self { rect: [-r, r, -r, r], resolution: [n, n] }
    }

    pub fn grid(&self) -> Result<ConformalGrid, CliError> {
        for n in self.resolution {
            if !(MIN_RESOLUTION..=MAX_RESOLUTION).contains(&n) {
                return Err(CliError::Config(format!(
                    "resolution {n} outside [{MIN_RESOLUTION}, {MAX_RESOLUTION}]"
                )));
            }
        }
        let [s0, s1, t0, t1] = self.rect;
        ConformalGrid::new(s0, s1, t0, t1, self.resolution[0], self.resolution[1])
            .map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Where the input map or surface comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Source {
    Builtin(BuiltinMap),
    /// Grid file of hyperboloid samples.
    GaussFile(PathBuf),
    /// Surface file as written by the `surface` output kind.
    SurfaceFile(PathBuf),
    SaEarp(SaEarpParams),
}

/// Hopf differential Q₀ of the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum QSpec {
    /// ⟨G_z, G_z⟩ of the source map.
    #[default]
    Builtin,
    Constant([f64; 2]),
    /// Complex grid file.
    File(PathBuf),
}

/// Boundary values of log τ₀ for the solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Boundary {
    /// log τ₀ = a·s + b·t + c.
    Linear { a: f64, b: f64, c: f64 },
    /// Boundary values of the larger candidate of the source map.
    Analytic,
    /// Real grid file; only boundary nodes are read.
    File(PathBuf),
}

/// Metric factor τ₀ of the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum TauSpec {
    /// Candidate of the source map; `plus` selects the larger root.
    Analytic { plus: bool },
    Solver { boundary: Boundary },
    File(PathBuf),
}

impl Default for TauSpec {
    fn default() -> Self {
        TauSpec::Analytic { plus: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Weierstrass {
    #[serde(default)]
    pub q: QSpec,
    #[serde(default)]
    pub tau: TauSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitialMode {
    #[default]
    Theta,
    Position,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Initial {
    #[serde(default)]
    pub mode: InitialMode,
    /// Base node `[i, j]`; the grid centre when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<[f64; 3]>,
    #[serde(default)]
    pub h0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputKind {
    /// Poincaré-disk mesh with height.
    Obj,
    /// Report of the run.
    Json,
    /// Per-node scalars.
    Csv,
    /// Surface file readable by `verify`.
    Surface,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Output {
    pub kind: OutputKind,
    pub path: PathBuf,
}

/// Named isometry applied to the vertical projection of a source surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Isometry {
    Identity,
    ReflectX2,
    Swap12,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub domain: Domain,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Source>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weierstrass: Option<Weierstrass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Initial>,
    /// Point a of H² for the conformal construction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<[f64; 3]>,
    /// Constant canonical 1-form ω for minimal graphs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isometry: Option<Isometry>,
    /// Mean curvature checked by `verify`; 1/2 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_h: Option<f64>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub tolerances: VerifyOptions,
    #[serde(default)]
    pub outputs: Vec<Output>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            domain: Domain::default(),
            source: None,
            weierstrass: None,
            initial: None,
            point: None,
            omega: None,
            isometry: None,
            expected_h: None,
            solver: SolverOptions::default(),
            tolerances: VerifyOptions::default(),
            outputs: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize")
    }

    /// Checks that the fields required by the command are present.
    pub fn validate(&self) -> Result<(), CliError> {
        let missing = |what: &str| CliError::Config(format!("{} requires {what}", self.command.name()));
        if self.command != Command::Examples {
            self.domain.grid()?;
        }
        match self.command {
            Command::Synthesize => {
                if self.source.is_none() && !matches!(self.weierstrass, Some(Weierstrass { tau: TauSpec::Solver { .. } | TauSpec::File(_), .. })) {
                    return Err(missing("a source map or explicit tau data"));
                }
                if matches!(self.source, Some(Source::SurfaceFile(_) | Source::SaEarp(_))) {
                    return Err(CliError::Config("synthesize takes a Gauss map source".into()));
                }
            }
            Command::Verify => {
                if !matches!(self.source, Some(Source::SurfaceFile(_))) {
                    return Err(missing("a surface-file source"));
                }
            }
            Command::Parallel | Command::Reflect => {
                if self.source.is_none() {
                    return Err(missing("a source"));
                }
            }
            Command::SaEarp => {
                if !matches!(self.source, Some(Source::SaEarp(_))) {
                    return Err(missing("sa-earp parameters as source"));
                }
            }
            Command::Conformal => {
                if !matches!(self.source, Some(Source::Builtin(_) | Source::GaussFile(_))) {
                    return Err(missing("a Gauss map source"));
                }
            }
            Command::Minimal => {
                if !matches!(self.source, Some(Source::Builtin(_) | Source::GaussFile(_))) {
                    return Err(missing("a Gauss map source"));
                }
                if self.omega.is_none() {
                    return Err(missing("omega"));
                }
            }
            Command::SolveGauss => {
                let Some(w) = &self.weierstrass else { return Err(missing("weierstrass data")) };
                if !matches!(w.tau, TauSpec::Solver { .. }) {
                    return Err(missing("tau from the solver"));
                }
                if matches!(w.q, QSpec::Builtin) && self.source.is_none() {
                    return Err(missing("a source map for the builtin Hopf differential"));
                }
            }
            Command::Examples => {}
        }
        if let Some(Source::SaEarp(p)) = &self.source {
            p.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        if let Some(init) = &self.initial {
            match init.mode {
                InitialMode::Theta if init.n0.is_some() => {
                    return Err(CliError::Config("theta mode takes theta0, not n0".into()))
                }
                InitialMode::Position if init.n0.is_none() => return Err(missing("n0 in position mode")),
                InitialMode::Position if init.theta0.is_some() => {
                    return Err(CliError::Config("position mode takes n0, not theta0".into()))
                }
                _ => {}
            }
            if !init.h0.is_finite() {
                return Err(CliError::Config("h0 must be finite".into()));
            }
        }
        self.solver.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.command == Command::SolveGauss {
            if let Some(o) = self.outputs.iter().find(|o| matches!(o.kind, OutputKind::Obj | OutputKind::Surface)) {
                return Err(CliError::Config(format!("{:?} output not available for solve-gauss", o.kind)));
            }
        }
        Ok(())
    }
}
