use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use halfcmc::derived::SaEarpParams;
use halfcmc::gaussmaps::BuiltinMap;
use halfcmc_cli::config::{InitialMode, Isometry, Output, OutputKind, Source};
use halfcmc_cli::run::EXIT_CONFIG;
use halfcmc_cli::{examples_catalog, find_preset, run, Command, RunConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Builtin {
    Geodesic,
    DiskIdentity,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum IsometryArg {
    Identity,
    ReflectX2,
    Swap12,
}

#[derive(Debug, Parser)]
#[command(name = "halfcmc", version, about = "Construct and verify H = 1/2 surfaces in H2 x R")]
struct Cli {
    /// synthesize, verify, parallel, conformal, sa-earp, minimal, solve-gauss, reflect or examples.
    command: Option<String>,
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from a catalog preset.
    #[arg(long)]
    preset: Option<String>,
    /// Domain rectangle s_min,s_max,t_min,t_max.
    #[arg(long, allow_hyphen_values = true)]
    rect: Option<List<f64>>,
    /// Nodes per axis, `n` or `n_s,n_t`.
    #[arg(long, allow_hyphen_values = true)]
    resolution: Option<List<usize>>,
    #[arg(long, value_enum)]
    builtin: Option<Builtin>,
    #[arg(long)]
    gauss_file: Option<PathBuf>,
    #[arg(long)]
    surface_file: Option<PathBuf>,
    /// Screw-motion parameter y (selects the sa-earp source).
    #[arg(long, allow_negative_numbers = true)]
    y: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    s0: Option<f64>,
    #[arg(long = "c", allow_negative_numbers = true)]
    c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    z0: Option<List<usize>>,
    #[arg(long, allow_hyphen_values = true)]
    theta0: Option<List<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    n0: Option<List<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    h0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    point: Option<List<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    omega: Option<List<f64>>,
    #[arg(long, value_enum)]
    isometry: Option<IsometryArg>,
    #[arg(long, allow_negative_numbers = true)]
    expected_h: Option<f64>,
    /// Output as `kind=path` with kind obj, json, csv or surface; repeatable.
    #[arg(long)]
    output: Vec<String>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
}

/// Comma-separated values of one flag.
#[derive(Debug, Clone)]
struct List<T>(Vec<T>);

impl<T: std::str::FromStr> std::str::FromStr for List<T> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|v| v.trim().parse().map_err(|_| format!("cannot parse {v:?}")))
            .collect::<Result<_, _>>()
            .map(List)
    }
}

impl<T: Copy> List<T> {
    fn exactly<const N: usize>(&self, flag: &str) -> Result<[T; N], String> {
        <[T; N]>::try_from(self.0.as_slice()).map_err(|_| format!("--{flag} takes {N} comma-separated values"))
    }
}

fn parse_command(s: &str) -> Result<Command, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown command {s:?}"))
}

fn parse_output(s: &str) -> Result<Output, String> {
    let (kind, path) = s.split_once('=').ok_or_else(|| format!("output {s:?} is not kind=path"))?;
    let kind: OutputKind =
        serde_json::from_value(serde_json::Value::String(kind.to_string())).map_err(|_| format!("unknown output kind {kind:?}"))?;
    Ok(Output { kind, path: PathBuf::from(path) })
}

fn build_config(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(_), Some(_)) => return Err("--config and --preset are exclusive".into()),
        (Some(p), None) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            serde_json::from_str::<RunConfig>(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        (None, Some(name)) => find_preset(name).ok_or_else(|| format!("unknown preset {name:?}"))?.config,
        (None, None) => {
            let name = cli.command.as_deref().ok_or("a command, --config or --preset is required")?;
            RunConfig::new(parse_command(name)?)
        }
    };
    if let Some(name) = &cli.command {
        cfg.command = parse_command(name)?;
    }
    if let Some(r) = &cli.rect {
        cfg.domain.rect = r.exactly("rect")?;
    }
    if let Some(r) = &cli.resolution {
        cfg.domain.resolution = match r.0.as_slice() {
            [n] => [*n, *n],
            [a, b] => [*a, *b],
            _ => return Err("--resolution takes n or n_s,n_t".into()),
        };
    }
    if let Some(b) = cli.builtin {
        cfg.source = Some(Source::Builtin(match b {
            Builtin::Geodesic => BuiltinMap::Geodesic,
            Builtin::DiskIdentity => BuiltinMap::DiskIdentity,
        }));
    }
    if let Some(p) = &cli.gauss_file {
        cfg.source = Some(Source::GaussFile(p.clone()));
    }
    if let Some(p) = &cli.surface_file {
        cfg.source = Some(Source::SurfaceFile(p.clone()));
    }
    if cli.y.is_some() || cli.s0.is_some() || cli.c.is_some() {
        let mut p = match cfg.source {
            Some(Source::SaEarp(p)) => p,
            _ => SaEarpParams { y: 0.0, s0: 0.0, c: 0.0, sign: 1 },
        };
        p.y = cli.y.unwrap_or(p.y);
        p.s0 = cli.s0.unwrap_or(p.s0);
        p.c = cli.c.unwrap_or(p.c);
        cfg.source = Some(Source::SaEarp(p));
    }
    if cli.z0.is_some() || cli.theta0.is_some() || cli.n0.is_some() || cli.h0.is_some() {
        let mut init = cfg.initial.clone().unwrap_or_default();
        if let Some(z) = &cli.z0 {
            init.z0 = Some(z.exactly("z0")?);
        }
        if let Some(t) = &cli.theta0 {
            init.mode = InitialMode::Theta;
            init.theta0 = Some(t.exactly("theta0")?);
            init.n0 = None;
        }
        if let Some(n) = &cli.n0 {
            init.mode = InitialMode::Position;
            init.n0 = Some(n.exactly("n0")?);
            init.theta0 = None;
        }
        init.h0 = cli.h0.unwrap_or(init.h0);
        cfg.initial = Some(init);
    }
    if let Some(p) = &cli.point {
        cfg.point = Some(p.exactly("point")?);
    }
    if let Some(w) = &cli.omega {
        cfg.omega = Some(w.exactly("omega")?);
    }
    if let Some(m) = cli.isometry {
        cfg.isometry = Some(match m {
            IsometryArg::Identity => Isometry::Identity,
            IsometryArg::ReflectX2 => Isometry::ReflectX2,
            IsometryArg::Swap12 => Isometry::Swap12,
        });
    }
    if let Some(h) = cli.expected_h {
        cfg.expected_h = Some(h);
    }
    if !cli.output.is_empty() {
        cfg.outputs = cli.output.iter().map(|s| parse_output(s)).collect::<Result<_, _>>()?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    if cli.print_config {
        println!("{}", cfg.to_json());
        return ExitCode::SUCCESS;
    }
    if cfg.command == Command::Examples {
        for p in examples_catalog() {
            println!("{:<24} {}", p.name, p.description);
        }
    }
    let outcome = run(&cfg);
    for path in &outcome.written {
        println!("wrote {}", path.display());
    }
    if let Some(r) = &outcome.report {
        for (name, c) in &r.checks {
            println!("{:<24} {:>12.4e}  (tol {:.1e})  {}", name, c.value, c.tol, if c.pass { "ok" } else { "FAIL" });
        }
    }
    if outcome.code == 0 {
        println!("{}", outcome.message);
    } else {
        eprintln!("{}", outcome.message);
    }
    ExitCode::from(outcome.code as u8)
}
