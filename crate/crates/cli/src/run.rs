//! Pipeline runner.

use std::path::{Path, PathBuf};

use halfcmc::cgrid::{GridField, Stencil};
use halfcmc::derived::{
    conformal_surface, minimal_graph, parallel_surface, reflect_extend, sa_earp, CanonicalOneForm,
    ReflectOptions,
};
use halfcmc::gaussmaps::{
    builtin_map, gauss_equation_residual, harmonic_map_from_data, harmonicity_residual, hopf_differential_with,
    solve_gauss_equation, weierstrass_candidates_with, GaussMapField, GaussSolution, HopfField, WeierstrassData,
};
use halfcmc::height::{integrate_theta, theta_from_position, InitialCondition};
use halfcmc::lorentz::{H2Point, IsometryH2, VecL3};
use halfcmc::surface::{hyperbolic_gauss_map, reconstruct, verify_with, InvariantReport, SurfaceGrid};
use halfcmc::{Complex64, Node};
use serde_json::{json, Map, Value};

use crate::catalog::examples_catalog;
use crate::config::{Boundary, Command, InitialMode, Isometry, OutputKind, QSpec, RunConfig, Source, TauSpec};
use crate::export::{self, complex_pair, MeshExport};
use crate::CliError;

/// Environment variable naming the directory for relative output paths.
pub const OUTPUT_DIR_ENV: &str = "HALFCMC_OUTPUT_DIR";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Result of one run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub message: String,
    pub report: Option<InvariantReport>,
    pub written: Vec<PathBuf>,
}

enum Product {
    Surface { s: SurfaceGrid, report: InvariantReport, extra: Map<String, Value> },
    Map { g: GaussMapField, extra: Map<String, Value> },
    Solver { sol: GaussSolution, gauss_residual: f64 },
    Catalog,
}

/// Runs with relative outputs resolved against `HALFCMC_OUTPUT_DIR`.
pub fn run(cfg: &RunConfig) -> Outcome {
    let dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
    run_in(cfg, dir.as_deref())
}

pub fn run_in(cfg: &RunConfig, output_dir: Option<&Path>) -> Outcome {
    let result = cfg.validate().and_then(|_| execute(cfg)).and_then(|p| finish(cfg, p, output_dir));
    match result {
        Ok(o) => o,
        Err(e) => Outcome { code: e.exit_code(), message: e.to_string(), report: None, written: Vec::new() },
    }
}

fn execute(cfg: &RunConfig) -> Result<Product, CliError> {
    let grid = cfg.domain.grid();
    match cfg.command {
        Command::Examples => Ok(Product::Catalog),
        Command::Synthesize => synthesize(cfg),
        Command::Verify => {
            let s = base_surface(cfg)?;
            let report = verify_with(&s, cfg.expected_h.unwrap_or(0.5), None, None, &cfg.tolerances);
            Ok(Product::Surface { s, report, extra: Map::new() })
        }
        Command::SaEarp => {
            let s = base_surface(cfg)?;
            let report = verify_with(&s, 0.5, None, None, &cfg.tolerances);
            Ok(Product::Surface { s, report, extra: Map::new() })
        }
        Command::Parallel => {
            let base = base_surface(cfg)?;
            let g = hyperbolic_gauss_map(&base).map_err(CliError::from_core)?;
            let s = parallel_surface(&base, &g).map_err(CliError::from_core)?;
            let report = verify_with(&s, 0.5, Some(&g), None, &cfg.tolerances);
            Ok(Product::Surface { s, report, extra: Map::new() })
        }
        Command::Conformal => {
            let g = source_map(cfg)?.expect("validated");
            let a = cfg.point.map_or(Ok(H2Point::apex()), |p| H2Point::new(VecL3::from_array(p)));
            let a = a.map_err(|e| CliError::Config(e.to_string()))?;
            let s = conformal_surface(&g, &a).map_err(CliError::from_core)?;
            let report = verify_with(&s, 0.5, Some(&g), None, &cfg.tolerances);
            Ok(Product::Surface { s, report, extra: Map::new() })
        }
        Command::Minimal => {
            let g = source_map(cfg)?.expect("validated");
            let w = cfg.omega.expect("validated");
            let omega = CanonicalOneForm::constant(grid?, Complex64::new(w[0], w[1]));
            let h0 = cfg.initial.as_ref().map_or(0.0, |i| i.h0);
            let s = minimal_graph(&g, &omega, h0).map_err(CliError::from_core)?;
            let report = verify_with(&s, cfg.expected_h.unwrap_or(0.0), None, None, &cfg.tolerances);
            Ok(Product::Surface { s, report, extra: Map::new() })
        }
        Command::SolveGauss => {
            let src = source_map(cfg)?;
            let w = cfg.weierstrass.clone().expect("validated");
            let q0 = hopf_field(cfg, &w.q, src.as_ref())?;
            let TauSpec::Solver { boundary } = &w.tau else { unreachable!("validated") };
            let b = boundary_field(cfg, boundary, src.as_ref())?;
            let sol = solve_gauss_equation(&q0, &b, &cfg.solver).map_err(CliError::from_core)?;
            let gauss_residual = gauss_equation_residual(&q0, &sol.tau0);
            Ok(Product::Solver { sol, gauss_residual })
        }
        Command::Reflect => reflect(cfg),
    }
}

fn synthesize(cfg: &RunConfig) -> Result<Product, CliError> {
    let grid = cfg.domain.grid()?;
    let src = source_map(cfg)?;
    let spec = cfg.weierstrass.clone().unwrap_or_default();
    let q0 = hopf_field(cfg, &spec.q, src.as_ref())?;
    let mut extra = Map::new();
    let tau0 = match &spec.tau {
        TauSpec::Analytic { plus } => {
            let g = src.as_ref().ok_or_else(|| CliError::Config("analytic tau requires a source map".into()))?;
            let c = weierstrass_candidates_with(g, Stencil::Sixth).map_err(CliError::from_core)?;
            if *plus {
                c.tau0_plus
            } else {
                c.tau0_minus
            }
        }
        TauSpec::Solver { boundary } => {
            let b = boundary_field(cfg, boundary, src.as_ref())?;
            let sol = solve_gauss_equation(&q0, &b, &cfg.solver).map_err(CliError::from_core)?;
            extra.insert("solver_iterations".into(), json!(sol.iterations()));
            extra.insert("solver_history".into(), json!(sol.history()));
            sol.tau0
        }
        TauSpec::File(p) => export::read_field(p)?,
    };
    if tau0.grid() != &grid {
        return Err(CliError::Input("tau0 grid differs from the domain".into()));
    }
    let init = cfg.initial.clone().unwrap_or_default();
    let z0 = base_node(cfg, init.z0)?;
    let g = match src {
        Some(g) => g,
        None => harmonic_map_from_data(&q0, &tau0, z0).map_err(CliError::from_core)?,
    };
    let w = WeierstrassData::from_hopf(&q0, &tau0).map_err(CliError::from_core)?;
    let theta0 = match init.mode {
        InitialMode::Theta => {
            let t = init.theta0.unwrap_or([0.0, 0.0]);
            Complex64::new(t[0], t[1])
        }
        InitialMode::Position => {
            let n0 = H2Point::new(VecL3::from_array(init.n0.expect("validated")))
                .map_err(|e| CliError::Config(e.to_string()))?;
            theta_from_position(&n0, &g, &w, z0).map_err(CliError::from_core)?
        }
    };
    let sol = integrate_theta(&w, &InitialCondition::new(z0, theta0, init.h0)).map_err(CliError::from_core)?;
    let s = reconstruct(&g, &w, &sol).map_err(CliError::from_core)?;
    extra.insert("compatibility_residual".into(), json!(sol.compatibility_residual));
    extra.insert("theta0".into(), json!(complex_pair(theta0)));
    let report = verify_with(&s, 0.5, Some(&g), Some(&w), &cfg.tolerances);
    Ok(Product::Surface { s, report, extra })
}

fn reflect(cfg: &RunConfig) -> Result<Product, CliError> {
    let opts = ReflectOptions::default();
    match cfg.source.as_ref().expect("validated") {
        Source::Builtin(_) | Source::GaussFile(_) => {
            let g = source_map(cfg)?.expect("map source");
            let r = reflect_extend(&g, &opts).map_err(CliError::from_core)?;
            let mut extra = Map::new();
            extra.insert("c0_residual".into(), json!(r.c0_residual));
            extra.insert("c1_residual".into(), json!(r.c1_residual));
            extra.insert("harmonicity_residual".into(), json!(harmonicity_residual(&r.field)));
            Ok(Product::Map { g: r.field, extra })
        }
        Source::SaEarp(_) | Source::SurfaceFile(_) => {
            let s = base_surface(cfg)?;
            let r = reflect_extend(&s, &opts).map_err(CliError::from_core)?;
            let mut extra = Map::new();
            extra.insert("c0_residual".into(), json!(r.c0_residual));
            extra.insert("c1_residual".into(), json!(r.c1_residual));
            let report = verify_with(&r.field, cfg.expected_h.unwrap_or(0.5), None, None, &cfg.tolerances);
            Ok(Product::Surface { s: r.field, report, extra })
        }
    }
}

fn base_node(cfg: &RunConfig, z0: Option<[usize; 2]>) -> Result<Node, CliError> {
    let g = cfg.domain.grid()?;
    let node = z0.map_or((g.n_s / 2, g.n_t / 2), |[i, j]| (i, j));
    g.check_node(node).map_err(|e| CliError::Config(format!("z0: {e}")))?;
    Ok(node)
}

fn isometry(cfg: &RunConfig) -> IsometryH2 {
    match cfg.isometry {
        None | Some(Isometry::Identity) => IsometryH2::identity(),
        Some(Isometry::ReflectX2) => IsometryH2::reflect_x2(),
        Some(Isometry::Swap12) => IsometryH2::swap_12(),
    }
}

fn source_map(cfg: &RunConfig) -> Result<Option<GaussMapField>, CliError> {
    let grid = cfg.domain.grid()?;
    let g = match &cfg.source {
        Some(Source::Builtin(m)) => builtin_map(*m, &grid).map_err(CliError::from_core)?,
        Some(Source::GaussFile(p)) => {
            let f = export::read_field::<VecL3>(p)?;
            if f.grid() != &grid {
                return Err(CliError::Input(format!("{}: grid differs from the domain", p.display())));
            }
            GaussMapField::from_samples(f, 1e-8).map_err(|e| CliError::Input(e.to_string()))?
        }
        _ => return Ok(None),
    };
    let m = isometry(cfg);
    if m == IsometryH2::identity() {
        return Ok(Some(g));
    }
    let dz = g.analytic_dz().map(|d| d.map(|v| m.apply_cvec(&v)));
    GaussMapField::renormalized(g.field().map(|v| m.apply_vec(&v)), dz).map(Some).map_err(CliError::from_core)
}

fn base_surface(cfg: &RunConfig) -> Result<SurfaceGrid, CliError> {
    let s = match &cfg.source {
        Some(Source::SaEarp(p)) => sa_earp(*p, &cfg.domain.grid()?).map_err(CliError::from_core)?,
        Some(Source::SurfaceFile(p)) => export::read_surface(p)?,
        _ => return Err(CliError::Config(format!("{} requires a surface source", cfg.command.name()))),
    };
    let m = isometry(cfg);
    if m == IsometryH2::identity() {
        return Ok(s);
    }
    SurfaceGrid::from_parts(
        s.n.map(|v| m.apply_vec(&v)),
        s.h.clone(),
        Some(s.u.clone()),
        Some(s.lambda.clone()),
        Some(s.mask.clone()),
    )
    .map_err(CliError::from_core)
}

fn hopf_field(cfg: &RunConfig, q: &QSpec, src: Option<&GaussMapField>) -> Result<HopfField, CliError> {
    let grid = cfg.domain.grid()?;
    match q {
        QSpec::Builtin => {
            let g = src.ok_or_else(|| CliError::Config("builtin Hopf differential requires a source map".into()))?;
            Ok(hopf_differential_with(g, Stencil::Sixth))
        }
        QSpec::Constant([re, im]) => Ok(HopfField::constant(grid, Complex64::new(*re, *im))),
        QSpec::File(p) => {
            let f = export::read_field::<Complex64>(p)?;
            if f.grid() != &grid {
                return Err(CliError::Input(format!("{}: grid differs from the domain", p.display())));
            }
            Ok(HopfField::new(f))
        }
    }
}

fn boundary_field(cfg: &RunConfig, b: &Boundary, src: Option<&GaussMapField>) -> Result<GridField<f64>, CliError> {
    let grid = cfg.domain.grid()?;
    match b {
        Boundary::Linear { a, b, c } => Ok(GridField::from_fn(grid, |s, t| a * s + b * t + c)),
        Boundary::Analytic => {
            let g = src.ok_or_else(|| CliError::Config("analytic boundary requires a source map".into()))?;
            let c = weierstrass_candidates_with(g, Stencil::Sixth).map_err(CliError::from_core)?;
            Ok(c.tau0_plus.map(f64::ln))
        }
        Boundary::File(p) => {
            let f = export::read_field::<f64>(p)?;
            if f.grid() != &grid {
                return Err(CliError::Input(format!("{}: grid differs from the domain", p.display())));
            }
            Ok(f)
        }
    }
}

fn resolve(path: &Path, dir: Option<&Path>) -> PathBuf {
    match dir {
        Some(d) if path.is_relative() => d.join(path),
        _ => path.to_path_buf(),
    }
}

fn finish(cfg: &RunConfig, product: Product, dir: Option<&Path>) -> Result<Outcome, CliError> {
    let (pass, summary, report) = match &product {
        Product::Surface { report, extra, .. } => {
            let v = json!({
                "command": cfg.command.name(),
                "pass": report.pass,
                "report": report,
                "extra": extra,
            });
            (report.pass, v, Some(report.clone()))
        }
        Product::Map { extra, .. } => {
            (true, json!({ "command": cfg.command.name(), "pass": true, "extra": extra }), None)
        }
        Product::Solver { sol, gauss_residual } => {
            let v = json!({
                "command": cfg.command.name(),
                "pass": true,
                "iterations": sol.iterations(),
                "history": sol.history(),
                "log": sol.log,
                "gauss_residual": gauss_residual,
            });
            (true, v, None)
        }
        Product::Catalog => {
            let names: Vec<&str> = examples_catalog().iter().map(|p| p.name).collect();
            (true, json!({ "command": cfg.command.name(), "pass": true, "presets": names }), None)
        }
    };
    let mut written = Vec::new();
    for out in &cfg.outputs {
        let path = resolve(&out.path, dir);
        let unavailable = || CliError::Config(format!("{:?} output not available for {}", out.kind, cfg.command.name()));
        let text = match (out.kind, &product) {
            (OutputKind::Json, Product::Catalog) => {
                let presets: Vec<Value> = examples_catalog()
                    .iter()
                    .map(|p| json!({ "name": p.name, "description": p.description, "config": p.config }))
                    .collect();
                serde_json::to_string_pretty(&presets).expect("catalog serializes") + "\n"
            }
            (OutputKind::Json, _) => serde_json::to_string_pretty(&summary).expect("summaries serialize") + "\n",
            (OutputKind::Obj, Product::Surface { s, .. }) => MeshExport::from_surface(s)?.to_obj(),
            (OutputKind::Csv, Product::Surface { s, .. }) => export::surface_csv(s)?,
            (OutputKind::Surface, Product::Surface { s, .. }) => export::surface_to_json(s),
            (OutputKind::Csv, Product::Map { g, .. }) => export::map_csv(g.field()),
            (OutputKind::Csv, Product::Solver { sol, .. }) => export::scalar_csv(&sol.tau0, "tau0"),
            _ => return Err(unavailable()),
        };
        export::write_file(&path, &text)?;
        written.push(path);
    }
    let message = if pass {
        format!("{}: pass", cfg.command.name())
    } else {
        let failing = report.as_ref().map(|r| r.failing().join(", ")).unwrap_or_default();
        format!("{}: verification failed: {failing}", cfg.command.name())
    };
    Ok(Outcome { code: if pass { EXIT_PASS } else { EXIT_VERIFY }, message, report, written })
}
