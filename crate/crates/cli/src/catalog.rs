//! Named example configurations.

use std::path::PathBuf;

use halfcmc::derived::SaEarpParams;
use halfcmc::gaussmaps::BuiltinMap;

use crate::config::{
    Boundary, Command, Domain, Initial, InitialMode, Output, OutputKind, QSpec, RunConfig, Source, TauSpec,
    Weierstrass,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub config: RunConfig,
}

fn outputs(name: &str, kinds: &[OutputKind]) -> Vec<Output> {
    kinds
        .iter()
        .map(|&kind| {
            let ext = match kind {
                OutputKind::Obj => "obj",
                OutputKind::Json => "json",
                OutputKind::Csv => "csv",
                OutputKind::Surface => "surface.json",
            };
            Output { kind, path: PathBuf::from(format!("{name}.{ext}")) }
        })
        .collect()
}

fn sa_earp_params(y: f64) -> SaEarpParams {
    SaEarpParams { y, s0: 0.0, c: 0.0, sign: 1 }
}

pub fn examples_catalog() -> Vec<Preset> {
    let mesh = [OutputKind::Obj, OutputKind::Json];
    let mut presets = Vec::new();

    for (name, y, description) in [
        ("sa-earp-y0", 0.0, "Screw-motion surface with y = 0 (singular Gauss map)"),
        ("sa-earp-y1", 1.0, "Screw-motion surface with y = 1"),
    ] {
        let mut c = RunConfig::new(Command::SaEarp);
        c.source = Some(Source::SaEarp(sa_earp_params(y)));
        c.outputs = outputs(name, &mesh);
        presets.push(Preset { name, description, config: c });
    }

    let mut c = RunConfig::new(Command::Synthesize);
    c.domain = Domain::square(0.25, 201);
    c.source = Some(Source::Builtin(BuiltinMap::DiskIdentity));
    c.weierstrass = Some(Weierstrass { q: QSpec::Constant([0.0, 0.0]), tau: TauSpec::Analytic { plus: true } });
    c.initial = Some(Initial { mode: InitialMode::Position, z0: None, theta0: None, n0: Some([1.0, 0.0, 0.0]), h0: 2.0 });
    c.outputs = outputs("conformal-disk", &mesh);
    presets.push(Preset {
        name: "conformal-disk",
        description: "Surface over the identity of the Poincare disk, reconstructed from Weierstrass data",
        config: c,
    });

    let mut c = RunConfig::new(Command::Minimal);
    c.source = Some(Source::Builtin(BuiltinMap::Geodesic));
    c.omega = Some([0.5, 0.0]);
    c.initial = Some(Initial { h0: -1.0, ..Initial::default() });
    c.outputs = outputs("cylinder-minimal", &mesh);
    presets.push(Preset {
        name: "cylinder-minimal",
        description: "Vertical minimal cylinder over a geodesic, height h = s",
        config: c,
    });

    let mut c = RunConfig::new(Command::SolveGauss);
    c.weierstrass = Some(Weierstrass {
        q: QSpec::Constant([0.25, 0.0]),
        tau: TauSpec::Solver { boundary: Boundary::Linear { a: 0.0, b: 0.0, c: 0.0 } },
    });
    c.outputs = outputs("gauss-solver-constant", &[OutputKind::Json, OutputKind::Csv]);
    presets.push(Preset {
        name: "gauss-solver-constant",
        description: "Gauss equation with constant Hopf differential 1/4 and constant solution",
        config: c,
    });

    let mut c = RunConfig::new(Command::Parallel);
    c.source = Some(Source::SaEarp(sa_earp_params(0.0)));
    c.outputs = outputs("parallel-sa-earp", &mesh);
    presets.push(Preset {
        name: "parallel-sa-earp",
        description: "Parallel surface of the y = 0 screw-motion surface",
        config: c,
    });

    presets
}

pub fn find_preset(name: &str) -> Option<Preset> {
    examples_catalog().into_iter().find(|p| p.name == name)
}
