use halfcmc::cgrid::*;
use halfcmc::gaussmaps::*;
use halfcmc::lorentz::*;
use halfcmc::{Complex64, Error};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn builtin_examples() {
    let grid = ConformalGrid::new(-1.0, 1.0, -1.0, 1.0, 21, 21).unwrap();
    let geo = builtin_map(BuiltinMap::Geodesic, &grid).unwrap();
    let (i, j) = grid.nearest_node(0.0, 1.0).unwrap();
    let v = geo.at(i, j);
    assert!((v.x0 - 1f64.cosh()).abs() < 1e-15 && (v.x1 - 1f64.sinh()).abs() < 1e-15 && v.x2 == 0.0);

    let disk = ConformalGrid::square(0.5, 21).unwrap();
    let id = builtin_map(BuiltinMap::DiskIdentity, &disk).unwrap();
    let v = id.at(10, 10);
    assert!((v.x0 - 1.0).abs() < 1e-15 && v.x1.abs() < 1e-15 && v.x2.abs() < 1e-15);
    let (i, j) = disk.nearest_node(0.5, 0.0).unwrap();
    let v = id.at(i, j);
    assert!((v.x0 - 5.0 / 3.0).abs() < 1e-14 && (v.x1 - 4.0 / 3.0).abs() < 1e-14);

    assert!(matches!(builtin_map(BuiltinMap::DiskIdentity, &grid), Err(Error::Domain(_))));
}

#[test]
fn hopf_examples() {
    let grid = ConformalGrid::square(1.0, 21).unwrap();
    let geo = builtin_map(BuiltinMap::Geodesic, &grid).unwrap();
    let q = hopf_differential(&geo);
    assert!(q.q0.max_distance(&GridField::constant(grid, c(-0.25, 0.0)), 0) < 1e-15);
    // FD route
    let q = hopf_differential(&geo.without_derivative());
    assert!(q.q0.max_distance(&GridField::constant(grid, c(-0.25, 0.0)), 1) < 1e-2);

    let disk = ConformalGrid::square(0.5, 41).unwrap();
    let id = builtin_map(BuiltinMap::DiskIdentity, &disk).unwrap();
    assert!(hopf_differential(&id).q0.max_magnitude(0) < 1e-14);
    let fd = hopf_differential(&id.without_derivative()).q0.max_magnitude(1);
    assert!(fd < 0.05, "{fd}");

    let constant = GaussMapField::new(GridField::constant(grid, VecL3::new(1.0, 0.0, 0.0)), None).unwrap();
    assert_eq!(hopf_differential(&constant).q0.max_magnitude(0), 0.0);
}

#[test]
fn moebius_map_is_conformal() {
    let disk = ConformalGrid::square(0.5, 81).unwrap();
    let m = builtin_map(BuiltinMap::DiskMoebius { a: [0.2, -0.1], theta: 0.7 }, &disk).unwrap();
    assert!(hopf_differential(&m).q0.max_magnitude(0) < 1e-12);
    let e = derivative_consistency(&m, Stencil::Fourth).unwrap();
    assert!(e < 1e-4, "{e}");
}

#[test]
fn candidates_examples() {
    let grid = ConformalGrid::square(1.0, 11).unwrap();
    let geo = builtin_map(BuiltinMap::Geodesic, &grid).unwrap();
    let c = weierstrass_candidates(&geo).unwrap();
    assert!(c.mu.max_distance(&GridField::constant(grid, 0.5), 0) < 1e-14);
    assert!(c.tau0_plus.max_distance(&GridField::constant(grid, 1.0), 0) < 1e-7);
    assert!(c.max_gap() < 1e-7);

    let disk = ConformalGrid::square(0.5, 21).unwrap();
    let id = builtin_map(BuiltinMap::DiskIdentity, &disk).unwrap();
    let c = weierstrass_candidates(&id).unwrap();
    assert!((c.mu.at(10, 10) - 4.0).abs() < 1e-14);
    assert!((c.tau0_plus.at(10, 10) - 16.0).abs() < 1e-13);
    assert!(c.tau0_minus.max_magnitude(0) < 1e-12);
    assert!(c.plus_admissible() && !c.minus_admissible());

    let constant = GaussMapField::new(GridField::constant(grid, VecL3::new(1.0, 0.0, 0.0)), None).unwrap();
    let c = weierstrass_candidates(&constant).unwrap();
    assert!(!c.plus_admissible() && !c.minus_admissible());
}

#[test]
fn gauss_residual_examples() {
    let grid = ConformalGrid::square(1.0, 11).unwrap();
    let q0 = HopfField::constant(grid, c(-0.25, 0.0));
    assert!(gauss_equation_residual(&q0, &GridField::constant(grid, 1.0)) <= 1e-12);
    let r = gauss_equation_residual(&q0, &GridField::constant(grid, 2.0));
    assert!((r - 3.0 / 16.0).abs() < 1e-15);
}

#[test]
fn dual_examples() {
    let grid = ConformalGrid::square(1.0, 7).unwrap();
    let geo = WeierstrassData::new(GridField::constant(grid, c(0.25, 0.0)), GridField::constant(grid, 0.5)).unwrap();
    let d = dual_data(&geo).unwrap();
    assert!(d.tau0().max_distance(&GridField::constant(grid, 1.0), 0) < 1e-15);
    let w = WeierstrassData::from_hopf(&HopfField::constant(grid, c(-0.25, 0.0)), &GridField::constant(grid, 2.0)).unwrap();
    let d = dual_data(&w).unwrap();
    assert!(d.tau0().max_distance(&GridField::constant(grid, 0.5), 0) < 1e-15);
    assert!(d.mu().max_distance(w.mu(), 0) < 1e-15);

    let mut q = GridField::constant(grid, c(0.25, 0.0));
    q.set(3, 2, c(0.0, 0.0));
    let w = WeierstrassData::new(q, GridField::constant(grid, 0.5)).unwrap();
    assert!(matches!(dual_data(&w), Err(Error::VanishingQ { node: (3, 2), .. })));
}

#[test]
fn data_rejects_nonpositive_tau() {
    let grid = ConformalGrid::square(1.0, 5).unwrap();
    let mut tau = GridField::constant(grid, 1.0);
    tau.set(1, 1, 0.0);
    assert!(WeierstrassData::new(GridField::constant(grid, c(0.0, 0.0)), tau).is_err());
}

#[test]
fn solver_constant_case() {
    let grid = ConformalGrid::square(1.0, 41).unwrap();
    let q0 = HopfField::constant(grid, c(-0.25, 0.0));
    let sol = solve_gauss_equation(&q0, &GridField::constant(grid, 0.0), &SolverOptions::default()).unwrap();
    assert!(sol.iterations() <= 2);
    assert!(sol.tau0.max_distance(&GridField::constant(grid, 1.0), 0) < 1e-12);
}

#[test]
fn solver_odd_boundary_data() {
    let grid = ConformalGrid::square(1.0, 41).unwrap();
    let q0 = HopfField::constant(grid, c(-0.25, 0.0));
    let sol = solve_gauss_equation(&q0, &GridField::from_fn(grid, |s, _| 0.3 * s), &SolverOptions::default())
        .unwrap();
    assert!(gauss_equation_residual(&q0, &sol.tau0) <= 1e-10);
    let h = sol.history();
    assert!(h.windows(2).all(|w| w[1] < w[0]), "{h:?}");
    assert!(sol.log_lines().lines().count() == sol.log.len());
}

#[test]
fn solver_reports_divergence() {
    let grid = ConformalGrid::square(1.0, 21).unwrap();
    let q0 = HopfField::constant(grid, c(-0.25, 0.0));
    let opts = SolverOptions { max_newton_iters: 1, ..Default::default() };
    let r = solve_gauss_equation(&q0, &GridField::from_fn(grid, |s, _| 2.0 * s), &opts);
    assert!(matches!(r, Err(Error::SolverDiverged { iterations: 1, .. })));
}

#[test]
fn frame_integration_reproduces_geodesic_data() {
    // constant data Q₀ = −1/4, τ₀ = 1 is realized by a geodesic map
    let grid = ConformalGrid::square(1.0, 41).unwrap();
    let q0 = HopfField::constant(grid, c(-0.25, 0.0));
    let g = harmonic_map_from_data(&q0, &GridField::constant(grid, 1.0), (20, 20)).unwrap();
    assert!(hopf_differential(&g).q0.max_distance(&q0.q0, 0) < 1e-8);
    let cands = weierstrass_candidates(&g).unwrap();
    assert!(cands.max_gap() < 1e-4);
    assert!(harmonicity_residual(&g) < 1e-3);
}

#[test]
fn frame_integration_reproduces_conformal_data() {
    let grid = ConformalGrid::square(0.5, 81).unwrap();
    let id = builtin_map(BuiltinMap::DiskIdentity, &grid).unwrap();
    let tau0 = weierstrass_candidates(&id).unwrap().tau0_plus;
    let g = harmonic_map_from_data(&HopfField::constant(grid, c(0.0, 0.0)), &tau0, (40, 40)).unwrap();
    // the seed frame matches the identity lift at the center
    assert!(g.field().max_distance(id.field(), 0) < 1e-5);
    let m = weierstrass_candidates(&g).unwrap();
    for (i, j) in grid.nodes() {
        assert!((m.tau0_plus.at(i, j) / tau0.at(i, j) - 1.0).abs() < 1e-5);
    }
}

proptest! {
    #[test]
    fn candidate_gap_identity(a0 in -0.6f64..0.6, a1 in -0.6f64..0.6, th in 0.0f64..6.0) {
        prop_assume!(a0 * a0 + a1 * a1 < 0.36);
        let disk = ConformalGrid::square(0.4, 9).unwrap();
        let m = builtin_map(BuiltinMap::DiskMoebius { a: [a0, a1], theta: th }, &disk).unwrap();
        let c = weierstrass_candidates(&m).unwrap();
        for (i, j) in disk.nodes() {
            let mu = c.mu.at(i, j);
            let lhs = mu * mu - 4.0 * c.q0.at(i, j).norm_sqr();
            let gap = c.tau0_plus.at(i, j) - c.tau0_minus.at(i, j);
            prop_assert!((lhs - gap * gap / 16.0).abs() <= 1e-9 * (1.0 + mu * mu));
        }
    }

    #[test]
    fn dual_is_an_involution(q in 0.05f64..2.0, arg in 0.0f64..6.0, t in 0.05f64..5.0) {
        let grid = ConformalGrid::square(1.0, 5).unwrap();
        let w = WeierstrassData::new(
            GridField::constant(grid, Complex64::from_polar(q, arg)),
            GridField::from_fn(grid, |s, u| t * (1.0 + 0.1 * s * u)),
        ).unwrap();
        let back = dual_data(&dual_data(&w).unwrap()).unwrap();
        prop_assert!(back.tau().max_distance(w.tau(), 0) <= 1e-12 * t.max(1.0 / t) * (1.0 + q * q));
        prop_assert!(back.mu().max_distance(w.mu(), 0) <= 1e-9 * w.mu().max_magnitude(0));
    }
}

#[test]
fn solver_converges_at_the_rounding_floor_on_fine_grids() {
    let grid = ConformalGrid::square(0.25, 201).unwrap();
    let exact = GridField::from_fn(grid, |s, t| 16.0 / (1.0 - s * s - t * t).powi(2));
    let q0 = HopfField::constant(grid, c(0.0, 0.0));
    let sol = solve_gauss_equation(&q0, &exact.map(f64::ln), &SolverOptions::default()).unwrap();
    assert!(sol.tau0.max_distance(&exact, 0) < 1e-4);
    let h = sol.history();
    assert!(h.windows(2).all(|w| w[1] < w[0]), "{h:?}");
}
