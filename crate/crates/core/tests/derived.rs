use halfcmc::cgrid::{dz_field, ConformalGrid, GridField, Stencil};
use halfcmc::derived::*;
use halfcmc::gaussmaps::{
    builtin_map, harmonic_map_from_data, harmonicity_residual, BuiltinMap, GaussMapField, HopfField,
};
use halfcmc::lorentz::{minkowski_dot, H2Point, IsometryH2, VecL3, VecL4};
use halfcmc::surface::{abresch_rosenberg, hyperbolic_gauss_map, mean_curvature, measured_lambda, verify, SurfaceGrid};
use halfcmc::{Complex64, Error};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn max_over(nodes: &[(usize, usize)], f: impl Fn(usize, usize) -> f64) -> f64 {
    nodes.iter().map(|&(i, j)| f(i, j)).fold(0.0, f64::max)
}

fn screw(y: f64, grid: &ConformalGrid) -> SurfaceGrid {
    sa_earp(SaEarpParams::new(y, 0.0, 0.0, 1).unwrap(), grid).unwrap()
}

fn swapped(s: &SurfaceGrid) -> SurfaceGrid {
    let m = IsometryH2::swap_12();
    SurfaceGrid::from_parts(s.n.map(|v| m.apply_vec(&v)), s.h.clone(), Some(s.u.clone()), Some(s.lambda.clone()), None)
        .unwrap()
}

#[test]
fn screw_motion_values_at_the_origin() {
    let grid = ConformalGrid::square(1.0, 21).unwrap();
    let s = screw(0.0, &grid);
    assert!((s.h.at(10, 10) - 1.0).abs() < 1e-15);
    assert!((s.u.at(10, 10) - 1.0).abs() < 1e-15);
    assert!((s.lambda.at(10, 10) - 1.0).abs() < 1e-15);
    assert!((s.n.at(10, 10) - VecL3::new(1.0, 0.0, 0.0)).max_abs() < 1e-15);

    let s = screw(1.0, &grid);
    let r2 = 2f64.sqrt();
    assert!((s.h.at(10, 10) - r2).abs() < 1e-15);
    assert!((s.n.at(10, 10) - VecL3::new(r2, 1.0, 0.0)).max_abs() < 1e-15);
    assert!((minkowski_dot(&s.n.at(10, 10), &s.n.at(10, 10)) + 1.0).abs() < 1e-14);
}

#[test]
fn screw_motion_rejects_bad_branch() {
    assert!(SaEarpParams::new(0.0, 0.0, 0.0, 0).is_err());
    assert!(SaEarpParams::new(f64::NAN, 0.0, 0.0, 1).is_err());
}

#[test]
fn parallel_of_screw_motion_flips_the_branch() {
    let grid = ConformalGrid::square(1.0, 201).unwrap();
    let s = screw(0.0, &grid);
    let g = hyperbolic_gauss_map(&s).unwrap();
    let p = parallel_surface(&s, &g).unwrap();
    let flipped = sa_earp(SaEarpParams::new(0.0, 0.0, 0.0, -1).unwrap(), &grid).unwrap();
    let nodes = s.report_nodes(2);

    assert!(max_over(&nodes, |i, j| (p.n.at(i, j) - flipped.n.at(i, j)).max_abs()) < 1e-6);
    assert!(max_over(&nodes, |i, j| (p.h.at(i, j) - s.h.at(i, j)).abs()) < 1e-6);
    assert!(max_over(&nodes, |i, j| (p.n.at(i, j).x2 + s.n.at(i, j).x2).abs()) <= 1e-6);

    // λ♯ = 16|Q|²/(λu⁴) = cosh²s, checked against the measured metric
    let lm = measured_lambda(&p.psi());
    assert!(max_over(&nodes, |i, j| (lm.at(i, j) - p.lambda.at(i, j)).abs()) <= 1e-6);
    assert!(max_over(&nodes, |i, j| (p.lambda.at(i, j) - grid.s(i).cosh().powi(2)).abs()) <= 1e-6);
    assert!(max_over(&nodes, |i, j| (p.eta.at(i, j).x3 - s.u.at(i, j)).abs()) <= 1e-6);

    let r = verify(&p, 0.5, Some(&g), None);
    assert!(r.pass, "{:?}", r.failing());
    let gp = hyperbolic_gauss_map(&p).unwrap();
    assert!(max_over(&nodes, |i, j| (gp.at(i, j) - g.at(i, j)).max_abs()) <= 1e-5);

    let pp = parallel_surface(&p, &g).unwrap();
    let (a, b) = (pp.psi(), s.psi());
    assert!(max_over(&nodes, |i, j| (a.at(i, j) - b.at(i, j)).max_abs()) <= 1e-5);
}

#[test]
fn parallel_rejects_vanishing_q() {
    let grid = ConformalGrid::square(0.25, 41).unwrap();
    let g = builtin_map(BuiltinMap::DiskIdentity, &grid).unwrap();
    let s = conformal_surface(&g, &H2Point::apex()).unwrap();
    assert!(matches!(parallel_surface(&s, &g), Err(Error::VanishingQ { .. })));
}

#[test]
fn conformal_surface_examples() {
    let grid = ConformalGrid::square(0.25, 201).unwrap();
    let g = builtin_map(BuiltinMap::DiskIdentity, &grid).unwrap();
    let s = conformal_surface(&g, &H2Point::apex()).unwrap();
    let psi = s.psi();
    assert!((psi.at(100, 100) - VecL4::new(1.0, 0.0, 0.0, 2.0)).max_abs() < 1e-14);
    assert!(max_over(&s.report_nodes(0), |i, j| (s.h.at(i, j) - 2.0 * g.at(i, j).x0).abs()) < 1e-12);

    // −ψ + (2/u)(G, 1) is the constant point (a, b)
    let par = |i: usize, j: usize| -psi.at(i, j) + VecL4::from_parts(g.at(i, j), 1.0) * (2.0 / s.eta.at(i, j).x3);
    let nodes = s.report_nodes(0);
    let mean = nodes.iter().fold(VecL4::zero(), |acc, &(i, j)| acc + par(i, j)) * (1.0 / nodes.len() as f64);
    assert!(max_over(&nodes, |i, j| (par(i, j) - mean).max_abs()) <= 1e-6);
    assert!((VecL4::from_parts(mean.spatial(), 0.0) - VecL4::new(1.0, 0.0, 0.0, 0.0)).max_abs() < 1e-6);

    let r = verify(&s, 0.5, Some(&g), None);
    assert!(r.pass, "{:?}", r.failing());
    let q = abresch_rosenberg(&s);
    assert!(max_over(&s.report_nodes(2), |i, j| q.at(i, j).norm()) < 1e-5);
}

#[test]
fn conformal_surface_rejects_non_conformal_maps() {
    let grid = ConformalGrid::square(1.0, 21).unwrap();
    let g = builtin_map(BuiltinMap::Geodesic, &grid).unwrap();
    assert!(conformal_surface(&g, &H2Point::apex()).is_err());
}

fn half_grid(r: f64, n: usize) -> ConformalGrid {
    ConformalGrid::new(-r, r, 0.0, r, n, n.div_ceil(2)).unwrap()
}

#[test]
fn reflection_of_screw_motion_is_exact() {
    let half = half_grid(1.0, 101);
    let r = reflect_extend(&swapped(&screw(0.0, &half)), &ReflectOptions::default()).unwrap();
    let full = *r.field.grid();
    assert_eq!((full.n_t, full.t_min, full.t_max), (101, -1.0, 1.0));
    let exact = swapped(&screw(0.0, &full));
    let err = full.nodes().map(|(i, j)| (exact.n.at(i, j) - r.field.n.at(i, j)).max_abs()).fold(0.0, f64::max);
    assert!(err < 1e-12, "{err}");
    let herr = full.nodes().map(|(i, j)| (exact.h.at(i, j) - r.field.h.at(i, j)).abs()).fold(0.0, f64::max);
    assert!(herr < 1e-12);
    assert!(r.c0_residual < 1e-12);
    assert!(verify(&r.field, 0.5, None, None).pass);
}

#[test]
fn reflection_of_a_symmetric_geodesic_is_itself() {
    let half = half_grid(1.0, 41);
    let g = GaussMapField::new(GridField::from_fn(half, |s, _| VecL3::new(s.cosh(), s.sinh(), 0.0)), None).unwrap();
    let r = reflect_extend(&g, &ReflectOptions::default()).unwrap();
    let full = *r.field.grid();
    let err = full
        .nodes()
        .map(|(i, j)| (r.field.at(i, j) - VecL3::new(full.s(i).cosh(), full.s(i).sinh(), 0.0)).max_abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-14, "{err}");
}

#[test]
fn reflection_rejects_inputs_violating_the_axis_hypotheses() {
    let half = half_grid(1.0, 41);
    let geo = builtin_map(BuiltinMap::Geodesic, &half).unwrap();
    assert!(matches!(reflect_extend(&geo, &ReflectOptions::default()), Err(Error::AxisHypothesis { .. })));

    let disk = half_grid(0.25, 41);
    let tilted = builtin_map(BuiltinMap::DiskMoebius { a: [0.1, 0.2], theta: 0.0 }, &disk).unwrap();
    assert!(matches!(reflect_extend(&tilted, &ReflectOptions::default()), Err(Error::AxisHypothesis { .. })));

    // the screw-motion surface itself is not symmetric about x₂ = 0
    assert!(reflect_extend(&screw(0.0, &half), &ReflectOptions::default()).is_err());

    let off = ConformalGrid::new(-1.0, 1.0, 0.1, 1.0, 21, 11).unwrap();
    let g = GaussMapField::new(GridField::from_fn(off, |s, _| VecL3::new(s.cosh(), s.sinh(), 0.0)), None).unwrap();
    assert!(reflect_extend(&g, &ReflectOptions::default()).is_err());
}

#[test]
fn reflected_disk_map_stays_harmonic() {
    let half = half_grid(0.25, 51);
    let g = builtin_map(BuiltinMap::DiskIdentity, &half).unwrap();
    let r = reflect_extend(&g, &ReflectOptions::default()).unwrap();
    assert!(harmonicity_residual(&r.field) <= 2.0 * harmonicity_residual(&g));
}

#[test]
fn reflected_conformal_surface_c1_residual_is_second_order() {
    let res: Vec<f64> = [51, 101]
        .iter()
        .map(|&n| {
            let half = half_grid(0.25, n);
            let g = builtin_map(BuiltinMap::DiskIdentity, &half).unwrap();
            let s = conformal_surface(&g, &H2Point::apex()).unwrap();
            reflect_extend(&s, &ReflectOptions::default()).unwrap().c1_residual
        })
        .collect();
    assert!(res[1] < res[0] / 3.5, "{res:?}");
}

#[test]
fn minimal_cylinder_over_a_geodesic() {
    let grid = ConformalGrid::square(1.0, 201).unwrap();
    let n = builtin_map(BuiltinMap::Geodesic, &grid).unwrap();
    let omega = CanonicalOneForm::constant(grid, c(0.5, 0.0));
    assert_eq!(omega.holomorphy_residual(), 0.0);
    let m = minimal_graph(&n, &omega, -1.0).unwrap();
    let nodes = m.report_nodes(0);
    assert!(max_over(&nodes, |i, j| (m.h.at(i, j) - grid.s(i)).abs()) < 1e-12);
    assert!(max_over(&nodes, |i, j| (m.lambda.at(i, j) - 1.0).abs()) < 1e-12);
    assert!(max_over(&nodes, |i, j| m.u.at(i, j)) <= 1e-6);
    let h = mean_curvature(&m);
    assert!(max_over(&m.report_nodes(2), |i, j| h.at(i, j).abs()) <= 1e-6);
    let li = minimal_lambda_identity(&n, &omega).unwrap();
    assert!(max_over(&nodes, |i, j| (li.at(i, j) - m.lambda.at(i, j)).abs()) <= 1e-6);
    assert!(verify(&m, 0.0, None, None).pass);
}

#[test]
fn minimal_graph_rejects_inadmissible_forms() {
    let grid = ConformalGrid::square(1.0, 41).unwrap();
    let n = builtin_map(BuiltinMap::Geodesic, &grid).unwrap();
    let omega = CanonicalOneForm::constant(grid, c(0.6, 0.0));
    assert!(minimal_graph(&n, &omega, 0.0).is_err());
    let constant = GaussMapField::new(GridField::constant(grid, VecL3::new(1.0, 0.0, 0.0)), None).unwrap();
    assert!(minimal_graph(&constant, &CanonicalOneForm::constant(grid, c(0.0, 0.0)), 0.0).is_err());
}

/// Harmonic map with Hopf differential −1/4 and metric factor coth²(s/2).
fn coth_map(n: usize) -> GaussMapField {
    let grid = ConformalGrid::new(-1.5, -0.5, -0.5, 0.5, n, n).unwrap();
    let tau0 = GridField::from_fn(grid, |s, _| (0.5 * s).tanh().powi(-2));
    harmonic_map_from_data(&HopfField::constant(grid, c(-0.25, 0.0)), &tau0, (n / 2, n / 2)).unwrap()
}

#[test]
fn minimal_graph_over_a_non_conformal_map() {
    let n = coth_map(201);
    let grid = *n.grid();
    let omega = CanonicalOneForm::constant(grid, c(0.5, 0.0));
    let m = minimal_graph(&n, &omega, 0.0).unwrap();
    let r = verify(&m, 0.0, None, None);
    assert!(r.pass, "{:?}", r.failing());
    let nodes = m.report_nodes(2);
    let li = minimal_lambda_identity(&n, &omega).unwrap();
    assert!(max_over(&nodes, |i, j| (li.at(i, j) - m.lambda.at(i, j)).abs()) <= 1e-6);
    assert!(max_over(&nodes, |i, j| m.u.at(i, j)) > 0.1);

    // vertical-projection metric −h_z² dz² + μ|dz|² − h_z̄² dz̄² with μ = λ − 2|h_z|²
    let nz = dz_field(n.field(), Stencil::Sixth);
    let hz = height_derivative(&m);
    assert!(max_over(&nodes, |i, j| (nz.at(i, j).dot(&nz.at(i, j)) + hz.at(i, j).powi(2)).norm()) <= 1e-6);
    let mu = |i, j| 2.0 * nz.at(i, j).dot(&nz.at(i, j).conj()).re;
    assert!(max_over(&nodes, |i, j| (mu(i, j) - (m.lambda.at(i, j) - 2.0 * hz.at(i, j).norm_sqr())).abs()) <= 1e-6);

    // h is harmonic
    let lap = dz_field(&halfcmc::cgrid::dzbar_field(&m.h, Stencil::Sixth), Stencil::Sixth);
    assert!(max_over(&nodes, |i, j| lap.at(i, j).norm()) < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn screw_motion_closed_form(y in -2.0f64..2.0, s0 in -1.0f64..1.0, cc in -3.0f64..3.0, sign in prop::bool::ANY) {
        let grid = ConformalGrid::square(1.0, 21).unwrap();
        let p = SaEarpParams::new(y, s0, cc, if sign { 1 } else { -1 }).unwrap();
        let s = sa_earp(p, &grid).unwrap();
        for (i, j) in grid.nodes() {
            let (sv, tv) = (grid.s(i), grid.t(j));
            let x = (1.0 + y * y).sqrt() * (sv + s0).cosh();
            prop_assert!((s.h.at(i, j) - (x + y * tv + cc)).abs() < 1e-12 * (1.0 + x));
            prop_assert!((s.u.at(i, j) - 1.0 / x).abs() < 1e-14);
            prop_assert!((s.lambda.at(i, j) - x * x).abs() < 1e-12 * x * x);
            let n = s.n.at(i, j);
            prop_assert!((minkowski_dot(&n, &n) + 1.0).abs() < 1e-12);
            prop_assert!((n.x2.powi(2) - (x * x - y * y - 1.0)).abs() < 1e-9 * x * x);
        }
        prop_assert!(s.u_consistency() < 1e-6);
    }

    #[test]
    fn parallel_lambda_identity_holds(y in -1.0f64..1.0, s0 in -0.5f64..0.5) {
        let grid = ConformalGrid::square(1.0, 61).unwrap();
        let s = sa_earp(SaEarpParams::new(y, s0, 0.0, 1).unwrap(), &grid).unwrap();
        let g = hyperbolic_gauss_map(&s).unwrap();
        let p = parallel_surface(&s, &g).unwrap();
        let lm = measured_lambda(&p.psi());
        let nodes = s.report_nodes(2);
        let scale = nodes.iter().map(|&(i, j)| p.lambda.at(i, j)).fold(1.0, f64::max);
        prop_assert!(max_over(&nodes, |i, j| (lm.at(i, j) - p.lambda.at(i, j)).abs()) < 1e-5 * scale);
        prop_assert!(max_over(&nodes, |i, j| (p.eta.at(i, j).x3 - s.u.at(i, j)).abs()) < 1e-6);
    }

    #[test]
    fn minimal_lambda_identity_matches_the_construction(w in 0.05f64..0.45) {
        let grid = ConformalGrid::square(0.8, 41).unwrap();
        // N(s,t) = (cosh kt, sinh kt, 0) has Hopf differential −k²/4
        let k = 2.0 * w;
        let g = GridField::from_fn(grid, |_, t| VecL3::new((k * t).cosh(), (k * t).sinh(), 0.0));
        let n = GaussMapField::new(g, None).unwrap();
        let omega = CanonicalOneForm::constant(grid, c(w, 0.0));
        let m = minimal_graph(&n, &omega, 0.0).unwrap();
        let li = minimal_lambda_identity(&n, &omega).unwrap();
        let nodes = m.report_nodes(2);
        prop_assert!(max_over(&nodes, |i, j| (li.at(i, j) - m.lambda.at(i, j)).abs()) < 1e-6);
    }
}
