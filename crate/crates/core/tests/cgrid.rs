use halfcmc::cgrid::*;
use halfcmc::lorentz::VecL4;

const I: Complex64 = Complex64::new(0.0, 1.0);
use halfcmc::{Complex64, Error};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn log_slope(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len();
    (e[n - 1] / e[0]).ln() / (h[n - 1] / h[0]).ln()
}

#[test]
fn grid_validation() {
    assert!(ConformalGrid::new(0.0, 1.0, 0.0, 1.0, 4, 10).is_err());
    assert!(ConformalGrid::new(1.0, 1.0, 0.0, 1.0, 5, 5).is_err());
    assert!(ConformalGrid::new(0.0, 1.0, 0.0, f64::NAN, 5, 5).is_err());
    let g = ConformalGrid::new(-1.0, 1.0, 0.0, 2.0, 5, 9).unwrap();
    assert_eq!(g.hs(), 0.5);
    assert_eq!(g.ht(), 0.25);
    assert_eq!(g.s(4), 1.0);
    assert_eq!(g.idx(2, 3), 17);
    assert_eq!(g.node_of(17), (2, 3));
}

#[test]
fn wirtinger_linear_and_quadratic_are_exact() {
    let g = ConformalGrid::new(-1.0, 1.0, -0.5, 1.5, 9, 11).unwrap();
    let f = GridField::from_fn(g, |s, t| c(s, t));
    let q = GridField::from_fn(g, |s, t| s * s + t * t);
    for (i, j) in g.nodes() {
        for stencil in [Stencil::Second, Stencil::Fourth] {
            let (fz, fzb) = wirtinger_with(&f, i, j, stencil);
            assert!((fz - c(1.0, 0.0)).norm() < 1e-13);
            assert!(fzb.norm() < 1e-13);
            let (qz, _) = wirtinger_with(&q, i, j, stencil);
            assert!((qz - c(g.s(i), -g.t(j))).norm() < 1e-12, "{i} {j} {qz}");
        }
    }
}

#[test]
fn wirtinger_exp_converges_at_second_order() {
    let mut hs = vec![];
    let mut errs = vec![];
    for n in [26, 51, 101] {
        let g = ConformalGrid::square(1.0, n).unwrap();
        let f = GridField::from_fn(g, |s, t| c(s, t).exp());
        let err = g
            .interior_nodes(1)
            .map(|(i, j)| (wirtinger(&f, i, j).0 - g.z(i, j).exp()).norm())
            .fold(0.0, f64::max);
        hs.push(g.h_max());
        errs.push(err);
    }
    // C h² with C = max|f'''|/6 over the square
    assert!(errs[2] <= 1f64.exp() / 6.0 * hs[2] * hs[2] * 1.01);
    assert!(log_slope(&hs, &errs) > 1.9);
}

#[test]
fn fourth_order_stencils_converge_at_fourth_order() {
    let mut hs = vec![];
    let mut errs = vec![];
    for n in [21, 41, 81] {
        let g = ConformalGrid::square(1.0, n).unwrap();
        let f = GridField::from_fn(g, |s, t| c(s, t).exp());
        let err = g
            .nodes()
            .map(|(i, j)| (wirtinger_with(&f, i, j, Stencil::Fourth).0 - g.z(i, j).exp()).norm())
            .fold(0.0, f64::max);
        hs.push(g.h_max());
        errs.push(err);
    }
    assert!(log_slope(&hs, &errs) > 3.8, "{errs:?}");
}

#[test]
fn holomorphy_examples() {
    let g = ConformalGrid::square(1.0, 21).unwrap();
    let zbar = GridField::from_fn(g, |s, t| c(s, -t));
    assert!((holomorphy_residual(&zbar) - 1.0).abs() < 1e-12);
    assert_eq!(holomorphy_residual(&GridField::constant(g, c(2.0, -1.0))), 0.0);
    let z2 = GridField::from_fn(g, |s, t| {
        let z = c(s, t);
        z * z * c(0.3, 1.0) + z * 2.0 - c(1.0, 1.0)
    });
    assert!(holomorphy_residual(&z2) < 1e-12);

    let mut hs = vec![];
    let mut res = vec![];
    for n in [21, 41, 81] {
        let g = ConformalGrid::square(1.0, n).unwrap();
        let z3 = GridField::from_fn(g, |s, t| c(s, t).powi(3));
        hs.push(g.h_max());
        res.push(holomorphy_residual(&z3));
    }
    assert!(log_slope(&hs, &res) > 1.9, "{res:?}");
}

#[test]
fn path_integrate_examples() {
    let g = ConformalGrid::new(-1.0, 1.0, -0.5, 0.5, 21, 11).unwrap();
    for rule in [Quadrature::Trapezoid, Quadrature::Fourth] {
        let r = path_integrate(&GridField::constant(g, c(0.5, 0.0)), rule);
        assert!(r.period_residual <= 1e-14);
        assert!(r.values.max_distance(&GridField::from_fn(g, |s, _| s - g.s_min), 0) < 1e-13);

        let r = path_integrate(&GridField::constant(g, c(0.0, 0.5)), rule);
        assert!(r.values.max_distance(&GridField::from_fn(g, |_, t| -(t - g.t_min)), 0) < 1e-13);

        let r = path_integrate(&GridField::from_fn(g, |s, t| c(s, t) * 0.5), rule);
        let exact = GridField::from_fn(g, |s, t| {
            0.5 * (s * s - t * t) - 0.5 * (g.s_min * g.s_min - g.t_min * g.t_min)
        });
        assert!(r.values.max_distance(&exact, 0) < 1e-13);
        assert!(r.period_residual < 1e-14);
    }
}

#[test]
fn path_integrate_converges() {
    let mut hs = vec![];
    let mut trap = vec![];
    let mut fourth = vec![];
    for n in [21, 41, 81] {
        let g = ConformalGrid::square(1.0, n).unwrap();
        let w = GridField::from_fn(g, |s, t| c(s, t).exp() * 0.5);
        let exact = GridField::from_fn(g, |s, t| c(s, t).exp().re);
        let e = |rule| {
            let v = anchor(&path_integrate(&w, rule).values, (0, 0), exact.at(0, 0));
            v.max_distance(&exact, 0)
        };
        hs.push(g.h_max());
        trap.push(e(Quadrature::Trapezoid));
        fourth.push(e(Quadrature::Fourth));
    }
    assert!(log_slope(&hs, &trap) > 1.9);
    assert!(log_slope(&hs, &fourth) > 3.5, "{fourth:?}");
}

#[test]
fn path_consistency_bound() {
    let g = ConformalGrid::new(-1.0, 1.0, -1.0, 1.0, 17, 13).unwrap();
    // not closed: ω = z̄ gives d(...) + a genuine curl
    let w = GridField::from_fn(g, |s, t| c(s, -t) * c(0.2, 0.1) + c(s, t).sin());
    let a = path_integrate(&w, Quadrature::Trapezoid);
    let b = path_integrate_column_first(&w, Quadrature::Trapezoid);
    let plaquettes = ((g.n_s - 1) * (g.n_t - 1)) as f64;
    assert!(a.period_residual > 1e-4);
    assert!(a.values.max_distance(&b.values, 0) <= a.period_residual * plaquettes);
}

#[test]
fn sample_examples() {
    let g = ConformalGrid::new(0.0, 2.0, -1.0, 1.0, 5, 9).unwrap();
    let f = GridField::from_fn(g, |s, t| s * t + (3.0 * s).sin());
    assert_eq!(sample(&f, g.s(2), g.t(3)).unwrap(), f.at(2, 3));
    let lin = GridField::from_fn(g, |s, _| s);
    assert!((sample(&lin, 0.75, 0.125).unwrap() - 0.75).abs() < 1e-15);
    let st = GridField::from_fn(g, |s, t| s * t);
    let (s, t) = (0.5 * (g.s(1) + g.s(2)), 0.5 * (g.t(4) + g.t(5)));
    assert!((sample(&st, s, t).unwrap() - s * t).abs() < 1e-15);
    assert!(matches!(sample(&st, 2.5, 0.0), Err(Error::Domain(_))));
}

#[test]
fn probe_midpoints_are_fourth_order() {
    let g = ConformalGrid::new(0.0, 1.0, 0.0, 1.0, 11, 11).unwrap();
    let cubic = GridField::from_fn(g, |s, t| s * s * s - 2.0 * t * t * t + s * t);
    for i in 0..g.n_s - 1 {
        for j in 0..g.n_t - 1 {
            let (s, t) = (g.s(i) + 0.5 * g.hs(), g.t(j));
            let v = cubic.probe(Probe::Mid(Axis::S, i, j));
            assert!((v - (s * s * s - 2.0 * t * t * t + s * t)).abs() < 1e-14);
            let (s, t) = (g.s(i), g.t(j) + 0.5 * g.ht());
            let v = cubic.probe(Probe::Mid(Axis::T, i, j));
            assert!((v - (s * s * s - 2.0 * t * t * t + s * t)).abs() < 1e-14);
        }
    }
}

#[test]
fn propagate_integrates_exact_system() {
    // y = exp(z) solves y_s = y, y_t = i y
    let g = ConformalGrid::new(-1.0, 1.0, -0.5, 0.5, 41, 21).unwrap();
    let anchor = (10, 5);
    let y0 = g.z(anchor.0, anchor.1).exp();
    for order in [PathOrder::RowFirst, PathOrder::ColumnFirst] {
        let ys = propagate(&g, anchor, y0, order, |y: &Complex64, _, axis| {
            Ok(match axis {
                Axis::S => *y,
                Axis::T => *y * I,
            })
        })
        .unwrap();
        let err = g
            .nodes()
            .map(|(i, j)| (ys[g.idx(i, j)] - g.z(i, j).exp()).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }
}

#[test]
fn json_kinds() {
    let g = ConformalGrid::square(1.0, 5).unwrap();
    let f = GridField::from_fn(g, |s, t| c(s, t * 2.0));
    let text = f.to_json();
    assert!(text.contains("\"kind\":\"complex\""));
    let back = GridField::<Complex64>::from_json(&text).unwrap();
    assert_eq!(back, f);
    assert!(GridField::<f64>::from_json(&text).is_err());
    let v = GridField::from_fn(g, |s, t| VecL4::new(1.0, s, t, s * t));
    assert!(v.to_json().contains("vecl4"));
    let bad = text.replace("\"kind\"", "\"extra\":1,\"kind\"");
    assert!(GridField::<Complex64>::from_json(&bad).is_err());
}

proptest! {
    #[test]
    fn real_field_roundtrips_through_json(vals in prop::collection::vec(-1e6f64..1e6, 25)) {
        let g = ConformalGrid::square(1.0, 5).unwrap();
        let f = GridField::new(g, vals).unwrap();
        prop_assert_eq!(GridField::<f64>::from_json(&f.to_json()).unwrap(), f);
    }

    #[test]
    fn holomorphic_quadratics_have_zero_residual(
        a in -2.0f64..2.0, b in -2.0f64..2.0, p in -2.0f64..2.0, q in -2.0f64..2.0,
    ) {
        let g = ConformalGrid::square(1.0, 11).unwrap();
        let f = GridField::from_fn(g, |s, t| {
            let z = c(s, t);
            z * z * c(a, b) + z * c(p, q)
        });
        prop_assert!(holomorphy_residual(&f) < 1e-12);
    }
}
