use halfcmc::lorentz::*;
use proptest::prelude::*;

fn e4(i: usize) -> VecL4 {
    let mut a = [0.0; 4];
    a[i] = 1.0;
    VecL4::from_array(a)
}

#[test]
fn dot_examples() {
    let e0 = VecL3::new(1.0, 0.0, 0.0);
    assert_eq!(minkowski_dot(&e0, &e0), -1.0);
    assert_eq!(minkowski_dot(&e4(1), &e4(1)), 1.0);
    let p = VecL3::new(1f64.cosh(), 1f64.sinh(), 0.0);
    assert!((minkowski_dot(&p, &p) + 1.0).abs() < 1e-14);
}

#[test]
fn cross4_examples() {
    assert_eq!(
        lorentz_cross4(&e4(1), &e4(2), &e4(3)),
        VecL4::new(-1.0, 0.0, 0.0, 0.0)
    );
    let w = lorentz_cross4(&e4(0), &e4(2), &e4(3));
    assert_eq!(w, VecL4::new(0.0, -1.0, 0.0, 0.0));
    for v in [e4(0), e4(2), e4(3)] {
        assert_eq!(w.mdot(&v), 0.0);
    }
    let w = lorentz_cross4(&e4(0), &e4(1), &(e4(1) * 2.0));
    assert_eq!(w.max_abs(), 0.0);
}

#[test]
fn poincare_examples() {
    assert_eq!(to_poincare(&H2Point::apex()), (0.0, 0.0));
    let p = H2Point::new(VecL3::new(1f64.cosh(), 1f64.sinh(), 0.0)).unwrap();
    let (x, y) = to_poincare(&p);
    assert!((x - 0.5f64.tanh()).abs() < 1e-15);
    assert!((x - 0.46212).abs() < 1e-5);
    assert_eq!(y, 0.0);
    let p = H2Point::new(VecL3::new(2f64.cosh(), 0.0, 2f64.sinh())).unwrap();
    let (x, y) = to_poincare(&p);
    assert_eq!(x, 0.0);
    assert!((y - 1f64.tanh()).abs() < 1e-15);
}

#[test]
fn isometry_examples() {
    let p = H2Point::new(VecL3::new(1f64.cosh(), 1f64.sinh(), 0.0)).unwrap();
    assert_eq!(apply_isometry(&IsometryH2::identity(), &p).unwrap(), p);
    let r = IsometryH2::reflect_x2();
    let q = apply_isometry(&r, &p).unwrap();
    assert!((q.vec() - p.vec()).max_abs() < 1e-15);

    let v = VecL3::new(2f64.sqrt(), 0.5, (2.0f64 - 1.25).sqrt());
    let p = H2Point::new(v).unwrap();
    let q = apply_isometry(&r, &p).unwrap();
    assert!((q.vec() - VecL3::new(2f64.sqrt(), 0.5, -0.75f64.sqrt())).max_abs() < 1e-15);
    assert!((q.vec().mdot(&q.vec()) + 1.0).abs() < 1e-14);
}

#[test]
fn rejects_bad_inputs() {
    assert!(H2Point::new(VecL3::new(-1.0, 0.0, 0.0)).is_err());
    assert!(H2Point::new(VecL3::new(1.0, 0.1, 0.0)).is_err());
    assert!(IsometryH2::new([[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).is_err());
    // time reversal preserves J but swaps the sheets
    assert!(IsometryH2::new([[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).is_err());
    assert!(IsometryH2::new(IsometryH2::boost_x1(0.7).matrix()).is_ok());
}

#[test]
fn inverse_composes_to_identity() {
    let m = IsometryH2::boost_x1(0.4).compose(&IsometryH2::rotation(1.1));
    let id = m.compose(&m.inverse()).matrix();
    for (i, row) in id.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            let t = if i == j { 1.0 } else { 0.0 };
            assert!((e - t).abs() < 1e-13);
        }
    }
}

fn v4() -> impl Strategy<Value = VecL4> {
    prop::array::uniform4(-3.0f64..3.0).prop_map(VecL4::from_array)
}

fn disk_point() -> impl Strategy<Value = (f64, f64)> {
    (0.0f64..0.95, 0.0f64..std::f64::consts::TAU).prop_map(|(r, a)| (r * a.cos(), r * a.sin()))
}

proptest! {
    #[test]
    fn dot_is_symmetric_bilinear(a in v4(), b in v4(), c in v4(), k in -2.0f64..2.0) {
        prop_assert!((a.mdot(&b) - b.mdot(&a)).abs() < 1e-12);
        let lhs = (a * k + b).mdot(&c);
        let rhs = k * a.mdot(&c) + b.mdot(&c);
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn cross4_is_orthogonal(a in v4(), b in v4(), c in v4()) {
        let w = lorentz_cross4(&a, &b, &c);
        let scale = a.max_abs() * b.max_abs() * c.max_abs() + 1.0;
        for v in [a, b, c] {
            prop_assert!(w.mdot(&v).abs() / scale < 1e-10);
        }
    }

    #[test]
    fn poincare_roundtrip((x, y) in disk_point()) {
        let p = H2Point::from_poincare(x, y).unwrap();
        prop_assert!((p.vec().mdot(&p.vec()) + 1.0).abs() < 1e-9 * p.vec().x0.powi(2));
        let (x2, y2) = to_poincare(&p);
        prop_assert!((x - x2).abs() < 1e-10 && (y - y2).abs() < 1e-10);
    }

    #[test]
    fn isometries_preserve_products(
        (x1, y1) in disk_point(), (x2, y2) in disk_point(),
        d in -1.5f64..1.5, th in 0.0f64..6.3,
    ) {
        let m = IsometryH2::boost_x1(d).compose(&IsometryH2::rotation(th));
        let p = H2Point::from_poincare(x1, y1).unwrap().vec();
        let q = H2Point::from_poincare(x2, y2).unwrap().vec();
        let before = p.mdot(&q);
        let after = m.apply_vec(&p).mdot(&m.apply_vec(&q));
        prop_assert!((before - after).abs() < 1e-10 * before.abs().max(1.0));
    }
}
