use dsym::fields::{catalog, PointVectorField};
use dsym::invariance::check_scheme;
use dsym::schemes::{self, max_residual, solve_third_order, solve_third_order_recursive, SolveSpec};
use dsym::{Lattice, Scheme, Trajectory64, VectorField};

#[test]
fn field_json_round_trip() {
    for name in ["X4", "X7", "X10", "X7d"] {
        let f = catalog(name).unwrap();
        let back = VectorField::from_json(&f.to_json()).unwrap();
        assert_eq!(back.name, f.name);
        assert_eq!(back.kind(), f.kind());
        for p in [[0.3, -0.7, 1.1], [-1.2, 0.4, 0.9]] {
            if f.is_point() {
                assert_eq!(back.eval(p).unwrap(), f.eval(p).unwrap());
            }
        }
    }
}

#[test]
fn user_scheme_from_json() {
    let text = r#"{
        "name": "mine",
        "equations": ["p3"],
        "lattice_ratio": 1.5,
        "stencil": {"M": 0, "N": 3},
        "substitution": {"p3": "0", "h2": "1.5*h1", "h3": "1.5*h2"},
        "continuous": "ODE3"
    }"#;
    let s = Scheme::from_json(text).unwrap();
    assert_eq!(s.order(), 4);
    assert_eq!(s.jet_order(), 3);
    let report = check_scheme(&[catalog("X5").unwrap()], &s, 30, 7, 1e-9).unwrap();
    assert!(report.pass, "{}", report.max_residual);
    let again = Scheme::from_json(&s.to_json()).unwrap();
    assert_eq!(again.equations, s.equations);
    assert_eq!(again.continuous.as_deref(), Some("ODE3"));
    let c = dsym::classify_symmetry(&catalog("X7d").unwrap(), &s).unwrap();
    assert_eq!(c.verdict, dsym::Verdict::ContactInternal);
    assert!(Scheme::from_json(r#"{"name": "x", "equations": ["p3 +"]}"#).is_err());
}

#[test]
fn trajectory_csv_round_trip_with_comment() {
    let spec = SolveSpec {
        lattice: Lattice::new(0.25, 0.5, 1.3, 7).unwrap(),
        init: [1.0, -0.5, 0.75],
    };
    let t = solve_third_order(&spec).unwrap();
    let mut buf = b"# seed=42 produced elsewhere\n".to_vec();
    t.write_csv(&mut buf).unwrap();
    let back = Trajectory64::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.xs(), t.xs());
    assert_eq!(back.us(), t.us());
    assert_eq!(back.vs(), t.vs());

    let marched = solve_third_order_recursive(&spec).unwrap();
    for (a, b) in marched.us().iter().zip(t.us()) {
        assert!((a - b).abs() < 1e-12 * b.abs().max(1.0));
    }
    let ds3 = schemes::catalog("DS3", 1.3).unwrap();
    assert!(max_residual(&back, &ds3).unwrap() < 1e-12);
    assert!(Trajectory64::read_csv("x,w\n1,2\n".as_bytes()).is_err());
}
