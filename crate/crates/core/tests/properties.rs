use num_rational::Ratio;
use proptest::prelude::*;

use dsym::fields::{catalog, CATALOG_NAMES};
use dsym::flows::{closed_form_x7, flow_closed_form_x7};
use dsym::jets::difference_table;
use dsym::{prolong_discrete, Dual, Expression, Stencil, Stencil64, Trajectory};

fn increasing(start: f64, gaps: &[f64]) -> Vec<f64> {
    let mut xs = vec![start];
    for g in gaps {
        xs.push(xs.last().unwrap() + g);
    }
    xs
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// On a cubic with leading coefficient a, p3 = 6a and p4 = 0 exactly.
    #[test]
    fn rational_jets_of_a_cubic(
        a in -20i64..20, b in -20i64..20, c in -20i64..20,
        x0 in -10i64..10, gaps in proptest::collection::vec(1i64..7, 4),
        den in 1i64..5,
    ) {
        let mut xs = vec![Ratio::new(x0, den)];
        for g in &gaps {
            let last = *xs.last().unwrap();
            xs.push(last + Ratio::new(*g, den));
        }
        let cubic = |x: Ratio<i64>| x * x * x * a + x * x * b + x * c;
        let ys: Vec<Ratio<i64>> = xs.iter().map(|&x| cubic(x)).collect();
        let table = difference_table(&xs, &ys, 4).unwrap();
        for v in &table[2] {
            prop_assert_eq!(*v, Ratio::from_integer(6 * a));
        }
        prop_assert_eq!(table[3][0], Ratio::from_integer(0));
    }

    #[test]
    fn single_precision_tracks_double(gaps in proptest::collection::vec(0.2f64..1.5, 3), a in -2.0f64..2.0) {
        let xs = increasing(0.0, &gaps);
        let f = |x: f64| a * x * x - x + 0.5;
        let t64 = Trajectory::new(xs.clone(), xs.iter().map(|&x| f(x)).collect(), None).unwrap();
        let xs32: Vec<f32> = xs.iter().map(|&x| x as f32).collect();
        let t32 = Trajectory::new(xs32.clone(), xs32.iter().map(|&x| f(x as f64) as f32).collect(), None).unwrap();
        let (j64, j32) = (t64.jet_at(0, 2).unwrap(), t32.jet_at(0, 2).unwrap());
        for k in 0..2 {
            prop_assert!((j64.p[k] - j32.p[k] as f64).abs() < 1e-3 * (1.0 + j64.p[k].abs()));
        }
    }

    /// The prolongation recursion is the ε-derivative of the jet coordinates
    /// of the perturbed stencil, for every catalog field.
    #[test]
    fn recursion_is_the_chain_rule(
        field_idx in 0usize..CATALOG_NAMES.len(),
        x0 in -2.0f64..2.0,
        gaps in proptest::collection::vec(0.1f64..2.0, 5),
        us in proptest::collection::vec(-2.0f64..2.0, 6),
        vs in proptest::collection::vec(-2.0f64..2.0, 6),
    ) {
        let field = catalog(CATALOG_NAMES[field_idx]).unwrap();
        let pf = prolong_discrete(&field, 3).unwrap();
        let s: Stencil64 = Stencil::new(increasing(x0, &gaps), us, Some(vs)).unwrap();
        let pr = pf.evaluate(&s).unwrap();
        let pts = pf.order + 1;
        let mut dx = Vec::new();
        let mut du = Vec::new();
        let mut dv = Vec::new();
        for j in 0..pts {
            let (a, b, c) = pf.base_at(&s, j).unwrap();
            dx.push(Dual::new(s.xs[j], a));
            du.push(Dual::new(s.us[j], b));
            dv.push(Dual::new(s.vs.as_ref().unwrap()[j], c.unwrap_or(0.0)));
        }
        let d = Stencil::new(dx, du, Some(dv)).unwrap();
        for k in 1..=3 {
            let want = d.lookup(&format!("p{k}"), 0).unwrap().eps;
            let got = pr.phi_k[k - 1];
            prop_assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0), "{} p{}: {} vs {}", field.name, k, got, want);
            let want_h = d.lookup(&format!("h{k}"), 0).unwrap().eps;
            prop_assert!((pr.lambda[k - 1] - want_h).abs() <= 1e-10 * want_h.abs().max(1.0));
        }
    }

    #[test]
    fn closed_form_flow_is_a_group(
        x in -2.0f64..2.0, u in -2.0f64..2.0, p1 in -2.0f64..2.0, p2 in -2.0f64..2.0,
        h1 in 0.1f64..2.0, c in 0.5f64..2.0,
        l1 in -0.2f64..0.2, l2 in -0.2f64..0.2,
    ) {
        let z = [x, u, p1, p2, 0.0, h1, c * h1, c * c * h1];
        let composed = flow_closed_form_x7(&flow_closed_form_x7(&z, l1).unwrap(), l2).unwrap();
        let direct = flow_closed_form_x7(&z, l1 + l2).unwrap();
        for (a, b) in composed.iter().zip(&direct) {
            prop_assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
        let back = flow_closed_form_x7(&flow_closed_form_x7(&z, l1).unwrap(), -l1).unwrap();
        for (a, b) in back.iter().zip(&z) {
            prop_assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
        // the lattice ratio is untouched
        let out = flow_closed_form_x7(&z, l1).unwrap();
        prop_assert!((out[6] / out[5] - c).abs() < 1e-12 * c);
        // derivative at λ = 0 by dual numbers equals the finite difference
        let dz: Vec<Dual<f64>> = z.iter().map(|&v| Dual::constant(v)).collect();
        let gen = closed_form_x7(&dz, Dual::variable(0.0)).unwrap();
        prop_assert!((gen[3].eps + p2 * p2).abs() < 1e-12 * (1.0 + p2 * p2));
    }

    #[test]
    fn display_round_trips(a in -5.0f64..5.0, b in 0.5f64..5.0, x in -1.0f64..1.0) {
        let text = format!("{a}*x^2 - sin(x)/({b}) + exp(-x)*(x - {a})");
        let e = Expression::parse(&text).unwrap();
        let again = Expression::parse(&e.to_string()).unwrap();
        let at = |n: &str| (n == "x").then_some(x);
        let (v1, v2): (f64, f64) = (e.eval_with(&at).unwrap(), again.eval_with(&at).unwrap());
        prop_assert!((v1 - v2).abs() <= 1e-12 * v1.abs().max(1.0));
    }
}
