//! Difference schemes and their continuous counterparts.
//!
//! Equations are stored as residual expressions (left-hand sides of `= 0`)
//! over discrete jet coordinates with base point `n`. Each catalog scheme
//! also carries a substitution map that parameterizes its solution set by
//! the remaining free coordinates; samplers, restriction and flows all go
//! through it.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{EvalError, Expression, ParseError};
use crate::jets::{Coord, JetError, Lattice, Stencil, Trajectory};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemeError {
    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),
    #[error("cannot parse `{text}`: {source}")]
    Parse { text: String, source: ParseError },
    #[error("`{0}` is not a discrete jet coordinate")]
    UnknownCoordinate(String),
    #[error("invalid stencil bounds M={m}, N={n}")]
    InvalidStencil { m: i64, n: i64 },
    #[error("substitution cannot be ordered: `{0}` depends on itself")]
    CyclicSubstitution(String),
    #[error("substitution needs `{0}`, which is neither free nor substituted")]
    MissingCoordinate(String),
    #[error("trajectory has {got} points, stencil needs {needed}")]
    TooShort { needed: usize, got: usize },
    #[error("trajectory has no v channel")]
    MissingV,
    #[error("initial abscissae are degenerate")]
    DegenerateLattice,
    #[error("json: {0}")]
    Json(String),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StencilBounds {
    #[serde(rename = "M")]
    pub m: i64,
    #[serde(rename = "N")]
    pub n: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scheme {
    pub name: String,
    pub equations: Vec<Expression>,
    pub lattice_ratio: Option<f64>,
    pub stencil: StencilBounds,
    /// Ordered: each right-hand side may use free coordinates and earlier entries.
    pub substitution: Vec<(Coord, Expression)>,
    /// Name in [`continuous_catalog`] of the equation the scheme discretizes.
    pub continuous: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SchemeFile {
    name: String,
    equations: Vec<String>,
    lattice_ratio: Option<f64>,
    stencil: StencilBounds,
    #[serde(default)]
    substitution: Option<BTreeMap<String, String>>,
    /// Name of the continuous counterpart in [`continuous_catalog`].
    #[serde(default)]
    continuous: Option<String>,
}

fn parse(text: &str) -> Result<Expression, SchemeError> {
    Expression::parse(text).map_err(|source| SchemeError::Parse {
        text: text.to_string(),
        source,
    })
}

fn coord_of(name: &str) -> Result<Coord, SchemeError> {
    name.parse().map_err(|_| SchemeError::UnknownCoordinate(name.to_string()))
}

/// Orders `(target, rhs)` pairs so every right-hand side only reads free
/// coordinates or targets set before it.
fn order_substitution(pairs: Vec<(Coord, Expression)>) -> Result<Vec<(Coord, Expression)>, SchemeError> {
    let targets: BTreeSet<Coord> = pairs.iter().map(|(c, _)| *c).collect();
    let mut pending = pairs;
    let mut done: BTreeSet<Coord> = BTreeSet::new();
    let mut out = Vec::new();
    while !pending.is_empty() {
        let before = pending.len();
        let mut rest = Vec::new();
        for (c, e) in pending {
            let ready = e.variables().iter().all(|v| match v.parse::<Coord>() {
                Ok(d) => !targets.contains(&d) || done.contains(&d),
                Err(_) => true,
            });
            if ready {
                done.insert(c);
                out.push((c, e));
            } else {
                rest.push((c, e));
            }
        }
        if rest.len() == before {
            return Err(SchemeError::CyclicSubstitution(rest[0].0.to_string()));
        }
        pending = rest;
    }
    Ok(out)
}

impl Scheme {
    pub fn new(
        name: &str,
        equations: &[&str],
        lattice_ratio: Option<f64>,
        stencil: StencilBounds,
        substitution: &[(&str, &str)],
    ) -> Result<Self, SchemeError> {
        if stencil.n <= stencil.m {
            return Err(SchemeError::InvalidStencil {
                m: stencil.m,
                n: stencil.n,
            });
        }
        let equations = equations.iter().map(|e| parse(e)).collect::<Result<Vec<_>, _>>()?;
        for e in &equations {
            for v in e.variables() {
                coord_of(&v)?;
            }
        }
        let substitution = substitution_from(substitution)?;
        Ok(Scheme {
            name: name.to_string(),
            equations,
            lattice_ratio,
            stencil,
            substitution,
            continuous: None,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, SchemeError> {
        let f: SchemeFile = serde_json::from_str(text).map_err(|e| SchemeError::Json(e.to_string()))?;
        let eqs: Vec<&str> = f.equations.iter().map(String::as_str).collect();
        let subs: Vec<(&str, &str)> = f
            .substitution
            .iter()
            .flatten()
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .collect();
        let mut scheme = Scheme::new(&f.name, &eqs, f.lattice_ratio, f.stencil, &subs)?;
        if let Some(name) = f.continuous {
            continuous_catalog(&name)?;
            scheme.continuous = Some(name);
        }
        Ok(scheme)
    }

    pub fn to_json(&self) -> String {
        let f = SchemeFile {
            name: self.name.clone(),
            equations: self.equations.iter().map(|e| e.to_string()).collect(),
            lattice_ratio: self.lattice_ratio,
            stencil: self.stencil,
            substitution: (!self.substitution.is_empty())
                .then(|| self.substitution.iter().map(|(c, e)| (c.to_string(), e.to_string())).collect()),
            continuous: self.continuous.clone(),
        };
        serde_json::to_string_pretty(&f).expect("scheme file serializes")
    }

    /// Number of stencil points, `K = N - M + 1`.
    pub fn order(&self) -> usize {
        (self.stencil.n - self.stencil.m + 1) as usize
    }

    /// Highest discrete derivative the equations can involve, `N - M`.
    pub fn jet_order(&self) -> usize {
        (self.stencil.n - self.stencil.m) as usize
    }

    pub fn uses_v(&self) -> bool {
        let eq_v = self
            .equations
            .iter()
            .flat_map(|e| e.variables())
            .any(|v| v.parse::<Coord>().map(|c| c.uses_v()).unwrap_or(false));
        eq_v || self.substitution.iter().any(|(c, _)| c.uses_v())
    }

    /// Jet coordinates of the scheme's jet space, in canonical order:
    /// `x, u, [v], p1.., [q1..], h1..`.
    pub fn coordinates(&self) -> Vec<Coord> {
        let k = self.jet_order();
        let v = self.uses_v();
        let mut out = vec![Coord::X, Coord::U];
        if v {
            out.push(Coord::V);
        }
        out.extend((1..=k).map(Coord::P));
        if v {
            out.extend((1..=k).map(Coord::Q));
        }
        out.extend((1..=k).map(Coord::H));
        out
    }

    /// Coordinates left free by the substitution map.
    pub fn free_coordinates(&self) -> Vec<Coord> {
        let set: BTreeSet<Coord> = self.substitution.iter().map(|(c, _)| *c).collect();
        self.coordinates().into_iter().filter(|c| !set.contains(c)).collect()
    }

    pub fn has_solution_map(&self) -> bool {
        !self.substitution.is_empty()
    }

    /// Fills in substituted coordinates.
    pub fn complete<T: Scalar>(&self, state: &mut BTreeMap<Coord, T>) -> Result<(), SchemeError> {
        apply_substitution(&self.substitution, state)
    }

    /// Residuals of every equation and of the lattice constraint at base `n`.
    pub fn residuals_at<T: Scalar>(&self, s: &Stencil<T>, n: usize) -> Result<Vec<T>, SchemeError> {
        let needed = n + self.order();
        if s.len() < needed {
            return Err(SchemeError::TooShort {
                needed,
                got: s.len(),
            });
        }
        let mut out = Vec::with_capacity(self.equations.len() + 1);
        for e in &self.equations {
            out.push(e.eval_with(&|name: &str| s.lookup(name, n))?);
        }
        if let Some(c) = self.lattice_ratio {
            if let (Some(h1), Some(h2)) = (s.step(n, 1), s.step(n, 2)) {
                out.push(h2 - T::from_f64(c) * h1);
            }
        }
        Ok(out)
    }
}

/// Evaluates each `(target, rhs)` in order and stores the result.
pub fn apply_substitution<T: Scalar>(
    subs: &[(Coord, Expression)],
    state: &mut BTreeMap<Coord, T>,
) -> Result<(), SchemeError> {
    for (c, e) in subs {
        let value = e.eval_with(&|n: &str| n.parse::<Coord>().ok().and_then(|d| state.get(&d).copied()));
        let value = match value {
            Err(EvalError::MissingVariable(name)) => return Err(SchemeError::MissingCoordinate(name)),
            other => other?,
        };
        state.insert(*c, value);
    }
    Ok(())
}

/// Parses `(target, rhs)` pairs and orders them for [`apply_substitution`].
pub fn substitution_from(pairs: &[(&str, &str)]) -> Result<Vec<(Coord, Expression)>, SchemeError> {
    let parsed = pairs
        .iter()
        .map(|(c, e)| Ok((coord_of(c)?, parse(e)?)))
        .collect::<Result<Vec<_>, SchemeError>>()?;
    order_substitution(parsed)
}

fn bounds(m: i64, n: i64) -> StencilBounds {
    StencilBounds { m, n }
}

/// Catalog schemes, with lattice ratio `c`:
///
/// * `DSYS`: `p1 - v - h1 q1 / 2 = 0`, `q2 = 0`, `h2 = c h1`
/// * `DS3`: `p3 = 0`, `h2 = c h1`
/// * `Q2EQ1`: `q2 = 1`, `h2 = c h1` (not invariant under the discrete contact field)
pub fn catalog(name: &str, c: f64) -> Result<Scheme, SchemeError> {
    let ratio = format!("{c:?}");
    let mut s = match name {
        "DSYS" => Scheme::new(
            name,
            &["p1 - v - h1*q1/2", "q2"],
            Some(c),
            bounds(0, 2),
            &[
                ("h2", &format!("{ratio}*h1")),
                ("q1", "p2"),
                ("p1", "v + h1*q1/2"),
                ("q2", "0"),
            ],
        )?,
        "DS3" => Scheme::new(
            name,
            &["p3"],
            Some(c),
            bounds(0, 3),
            &[
                ("p3", "0"),
                ("h2", &format!("{ratio}*h1")),
                ("h3", &format!("{ratio}*h2")),
            ],
        )?,
        "Q2EQ1" => Scheme::new(
            name,
            &["q2 - 1"],
            Some(c),
            bounds(0, 2),
            &[("q2", "1"), ("h2", &format!("{ratio}*h1"))],
        )?,
        _ => return Err(SchemeError::UnknownScheme(name.to_string())),
    };
    s.continuous = match name {
        "DSYS" => Some("SYS".into()),
        "DS3" => Some("ODE3".into()),
        _ => None,
    };
    Ok(s)
}

/// A continuous ODE or system over `x, u, v, ux, uxx, .., vx, ..`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousSystem {
    pub name: String,
    pub equations: Vec<Expression>,
}

pub fn continuous_catalog(name: &str) -> Result<ContinuousSystem, SchemeError> {
    let eqs: &[&str] = match name {
        "ODE3" => &["uxxx"],
        "SYS" => &["ux - v", "vxx"],
        _ => return Err(SchemeError::UnknownScheme(name.to_string())),
    };
    Ok(ContinuousSystem {
        name: name.to_string(),
        equations: eqs.iter().map(|e| parse(e)).collect::<Result<_, _>>()?,
    })
}

/// Data for the third-order scheme: a lattice and `u` at its first three points.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveSpec<T> {
    pub lattice: Lattice<T>,
    pub init: [T; 3],
}

/// Newton-form quadratic through three points: value and derivative.
#[derive(Debug, Clone, Copy)]
struct Quadratic<T> {
    x0: T,
    x1: T,
    u0: T,
    d1: T,
    d2: T,
}

impl<T: Scalar> Quadratic<T> {
    fn through(xs: [T; 3], us: [T; 3]) -> Result<Self, SchemeError> {
        if xs[0] == xs[1] || xs[1] == xs[2] || xs[0] == xs[2] {
            return Err(SchemeError::DegenerateLattice);
        }
        let d01 = (us[1] - us[0]) / (xs[1] - xs[0]);
        let d12 = (us[2] - us[1]) / (xs[2] - xs[1]);
        Ok(Quadratic {
            x0: xs[0],
            x1: xs[1],
            u0: us[0],
            d1: d01,
            d2: (d12 - d01) / (xs[2] - xs[0]),
        })
    }

    fn value(&self, x: T) -> T {
        self.u0 + self.d1 * (x - self.x0) + self.d2 * (x - self.x0) * (x - self.x1)
    }

    fn slope(&self, x: T) -> T {
        self.d1 + self.d2 * (x + x - self.x0 - self.x1)
    }
}

/// The solution of `p3 = 0` through the initial data: the interpolating
/// quadratic sampled on the lattice. The v channel is `p1 - h1 p2 / 2`,
/// which on a quadratic equals its exact derivative at every point,
/// including the last two where the three-point stencil does not fit.
pub fn solve_third_order<T: Scalar>(spec: &SolveSpec<T>) -> Result<Trajectory<T>, SchemeError> {
    let xs = spec.lattice.points();
    if xs.len() < 3 {
        return Err(SchemeError::TooShort {
            needed: 3,
            got: xs.len(),
        });
    }
    let q = Quadratic::through([xs[0], xs[1], xs[2]], spec.init)?;
    let us: Vec<T> = xs.iter().map(|&x| q.value(x)).collect();
    let vs: Vec<T> = xs.iter().map(|&x| q.slope(x)).collect();
    Ok(Trajectory::new(xs, us, Some(vs))?)
}

/// Marches `p3 = 0` point by point: each new value extends the quadratic
/// through the previous three points. Cross-check for [`solve_third_order`].
pub fn solve_third_order_recursive<T: Scalar>(spec: &SolveSpec<T>) -> Result<Trajectory<T>, SchemeError> {
    let xs = spec.lattice.points();
    if xs.len() < 3 {
        return Err(SchemeError::TooShort {
            needed: 3,
            got: xs.len(),
        });
    }
    let mut us = spec.init.to_vec();
    for n in 3..xs.len() {
        let q = Quadratic::through([xs[n - 3], xs[n - 2], xs[n - 1]], [us[n - 3], us[n - 2], us[n - 1]])?;
        us.push(q.value(xs[n]));
    }
    Ok(Trajectory::new(xs, us, None)?)
}

/// Residual vectors (one per admissible base point) of `scheme` on `t`.
pub fn residuals<T: Scalar>(t: &Trajectory<T>, scheme: &Scheme) -> Result<Vec<Vec<T>>, SchemeError> {
    let needed = scheme.order();
    if t.len() < needed {
        return Err(SchemeError::TooShort { needed, got: t.len() });
    }
    (0..=t.len() - needed)
        .map(|n| scheme.residuals_at(t.stencil(), n))
        .collect()
}

/// Max absolute residual over all base points and equations.
pub fn max_residual(t: &Trajectory<f64>, scheme: &Scheme) -> Result<f64, SchemeError> {
    Ok(residuals(t, scheme)?
        .iter()
        .flatten()
        .fold(0.0, |m, r| m.max(r.abs())))
}

/// Maxima over the trajectory of the three elimination identities:
/// `q1 - p2`, `q2 - 2(h1+h2+h3)/(3(h1+h2)) p3`, and `p3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EliminationReport {
    pub q1_minus_p2: f64,
    pub q2_identity: f64,
    pub p3: f64,
}

pub fn eliminate_v_check(t: &Trajectory<f64>) -> Result<EliminationReport, SchemeError> {
    let s = t.stencil();
    if !s.has_v() {
        return Err(SchemeError::MissingV);
    }
    if s.len() < 4 {
        return Err(SchemeError::TooShort { needed: 4, got: s.len() });
    }
    let mut rep = EliminationReport {
        q1_minus_p2: 0.0,
        q2_identity: 0.0,
        p3: 0.0,
    };
    let get = |c: &str, n: usize| s.lookup(c, n).expect("stencil covers base point");
    for n in 0..=s.len() - 4 {
        // (i) needs three points, (ii) and (iii) four
        let (h1, h2, h3) = (get("h1", n), get("h2", n), get("h3", n));
        let p3 = get("p3", n);
        let coef = 2.0 * (h1 + h2 + h3) / (3.0 * (h1 + h2));
        rep.q2_identity = rep.q2_identity.max((get("q2", n) - coef * p3).abs());
        rep.p3 = rep.p3.max(p3.abs());
    }
    for n in 0..=s.len() - 3 {
        rep.q1_minus_p2 = rep.q1_minus_p2.max((get("q1", n) - get("p2", n)).abs());
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(c: f64, count: usize, init: [f64; 3]) -> SolveSpec<f64> {
        SolveSpec {
            lattice: Lattice::new(0.0, 1.0, c, count).unwrap(),
            init,
        }
    }

    #[test]
    fn quadratic_through_geometric_lattice() {
        let t = solve_third_order(&spec(2.0, 4, [0.0, 1.0, 9.0])).unwrap();
        assert_eq!(t.xs(), &[0.0, 1.0, 3.0, 7.0]);
        assert_eq!(t.us()[3], 49.0);
        assert_eq!(t.stencil().lookup("p3", 0), Some(0.0));
        assert_eq!(t.vs().unwrap(), &[0.0, 2.0, 6.0, 14.0]);
        let zero = solve_third_order(&spec(1.0, 5, [0.0; 3])).unwrap();
        assert!(zero.us().iter().all(|&u| u == 0.0));
        let lin = solve_third_order(&spec(1.5, 5, [1.0, 2.0, 3.5])).unwrap();
        assert!(lin.stencil().lookup("p2", 1).unwrap().abs() < 1e-14);
    }

    #[test]
    fn recursive_solver_agrees() {
        let s = spec(1.3, 12, [0.4, -1.0, 2.0]);
        let a = solve_third_order(&s).unwrap();
        let b = solve_third_order_recursive(&s).unwrap();
        for (x, y) in a.us().iter().zip(b.us()) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn residual_examples() {
        let ds3 = catalog("DS3", 2.0).unwrap();
        let t = solve_third_order(&spec(2.0, 8, [1.0, -2.0, 0.5])).unwrap();
        assert!(max_residual(&t, &ds3).unwrap() < 1e-12);
        let xs: Vec<f64> = (0..6).map(|i| 0.3 * i as f64).collect();
        let cube: Trajectory<f64> = Trajectory::from_fn(xs, |x| x * x * x, None::<fn(f64) -> f64>).unwrap();
        let r = residuals(&cube, &catalog("DS3", 1.0).unwrap()).unwrap();
        for row in r {
            assert!((row[0] - 6.0).abs() < 1e-9);
            assert!(row[1].abs() < 1e-12);
        }
        let bumpy: Trajectory<f64> = Trajectory::new(vec![0.0, 1.0, 1.5, 4.0], vec![0.0; 4], None).unwrap();
        let r = residuals(&bumpy, &ds3).unwrap();
        assert!(r[0][1].abs() > 1.0);
        assert!(matches!(
            residuals(&bumpy.clone(), &catalog("DSYS", 1.0).unwrap()),
            Err(SchemeError::Eval(EvalError::MissingVariable(_)))
        ));
        let short = Trajectory::new(vec![0.0, 1.0], vec![0.0; 2], None).unwrap();
        assert!(matches!(residuals(&short, &ds3), Err(SchemeError::TooShort { .. })));
    }

    #[test]
    fn elimination_on_solver_output() {
        let t = solve_third_order(&spec(1.7, 9, [0.3, 0.1, -0.6])).unwrap();
        let rep = eliminate_v_check(&t).unwrap();
        assert!(rep.q1_minus_p2 < 1e-12 && rep.q2_identity < 1e-12 && rep.p3 < 1e-12, "{rep:?}");
        let mut vs = t.vs().unwrap().to_vec();
        vs[4] += 1e-3;
        let bad = Trajectory::new(t.xs().to_vec(), t.us().to_vec(), Some(vs)).unwrap();
        let rep = eliminate_v_check(&bad).unwrap();
        assert!(rep.q1_minus_p2 > 1e-4);
        let no_v = Trajectory::new(t.xs().to_vec(), t.us().to_vec(), None).unwrap();
        assert_eq!(eliminate_v_check(&no_v), Err(SchemeError::MissingV));
    }

    #[test]
    fn elimination_coefficient_on_uniform_lattice() {
        let (h1, h2, h3) = (0.25, 0.25, 0.25);
        assert_eq!(2.0 * (h1 + h2 + h3) / (3.0 * (h1 + h2)), 1.0);
    }

    #[test]
    fn solution_map_parameterizes_dsys() {
        let s = catalog("DSYS", 1.5).unwrap();
        assert_eq!(s.order(), 3);
        assert_eq!(s.jet_order(), 2);
        assert_eq!(
            s.free_coordinates(),
            vec![Coord::X, Coord::U, Coord::V, Coord::P(2), Coord::H(1)]
        );
        let mut st: BTreeMap<Coord, f64> =
            [(Coord::X, 0.2), (Coord::U, 1.0), (Coord::V, -0.5), (Coord::P(2), 0.8), (Coord::H(1), 0.4)]
                .into_iter()
                .collect();
        s.complete(&mut st).unwrap();
        assert_eq!(st[&Coord::Q(1)], 0.8);
        assert!((st[&Coord::P(1)] - (-0.5 + 0.2 * 0.8)).abs() < 1e-15);
        assert!((st[&Coord::H(2)] - 0.6).abs() < 1e-15);
        let stencil: Stencil<f64> = Stencil::from_jets(
            st[&Coord::X],
            &[st[&Coord::H(1)], st[&Coord::H(2)]],
            st[&Coord::U],
            &[st[&Coord::P(1)], st[&Coord::P(2)]],
            Some((st[&Coord::V], &[st[&Coord::Q(1)], st[&Coord::Q(2)]])),
        );
        for r in s.residuals_at(&stencil, 0).unwrap() {
            assert!(r.abs() < 1e-14);
        }
        st.remove(&Coord::P(2));
        st.remove(&Coord::Q(1));
        assert!(matches!(s.complete(&mut st), Err(SchemeError::MissingCoordinate(_))));
    }

    #[test]
    fn json_and_catalog_errors() {
        let s = catalog("DS3", 2.0).unwrap();
        let back = Scheme::from_json(&s.to_json()).unwrap();
        assert_eq!(back.equations, s.equations);
        let sorted = |v: &[(Coord, Expression)]| {
            let mut v: Vec<String> = v.iter().map(|(c, e)| format!("{c}={e}")).collect();
            v.sort();
            v
        };
        assert_eq!(sorted(&back.substitution), sorted(&s.substitution));
        let user = r#"{"name": "mine", "equations": ["p2 - 1"], "lattice_ratio": null, "stencil": {"M": 0, "N": 2}}"#;
        let u = Scheme::from_json(user).unwrap();
        assert!(!u.has_solution_map());
        assert_eq!(u.order(), 3);
        assert!(matches!(catalog("NOPE", 1.0), Err(SchemeError::UnknownScheme(_))));
        assert!(matches!(
            Scheme::new("bad", &["w"], None, bounds(0, 1), &[]),
            Err(SchemeError::UnknownCoordinate(_))
        ));
        assert!(matches!(
            Scheme::new("bad", &["p1"], None, bounds(1, 1), &[]),
            Err(SchemeError::InvalidStencil { .. })
        ));
        assert!(matches!(
            Scheme::new("cyc", &["p1"], None, bounds(0, 1), &[("p1", "h1"), ("h1", "p1")]),
            Err(SchemeError::CyclicSubstitution(_))
        ));
    }

    #[test]
    fn continuous_catalog_entries() {
        assert_eq!(continuous_catalog("ODE3").unwrap().equations[0].to_string(), "uxxx");
        let sys = continuous_catalog("SYS").unwrap();
        assert_eq!(sys.equations.len(), 2);
        assert!(continuous_catalog("nope").is_err());
    }
}
