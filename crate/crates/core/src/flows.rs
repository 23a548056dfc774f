//! One-parameter flows of restricted prolonged fields, the continuous-limit
//! study of the discrete characteristic, and symmetry classification.
//!
//! On the solution set of `p3 = 0` the discrete contact field has the
//! closed-form flow
//!
//! ```text
//! x̃ = x + λ·χ,   ũ = u + ½λ·χ²,   χ = p1 − ½h1·p2
//! p̃1 = p1,  p̃2 = p2 / (1 + λp2),  p̃3 = p3,  h̃k = hk·(1 + λp2)
//! ```
//!
//! which exists on the branch `1 + λp2 > 0` containing `λ = 0`.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{EvalError, Expression};
use crate::fields::{continuous_limit, FieldError, FieldKind, VectorField};
use crate::invariance::{apply_continuous, check_invariance, ContSampler, InvarianceError, Sampler};
use crate::jets::{Coord, JetError, Stencil, Trajectory};
use crate::prolong::{newton_slope, prolong_continuous, prolong_discrete, restrict, ProlongError, RestrictedField};
use crate::scalar::{Dual, Scalar};
use crate::schemes::{continuous_catalog, max_residual, Scheme, SchemeError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("flow is singular at λ = {lambda}: 1 + λ·p2 = {denominator}")]
    Singular { lambda: f64, denominator: f64 },
    #[error("state is off the solution set: |p3| = {0}")]
    OffManifold(f64),
    #[error("flow left the admissible region: {0}")]
    Inadmissible(String),
    #[error("need at least {needed} {what}, got {got}")]
    TooFew { what: &'static str, needed: usize, got: usize },
    #[error("state has {got} components, expected {expected}")]
    StateShape { expected: usize, got: usize },
    #[error(transparent)]
    Prolong(#[from] ProlongError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Invariance(#[from] InvarianceError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// Coordinates of a third-order state, in the order used by every flow here.
pub const DS3_COORDS: [Coord; 8] = [
    Coord::X,
    Coord::U,
    Coord::P(1),
    Coord::P(2),
    Coord::P(3),
    Coord::H(1),
    Coord::H(2),
    Coord::H(3),
];

const SINGULAR_TOL: f64 = 1e-12;

/// Closed-form flow on `[x, u, p1, p2, p3, h1, h2, h3]`. Generic so the
/// generator can be read off with a dual-valued `λ`.
pub fn closed_form_x7<T: Scalar>(state: &[T], lambda: T) -> Result<Vec<T>, FlowError> {
    if state.len() != DS3_COORDS.len() {
        return Err(FlowError::StateShape {
            expected: DS3_COORDS.len(),
            got: state.len(),
        });
    }
    let (x, u, p1, p2, p3) = (state[0], state[1], state[2], state[3], state[4]);
    let den = T::one() + lambda * p2;
    if den.value() <= SINGULAR_TOL {
        return Err(FlowError::Singular {
            lambda: lambda.value(),
            denominator: den.value(),
        });
    }
    let half = T::from_f64(0.5);
    let chi = p1 - half * state[5] * p2;
    let mut out = vec![
        x + lambda * chi,
        u + half * lambda * chi * chi,
        p1,
        p2 / den,
        p3,
    ];
    out.extend(state[5..].iter().map(|&h| h * den));
    Ok(out)
}

/// [`closed_form_x7`] after rejecting states with `p3 ≠ 0`.
pub fn flow_closed_form_x7(state: &[f64], lambda: f64) -> Result<Vec<f64>, FlowError> {
    if state.len() == DS3_COORDS.len() {
        let scale = 1.0 + state[2].abs() + state[3].abs();
        if state[4].abs() > 1e-9 * scale {
            return Err(FlowError::OffManifold(state[4].abs()));
        }
    }
    closed_form_x7(state, lambda)
}

/// Jet state of a trajectory at base `n` in [`DS3_COORDS`] order.
pub fn ds3_state(t: &Trajectory<f64>, n: usize) -> Result<Vec<f64>, FlowError> {
    let s = t.stencil();
    DS3_COORDS
        .iter()
        .map(|&c| {
            s.coord(c, n).ok_or(FlowError::TooFew {
                what: "points",
                needed: n + 4,
                got: s.len(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryFlow {
    pub lambda: f64,
    pub before: (Vec<f64>, Vec<f64>),
    pub after: (Vec<f64>, Vec<f64>),
    /// Max scheme residual of the transformed points, jets re-derived.
    pub max_residual: f64,
    /// Max relative change of `h_{n+2}/h_{n+1}` across the trajectory.
    pub ratio_change: f64,
}

/// Applies the closed-form flow pointwise. Each point's characteristic
/// comes from its own three-point window; the last two points use the
/// final window's interpolant, which on a solution is the same quadratic.
pub fn flow_trajectory_x7(t: &Trajectory<f64>, lambda: f64, scheme: &Scheme) -> Result<TrajectoryFlow, FlowError> {
    let n = t.len();
    if n < 4 {
        return Err(FlowError::TooFew {
            what: "points",
            needed: 4,
            got: n,
        });
    }
    let (xs, us) = (t.xs(), t.us());
    let s = t.stencil();
    let mut scale = 1.0f64;
    for i in 0..n - 3 {
        scale = scale.max(s.lookup("p2", i).unwrap().abs());
        let p3 = s.lookup("p3", i).unwrap();
        if p3.abs() > 1e-8 * scale {
            return Err(FlowError::OffManifold(p3.abs()));
        }
    }
    let mut new_x = Vec::with_capacity(n);
    let mut new_u = Vec::with_capacity(n);
    for i in 0..n {
        let w = i.min(n - 3);
        let p = [s.lookup("p1", w).unwrap(), s.lookup("p2", w).unwrap()];
        let den = 1.0 + lambda * p[1];
        if den <= SINGULAR_TOL {
            return Err(FlowError::Singular {
                lambda,
                denominator: den,
            });
        }
        let chi = newton_slope(&xs[w..w + 3], &p, xs[i]);
        new_x.push(xs[i] + lambda * chi);
        new_u.push(us[i] + 0.5 * lambda * chi * chi);
    }
    let after = Trajectory::new(new_x, new_u, None)?;
    let max_residual = max_residual(&after, scheme)?;
    let a = after.stencil();
    let mut ratio_change = 0.0f64;
    for i in 0..n - 2 {
        let r0 = s.lookup("h2", i).unwrap() / s.lookup("h1", i).unwrap();
        let r1 = a.lookup("h2", i).unwrap() / a.lookup("h1", i).unwrap();
        ratio_change = ratio_change.max(((r1 - r0) / r0).abs());
    }
    Ok(TrajectoryFlow {
        lambda,
        before: (xs.to_vec(), us.to_vec()),
        after: (after.xs().to_vec(), after.us().to_vec()),
        max_residual,
        ratio_change,
    })
}

/// Integrates `dz/dλ = coefficients(z)` with classical RK4.
pub fn flow_numeric(field: &RestrictedField, state: &[f64], lambda: f64, steps: usize) -> Result<Vec<f64>, FlowError> {
    if steps == 0 {
        return Err(FlowError::TooFew {
            what: "steps",
            needed: 1,
            got: 0,
        });
    }
    let coords = field.coordinates();
    if state.len() != coords.len() {
        return Err(FlowError::StateShape {
            expected: coords.len(),
            got: state.len(),
        });
    }
    let f = |z: &[f64]| -> Result<Vec<f64>, FlowError> {
        for (c, v) in coords.iter().zip(z) {
            if !v.is_finite() {
                return Err(FlowError::Inadmissible(format!("{c} is not finite")));
            }
            if matches!(c, Coord::H(_)) && *v <= 0.0 {
                return Err(FlowError::Inadmissible(format!("step {c} = {v}")));
            }
        }
        Ok(field.evaluate(z)?)
    };
    let dt = lambda / steps as f64;
    let axpy = |z: &[f64], k: &[f64], a: f64| -> Vec<f64> { z.iter().zip(k).map(|(z, k)| z + a * k).collect() };
    let mut z = state.to_vec();
    for _ in 0..steps {
        let k1 = f(&z)?;
        let k2 = f(&axpy(&z, &k1, dt / 2.0))?;
        let k3 = f(&axpy(&z, &k2, dt / 2.0))?;
        let k4 = f(&axpy(&z, &k3, dt))?;
        for i in 0..z.len() {
            z[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    f(&z)?;
    Ok(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupLawReport {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Max over components of `|F(F(z, λ1), λ2) − F(z, λ1 + λ2)|`.
    pub discrepancy: f64,
}

pub fn group_law_check<F>(flow: F, state: &[f64], lambda1: f64, lambda2: f64) -> Result<GroupLawReport, FlowError>
where
    F: Fn(&[f64], f64) -> Result<Vec<f64>, FlowError>,
{
    let composed = flow(&flow(state, lambda1)?, lambda2)?;
    let direct = flow(state, lambda1 + lambda2)?;
    let discrepancy = composed
        .iter()
        .zip(&direct)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(GroupLawReport {
        lambda1,
        lambda2,
        discrepancy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitRow {
    pub h: f64,
    pub characteristic: f64,
    pub exact: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitStudy {
    pub function: String,
    pub x0: f64,
    pub ratio: f64,
    pub rows: Vec<LimitRow>,
    /// Log-log slope of error against h; `None` when some error is zero.
    pub fitted_order: Option<f64>,
}

impl LimitStudy {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), FlowError> {
        let mut wr = csv::Writer::from_writer(w);
        let order = self.fitted_order.map(|o| format!("{o:.16e}")).unwrap_or_default();
        wr.write_record(["h", "error", "fitted_order"])
            .map_err(|e| JetError::Csv(e.to_string()))?;
        for r in &self.rows {
            wr.write_record([format!("{:.16e}", r.h), format!("{:.16e}", r.error), order.clone()])
                .map_err(|e| JetError::Csv(e.to_string()))?;
        }
        wr.flush().map_err(|e| JetError::Csv(e.to_string()))?;
        Ok(())
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_order(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || ys.iter().any(|&y| y <= 0.0 || !y.is_finite()) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Some(sxy / sxx)
}

/// Compares `p1 − ½h1·p2` at `x0` with `u'(x0)` for each step `h`, on the
/// lattice `x0, x0 + h, x0 + h + ratio·h`.
pub fn continuous_limit_study(u: &Expression, x0: f64, hs: &[f64], ratio: f64) -> Result<LimitStudy, FlowError> {
    if hs.len() < 3 {
        return Err(FlowError::TooFew {
            what: "step sizes",
            needed: 3,
            got: hs.len(),
        });
    }
    let uf = |x: f64| u.eval_with(&|n: &str| (n == "x").then_some(x));
    let (_, grad) = u.eval_gradient(&|n: &str| (n == "x").then_some(x0), &["x"])?;
    let exact = grad[0];
    let mut rows = Vec::with_capacity(hs.len());
    for &h in hs {
        let xs = vec![x0, x0 + h, x0 + h + ratio * h];
        let us = xs.iter().map(|&x| uf(x)).collect::<Result<Vec<_>, _>>()?;
        let s = Stencil::new(xs, us, None)?;
        let chi = s.lookup("p1", 0).unwrap() - 0.5 * h * s.lookup("p2", 0).unwrap();
        rows.push(LimitRow {
            h,
            characteristic: chi,
            exact,
            error: (chi - exact).abs(),
        });
    }
    let fitted_order = fit_order(
        &rows.iter().map(|r| r.h).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.error).collect::<Vec<_>>(),
    );
    Ok(LimitStudy {
        function: u.to_string(),
        x0,
        ratio,
        rows,
        fitted_order,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Point,
    ContactInternal,
    NotASymmetry,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    /// Number of stencil points the base coefficients depend on.
    pub j: usize,
    pub invariance_residual: f64,
    /// Group-law discrepancy of the numeric flow on the solution set.
    pub integrability_residual: Option<f64>,
    /// Scheme residual of the flowed state.
    pub solution_mapping_residual: Option<f64>,
    pub continuous_limit_match: Option<bool>,
    pub continuous_limit: Option<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryClass {
    pub field: String,
    pub scheme: String,
    pub verdict: Verdict,
    pub evidence: Evidence,
}

/// The continuous field a catalog field is expected to reduce to, after
/// eliminating `v` when `u_only`.
pub fn declared_continuous_field(field: &VectorField, u_only: bool) -> Option<VectorField> {
    if field.name == "X7d" {
        return VectorField::parse("X7d_declared", "ux", "ux^2/2", None).ok();
    }
    if field.is_point() {
        return continuous_limit(field, u_only).ok();
    }
    None
}

const CLASSIFY_SAMPLES: usize = 20;
const CLASSIFY_SEED: u64 = 42;
const CLASSIFY_TOL: f64 = 1e-9;

/// Largest site (plus one) whose point values move `ξ` or `φ` at base 0.
fn stencil_dependence(pr: &crate::prolong::ProlongedField, s: &Stencil<f64>) -> Result<usize, FlowError> {
    let mut j = 1;
    for site in 0..s.len() {
        for channel in 0..3 {
            if channel == 2 && !s.has_v() {
                continue;
            }
            let mut xs: Vec<Dual<f64>> = s.xs.iter().map(|&x| Dual::constant(x)).collect();
            let mut us: Vec<Dual<f64>> = s.us.iter().map(|&u| Dual::constant(u)).collect();
            let mut vs: Option<Vec<Dual<f64>>> = s.vs.as_ref().map(|v| v.iter().map(|&x| Dual::constant(x)).collect());
            match channel {
                0 => xs[site] = Dual::variable(s.xs[site]),
                1 => us[site] = Dual::variable(s.us[site]),
                _ => vs.as_mut().unwrap()[site] = Dual::variable(s.vs.as_ref().unwrap()[site]),
            }
            let d = Stencil { xs, us, vs };
            let (xi, phi, _) = pr.base_at(&d, 0)?;
            if xi.eps.abs() > 1e-10 || phi.eps.abs() > 1e-10 {
                j = j.max(site + 1);
            }
        }
    }
    Ok(j)
}

/// Runs the four checks of the definition of a contact-like symmetry:
/// invariance on the solution set, stencil dependence `J`, integrability of
/// the restricted flow there, and the continuous limit.
pub fn classify_symmetry(field: &VectorField, scheme: &Scheme) -> Result<SymmetryClass, FlowError> {
    let mut notes = Vec::new();
    let sampler = Sampler::solution(scheme);
    if !scheme.has_solution_map() {
        notes.push("scheme declares no solution map; invariance sampled on the generic jet space".into());
    }
    let eqs: Vec<(String, Expression)> = scheme
        .equations
        .iter()
        .enumerate()
        .map(|(i, e)| (format!("E{}", i + 1), e.clone()))
        .collect();
    let inv = check_invariance(
        std::slice::from_ref(field),
        &eqs,
        &sampler,
        CLASSIFY_SAMPLES,
        CLASSIFY_SEED,
        CLASSIFY_TOL,
    )?;

    let pr = prolong_discrete(field, scheme.jet_order())?;
    let mut j = 1;
    let states = sampler.samples(3, CLASSIFY_SEED)?;
    for st in &states {
        j = j.max(stencil_dependence(&pr, &sampler.stencil(st, &pr)?)?);
    }

    let (mut integrability, mut mapping) = (None, None);
    if scheme.has_solution_map() {
        let r = restrict(&pr, scheme)?;
        let free = scheme.free_coordinates();
        let mut worst_law = 0.0f64;
        let mut worst_map = 0.0f64;
        let mut failed = None;
        for st in &states {
            let free_vals: Vec<f64> = free.iter().map(|c| st[c]).collect();
            let z = r.complete(&free_vals)?;
            let flow = |z: &[f64], l: f64| flow_numeric(&r, z, l, 200);
            match group_law_check(flow, &z, 0.05, 0.05) {
                Ok(g) => worst_law = worst_law.max(g.discrepancy),
                Err(e) => failed = Some(e.to_string()),
            }
            match flow_numeric(&r, &z, 0.1, 200) {
                Ok(after) => {
                    let coords = r.coordinates();
                    let look = |n: &str| {
                        let c: Coord = n.parse().ok()?;
                        coords.iter().position(|&d| d == c).map(|i| after[i])
                    };
                    for e in &scheme.equations {
                        worst_map = worst_map.max(e.eval_with(&look)?.abs());
                    }
                    if let (Some(c), Some(h1), Some(h2)) = (scheme.lattice_ratio, look("h1"), look("h2")) {
                        worst_map = worst_map.max((h2 - c * h1).abs());
                    }
                }
                Err(e) => failed = Some(e.to_string()),
            }
        }
        if let Some(msg) = failed {
            notes.push(format!("numeric flow failed: {msg}"));
            worst_law = f64::INFINITY;
            worst_map = f64::INFINITY;
        }
        integrability = Some(worst_law);
        mapping = Some(worst_map);
    } else {
        notes.push("integrability not assessed without a solution map".into());
    }

    let (mut limit_match, mut limit_text) = (None, None);
    match &scheme.continuous {
        Some(name) => {
            let system = continuous_catalog(name)?;
            let u_only = !scheme.uses_v();
            let limit = continuous_limit(field, u_only)?;
            limit_text = Some(format!("xi = {}, phi = {}", limit.xi, limit.phi));
            let first_order = match limit.kind() {
                FieldKind::Point => true,
                FieldKind::Continuous { order } => order <= 1,
                FieldKind::Discrete { .. } => false,
            };
            let mut ok = first_order;
            let cpr = prolong_continuous(&limit, 3)?;
            let jets = continuous_solution_jets(name, CLASSIFY_SAMPLES, CLASSIFY_SEED);
            for jet in &jets {
                for e in &system.equations {
                    if apply_continuous(&cpr, e, jet)?.abs() > 1e-9 {
                        ok = false;
                    }
                }
            }
            if let Some(decl) = declared_continuous_field(field, u_only) {
                for jet in &jets {
                    let look = |n: &str| jet.lookup(n);
                    let dx = limit.xi.eval_with(&look)? - decl.xi.eval_with(&look)?;
                    let du = limit.phi.eval_with(&look)? - decl.phi.eval_with(&look)?;
                    if dx.abs() > 1e-12 || du.abs() > 1e-12 {
                        ok = false;
                    }
                }
            }
            limit_match = Some(ok);
        }
        None => notes.push("scheme has no continuous counterpart".into()),
    }

    let invariant = inv.pass;
    let integrable = integrability.is_some_and(|r| r < 1e-7) && mapping.is_some_and(|r| r < 1e-9);
    let verdict = if !invariant {
        Verdict::NotASymmetry
    } else if j <= 1 {
        Verdict::Point
    } else if integrable && limit_match == Some(true) {
        Verdict::ContactInternal
    } else {
        Verdict::NotASymmetry
    };
    Ok(SymmetryClass {
        field: field.name.clone(),
        scheme: scheme.name.clone(),
        verdict,
        evidence: Evidence {
            j,
            invariance_residual: inv.max_residual,
            integrability_residual: integrability,
            solution_mapping_residual: mapping,
            continuous_limit_match: limit_match,
            continuous_limit: limit_text,
            notes,
        },
    })
}

/// Jets on the solution set of a continuous catalog equation.
fn continuous_solution_jets(name: &str, count: usize, seed: u64) -> Vec<crate::jets::ContJet<f64>> {
    match name {
        "SYS" => ContSampler::SystemWithConsequence.samples(count, seed),
        _ => {
            use rand::Rng;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|_| {
                    let mut r = || rng.gen_range(-2.0..=2.0);
                    crate::jets::ContJet {
                        x: r(),
                        u: r(),
                        v: None,
                        du: vec![r(), r(), 0.0, 0.0, 0.0],
                        dv: None,
                    }
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::catalog;
    use crate::jets::Lattice;
    use crate::schemes::{self, solve_third_order, SolveSpec};

    fn ds3(c: f64) -> Scheme {
        schemes::catalog("DS3", c).unwrap()
    }

    fn quad_traj(c: f64, init: [f64; 3], count: usize) -> Trajectory<f64> {
        let t = solve_third_order(&SolveSpec {
            lattice: Lattice::new(0.0, 1.0, c, count).unwrap(),
            init,
        })
        .unwrap();
        Trajectory::new(t.xs().to_vec(), t.us().to_vec(), None).unwrap()
    }

    #[test]
    fn closed_form_on_parabola() {
        // u = x², base x = 1 with h = 0.5 on a uniform lattice
        let state = [1.0, 1.0, 2.5, 2.0, 0.0, 0.5, 0.5, 0.5];
        let out = flow_closed_form_x7(&state, 0.1).unwrap();
        assert!((out[0] - 1.2).abs() < 1e-15);
        assert!((out[1] - 1.2).abs() < 1e-15);
        assert_eq!(out[2], 2.5);
        assert!((out[3] - 5.0 / 3.0).abs() < 1e-15);
        assert!((out[5] - 0.6).abs() < 1e-15);
        assert_eq!(flow_closed_form_x7(&state, 0.0).unwrap(), state.to_vec());
        assert!(matches!(flow_closed_form_x7(&state, -0.5), Err(FlowError::Singular { .. })));
        let mut off = state;
        off[4] = 0.3;
        assert!(matches!(flow_closed_form_x7(&off, 0.1), Err(FlowError::OffManifold(_))));
    }

    #[test]
    fn trajectory_flow_stays_on_quadratics() {
        let t = quad_traj(2.0, [0.0, 1.0, 9.0], 4);
        let f = flow_trajectory_x7(&t, 0.1, &ds3(2.0)).unwrap();
        assert!(f.max_residual < 1e-10, "{}", f.max_residual);
        assert!(f.ratio_change < 1e-12);
        let cube = Trajectory::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 1.0, 8.0, 27.0], None).unwrap();
        assert!(matches!(
            flow_trajectory_x7(&cube, 0.1, &ds3(1.0)),
            Err(FlowError::OffManifold(_))
        ));
    }

    #[test]
    fn continuous_flow_agrees_on_quadratics() {
        let (a, b) = (0.7, -0.3);
        let t = quad_traj(1.4, [0.2, 0.2 + 0.7 - 0.3, 0.5], 6);
        let t = {
            // rebuild from the closed-form quadratic to pin a, b
            let xs = t.xs().to_vec();
            Trajectory::new(xs.clone(), xs.iter().map(|x| a * x * x + b * x + 0.2).collect(), None).unwrap()
        };
        let lambda = 0.3;
        let f = flow_trajectory_x7(&t, lambda, &ds3(1.4)).unwrap();
        for (i, &x) in t.xs().iter().enumerate() {
            let ux = 2.0 * a * x + b;
            assert!((f.after.0[i] - (x + lambda * ux)).abs() < 1e-13);
            assert!((f.after.1[i] - (t.us()[i] + 0.5 * lambda * ux * ux)).abs() < 1e-13);
        }
    }

    #[test]
    fn generator_matches_restricted_field() {
        let r = restrict(&prolong_discrete(&catalog("X7d").unwrap(), 3).unwrap(), &ds3(1.3)).unwrap();
        let z = r.complete(&[0.4, -0.2, 0.9, -0.6, 0.3]).unwrap();
        let field = r.evaluate(&z).unwrap();
        let dz: Vec<Dual<f64>> = z.iter().map(|&v| Dual::constant(v)).collect();
        let gen = closed_form_x7(&dz, Dual::variable(0.0)).unwrap();
        for (g, f) in gen.iter().zip(&field) {
            assert!((g.eps - f).abs() < 1e-12, "{} vs {}", g.eps, f);
        }
        // and by a central difference in λ
        let eps = 1e-6;
        let plus = flow_closed_form_x7(&z, eps).unwrap();
        let minus = flow_closed_form_x7(&z, -eps).unwrap();
        for i in 0..z.len() {
            let fd = (plus[i] - minus[i]) / (2.0 * eps);
            assert!((fd - field[i]).abs() <= 1e-6 * field[i].abs().max(1.0));
        }
    }

    #[test]
    fn numeric_flow_converges_to_closed_form() {
        let r = restrict(&prolong_discrete(&catalog("X7d").unwrap(), 3).unwrap(), &ds3(1.5)).unwrap();
        let z = r.complete(&[0.1, 0.4, -0.3, 0.8, 0.2]).unwrap();
        let exact = flow_closed_form_x7(&z, 0.1).unwrap();
        let num = flow_numeric(&r, &z, 0.1, 100).unwrap();
        let err = exact.iter().zip(&num).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-8, "{err}");
        let g = group_law_check(flow_closed_form_x7, &z, 0.05, 0.05).unwrap();
        assert!(g.discrepancy < 1e-12);
        let inv = group_law_check(flow_closed_form_x7, &z, 0.05, -0.05).unwrap();
        assert!(inv.discrepancy < 1e-12);
        assert!(matches!(flow_numeric(&r, &z, 0.1, 0), Err(FlowError::TooFew { .. })));
    }

    #[test]
    fn point_translation_flow() {
        let r = restrict(&prolong_discrete(&catalog("X1").unwrap(), 3).unwrap(), &ds3(1.0)).unwrap();
        let z = r.complete(&[0.1, 0.4, -0.3, 0.8, 0.2]).unwrap();
        let out = flow_numeric(&r, &z, 0.7, 10).unwrap();
        for (i, (a, b)) in z.iter().zip(&out).enumerate() {
            let want = if i == 1 { a + 0.7 } else { *a };
            assert!((b - want).abs() < 1e-14);
        }
    }

    #[test]
    fn limit_study_examples() {
        let hs = [0.1, 0.05, 0.025, 0.0125];
        let sq = continuous_limit_study(&Expression::parse("3*x^2 - x + 2").unwrap(), 0.4, &hs, 1.0).unwrap();
        assert!(sq.rows.iter().all(|r| r.error < 1e-12));
        let cube = continuous_limit_study(&Expression::parse("x^3").unwrap(), 0.7, &hs, 1.0).unwrap();
        for r in &cube.rows {
            assert!((r.error / (2.0 * r.h * r.h) - 1.0).abs() < 1e-8);
        }
        assert!((cube.fitted_order.unwrap() - 2.0).abs() < 1e-6);
        assert!(continuous_limit_study(&Expression::parse("x").unwrap(), 0.0, &hs[..2], 1.0).is_err());
        let mut buf = Vec::new();
        cube.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("h,error,fitted_order\n"));
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn classification() {
        let s = ds3(1.5);
        for i in 1..=6 {
            let c = classify_symmetry(&catalog(&format!("X{i}")).unwrap(), &s).unwrap();
            assert_eq!(c.verdict, Verdict::Point, "X{i}: {:?}", c.evidence);
            assert_eq!(c.evidence.j, 1);
            assert_eq!(c.evidence.continuous_limit_match, Some(true));
        }
        let c = classify_symmetry(&catalog("X7d").unwrap(), &s).unwrap();
        assert_eq!(c.verdict, Verdict::ContactInternal, "{:?}", c.evidence);
        assert_eq!(c.evidence.j, 3);
        let q = schemes::catalog("Q2EQ1", 1.5).unwrap();
        let c = classify_symmetry(&catalog("X7d").unwrap(), &q).unwrap();
        assert_eq!(c.verdict, Verdict::NotASymmetry);
    }
}
