//! Vector fields `ξ ∂x + φ ∂u + ψ ∂v`, the field catalog, Lie brackets and
//! decomposition of brackets in a basis.
//!
//! Point fields have coefficients in `{x, u, v}` only. Generalized fields
//! (such as the discrete contact field `X7d`) have coefficients on discrete
//! jet coordinates; continuous contact fields use `ux, uxx, ..`.
//!
//! Brackets are evaluated pointwise: `[X, Y]^i = X(Y^i) - Y(X^i)` with the
//! partials taken by forward-mode duals. Since every evaluator is generic in
//! the scalar, a bracket can itself be differentiated, which is what the
//! Jacobi identity check needs.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{EvalError, Expression, ParseError};
use crate::jets::{ContCoord, Coord};
use crate::scalar::{Dual, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("field `{field}`: cannot parse `{text}`: {source}")]
    Parse {
        field: String,
        text: String,
        source: ParseError,
    },
    #[error("field `{field}` references `{name}`, which is not a jet coordinate")]
    UnknownCoordinate { field: String, name: String },
    #[error("field `{0}` mixes discrete and continuous jet coordinates")]
    MixedCoordinates(String),
    #[error("field `{0}` is not a point field")]
    NotPointField(String),
    #[error("fields `{0}` and `{1}` act on different variable sets")]
    MismatchedVariables(String, String),
    #[error("sample design has rank {rank}, need {needed}")]
    RankDeficient { rank: usize, needed: usize },
    #[error("field values and samples differ in length ({0} vs {1})")]
    SampleMismatch(usize, usize),
    #[error("evaluation: {0}")]
    Eval(#[from] EvalError),
    #[error("json: {0}")]
    Json(String),
}

/// Where a field's coefficients live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Point,
    /// Coefficients on discrete jet coordinates reaching `depth` sites ahead.
    Discrete { depth: usize },
    /// Coefficients on continuous jet coordinates up to derivative `order`.
    Continuous { order: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub name: String,
    pub xi: Expression,
    pub phi: Expression,
    pub psi: Option<Expression>,
    /// Declared coefficients along jet coordinates, e.g. a prolongation
    /// transcribed by hand. They are compared against the recursion, never
    /// used in its place.
    pub jet_coeffs: Option<BTreeMap<String, Expression>>,
    kind: FieldKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FieldFile {
    name: String,
    xi: String,
    phi: String,
    psi: Option<String>,
    #[serde(default)]
    jet_coeffs: Option<BTreeMap<String, String>>,
}

fn classify(name: &str, exprs: &[&Expression]) -> Result<FieldKind, FieldError> {
    let mut discrete = 0usize;
    let mut continuous = 0usize;
    let mut saw_discrete = false;
    let mut saw_continuous = false;
    for e in exprs {
        for v in e.variables() {
            if matches!(v.as_str(), "x" | "u" | "v") {
                continue;
            }
            if let Ok(c) = v.parse::<Coord>() {
                saw_discrete = true;
                discrete = discrete.max(c.depth());
            } else if let Ok(c) = v.parse::<ContCoord>() {
                saw_continuous = true;
                if let ContCoord::DU(k) | ContCoord::DV(k) = c {
                    continuous = continuous.max(k);
                }
            } else {
                return Err(FieldError::UnknownCoordinate {
                    field: name.to_string(),
                    name: v,
                });
            }
        }
    }
    match (saw_discrete, saw_continuous) {
        (false, false) => Ok(FieldKind::Point),
        (true, false) => Ok(FieldKind::Discrete { depth: discrete }),
        (false, true) => Ok(FieldKind::Continuous { order: continuous }),
        (true, true) => Err(FieldError::MixedCoordinates(name.to_string())),
    }
}

fn parse_expr(field: &str, text: &str) -> Result<Expression, FieldError> {
    Expression::parse(text).map_err(|source| FieldError::Parse {
        field: field.to_string(),
        text: text.to_string(),
        source,
    })
}

impl VectorField {
    pub fn new(
        name: &str,
        xi: Expression,
        phi: Expression,
        psi: Option<Expression>,
    ) -> Result<Self, FieldError> {
        let mut exprs = vec![&xi, &phi];
        if let Some(p) = &psi {
            exprs.push(p);
        }
        let kind = classify(name, &exprs)?;
        Ok(VectorField {
            name: name.to_string(),
            xi,
            phi,
            psi,
            jet_coeffs: None,
            kind,
        })
    }

    pub fn parse(name: &str, xi: &str, phi: &str, psi: Option<&str>) -> Result<Self, FieldError> {
        let psi = psi.map(|p| parse_expr(name, p)).transpose()?;
        Self::new(name, parse_expr(name, xi)?, parse_expr(name, phi)?, psi)
    }

    pub fn with_jet_coeffs(mut self, coeffs: BTreeMap<String, Expression>) -> Result<Self, FieldError> {
        for (k, e) in &coeffs {
            if k.parse::<Coord>().is_err() && k.parse::<ContCoord>().is_err() {
                return Err(FieldError::UnknownCoordinate {
                    field: self.name.clone(),
                    name: k.clone(),
                });
            }
            classify(&self.name, &[e])?;
        }
        self.jet_coeffs = Some(coeffs);
        Ok(self)
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn is_point(&self) -> bool {
        self.kind == FieldKind::Point
    }

    /// Sites past the base point the base coefficients reach (0 for point fields).
    pub fn depth(&self) -> usize {
        match self.kind {
            FieldKind::Discrete { depth } => depth,
            _ => 0,
        }
    }

    /// True when the field acts on `v` or its coefficients read the v channel.
    pub fn uses_v(&self) -> bool {
        if self.psi.is_some() {
            return true;
        }
        [&self.xi, &self.phi].iter().any(|e| {
            e.variables().iter().any(|n| {
                n.parse::<Coord>().map(|c| c.uses_v()).unwrap_or(false)
                    || matches!(n.parse::<ContCoord>(), Ok(ContCoord::V | ContCoord::DV(_)))
            })
        })
    }

    pub fn from_json(text: &str) -> Result<Self, FieldError> {
        let f: FieldFile = serde_json::from_str(text).map_err(|e| FieldError::Json(e.to_string()))?;
        let field = VectorField::parse(&f.name, &f.xi, &f.phi, f.psi.as_deref())?;
        match f.jet_coeffs {
            Some(map) => {
                let coeffs = map
                    .iter()
                    .map(|(k, v)| Ok((k.clone(), parse_expr(&f.name, v)?)))
                    .collect::<Result<BTreeMap<_, _>, FieldError>>()?;
                field.with_jet_coeffs(coeffs)
            }
            None => Ok(field),
        }
    }

    pub fn to_json(&self) -> String {
        let f = FieldFile {
            name: self.name.clone(),
            xi: self.xi.to_string(),
            phi: self.phi.to_string(),
            psi: self.psi.as_ref().map(|p| p.to_string()),
            jet_coeffs: self
                .jet_coeffs
                .as_ref()
                .map(|m| m.iter().map(|(k, v)| (k.clone(), v.to_string())).collect()),
        };
        serde_json::to_string_pretty(&f).expect("field file serializes")
    }

    /// `Σ a_i X_i` built symbolically.
    pub fn linear_combination(name: &str, terms: &[(f64, &VectorField)]) -> Result<Self, FieldError> {
        let mut xi = Expression::num(0.0);
        let mut phi = Expression::num(0.0);
        let mut psi = Expression::num(0.0);
        let mut any_psi = false;
        for (a, f) in terms {
            xi = xi + Expression::num(*a) * f.xi.clone();
            phi = phi + Expression::num(*a) * f.phi.clone();
            if let Some(p) = &f.psi {
                any_psi = true;
                psi = psi + Expression::num(*a) * p.clone();
            }
        }
        VectorField::new(name, xi, phi, any_psi.then_some(psi))
    }

    /// `(ξ, φ, ψ)` of a point field at `(x, u, v)`; a missing ψ is zero.
    pub fn point_coefficients<T: Scalar>(&self, x: T, u: T, v: T) -> Result<[T; 3], FieldError> {
        if !self.is_point() {
            return Err(FieldError::NotPointField(self.name.clone()));
        }
        let look = |n: &str| match n {
            "x" => Some(x),
            "u" => Some(u),
            "v" => Some(v),
            _ => None,
        };
        let psi = match &self.psi {
            Some(p) => p.eval_with(&look)?,
            None => T::zero(),
        };
        Ok([self.xi.eval_with(&look)?, self.phi.eval_with(&look)?, psi])
    }

    fn variable_set(&self) -> usize {
        let refs_v = [&self.xi, &self.phi].iter().any(|e| e.variables().contains("v"));
        if self.psi.is_some() || refs_v {
            3
        } else {
            2
        }
    }
}

/// Anything that can be evaluated as a point field on `(x, u, v)`.
pub trait PointVectorField {
    fn eval<T: Scalar>(&self, p: [T; 3]) -> Result<[T; 3], FieldError>;
}

impl PointVectorField for VectorField {
    fn eval<T: Scalar>(&self, p: [T; 3]) -> Result<[T; 3], FieldError> {
        self.point_coefficients(p[0], p[1], p[2])
    }
}

impl<F: PointVectorField> PointVectorField for &F {
    fn eval<T: Scalar>(&self, p: [T; 3]) -> Result<[T; 3], FieldError> {
        (*self).eval(p)
    }
}

/// The bracket `[a, b]` as an evaluable field.
pub struct Bracket<A, B> {
    pub a: A,
    pub b: B,
}

impl<A: PointVectorField, B: PointVectorField> PointVectorField for Bracket<A, B> {
    fn eval<T: Scalar>(&self, p: [T; 3]) -> Result<[T; 3], FieldError> {
        let (va, ja) = jacobian(&self.a, p)?;
        let (vb, jb) = jacobian(&self.b, p)?;
        let mut out = [T::zero(); 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i] += va[j] * jb[i][j] - vb[j] * ja[i][j];
            }
        }
        Ok(out)
    }
}

/// Values and `J[i][j] = ∂_j f^i`.
#[allow(clippy::type_complexity)]
fn jacobian<F: PointVectorField, T: Scalar>(f: &F, p: [T; 3]) -> Result<([T; 3], [[T; 3]; 3]), FieldError> {
    let mut jac = [[T::zero(); 3]; 3];
    let mut val = [T::zero(); 3];
    for j in 0..3 {
        let mut dp = [Dual::constant(p[0]), Dual::constant(p[1]), Dual::constant(p[2])];
        dp[j] = Dual::variable(p[j]);
        let r = f.eval(dp)?;
        for i in 0..3 {
            jac[i][j] = r[i].eps;
            val[i] = r[i].re;
        }
    }
    Ok((val, jac))
}

/// `[X, Y]` coefficient values at `sample = (x, u, v)`.
pub fn lie_bracket(x: &VectorField, y: &VectorField, sample: [f64; 3]) -> Result<[f64; 3], FieldError> {
    for f in [x, y] {
        if !f.is_point() {
            return Err(FieldError::NotPointField(f.name.clone()));
        }
    }
    if x.variable_set() != y.variable_set() {
        return Err(FieldError::MismatchedVariables(x.name.clone(), y.name.clone()));
    }
    Bracket { a: x, b: y }.eval(sample)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureDecomposition {
    pub coefficients: Vec<f64>,
    /// Max over samples and components of `|field - Σ c_i basis_i|`.
    pub residual: f64,
}

/// Least-squares coefficients of `values` (one `[ξ, φ, ψ]` per sample) in the
/// span of `basis`.
pub fn decompose_in_basis(
    values: &[[f64; 3]],
    basis: &[VectorField],
    samples: &[[f64; 3]],
) -> Result<StructureDecomposition, FieldError> {
    if values.len() != samples.len() {
        return Err(FieldError::SampleMismatch(values.len(), samples.len()));
    }
    let rows = 3 * samples.len();
    let cols = basis.len();
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    let mut b = DVector::<f64>::zeros(rows);
    for (s, sample) in samples.iter().enumerate() {
        for (j, f) in basis.iter().enumerate() {
            let c = f.eval(*sample)?;
            for i in 0..3 {
                a[(3 * s + i, j)] = c[i];
            }
        }
        for i in 0..3 {
            b[3 * s + i] = values[s][i];
        }
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let thresh = rows.max(cols) as f64 * smax * 1e-10;
    let rank = svd.singular_values.iter().filter(|&&s| s > thresh).count();
    if rank < cols {
        return Err(FieldError::RankDeficient { rank, needed: cols });
    }
    let c = svd
        .solve(&b, thresh)
        .map_err(|e| FieldError::Json(format!("least squares failed: {e}")))?;
    let fit = &a * &c;
    let residual = (fit - b).amax();
    Ok(StructureDecomposition {
        coefficients: c.iter().copied().collect(),
        residual,
    })
}

/// Decomposes `[X, Y]` in `basis` over `samples`.
pub fn decompose_bracket(
    x: &VectorField,
    y: &VectorField,
    basis: &[VectorField],
    samples: &[[f64; 3]],
) -> Result<StructureDecomposition, FieldError> {
    let values = samples
        .iter()
        .map(|s| lie_bracket(x, y, *s))
        .collect::<Result<Vec<_>, _>>()?;
    decompose_in_basis(&values, basis, samples)
}

/// Seeded samples in `[-2, 2]^3` with `|v| >= 0.1`.
pub fn bracket_samples(count: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p: [f64; 3] = [
            rng.gen_range(-2.0..=2.0),
            rng.gen_range(-2.0..=2.0),
            rng.gen_range(-2.0..=2.0),
        ];
        if p[2].abs() >= 0.1 {
            out.push(p);
        }
    }
    out
}

pub const CATALOG_NAMES: [&str; 11] = ["X1", "X2", "X3", "X4", "X5", "X6", "X7", "X8", "X9", "X10", "X7d"];

/// The symmetry algebra of `u' = v, v'' = 0` (`X1..X10`) and the discrete
/// contact field `X7d`, whose characteristic `p1 - h1 p2 / 2` plays the role
/// of `v = u'` in `X7 / 2`.
pub fn catalog(name: &str) -> Result<VectorField, FieldError> {
    let (xi, phi, psi) = match name {
        "X1" => ("0", "1", Some("0")),
        "X2" => ("0", "x", Some("1")),
        "X3" => ("1", "0", Some("0")),
        "X4" => ("0", "x^2", Some("2*x")),
        "X5" => ("x", "0", Some("-v")),
        "X6" => ("0", "u", Some("v")),
        "X7" => ("2*v", "v^2", Some("0")),
        "X8" => ("x^2", "2*x*u", Some("2*u")),
        "X9" => ("2*(x*v - u)", "x*v^2", Some("v^2")),
        "X10" => ("2*x*(2*u - x*v)", "4*u^2 - x^2*v^2", Some("2*v*(2*u - x*v)")),
        "X7d" => ("p1 - h1*p2/2", "(p1 - h1*p2/2)^2/2", None),
        _ => return Err(FieldError::UnknownField(name.to_string())),
    };
    VectorField::parse(name, xi, phi, psi)
}

/// `L0 = {X1..X7}`, `L = {X1..X10}`, or a comma-separated list of catalog names.
pub fn algebra(spec: &str) -> Result<Vec<VectorField>, FieldError> {
    let names: Vec<String> = match spec {
        "L0" => (1..=7).map(|i| format!("X{i}")).collect(),
        "L" => (1..=10).map(|i| format!("X{i}")).collect(),
        other => other.split(',').map(|s| s.trim().to_string()).collect(),
    };
    names.iter().map(|n| catalog(n)).collect()
}

/// Hand-transcribed prolongation coefficients of `X1..X7` along
/// `(p1, q1, p2, q2, h1, h2)`; coordinates not listed are zero.
pub fn printed_prolongation(name: &str) -> Result<BTreeMap<Coord, Expression>, FieldError> {
    let entries: &[(&str, &str)] = match name {
        "X1" | "X3" => &[],
        "X2" => &[("p1", "1")],
        "X4" => &[("p1", "2*x + h1"), ("q1", "2"), ("p2", "2")],
        "X5" => &[
            ("p1", "-p1"),
            ("q1", "-2*q1"),
            ("p2", "-2*p2"),
            ("q2", "-3*q2"),
            ("h1", "h1"),
            ("h2", "h2"),
        ],
        "X6" => &[("p1", "p1"), ("q1", "q1"), ("p2", "p2"), ("q2", "q2")],
        "X7" => &[
            ("h1", "2*h1*q1"),
            ("h2", "2*h2*(q1 + (h1 + h2)/2*q2)"),
            ("p1", "2*v*q1 - 2*p1*q1 + h1*q1^2"),
            ("q1", "-2*q1^2"),
            (
                "p2",
                "2*q1*q2*h1 - h1*p2*q2 + 1/2*q2^2*h2^2 + 2*q1^2 + 2*v*q2 + 2*q1*q2*h2 \
                 - 2*h2*p2*q2 + 1/2*q2^2*h2*h1 - 4*p2*q1 - 2*p1*q2",
            ),
            ("q2", "-h1*q2^2 - 2*h2*q2^2 - 6*q1*q2"),
        ],
        _ => return Err(FieldError::UnknownField(name.to_string())),
    };
    let mut out = BTreeMap::new();
    for c in ["p1", "q1", "p2", "q2", "h1", "h2"] {
        out.insert(c.parse::<Coord>().unwrap(), Expression::num(0.0));
    }
    for (c, text) in entries {
        out.insert(c.parse::<Coord>().unwrap(), parse_expr(name, text)?);
    }
    Ok(out)
}

/// Formal `h → 0` limit of a discrete field: `p^(k) → u^(k)`, `q^(k) → v^(k)`,
/// `h_k → 0`. With `eliminate_v`, `v^(k) → u^(k+1)` as well, the substitution
/// that turns the system back into a single equation for `u`, and ψ is dropped.
pub fn continuous_limit(field: &VectorField, eliminate_v: bool) -> Result<VectorField, FieldError> {
    let mut names = std::collections::BTreeSet::new();
    for e in [Some(&field.xi), Some(&field.phi), field.psi.as_ref()].into_iter().flatten() {
        names.extend(e.variables());
    }
    let mut map = BTreeMap::new();
    let u_deriv = |k: usize| Expression::var(&format!("u{}", "x".repeat(k)));
    for n in &names {
        let repl = match n.parse::<Coord>() {
            Ok(Coord::X) | Ok(Coord::U) => continue,
            Ok(Coord::V) => {
                if eliminate_v {
                    u_deriv(1)
                } else {
                    continue;
                }
            }
            Ok(Coord::P(k)) => u_deriv(k),
            Ok(Coord::Q(k)) => {
                if eliminate_v {
                    u_deriv(k + 1)
                } else {
                    Expression::var(&format!("v{}", "x".repeat(k)))
                }
            }
            Ok(Coord::H(_)) => Expression::num(0.0),
            _ => match n.parse::<ContCoord>() {
                Ok(ContCoord::DV(k)) if eliminate_v => u_deriv(k + 1),
                Ok(_) => continue,
                Err(_) => {
                    return Err(FieldError::UnknownCoordinate {
                        field: field.name.clone(),
                        name: n.clone(),
                    })
                }
            },
        };
        map.insert(n.clone(), repl);
    }
    let psi = if eliminate_v {
        None
    } else {
        field.psi.as_ref().map(|p| p.substitute(&map))
    };
    VectorField::new(
        &format!("{}_limit", field.name),
        field.xi.substitute(&map).simplify(),
        field.phi.substitute(&map).simplify(),
        psi.map(|p| p.simplify()),
    )
}
