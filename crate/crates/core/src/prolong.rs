//! Discrete and continuous prolongation, and restriction to a scheme's
//! solution set.
//!
//! The discrete recursion runs over a stencil of point values. With
//! `Σh = x_{s+k} - x_s` and `Δᵀ` dividing by the step between the leading
//! points,
//!
//! ```text
//! φ⁽ᵏ⁾(s) = k·h_{s+k}/Σh · Δᵀφ⁽ᵏ⁻¹⁾(s) − p⁽ᵏ⁾(s)/Σh · Σ_j h_{s+j} Δᵀξ_{s+j−1}
//! λ⁽ᵏ⁾    = ξ_k − ξ_{k−1}
//! ```
//!
//! and the same for ψ on the v channel. Generalized fields whose
//! coefficients read jet coordinates are handled by evaluating them on
//! shifted windows of a longer stencil.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::{EvalError, Expression};
use crate::fields::{FieldKind, VectorField};
use crate::jets::{Channel, ContCoord, ContJet, Coord, Stencil};
use crate::scalar::{Scalar, Taylor};
use crate::schemes::{Scheme, SchemeError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProlongError {
    #[error("prolongation order must be at least 1")]
    ZeroOrder,
    #[error("stencil has {got} points, prolongation needs {needed}")]
    InsufficientContext { needed: usize, got: usize },
    #[error("continuous jet provides derivatives up to {got}, prolongation needs {needed}")]
    InsufficientJet { needed: usize, got: usize },
    #[error("field `{0}` has discrete jet coefficients; continuous prolongation needs a point or contact field")]
    NotContinuous(String),
    #[error("field `{0}` has continuous jet coefficients; discrete prolongation needs a point or discrete field")]
    NotDiscrete(String),
    #[error("state lacks coordinate `{0}`")]
    MissingCoordinate(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

/// `Δᵀf` at base shift `j`: `[f(j+1) − f(j)] / (x_{j+lead+1} − x_{j+lead})`,
/// where `lead` is the offset of the quantity's leading index from its base
/// (0 for point quantities, `k−1` for `φ⁽ᵏ⁻¹⁾`).
pub fn total_difference<T, F>(f: F, s: &Stencil<T>, j: usize, lead: usize) -> Result<T, ProlongError>
where
    T: Scalar,
    F: Fn(&Stencil<T>, usize) -> Option<T>,
{
    let missing = || ProlongError::InsufficientContext {
        needed: j + lead + 2,
        got: s.len(),
    };
    let step = s.step(j + lead, 1).ok_or_else(missing)?;
    let a = f(s, j).ok_or_else(missing)?;
    let b = f(s, j + 1).ok_or_else(missing)?;
    Ok((b - a) / step)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProlongedField {
    pub base: VectorField,
    pub order: usize,
}

/// Prolongation coefficients at base point 0 of a stencil.
#[derive(Debug, Clone, PartialEq)]
pub struct Prolongation<T> {
    /// `ξ` at sites `0..=K`.
    pub xi: Vec<T>,
    pub phi: Vec<T>,
    pub psi: Option<Vec<T>>,
    /// `λ[k-1] = λ⁽ᵏ⁾`, the coefficient along `h_k`.
    pub lambda: Vec<T>,
    /// `phi_k[k-1] = φ⁽ᵏ⁾`, along `p⁽ᵏ⁾`.
    pub phi_k: Vec<T>,
    pub psi_k: Option<Vec<T>>,
}

impl<T: Scalar> Prolongation<T> {
    pub fn order(&self) -> usize {
        self.lambda.len()
    }

    pub fn coefficient(&self, c: Coord) -> Option<T> {
        let idx = |k: usize| k.checked_sub(1);
        match c {
            Coord::X => self.xi.first().copied(),
            Coord::U => self.phi.first().copied(),
            Coord::V => self.psi.as_ref()?.first().copied(),
            Coord::P(k) => self.phi_k.get(idx(k)?).copied(),
            Coord::Q(k) => self.psi_k.as_ref()?.get(idx(k)?).copied(),
            Coord::H(k) => self.lambda.get(idx(k)?).copied(),
            Coord::XAt(j) => self.xi.get(j).copied(),
            Coord::UAt(j) => self.phi.get(j).copied(),
            Coord::VAt(j) => self.psi.as_ref()?.get(j).copied(),
        }
    }
}

pub fn prolong_discrete(field: &VectorField, order: usize) -> Result<ProlongedField, ProlongError> {
    if order == 0 {
        return Err(ProlongError::ZeroOrder);
    }
    if let FieldKind::Continuous { .. } = field.kind() {
        return Err(ProlongError::NotDiscrete(field.name.clone()));
    }
    Ok(ProlongedField {
        base: field.clone(),
        order,
    })
}

impl ProlongedField {
    /// Stencil points an evaluation needs.
    pub fn required_points(&self) -> usize {
        self.order + 1 + self.base.depth()
    }

    /// `(ξ, φ, ψ)` of the base field on the window starting at `site`. The ψ
    /// slot is filled only when the stencil carries a v channel; a field
    /// without ψ leaves v fixed.
    pub fn base_at<T: Scalar>(&self, s: &Stencil<T>, site: usize) -> Result<(T, T, Option<T>), ProlongError> {
        let look = |n: &str| s.lookup(n, site);
        let xi = self.base.xi.eval_with(&look)?;
        let phi = self.base.phi.eval_with(&look)?;
        let psi = if s.has_v() {
            Some(match &self.base.psi {
                Some(p) => p.eval_with(&look)?,
                None => T::zero(),
            })
        } else {
            None
        };
        Ok((xi, phi, psi))
    }

    pub fn evaluate<T: Scalar>(&self, s: &Stencil<T>) -> Result<Prolongation<T>, ProlongError> {
        let k_max = self.order;
        let needed = self.required_points();
        if s.len() < needed {
            return Err(ProlongError::InsufficientContext { needed, got: s.len() });
        }
        let mut xi = Vec::with_capacity(k_max + 1);
        let mut phi = Vec::with_capacity(k_max + 1);
        let mut psi = s.has_v().then(|| Vec::with_capacity(k_max + 1));
        for site in 0..=k_max {
            let (a, b, c) = self.base_at(s, site)?;
            xi.push(a);
            phi.push(b);
            if let (Some(col), Some(c)) = (psi.as_mut(), c) {
                col.push(c);
            }
        }
        let lambda = (1..=k_max).map(|k| xi[k] - xi[k - 1]).collect();
        let phi_k = recursion(s, Channel::U, &xi, &phi, k_max);
        let psi_k = psi.as_ref().map(|p| recursion(s, Channel::V, &xi, p, k_max));
        Ok(Prolongation {
            xi,
            phi,
            psi,
            lambda,
            phi_k,
            psi_k,
        })
    }
}

/// Runs the recursion on one channel; returns `φ⁽ᵏ⁾` at base 0 for `k = 1..=K`.
fn recursion<T: Scalar>(s: &Stencil<T>, ch: Channel, xi: &[T], base: &[T], k_max: usize) -> Vec<T> {
    let xs = &s.xs;
    let h = |i: usize| xs[i] - xs[i - 1];
    // table[s] holds φ⁽ᵏ⁻¹⁾ at base s
    let mut table: Vec<T> = base.to_vec();
    let mut out = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let kk = T::from_usize(k);
        let mut next = Vec::with_capacity(table.len() - 1);
        for site in 0..table.len() - 1 {
            let sum_h = xs[site + k] - xs[site];
            let d_phi = (table[site + 1] - table[site]) / h(site + k);
            let mut d_xi = T::zero();
            for j in 1..=k {
                d_xi += h(site + j) * ((xi[site + j] - xi[site + j - 1]) / h(site + j));
            }
            let pk = s
                .derivative(ch, site, k)
                .expect("stencil length checked against the recursion depth");
            next.push(kk * h(site + k) / sum_h * d_phi - pk / sum_h * d_xi);
        }
        out.push(next[0]);
        table = next;
    }
    out
}

/// Derivative at `x` of the Newton interpolant with nodes `xs` and
/// discrete derivatives `p` (`p[k-1] = p⁽ᵏ⁾` at the first node).
pub fn newton_slope<T: Scalar>(xs: &[T], p: &[T], x: T) -> T {
    let mut prod = T::one();
    let mut dprod = T::zero();
    let mut fact = T::one();
    let mut acc = T::zero();
    for (k, &pk) in p.iter().enumerate() {
        let d = x - xs[k];
        dprod = dprod * d + prod;
        prod *= d;
        fact *= T::from_usize(k + 1);
        acc += pk / fact * dprod;
    }
    acc
}

/// How [`jet_stencil`] fills the v channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VChannel {
    /// From `v, q1, .., qK` of the state.
    Jet,
    /// The slope of the u interpolant, as on a u-only scheme where `v = u'`.
    Slope,
    Absent,
}

/// True when the base coefficients `ξ, φ` read the v channel.
pub fn reads_v(field: &VectorField) -> bool {
    [&field.xi, &field.phi]
        .iter()
        .any(|e| e.variables().iter().any(|n| n.parse::<Coord>().map(|c| c.uses_v()).unwrap_or(false)))
}

/// Point values from jet coordinates of order `k` (looked up by `get`),
/// extended to at least `npts` points: discrete derivatives beyond `k` are
/// zero and further steps grow by `ratio`.
pub fn jet_stencil<T: Scalar>(
    get: impl Fn(Coord) -> Option<T>,
    k: usize,
    npts: usize,
    ratio: f64,
    v: VChannel,
) -> Result<Stencil<T>, ProlongError> {
    let need = |c: Coord| get(c).ok_or_else(|| ProlongError::MissingCoordinate(c.to_string()));
    let npts = npts.max(k + 1);
    let ratio = T::from_f64(ratio);
    let mut h = (1..=k).map(|i| need(Coord::H(i))).collect::<Result<Vec<_>, _>>()?;
    while h.len() < npts - 1 {
        let last = *h.last().expect("jet order is at least 1");
        h.push(ratio * last);
    }
    let p = (1..=k).map(|i| need(Coord::P(i))).collect::<Result<Vec<_>, _>>()?;
    let (x, u) = (need(Coord::X)?, need(Coord::U)?);
    match v {
        VChannel::Jet => {
            let q = (1..=k).map(|i| need(Coord::Q(i))).collect::<Result<Vec<_>, _>>()?;
            Ok(Stencil::from_jets(x, &h, u, &p, Some((need(Coord::V)?, &q))))
        }
        VChannel::Slope => {
            let mut s = Stencil::from_jets(x, &h, u, &p, None);
            s.vs = Some(s.xs.iter().map(|&xj| newton_slope(&s.xs, &p, xj)).collect());
            Ok(s)
        }
        VChannel::Absent => Ok(Stencil::from_jets(x, &h, u, &p, None)),
    }
}

/// A prolonged field together with the solution-set parameterization of a
/// scheme. States are vectors aligned with [`Scheme::coordinates`].
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedField {
    pub prolonged: ProlongedField,
    pub scheme: Scheme,
}

pub fn restrict(pr: &ProlongedField, scheme: &Scheme) -> Result<RestrictedField, ProlongError> {
    if !scheme.has_solution_map() {
        return Err(SchemeError::MissingCoordinate(format!("substitution map of `{}`", scheme.name)).into());
    }
    Ok(RestrictedField {
        prolonged: ProlongedField {
            base: pr.base.clone(),
            order: scheme.jet_order(),
        },
        scheme: scheme.clone(),
    })
}

impl RestrictedField {
    pub fn coordinates(&self) -> Vec<Coord> {
        self.scheme.coordinates()
    }

    /// Full state from the free coordinates (in [`Scheme::free_coordinates`] order).
    pub fn complete<T: Scalar>(&self, free: &[T]) -> Result<Vec<T>, ProlongError> {
        let names = self.scheme.free_coordinates();
        let mut map: BTreeMap<Coord, T> = names.iter().copied().zip(free.iter().copied()).collect();
        self.scheme.complete(&mut map)?;
        self.coordinates()
            .iter()
            .map(|c| map.get(c).copied().ok_or_else(|| ProlongError::MissingCoordinate(c.to_string())))
            .collect()
    }

    /// Point values reconstructed from a full state; see [`jet_stencil`].
    pub fn stencil<T: Scalar>(&self, state: &[T]) -> Result<Stencil<T>, ProlongError> {
        let coords = self.coordinates();
        let get = |c: Coord| coords.iter().position(|&d| d == c).map(|i| state[i]);
        let v = if self.scheme.uses_v() {
            VChannel::Jet
        } else if reads_v(&self.prolonged.base) {
            VChannel::Slope
        } else {
            VChannel::Absent
        };
        jet_stencil(
            get,
            self.scheme.jet_order(),
            self.prolonged.required_points(),
            self.scheme.lattice_ratio.unwrap_or(1.0),
            v,
        )
    }

    /// Coefficients along every coordinate of the state.
    pub fn evaluate<T: Scalar>(&self, state: &[T]) -> Result<Vec<T>, ProlongError> {
        let s = self.stencil(state)?;
        let pr = self.prolonged.evaluate(&s)?;
        self.coordinates()
            .iter()
            .map(|&c| pr.coefficient(c).ok_or_else(|| ProlongError::MissingCoordinate(c.to_string())))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousProlongedField {
    pub base: VectorField,
    pub order: usize,
}

/// Coefficients of a continuous prolongation at one jet point.
#[derive(Debug, Clone, PartialEq)]
pub struct ContProlongation<T> {
    pub xi: T,
    pub phi: T,
    pub psi: Option<T>,
    /// `phi_k[k-1]` along `u⁽ᵏ⁾`.
    pub phi_k: Vec<T>,
    pub psi_k: Option<Vec<T>>,
}

impl<T: Scalar> ContProlongation<T> {
    pub fn coefficient(&self, c: ContCoord) -> Option<T> {
        match c {
            ContCoord::X => Some(self.xi),
            ContCoord::U => Some(self.phi),
            ContCoord::V => self.psi,
            ContCoord::DU(k) => self.phi_k.get(k.checked_sub(1)?).copied(),
            ContCoord::DV(k) => self.psi_k.as_ref()?.get(k.checked_sub(1)?).copied(),
        }
    }
}

/// Series length for the truncated Taylor arithmetic; bounds `order + field order`.
const SERIES: usize = 12;

pub fn prolong_continuous(field: &VectorField, order: usize) -> Result<ContinuousProlongedField, ProlongError> {
    if order == 0 {
        return Err(ProlongError::ZeroOrder);
    }
    if let FieldKind::Discrete { .. } = field.kind() {
        return Err(ProlongError::NotContinuous(field.name.clone()));
    }
    Ok(ContinuousProlongedField {
        base: field.clone(),
        order,
    })
}

impl ContinuousProlongedField {
    /// Derivative order of the coefficients themselves (1 for contact fields).
    pub fn field_order(&self) -> usize {
        match self.base.kind() {
            FieldKind::Continuous { order } => order,
            _ => 0,
        }
    }

    /// Evaluates along the Taylor curve through `jet`: every coefficient
    /// becomes a series in `x`, so `D_x` is a coefficient shift and the
    /// recursion `φ⁽ᵏ⁺¹⁾ = D_x φ⁽ᵏ⁾ − u⁽ᵏ⁺¹⁾ D_x ξ` is exact up to the jet order.
    pub fn evaluate<T: Scalar>(&self, jet: &ContJet<T>) -> Result<ContProlongation<T>, ProlongError> {
        let needed = self.order + self.field_order();
        if needed + 1 >= SERIES {
            return Err(ProlongError::InsufficientJet { needed, got: SERIES - 2 });
        }
        if jet.du.len() < needed {
            return Err(ProlongError::InsufficientJet {
                needed,
                got: jet.du.len(),
            });
        }
        let with_v = self.base.psi.is_some() && jet.v.is_some();
        if with_v && jet.dv.as_ref().map_or(0, Vec::len) < needed {
            return Err(ProlongError::InsufficientJet {
                needed,
                got: jet.dv.as_ref().map_or(0, Vec::len),
            });
        }
        let curve = |v0: T, d: &[T]| {
            let mut all = vec![v0];
            all.extend_from_slice(d);
            let mut out: Vec<Taylor<T, SERIES>> = vec![Taylor::from_derivatives(&all)];
            for _ in 0..needed + 1 {
                let next = out.last().unwrap().derivative();
                out.push(next);
            }
            out
        };
        let us = curve(jet.u, &jet.du);
        let vs = match (jet.v, &jet.dv) {
            (Some(v), Some(dv)) => Some(curve(v, dv)),
            (Some(v), None) => Some(curve(v, &[])),
            _ => None,
        };
        let x = Taylor::identity_at(jet.x);
        let look = |name: &str| -> Option<Taylor<T, SERIES>> {
            match name.parse::<ContCoord>().ok()? {
                ContCoord::X => Some(x),
                ContCoord::U => Some(us[0]),
                ContCoord::DU(k) => us.get(k).copied(),
                ContCoord::V => vs.as_ref().map(|v| v[0]),
                ContCoord::DV(k) => vs.as_ref()?.get(k).copied(),
            }
        };
        let xi = self.base.xi.eval_with(&look)?;
        let phi = self.base.phi.eval_with(&look)?;
        let dxi = xi.derivative();
        let run = |base: Taylor<T, SERIES>, ys: &[Taylor<T, SERIES>]| {
            let mut cur = base;
            let mut out = Vec::with_capacity(self.order);
            for k in 1..=self.order {
                cur = cur.derivative() - ys[k] * dxi;
                out.push(cur.c[0]);
            }
            out
        };
        let phi_k = run(phi, &us);
        let (psi, psi_k) = match (&self.base.psi, &vs) {
            (Some(p), Some(vs)) if with_v => {
                let ps = p.eval_with(&look)?;
                (Some(ps.c[0]), Some(run(ps, vs)))
            }
            _ => (None, None),
        };
        Ok(ContProlongation {
            xi: xi.c[0],
            phi: phi.c[0],
            psi,
            phi_k,
            psi_k,
        })
    }
}

/// `Σ_c coefficient(c) · ∂F/∂c` over the coordinates `F` reads.
pub fn apply_to<T, C>(f: &Expression, value: impl Fn(&str) -> Option<T>, coeff: C) -> Result<T, ProlongError>
where
    T: Scalar,
    C: Fn(&str) -> Option<T>,
{
    let vars: Vec<String> = f.variables().into_iter().collect();
    let names: Vec<&str> = vars.iter().map(String::as_str).collect();
    let (_, grad) = f.eval_gradient(&value, &names)?;
    let mut acc = T::zero();
    for (name, g) in names.iter().zip(grad) {
        let c = coeff(name).ok_or_else(|| ProlongError::MissingCoordinate(name.to_string()))?;
        acc += c * g;
    }
    Ok(acc)
}
