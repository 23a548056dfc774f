//! Discrete jet spaces.
//!
//! A point of the discrete jet space at base index `n` is
//! `(x_n, u_n, v_n, p^(k)_{n+k}, q^(k)_{n+k}, h_{n+k})`, where
//! `h_{n+k} = x_{n+k} - x_{n+k-1}` and
//!
//! ```text
//! p^(1)_{n+1} = (u_{n+1} - u_n) / (x_{n+1} - x_n)
//! p^(k)_{n+k} = k (p^(k-1)_{n+k} - p^(k-1)_{n+k-1}) / (x_{n+k} - x_n)
//! ```
//!
//! so `p^(k)` is `k!` times the k-th Newton divided difference of `u` on
//! `x_n..x_{n+k}` (same for `q` on `v`).
//!
//! Jet coordinates are addressed by name: `x, u, v, p1.., q1.., h1..` at the
//! base point, `x_0, u_0, v_0, x_1, ...` for raw stencil values, and
//! `ux, uxx, .., vx, ..` for continuous jets.

use std::fmt;
use std::io::{Read, Write};
use std::ops::{Add, Div, Mul, Sub};
use std::str::FromStr;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("step h0 and ratio c must be positive (h0 = {h0}, c = {c})")]
    NonPositiveStep { h0: f64, c: f64 },
    #[error("need at least {need} points, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("duplicate abscissae at indices {0} and {1}")]
    DuplicateAbscissa(usize, usize),
    #[error("abscissae must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("channel lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("trajectory has no v channel")]
    MissingV,
    #[error("index {index} with order {order} is out of range for {len} points")]
    OutOfRange { index: usize, order: usize, len: usize },
    #[error("order must be at least 1")]
    ZeroOrder,
    #[error("csv: {0}")]
    Csv(String),
}

/// The arithmetic a divided-difference table needs. Blanket-implemented,
/// so floats, duals and exact rationals all qualify.
pub trait FieldOps:
    Clone + Zero + One + PartialEq + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
}

impl<T> FieldOps for T where
    T: Clone + Zero + One + PartialEq + Sub<Output = T> + Mul<Output = T> + Div<Output = T>
{
}

fn small_int<T: FieldOps + Add<Output = T>>(k: usize) -> T {
    (0..k).fold(T::zero(), |a, _| a + T::one())
}

/// Classical recursive Newton divided difference `[x_0, ..., x_k] y`.
pub fn divided_difference<T>(xs: &[T], ys: &[T], k: usize) -> Result<T, JetError>
where
    T: FieldOps,
{
    if xs.len() < k + 1 || ys.len() < k + 1 {
        return Err(JetError::TooShort {
            need: k + 1,
            got: xs.len().min(ys.len()),
        });
    }
    for i in 0..=k {
        for j in (i + 1)..=k {
            if (xs[j].clone() - xs[i].clone()).is_zero() {
                return Err(JetError::DuplicateAbscissa(i, j));
            }
        }
    }
    let mut col: Vec<T> = ys[..=k].to_vec();
    for level in 1..=k {
        for i in 0..=(k - level) {
            col[i] = (col[i + 1].clone() - col[i].clone())
                / (xs[i + level].clone() - xs[i].clone());
        }
    }
    Ok(col[0].clone())
}

/// Discrete derivatives of `ys` on `xs` up to `order`.
///
/// `out[k-1][n]` is `p^(k)_{n+k}` (uses points `n..=n+k`), so level `k` has
/// `len - k` entries.
pub fn difference_table<T>(xs: &[T], ys: &[T], order: usize) -> Result<Vec<Vec<T>>, JetError>
where
    T: FieldOps + Add<Output = T>,
{
    if order == 0 {
        return Err(JetError::ZeroOrder);
    }
    if xs.len() != ys.len() {
        return Err(JetError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < order + 1 {
        return Err(JetError::TooShort {
            need: order + 1,
            got: xs.len(),
        });
    }
    let mut levels: Vec<Vec<T>> = Vec::with_capacity(order);
    let mut prev: Vec<T> = ys.to_vec();
    for k in 1..=order {
        let kk: T = small_int(k);
        let mut cur = Vec::with_capacity(prev.len() - 1);
        for n in 0..prev.len() - 1 {
            let span = xs[n + k].clone() - xs[n].clone();
            if span.is_zero() {
                return Err(JetError::DuplicateAbscissa(n, n + k));
            }
            let diff = prev[n + 1].clone() - prev[n].clone();
            // level 1 has no factor k; afterwards p^(k) = k Δp^(k-1) / span
            cur.push(if k == 1 { diff / span } else { kk.clone() * diff / span });
        }
        levels.push(cur.clone());
        prev = cur;
    }
    Ok(levels)
}

/// A geometric lattice `x_{k+1} = x_k + h0 c^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice<T> {
    pub x0: T,
    pub h0: T,
    pub c: T,
    pub count: usize,
}

impl<T: Scalar> Lattice<T> {
    pub fn new(x0: T, h0: T, c: T, count: usize) -> Result<Self, JetError> {
        if !(h0.value() > 0.0) || !(c.value() > 0.0) {
            return Err(JetError::NonPositiveStep {
                h0: h0.value(),
                c: c.value(),
            });
        }
        if count < 2 {
            return Err(JetError::TooShort { need: 2, got: count });
        }
        Ok(Lattice { x0, h0, c, count })
    }

    /// Points by accumulation, so consecutive steps have ratio exactly `c`
    /// up to the rounding of one multiplication.
    pub fn points(&self) -> Vec<T> {
        let mut xs = Vec::with_capacity(self.count);
        let mut x = self.x0;
        let mut h = self.h0;
        xs.push(x);
        for _ in 1..self.count {
            x += h;
            xs.push(x);
            h *= self.c;
        }
        xs
    }
}

pub fn geometric_lattice<T: Scalar>(x0: T, h0: T, c: T, count: usize) -> Result<Vec<T>, JetError> {
    Ok(Lattice::new(x0, h0, c, count)?.points())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    U,
    V,
}

/// Raw point values on consecutive lattice sites, the context every
/// prolongation evaluator consumes. No ordering is enforced here; see
/// [`Trajectory`] for the validated form.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil<T> {
    pub xs: Vec<T>,
    pub us: Vec<T>,
    pub vs: Option<Vec<T>>,
}

/// Discrete jet coordinate names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coord {
    X,
    U,
    V,
    P(usize),
    Q(usize),
    H(usize),
    XAt(usize),
    UAt(usize),
    VAt(usize),
}

impl Coord {
    /// How many lattice sites past the base point the coordinate reaches.
    pub fn depth(self) -> usize {
        match self {
            Coord::X | Coord::U | Coord::V => 0,
            Coord::P(k) | Coord::Q(k) | Coord::H(k) => k,
            Coord::XAt(j) | Coord::UAt(j) | Coord::VAt(j) => j,
        }
    }

    pub fn uses_v(self) -> bool {
        matches!(self, Coord::V | Coord::Q(_) | Coord::VAt(_))
    }
}

impl FromStr for Coord {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "x" => return Ok(Coord::X),
            "u" => return Ok(Coord::U),
            "v" => return Ok(Coord::V),
            _ => {}
        }
        if let Some((base, idx)) = s.split_once('_') {
            let j: usize = idx.parse().map_err(|_| ())?;
            return match base {
                "x" => Ok(Coord::XAt(j)),
                "u" => Ok(Coord::UAt(j)),
                "v" => Ok(Coord::VAt(j)),
                _ => Err(()),
            };
        }
        let (head, tail) = s.split_at(1);
        if tail.is_empty() || !tail.bytes().all(|b| b.is_ascii_digit()) || tail.starts_with('0') {
            return Err(());
        }
        let k: usize = tail.parse().map_err(|_| ())?;
        match head {
            "p" => Ok(Coord::P(k)),
            "q" => Ok(Coord::Q(k)),
            "h" => Ok(Coord::H(k)),
            _ => Err(()),
        }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coord::X => write!(f, "x"),
            Coord::U => write!(f, "u"),
            Coord::V => write!(f, "v"),
            Coord::P(k) => write!(f, "p{k}"),
            Coord::Q(k) => write!(f, "q{k}"),
            Coord::H(k) => write!(f, "h{k}"),
            Coord::XAt(j) => write!(f, "x_{j}"),
            Coord::UAt(j) => write!(f, "u_{j}"),
            Coord::VAt(j) => write!(f, "v_{j}"),
        }
    }
}

impl<T: Scalar> Stencil<T> {
    pub fn new(xs: Vec<T>, us: Vec<T>, vs: Option<Vec<T>>) -> Result<Self, JetError> {
        if xs.len() != us.len() {
            return Err(JetError::LengthMismatch(xs.len(), us.len()));
        }
        if let Some(v) = &vs {
            if v.len() != xs.len() {
                return Err(JetError::LengthMismatch(xs.len(), v.len()));
            }
        }
        Ok(Stencil { xs, us, vs })
    }

    /// Rebuilds point values from jet data at the base point by the Newton
    /// form: `x_j = x + h_1 + .. + h_j`,
    /// `u_j = u + Σ_k p^(k)/k! Π_{i<k} (x_j - x_i)`.
    ///
    /// `h` fixes the number of points (`h.len() + 1`); missing `p`/`q`
    /// orders are treated as zero.
    pub fn from_jets(x: T, h: &[T], u: T, p: &[T], v: Option<(T, &[T])>) -> Self {
        let mut xs = Vec::with_capacity(h.len() + 1);
        xs.push(x);
        for &step in h {
            let last = *xs.last().unwrap();
            xs.push(last + step);
        }
        let us = newton_values(&xs, u, p);
        let vs = v.map(|(v0, q)| newton_values(&xs, v0, q));
        Stencil { xs, us, vs }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn has_v(&self) -> bool {
        self.vs.is_some()
    }

    /// The sub-stencil starting at `offset`.
    pub fn shifted(&self, offset: usize) -> Stencil<T> {
        Stencil {
            xs: self.xs[offset..].to_vec(),
            us: self.us[offset..].to_vec(),
            vs: self.vs.as_ref().map(|v| v[offset..].to_vec()),
        }
    }

    pub fn step(&self, offset: usize, k: usize) -> Option<T> {
        let i = offset + k;
        if k == 0 || i >= self.xs.len() {
            return None;
        }
        Some(self.xs[i] - self.xs[i - 1])
    }

    /// `p^(k)` (or `q^(k)`) with base point `offset`.
    pub fn derivative(&self, channel: Channel, offset: usize, k: usize) -> Option<T> {
        if offset + k >= self.xs.len() {
            return None;
        }
        let ys = match channel {
            Channel::U => &self.us,
            Channel::V => self.vs.as_ref()?,
        };
        if k == 0 {
            return Some(ys[offset]);
        }
        let xs = &self.xs[offset..=offset + k];
        let table = difference_table(xs, &ys[offset..=offset + k], k).ok()?;
        Some(table[k - 1][0])
    }

    /// Value of a jet coordinate with base point `offset`.
    pub fn coord(&self, c: Coord, offset: usize) -> Option<T> {
        match c {
            Coord::X => self.xs.get(offset).copied(),
            Coord::U => self.us.get(offset).copied(),
            Coord::V => self.vs.as_ref()?.get(offset).copied(),
            Coord::P(k) => self.derivative(Channel::U, offset, k),
            Coord::Q(k) => self.derivative(Channel::V, offset, k),
            Coord::H(k) => self.step(offset, k),
            Coord::XAt(j) => self.xs.get(offset + j).copied(),
            Coord::UAt(j) => self.us.get(offset + j).copied(),
            Coord::VAt(j) => self.vs.as_ref()?.get(offset + j).copied(),
        }
    }

    /// Name-based lookup, for expression evaluation.
    pub fn lookup(&self, name: &str, offset: usize) -> Option<T> {
        self.coord(name.parse().ok()?, offset)
    }

    pub fn jet(&self, offset: usize, order: usize) -> Result<JetPoint<T>, JetError> {
        if order == 0 {
            return Err(JetError::ZeroOrder);
        }
        if offset + order >= self.xs.len() {
            return Err(JetError::OutOfRange {
                index: offset,
                order,
                len: self.xs.len(),
            });
        }
        let end = offset + order;
        let xs = &self.xs[offset..=end];
        let p = difference_table(xs, &self.us[offset..=end], order)?
            .into_iter()
            .map(|l| l[0])
            .collect();
        let q = match &self.vs {
            Some(vs) => Some(
                difference_table(xs, &vs[offset..=end], order)?
                    .into_iter()
                    .map(|l| l[0])
                    .collect(),
            ),
            None => None,
        };
        let h = (1..=order).map(|k| xs[k] - xs[k - 1]).collect();
        Ok(JetPoint {
            n: offset,
            order,
            x: xs[0],
            u: self.us[offset],
            v: self.vs.as_ref().map(|v| v[offset]),
            p,
            q,
            h,
        })
    }
}

fn newton_values<T: Scalar>(xs: &[T], base: T, derivs: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(xs.len());
    for &xj in xs {
        let mut acc = base;
        let mut prod = T::one();
        let mut fact = T::one();
        for (k, &dk) in derivs.iter().enumerate().take(xs.len() - 1) {
            prod *= xj - xs[k];
            fact *= T::from_usize(k + 1);
            acc += dk / fact * prod;
        }
        out.push(acc);
    }
    out
}

/// A sampled candidate solution: strictly increasing abscissae with one or
/// two channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    points: Stencil<T>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn new(xs: Vec<T>, us: Vec<T>, vs: Option<Vec<T>>) -> Result<Self, JetError> {
        let points = Stencil::new(xs, us, vs)?;
        if points.len() < 2 {
            return Err(JetError::TooShort {
                need: 2,
                got: points.len(),
            });
        }
        for i in 1..points.len() {
            let (a, b) = (points.xs[i - 1].value(), points.xs[i].value());
            if a == b {
                return Err(JetError::DuplicateAbscissa(i - 1, i));
            }
            if !(b > a) {
                return Err(JetError::NotIncreasing(i));
            }
        }
        Ok(Trajectory { points })
    }

    /// Samples `u` (and optionally `v`) at the given abscissae.
    pub fn from_fn<F, G>(xs: Vec<T>, u: F, v: Option<G>) -> Result<Self, JetError>
    where
        F: Fn(T) -> T,
        G: Fn(T) -> T,
    {
        let us = xs.iter().map(|&x| u(x)).collect();
        let vs = v.map(|g| xs.iter().map(|&x| g(x)).collect());
        Trajectory::new(xs, us, vs)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn xs(&self) -> &[T] {
        &self.points.xs
    }

    pub fn us(&self) -> &[T] {
        &self.points.us
    }

    pub fn vs(&self) -> Option<&[T]> {
        self.points.vs.as_deref()
    }

    pub fn stencil(&self) -> &Stencil<T> {
        &self.points
    }

    pub fn with_v(self, vs: Vec<T>) -> Result<Self, JetError> {
        Trajectory::new(self.points.xs, self.points.us, Some(vs))
    }

    pub fn jet_at(&self, n: usize, order: usize) -> Result<JetPoint<T>, JetError> {
        self.points.jet(n, order)
    }
}

/// `out[k-1][n] = p^(k)_{n+k}` for the chosen channel.
pub fn discrete_derivatives<T: Scalar>(
    t: &Trajectory<T>,
    channel: Channel,
    order: usize,
) -> Result<Vec<Vec<T>>, JetError> {
    let ys = match channel {
        Channel::U => t.us(),
        Channel::V => t.vs().ok_or(JetError::MissingV)?,
    };
    difference_table(t.xs(), ys, order)
}

pub fn jet_at<T: Scalar>(t: &Trajectory<T>, n: usize, order: usize) -> Result<JetPoint<T>, JetError> {
    t.jet_at(n, order)
}

/// One point of the discrete jet space.
#[derive(Debug, Clone, PartialEq)]
pub struct JetPoint<T> {
    pub n: usize,
    pub order: usize,
    pub x: T,
    pub u: T,
    pub v: Option<T>,
    /// `p[k-1] = p^(k)_{n+k}`
    pub p: Vec<T>,
    pub q: Option<Vec<T>>,
    /// `h[k-1] = h_{n+k}`
    pub h: Vec<T>,
}

impl<T: Scalar> JetPoint<T> {
    pub fn get(&self, c: Coord) -> Option<T> {
        match c {
            Coord::X => Some(self.x),
            Coord::U => Some(self.u),
            Coord::V => self.v,
            Coord::P(k) => self.p.get(k.checked_sub(1)?).copied(),
            Coord::Q(k) => self.q.as_ref()?.get(k.checked_sub(1)?).copied(),
            Coord::H(k) => self.h.get(k.checked_sub(1)?).copied(),
            _ => None,
        }
    }

    pub fn lookup(&self, name: &str) -> Option<T> {
        self.get(name.parse().ok()?)
    }

    /// Back to point values (`order + 1` sites).
    pub fn to_stencil(&self) -> Stencil<T> {
        Stencil::from_jets(
            self.x,
            &self.h,
            self.u,
            &self.p,
            self.v.map(|v| (v, self.q.as_deref().unwrap_or(&[]))),
        )
    }
}

impl JetPoint<f64> {
    pub fn binding(&self) -> crate::expr::Binding {
        let mut b = crate::expr::Binding::new().with("x", self.x).with("u", self.u);
        if let Some(v) = self.v {
            b.set("v", v);
        }
        for (k, p) in self.p.iter().enumerate() {
            b.set(&format!("p{}", k + 1), *p);
        }
        if let Some(q) = &self.q {
            for (k, qk) in q.iter().enumerate() {
                b.set(&format!("q{}", k + 1), *qk);
            }
        }
        for (k, h) in self.h.iter().enumerate() {
            b.set(&format!("h{}", k + 1), *h);
        }
        b
    }
}

/// Continuous jet coordinates: `x, u, v, ux, uxx, ..., vx, vxx, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ContCoord {
    X,
    U,
    V,
    DU(usize),
    DV(usize),
}

impl FromStr for ContCoord {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "x" => Ok(ContCoord::X),
            "u" => Ok(ContCoord::U),
            "v" => Ok(ContCoord::V),
            _ => {
                let (head, tail) = s.split_at(1);
                if tail.is_empty() || !tail.bytes().all(|b| b == b'x') {
                    return Err(());
                }
                match head {
                    "u" => Ok(ContCoord::DU(tail.len())),
                    "v" => Ok(ContCoord::DV(tail.len())),
                    _ => Err(()),
                }
            }
        }
    }
}

impl fmt::Display for ContCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContCoord::X => write!(f, "x"),
            ContCoord::U => write!(f, "u"),
            ContCoord::V => write!(f, "v"),
            ContCoord::DU(k) => write!(f, "u{}", "x".repeat(*k)),
            ContCoord::DV(k) => write!(f, "v{}", "x".repeat(*k)),
        }
    }
}

/// A point of the continuous jet space. `du[k-1]` is the k-th derivative of `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContJet<T> {
    pub x: T,
    pub u: T,
    pub v: Option<T>,
    pub du: Vec<T>,
    pub dv: Option<Vec<T>>,
}

impl<T: Scalar> ContJet<T> {
    pub fn get(&self, c: ContCoord) -> Option<T> {
        match c {
            ContCoord::X => Some(self.x),
            ContCoord::U => Some(self.u),
            ContCoord::V => self.v,
            ContCoord::DU(k) => self.du.get(k - 1).copied(),
            ContCoord::DV(k) => self.dv.as_ref()?.get(k - 1).copied(),
        }
    }

    pub fn lookup(&self, name: &str) -> Option<T> {
        self.get(name.parse().ok()?)
    }
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

impl Trajectory<f64> {
    /// Reads `x,u[,v]` CSV with a header row; lines starting with `#` are skipped.
    pub fn read_csv<R: Read>(r: R) -> Result<Self, JetError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(r);
        let headers = rdr.headers().map_err(|e| JetError::Csv(e.to_string()))?.clone();
        let cols: Vec<&str> = headers.iter().collect();
        let has_v = match cols.as_slice() {
            ["x", "u"] => false,
            ["x", "u", "v"] => true,
            _ => return Err(JetError::Csv(format!("expected header x,u[,v], got {}", cols.join(",")))),
        };
        let (mut xs, mut us, mut vs) = (Vec::new(), Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec.map_err(|e| JetError::Csv(e.to_string()))?;
            let num = |i: usize| -> Result<f64, JetError> {
                rec.get(i)
                    .ok_or_else(|| JetError::Csv("short row".into()))?
                    .parse()
                    .map_err(|e: std::num::ParseFloatError| JetError::Csv(e.to_string()))
            };
            xs.push(num(0)?);
            us.push(num(1)?);
            if has_v {
                vs.push(num(2)?);
            }
        }
        Trajectory::new(xs, us, has_v.then_some(vs))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), JetError> {
        let mut wtr = csv::Writer::from_writer(w);
        let err = |e: csv::Error| JetError::Csv(e.to_string());
        if self.vs().is_some() {
            wtr.write_record(["x", "u", "v"]).map_err(err)?;
        } else {
            wtr.write_record(["x", "u"]).map_err(err)?;
        }
        for i in 0..self.len() {
            let mut row = vec![fmt17(self.xs()[i]), fmt17(self.us()[i])];
            if let Some(vs) = self.vs() {
                row.push(fmt17(vs[i]));
            }
            wtr.write_record(&row).map_err(err)?;
        }
        wtr.flush().map_err(|e| JetError::Csv(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_examples() {
        assert_eq!(geometric_lattice(0.0, 1.0, 1.0, 4).unwrap(), vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(geometric_lattice(0.0, 1.0, 2.0, 4).unwrap(), vec![0.0, 1.0, 3.0, 7.0]);
        assert!(geometric_lattice(0.0, 1.0, -1.0, 4).is_err());
        assert!(geometric_lattice(0.0, 0.0, 1.0, 4).is_err());
        assert!(geometric_lattice(0.0, 1.0, 1.0, 1).is_err());
    }

    #[test]
    fn derivatives_of_square() {
        let t = Trajectory::from_fn(vec![0.0, 1.0, 3.0], |x: f64| x * x, None::<fn(f64) -> f64>).unwrap();
        let d = discrete_derivatives(&t, Channel::U, 2).unwrap();
        assert_eq!(d[0], vec![1.0, 4.0]);
        assert_eq!(d[1], vec![2.0]);
        let t = Trajectory::from_fn(vec![0.0, 1.0, 3.0, 7.0], |x: f64| x * x, None::<fn(f64) -> f64>)
            .unwrap();
        assert_eq!(discrete_derivatives(&t, Channel::U, 3).unwrap()[2], vec![0.0]);
    }

    #[test]
    fn constant_has_zero_derivatives() {
        let t = Trajectory::new(vec![0.0, 0.5, 2.0, 2.5], vec![3.0; 4], Some(vec![-1.0; 4])).unwrap();
        let j = t.jet_at(0, 3).unwrap();
        assert!(j.p.iter().all(|&p| p == 0.0));
        assert!(j.q.unwrap().iter().all(|&q| q == 0.0));
    }

    #[test]
    fn jet_at_example() {
        let t = Trajectory::from_fn(vec![0.0, 1.0, 3.0], |x: f64| x * x, Some(|x: f64| 2.0 * x)).unwrap();
        let j = jet_at(&t, 0, 2).unwrap();
        assert_eq!((j.x, j.u, j.v), (0.0, 0.0, Some(0.0)));
        assert_eq!(j.p, vec![1.0, 2.0]);
        assert_eq!(j.q, Some(vec![2.0, 0.0]));
        assert_eq!(j.h, vec![1.0, 2.0]);
        assert!(matches!(jet_at(&t, 1, 2), Err(JetError::OutOfRange { .. })));
    }

    #[test]
    fn divided_difference_examples() {
        assert_eq!(divided_difference(&[0.0, 1.0], &[0.0, 2.0], 1).unwrap(), 2.0);
        assert_eq!(divided_difference(&[0.0, 1.0, 3.0], &[0.0, 1.0, 9.0], 2).unwrap(), 1.0);
        assert_eq!(divided_difference(&[5.0], &[7.0], 0).unwrap(), 7.0);
        assert_eq!(
            divided_difference(&[0.0, 1.0, 0.0], &[0.0, 1.0, 2.0], 2),
            Err(JetError::DuplicateAbscissa(0, 2))
        );
    }

    #[test]
    fn trajectory_validation() {
        assert!(matches!(
            Trajectory::new(vec![0.0, 1.0, 1.0], vec![0.0; 3], None),
            Err(JetError::DuplicateAbscissa(1, 2))
        ));
        assert!(matches!(
            Trajectory::new(vec![0.0, 2.0, 1.0], vec![0.0; 3], None),
            Err(JetError::NotIncreasing(2))
        ));
        assert!(Trajectory::new(vec![0.0], vec![0.0], None).is_err());
        let t = Trajectory::new(vec![0.0, 1.0], vec![0.0, 1.0], None).unwrap();
        assert!(matches!(t.jet_at(0, 2), Err(JetError::OutOfRange { .. })));
        assert_eq!(discrete_derivatives(&t, Channel::V, 1), Err(JetError::MissingV));
    }

    #[test]
    fn coord_names_roundtrip() {
        for s in ["x", "u", "v", "p1", "q3", "h2", "x_0", "u_3", "v_1", "p12"] {
            let c: Coord = s.parse().unwrap();
            assert_eq!(c.to_string(), s);
        }
        for s in ["p0", "p", "y", "p01", "w_1", "hx"] {
            assert!(s.parse::<Coord>().is_err(), "{s}");
        }
        for s in ["ux", "uxxx", "vxx", "x", "v"] {
            let c: ContCoord = s.parse().unwrap();
            assert_eq!(c.to_string(), s);
        }
        assert!("uy".parse::<ContCoord>().is_err());
    }

    #[test]
    fn newton_form_inverts_jets() {
        let t: Trajectory<f64> = Trajectory::new(
            vec![-0.3, 0.1, 0.9, 1.2],
            vec![1.0, -2.0, 0.5, 4.0],
            Some(vec![0.2, 0.3, -0.7, 1.1]),
        )
        .unwrap();
        let j = t.jet_at(0, 3).unwrap();
        let s = j.to_stencil();
        for i in 0..4 {
            assert!((s.xs[i] - t.xs()[i]).abs() < 1e-14);
            assert!((s.us[i] - t.us()[i]).abs() < 1e-12);
            assert!((s.vs.as_ref().unwrap()[i] - t.vs().unwrap()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_roundtrip() {
        let t = Trajectory::new(vec![0.0, 0.1, 0.3], vec![1.0, 1.0 / 3.0, 2.0], Some(vec![0.0, 1.0, 2.0]))
            .unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,u,v\n"));
        let back = Trajectory::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, t);
        assert!(Trajectory::read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
