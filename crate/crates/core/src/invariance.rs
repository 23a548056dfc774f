//! Invariance checks: prolonged fields applied to functions and schemes on
//! sampled jet contexts, the symmetry matrix `M` and its numerical rank.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::expr::{EvalError, Expression};
use crate::fields::VectorField;
use crate::jets::{ContCoord, ContJet, Coord, Stencil, Trajectory};
use crate::prolong::{
    apply_to, jet_stencil, prolong_continuous, prolong_discrete, reads_v, ContinuousProlongedField, ProlongError,
    ProlongedField, VChannel,
};
use crate::schemes::{apply_substitution, substitution_from, Scheme, SchemeError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvarianceError {
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("trajectory has {got} points, need at least {needed}")]
    TooShort { needed: usize, got: usize },
    #[error("trajectory has no v channel")]
    MissingV,
    #[error("sampler `{0}`: {1}")]
    Sampler(String, String),
    #[error(transparent)]
    Prolong(#[from] ProlongError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Values of discrete jet coordinates at one base point.
pub type JetState = BTreeMap<Coord, f64>;

/// Column order of the discrete symmetry matrix.
pub const DISCRETE_COORDS: [Coord; 9] = [
    Coord::X,
    Coord::U,
    Coord::V,
    Coord::P(1),
    Coord::Q(1),
    Coord::P(2),
    Coord::Q(2),
    Coord::H(1),
    Coord::H(2),
];

/// Column order of the continuous symmetry matrix.
pub const CONTINUOUS_COORDS: [ContCoord; 7] = [
    ContCoord::X,
    ContCoord::U,
    ContCoord::V,
    ContCoord::DU(1),
    ContCoord::DV(1),
    ContCoord::DU(2),
    ContCoord::DV(2),
];

/// The invariants of the discrete system. `I1_unscaled` is the variant
/// without the `h1` factor, kept to show it is not annihilated.
pub fn invariant_function(name: &str) -> Result<Expression, InvarianceError> {
    let text = match name {
        "I1" => "p1 - v - h1*q1/2",
        "I1_unscaled" => "p1 - v - q1/2",
        "I2" => "q2",
        "I3" => "h2/h1",
        "I4" => "h1^2*(p2 - q1)",
        _ => return Err(InvarianceError::UnknownFunction(name.to_string())),
    };
    Ok(Expression::parse(text).expect("catalog invariants parse"))
}

/// Draws jet contexts: free coordinates uniform in `[-2, 2]` (steps in
/// `[0.1, 2]`), the rest from a substitution map.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampler {
    pub name: String,
    coords: Vec<Coord>,
    subs: Vec<(Coord, Expression)>,
    ratio: Option<f64>,
    jet_order: usize,
    uses_v: bool,
}

impl Sampler {
    fn on_system(name: &str, subs: &[(&str, &str)]) -> Self {
        Sampler {
            name: name.to_string(),
            coords: DISCRETE_COORDS.to_vec(),
            subs: substitution_from(subs).expect("built-in substitutions are well formed"),
            ratio: None,
            jet_order: 2,
            uses_v: true,
        }
    }

    /// All nine coordinates of the two-channel second-order jet space free.
    pub fn generic() -> Self {
        Self::on_system("generic", &[])
    }

    /// `I1 = I2 = 0` together with their difference consequence `q1 = p2`.
    pub fn weak() -> Self {
        Self::on_system("weak", &[("q1", "p2"), ("p1", "v + h1*q1/2"), ("q2", "0")])
    }

    /// `I1 = I2 = 0` alone, without `q1 = p2`. Here `M` has rank 6.
    pub fn weak_without_consequence() -> Self {
        Self::on_system("weak-no-consequence", &[("p1", "v + h1*q1/2"), ("q2", "0")])
    }

    /// The scheme's solution set, or its whole jet space when it declares
    /// no substitution map.
    pub fn solution(scheme: &Scheme) -> Self {
        let mut s = Self::generic_for(scheme);
        if scheme.has_solution_map() {
            s.name = format!("solution:{}", scheme.name);
            s.subs = scheme.substitution.clone();
        }
        s
    }

    pub fn generic_for(scheme: &Scheme) -> Self {
        Sampler {
            name: format!("generic:{}", scheme.name),
            coords: scheme.coordinates(),
            subs: Vec::new(),
            ratio: scheme.lattice_ratio,
            jet_order: scheme.jet_order(),
            uses_v: scheme.uses_v(),
        }
    }

    pub fn coordinates(&self) -> &[Coord] {
        &self.coords
    }

    pub fn jet_order(&self) -> usize {
        self.jet_order
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> Result<JetState, InvarianceError> {
        let targets: Vec<Coord> = self.subs.iter().map(|(c, _)| *c).collect();
        let mut state = JetState::new();
        for &c in &self.coords {
            if targets.contains(&c) {
                continue;
            }
            let v = match c {
                Coord::H(_) => rng.gen_range(0.1..=2.0),
                _ => rng.gen_range(-2.0..=2.0),
            };
            state.insert(c, v);
        }
        apply_substitution(&self.subs, &mut state)?;
        if let Some(bad) = state.iter().find(|(c, v)| !v.is_finite() || (matches!(c, Coord::H(_)) && **v <= 0.0)) {
            return Err(InvarianceError::Sampler(
                self.name.clone(),
                format!("{} = {} is not admissible", bad.0, bad.1),
            ));
        }
        Ok(state)
    }

    pub fn samples(&self, count: usize, seed: u64) -> Result<Vec<JetState>, InvarianceError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.draw(&mut rng)).collect()
    }

    /// Point values realizing `state`, long enough for `pr`.
    pub fn stencil(&self, state: &JetState, pr: &ProlongedField) -> Result<Stencil<f64>, InvarianceError> {
        let v = if self.uses_v {
            VChannel::Jet
        } else if reads_v(&pr.base) {
            VChannel::Slope
        } else {
            VChannel::Absent
        };
        Ok(jet_stencil(
            |c| state.get(&c).copied(),
            self.jet_order,
            pr.required_points(),
            self.ratio.unwrap_or(1.0),
            v,
        )?)
    }
}

/// `pr X F` at base point 0 of `s`.
pub fn apply_prolonged(pr: &ProlongedField, f: &Expression, s: &Stencil<f64>) -> Result<f64, InvarianceError> {
    let p = pr.evaluate(s)?;
    Ok(apply_to(
        f,
        |n| s.lookup(n, 0),
        |n| n.parse::<Coord>().ok().and_then(|c| p.coefficient(c)),
    )?)
}

/// `pr X F` at a continuous jet point.
pub fn apply_continuous(
    pr: &ContinuousProlongedField,
    f: &Expression,
    jet: &ContJet<f64>,
) -> Result<f64, InvarianceError> {
    let p = pr.evaluate(jet)?;
    Ok(apply_to(
        f,
        |n| jet.lookup(n),
        |n| n.parse::<ContCoord>().ok().and_then(|c| p.coefficient(c)),
    )?)
}

fn ser_finite<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(if v.is_nan() { "nan" } else { "inf" })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualEntry {
    pub field: String,
    pub function: String,
    #[serde(serialize_with = "ser_finite")]
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub fields: Vec<String>,
    pub functions: Vec<String>,
    pub manifold: String,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub residuals: Vec<ResidualEntry>,
    /// Max `|F|` over the samples; near zero when `F` vanishes on the manifold.
    pub function_values: BTreeMap<String, f64>,
    #[serde(serialize_with = "ser_finite")]
    pub max_residual: f64,
    pub pass: bool,
}

impl InvarianceReport {
    pub fn residual(&self, field: &str, function: &str) -> Option<f64> {
        self.residuals
            .iter()
            .find(|r| r.field == field && r.function == function)
            .map(|r| r.max_residual)
    }

    /// Weak-invariant certification: each function vanishes on the samples
    /// and is annihilated there by every field.
    pub fn certifies_weak_invariants(&self) -> bool {
        self.pass && self.function_values.values().all(|v| *v < self.tol)
    }
}

/// Max over samples of `|pr X_a F_i|` for every field and function.
pub fn check_invariance(
    fields: &[VectorField],
    functions: &[(String, Expression)],
    sampler: &Sampler,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<InvarianceReport, InvarianceError> {
    let prolonged = fields
        .iter()
        .map(|f| prolong_discrete(f, sampler.jet_order()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut worst = vec![0.0f64; fields.len() * functions.len()];
    let mut values = vec![0.0f64; functions.len()];
    for state in sampler.samples(samples, seed)? {
        for (a, pr) in prolonged.iter().enumerate() {
            let s = sampler.stencil(&state, pr)?;
            for (i, (_, f)) in functions.iter().enumerate() {
                let r = apply_prolonged(pr, f, &s)?.abs();
                let slot = &mut worst[a * functions.len() + i];
                *slot = if r.is_nan() { f64::NAN } else { slot.max(r) };
                if a == 0 {
                    let v = f.eval_with(&|n: &str| s.lookup(n, 0))?;
                    values[i] = values[i].max(v.abs());
                }
            }
        }
    }
    let mut residuals = Vec::new();
    for (a, f) in fields.iter().enumerate() {
        for (i, (name, _)) in functions.iter().enumerate() {
            residuals.push(ResidualEntry {
                field: f.name.clone(),
                function: name.clone(),
                max_residual: worst[a * functions.len() + i],
            });
        }
    }
    let max_residual = worst.iter().fold(0.0f64, |m, r| if r.is_nan() { f64::NAN } else { m.max(*r) });
    Ok(InvarianceReport {
        fields: fields.iter().map(|f| f.name.clone()).collect(),
        functions: functions.iter().map(|(n, _)| n.clone()).collect(),
        manifold: sampler.name.clone(),
        samples,
        seed,
        tol,
        residuals,
        function_values: functions.iter().map(|(n, _)| n.clone()).zip(values).collect(),
        max_residual,
        pass: max_residual < tol,
    })
}

/// Invariance of a scheme's equations on its own solution set.
pub fn check_scheme(
    fields: &[VectorField],
    scheme: &Scheme,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<InvarianceReport, InvarianceError> {
    let functions: Vec<(String, Expression)> = scheme
        .equations
        .iter()
        .enumerate()
        .map(|(i, e)| (format!("E{}", i + 1), e.clone()))
        .collect();
    check_invariance(fields, &functions, &Sampler::solution(scheme), samples, seed, tol)
}

/// Rows: prolongation coefficients of each field along [`DISCRETE_COORDS`].
pub fn build_m(fields: &[VectorField], state: &JetState) -> Result<DMatrix<f64>, InvarianceError> {
    let sampler = Sampler::generic();
    let mut m = DMatrix::zeros(fields.len(), DISCRETE_COORDS.len());
    for (a, f) in fields.iter().enumerate() {
        let pr = prolong_discrete(f, 2)?;
        let s = sampler.stencil(state, &pr)?;
        let p = pr.evaluate(&s)?;
        for (j, c) in DISCRETE_COORDS.iter().enumerate() {
            m[(a, j)] = p
                .coefficient(*c)
                .ok_or_else(|| ProlongError::MissingCoordinate(c.to_string()))?;
        }
    }
    Ok(m)
}

/// Continuous jet contexts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContSampler {
    Generic,
    /// The surface `u' = v, v'' = 0` (without differential consequences).
    System,
    /// The same surface with the consequence `u'' = v'` imposed.
    SystemWithConsequence,
}

impl ContSampler {
    pub fn name(self) -> &'static str {
        match self {
            ContSampler::Generic => "generic",
            ContSampler::System => "solution:SYS",
            ContSampler::SystemWithConsequence => "solution:SYS+consequence",
        }
    }

    pub fn draw<R: Rng>(self, rng: &mut R) -> ContJet<f64> {
        let mut r = || rng.gen_range(-2.0..=2.0);
        let (x, u, v) = (r(), r(), r());
        match self {
            ContSampler::Generic => ContJet {
                x,
                u,
                v: Some(v),
                du: vec![r(), r(), r(), r()],
                dv: Some(vec![r(), r(), r(), r()]),
            },
            ContSampler::System => {
                // only I1 = ux - v and I2 = vxx are imposed; uxx stays free
                ContJet {
                    x,
                    u,
                    v: Some(v),
                    du: vec![v, r(), r(), r()],
                    dv: Some(vec![r(), 0.0, r(), r()]),
                }
            }
            ContSampler::SystemWithConsequence => {
                let vx = r();
                ContJet {
                    x,
                    u,
                    v: Some(v),
                    du: vec![v, vx, 0.0, 0.0],
                    dv: Some(vec![vx, 0.0, 0.0, 0.0]),
                }
            }
        }
    }

    pub fn samples(self, count: usize, seed: u64) -> Vec<ContJet<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.draw(&mut rng)).collect()
    }
}

/// Rows: continuous prolongation coefficients along [`CONTINUOUS_COORDS`].
pub fn build_m_continuous(fields: &[VectorField], jet: &ContJet<f64>) -> Result<DMatrix<f64>, InvarianceError> {
    let mut m = DMatrix::zeros(fields.len(), CONTINUOUS_COORDS.len());
    for (a, f) in fields.iter().enumerate() {
        let p = prolong_continuous(f, 2)?.evaluate(jet)?;
        for (j, c) in CONTINUOUS_COORDS.iter().enumerate() {
            m[(a, j)] = p
                .coefficient(*c)
                .ok_or_else(|| ProlongError::MissingCoordinate(c.to_string()))?;
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MMatrixReport {
    pub coordinates: Vec<String>,
    pub rows: Vec<String>,
    pub singular_values: Vec<f64>,
    pub threshold: f64,
    pub rank: usize,
    /// `σ_rank / σ_{rank+1}`; infinite when nothing sits below the threshold
    /// or the next singular value is exactly zero.
    #[serde(serialize_with = "ser_finite")]
    pub gap_ratio: f64,
    /// Unit vectors `w` in coordinate space with `M w ≈ 0`.
    pub nullspace: Vec<Vec<f64>>,
    pub strong_invariant_count: usize,
}

impl MMatrixReport {
    pub fn nullity(&self) -> usize {
        self.coordinates.len() - self.rank
    }
}

/// Numerical rank with threshold `max(rows, cols) · σ_max · 1e-10`.
pub fn rank_report(
    m: &DMatrix<f64>,
    rows: &[String],
    coordinates: &[String],
) -> Result<MMatrixReport, InvarianceError> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(InvarianceError::NonFinite);
    }
    let (r, c) = m.shape();
    // pad to at least square so V carries a full basis of coordinate space
    let mut padded = DMatrix::zeros(r.max(c), c);
    padded.view_mut((0, 0), (r, c)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sorted: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let smax = sorted.first().copied().unwrap_or(0.0);
    let threshold = r.max(c) as f64 * smax * 1e-10;
    let rank = if smax == 0.0 {
        0
    } else {
        sorted.iter().filter(|&&s| s > threshold).count()
    };
    let gap_ratio = match (rank.checked_sub(1).map(|i| sorted[i]), sorted.get(rank)) {
        (Some(a), Some(&b)) if b > 0.0 => a / b,
        (Some(_), _) => f64::INFINITY,
        (None, _) => f64::NAN,
    };
    let nullspace = order[rank..]
        .iter()
        .map(|&i| v_t.row(i).iter().copied().collect())
        .collect();
    Ok(MMatrixReport {
        coordinates: coordinates.to_vec(),
        rows: rows.to_vec(),
        singular_values: sorted[..r.min(c)].to_vec(),
        threshold,
        rank,
        gap_ratio,
        nullspace,
        strong_invariant_count: c - rank,
    })
}

pub fn discrete_coordinate_names() -> Vec<String> {
    DISCRETE_COORDS.iter().map(|c| c.to_string()).collect()
}

pub fn continuous_coordinate_names() -> Vec<String> {
    CONTINUOUS_COORDS.iter().map(|c| c.to_string()).collect()
}

/// Gradient of `f` at `state` along [`DISCRETE_COORDS`].
pub fn discrete_gradient(f: &Expression, state: &JetState) -> Result<Vec<f64>, InvarianceError> {
    let names = discrete_coordinate_names();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let (_, g) = f.eval_gradient(&|n: &str| n.parse::<Coord>().ok().and_then(|c| state.get(&c).copied()), &refs)?;
    Ok(g)
}

/// Rank statistics of `M` over many sampled contexts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankSurvey {
    pub manifold: String,
    pub samples: usize,
    pub seed: u64,
    pub ranks: BTreeMap<usize, usize>,
    /// Smallest gap ratio seen.
    #[serde(serialize_with = "ser_finite")]
    pub min_gap_ratio: f64,
    pub example: MMatrixReport,
}

impl RankSurvey {
    /// The single rank seen at every context, if there is one.
    pub fn uniform_rank(&self) -> Option<usize> {
        (self.ranks.len() == 1).then(|| *self.ranks.keys().next().unwrap())
    }
}

pub fn survey_discrete(
    fields: &[VectorField],
    sampler: &Sampler,
    samples: usize,
    seed: u64,
) -> Result<RankSurvey, InvarianceError> {
    let rows: Vec<String> = fields.iter().map(|f| f.name.clone()).collect();
    let cols = discrete_coordinate_names();
    let mut ranks = BTreeMap::new();
    let mut min_gap = f64::INFINITY;
    let mut example = None;
    for state in sampler.samples(samples.max(1), seed)? {
        let rep = rank_report(&build_m(fields, &state)?, &rows, &cols)?;
        *ranks.entry(rep.rank).or_insert(0) += 1;
        min_gap = min_gap.min(rep.gap_ratio);
        example.get_or_insert(rep);
    }
    Ok(RankSurvey {
        manifold: sampler.name.clone(),
        samples,
        seed,
        ranks,
        min_gap_ratio: min_gap,
        example: example.expect("at least one sample"),
    })
}

pub fn survey_continuous(
    fields: &[VectorField],
    sampler: ContSampler,
    samples: usize,
    seed: u64,
) -> Result<RankSurvey, InvarianceError> {
    let rows: Vec<String> = fields.iter().map(|f| f.name.clone()).collect();
    let cols = continuous_coordinate_names();
    let mut ranks = BTreeMap::new();
    let mut min_gap = f64::INFINITY;
    let mut example = None;
    for jet in sampler.samples(samples.max(1), seed) {
        let rep = rank_report(&build_m_continuous(fields, &jet)?, &rows, &cols)?;
        *ranks.entry(rep.rank).or_insert(0) += 1;
        min_gap = min_gap.min(rep.gap_ratio);
        example.get_or_insert(rep);
    }
    Ok(RankSurvey {
        manifold: sampler.name().to_string(),
        samples,
        seed,
        ranks,
        min_gap_ratio: min_gap,
        example: example.expect("at least one sample"),
    })
}

/// Pointwise maxima of `q1 - p2` and `I4` along a two-channel trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelationReport {
    pub q1_minus_p2: f64,
    pub i4: f64,
}

pub fn verify_invariant_relation(t: &Trajectory<f64>) -> Result<RelationReport, InvarianceError> {
    if t.len() < 3 {
        return Err(InvarianceError::TooShort { needed: 3, got: t.len() });
    }
    let s = t.stencil();
    if !s.has_v() {
        return Err(InvarianceError::MissingV);
    }
    let i4 = invariant_function("I4")?;
    let mut rep = RelationReport {
        q1_minus_p2: 0.0,
        i4: 0.0,
    };
    for n in 0..t.len() - 2 {
        let get = |c: &str| s.lookup(c, n).expect("three-point window");
        rep.q1_minus_p2 = rep.q1_minus_p2.max((get("q1") - get("p2")).abs());
        rep.i4 = rep.i4.max(i4.eval_with(&|c: &str| s.lookup(c, n))?.abs());
    }
    Ok(rep)
}
