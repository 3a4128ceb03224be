//! Formula and graph models over random points.
//!
//! Literals are identified with point labels through a fixed bijection:
//! variable v is label 2v-1, its negation is label 2v. Every generator
//! is deterministic in (parameters, seed): equal inputs reproduce the
//! point set and formula bit for bit. Clauses arising from overlapping
//! point cliques are all kept, as are tautologies and duplicate
//! clauses; solvers deduplicate, generators never do.

use std::collections::HashSet;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    Boundary, MAX_SUBSET_K, Metric, Point, PointSet, enumerate_ball_subsets, poisson_u64, within,
};
use crate::rng::stream;

/// Raw literal label: variable v is 2v-1, its negation 2v.
pub type LiteralId = u32;

/// A signed variable. Ordering matches label order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Lit {
    pub var: u32,
    pub negated: bool,
}

impl Lit {
    pub fn positive(var: u32) -> Self {
        Lit {
            var,
            negated: false,
        }
    }

    pub fn negative(var: u32) -> Self {
        Lit { var, negated: true }
    }

    pub fn negate(self) -> Self {
        Lit {
            var: self.var,
            negated: !self.negated,
        }
    }

    pub fn label(self) -> LiteralId {
        2 * self.var - 1 + self.negated as u32
    }

    pub fn from_label(label: LiteralId) -> Self {
        debug_assert!(label >= 1);
        Lit {
            var: label.div_ceil(2),
            negated: label % 2 == 0,
        }
    }

    pub fn to_dimacs(self) -> i64 {
        if self.negated {
            -(self.var as i64)
        } else {
            self.var as i64
        }
    }

    pub fn from_dimacs(value: i64) -> Result<Self> {
        if value == 0 || value.unsigned_abs() > u32::MAX as u64 {
            return Err(Error::Parse(format!("bad DIMACS literal {value}")));
        }
        Ok(Lit {
            var: value.unsigned_abs() as u32,
            negated: value < 0,
        })
    }
}

/// A disjunction of literals, stored sorted. `provenance` holds the
/// point indices the clause came from, sorted, empty for formulas read
/// from disk.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Clause {
    pub literals: Vec<Lit>,
    pub provenance: Vec<u32>,
}

impl Clause {
    pub fn new(mut literals: Vec<Lit>, mut provenance: Vec<u32>) -> Self {
        literals.sort_unstable();
        provenance.sort_unstable();
        Clause {
            literals,
            provenance,
        }
    }

    /// True when the clause contains both a variable and its negation.
    pub fn is_tautology(&self) -> bool {
        self.literals
            .windows(2)
            .any(|w| w[0].var == w[1].var && w[0].negated != w[1].negated)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// 2n uniform literal points, radius gamma * n^(-1/d).
    Gamma,
    /// One Poisson(mu) point process per literal, radius n^(-1/d).
    Mu,
    /// n uniform variable points, explicit radius, signs drawn per clause.
    Tilde,
    /// Poisson point process of intensity n on [0,1]^d, explicit radius.
    RggPoisson,
    /// Exactly n uniform points, explicit radius.
    RggFixed,
}

/// Everything that determines a generated instance apart from the seed.
/// `param` is the model's free knob: gamma for `Gamma`, mu for `Mu`,
/// and the radius r for `Tilde`, `RggPoisson`, and `RggFixed`.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct ModelParams {
    pub model: Model,
    pub n: u64,
    pub k: usize,
    pub d: usize,
    pub param: f64,
    pub metric: Metric,
    pub boundary: Boundary,
}

/// Sidecar record: parameters plus seed, enough to regenerate the
/// artifact exactly.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct GeneratorRecord {
    #[serde(flatten)]
    pub params: ModelParams,
    pub seed: u64,
}

/// A k-CNF formula. The clause list is a multiset: duplicates and
/// tautologies from generation are preserved.
#[derive(Clone, PartialEq, Debug)]
pub struct Formula {
    pub n_vars: u32,
    pub k: usize,
    pub clauses: Vec<Clause>,
    pub record: Option<GeneratorRecord>,
}

impl Formula {
    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            c.literals
                .iter()
                .any(|l| assignment[(l.var - 1) as usize] != l.negated)
        })
    }

    /// Clause multiset equality on literal content, ignoring provenance.
    pub fn clause_multiset_eq(&self, other: &Formula) -> bool {
        if self.clauses.len() != other.clauses.len() {
            return false;
        }
        let mut a: Vec<&[Lit]> = self.clauses.iter().map(|c| c.literals.as_slice()).collect();
        let mut b: Vec<&[Lit]> = other
            .clauses
            .iter()
            .map(|c| c.literals.as_slice())
            .collect();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    }
}

/// A k-uniform hypergraph on point indices 0..vertex_count. For k = 2
/// this is a plain graph.
#[derive(Clone, PartialEq, Debug)]
pub struct Hypergraph {
    pub vertex_count: usize,
    pub k: usize,
    pub edges: Vec<Vec<u32>>,
}

/// Output of `generate`: formula models carry a formula, graph models
/// a hypergraph, each with the points they were built from.
#[derive(Clone, Debug)]
pub enum Generated {
    Formula { points: PointSet, formula: Formula },
    Graph { points: PointSet, graph: Hypergraph },
}

fn check_k(k: usize) -> Result<()> {
    if !(2..=MAX_SUBSET_K).contains(&k) {
        return Err(Error::LengthOutOfRange {
            value: k,
            lo: 2,
            hi: MAX_SUBSET_K,
        });
    }
    Ok(())
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if n > (u32::MAX / 2) as u64 {
        return Err(Error::Overflow(format!("n = {n} exceeds the label space")));
    }
    Ok(())
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {value}"
        )));
    }
    Ok(())
}

fn check_nonnegative(name: &str, value: f64) -> Result<()> {
    if !(value >= 0.0) || !value.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{name} must be nonnegative and finite, got {value}"
        )));
    }
    Ok(())
}

fn scaling_radius(n: u64, d: usize) -> f64 {
    (n as f64).powf(-1.0 / d as f64)
}

fn clauses_from_subsets(ps: &PointSet, subsets: Vec<Vec<u32>>) -> Vec<Clause> {
    subsets
        .into_iter()
        .map(|subset| {
            let literals = subset
                .iter()
                .map(|&i| Lit::from_label(ps.labels[i as usize]))
                .collect();
            Clause::new(literals, subset)
        })
        .collect()
}

/// The gamma model: 2n uniform points labeled 1..=2n, one per literal,
/// radius gamma * n^(-1/d); every k points in a ball of that radius
/// yield a clause.
pub fn generate_f_gamma(
    n: u64,
    k: usize,
    d: usize,
    gamma: f64,
    metric: Metric,
    boundary: Boundary,
    seed: u64,
) -> Result<(PointSet, Formula)> {
    check_n(n)?;
    check_k(k)?;
    check_positive("gamma", gamma)?;
    let r = gamma * scaling_radius(n, d);
    let mut rng = stream(seed);
    let mut ps =
        crate::geometry::sample_uniform_points(2 * n as usize, d, &mut rng);
    ps.boundary = boundary;
    let subsets = enumerate_ball_subsets(&ps, r, k, metric)?;
    let clauses = clauses_from_subsets(&ps, subsets);
    let formula = Formula {
        n_vars: n as u32,
        k,
        clauses,
        record: Some(GeneratorRecord {
            params: ModelParams {
                model: Model::Gamma,
                n,
                k,
                d,
                param: gamma,
                metric,
                boundary,
            },
            seed,
        }),
    };
    Ok((ps, formula))
}

/// The mu model: an independent Poisson(mu) number of points per
/// literal label 1..=2n (labels drawn in ascending order), radius
/// n^(-1/d).
pub fn generate_f_mu(
    n: u64,
    k: usize,
    d: usize,
    mu: f64,
    metric: Metric,
    boundary: Boundary,
    seed: u64,
) -> Result<(PointSet, Formula)> {
    check_n(n)?;
    check_k(k)?;
    check_nonnegative("mu", mu)?;
    let mut rng = stream(seed);
    let ps = sample_mu_points(n, d, mu, boundary, &mut rng);
    let r = scaling_radius(n, d);
    let subsets = enumerate_ball_subsets(&ps, r, k, metric)?;
    let clauses = clauses_from_subsets(&ps, subsets);
    let formula = Formula {
        n_vars: n as u32,
        k,
        clauses,
        record: Some(GeneratorRecord {
            params: ModelParams {
                model: Model::Mu,
                n,
                k,
                d,
                param: mu,
                metric,
                boundary,
            },
            seed,
        }),
    };
    Ok((ps, formula))
}

fn sample_mu_points(
    n: u64,
    d: usize,
    mu: f64,
    boundary: Boundary,
    rng: &mut crate::rng::RngStream,
) -> PointSet {
    let labels = 2 * n as u32;
    let mut ps = PointSet::new(d, boundary, labels);
    // Superposition: the union of independent Poisson(mu) processes,
    // one per label, is one Poisson(2n mu) process with uniform
    // labels. One count draw instead of 2n.
    let total = poisson_u64(2.0 * n as f64 * mu, rng);
    for _ in 0..total {
        let label = rng.random_range(1..=labels);
        let coords = (0..d).map(|_| rng.random::<f64>()).collect();
        ps.push(Point::new(coords), label);
    }
    ps
}

/// The sign-symmetric model: n uniform variable points labeled 1..=n,
/// explicit radius; each k points in a ball yield one clause whose
/// signs are fresh fair coins, drawn per clause in subset order.
pub fn generate_f_tilde(
    n: u64,
    k: usize,
    d: usize,
    r: f64,
    metric: Metric,
    boundary: Boundary,
    seed: u64,
) -> Result<(PointSet, Formula)> {
    check_n(n)?;
    check_k(k)?;
    check_positive("r", r)?;
    let mut rng = stream(seed);
    let mut ps = crate::geometry::sample_uniform_points(n as usize, d, &mut rng);
    ps.boundary = boundary;
    let subsets = enumerate_ball_subsets(&ps, r, k, metric)?;
    let clauses = subsets
        .into_iter()
        .map(|subset| {
            let literals = subset
                .iter()
                .map(|&i| Lit {
                    var: ps.labels[i as usize],
                    negated: rng.random_bool(0.5),
                })
                .collect();
            Clause::new(literals, subset)
        })
        .collect();
    let formula = Formula {
        n_vars: n as u32,
        k,
        clauses,
        record: Some(GeneratorRecord {
            params: ModelParams {
                model: Model::Tilde,
                n,
                k,
                d,
                param: r,
                metric,
                boundary,
            },
            seed,
        }),
    };
    Ok((ps, formula))
}

/// Poisson random geometric hypergraph: a Poisson process of intensity
/// n * mu on [0,1]^d; every k points in a ball of radius r form an edge.
pub fn generate_rgg(
    n: f64,
    mu: f64,
    r: f64,
    d: usize,
    k: usize,
    metric: Metric,
    boundary: Boundary,
    seed: u64,
) -> Result<(PointSet, Hypergraph)> {
    check_k(k)?;
    check_nonnegative("n", n)?;
    check_nonnegative("mu", mu)?;
    check_positive("r", r)?;
    let mut rng = stream(seed);
    let mut ps = crate::geometry::sample_poisson_process(n * mu, d, &mut rng);
    ps.boundary = boundary;
    let edges = enumerate_ball_subsets(&ps, r, k, metric)?;
    let graph = Hypergraph {
        vertex_count: ps.len(),
        k,
        edges,
    };
    Ok((ps, graph))
}

/// Fixed-size random geometric hypergraph: exactly n uniform points.
pub fn generate_rgg_fixed(
    n: usize,
    r: f64,
    d: usize,
    k: usize,
    metric: Metric,
    boundary: Boundary,
    seed: u64,
) -> Result<(PointSet, Hypergraph)> {
    check_k(k)?;
    check_positive("r", r)?;
    let mut rng = stream(seed);
    let mut ps = crate::geometry::sample_uniform_points(n, d, &mut rng);
    ps.boundary = boundary;
    let edges = enumerate_ball_subsets(&ps, r, k, metric)?;
    let graph = Hypergraph {
        vertex_count: ps.len(),
        k,
        edges,
    };
    Ok((ps, graph))
}

/// Dispatch on `params.model`. Formula models return
/// `Generated::Formula`, graph models `Generated::Graph`.
pub fn generate(params: &ModelParams, seed: u64) -> Result<Generated> {
    let ModelParams {
        model,
        n,
        k,
        d,
        param,
        metric,
        boundary,
    } = *params;
    match model {
        Model::Gamma => {
            let (points, formula) = generate_f_gamma(n, k, d, param, metric, boundary, seed)?;
            Ok(Generated::Formula { points, formula })
        }
        Model::Mu => {
            let (points, formula) = generate_f_mu(n, k, d, param, metric, boundary, seed)?;
            Ok(Generated::Formula { points, formula })
        }
        Model::Tilde => {
            let (points, formula) = generate_f_tilde(n, k, d, param, metric, boundary, seed)?;
            Ok(Generated::Formula { points, formula })
        }
        Model::RggPoisson => {
            let (points, graph) = generate_rgg(n as f64, 1.0, param, d, k, metric, boundary, seed)?;
            Ok(Generated::Graph { points, graph })
        }
        Model::RggFixed => {
            let (points, graph) =
                generate_rgg_fixed(n as usize, param, d, k, metric, boundary, seed)?;
            Ok(Generated::Graph { points, graph })
        }
    }
}

/// Grid resolution per axis for the discrete coupling: 16^d * n^3.
pub fn coupling_grid_resolution(n: u64, d: usize) -> Result<u64> {
    check_n(n)?;
    if d == 0 {
        return Err(Error::InvalidParameter("d must be at least 1".into()));
    }
    let res = 16u128
        .checked_pow(d as u32)
        .and_then(|b| b.checked_mul((n as u128).pow(3)))
        .ok_or_else(|| Error::Overflow("coupling grid resolution".into()))?;
    u64::try_from(res).map_err(|_| Error::Overflow("coupling grid resolution".into()))
}

/// Total number of (label, cell) slots in the discrete model, which
/// must stay within exact f64 range for the coin probabilities.
fn coupling_slots(n: u64, d: usize) -> Result<u64> {
    let per_axis = coupling_grid_resolution(n, d)? as u128;
    let cells = per_axis
        .checked_pow(d as u32)
        .ok_or_else(|| Error::Overflow("coupling cell count".into()))?;
    let slots = cells
        .checked_mul(2 * n as u128)
        .ok_or_else(|| Error::Overflow("coupling slot count".into()))?;
    if slots > 1u128 << 53 {
        return Err(Error::Overflow(format!(
            "coupling needs {slots} slots, beyond exact f64 range"
        )));
    }
    Ok(slots as u64)
}

/// Per-slot occupancy probability of the discrete model: the Poisson
/// mean per label per cell.
pub fn coupling_q(n: u64, d: usize, mu: f64) -> Result<f64> {
    check_nonnegative("mu", mu)?;
    let cells = coupling_slots(n, d)? as f64 / (2 * n) as f64;
    Ok(mu / cells)
}

/// Probability of the repair coin that tops an empty cell up to
/// occupancy q: q_heads = e^q * (q - (1 - e^-q)), so that
/// (1 - e^-q) + e^-q * q_heads = q exactly.
pub fn coupling_q_heads(q: f64) -> f64 {
    // q - (1 - e^-q) cancels catastrophically for small q; exp_m1
    // keeps the difference accurate.
    q.exp() * (q + (-q).exp_m1())
}

/// Expected number of repair heads per coupled draw:
/// slots * e^-q * q_heads.
pub fn expected_extra_heads(n: u64, d: usize, mu: f64) -> Result<f64> {
    let slots = coupling_slots(n, d)? as f64;
    let q = coupling_q(n, d, mu)?;
    Ok(slots * (-q).exp() * coupling_q_heads(q))
}

/// Discrepancies observed while coupling a continuous draw to its
/// discretization.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct CollisionReport {
    /// Points added by the repair coins.
    pub extra_heads: u64,
    /// Continuous points dropped because another point of the same
    /// label snapped to the same cell.
    pub same_cell_duplicates: u64,
    /// Retained point pairs whose within-radius status differs between
    /// continuous and snapped positions.
    pub boundary_flip_pairs: u64,
}

impl CollisionReport {
    pub fn is_clean(&self) -> bool {
        self.extra_heads == 0 && self.same_cell_duplicates == 0 && self.boundary_flip_pairs == 0
    }
}

/// A continuous mu-model draw and its coupled discrete counterpart.
#[derive(Clone, Debug)]
pub struct CoupledPair {
    pub continuous: Formula,
    pub discrete: Formula,
    pub collisions: CollisionReport,
}

impl CoupledPair {
    /// True when the two formulas agree as clause multisets.
    pub fn identical(&self) -> bool {
        self.continuous.clause_multiset_eq(&self.discrete)
    }
}

/// Couples a continuous mu-model draw (cube boundary, sup metric) to
/// the discrete model on the 16^d * n^3 per-axis grid.
///
/// Each continuous point snaps to the center of its cell; same-label
/// points landing in one cell collapse to a single discrete point.
/// Every remaining empty (label, cell) slot then flips an independent
/// repair coin with probability q_heads, so each slot is occupied with
/// probability exactly q = mu / cells, the discrete model's law. The
/// two formulas agree whenever no repair head fires, no cell collision
/// occurs, and no point pair changes within-radius status under
/// snapping.
pub fn generate_discrete_coupled(
    n: u64,
    k: usize,
    d: usize,
    mu: f64,
    seed: u64,
) -> Result<CoupledPair> {
    check_n(n)?;
    check_k(k)?;
    check_nonnegative("mu", mu)?;
    let metric = Metric::Linf;
    let boundary = Boundary::Cube;
    let per_axis = coupling_grid_resolution(n, d)?;
    let slots = coupling_slots(n, d)?;
    let q = coupling_q(n, d, mu)?;
    let q_heads = coupling_q_heads(q);
    let r = scaling_radius(n, d);

    let mut rng = stream(seed);
    let continuous_points = sample_mu_points(n, d, mu, boundary, &mut rng);
    let continuous = formula_from_points(&continuous_points, n, k, r, metric)?;

    // Snap to cell centers, collapsing same-label same-cell points.
    let scale = per_axis as f64;
    let mut discrete_points = PointSet::new(d, boundary, 2 * n as u32);
    let mut retained_continuous: Vec<&Point> = Vec::new();
    let mut occupied: HashSet<(u32, Vec<u64>)> = HashSet::new();
    let mut same_cell_duplicates = 0u64;
    for (point, &label) in continuous_points.points.iter().zip(&continuous_points.labels) {
        let cell: Vec<u64> = point
            .coords
            .iter()
            .map(|&x| ((x * scale).ceil() as u64).clamp(1, per_axis) - 1)
            .collect();
        if occupied.insert((label, cell.clone())) {
            let snapped = cell.iter().map(|&i| (i as f64 + 0.5) / scale).collect();
            discrete_points.push(Point::new(snapped), label);
            retained_continuous.push(point);
        } else {
            same_cell_duplicates += 1;
        }
    }

    let mut boundary_flip_pairs = 0u64;
    for i in 0..discrete_points.len() {
        for j in i + 1..discrete_points.len() {
            let before = within(
                &retained_continuous[i].coords,
                &retained_continuous[j].coords,
                r,
                metric,
                boundary,
            );
            let after = within(
                &discrete_points.points[i].coords,
                &discrete_points.points[j].coords,
                r,
                metric,
                boundary,
            );
            if before != after {
                boundary_flip_pairs += 1;
            }
        }
    }

    // Repair coins: one Bernoulli(q_heads) per empty slot, realized as
    // a binomial count placed uniformly over the empty slots.
    let empty = slots - occupied.len() as u64;
    let extra_heads = if q_heads > 0.0 && empty > 0 {
        Binomial::new(empty, q_heads)
            .map_err(|e| Error::InvalidParameter(format!("repair coin: {e}")))?
            .sample(&mut rng)
    } else {
        0
    };
    let cells_per_label = slots / (2 * n);
    for _ in 0..extra_heads {
        loop {
            let slot = rng.random_range(0..slots);
            let label = (slot / cells_per_label) as u32 + 1;
            let mut rest = slot % cells_per_label;
            let mut cell = Vec::with_capacity(d);
            for _ in 0..d {
                cell.push(rest % per_axis);
                rest /= per_axis;
            }
            if occupied.insert((label, cell.clone())) {
                let snapped = cell.iter().map(|&i| (i as f64 + 0.5) / scale).collect();
                discrete_points.push(Point::new(snapped), label);
                break;
            }
        }
    }

    let discrete = formula_from_points(&discrete_points, n, k, r, metric)?;
    Ok(CoupledPair {
        continuous,
        discrete,
        collisions: CollisionReport {
            extra_heads,
            same_cell_duplicates,
            boundary_flip_pairs,
        },
    })
}

fn formula_from_points(
    ps: &PointSet,
    n: u64,
    k: usize,
    r: f64,
    metric: Metric,
) -> Result<Formula> {
    let subsets = enumerate_ball_subsets(ps, r, k, metric)?;
    Ok(Formula {
        n_vars: n as u32,
        k,
        clauses: clauses_from_subsets(ps, subsets),
        record: None,
    })
}
