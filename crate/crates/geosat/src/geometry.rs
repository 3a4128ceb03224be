//! Points in the unit cube, distance semantics, and grid-indexed
//! enumeration of all k-subsets of points that fit in a ball of
//! radius r.
//!
//! "k points in a ball of radius r" is implemented as all pairwise
//! distances at most r. For the sup metric that is exactly the
//! smallest-enclosing-ball condition; for the Euclidean metric the two
//! readings differ for k >= 3 and the pairwise rule is used throughout.
//! Distance ties count as inside (closed balls).

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Largest subset size `enumerate_ball_subsets` accepts. Clause widths
/// of interest are tiny and the subset count explodes combinatorially
/// beyond this.
pub const MAX_SUBSET_K: usize = 12;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Sup metric: the largest per-coordinate gap.
    Linf,
    /// Euclidean metric.
    L2,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Plain unit cube.
    Cube,
    /// Periodic boundary: per-coordinate gap is min(|a-b|, 1-|a-b|).
    /// Makes leading-order pair probabilities exact.
    Torus,
}

/// A position in [0,1]^d.
#[derive(Clone, PartialEq, Debug)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Point labels; formula models use them as literal or variable ids.
pub type LabelId = u32;

/// Labeled points sharing one dimension and boundary mode. Immutable
/// after construction in practice; safe to share across threads.
#[derive(Clone, PartialEq, Debug)]
pub struct PointSet {
    pub dimension: usize,
    pub boundary: Boundary,
    pub points: Vec<Point>,
    /// Label of each point, parallel to `points`. Labels live in
    /// 1..=label_universe.
    pub labels: Vec<LabelId>,
    /// Size of the declared label universe.
    pub label_universe: u32,
}

impl PointSet {
    pub fn new(dimension: usize, boundary: Boundary, label_universe: u32) -> Self {
        assert!(dimension >= 1, "dimension must be at least 1");
        PointSet {
            dimension,
            boundary,
            points: Vec::new(),
            labels: Vec::new(),
            label_universe,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, point: Point, label: LabelId) {
        debug_assert_eq!(point.dim(), self.dimension);
        self.points.push(point);
        self.labels.push(label);
    }
}

fn uniform_point(d: usize, rng: &mut RngStream) -> Point {
    Point::new((0..d).map(|_| rng.random::<f64>()).collect())
}

/// `count` points i.i.d. uniform on [0,1]^d, labeled 1..=count in draw
/// order. Boundary mode defaults to cube; callers that want the torus
/// set the field afterwards (positions are boundary-agnostic).
pub fn sample_uniform_points(count: usize, d: usize, rng: &mut RngStream) -> PointSet {
    let mut ps = PointSet::new(d, Boundary::Cube, count as u32);
    for i in 0..count {
        ps.push(uniform_point(d, rng), i as u32 + 1);
    }
    ps
}

/// Poisson(lambda) draw as u64; lambda = 0 yields 0.
pub(crate) fn poisson_u64(lambda: f64, rng: &mut RngStream) -> u64 {
    assert!(lambda >= 0.0 && lambda.is_finite());
    if lambda == 0.0 {
        return 0;
    }
    let dist = Poisson::new(lambda).expect("positive finite lambda");
    dist.sample(rng) as u64
}

/// A Poisson point process of the given intensity on [0,1]^d: the
/// count is Poisson(intensity), positions are i.i.d. uniform given the
/// count. Labels are 1..=count in draw order.
pub fn sample_poisson_process(intensity: f64, d: usize, rng: &mut RngStream) -> PointSet {
    let count = poisson_u64(intensity, rng) as usize;
    sample_uniform_points(count, d, rng)
}

fn coord_gap(a: f64, b: f64, boundary: Boundary) -> f64 {
    let g = (a - b).abs();
    match boundary {
        Boundary::Cube => g,
        Boundary::Torus => g.min(1.0 - g),
    }
}

/// Distance between two points of equal dimension.
pub fn distance(p: &Point, q: &Point, metric: Metric, boundary: Boundary) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            left: p.dim(),
            right: q.dim(),
        });
    }
    Ok(distance_unchecked(&p.coords, &q.coords, metric, boundary))
}

pub(crate) fn distance_unchecked(a: &[f64], b: &[f64], metric: Metric, boundary: Boundary) -> f64 {
    match metric {
        Metric::Linf => a
            .iter()
            .zip(b)
            .map(|(x, y)| coord_gap(*x, *y, boundary))
            .fold(0.0, f64::max),
        Metric::L2 => a
            .iter()
            .zip(b)
            .map(|(x, y)| {
                let g = coord_gap(*x, *y, boundary);
                g * g
            })
            .sum::<f64>()
            .sqrt(),
    }
}

/// The closed-ball edge predicate used by every enumeration path. For
/// L2 it compares squared sums, avoiding the square root.
pub(crate) fn within(a: &[f64], b: &[f64], r: f64, metric: Metric, boundary: Boundary) -> bool {
    match metric {
        Metric::Linf => a
            .iter()
            .zip(b)
            .all(|(x, y)| coord_gap(*x, *y, boundary) <= r),
        Metric::L2 => {
            let rr = r * r;
            let mut acc = 0.0;
            for (x, y) in a.iter().zip(b) {
                let g = coord_gap(*x, *y, boundary);
                acc += g * g;
                if acc > rr {
                    return false;
                }
            }
            true
        }
    }
}

/// Uniform grid over [0,1]^d bucketing point indices by cell.
///
/// Cube mode: cell width is exactly `cell_size`; a point's cell is
/// floor(coord / cell_size) per axis, with coordinate 1.0 clamped into
/// the last cell. Torus mode: the axis is tiled evenly with
/// floor(1 / cell_size) cells, so every cell is at least `cell_size`
/// wide; an uneven seam cell narrower than the query radius would
/// break the 3^d wrapped-neighborhood guarantee.
#[derive(Clone, Debug)]
pub struct GridIndex {
    pub cell_size: f64,
    pub cells_per_axis: i64,
    dimension: usize,
    boundary: Boundary,
    cells: HashMap<Vec<i64>, Vec<u32>>,
}

impl GridIndex {
    pub fn build(ps: &PointSet, cell_size: f64) -> GridIndex {
        assert!(cell_size > 0.0 && cell_size.is_finite());
        let cells_per_axis = match ps.boundary {
            Boundary::Cube => ((1.0 / cell_size).ceil() as i64).max(1),
            Boundary::Torus => ((1.0 / cell_size).floor() as i64).max(1),
        };
        let width = match ps.boundary {
            Boundary::Cube => cell_size,
            Boundary::Torus => 1.0 / cells_per_axis as f64,
        };
        let mut cells: HashMap<Vec<i64>, Vec<u32>> = HashMap::new();
        for (i, p) in ps.points.iter().enumerate() {
            let key = cell_of(&p.coords, width, cells_per_axis, ps.boundary);
            cells.entry(key).or_default().push(i as u32);
        }
        GridIndex {
            cell_size: width,
            cells_per_axis,
            dimension: ps.dimension,
            boundary: ps.boundary,
            cells,
        }
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    fn points_in(&self, key: &[i64]) -> &[u32] {
        self.cells.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Distinct cell keys of the 3^d neighborhood around `center`,
    /// sorted. Cube mode drops out-of-range keys; torus mode wraps,
    /// which can alias offsets when an axis has fewer than 3 cells.
    fn neighbor_keys(&self, center: &[i64]) -> Vec<Vec<i64>> {
        let mut keys = Vec::with_capacity(3usize.pow(self.dimension as u32));
        let mut offset = vec![-1i64; self.dimension];
        'outer: loop {
            let mut key = Vec::with_capacity(self.dimension);
            let mut ok = true;
            for axis in 0..self.dimension {
                let raw = center[axis] + offset[axis];
                let idx = match self.boundary {
                    Boundary::Cube => {
                        if raw < 0 || raw >= self.cells_per_axis {
                            ok = false;
                            break;
                        }
                        raw
                    }
                    Boundary::Torus => raw.rem_euclid(self.cells_per_axis),
                };
                key.push(idx);
            }
            if ok {
                keys.push(key);
            }
            for axis in 0..self.dimension {
                offset[axis] += 1;
                if offset[axis] <= 1 {
                    continue 'outer;
                }
                offset[axis] = -1;
            }
            break;
        }
        keys.sort();
        keys.dedup();
        keys
    }
}

fn cell_of(coords: &[f64], width: f64, cells_per_axis: i64, boundary: Boundary) -> Vec<i64> {
    coords
        .iter()
        .map(|&x| {
            let raw = (x / width).floor() as i64;
            match boundary {
                Boundary::Cube => raw.min(cells_per_axis - 1).max(0),
                Boundary::Torus => raw.rem_euclid(cells_per_axis),
            }
        })
        .collect()
}

/// All k-element point-index subsets whose pairwise distance is at
/// most r, as sorted index tuples in lexicographic order. Every
/// k-subset of a larger mutually-close clique is emitted once. Asking
/// for k larger than the point count yields an empty sequence.
pub fn enumerate_ball_subsets(
    ps: &PointSet,
    r: f64,
    k: usize,
    metric: Metric,
) -> Result<Vec<Vec<u32>>> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "radius must be positive and finite, got {r}"
        )));
    }
    if !(2..=MAX_SUBSET_K).contains(&k) {
        return Err(Error::LengthOutOfRange {
            value: k,
            lo: 2,
            hi: MAX_SUBSET_K,
        });
    }
    if ps.len() < k {
        return Ok(Vec::new());
    }

    let grid = GridIndex::build(ps, r);
    let boundary = ps.boundary;
    let mut out: Vec<Vec<u32>> = Vec::new();

    for i in 0..ps.len() as u32 {
        let pi = &ps.points[i as usize].coords;
        let center = cell_of(pi, grid.cell_size, grid.cells_per_axis, boundary);
        // Neighbors of the anchor: every clique member lies within r of
        // its minimum-index point, hence inside the 3^d neighborhood.
        let mut cand: Vec<u32> = Vec::new();
        for key in grid.neighbor_keys(&center) {
            for &j in grid.points_in(&key) {
                if j > i && within(pi, &ps.points[j as usize].coords, r, metric, boundary) {
                    cand.push(j);
                }
            }
        }
        if k == 2 {
            for j in cand {
                out.push(vec![i, j]);
            }
            continue;
        }
        cand.sort_unstable();
        let mut tuple = vec![i];
        grow_cliques(ps, r, k, metric, boundary, &cand, &mut tuple, &mut out);
    }

    out.sort();
    Ok(out)
}

/// Extend `tuple` with members of `cand` (each already within r of all
/// current members), emitting every completion to size k.
fn grow_cliques(
    ps: &PointSet,
    r: f64,
    k: usize,
    metric: Metric,
    boundary: Boundary,
    cand: &[u32],
    tuple: &mut Vec<u32>,
    out: &mut Vec<Vec<u32>>,
) {
    for (pos, &j) in cand.iter().enumerate() {
        tuple.push(j);
        if tuple.len() == k {
            out.push(tuple.clone());
        } else {
            let pj = &ps.points[j as usize].coords;
            let next: Vec<u32> = cand[pos + 1..]
                .iter()
                .copied()
                .filter(|&m| within(pj, &ps.points[m as usize].coords, r, metric, boundary))
                .collect();
            if tuple.len() + next.len() >= k {
                grow_cliques(ps, r, k, metric, boundary, &next, tuple, out);
            }
        }
        tuple.pop();
    }
}
