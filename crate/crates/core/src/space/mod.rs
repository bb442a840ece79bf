//! Finite metric spaces and the coarse maps between them.
//!
//! A [`FiniteMetricSpace`] is a truncation of a uniformly locally finite
//! space: a point list with a full distance table. Every quantity that is a
//! supremum on an infinite space (growth, expansion, closeness) becomes an
//! exact maximum by enumeration here. Pair scans are `O(n²)`, which is fine
//! for the desk-scale sizes this crate targets (up to a couple of thousand
//! points).
//!
//! Points carry opaque [`PointId`]s for serialization; everything internal
//! works with dense positional indices `0..len()`.

mod graph;
mod map;

pub mod generators;

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, MetricAxiom, Result};

pub use graph::Graph;
pub(crate) use map::same_space;
pub use map::{closeness, verify_mutual_inverse, CoarseMap, ExpansionProfile, MutualInverseReport};

/// Tolerance for comparisons between distances. Graph metrics are integral,
/// so for them this is the same as exact comparison.
pub const DIST_TOL: f64 = 1e-12;

/// A set of points, stored as positional indices.
pub type PointSet = BTreeSet<usize>;

/// Opaque point identifier: an integer or a string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointId {
    Int(i64),
    Name(String),
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointId::Int(i) => write!(f, "{i}"),
            PointId::Name(s) => f.write_str(s),
        }
    }
}

impl From<i64> for PointId {
    fn from(i: i64) -> Self {
        PointId::Int(i)
    }
}

impl From<usize> for PointId {
    fn from(i: usize) -> Self {
        PointId::Int(i as i64)
    }
}

impl From<&str> for PointId {
    fn from(s: &str) -> Self {
        PointId::Name(s.to_owned())
    }
}

/// A finite metric space with a full distance table.
#[derive(Debug, Clone)]
pub struct FiniteMetricSpace {
    label: String,
    points: Vec<PointId>,
    index: HashMap<PointId, usize>,
    /// Row-major `n × n`.
    dist: Vec<f64>,
}

impl PartialEq for FiniteMetricSpace {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points && self.dist == other.dist
    }
}

impl FiniteMetricSpace {
    /// Validates a distance table and builds the space.
    ///
    /// Checks shape, zero diagonal, symmetry, positivity off the diagonal,
    /// uniqueness of ids, and the triangle inequality over all triples.
    pub fn build(
        label: impl Into<String>,
        points: Vec<PointId>,
        dist: &[Vec<f64>],
    ) -> Result<Self> {
        let n = points.len();
        if dist.len() != n {
            return Err(Error::MetricViolation {
                axiom: MetricAxiom::Shape,
                witness: vec![dist.len()],
            });
        }
        if let Some(i) = dist.iter().position(|row| row.len() != n) {
            return Err(Error::MetricViolation {
                axiom: MetricAxiom::Shape,
                witness: vec![i],
            });
        }
        let flat: Vec<f64> = dist.iter().flatten().copied().collect();
        let space = Self::from_parts(label.into(), points, flat)?;
        space.check_axioms()?;
        Ok(space)
    }

    /// Shortest-path (hop count) metric of an undirected connected graph,
    /// computed by breadth-first search from every vertex.
    ///
    /// `adjacency[v]` lists the neighbours of vertex `v`; point ids default
    /// to the vertex indices.
    pub fn from_graph(label: impl Into<String>, adjacency: &[Vec<usize>]) -> Result<Self> {
        let points = (0..adjacency.len()).map(PointId::from).collect();
        Self::from_graph_with_ids(label, points, adjacency)
    }

    pub fn from_graph_with_ids(
        label: impl Into<String>,
        points: Vec<PointId>,
        adjacency: &[Vec<usize>],
    ) -> Result<Self> {
        let n = adjacency.len();
        if points.len() != n {
            return Err(Error::InvalidParams(format!(
                "{} point ids for {} vertices",
                points.len(),
                n
            )));
        }
        for (v, nbrs) in adjacency.iter().enumerate() {
            if let Some(&w) = nbrs.iter().find(|&&w| w >= n) {
                return Err(Error::UnknownPoint(format!("vertex {w} (neighbour of {v})")));
            }
        }
        let mut dist = vec![f64::INFINITY; n * n];
        let mut queue = VecDeque::new();
        for root in 0..n {
            let row = &mut dist[root * n..(root + 1) * n];
            row[root] = 0.0;
            queue.clear();
            queue.push_back(root);
            while let Some(v) = queue.pop_front() {
                let dv = row[v];
                for &w in &adjacency[v] {
                    if row[w].is_infinite() {
                        row[w] = dv + 1.0;
                        queue.push_back(w);
                    }
                }
            }
            if let Some(unreached) = row.iter().position(|d| d.is_infinite()) {
                return Err(Error::DisconnectedGraph { root, unreached });
            }
        }
        // Adjacency lists may be one-sided; symmetrize to the shorter route.
        for i in 0..n {
            for j in (i + 1)..n {
                let d = dist[i * n + j].min(dist[j * n + i]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Self::from_parts(label.into(), points, dist)
    }

    fn from_parts(label: String, points: Vec<PointId>, dist: Vec<f64>) -> Result<Self> {
        let mut index = HashMap::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if let Some(j) = index.insert(p.clone(), i) {
                return Err(Error::InvalidParams(format!(
                    "duplicate point id {p} at positions {j} and {i}"
                )));
            }
        }
        Ok(Self {
            label,
            points,
            index,
            dist,
        })
    }

    fn check_axioms(&self) -> Result<()> {
        let n = self.len();
        let violation = |axiom, witness| Err(Error::MetricViolation { axiom, witness });
        for i in 0..n {
            for j in 0..n {
                let d = self.dist(i, j);
                if !d.is_finite() {
                    return violation(MetricAxiom::NonFinite, vec![i, j]);
                }
                if i == j && d != 0.0 {
                    return violation(MetricAxiom::Diagonal, vec![i]);
                }
                if i != j && d <= 0.0 {
                    return violation(MetricAxiom::Positivity, vec![i, j]);
                }
                if (d - self.dist(j, i)).abs() > DIST_TOL {
                    return violation(MetricAxiom::Symmetry, vec![i, j]);
                }
            }
        }
        for x in 0..n {
            for y in 0..n {
                let dxy = self.dist(x, y);
                for z in 0..n {
                    if dxy > self.dist(x, z) + self.dist(z, y) + DIST_TOL {
                        return violation(MetricAxiom::Triangle, vec![x, z, y]);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[PointId] {
        &self.points
    }

    pub fn id(&self, i: usize) -> &PointId {
        &self.points[i]
    }

    pub fn index_of(&self, id: &PointId) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownPoint(id.to_string()))
    }

    /// Resolves a list of ids into a point set.
    pub fn resolve<'a>(&self, ids: impl IntoIterator<Item = &'a PointId>) -> Result<PointSet> {
        ids.into_iter().map(|id| self.index_of(id)).collect()
    }

    #[inline]
    pub fn dist(&self, x: usize, y: usize) -> f64 {
        self.dist[x * self.len() + y]
    }

    /// Row of the distance table for `x`.
    pub fn row(&self, x: usize) -> &[f64] {
        let n = self.len();
        &self.dist[x * n..(x + 1) * n]
    }

    pub fn to_table(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|x| self.row(x).to_vec()).collect()
    }

    pub fn check_point(&self, x: usize) -> Result<()> {
        if x < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownPoint(format!("index {x}")))
        }
    }

    pub fn check_set(&self, set: &PointSet) -> Result<()> {
        match set.last() {
            Some(&x) => self.check_point(x),
            None => Ok(()),
        }
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest nonzero distance, or `None` for a one-point space.
    pub fn min_positive_distance(&self) -> Option<f64> {
        self.dist
            .iter()
            .copied()
            .filter(|&d| d > 0.0)
            .min_by(f64::total_cmp)
    }

    /// `d(x, A)`; infinite for empty `A`.
    pub fn dist_to_set(&self, x: usize, set: &PointSet) -> f64 {
        let row = self.row(x);
        set.iter().map(|&a| row[a]).fold(f64::INFINITY, f64::min)
    }

    /// `d(A, B) = min d(a, b)`; infinite if either is empty.
    pub fn set_distance(&self, a: &PointSet, b: &PointSet) -> f64 {
        a.iter()
            .map(|&x| self.dist_to_set(x, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// `B_r(A) = { y : d(y, A) ≤ r }`.
    pub fn ball(&self, centers: &PointSet, r: f64) -> Result<PointSet> {
        self.check_set(centers)?;
        if r < 0.0 {
            return Err(Error::InvalidParams(format!("negative radius {r}")));
        }
        Ok(self.ball_unchecked(centers, r))
    }

    pub(crate) fn ball_unchecked(&self, centers: &PointSet, r: f64) -> PointSet {
        if r <= DIST_TOL {
            return centers.clone();
        }
        (0..self.len())
            .filter(|&y| self.dist_to_set(y, centers) <= r + DIST_TOL)
            .collect()
    }

    /// `B_r(x)` for a single center.
    pub fn point_ball(&self, x: usize, r: f64) -> PointSet {
        self.row(x)
            .iter()
            .enumerate()
            .filter(|(_, &d)| d <= r + DIST_TOL)
            .map(|(y, _)| y)
            .collect()
    }

    /// `max_x |B_r(x)|`.
    pub fn growth(&self, r: f64) -> usize {
        (0..self.len())
            .map(|x| self.row(x).iter().filter(|&&d| d <= r + DIST_TOL).count())
            .max()
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> FiniteMetricSpace {
        generators::path(n).unwrap()
    }

    fn set(xs: &[usize]) -> PointSet {
        xs.iter().copied().collect()
    }

    #[test]
    fn single_point_space() {
        let s = FiniteMetricSpace::build("pt", vec![PointId::from(0usize)], &[vec![0.0]]).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.growth(0.0), 1);
    }

    #[test]
    fn explicit_path_metric_validates() {
        let table: Vec<Vec<f64>> = (0..5)
            .map(|i: i32| (0..5).map(|j: i32| (i - j).abs() as f64).collect())
            .collect();
        let ids = (0..5usize).map(PointId::from).collect();
        let s = FiniteMetricSpace::build("P5", ids, &table).unwrap();
        assert_eq!(s.dist(0, 4), 4.0);
    }

    #[test]
    fn triangle_violation_reports_triple() {
        let table = vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0],
            vec![5.0, 1.0, 0.0],
        ];
        let ids = (0..3usize).map(PointId::from).collect();
        match FiniteMetricSpace::build("bad", ids, &table) {
            Err(Error::MetricViolation {
                axiom: MetricAxiom::Triangle,
                witness,
            }) => assert_eq!(witness, vec![0, 1, 2]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn asymmetric_and_duplicate_rejected() {
        let ids: Vec<PointId> = (0..2usize).map(PointId::from).collect();
        let r = FiniteMetricSpace::build("a", ids, &[vec![0.0, 1.0], vec![2.0, 0.0]]);
        assert!(matches!(
            r,
            Err(Error::MetricViolation {
                axiom: MetricAxiom::Symmetry,
                ..
            })
        ));
        let dup = vec![PointId::from("a"), PointId::from("a")];
        assert!(FiniteMetricSpace::build("d", dup, &[vec![0.0, 1.0], vec![1.0, 0.0]]).is_err());
        let ids: Vec<PointId> = (0..2usize).map(PointId::from).collect();
        let zero = FiniteMetricSpace::build("z", ids, &[vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert!(matches!(
            zero,
            Err(Error::MetricViolation {
                axiom: MetricAxiom::Positivity,
                ..
            })
        ));
    }

    #[test]
    fn graph_distances() {
        assert_eq!(path(5).dist(0, 4), 4.0);
        let c8 = generators::cycle(8).unwrap();
        assert_eq!(c8.dist(0, 5), 3.0);
        let err = FiniteMetricSpace::from_graph("two", &[vec![], vec![]]).unwrap_err();
        assert!(matches!(err, Error::DisconnectedGraph { root: 0, unreached: 1 }));
    }

    #[test]
    fn balls_on_path() {
        let p5 = path(5);
        assert_eq!(p5.ball(&set(&[0]), 0.0).unwrap(), set(&[0]));
        assert_eq!(p5.ball(&set(&[0]), 1.0).unwrap(), set(&[0, 1]));
        assert_eq!(p5.ball(&set(&[0, 4]), 1.0).unwrap(), set(&[0, 1, 3, 4]));
        assert!(matches!(p5.ball(&set(&[7]), 1.0), Err(Error::UnknownPoint(_))));
    }

    #[test]
    fn growth_on_path() {
        let p5 = path(5);
        assert_eq!(p5.growth(0.0), 1);
        assert_eq!(p5.growth(1.0), 3);
        assert_eq!(p5.growth(4.0), 5);
    }

    #[test]
    fn ids_resolve() {
        let s = FiniteMetricSpace::from_graph_with_ids(
            "named",
            vec!["a".into(), "b".into()],
            &[vec![1], vec![0]],
        )
        .unwrap();
        assert_eq!(s.index_of(&"b".into()).unwrap(), 1);
        assert!(s.index_of(&"c".into()).is_err());
    }
}
