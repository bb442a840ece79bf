use super::{FiniteMetricSpace, PointId};
use crate::error::{Error, Result};

/// An undirected graph whose path metric defines a space.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub label: String,
    pub points: Vec<PointId>,
    pub adjacency: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(label: impl Into<String>, n: usize) -> Self {
        Self {
            label: label.into(),
            points: (0..n).map(PointId::from).collect(),
            adjacency: vec![Vec::new(); n],
        }
    }

    pub fn from_edges(
        label: impl Into<String>,
        points: Vec<PointId>,
        edges: &[(usize, usize)],
    ) -> Result<Self> {
        let n = points.len();
        let mut g = Self {
            label: label.into(),
            points,
            adjacency: vec![Vec::new(); n],
        };
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::UnknownPoint(format!("edge ({a}, {b})")));
            }
            g.add_edge(a, b);
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Adds the edge `a-b` unless it is a loop or already present.
    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a == b || self.adjacency[a].contains(&b) {
            return;
        }
        self.adjacency[a].push(b);
        self.adjacency[b].push(a);
    }

    /// Each undirected edge once, as `(low, high)`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<_> = self
            .adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, nbrs)| nbrs.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn to_space(&self) -> Result<FiniteMetricSpace> {
        FiniteMetricSpace::from_graph_with_ids(self.label.clone(), self.points.clone(), &self.adjacency)
    }
}
