//! Standard test geometries.
//!
//! Each generator has a `*_graph` form returning the [`Graph`] (what gets
//! written to disk) and a short form returning the metric space directly.

use std::sync::Arc;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CoarseMap, FiniteMetricSpace, Graph, DIST_TOL};
use crate::error::{Error, Result};

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParams(msg.into())
}

pub fn path_graph(n: usize) -> Result<Graph> {
    if n == 0 {
        return Err(invalid("path needs at least 1 vertex"));
    }
    let mut g = Graph::new(format!("path-{n}"), n);
    for i in 1..n {
        g.add_edge(i - 1, i);
    }
    Ok(g)
}

pub fn cycle_graph(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(invalid("cycle needs at least 3 vertices"));
    }
    let mut g = Graph::new(format!("cycle-{n}"), n);
    for i in 0..n {
        g.add_edge(i, (i + 1) % n);
    }
    Ok(g)
}

/// `width × height` grid; vertex `row * width + col`.
pub fn grid_graph(width: usize, height: usize) -> Result<Graph> {
    if width == 0 || height == 0 {
        return Err(invalid("grid sides must be positive"));
    }
    let mut g = Graph::new(format!("grid-{width}x{height}"), width * height);
    for r in 0..height {
        for c in 0..width {
            let v = r * width + c;
            if c + 1 < width {
                g.add_edge(v, v + 1);
            }
            if r + 1 < height {
                g.add_edge(v, v + width);
            }
        }
    }
    Ok(g)
}

/// Complete rooted tree; vertices numbered in breadth-first order.
pub fn tree_graph(arity: usize, depth: usize) -> Result<Graph> {
    if arity == 0 {
        return Err(invalid("tree arity must be positive"));
    }
    let mut n = 1usize;
    let mut level = 1usize;
    for _ in 0..depth {
        level = level
            .checked_mul(arity)
            .ok_or_else(|| invalid("tree too large"))?;
        n = n.checked_add(level).ok_or_else(|| invalid("tree too large"))?;
    }
    if n > 1 << 16 {
        return Err(invalid(format!("tree with {n} vertices is too large")));
    }
    let mut g = Graph::new(format!("tree-{arity}-{depth}"), n);
    for child in 1..n {
        g.add_edge((child - 1) / arity, child);
    }
    Ok(g)
}

/// `n` uniform points in the unit square joined when within `threshold`.
/// Fails with [`Error::DisconnectedGraph`] when the sample is disconnected.
pub fn random_geometric_graph(n: usize, threshold: f64, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(invalid("random-geometric needs at least 1 point"));
    }
    if !(threshold > 0.0) {
        return Err(invalid("random-geometric threshold must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<(f64, f64)> = (0..n).map(|_| (rng.random(), rng.random())).collect();
    let mut g = Graph::new(format!("random-geometric-{n}-{threshold}-{seed}"), n);
    for i in 0..n {
        for j in (i + 1)..n {
            let (dx, dy) = (coords[i].0 - coords[j].0, coords[i].1 - coords[j].1);
            if dx.hypot(dy) <= threshold {
                g.add_edge(i, j);
            }
        }
    }
    g.to_space()?;
    Ok(g)
}

/// Seeded random `degree`-regular simple connected graph (pairing model
/// with rejection).
pub fn random_regular_graph(n: usize, degree: usize, seed: u64) -> Result<Graph> {
    if degree == 0 || degree >= n {
        return Err(invalid("expander degree must satisfy 0 < d < n"));
    }
    if (n * degree) % 2 != 0 {
        return Err(invalid("n * d must be even"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, degree)).collect();
    'attempt: for _ in 0..10_000 {
        stubs.shuffle(&mut rng);
        let mut g = Graph::new(format!("expander-{n}-{degree}-{seed}"), n);
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            if a == b || g.adjacency[a].contains(&b) {
                continue 'attempt;
            }
            g.add_edge(a, b);
        }
        if g.to_space().is_ok() {
            return Ok(g);
        }
    }
    Err(invalid(format!(
        "no simple connected {degree}-regular graph on {n} vertices found"
    )))
}

pub fn path(n: usize) -> Result<FiniteMetricSpace> {
    path_graph(n)?.to_space()
}

pub fn cycle(n: usize) -> Result<FiniteMetricSpace> {
    cycle_graph(n)?.to_space()
}

pub fn grid(width: usize, height: usize) -> Result<FiniteMetricSpace> {
    grid_graph(width, height)?.to_space()
}

pub fn tree(arity: usize, depth: usize) -> Result<FiniteMetricSpace> {
    tree_graph(arity, depth)?.to_space()
}

/// A bijection `f` with `d(x, f(x)) ≤ displacement` for every `x`, built
/// from seeded transpositions of nearby image points. A swap is kept only
/// if both affected points still move at most `displacement`, so the
/// result is a bijective coarse equivalence with expansion at most
/// `r + 2 · displacement`.
pub fn random_bce(space: Arc<FiniteMetricSpace>, displacement: f64, seed: u64) -> Result<CoarseMap> {
    if !(displacement >= 0.0) {
        return Err(invalid(format!("displacement must be non-negative, got {displacement}")));
    }
    let n = space.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f: Vec<usize> = (0..n).collect();
    let mut pre: Vec<usize> = (0..n).collect();
    for _ in 0..4 * n {
        let y = rng.random_range(0..n);
        let near: Vec<usize> = space.point_ball(y, displacement).into_iter().filter(|&z| z != y).collect();
        let Some(&z) = near.choose(&mut rng) else {
            continue;
        };
        let (p, q) = (pre[y], pre[z]);
        if space.dist(p, z) <= displacement + DIST_TOL && space.dist(q, y) <= displacement + DIST_TOL {
            f.swap(p, q);
            pre.swap(y, z);
        }
    }
    CoarseMap::new(space.clone(), space, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_bce_respects_displacement() {
        let s = Arc::new(grid(4, 4).unwrap());
        let f = random_bce(s.clone(), 2.0, 7).unwrap();
        assert!(f.is_bijective());
        assert!((0..16).all(|x| s.dist(x, f.apply(x)) <= 2.0));
        assert_ne!(f, CoarseMap::identity(s.clone()));
        assert_eq!(f, random_bce(s.clone(), 2.0, 7).unwrap());
        let prof = f.expansion_profile(&[1.0, 2.0, 3.0]).unwrap();
        for &(r, e) in &prof.samples {
            assert!(e <= r + 4.0);
        }
        assert_eq!(random_bce(s.clone(), 0.0, 1).unwrap(), CoarseMap::identity(s));
    }

    #[test]
    fn grid_center_cross() {
        let g = grid(3, 3).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.growth(1.0), 5);
    }

    #[test]
    fn invalid_params() {
        assert!(matches!(cycle(1), Err(Error::InvalidParams(_))));
        assert!(path(0).is_err());
        assert!(random_regular_graph(5, 3, 0).is_err());
    }

    #[test]
    fn tree_sizes() {
        assert_eq!(tree(2, 3).unwrap().len(), 15);
        assert_eq!(tree(3, 0).unwrap().len(), 1);
        assert_eq!(tree(2, 3).unwrap().diameter(), 6.0);
    }

    #[test]
    fn random_regular_is_regular_and_deterministic() {
        let a = random_regular_graph(20, 3, 11).unwrap();
        let b = random_regular_graph(20, 3, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.adjacency.iter().all(|nbrs| nbrs.len() == 3));
    }

    #[test]
    fn random_geometric_dense_threshold_connects() {
        let g = random_geometric_graph(30, 0.5, 4).unwrap();
        assert_eq!(g.len(), 30);
        assert!(random_geometric_graph(30, 0.01, 4).is_err());
    }
}
