//! The GOAL(δ) estimate
//! `max(‖(1 − χ_{B_m(Y_{A,ε})})Φ(χ_A)‖, ‖(1 − χ_{B_m(X_{B,ε})})Φ⁻¹(χ_B)‖)`
//! over sampled finite sets.
//!
//! Since `u*` is an isometry, `‖(1 − χ_S) u χ_A u*‖` is the norm of the
//! block of `u` with rows outside `S` and columns in `A`.
//!
//! Above the exhaustive limit only a sample of sets is examined, so the
//! value is a lower bound on the true supremum.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{SpatialIsomorphism, SupportFamily};
use crate::error::{Error, Result};
use crate::operator::{op_norm, C64};
use crate::space::{FiniteMetricSpace, PointSet};

/// Which sets GOAL is evaluated on.
#[derive(Debug, Clone, PartialEq)]
pub struct SetSampler {
    pub seed: u64,
    /// Radii of the balls `B_r(x)` added to the sample.
    pub radii: Vec<f64>,
    pub random_count: usize,
    /// Spaces with at most this many points are enumerated exhaustively.
    pub exhaustive_limit: usize,
}

impl Default for SetSampler {
    fn default() -> Self {
        Self::new(0)
    }
}

impl SetSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            radii: vec![1.0, 2.0, 3.0],
            random_count: 200,
            exhaustive_limit: 12,
        }
    }

    pub fn is_exhaustive(&self, space: &FiniteMetricSpace) -> bool {
        space.len() <= self.exhaustive_limit
    }

    /// Nonempty sets in a fixed order: every subset (by bitmask) for small
    /// spaces, else singletons, then balls, then random subsets, with
    /// repeats dropped.
    pub fn sets(&self, space: &FiniteMetricSpace) -> Vec<PointSet> {
        self.sets_in(space, Direction::Forward)
    }

    /// The sets used for one side of GOAL; the random part of the backward
    /// sample comes from a separate stream.
    pub fn sets_in(&self, space: &FiniteMetricSpace, direction: Direction) -> Vec<PointSet> {
        self.sets_with_stream(space, direction as u64)
    }

    fn sets_with_stream(&self, space: &FiniteMetricSpace, stream: u64) -> Vec<PointSet> {
        let n = space.len();
        if self.is_exhaustive(space) {
            return (1u32..(1 << n))
                .map(|mask| (0..n).filter(|&k| mask >> k & 1 == 1).collect())
                .collect();
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut push = |s: PointSet| {
            if !s.is_empty() && seen.insert(s.clone()) {
                out.push(s);
            }
        };
        for x in 0..n {
            push(PointSet::from([x]));
        }
        for &r in &self.radii {
            for x in 0..n {
                push(space.point_ball(x, r));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        for _ in 0..self.random_count {
            let k = rng.random_range(1..=n);
            push(sample(&mut rng, n, k).into_iter().collect());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// A set `A ⊆ X` pushed through `Φ`.
    Forward = 0,
    /// A set `B ⊆ Y` pulled back through `Φ⁻¹`.
    Backward = 1,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoalEstimate {
    pub residual: f64,
    pub forward_residual: f64,
    pub backward_residual: f64,
    pub worst_direction: Direction,
    /// The maximising set (in the source for `Forward`, the target for
    /// `Backward`); empty when every residual is zero.
    pub worst_set: PointSet,
    pub sets_examined: usize,
    pub exhaustive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoalRow {
    pub eps: f64,
    pub m: f64,
    pub estimate: GoalEstimate,
}

/// `‖(1 − χ_S) m χ_A‖` for `S = family.image(A)`.
pub(crate) fn set_residual(m: &DMatrix<C64>, family: &SupportFamily, a: &PointSet) -> Result<f64> {
    let covered = family.image(a);
    let rows: Vec<usize> = (0..m.nrows()).filter(|y| !covered.contains(y)).collect();
    if rows.is_empty() {
        return Ok(0.0);
    }
    let cols: Vec<usize> = a.iter().copied().collect();
    let block = DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])]);
    op_norm(&block)
}

/// Index and value of the largest residual, first index on ties.
fn worst(m: &DMatrix<C64>, family: &SupportFamily, sets: &[PointSet]) -> Result<(Option<usize>, f64)> {
    let values: Vec<f64> = sets
        .par_iter()
        .map(|a| set_residual(m, family, a))
        .collect::<Result<_>>()?;
    let mut best = (None, 0.0);
    for (k, &v) in values.iter().enumerate() {
        if v > best.1 {
            best = (Some(k), v);
        }
    }
    Ok(best)
}

struct Prepared {
    forward_sets: Vec<PointSet>,
    backward_sets: Vec<PointSet>,
    ut: DMatrix<C64>,
    exhaustive: bool,
}

fn prepare(iso: &SpatialIsomorphism, sampler: &SetSampler) -> Prepared {
    Prepared {
        forward_sets: sampler.sets_in(iso.source(), Direction::Forward),
        backward_sets: sampler.sets_in(iso.target(), Direction::Backward),
        ut: iso.matrix().adjoint(),
        exhaustive: sampler.is_exhaustive(iso.source()),
    }
}

fn estimate(
    iso: &SpatialIsomorphism,
    prep: &Prepared,
    alpha: &SupportFamily,
    beta: &SupportFamily,
) -> Result<GoalEstimate> {
    let (fi, fv) = worst(iso.matrix(), alpha, &prep.forward_sets)?;
    let (bi, bv) = worst(&prep.ut, beta, &prep.backward_sets)?;
    let (worst_direction, worst_set) = if bv > fv {
        (Direction::Backward, bi.map(|k| prep.backward_sets[k].clone()))
    } else {
        (Direction::Forward, fi.map(|k| prep.forward_sets[k].clone()))
    };
    Ok(GoalEstimate {
        residual: fv.max(bv),
        forward_residual: fv,
        backward_residual: bv,
        worst_direction,
        worst_set: worst_set.unwrap_or_default(),
        sets_examined: prep.forward_sets.len() + prep.backward_sets.len(),
        exhaustive: prep.exhaustive,
    })
}

/// GOAL for arbitrary support families: `alpha` on the source (built from
/// `Φ`), `beta` on the target (built from `Φ⁻¹`).
pub fn goal_for_families(
    iso: &SpatialIsomorphism,
    alpha: &SupportFamily,
    beta: &SupportFamily,
    sampler: &SetSampler,
) -> Result<GoalEstimate> {
    if alpha.len() != iso.source().len() || beta.len() != iso.target().len() {
        return Err(Error::SpaceMismatch("support families do not match the isomorphism".into()));
    }
    estimate(iso, &prepare(iso, sampler), alpha, beta)
}

/// GOAL at `(ε, m)` with `α(x) = B_m(Y_{x,ε})` and `β(y) = B_m(X_{y,ε})`.
pub fn goal_estimate(
    iso: &SpatialIsomorphism,
    eps: f64,
    m: f64,
    sampler: &SetSampler,
) -> Result<GoalEstimate> {
    let alpha = iso.support_family(eps, m)?;
    let beta = iso.inverse().support_family(eps, m)?;
    estimate(iso, &prepare(iso, sampler), &alpha, &beta)
}

/// GOAL over a grid, one row per `(ε, m)` in `eps_grid × m_grid` order. The
/// sampled sets are shared by every row, so the table is monotone whenever
/// the supports are.
pub fn goal_table(
    iso: &SpatialIsomorphism,
    eps_grid: &[f64],
    m_grid: &[f64],
    sampler: &SetSampler,
) -> Result<Vec<GoalRow>> {
    let prep = prepare(iso, sampler);
    let inv = iso.inverse();
    let mut rows = Vec::with_capacity(eps_grid.len() * m_grid.len());
    for &eps in eps_grid {
        for &m in m_grid {
            let alpha = iso.support_family(eps, m)?;
            let beta = inv.support_family(eps, m)?;
            rows.push(GoalRow {
                eps,
                m,
                estimate: estimate(iso, &prep, &alpha, &beta)?,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::iso::random_phases;
    use crate::operator::LinearOperator;
    use crate::space::generators::{grid, path};
    use crate::space::CoarseMap;

    fn exact(n: usize, phases: bool) -> SpatialIsomorphism {
        let s = Arc::new(path(n).unwrap());
        let f = CoarseMap::from_fn(s.clone(), s, move |x| n - 1 - x).unwrap();
        let ph = phases.then(|| random_phases(n, 4));
        SpatialIsomorphism::from_bijection(&f, ph.as_deref()).unwrap()
    }

    fn perturbed(w: usize, h: usize, seed: u64) -> SpatialIsomorphism {
        let s = Arc::new(grid(w, h).unwrap());
        SpatialIsomorphism::from_bijection(&CoarseMap::identity(s), None)
            .unwrap()
            .perturb_locally(1.0, seed)
            .unwrap()
    }

    #[test]
    fn sampler_shapes() {
        let small = path(4).unwrap();
        let s = SetSampler::new(1);
        assert_eq!(s.sets(&small).len(), 15);
        let big = grid(5, 5).unwrap();
        let sets = s.sets(&big);
        assert!(sets.len() > 25);
        assert_eq!(sets, SetSampler::new(1).sets(&big));
        assert_ne!(sets, SetSampler::new(2).sets(&big));
        assert!(sets.iter().all(|a| !a.is_empty()));
    }

    #[test]
    fn exact_isos_have_zero_residual() {
        for phases in [false, true] {
            let iso = exact(9, phases);
            let g = goal_estimate(&iso, 0.5, 0.0, &SetSampler::new(0)).unwrap();
            assert_eq!(g.residual, 0.0);
            assert!(g.worst_set.is_empty());
            assert!(g.exhaustive);
        }
        let big = exact(20, true);
        assert_eq!(goal_estimate(&big, 0.5, 0.0, &SetSampler::new(3)).unwrap().residual, 0.0);
    }

    #[test]
    fn degenerate_parameters() {
        let iso = perturbed(3, 3, 1);
        let g = goal_estimate(&iso, 1.0, 0.0, &SetSampler::new(0)).unwrap();
        assert!((g.residual - 1.0).abs() < 1e-9);
        let diam = iso.source().diameter();
        let g = goal_estimate(&iso, 0.05, diam, &SetSampler::new(0)).unwrap();
        assert_eq!(g.residual, 0.0);
    }

    #[test]
    fn residual_matches_direct_conjugation() {
        let iso = perturbed(4, 3, 8);
        let alpha = iso.support_family(0.4, 0.0).unwrap();
        for a in SetSampler::new(0).sets(iso.source()).into_iter().step_by(7).take(60) {
            let fast = set_residual(iso.matrix(), &alpha, &a).unwrap();
            let chi = LinearOperator::indicator(iso.source().clone(), &a).unwrap();
            let img = iso.apply(&chi).unwrap();
            let outside: PointSet = (0..12).filter(|y| !alpha.image(&a).contains(y)).collect();
            let proj = LinearOperator::indicator(iso.target().clone(), &outside).unwrap();
            let slow = proj.compose(&img).unwrap().op_norm().unwrap();
            assert!((fast - slow).abs() < 1e-8, "{fast} vs {slow}");
        }
    }

    #[test]
    fn table_is_monotone_and_deterministic() {
        let iso = perturbed(5, 4, 2);
        let eps = [0.5, 0.3, 0.1];
        let ms = [0.0, 1.0, 2.0];
        let sampler = SetSampler::new(11);
        let t = goal_table(&iso, &eps, &ms, &sampler).unwrap();
        assert_eq!(t, goal_table(&iso, &eps, &ms, &sampler).unwrap());
        let at = |i: usize, j: usize| t[i * ms.len() + j].estimate.residual;
        for i in 0..eps.len() {
            for j in 0..ms.len() {
                if j + 1 < ms.len() {
                    assert!(at(i, j + 1) <= at(i, j) + 1e-9);
                }
                if i + 1 < eps.len() {
                    assert!(at(i + 1, j) <= at(i, j) + 1e-9);
                }
            }
        }
        assert_eq!(t[0].estimate, goal_estimate(&iso, 0.5, 0.0, &sampler).unwrap());
    }
}
