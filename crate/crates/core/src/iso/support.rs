//! `ε`-support sets `Y_{x,ε}`, the support families `α` built from them, and
//! the `ε(δ)` search.
//!
//! `Φ(χ_x) = u_x u_x*` is rank one (`u_x` the column of `u` at `x`), so
//! `‖Φ(χ_x)χ_z‖ = |u_{z,x}| · ‖u_x‖` and nothing needs to be conjugated
//! explicitly. The same holds for rows and `Φ⁻¹`.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::SpatialIsomorphism;
use crate::error::{Error, Result};
use crate::functions::flattened_indicator;
use crate::operator::C64;
use crate::space::{FiniteMetricSpace, PointSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupportParams {
    /// `α(x) = B_m(Y_{x,ε})`.
    Support { eps: f64, m: f64 },
    /// `α_r(x) = {y : ‖Φ(g_{x,r})χ_y‖ > threshold}`.
    Flattened { r: f64, threshold: f64 },
    /// Given directly rather than derived from an isomorphism.
    Explicit,
}

/// One target set per source point.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportFamily {
    source: Arc<FiniteMetricSpace>,
    target: Arc<FiniteMetricSpace>,
    params: SupportParams,
    sets: Vec<PointSet>,
}

impl SupportFamily {
    /// An explicit family `α : source → subsets of target`.
    pub fn new(
        source: Arc<FiniteMetricSpace>,
        target: Arc<FiniteMetricSpace>,
        sets: Vec<PointSet>,
    ) -> Result<Self> {
        if sets.len() != source.len() {
            return Err(Error::InvalidParams(format!(
                "{} sets for {} source points",
                sets.len(),
                source.len()
            )));
        }
        for s in &sets {
            target.check_set(s)?;
        }
        Ok(Self {
            source,
            target,
            params: SupportParams::Explicit,
            sets,
        })
    }

    pub fn source(&self) -> &Arc<FiniteMetricSpace> {
        &self.source
    }

    pub fn target(&self) -> &Arc<FiniteMetricSpace> {
        &self.target
    }

    pub fn params(&self) -> SupportParams {
        self.params
    }

    pub fn sets(&self) -> &[PointSet] {
        &self.sets
    }

    pub fn get(&self, x: usize) -> &PointSet {
        &self.sets[x]
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// `∪_{x∈A} α(x)`, which for the support strategy is `B_m(Y_{A,ε})`.
    pub fn image(&self, a: &PointSet) -> PointSet {
        a.iter().flat_map(|&x| self.sets[x].iter().copied()).collect()
    }

    /// Source points with `α(x) = ∅`.
    pub fn empty_points(&self) -> Vec<usize> {
        (0..self.sets.len()).filter(|&x| self.sets[x].is_empty()).collect()
    }

    /// As a bipartite adjacency list.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        self.sets.iter().map(|s| s.iter().copied().collect()).collect()
    }
}

/// One grid row of [`SpatialIsomorphism::epsilon_for_delta`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsRow {
    pub eps: f64,
    /// `max_x ‖(1 − χ_{Y_{x,ε}})Φ(χ_x)‖`.
    pub forward: f64,
    /// `max_y ‖(1 − χ_{X_{y,ε}})Φ⁻¹(χ_y)‖`.
    pub backward: f64,
    pub feasible: bool,
}

impl EpsRow {
    pub fn residual(&self) -> f64 {
        self.forward.max(self.backward)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsSearch {
    /// Largest feasible grid value.
    pub best_eps: f64,
    pub rows: Vec<EpsRow>,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("eps must be positive and finite, got {eps}")))
    }
}

fn check_radius(m: f64) -> Result<()> {
    if m >= 0.0 && m.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("m must be non-negative and finite, got {m}")))
    }
}

/// `{z : |u_{z,x}| · ‖u_x‖ > eps}` and the mass left outside it.
fn column_support(u: &DMatrix<C64>, x: usize, eps: f64) -> (PointSet, f64) {
    let col = u.column(x);
    let c = col.norm();
    let mut set = PointSet::new();
    let mut outside = 0.0;
    for (z, v) in col.iter().enumerate() {
        if v.norm() * c > eps {
            set.insert(z);
        } else {
            outside += v.norm_sqr();
        }
    }
    (set, outside.sqrt() * c)
}

impl SpatialIsomorphism {
    /// `Y_{x,ε} = {z ∈ Y : ‖Φ(χ_x)χ_z‖ > ε}`.
    pub fn support_set(&self, x: usize, eps: f64) -> Result<PointSet> {
        check_eps(eps)?;
        self.source.check_point(x)?;
        Ok(column_support(&self.u, x, eps).0)
    }

    /// `X_{y,ε} = {x ∈ X : ‖Φ⁻¹(χ_y)χ_x‖ > ε}`.
    pub fn inverse_support_set(&self, y: usize, eps: f64) -> Result<PointSet> {
        check_eps(eps)?;
        self.target.check_point(y)?;
        Ok(column_support(&self.u.adjoint(), y, eps).0)
    }

    /// `α(x) = B_m(Y_{x,ε})` for every source point.
    pub fn support_family(&self, eps: f64, m: f64) -> Result<SupportFamily> {
        check_eps(eps)?;
        check_radius(m)?;
        let sets = (0..self.source.len())
            .map(|x| {
                let y = column_support(&self.u, x, eps).0;
                self.target.ball_unchecked(&y, m)
            })
            .collect();
        Ok(SupportFamily {
            source: self.source.clone(),
            target: self.target.clone(),
            params: SupportParams::Support { eps, m },
            sets,
        })
    }

    /// `α_r(x) = {y : ‖Φ(g_{{x},r})χ_y‖ > threshold}`, using
    /// `‖Φ(g)χ_y‖² = Σ_x' g(x')² |u_{y,x'}|²`.
    pub fn support_family_flattened(&self, r: f64, threshold: f64) -> Result<SupportFamily> {
        if !(threshold >= 0.0) {
            return Err(Error::InvalidParams(format!("threshold must be non-negative, got {threshold}")));
        }
        let weights = self.u.map(|z| z.norm_sqr());
        let mut sets = Vec::with_capacity(self.source.len());
        for x in 0..self.source.len() {
            let g = flattened_indicator(self.source.clone(), &PointSet::from([x]), r)?;
            let g2: Vec<f64> = g.values().iter().map(|v| v * v).collect();
            let set = (0..self.target.len())
                .filter(|&y| {
                    let s: f64 = (0..g2.len()).filter(|&k| g2[k] > 0.0).map(|k| g2[k] * weights[(y, k)]).sum();
                    s.sqrt() > threshold
                })
                .collect();
            sets.push(set);
        }
        Ok(SupportFamily {
            source: self.source.clone(),
            target: self.target.clone(),
            params: SupportParams::Flattened { r, threshold },
            sets,
        })
    }

    /// Worst single-point residuals for each `ε`, largest first. `feasible`
    /// is left `false`.
    pub fn residual_table(&self, eps_grid: &[f64]) -> Result<Vec<EpsRow>> {
        if eps_grid.is_empty() {
            return Err(Error::InvalidParams("empty eps grid".into()));
        }
        let mut grid = eps_grid.to_vec();
        for &e in &grid {
            check_eps(e)?;
        }
        grid.sort_by(|a, b| b.total_cmp(a));
        grid.dedup();

        let ut = self.u.adjoint();
        let worst = |m: &DMatrix<C64>, eps: f64| {
            (0..m.ncols()).map(|k| column_support(m, k, eps).1).fold(0.0, f64::max)
        };
        Ok(grid
            .iter()
            .map(|&eps| EpsRow {
                eps,
                forward: worst(&self.u, eps),
                backward: worst(&ut, eps),
                feasible: false,
            })
            .collect())
    }

    /// Walks `eps_grid` from the largest value down and reports the first
    /// `ε` whose worst single-point residual (both directions) is below
    /// `delta`, with the whole table.
    pub fn epsilon_for_delta(&self, delta: f64, eps_grid: &[f64]) -> Result<EpsSearch> {
        if !(delta > 0.0) {
            return Err(Error::InvalidParams(format!("delta must be positive, got {delta}")));
        }
        let mut rows = self.residual_table(eps_grid)?;
        for r in &mut rows {
            r.feasible = r.residual() < delta;
        }
        match rows.iter().find(|r| r.feasible) {
            Some(r) => Ok(EpsSearch {
                best_eps: r.eps,
                rows,
            }),
            None => Err(Error::NoFeasibleEps {
                best_residual: rows.iter().map(EpsRow::residual).fold(f64::INFINITY, f64::min),
            }),
        }
    }
}
