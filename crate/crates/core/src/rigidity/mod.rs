//! Recovering a bijective coarse equivalence from a spatial isomorphism.
//!
//! Support families `α` (from `Φ`) and `β` (from `Φ⁻¹`) are built over a
//! parameter grid. At the first grid point where both satisfy Hall's
//! condition, injective selections `f ∈ α` and `g ∈ β` are combined by the
//! Cantor–Schröder–Bernstein chain construction into a bijection `h`.

mod csb;
mod hall;
mod verify;

use std::fmt;

use crate::error::{Error, Result};
use crate::iso::{goal_for_families, EpsRow, GoalEstimate, SetSampler, SpatialIsomorphism, SupportFamily, SupportParams};
use crate::space::{closeness, CoarseMap, ExpansionProfile, PointSet};

pub use csb::{chain_kinds, csb_combine, ChainKind};
pub use hall::{hall_check, hall_check_with, select_injection, HallWitness, TieBreak};
pub use verify::{audit_certificate, verify_certificate, Check, CertificateReport};

pub const DEFAULT_EPS_GRID: [f64; 6] = [0.5, 0.4, 0.3, 0.2, 0.1, 0.05];
pub const DEFAULT_M_GRID: [f64; 6] = [0.0, 1.0, 2.0, 3.0, 5.0, 8.0];
pub const DEFAULT_R_GRID: [f64; 3] = [1.0, 2.0, 3.0];
pub const DEFAULT_EXPANSION_RADII: [f64; 5] = [1.0, 2.0, 3.0, 4.0, 5.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// `α(x) = B_m(Y_{x,ε})`.
    #[default]
    Support,
    /// `α_r(x)` from flattened indicators.
    Flattened,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Support => "support",
            Strategy::Flattened => "flattened",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractParams {
    pub strategy: Strategy,
    /// Tried largest first.
    pub eps_grid: Vec<f64>,
    /// Tried smallest first, each with the whole `ε` grid.
    pub m_grid: Vec<f64>,
    /// Flattened strategy only, smallest first.
    pub r_grid: Vec<f64>,
    pub threshold: f64,
    /// Target for the GOAL residual; recorded as `goal_met`.
    pub delta: f64,
    pub sampler: SetSampler,
    pub tie_break: TieBreak,
    pub expansion_radii: Vec<f64>,
}

impl Default for ExtractParams {
    fn default() -> Self {
        Self {
            strategy: Strategy::Support,
            eps_grid: DEFAULT_EPS_GRID.to_vec(),
            m_grid: DEFAULT_M_GRID.to_vec(),
            r_grid: DEFAULT_R_GRID.to_vec(),
            threshold: 0.5,
            delta: 0.5,
            sampler: SetSampler::default(),
            tie_break: TieBreak::Forward,
            expansion_radii: DEFAULT_EXPANSION_RADII.to_vec(),
        }
    }
}

impl ExtractParams {
    /// A single `(ε, m)` point.
    pub fn fixed(eps: f64, m: f64) -> Self {
        Self {
            eps_grid: vec![eps],
            m_grid: vec![m],
            ..Self::default()
        }
    }

    /// Grid points in search order.
    pub fn candidates(&self) -> Result<Vec<SupportParams>> {
        let sorted = |v: &[f64], descending: bool| {
            let mut v = v.to_vec();
            v.sort_by(|a, b| if descending { b.total_cmp(a) } else { a.total_cmp(b) });
            v.dedup();
            v
        };
        let out: Vec<SupportParams> = match self.strategy {
            Strategy::Support => {
                let eps = sorted(&self.eps_grid, true);
                sorted(&self.m_grid, false)
                    .into_iter()
                    .flat_map(|m| eps.iter().map(move |&eps| SupportParams::Support { eps, m }))
                    .collect()
            }
            Strategy::Flattened => sorted(&self.r_grid, false)
                .into_iter()
                .map(|r| SupportParams::Flattened {
                    r,
                    threshold: self.threshold,
                })
                .collect(),
        };
        if out.is_empty() {
            return Err(Error::InvalidParams("empty parameter grid".into()));
        }
        Ok(out)
    }
}

/// `α` built from `iso` and `β` built from `iso⁻¹` with the same parameters.
pub fn support_families(
    iso: &SpatialIsomorphism,
    params: SupportParams,
) -> Result<(SupportFamily, SupportFamily)> {
    let inv = iso.inverse();
    match params {
        SupportParams::Support { eps, m } => Ok((iso.support_family(eps, m)?, inv.support_family(eps, m)?)),
        SupportParams::Flattened { r, threshold } => Ok((
            iso.support_family_flattened(r, threshold)?,
            inv.support_family_flattened(r, threshold)?,
        )),
        SupportParams::Explicit => Err(Error::InvalidParams("explicit families have no parameters".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    HallForward,
    HallBackward,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::HallForward => "hall_forward",
            Stage::HallBackward => "hall_backward",
        })
    }
}

/// A grid point rejected by Hall's condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Attempt {
    pub params: SupportParams,
    pub stage: Stage,
    pub deficiency: PointSet,
    pub neighborhood: PointSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionFailure {
    /// Stage at which the last grid point failed.
    pub stage: Stage,
    /// Hall violator from the last grid point.
    pub witness: PointSet,
    pub attempts: Vec<Attempt>,
    /// Worst single-point residuals over the `ε` grid.
    pub residuals: Vec<EpsRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BijectionCertificate {
    pub h: CoarseMap,
    pub f_raw: CoarseMap,
    pub g_raw: CoarseMap,
    pub params: SupportParams,
    pub strategy: Strategy,
    pub tie_break: TieBreak,
    pub sampler: SetSampler,
    pub closeness_h_f: f64,
    pub goal: GoalEstimate,
    pub delta: f64,
    pub expansion_h: ExpansionProfile,
    pub expansion_h_inv: ExpansionProfile,
    /// Grid points rejected before this one.
    pub attempts: Vec<Attempt>,
}

impl BijectionCertificate {
    pub fn goal_residual(&self) -> f64 {
        self.goal.residual
    }

    pub fn goal_met(&self) -> bool {
        self.goal.residual < self.delta
    }
}

/// Runs the pipeline over `params`' grid and returns the certificate of the
/// first grid point passing Hall both ways.
pub fn extract(iso: &SpatialIsomorphism, params: &ExtractParams) -> Result<BijectionCertificate> {
    let mut attempts = Vec::new();
    for candidate in params.candidates()? {
        let (alpha, beta) = support_families(iso, candidate)?;
        let fw = hall_check_with(&alpha, params.tie_break);
        let bw = hall_check_with(&beta, params.tie_break);
        let (f_table, g_table) = match (fw, bw) {
            (HallWitness::Matching(f), HallWitness::Matching(g)) => (f, g),
            (HallWitness::Deficiency { set, neighborhood }, _) => {
                attempts.push(Attempt {
                    params: candidate,
                    stage: Stage::HallForward,
                    deficiency: set,
                    neighborhood,
                });
                continue;
            }
            (_, HallWitness::Deficiency { set, neighborhood }) => {
                attempts.push(Attempt {
                    params: candidate,
                    stage: Stage::HallBackward,
                    deficiency: set,
                    neighborhood,
                });
                continue;
            }
        };
        let f_raw = CoarseMap::new(iso.source().clone(), iso.target().clone(), f_table)?;
        let g_raw = CoarseMap::new(iso.target().clone(), iso.source().clone(), g_table)?;
        let h = csb_combine(&f_raw, &g_raw)?;
        let closeness_h_f = closeness(&h, &f_raw)?;
        let goal = goal_for_families(iso, &alpha, &beta, &params.sampler)?;
        let expansion_h = h.expansion_profile(&params.expansion_radii)?;
        let expansion_h_inv = h.inverse()?.expansion_profile(&params.expansion_radii)?;
        return Ok(BijectionCertificate {
            h,
            f_raw,
            g_raw,
            params: candidate,
            strategy: params.strategy,
            tie_break: params.tie_break,
            sampler: params.sampler.clone(),
            closeness_h_f,
            goal,
            delta: params.delta,
            expansion_h,
            expansion_h_inv,
            attempts,
        });
    }
    let last = attempts.last().expect("candidates are nonempty and all failed");
    let residuals = if params.eps_grid.is_empty() {
        Vec::new()
    } else {
        iso.residual_table(&params.eps_grid)?
    };
    Err(Error::ExtractionFailed(Box::new(ExtractionFailure {
        stage: last.stage,
        witness: last.deficiency.clone(),
        attempts,
        residuals,
    })))
}

/// Largest diameter of a single `α(x)`.
pub fn max_support_diameter(family: &SupportFamily) -> f64 {
    let t = family.target();
    family
        .sets()
        .iter()
        .map(|s| {
            s.iter()
                .flat_map(|&a| s.iter().map(move |&b| t.dist(a, b)))
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::iso::random_phases;
    use crate::space::generators::{grid, path};

    fn reversal_p5(phases: bool) -> SpatialIsomorphism {
        let s = Arc::new(path(5).unwrap());
        let f = CoarseMap::from_fn(s.clone(), s, |x| 4 - x).unwrap();
        let ph = phases.then(|| random_phases(5, 8));
        SpatialIsomorphism::from_bijection(&f, ph.as_deref()).unwrap()
    }

    #[test]
    fn reversal_round_trip() {
        let iso = reversal_p5(false);
        let cert = extract(&iso, &ExtractParams::fixed(0.5, 0.0)).unwrap();
        assert_eq!(cert.h.table(), &[4, 3, 2, 1, 0]);
        assert_eq!(cert.closeness_h_f, 0.0);
        assert_eq!(cert.goal_residual(), 0.0);
        assert!(cert.attempts.is_empty());
        assert!(cert.goal_met());
        let twisted = extract(&reversal_p5(true), &ExtractParams::fixed(0.5, 0.0)).unwrap();
        assert_eq!(twisted, cert);
    }

    #[test]
    fn search_order() {
        let p = ExtractParams::default();
        let c = p.candidates().unwrap();
        assert_eq!(c.len(), 36);
        assert_eq!(c[0], SupportParams::Support { eps: 0.5, m: 0.0 });
        assert_eq!(c[1], SupportParams::Support { eps: 0.4, m: 0.0 });
        assert_eq!(c[6], SupportParams::Support { eps: 0.5, m: 1.0 });
        let flat = ExtractParams {
            strategy: Strategy::Flattened,
            r_grid: vec![2.0, 1.0],
            ..ExtractParams::default()
        };
        assert_eq!(
            flat.candidates().unwrap()[0],
            SupportParams::Flattened { r: 1.0, threshold: 0.5 }
        );
    }

    #[test]
    fn flattened_strategy_on_exact_iso() {
        let iso = reversal_p5(true);
        let params = ExtractParams {
            strategy: Strategy::Flattened,
            ..ExtractParams::default()
        };
        let cert = extract(&iso, &params).unwrap();
        assert_eq!(cert.h.table(), &[4, 3, 2, 1, 0]);
        assert_eq!(cert.goal_residual(), 0.0);
    }

    #[test]
    fn failure_reports_every_attempt() {
        let s = Arc::new(grid(3, 3).unwrap());
        let iso = SpatialIsomorphism::from_bijection(&CoarseMap::identity(s), None)
            .unwrap()
            .perturb_locally(2.0, 3)
            .unwrap();
        // Above every entry modulus, so every α(x) is empty.
        let params = ExtractParams {
            eps_grid: vec![1.5],
            m_grid: vec![0.0, 1.0],
            ..ExtractParams::default()
        };
        match extract(&iso, &params) {
            Err(Error::ExtractionFailed(f)) => {
                assert_eq!(f.stage, Stage::HallForward);
                assert_eq!(f.attempts.len(), 2);
                assert_eq!(f.witness, PointSet::from([0]));
                assert_eq!(f.residuals.len(), 1);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn tie_breaks_stay_close() {
        let s = Arc::new(grid(4, 4).unwrap());
        let iso = SpatialIsomorphism::from_bijection(&CoarseMap::identity(s), None)
            .unwrap()
            .perturb_locally(1.0, 21)
            .unwrap();
        let base = ExtractParams::fixed(0.05, 1.0);
        let a = extract(&iso, &base).unwrap();
        let b = extract(&iso, &ExtractParams { tie_break: TieBreak::Reverse, ..base }).unwrap();
        let (alpha, _) = support_families(&iso, a.params).unwrap();
        assert!(closeness(&a.h, &b.h).unwrap() <= 2.0 * max_support_diameter(&alpha));
    }
}
