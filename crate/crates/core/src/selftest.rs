//! A fixed-seed sweep over the invariants of every module, for release
//! gating from the command line.

use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::functions::separated_family;
use crate::iso::{goal_table, random_local_unitary, random_phases, SetSampler, SpatialIsomorphism, SupportFamily};
use crate::operator::{io, op_norm, LinearOperator, C64};
use crate::rigidity::{
    audit_certificate, csb_combine, extract, hall_check, max_support_diameter, support_families, ExtractParams,
    HallWitness, TieBreak,
};
use crate::space::generators::{cycle, grid, path, random_bce, tree};
use crate::space::{closeness, CoarseMap, FiniteMetricSpace, PointSet};

/// Deliberate defects, to confirm that the checks react (or, for the
/// tie-break, that they are insensitive to it).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Runs the pipeline with the reversed matching tie-break.
    TieBreak,
    /// Scales one entry of a unitary by `1 + 1e-6` before building the
    /// isomorphism.
    Unitarity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, r: Result<std::result::Result<(), String>>) -> SelfCheck {
    let (passed, detail) = match r {
        Ok(Ok(())) => (true, String::new()),
        Ok(Err(msg)) => (false, msg),
        Err(e) => (false, e.to_string()),
    };
    SelfCheck { name, passed, detail }
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn spaces() -> Result<Vec<Arc<FiniteMetricSpace>>> {
    Ok(vec![
        Arc::new(path(9)?),
        Arc::new(cycle(8)?),
        Arc::new(grid(3, 3)?),
        Arc::new(tree(2, 2)?),
    ])
}

fn perturbed(space: &Arc<FiniteMetricSpace>, seed: u64) -> Result<SpatialIsomorphism> {
    let f = random_bce(space.clone(), 1.0, seed)?;
    SpatialIsomorphism::from_bijection(&f, Some(&random_phases(space.len(), seed)))?.perturb_locally(1.0, seed)
}

fn check_operators() -> Result<std::result::Result<(), String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s = Arc::new(path(8)?);
    for _ in 0..10 {
        let m = random_matrix(&mut rng, 8);
        let a = LinearOperator::on(s.clone(), m.clone())?;
        let e = a.conditional_expectation()?;
        let ee = e.conditional_expectation()?;
        if e.entries() != ee.entries() {
            return Ok(Err("conditional expectation not idempotent".into()));
        }
        if e.op_norm()? > a.op_norm()? + 1e-9 {
            return Ok(Err("conditional expectation not contractive".into()));
        }
        let svd = m.clone().singular_values().max();
        let ours = op_norm(&m)?;
        if (svd - ours).abs() > 1e-8 {
            return Ok(Err(format!("op_norm {ours} vs singular value {svd}")));
        }
        if io::decode_matrix(&io::encode_matrix(&m))? != m {
            return Ok(Err("matrix serialization does not round-trip".into()));
        }
    }
    Ok(Ok(()))
}

fn check_isometry(unitarity_fault: bool) -> Result<std::result::Result<(), String>> {
    let s = Arc::new(grid(3, 3)?);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let base = perturbed(&s, 5)?;
    let iso = if unitarity_fault {
        let mut u = base.matrix().clone();
        u[(0, 0)] *= 1.0 + 1e-6;
        SpatialIsomorphism::new(s.clone(), s.clone(), u, base.provenance().clone())?
    } else {
        base
    };
    for _ in 0..5 {
        let a = LinearOperator::on(s.clone(), random_matrix(&mut rng, 9))?;
        let d = (iso.apply(&a)?.op_norm()? - a.op_norm()?).abs();
        if d > 1e-8 {
            return Ok(Err(format!("norm changed by {d}")));
        }
    }
    for a in [PointSet::from([0]), PointSet::from([1, 4, 7]), (0..9).collect()] {
        let chi = LinearOperator::indicator(s.clone(), &a)?;
        let rank = iso.apply(&chi)?.numerical_rank(1e-9)?;
        if rank != a.len() {
            return Ok(Err(format!("rank {rank} for a set of {} points", a.len())));
        }
    }
    Ok(Ok(()))
}

fn check_local_unitaries() -> Result<std::result::Result<(), String>> {
    for s in spaces()? {
        for (radius, seed) in [(0.0, 1), (1.0, 2), (2.0, 3)] {
            let w = random_local_unitary(s.clone(), radius, seed)?;
            let defect = w.unitarity_defect()?;
            let prop = w.propagation(1e-10)?;
            if defect > 1e-10 || prop > radius {
                return Ok(Err(format!("{}: defect {defect:e}, propagation {prop} > {radius}", s.label())));
            }
        }
    }
    Ok(Ok(()))
}

fn check_support_symmetry_and_monotonicity() -> Result<std::result::Result<(), String>> {
    for (k, s) in spaces()?.iter().enumerate() {
        let iso = perturbed(s, k as u64 + 10)?;
        for eps in [0.05, 0.2, 0.5] {
            for x in 0..s.len() {
                let ys = iso.support_set(x, eps)?;
                for y in 0..s.len() {
                    if ys.contains(&y) != iso.inverse_support_set(y, eps)?.contains(&x) {
                        return Ok(Err(format!("asymmetric support at ({x}, {y}), eps {eps}")));
                    }
                }
                if !iso.support_set(x, eps / 2.0)?.is_superset(&ys) {
                    return Ok(Err(format!("support not monotone in eps at {x}")));
                }
            }
        }
        let eps = [0.5, 0.3, 0.1];
        let ms = [0.0, 1.0, 2.0];
        let t = goal_table(&iso, &eps, &ms, &SetSampler::new(3))?;
        let at = |i: usize, j: usize| t[i * ms.len() + j].estimate.residual;
        for i in 0..eps.len() {
            for j in 0..ms.len() {
                let next_m = j + 1 < ms.len() && at(i, j + 1) > at(i, j) + 1e-9;
                let next_eps = i + 1 < eps.len() && at(i + 1, j) > at(i, j) + 1e-9;
                if next_m || next_eps {
                    return Ok(Err(format!("GOAL table not monotone at eps {}, m {}", eps[i], ms[j])));
                }
            }
        }
    }
    Ok(Ok(()))
}

fn brute_force_hall(family: &SupportFamily) -> bool {
    let n = family.len();
    (1u32..(1 << n)).all(|mask| {
        let a: PointSet = (0..n).filter(|&k| mask >> k & 1 == 1).collect();
        a.len() <= family.image(&a).len()
    })
}

fn check_hall() -> Result<std::result::Result<(), String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for trial in 0..100 {
        let nx = rng.random_range(1..=8);
        let ny = rng.random_range(1..=8);
        let p = rng.random_range(0.05..0.6);
        let sets: Vec<PointSet> = (0..nx).map(|_| (0..ny).filter(|_| rng.random_bool(p)).collect()).collect();
        let fam = SupportFamily::new(Arc::new(path(nx)?), Arc::new(path(ny)?), sets)?;
        let ok = brute_force_hall(&fam);
        match hall_check(&fam) {
            HallWitness::Matching(m) => {
                let distinct: BTreeSet<usize> = m.iter().copied().collect();
                if !ok || distinct.len() != nx || (0..nx).any(|x| !fam.get(x).contains(&m[x])) {
                    return Ok(Err(format!("trial {trial}: bad matching")));
                }
            }
            HallWitness::Deficiency { set, neighborhood } => {
                if ok || fam.image(&set) != neighborhood || set.len() <= neighborhood.len() {
                    return Ok(Err(format!("trial {trial}: bad deficiency witness")));
                }
            }
        }
    }
    Ok(Ok(()))
}

fn check_csb() -> Result<std::result::Result<(), String>> {
    for (k, s) in spaces()?.iter().enumerate() {
        for seed in 0..5u64 {
            let f = random_bce(s.clone(), 2.0, seed + 100 * k as u64)?;
            let g = random_bce(s.clone(), 2.0, seed + 1000)?;
            let h = csb_combine(&f, &g)?;
            if !h.is_bijective() || h != f {
                return Ok(Err(format!("{}: CSB of bijections is not f", s.label())));
            }
            if csb_combine(&f, &f.inverse()?)? != f {
                return Ok(Err("CSB of mutually inverse maps is not f".into()));
            }
        }
    }
    Ok(Ok(()))
}

fn check_round_trip(tie: TieBreak) -> Result<std::result::Result<(), String>> {
    for (k, s) in spaces()?.iter().enumerate() {
        let f = random_bce(s.clone(), 2.0, k as u64)?;
        let iso = SpatialIsomorphism::from_bijection(&f, Some(&random_phases(s.len(), 9)))?;
        let params = ExtractParams {
            tie_break: tie,
            ..ExtractParams::fixed(0.5, 0.0)
        };
        let cert = extract(&iso, &params)?;
        if cert.h != f || cert.goal.residual != 0.0 {
            return Ok(Err(format!("{}: exact round trip lost", s.label())));
        }
    }
    Ok(Ok(()))
}

fn check_certificates(tie: TieBreak) -> Result<std::result::Result<(), String>> {
    for (k, s) in spaces()?.iter().enumerate() {
        let iso = perturbed(s, 20 + k as u64)?;
        let params = ExtractParams {
            tie_break: tie,
            ..ExtractParams::default()
        };
        let cert = match extract(&iso, &params) {
            Ok(c) => c,
            Err(crate::Error::ExtractionFailed(_)) => continue,
            Err(e) => return Err(e),
        };
        let report = audit_certificate(&cert, &iso, None)?;
        let failure = report
            .failures()
            .next()
            .map(|c| format!("{}: {} expected {}, found {}", s.label(), c.name, c.expected, c.found));
        if let Some(msg) = failure {
            return Ok(Err(msg));
        }
    }
    Ok(Ok(()))
}

fn check_closeness_stability(tie: TieBreak) -> Result<std::result::Result<(), String>> {
    for (k, s) in spaces()?.iter().enumerate() {
        let iso = perturbed(s, 30 + k as u64)?;
        let base = ExtractParams::fixed(0.5, 0.0);
        let (Ok(a), Ok(b)) = (
            extract(&iso, &base),
            extract(&iso, &ExtractParams { tie_break: tie, ..base.clone() }),
        ) else {
            continue;
        };
        let (alpha, _) = support_families(&iso, a.params)?;
        let c = closeness(&a.h, &b.h)?;
        let bound = 2.0 * max_support_diameter(&alpha);
        if c > bound {
            return Ok(Err(format!("{}: closeness {c} above {bound}", s.label())));
        }
    }
    Ok(Ok(()))
}

fn check_variation() -> Result<std::result::Result<(), String>> {
    let s = Arc::new(path(200)?);
    let fam = separated_family(&s, 3, 1.0);
    if !fam.gaps_hold(&s) {
        return Ok(Err("separated family gaps fail".into()));
    }
    let g = fam.bump_sum(s.clone())?;
    for n in [2usize, 3] {
        let excl = fam.exclusion(&s, n);
        for r in 1..n {
            let v = g.so_variation(r as f64, &excl);
            if v > r as f64 / n as f64 + 1e-12 {
                return Ok(Err(format!("variation {v} at r {r}, n {n}")));
            }
        }
    }
    Ok(Ok(()))
}

fn check_closeness_axioms() -> Result<std::result::Result<(), String>> {
    for s in spaces()? {
        let f = random_bce(s.clone(), 1.0, 1)?;
        let g = random_bce(s.clone(), 1.0, 2)?;
        let id = CoarseMap::identity(s.clone());
        let (fg, gi, fi) = (closeness(&f, &g)?, closeness(&g, &id)?, closeness(&f, &id)?);
        if fg > gi + fi || closeness(&f, &f)? != 0.0 || fg != closeness(&g, &f)? {
            return Ok(Err(format!("{}: closeness is not a metric", s.label())));
        }
    }
    Ok(Ok(()))
}

/// Every check in a fixed order.
pub fn run(fault: Option<Fault>) -> Vec<SelfCheck> {
    let tie = if fault == Some(Fault::TieBreak) {
        TieBreak::Reverse
    } else {
        TieBreak::Forward
    };
    vec![
        outcome("operator algebra", check_operators()),
        outcome("closeness is a metric", check_closeness_axioms()),
        outcome("isometry and rank preservation", check_isometry(fault == Some(Fault::Unitarity))),
        outcome("local unitaries", check_local_unitaries()),
        outcome("support symmetry and monotonicity", check_support_symmetry_and_monotonicity()),
        outcome("hall against brute force", check_hall()),
        outcome("cantor-schroeder-bernstein", check_csb()),
        outcome("exact round trip", check_round_trip(tie)),
        outcome("certificate audit", check_certificates(tie)),
        outcome("closeness stability", check_closeness_stability(tie)),
        outcome("slow oscillation of separated bumps", check_variation()),
    ]
}
