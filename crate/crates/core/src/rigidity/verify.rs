//! Independent re-checking of a certificate against the isomorphism it came
//! from.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::iso::{goal_for_families, set_residual, Direction, SpatialIsomorphism, SupportFamily};
use crate::operator::C64;
use crate::space::{closeness, same_space, CoarseMap, PointSet};

use super::{support_families, BijectionCertificate};

/// Agreement of recomputed floats with recorded ones.
const RECORD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub checks: Vec<Check>,
    /// `closeness(h, f_true)` when a reference map was supplied.
    pub closeness_to_truth: Option<f64>,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn check(name: &'static str, passed: bool, expected: impl ToString, found: impl ToString) -> Check {
    Check {
        name,
        passed,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

fn first_outside(map: &CoarseMap, family: &SupportFamily) -> Option<usize> {
    (0..map.domain().len()).find(|&x| !family.get(x).contains(&map.apply(x)))
}

/// Points `A` among the sampled sets with residual `< 1` but
/// `|A| > |∪_{x∈A} α(x)|`, which rank preservation rules out.
fn rank_violation(m: &DMatrix<C64>, family: &SupportFamily, sets: &[PointSet]) -> Result<Option<usize>> {
    for (k, a) in sets.iter().enumerate() {
        let image = family.image(a);
        if a.len() > image.len() && set_residual(m, family, a)? < 1.0 {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

/// Every check, failed or not.
pub fn audit_certificate(
    cert: &BijectionCertificate,
    iso: &SpatialIsomorphism,
    f_true: Option<&CoarseMap>,
) -> Result<CertificateReport> {
    let h = &cert.h;
    let (f, g) = (&cert.f_raw, &cert.g_raw);
    let spaces_ok = same_space(h.domain(), iso.source())
        && same_space(h.codomain(), iso.target())
        && same_space(f.domain(), iso.source())
        && same_space(g.domain(), iso.target());
    if !spaces_ok {
        return Err(Error::SpaceMismatch("certificate maps do not live on the isomorphism's spaces".into()));
    }
    let mut checks = Vec::new();

    checks.push(check("bijectivity", h.is_bijective(), "bijective h", match h.collision() {
        None => "bijective".to_string(),
        Some((a, b)) => format!("h({a}) = h({b})"),
    }));
    checks.push(check(
        "injectivity",
        f.is_injective() && g.is_injective(),
        "injective f_raw and g_raw",
        format!("f_raw injective: {}, g_raw injective: {}", f.is_injective(), g.is_injective()),
    ));

    let broken = (0..h.domain().len()).find(|&x| h.apply(x) != f.apply(x) && g.apply(h.apply(x)) != x);
    checks.push(check(
        "dichotomy",
        broken.is_none(),
        "h(x) = f_raw(x) or g_raw(h(x)) = x",
        broken.map_or("holds".to_string(), |x| format!("fails at {x}")),
    ));

    let (alpha, beta) = support_families(iso, cert.params)?;
    let bad_f = first_outside(f, &alpha);
    let bad_g = first_outside(g, &beta);
    checks.push(check(
        "selection",
        bad_f.is_none() && bad_g.is_none(),
        "f_raw(x) ∈ α(x) and g_raw(y) ∈ β(y)",
        match (bad_f, bad_g) {
            (None, None) => "holds".to_string(),
            (Some(x), _) => format!("f_raw({x}) outside α({x})"),
            (_, Some(y)) => format!("g_raw({y}) outside β({y})"),
        },
    ));

    let c_hf = closeness(h, f)?;
    checks.push(check(
        "closeness_h_f",
        (c_hf - cert.closeness_h_f).abs() <= RECORD_TOL,
        cert.closeness_h_f,
        c_hf,
    ));
    // Where h = g⁻¹, d(h(x), f(x)) = d(y, f(g(y))) for y = h(x).
    let bound = closeness(&f.compose(g)?, &CoarseMap::identity(iso.target().clone()))?;
    checks.push(check(
        "closeness_bound",
        c_hf <= bound,
        format!("≤ {bound}"),
        c_hf,
    ));

    let radii: Vec<f64> = cert.expansion_h.samples.iter().map(|s| s.0).collect();
    let exp = h.expansion_profile(&radii)?;
    checks.push(check(
        "expansion_h",
        exp == cert.expansion_h,
        format!("{:?}", cert.expansion_h.samples),
        format!("{:?}", exp.samples),
    ));
    let radii: Vec<f64> = cert.expansion_h_inv.samples.iter().map(|s| s.0).collect();
    let exp_inv = match h.inverse() {
        Ok(inv) => Some(inv.expansion_profile(&radii)?),
        Err(_) => None,
    };
    checks.push(check(
        "expansion_h_inv",
        exp_inv.as_ref() == Some(&cert.expansion_h_inv),
        format!("{:?}", cert.expansion_h_inv.samples),
        exp_inv.map_or("h not invertible".to_string(), |e| format!("{:?}", e.samples)),
    ));

    let goal = goal_for_families(iso, &alpha, &beta, &cert.sampler)?;
    checks.push(check(
        "goal_residual",
        (goal.residual - cert.goal.residual).abs() <= RECORD_TOL,
        cert.goal.residual,
        goal.residual,
    ));

    let sets_x = cert.sampler.sets(iso.source());
    let sets_y = cert.sampler.sets_in(iso.target(), Direction::Backward);
    let fwd = rank_violation(iso.matrix(), &alpha, &sets_x)?;
    let bwd = rank_violation(&iso.matrix().adjoint(), &beta, &sets_y)?;
    checks.push(check(
        "hall_from_goal",
        fwd.is_none() && bwd.is_none(),
        "|A| ≤ |B_m(Y_{A,ε})| wherever the residual is below 1",
        match (fwd, bwd) {
            (None, None) => "holds".to_string(),
            (Some(k), _) => format!("forward set {:?}", sets_x[k]),
            (_, Some(k)) => format!("backward set {:?}", sets_y[k]),
        },
    ));

    let closeness_to_truth = match f_true {
        Some(t) => Some(closeness(h, t)?),
        None => None,
    };
    Ok(CertificateReport {
        checks,
        closeness_to_truth,
    })
}

/// Like [`audit_certificate`], but the first failed check becomes an error.
pub fn verify_certificate(
    cert: &BijectionCertificate,
    iso: &SpatialIsomorphism,
    f_true: Option<&CoarseMap>,
) -> Result<CertificateReport> {
    let report = audit_certificate(cert, iso, f_true)?;
    if let Some(c) = report.failures().next() {
        return Err(Error::CertificateInvalid {
            field: c.name.to_string(),
            expected: c.expected.clone(),
            found: c.found.clone(),
        });
    }
    Ok(report)
}
