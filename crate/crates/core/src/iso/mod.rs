//! Spatially implemented isomorphisms `Φ = Ad(u)` between the (finite)
//! uniform Roe algebras of two spaces.
//!
//! Every `*`-isomorphism between uniform Roe algebras is spatial, so a
//! unitary `u : ℓ₂(X) → ℓ₂(Y)` is the whole datum. At finite scale the two
//! spaces must have the same cardinality.

mod goal;
mod support;
mod unitary;

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operator::{unitarity_defect, LinearOperator, C64};
use crate::space::{same_space, CoarseMap, FiniteMetricSpace};

pub(crate) use goal::set_residual;
pub use goal::{goal_estimate, goal_for_families, goal_table, Direction, GoalEstimate, GoalRow, SetSampler};
pub use support::{EpsRow, EpsSearch, SupportFamily, SupportParams};
pub use unitary::{haar_unitary, local_partition, random_local_unitary, random_phases};

/// Allowed `max(‖u*u − 1‖, ‖uu* − 1‖)`.
pub const UNITARY_TOL: f64 = 1e-10;
/// Allowed `| |λ| − 1 |` for phases.
pub const PHASE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProvenanceKind {
    Bijection,
    Perturbed,
    File,
}

/// How an isomorphism was produced. Carried into serialized files so that
/// extraction runs can be compared against the generating bijection.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub kind: ProvenanceKind,
    /// Generating bijection, as positional indices.
    pub f: Option<Vec<usize>>,
    pub phases: Option<Vec<C64>>,
    pub radius: Option<f64>,
    pub seed: Option<u64>,
    /// Measured propagation of the perturbing unitary.
    pub perturbation_propagation: Option<f64>,
}

impl Provenance {
    pub fn file() -> Self {
        Self {
            kind: ProvenanceKind::File,
            f: None,
            phases: None,
            radius: None,
            seed: None,
            perturbation_propagation: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpatialIsomorphism {
    source: Arc<FiniteMetricSpace>,
    target: Arc<FiniteMetricSpace>,
    /// `|Y| × |X|` unitary.
    u: DMatrix<C64>,
    provenance: Provenance,
}

impl SpatialIsomorphism {
    /// Wraps a unitary, checking shape and unitarity.
    pub fn new(
        source: Arc<FiniteMetricSpace>,
        target: Arc<FiniteMetricSpace>,
        u: DMatrix<C64>,
        provenance: Provenance,
    ) -> Result<Self> {
        if source.len() != target.len() {
            return Err(Error::SpaceMismatch(format!(
                "spaces of different sizes ({} and {}) have no spatial isomorphism",
                source.len(),
                target.len()
            )));
        }
        if u.shape() != (target.len(), source.len()) {
            return Err(Error::SpaceMismatch(format!(
                "unitary is {}x{}, spaces need {}x{}",
                u.nrows(),
                u.ncols(),
                target.len(),
                source.len()
            )));
        }
        let defect = unitarity_defect(&u)?;
        if !(defect <= UNITARY_TOL) {
            return Err(Error::NotUnitary { defect });
        }
        Ok(Self {
            source,
            target,
            u,
            provenance,
        })
    }

    /// `u δ_x = λ_x δ_{f(x)}`, so `Φ(χ_x) = χ_{f(x)}` exactly.
    pub fn from_bijection(f: &CoarseMap, phases: Option<&[C64]>) -> Result<Self> {
        if !f.is_bijective() {
            return f.inverse().map(|_| unreachable!("bijectivity already refuted"));
        }
        let n = f.domain().len();
        if let Some(ph) = phases {
            if ph.len() != n {
                return Err(Error::InvalidParams(format!("{} phases for {n} points", ph.len())));
            }
            if let Some((point, z)) = ph
                .iter()
                .enumerate()
                .find(|(_, z)| (z.norm() - 1.0).abs() > PHASE_TOL)
            {
                return Err(Error::NonUnitPhase {
                    point,
                    modulus: z.norm(),
                });
            }
        }
        let mut u = DMatrix::zeros(n, n);
        for x in 0..n {
            u[(f.apply(x), x)] = phases.map_or(C64::new(1.0, 0.0), |ph| ph[x]);
        }
        Ok(Self {
            source: f.domain().clone(),
            target: f.codomain().clone(),
            u,
            provenance: Provenance {
                kind: ProvenanceKind::Bijection,
                f: Some(f.table().to_vec()),
                phases: phases.map(<[C64]>::to_vec),
                ..Provenance::file()
            },
        })
    }

    pub fn source(&self) -> &Arc<FiniteMetricSpace> {
        &self.source
    }

    pub fn target(&self) -> &Arc<FiniteMetricSpace> {
        &self.target
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.u
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// The generating bijection recorded in the provenance, if any.
    pub fn generating_map(&self) -> Option<CoarseMap> {
        let f = self.provenance.f.as_ref()?;
        CoarseMap::new(self.source.clone(), self.target.clone(), f.clone()).ok()
    }

    /// `Φ⁻¹ = Ad(u*)`, as an isomorphism from `Y` to `X`.
    pub fn inverse(&self) -> Self {
        Self {
            source: self.target.clone(),
            target: self.source.clone(),
            u: self.u.adjoint(),
            provenance: Provenance::file(),
        }
    }

    /// `Ad(u) ∘ Ad(w) = Ad(uw)` for a unitary `w` on the source.
    pub fn perturb(&self, w: &LinearOperator) -> Result<Self> {
        if !same_space(w.domain(), &self.source) || !same_space(w.codomain(), &self.source) {
            return Err(Error::SpaceMismatch("perturbation must act on the source space".into()));
        }
        let defect = w.unitarity_defect()?;
        if !(defect <= UNITARY_TOL) {
            return Err(Error::NotUnitary { defect });
        }
        Ok(Self {
            source: self.source.clone(),
            target: self.target.clone(),
            u: &self.u * w.entries(),
            provenance: Provenance {
                kind: ProvenanceKind::Perturbed,
                radius: None,
                seed: None,
                perturbation_propagation: None,
                ..self.provenance.clone()
            },
        })
    }

    /// Perturbs by [`random_local_unitary`] and records radius, seed and the
    /// measured propagation of the perturbation.
    pub fn perturb_locally(&self, radius: f64, seed: u64) -> Result<Self> {
        let w = random_local_unitary(self.source.clone(), radius, seed)?;
        let prop = w.propagation(1e-10)?;
        let mut out = self.perturb(&w)?;
        out.provenance.radius = Some(radius);
        out.provenance.seed = Some(seed);
        out.provenance.perturbation_propagation = Some(prop);
        Ok(out)
    }

    /// `Φ(a) = u a u*`.
    pub fn apply(&self, a: &LinearOperator) -> Result<LinearOperator> {
        if !same_space(a.domain(), &self.source) || !same_space(a.codomain(), &self.source) {
            return Err(Error::SpaceMismatch("operand must act on the source space".into()));
        }
        let m = &self.u * a.entries() * self.u.adjoint();
        LinearOperator::on(self.target.clone(), m)
    }

    /// `Φ⁻¹(b) = u* b u`.
    pub fn apply_inverse(&self, b: &LinearOperator) -> Result<LinearOperator> {
        if !same_space(b.domain(), &self.target) || !same_space(b.codomain(), &self.target) {
            return Err(Error::SpaceMismatch("operand must act on the target space".into()));
        }
        let m = self.u.adjoint() * b.entries() * &self.u;
        LinearOperator::on(self.source.clone(), m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::generators::path;
    use crate::space::PointSet;

    fn p5() -> Arc<FiniteMetricSpace> {
        Arc::new(path(5).unwrap())
    }

    fn reversal(s: Arc<FiniteMetricSpace>) -> CoarseMap {
        let n = s.len();
        CoarseMap::from_fn(s.clone(), s, |x| n - 1 - x).unwrap()
    }

    #[test]
    fn identity_bijection_gives_identity_unitary() {
        let s = p5();
        let iso = SpatialIsomorphism::from_bijection(&CoarseMap::identity(s), None).unwrap();
        assert_eq!(iso.matrix(), &DMatrix::identity(5, 5));
    }

    #[test]
    fn reversal_is_antidiagonal() {
        let iso = SpatialIsomorphism::from_bijection(&reversal(p5()), None).unwrap();
        for y in 0..5 {
            for x in 0..5 {
                let expect = if x + y == 4 { 1.0 } else { 0.0 };
                assert_eq!(iso.matrix()[(y, x)], C64::new(expect, 0.0));
            }
        }
    }

    #[test]
    fn phases_cancel_on_projections() {
        let s = p5();
        let phases = vec![C64::new(0.0, 1.0); 5];
        let iso = SpatialIsomorphism::from_bijection(&reversal(s.clone()), Some(&phases)).unwrap();
        for x in 0..5 {
            let chi = LinearOperator::indicator(s.clone(), &PointSet::from([x])).unwrap();
            let img = iso.apply(&chi).unwrap();
            let expect = LinearOperator::indicator(s.clone(), &PointSet::from([4 - x])).unwrap();
            assert_eq!(img.entries(), expect.entries());
        }
    }

    #[test]
    fn bad_inputs() {
        let s = p5();
        let collapse = CoarseMap::from_fn(s.clone(), s.clone(), |x| x / 2).unwrap();
        assert!(matches!(
            SpatialIsomorphism::from_bijection(&collapse, None),
            Err(Error::NotBijective(_))
        ));
        let phases = vec![C64::new(2.0, 0.0); 5];
        assert!(matches!(
            SpatialIsomorphism::from_bijection(&CoarseMap::identity(s.clone()), Some(&phases)),
            Err(Error::NonUnitPhase { point: 0, .. })
        ));
        let mut m = DMatrix::<C64>::identity(5, 5);
        m[(0, 0)] = C64::new(1.1, 0.0);
        assert!(matches!(
            SpatialIsomorphism::new(s.clone(), s.clone(), m, Provenance::file()),
            Err(Error::NotUnitary { .. })
        ));
        let p6 = Arc::new(path(6).unwrap());
        assert!(matches!(
            SpatialIsomorphism::new(s, p6, DMatrix::identity(6, 5), Provenance::file()),
            Err(Error::SpaceMismatch(_))
        ));
    }

    #[test]
    fn apply_permutes_indicators_and_inverts() {
        let s = p5();
        let iso = SpatialIsomorphism::from_bijection(&reversal(s.clone()), None)
            .unwrap()
            .perturb_locally(1.0, 5)
            .unwrap();
        let a = LinearOperator::indicator(s.clone(), &PointSet::from([0, 3])).unwrap();
        let back = iso.apply_inverse(&iso.apply(&a).unwrap()).unwrap();
        let diff = (back.entries() - a.entries()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-10);
        assert_eq!(
            iso.apply(&LinearOperator::identity(s.clone())).unwrap().entries().map(|z| (z.re * 1e9).round()),
            DMatrix::<f64>::identity(5, 5) * 1e9
        );

        let exact = SpatialIsomorphism::from_bijection(&reversal(s.clone()), None).unwrap();
        let img = exact.apply(&a).unwrap();
        let expect = LinearOperator::indicator(s, &PointSet::from([4, 1])).unwrap();
        assert_eq!(img.entries(), expect.entries());
    }

    #[test]
    fn perturb_by_identity_and_phases() {
        let s = p5();
        let iso = SpatialIsomorphism::from_bijection(&reversal(s.clone()), None).unwrap();
        let same = iso.perturb(&LinearOperator::identity(s.clone())).unwrap();
        assert_eq!(same.matrix(), iso.matrix());
        let ph = random_phases(5, 3);
        let w = LinearOperator::diagonal(s.clone(), &ph).unwrap();
        let twisted = iso.perturb(&w).unwrap();
        for x in 0..5 {
            let chi = LinearOperator::indicator(s.clone(), &PointSet::from([x])).unwrap();
            let a = twisted.apply(&chi).unwrap();
            let b = iso.apply(&chi).unwrap();
            let diff = (a.entries() - b.entries()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(diff < 1e-15);
        }
        let bad = LinearOperator::on(s, DMatrix::from_element(5, 5, C64::new(1.0, 0.0))).unwrap();
        assert!(matches!(iso.perturb(&bad), Err(Error::NotUnitary { .. })));
    }
}
