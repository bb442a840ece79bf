//! Dense complex operators on `ℓ₂` of a finite space.
//!
//! Entry `(y, x)` of a [`LinearOperator`] is the matrix coefficient from
//! domain point `x` to codomain point `y`. At finite scale every matrix has
//! finite propagation, so the uniform Roe algebra is the full matrix algebra
//! and propagation and quasi-locality become measured quantities.

pub mod io;
mod norm;

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::space::{FiniteMetricSpace, PointSet, DIST_TOL};

pub use norm::{numerical_rank, op_norm, POWER_MAX_ITER, POWER_REL_TOL};

pub type C64 = nalgebra::Complex<f64>;

/// Default modulus below which an entry counts as zero for propagation.
pub const DEFAULT_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LinearOperator {
    domain: Arc<FiniteMetricSpace>,
    codomain: Arc<FiniteMetricSpace>,
    entries: DMatrix<C64>,
}

/// Far-band truncation norms: `r ↦ ‖a restricted to d(x, x') ≥ r‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiLocalProfile {
    pub samples: Vec<(f64, f64)>,
}

impl LinearOperator {
    pub fn new(
        domain: Arc<FiniteMetricSpace>,
        codomain: Arc<FiniteMetricSpace>,
        entries: DMatrix<C64>,
    ) -> Result<Self> {
        if entries.shape() != (codomain.len(), domain.len()) {
            return Err(Error::SpaceMismatch(format!(
                "matrix is {}x{}, spaces need {}x{}",
                entries.nrows(),
                entries.ncols(),
                codomain.len(),
                domain.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NumericalFailure("non-finite operator entry".into()));
        }
        Ok(Self {
            domain,
            codomain,
            entries,
        })
    }

    /// Square operator on one space.
    pub fn on(space: Arc<FiniteMetricSpace>, entries: DMatrix<C64>) -> Result<Self> {
        Self::new(space.clone(), space, entries)
    }

    pub fn identity(space: Arc<FiniteMetricSpace>) -> Self {
        let n = space.len();
        Self {
            domain: space.clone(),
            codomain: space,
            entries: DMatrix::identity(n, n),
        }
    }

    pub fn zeros(space: Arc<FiniteMetricSpace>) -> Self {
        let n = space.len();
        Self {
            domain: space.clone(),
            codomain: space,
            entries: DMatrix::zeros(n, n),
        }
    }

    /// Multiplication operator by a function on the points.
    pub fn diagonal(space: Arc<FiniteMetricSpace>, values: &[C64]) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::SpaceMismatch(format!(
                "{} diagonal values for {} points",
                values.len(),
                space.len()
            )));
        }
        let entries = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values));
        Self::on(space, entries)
    }

    /// `χ_A`: the diagonal projection onto `ℓ₂(A)`.
    pub fn indicator(space: Arc<FiniteMetricSpace>, set: &PointSet) -> Result<Self> {
        space.check_set(set)?;
        let n = space.len();
        let mut entries = DMatrix::zeros(n, n);
        for &x in set {
            entries[(x, x)] = C64::new(1.0, 0.0);
        }
        Ok(Self {
            domain: space.clone(),
            codomain: space,
            entries,
        })
    }

    pub fn domain(&self) -> &Arc<FiniteMetricSpace> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<FiniteMetricSpace> {
        &self.codomain
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn is_square_on_one_space(&self) -> bool {
        crate::space::same_space(&self.domain, &self.codomain)
    }

    fn require_endomorphism(&self) -> Result<()> {
        if self.is_square_on_one_space() {
            Ok(())
        } else {
            Err(Error::SpaceMismatch(
                "operation needs domain = codomain".into(),
            ))
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            entries: self.entries.adjoint(),
        }
    }

    /// `self · rhs`.
    pub fn compose(&self, rhs: &LinearOperator) -> Result<Self> {
        if !crate::space::same_space(&rhs.codomain, &self.domain) {
            return Err(Error::SpaceMismatch("inner codomain differs from outer domain".into()));
        }
        Ok(Self {
            domain: rhs.domain.clone(),
            codomain: self.codomain.clone(),
            entries: &self.entries * &rhs.entries,
        })
    }

    pub fn sub(&self, rhs: &LinearOperator) -> Result<Self> {
        if !crate::space::same_space(&rhs.domain, &self.domain)
            || !crate::space::same_space(&rhs.codomain, &self.codomain)
        {
            return Err(Error::SpaceMismatch("operands act between different spaces".into()));
        }
        Ok(Self {
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            entries: &self.entries - &rhs.entries,
        })
    }

    /// `prop(a) = max { d(x, x') : |a_{x,x'}| > zero_tol }`, 0 if no entry
    /// survives.
    pub fn propagation(&self, zero_tol: f64) -> Result<f64> {
        self.require_endomorphism()?;
        let space = &self.domain;
        let mut prop = 0.0f64;
        for x in 0..space.len() {
            for x2 in 0..space.len() {
                if self.entries[(x, x2)].norm() > zero_tol {
                    prop = prop.max(space.dist(x, x2));
                }
            }
        }
        Ok(prop)
    }

    /// For each `r`, the operator norm of `a` with every entry at distance
    /// `< r` (or of modulus `≤ zero_tol`) zeroed. Every block `χ_A a χ_B`
    /// with `d(A, B) ≥ r` is a compression of that truncation, so the value
    /// bounds the quasi-locality modulus from above. The true supremum over
    /// set pairs lies between the largest entry modulus in the band and this
    /// bound.
    pub fn quasi_local_profile(&self, radii: &[f64], zero_tol: f64) -> Result<QuasiLocalProfile> {
        self.require_endomorphism()?;
        let space = &self.domain;
        let samples = radii
            .iter()
            .map(|&r| {
                let band = DMatrix::from_fn(space.len(), space.len(), |y, x| {
                    let z = self.entries[(y, x)];
                    if space.dist(y, x) + DIST_TOL >= r && z.norm() > zero_tol {
                        z
                    } else {
                        C64::new(0.0, 0.0)
                    }
                });
                op_norm(&band).map(|n| (r, n))
            })
            .collect::<Result<_>>()?;
        Ok(QuasiLocalProfile { samples })
    }

    /// `‖χ_A a χ_B‖` for `A` in the codomain and `B` in the domain.
    pub fn block_norm(&self, rows: &PointSet, cols: &PointSet) -> Result<f64> {
        self.codomain.check_set(rows)?;
        self.domain.check_set(cols)?;
        op_norm(&self.block(rows, cols))
    }

    /// The compressed submatrix with the given rows and columns.
    pub fn block(&self, rows: &PointSet, cols: &PointSet) -> DMatrix<C64> {
        let rows: Vec<usize> = rows.iter().copied().collect();
        let cols: Vec<usize> = cols.iter().copied().collect();
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.entries[(rows[i], cols[j])])
    }

    /// `E(a) = Σ_x χ_x a χ_x`: keep the diagonal, drop everything else.
    pub fn conditional_expectation(&self) -> Result<Self> {
        self.require_endomorphism()?;
        let entries = DMatrix::from_diagonal(&self.entries.diagonal());
        Ok(Self {
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            entries,
        })
    }

    pub fn op_norm(&self) -> Result<f64> {
        op_norm(&self.entries)
    }

    pub fn numerical_rank(&self, tol: f64) -> Result<usize> {
        numerical_rank(&self.entries, tol)
    }

    /// `‖a* a − 1‖` and `‖a a* − 1‖`, whichever is larger.
    pub fn unitarity_defect(&self) -> Result<f64> {
        unitarity_defect(&self.entries)
    }
}

pub(crate) fn unitarity_defect(m: &DMatrix<C64>) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Ok(f64::INFINITY);
    }
    let id = DMatrix::<C64>::identity(m.nrows(), m.ncols());
    let left = m.ad_mul(m) - &id;
    let right = m * m.adjoint() - &id;
    // Frobenius norm dominates the operator norm; skip the iteration when
    // it already certifies a tiny defect.
    let bound = left.norm().max(right.norm());
    if bound <= 1e-12 {
        return Ok(bound);
    }
    Ok(op_norm(&left)?.max(op_norm(&right)?))
}
