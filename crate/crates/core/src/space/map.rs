use std::sync::Arc;

use super::{FiniteMetricSpace, DIST_TOL};
use crate::error::{Error, Result};

pub(crate) fn same_space(a: &Arc<FiniteMetricSpace>, b: &Arc<FiniteMetricSpace>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// A total function between two finite spaces, stored as a table of
/// positional indices.
#[derive(Debug, Clone)]
pub struct CoarseMap {
    domain: Arc<FiniteMetricSpace>,
    codomain: Arc<FiniteMetricSpace>,
    table: Vec<usize>,
}

impl PartialEq for CoarseMap {
    fn eq(&self, other: &Self) -> bool {
        self.table == other.table
            && same_space(&self.domain, &other.domain)
            && same_space(&self.codomain, &other.codomain)
    }
}

impl CoarseMap {
    pub fn new(
        domain: Arc<FiniteMetricSpace>,
        codomain: Arc<FiniteMetricSpace>,
        table: Vec<usize>,
    ) -> Result<Self> {
        if table.len() != domain.len() {
            return Err(Error::InvalidParams(format!(
                "map table has {} entries for {} domain points",
                table.len(),
                domain.len()
            )));
        }
        if let Some(&y) = table.iter().find(|&&y| y >= codomain.len()) {
            return Err(Error::UnknownPoint(format!("image index {y}")));
        }
        Ok(Self {
            domain,
            codomain,
            table,
        })
    }

    pub fn identity(space: Arc<FiniteMetricSpace>) -> Self {
        let table = (0..space.len()).collect();
        Self {
            domain: space.clone(),
            codomain: space,
            table,
        }
    }

    pub fn from_fn(
        domain: Arc<FiniteMetricSpace>,
        codomain: Arc<FiniteMetricSpace>,
        f: impl Fn(usize) -> usize,
    ) -> Result<Self> {
        let table = (0..domain.len()).map(f).collect();
        Self::new(domain, codomain, table)
    }

    pub fn domain(&self) -> &Arc<FiniteMetricSpace> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<FiniteMetricSpace> {
        &self.codomain
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    #[inline]
    pub fn apply(&self, x: usize) -> usize {
        self.table[x]
    }

    /// First pair of domain points sharing an image, if any.
    pub fn collision(&self) -> Option<(usize, usize)> {
        let mut seen = vec![usize::MAX; self.codomain.len()];
        for (x, &y) in self.table.iter().enumerate() {
            if seen[y] != usize::MAX {
                return Some((seen[y], x));
            }
            seen[y] = x;
        }
        None
    }

    pub fn is_injective(&self) -> bool {
        self.collision().is_none()
    }

    pub fn is_bijective(&self) -> bool {
        self.domain.len() == self.codomain.len() && self.is_injective()
    }

    pub fn inverse(&self) -> Result<CoarseMap> {
        if let Some((a, b)) = self.collision() {
            return Err(Error::NotBijective(format!(
                "points {} and {} share an image",
                self.domain.id(a),
                self.domain.id(b)
            )));
        }
        if self.domain.len() != self.codomain.len() {
            let mut hit = vec![false; self.codomain.len()];
            self.table.iter().for_each(|&y| hit[y] = true);
            let missed = hit.iter().position(|h| !h).unwrap_or(0);
            return Err(Error::NotBijective(format!(
                "point {} is not in the image",
                self.codomain.id(missed)
            )));
        }
        let mut inv = vec![0; self.codomain.len()];
        for (x, &y) in self.table.iter().enumerate() {
            inv[y] = x;
        }
        Ok(CoarseMap {
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            table: inv,
        })
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &CoarseMap) -> Result<CoarseMap> {
        if !same_space(&inner.codomain, &self.domain) {
            return Err(Error::DomainMismatch);
        }
        Ok(CoarseMap {
            domain: inner.domain.clone(),
            codomain: self.codomain.clone(),
            table: inner.table.iter().map(|&x| self.table[x]).collect(),
        })
    }

    /// Exact expansion profile: for each radius `r` the least `s` with
    /// `d(x, x') ≤ r ⇒ d(f x, f x') ≤ s`, by enumeration over all pairs.
    pub fn expansion_profile(&self, radii: &[f64]) -> Result<ExpansionProfile> {
        if radii.windows(2).any(|w| w[0] > w[1]) || radii.iter().any(|r| !(*r >= 0.0)) {
            return Err(Error::InvalidParams(
                "radii must be nonnegative and ascending".into(),
            ));
        }
        let mut best = vec![0.0f64; radii.len()];
        let n = self.domain.len();
        for x in 0..n {
            let row = self.domain.row(x);
            let fx = self.table[x];
            for x2 in (x + 1)..n {
                let d = row[x2];
                // first radius that admits this pair; later radii inherit it below
                let k = radii.partition_point(|&r| r + DIST_TOL < d);
                if k < radii.len() {
                    let s = self.codomain.dist(fx, self.table[x2]);
                    best[k] = best[k].max(s);
                }
            }
        }
        for k in 1..best.len() {
            best[k] = best[k].max(best[k - 1]);
        }
        Ok(ExpansionProfile {
            samples: radii.iter().copied().zip(best).collect(),
        })
    }
}

/// Sampled control function `r ↦ s` of a coarse map.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionProfile {
    pub samples: Vec<(f64, f64)>,
}

impl ExpansionProfile {
    pub fn at(&self, r: f64) -> Option<f64> {
        self.samples
            .iter()
            .find(|(ri, _)| (ri - r).abs() <= DIST_TOL)
            .map(|&(_, s)| s)
    }

    pub fn max_output(&self) -> f64 {
        self.samples.iter().map(|&(_, s)| s).fold(0.0, f64::max)
    }
}

/// `max_x d_Y(f(x), g(x))`.
pub fn closeness(f: &CoarseMap, g: &CoarseMap) -> Result<f64> {
    if !same_space(&f.domain, &g.domain) || !same_space(&f.codomain, &g.codomain) {
        return Err(Error::DomainMismatch);
    }
    Ok(f.table
        .iter()
        .zip(&g.table)
        .map(|(&a, &b)| f.codomain.dist(a, b))
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MutualInverseReport {
    /// `closeness(f ∘ g, id_Y)`
    pub fg_to_identity: f64,
    /// `closeness(g ∘ f, id_X)`
    pub gf_to_identity: f64,
    pub expansion_f: ExpansionProfile,
    pub expansion_g: ExpansionProfile,
}

pub fn verify_mutual_inverse(
    f: &CoarseMap,
    g: &CoarseMap,
    radii: &[f64],
) -> Result<MutualInverseReport> {
    let fg = f.compose(g)?;
    let gf = g.compose(f)?;
    Ok(MutualInverseReport {
        fg_to_identity: closeness(&fg, &CoarseMap::identity(f.codomain.clone()))?,
        gf_to_identity: closeness(&gf, &CoarseMap::identity(f.domain.clone()))?,
        expansion_f: f.expansion_profile(radii)?,
        expansion_g: g.expansion_profile(radii)?,
    })
}
