//! Real functions on a space acting as diagonal operators: flattened
//! indicators, their variation, and families of well-separated bumps.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operator::{LinearOperator, C64};
use crate::space::{FiniteMetricSpace, PointSet, DIST_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalFunction {
    space: Arc<FiniteMetricSpace>,
    values: Vec<f64>,
}

impl DiagonalFunction {
    pub fn new(space: Arc<FiniteMetricSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::InvalidParams(format!(
                "{} values for {} points",
                values.len(),
                space.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure("non-finite function value".into()));
        }
        Ok(Self { space, values })
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn to_operator(&self) -> LinearOperator {
        let diag: Vec<C64> = self.values.iter().map(|&v| C64::new(v, 0.0)).collect();
        LinearOperator::diagonal(self.space.clone(), &diag).expect("length checked at construction")
    }

    /// Points where the function is nonzero.
    pub fn support(&self) -> PointSet {
        (0..self.values.len()).filter(|&x| self.values[x] != 0.0).collect()
    }

    /// `max { |f(x) − f(x')| : x, x' ∉ excluded, d(x, x') ≤ r }`.
    pub fn so_variation(&self, r: f64, excluded: &PointSet) -> f64 {
        let live: Vec<usize> = (0..self.space.len()).filter(|x| !excluded.contains(x)).collect();
        let mut best = 0.0f64;
        for (i, &x) in live.iter().enumerate() {
            let row = self.space.row(x);
            for &x2 in &live[i + 1..] {
                if row[x2] <= r + DIST_TOL {
                    best = best.max((self.values[x] - self.values[x2]).abs());
                }
            }
        }
        best
    }
}

/// `g_{A,r}(x) = max(0, 1 − d(x, A)/r)`: 1 on `A`, 0 outside `B_r(A)`.
pub fn flattened_indicator(
    space: Arc<FiniteMetricSpace>,
    set: &PointSet,
    r: f64,
) -> Result<DiagonalFunction> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    if !(r > 0.0) {
        return Err(Error::NonpositiveRadius(r));
    }
    space.check_set(set)?;
    let values = (0..space.len())
        .map(|x| (1.0 - space.dist_to_set(x, set) / r).max(0.0))
        .collect();
    Ok(DiagonalFunction { space, values })
}

/// `Σ_n g_{A_n, r_n}`, refusing families whose closed balls `B_{r_n}(A_n)`
/// meet.
pub fn sum_flattened(
    space: Arc<FiniteMetricSpace>,
    family: &[PointSet],
    radii: &[f64],
) -> Result<DiagonalFunction> {
    if family.len() != radii.len() {
        return Err(Error::InvalidParams(format!(
            "{} sets but {} radii",
            family.len(),
            radii.len()
        )));
    }
    let mut owner: Vec<Option<usize>> = vec![None; space.len()];
    let mut values = vec![0.0; space.len()];
    for (k, (set, &r)) in family.iter().zip(radii).enumerate() {
        let bump = flattened_indicator(space.clone(), set, r)?;
        for y in space.ball_unchecked(set, r) {
            if owner[y].is_some() {
                return Err(Error::OverlappingSupports { point: y });
            }
            owner[y] = Some(k);
            values[y] += bump.values[y];
        }
    }
    Ok(DiagonalFunction { space, values })
}

/// Singletons `A_1, A_2, …` with `d(A_n, A_m) ≥ 2(n + m) · base_gap`.
///
/// Scales start at 1 so that `g_{A_n, n}` is defined for every member.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatedFamily {
    pub sets: Vec<PointSet>,
    /// Scale `n` of each set, `1, 2, …`.
    pub scales: Vec<usize>,
    pub base_gap: f64,
    /// The space ran out before `count` sets were placed.
    pub exhausted: bool,
}

impl SeparatedFamily {
    pub fn required_gap(&self, n: usize, m: usize) -> f64 {
        2.0 * (n + m) as f64 * self.base_gap
    }

    /// Re-checks every pairwise gap by enumeration.
    pub fn gaps_hold(&self, space: &FiniteMetricSpace) -> bool {
        for i in 0..self.sets.len() {
            for j in (i + 1)..self.sets.len() {
                let need = self.required_gap(self.scales[i], self.scales[j]);
                if space.set_distance(&self.sets[i], &self.sets[j]) + DIST_TOL < need {
                    return false;
                }
            }
        }
        true
    }

    /// `g_M = Σ_n g_{A_n, n}` over the whole family.
    pub fn bump_sum(&self, space: Arc<FiniteMetricSpace>) -> Result<DiagonalFunction> {
        let radii: Vec<f64> = self.scales.iter().map(|&n| n as f64).collect();
        sum_flattened(space, &self.sets, &radii)
    }

    /// `B_n(∪_{m ≤ n} A_m)`, the finite set outside of which `g_M` varies by
    /// at most `r/n` over `r`-steps.
    pub fn exclusion(&self, space: &FiniteMetricSpace, n: usize) -> PointSet {
        let centers: PointSet = self
            .sets
            .iter()
            .zip(&self.scales)
            .filter(|(_, &m)| m <= n)
            .flat_map(|(s, _)| s.iter().copied())
            .collect();
        space.ball_unchecked(&centers, n as f64)
    }
}

/// Greedy construction: each new singleton is the first point (in index
/// order) far enough from every set already placed.
pub fn separated_family(space: &FiniteMetricSpace, count: usize, base_gap: f64) -> SeparatedFamily {
    let mut fam = SeparatedFamily {
        sets: Vec::new(),
        scales: Vec::new(),
        base_gap,
        exhausted: false,
    };
    for n in 1..=count {
        let candidate = (0..space.len()).find(|&x| {
            fam.sets.iter().zip(&fam.scales).all(|(set, &m)| {
                space.dist_to_set(x, set) + DIST_TOL >= fam.required_gap(n, m)
            })
        });
        match candidate {
            Some(x) => {
                fam.sets.push(PointSet::from([x]));
                fam.scales.push(n);
            }
            None => {
                fam.exhausted = true;
                break;
            }
        }
    }
    fam
}
