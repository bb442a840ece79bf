//! König's chain construction for Cantor–Schröder–Bernstein.

use crate::error::{Error, Result};
use crate::space::{same_space, CoarseMap};

/// Where the backward chain `x ← g(y) ← f(x') ← …` of a point ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainKind {
    /// Ends at a point of `X` outside `Im(g)`.
    XStopper,
    /// Ends at a point of `Y` outside `Im(f)`.
    YStopper,
    /// Returns to its start.
    Cycle,
}

fn partial_inverse(m: &CoarseMap) -> Result<Vec<Option<usize>>> {
    if let Some((first, second)) = m.collision() {
        return Err(Error::NotInjective { first, second });
    }
    let mut inv = vec![None; m.codomain().len()];
    for (x, &y) in m.table().iter().enumerate() {
        inv[y] = Some(x);
    }
    Ok(inv)
}

/// Chain classification of every point of `X`.
pub fn chain_kinds(f: &CoarseMap, g: &CoarseMap) -> Result<Vec<ChainKind>> {
    if !same_space(f.domain(), g.codomain()) || !same_space(f.codomain(), g.domain()) {
        return Err(Error::DomainMismatch);
    }
    let f_inv = partial_inverse(f)?;
    let g_inv = partial_inverse(g)?;
    let n = f.domain().len();
    let kinds = (0..n)
        .map(|start| {
            let mut x = start;
            // The backward step is injective, so a chain either stops or
            // comes back to `start` within `n` steps.
            loop {
                let Some(y) = g_inv[x] else {
                    return ChainKind::XStopper;
                };
                let Some(prev) = f_inv[y] else {
                    return ChainKind::YStopper;
                };
                if prev == start {
                    return ChainKind::Cycle;
                }
                x = prev;
            }
        })
        .collect();
    Ok(kinds)
}

/// A bijection `h : X → Y` with `h(x) = f(x)` or `h(x) = g⁻¹(x)` everywhere.
pub fn csb_combine(f: &CoarseMap, g: &CoarseMap) -> Result<CoarseMap> {
    let kinds = chain_kinds(f, g)?;
    let g_inv = partial_inverse(g)?;
    let table = kinds
        .iter()
        .enumerate()
        .map(|(x, k)| match k {
            ChainKind::YStopper => g_inv[x].expect("Y-stopper chains pass through Im(g)"),
            ChainKind::XStopper | ChainKind::Cycle => f.apply(x),
        })
        .collect();
    CoarseMap::new(f.domain().clone(), f.codomain().clone(), table)
}
