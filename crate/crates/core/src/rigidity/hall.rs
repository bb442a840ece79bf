//! Hall's condition through maximum bipartite matching.

use crate::error::{Error, Result};
use crate::iso::SupportFamily;
use crate::space::{CoarseMap, PointSet};

/// Order in which each source point scans its candidates. Different orders
/// can pick different perfect matchings of the same family; source points
/// are always processed in ascending order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Source points and candidates in ascending index order.
    #[default]
    Forward,
    /// Both in descending order.
    Reverse,
}

impl std::fmt::Display for TieBreak {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TieBreak::Forward => "forward",
            TieBreak::Reverse => "reverse",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HallWitness {
    /// `matching[x] ∈ α(x)`, injective.
    Matching(Vec<usize>),
    /// `|set| = |neighborhood| + 1` with `neighborhood = ∪_{x∈set} α(x)`.
    Deficiency { set: PointSet, neighborhood: PointSet },
}

impl HallWitness {
    pub fn is_matching(&self) -> bool {
        matches!(self, HallWitness::Matching(_))
    }
}

struct Matcher<'a> {
    adj: &'a [Vec<usize>],
    left: Vec<Option<usize>>,
    right: Vec<Option<usize>>,
    seen: Vec<bool>,
}

impl Matcher<'_> {
    fn augment(&mut self, x: usize) -> bool {
        // A free candidate is taken directly before any rerouting.
        if let Some(&y) = self.adj[x].iter().find(|&&y| self.right[y].is_none()) {
            self.seen[y] = true;
            self.right[y] = Some(x);
            self.left[x] = Some(y);
            return true;
        }
        for k in 0..self.adj[x].len() {
            let y = self.adj[x][k];
            if self.seen[y] {
                continue;
            }
            self.seen[y] = true;
            if self.right[y].is_none_or(|x2| self.augment(x2)) {
                self.right[y] = Some(x);
                self.left[x] = Some(y);
                return true;
            }
        }
        false
    }
}

/// Maximum matching by repeated augmenting paths; `(left, right)` partner
/// tables.
fn max_matching(
    adj: &[Vec<usize>],
    n_right: usize,
) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    let mut m = Matcher {
        adj,
        left: vec![None; adj.len()],
        right: vec![None; n_right],
        seen: vec![false; n_right],
    };
    for x in 0..adj.len() {
        m.seen.iter_mut().for_each(|s| *s = false);
        m.augment(x);
    }
    (m.left, m.right)
}

/// Source points reachable from `root` along alternating paths. Under a
/// maximum matching every neighbour met is matched, so the result has one
/// more point than its neighbourhood.
fn alternating_reach(
    adj: &[Vec<usize>],
    right: &[Option<usize>],
    root: usize,
) -> (PointSet, PointSet) {
    let mut set = PointSet::from([root]);
    let mut nbhd = PointSet::new();
    let mut stack = vec![root];
    while let Some(x) = stack.pop() {
        for &y in &adj[x] {
            if nbhd.insert(y) {
                if let Some(x2) = right[y] {
                    if set.insert(x2) {
                        stack.push(x2);
                    }
                }
            }
        }
    }
    (set, nbhd)
}

pub fn hall_check(family: &SupportFamily) -> HallWitness {
    hall_check_with(family, TieBreak::Forward)
}

/// Either an injective selection from `family` or a set violating
/// `|A| ≤ |∪_{x∈A} α(x)|`.
pub fn hall_check_with(family: &SupportFamily, tie: TieBreak) -> HallWitness {
    let mut adj = family.adjacency();
    if tie == TieBreak::Reverse {
        adj.iter_mut().for_each(|a| a.reverse());
    }
    let (left, right) = max_matching(&adj, family.target().len());
    match left.iter().position(Option::is_none) {
        None => HallWitness::Matching(left.into_iter().map(Option::unwrap).collect()),
        Some(root) => {
            let (set, neighborhood) = alternating_reach(&adj, &right, root);
            HallWitness::Deficiency { set, neighborhood }
        }
    }
}

/// An injective `f` with `f(x) ∈ α(x)`.
pub fn select_injection(family: &SupportFamily, tie: TieBreak) -> Result<CoarseMap> {
    match hall_check_with(family, tie) {
        HallWitness::Matching(table) => {
            CoarseMap::new(family.source().clone(), family.target().clone(), table)
        }
        HallWitness::Deficiency { set, neighborhood } => Err(Error::HallFailed {
            deficiency: set.into_iter().collect(),
            neighborhood: neighborhood.into_iter().collect(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::space::generators::path;
    use crate::space::FiniteMetricSpace;

    fn family(n: usize, sets: &[&[usize]]) -> SupportFamily {
        let s: Arc<FiniteMetricSpace> = Arc::new(path(n).unwrap());
        let src = Arc::new(path(sets.len()).unwrap());
        SupportFamily::new(src, s, sets.iter().map(|a| a.iter().copied().collect()).collect()).unwrap()
    }

    #[test]
    fn bijection_singletons_match_exactly() {
        let fam = family(4, &[&[2], &[0], &[3], &[1]]);
        assert_eq!(hall_check(&fam), HallWitness::Matching(vec![2, 0, 3, 1]));
        assert_eq!(select_injection(&fam, TieBreak::Reverse).unwrap().table(), &[2, 0, 3, 1]);
    }

    #[test]
    fn shared_singleton_is_deficient() {
        let fam = family(2, &[&[0], &[0]]);
        assert_eq!(
            hall_check(&fam),
            HallWitness::Deficiency {
                set: PointSet::from([0, 1]),
                neighborhood: PointSet::from([0]),
            }
        );
        assert!(matches!(
            select_injection(&fam, TieBreak::Forward),
            Err(Error::HallFailed { ref deficiency, ref neighborhood })
                if deficiency == &[0, 1] && neighborhood == &[0]
        ));
    }

    #[test]
    fn empty_set_is_its_own_witness() {
        let fam = family(3, &[&[0, 1], &[], &[2]]);
        assert_eq!(
            hall_check(&fam),
            HallWitness::Deficiency {
                set: PointSet::from([1]),
                neighborhood: PointSet::new(),
            }
        );
    }

    #[test]
    fn forced_matching() {
        let fam = family(2, &[&[0, 1], &[1]]);
        for tie in [TieBreak::Forward, TieBreak::Reverse] {
            assert_eq!(select_injection(&fam, tie).unwrap().table(), &[0, 1]);
        }
    }

    #[test]
    fn complete_family_matches_and_tie_breaks_differ() {
        let all: Vec<usize> = (0..4).collect();
        let fam = family(4, &[&all, &all, &all, &all]);
        let a = select_injection(&fam, TieBreak::Forward).unwrap();
        let b = select_injection(&fam, TieBreak::Reverse).unwrap();
        assert!(a.is_bijective() && b.is_bijective());
        assert_eq!(a.table(), &[0, 1, 2, 3]);
        assert_eq!(b.table(), &[3, 2, 1, 0]);
    }
}
