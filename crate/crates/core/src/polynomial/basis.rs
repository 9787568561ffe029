use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MultiIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisOrdering {
    /// Degree ascending; lexicographically descending inside a degree
    /// (`x1² , x1·x2, x2²`).
    GradedLex,
    /// Degree ascending; `V(α) = Σ j·α_j` nondecreasing inside a degree, ties
    /// broken as in `GradedLex`.
    VNondecreasing,
}

/// Ordered list of monomial exponents of degree `≤ cap` (or exactly `cap`).
#[derive(Debug, Clone, PartialEq)]
pub struct GradedBasis {
    dim: usize,
    cap: u32,
    ordering: BasisOrdering,
    homogeneous: bool,
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
}

impl GradedBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn ordering(&self) -> BasisOrdering {
        self.ordering
    }

    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    /// Half-open index range of the degree-`d` block.
    pub fn degree_range(&self, d: u32) -> std::ops::Range<usize> {
        let start = self.indices.partition_point(|m| m.degree() < d);
        let end = self.indices.partition_point(|m| m.degree() <= d);
        start..end
    }

    /// Whether consecutive entries are strictly increasing under the ordering.
    pub fn is_strictly_ordered(&self) -> bool {
        self.indices
            .windows(2)
            .all(|w| ordering_key(self.ordering, &w[0]) < ordering_key(self.ordering, &w[1]))
    }
}

/// Sort key realizing each [`BasisOrdering`]; larger exponent vectors come
/// first inside a degree (reverse lexicographic key).
fn ordering_key(ordering: BasisOrdering, m: &MultiIndex) -> (u32, u64, Vec<std::cmp::Reverse<u32>>) {
    let v = match ordering {
        BasisOrdering::GradedLex => 0,
        BasisOrdering::VNondecreasing => m.v_order(),
    };
    (
        m.degree(),
        v,
        m.exps().iter().map(|&e| std::cmp::Reverse(e)).collect(),
    )
}

/// All exponent vectors in `dim` variables of total degree exactly `degree`,
/// lexicographically descending.
pub fn exponents_of_degree(dim: usize, degree: u32) -> Vec<MultiIndex> {
    fn rec(dim: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if prefix.len() + 1 == dim {
            prefix.push(left);
            out.push(MultiIndex::new(prefix.clone()));
            prefix.pop();
            return;
        }
        for e in (0..=left).rev() {
            prefix.push(e);
            rec(dim, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if dim == 0 {
        return out;
    }
    rec(dim, degree, &mut Vec::with_capacity(dim), &mut out);
    out
}

pub fn monomial_basis(dim: usize, cap: u32, ordering: BasisOrdering, homogeneous: bool) -> GradedBasis {
    assert!(dim >= 1, "dimension must be positive");
    let degrees = if homogeneous { cap..=cap } else { 0..=cap };
    let mut indices: Vec<MultiIndex> = degrees.flat_map(|d| exponents_of_degree(dim, d)).collect();
    indices.sort_by_cached_key(|m| ordering_key(ordering, m));
    let lookup = indices
        .iter()
        .enumerate()
        .map(|(i, m)| (m.clone(), i))
        .collect();
    GradedBasis {
        dim,
        cap,
        ordering,
        homogeneous,
        indices,
        lookup,
    }
}

/// `C(n, k)` as u128.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exps(b: &GradedBasis) -> Vec<Vec<u32>> {
        b.indices().iter().map(|m| m.exps().to_vec()).collect()
    }

    #[test]
    fn homogeneous_quadratics_in_two_variables() {
        let b = monomial_basis(2, 2, BasisOrdering::GradedLex, true);
        assert_eq!(exps(&b), vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
    }

    #[test]
    fn full_basis_size() {
        let b = monomial_basis(2, 2, BasisOrdering::GradedLex, false);
        assert_eq!(b.len(), 6);
        assert_eq!(exps(&b)[..3], [vec![0, 0], vec![1, 0], vec![0, 1]]);
        assert_eq!(b.degree_range(1), 1..3);
        assert_eq!(b.degree_range(2), 3..6);
    }

    #[test]
    fn v_ordering_in_three_variables() {
        let b = monomial_basis(3, 2, BasisOrdering::VNondecreasing, true);
        let v: Vec<u64> = b.indices().iter().map(MultiIndex::v_order).collect();
        assert!(v.windows(2).all(|w| w[0] <= w[1]));
        let pos = |e: Vec<u32>| b.position(&MultiIndex::new(e)).unwrap();
        assert!(pos(vec![2, 0, 0]) < pos(vec![0, 2, 0]));
        assert!(pos(vec![0, 2, 0]) < pos(vec![0, 0, 2]));
        // V = 4 is shared by (1,0,1) and (0,2,0); graded-lex tie break puts (1,0,1) first.
        assert!(pos(vec![1, 0, 1]) < pos(vec![0, 2, 0]));
        assert!(b.is_strictly_ordered());
    }

    #[test]
    fn cardinalities_match_binomials() {
        for dim in 1..=4usize {
            for cap in 0..=8u32 {
                for ordering in [BasisOrdering::GradedLex, BasisOrdering::VNondecreasing] {
                    let full = monomial_basis(dim, cap, ordering, false);
                    assert_eq!(full.len() as u128, binomial((dim as u64) + cap as u64, dim as u64));
                    assert!(full.is_strictly_ordered());
                    let hom = monomial_basis(dim, cap, ordering, true);
                    assert_eq!(
                        hom.len() as u128,
                        binomial(dim as u64 + cap as u64 - 1, cap as u64)
                    );
                }
            }
        }
    }
}
