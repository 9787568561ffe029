use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Exponent vector `α ∈ ℕᴺ` of a monomial `x^α`, with its total degree cached.
///
/// Ordering is graded: first by total degree, then lexicographically on the
/// exponents, so `x1² > x1·x2 > x2²` inside degree two.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<u32>", into = "Vec<u32>")]
pub struct MultiIndex {
    exps: Vec<u32>,
    degree: u32,
}

impl MultiIndex {
    pub fn new(exps: Vec<u32>) -> Self {
        let degree = exps.iter().sum();
        MultiIndex { exps, degree }
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex {
            exps: vec![0; dim],
            degree: 0,
        }
    }

    /// The exponent vector of the variable `x_i` (0-based `i`).
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut exps = vec![0; dim];
        exps[i] = 1;
        MultiIndex { exps, degree: 1 }
    }

    pub fn dim(&self) -> usize {
        self.exps.len()
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn exps(&self) -> &[u32] {
        &self.exps
    }

    pub fn get(&self, i: usize) -> u32 {
        self.exps[i]
    }

    pub fn is_zero(&self) -> bool {
        self.degree == 0
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), other.dim());
        MultiIndex {
            exps: self.exps.iter().zip(&other.exps).map(|(a, b)| a + b).collect(),
            degree: self.degree + other.degree,
        }
    }

    /// `α + e_i`.
    pub fn raise(&self, i: usize) -> MultiIndex {
        let mut exps = self.exps.clone();
        exps[i] += 1;
        MultiIndex {
            exps,
            degree: self.degree + 1,
        }
    }

    /// `α − e_i`, or `None` when `α_i = 0`.
    pub fn lower(&self, i: usize) -> Option<MultiIndex> {
        (self.exps[i] > 0).then(|| {
            let mut exps = self.exps.clone();
            exps[i] -= 1;
            MultiIndex {
                exps,
                degree: self.degree - 1,
            }
        })
    }

    /// `α − β` when `β ≤ α` componentwise.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        let exps = self
            .exps
            .iter()
            .zip(&other.exps)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()?;
        Some(MultiIndex::new(exps))
    }

    /// Weighted index `Σ j·α_j` with 1-based coordinate weights.
    pub fn v_order(&self) -> u64 {
        self.exps
            .iter()
            .enumerate()
            .map(|(j, &a)| (j as u64 + 1) * a as u64)
            .sum()
    }

    /// Moves one unit of exponent from coordinate `i` to coordinate `i − 1`
    /// (1-based `i ≥ 2`): `α + e_{i−1} − e_i`. `None` when `α_i = 0`.
    pub fn shift_down(&self, i: usize) -> Option<MultiIndex> {
        assert!(i >= 2 && i <= self.dim(), "shift index {i} out of range");
        self.lower(i - 1).map(|m| m.raise(i - 2))
    }

    /// Product of factorials `α! = Π α_j!`.
    pub fn factorial(&self) -> u128 {
        self.exps
            .iter()
            .map(|&a| (1..=a as u128).product::<u128>())
            .product()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree
            .cmp(&other.degree)
            .then_with(|| self.exps.cmp(&other.exps))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex::new(v)
    }
}

impl From<MultiIndex> for Vec<u32> {
    fn from(m: MultiIndex) -> Self {
        m.exps
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.exps)
    }
}
