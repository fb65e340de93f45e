//! Exponents used by a tree and the precomputed powers of the point.

use std::collections::{BTreeMap, BTreeSet};

use crate::numeric::RingDomain;
use crate::polynomial::Exponent;
use crate::tree::EvaluationTree;

/// Strictly increasing exponents, all at least 1. `x^0` never needs a
/// table entry because the evaluator skips that multiplication.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ExponentSet(Vec<Exponent>);

impl ExponentSet {
    pub fn new(exponents: impl IntoIterator<Item = Exponent>) -> Self {
        let set: BTreeSet<Exponent> = exponents.into_iter().filter(|&e| e > 0).collect();
        ExponentSet(set.into_iter().collect())
    }

    pub fn as_slice(&self) -> &[Exponent] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> Option<Exponent> {
        self.0.last().copied()
    }

    /// Position of `e` in the set.
    pub fn slot(&self, e: Exponent) -> Option<usize> {
        self.0.binary_search(&e).ok()
    }

    pub fn union(&self, other: &ExponentSet) -> ExponentSet {
        ExponentSet::new(self.0.iter().chain(&other.0).copied())
    }
}

/// Distinct nonzero partial degrees of the tree's own nodes. Nested
/// coefficient trees are over other variables and are not included.
pub fn required_exponents(tree: &EvaluationTree) -> ExponentSet {
    ExponentSet::new(tree.nodes().iter().map(|n| n.partial_degree()))
}

/// `base^e` for every `e` of an [`ExponentSet`], in the same order.
#[derive(Debug, Clone)]
pub struct PowerTable<V> {
    exponents: ExponentSet,
    values: Vec<V>,
    multiplications: usize,
}

impl<V> PowerTable<V> {
    pub fn exponents(&self) -> &ExponentSet {
        &self.exponents
    }

    /// Value at a slot of the exponent set.
    pub fn at_slot(&self, slot: usize) -> &V {
        &self.values[slot]
    }

    pub fn get(&self, e: Exponent) -> Option<&V> {
        self.exponents.slot(e).map(|s| &self.values[s])
    }

    /// Multiplications spent building the table.
    pub fn multiplications(&self) -> usize {
        self.multiplications
    }
}

/// Memoized halving: `x^e = x^floor(e/2) * x^ceil(e/2)`, with every
/// intermediate exponent computed once.
pub fn build_power_table<D: RingDomain>(
    base: &D::Value,
    exponents: &ExponentSet,
    domain: &D,
) -> PowerTable<D::Value> {
    let mut needed = BTreeSet::new();
    let mut pending: Vec<Exponent> = exponents.as_slice().to_vec();
    while let Some(e) = pending.pop() {
        if needed.insert(e) && e > 1 {
            pending.push(e / 2);
            pending.push(e - e / 2);
        }
    }

    let mut memo: BTreeMap<Exponent, D::Value> = BTreeMap::new();
    let mut multiplications = 0;
    for e in needed {
        let value = if e == 1 {
            base.clone()
        } else {
            multiplications += 1;
            domain.mul(&memo[&(e / 2)], &memo[&(e - e / 2)])
        };
        memo.insert(e, value);
    }
    let values = exponents.as_slice().iter().map(|e| memo[e].clone()).collect();
    PowerTable {
        exponents: exponents.clone(),
        values,
        multiplications,
    }
}
