//! The abstract machine: comparator arity, the k-ary comparison primitive and
//! the cost ledger every operation threads through.
//!
//! One invocation of a [`KComparator`] fully orders up to `k` items at unit
//! cost. Invocations on disjoint item sets may share a round. The comparator
//! only ever observes the relative order of keys (`Ord`), never magnitudes.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Comparator arity: the number of items one device reading can totally order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct ObservabilityOrder(usize);

impl ObservabilityOrder {
    pub const BINARY: ObservabilityOrder = ObservabilityOrder(2);

    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidOrder(k));
        }
        Ok(Self(k))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for ObservabilityOrder {
    type Error = Error;

    fn try_from(k: usize) -> Result<Self> {
        Self::new(k)
    }
}

impl fmt::Display for ObservabilityOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "O{}", self.0)
    }
}

/// Exact cost accounting for one operation.
///
/// Counters only grow. `rounds <= invocations` holds at all times because a
/// round is only ever charged together with at least one invocation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CostLedger {
    invocations: u64,
    rounds: u64,
    stored_items: u64,
}

impl CostLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Comparator invocations, the model's step count.
    pub fn invocations(&self) -> u64 {
        self.invocations
    }

    /// Sequential depth in unit comparator rounds.
    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Peak number of intermediate values retained between rounds.
    pub fn stored_items(&self) -> u64 {
        self.stored_items
    }

    /// Charges one round containing `invocations` parallel invocations.
    pub(crate) fn charge_round(&mut self, invocations: u64) {
        if invocations == 0 {
            return;
        }
        self.invocations += invocations;
        self.rounds += 1;
    }

    /// Records that `count` intermediates are held until the next round.
    pub(crate) fn retain(&mut self, count: usize) {
        self.stored_items = self.stored_items.max(count as u64);
    }
}

/// The result of one comparator reading.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComparisonOutcome {
    /// Input positions in ascending key order; equal keys keep input order.
    pub ranking: Vec<usize>,
    /// Runs of positions sharing a key, ascending by key. Singletons are omitted.
    pub tie_groups: Vec<Vec<usize>>,
}

impl ComparisonOutcome {
    fn read<T: Ord>(keys: &[&T]) -> Self {
        let mut ranking: Vec<usize> = (0..keys.len()).collect();
        ranking.sort_by(|&a, &b| keys[a].cmp(keys[b]));

        let mut tie_groups = Vec::new();
        let mut start = 0;
        for end in 1..=ranking.len() {
            if end == ranking.len() || keys[ranking[end]] != keys[ranking[start]] {
                if end - start > 1 {
                    tie_groups.push(ranking[start..end].to_vec());
                }
                start = end;
            }
        }
        Self {
            ranking,
            tie_groups,
        }
    }

    /// Position of the first minimal item.
    pub fn min(&self) -> usize {
        self.ranking[0]
    }

    /// Position of the last maximal item.
    pub fn max(&self) -> usize {
        self.ranking[self.ranking.len() - 1]
    }
}

/// The k-ary comparison device.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KComparator {
    order: ObservabilityOrder,
}

impl KComparator {
    pub fn new(order: ObservabilityOrder) -> Self {
        Self { order }
    }

    pub fn order(&self) -> ObservabilityOrder {
        self.order
    }

    /// One reading over at most `k` items, charged as one invocation in its own round.
    pub fn compare<T: Ord>(
        &self,
        items: &[T],
        ledger: &mut CostLedger,
    ) -> Result<ComparisonOutcome> {
        self.check_arity(items.len())?;
        let keys: Vec<&T> = items.iter().collect();
        ledger.charge_round(1);
        Ok(ComparisonOutcome::read(&keys))
    }

    /// Parallel readings over disjoint groups of `items`, charged as a single round.
    ///
    /// Each group lists indices into `items`. Rankings in the returned outcomes
    /// are positions within the corresponding group. Nothing is charged when
    /// validation fails or `groups` is empty.
    pub fn batch_round<T: Ord, G: AsRef<[usize]>>(
        &self,
        items: &[T],
        groups: &[G],
        ledger: &mut CostLedger,
    ) -> Result<Vec<ComparisonOutcome>> {
        let mut seen = vec![false; items.len()];
        for group in groups {
            let group = group.as_ref();
            self.check_arity(group.len())?;
            for &index in group {
                let slot = seen.get_mut(index).ok_or(Error::IndexOutOfRange {
                    index,
                    len: items.len(),
                })?;
                if *slot {
                    return Err(Error::OverlappingGroups(index));
                }
                *slot = true;
            }
        }

        ledger.charge_round(groups.len() as u64);
        Ok(groups
            .iter()
            .map(|group| {
                let keys: Vec<&T> = group.as_ref().iter().map(|&i| &items[i]).collect();
                ComparisonOutcome::read(&keys)
            })
            .collect())
    }

    fn check_arity(&self, len: usize) -> Result<()> {
        if len == 0 {
            return Err(Error::EmptyInput);
        }
        if len > self.order.get() {
            return Err(Error::ArityExceeded {
                len,
                k: self.order.get(),
            });
        }
        Ok(())
    }
}

pub fn k_compare<T: Ord>(
    items: &[T],
    order: ObservabilityOrder,
    ledger: &mut CostLedger,
) -> Result<ComparisonOutcome> {
    KComparator::new(order).compare(items, ledger)
}

pub fn batch_round<T: Ord, G: AsRef<[usize]>>(
    items: &[T],
    groups: &[G],
    order: ObservabilityOrder,
    ledger: &mut CostLedger,
) -> Result<Vec<ComparisonOutcome>> {
    KComparator::new(order).batch_round(items, groups, ledger)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn order(k: usize) -> ObservabilityOrder {
        ObservabilityOrder::new(k).unwrap()
    }

    #[test]
    fn order_rejects_arity_below_two() {
        assert_eq!(ObservabilityOrder::new(1), Err(Error::InvalidOrder(1)));
        assert_eq!(ObservabilityOrder::new(0), Err(Error::InvalidOrder(0)));
        assert_eq!(
            ObservabilityOrder::try_from(2).unwrap(),
            ObservabilityOrder::BINARY
        );
    }

    #[test]
    fn singleton_is_its_own_ranking() {
        let mut ledger = CostLedger::new();
        let out = k_compare(&[5], order(3), &mut ledger).unwrap();
        assert_eq!(out.ranking, vec![0]);
        assert_eq!(ledger.invocations(), 1);
        assert_eq!(ledger.rounds(), 1);
    }

    #[test]
    fn full_order_in_one_reading() {
        let mut ledger = CostLedger::new();
        let out = k_compare(&[9, 4, 7], order(3), &mut ledger).unwrap();
        assert_eq!(out.ranking, vec![1, 2, 0]);
        assert!(out.tie_groups.is_empty());
        assert_eq!(ledger.invocations(), 1);
    }

    #[test]
    fn arity_and_empty_errors() {
        let mut ledger = CostLedger::new();
        assert_eq!(
            k_compare(&[3, 1, 2, 8], order(3), &mut ledger),
            Err(Error::ArityExceeded { len: 4, k: 3 })
        );
        assert_eq!(
            k_compare::<i32>(&[], order(3), &mut ledger),
            Err(Error::EmptyInput)
        );
        assert_eq!(ledger, CostLedger::new());
    }

    #[test]
    fn ties_are_stable() {
        let mut ledger = CostLedger::new();
        let out = k_compare(&[2, 2, 1], order(3), &mut ledger).unwrap();
        assert_eq!(out.ranking, vec![2, 0, 1]);
        assert_eq!(out.tie_groups, vec![vec![0, 1]]);
        assert_eq!(out.min(), 2);
        assert_eq!(out.max(), 1);
    }

    #[test]
    fn batch_of_disjoint_groups_is_one_round() {
        let items = [6, 5, 4, 3, 2, 1];
        let mut ledger = CostLedger::new();
        let outs = batch_round(
            &items,
            &[vec![0, 1, 2], vec![3, 4, 5]],
            order(3),
            &mut ledger,
        )
        .unwrap();
        assert_eq!(outs.len(), 2);
        assert_eq!(outs[0].ranking, vec![2, 1, 0]);
        assert_eq!(outs[1].ranking, vec![2, 1, 0]);
        assert_eq!(ledger.invocations(), 2);
        assert_eq!(ledger.rounds(), 1);
    }

    #[test]
    fn single_group_batch_matches_k_compare() {
        let items = [9, 4, 7];
        let mut a = CostLedger::new();
        let mut b = CostLedger::new();
        let batched = batch_round(&items, &[[0, 1, 2]], order(3), &mut a).unwrap();
        let direct = k_compare(&items, order(3), &mut b).unwrap();
        assert_eq!(batched, vec![direct]);
        assert_eq!(a, b);
    }

    #[test]
    fn overlapping_groups_rejected_without_charge() {
        let items = [1, 2, 3, 4];
        let mut ledger = CostLedger::new();
        assert_eq!(
            batch_round(&items, &[vec![0, 1], vec![1, 2]], order(3), &mut ledger),
            Err(Error::OverlappingGroups(1))
        );
        assert_eq!(
            batch_round(&items, &[vec![0, 9]], order(3), &mut ledger),
            Err(Error::IndexOutOfRange { index: 9, len: 4 })
        );
        assert_eq!(
            batch_round(&items, &[vec![0, 1, 2, 3]], order(3), &mut ledger),
            Err(Error::ArityExceeded { len: 4, k: 3 })
        );
        assert_eq!(ledger, CostLedger::new());
    }

    #[test]
    fn empty_batch_charges_nothing() {
        let mut ledger = CostLedger::new();
        let outs = batch_round::<i32, Vec<usize>>(&[1, 2], &[], order(2), &mut ledger).unwrap();
        assert!(outs.is_empty());
        assert_eq!(ledger.rounds(), 0);
    }

    proptest! {
        #[test]
        fn reading_matches_reference_stable_sort(
            keys in prop::collection::vec(0u8..6, 1..12),
            extra in 0usize..4,
        ) {
            let k = keys.len().max(2) + extra;
            let mut ledger = CostLedger::new();
            let out = k_compare(&keys, order(k), &mut ledger).unwrap();

            let mut reference: Vec<usize> = (0..keys.len()).collect();
            reference.sort_by_key(|&i| keys[i]);
            prop_assert_eq!(&out.ranking, &reference);
            prop_assert_eq!(ledger.invocations(), 1);

            let tied: usize = out.tie_groups.iter().map(Vec::len).sum();
            let mut distinct = keys.clone();
            distinct.sort();
            distinct.dedup();
            let singletons = distinct
                .iter()
                .filter(|d| keys.iter().filter(|x| x == d).count() == 1)
                .count();
            prop_assert_eq!(tied + singletons, keys.len());
        }

        #[test]
        fn rounds_never_exceed_invocations(
            sizes in prop::collection::vec(1usize..4, 0..6),
            repeats in 1usize..4,
        ) {
            let total: usize = sizes.iter().sum();
            let items: Vec<usize> = (0..total).rev().collect();
            let mut groups = Vec::new();
            let mut next = 0;
            for s in &sizes {
                groups.push((next..next + s).collect::<Vec<_>>());
                next += s;
            }
            let mut ledger = CostLedger::new();
            let mut last = ledger;
            for _ in 0..repeats {
                batch_round(&items, &groups, order(3), &mut ledger).unwrap();
                prop_assert!(ledger.rounds() <= ledger.invocations());
                prop_assert!(ledger.invocations() >= last.invocations());
                prop_assert!(ledger.rounds() >= last.rounds());
                last = ledger;
            }
        }
    }
}
