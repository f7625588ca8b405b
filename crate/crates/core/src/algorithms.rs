//! Selection and sorting over the k-comparator, with every invocation charged
//! to a [`CostLedger`].
//!
//! Tournaments fill groups of exactly `k` survivors left to right. When more
//! than one group exists at a level, a trailing partial group receives a bye
//! and advances uncompared; once the survivors fit into one reading they are
//! compared together. Every invocation except the last therefore eliminates
//! `k - 1` candidates, which gives `ceil((n - 1) / (k - 1))` invocations.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::machine::{ComparisonOutcome, CostLedger, KComparator, ObservabilityOrder};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SelectionResult {
    pub min_index: usize,
    pub max_index: Option<usize>,
    pub ledger: CostLedger,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SortResult {
    /// Input indices in ascending key order, stable on ties.
    pub permutation: Vec<usize>,
    pub ledger: CostLedger,
}

/// The comparator-driven tasks whose step counts are compared across arities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Min,
    #[serde(rename = "minmax")]
    MinMax,
    Sort,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Min, Task::MinMax, Task::Sort];

    /// Runs the task on `items` and returns the resulting ledger.
    pub fn run<T: Ord>(self, items: &[T], order: ObservabilityOrder) -> Result<CostLedger> {
        Ok(match self {
            Task::Min => find_min(items, order)?.ledger,
            Task::MinMax => find_min_max(items, order)?.ledger,
            Task::Sort => sort_k(items, order)?.ledger,
        })
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Min => "min",
            Task::MinMax => "minmax",
            Task::Sort => "sort",
        })
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "min" => Ok(Task::Min),
            "minmax" => Ok(Task::MinMax),
            "sort" => Ok(Task::Sort),
            other => Err(format!("unknown task `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Extreme {
    Min,
    Max,
}

impl Extreme {
    fn pick(self, outcome: &ComparisonOutcome) -> usize {
        match self {
            Extreme::Min => outcome.min(),
            Extreme::Max => outcome.max(),
        }
    }
}

/// Splits one tournament level into comparator groups and byes.
fn plan_level(survivors: &[usize], k: usize) -> (Vec<Vec<usize>>, Vec<usize>) {
    if survivors.len() < 2 {
        return (Vec::new(), survivors.to_vec());
    }
    if survivors.len() <= k {
        return (vec![survivors.to_vec()], Vec::new());
    }
    let chunks = survivors.chunks_exact(k);
    let byes = chunks.remainder().to_vec();
    (chunks.map(<[usize]>::to_vec).collect(), byes)
}

/// Winners of each group (as original indices) followed by the byes.
fn advance(
    groups: &[Vec<usize>],
    outcomes: &[ComparisonOutcome],
    byes: Vec<usize>,
    extreme: Extreme,
) -> Vec<usize> {
    let mut next: Vec<usize> = groups
        .iter()
        .zip(outcomes)
        .map(|(group, outcome)| group[extreme.pick(outcome)])
        .collect();
    next.extend(byes);
    next
}

fn tournament<T: Ord>(
    items: &[T],
    cmp: &KComparator,
    mut survivors: Vec<usize>,
    extreme: Extreme,
    ledger: &mut CostLedger,
) -> Result<usize> {
    while survivors.len() > 1 {
        let (groups, byes) = plan_level(&survivors, cmp.order().get());
        let outcomes = cmp.batch_round(items, &groups, ledger)?;
        survivors = advance(&groups, &outcomes, byes, extreme);
        if survivors.len() > 1 {
            ledger.retain(survivors.len());
        }
    }
    Ok(survivors[0])
}

/// First minimal item via a batched k-ary reduction tournament.
pub fn find_min<T: Ord>(items: &[T], order: ObservabilityOrder) -> Result<SelectionResult> {
    if items.is_empty() {
        return Err(Error::EmptyInput);
    }
    let cmp = KComparator::new(order);
    let mut ledger = CostLedger::new();
    let min_index = tournament(
        items,
        &cmp,
        (0..items.len()).collect(),
        Extreme::Min,
        &mut ledger,
    )?;
    Ok(SelectionResult {
        min_index,
        max_index: None,
        ledger,
    })
}

/// First-fit packing of groups into rounds so no item appears twice in a
/// round. Returns group ids per round.
fn schedule_rounds(groups: &[Vec<usize>], len: usize) -> Vec<Vec<usize>> {
    let mut rounds: Vec<(Vec<bool>, Vec<usize>)> = Vec::new();
    for (id, group) in groups.iter().enumerate() {
        let slot = rounds
            .iter()
            .position(|(used, _)| group.iter().all(|&i| !used[i]));
        let (used, members) = match slot {
            Some(r) => &mut rounds[r],
            None => {
                rounds.push((vec![false; len], Vec::new()));
                rounds.last_mut().expect("just pushed")
            }
        };
        for &i in group {
            used[i] = true;
        }
        members.push(id);
    }
    rounds.into_iter().map(|(_, members)| members).collect()
}

fn distinct_count(a: &[usize], b: &[usize]) -> usize {
    let mut all: Vec<usize> = a.iter().chain(b).copied().collect();
    all.sort_unstable();
    all.dedup();
    all.len()
}

/// Both extremes. Up to `k` items need a single reading; beyond that, one
/// shared reading per block of `k` seeds two tournaments that run in lockstep,
/// sharing rounds wherever their groups are disjoint.
///
/// `max_index` is the last maximal item, matching the tail of a stable
/// ascending ranking.
pub fn find_min_max<T: Ord>(items: &[T], order: ObservabilityOrder) -> Result<SelectionResult> {
    let n = items.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let cmp = KComparator::new(order);
    let k = order.get();
    let mut ledger = CostLedger::new();

    if n == 1 {
        return Ok(SelectionResult {
            min_index: 0,
            max_index: Some(0),
            ledger,
        });
    }
    if n <= k {
        let outcome = cmp.compare(items, &mut ledger)?;
        return Ok(SelectionResult {
            min_index: outcome.min(),
            max_index: Some(outcome.max()),
            ledger,
        });
    }

    let indices: Vec<usize> = (0..n).collect();
    let blocks: Vec<Vec<usize>> = indices.chunks(k).map(<[usize]>::to_vec).collect();
    let (compared, singles): (Vec<_>, Vec<_>) = blocks.into_iter().partition(|b| b.len() > 1);
    let outcomes = cmp.batch_round(items, &compared, &mut ledger)?;
    let singles: Vec<usize> = singles.into_iter().flatten().collect();
    let mut mins = advance(&compared, &outcomes, singles.clone(), Extreme::Min);
    let mut maxs = advance(&compared, &outcomes, singles, Extreme::Max);
    ledger.retain(distinct_count(&mins, &maxs));

    while mins.len() > 1 || maxs.len() > 1 {
        let (min_groups, min_byes) = plan_level(&mins, k);
        let (max_groups, max_byes) = plan_level(&maxs, k);
        let split = min_groups.len();

        let mut all_groups = min_groups;
        all_groups.extend(max_groups);
        let mut winners = vec![0usize; all_groups.len()];

        for round in schedule_rounds(&all_groups, n) {
            let groups: Vec<&Vec<usize>> = round.iter().map(|&g| &all_groups[g]).collect();
            let outcomes = cmp.batch_round(items, &groups, &mut ledger)?;
            for (&g, outcome) in round.iter().zip(&outcomes) {
                let extreme = if g < split {
                    Extreme::Min
                } else {
                    Extreme::Max
                };
                winners[g] = all_groups[g][extreme.pick(outcome)];
            }
        }

        mins = winners[..split].iter().copied().chain(min_byes).collect();
        maxs = winners[split..].iter().copied().chain(max_byes).collect();
        if mins.len() > 1 || maxs.len() > 1 {
            ledger.retain(distinct_count(&mins, &maxs));
        }
    }

    Ok(SelectionResult {
        min_index: mins[0],
        max_index: Some(maxs[0]),
        ledger,
    })
}

/// Full stable ascending sort.
///
/// Up to `k` items are ordered by one reading. Larger inputs are cut into
/// `ceil(n / k)` runs, each ordered by one reading (all in the same round),
/// then merged up to `k` runs at a time. A merge step reads the current run
/// heads and emits only the smallest; steps of independent merges in the
/// same pass share a round. A merge with one non-empty run left copies it
/// out without further readings.
pub fn sort_k<T: Ord>(items: &[T], order: ObservabilityOrder) -> Result<SortResult> {
    let n = items.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let cmp = KComparator::new(order);
    let k = order.get();
    let mut ledger = CostLedger::new();

    if n == 1 {
        return Ok(SortResult {
            permutation: vec![0],
            ledger,
        });
    }
    if n <= k {
        let outcome = cmp.compare(items, &mut ledger)?;
        return Ok(SortResult {
            permutation: outcome.ranking,
            ledger,
        });
    }

    let indices: Vec<usize> = (0..n).collect();
    let mut runs: Vec<Vec<usize>> = indices.chunks(k).map(<[usize]>::to_vec).collect();
    let to_sort: Vec<usize> = (0..runs.len()).filter(|&r| runs[r].len() > 1).collect();
    let groups: Vec<&Vec<usize>> = to_sort.iter().map(|&r| &runs[r]).collect();
    let outcomes = cmp.batch_round(items, &groups, &mut ledger)?;
    for (&r, outcome) in to_sort.iter().zip(outcomes) {
        runs[r] = outcome.ranking.iter().map(|&p| runs[r][p]).collect();
    }
    ledger.retain(n);

    while runs.len() > 1 {
        runs = merge_pass(items, &cmp, runs, &mut ledger)?;
    }

    Ok(SortResult {
        permutation: runs.pop().expect("at least one run"),
        ledger,
    })
}

struct Merge {
    runs: Vec<Vec<usize>>,
    heads: Vec<usize>,
    output: Vec<usize>,
}

impl Merge {
    fn live(&self) -> Vec<usize> {
        (0..self.runs.len())
            .filter(|&r| self.heads[r] < self.runs[r].len())
            .collect()
    }
}

fn merge_pass<T: Ord>(
    items: &[T],
    cmp: &KComparator,
    runs: Vec<Vec<usize>>,
    ledger: &mut CostLedger,
) -> Result<Vec<Vec<usize>>> {
    let k = cmp.order().get();
    let mut merges: Vec<Merge> = Vec::new();
    let mut runs = runs.into_iter().peekable();
    while runs.peek().is_some() {
        let batch: Vec<Vec<usize>> = runs.by_ref().take(k).collect();
        let total = batch.iter().map(Vec::len).sum();
        merges.push(Merge {
            heads: vec![0; batch.len()],
            runs: batch,
            output: Vec::with_capacity(total),
        });
    }

    loop {
        let mut active = Vec::new();
        let mut head_groups = Vec::new();
        for (m, merge) in merges.iter().enumerate() {
            let live = merge.live();
            if live.len() > 1 {
                head_groups.push(
                    live.iter()
                        .map(|&r| merge.runs[r][merge.heads[r]])
                        .collect::<Vec<_>>(),
                );
                active.push((m, live));
            }
        }
        if active.is_empty() {
            break;
        }
        let outcomes = cmp.batch_round(items, &head_groups, ledger)?;
        for ((m, live), outcome) in active.into_iter().zip(outcomes) {
            let merge = &mut merges[m];
            let run = live[outcome.min()];
            merge.output.push(merge.runs[run][merge.heads[run]]);
            merge.heads[run] += 1;
        }
    }

    Ok(merges
        .into_iter()
        .map(|mut merge| {
            for r in merge.live() {
                merge
                    .output
                    .extend_from_slice(&merge.runs[r][merge.heads[r]..]);
            }
            merge.output
        })
        .collect())
}

/// Invocation ratio `base / test` for `task` on the canonical input `0..n`.
///
/// Min and min-max counts do not depend on the key values; sort counts do,
/// so [`speedup_on`] accepts an explicit input.
pub fn speedup(
    n: usize,
    k_test: ObservabilityOrder,
    k_base: ObservabilityOrder,
    task: Task,
) -> Result<Ratio<u64>> {
    let items: Vec<usize> = (0..n).collect();
    speedup_on(&items, k_test, k_base, task)
}

pub fn speedup_on<T: Ord>(
    items: &[T],
    k_test: ObservabilityOrder,
    k_base: ObservabilityOrder,
    task: Task,
) -> Result<Ratio<u64>> {
    let test = task.run(items, k_test)?.invocations();
    if test == 0 {
        return Err(Error::ZeroCost);
    }
    let base = task.run(items, k_base)?.invocations();
    Ok(Ratio::new(base, test))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PredictedInvocations {
    One,
    MoreThanOne,
}

impl fmt::Display for PredictedInvocations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PredictedInvocations::One => "1",
            PredictedInvocations::MoreThanOne => ">1",
        })
    }
}

/// One-step predicate: a single reading suffices exactly when `k >= n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Principle {
    pub n: usize,
    pub holds_one_step: bool,
    pub predicted_invocations: PredictedInvocations,
}

impl Principle {
    /// Whether a measured invocation count is what the predicate predicts.
    /// A lone item needs at most one reading (zero for selection, one for a
    /// physical device that always fires).
    pub fn agrees_with(&self, invocations: u64) -> bool {
        if self.n < 2 {
            return invocations <= 1;
        }
        (invocations == 1) == self.holds_one_step
    }
}

pub fn principle_of_observability(n: usize, order: ObservabilityOrder) -> Principle {
    let holds_one_step = order.get() >= n;
    Principle {
        n,
        holds_one_step,
        predicted_invocations: if holds_one_step {
            PredictedInvocations::One
        } else {
            PredictedInvocations::MoreThanOne
        },
    }
}
