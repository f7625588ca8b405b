//! Binary-comparison baselines and brute-force checkers.
//!
//! Nothing here goes through the k-comparator; these are the independent
//! references the machine results are checked against.

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    LinearScanMin,
    InsertionSort,
    MergeSort,
    TournamentMin,
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Baseline::LinearScanMin => "linear_scan_min",
            Baseline::InsertionSort => "insertion_sort",
            Baseline::MergeSort => "merge_sort",
            Baseline::TournamentMin => "tournament_min",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortAlgorithm {
    InsertionSort,
    MergeSort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinAlgorithm {
    LinearScan,
    Tournament,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum BaselineOutput {
    Index(usize),
    Permutation(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BaselineReport {
    pub algorithm: Baseline,
    /// Binary comparisons performed.
    pub comparisons: u64,
    pub result: BaselineOutput,
}

struct Counter<'a, T> {
    items: &'a [T],
    comparisons: u64,
}

impl<'a, T: Ord> Counter<'a, T> {
    fn new(items: &'a [T]) -> Self {
        Self {
            items,
            comparisons: 0,
        }
    }

    fn cmp(&mut self, a: usize, b: usize) -> Ordering {
        self.comparisons += 1;
        self.items[a].cmp(&self.items[b])
    }
}

/// Index of the first minimal element.
pub fn brute_min<T: Ord>(items: &[T]) -> Result<usize> {
    if items.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut best = 0;
    for (i, item) in items.iter().enumerate().skip(1) {
        if *item < items[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Index of the last maximal element.
pub fn brute_max<T: Ord>(items: &[T]) -> Result<usize> {
    if items.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut best = 0;
    for (i, item) in items.iter().enumerate().skip(1) {
        if *item >= items[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Stable ascending permutation from the standard library sort.
pub fn reference_sort<T: Ord>(items: &[T]) -> Vec<usize> {
    let mut permutation: Vec<usize> = (0..items.len()).collect();
    permutation.sort_by(|&a, &b| items[a].cmp(&items[b]));
    permutation
}

pub fn baseline_min<T: Ord>(items: &[T], algorithm: MinAlgorithm) -> Result<BaselineReport> {
    if items.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut counter = Counter::new(items);
    let (index, algorithm) = match algorithm {
        MinAlgorithm::LinearScan => {
            let mut best = 0;
            for i in 1..items.len() {
                if counter.cmp(i, best) == Ordering::Less {
                    best = i;
                }
            }
            (best, Baseline::LinearScanMin)
        }
        MinAlgorithm::Tournament => {
            let mut survivors: Vec<usize> = (0..items.len()).collect();
            while survivors.len() > 1 {
                survivors = survivors
                    .chunks(2)
                    .map(|pair| match *pair {
                        [a, b] if counter.cmp(b, a) == Ordering::Less => b,
                        [a, ..] => a,
                        [] => unreachable!("chunks are never empty"),
                    })
                    .collect();
            }
            (survivors[0], Baseline::TournamentMin)
        }
    };
    Ok(BaselineReport {
        algorithm,
        comparisons: counter.comparisons,
        result: BaselineOutput::Index(index),
    })
}

pub fn baseline_sort<T: Ord>(items: &[T], algorithm: SortAlgorithm) -> Result<BaselineReport> {
    if items.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut counter = Counter::new(items);
    let mut permutation: Vec<usize> = (0..items.len()).collect();
    let algorithm = match algorithm {
        SortAlgorithm::InsertionSort => {
            for i in 1..permutation.len() {
                let mut j = i;
                while j > 0 && counter.cmp(permutation[j - 1], permutation[j]) == Ordering::Greater
                {
                    permutation.swap(j - 1, j);
                    j -= 1;
                }
            }
            Baseline::InsertionSort
        }
        SortAlgorithm::MergeSort => {
            merge_sort(&mut permutation, &mut counter);
            Baseline::MergeSort
        }
    };
    Ok(BaselineReport {
        algorithm,
        comparisons: counter.comparisons,
        result: BaselineOutput::Permutation(permutation),
    })
}

fn merge_sort<T: Ord>(slice: &mut [usize], counter: &mut Counter<'_, T>) {
    if slice.len() < 2 {
        return;
    }
    let mid = slice.len() / 2;
    merge_sort(&mut slice[..mid], counter);
    merge_sort(&mut slice[mid..], counter);

    let (left, right) = slice.split_at(mid);
    let mut merged = Vec::with_capacity(slice.len());
    let (mut i, mut j) = (0, 0);
    while i < left.len() && j < right.len() {
        if counter.cmp(right[j], left[i]) == Ordering::Less {
            merged.push(right[j]);
            j += 1;
        } else {
            merged.push(left[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&left[i..]);
    merged.extend_from_slice(&right[j..]);
    slice.copy_from_slice(&merged);
}
