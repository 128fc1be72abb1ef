//! Similarity-based methods: a weighted Neighbor List ranks pairs by how
//! often their blocking keys land close together when sorted alphabetically.
//! The Position Index inverts the Neighbor List so each profile's window
//! neighbors can be found without rescanning the list.

use thiserror::Error;

use crate::blocking::{build_neighbor_list, NeighborList};
use crate::emit::{ModeCtx, ProgressiveEmitter};
use crate::model::{Comparison, ComparisonList, ErMode, ProfileCollection, ProfileId};

/// Inverse of the Neighbor List: for each profile, the ascending list of its
/// positions.
#[derive(Debug, Clone)]
pub struct PositionIndex {
    positions: Vec<Vec<u32>>,
}

impl PositionIndex {
    pub fn positions(&self, id: ProfileId) -> &[u32] {
        &self.positions[id as usize]
    }

    pub fn occurrence_count(&self, id: ProfileId) -> usize {
        self.positions[id as usize].len()
    }

    pub fn total_entries(&self) -> usize {
        self.positions.iter().map(Vec::len).sum()
    }
}

pub fn build_position_index(nl: &NeighborList, profile_count: usize) -> PositionIndex {
    let mut positions = vec![Vec::new(); profile_count];
    for (pos, &id) in nl.entries.iter().enumerate() {
        positions[id as usize].push(pos as u32);
    }
    PositionIndex { positions }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimilarityError {
    #[error("RCF denominator is not positive (freq {freq}, lengths {len_i} and {len_j})")]
    DivisionDegenerate { freq: usize, len_i: usize, len_j: usize },
}

/// Relative co-occurrence frequency: how often two profiles sit `w` apart in
/// the Neighbor List, normalized by their combined occurrence counts.
pub fn rcf_weight(freq: usize, len_i: usize, len_j: usize) -> Result<f64, SimilarityError> {
    let denominator = (len_i + len_j) as i64 - freq as i64;
    if denominator <= 0 {
        return Err(SimilarityError::DivisionDegenerate { freq, len_i, len_j });
    }
    Ok(freq as f64 / denominator as f64)
}

/// Scratch accumulator for per-profile neighbor frequencies.
struct FrequencyScratch {
    counts: Vec<u32>,
    touched: Vec<ProfileId>,
}

impl FrequencyScratch {
    fn new(profile_count: usize) -> Self {
        Self { counts: vec![0; profile_count], touched: Vec::new() }
    }

    fn bump(&mut self, id: ProfileId) {
        if self.counts[id as usize] == 0 {
            self.touched.push(id);
        }
        self.counts[id as usize] += 1;
    }

    /// Drains the accumulated (neighbor, frequency) pairs in ascending id order.
    fn drain(&mut self) -> Vec<(ProfileId, u32)> {
        self.touched.sort_unstable();
        let mut out = Vec::with_capacity(self.touched.len());
        for &id in &self.touched {
            out.push((id, self.counts[id as usize]));
            self.counts[id as usize] = 0;
        }
        self.touched.clear();
        out
    }
}

/// Shared window walk: for every position of `center`, looks `offset` places
/// forward and backward in the Neighbor List and counts valid neighbors. A
/// neighbor is valid when it avoids repeats: a smaller id in dirty mode, a
/// source-1 profile in clean-clean mode (where `center` iterates source 0).
fn accumulate_window(
    nl: &[ProfileId],
    pi: &PositionIndex,
    ctx: &ModeCtx,
    center: ProfileId,
    offset: usize,
    scratch: &mut FrequencyScratch,
) {
    let valid = |neighbor: ProfileId| match ctx.mode {
        ErMode::Dirty => neighbor < center,
        ErMode::CleanClean => neighbor >= ctx.source_boundary,
    };
    for &pos in pi.positions(center) {
        let pos = pos as usize;
        if let Some(&forward) = nl.get(pos + offset)
            && valid(forward)
        {
            scratch.bump(forward);
        }
        if pos >= offset {
            let backward = nl[pos - offset];
            if valid(backward) {
                scratch.bump(backward);
            }
        }
    }
}

fn center_ids(ctx: &ModeCtx) -> std::ops::Range<u32> {
    match ctx.mode {
        ErMode::Dirty => 0..ctx.profile_count as u32,
        ErMode::CleanClean => 0..ctx.source_boundary,
    }
}

/// Weights an aggregated frequency with RCF. Frequencies summed over several
/// window offsets can exceed the single-window bound and push the denominator
/// to zero or below; the count is capped just under that point, which keeps
/// the weight finite and monotone in the raw frequency.
fn rcf_weight_aggregated(freq: usize, len_i: usize, len_j: usize) -> f64 {
    let capped = freq.min(len_i + len_j - 1);
    rcf_weight(capped, len_i, len_j).expect("capped frequency keeps the denominator positive")
}

/// Local schema-agnostic PSN: weights the comparisons of one window size at a
/// time. The same pair may be re-emitted at different window sizes.
pub struct LsPsn {
    nl: Vec<ProfileId>,
    pi: PositionIndex,
    ctx: ModeCtx,
    window: usize,
    window_cap: Option<usize>,
    buffer: ComparisonList,
    scratch: FrequencyScratch,
}

impl LsPsn {
    pub fn new(collection: &ProfileCollection, window_cap: Option<usize>) -> Self {
        let nl = build_neighbor_list(collection);
        let pi = build_position_index(&nl, collection.len());
        let ctx = ModeCtx::of(collection);
        let mut emitter = Self {
            nl: nl.entries,
            pi,
            ctx,
            window: 1,
            window_cap,
            buffer: ComparisonList::default(),
            scratch: FrequencyScratch::new(collection.len()),
        };
        emitter.buffer = emitter.fill(1);
        emitter
    }

    /// One full pass at window size `w`: the initialization phase for `w`=1,
    /// the refill step afterwards.
    fn fill(&mut self, w: usize) -> ComparisonList {
        let mut items = Vec::new();
        for center in center_ids(&self.ctx) {
            accumulate_window(&self.nl, &self.pi, &self.ctx, center, w, &mut self.scratch);
            let len_center = self.pi.occurrence_count(center);
            for (neighbor, freq) in self.scratch.drain() {
                let len_neighbor = self.pi.occurrence_count(neighbor);
                let weight = rcf_weight_aggregated(freq as usize, len_center, len_neighbor);
                items.push(self.ctx.comparison(center, neighbor, weight));
            }
        }
        ComparisonList::from_unsorted(items)
    }

    /// The window size the current buffer was filled at.
    pub fn current_window(&self) -> usize {
        self.window
    }

    /// Exclusive upper bound for the window size: the Neighbor List length,
    /// tightened by the optional cap.
    fn window_limit(&self) -> usize {
        match self.window_cap {
            Some(cap) => cap.saturating_add(1).min(self.nl.len()),
            None => self.nl.len(),
        }
    }
}

impl ProgressiveEmitter for LsPsn {
    fn next_comparison(&mut self) -> Option<Comparison> {
        loop {
            if let Some(comparison) = self.buffer.pop_best() {
                return Some(comparison);
            }
            self.window += 1;
            if self.window >= self.window_limit() {
                return None;
            }
            let w = self.window;
            self.buffer = self.fill(w);
        }
    }
}

/// Global schema-agnostic PSN: aggregates neighbor frequencies over every
/// window size in `[1, w_max]`, weights each distinct pair once, and emits
/// from a single globally sorted buffer. No pair is emitted twice.
pub struct GsPsn {
    buffer: ComparisonList,
}

impl GsPsn {
    pub fn new(collection: &ProfileCollection, w_max: usize) -> Self {
        let nl = build_neighbor_list(collection);
        let pi = build_position_index(&nl, collection.len());
        let ctx = ModeCtx::of(collection);
        let nl = nl.entries;
        // Offsets beyond the list length cannot pair anything.
        let effective_max = w_max.min(nl.len().saturating_sub(1));
        let mut scratch = FrequencyScratch::new(collection.len());
        let mut items = Vec::new();
        for center in center_ids(&ctx) {
            for offset in 1..=effective_max {
                accumulate_window(&nl, &pi, &ctx, center, offset, &mut scratch);
            }
            let len_center = pi.occurrence_count(center);
            for (neighbor, freq) in scratch.drain() {
                let len_neighbor = pi.occurrence_count(neighbor);
                let weight = rcf_weight_aggregated(freq as usize, len_center, len_neighbor);
                items.push(ctx.comparison(center, neighbor, weight));
            }
        }
        Self { buffer: ComparisonList::from_unsorted(items) }
    }
}

impl ProgressiveEmitter for GsPsn {
    fn next_comparison(&mut self) -> Option<Comparison> {
        self.buffer.pop_best()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{collection_from_values, dirty_fixture};
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    const THIRD: f64 = 1.0 / 3.0;

    fn fixture_nl_and_pi() -> (NeighborList, PositionIndex) {
        let c = dirty_fixture();
        let nl = build_neighbor_list(&c);
        let pi = build_position_index(&nl, c.len());
        (nl, pi)
    }

    #[test]
    fn position_index_inverts_fixture() {
        let (_, pi) = fixture_nl_and_pi();
        assert_eq!(pi.positions(0), &[0, 5]);
        assert_eq!(pi.positions(1), &[1, 6]);
        assert_eq!(pi.positions(2), &[2, 3]);
        assert_eq!(pi.positions(3), &[4, 7]);
    }

    #[test]
    fn position_index_empty_and_single() {
        let empty = NeighborList { entries: Vec::new(), keys: Vec::new() };
        let pi = build_position_index(&empty, 3);
        assert_eq!(pi.total_entries(), 0);

        let single = NeighborList { entries: vec![2, 2], keys: vec!["a".into(), "b".into()] };
        let pi = build_position_index(&single, 3);
        assert_eq!(pi.positions(2), &[0, 1]);
    }

    #[test]
    fn rcf_examples() {
        assert_eq!(rcf_weight(2, 2, 2).unwrap(), 1.0);
        assert_eq!(rcf_weight(1, 2, 2).unwrap(), THIRD);
        assert_eq!(rcf_weight(1, 1, 1).unwrap(), 1.0);
        assert!(rcf_weight(4, 2, 2).is_err());
    }

    fn drain_window_batch(ls: &mut LsPsn) -> Vec<(u32, u32, f64)> {
        let mut out = Vec::new();
        while let Some(c) = ls.buffer.pop_best() {
            out.push((c.i, c.j, c.weight));
        }
        out
    }

    #[test]
    fn ls_psn_fill_window_one_on_fixture() {
        let mut ls = LsPsn::new(&dirty_fixture(), None);
        let batch = drain_window_batch(&mut ls);
        assert_eq!(
            batch,
            vec![
                (0, 1, 1.0),
                (0, 3, THIRD),
                (1, 2, THIRD),
                (1, 3, THIRD),
                (2, 3, THIRD),
            ]
        );
    }

    #[test]
    fn ls_psn_window_beyond_list_is_empty() {
        let mut ls = LsPsn::new(&dirty_fixture(), None);
        let batch = ls.fill(100);
        assert!(batch.is_empty());

        let single = collection_from_values(ErMode::Dirty, &[(0, "a b")]);
        let mut ls = LsPsn::new(&single, None);
        assert!(drain_window_batch(&mut ls).is_empty());
    }

    #[test]
    fn ls_psn_first_emission_and_window_advance() {
        let mut ls = LsPsn::new(&dirty_fixture(), None);
        let first = ls.next_comparison().unwrap();
        assert_eq!((first.i, first.j, first.weight), (0, 1, 1.0));
        for _ in 0..4 {
            ls.next_comparison().unwrap();
        }
        // The w=1 batch is exhausted; the next emission heads the w=2 batch.
        let sixth = ls.next_comparison().unwrap();
        assert_eq!((sixth.i, sixth.j, sixth.weight), (0, 2, 1.0));
    }

    #[test]
    fn ls_psn_empty_collection_exhausts() {
        let c = crate::model::ProfileCollection::new(ErMode::Dirty, Vec::new()).unwrap();
        let mut ls = LsPsn::new(&c, None);
        assert!(ls.next_comparison().is_none());
        assert!(ls.next_comparison().is_none());
    }

    fn drain_all(emitter: &mut dyn ProgressiveEmitter) -> Vec<Comparison> {
        std::iter::from_fn(|| emitter.next_comparison()).collect()
    }

    #[test]
    fn gs_psn_window_one_equals_ls_psn_batch() {
        let c = dirty_fixture();
        let mut gs = GsPsn::new(&c, 1);
        let mut ls = LsPsn::new(&c, None);
        let gs_all: Vec<_> = drain_all(&mut gs).iter().map(|c| (c.i, c.j, c.weight)).collect();
        let ls_batch = drain_window_batch(&mut ls);
        assert_eq!(gs_all, ls_batch);
    }

    #[test]
    fn gs_psn_fixture_top_pair_at_wmax_two() {
        let mut gs = GsPsn::new(&dirty_fixture(), 2);
        let first = gs.next_comparison().unwrap();
        assert_eq!(first.pair(), (0, 1));
        assert_eq!(first.weight, 1.0);
    }

    /// Brute-force set of valid pairs with occurrences at any distance.
    fn co_occurrence_set(c: &ProfileCollection) -> BTreeSet<(u32, u32)> {
        let nl = build_neighbor_list(c).entries;
        let mut set = BTreeSet::new();
        for a in 0..nl.len() {
            for b in a + 1..nl.len() {
                if let Ok(pair) = c.canonicalize(nl[a], nl[b]) {
                    set.insert(pair);
                }
            }
        }
        set
    }

    #[test]
    fn gs_psn_full_range_covers_co_occurrence_set() {
        let c = collection_from_values(
            ErMode::Dirty,
            &[(0, "x y"), (0, "y z w"), (0, "z q"), (0, "q x w")],
        );
        let nl_len = build_neighbor_list(&c).len();
        let mut gs = GsPsn::new(&c, nl_len);
        let emitted: BTreeSet<_> = drain_all(&mut gs).iter().map(|c| c.pair()).collect();
        assert_eq!(emitted, co_occurrence_set(&c));
    }

    #[test]
    fn gs_psn_emits_no_duplicates() {
        let c = collection_from_values(
            ErMode::Dirty,
            &[(0, "a b c"), (0, "b c d"), (0, "c d e"), (0, "e a"), (0, "d b")],
        );
        let mut gs = GsPsn::new(&c, 4);
        let emitted = drain_all(&mut gs);
        let distinct: BTreeSet<_> = emitted.iter().map(|c| c.pair()).collect();
        assert_eq!(distinct.len(), emitted.len());
    }

    #[test]
    fn ls_psn_positional_soundness() {
        // Every pair in a window batch really has occurrences exactly w apart.
        let c = collection_from_values(
            ErMode::Dirty,
            &[(0, "a b"), (0, "b c"), (0, "c a d"), (0, "d a")],
        );
        let nl = build_neighbor_list(&c);
        let pi = build_position_index(&nl, c.len());
        let mut ls = LsPsn::new(&c, None);
        for w in 1..nl.len() {
            let batch = if w == 1 { std::mem::take(&mut ls.buffer) } else { ls.fill(w) };
            let mut batch = batch;
            while let Some(cmp) = batch.pop_best() {
                let found = pi.positions(cmp.i).iter().any(|&a| {
                    pi.positions(cmp.j).iter().any(|&b| a.abs_diff(b) as usize == w)
                });
                assert!(found, "pair {:?} emitted at window {w} without support", cmp.pair());
            }
        }
    }

    #[test]
    fn clean_clean_pairs_cross_sources() {
        let c = collection_from_values(
            ErMode::CleanClean,
            &[(0, "ana b"), (0, "bob c"), (1, "ana c"), (1, "bob d")],
        );
        let mut gs = GsPsn::new(&c, 3);
        let emitted = drain_all(&mut gs);
        assert!(!emitted.is_empty());
        for cmp in &emitted {
            assert!(cmp.i < c.source_boundary() && cmp.j >= c.source_boundary());
        }
    }

    proptest! {
        #[test]
        fn rcf_symmetric_and_monotone(len_i in 1usize..20, len_j in 1usize..20, freq in 1usize..10) {
            prop_assume!(freq < len_i + len_j);
            let w = rcf_weight(freq, len_i, len_j).unwrap();
            prop_assert_eq!(w, rcf_weight(freq, len_j, len_i).unwrap());
            if freq + 1 < len_i + len_j {
                prop_assert!(rcf_weight(freq + 1, len_i, len_j).unwrap() > w);
            }
        }
    }
}
