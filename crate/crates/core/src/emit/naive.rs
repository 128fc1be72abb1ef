//! The two baseline methods. Both emit in a fixed positional order and make
//! no attempt to suppress repeated comparisons; measuring the cost of those
//! repeats is part of what the harness is for.

use crate::blocking::{build_neighbor_list, purge_threshold, suffixes, tokenize};
use crate::emit::{ModeCtx, ProgressiveEmitter};
use crate::model::{block_cardinality, Comparison, ErMode, ProfileCollection, ProfileId};
use std::collections::BTreeMap;

/// Schema-agnostic progressive sorted neighborhood: slides a window of
/// incrementally growing size over the Neighbor List, emitting the pair at
/// each position. The weight carries `1/w` as a descending proxy; emission
/// order is positional, not weight-sorted.
pub struct SaPsn {
    nl: Vec<ProfileId>,
    ctx: ModeCtx,
    window: usize,
    pos: usize,
}

impl SaPsn {
    pub fn new(collection: &ProfileCollection) -> Self {
        Self {
            nl: build_neighbor_list(collection).entries,
            ctx: ModeCtx::of(collection),
            window: 1,
            pos: 0,
        }
    }
}

impl ProgressiveEmitter for SaPsn {
    fn next_comparison(&mut self) -> Option<Comparison> {
        loop {
            if self.window >= self.nl.len() {
                return None;
            }
            if self.pos + self.window >= self.nl.len() {
                self.window += 1;
                self.pos = 0;
                continue;
            }
            let a = self.nl[self.pos];
            let b = self.nl[self.pos + self.window];
            self.pos += 1;
            if self.ctx.valid_pair(a, b) {
                return Some(self.ctx.comparison(a, b, 1.0 / self.window as f64));
            }
        }
    }
}

/// One node of the suffix forest: the profiles owning at least one token with
/// this suffix.
#[derive(Debug, Clone)]
pub struct SuffixNode {
    pub suffix: String,
    pub members: Vec<ProfileId>,
    pub cardinality: u64,
    pub length: usize,
}

/// Suffix-forest nodes in processing order: descending suffix length (leaves
/// first, roots last), then ascending cardinality, then suffix.
#[derive(Debug, Clone)]
pub struct SuffixForest {
    pub nodes: Vec<SuffixNode>,
}

impl SuffixForest {
    /// `purge_ratio`, when set, drops nodes larger than the purging threshold
    /// before ordering, exactly as block purging does for token blocks.
    pub fn build(collection: &ProfileCollection, l_min: usize, purge_ratio: Option<f64>) -> Self {
        let mode = collection.mode();
        let boundary = collection.source_boundary();
        let mut members_by_suffix: BTreeMap<String, Vec<ProfileId>> = BTreeMap::new();
        for profile in collection.profiles() {
            let mut owned: Vec<String> = tokenize(profile)
                .iter()
                .flat_map(|token| suffixes(token, l_min))
                .collect();
            owned.sort_unstable();
            owned.dedup();
            for suffix in owned {
                members_by_suffix.entry(suffix).or_default().push(profile.id);
            }
        }

        let size_cap = purge_ratio.map(|ratio| purge_threshold(collection.len(), ratio));
        let mut nodes: Vec<SuffixNode> = members_by_suffix
            .into_iter()
            .filter(|(_, members)| size_cap.is_none_or(|cap| members.len() <= cap))
            .map(|(suffix, members)| {
                let n0 = members.partition_point(|&id| id < boundary) as u64;
                let n1 = members.len() as u64 - n0;
                SuffixNode {
                    length: suffix.chars().count(),
                    cardinality: block_cardinality(n0, n1, mode),
                    suffix,
                    members,
                }
            })
            .filter(|node| match mode {
                ErMode::Dirty => node.members.len() >= 2,
                ErMode::CleanClean => node.cardinality > 0,
            })
            .collect();
        nodes.sort_unstable_by(|a, b| {
            b.length
                .cmp(&a.length)
                .then_with(|| a.cardinality.cmp(&b.cardinality))
                .then_with(|| a.suffix.cmp(&b.suffix))
        });
        Self { nodes }
    }
}

/// Progressive suffix arrays blocking: walks the suffix forest leaves first,
/// enumerating each node's pairs in ascending id order. Within a node every
/// comparison shares the node's weight, `1/cardinality`.
pub struct SaPsab {
    forest: SuffixForest,
    ctx: ModeCtx,
    node_idx: usize,
    // Cursors into the current node's pair enumeration.
    first: usize,
    second: usize,
}

impl SaPsab {
    pub fn new(collection: &ProfileCollection, l_min: usize, purge_ratio: Option<f64>) -> Self {
        let forest = SuffixForest::build(collection, l_min, purge_ratio);
        let mut emitter =
            Self { forest, ctx: ModeCtx::of(collection), node_idx: 0, first: 0, second: 0 };
        emitter.reset_cursors();
        emitter
    }

    fn reset_cursors(&mut self) {
        self.first = 0;
        self.second = self.current_split().unwrap_or(1);
    }

    /// In clean-clean mode pairs cross the source split; in dirty mode the
    /// split is conceptually the next member.
    fn current_split(&self) -> Option<usize> {
        match self.ctx.mode {
            ErMode::Dirty => None,
            ErMode::CleanClean => self
                .forest
                .nodes
                .get(self.node_idx)
                .map(|node| node.members.partition_point(|&id| id < self.ctx.source_boundary)),
        }
    }

    fn advance_node(&mut self) {
        self.node_idx += 1;
        self.reset_cursors();
    }
}

impl ProgressiveEmitter for SaPsab {
    fn next_comparison(&mut self) -> Option<Comparison> {
        loop {
            let node = self.forest.nodes.get(self.node_idx)?;
            let members = &node.members;
            match self.ctx.mode {
                ErMode::Dirty => {
                    if self.first + 1 >= members.len() {
                        self.advance_node();
                        continue;
                    }
                    if self.second >= members.len() {
                        self.first += 1;
                        self.second = self.first + 1;
                        continue;
                    }
                    let (a, b) = (members[self.first], members[self.second]);
                    self.second += 1;
                    return Some(self.ctx.comparison(a, b, 1.0 / node.cardinality as f64));
                }
                ErMode::CleanClean => {
                    let split = members.partition_point(|&id| id < self.ctx.source_boundary);
                    if self.first >= split {
                        self.advance_node();
                        continue;
                    }
                    if self.second >= members.len() {
                        self.first += 1;
                        self.second = split;
                        continue;
                    }
                    let (a, b) = (members[self.first], members[self.second]);
                    self.second += 1;
                    return Some(self.ctx.comparison(a, b, 1.0 / node.cardinality as f64));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emit::ProgressiveEmitter;
    use crate::testutil::{collection_from_values, dirty_fixture};
    use std::collections::BTreeSet;

    fn drain(emitter: &mut dyn ProgressiveEmitter) -> Vec<Comparison> {
        std::iter::from_fn(|| emitter.next_comparison()).collect()
    }

    #[test]
    fn sa_psn_fixture_prefix() {
        let mut psn = SaPsn::new(&dirty_fixture());
        let pairs: Vec<_> = (0..5).map(|_| psn.next_comparison().unwrap().pair()).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 2), (2, 3), (0, 3), (0, 1)]);
    }

    #[test]
    fn sa_psn_weight_is_inverse_window() {
        let mut psn = SaPsn::new(&dirty_fixture());
        assert_eq!(psn.next_comparison().unwrap().weight, 1.0);
        // Drain the w=1 pass (6 valid emissions total), then check w=2.
        for _ in 0..5 {
            psn.next_comparison();
        }
        assert_eq!(psn.next_comparison().unwrap().weight, 0.5);
    }

    #[test]
    fn sa_psn_single_entry_exhausts() {
        let c = collection_from_values(ErMode::Dirty, &[(0, "a"), (0, "")]);
        let mut psn = SaPsn::new(&c);
        assert!(psn.next_comparison().is_none());
        assert!(psn.next_comparison().is_none());
    }

    #[test]
    fn sa_psn_single_profile_many_keys() {
        let c = collection_from_values(ErMode::Dirty, &[(0, "a b c")]);
        let mut psn = SaPsn::new(&c);
        assert!(psn.next_comparison().is_none());
    }

    #[test]
    fn sa_psn_covers_all_valid_pairs() {
        let c = collection_from_values(
            ErMode::Dirty,
            &[(0, "x y"), (0, "y z"), (0, "z w q"), (0, "q x")],
        );
        let nl = build_neighbor_list(&c).entries;
        let mut expected = BTreeSet::new();
        for a in 0..nl.len() {
            for b in a + 1..nl.len() {
                if nl[a] != nl[b] {
                    let (i, j) = (nl[a].min(nl[b]), nl[a].max(nl[b]));
                    expected.insert((i, j));
                }
            }
        }
        let mut psn = SaPsn::new(&c);
        let emitted: BTreeSet<_> = drain(&mut psn).iter().map(|c| c.pair()).collect();
        assert_eq!(emitted, expected);
    }

    #[test]
    fn forest_fixture_order_starts_with_smith() {
        let forest = SuffixForest::build(&dirty_fixture(), 2, None);
        let first = &forest.nodes[0];
        assert_eq!(first.suffix, "smith");
        assert_eq!(first.members, vec![0, 1, 3]);
        let lengths: Vec<_> = forest.nodes.iter().map(|n| n.length).collect();
        assert!(lengths.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn sa_psab_fixture_first_node_pairs() {
        let mut psab = SaPsab::new(&dirty_fixture(), 2, None);
        let pairs: Vec<_> = (0..3).map(|_| psab.next_comparison().unwrap().pair()).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 3), (1, 3)]);
    }

    #[test]
    fn sa_psab_single_pair_node() {
        let c = collection_from_values(ErMode::Dirty, &[(0, "ab"), (0, "ab")]);
        let mut psab = SaPsab::new(&c, 2, None);
        // One suffix node ("ab") with one pair.
        assert_eq!(psab.next_comparison().unwrap().pair(), (0, 1));
        assert!(psab.next_comparison().is_none());
        assert!(psab.next_comparison().is_none());
    }

    #[test]
    fn sa_psab_unique_suffixes_emit_nothing() {
        let c = collection_from_values(ErMode::Dirty, &[(0, "abc"), (0, "xyz")]);
        let mut psab = SaPsab::new(&c, 2, None);
        assert!(psab.next_comparison().is_none());
    }

    #[test]
    fn sa_psab_emission_set_matches_forest() {
        let c = collection_from_values(
            ErMode::Dirty,
            &[(0, "smith smyth"), (0, "smith"), (0, "smyth kid"), (0, "kid smith")],
        );
        let forest = SuffixForest::build(&c, 2, None);
        let mut expected = BTreeSet::new();
        for node in &forest.nodes {
            for (a_idx, &a) in node.members.iter().enumerate() {
                for &b in &node.members[a_idx + 1..] {
                    expected.insert((a, b));
                }
            }
        }
        let mut psab = SaPsab::new(&c, 2, None);
        let emitted: BTreeSet<_> = drain(&mut psab).iter().map(|c| c.pair()).collect();
        assert_eq!(emitted, expected);
    }

    #[test]
    fn sa_psab_clean_clean_pairs_cross_sources() {
        let c = collection_from_values(
            ErMode::CleanClean,
            &[(0, "smith"), (0, "smith"), (1, "smith"), (1, "smyth")],
        );
        let mut psab = SaPsab::new(&c, 2, None);
        let emitted = drain(&mut psab);
        assert!(!emitted.is_empty());
        for cmp in &emitted {
            assert!(cmp.i < 2 && cmp.j >= 2, "pair {:?} does not cross sources", cmp.pair());
        }
    }

    proptest::proptest! {
        /// Run to exhaustion, SA-PSN's deduplicated emissions are exactly the
        /// valid pairs that co-occur anywhere in the Neighbor List.
        #[test]
        fn sa_psn_exhaustive_coverage(values in proptest::collection::vec("[a-d ]{0,8}", 2..8)) {
            let rows: Vec<(u8, &str)> = values.iter().map(|v| (0u8, v.as_str())).collect();
            let c = collection_from_values(ErMode::Dirty, &rows);
            let nl = build_neighbor_list(&c).entries;
            let mut expected = BTreeSet::new();
            for a in 0..nl.len() {
                for b in a + 1..nl.len() {
                    if let Ok(pair) = c.canonicalize(nl[a], nl[b]) {
                        expected.insert(pair);
                    }
                }
            }
            let mut psn = SaPsn::new(&c);
            let emitted: BTreeSet<_> = drain(&mut psn).iter().map(|c| c.pair()).collect();
            proptest::prop_assert_eq!(emitted, expected);
        }
    }
}
