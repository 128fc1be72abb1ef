//! Schema-agnostic blocking: token extraction, the token-blocking workflow
//! (purging and filtering included), suffix generation, and the Neighbor List.

use std::collections::BTreeMap;

use crate::model::{block_cardinality, ErMode, Profile, ProfileCollection, ProfileId};

pub const DEFAULT_PURGE_RATIO: f64 = 0.10;
pub const DEFAULT_FILTER_RATIO: f64 = 0.80;

/// Lower bound for the purging threshold. The percentage rule degenerates on
/// tiny collections (10% of 4 profiles would purge everything), so blocks are
/// only purged once they exceed both the ratio and this floor.
pub const PURGE_FLOOR: usize = 10;

/// Splits every attribute value on non-alphanumeric characters, lowercases,
/// drops empties and deduplicates. The result is lexicographically sorted.
pub fn tokenize(profile: &Profile) -> Vec<String> {
    let mut tokens: Vec<String> = profile
        .attributes
        .iter()
        .flat_map(|(_, value)| value.split(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect();
    tokens.sort_unstable();
    tokens.dedup();
    tokens
}

/// A group of profiles sharing one blocking key.
#[derive(Debug, Clone)]
pub struct Block {
    pub key: String,
    /// Ascending, deduplicated.
    pub members: Vec<ProfileId>,
    pub cardinality: u64,
}

impl Block {
    /// Builds a block from ascending members, deriving the cardinality from
    /// the mode and the source boundary.
    pub fn from_members(key: String, members: Vec<ProfileId>, mode: ErMode, boundary: ProfileId) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        let n0 = members.partition_point(|&id| id < boundary) as u64;
        let n1 = members.len() as u64 - n0;
        let cardinality = block_cardinality(n0, n1, mode);
        Self { key, members, cardinality }
    }

    /// Index of the first source-1 member.
    pub fn source_split(&self, boundary: ProfileId) -> usize {
        self.members.partition_point(|&id| id < boundary)
    }
}

#[derive(Debug, Clone)]
pub struct BlockCollection {
    pub blocks: Vec<Block>,
    pub mode: ErMode,
    pub profile_count: usize,
    pub source_boundary: ProfileId,
}

impl BlockCollection {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Aggregate cardinality: the total number of comparisons entailed.
    pub fn total_comparisons(&self) -> u64 {
        self.blocks.iter().map(|b| b.cardinality).sum()
    }

    /// Total member count over all blocks.
    pub fn total_members(&self) -> usize {
        self.blocks.iter().map(|b| b.members.len()).sum()
    }
}

/// One block per attribute value token. Dirty mode keeps blocks with at least
/// two members; clean-clean keeps blocks with members from both sources. The
/// output is ordered by key.
pub fn token_blocking(collection: &ProfileCollection) -> BlockCollection {
    let mode = collection.mode();
    let boundary = collection.source_boundary();
    let mut members_by_token: BTreeMap<String, Vec<ProfileId>> = BTreeMap::new();
    for profile in collection.profiles() {
        for token in tokenize(profile) {
            // Profiles are visited in id order, so member lists stay ascending.
            members_by_token.entry(token).or_default().push(profile.id);
        }
    }
    let blocks = members_by_token
        .into_iter()
        .map(|(key, members)| Block::from_members(key, members, mode, boundary))
        .filter(|block| match mode {
            ErMode::Dirty => block.members.len() >= 2,
            ErMode::CleanClean => block.cardinality > 0,
        })
        .collect();
    BlockCollection { blocks, mode, profile_count: collection.len(), source_boundary: boundary }
}

/// Purging threshold: blocks whose size exceeds this are treated as stop
/// words. `max(ceil(ratio * profiles), PURGE_FLOOR)`.
pub fn purge_threshold(profile_count: usize, ratio: f64) -> usize {
    debug_assert!(ratio > 0.0 && ratio <= 1.0);
    let scaled = (ratio * profile_count as f64).ceil() as usize;
    scaled.max(PURGE_FLOOR)
}

/// Discards every block strictly larger than the purging threshold.
pub fn block_purging(blocks: BlockCollection, ratio: f64) -> BlockCollection {
    let threshold = purge_threshold(blocks.profile_count, ratio);
    let retained = blocks
        .blocks
        .into_iter()
        .filter(|b| b.members.len() <= threshold)
        .collect();
    BlockCollection { blocks: retained, ..blocks }
}

/// Retains every profile in the `ceil(ratio * |B_i|)` smallest of its blocks
/// (ties broken by key), then rebuilds the blocks from the retained
/// memberships. Blocks whose cardinality falls to zero are dropped.
pub fn block_filtering(blocks: BlockCollection, ratio: f64) -> BlockCollection {
    debug_assert!(ratio > 0.0 && ratio <= 1.0);
    let mut blocks_of: Vec<Vec<usize>> = vec![Vec::new(); blocks.profile_count];
    for (idx, block) in blocks.blocks.iter().enumerate() {
        for &member in &block.members {
            blocks_of[member as usize].push(idx);
        }
    }

    let mut retained: Vec<Vec<ProfileId>> = vec![Vec::new(); blocks.blocks.len()];
    for (profile, mut owned) in blocks_of.into_iter().enumerate() {
        if owned.is_empty() {
            continue;
        }
        let keep = ((ratio * owned.len() as f64).ceil() as usize).clamp(1, owned.len());
        owned.sort_unstable_by(|&a, &b| {
            let (ba, bb) = (&blocks.blocks[a], &blocks.blocks[b]);
            ba.cardinality.cmp(&bb.cardinality).then_with(|| ba.key.cmp(&bb.key))
        });
        for &idx in &owned[..keep] {
            retained[idx].push(profile as ProfileId);
        }
    }

    let rebuilt = blocks
        .blocks
        .iter()
        .zip(retained)
        .filter(|(_, members)| !members.is_empty())
        .map(|(block, mut members)| {
            members.sort_unstable();
            Block::from_members(block.key.clone(), members, blocks.mode, blocks.source_boundary)
        })
        .filter(|b| b.cardinality > 0)
        .collect();
    BlockCollection { blocks: rebuilt, ..blocks }
}

#[derive(Debug, Clone, Copy)]
pub struct WorkflowParams {
    pub purge_ratio: f64,
    pub filter_ratio: f64,
}

impl Default for WorkflowParams {
    fn default() -> Self {
        Self { purge_ratio: DEFAULT_PURGE_RATIO, filter_ratio: DEFAULT_FILTER_RATIO }
    }
}

/// The fixed blocking workflow: token blocking, then purging, then filtering.
pub fn token_blocking_workflow(collection: &ProfileCollection, params: &WorkflowParams) -> BlockCollection {
    let blocks = token_blocking(collection);
    let purged = block_purging(blocks, params.purge_ratio);
    block_filtering(purged, params.filter_ratio)
}

/// Profile ids ordered by the alphabetical sort of every (key, profile)
/// occurrence; `keys` is the parallel list of sorted keys.
#[derive(Debug, Clone)]
pub struct NeighborList {
    pub entries: Vec<ProfileId>,
    pub keys: Vec<String>,
}

impl NeighborList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Sorts all (token, profile) occurrences by (token, id). Ids are dense with
/// source 0 first, so equal keys order by (source, id) as required.
pub fn build_neighbor_list(collection: &ProfileCollection) -> NeighborList {
    let mut occurrences: Vec<(String, ProfileId)> = collection
        .profiles()
        .iter()
        .flat_map(|p| tokenize(p).into_iter().map(move |t| (t, p.id)))
        .collect();
    occurrences.sort_unstable();
    let (keys, entries) = occurrences.into_iter().unzip();
    NeighborList { entries, keys }
}

/// All suffixes of at least `l_min` characters, longest first. Tokens shorter
/// than `l_min` yield nothing.
pub fn suffixes(token: &str, l_min: usize) -> Vec<String> {
    debug_assert!(l_min >= 1);
    let char_count = token.chars().count();
    if char_count < l_min {
        return Vec::new();
    }
    token
        .char_indices()
        .take(char_count - l_min + 1)
        .map(|(byte_idx, _)| token[byte_idx..].to_string())
        .collect()
}
