//! Equality-based methods over redundancy-positive blocks: the more blocks
//! two profiles share, the likelier they are to match. Edge weights are
//! computed on demand from the Profile Index; the blocking graph is never
//! materialized as an edge list.

use std::collections::{HashSet, VecDeque};
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::blocking::{token_blocking_workflow, Block, BlockCollection, WorkflowParams};
use crate::emit::{EmitError, ModeCtx, ProgressiveEmitter};
use crate::model::{emission_order, Comparison, ComparisonList, ErMode, ProfileCollection, ProfileId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EqualityError {
    #[error("profiles share no block")]
    NotCoOccurring,
    #[error("common block {0} has zero cardinality")]
    ZeroCardinalityBlock(u32),
}

/// Sorts blocks in ascending cardinality (ties by key); the position in the
/// result becomes the block id, so smaller ids always mean smaller blocks.
pub fn block_scheduling(mut blocks: BlockCollection) -> BlockCollection {
    blocks
        .blocks
        .sort_unstable_by(|a, b| a.cardinality.cmp(&b.cardinality).then_with(|| a.key.cmp(&b.key)));
    blocks
}

/// Inverted index from profile id to the ascending list of scheduled block
/// ids that contain it.
#[derive(Debug, Clone)]
pub struct ProfileIndex {
    blocks_of: Vec<Vec<u32>>,
}

impl ProfileIndex {
    pub fn blocks_of(&self, id: ProfileId) -> &[u32] {
        &self.blocks_of[id as usize]
    }

    pub fn total_entries(&self) -> usize {
        self.blocks_of.iter().map(Vec::len).sum()
    }
}

pub fn build_profile_index(blocks: &BlockCollection, profile_count: usize) -> ProfileIndex {
    let mut blocks_of = vec![Vec::new(); profile_count];
    for (block_id, block) in blocks.blocks.iter().enumerate() {
        for &member in &block.members {
            // Blocks are visited in id order, so the lists stay ascending.
            blocks_of[member as usize].push(block_id as u32);
        }
    }
    ProfileIndex { blocks_of }
}

/// Least-common-block-id test: a comparison encountered in block `k` is new
/// exactly when `k` is the smallest block id the two profiles share. The
/// parallel traversal stops at the first common element.
pub fn lecobi(k: u32, bi: &[u32], bj: &[u32]) -> Result<bool, EqualityError> {
    let (mut a, mut b) = (0, 0);
    while a < bi.len() && b < bj.len() {
        match bi[a].cmp(&bj[b]) {
            std::cmp::Ordering::Less => a += 1,
            std::cmp::Ordering::Greater => b += 1,
            std::cmp::Ordering::Equal => return Ok(bi[a] == k),
        }
    }
    Err(EqualityError::NotCoOccurring)
}

/// Aggregate reciprocal comparisons scheme: sums the inverse cardinality of
/// every common block, so pairs sharing small, distinctive blocks score high.
pub fn arcs_weight(bi: &[u32], bj: &[u32], cardinalities: &[u64]) -> Result<f64, EqualityError> {
    let (mut a, mut b) = (0, 0);
    let mut weight = 0.0;
    while a < bi.len() && b < bj.len() {
        match bi[a].cmp(&bj[b]) {
            std::cmp::Ordering::Less => a += 1,
            std::cmp::Ordering::Greater => b += 1,
            std::cmp::Ordering::Equal => {
                let cardinality = cardinalities[bi[a] as usize];
                if cardinality == 0 {
                    return Err(EqualityError::ZeroCardinalityBlock(bi[a]));
                }
                weight += 1.0 / cardinality as f64;
                a += 1;
                b += 1;
            }
        }
    }
    Ok(weight)
}

/// A weighting scheme usable by both PBS and PPS. PPS accumulates weights one
/// block at a time, so a scheme must decompose into per-block increments; the
/// pair weight is the sum of the increments over all common blocks.
pub trait EdgeWeighting: Send + Sync {
    /// Contribution of one shared block of the given cardinality.
    fn block_term(&self, cardinality: u64) -> f64;
}

/// The default scheme; its per-block increment is the inverse cardinality.
#[derive(Debug, Clone, Copy, Default)]
pub struct Arcs;

impl EdgeWeighting for Arcs {
    fn block_term(&self, cardinality: u64) -> f64 {
        1.0 / cardinality as f64
    }
}

/// Average incident edge weight of a profile's node; zero for an isolated
/// profile, which keeps it behind every connected one in the schedule.
pub fn duplication_likelihood(weights: &[f64]) -> f64 {
    if weights.is_empty() {
        return 0.0;
    }
    weights.iter().sum::<f64>() / weights.len() as f64
}

/// Keeps the `capacity` highest-weight comparisons inserted so far; the
/// lowest is evicted first, ties evicting the larger (i, j) pair.
#[derive(Debug)]
pub struct BoundedTopK {
    capacity: usize,
    heap: BinaryHeap<HeapEntry>,
}

#[derive(Debug)]
struct HeapEntry(Comparison);

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Max-heap on "badness": the heap head is the entry to evict next,
        // i.e. the lowest weight, ties on the larger pair.
        emission_order(&self.0, &other.0)
    }
}

impl BoundedTopK {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1);
        Self { capacity, heap: BinaryHeap::new() }
    }

    pub fn push(&mut self, comparison: Comparison) {
        self.heap.push(HeapEntry(comparison));
        if self.heap.len() > self.capacity {
            self.heap.pop();
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Drains into a buffer that pops in emission order.
    pub fn into_comparison_list(self) -> ComparisonList {
        ComparisonList::from_unsorted(self.heap.into_iter().map(|e| e.0).collect())
    }
}

/// Enumerates a block's valid pairs in ascending (i, j) order.
fn block_pairs<'a>(block: &'a Block, ctx: &ModeCtx) -> Box<dyn Iterator<Item = (ProfileId, ProfileId)> + 'a> {
    match ctx.mode {
        ErMode::Dirty => Box::new(block.members.iter().enumerate().flat_map(move |(idx, &a)| {
            block.members[idx + 1..].iter().map(move |&b| (a, b))
        })),
        ErMode::CleanClean => {
            let split = block.source_split(ctx.source_boundary);
            let (left, right) = block.members.split_at(split);
            Box::new(left.iter().flat_map(move |&a| right.iter().map(move |&b| (a, b))))
        }
    }
}

/// Progressive block scheduling: processes blocks in ascending cardinality;
/// inside each block, new comparisons (per LeCoBI) are weighted through the
/// blocking graph and emitted best first. No pair is emitted twice.
pub struct Pbs<W: EdgeWeighting = Arcs> {
    blocks: Vec<Block>,
    cardinalities: Vec<u64>,
    profile_index: ProfileIndex,
    ctx: ModeCtx,
    scheme: W,
    next_block: usize,
    buffer: ComparisonList,
}

impl Pbs<Arcs> {
    pub fn new(collection: &ProfileCollection, params: &WorkflowParams) -> Result<Self, EmitError> {
        Self::with_scheme(collection, params, Arcs)
    }
}

impl<W: EdgeWeighting> Pbs<W> {
    pub fn with_scheme(
        collection: &ProfileCollection,
        params: &WorkflowParams,
        scheme: W,
    ) -> Result<Self, EmitError> {
        let blocks = block_scheduling(token_blocking_workflow(collection, params));
        if blocks.is_empty() {
            return Err(EmitError::EmptyBlocks);
        }
        let profile_index = build_profile_index(&blocks, collection.len());
        let cardinalities = blocks.blocks.iter().map(|b| b.cardinality).collect();
        let mut pbs = Self {
            blocks: blocks.blocks,
            cardinalities,
            profile_index,
            ctx: ModeCtx::of(collection),
            scheme,
            next_block: 0,
            buffer: ComparisonList::default(),
        };
        pbs.process_next_block();
        Ok(pbs)
    }

    /// Pair weight: sum of the scheme's increments over all common blocks.
    fn edge_weight(&self, i: ProfileId, j: ProfileId) -> f64 {
        let (bi, bj) = (self.profile_index.blocks_of(i), self.profile_index.blocks_of(j));
        let (mut a, mut b) = (0, 0);
        let mut weight = 0.0;
        while a < bi.len() && b < bj.len() {
            match bi[a].cmp(&bj[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    weight += self.scheme.block_term(self.cardinalities[bi[a] as usize]);
                    a += 1;
                    b += 1;
                }
            }
        }
        weight
    }

    fn process_next_block(&mut self) {
        let k = self.next_block as u32;
        let Some(block) = self.blocks.get(self.next_block) else {
            return;
        };
        self.next_block += 1;
        let mut items = Vec::new();
        for (i, j) in block_pairs(block, &self.ctx) {
            let new = lecobi(k, self.profile_index.blocks_of(i), self.profile_index.blocks_of(j))
                .expect("block members co-occur in this block");
            if new {
                let weight = self.edge_weight(i, j);
                items.push(self.ctx.comparison(i, j, weight));
            }
        }
        self.buffer = ComparisonList::from_unsorted(items);
    }
}

impl<W: EdgeWeighting + Send> ProgressiveEmitter for Pbs<W> {
    fn next_comparison(&mut self) -> Option<Comparison> {
        loop {
            if let Some(comparison) = self.buffer.pop_best() {
                return Some(comparison);
            }
            if self.next_block >= self.blocks.len() {
                return None;
            }
            self.process_next_block();
        }
    }
}

/// Progressive profile scheduling: orders profiles by duplication likelihood
/// and, per profile, releases its top-K remaining comparisons. The
/// initialization phase emits each node's single best comparison first.
pub struct Pps<W: EdgeWeighting = Arcs> {
    blocks: Vec<Block>,
    profile_index: ProfileIndex,
    ctx: ModeCtx,
    scheme: W,
    k_max: usize,
    buffer: ComparisonList,
    /// Profiles in descending duplication likelihood, ties by ascending id.
    schedule: VecDeque<ProfileId>,
    /// Profiles already processed in the emission phase. Kept across calls:
    /// their best comparisons are already out, so revisiting them from a
    /// later profile could only re-emit pairs.
    checked: HashSet<ProfileId>,
    /// Canonical pairs emitted by the initialization buffer; the emission
    /// phase skips them to preserve the no-repeat guarantee.
    init_emitted: HashSet<(ProfileId, ProfileId)>,
    // Scratch for the per-profile neighborhood sweeps.
    weight_scratch: Vec<f64>,
    touched: Vec<ProfileId>,
}

impl Pps<Arcs> {
    pub fn new(
        collection: &ProfileCollection,
        params: &WorkflowParams,
        k_max: usize,
    ) -> Result<Self, EmitError> {
        Self::with_scheme(collection, params, k_max, Arcs)
    }
}

impl<W: EdgeWeighting> Pps<W> {
    pub fn with_scheme(
        collection: &ProfileCollection,
        params: &WorkflowParams,
        k_max: usize,
        scheme: W,
    ) -> Result<Self, EmitError> {
        let blocks = block_scheduling(token_blocking_workflow(collection, params));
        if blocks.is_empty() {
            return Err(EmitError::EmptyBlocks);
        }
        let profile_index = build_profile_index(&blocks, collection.len());
        let mut pps = Self {
            blocks: blocks.blocks,
            profile_index,
            ctx: ModeCtx::of(collection),
            scheme,
            k_max,
            buffer: ComparisonList::default(),
            schedule: VecDeque::new(),
            checked: HashSet::new(),
            init_emitted: HashSet::new(),
            weight_scratch: vec![0.0; collection.len()],
            touched: Vec::new(),
        };
        pps.initialize();
        Ok(pps)
    }

    /// Accumulates the neighborhood of `center`: per-block increments summed
    /// into per-neighbor weights, returned in ascending neighbor id order.
    fn neighborhood(&mut self, center: ProfileId, skip_checked: bool) -> Vec<(ProfileId, f64)> {
        for &block_id in self.profile_index.blocks_of(center) {
            let block = &self.blocks[block_id as usize];
            let term = self.scheme.block_term(block.cardinality);
            for &neighbor in &block.members {
                if neighbor == center || !self.ctx.valid_pair(center, neighbor) {
                    continue;
                }
                if skip_checked && self.checked.contains(&neighbor) {
                    continue;
                }
                if self.weight_scratch[neighbor as usize] == 0.0 {
                    self.touched.push(neighbor);
                }
                self.weight_scratch[neighbor as usize] += term;
            }
        }
        self.touched.sort_unstable();
        let mut out = Vec::with_capacity(self.touched.len());
        for &neighbor in &self.touched {
            out.push((neighbor, self.weight_scratch[neighbor as usize]));
            self.weight_scratch[neighbor as usize] = 0.0;
        }
        self.touched.clear();
        out
    }

    /// Builds the Sorted Profile List and the initialization buffer holding
    /// each node's top-weighted comparison (deduplicated as a pair set).
    fn initialize(&mut self) {
        let mut likelihoods: Vec<(ProfileId, f64)> = Vec::with_capacity(self.ctx.profile_count);
        let mut top_pairs: HashSet<(ProfileId, ProfileId)> = HashSet::new();
        let mut top_comparisons: Vec<Comparison> = Vec::new();
        for center in 0..self.ctx.profile_count as ProfileId {
            let neighbors = self.neighborhood(center, false);
            likelihoods.push((
                center,
                duplication_likelihood(&neighbors.iter().map(|&(_, w)| w).collect::<Vec<_>>()),
            ));
            // Ascending neighbor order plus a strict comparison keeps the
            // smallest pair among equal-weight tops.
            let mut top: Option<(ProfileId, f64)> = None;
            for &(neighbor, weight) in &neighbors {
                if top.is_none_or(|(_, best)| best < weight) {
                    top = Some((neighbor, weight));
                }
            }
            if let Some((neighbor, weight)) = top {
                let comparison = self.ctx.comparison(center, neighbor, weight);
                if top_pairs.insert(comparison.pair()) {
                    top_comparisons.push(comparison);
                }
            }
        }
        likelihoods.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        self.schedule = likelihoods.into_iter().map(|(id, _)| id).collect();
        self.init_emitted = top_pairs;
        self.buffer = ComparisonList::from_unsorted(top_comparisons);
    }

    /// The Sorted Profile List order, exposed for inspection.
    pub fn schedule(&self) -> impl Iterator<Item = ProfileId> + '_ {
        self.schedule.iter().copied()
    }

    /// How many comparisons the initialization phase buffered (each node's
    /// top comparison, deduplicated).
    pub fn initialization_len(&self) -> usize {
        self.init_emitted.len()
    }
}

impl<W: EdgeWeighting + Send> ProgressiveEmitter for Pps<W> {
    fn next_comparison(&mut self) -> Option<Comparison> {
        loop {
            if let Some(comparison) = self.buffer.pop_best() {
                return Some(comparison);
            }
            let center = self.schedule.pop_front()?;
            self.checked.insert(center);
            let mut top_k = BoundedTopK::new(self.k_max);
            let neighbors = self.neighborhood(center, true);
            for (neighbor, weight) in neighbors {
                let comparison = self.ctx.comparison(center, neighbor, weight);
                if self.init_emitted.contains(&comparison.pair()) {
                    continue;
                }
                top_k.push(comparison);
            }
            self.buffer = top_k.into_comparison_list();
        }
    }
}
