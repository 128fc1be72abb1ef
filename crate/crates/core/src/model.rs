//! Core domain types shared by every emission method: profiles, collections,
//! ground truth, and the comparison buffer all methods emit from.

use std::collections::HashSet;

use thiserror::Error;

/// Dense profile identifier, assigned in load order (source 0 first).
pub type ProfileId = u32;

/// Whether the input is a single collection with internal duplicates or two
/// duplicate-free collections that overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErMode {
    Dirty,
    CleanClean,
}

/// A uniquely identified set of attribute name/value pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub id: ProfileId,
    /// 0 or 1; always 0 in dirty mode.
    pub source: u8,
    /// Ordered name/value pairs; values are kept as raw strings.
    pub attributes: Vec<(String, String)>,
}

impl Profile {
    pub fn new(id: ProfileId, source: u8, attributes: Vec<(String, String)>) -> Self {
        Self { id, source, attributes }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("profile at position {position} has id {id}; ids must be dense and in load order")]
    NonDenseIds { position: usize, id: ProfileId },
    #[error("profile {id} has source {found}; sources must be 0 or 1, grouped source 0 first")]
    BadSourceLayout { id: ProfileId, found: u8 },
    #[error("dirty collections keep every profile in source 0 (profile {id} has source {found})")]
    DirtySource { id: ProfileId, found: u8 },
    #[error("clean-clean collections need at least one profile in each source")]
    EmptySource,
}

/// The profiles under resolution. Immutable once constructed; ids are dense
/// and source-0 profiles precede source-1 profiles, so the source of an id is
/// a single bound check.
#[derive(Debug, Clone)]
pub struct ProfileCollection {
    mode: ErMode,
    profiles: Vec<Profile>,
    source_counts: (usize, usize),
}

impl ProfileCollection {
    pub fn new(mode: ErMode, profiles: Vec<Profile>) -> Result<Self, ModelError> {
        let mut counts = (0usize, 0usize);
        for (position, profile) in profiles.iter().enumerate() {
            if profile.id as usize != position {
                return Err(ModelError::NonDenseIds { position, id: profile.id });
            }
            match (mode, profile.source) {
                (ErMode::Dirty, 0) => counts.0 += 1,
                (ErMode::Dirty, s) => {
                    return Err(ModelError::DirtySource { id: profile.id, found: s });
                }
                (ErMode::CleanClean, 0) if counts.1 == 0 => counts.0 += 1,
                (ErMode::CleanClean, 1) => counts.1 += 1,
                (ErMode::CleanClean, s) => {
                    return Err(ModelError::BadSourceLayout { id: profile.id, found: s });
                }
            }
        }
        if mode == ErMode::CleanClean && (counts.0 == 0 || counts.1 == 0) {
            return Err(ModelError::EmptySource);
        }
        Ok(Self { mode, profiles, source_counts: counts })
    }

    pub fn mode(&self) -> ErMode {
        self.mode
    }

    pub fn profiles(&self) -> &[Profile] {
        &self.profiles
    }

    pub fn profile(&self, id: ProfileId) -> &Profile {
        &self.profiles[id as usize]
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn source_counts(&self) -> (usize, usize) {
        self.source_counts
    }

    /// First source-1 id; every id below it belongs to source 0.
    pub fn source_boundary(&self) -> ProfileId {
        self.source_counts.0 as ProfileId
    }

    pub fn source_of(&self, id: ProfileId) -> u8 {
        u8::from(id >= self.source_boundary())
    }

    pub fn canonicalize(&self, i: ProfileId, j: ProfileId) -> Result<(ProfileId, ProfileId), PairError> {
        canonicalize(i, j, self.mode, self.source_boundary())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PairError {
    #[error("cannot compare profile {0} with itself")]
    SamePair(ProfileId),
    #[error("profiles {0} and {1} belong to the same source")]
    SameSource(ProfileId, ProfileId),
}

/// Canonical comparison ordering: ascending ids in dirty mode, (source-0 id,
/// source-1 id) in clean-clean mode. Idempotent.
pub fn canonicalize(
    i: ProfileId,
    j: ProfileId,
    mode: ErMode,
    source_boundary: ProfileId,
) -> Result<(ProfileId, ProfileId), PairError> {
    if i == j {
        return Err(PairError::SamePair(i));
    }
    match mode {
        ErMode::Dirty => Ok((i.min(j), i.max(j))),
        ErMode::CleanClean => {
            let (si, sj) = (i >= source_boundary, j >= source_boundary);
            if si == sj {
                return Err(PairError::SameSource(i, j));
            }
            Ok(if si { (j, i) } else { (i, j) })
        }
    }
}

/// Number of comparisons a block with the given per-source member counts
/// yields: all pairs in dirty mode, the cross product in clean-clean.
pub fn block_cardinality(source0_members: u64, source1_members: u64, mode: ErMode) -> u64 {
    match mode {
        ErMode::Dirty => {
            let n = source0_members + source1_members;
            n * n.saturating_sub(1) / 2
        }
        ErMode::CleanClean => source0_members * source1_members,
    }
}

#[derive(Debug, Error)]
pub enum GroundTruthError {
    #[error("ground-truth pair references unknown profile id {0}")]
    InvalidId(ProfileId),
    #[error(transparent)]
    Pair(#[from] PairError),
}

/// The known set of matching pairs, stored in canonical form.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    matches: HashSet<(ProfileId, ProfileId)>,
}

impl GroundTruth {
    /// Canonicalizes and deduplicates the given pairs, validating every id
    /// against the collection.
    pub fn from_pairs<I>(pairs: I, collection: &ProfileCollection) -> Result<Self, GroundTruthError>
    where
        I: IntoIterator<Item = (ProfileId, ProfileId)>,
    {
        let n = collection.len() as u64;
        let mut matches = HashSet::new();
        for (i, j) in pairs {
            if u64::from(i) >= n {
                return Err(GroundTruthError::InvalidId(i));
            }
            if u64::from(j) >= n {
                return Err(GroundTruthError::InvalidId(j));
            }
            matches.insert(collection.canonicalize(i, j)?);
        }
        Ok(Self { matches })
    }

    pub fn size(&self) -> usize {
        self.matches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }

    /// Membership test for a canonical pair.
    pub fn contains(&self, pair: (ProfileId, ProfileId)) -> bool {
        self.matches.contains(&pair)
    }

    /// Membership test that accepts either orientation of the pair.
    pub fn contains_pair(&self, i: ProfileId, j: ProfileId) -> bool {
        self.matches.contains(&(i, j)) || self.matches.contains(&(j, i))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ProfileId, ProfileId)> + '_ {
        self.matches.iter().copied()
    }
}

/// A candidate pair with its estimated matching likelihood. Pairs are always
/// canonical per [`canonicalize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub i: ProfileId,
    pub j: ProfileId,
    pub weight: f64,
}

impl Comparison {
    pub fn new(i: ProfileId, j: ProfileId, weight: f64) -> Self {
        debug_assert!(i != j, "comparison of a profile with itself");
        debug_assert!(weight.is_finite() && weight >= 0.0);
        Self { i, j, weight }
    }

    pub fn pair(&self) -> (ProfileId, ProfileId) {
        (self.i, self.j)
    }
}

/// Emission order: descending weight, ties by ascending (i, j).
pub fn emission_order(a: &Comparison, b: &Comparison) -> std::cmp::Ordering {
    b.weight
        .total_cmp(&a.weight)
        .then_with(|| (a.i, a.j).cmp(&(b.i, b.j)))
}

/// Buffer of comparisons that pops in emission order.
#[derive(Debug, Default)]
pub struct ComparisonList {
    // Kept in reverse emission order so the next best pops from the back.
    items: Vec<Comparison>,
}

impl ComparisonList {
    pub fn from_unsorted(mut items: Vec<Comparison>) -> Self {
        items.sort_unstable_by(|a, b| emission_order(b, a));
        Self { items }
    }

    pub fn pop_best(&mut self) -> Option<Comparison> {
        self.items.pop()
    }

    pub fn peek_best(&self) -> Option<&Comparison> {
        self.items.last()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}
