//! Deterministic synthetic datasets with planted duplicates, used by the
//! `synth` CLI command and by the randomized test corpora. Profiles draw
//! distinct tokens from a shared vocabulary; a duplicate copies a profile and
//! replaces a `noise` fraction of its tokens with globally unique junk
//! tokens, so the token-set arithmetic of each pair is exact.

use std::io::Write;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{ErMode, GroundTruth, Profile, ProfileCollection, ProfileId};

#[derive(Debug, Clone, Copy)]
pub struct SynthParams {
    /// Total number of profiles, duplicates included.
    pub n: usize,
    /// Fraction of `n` that are planted duplicate pairs.
    pub dup_rate: f64,
    /// Fraction of a duplicate's tokens replaced with junk.
    pub noise: f64,
    pub seed: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("n must be at least 2")]
    TooFewProfiles,
    #[error("dup_rate must be in (0, 1)")]
    BadDupRate,
    #[error("noise must be in [0, 1)")]
    BadNoise,
    #[error("dup_rate plants more duplicates than there are distinct originals to copy")]
    TooManyDuplicates,
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    /// Attribute rows in id order; all rows share the same two columns.
    rows: Vec<[String; 2]>,
    /// (original, copy) id pairs; copies occupy the trailing ids.
    pairs: Vec<(ProfileId, ProfileId)>,
    base_count: usize,
}

pub const SYNTH_COLUMNS: [&str; 2] = ["name", "info"];

impl SynthDataset {
    pub fn base_count(&self) -> usize {
        self.base_count
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn pairs(&self) -> &[(ProfileId, ProfileId)] {
        &self.pairs
    }

    fn profiles(&self, boundary: usize) -> Vec<Profile> {
        self.rows
            .iter()
            .enumerate()
            .map(|(id, row)| {
                let attributes = SYNTH_COLUMNS
                    .iter()
                    .zip(row.iter())
                    .map(|(name, value)| (name.to_string(), value.clone()))
                    .collect();
                Profile::new(id as ProfileId, u8::from(id >= boundary), attributes)
            })
            .collect()
    }

    /// The dataset as a dirty collection with its ground truth.
    pub fn dirty(&self) -> (ProfileCollection, GroundTruth) {
        let collection = ProfileCollection::new(ErMode::Dirty, self.profiles(self.rows.len()))
            .expect("generated profiles are dense");
        let gt = GroundTruth::from_pairs(self.pairs.iter().copied(), &collection)
            .expect("generated pairs are valid");
        (collection, gt)
    }

    /// The dataset as a clean-clean collection: originals form source 0 and
    /// copies form source 1, both duplicate-free by construction.
    pub fn clean_clean(&self) -> (ProfileCollection, GroundTruth) {
        let collection = ProfileCollection::new(ErMode::CleanClean, self.profiles(self.base_count))
            .expect("generated profiles are dense and split by source");
        let gt = GroundTruth::from_pairs(self.pairs.iter().copied(), &collection)
            .expect("generated pairs cross the sources");
        (collection, gt)
    }

    /// Profile CSV with the fixed two-column header.
    pub fn write_profiles_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(SYNTH_COLUMNS)?;
        for row in &self.rows {
            out.write_record(row)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Ground-truth CSV of row-index pairs, no header.
    pub fn write_gt_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        for (a, b) in &self.pairs {
            out.write_record([a.to_string(), b.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Generates a dataset fully determined by the seed.
pub fn generate(params: &SynthParams) -> Result<SynthDataset, SynthError> {
    if params.n < 2 {
        return Err(SynthError::TooFewProfiles);
    }
    if !(params.dup_rate > 0.0 && params.dup_rate < 1.0) {
        return Err(SynthError::BadDupRate);
    }
    if !(0.0..1.0).contains(&params.noise) {
        return Err(SynthError::BadNoise);
    }
    let duplicates = ((params.dup_rate * params.n as f64).round() as usize).max(1);
    let base_count = params.n - duplicates;
    if duplicates > base_count {
        return Err(SynthError::TooManyDuplicates);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let vocabulary_size = params.n.max(16);

    let bases: Vec<Vec<String>> = (0..base_count)
        .map(|_| {
            let token_count = rng.random_range(4..=8);
            sample(&mut rng, vocabulary_size, token_count)
                .into_iter()
                .map(|idx| format!("tok{idx}"))
                .collect()
        })
        .collect();

    let mut copied_from = sample(&mut rng, base_count, duplicates).into_vec();
    copied_from.sort_unstable();

    let mut junk_counter = 0usize;
    let mut rows: Vec<[String; 2]> = bases.iter().map(|tokens| tokens_to_row(tokens)).collect();
    let mut pairs = Vec::with_capacity(duplicates);
    for (offset, &base_idx) in copied_from.iter().enumerate() {
        let mut tokens = bases[base_idx].clone();
        let replaced = (params.noise * tokens.len() as f64).floor() as usize;
        if replaced > 0 {
            for position in sample(&mut rng, tokens.len(), replaced) {
                tokens[position] = format!("nz{junk_counter}");
                junk_counter += 1;
            }
        }
        rows.push(tokens_to_row(&tokens));
        pairs.push((base_idx as ProfileId, (base_count + offset) as ProfileId));
    }

    Ok(SynthDataset { rows, pairs, base_count })
}

fn tokens_to_row(tokens: &[String]) -> [String; 2] {
    let split = tokens.len().div_ceil(2);
    [tokens[..split].join(" "), tokens[split..].join(" ")]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocking::tokenize;

    fn params(n: usize, dup_rate: f64, noise: f64, seed: u64) -> SynthParams {
        SynthParams { n, dup_rate, noise, seed }
    }

    #[test]
    fn noise_free_copies_are_exact() {
        let dataset = generate(&params(100, 0.2, 0.0, 7)).unwrap();
        assert_eq!(dataset.len(), 100);
        assert_eq!(dataset.pairs().len(), 20);
        let (collection, gt) = dataset.dirty();
        assert_eq!(gt.size(), 20);
        for (a, b) in dataset.pairs() {
            assert_eq!(tokenize(collection.profile(*a)), tokenize(collection.profile(*b)));
        }
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let render = |seed| {
            let dataset = generate(&params(60, 0.25, 0.4, seed)).unwrap();
            let mut profiles = Vec::new();
            let mut gt = Vec::new();
            dataset.write_profiles_csv(&mut profiles).unwrap();
            dataset.write_gt_csv(&mut gt).unwrap();
            (profiles, gt)
        };
        assert_eq!(render(11), render(11));
        assert_ne!(render(11), render(12));
    }

    #[test]
    fn half_noise_keeps_jaccard_above_a_third() {
        let dataset = generate(&params(120, 0.3, 0.5, 3)).unwrap();
        let (collection, _) = dataset.dirty();
        for (a, b) in dataset.pairs() {
            let (ta, tb) = (tokenize(collection.profile(*a)), tokenize(collection.profile(*b)));
            let common = ta.iter().filter(|t| tb.contains(t)).count();
            let union = ta.len() + tb.len() - common;
            let jaccard = common as f64 / union as f64;
            assert!(jaccard >= 1.0 / 3.0 - 1e-12, "pair ({a}, {b}) jaccard {jaccard}");
        }
    }

    #[test]
    fn parameter_validation() {
        assert_eq!(generate(&params(1, 0.2, 0.0, 0)).unwrap_err(), SynthError::TooFewProfiles);
        assert_eq!(generate(&params(10, 0.0, 0.0, 0)).unwrap_err(), SynthError::BadDupRate);
        assert_eq!(generate(&params(10, 1.0, 0.0, 0)).unwrap_err(), SynthError::BadDupRate);
        assert_eq!(generate(&params(10, 0.2, 1.0, 0)).unwrap_err(), SynthError::BadNoise);
        assert_eq!(generate(&params(10, 0.9, 0.0, 0)).unwrap_err(), SynthError::TooManyDuplicates);
    }

    #[test]
    fn clean_clean_split_is_valid() {
        let dataset = generate(&params(50, 0.3, 0.2, 5)).unwrap();
        let (collection, gt) = dataset.clean_clean();
        let (count0, count1) = collection.source_counts();
        assert_eq!(count0, dataset.base_count());
        assert_eq!(count1, dataset.pairs().len());
        // Each side is duplicate-free, so the match count cannot exceed the
        // smaller side.
        assert!(gt.size() <= count0.min(count1));
        for (i, j) in gt.iter() {
            assert_eq!(collection.source_of(i), 0);
            assert_eq!(collection.source_of(j), 1);
        }
    }
}
