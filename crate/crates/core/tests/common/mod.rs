//! Shared helpers for the integration suites.

use per_core::model::{ErMode, GroundTruth, Profile, ProfileCollection};
use per_core::synth::{generate, SynthParams};

/// Builds a collection from (source, value) rows; ids follow row order.
pub fn collection_from_values(mode: ErMode, rows: &[(u8, &str)]) -> ProfileCollection {
    let profiles = rows
        .iter()
        .enumerate()
        .map(|(id, (source, value))| {
            Profile::new(id as u32, *source, vec![("value".into(), (*value).into())])
        })
        .collect();
    ProfileCollection::new(mode, profiles).expect("valid test collection")
}

/// The four-profile dirty fixture.
pub fn dirty_fixture() -> ProfileCollection {
    collection_from_values(
        ErMode::Dirty,
        &[(0, "john smith"), (0, "john smith"), (0, "mary jones"), (0, "mary smith")],
    )
}

pub fn fixture_ground_truth(collection: &ProfileCollection) -> GroundTruth {
    GroundTruth::from_pairs([(0, 1), (2, 3)], collection).unwrap()
}

/// One seeded corpus instance with at most `max_n` profiles, alternating
/// between dirty and clean-clean mode.
pub fn corpus_instance(seed: u64, max_n: usize) -> (ProfileCollection, GroundTruth) {
    let span = (max_n - 10) as u64;
    let n = 10 + ((seed * 37) % (span + 1)) as usize;
    let dup_rate = 0.2 + 0.1 * (seed % 3) as f64;
    let noise = 0.15 * (seed % 4) as f64;
    let dataset = generate(&SynthParams { n, dup_rate, noise, seed }).expect("valid corpus params");
    if seed.is_multiple_of(2) { dataset.dirty() } else { dataset.clean_clean() }
}
