//! Match functions applied to emitted pairs, and the ground-truth oracle the
//! benchmark uses for recall. Benchmark runs execute the configured match
//! function to charge realistic comparison time, while recall always comes
//! from the oracle.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use crate::blocking::tokenize;
use crate::model::{Comparison, GroundTruth, Profile};

/// Outcome of one match-function execution.
#[derive(Debug, Clone, Copy)]
pub struct MatchVerdict {
    pub is_match: bool,
    pub score: f64,
    pub elapsed: Duration,
}

/// Match function selected for a run. Thresholds make the verdict usable on
/// its own; without one, `is_match` stays false and only the score and the
/// elapsed time matter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Matcher {
    /// Token-set overlap; cheap. `is_match` when score >= threshold.
    Jaccard { threshold: Option<f64> },
    /// Damerau-Levenshtein distance between the profiles' token-sorted value
    /// strings; expensive. `is_match` when distance <= threshold.
    EditDistance { threshold: Option<f64> },
    /// Skips matching entirely; the oracle still drives recall.
    None,
}

impl Matcher {
    pub fn apply(&self, a: &Profile, b: &Profile) -> MatchVerdict {
        match self {
            Matcher::Jaccard { threshold } => jaccard_match(a, b, *threshold),
            Matcher::EditDistance { threshold } => edit_distance_match(a, b, *threshold),
            Matcher::None => MatchVerdict { is_match: false, score: 0.0, elapsed: Duration::ZERO },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Matcher::Jaccard { .. } => "jaccard",
            Matcher::EditDistance { .. } => "edit",
            Matcher::None => "none",
        }
    }
}

/// Jaccard similarity over the profiles' token sets; two empty token sets
/// score 0.
pub fn jaccard_match(a: &Profile, b: &Profile, threshold: Option<f64>) -> MatchVerdict {
    let started = Instant::now();
    let (ta, tb) = (tokenize(a), tokenize(b));
    let union = ta.len() + tb.len();
    let score = if union == 0 {
        0.0
    } else {
        // Both sides are sorted and deduplicated; merge-count the overlap.
        let (mut x, mut y, mut common) = (0, 0, 0usize);
        while x < ta.len() && y < tb.len() {
            match ta[x].cmp(&tb[y]) {
                std::cmp::Ordering::Less => x += 1,
                std::cmp::Ordering::Greater => y += 1,
                std::cmp::Ordering::Equal => {
                    common += 1;
                    x += 1;
                    y += 1;
                }
            }
        }
        common as f64 / (union - common) as f64
    };
    MatchVerdict {
        is_match: threshold.is_some_and(|t| score >= t),
        score,
        elapsed: started.elapsed(),
    }
}

/// Damerau-Levenshtein distance between the two profiles' match strings
/// (tokens sorted and space-joined, so attribute order never matters).
pub fn edit_distance_match(a: &Profile, b: &Profile, threshold: Option<f64>) -> MatchVerdict {
    let started = Instant::now();
    let distance = damerau_levenshtein(&profile_match_string(a), &profile_match_string(b)) as f64;
    MatchVerdict {
        is_match: threshold.is_some_and(|t| distance <= t),
        score: distance,
        elapsed: started.elapsed(),
    }
}

/// The string a profile contributes to edit-distance matching.
pub fn profile_match_string(profile: &Profile) -> String {
    tokenize(profile).join(" ")
}

/// Perfect matcher backed by the known ground truth; accepts either
/// orientation of the pair.
pub fn oracle_match(comparison: &Comparison, gt: &GroundTruth) -> bool {
    gt.contains_pair(comparison.i, comparison.j)
}

/// Unrestricted Damerau-Levenshtein distance (insertions, deletions,
/// substitutions, and transpositions of adjacent characters), which satisfies
/// the triangle inequality, unlike the restricted variant.
pub fn damerau_levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (n, m) = (a.len(), b.len());
    if n == 0 {
        return m;
    }
    if m == 0 {
        return n;
    }

    let max_distance = n + m;
    let mut last_row_of: HashMap<char, usize> = HashMap::new();
    // (n + 2) x (m + 2) matrix with a sentinel border.
    let width = m + 2;
    let mut d = vec![0usize; (n + 2) * width];
    let idx = |i: usize, j: usize| i * width + j;

    d[idx(0, 0)] = max_distance;
    for i in 0..=n {
        d[idx(i + 1, 0)] = max_distance;
        d[idx(i + 1, 1)] = i;
    }
    for j in 0..=m {
        d[idx(0, j + 1)] = max_distance;
        d[idx(1, j + 1)] = j;
    }

    for i in 1..=n {
        let mut last_match_column = 0;
        for j in 1..=m {
            let i1 = *last_row_of.get(&b[j - 1]).unwrap_or(&0);
            let j1 = last_match_column;
            let cost = if a[i - 1] == b[j - 1] {
                last_match_column = j;
                0
            } else {
                1
            };
            let substitute = d[idx(i, j)] + cost;
            let insert = d[idx(i + 1, j)] + 1;
            let delete = d[idx(i, j + 1)] + 1;
            let transpose = d[idx(i1, j1)] + (i - i1 - 1) + 1 + (j - j1 - 1);
            d[idx(i + 1, j + 1)] = substitute.min(insert).min(delete).min(transpose);
        }
        last_row_of.insert(a[i - 1], i);
    }
    d[idx(n + 1, m + 1)]
}
