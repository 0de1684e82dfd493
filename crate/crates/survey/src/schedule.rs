//! Deterministic per-participant question order.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::model::SurveySpec;

/// An unordered pair of items (`lo < hi`) within group `group`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairKey {
    pub group: usize,
    pub lo: usize,
    pub hi: usize,
}

impl PairKey {
    pub fn new(group: usize, a: usize, b: usize) -> Self {
        Self { group, lo: a.min(b), hi: a.max(b) }
    }
}

/// SHA-256 over length-prefixed parts, truncated to 64 bits. Stable across
/// processes and platforms, unlike `std`'s hasher.
pub(crate) fn stable_hash(parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// All pairs of all groups, shuffled by a generator keyed on the survey seed,
/// survey id and participant id.
pub fn participant_schedule(spec: &SurveySpec, seed: u64, participant: &str) -> Vec<PairKey> {
    let mut pairs: Vec<PairKey> = spec
        .groups
        .iter()
        .enumerate()
        .flat_map(|(g, group)| {
            let n = group.items.len();
            (0..n).flat_map(move |i| (i + 1..n).map(move |j| PairKey::new(g, i, j)))
        })
        .collect();
    let key = stable_hash(&[b"schedule", &seed.to_le_bytes(), spec.id.as_bytes(), participant.as_bytes()]);
    pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(key));
    pairs
}

/// Whether the lower-indexed item is shown on the left for the `serving`-th
/// question served to this participant.
pub fn lower_on_left(seed: u64, survey: &str, participant: &str, pair: PairKey, serving: u64) -> bool {
    let key = stable_hash(&[
        b"placement",
        &seed.to_le_bytes(),
        survey.as_bytes(),
        participant.as_bytes(),
        &(pair.group as u64).to_le_bytes(),
        &(pair.lo as u64).to_le_bytes(),
        &(pair.hi as u64).to_le_bytes(),
        &serving.to_le_bytes(),
    ]);
    key & 1 == 0
}
