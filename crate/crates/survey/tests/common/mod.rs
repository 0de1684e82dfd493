#![allow(dead_code)]

use pairpref_survey::{Choice, GroupSpec, ItemSpec, NextQuestion, SurveySpec, SurveyStore, VoteRequest};

/// Vote tallies from the five-image worked example; every pair has 54 votes.
pub const FIVE_IMAGE: [[u64; 5]; 5] =
    [[0, 21, 29, 16, 22], [33, 0, 36, 19, 32], [25, 18, 0, 15, 28], [38, 35, 39, 0, 34], [32, 22, 26, 20, 0]];
pub const FIVE_IMAGE_RATIOS: [f64; 5] = [0.831, 1.358, 0.806, 2.051, 1.000];

pub fn spec(id: &str, sizes: &[usize]) -> SurveySpec {
    SurveySpec {
        id: id.into(),
        seed: Some(11),
        groups: sizes
            .iter()
            .enumerate()
            .map(|(g, &n)| GroupSpec {
                id: format!("g{g}"),
                items: (0..n)
                    .map(|i| ItemSpec {
                        id: format!("i{i}"),
                        label: format!("Item {i}"),
                        media: format!("https://example.org/{g}/{i}.jpg"),
                    })
                    .collect(),
            })
            .collect(),
    }
}

pub fn item_index(id: &str) -> usize {
    id.trim_start_matches('i').parse().unwrap()
}

/// Answers every question served to `participant`, returning the served
/// (group, left, right) sequence.
pub fn answer_all(
    store: &SurveyStore,
    survey: &str,
    participant: &str,
    mut choose: impl FnMut(&str, &str, &str) -> Choice,
) -> Vec<(String, String, String)> {
    let mut served = Vec::new();
    loop {
        match store.next_question(survey, participant).unwrap() {
            NextQuestion::Complete { answered, total } => {
                assert_eq!(answered, total);
                return served;
            }
            NextQuestion::Question { group, left, right, .. } => {
                let choice = choose(&group, &left.id, &right.id);
                store
                    .record_vote(
                        survey,
                        VoteRequest {
                            survey: None,
                            participant: participant.into(),
                            group: group.clone(),
                            left: left.id.clone(),
                            right: right.id.clone(),
                            choice,
                        },
                    )
                    .unwrap();
                served.push((group, left.id, right.id));
            }
        }
    }
}

/// Participant `k` of 54 picks the lower-indexed item of (i, j), i < j, iff
/// `k < FIVE_IMAGE[i][j]`, so the group ends with exactly the five-image tallies.
pub fn five_image_voter(k: u64) -> impl FnMut(&str, &str, &str) -> Choice {
    move |_, l, r| {
        let (l, r) = (item_index(l), item_index(r));
        let lower_wins = k < FIVE_IMAGE[l.min(r)][l.max(r)];
        if lower_wins == (l < r) {
            Choice::Left
        } else {
            Choice::Right
        }
    }
}
