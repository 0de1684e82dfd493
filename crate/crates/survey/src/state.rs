//! In-memory survey state, rebuilt from the event log on startup.

use std::collections::{HashMap, HashSet};

use pairpref_core::bt::{check_connectivity, mm_fit, win_probs, Connectivity, FitConfig, VoteMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{ServiceError, ServiceResult};
use crate::model::{NextQuestion, QuestionItem, SurveySpec, VoteAck, VoteEvent, VoteRequest};
use crate::schedule::{lower_on_left, participant_schedule, PairKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResultStatus {
    Ok,
    InsufficientComparisons,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub iterations: usize,
    pub converged: bool,
    pub final_delta: f64,
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub message: String,
    /// Items that never beat any item in `upper`.
    pub lower: Vec<String>,
    pub upper: Vec<String>,
}

/// Vote tallies and the Bradley-Terry fit for one group. Strengths are
/// normalized so the last item has strength 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupResults {
    pub survey: String,
    pub group: String,
    pub items: Vec<String>,
    pub matrix: Vec<Vec<u64>>,
    pub total_votes: u64,
    pub status: ResultStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gammas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub win_probabilities: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<Diagnostic>,
}

#[derive(Debug)]
struct Participant {
    schedule: Vec<PairKey>,
    /// Everything before `cursor` in the schedule is answered.
    cursor: usize,
    answered: HashSet<PairKey>,
    served: HashSet<PairKey>,
    servings: u64,
}

#[derive(Debug)]
pub struct SurveyState {
    spec: SurveySpec,
    seed: u64,
    group_index: HashMap<String, usize>,
    item_index: Vec<HashMap<String, usize>>,
    matrices: Vec<VoteMatrix>,
    participants: HashMap<String, Participant>,
    /// Cached results; `None` marks the group stale.
    results: Vec<Option<GroupResults>>,
    events: u64,
}

impl SurveyState {
    pub fn new(spec: SurveySpec, seed: u64) -> ServiceResult<Self> {
        spec.validate()?;
        let group_index = spec.groups.iter().enumerate().map(|(i, g)| (g.id.clone(), i)).collect();
        let item_index = spec
            .groups
            .iter()
            .map(|g| g.items.iter().enumerate().map(|(i, it)| (it.id.clone(), i)).collect())
            .collect();
        let matrices =
            spec.groups.iter().map(|g| VoteMatrix::zeros(g.items.len())).collect::<Result<Vec<_>, _>>()?;
        let results = vec![None; spec.groups.len()];
        Ok(Self {
            spec,
            seed,
            group_index,
            item_index,
            matrices,
            participants: HashMap::new(),
            results,
            events: 0,
        })
    }

    /// Rebuilds state by applying every event in order.
    pub fn replay<'a>(
        spec: SurveySpec,
        seed: u64,
        events: impl IntoIterator<Item = &'a VoteEvent>,
    ) -> ServiceResult<Self> {
        let mut state = Self::new(spec, seed)?;
        for ev in events {
            state.apply(ev)?;
        }
        Ok(state)
    }

    pub fn spec(&self) -> &SurveySpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn event_count(&self) -> u64 {
        self.events
    }

    pub fn matrices(&self) -> &[VoteMatrix] {
        &self.matrices
    }

    pub fn group_matrix(&self, group: &str) -> ServiceResult<&VoteMatrix> {
        Ok(&self.matrices[self.group(group)?])
    }

    pub fn is_stale(&self, group: &str) -> ServiceResult<bool> {
        Ok(self.results[self.group(group)?].is_none())
    }

    fn group(&self, id: &str) -> ServiceResult<usize> {
        self.group_index
            .get(id)
            .copied()
            .ok_or_else(|| ServiceError::NotFound(format!("group {id} in survey {}", self.spec.id)))
    }

    fn item(&self, group: usize, id: &str) -> ServiceResult<usize> {
        self.item_index[group].get(id).copied().ok_or_else(|| {
            ServiceError::Validation(format!("item {id} is not in group {}", self.spec.groups[group].id))
        })
    }

    fn participant(&mut self, id: &str) -> &mut Participant {
        let (spec, seed) = (&self.spec, self.seed);
        self.participants.entry(id.to_string()).or_insert_with(|| Participant {
            schedule: participant_schedule(spec, seed, id),
            cursor: 0,
            answered: HashSet::new(),
            served: HashSet::new(),
            servings: 0,
        })
    }

    /// Next unanswered pair from this participant's schedule, with a fresh
    /// left/right placement.
    pub fn next_question(&mut self, participant: &str) -> ServiceResult<NextQuestion> {
        crate::model::validate_id("participant", participant)?;
        let total = self.spec.pairs_per_participant();
        let (seed, survey) = (self.seed, self.spec.id.clone());
        let p = self.participant(participant);
        while p.cursor < p.schedule.len() && p.answered.contains(&p.schedule[p.cursor]) {
            p.cursor += 1;
        }
        let answered = p.answered.len();
        let Some(&key) = p.schedule.get(p.cursor) else {
            return Ok(NextQuestion::Complete { answered, total });
        };
        p.served.insert(key);
        let serving = p.servings;
        p.servings += 1;
        let (l, r) = if lower_on_left(seed, &survey, participant, key, serving) {
            (key.lo, key.hi)
        } else {
            (key.hi, key.lo)
        };
        let group = &self.spec.groups[key.group];
        Ok(NextQuestion::Question {
            group: group.id.clone(),
            left: QuestionItem::from(&group.items[l]),
            right: QuestionItem::from(&group.items[r]),
            answered,
            total,
        })
    }

    fn resolve(
        &self,
        survey: &str,
        group: &str,
        left: &str,
        right: &str,
    ) -> ServiceResult<(usize, usize, usize)> {
        if survey != self.spec.id {
            return Err(ServiceError::Validation(format!(
                "vote names survey {survey} but was sent to {}",
                self.spec.id
            )));
        }
        let g = self.group(group).map_err(|e| ServiceError::Validation(e.to_string()))?;
        let (l, r) = (self.item(g, left)?, self.item(g, right)?);
        if l == r {
            return Err(ServiceError::Validation("left and right items must differ".into()));
        }
        Ok((g, l, r))
    }

    /// Checks a live vote: the pair must have been served to this participant
    /// and not answered yet.
    pub fn check_vote(&self, req: &VoteRequest) -> ServiceResult<()> {
        crate::model::validate_id("participant", &req.participant)?;
        let survey = req.survey.as_deref().unwrap_or(&self.spec.id);
        let (g, l, r) = self.resolve(survey, &req.group, &req.left, &req.right)?;
        let key = PairKey::new(g, l, r);
        let p = self.participants.get(&req.participant);
        if p.is_some_and(|p| p.answered.contains(&key)) {
            return Err(ServiceError::Conflict(format!(
                "participant {} already answered {}/{} vs {}",
                req.participant, req.group, req.left, req.right
            )));
        }
        if !p.is_some_and(|p| p.served.contains(&key)) {
            return Err(ServiceError::Validation(format!(
                "pair {}/{} vs {} was not served to participant {}",
                req.group, req.left, req.right, req.participant
            )));
        }
        Ok(())
    }

    /// Applies a recorded event: increments the tally, marks the pair
    /// answered and the group stale. Replay uses this directly.
    pub fn apply(&mut self, ev: &VoteEvent) -> ServiceResult<VoteAck> {
        let (g, l, r) = self.resolve(&ev.survey, &ev.group, &ev.left, &ev.right)?;
        let key = PairKey::new(g, l, r);
        let p = self.participant(&ev.participant);
        if !p.answered.insert(key) {
            return Err(ServiceError::Conflict(format!(
                "participant {} already answered {}/{} vs {}",
                ev.participant, ev.group, ev.left, ev.right
            )));
        }
        p.served.remove(&key);
        let (winner, loser) = if ev.winner() == ev.left { (l, r) } else { (r, l) };
        let m = &mut self.matrices[g];
        m.record(winner, loser)?;
        self.results[g] = None;
        self.events += 1;
        Ok(VoteAck {
            group: ev.group.clone(),
            left: ev.left.clone(),
            right: ev.right.clone(),
            left_wins: m.wins(l, r),
            right_wins: m.wins(r, l),
            group_votes: m.total_votes(),
        })
    }

    /// Results for one group, refitting only if votes arrived since the last
    /// fit.
    pub fn results(&mut self, group: &str) -> ServiceResult<GroupResults> {
        let g = self.group(group)?;
        if let Some(cached) = &self.results[g] {
            return Ok(cached.clone());
        }
        let computed = self.compute_results(g)?;
        self.results[g] = Some(computed.clone());
        Ok(computed)
    }

    fn compute_results(&self, g: usize) -> ServiceResult<GroupResults> {
        let spec = &self.spec.groups[g];
        let votes = &self.matrices[g];
        let names = |idx: Vec<usize>| idx.into_iter().map(|i| spec.items[i].id.clone()).collect();
        let mut out = GroupResults {
            survey: self.spec.id.clone(),
            group: spec.id.clone(),
            items: spec.items.iter().map(|i| i.id.clone()).collect(),
            matrix: votes.rows().map(<[u64]>::to_vec).collect(),
            total_votes: votes.total_votes(),
            status: ResultStatus::Ok,
            gammas: None,
            scores: None,
            win_probabilities: None,
            fit: None,
            diagnostic: None,
        };
        if let Connectivity::Disconnected { lower, upper } = check_connectivity(votes) {
            out.status = ResultStatus::InsufficientComparisons;
            let (lower, upper): (Vec<String>, Vec<String>) = (names(lower), names(upper));
            out.diagnostic = Some(Diagnostic {
                message: format!(
                    "insufficient comparisons: {} never beat {}; more votes are needed before scores exist",
                    lower.join(", "),
                    upper.join(", ")
                ),
                lower,
                upper,
            });
            return Ok(out);
        }
        let fit = mm_fit(votes, &FitConfig::default())?;
        out.win_probabilities = Some(win_probs(&fit.scores));
        out.gammas = Some(fit.scores.gamma().to_vec());
        out.scores = Some(fit.scores.scores().to_vec());
        out.fit = Some(FitSummary {
            iterations: fit.iterations,
            converged: fit.converged,
            final_delta: fit.final_delta,
            log_likelihood: fit.log_likelihood,
        });
        Ok(out)
    }
}
