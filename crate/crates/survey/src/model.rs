use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{ServiceError, ServiceResult};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemSpec {
    pub id: String,
    #[serde(default)]
    pub label: String,
    /// Opaque media reference (typically a URL); never fetched by the service.
    #[serde(default)]
    pub media: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub id: String,
    pub items: Vec<ItemSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveySpec {
    pub id: String,
    /// Schedule seed; the service default applies when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub groups: Vec<GroupSpec>,
}

/// Identifiers end up in file paths and tab-separated log lines.
pub(crate) fn validate_id(kind: &str, id: &str) -> ServiceResult<()> {
    let ok = !id.is_empty()
        && id.len() <= 128
        && id != "."
        && id != ".."
        && id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.:@".contains(c));
    if ok {
        Ok(())
    } else {
        Err(ServiceError::Validation(format!(
            "invalid {kind} id {id:?}: use 1-128 characters from [A-Za-z0-9-_.:@]"
        )))
    }
}

impl SurveySpec {
    pub fn validate(&self) -> ServiceResult<()> {
        validate_id("survey", &self.id)?;
        if self.groups.is_empty() {
            return Err(ServiceError::Validation("survey has no groups".into()));
        }
        let mut group_ids = HashSet::new();
        for g in &self.groups {
            validate_id("group", &g.id)?;
            if !group_ids.insert(&g.id) {
                return Err(ServiceError::Validation(format!("duplicate group id {}", g.id)));
            }
            if g.items.len() < 2 {
                return Err(ServiceError::Validation(format!(
                    "group {} needs at least 2 items, has {}",
                    g.id,
                    g.items.len()
                )));
            }
            let mut item_ids = HashSet::new();
            for item in &g.items {
                validate_id("item", &item.id)?;
                if !item_ids.insert(&item.id) {
                    return Err(ServiceError::Validation(format!(
                        "duplicate item id {} in group {}",
                        item.id, g.id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Questions each participant answers: the number of unordered pairs
    /// summed over groups.
    pub fn pairs_per_participant(&self) -> usize {
        self.groups.iter().map(|g| g.items.len() * (g.items.len() - 1) / 2).sum()
    }
}

/// Which of the two presented items was chosen. There is no third option.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Left,
    Right,
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Choice::Left => "left",
            Choice::Right => "right",
        })
    }
}

impl FromStr for Choice {
    type Err = ServiceError;

    fn from_str(s: &str) -> ServiceResult<Self> {
        match s {
            "left" => Ok(Choice::Left),
            "right" => Ok(Choice::Right),
            other => Err(ServiceError::Validation(format!("choice must be left or right, got {other:?}"))),
        }
    }
}

/// A vote as submitted by a client; the server stamps the time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub survey: Option<String>,
    pub participant: String,
    pub group: String,
    pub left: String,
    pub right: String,
    pub choice: Choice,
}

/// One recorded forced-choice answer, as stored in the event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteEvent {
    pub survey: String,
    pub participant: String,
    pub group: String,
    pub left: String,
    pub right: String,
    pub choice: Choice,
    pub timestamp: DateTime<Utc>,
}

impl VoteEvent {
    pub fn winner(&self) -> &str {
        match self.choice {
            Choice::Left => &self.left,
            Choice::Right => &self.right,
        }
    }

    pub fn loser(&self) -> &str {
        match self.choice {
            Choice::Left => &self.right,
            Choice::Right => &self.left,
        }
    }

    /// Tab-separated fields in declaration order, newline-terminated.
    pub fn to_log_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            self.survey,
            self.participant,
            self.group,
            self.left,
            self.right,
            self.choice,
            self.timestamp.to_rfc3339_opts(SecondsFormat::Micros, true)
        )
    }

    pub fn from_log_line(line: &str) -> ServiceResult<Self> {
        let fields: Vec<&str> = line.trim_end_matches(['\n', '\r']).split('\t').collect();
        if fields.len() != 7 {
            return Err(ServiceError::Corrupt(format!(
                "expected 7 tab-separated fields, found {}",
                fields.len()
            )));
        }
        let timestamp = DateTime::parse_from_rfc3339(fields[6])
            .map_err(|e| ServiceError::Corrupt(format!("bad timestamp {:?}: {e}", fields[6])))?
            .with_timezone(&Utc);
        Ok(Self {
            survey: fields[0].to_string(),
            participant: fields[1].to_string(),
            group: fields[2].to_string(),
            left: fields[3].to_string(),
            right: fields[4].to_string(),
            choice: fields[5].parse().map_err(|e: ServiceError| ServiceError::Corrupt(e.to_string()))?,
            timestamp,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionItem {
    pub id: String,
    pub label: String,
    pub media: String,
}

impl From<&ItemSpec> for QuestionItem {
    fn from(item: &ItemSpec) -> Self {
        Self { id: item.id.clone(), label: item.label.clone(), media: item.media.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum NextQuestion {
    Question { group: String, left: QuestionItem, right: QuestionItem, answered: usize, total: usize },
    Complete { answered: usize, total: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteAck {
    pub group: String,
    pub left: String,
    pub right: String,
    /// Votes for `left` over `right` and the reverse, after this vote.
    pub left_wins: u64,
    pub right_wins: u64,
    pub group_votes: u64,
}
