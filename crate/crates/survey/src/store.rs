//! On-disk survey store.
//!
//! Each survey lives in `{root}/surveys/{id}/` with `spec.json`, the
//! append-only `events.log`, and `snapshots/{group}.scores` written whenever a
//! group is refitted. The log is the source of truth; everything else is
//! rebuilt from it on open.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use chrono::Utc;
use pairpref_core::bt::io::format_scores;
use pairpref_core::bt::{ScoreVector, VoteMatrix};

use crate::archive::{self, Archive};
use crate::error::{ServiceError, ServiceResult};
use crate::model::{NextQuestion, SurveySpec, VoteAck, VoteEvent, VoteRequest};
use crate::state::{GroupResults, SurveyState};

pub const SPEC_FILE: &str = "spec.json";
pub const LOG_FILE: &str = "events.log";
const SNAPSHOT_DIR: &str = "snapshots";

/// How far an appended event is pushed before the vote is acknowledged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Durability {
    /// Written to the OS; survives a process crash.
    Flush,
    /// `fsync`ed; survives power loss.
    #[default]
    Sync,
}

struct Survey {
    dir: PathBuf,
    inner: Mutex<Inner>,
}

struct Inner {
    state: SurveyState,
    log: File,
    /// Length of the log up to its last complete event.
    log_len: u64,
}

impl Inner {
    fn append(&mut self, line: &[u8], durability: Durability) -> ServiceResult<()> {
        let written =
            self.log.write_all(line).and_then(|_| self.log.flush()).and_then(|_| match durability {
                Durability::Sync => self.log.sync_data(),
                Durability::Flush => Ok(()),
            });
        if let Err(e) = written {
            // Drop any partial line so the next append starts clean.
            let _ = self.log.set_len(self.log_len);
            return Err(e.into());
        }
        self.log_len += line.len() as u64;
        Ok(())
    }
}

impl Survey {
    fn lock(&self) -> MutexGuard<'_, Inner> {
        // A panic mid-request leaves the log and matrix consistent: the
        // matrix is only touched after a successful append.
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }
}

pub struct SurveyStore {
    root: PathBuf,
    default_seed: u64,
    durability: Durability,
    surveys: RwLock<HashMap<String, Arc<Survey>>>,
}

impl SurveyStore {
    /// Opens (or initializes) a data directory and replays every survey in it.
    pub fn open(root: impl Into<PathBuf>, default_seed: u64, durability: Durability) -> ServiceResult<Self> {
        let root = root.into();
        let surveys_dir = root.join("surveys");
        fs::create_dir_all(&surveys_dir)?;
        let mut surveys = HashMap::new();
        let mut entries: Vec<_> = fs::read_dir(&surveys_dir)?.collect::<Result<_, _>>()?;
        entries.sort_by_key(|e| e.file_name());
        for entry in entries {
            let dir = entry.path();
            if entry.file_name().to_string_lossy().starts_with('.') || !dir.join(SPEC_FILE).is_file() {
                continue;
            }
            let survey = load_survey(&dir)?;
            let id = survey.lock().state.spec().id.clone();
            surveys.insert(id, Arc::new(survey));
        }
        Ok(Self { root, default_seed, durability, surveys: RwLock::new(surveys) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn survey_ids(&self) -> Vec<String> {
        let mut ids: Vec<_> = self.read_map().keys().cloned().collect();
        ids.sort();
        ids
    }

    fn read_map(&self) -> std::sync::RwLockReadGuard<'_, HashMap<String, Arc<Survey>>> {
        self.surveys.read().unwrap_or_else(|e| e.into_inner())
    }

    fn get(&self, id: &str) -> ServiceResult<Arc<Survey>> {
        self.read_map().get(id).cloned().ok_or_else(|| ServiceError::NotFound(format!("survey {id}")))
    }

    /// Persists a new survey with an empty log. The effective seed is written
    /// into the stored spec so schedules survive a change of service default.
    pub fn create_survey(&self, mut spec: SurveySpec) -> ServiceResult<String> {
        spec.validate()?;
        spec.seed = Some(spec.seed.unwrap_or(self.default_seed));
        self.install(&spec, b"")
    }

    /// Recreates a survey from an exported archive. The log is replayed and
    /// checked against the archived matrices before anything is written.
    pub fn import_archive(&self, bytes: &[u8]) -> ServiceResult<String> {
        let mut archive = Archive::read(bytes)?;
        archive.verify()?;
        archive.spec.seed.get_or_insert(self.default_seed);
        self.install(&archive.spec, &archive.log)
    }

    fn install(&self, spec: &SurveySpec, log: &[u8]) -> ServiceResult<String> {
        let mut map = self.surveys.write().unwrap_or_else(|e| e.into_inner());
        if map.contains_key(&spec.id) {
            return Err(ServiceError::Conflict(format!("survey {} already exists", spec.id)));
        }
        let dir = self.root.join("surveys").join(&spec.id);
        if dir.exists() {
            return Err(ServiceError::Conflict(format!(
                "directory for survey {} already exists: {}",
                spec.id,
                dir.display()
            )));
        }
        let tmp = self.root.join("surveys").join(format!(".{}.tmp", spec.id));
        if tmp.exists() {
            fs::remove_dir_all(&tmp)?;
        }
        fs::create_dir_all(tmp.join(SNAPSHOT_DIR))?;
        write_synced(&tmp.join(SPEC_FILE), &serde_json::to_vec_pretty(spec)?)?;
        write_synced(&tmp.join(LOG_FILE), log)?;
        fs::rename(&tmp, &dir)?;
        let survey = load_survey(&dir)?;
        map.insert(spec.id.clone(), Arc::new(survey));
        Ok(spec.id.clone())
    }

    pub fn spec(&self, survey: &str) -> ServiceResult<SurveySpec> {
        Ok(self.get(survey)?.lock().state.spec().clone())
    }

    pub fn next_question(&self, survey: &str, participant: &str) -> ServiceResult<NextQuestion> {
        self.get(survey)?.lock().state.next_question(participant)
    }

    /// Validates, appends to the log, then updates the in-memory tallies.
    pub fn record_vote(&self, survey: &str, req: VoteRequest) -> ServiceResult<VoteAck> {
        let s = self.get(survey)?;
        let mut inner = s.lock();
        inner.state.check_vote(&req)?;
        let event = VoteEvent {
            survey: survey.to_string(),
            participant: req.participant,
            group: req.group,
            left: req.left,
            right: req.right,
            choice: req.choice,
            timestamp: Utc::now(),
        };
        inner.append(event.to_log_line().as_bytes(), self.durability)?;
        inner.state.apply(&event)
    }

    /// Current results for a group; a refit also refreshes its snapshot.
    pub fn group_results(&self, survey: &str, group: &str) -> ServiceResult<GroupResults> {
        let s = self.get(survey)?;
        let mut inner = s.lock();
        let stale = inner.state.is_stale(group)?;
        let results = inner.state.results(group)?;
        drop(inner);
        if stale {
            if let Some(g) = &results.gammas {
                let scores = ScoreVector::from_gammas(g.clone())?;
                let path = s.dir.join(SNAPSHOT_DIR).join(format!("{group}.scores"));
                fs::write(path, format_scores(&scores))?;
            }
        }
        Ok(results)
    }

    pub fn matrices(&self, survey: &str) -> ServiceResult<Vec<(String, VoteMatrix)>> {
        let s = self.get(survey)?;
        let inner = s.lock();
        let spec = inner.state.spec();
        Ok(spec.groups.iter().map(|g| g.id.clone()).zip(inner.state.matrices().iter().cloned()).collect())
    }

    /// The raw event log exactly as stored.
    pub fn event_log(&self, survey: &str) -> ServiceResult<Vec<u8>> {
        let s = self.get(survey)?;
        let _inner = s.lock();
        Ok(fs::read(s.dir.join(LOG_FILE))?)
    }

    /// Tar archive of `spec.json`, `events.log` and `matrices/{group}.txt`.
    pub fn export_survey(&self, survey: &str) -> ServiceResult<Vec<u8>> {
        let s = self.get(survey)?;
        let inner = s.lock();
        let log = fs::read(s.dir.join(LOG_FILE))?;
        let spec = inner.state.spec().clone();
        let matrices = inner.state.matrices().to_vec();
        drop(inner);
        archive::write(&spec, &log, &matrices)
    }
}

fn write_synced(path: &Path, bytes: &[u8]) -> ServiceResult<()> {
    let mut f = File::create(path)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    Ok(())
}

/// Parses a log, returning the events and the byte length of the complete
/// prefix. A final line without a newline is an interrupted append and is
/// dropped; any other malformed line is corruption.
pub fn parse_log(bytes: &[u8]) -> ServiceResult<(Vec<VoteEvent>, usize)> {
    let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let text = std::str::from_utf8(&bytes[..complete])
        .map_err(|e| ServiceError::Corrupt(format!("event log is not UTF-8: {e}")))?;
    let events = text
        .lines()
        .enumerate()
        .map(|(n, line)| {
            VoteEvent::from_log_line(line)
                .map_err(|e| ServiceError::Corrupt(format!("event log line {}: {e}", n + 1)))
        })
        .collect::<ServiceResult<Vec<_>>>()?;
    Ok((events, complete))
}

fn load_survey(dir: &Path) -> ServiceResult<Survey> {
    let spec: SurveySpec = serde_json::from_slice(&fs::read(dir.join(SPEC_FILE))?)?;
    let seed = spec
        .seed
        .ok_or_else(|| ServiceError::Corrupt(format!("{} has no seed", dir.join(SPEC_FILE).display())))?;
    let mut log = OpenOptions::new().read(true).append(true).open(dir.join(LOG_FILE))?;
    let mut bytes = Vec::new();
    log.read_to_end(&mut bytes)?;
    let (events, complete) = parse_log(&bytes)?;
    if complete < bytes.len() {
        log.set_len(complete as u64)?;
        log.sync_all()?;
    }
    let state = SurveyState::replay(spec, seed, &events)
        .map_err(|e| ServiceError::Corrupt(format!("replaying {}: {e}", dir.join(LOG_FILE).display())))?;
    fs::create_dir_all(dir.join(SNAPSHOT_DIR))?;
    Ok(Survey { dir: dir.to_path_buf(), inner: Mutex::new(Inner { state, log, log_len: complete as u64 }) })
}
