//! Survey export archives: a tar file holding `spec.json`, the raw
//! `events.log`, and one `matrices/{group}.txt` per group in the vote-matrix
//! file format. Headers carry fixed metadata so equal surveys export to equal
//! bytes.

use std::io::Read;

use pairpref_core::bt::io::{format_vote_matrix, parse_vote_matrix};
use pairpref_core::bt::VoteMatrix;

use crate::error::{ServiceError, ServiceResult};
use crate::model::SurveySpec;
use crate::state::SurveyState;
use crate::store::{parse_log, LOG_FILE, SPEC_FILE};

fn matrix_path(group: &str) -> String {
    format!("matrices/{group}.txt")
}

pub fn write(spec: &SurveySpec, log: &[u8], matrices: &[VoteMatrix]) -> ServiceResult<Vec<u8>> {
    let mut builder = tar::Builder::new(Vec::new());
    let mut append = |path: &str, data: &[u8]| -> ServiceResult<()> {
        let mut header = tar::Header::new_ustar();
        header.set_path(path)?;
        header.set_size(data.len() as u64);
        header.set_mode(0o644);
        header.set_mtime(0);
        header.set_entry_type(tar::EntryType::Regular);
        header.set_cksum();
        builder.append(&header, data)?;
        Ok(())
    };
    append(SPEC_FILE, &serde_json::to_vec_pretty(spec)?)?;
    append(LOG_FILE, log)?;
    for (group, m) in spec.groups.iter().zip(matrices) {
        append(&matrix_path(&group.id), format_vote_matrix(m).as_bytes())?;
    }
    Ok(builder.into_inner()?)
}

/// The parsed contents of an export.
#[derive(Debug, Clone, PartialEq)]
pub struct Archive {
    pub spec: SurveySpec,
    pub log: Vec<u8>,
    /// Matrices in spec group order.
    pub matrices: Vec<VoteMatrix>,
}

impl Archive {
    pub fn read(bytes: &[u8]) -> ServiceResult<Self> {
        let mut spec = None;
        let mut log = None;
        let mut files = std::collections::HashMap::new();
        for entry in tar::Archive::new(bytes).entries()? {
            let mut entry = entry?;
            let path = entry.path()?.to_string_lossy().into_owned();
            let mut data = Vec::new();
            entry.read_to_end(&mut data)?;
            match path.as_str() {
                SPEC_FILE => spec = Some(serde_json::from_slice::<SurveySpec>(&data)?),
                LOG_FILE => log = Some(data),
                _ => {
                    files.insert(path, data);
                }
            }
        }
        let missing = |what: &str| ServiceError::Validation(format!("archive has no {what}"));
        let spec = spec.ok_or_else(|| missing(SPEC_FILE))?;
        spec.validate()?;
        let log = log.ok_or_else(|| missing(LOG_FILE))?;
        let matrices = spec
            .groups
            .iter()
            .map(|g| {
                let path = matrix_path(&g.id);
                let data = files.get(&path).ok_or_else(|| missing(&path))?;
                let text = std::str::from_utf8(data)
                    .map_err(|e| ServiceError::Validation(format!("{path} is not UTF-8: {e}")))?;
                let m =
                    parse_vote_matrix(text).map_err(|e| ServiceError::Validation(format!("{path}: {e}")))?;
                if m.len() != g.items.len() {
                    return Err(ServiceError::Validation(format!(
                        "{path} is {0}x{0} but group {1} has {2} items",
                        m.len(),
                        g.id,
                        g.items.len()
                    )));
                }
                Ok(m)
            })
            .collect::<ServiceResult<Vec<_>>>()?;
        Ok(Self { spec, log, matrices })
    }

    /// Matrices rebuilt by replaying the archived log from an empty survey.
    pub fn replay(&self) -> ServiceResult<Vec<VoteMatrix>> {
        let (events, complete) = parse_log(&self.log)?;
        if complete != self.log.len() {
            return Err(ServiceError::Validation("archived log ends with a partial line".into()));
        }
        let seed = self.spec.seed.unwrap_or_default();
        Ok(SurveyState::replay(self.spec.clone(), seed, &events)?.matrices().to_vec())
    }

    /// Fails unless the replayed log matches the archived matrices.
    pub fn verify(&self) -> ServiceResult<()> {
        let replayed = self.replay()?;
        for ((g, a), b) in self.spec.groups.iter().zip(&self.matrices).zip(&replayed) {
            if a != b {
                return Err(ServiceError::Validation(format!(
                    "matrix for group {} disagrees with the archived event log",
                    g.id
                )));
            }
        }
        Ok(())
    }
}
