//! Two-alternative forced-choice survey service.
//!
//! Participants are served every unordered pair of every group in a seeded,
//! participant-specific order and must pick one side. Votes go to an
//! append-only log before they are acknowledged; per-group vote matrices and
//! Bradley-Terry fits are derived from that log.

pub mod archive;
pub mod error;
pub mod http;
pub mod model;
pub mod schedule;
pub mod state;
pub mod store;

pub use error::{ServiceError, ServiceResult};
pub use http::{router, serve, ServiceConfig};
pub use model::{Choice, GroupSpec, ItemSpec, NextQuestion, SurveySpec, VoteAck, VoteEvent, VoteRequest};
pub use state::{GroupResults, ResultStatus, SurveyState};
pub use store::{Durability, SurveyStore};
