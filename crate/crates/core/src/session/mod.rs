//! Per-learner session state machine: pauses, explanations, visuals,
//! quizzes, breaks and examples, with an ordered event stream for the UI.

mod clock;
mod engine;
mod lecture;
mod log;
mod model;

pub use clock::{Clock, ManualClock, ScaledClock};
pub use engine::*;
pub use lecture::Lecture;
pub use log::{read_records, read_sessions, summary_path, SessionLog, SessionMeta};
pub use model::*;
