//! Assessment engine for two-axis assistive interfaces.
//!
//! Two tasks are administered and scored online:
//!
//! * **command following**: the user matches a sequence of target
//!   direction/magnitude prompts ([`schedule`], [`command`]);
//! * **trajectory following**: the user drives a simulated wheelchair
//!   around square and curved courses ([`sim`], [`course`], [`trajectory`]).
//!
//! [`operator`] provides synthetic users for tests and demos, and [`trial`]
//! ties a recorded trial back to the batch scorers.

// `!(x > 0.0)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod command;
pub mod course;
pub mod covariate;
pub mod error;
pub mod geom;
pub mod model;
pub mod operator;
pub mod rawlog;
pub mod schedule;
pub mod sim;
pub mod trajectory;
pub mod trial;

pub use command::{aggregate, batch_score, score_prompt, CommandScore, StreamingScorer};
pub use course::{
    build_curved_course, build_square_course, footprint_in_bounds, locate_segment, visible_window, CourseSpec,
};
pub use error::{ConfigError, ScoreError};
pub use model::{
    command_difference, normalize_input, CommandVector, Measure, OutcomeReport, Pose, PromptEvent, PromptSpec, Task,
    Tolerance, TrajectorySample, TrialConfig,
};
pub use schedule::{build_schedule, estimate_session_length, PromptWindow, Schedule};
pub use sim::{run_trace, step, SimParams, VehicleConfig};
pub use trajectory::{average_speed, out_of_bounds_percent, stability, TrajectoryScore};
pub use trial::{RecordedSample, TrialRecord};
