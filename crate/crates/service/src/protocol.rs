//! Wire format. Every message is one JSON object carrying `type`,
//! `session_id`, and `seq`; `seq` increases strictly in each direction.

use assess_core::course::{CourseKind, Fragment};
use assess_core::covariate::{InstrumentId, Response};
use assess_core::{OutcomeReport, Task};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const CLIENT_TYPES: [&str; 8] =
    ["hello", "start_trial", "input", "questionnaire_begin", "questionnaire_response", "abort", "close", "ping"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    Malformed,
    UnknownType,
    BadSeq,
    BadSession,
    IllegalForPhase,
    InvalidConfig,
    InvalidQuestionnaire,
    StoreFailure,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Malformed => "malformed",
            ErrorCode::UnknownType => "unknown_type",
            ErrorCode::BadSeq => "bad_seq",
            ErrorCode::BadSession => "bad_session",
            ErrorCode::IllegalForPhase => "illegal_for_phase",
            ErrorCode::InvalidConfig => "invalid_config",
            ErrorCode::InvalidQuestionnaire => "invalid_questionnaire",
            ErrorCode::StoreFailure => "store_failure",
        }
    }
}

/// A client message that could not be accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolError {
    pub code: ErrorCode,
    pub message: String,
    /// The offending message's seq, when it could be read.
    pub seq: Option<u64>,
}

impl ProtocolError {
    fn new(code: ErrorCode, message: impl Into<String>, seq: Option<u64>) -> Self {
        Self { code, message: message.into(), seq }
    }
}

/// One raw gamepad sample as sent by a client. Axes are optional so
/// button-only devices can omit them.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputReport {
    /// Client capture time, client clock seconds.
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ux: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uy: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub buttons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientBody {
    Hello {
        client_time: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        user: Option<String>,
    },
    /// Without `config` the server default is used; `task` and `course`
    /// override the corresponding fields.
    StartTrial {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        config: Option<Value>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        task: Option<Task>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        course: Option<CourseKind>,
    },
    Input(InputReport),
    QuestionnaireBegin {
        instrument: String,
    },
    QuestionnaireResponse {
        instrument: String,
        responses: Vec<Response>,
    },
    Abort {},
    Close {},
    Ping {},
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClientMessage {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    pub seq: u64,
    #[serde(flatten)]
    pub body: ClientBody,
}

impl ClientMessage {
    pub fn new(session_id: Option<&str>, seq: u64, body: ClientBody) -> Self {
        Self { session_id: session_id.map(str::to_owned), seq, body }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("client messages serialize")
    }
}

/// Parse one client frame. Type is checked before the payload so an unknown
/// type is reported as such even when its fields are odd.
pub fn parse_client(text: &str) -> Result<ClientMessage, ProtocolError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| ProtocolError::new(ErrorCode::Malformed, format!("not JSON: {e}"), None))?;
    let Value::Object(mut obj) = value else {
        return Err(ProtocolError::new(ErrorCode::Malformed, "expected a JSON object", None));
    };
    let seq = obj.remove("seq").and_then(|v| v.as_u64());
    let Some(seq) = seq else {
        return Err(ProtocolError::new(ErrorCode::Malformed, "missing or invalid seq", None));
    };
    let session_id = match obj.remove("session_id") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s),
        Some(_) => return Err(ProtocolError::new(ErrorCode::Malformed, "session_id must be a string", Some(seq))),
    };
    let ty = match obj.get("type") {
        Some(Value::String(s)) => s.clone(),
        _ => return Err(ProtocolError::new(ErrorCode::Malformed, "missing type", Some(seq))),
    };
    if !CLIENT_TYPES.contains(&ty.as_str()) {
        return Err(ProtocolError::new(ErrorCode::UnknownType, format!("unknown message type {ty:?}"), Some(seq)));
    }
    let body: ClientBody = serde_json::from_value(Value::Object(obj))
        .map_err(|e| ProtocolError::new(ErrorCode::Malformed, format!("{ty}: {e}"), Some(seq)))?;
    Ok(ClientMessage { session_id, seq, body })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseName {
    Idle,
    Briefing,
    CommandTask,
    InterPrompt,
    TrajectoryTask,
    Questionnaire,
    Summary,
    Closed,
}

/// Received-input accounting for one trial:
/// `received = scored + between + superseded + dropped`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputCounts {
    pub received: usize,
    /// Scored against a prompt, or applied to the vehicle.
    pub scored: usize,
    /// Command task: accepted outside every prompt window.
    pub between: usize,
    /// Trajectory task: replaced by a later input released on the same tick.
    pub superseded: usize,
    pub dropped_malformed: usize,
    pub dropped_late: usize,
    pub dropped_out_of_order: usize,
    /// Still queued when the trial ended.
    pub dropped_after_end: usize,
}

impl InputCounts {
    pub fn dropped(&self) -> usize {
        self.dropped_malformed + self.dropped_late + self.dropped_out_of_order + self.dropped_after_end
    }

    pub fn balanced(&self) -> bool {
        self.received == self.scored + self.between + self.superseded + self.dropped()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerBody {
    Phase {
        phase: PhaseName,
    },
    ConfigAck {
        /// Session-local trial number.
        trial: u64,
        task: Task,
        /// Client-clock time of trial time zero; inputs are stamped
        /// `t = origin_client_time + trial time`.
        origin_client_time: f64,
        sample_rate_hz: f64,
        prompt_count: usize,
        #[serde(default)]
        estimated_duration: Option<f64>,
    },
    PromptShow {
        m: usize,
        theta_hat: f64,
        mag_hat: Option<f64>,
        onset: f64,
        deadline: f64,
    },
    PromptFeedback {
        t: f64,
        ux: f64,
        uy: f64,
        /// Prompt the input was scored against, if any.
        m: Option<usize>,
        within: bool,
    },
    Pose {
        t: f64,
        x: f64,
        y: f64,
        heading: f64,
        segment_id: Option<usize>,
        in_bounds: bool,
    },
    VisibleGeometry {
        t: f64,
        fragments: Vec<Fragment>,
    },
    PartialScore {
        closed: usize,
        prompt_count: usize,
        t_d: Option<f64>,
        r_p: f64,
        t_s: Option<f64>,
        a_r: Option<f64>,
        a_s: Option<f64>,
    },
    Summary {
        trial: u64,
        /// Store id, filled in once the trial has been persisted.
        trial_id: Option<i64>,
        report: Box<OutcomeReport>,
        counts: InputCounts,
    },
    TrialAborted {
        trial: u64,
        trial_id: Option<i64>,
        reason: String,
    },
    QuestionnaireAck {
        instrument: InstrumentId,
        raw_total: Option<f64>,
    },
    Pong,
    Error {
        code: ErrorCode,
        message: String,
        in_reply_to: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerMessage {
    pub session_id: String,
    pub seq: u64,
    #[serde(flatten)]
    pub body: ServerBody,
}

impl ServerMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }

    pub fn parse(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
