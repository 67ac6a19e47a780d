//! One assessment session as a deterministic state machine.
//!
//! `advance` is the only entry point. It takes the session's virtual time and
//! one event (a raw client frame, a clock tick, or a disconnect) and returns
//! the outbound messages plus side effects for the runtime to carry out.
//! Replaying the same `(now, event)` log through a fresh session reproduces
//! the same output.
//!
//! Trial time is tick based: the k-th tick after `start_trial` (k = 0, 1, ...)
//! runs at trial time `k·dt`. Inputs carry client capture times and are
//! mapped onto trial time through the offset taken at `hello`; an input is
//! released to the scorer or simulator on the first tick at or after its
//! trial time.

use assess_core::command::Routed;
use assess_core::course::{default_curved, default_square, CourseKind, CourseTracker};
use assess_core::covariate::{CovariateRecord, InstrumentId};
use assess_core::geom::Vec2;
use assess_core::trajectory::score_trajectory;
use assess_core::trial::{command_report, trajectory_report};
use assess_core::{
    build_schedule, estimate_session_length, step, visible_window, CommandVector, CourseSpec, OutcomeReport, Pose,
    PromptWindow, RecordedSample, SimParams, StreamingScorer, Task, Tolerance, TrajectorySample, TrialConfig,
    TrialRecord,
};
use assess_store::TrialBundle;
use chrono::{DateTime, Utc};
use serde_json::Value;

use crate::gamepad::normalize_gamepad;
use crate::protocol::{
    parse_client, ClientBody, ErrorCode, InputCounts, InputReport, PhaseName, ProtocolError, ServerBody, ServerMessage,
};

/// How long a prompt stays open for inputs after its deadline, in trial
/// seconds, so inputs in flight are not lost to the clock.
pub const LATE_GRACE: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    /// One text frame from the client, unparsed.
    Client(String),
    Tick,
    Disconnect,
}

/// Work for the runtime; `trial` is the session-local trial number.
#[derive(Debug, Clone, PartialEq)]
pub enum Effect {
    PersistTrial { trial: u64, bundle: Box<TrialBundle> },
    TrialAborted { trial: u64, user: String, started_at: DateTime<Utc>, record: Box<TrialRecord> },
    CovariateRecorded { trial: u64, records: Vec<CovariateRecord> },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Step {
    pub messages: Vec<ServerMessage>,
    pub effects: Vec<Effect>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Phase {
    Idle,
    Briefing,
    CommandTask { prompt: usize },
    InterPrompt,
    TrajectoryTask { course: CourseKind, segment: Option<usize> },
    Questionnaire { instrument: InstrumentId },
    Summary,
    Closed,
}

#[derive(Debug, Clone)]
pub struct SessionOptions {
    /// Used by `start_trial` without a config.
    pub default_config: TrialConfig,
    /// Used when `hello` names no user.
    pub default_user: String,
}

impl Default for SessionOptions {
    fn default() -> Self {
        Self { default_config: TrialConfig::default(), default_user: "anonymous".into() }
    }
}

#[derive(Debug, Clone, Copy)]
struct Queued {
    t: f64,
    ux: f64,
    uy: f64,
}

#[derive(Debug, Clone)]
struct CommandRun {
    scorer: StreamingScorer,
    tol: Tolerance,
    samples: Vec<RecordedSample>,
    shown: usize,
}

#[derive(Debug, Clone)]
struct TrajectoryRun {
    course: CourseSpec,
    params: SimParams,
    footprint: Vec<Vec2>,
    tracker: CourseTracker,
    pose: Pose,
    held: (f64, f64),
    last_applied: Option<f64>,
    trace: Vec<TrajectorySample>,
}

#[derive(Debug, Clone)]
enum TaskRun {
    Command(Box<CommandRun>),
    Trajectory(Box<TrajectoryRun>),
}

#[derive(Debug, Clone)]
struct Run {
    trial: u64,
    config: TrialConfig,
    started_at: DateTime<Utc>,
    /// Client-clock time of trial time zero.
    origin: f64,
    dt: f64,
    ticks: u64,
    clock: f64,
    queue: Vec<Queued>,
    counts: InputCounts,
    covariates: Vec<CovariateRecord>,
    task: TaskRun,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Resume {
    Briefing,
    Summary,
}

#[derive(Debug, Clone)]
enum Stage {
    Idle,
    Briefing,
    Running(Box<Run>),
    Questionnaire { instrument: InstrumentId, resume: Resume },
    Summary,
    Closed,
}

#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    wall_start: DateTime<Utc>,
    options: SessionOptions,
    stage: Stage,
    next_seq: u64,
    last_client_seq: Option<u64>,
    /// Client clock minus session clock, from `hello`.
    clock_offset: f64,
    user: String,
    trials_started: u64,
    last_trial: Option<u64>,
    pending_covariates: Vec<CovariateRecord>,
}

#[derive(Default)]
struct Out {
    bodies: Vec<ServerBody>,
    effects: Vec<Effect>,
}

impl Out {
    fn error(&mut self, code: ErrorCode, message: impl Into<String>, in_reply_to: Option<u64>) {
        self.bodies.push(ServerBody::Error { code, message: message.into(), in_reply_to });
    }

    fn phase(&mut self, phase: PhaseName) {
        self.bodies.push(ServerBody::Phase { phase });
    }
}

impl Session {
    pub fn new(id: impl Into<String>, wall_start: DateTime<Utc>, options: SessionOptions) -> Self {
        let user = options.default_user.clone();
        Self {
            id: id.into(),
            wall_start,
            options,
            stage: Stage::Idle,
            next_seq: 1,
            last_client_seq: None,
            clock_offset: 0.0,
            user,
            trials_started: 0,
            last_trial: None,
            pending_covariates: Vec::new(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn user(&self) -> &str {
        &self.user
    }

    pub fn phase(&self) -> Phase {
        match &self.stage {
            Stage::Idle => Phase::Idle,
            Stage::Briefing => Phase::Briefing,
            Stage::Running(run) => match &run.task {
                TaskRun::Command(c) => {
                    let open = c.shown.checked_sub(1).map(|i| &c.scorer.windows()[i]);
                    match open {
                        Some(w) if run.clock <= w.deadline() => Phase::CommandTask { prompt: w.spec.m },
                        _ => Phase::InterPrompt,
                    }
                }
                TaskRun::Trajectory(t) => Phase::TrajectoryTask { course: t.course.kind, segment: t.tracker.current() },
            },
            Stage::Questionnaire { instrument, .. } => Phase::Questionnaire { instrument: *instrument },
            Stage::Summary => Phase::Summary,
            Stage::Closed => Phase::Closed,
        }
    }

    pub fn is_running(&self) -> bool {
        matches!(self.stage, Stage::Running(_))
    }

    pub fn is_closed(&self) -> bool {
        matches!(self.stage, Stage::Closed)
    }

    /// Tick period in trial seconds: the running trial's sample period, or
    /// the default config's between trials.
    pub fn tick_period(&self) -> f64 {
        match &self.stage {
            Stage::Running(run) => run.dt,
            _ => self.options.default_config.sample_period(),
        }
    }

    /// Stamp a message that originates outside `advance`, such as a store failure.
    pub fn runtime_error(&mut self, code: ErrorCode, message: impl Into<String>) -> ServerMessage {
        self.stamp(ServerBody::Error { code, message: message.into(), in_reply_to: None })
    }

    fn stamp(&mut self, body: ServerBody) -> ServerMessage {
        let seq = self.next_seq;
        self.next_seq += 1;
        ServerMessage { session_id: self.id.clone(), seq, body }
    }

    fn wall(&self, now: f64) -> DateTime<Utc> {
        let nanos = if now.is_finite() { (now * 1e9).round() as i64 } else { 0 };
        self.wall_start + chrono::Duration::nanoseconds(nanos)
    }

    pub fn advance(&mut self, now: f64, event: &Event) -> Step {
        let mut out = Out::default();
        match event {
            Event::Client(text) => self.on_text(now, text, &mut out),
            Event::Tick => self.on_tick(&mut out),
            Event::Disconnect => {
                if let Stage::Running(_) = self.stage {
                    self.abort_trial("disconnected", &mut out);
                }
                self.stage = Stage::Closed;
            }
        }
        let messages = out.bodies.into_iter().map(|b| self.stamp(b)).collect();
        Step { messages, effects: out.effects }
    }

    fn accept_seq(&mut self, seq: u64, out: &mut Out) -> bool {
        if self.last_client_seq.is_some_and(|last| seq <= last) {
            out.error(ErrorCode::BadSeq, format!("seq {seq} does not increase"), Some(seq));
            return false;
        }
        self.last_client_seq = Some(seq);
        true
    }

    fn on_text(&mut self, now: f64, text: &str, out: &mut Out) {
        let msg = match parse_client(text) {
            Ok(msg) => msg,
            Err(ProtocolError { code, message, seq }) => {
                if seq.is_none_or(|s| self.accept_seq(s, out)) {
                    out.error(code, message, seq);
                }
                return;
            }
        };
        let seq = msg.seq;
        if !self.accept_seq(seq, out) {
            return;
        }
        if msg.session_id.as_deref().is_some_and(|s| s != self.id) {
            out.error(ErrorCode::BadSession, "session_id does not match this session", Some(seq));
            return;
        }
        let illegal = |out: &mut Out, what: &str| {
            out.error(ErrorCode::IllegalForPhase, format!("{what} is not allowed now"), Some(seq));
        };
        match (&self.stage, msg.body) {
            (Stage::Closed, _) => illegal(out, "any message after close"),
            (_, ClientBody::Ping {}) => out.bodies.push(ServerBody::Pong),
            (Stage::Idle, ClientBody::Hello { client_time, user }) => {
                if !client_time.is_finite() {
                    out.error(ErrorCode::Malformed, "client_time must be finite", Some(seq));
                    return;
                }
                self.clock_offset = client_time - now;
                if let Some(user) = user.filter(|u| !u.trim().is_empty()) {
                    self.user = user;
                }
                self.stage = Stage::Briefing;
                out.phase(PhaseName::Briefing);
            }
            (Stage::Briefing | Stage::Summary, ClientBody::StartTrial { config, task, course }) => {
                match self.resolve_config(config.as_ref(), task, course) {
                    Ok(config) => self.start_trial(now, config, out),
                    Err(message) => out.error(ErrorCode::InvalidConfig, message, Some(seq)),
                }
            }
            (Stage::Running(_), ClientBody::Input(report)) => self.on_input(&report),
            (Stage::Briefing | Stage::Summary, ClientBody::QuestionnaireBegin { instrument }) => {
                let Ok(instrument) = instrument.parse::<InstrumentId>() else {
                    out.error(ErrorCode::InvalidQuestionnaire, format!("unknown instrument {instrument:?}"), Some(seq));
                    return;
                };
                let resume = if matches!(self.stage, Stage::Summary) { Resume::Summary } else { Resume::Briefing };
                self.stage = Stage::Questionnaire { instrument, resume };
                out.phase(PhaseName::Questionnaire);
            }
            (
                Stage::Questionnaire { instrument, resume },
                ClientBody::QuestionnaireResponse { instrument: named, responses },
            ) => {
                let (instrument, resume) = (*instrument, *resume);
                if named != instrument.as_str() {
                    out.error(
                        ErrorCode::InvalidQuestionnaire,
                        format!("response for {named:?} while {} is open", instrument.as_str()),
                        Some(seq),
                    );
                    return;
                }
                let record = match instrument.definition().record(responses, self.wall(now)) {
                    Ok(r) => r,
                    Err(e) => {
                        out.error(ErrorCode::InvalidQuestionnaire, e.to_string(), Some(seq));
                        return;
                    }
                };
                out.bodies.push(ServerBody::QuestionnaireAck { instrument, raw_total: record.raw_total });
                match (resume, self.last_trial) {
                    (Resume::Summary, Some(trial)) => {
                        out.effects.push(Effect::CovariateRecorded { trial, records: vec![record] })
                    }
                    _ => self.pending_covariates.push(record),
                }
                self.stage = match resume {
                    Resume::Briefing => Stage::Briefing,
                    Resume::Summary => Stage::Summary,
                };
                out.phase(match resume {
                    Resume::Briefing => PhaseName::Briefing,
                    Resume::Summary => PhaseName::Summary,
                });
            }
            (Stage::Running(_), ClientBody::Abort {}) => {
                self.abort_trial("aborted by client", out);
                self.stage = Stage::Closed;
                out.phase(PhaseName::Closed);
            }
            (_, ClientBody::Abort {}) | (Stage::Idle | Stage::Briefing | Stage::Summary, ClientBody::Close {}) => {
                self.stage = Stage::Closed;
                out.phase(PhaseName::Closed);
            }
            (_, body) => {
                let name = serde_json::to_value(&body)
                    .ok()
                    .and_then(|v| v.get("type").and_then(Value::as_str).map(str::to_owned))
                    .unwrap_or_default();
                illegal(out, &name);
            }
        }
    }

    fn resolve_config(
        &self,
        config: Option<&Value>,
        task: Option<Task>,
        course: Option<CourseKind>,
    ) -> Result<TrialConfig, String> {
        let mut config = match config {
            Some(v) => serde_json::from_value::<TrialConfig>(v.clone()).map_err(|e| e.to_string())?,
            None => self.options.default_config.clone(),
        };
        if let Some(kind) = course {
            config.course = Some(match kind {
                CourseKind::Square => default_square(),
                CourseKind::Curved => default_curved(),
            });
            config.task = Task::TrajectoryFollowing;
        }
        if let Some(task) = task {
            config.task = task;
        }
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }

    fn start_trial(&mut self, now: f64, config: TrialConfig, out: &mut Out) {
        let (task, prompt_count, estimated_duration) = match config.task {
            Task::CommandFollowing => {
                let schedule = match build_schedule(&config) {
                    Ok(s) => s,
                    Err(e) => {
                        out.error(ErrorCode::InvalidConfig, e.to_string(), None);
                        return;
                    }
                };
                let estimate = estimate_session_length(&schedule, config.inter_prompt_gap);
                let windows: Vec<PromptWindow> = schedule.windows(config.inter_prompt_gap);
                let tol = Tolerance::from_config(&config);
                let n = windows.len();
                let run = CommandRun { scorer: StreamingScorer::new(windows, tol), tol, samples: Vec::new(), shown: 0 };
                (TaskRun::Command(Box::new(run)), n, Some(estimate))
            }
            Task::TrajectoryFollowing => {
                let course = config.course.clone().expect("validated trajectory config has a course");
                let params = SimParams::new(config.vehicle.clone(), config.sample_rate_hz);
                let run = TrajectoryRun {
                    pose: course.start_pose(),
                    footprint: config.vehicle.footprint.clone(),
                    course,
                    params,
                    tracker: CourseTracker::new(),
                    held: (0.0, 0.0),
                    last_applied: None,
                    trace: Vec::new(),
                };
                (TaskRun::Trajectory(Box::new(run)), 0, None)
            }
        };
        self.trials_started += 1;
        let trial = self.trials_started;
        let origin = now + self.clock_offset;
        let mut run = Run {
            trial,
            started_at: self.wall(now),
            origin,
            dt: config.sample_period(),
            ticks: 0,
            clock: 0.0,
            queue: Vec::new(),
            counts: InputCounts::default(),
            covariates: std::mem::take(&mut self.pending_covariates),
            task,
            config,
        };
        out.bodies.push(ServerBody::ConfigAck {
            trial,
            task: run.config.task,
            origin_client_time: origin,
            sample_rate_hz: run.config.sample_rate_hz,
            prompt_count,
            estimated_duration,
        });
        match &mut run.task {
            TaskRun::Command(c) => {
                out.phase(PhaseName::CommandTask);
                show_due(c, 0.0, out);
            }
            TaskRun::Trajectory(_) => out.phase(PhaseName::TrajectoryTask),
        }
        self.last_trial = Some(trial);
        self.stage = Stage::Running(Box::new(run));
    }

    fn on_input(&mut self, report: &InputReport) {
        let Stage::Running(run) = &mut self.stage else {
            return;
        };
        run.counts.received += 1;
        match normalize_gamepad(report, run.config.deadzone) {
            Ok((ux, uy)) => run.queue.push(Queued { t: report.t - run.origin, ux, uy }),
            Err(_) => run.counts.dropped_malformed += 1,
        }
    }

    fn on_tick(&mut self, out: &mut Out) {
        let Stage::Running(run) = &mut self.stage else {
            return;
        };
        let clock = run.ticks as f64 * run.dt;
        run.ticks += 1;
        run.clock = clock;

        let mut ready = Vec::new();
        run.queue.retain(|q| {
            let due = q.t <= clock;
            if due {
                ready.push(*q);
            }
            !due
        });
        ready.sort_by(|a, b| a.t.total_cmp(&b.t));

        let done = match &mut run.task {
            TaskRun::Command(c) => command_tick(c, &mut run.counts, &ready, clock, out),
            TaskRun::Trajectory(t) => {
                trajectory_tick(t, &mut run.counts, &ready, clock, run.config.trajectory_time_limit, out)
            }
        };
        if done {
            self.finish_trial(out);
        }
    }

    fn finish_trial(&mut self, out: &mut Out) {
        let Stage::Running(run) = std::mem::replace(&mut self.stage, Stage::Summary) else {
            unreachable!("finish_trial outside a trial")
        };
        let mut run = *run;
        run.counts.dropped_after_end += run.queue.len();
        let (record, report) = match run.task {
            TaskRun::Command(c) => {
                let windows = c.scorer.windows().to_vec();
                let report = match c.scorer.finish() {
                    Ok(score) => command_report(&score),
                    Err(_) => OutcomeReport::empty(Task::CommandFollowing),
                };
                let record = TrialRecord {
                    config: run.config,
                    prompts: windows,
                    samples: c.samples,
                    covariates: run.covariates,
                };
                (record, report)
            }
            TaskRun::Trajectory(t) => {
                let report = trajectory_report(&score_trajectory(&t.trace, &t.course));
                let samples = t.trace.iter().map(RecordedSample::trajectory).collect();
                let record =
                    TrialRecord { config: run.config, prompts: Vec::new(), samples, covariates: run.covariates };
                (record, report)
            }
        };
        out.bodies.push(ServerBody::Summary {
            trial: run.trial,
            trial_id: None,
            report: Box::new(report.clone()),
            counts: run.counts,
        });
        out.phase(PhaseName::Summary);
        out.effects.push(Effect::PersistTrial {
            trial: run.trial,
            bundle: Box::new(TrialBundle {
                id: None,
                user: self.user.clone(),
                started_at: run.started_at,
                synthetic: false,
                record,
                outcomes: report,
            }),
        });
    }

    fn abort_trial(&mut self, reason: &str, out: &mut Out) {
        let Stage::Running(run) = std::mem::replace(&mut self.stage, Stage::Closed) else {
            return;
        };
        let run = *run;
        let (prompts, samples) = match run.task {
            TaskRun::Command(c) => (c.scorer.windows().to_vec(), c.samples),
            TaskRun::Trajectory(t) => (Vec::new(), t.trace.iter().map(RecordedSample::trajectory).collect()),
        };
        let record = TrialRecord { config: run.config, prompts, samples, covariates: run.covariates };
        out.bodies.push(ServerBody::TrialAborted { trial: run.trial, trial_id: None, reason: reason.to_owned() });
        out.effects.push(Effect::TrialAborted {
            trial: run.trial,
            user: self.user.clone(),
            started_at: run.started_at,
            record: Box::new(record),
        });
    }
}

fn show_due(c: &mut CommandRun, clock: f64, out: &mut Out) {
    let windows = c.scorer.windows();
    while let Some(w) = windows.get(c.shown).filter(|w| w.onset <= clock) {
        out.bodies.push(ServerBody::PromptShow {
            m: w.spec.m,
            theta_hat: w.spec.theta_hat,
            mag_hat: w.spec.mag_hat,
            onset: w.onset,
            deadline: w.deadline(),
        });
        c.shown += 1;
    }
}

/// Returns true once every prompt has closed.
fn command_tick(c: &mut CommandRun, counts: &mut InputCounts, ready: &[Queued], clock: f64, out: &mut Out) -> bool {
    let mut last = None;
    for q in ready {
        let routed = c.scorer.push(CommandVector::new(q.t, q.ux, q.uy));
        match routed {
            Routed::Prompt(_) => counts.scored += 1,
            Routed::Between => counts.between += 1,
            Routed::OutOfOrder => counts.dropped_out_of_order += 1,
            Routed::Late => counts.dropped_late += 1,
            Routed::NonFinite => counts.dropped_malformed += 1,
        }
        if routed.accepted() {
            c.samples.push(RecordedSample::command(&CommandVector::new(q.t, q.ux, q.uy)));
            last = Some((q, routed));
        }
    }
    if let Some((q, routed)) = last {
        let m = match routed {
            Routed::Prompt(m) => Some(m),
            _ => None,
        };
        let within =
            m.and_then(|m| c.scorer.windows().get(m - 1)).is_some_and(|w| c.tol.evaluate(q.ux, q.uy, &w.spec).within);
        out.bodies.push(ServerBody::PromptFeedback { t: q.t, ux: q.ux, uy: q.uy, m, within });
    }
    if c.scorer.close_through(clock - LATE_GRACE) > 0 {
        let s = c.scorer.snapshot();
        out.bodies.push(ServerBody::PartialScore {
            closed: c.scorer.closed_count(),
            prompt_count: c.scorer.windows().len(),
            t_d: s.t_d,
            r_p: s.r_p,
            t_s: s.t_s,
            a_r: s.a_r,
            a_s: s.a_s,
        });
    }
    show_due(c, clock, out);
    c.scorer.is_finished()
}

/// Record the pose at `clock` under the held command, then step the plant.
/// Returns true when the course is complete or time is up.
fn trajectory_tick(
    t: &mut TrajectoryRun,
    counts: &mut InputCounts,
    ready: &[Queued],
    clock: f64,
    time_limit: f64,
    out: &mut Out,
) -> bool {
    let mut next = None;
    for q in ready {
        if t.last_applied.is_some_and(|last| q.t < last) {
            counts.dropped_out_of_order += 1;
            continue;
        }
        if next.replace(*q).is_some() {
            counts.superseded += 1;
        }
    }
    if let Some(q) = next {
        counts.scored += 1;
        t.held = (q.ux, q.uy);
        t.last_applied = Some(q.t);
    }
    let (ux, uy) = t.held;
    let mut sample = TrajectorySample {
        t: clock,
        pose: t.pose,
        command: CommandVector::new(clock, ux, uy),
        speed: t.params.speed(uy),
        segment_id: None,
        in_bounds: true,
    };
    t.tracker.annotate(&mut sample, &t.course, &t.footprint);
    t.trace.push(sample);
    out.bodies.push(ServerBody::Pose {
        t: clock,
        x: t.pose.x,
        y: t.pose.y,
        heading: t.pose.heading,
        segment_id: sample.segment_id,
        in_bounds: sample.in_bounds,
    });
    out.bodies.push(ServerBody::VisibleGeometry { t: clock, fragments: visible_window(&t.pose, &t.course) });
    if t.tracker.is_complete(&t.pose, &t.course) || clock >= time_limit {
        return true;
    }
    t.pose = step(t.pose, ux, uy, &t.params);
    false
}
