use assess_core::course::{default_square, CourseKind};
use assess_core::covariate::Response;
use assess_core::operator::{drive, respond, OperatorModel};
use assess_core::trial::command_report;
use assess_core::{batch_score, build_schedule, run_trace, OutcomeReport, SimParams, Task, Tolerance, TrialConfig};
use assess_service::protocol::PhaseName;
use assess_service::{
    ClientBody, ClientMessage, Effect, ErrorCode, Event, InputCounts, InputReport, Phase, ServerBody, ServerMessage,
    Session, SessionOptions,
};
use chrono::{TimeZone, Utc};
use proptest::prelude::*;

/// Feeds a session and keeps the event log for replay.
struct Driver {
    session: Session,
    seq: u64,
    now: f64,
    log: Vec<(f64, Event)>,
    messages: Vec<ServerMessage>,
    effects: Vec<Effect>,
}

impl Driver {
    fn new() -> Self {
        let wall = Utc.with_ymd_and_hms(2026, 3, 1, 9, 0, 0).unwrap();
        Self {
            session: Session::new("s1", wall, SessionOptions::default()),
            seq: 0,
            now: 0.0,
            log: Vec::new(),
            messages: Vec::new(),
            effects: Vec::new(),
        }
    }

    fn event(&mut self, event: Event) -> Vec<ServerMessage> {
        let step = self.session.advance(self.now, &event);
        self.log.push((self.now, event));
        self.messages.extend(step.messages.iter().cloned());
        self.effects.extend(step.effects);
        step.messages
    }

    fn raw(&mut self, text: &str) -> Vec<ServerMessage> {
        self.event(Event::Client(text.to_owned()))
    }

    fn send(&mut self, body: ClientBody) -> Vec<ServerMessage> {
        self.seq += 1;
        let text = ClientMessage::new(Some("s1"), self.seq, body).to_json();
        self.raw(&text)
    }

    fn tick(&mut self) -> Vec<ServerMessage> {
        self.event(Event::Tick)
    }

    fn hello(&mut self) {
        self.send(ClientBody::Hello { client_time: 0.0, user: Some("p01".into()) });
    }

    fn start(&mut self, config: &TrialConfig) -> f64 {
        let out = self.send(ClientBody::StartTrial {
            config: Some(serde_json::to_value(config).unwrap()),
            task: None,
            course: None,
        });
        match &out[0].body {
            ServerBody::ConfigAck { origin_client_time, .. } => *origin_client_time,
            other => panic!("expected config_ack, got {other:?}"),
        }
    }

    fn input(&mut self, t: f64, ux: f64, uy: f64) {
        self.send(ClientBody::Input(InputReport { t, ux: Some(ux), uy: Some(uy), buttons: vec![] }));
    }

    fn run_to_summary(&mut self, max_ticks: usize) -> (OutcomeReport, InputCounts) {
        for _ in 0..max_ticks {
            for m in self.tick() {
                if let ServerBody::Summary { report, counts, .. } = m.body {
                    return (*report, counts);
                }
            }
        }
        panic!("no summary after {max_ticks} ticks");
    }

    fn summaries(&self) -> usize {
        self.messages.iter().filter(|m| matches!(m.body, ServerBody::Summary { .. })).count()
    }
}

fn small_config(seed: u64) -> TrialConfig {
    TrialConfig { repeats_per_target: 1, rng_seed: seed, ..TrialConfig::default() }
}

fn error_code(messages: &[ServerMessage]) -> Option<ErrorCode> {
    messages.iter().find_map(|m| match m.body {
        ServerBody::Error { code, .. } => Some(code),
        _ => None,
    })
}

#[test]
fn start_shows_the_first_prompt() {
    let mut d = Driver::new();
    d.hello();
    assert_eq!(d.session.phase(), Phase::Briefing);
    let out = d.send(ClientBody::StartTrial { config: None, task: None, course: None });
    assert!(matches!(out[0].body, ServerBody::ConfigAck { prompt_count: 160, .. }));
    assert!(out.iter().any(|m| matches!(m.body, ServerBody::PromptShow { m: 1, onset, .. } if onset == 0.0)));
    assert_eq!(d.session.phase(), Phase::CommandTask { prompt: 1 });
}

#[test]
fn input_while_idle_is_rejected_without_a_state_change() {
    let mut d = Driver::new();
    let out = d.send(ClientBody::Input(InputReport { t: 0.0, ux: Some(0.0), uy: Some(1.0), buttons: vec![] }));
    assert_eq!(error_code(&out), Some(ErrorCode::IllegalForPhase));
    assert_eq!(d.session.phase(), Phase::Idle);
    // the session still accepts a hello afterwards
    d.hello();
    assert_eq!(d.session.phase(), Phase::Briefing);
}

#[test]
fn protocol_errors() {
    let mut d = Driver::new();
    assert_eq!(error_code(&d.raw(r#"{"type":"teleport","seq":1}"#)), Some(ErrorCode::UnknownType));
    assert_eq!(error_code(&d.raw(r#"{"type":"hello","seq":1,"client_time":0}"#)), Some(ErrorCode::BadSeq));
    assert_eq!(d.session.phase(), Phase::Idle);
    assert_eq!(error_code(&d.raw("{")), Some(ErrorCode::Malformed));
    assert_eq!(
        error_code(&d.raw(r#"{"type":"hello","seq":2,"session_id":"other","client_time":0}"#)),
        Some(ErrorCode::BadSession)
    );
    d.seq = 2;
    d.hello();
    let bad = TrialConfig { sample_rate_hz: -1.0, ..TrialConfig::default() };
    let out =
        d.send(ClientBody::StartTrial { config: Some(serde_json::to_value(bad).unwrap()), task: None, course: None });
    assert_eq!(error_code(&out), Some(ErrorCode::InvalidConfig));
    let out = d.send(ClientBody::StartTrial { config: None, task: Some(Task::TrajectoryFollowing), course: None });
    assert_eq!(error_code(&out), Some(ErrorCode::InvalidConfig));
    assert_eq!(d.session.phase(), Phase::Briefing);
    // server seq increases by one per message
    assert!(d.messages.windows(2).all(|w| w[1].seq == w[0].seq + 1));
}

#[test]
fn scripted_command_session_matches_the_batch_oracle() {
    let config = TrialConfig { rng_seed: 11, ..TrialConfig::default() };
    let windows = build_schedule(&config).unwrap().windows(config.inter_prompt_gap);
    let model =
        OperatorModel { reaction_delay: 0.3, angular_noise_sd: 0.05, lapse_rate: 0.1, seed: 5, ..Default::default() };
    let response = respond(&windows, config.inter_prompt_gap, &model, config.sample_rate_hz);

    let mut d = Driver::new();
    d.hello();
    let origin = d.start(&config);
    assert_eq!(origin, 0.0);
    for s in &response.samples {
        d.input(origin + s.t, s.ux, s.uy);
    }
    let (report, counts) = d.run_to_summary(40_000);
    let oracle = command_report(&batch_score(&windows, &response.samples, &Tolerance::from_config(&config)).unwrap());
    assert_eq!(report, oracle);
    assert!(counts.balanced(), "{counts:?}");
    assert_eq!(counts.received, response.samples.len());
    assert_eq!(counts.dropped_late + counts.dropped_out_of_order + counts.dropped_malformed, 0);
    assert_eq!(d.session.phase(), Phase::Summary);

    // later ticks never produce a second summary
    for _ in 0..100 {
        d.tick();
    }
    assert_eq!(d.summaries(), 1);
    let [Effect::PersistTrial { bundle, .. }] = d.effects.as_slice() else { panic!("{:?}", d.effects.len()) };
    assert_eq!(bundle.record.score().unwrap(), report);
    assert_eq!(bundle.user, "p01");
}

#[test]
fn partial_scores_count_up_to_the_prompt_total() {
    let config = small_config(3);
    let mut d = Driver::new();
    d.hello();
    d.start(&config);
    d.run_to_summary(5_000);
    let closed: Vec<usize> = d
        .messages
        .iter()
        .filter_map(|m| match m.body {
            ServerBody::PartialScore { closed, .. } => Some(closed),
            _ => None,
        })
        .collect();
    assert_eq!(closed.last(), Some(&8));
    assert!(closed.windows(2).all(|w| w[0] < w[1]));
    let shows = d.messages.iter().filter(|m| matches!(m.body, ServerBody::PromptShow { .. })).count();
    assert_eq!(shows, 8);
}

#[test]
fn scripted_drive_completes_the_square_in_bounds() {
    let config = TrialConfig::trajectory(default_square());
    let course = config.course.clone().unwrap();
    let params = SimParams::new(config.vehicle.clone(), config.sample_rate_hz);
    let commands = drive(&course, &OperatorModel::default(), &params, config.deadzone);
    let dt = config.sample_period();

    let mut d = Driver::new();
    d.hello();
    let origin = d.start(&config);
    for (k, c) in commands.iter().enumerate() {
        d.input(origin + (k as f64 - 0.5) * dt, c.ux, c.uy);
    }
    let (report, counts) = d.run_to_summary(commands.len() + 10);
    assert_eq!(report.task, Task::TrajectoryFollowing);
    assert_eq!(report.t_ob, Some(0.0));
    assert!(report.s.is_some() && report.v_avg.is_some());
    assert!(counts.balanced(), "{counts:?}");

    let [Effect::PersistTrial { bundle, .. }] = d.effects.as_slice() else { panic!() };
    assert_eq!(bundle.record.score().unwrap(), report);
    // the live plant is the offline simulator under the same commands
    let offline = run_trace(course.start_pose(), &commands, &params);
    for (live, off) in bundle.record.samples.iter().zip(&offline) {
        assert_eq!(live.pose, Some(off.pose));
        assert_eq!((live.ux, live.uy), (off.command.ux, off.command.uy));
    }
    let poses = d.messages.iter().filter(|m| matches!(m.body, ServerBody::Pose { .. })).count();
    assert_eq!(poses, bundle.record.samples.len());
}

#[test]
fn course_shortcut_and_button_inputs() {
    let mut d = Driver::new();
    d.hello();
    let out = d.send(ClientBody::StartTrial { config: None, task: None, course: Some(CourseKind::Curved) });
    assert!(matches!(out[0].body, ServerBody::ConfigAck { task: Task::TrajectoryFollowing, .. }));
    assert!(matches!(d.session.phase(), Phase::TrajectoryTask { course: CourseKind::Curved, .. }));
    d.send(ClientBody::Input(InputReport { t: -0.01, ux: None, uy: None, buttons: vec!["up".into()] }));
    d.send(ClientBody::Input(InputReport { t: -0.01, ux: Some(f64::NAN), uy: Some(0.0), buttons: vec![] }));
    d.send(ClientBody::Input(InputReport { t: -0.01, ux: None, uy: None, buttons: vec!["fire".into()] }));
    d.tick();
    d.tick();
    let poses: Vec<(f64, f64)> = d
        .messages
        .iter()
        .filter_map(|m| match m.body {
            ServerBody::Pose { x, y, .. } => Some((x, y)),
            _ => None,
        })
        .collect();
    // forward at full speed: one step of v_max·dt
    assert_eq!(poses.len(), 2);
    let moved = (poses[1].0 - poses[0].0).hypot(poses[1].1 - poses[0].1);
    assert!((moved - 1.0 * 0.02).abs() < 1e-12, "{moved}");
    d.send(ClientBody::Abort {});
    let [Effect::TrialAborted { record, .. }] = d.effects.as_slice() else { panic!() };
    assert_eq!(record.samples.len(), 2);
    assert_eq!(d.session.phase(), Phase::Closed);
}

#[test]
fn questionnaires_attach_to_trials() {
    let mut d = Driver::new();
    d.hello();
    let out = d.send(ClientBody::QuestionnaireBegin { instrument: "tarot".into() });
    assert_eq!(error_code(&out), Some(ErrorCode::InvalidQuestionnaire));
    d.send(ClientBody::QuestionnaireBegin { instrument: "confidence".into() });
    assert!(matches!(d.session.phase(), Phase::Questionnaire { .. }));
    let out = d
        .send(ClientBody::QuestionnaireResponse { instrument: "confidence".into(), responses: vec![Response::Int(9)] });
    assert_eq!(error_code(&out), Some(ErrorCode::InvalidQuestionnaire));
    assert!(matches!(d.session.phase(), Phase::Questionnaire { .. }));
    let out = d
        .send(ClientBody::QuestionnaireResponse { instrument: "confidence".into(), responses: vec![Response::Int(4)] });
    assert!(matches!(out[0].body, ServerBody::QuestionnaireAck { raw_total: Some(t), .. } if t == 4.0));
    assert_eq!(d.session.phase(), Phase::Briefing);

    d.start(&small_config(1));
    d.run_to_summary(5_000);
    d.send(ClientBody::QuestionnaireBegin { instrument: "stress".into() });
    d.send(ClientBody::QuestionnaireResponse { instrument: "stress".into(), responses: vec![Response::Int(2); 30] });
    assert_eq!(d.session.phase(), Phase::Summary);
    match d.effects.as_slice() {
        [Effect::PersistTrial { trial: 1, bundle }, Effect::CovariateRecorded { trial: 1, records }] => {
            assert_eq!(bundle.record.covariates.len(), 1);
            assert_eq!(records[0].raw_total, Some(2.0));
        }
        other => panic!("{other:?}"),
    }
    // a second trial in the same session
    d.start(&small_config(2));
    d.run_to_summary(5_000);
    assert_eq!(d.summaries(), 2);
    d.send(ClientBody::Close {});
    assert!(d.session.is_closed());
    let out = d.send(ClientBody::Ping {});
    assert_eq!(error_code(&out), Some(ErrorCode::IllegalForPhase));
}

#[test]
fn disconnect_mid_trial_records_an_aborted_trial() {
    let mut d = Driver::new();
    d.hello();
    d.start(&small_config(4));
    for _ in 0..100 {
        d.tick();
    }
    d.event(Event::Disconnect);
    assert!(d.session.is_closed());
    let [Effect::TrialAborted { record, user, .. }] = d.effects.as_slice() else { panic!() };
    assert_eq!(user, "p01");
    assert_eq!(record.prompts.len(), 8);
    assert_eq!(d.summaries(), 0);
}

#[test]
fn replaying_the_event_log_reproduces_every_message() {
    let config = small_config(9);
    let windows = build_schedule(&config).unwrap().windows(config.inter_prompt_gap);
    let model = OperatorModel { reaction_delay: 0.25, angular_noise_sd: 0.1, seed: 2, ..Default::default() };
    let response = respond(&windows, config.inter_prompt_gap, &model, 50.0);

    let mut d = Driver::new();
    d.now = 3.25;
    d.raw("garbage");
    d.hello();
    d.now = 7.5;
    let origin = d.start(&config);
    // inputs trickle in a few ticks after capture, some out of order
    let mut pending: Vec<(usize, f64, f64, f64)> = response
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| ((s.t * 50.0) as usize + 1 + (i * 7) % 5, origin + s.t, s.ux, s.uy))
        .collect();
    pending.sort_by_key(|p| p.0);
    let mut tick = 0;
    let mut next = 0;
    while !matches!(d.session.phase(), Phase::Summary) {
        while next < pending.len() && pending[next].0 <= tick {
            let (_, t, ux, uy) = pending[next];
            d.input(t, ux, uy);
            next += 1;
        }
        d.now += 0.02;
        d.tick();
        tick += 1;
        assert!(tick < 10_000);
    }
    d.send(ClientBody::QuestionnaireBegin { instrument: "fatigue".into() });
    d.send(ClientBody::QuestionnaireResponse { instrument: "fatigue".into(), responses: vec![Response::Int(1); 11] });

    let mut replay = Session::new("s1", Utc.with_ymd_and_hms(2026, 3, 1, 9, 0, 0).unwrap(), SessionOptions::default());
    let mut messages = Vec::new();
    let mut effects = Vec::new();
    for (now, event) in &d.log {
        let step = replay.advance(*now, event);
        messages.extend(step.messages);
        effects.extend(step.effects);
    }
    assert_eq!(messages, d.messages);
    assert_eq!(effects, d.effects);
    assert_eq!(d.summaries(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Arbitrary network delay: every input is accounted for, and the summary
    /// equals a batch score of what was kept.
    #[test]
    fn delayed_inputs_are_accounted_for(
        seed in 0u64..1000,
        delays in proptest::collection::vec(0usize..25, 64),
        junk_every in 5usize..40,
    ) {
        let config = small_config(seed);
        let windows = build_schedule(&config).unwrap().windows(config.inter_prompt_gap);
        let model = OperatorModel { reaction_delay: 0.2, angular_noise_sd: 0.2, seed, ..Default::default() };
        let response = respond(&windows, config.inter_prompt_gap, &model, 50.0);

        let mut d = Driver::new();
        d.hello();
        let origin = d.start(&config);
        let mut pending: Vec<(usize, usize)> = response
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| ((s.t * 50.0) as usize + delays[i % delays.len()], i))
            .collect();
        pending.sort();
        let mut next = 0;
        let mut sent = 0;
        let mut tick = 0;
        while !matches!(d.session.phase(), Phase::Summary) {
            while next < pending.len() && pending[next].0 <= tick {
                let s = response.samples[pending[next].1];
                if sent % junk_every == 0 {
                    d.send(ClientBody::Input(InputReport { t: origin + s.t, ux: Some(s.ux), uy: None, buttons: vec![] }));
                }
                d.input(origin + s.t, s.ux, s.uy);
                sent += 1;
                next += 1;
            }
            d.tick();
            tick += 1;
            prop_assert!(tick < 10_000);
        }
        let summary = d.messages.iter().find_map(|m| match &m.body {
            ServerBody::Summary { report, counts, .. } => Some(((**report).clone(), *counts)),
            _ => None,
        });
        let (report, counts) = summary.unwrap();
        prop_assert!(counts.balanced(), "{:?}", counts);
        prop_assert_eq!(counts.received, sent + sent.div_ceil(junk_every));
        let Some(Effect::PersistTrial { bundle, .. }) = d.effects.first() else { panic!() };
        prop_assert_eq!(bundle.record.score().unwrap(), report);
        prop_assert_eq!(bundle.record.samples.len(), counts.scored + counts.between);
    }
}

#[test]
fn phase_messages_follow_the_legal_order() {
    let mut d = Driver::new();
    d.hello();
    d.start(&small_config(5));
    d.run_to_summary(5_000);
    d.send(ClientBody::Close {});
    let phases: Vec<PhaseName> = d
        .messages
        .iter()
        .filter_map(|m| match m.body {
            ServerBody::Phase { phase } => Some(phase),
            _ => None,
        })
        .collect();
    assert_eq!(phases, [PhaseName::Briefing, PhaseName::CommandTask, PhaseName::Summary, PhaseName::Closed]);
}
