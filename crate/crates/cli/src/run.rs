use std::io::{Read, Write};
use std::path::Path;

use assess_core::course::{annotate_trace, default_curved, default_square};
use assess_core::operator::{drive, respond, OperatorModel};
use assess_core::{
    build_schedule, rawlog, run_trace, OutcomeReport, RecordedSample, SimParams, Task, TrialConfig, TrialRecord,
};
use assess_service::{ServiceConfig, SessionOptions};
use assess_store::{outcomes_match, Store, TrialBundle, TrialStatus};
use chrono::{DateTime, Utc};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::{pretty, Command, CourseArg, FormatArg, TaskArg};

#[derive(Serialize)]
struct ScoreLine<'a> {
    trial_id: Option<i64>,
    user: Option<&'a str>,
    report: &'a OutcomeReport,
}

fn emit(trial_id: Option<i64>, user: Option<&str>, report: &OutcomeReport, show: bool) -> Result<()> {
    let line = serde_json::to_string(&ScoreLine { trial_id, user, report })
        .map_err(|e| CliError::Domain(format!("report does not serialize: {e}")))?;
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{line}").map_err(|e| CliError::Env(format!("stdout: {e}")))?;
    if show {
        let label = match (trial_id, user) {
            (Some(id), Some(u)) => format!("trial {id}, {u}"),
            (Some(id), None) => format!("trial {id}"),
            (None, Some(u)) => u.to_owned(),
            (None, None) => "trial".to_owned(),
        };
        eprint!("{}", pretty::report_table(&label, report));
    }
    Ok(())
}

/// Open a store that must already exist.
fn open_existing(path: &Path) -> Result<Store> {
    if !path.is_file() {
        return Err(CliError::Env(format!("store {} not found", path.display())));
    }
    Ok(Store::open(path)?)
}

fn open_or_create(path: &Path) -> Result<Store> {
    Store::open(path).map_err(|e| CliError::Env(format!("cannot open store {}: {e}", path.display())))
}

fn read_config(path: &Path) -> Result<TrialConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Env(format!("{}: {e}", path.display())))?;
    TrialConfig::from_json(&text).map_err(|e| CliError::Env(format!("{}: {e}", path.display())))
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Serve { port, host, store, config, time_scale } => {
            serve(port, &host, &store, config.as_deref(), time_scale)
        }
        Command::Score { trial, store, input, pretty } => match (trial, store, input) {
            (Some(id), Some(store), None) => score_stored(&open_existing(&store)?, id, pretty),
            (None, None, Some(input)) => score_log(&input, pretty),
            _ => Err(CliError::Env("give either --trial with --store, or --input".into())),
        },
        Command::Synth {
            task,
            course,
            config,
            delay,
            angular_noise,
            magnitude_noise,
            settle_jitter,
            lapse_rate,
            seed,
            schedule_seed,
            rate,
            store,
            user,
            started_at,
            pretty,
        } => {
            let model = OperatorModel {
                reaction_delay: delay,
                angular_noise_sd: angular_noise,
                magnitude_noise_sd: magnitude_noise,
                settle_jitter,
                lapse_rate,
                seed,
            };
            model.validate().map_err(|e| CliError::Env(e.to_string()))?;
            let mut cfg = match config {
                Some(path) => read_config(&path)?,
                None => TrialConfig::default(),
            };
            cfg.rng_seed = schedule_seed.unwrap_or(seed);
            if let Some(rate) = rate {
                cfg.sample_rate_hz = rate;
            }
            match task {
                TaskArg::Command => cfg.task = Task::CommandFollowing,
                TaskArg::Trajectory => {
                    cfg.task = Task::TrajectoryFollowing;
                    cfg.course = Some(match course {
                        CourseArg::Square => default_square(),
                        CourseArg::Curved => default_curved(),
                    });
                }
            }
            cfg.validate().map_err(|e| CliError::Env(format!("invalid config: {e}")))?;
            let started_at = DateTime::parse_from_rfc3339(&started_at)
                .map_err(|e| CliError::Env(format!("--started-at: {e}")))?
                .with_timezone(&Utc);
            let record = synthesize(cfg, &model)?;
            let report =
                record.score().map_err(|e| CliError::Domain(format!("synthetic trial does not score: {e}")))?;
            let mut store = open_or_create(&store)?;
            let id = store.persist_trial(&TrialBundle {
                id: None,
                user: user.clone(),
                started_at,
                synthetic: true,
                record,
                outcomes: report.clone(),
            })?;
            emit(Some(id), Some(&user), &report, pretty)
        }
        Command::Export { store, user, format, out } => {
            let store = open_existing(&store)?;
            let text = match format {
                FormatArg::Sql => store.export_sql(user.as_deref())?,
                FormatArg::Jsonl => store.export_jsonl(user.as_deref())?,
                FormatArg::CsvSummary => store.export_csv_summary(user.as_deref())?,
            };
            write_out(out.as_deref(), &text)
        }
        Command::Series { store, user, measure } => {
            let store = open_existing(&store)?;
            let series = store.longitudinal_series(&user, &measure)?;
            let mut text = format!("started_at,{measure}\n");
            for (t, v) in series {
                text.push_str(&format!("{},{v:?}\n", t.to_rfc3339_opts(chrono::SecondsFormat::Nanos, true)));
            }
            write_out(None, &text)
        }
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Env(format!("{}: {e}", p.display()))),
        None => std::io::stdout().lock().write_all(text.as_bytes()).map_err(|e| CliError::Env(format!("stdout: {e}"))),
    }
}

fn score_stored(store: &Store, id: i64, show: bool) -> Result<()> {
    let stored = store.load_trial(id)?;
    if stored.info.status == TrialStatus::Aborted {
        return Err(CliError::Domain(format!("trial {id} was aborted and has no outcomes")));
    }
    let report = stored.record.score().map_err(|e| CliError::Domain(format!("trial {id}: {e}")))?;
    if !outcomes_match(&stored.outcomes, &report) {
        return Err(CliError::Domain(format!("trial {id}: stored outcomes differ from a fresh score")));
    }
    emit(Some(id), Some(&stored.info.user), &report, show)
}

fn score_log(input: &Path, show: bool) -> Result<()> {
    let text = if input == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| CliError::Env(format!("stdin: {e}")))?;
        s
    } else {
        std::fs::read_to_string(input).map_err(|e| CliError::Env(format!("{}: {e}", input.display())))?
    };
    let trials = rawlog::parse(&text).map_err(|e| CliError::Domain(format!("{}: {e}", input.display())))?;
    // score everything before printing anything
    let mut reports = Vec::with_capacity(trials.len());
    for (i, t) in trials.iter().enumerate() {
        let label = t.trial_id.map_or_else(|| format!("trial #{}", i + 1), |id| format!("trial {id}"));
        reports.push(t.record.score().map_err(|e| CliError::Domain(format!("{label}: {e}")))?);
    }
    for (t, report) in trials.iter().zip(&reports) {
        emit(t.trial_id, t.user.as_deref(), report, show)?;
    }
    Ok(())
}

fn synthesize(cfg: TrialConfig, model: &OperatorModel) -> Result<TrialRecord> {
    match cfg.task {
        Task::CommandFollowing => {
            let schedule = build_schedule(&cfg).map_err(|e| CliError::Env(e.to_string()))?;
            let windows = schedule.windows(cfg.inter_prompt_gap);
            let response = respond(&windows, cfg.inter_prompt_gap, model, cfg.sample_rate_hz);
            let samples = response.samples.iter().map(RecordedSample::command).collect();
            Ok(TrialRecord { config: cfg, prompts: windows, samples, covariates: Vec::new() })
        }
        Task::TrajectoryFollowing => {
            let course =
                cfg.course.clone().ok_or_else(|| CliError::Env("trajectory config without a course".into()))?;
            let params = SimParams::new(cfg.vehicle.clone(), cfg.sample_rate_hz);
            let commands = drive(&course, model, &params, cfg.deadzone);
            let mut trace = run_trace(course.start_pose(), &commands, &params);
            annotate_trace(&mut trace, &course, &cfg.vehicle.footprint);
            let samples = trace.iter().map(RecordedSample::trajectory).collect();
            Ok(TrialRecord { config: cfg, prompts: Vec::new(), samples, covariates: Vec::new() })
        }
    }
}

fn serve(port: u16, host: &str, store_path: &Path, config: Option<&Path>, time_scale: f64) -> Result<()> {
    if !(time_scale.is_finite() && time_scale > 0.0) {
        return Err(CliError::Env("--time-scale must be positive".into()));
    }
    let default_config = match config {
        Some(path) => read_config(path)?,
        None => TrialConfig::default(),
    };
    let store = open_or_create(store_path)?;
    let _ = tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .try_init();
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Env(format!("runtime: {e}")))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .map_err(|e| CliError::Env(format!("cannot listen on {host}:{port}: {e}")))?;
        let addr = listener.local_addr().map_err(|e| CliError::Env(e.to_string()))?;
        {
            let mut stdout = std::io::stdout().lock();
            let _ = writeln!(stdout, "listening on ws://{addr}");
            let _ = stdout.flush();
        }
        let config =
            ServiceConfig { options: SessionOptions { default_config, ..SessionOptions::default() }, time_scale };
        assess_service::serve(listener, store, config, shutdown_signal())
            .await
            .map_err(|e| CliError::Env(format!("service: {e}")))
    })
}

async fn shutdown_signal() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        let mut term = match signal(SignalKind::terminate()) {
            Ok(s) => s,
            Err(_) => {
                let _ = tokio::signal::ctrl_c().await;
                return;
            }
        };
        tokio::select! {
            _ = tokio::signal::ctrl_c() => {}
            _ = term.recv() => {}
        }
    }
    #[cfg(not(unix))]
    {
        let _ = tokio::signal::ctrl_c().await;
    }
}
