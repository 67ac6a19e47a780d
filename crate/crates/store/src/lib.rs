//! Trial storage on an embedded SQLite file.
//!
//! A trial is written in one transaction together with its prompts, samples,
//! covariates, and outcome rows, so readers never see half a trial. Stored
//! outcomes are checked against a fresh batch score on the way in, which makes
//! load → re-score reproduce them bit for bit.

mod export;
pub mod schema;

use std::path::Path;
use std::str::FromStr;

use assess_core::covariate::{CovariateRecord, InstrumentId};
use assess_core::model::{Measure, OutcomeReport, Pose, PromptSpec, Task, TrialConfig};
use assess_core::schedule::PromptWindow;
use assess_core::trial::{RecordedSample, TrialRecord};
use chrono::{DateTime, SecondsFormat, Utc};
use rusqlite::{params, Connection, OptionalExtension, Transaction};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("sqlite: {0}")]
    Sql(#[from] rusqlite::Error),
    #[error("unknown user {0:?}")]
    UnknownUser(String),
    #[error("unknown trial {0}")]
    UnknownTrial(i64),
    #[error("unknown measure {0:?}")]
    UnknownMeasure(String),
    #[error("trial {0} already exists")]
    Duplicate(i64),
    #[error("rejected bundle: {0}")]
    Rejected(String),
    #[error("stored data is corrupt: {0}")]
    Corrupt(String),
    #[error("store schema version {0} is newer than this build supports")]
    SchemaVersion(i32),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, StoreError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialStatus {
    Complete,
    Aborted,
}

impl TrialStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialStatus::Complete => "complete",
            TrialStatus::Aborted => "aborted",
        }
    }
}

impl FromStr for TrialStatus {
    type Err = StoreError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complete" => Ok(TrialStatus::Complete),
            "aborted" => Ok(TrialStatus::Aborted),
            other => Err(StoreError::Corrupt(format!("trial status {other:?}"))),
        }
    }
}

/// A finished trial ready to be written.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialBundle {
    /// Explicit id, or `None` to let the store assign one.
    pub id: Option<i64>,
    pub user: String,
    pub started_at: DateTime<Utc>,
    pub synthetic: bool,
    pub record: TrialRecord,
    pub outcomes: OutcomeReport,
}

/// Header row of a stored trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialInfo {
    pub id: i64,
    pub user: String,
    pub task: Task,
    pub started_at: DateTime<Utc>,
    pub status: TrialStatus,
    pub synthetic: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRow {
    pub measure: Measure,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredTrial {
    pub info: TrialInfo,
    pub record: TrialRecord,
    /// Empty for aborted trials.
    pub outcomes: Vec<OutcomeRow>,
}

pub(crate) fn format_time(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Nanos, true)
}

pub(crate) fn parse_time(s: &str) -> Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| StoreError::Corrupt(format!("timestamp {s:?}: {e}")))
}

/// Compare outcome values bit for bit; `None` only matches `None`.
pub fn outcomes_match(rows: &[OutcomeRow], report: &OutcomeReport) -> bool {
    let expected = report.measures();
    rows.len() == expected.len()
        && rows
            .iter()
            .zip(&expected)
            .all(|(row, (m, v))| row.measure == *m && row.value.map(f64::to_bits) == v.map(f64::to_bits))
}

pub struct Store {
    conn: Connection,
}

impl Store {
    /// Open or create a store file.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Self::init(Connection::open(path)?)
    }

    pub fn open_in_memory() -> Result<Self> {
        Self::init(Connection::open_in_memory()?)
    }

    /// Wrap an existing connection, creating any missing tables.
    pub fn from_connection(conn: Connection) -> Result<Self> {
        Self::init(conn)
    }

    fn init(conn: Connection) -> Result<Self> {
        conn.pragma_update(None, "foreign_keys", true)?;
        let version: i32 = conn.pragma_query_value(None, "user_version", |r| r.get(0))?;
        if version > schema::SCHEMA_VERSION {
            return Err(StoreError::SchemaVersion(version));
        }
        conn.execute_batch(&schema::init_sql())?;
        conn.pragma_update(None, "user_version", schema::SCHEMA_VERSION)?;
        Ok(Self { conn })
    }

    pub fn connection(&self) -> &Connection {
        &self.conn
    }

    pub fn user_id(&self, label: &str) -> Result<Option<i64>> {
        Ok(self.conn.query_row("SELECT id FROM users WHERE label = ?1", [label], |r| r.get(0)).optional()?)
    }

    fn require_user(&self, label: &str) -> Result<i64> {
        self.user_id(label)?.ok_or_else(|| StoreError::UnknownUser(label.to_owned()))
    }

    /// Id of `label`, creating the profile if needed.
    pub fn ensure_user(&mut self, label: &str) -> Result<i64> {
        let tx = self.conn.transaction()?;
        let id = ensure_user_tx(&tx, label)?;
        tx.commit()?;
        Ok(id)
    }

    /// (id, label, created_at) for every user, by id.
    pub fn users(&self) -> Result<Vec<(i64, String, DateTime<Utc>)>> {
        let mut stmt = self.conn.prepare("SELECT id, label, created_at FROM users ORDER BY id")?;
        let rows = stmt.query_map([], |r| Ok((r.get(0)?, r.get(1)?, r.get::<_, String>(2)?)))?;
        rows.map(|row| {
            let (id, label, created) = row?;
            Ok((id, label, parse_time(&created)?))
        })
        .collect()
    }

    /// Write a complete trial. The outcomes must equal a fresh batch score of
    /// the record.
    pub fn persist_trial(&mut self, bundle: &TrialBundle) -> Result<i64> {
        check_record(&bundle.record, false)?;
        if bundle.outcomes.task != bundle.record.task() {
            return Err(StoreError::Rejected("outcome report is for a different task".into()));
        }
        let rescored =
            bundle.record.score().map_err(|e| StoreError::Rejected(format!("record does not score: {e}")))?;
        let rows: Vec<OutcomeRow> =
            bundle.outcomes.measures().into_iter().map(|(measure, value)| OutcomeRow { measure, value }).collect();
        if !outcomes_match(&rows, &rescored) {
            return Err(StoreError::Rejected("outcomes differ from a batch score of the samples".into()));
        }

        let tx = self.conn.transaction()?;
        let id = insert_trial(
            &tx,
            bundle.id,
            &bundle.user,
            &bundle.started_at,
            TrialStatus::Complete,
            bundle.synthetic,
            &bundle.record,
        )?;
        for row in &rows {
            tx.execute(
                "INSERT INTO outcomes (trial_id, measure_name, value, defined_flag) VALUES (?1, ?2, ?3, ?4)",
                params![id, row.measure.name(), row.value, row.value.is_some()],
            )?;
        }
        tx.commit()?;
        Ok(id)
    }

    /// Write an incomplete trial with whatever was recorded; no outcome rows.
    pub fn record_aborted(
        &mut self,
        user: &str,
        started_at: &DateTime<Utc>,
        synthetic: bool,
        record: &TrialRecord,
    ) -> Result<i64> {
        check_record(record, true)?;
        let tx = self.conn.transaction()?;
        let id = insert_trial(&tx, None, user, started_at, TrialStatus::Aborted, synthetic, record)?;
        tx.commit()?;
        Ok(id)
    }

    /// Append questionnaire results to an existing trial.
    pub fn add_covariates(&mut self, trial_id: i64, records: &[CovariateRecord]) -> Result<()> {
        for c in records {
            c.verify().map_err(|e| StoreError::Rejected(e.to_string()))?;
        }
        let tx = self.conn.transaction()?;
        let exists: Option<i64> =
            tx.query_row("SELECT id FROM trials WHERE id = ?1", [trial_id], |r| r.get(0)).optional()?;
        if exists.is_none() {
            return Err(StoreError::UnknownTrial(trial_id));
        }
        let next: i64 =
            tx.query_row("SELECT COALESCE(MAX(seq) + 1, 0) FROM covariates WHERE trial_id = ?1", [trial_id], |r| {
                r.get(0)
            })?;
        insert_covariates(&tx, trial_id, next, records)?;
        tx.commit()?;
        Ok(())
    }

    pub fn trial_info(&self, id: i64) -> Result<TrialInfo> {
        self.conn
            .query_row(
                "SELECT t.id, u.label, t.task, t.started_at, t.status, t.synthetic
                 FROM trials t JOIN users u ON u.id = t.user_id WHERE t.id = ?1",
                [id],
                info_columns,
            )
            .optional()?
            .ok_or(StoreError::UnknownTrial(id))?
    }

    /// Trials of one user (or everyone), oldest first.
    pub fn trials(&self, user: Option<&str>) -> Result<Vec<TrialInfo>> {
        let user_id = user.map(|u| self.require_user(u)).transpose()?;
        let mut stmt = self.conn.prepare(
            "SELECT t.id, u.label, t.task, t.started_at, t.status, t.synthetic
             FROM trials t JOIN users u ON u.id = t.user_id
             WHERE ?1 IS NULL OR t.user_id = ?1
             ORDER BY t.started_at, t.id",
        )?;
        let rows = stmt.query_map([user_id], info_columns)?;
        rows.map(|r| r?).collect()
    }

    pub fn load_trial(&self, id: i64) -> Result<StoredTrial> {
        let info = self.trial_info(id)?;
        let config_json: String =
            self.conn.query_row("SELECT config_json FROM trials WHERE id = ?1", [id], |r| r.get(0))?;
        let config =
            TrialConfig::from_json(&config_json).map_err(|e| StoreError::Corrupt(format!("trial {id} config: {e}")))?;

        let mut stmt = self
            .conn
            .prepare("SELECT m, theta_hat, mag_hat, t_m, onset FROM prompts WHERE trial_id = ?1 ORDER BY m")?;
        let prompts = stmt
            .query_map([id], |r| {
                Ok(PromptWindow {
                    spec: PromptSpec {
                        m: r.get::<_, i64>(0)? as usize,
                        theta_hat: r.get(1)?,
                        mag_hat: r.get(2)?,
                        duration: r.get(3)?,
                    },
                    onset: r.get(4)?,
                })
            })?
            .collect::<rusqlite::Result<Vec<_>>>()?;

        let mut stmt = self.conn.prepare(
            "SELECT t, ux, uy, pose_x, pose_y, heading, segment_id, in_bounds
             FROM samples WHERE trial_id = ?1 ORDER BY seq",
        )?;
        let samples = stmt
            .query_map([id], |r| {
                let pose = match (r.get::<_, Option<f64>>(3)?, r.get::<_, Option<f64>>(4)?, r.get::<_, Option<f64>>(5)?)
                {
                    (Some(x), Some(y), Some(h)) => Some(Pose::new(x, y, h)),
                    _ => None,
                };
                Ok(RecordedSample {
                    t: r.get(0)?,
                    ux: r.get(1)?,
                    uy: r.get(2)?,
                    pose,
                    segment_id: r.get::<_, Option<i64>>(6)?.map(|s| s as usize),
                    in_bounds: r.get(7)?,
                })
            })?
            .collect::<rusqlite::Result<Vec<_>>>()?;

        let mut stmt = self.conn.prepare(
            "SELECT instrument_id, responses_json, raw_total, administered_at
             FROM covariates WHERE trial_id = ?1 ORDER BY seq",
        )?;
        let raw = stmt
            .query_map([id], |r| {
                Ok((
                    r.get::<_, String>(0)?,
                    r.get::<_, String>(1)?,
                    r.get::<_, Option<f64>>(2)?,
                    r.get::<_, String>(3)?,
                ))
            })?
            .collect::<rusqlite::Result<Vec<_>>>()?;
        let covariates = raw
            .into_iter()
            .map(|(inst, responses, raw_total, at)| {
                Ok(CovariateRecord {
                    instrument_id: InstrumentId::from_str(&inst).map_err(|e| StoreError::Corrupt(e.to_string()))?,
                    responses: serde_json::from_str(&responses)
                        .map_err(|e| StoreError::Corrupt(format!("covariate responses: {e}")))?,
                    raw_total,
                    administered_at: parse_time(&at)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let outcomes = self.outcome_rows(id, info.task)?;
        Ok(StoredTrial { info, record: TrialRecord { config, prompts, samples, covariates }, outcomes })
    }

    /// Outcome rows in report order.
    fn outcome_rows(&self, id: i64, task: Task) -> Result<Vec<OutcomeRow>> {
        let mut stmt = self.conn.prepare("SELECT measure_name, value FROM outcomes WHERE trial_id = ?1")?;
        let mut rows = stmt
            .query_map([id], |r| Ok((r.get::<_, String>(0)?, r.get::<_, Option<f64>>(1)?)))?
            .collect::<rusqlite::Result<Vec<_>>>()?
            .into_iter()
            .map(|(name, value)| {
                let measure = Measure::from_str(&name).map_err(StoreError::Corrupt)?;
                Ok(OutcomeRow { measure, value })
            })
            .collect::<Result<Vec<_>>>()?;
        let order: Vec<Measure> =
            Measure::for_task(task).iter().chain(Measure::counts_for_task(task)).copied().collect();
        rows.sort_by_key(|r| order.iter().position(|m| *m == r.measure).unwrap_or(usize::MAX));
        Ok(rows)
    }

    /// Defined values of one measure across a user's completed trials, oldest first.
    pub fn longitudinal_series(&self, user: &str, measure: &str) -> Result<Vec<(DateTime<Utc>, f64)>> {
        let measure = Measure::from_str(measure).map_err(|_| StoreError::UnknownMeasure(measure.to_owned()))?;
        let user_id = self.require_user(user)?;
        let mut stmt = self.conn.prepare(
            "SELECT t.started_at, o.value FROM outcomes o JOIN trials t ON t.id = o.trial_id
             WHERE t.user_id = ?1 AND o.measure_name = ?2 AND o.defined_flag = 1 AND t.status = 'complete'
             ORDER BY t.started_at, t.id",
        )?;
        let rows = stmt
            .query_map(params![user_id, measure.name()], |r| Ok((r.get::<_, String>(0)?, r.get::<_, f64>(1)?)))?
            .collect::<rusqlite::Result<Vec<_>>>()?;
        rows.into_iter().map(|(t, v)| Ok((parse_time(&t)?, v))).collect()
    }

    pub fn export_sql(&self, user: Option<&str>) -> Result<String> {
        let user_id = user.map(|u| self.require_user(u)).transpose()?;
        export::sql(&self.conn, user_id)
    }

    /// Completed trials in raw JSON-lines form.
    pub fn export_jsonl(&self, user: Option<&str>) -> Result<String> {
        let mut out = String::new();
        for info in self.trials(user)?.into_iter().filter(|t| t.status == TrialStatus::Complete) {
            let stored = self.load_trial(info.id)?;
            assess_core::rawlog::write_trial(&mut out, Some(info.id), Some(&info.user), &stored.record);
        }
        Ok(out)
    }

    /// One row per stored outcome of every completed trial.
    pub fn export_csv_summary(&self, user: Option<&str>) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["user", "trial_id", "started_at", "task", "measure", "value", "defined"])?;
        for info in self.trials(user)?.into_iter().filter(|t| t.status == TrialStatus::Complete) {
            for row in self.outcome_rows(info.id, info.task)? {
                w.write_record([
                    info.user.clone(),
                    info.id.to_string(),
                    format_time(&info.started_at),
                    info.task.to_string(),
                    row.measure.name().to_owned(),
                    row.value.map(|v| format!("{v:?}")).unwrap_or_default(),
                    u8::from(row.value.is_some()).to_string(),
                ])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| StoreError::Corrupt(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| StoreError::Corrupt(e.to_string()))
    }
}

fn info_columns(r: &rusqlite::Row<'_>) -> rusqlite::Result<Result<TrialInfo>> {
    let id: i64 = r.get(0)?;
    let user: String = r.get(1)?;
    let task: String = r.get(2)?;
    let started: String = r.get(3)?;
    let status: String = r.get(4)?;
    let synthetic: bool = r.get(5)?;
    Ok((|| {
        Ok(TrialInfo {
            id,
            user,
            task: Task::from_str(&task).map_err(|_| StoreError::Corrupt(format!("task {task:?}")))?,
            started_at: parse_time(&started)?,
            status: status.parse()?,
            synthetic,
        })
    })())
}

fn check_record(record: &TrialRecord, allow_empty: bool) -> Result<()> {
    record.config.validate().map_err(|e| StoreError::Rejected(e.to_string()))?;
    if record.samples.is_empty() && !allow_empty {
        return Err(StoreError::Rejected("trial has no samples".into()));
    }
    for (i, s) in record.samples.iter().enumerate() {
        let finite = s.t.is_finite() && s.ux.is_finite() && s.uy.is_finite() && s.pose.is_none_or(|p| p.is_finite());
        if !finite {
            return Err(StoreError::Rejected(format!("sample {i} is not finite")));
        }
        if i > 0 && s.t < record.samples[i - 1].t {
            return Err(StoreError::Rejected(format!("sample {i} goes back in time")));
        }
    }
    match record.task() {
        Task::CommandFollowing if record.prompts.is_empty() && !allow_empty => {
            Err(StoreError::Rejected("command trial has no prompts".into()))
        }
        Task::TrajectoryFollowing if record.config.course.is_none() => {
            Err(StoreError::Rejected("trajectory trial has no course".into()))
        }
        Task::TrajectoryFollowing if record.samples.iter().any(|s| s.pose.is_none()) => {
            Err(StoreError::Rejected("trajectory sample without a pose".into()))
        }
        _ => Ok(()),
    }
}

fn ensure_user_tx(tx: &Transaction<'_>, label: &str) -> Result<i64> {
    if let Some(id) = tx.query_row("SELECT id FROM users WHERE label = ?1", [label], |r| r.get(0)).optional()? {
        return Ok(id);
    }
    tx.execute("INSERT INTO users (label, created_at) VALUES (?1, ?2)", params![label, format_time(&Utc::now())])?;
    Ok(tx.last_insert_rowid())
}

fn insert_trial(
    tx: &Transaction<'_>,
    id: Option<i64>,
    user: &str,
    started_at: &DateTime<Utc>,
    status: TrialStatus,
    synthetic: bool,
    record: &TrialRecord,
) -> Result<i64> {
    if let Some(id) = id {
        let taken: Option<i64> = tx.query_row("SELECT id FROM trials WHERE id = ?1", [id], |r| r.get(0)).optional()?;
        if taken.is_some() {
            return Err(StoreError::Duplicate(id));
        }
    }
    let user_id = ensure_user_tx(tx, user)?;
    let config_json = serde_json::to_string(&record.config).map_err(|e| StoreError::Rejected(e.to_string()))?;
    tx.execute(
        "INSERT INTO trials (id, user_id, config_json, task, started_at, seed, status, synthetic)
         VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8)",
        params![
            id,
            user_id,
            config_json,
            record.task().as_str(),
            format_time(started_at),
            // stored as the same 64 bits
            record.config.rng_seed as i64,
            status.as_str(),
            synthetic
        ],
    )?;
    let id = tx.last_insert_rowid();

    let mut stmt = tx
        .prepare("INSERT INTO prompts (trial_id, m, theta_hat, mag_hat, t_m, onset) VALUES (?1, ?2, ?3, ?4, ?5, ?6)")?;
    for w in &record.prompts {
        stmt.execute(params![id, w.spec.m as i64, w.spec.theta_hat, w.spec.mag_hat, w.spec.duration, w.onset])?;
    }
    let mut stmt = tx.prepare(
        "INSERT INTO samples (trial_id, seq, t, ux, uy, pose_x, pose_y, heading, segment_id, in_bounds)
         VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10)",
    )?;
    for (seq, s) in record.samples.iter().enumerate() {
        stmt.execute(params![
            id,
            seq as i64,
            s.t,
            s.ux,
            s.uy,
            s.pose.map(|p| p.x),
            s.pose.map(|p| p.y),
            s.pose.map(|p| p.heading),
            s.segment_id.map(|v| v as i64),
            s.in_bounds
        ])?;
    }
    insert_covariates(tx, id, 0, &record.covariates)?;
    Ok(id)
}

fn insert_covariates(tx: &Transaction<'_>, trial_id: i64, first_seq: i64, records: &[CovariateRecord]) -> Result<()> {
    let mut stmt = tx.prepare(
        "INSERT INTO covariates (trial_id, seq, instrument_id, responses_json, raw_total, administered_at)
         VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
    )?;
    for (i, c) in records.iter().enumerate() {
        let responses = serde_json::to_string(&c.responses).map_err(|e| StoreError::Rejected(e.to_string()))?;
        stmt.execute(params![
            trial_id,
            first_seq + i as i64,
            c.instrument_id.as_str(),
            responses,
            c.raw_total,
            format_time(&c.administered_at)
        ])?;
    }
    Ok(())
}
