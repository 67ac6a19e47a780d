//! JSON-lines raw trial format.
//!
//! Each trial starts with a `trial` record followed by its `prompt`,
//! `sample`, and `covariate` records:
//!
//! ```text
//! {"kind":"trial","trial_id":3,"user":"p01","config":{...}}
//! {"kind":"prompt","m":1,"theta_hat":0.0,"mag_hat":null,"duration":1.4,"onset":0.0}
//! {"kind":"sample","t":0.02,"ux":0.0,"uy":0.0}
//! ```

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::covariate::CovariateRecord;
use crate::model::{PromptSpec, TrialConfig};
use crate::schedule::PromptWindow;
use crate::trial::{RecordedSample, TrialRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RawLine {
    Trial {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trial_id: Option<i64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        user: Option<String>,
        config: Box<TrialConfig>,
    },
    Prompt {
        m: usize,
        theta_hat: f64,
        mag_hat: Option<f64>,
        duration: f64,
        onset: f64,
    },
    Sample(RecordedSample),
    Covariate(CovariateRecord),
}

/// A trial read from a raw log, with the identifiers it was exported under.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTrial {
    pub trial_id: Option<i64>,
    pub user: Option<String>,
    pub record: TrialRecord,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct RawLogError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> RawLogError {
    RawLogError { line, message: message.into() }
}

/// Parse a raw log. Line numbers in errors are 1-based.
pub fn parse(text: &str) -> Result<Vec<RawTrial>, RawLogError> {
    let mut trials: Vec<RawTrial> = Vec::new();
    let mut last_line = 0;
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        last_line = n;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: RawLine = serde_json::from_str(line).map_err(|e| err(n, e.to_string()))?;
        if let RawLine::Trial { trial_id, user, config } = parsed {
            config.validate().map_err(|e| err(n, e.to_string()))?;
            trials.push(RawTrial {
                trial_id,
                user,
                record: TrialRecord {
                    config: *config,
                    prompts: Vec::new(),
                    samples: Vec::new(),
                    covariates: Vec::new(),
                },
            });
            continue;
        }
        let Some(current) = trials.last_mut() else {
            return Err(err(n, "record before any trial header"));
        };
        let rec = &mut current.record;
        match parsed {
            RawLine::Prompt { m, theta_hat, mag_hat, duration, onset } => {
                if m != rec.prompts.len() + 1 {
                    return Err(err(n, format!("prompt {m} out of sequence")));
                }
                if !(theta_hat.is_finite() && duration.is_finite() && duration > 0.0 && onset.is_finite())
                    || mag_hat.is_some_and(|v| !v.is_finite())
                {
                    return Err(err(n, "prompt fields must be finite with positive duration"));
                }
                if rec.prompts.last().is_some_and(|p| onset < p.deadline()) {
                    return Err(err(n, "prompt overlaps the previous one"));
                }
                rec.prompts.push(PromptWindow { spec: PromptSpec { m, theta_hat, mag_hat, duration }, onset });
            }
            RawLine::Sample(s) => {
                let finite =
                    s.t.is_finite() && s.ux.is_finite() && s.uy.is_finite() && s.pose.is_none_or(|p| p.is_finite());
                if !finite {
                    return Err(err(n, "sample fields must be finite"));
                }
                if rec.samples.last().is_some_and(|p| s.t < p.t) {
                    return Err(err(n, "sample timestamp goes backwards"));
                }
                rec.samples.push(s);
            }
            RawLine::Covariate(c) => {
                c.verify().map_err(|e| err(n, e.to_string()))?;
                rec.covariates.push(c);
            }
            RawLine::Trial { .. } => unreachable!(),
        }
    }
    if trials.is_empty() {
        return Err(err(last_line.max(1), "no trial records"));
    }
    Ok(trials)
}

/// Write one trial in raw-log form.
pub fn write_trial(out: &mut String, trial_id: Option<i64>, user: Option<&str>, record: &TrialRecord) {
    let mut line = |value: &RawLine| {
        let _ = writeln!(out, "{}", serde_json::to_string(value).expect("raw line serializes"));
    };
    line(&RawLine::Trial { trial_id, user: user.map(str::to_owned), config: Box::new(record.config.clone()) });
    for w in &record.prompts {
        line(&RawLine::Prompt {
            m: w.spec.m,
            theta_hat: w.spec.theta_hat,
            mag_hat: w.spec.mag_hat,
            duration: w.spec.duration,
            onset: w.onset,
        });
    }
    for s in &record.samples {
        line(&RawLine::Sample(*s));
    }
    for c in &record.covariates {
        line(&RawLine::Covariate(c.clone()));
    }
}
