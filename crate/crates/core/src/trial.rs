//! A complete recorded trial and the batch scorer over it.

use serde::{Deserialize, Serialize};

use crate::command::{batch_score, CommandScore};
use crate::course::CourseSpec;
use crate::covariate::CovariateRecord;
use crate::error::{ConfigError, ScoreError};
use crate::model::{CommandVector, OutcomeReport, Pose, Task, Tolerance, TrajectorySample, TrialConfig};
use crate::schedule::PromptWindow;
use crate::sim::SimParams;
use crate::trajectory::{score_trajectory, TrajectoryScore};

/// One stored input sample. Pose fields are present for trajectory trials only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordedSample {
    pub t: f64,
    pub ux: f64,
    pub uy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<Pose>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment_id: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_bounds: Option<bool>,
}

impl RecordedSample {
    pub fn command(c: &CommandVector) -> Self {
        Self { t: c.t, ux: c.ux, uy: c.uy, pose: None, segment_id: None, in_bounds: None }
    }

    pub fn trajectory(s: &TrajectorySample) -> Self {
        Self {
            t: s.t,
            ux: s.command.ux,
            uy: s.command.uy,
            pose: Some(s.pose),
            segment_id: s.segment_id,
            in_bounds: Some(s.in_bounds),
        }
    }

    pub fn as_command(&self) -> CommandVector {
        CommandVector::new(self.t, self.ux, self.uy)
    }
}

/// Everything needed to re-score a trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub config: TrialConfig,
    /// Empty for trajectory trials.
    pub prompts: Vec<PromptWindow>,
    pub samples: Vec<RecordedSample>,
    #[serde(default)]
    pub covariates: Vec<CovariateRecord>,
}

impl TrialRecord {
    pub fn task(&self) -> Task {
        self.config.task
    }

    pub fn course(&self) -> Result<&CourseSpec, ConfigError> {
        self.config.course.as_ref().ok_or(ConfigError::MissingCourse)
    }

    /// Rebuild the trajectory samples, recomputing speed from the command.
    pub fn trajectory_samples(&self) -> Result<Vec<TrajectorySample>, ScoreError> {
        let params = SimParams::new(self.config.vehicle.clone(), self.config.sample_rate_hz);
        self.samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let pose = s.pose.ok_or(ScoreError::MissingPose(i))?;
                Ok(TrajectorySample {
                    t: s.t,
                    pose,
                    command: s.as_command(),
                    speed: params.speed(s.uy),
                    segment_id: s.segment_id,
                    in_bounds: s.in_bounds.unwrap_or(true),
                })
            })
            .collect()
    }

    /// Batch score.
    pub fn score(&self) -> Result<OutcomeReport, ScoreError> {
        match self.config.task {
            Task::CommandFollowing => {
                let samples: Vec<CommandVector> = self.samples.iter().map(RecordedSample::as_command).collect();
                let score = batch_score(&self.prompts, &samples, &Tolerance::from_config(&self.config))?;
                Ok(command_report(&score))
            }
            Task::TrajectoryFollowing => {
                if self.samples.is_empty() {
                    return Err(ScoreError::NoSamples);
                }
                let course = self.course()?;
                let trace = self.trajectory_samples()?;
                Ok(trajectory_report(&score_trajectory(&trace, course)))
            }
        }
    }
}

pub fn command_report(score: &CommandScore) -> OutcomeReport {
    OutcomeReport {
        t_d: score.t_d,
        r_p: Some(score.r_p),
        t_s: score.t_s,
        a_r: score.a_r,
        a_s: score.a_s,
        prompt_count: score.prompt_count,
        responded_count: score.responded_count,
        settled_count: score.settled_count,
        per_prompt: score.per_prompt.iter().map(|e| e.summary()).collect(),
        ..OutcomeReport::empty(Task::CommandFollowing)
    }
}

pub fn trajectory_report(score: &TrajectoryScore) -> OutcomeReport {
    OutcomeReport {
        s: score.s,
        v_avg: score.v_avg,
        t_ob: score.t_ob,
        per_segment: score.per_segment.clone(),
        ..OutcomeReport::empty(Task::TrajectoryFollowing)
    }
}
