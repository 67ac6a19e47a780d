//! Domain types shared by every part of the engine.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::course::CourseSpec;
use crate::error::ConfigError;
use crate::geom::{wrap_angle, Vec2};
use crate::sim::VehicleConfig;

pub const CONFIG_VERSION: u32 = 1;

/// One timestamped two-axis command sample.
///
/// `t` is seconds on the clock of whoever owns the stream (trial clock for
/// stored samples, prompt-relative inside a [`PromptEvent`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommandVector {
    pub t: f64,
    pub ux: f64,
    pub uy: f64,
}

impl CommandVector {
    pub const fn new(t: f64, ux: f64, uy: f64) -> Self {
        Self { t, ux, uy }
    }

    pub fn magnitude(&self) -> f64 {
        self.ux.hypot(self.uy)
    }

    pub fn as_vec(&self) -> Vec2 {
        Vec2::new(self.ux, self.uy)
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.ux.is_finite() && self.uy.is_finite()
    }
}

/// Raw input that cannot be turned into a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("non-finite input component")]
pub struct RejectedInput;

/// Clamp a raw two-axis reading into the unit disk and apply the deadzone.
///
/// Returns `(0, 0)` when the clamped magnitude is below `deadzone`.
pub fn normalize_input(raw_ux: f64, raw_uy: f64, deadzone: f64) -> Result<(f64, f64), RejectedInput> {
    if !raw_ux.is_finite() || !raw_uy.is_finite() {
        return Err(RejectedInput);
    }
    let ux = raw_ux.clamp(-1.0, 1.0);
    let uy = raw_uy.clamp(-1.0, 1.0);
    let mag = ux.hypot(uy);
    if mag < deadzone || mag == 0.0 {
        return Ok((0.0, 0.0));
    }
    if mag > 1.0 {
        return Ok((ux / mag, uy / mag));
    }
    Ok((ux, uy))
}

/// A target command shown to the user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    /// 1-based position in the schedule.
    pub m: usize,
    /// Target direction, radians in (-π, π].
    pub theta_hat: f64,
    /// Target magnitude; absent for direction-only trials.
    pub mag_hat: Option<f64>,
    /// How long the prompt stays up, seconds.
    pub duration: f64,
}

impl PromptSpec {
    /// Target as a command vector (magnitude 1 when direction-only).
    pub fn target(&self) -> Vec2 {
        Vec2::from_angle(self.theta_hat) * self.mag_hat.unwrap_or(1.0)
    }
}

/// Angular and magnitude distance between a command and a prompt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandDifference {
    /// Signed smallest angle from the target to the command, |dtheta| ≤ π.
    pub dtheta: f64,
    /// |‖u‖ − mag_hat|, or 0 when magnitudes are not scored.
    pub dmag: f64,
}

/// Compare a command with a prompt.
///
/// Returns `None` when the command has no direction (inside the deadzone).
pub fn command_difference(
    ux: f64,
    uy: f64,
    prompt: &PromptSpec,
    magnitude_enabled: bool,
    deadzone: f64,
) -> Option<CommandDifference> {
    let u = Vec2::new(ux, uy);
    let mag = u.norm();
    if !(mag > 0.0) || mag < deadzone {
        return None;
    }
    let target = Vec2::from_angle(prompt.theta_hat);
    // atan2 of (cross, dot) is the wrapped difference without a separate wrap step
    let dtheta = target.cross(u).atan2(target.dot(u));
    let dmag = match (magnitude_enabled, prompt.mag_hat) {
        (true, Some(m)) => (mag - m).abs(),
        _ => 0.0,
    };
    Some(CommandDifference { dtheta, dmag })
}

/// Within-tolerance predicate and normalized error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub angle: f64,
    /// `Some` when magnitudes are scored.
    pub magnitude: Option<f64>,
    pub deadzone: f64,
}

/// How a single sample compares with the prompt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleEval {
    pub within: bool,
    /// 1 − e, in [0, 1]; 0 for samples with no direction.
    pub accuracy: f64,
}

impl Tolerance {
    pub fn from_config(config: &TrialConfig) -> Self {
        Self {
            angle: config.tolerance_deg.to_radians(),
            magnitude: (!config.magnitude_set.is_empty()).then_some(config.mag_tolerance),
            deadzone: config.deadzone,
        }
    }

    pub fn magnitude_enabled(&self) -> bool {
        self.magnitude.is_some()
    }

    pub fn evaluate(&self, ux: f64, uy: f64, prompt: &PromptSpec) -> SampleEval {
        let Some(diff) = command_difference(ux, uy, prompt, self.magnitude_enabled(), self.deadzone) else {
            return SampleEval { within: false, accuracy: 0.0 };
        };
        let angle_err = diff.dtheta.abs() / PI;
        let (within, err) = match self.magnitude {
            Some(mag_tol) => (diff.dtheta.abs() <= self.angle && diff.dmag <= mag_tol, 0.5 * (angle_err + diff.dmag)),
            None => (diff.dtheta.abs() <= self.angle, angle_err),
        };
        SampleEval { within, accuracy: (1.0 - err).clamp(0.0, 1.0) }
    }
}

/// Samples captured while one prompt was shown, plus its per-prompt scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptEvent {
    pub spec: PromptSpec,
    /// Prompt-relative times in (0, T].
    pub samples: Vec<CommandVector>,
    pub t_first_within: Option<f64>,
    pub t_settled: Option<f64>,
    pub tracked: bool,
    pub initial_accuracy: Option<f64>,
    pub settled_accuracy: Option<f64>,
}

impl PromptEvent {
    pub fn summary(&self) -> PromptSummary {
        PromptSummary {
            m: self.spec.m,
            theta_hat: self.spec.theta_hat,
            mag_hat: self.spec.mag_hat,
            duration: self.spec.duration,
            samples: self.samples.len(),
            t_first_within: self.t_first_within,
            t_settled: self.t_settled,
            tracked: self.tracked,
            initial_accuracy: self.initial_accuracy,
            settled_accuracy: self.settled_accuracy,
        }
    }
}

/// A [`PromptEvent`] without its raw samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSummary {
    pub m: usize,
    pub theta_hat: f64,
    pub mag_hat: Option<f64>,
    pub duration: f64,
    pub samples: usize,
    pub t_first_within: Option<f64>,
    pub t_settled: Option<f64>,
    pub tracked: bool,
    pub initial_accuracy: Option<f64>,
    pub settled_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    CommandFollowing,
    TrajectoryFollowing,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::CommandFollowing => "command_following",
            Task::TrajectoryFollowing => "trajectory_following",
        }
    }
}

impl FromStr for Task {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "command_following" | "command" => Ok(Task::CommandFollowing),
            "trajectory_following" | "trajectory" => Ok(Task::TrajectoryFollowing),
            other => Err(format!("unknown task {other:?}")),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Four cardinal and four inter-cardinal directions, wrapped into (-π, π].
pub fn default_directions() -> Vec<f64> {
    (0..8).map(|k| wrap_angle(k as f64 * PI / 4.0)).collect()
}

/// Every configurable independent variable for one task run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrialConfig {
    pub version: u32,
    pub task: Task,
    /// Target directions, radians.
    pub direction_set: Vec<f64>,
    /// Target magnitudes in (0, 1]; empty for direction-only trials.
    pub magnitude_set: Vec<f64>,
    pub repeats_per_target: u32,
    /// [min, max] prompt duration, seconds.
    pub prompt_duration_range: [f64; 2],
    pub inter_prompt_gap: f64,
    pub tolerance_deg: f64,
    pub mag_tolerance: f64,
    pub deadzone: f64,
    pub sample_rate_hz: f64,
    pub course: Option<CourseSpec>,
    pub vehicle: VehicleConfig,
    /// Trajectory task ends after this many seconds even if the course is unfinished.
    pub trajectory_time_limit: f64,
    pub rng_seed: u64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            task: Task::CommandFollowing,
            direction_set: default_directions(),
            magnitude_set: Vec::new(),
            repeats_per_target: 20,
            prompt_duration_range: [1.0, 2.0],
            inter_prompt_gap: 0.5,
            tolerance_deg: 5.0,
            mag_tolerance: 0.2,
            deadzone: 0.1,
            sample_rate_hz: 50.0,
            course: None,
            vehicle: VehicleConfig::default(),
            trajectory_time_limit: 600.0,
            rng_seed: 0,
        }
    }
}

impl TrialConfig {
    pub fn trajectory(course: CourseSpec) -> Self {
        Self { task: Task::TrajectoryFollowing, course: Some(course), ..Self::default() }
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigParseError> {
        let config: TrialConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != CONFIG_VERSION {
            return Err(ConfigError::UnsupportedVersion(self.version));
        }
        if self.direction_set.is_empty() {
            return Err(ConfigError::EmptyDirectionSet);
        }
        let wrapped: Vec<f64> = self.direction_set.iter().map(|&d| wrap_angle(d)).collect();
        for (i, d) in wrapped.iter().enumerate() {
            if !d.is_finite() || wrapped[..i].iter().any(|e| (e - d).abs() < 1e-12) {
                return Err(ConfigError::BadDirection);
            }
        }
        let positive = |name, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange { name, requirement: "finite and positive", value })
            }
        };
        let nonnegative = |name, value: f64| {
            if value.is_finite() && value >= 0.0 {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange { name, requirement: "finite and nonnegative", value })
            }
        };
        positive("tolerance_deg", self.tolerance_deg)?;
        positive("sample_rate_hz", self.sample_rate_hz)?;
        positive("trajectory_time_limit", self.trajectory_time_limit)?;
        nonnegative("inter_prompt_gap", self.inter_prompt_gap)?;
        nonnegative("mag_tolerance", self.mag_tolerance)?;
        nonnegative("deadzone", self.deadzone)?;
        if self.deadzone >= 1.0 {
            return Err(ConfigError::OutOfRange { name: "deadzone", requirement: "below 1", value: self.deadzone });
        }
        for (i, &m) in self.magnitude_set.iter().enumerate() {
            if !(m > 0.0 && m <= 1.0) || m <= self.deadzone || self.magnitude_set[..i].contains(&m) {
                return Err(ConfigError::BadMagnitude(m));
            }
        }
        if self.repeats_per_target == 0 {
            return Err(ConfigError::ZeroRepeats);
        }
        let [lo, hi] = self.prompt_duration_range;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return Err(ConfigError::BadDurationRange(lo, hi));
        }
        self.vehicle.validate()?;
        match (&self.task, &self.course) {
            (Task::TrajectoryFollowing, None) => return Err(ConfigError::MissingCourse),
            (_, Some(course)) => course.validate(self.vehicle.footprint_radius())?,
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigParseError {
    #[error("config is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] ConfigError),
}

/// Simulated wheelchair state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Radians in (-π, π].
    pub heading: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.heading.is_finite()
    }

    /// Body-frame point expressed in the world frame.
    pub fn to_world(&self, body: Vec2) -> Vec2 {
        self.position() + body.rotated(self.heading)
    }
}

/// One tick of the trajectory task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub pose: Pose,
    pub command: CommandVector,
    /// Speed, m/s; never negative.
    pub speed: f64,
    pub segment_id: Option<usize>,
    pub in_bounds: bool,
}

/// Named outcome measures as they appear in storage and on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Measure {
    #[serde(rename = "t_d")]
    ResponseDelay,
    #[serde(rename = "r_p")]
    ResponsePercent,
    #[serde(rename = "t_s")]
    SettlingTime,
    #[serde(rename = "a_r")]
    InitialAccuracy,
    #[serde(rename = "a_s")]
    SettledAccuracy,
    #[serde(rename = "s")]
    Stability,
    #[serde(rename = "v_avg")]
    AverageSpeed,
    #[serde(rename = "t_ob")]
    OutOfBounds,
    #[serde(rename = "prompt_count")]
    PromptCount,
    #[serde(rename = "responded_count")]
    RespondedCount,
    #[serde(rename = "settled_count")]
    SettledCount,
}

impl Measure {
    pub const ALL: [Measure; 11] = [
        Measure::ResponseDelay,
        Measure::ResponsePercent,
        Measure::SettlingTime,
        Measure::InitialAccuracy,
        Measure::SettledAccuracy,
        Measure::Stability,
        Measure::AverageSpeed,
        Measure::OutOfBounds,
        Measure::PromptCount,
        Measure::RespondedCount,
        Measure::SettledCount,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::ResponseDelay => "t_d",
            Measure::ResponsePercent => "r_p",
            Measure::SettlingTime => "t_s",
            Measure::InitialAccuracy => "a_r",
            Measure::SettledAccuracy => "a_s",
            Measure::Stability => "s",
            Measure::AverageSpeed => "v_avg",
            Measure::OutOfBounds => "t_ob",
            Measure::PromptCount => "prompt_count",
            Measure::RespondedCount => "responded_count",
            Measure::SettledCount => "settled_count",
        }
    }

    /// Measures reported for a task, in report order.
    pub fn for_task(task: Task) -> &'static [Measure] {
        match task {
            Task::CommandFollowing => &Measure::ALL[..5],
            Task::TrajectoryFollowing => &Measure::ALL[5..8],
        }
    }

    pub fn counts_for_task(task: Task) -> &'static [Measure] {
        match task {
            Task::CommandFollowing => &Measure::ALL[8..],
            Task::TrajectoryFollowing => &[],
        }
    }
}

impl FromStr for Measure {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Measure::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown measure {s:?}"))
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-segment speed and smoothness for the trajectory task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRow {
    pub segment_id: usize,
    pub kind: crate::course::SegmentKind,
    /// Nominal segment length, meters (0 for turn-in-place zones).
    pub length: f64,
    pub samples: usize,
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    /// length / (t_end − t_start); absent for turns and untraversed segments.
    pub v: Option<f64>,
    pub s: Option<f64>,
    pub traversed: bool,
    /// Set when the row is excluded from the speed average.
    pub note: Option<String>,
}

/// The full set of outcome measures for one trial.
///
/// Measures that do not apply to the trial's task, or that are undefined
/// (no tracked prompt, too few samples), are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeReport {
    pub task: Task,
    pub t_d: Option<f64>,
    pub r_p: Option<f64>,
    pub t_s: Option<f64>,
    pub a_r: Option<f64>,
    pub a_s: Option<f64>,
    pub s: Option<f64>,
    pub v_avg: Option<f64>,
    pub t_ob: Option<f64>,
    pub prompt_count: usize,
    pub responded_count: usize,
    pub settled_count: usize,
    pub per_prompt: Vec<PromptSummary>,
    pub per_segment: Vec<SegmentRow>,
}

impl OutcomeReport {
    pub fn empty(task: Task) -> Self {
        Self {
            task,
            t_d: None,
            r_p: None,
            t_s: None,
            a_r: None,
            a_s: None,
            s: None,
            v_avg: None,
            t_ob: None,
            prompt_count: 0,
            responded_count: 0,
            settled_count: 0,
            per_prompt: Vec::new(),
            per_segment: Vec::new(),
        }
    }

    pub fn get(&self, measure: Measure) -> Option<f64> {
        match measure {
            Measure::ResponseDelay => self.t_d,
            Measure::ResponsePercent => self.r_p,
            Measure::SettlingTime => self.t_s,
            Measure::InitialAccuracy => self.a_r,
            Measure::SettledAccuracy => self.a_s,
            Measure::Stability => self.s,
            Measure::AverageSpeed => self.v_avg,
            Measure::OutOfBounds => self.t_ob,
            Measure::PromptCount => Some(self.prompt_count as f64),
            Measure::RespondedCount => Some(self.responded_count as f64),
            Measure::SettledCount => Some(self.settled_count as f64),
        }
    }

    /// Every stored measure for this report's task with its value.
    pub fn measures(&self) -> Vec<(Measure, Option<f64>)> {
        Measure::for_task(self.task)
            .iter()
            .chain(Measure::counts_for_task(self.task))
            .map(|&m| (m, self.get(m)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_input(0.0, 0.0, 0.1), Ok((0.0, 0.0)));
        assert_eq!(normalize_input(0.05, 0.0, 0.1), Ok((0.0, 0.0)));
        assert_eq!(normalize_input(2.0, 0.0, 0.1), Ok((1.0, 0.0)));
        assert_eq!(normalize_input(f64::NAN, 0.0, 0.1), Err(RejectedInput));
        assert_eq!(normalize_input(0.0, f64::INFINITY, 0.1), Err(RejectedInput));
        let (x, y) = normalize_input(1.0, 1.0, 0.1).unwrap();
        assert!((x.hypot(y) - 1.0).abs() < 1e-15);
        assert_eq!(x, y);
    }

    #[test]
    fn discrete_axis_values_share_the_path() {
        assert_eq!(normalize_input(0.0, -1.0, 0.1), Ok((0.0, -1.0)));
        assert_eq!(normalize_input(-1.0, 0.0, 0.1), Ok((-1.0, 0.0)));
    }

    fn prompt(theta: f64) -> PromptSpec {
        PromptSpec { m: 1, theta_hat: theta, mag_hat: None, duration: 1.0 }
    }

    #[test]
    fn difference_examples() {
        let d = command_difference(1.0, 0.0, &prompt(0.0), false, 0.1).unwrap();
        assert_eq!(d.dtheta, 0.0);
        let d = command_difference(0.0, 1.0, &prompt(0.0), false, 0.1).unwrap();
        assert!((d.dtheta - PI / 2.0).abs() < 1e-15);
        let d = command_difference(-1.0, -1e-9, &prompt(PI), false, 0.1).unwrap();
        assert!(d.dtheta.abs() < 1e-8, "{}", d.dtheta);
        assert!(command_difference(0.0, 0.0, &prompt(0.0), false, 0.1).is_none());
        assert!(command_difference(0.05, 0.0, &prompt(0.0), false, 0.1).is_none());
    }

    #[test]
    fn magnitude_difference_only_when_enabled() {
        let p = PromptSpec { m: 1, theta_hat: 0.0, mag_hat: Some(0.5), duration: 1.0 };
        assert_eq!(command_difference(0.8, 0.0, &p, false, 0.1).unwrap().dmag, 0.0);
        assert!((command_difference(0.8, 0.0, &p, true, 0.1).unwrap().dmag - 0.3).abs() < 1e-15);
    }

    #[test]
    fn tolerance_is_conjunctive() {
        let p = PromptSpec { m: 1, theta_hat: 0.0, mag_hat: Some(0.5), duration: 1.0 };
        let tol = Tolerance { angle: 5f64.to_radians(), magnitude: Some(0.2), deadzone: 0.1 };
        assert!(tol.evaluate(0.5, 0.0, &p).within);
        assert!(!tol.evaluate(0.9, 0.0, &p).within);
        let off = Vec2::from_angle(6f64.to_radians()) * 0.5;
        assert!(!tol.evaluate(off.x, off.y, &p).within);
        let exact = tol.evaluate(0.5, 0.0, &p);
        assert_eq!(exact.accuracy, 1.0);
        let zero = tol.evaluate(0.0, 0.0, &p);
        assert!(!zero.within);
    }

    #[test]
    fn default_config_is_valid() {
        let c = TrialConfig::default();
        c.validate().unwrap();
        assert_eq!(c.direction_set.len(), 8);
        assert_eq!(c.repeats_per_target, 20);
        assert_eq!(c.prompt_duration_range, [1.0, 2.0]);
    }

    #[test]
    fn config_rejects_bad_values() {
        let mut c = TrialConfig::default();
        c.direction_set.clear();
        assert_eq!(c.validate(), Err(ConfigError::EmptyDirectionSet));
        let c = TrialConfig { magnitude_set: vec![0.05], ..TrialConfig::default() };
        assert_eq!(c.validate(), Err(ConfigError::BadMagnitude(0.05)));
        let c = TrialConfig { prompt_duration_range: [2.0, 1.0], ..TrialConfig::default() };
        assert!(matches!(c.validate(), Err(ConfigError::BadDurationRange(..))));
        let c = TrialConfig { repeats_per_target: 0, ..TrialConfig::default() };
        assert_eq!(c.validate(), Err(ConfigError::ZeroRepeats));
        let c = TrialConfig { task: Task::TrajectoryFollowing, ..TrialConfig::default() };
        assert_eq!(c.validate(), Err(ConfigError::MissingCourse));
        let c = TrialConfig { direction_set: vec![0.0, 2.0 * PI], ..TrialConfig::default() };
        assert_eq!(c.validate(), Err(ConfigError::BadDirection));
    }

    #[test]
    fn config_json_fills_defaults() {
        let c = TrialConfig::from_json(r#"{"repeats_per_target": 3, "rng_seed": 9}"#).unwrap();
        assert_eq!(c.repeats_per_target, 3);
        assert_eq!(c.rng_seed, 9);
        assert_eq!(c.tolerance_deg, 5.0);
        assert!(TrialConfig::from_json(r#"{"version": 7}"#).is_err());
        assert!(TrialConfig::from_json("[").is_err());
    }

    #[test]
    fn measure_names_round_trip() {
        for m in Measure::ALL {
            assert_eq!(m.name().parse::<Measure>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
        }
        assert!("speed".parse::<Measure>().is_err());
    }
}
