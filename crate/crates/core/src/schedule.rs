//! Balanced, seeded prompt sequences for the command following task.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::geom::wrap_angle;
use crate::model::{PromptSpec, TrialConfig};

/// One cell of the target grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub theta_hat: f64,
    pub mag_hat: Option<f64>,
}

/// Directions crossed with magnitudes (or directions alone).
pub fn target_grid(config: &TrialConfig) -> Vec<Target> {
    let directions = config.direction_set.iter().map(|&d| wrap_angle(d));
    if config.magnitude_set.is_empty() {
        directions.map(|theta_hat| Target { theta_hat, mag_hat: None }).collect()
    } else {
        directions
            .flat_map(|theta_hat| config.magnitude_set.iter().map(move |&m| Target { theta_hat, mag_hat: Some(m) }))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub prompts: Vec<PromptSpec>,
    pub total_duration_estimate: f64,
}

/// A prompt placed on the trial clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PromptWindow {
    pub spec: PromptSpec,
    /// Trial time at which the prompt appears; its window is (onset, onset + T].
    pub onset: f64,
}

impl PromptWindow {
    pub fn deadline(&self) -> f64 {
        self.onset + self.spec.duration
    }

    /// Time since onset.
    pub fn relative(&self, t: f64) -> f64 {
        t - self.onset
    }

    pub fn contains_relative(&self, rel: f64) -> bool {
        rel > 0.0 && rel <= self.spec.duration
    }

    pub fn has_passed(&self, t: f64) -> bool {
        self.relative(t) > self.spec.duration
    }
}

impl Schedule {
    pub fn len(&self) -> usize {
        self.prompts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prompts.is_empty()
    }

    /// Lay the prompts out back to back with `gap` seconds after each one.
    pub fn windows(&self, gap: f64) -> Vec<PromptWindow> {
        let mut onset = 0.0;
        self.prompts
            .iter()
            .map(|spec| {
                let w = PromptWindow { spec: *spec, onset };
                onset += spec.duration + gap;
                w
            })
            .collect()
    }
}

/// Block-randomized schedule: each block is one shuffled copy of the target grid.
pub fn build_schedule(config: &TrialConfig) -> Result<Schedule, ConfigError> {
    if config.direction_set.is_empty() {
        return Err(ConfigError::EmptyDirectionSet);
    }
    config.validate()?;
    let grid = target_grid(config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let [lo, hi] = config.prompt_duration_range;
    let mut order: Vec<Target> = Vec::with_capacity(grid.len() * config.repeats_per_target as usize);
    for _ in 0..config.repeats_per_target {
        let mut block = grid.clone();
        block.shuffle(&mut rng);
        if let Some(prev) = order.last() {
            if block.len() > 1 && block[0] == *prev {
                let j = rng.random_range(1..block.len());
                block.swap(0, j);
            }
        }
        order.extend(block);
    }
    let prompts: Vec<PromptSpec> = order
        .into_iter()
        .enumerate()
        .map(|(i, target)| PromptSpec {
            m: i + 1,
            theta_hat: target.theta_hat,
            mag_hat: target.mag_hat,
            duration: if lo == hi { lo } else { rng.random_range(lo..=hi) },
        })
        .collect();
    let mut schedule = Schedule { prompts, total_duration_estimate: 0.0 };
    schedule.total_duration_estimate = estimate_session_length(&schedule, config.inter_prompt_gap);
    Ok(schedule)
}

/// Sum of prompt durations plus one gap per prompt.
pub fn estimate_session_length(schedule: &Schedule, gap: f64) -> f64 {
    schedule.prompts.iter().map(|p| p.duration + gap).sum()
}
