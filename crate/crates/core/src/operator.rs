//! Synthetic responders used for closed-loop tests and demo sessions.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::course::{CourseSpec, Geometry, Travel};
use crate::geom::{wrap_angle, Vec2};
use crate::model::{normalize_input, CommandVector, Pose};
use crate::schedule::PromptWindow;
use crate::sim::{step, SimParams};

/// Angular offset used while the response is still wobbling (well outside any sensible tolerance).
pub const JITTER_OFFSET: f64 = 20.0 * PI / 180.0;
/// Fraction of full deflection the driver uses on lines and arcs.
pub const DRIVE_SPEED: f64 = 0.6;
/// Correlation time of the driver's steering noise, seconds.
pub const DRIVE_NOISE_TAU: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OperatorModel {
    pub reaction_delay: f64,
    pub angular_noise_sd: f64,
    pub magnitude_noise_sd: f64,
    /// After reacting, alternate on/off target for this long before holding steady.
    pub settle_jitter: f64,
    pub lapse_rate: f64,
    pub seed: u64,
}

impl Default for OperatorModel {
    fn default() -> Self {
        Self {
            reaction_delay: 0.3,
            angular_noise_sd: 0.0,
            magnitude_noise_sd: 0.0,
            settle_jitter: 0.0,
            lapse_rate: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("operator parameter {0} is out of range")]
pub struct OperatorError(pub &'static str);

impl OperatorModel {
    pub fn validate(&self) -> Result<(), OperatorError> {
        let fields = [
            ("reaction_delay", self.reaction_delay),
            ("angular_noise_sd", self.angular_noise_sd),
            ("magnitude_noise_sd", self.magnitude_noise_sd),
            ("settle_jitter", self.settle_jitter),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(OperatorError(name));
            }
        }
        if !(0.0..=1.0).contains(&self.lapse_rate) {
            return Err(OperatorError("lapse_rate"));
        }
        Ok(())
    }
}

/// Command stream for the command following task plus the realized lapses.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticResponse {
    /// Trial-clock samples at the requested rate.
    pub samples: Vec<CommandVector>,
    /// One flag per prompt: true when the operator ignored it.
    pub lapsed: Vec<bool>,
}

/// Respond to a laid-out schedule at `rate` Hz.
///
/// Output is zero before the reaction delay and for lapsed prompts, then the
/// target (plus noise) until the prompt ends.
pub fn respond(windows: &[PromptWindow], gap: f64, model: &OperatorModel, rate: f64) -> SyntheticResponse {
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let lapsed: Vec<bool> = windows.iter().map(|_| rng.random::<f64>() < model.lapse_rate).collect();
    let angle_noise = Normal::new(0.0, model.angular_noise_sd).ok();
    let mag_noise = Normal::new(0.0, model.magnitude_noise_sd).ok();

    let end = windows.last().map_or(0.0, |w| w.deadline() + gap);
    let mut samples = Vec::new();
    let mut idx = 0;
    let mut k = 1u64;
    loop {
        let t = k as f64 / rate;
        if t > end {
            break;
        }
        while idx < windows.len() && windows[idx].has_passed(t) {
            idx += 1;
        }
        let mut u = (0.0, 0.0);
        if let Some(w) = windows.get(idx) {
            let rel = w.relative(t);
            if w.contains_relative(rel) && !lapsed[idx] && rel >= model.reaction_delay {
                let jittering = rel < model.reaction_delay + model.settle_jitter && k % 2 == 1;
                let mut theta = w.spec.theta_hat;
                let mut mag = w.spec.mag_hat.unwrap_or(1.0);
                if jittering {
                    theta += JITTER_OFFSET;
                }
                if let Some(n) = angle_noise.filter(|_| model.angular_noise_sd > 0.0) {
                    theta += n.sample(&mut rng);
                }
                if let Some(n) = mag_noise.filter(|_| model.magnitude_noise_sd > 0.0) {
                    mag = (mag + n.sample(&mut rng)).clamp(0.0, 1.0);
                }
                u = if theta == w.spec.theta_hat && mag == 1.0 {
                    // keep the exact unit target so a noiseless response scores exactly
                    let v = Vec2::from_angle(theta);
                    (v.x, v.y)
                } else {
                    let v = Vec2::from_angle(theta) * mag;
                    (v.x, v.y)
                };
            }
        }
        samples.push(CommandVector::new(t, u.0, u.1));
        k += 1;
    }
    SyntheticResponse { samples, lapsed }
}

/// Pure-pursuit driver around a course, with correlated steering noise.
///
/// Runs the simulator in closed loop and returns the command issued at each
/// tick (t = k·dt). Replaying the commands through
/// [`crate::sim::run_trace`] from [`CourseSpec::start_pose`] reproduces the
/// same poses. Lines end with a full stop, corners are turned in place.
pub fn drive(course: &CourseSpec, model: &OperatorModel, params: &SimParams, deadzone: f64) -> Vec<CommandVector> {
    drive_with_limit(course, model, params, deadzone, 600.0)
}

pub fn drive_with_limit(
    course: &CourseSpec,
    model: &OperatorModel,
    params: &SimParams,
    deadzone: f64,
    time_limit: f64,
) -> Vec<CommandVector> {
    let mut pilot = Pilot::new(course, model, params, deadzone);
    let mut pose = course.start_pose();
    let mut out = Vec::new();
    let max_steps = (time_limit / params.dt).ceil() as usize;
    for k in 0..max_steps {
        let Some(c) = pilot.command(k as f64 * params.dt, &pose) else {
            break;
        };
        out.push(c);
        pose = step(pose, c.ux, c.uy, params);
    }
    out
}

/// The driver behind [`drive`], one decision per observed pose. Fed the poses
/// of a live vehicle it steers in closed loop; fed its own simulated poses it
/// reproduces [`drive`] exactly.
#[derive(Debug, Clone)]
pub struct Pilot {
    course: CourseSpec,
    model: OperatorModel,
    params: SimParams,
    deadzone: f64,
    lookahead: f64,
    decay: f64,
    rng: ChaCha8Rng,
    noise_angle: f64,
    noise_mag: f64,
    idx: usize,
}

impl Pilot {
    pub fn new(course: &CourseSpec, model: &OperatorModel, params: &SimParams, deadzone: f64) -> Self {
        Self {
            course: course.clone(),
            model: *model,
            params: params.clone(),
            deadzone,
            lookahead: (course.visibility_radius / 2.0).max(0.2),
            decay: (-params.dt / DRIVE_NOISE_TAU).exp(),
            rng: ChaCha8Rng::seed_from_u64(model.seed),
            noise_angle: 0.0,
            noise_mag: 0.0,
            idx: 0,
        }
    }

    /// Command for the next tick given the current pose; `None` once the
    /// course is finished.
    pub fn command(&mut self, t: f64, pose: &Pose) -> Option<CommandVector> {
        let v_max = self.params.vehicle.v_max;
        let omega_max = self.params.vehicle.omega_max;
        let (mut ux, mut uy, next_idx) =
            pursue(&self.course, self.idx, pose, self.lookahead, v_max, omega_max, self.params.dt, self.deadzone)?;
        self.idx = next_idx;
        if self.model.angular_noise_sd > 0.0 || self.model.magnitude_noise_sd > 0.0 {
            let unit = Normal::new(0.0, 1.0).expect("unit normal");
            let w = (1.0 - self.decay * self.decay).sqrt();
            self.noise_angle =
                self.decay * self.noise_angle + w * self.model.angular_noise_sd * unit.sample(&mut self.rng);
            self.noise_mag =
                self.decay * self.noise_mag + w * self.model.magnitude_noise_sd * unit.sample(&mut self.rng);
            let v = Vec2::new(ux, uy).rotated(self.noise_angle) * (1.0 + self.noise_mag).max(0.0);
            ux = v.x;
            uy = v.y;
        }
        if self.params.vehicle.invert_turn {
            ux = -ux;
        }
        let (ux, uy) = normalize_input(ux, uy, self.deadzone).unwrap_or((0.0, 0.0));
        Some(CommandVector::new(t, ux, uy))
    }
}

/// One pure-pursuit decision. Returns `None` once the course is done.
#[allow(clippy::too_many_arguments)]
fn pursue(
    course: &CourseSpec,
    mut idx: usize,
    pose: &Pose,
    lookahead: f64,
    v_max: f64,
    omega_max: f64,
    dt: f64,
    deadzone: f64,
) -> Option<(f64, f64, usize)> {
    let min_turn = deadzone * omega_max * dt;
    let min_move = deadzone * v_max * dt;
    loop {
        let seg = course.segments.get(idx)?;
        if let Geometry::Turn { heading_out, .. } = seg.geometry {
            let err = wrap_angle(heading_out - pose.heading);
            if err.abs() <= min_turn {
                idx += 1;
                continue;
            }
            let omega = (err / dt).clamp(-omega_max, omega_max);
            let mut ux = -omega / omega_max;
            if ux.abs() < deadzone {
                ux = deadzone.copysign(ux);
            }
            return Some((ux, 0.0, idx));
        }

        let p = pose.position();
        let s = seg.project(p);
        let remaining = seg.length - s;
        let stops_after = next_is_stop(course, idx);
        let done = if stops_after { remaining <= min_move } else { remaining <= 1e-9 };
        if done {
            idx += 1;
            continue;
        }

        let target = lookahead_point(course, idx, s + lookahead);
        let backward = seg.travel == Travel::Backward;
        let eff_heading = if backward { wrap_angle(pose.heading + std::f64::consts::PI) } else { pose.heading };
        let to_target = target - p;
        let dist = to_target.norm().max(1e-6);
        let alpha = wrap_angle(to_target.angle() - eff_heading);

        let mut speed = DRIVE_SPEED;
        if stops_after {
            // arrive exactly at the stop point
            let to_end = seg.end().distance(p);
            speed = speed.min(to_end / (v_max * dt));
        }
        if alpha.abs() > std::f64::consts::FRAC_PI_2 {
            speed = 0.0;
        }
        let curvature = 2.0 * alpha.sin() / dist;
        let mut omega = curvature * speed * v_max;
        if speed == 0.0 {
            omega = (alpha / dt).clamp(-omega_max, omega_max);
        }
        let ux = (-omega / omega_max).clamp(-1.0, 1.0);
        let uy = if backward { -speed } else { speed };
        if ux.hypot(uy) < deadzone {
            // too small to register; treat the segment as finished
            idx += 1;
            continue;
        }
        return Some((ux, uy, idx));
    }
}

/// Whether the vehicle must stop at the end of segment `idx`.
fn next_is_stop(course: &CourseSpec, idx: usize) -> bool {
    match course.segments.get(idx + 1) {
        None => true,
        Some(next) => next.is_turn() || next.travel != course.segments[idx].travel,
    }
}

/// Point `s` meters along the path from the start of `idx`, continuing into
/// following segments until a stop.
fn lookahead_point(course: &CourseSpec, mut idx: usize, mut s: f64) -> Vec2 {
    loop {
        let seg = &course.segments[idx];
        if s <= seg.length || next_is_stop(course, idx) {
            return seg.point_at(s.min(seg.length));
        }
        s -= seg.length;
        idx += 1;
    }
}
