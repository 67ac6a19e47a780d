//! Kinematic wheelchair: unicycle model integrated with explicit Euler.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::geom::{wrap_angle, Vec2};
use crate::model::{CommandVector, Pose, TrajectorySample};

/// Plant limits and footprint, shared by live sessions and replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleConfig {
    /// Forward speed at full deflection, m/s.
    pub v_max: f64,
    /// Yaw rate at full deflection, rad/s.
    pub omega_max: f64,
    /// Flip the sign of the turn axis.
    pub invert_turn: bool,
    /// Convex outline in the body frame, +x forward, meters.
    pub footprint: Vec<Vec2>,
}

/// 0.7 m wide, 0.8 m long, apex on the +x axis.
pub fn default_footprint() -> Vec<Vec2> {
    vec![
        Vec2::new(-0.4, -0.35),
        Vec2::new(0.2, -0.35),
        Vec2::new(0.4, 0.0),
        Vec2::new(0.2, 0.35),
        Vec2::new(-0.4, 0.35),
    ]
}

impl Default for VehicleConfig {
    fn default() -> Self {
        Self { v_max: 1.0, omega_max: FRAC_PI_2, invert_turn: false, footprint: default_footprint() }
    }
}

impl VehicleConfig {
    /// Largest distance from the body origin to a footprint vertex.
    pub fn footprint_radius(&self) -> f64 {
        self.footprint.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, value) in [("v_max", self.v_max), ("omega_max", self.omega_max)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ConfigError::OutOfRange { name, requirement: "finite and positive", value });
            }
        }
        if !is_convex_with_front_apex(&self.footprint) {
            return Err(ConfigError::BadCourse("footprint must be a convex polygon with a vertex on +x".into()));
        }
        Ok(())
    }
}

fn is_convex_with_front_apex(poly: &[Vec2]) -> bool {
    if poly.len() < 3 || poly.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let n = poly.len();
    let mut sign = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let c = poly[(i + 2) % n];
        let z = (b - a).cross(c - b);
        if z == 0.0 {
            continue;
        }
        if sign == 0.0 {
            sign = z.signum();
        } else if z.signum() != sign {
            return false;
        }
    }
    sign != 0.0 && poly.iter().any(|v| v.y == 0.0 && v.x > 0.0)
}

/// Vehicle limits plus the integration step.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub vehicle: VehicleConfig,
    pub dt: f64,
}

impl SimParams {
    pub fn new(vehicle: VehicleConfig, sample_rate_hz: f64) -> Self {
        Self { vehicle, dt: 1.0 / sample_rate_hz }
    }

    /// Signed forward speed and yaw rate for a normalized command.
    pub fn twist(&self, ux: f64, uy: f64) -> (f64, f64) {
        let turn = if self.vehicle.invert_turn { ux } else { -ux };
        (uy * self.vehicle.v_max, turn * self.vehicle.omega_max)
    }

    /// Recorded speed for a command, m/s.
    pub fn speed(&self, uy: f64) -> f64 {
        uy.abs() * self.vehicle.v_max
    }
}

impl Default for SimParams {
    fn default() -> Self {
        Self::new(VehicleConfig::default(), 50.0)
    }
}

/// Advance one step. `uy` drives forward, `ux` turns (right for positive).
pub fn step(pose: Pose, ux: f64, uy: f64, params: &SimParams) -> Pose {
    let (v, omega) = params.twist(ux, uy);
    let (s, c) = pose.heading.sin_cos();
    Pose {
        x: pose.x + v * c * params.dt,
        y: pose.y + v * s * params.dt,
        heading: wrap_angle(pose.heading + omega * params.dt),
    }
}

/// Drive the plant with a zero-order hold of `commands`, one sample per dt.
///
/// Sample k is taken at `t0 + k·dt` and records the pose before the held
/// command is applied. Segment ids are left empty and every sample is marked
/// in bounds; see [`crate::course::CourseTracker`] for annotation.
pub fn run_trace(pose0: Pose, commands: &[CommandVector], params: &SimParams) -> Vec<TrajectorySample> {
    let Some(first) = commands.first() else {
        return Vec::new();
    };
    let t0 = first.t;
    let t_last = commands[commands.len() - 1].t;
    let mut out = Vec::new();
    let mut pose = pose0;
    let mut held = 0;
    let mut k = 0usize;
    loop {
        let t = t0 + k as f64 * params.dt;
        // half a step of slack absorbs rounding in the grid
        if t > t_last + 0.5 * params.dt {
            break;
        }
        while held + 1 < commands.len() && commands[held + 1].t <= t + 1e-9 * params.dt {
            held += 1;
        }
        let c = commands[held];
        out.push(TrajectorySample {
            t,
            pose,
            command: CommandVector::new(t, c.ux, c.uy),
            speed: params.speed(c.uy),
            segment_id: None,
            in_bounds: true,
        });
        pose = step(pose, c.ux, c.uy, params);
        k += 1;
    }
    out
}
