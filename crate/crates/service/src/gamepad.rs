//! Gamepad reports to normalized commands. Axis devices go through the core
//! deadzone and unit-disk clamp; button-only devices (head arrays, sip-puff
//! switches) press one of four cardinal directions.

use assess_core::normalize_input;

use crate::protocol::InputReport;

/// Why a report was dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GamepadDrop {
    NonFinite,
    /// Exactly one of the two axes present.
    PartialAxes,
    /// An axis outside [-1, 1].
    OutOfRange,
    UnknownButton(String),
}

/// Tolerated overshoot of an axis reading before the report is rejected.
const AXIS_SLACK: f64 = 1e-9;

pub fn button_vector(name: &str) -> Option<(f64, f64)> {
    match name {
        "up" => Some((0.0, 1.0)),
        "down" => Some((0.0, -1.0)),
        "left" => Some((-1.0, 0.0)),
        "right" => Some((1.0, 0.0)),
        _ => None,
    }
}

/// Map a report to `(ux, uy)`. Axes win unless they sit in the deadzone, in
/// which case any pressed buttons apply. Opposing buttons cancel; two adjacent
/// ones give the unit diagonal.
pub fn normalize_gamepad(report: &InputReport, deadzone: f64) -> Result<(f64, f64), GamepadDrop> {
    if !report.t.is_finite() {
        return Err(GamepadDrop::NonFinite);
    }
    let mut pressed = (0.0, 0.0);
    for b in &report.buttons {
        let (x, y) = button_vector(b).ok_or_else(|| GamepadDrop::UnknownButton(b.clone()))?;
        pressed.0 += x;
        pressed.1 += y;
    }
    let axes = match (report.ux, report.uy) {
        (Some(x), Some(y)) => Some((x, y)),
        (None, None) => None,
        _ => return Err(GamepadDrop::PartialAxes),
    };
    if let Some((x, y)) = axes {
        if !x.is_finite() || !y.is_finite() {
            return Err(GamepadDrop::NonFinite);
        }
        if x.abs() > 1.0 + AXIS_SLACK || y.abs() > 1.0 + AXIS_SLACK {
            return Err(GamepadDrop::OutOfRange);
        }
        let u = normalize_input(x, y, deadzone).map_err(|_| GamepadDrop::NonFinite)?;
        if u != (0.0, 0.0) || report.buttons.is_empty() {
            return Ok(u);
        }
    }
    if pressed == (0.0, 0.0) {
        return Ok((0.0, 0.0));
    }
    let norm = pressed.0.hypot(pressed.1);
    normalize_input(pressed.0 / norm, pressed.1 / norm, deadzone).map_err(|_| GamepadDrop::NonFinite)
}
