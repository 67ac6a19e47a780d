//! Trajectory following measures: dimensionless-jerk stability, average
//! segment speed, and percent time out of bounds.

use serde::{Deserialize, Serialize};

use crate::course::{CourseSpec, SegmentKind};
use crate::model::{SegmentRow, TrajectorySample};

/// Fewest samples for which the jerk integral is defined.
pub const MIN_JERK_SAMPLES: usize = 5;

/// Time normalization applied to the squared-jerk integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JerkNormalization {
    /// −T⁵ / v_peak² · ∫|v''|² dt, the headline stability measure.
    #[default]
    Quintic,
    /// −T³ / v_peak² · ∫|v''|² dt, invariant under time dilation.
    Cubic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryScore {
    pub s: Option<f64>,
    pub v_avg: Option<f64>,
    pub t_ob: Option<f64>,
    pub per_segment: Vec<SegmentRow>,
}

/// Second derivative of a uniformly sampled signal.
///
/// Interior points use central differences; the two ends use the four-point
/// one-sided stencil so the whole array is second-order accurate.
fn second_derivative(v: &[f64], dt: f64) -> Vec<f64> {
    let n = v.len();
    let h2 = dt * dt;
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        out[i] = ((v[i + 1] - v[i]) - (v[i] - v[i - 1])) / h2;
    }
    // 2v0 − 5v1 + 4v2 − v3, grouped as differences so constants give exact zero
    let one_sided = |a: f64, b: f64, c: f64, d: f64| (2.0 * (a - b) - 3.0 * (b - c) + (c - d)) / h2;
    out[0] = one_sided(v[0], v[1], v[2], v[3]);
    out[n - 1] = one_sided(v[n - 1], v[n - 2], v[n - 3], v[n - 4]);
    out
}

/// Dimensionless jerk of a uniformly sampled speed signal.
///
/// Returns `None` with fewer than [`MIN_JERK_SAMPLES`] samples and `Some(0.0)`
/// when the peak speed is zero.
pub fn jerk_of_speed(speeds: &[f64], dt: f64, norm: JerkNormalization) -> Option<f64> {
    if speeds.len() < MIN_JERK_SAMPLES || !(dt > 0.0) {
        return None;
    }
    let v_peak = speeds.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if v_peak == 0.0 {
        return Some(0.0);
    }
    let acc = second_derivative(speeds, dt);
    let n = acc.len();
    let sq: f64 = acc.iter().map(|a| a * a).sum();
    let integral = dt * (sq - 0.5 * (acc[0] * acc[0] + acc[n - 1] * acc[n - 1]));
    if integral == 0.0 {
        // plain zero, never −0.0
        return Some(0.0);
    }
    let total = dt * (n - 1) as f64;
    let power = match norm {
        JerkNormalization::Quintic => total.powi(5),
        JerkNormalization::Cubic => total.powi(3),
    };
    Some(-power / (v_peak * v_peak) * integral)
}

/// Stability (negated dimensionless jerk) of a trace's speed profile.
pub fn stability(trace: &[TrajectorySample]) -> Option<f64> {
    stability_with(trace, JerkNormalization::Quintic)
}

pub fn stability_with(trace: &[TrajectorySample], norm: JerkNormalization) -> Option<f64> {
    if trace.len() < MIN_JERK_SAMPLES {
        return None;
    }
    let dt = (trace[trace.len() - 1].t - trace[0].t) / (trace.len() - 1) as f64;
    let speeds: Vec<f64> = trace.iter().map(|s| s.speed).collect();
    jerk_of_speed(&speeds, dt, norm)
}

/// Per-segment speed `d / (t_end − t_start)` and its mean over traversed segments.
pub fn average_speed(trace: &[TrajectorySample], course: &CourseSpec) -> (Option<f64>, Vec<SegmentRow>) {
    let mut rows = Vec::with_capacity(course.segments.len());
    for seg in &course.segments {
        let first = trace.iter().position(|s| s.segment_id == Some(seg.id));
        let last = trace.iter().rposition(|s| s.segment_id == Some(seg.id));
        let mut row = SegmentRow {
            segment_id: seg.id,
            kind: seg.kind(),
            length: seg.length,
            samples: trace.iter().filter(|s| s.segment_id == Some(seg.id)).count(),
            t_start: None,
            t_end: None,
            v: None,
            s: None,
            traversed: false,
            note: None,
        };
        let (Some(i0), Some(i1)) = (first, last) else {
            row.note = Some("segment never entered".into());
            rows.push(row);
            continue;
        };
        row.traversed = true;
        row.t_start = Some(trace[i0].t);
        row.t_end = Some(trace[i1].t);
        row.s = stability(&trace[i0..=i1]);
        let elapsed = trace[i1].t - trace[i0].t;
        if seg.kind() == SegmentKind::Turn {
            row.note = Some("turn in place; no translational speed".into());
        } else if !(elapsed > 0.0) {
            row.note = Some("zero traversal time; skipped".into());
        } else {
            row.v = Some(seg.length / elapsed);
        }
        rows.push(row);
    }
    let speeds: Vec<f64> = rows.iter().filter_map(|r| r.v).collect();
    let v_avg = (!speeds.is_empty()).then(|| speeds.iter().sum::<f64>() / speeds.len() as f64);
    (v_avg, rows)
}

/// Percent of samples flagged out of bounds.
pub fn out_of_bounds_percent(trace: &[TrajectorySample]) -> Option<f64> {
    if trace.is_empty() {
        return None;
    }
    let out = trace.iter().filter(|s| !s.in_bounds).count();
    Some(100.0 * out as f64 / trace.len() as f64)
}

/// All three measures for an annotated trace.
pub fn score_trajectory(trace: &[TrajectorySample], course: &CourseSpec) -> TrajectoryScore {
    let (v_avg, per_segment) = average_speed(trace, course);
    TrajectoryScore { s: stability(trace), v_avg, t_ob: out_of_bounds_percent(trace), per_segment }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::course::default_square;
    use crate::model::{CommandVector, Pose};

    fn trace_from_speeds(speeds: &[f64], dt: f64) -> Vec<TrajectorySample> {
        speeds
            .iter()
            .enumerate()
            .map(|(k, &v)| TrajectorySample {
                t: k as f64 * dt,
                pose: Pose::default(),
                command: CommandVector::new(k as f64 * dt, 0.0, v),
                speed: v,
                segment_id: None,
                in_bounds: true,
            })
            .collect()
    }

    #[test]
    fn constant_speed_has_zero_jerk() {
        for v in [1.0, 0.6, 0.37] {
            let t = trace_from_speeds(&[v; 100], 0.02);
            assert_eq!(stability(&t), Some(0.0));
        }
    }

    #[test]
    fn zero_speed_guard() {
        let t = trace_from_speeds(&[0.0; 10], 0.02);
        assert_eq!(stability(&t), Some(0.0));
    }

    #[test]
    fn too_few_samples_is_undefined() {
        let t = trace_from_speeds(&[1.0, 2.0, 3.0, 4.0], 0.02);
        assert_eq!(stability(&t), None);
    }

    #[test]
    fn sine_speed_matches_analytic_integral() {
        let dt = 0.001;
        let speeds: Vec<f64> = (0..=1000).map(|k| (2.0 * PI * k as f64 * dt).sin()).collect();
        let s = jerk_of_speed(&speeds, dt, JerkNormalization::Quintic).unwrap();
        let expected = -(2.0 * PI).powi(4) / 2.0;
        assert!(((s - expected) / expected).abs() < 0.02, "{s} vs {expected}");
    }

    #[test]
    fn stability_is_never_positive() {
        let speeds: Vec<f64> = (0..50).map(|k| ((k * 7919) % 13) as f64 / 13.0).collect();
        assert!(jerk_of_speed(&speeds, 0.02, JerkNormalization::Quintic).unwrap() < 0.0);
    }

    #[test]
    fn segment_speed_examples() {
        let course = default_square();
        // segment 0 (10 m) entered at t=0, left at t=5
        let mut trace = trace_from_speeds(&[2.0; 251], 0.02);
        for s in trace.iter_mut() {
            s.segment_id = Some(0);
        }
        let (v_avg, rows) = average_speed(&trace, &course);
        assert!((rows[0].v.unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(v_avg, rows[0].v);
        assert!(!rows[2].traversed);
        assert!(rows[2].note.is_some());
    }

    #[test]
    fn zero_time_segment_is_skipped() {
        let course = default_square();
        let mut trace = trace_from_speeds(&[1.0; 3], 0.02);
        trace[1].segment_id = Some(2);
        let (v_avg, rows) = average_speed(&trace, &course);
        assert!(rows[2].traversed);
        assert_eq!(rows[2].v, None);
        assert_eq!(v_avg, None);
    }

    #[test]
    fn out_of_bounds_examples() {
        let mut trace = trace_from_speeds(&[1.0; 500], 0.02);
        assert_eq!(out_of_bounds_percent(&trace), Some(0.0));
        for s in trace.iter_mut() {
            s.in_bounds = false;
        }
        assert_eq!(out_of_bounds_percent(&trace), Some(100.0));
        assert_eq!(out_of_bounds_percent(&[]), None);
    }
}
