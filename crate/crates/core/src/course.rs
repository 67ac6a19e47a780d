//! Square and curved courses, corridor containment, segment lookup, and
//! limited-visibility clipping.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::geom::{point_segment_distance, wrap_angle, Vec2};
use crate::model::{Pose, TrajectorySample};

pub const COURSE_VERSION: u32 = 1;

/// Distance slack that keeps the previous segment when two are about equally near.
pub const LOCATE_HYSTERESIS: f64 = 0.05;
/// Heading must differ from both sides of a corner by this much to count as turning.
pub const TURN_HEADING_GATE: f64 = 10.0 * PI / 180.0;
/// The course counts as finished once the footprint origin is this close to the end point.
pub const FINISH_RADIUS: f64 = 0.3;

const CLOSURE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CourseKind {
    Square,
    Curved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Travel {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winding {
    Ccw,
    Cw,
}

impl Winding {
    pub fn sign(self) -> f64 {
        match self {
            Winding::Ccw => 1.0,
            Winding::Cw => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnDirection {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Line,
    Arc,
    Turn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Geometry {
    Line {
        p0: Vec2,
        p1: Vec2,
    },
    /// Arc from `phi0` to `phi1` (radians about `center`), swept in `winding` order.
    Arc {
        center: Vec2,
        radius: f64,
        phi0: f64,
        phi1: f64,
        winding: Winding,
    },
    /// Turn in place at a corner; the vehicle heading rotates from
    /// `heading_in` to `heading_out`.
    Turn {
        at: Vec2,
        heading_in: f64,
        heading_out: f64,
        direction: TurnDirection,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub id: usize,
    pub geometry: Geometry,
    pub travel: Travel,
    /// Line: Euclidean length. Arc: radius·|Δφ|. Turn: 0.
    pub length: f64,
}

impl Segment {
    pub fn line(id: usize, p0: Vec2, p1: Vec2, travel: Travel) -> Self {
        Self { id, geometry: Geometry::Line { p0, p1 }, travel, length: p0.distance(p1) }
    }

    pub fn arc(id: usize, center: Vec2, radius: f64, phi0: f64, sweep: f64) -> Self {
        let winding = if sweep >= 0.0 { Winding::Ccw } else { Winding::Cw };
        Self {
            id,
            geometry: Geometry::Arc { center, radius, phi0, phi1: phi0 + sweep, winding },
            travel: Travel::Forward,
            length: radius * sweep.abs(),
        }
    }

    pub fn turn(id: usize, at: Vec2, heading_in: f64, heading_out: f64) -> Self {
        let direction =
            if wrap_angle(heading_out - heading_in) >= 0.0 { TurnDirection::Left } else { TurnDirection::Right };
        Self {
            id,
            geometry: Geometry::Turn { at, heading_in, heading_out, direction },
            travel: Travel::Forward,
            length: 0.0,
        }
    }

    pub fn kind(&self) -> SegmentKind {
        match self.geometry {
            Geometry::Line { .. } => SegmentKind::Line,
            Geometry::Arc { .. } => SegmentKind::Arc,
            Geometry::Turn { .. } => SegmentKind::Turn,
        }
    }

    pub fn is_turn(&self) -> bool {
        matches!(self.geometry, Geometry::Turn { .. })
    }

    /// Point reached after moving `s` meters along the direction of travel.
    pub fn point_at(&self, s: f64) -> Vec2 {
        match self.geometry {
            Geometry::Line { p0, p1 } => {
                if self.length == 0.0 {
                    p0
                } else {
                    p0 + (p1 - p0) * (s / self.length)
                }
            }
            Geometry::Arc { center, radius, phi0, winding, .. } => {
                center + Vec2::from_angle(phi0 + winding.sign() * s / radius) * radius
            }
            Geometry::Turn { at, .. } => at,
        }
    }

    pub fn start(&self) -> Vec2 {
        self.point_at(0.0)
    }

    pub fn end(&self) -> Vec2 {
        match self.geometry {
            Geometry::Line { p1, .. } => p1,
            Geometry::Arc { center, radius, phi1, .. } => center + Vec2::from_angle(phi1) * radius,
            Geometry::Turn { at, .. } => at,
        }
    }

    /// Direction of motion at arc length `s`, radians.
    pub fn motion_direction_at(&self, s: f64) -> f64 {
        match self.geometry {
            Geometry::Line { p0, p1 } => (p1 - p0).angle(),
            Geometry::Arc { radius, phi0, winding, .. } => wrap_angle(phi0 + winding.sign() * (s / radius + FRAC_PI_2)),
            Geometry::Turn { heading_out, .. } => heading_out,
        }
    }

    /// Vehicle heading while traversing at arc length `s`. A turn has zero
    /// length, so this gives its entry heading; see [`Segment::exit_heading`].
    pub fn heading_at(&self, s: f64) -> f64 {
        match (self.geometry, self.travel) {
            (Geometry::Turn { heading_in, .. }, _) => heading_in,
            (_, Travel::Forward) => self.motion_direction_at(s),
            (_, Travel::Backward) => wrap_angle(self.motion_direction_at(s) + PI),
        }
    }

    pub fn exit_heading(&self) -> f64 {
        match self.geometry {
            Geometry::Turn { heading_out, .. } => heading_out,
            _ => self.heading_at(self.length),
        }
    }

    /// Arc length of the closest point along the segment.
    pub fn project(&self, p: Vec2) -> f64 {
        match self.geometry {
            Geometry::Line { p0, p1 } => {
                if self.length == 0.0 {
                    return 0.0;
                }
                ((p - p0).dot(p1 - p0) / self.length).clamp(0.0, self.length)
            }
            Geometry::Arc { center, radius, phi0, winding, .. } => {
                let off = (winding.sign() * ((p - center).angle() - phi0)).rem_euclid(TAU);
                let sweep = self.length / radius;
                if off <= sweep {
                    off * radius
                } else if off - sweep < TAU - off {
                    self.length
                } else {
                    0.0
                }
            }
            Geometry::Turn { .. } => 0.0,
        }
    }

    /// Distance from `p` to the segment centerline.
    pub fn distance(&self, p: Vec2) -> f64 {
        match self.geometry {
            Geometry::Line { p0, p1 } => point_segment_distance(p, p0, p1),
            Geometry::Arc { center, radius, phi0, winding, .. } => {
                let d = p - center;
                let off = (winding.sign() * (d.angle() - phi0)).rem_euclid(TAU);
                if off <= self.length / radius {
                    (d.norm() - radius).abs()
                } else {
                    p.distance(self.start()).min(p.distance(self.end()))
                }
            }
            Geometry::Turn { at, .. } => p.distance(at),
        }
    }
}

/// A closed course and its corridor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CourseSpec {
    #[serde(default = "course_version")]
    pub version: u32,
    pub kind: CourseKind,
    pub segments: Vec<Segment>,
    /// Corridor extends this far either side of every segment centerline.
    pub corridor_half_width: f64,
    /// Only geometry within this distance of the vehicle is shown.
    pub visibility_radius: f64,
}

fn course_version() -> u32 {
    COURSE_VERSION
}

pub const DEFAULT_SIDE: f64 = 10.0;
pub const DEFAULT_HALF_WIDTH: f64 = 1.0;
pub const DEFAULT_R_LONG: f64 = 6.0;
pub const DEFAULT_R_SMALL: f64 = 2.0;
pub const DEFAULT_VISIBILITY: f64 = 3.0;

/// Square loop: two sides driven forward, two backward, joined by two left
/// and two right quarter turns in place.
pub fn build_square_course(side: f64, half_width: f64) -> Result<CourseSpec, ConfigError> {
    if !(side.is_finite() && half_width.is_finite() && half_width > 0.0 && side > 4.0 * half_width) {
        return Err(ConfigError::BadCourse(format!("square side {side} must exceed four half-widths ({half_width})")));
    }
    let a = Vec2::new(0.0, 0.0);
    let b = Vec2::new(side, 0.0);
    let c = Vec2::new(side, side);
    let d = Vec2::new(0.0, side);
    let segments = vec![
        Segment::line(0, a, b, Travel::Forward),
        Segment::turn(1, b, 0.0, FRAC_PI_2),
        Segment::line(2, b, c, Travel::Forward),
        Segment::turn(3, c, FRAC_PI_2, 0.0),
        Segment::line(4, c, d, Travel::Backward),
        Segment::turn(5, d, 0.0, FRAC_PI_2),
        Segment::line(6, d, a, Travel::Backward),
        Segment::turn(7, a, FRAC_PI_2, 0.0),
    ];
    Ok(CourseSpec {
        version: COURSE_VERSION,
        kind: CourseKind::Square,
        segments,
        corridor_half_width: half_width,
        visibility_radius: DEFAULT_VISIBILITY,
    })
}

/// Oval of two long 120° arcs and two small 60° arcs, all turning left.
pub fn build_curved_course(r_long: f64, r_small: f64, half_width: f64) -> Result<CourseSpec, ConfigError> {
    if !(r_long.is_finite() && r_small.is_finite() && half_width.is_finite())
        || half_width <= 0.0
        || r_small <= half_width
        || r_long < r_small
    {
        return Err(ConfigError::BadCourse(format!(
            "radii ({r_long}, {r_small}) must satisfy r_long >= r_small > half-width ({half_width})"
        )));
    }
    let spans = [(r_long, 2.0 * PI / 3.0), (r_small, PI / 3.0), (r_long, 2.0 * PI / 3.0), (r_small, PI / 3.0)];
    let mut p = Vec2::ZERO;
    let mut heading = 0.0;
    let segments = spans
        .iter()
        .enumerate()
        .map(|(id, &(r, sweep))| {
            let center = p + Vec2::from_angle(heading + FRAC_PI_2) * r;
            let seg = Segment::arc(id, center, r, heading - FRAC_PI_2, sweep);
            p = seg.end();
            heading += sweep;
            seg
        })
        .collect();
    Ok(CourseSpec {
        version: COURSE_VERSION,
        kind: CourseKind::Curved,
        segments,
        corridor_half_width: half_width,
        visibility_radius: DEFAULT_VISIBILITY,
    })
}

pub fn default_square() -> CourseSpec {
    build_square_course(DEFAULT_SIDE, DEFAULT_HALF_WIDTH).expect("default square is valid")
}

pub fn default_curved() -> CourseSpec {
    build_curved_course(DEFAULT_R_LONG, DEFAULT_R_SMALL, DEFAULT_HALF_WIDTH).expect("default curve is valid")
}

impl CourseSpec {
    pub fn validate(&self, footprint_radius: f64) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::BadCourse(msg));
        if self.version != COURSE_VERSION {
            return Err(ConfigError::UnsupportedVersion(self.version));
        }
        if self.segments.is_empty() {
            return bad("no segments".into());
        }
        if !(self.corridor_half_width.is_finite() && self.corridor_half_width > footprint_radius) {
            return bad(format!(
                "corridor half-width {} must exceed footprint radius {footprint_radius}",
                self.corridor_half_width
            ));
        }
        if !(self.visibility_radius.is_finite() && self.visibility_radius >= 0.0) {
            return bad("visibility radius must be finite and nonnegative".into());
        }
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.id != i {
                return bad(format!("segment {i} has id {}", seg.id));
            }
            let expected = match seg.geometry {
                Geometry::Line { p0, p1 } => {
                    if !(p0.is_finite() && p1.is_finite()) {
                        return bad(format!("segment {i} is not finite"));
                    }
                    p0.distance(p1)
                }
                Geometry::Arc { center, radius, phi0, phi1, winding } => {
                    let sweep = phi1 - phi0;
                    if !(center.is_finite() && radius.is_finite() && sweep.is_finite())
                        || radius <= self.corridor_half_width
                        || sweep * winding.sign() <= 0.0
                        || sweep.abs() > TAU
                    {
                        return bad(format!("segment {i} has an invalid arc"));
                    }
                    radius * sweep.abs()
                }
                Geometry::Turn { at, heading_in, heading_out, .. } => {
                    if !(at.is_finite() && heading_in.is_finite() && heading_out.is_finite()) {
                        return bad(format!("segment {i} is not finite"));
                    }
                    0.0
                }
            };
            if !seg.is_turn() && !(expected > 0.0) {
                return bad(format!("segment {i} has zero length"));
            }
            if (seg.length - expected).abs() > 1e-9 * expected.max(1.0) {
                return bad(format!("segment {i} length {} does not match geometry {expected}", seg.length));
            }
            let next = &self.segments[(i + 1) % self.segments.len()];
            if seg.end().distance(next.start()) > CLOSURE_EPS {
                return bad(format!("segment {i} does not connect to segment {}", next.id));
            }
        }
        Ok(())
    }

    pub fn start_pose(&self) -> Pose {
        let first = &self.segments[0];
        let p = first.start();
        Pose::new(p.x, p.y, first.heading_at(0.0))
    }

    pub fn end_point(&self) -> Vec2 {
        self.segments[self.segments.len() - 1].end()
    }

    /// Total length of every line and arc.
    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }

    /// Index of the last segment that moves the vehicle.
    pub fn last_moving_segment(&self) -> usize {
        self.segments.iter().rposition(|s| !s.is_turn()).unwrap_or(0)
    }

    /// Axis-aligned bounds of the centerline, sampled densely.
    pub fn bounds(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for seg in &self.segments {
            let n = 64;
            for k in 0..=n {
                let p = seg.point_at(seg.length * k as f64 / n as f64);
                lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
                hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
            }
        }
        (lo, hi)
    }

    /// Distance from `p` to the nearest centerline point.
    pub fn distance(&self, p: Vec2) -> f64 {
        self.segments.iter().map(|s| s.distance(p)).fold(f64::INFINITY, f64::min)
    }

    /// Closed corridor membership.
    pub fn in_corridor(&self, p: Vec2) -> bool {
        self.distance(p) <= self.corridor_half_width
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("course serializes")
    }
}

/// True iff every footprint vertex lies inside the corridor (boundary included).
pub fn footprint_in_bounds(pose: &Pose, footprint: &[Vec2], course: &CourseSpec) -> bool {
    footprint.iter().all(|&v| course.in_corridor(pose.to_world(v)))
}

/// Nearest segment, preferring `prev` (and then its successor) among
/// near-ties. Absent when farther than two half-widths from every segment.
pub fn locate_segment(pose: &Pose, course: &CourseSpec, prev: Option<usize>) -> Option<usize> {
    let p = pose.position();
    let dists: Vec<f64> = course.segments.iter().map(|s| s.distance(p)).collect();
    let (best, min) =
        dists.iter().copied().enumerate().fold((0, f64::INFINITY), |acc, (i, d)| if d < acc.1 { (i, d) } else { acc });
    if !(min <= 2.0 * course.corridor_half_width) {
        return None;
    }
    let near = |i: usize| dists[i] <= min + LOCATE_HYSTERESIS;
    for (i, seg) in course.segments.iter().enumerate() {
        if let Geometry::Turn { heading_in, heading_out, .. } = seg.geometry {
            let off_in = wrap_angle(pose.heading - heading_in).abs();
            let off_out = wrap_angle(pose.heading - heading_out).abs();
            if near(i) && off_in > TURN_HEADING_GATE && off_out > TURN_HEADING_GATE {
                return Some(i);
            }
        }
    }
    let n = course.segments.len();
    if let Some(prev) = prev.filter(|&i| i < n) {
        if near(prev) {
            return Some(prev);
        }
        let next = (prev + 1) % n;
        if near(next) {
            return Some(next);
        }
    }
    Some(best)
}

/// A piece of course geometry visible from the current pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Fragment {
    Line { segment_id: usize, p0: Vec2, p1: Vec2 },
    Arc { segment_id: usize, center: Vec2, radius: f64, phi0: f64, phi1: f64 },
}

impl Fragment {
    pub fn length(&self) -> f64 {
        match *self {
            Fragment::Line { p0, p1, .. } => p0.distance(p1),
            Fragment::Arc { radius, phi0, phi1, .. } => radius * (phi1 - phi0).abs(),
        }
    }
}

/// Course geometry clipped to a disc of `visibility_radius` around the pose.
pub fn visible_window(pose: &Pose, course: &CourseSpec) -> Vec<Fragment> {
    let radius = course.visibility_radius;
    let c = pose.position();
    let mut out = Vec::new();
    if !(radius > 0.0) {
        return out;
    }
    for seg in &course.segments {
        match seg.geometry {
            Geometry::Line { p0, p1 } => {
                let d = p1 - p0;
                let f = p0 - c;
                let a = d.dot(d);
                let b = 2.0 * f.dot(d);
                let cc = f.dot(f) - radius * radius;
                let disc = b * b - 4.0 * a * cc;
                if a == 0.0 || disc <= 0.0 {
                    continue;
                }
                let sq = disc.sqrt();
                let t0 = ((-b - sq) / (2.0 * a)).max(0.0);
                let t1 = ((-b + sq) / (2.0 * a)).min(1.0);
                if t1 > t0 {
                    out.push(Fragment::Line { segment_id: seg.id, p0: p0 + d * t0, p1: p0 + d * t1 });
                }
            }
            Geometry::Arc { center, radius: r, phi0, winding, .. } => {
                let to_pose = c - center;
                let rho = to_pose.norm();
                let sign = winding.sign();
                let sweep = seg.length / r;
                // visible where cos(φ − ψ) ≥ k
                let k = if rho == 0.0 {
                    if r <= radius {
                        -2.0
                    } else {
                        2.0
                    }
                } else {
                    (rho * rho + r * r - radius * radius) / (2.0 * rho * r)
                };
                if k >= 1.0 {
                    continue;
                }
                if k <= -1.0 {
                    out.push(Fragment::Arc { segment_id: seg.id, center, radius: r, phi0, phi1: phi0 + sign * sweep });
                    continue;
                }
                let half = k.acos();
                let beta = wrap_angle(sign * (phi0 - to_pose.angle()));
                for n in [0.0, 1.0] {
                    let lo = (-half + TAU * n - beta).max(0.0);
                    let hi = (half + TAU * n - beta).min(sweep);
                    if hi > lo {
                        out.push(Fragment::Arc {
                            segment_id: seg.id,
                            center,
                            radius: r,
                            phi0: phi0 + sign * lo,
                            phi1: phi0 + sign * hi,
                        });
                    }
                }
            }
            Geometry::Turn { .. } => {}
        }
    }
    out
}

/// Follows a vehicle around a course: segment assignment, containment, and
/// completion.
#[derive(Debug, Clone)]
pub struct CourseTracker {
    prev: Option<usize>,
    reached: Option<usize>,
}

impl Default for CourseTracker {
    fn default() -> Self {
        Self::new()
    }
}

impl CourseTracker {
    pub fn new() -> Self {
        Self { prev: None, reached: None }
    }

    pub fn current(&self) -> Option<usize> {
        self.prev
    }

    /// Locate the pose and update progress; returns (segment, in_bounds).
    pub fn observe(&mut self, pose: &Pose, course: &CourseSpec, footprint: &[Vec2]) -> (Option<usize>, bool) {
        let seg = locate_segment(pose, course, self.prev);
        if let Some(i) = seg {
            self.prev = Some(i);
            self.reached = match self.reached {
                None if i == 0 => Some(0),
                Some(r) if i > r && i - r <= 2 => Some(i),
                other => other,
            };
        }
        (seg, footprint_in_bounds(pose, footprint, course))
    }

    pub fn annotate(&mut self, sample: &mut TrajectorySample, course: &CourseSpec, footprint: &[Vec2]) {
        let (seg, inside) = self.observe(&sample.pose, course, footprint);
        sample.segment_id = seg;
        sample.in_bounds = inside;
    }

    /// Every moving segment reached in order and the vehicle is back at the end point.
    pub fn is_complete(&self, pose: &Pose, course: &CourseSpec) -> bool {
        self.reached.is_some_and(|r| r >= course.last_moving_segment())
            && pose.position().distance(course.end_point()) <= FINISH_RADIUS
    }
}

/// Fill segment ids and containment flags along a trace.
pub fn annotate_trace(trace: &mut [TrajectorySample], course: &CourseSpec, footprint: &[Vec2]) {
    let mut tracker = CourseTracker::new();
    for s in trace.iter_mut() {
        tracker.annotate(s, course, footprint);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::default_footprint;

    #[test]
    fn square_inventory() {
        let c = build_square_course(10.0, 1.0).unwrap();
        assert_eq!(c.segments.len(), 8);
        let straight: f64 = c.segments.iter().filter(|s| s.kind() == SegmentKind::Line).map(|s| s.length).sum();
        assert_eq!(straight, 40.0);
        let turns: Vec<_> = c
            .segments
            .iter()
            .filter_map(|s| match s.geometry {
                Geometry::Turn { direction, .. } => Some(direction),
                _ => None,
            })
            .collect();
        assert_eq!(turns.iter().filter(|&&d| d == TurnDirection::Left).count(), 2);
        assert_eq!(turns.iter().filter(|&&d| d == TurnDirection::Right).count(), 2);
        let fwd = c.segments.iter().filter(|s| !s.is_turn() && s.travel == Travel::Forward).count();
        let back = c.segments.iter().filter(|s| s.travel == Travel::Backward).count();
        assert_eq!((fwd, back), (2, 2));
        for k in 0..8 {
            assert_eq!(c.segments[k].end(), c.segments[(k + 1) % 8].start());
        }
        c.validate(0.53).unwrap();
    }

    #[test]
    fn square_headings_chain_through_turns() {
        let c = default_square();
        for k in 0..8 {
            let seg = &c.segments[k];
            let next = &c.segments[(k + 1) % 8];
            let out = seg.exit_heading();
            assert!(wrap_angle(out - next.heading_at(0.0)).abs() < 1e-12, "segment {k}");
        }
    }

    #[test]
    fn square_rejects_narrow_side() {
        assert!(build_square_course(4.0, 1.0).is_err());
        assert!(build_square_course(10.0, 0.0).is_err());
    }

    #[test]
    fn curved_lengths_and_closure() {
        let c = build_curved_course(6.0, 2.0, 1.0).unwrap();
        assert_eq!(c.segments.len(), 4);
        assert_eq!(c.segments.iter().filter(|s| s.kind() == SegmentKind::Arc).count(), 4);
        assert!((c.segments[0].length - 6.0 * (2.0 * PI / 3.0)).abs() < 1e-12);
        assert!((c.segments[1].length - 2.0 * (PI / 3.0)).abs() < 1e-12);
        assert!(c.end_point().distance(c.segments[0].start()) < 1e-9);
        for k in 0..4 {
            let a = &c.segments[k];
            let b = &c.segments[(k + 1) % 4];
            assert!(a.end().distance(b.start()) < 1e-9);
            let gap = wrap_angle(a.motion_direction_at(a.length) - b.motion_direction_at(0.0));
            assert!(gap.abs() < 1e-9, "tangent jump {gap} at {k}");
        }
        c.validate(0.53).unwrap();
    }

    #[test]
    fn curved_rejects_small_radius() {
        assert!(build_curved_course(6.0, 0.9, 1.0).is_err());
        assert!(build_curved_course(1.5, 2.0, 1.0).is_err());
    }

    #[test]
    fn containment_examples() {
        let c = default_square();
        let fp = default_footprint();
        let r = fp.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(footprint_in_bounds(&Pose::new(5.0, 0.0, 0.0), &fp, &c));
        assert!(!footprint_in_bounds(&Pose::new(5.0, 1.0 + r + 0.1, 0.0), &fp, &c));
        // closed boundary
        assert!(c.in_corridor(Vec2::new(5.0, 1.0)));
        assert!(!c.in_corridor(Vec2::new(5.0, 1.0 + 1e-12)));
    }

    #[test]
    fn arc_distance_inside_and_outside_span() {
        let c = default_curved();
        let seg = &c.segments[0];
        let mid = seg.point_at(seg.length / 2.0);
        assert!(seg.distance(mid) < 1e-12);
        let Geometry::Arc { center, .. } = seg.geometry else { unreachable!() };
        let outward = center + (mid - center) * 1.1;
        assert!((seg.distance(outward) - 0.6).abs() < 1e-9);
        // opposite side of the circle falls back to the endpoints
        let opposite = center - (mid - center);
        let expected = opposite.distance(seg.start()).min(opposite.distance(seg.end()));
        assert_eq!(seg.distance(opposite), expected);
    }

    #[test]
    fn locate_examples() {
        let c = default_square();
        assert_eq!(locate_segment(&Pose::new(5.0, 10.0, 0.0), &c, None), Some(4));
        assert_eq!(locate_segment(&Pose::new(10.0, 10.0, FRAC_PI_2), &c, Some(2)), Some(2));
        assert_eq!(locate_segment(&Pose::new(110.0, 0.0, 0.0), &c, None), None);
        // mid-turn at a corner
        assert_eq!(locate_segment(&Pose::new(10.0, 0.0, PI / 4.0), &c, Some(0)), Some(1));
        // leaving a corner moves on to the next side
        assert_eq!(locate_segment(&Pose::new(10.0, 0.5, FRAC_PI_2), &c, Some(1)), Some(2));
    }

    #[test]
    fn visibility_extremes() {
        let mut c = default_square();
        let pose = Pose::new(5.0, 0.0, 0.0);
        c.visibility_radius = 0.0;
        assert!(visible_window(&pose, &c).is_empty());
        c.visibility_radius = 100.0;
        let total: f64 = visible_window(&pose, &c).iter().map(Fragment::length).sum();
        assert!((total - 40.0).abs() < 1e-9);
        let mut curved = default_curved();
        curved.visibility_radius = 100.0;
        let total: f64 = visible_window(&pose, &curved).iter().map(Fragment::length).sum();
        assert!((total - curved.total_length()).abs() < 1e-9);
    }

    #[test]
    fn course_json_round_trip() {
        for c in [default_square(), default_curved()] {
            let back: CourseSpec = serde_json::from_str(&c.to_json()).unwrap();
            assert_eq!(back, c);
        }
    }
}
