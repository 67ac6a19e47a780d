#![no_main]

use assess_core::geom::Vec2;
use assess_core::sim::default_footprint;
use assess_core::{footprint_in_bounds, locate_segment, CourseSpec, Pose};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(course) = serde_json::from_str::<CourseSpec>(text) else { return };
    if course.validate(0.35).is_err() {
        return;
    }
    let again: CourseSpec = serde_json::from_str(&course.to_json()).expect("re-encoded course parses");
    assert_eq!(again, course);
    // geometry queries on a valid course never panic
    let start = course.start_pose();
    assert!(course.in_corridor(start.position()));
    let (lo, hi) = course.bounds();
    for (fx, fy) in [(0.0, 0.0), (0.5, 0.5), (1.0, 0.25), (1.2, -0.2)] {
        let p = Vec2::new(lo.x + fx * (hi.x - lo.x), lo.y + fy * (hi.y - lo.y));
        let pose = Pose::new(p.x, p.y, start.heading);
        let _ = course.distance(p);
        let _ = footprint_in_bounds(&pose, &default_footprint(), &course);
        let _ = locate_segment(&pose, &course, None);
    }
});
