//! Reference computations that share no code with the engine.

pub mod geometry {
    //! Brute-force corridor containment: centerlines are rebuilt from their
    //! corner and arc descriptions, sampled coarsely, then refined by
    //! golden-section search.

    use std::f64::consts::{FRAC_PI_2, PI};

    use assess_core::sim::default_footprint;
    use assess_core::{footprint_in_bounds, CourseSpec, Pose};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// A parametrized centerline piece, u ∈ [0, 1].
    pub type Curve = Box<dyn Fn(f64) -> (f64, f64)>;

    pub fn square_curves() -> Vec<Curve> {
        let c = [(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)];
        (0..4)
            .map(|i| {
                let (a, b) = (c[i], c[(i + 1) % 4]);
                Box::new(move |u: f64| (a.0 + (b.0 - a.0) * u, a.1 + (b.1 - a.1) * u)) as Curve
            })
            .collect()
    }

    pub fn curved_curves() -> Vec<Curve> {
        // walk the loop: CCW arcs of (radius, sweep), starting at the origin heading +x
        let arcs = [(6.0, 2.0 * PI / 3.0), (2.0, PI / 3.0), (6.0, 2.0 * PI / 3.0), (2.0, PI / 3.0)];
        let (mut x, mut y, mut h) = (0.0f64, 0.0f64, 0.0f64);
        let mut out = Vec::new();
        for (r, sweep) in arcs {
            let (cx, cy) = (x - r * h.sin(), y + r * h.cos());
            let a0 = h - FRAC_PI_2;
            out.push(Box::new(move |u: f64| {
                let a = a0 + sweep * u;
                (cx + r * a.cos(), cy + r * a.sin())
            }) as Curve);
            let a1 = a0 + sweep;
            x = cx + r * a1.cos();
            y = cy + r * a1.sin();
            h += sweep;
        }
        assert!(x.hypot(y) < 1e-9, "oracle loop must close");
        out
    }

    fn dist_to(curve: &Curve, p: (f64, f64), u: f64) -> f64 {
        let q = curve(u);
        (q.0 - p.0).hypot(q.1 - p.1)
    }

    /// Distance from `p` to `curve`, exact once it can matter: pieces whose coarse
    /// samples stay more than one step beyond `cutoff` are not refined.
    pub fn curve_distance(curve: &Curve, p: (f64, f64), cutoff: f64) -> f64 {
        const N: usize = 120;
        const MAX_STEP: f64 = 4.0 * PI / N as f64;
        let mut best = (f64::INFINITY, 0usize);
        for i in 0..=N {
            let d = dist_to(curve, p, i as f64 / N as f64);
            if d < best.0 {
                best = (d, i);
            }
        }
        if best.0 - MAX_STEP > cutoff {
            return best.0;
        }
        let mut lo = (best.1.saturating_sub(1)) as f64 / N as f64;
        let mut hi = ((best.1 + 1).min(N)) as f64 / N as f64;
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..80 {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if dist_to(curve, p, a) < dist_to(curve, p, b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        best.0.min(dist_to(curve, p, 0.5 * (lo + hi))).min(dist_to(curve, p, 0.0)).min(dist_to(curve, p, 1.0))
    }

    pub fn oracle_distance(curves: &[Curve], p: (f64, f64), cutoff: f64) -> f64 {
        curves.iter().map(|c| curve_distance(c, p, cutoff)).fold(f64::INFINITY, f64::min)
    }

    /// Compare on random poses. Returns (disagreements, poses too close to call).
    pub fn compare(course: &CourseSpec, curves: &[Curve], n: usize, seed: u64) -> (usize, usize) {
        let footprint = default_footprint();
        let hw = course.corridor_half_width;
        let (lo, hi) = course.bounds();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut disagreements = 0;
        let mut ambiguous = 0;
        for _ in 0..n {
            let pose = Pose::new(
                rng.random_range(lo.x - 2.0..hi.x + 2.0),
                rng.random_range(lo.y - 2.0..hi.y + 2.0),
                rng.random_range(-PI..PI),
            );
            let mut inside = true;
            let mut close_call = false;
            for v in &footprint {
                let w = pose.to_world(*v);
                let d = oracle_distance(curves, (w.x, w.y), hw);
                if (d - hw).abs() < 1e-9 {
                    close_call = true;
                }
                if d > hw + 1e-9 {
                    inside = false;
                    close_call = false;
                    break;
                }
            }
            if close_call {
                ambiguous += 1;
                continue;
            }
            if footprint_in_bounds(&pose, &footprint, course) != inside {
                disagreements += 1;
            }
        }
        (disagreements, ambiguous)
    }
}
