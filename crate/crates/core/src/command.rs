//! Command following measures: response delay, response percent, settling
//! time, initial accuracy, and settled accuracy.
//!
//! Two routes compute the same numbers. [`score_prompt`] + [`aggregate`]
//! work on complete sample lists; [`StreamingScorer`] consumes samples one at
//! a time while a session is running.

use serde::{Deserialize, Serialize};

use crate::error::ScoreError;
use crate::model::{CommandVector, PromptEvent, PromptSpec, SampleEval, Tolerance};
use crate::schedule::PromptWindow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandScore {
    pub t_d: Option<f64>,
    pub t_s: Option<f64>,
    pub r_p: f64,
    pub a_r: Option<f64>,
    pub a_s: Option<f64>,
    pub prompt_count: usize,
    pub responded_count: usize,
    pub settled_count: usize,
    pub per_prompt: Vec<PromptEvent>,
}

/// Score one prompt from its prompt-relative samples.
///
/// Samples must be ordered and lie in (0, T].
pub fn score_prompt(samples: &[CommandVector], spec: &PromptSpec, tol: &Tolerance) -> PromptEvent {
    let evals: Vec<SampleEval> = samples.iter().map(|s| tol.evaluate(s.ux, s.uy, spec)).collect();

    let first = evals.iter().position(|e| e.within);

    // Start of the longest all-within suffix.
    let mut settle_idx = None;
    for i in (0..evals.len()).rev() {
        if evals[i].within {
            settle_idx = Some(i);
        } else {
            break;
        }
    }

    let settled_accuracy = settle_idx.map(|i| {
        let tail = &evals[i..];
        tail.iter().map(|e| e.accuracy).sum::<f64>() / tail.len() as f64
    });

    PromptEvent {
        spec: *spec,
        samples: samples.to_vec(),
        t_first_within: first.map(|i| samples[i].t),
        t_settled: settle_idx.map(|i| samples[i].t),
        tracked: first.is_some(),
        initial_accuracy: first.map(|i| evals[i].accuracy),
        settled_accuracy,
    }
}

/// Combine per-prompt results into the five trial-level measures.
///
/// Delay and initial accuracy average over tracked prompts; settling time and
/// settled accuracy over settled prompts. Response percent counts every prompt.
pub fn aggregate(events: Vec<PromptEvent>, prompt_count: usize) -> Result<CommandScore, ScoreError> {
    if prompt_count == 0 {
        return Err(ScoreError::NoPrompts);
    }
    let mut sums = Sums::default();
    for e in &events {
        sums.add(e);
    }
    Ok(sums.finish(prompt_count, events))
}

#[derive(Debug, Clone, Default)]
struct Sums {
    tracked: usize,
    settled: usize,
    first: f64,
    settle: f64,
    initial_acc: f64,
    settled_acc: f64,
}

impl Sums {
    fn add(&mut self, e: &PromptEvent) {
        if let (Some(t), Some(a)) = (e.t_first_within, e.initial_accuracy) {
            self.tracked += 1;
            self.first += t;
            self.initial_acc += a;
        }
        if let (Some(t), Some(a)) = (e.t_settled, e.settled_accuracy) {
            self.settled += 1;
            self.settle += t;
            self.settled_acc += a;
        }
    }

    fn finish(&self, prompt_count: usize, per_prompt: Vec<PromptEvent>) -> CommandScore {
        let mean = |sum: f64, n: usize| (n > 0).then(|| sum / n as f64);
        CommandScore {
            t_d: mean(self.first, self.tracked),
            t_s: mean(self.settle, self.settled),
            r_p: if prompt_count == 0 { 0.0 } else { 100.0 * self.tracked as f64 / prompt_count as f64 },
            a_r: mean(self.initial_acc, self.tracked),
            a_s: mean(self.settled_acc, self.settled),
            prompt_count,
            responded_count: self.tracked,
            settled_count: self.settled,
            per_prompt,
        }
    }
}

/// Score a whole trial from trial-clock samples.
pub fn batch_score(
    windows: &[PromptWindow],
    samples: &[CommandVector],
    tol: &Tolerance,
) -> Result<CommandScore, ScoreError> {
    if windows.is_empty() {
        return Err(ScoreError::NoPrompts);
    }
    for (index, pair) in samples.windows(2).enumerate() {
        if !(pair[1].t >= pair[0].t) {
            return Err(ScoreError::OutOfOrder { index: index + 1, t: pair[1].t });
        }
    }
    let events = windows
        .iter()
        .map(|w| {
            let inside: Vec<CommandVector> = samples
                .iter()
                .filter_map(|s| {
                    let rel = w.relative(s.t);
                    w.contains_relative(rel).then_some(CommandVector::new(rel, s.ux, s.uy))
                })
                .collect();
            score_prompt(&inside, &w.spec, tol)
        })
        .collect();
    aggregate(events, windows.len())
}

/// What happened to a pushed sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Routed {
    /// Scored against prompt `m`.
    Prompt(usize),
    /// Accepted but outside every prompt window.
    Between,
    /// Timestamp earlier than the previous sample.
    OutOfOrder,
    /// Belongs to a prompt that was already closed.
    Late,
    NonFinite,
}

impl Routed {
    pub fn accepted(self) -> bool {
        matches!(self, Routed::Prompt(_) | Routed::Between)
    }
}

/// Sample accounting: `received = scored + between + dropped`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub received: usize,
    pub scored: usize,
    pub between: usize,
    pub dropped_out_of_order: usize,
    pub dropped_late: usize,
    pub dropped_non_finite: usize,
}

impl SampleCounts {
    pub fn dropped(&self) -> usize {
        self.dropped_out_of_order + self.dropped_late + self.dropped_non_finite
    }
}

#[derive(Debug, Clone)]
struct OpenPrompt {
    samples: Vec<CommandVector>,
    first: Option<(f64, f64)>,
    run_start: Option<f64>,
    run_sum: f64,
    run_len: usize,
}

impl OpenPrompt {
    fn new() -> Self {
        Self { samples: Vec::new(), first: None, run_start: None, run_sum: 0.0, run_len: 0 }
    }

    fn push(&mut self, rel: CommandVector, eval: SampleEval) {
        self.samples.push(rel);
        if eval.within {
            if self.first.is_none() {
                self.first = Some((rel.t, eval.accuracy));
            }
            if self.run_start.is_none() {
                self.run_start = Some(rel.t);
                self.run_sum = 0.0;
                self.run_len = 0;
            }
            self.run_sum += eval.accuracy;
            self.run_len += 1;
        } else {
            self.run_start = None;
        }
    }

    fn close(self, spec: PromptSpec) -> PromptEvent {
        let settled_accuracy = self.run_start.map(|_| self.run_sum / self.run_len as f64);
        PromptEvent {
            spec,
            samples: self.samples,
            t_first_within: self.first.map(|f| f.0),
            t_settled: self.run_start,
            tracked: self.first.is_some(),
            initial_accuracy: self.first.map(|f| f.1),
            settled_accuracy,
        }
    }
}

/// Online scorer for a running command following trial.
///
/// Each prompt keeps only the state needed to finish its measures: the first
/// within-tolerance sample and the current all-within run. Prompts close when
/// a later sample or clock tick passes their deadline.
#[derive(Debug, Clone)]
pub struct StreamingScorer {
    windows: Vec<PromptWindow>,
    tol: Tolerance,
    current: usize,
    open: Option<OpenPrompt>,
    closed: Vec<PromptEvent>,
    sums: Sums,
    last_t: Option<f64>,
    counts: SampleCounts,
}

impl StreamingScorer {
    pub fn new(windows: Vec<PromptWindow>, tol: Tolerance) -> Self {
        Self {
            windows,
            tol,
            current: 0,
            open: None,
            closed: Vec::new(),
            sums: Sums::default(),
            last_t: None,
            counts: SampleCounts::default(),
        }
    }

    pub fn windows(&self) -> &[PromptWindow] {
        &self.windows
    }

    pub fn counts(&self) -> SampleCounts {
        self.counts
    }

    /// Number of prompts already closed.
    pub fn closed_count(&self) -> usize {
        self.closed.len()
    }

    pub fn is_finished(&self) -> bool {
        self.current >= self.windows.len()
    }

    /// Feed one trial-clock sample.
    pub fn push(&mut self, sample: CommandVector) -> Routed {
        self.counts.received += 1;
        if !sample.is_finite() {
            self.counts.dropped_non_finite += 1;
            return Routed::NonFinite;
        }
        if self.last_t.is_some_and(|last| sample.t < last) {
            self.counts.dropped_out_of_order += 1;
            return Routed::OutOfOrder;
        }
        if self.current > 0 && !self.windows[self.current - 1].has_passed(sample.t) {
            // a prompt closed by the clock before this sample arrived
            self.counts.dropped_late += 1;
            return Routed::Late;
        }
        self.last_t = Some(sample.t);
        self.close_through(sample.t);

        let Some(window) = self.windows.get(self.current) else {
            self.counts.between += 1;
            return Routed::Between;
        };
        let rel = window.relative(sample.t);
        if !window.contains_relative(rel) {
            self.counts.between += 1;
            return Routed::Between;
        }
        let eval = self.tol.evaluate(sample.ux, sample.uy, &window.spec);
        self.open.get_or_insert_with(OpenPrompt::new).push(CommandVector::new(rel, sample.ux, sample.uy), eval);
        self.counts.scored += 1;
        Routed::Prompt(window.spec.m)
    }

    /// Close every prompt whose deadline lies before `t`. Returns how many closed.
    pub fn close_through(&mut self, t: f64) -> usize {
        let before = self.closed.len();
        while let Some(window) = self.windows.get(self.current) {
            if !window.has_passed(t) {
                break;
            }
            self.close_current();
        }
        self.closed.len() - before
    }

    fn close_current(&mut self) {
        let spec = self.windows[self.current].spec;
        let event = self.open.take().unwrap_or_else(OpenPrompt::new).close(spec);
        self.sums.add(&event);
        self.closed.push(event);
        self.current += 1;
    }

    /// Score over the prompts closed so far.
    pub fn snapshot(&self) -> CommandScore {
        self.sums.finish(self.closed.len(), self.closed.clone())
    }

    /// Close all remaining prompts and return the trial score.
    pub fn finish(mut self) -> Result<CommandScore, ScoreError> {
        if self.windows.is_empty() {
            return Err(ScoreError::NoPrompts);
        }
        while self.current < self.windows.len() {
            self.close_current();
        }
        let n = self.windows.len();
        Ok(self.sums.finish(n, self.closed))
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::geom::Vec2;

    fn tol() -> Tolerance {
        Tolerance { angle: 5f64.to_radians(), magnitude: None, deadzone: 0.1 }
    }

    fn spec(theta: f64, duration: f64) -> PromptSpec {
        PromptSpec { m: 1, theta_hat: theta, mag_hat: None, duration }
    }

    fn stream(duration: f64, dt: f64, f: impl Fn(f64) -> (f64, f64)) -> Vec<CommandVector> {
        let n = (duration / dt).round() as usize;
        (1..=n)
            .map(|k| {
                let t = k as f64 * dt;
                let (x, y) = f(t);
                CommandVector::new(t, x, y)
            })
            .collect()
    }

    #[test]
    fn step_response_settles_at_onset() {
        let p = spec(PI / 4.0, 1.0);
        let target = p.target();
        let samples = stream(1.0, 0.02, |t| if t >= 0.3 - 1e-9 { (target.x, target.y) } else { (0.0, 0.0) });
        let e = score_prompt(&samples, &p, &tol());
        assert!((e.t_first_within.unwrap() - 0.3).abs() < 1e-9);
        assert_eq!(e.t_first_within, e.t_settled);
        assert_eq!(e.initial_accuracy, Some(1.0));
        assert_eq!(e.settled_accuracy, Some(1.0));
        assert!(e.tracked);
    }

    #[test]
    fn never_within_is_untracked() {
        let p = spec(0.0, 1.0);
        let samples = stream(1.0, 0.02, |_| (0.0, 1.0));
        let e = score_prompt(&samples, &p, &tol());
        assert!(!e.tracked);
        assert_eq!(e.t_first_within, None);
        assert_eq!(e.t_settled, None);
        assert_eq!(e.initial_accuracy, None);
    }

    #[test]
    fn transient_response_does_not_settle() {
        let p = spec(0.0, 1.0);
        let samples =
            stream(1.0, 0.02, |t| if (0.4 - 1e-9..0.6 - 1e-9).contains(&t) { (1.0, 0.0) } else { (0.0, 1.0) });
        let e = score_prompt(&samples, &p, &tol());
        assert!((e.t_first_within.unwrap() - 0.4).abs() < 1e-9);
        assert_eq!(e.t_settled, None);
        // brute force: no suffix is entirely within tolerance
        for i in 0..samples.len() {
            assert!(samples[i..].iter().any(|s| !tol().evaluate(s.ux, s.uy, &p).within));
        }
    }

    #[test]
    fn empty_prompt_is_untracked() {
        let e = score_prompt(&[], &spec(0.0, 1.0), &tol());
        assert!(!e.tracked);
        assert!(e.samples.is_empty());
    }

    #[test]
    fn settled_accuracy_is_suffix_mean() {
        let p = spec(0.0, 1.0);
        let off = Vec2::from_angle(3f64.to_radians());
        let samples = vec![
            CommandVector::new(0.1, 1.0, 0.0),
            CommandVector::new(0.2, 0.0, 1.0),
            CommandVector::new(0.3, 1.0, 0.0),
            CommandVector::new(0.4, off.x, off.y),
        ];
        let e = score_prompt(&samples, &p, &tol());
        assert_eq!(e.t_first_within, Some(0.1));
        assert_eq!(e.t_settled, Some(0.3));
        let a = 1.0 - 3f64.to_radians() / PI;
        assert!((e.settled_accuracy.unwrap() - (1.0 + a) / 2.0).abs() < 1e-12);
    }

    fn tracked_event(t: Option<f64>) -> PromptEvent {
        PromptEvent {
            spec: spec(0.0, 1.0),
            samples: vec![],
            t_first_within: t,
            t_settled: t,
            tracked: t.is_some(),
            initial_accuracy: t.map(|_| 1.0),
            settled_accuracy: t.map(|_| 1.0),
        }
    }

    #[test]
    fn aggregate_fixed_delay() {
        let events = (0..20).map(|_| tracked_event(Some(0.25))).collect();
        let s = aggregate(events, 20).unwrap();
        assert!((s.t_d.unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(s.r_p, 100.0);
    }

    #[test]
    fn aggregate_counts_tracked() {
        let events = (0..20).map(|i| tracked_event((i < 15).then_some(0.5))).collect();
        let s = aggregate(events, 20).unwrap();
        assert_eq!(s.r_p, 75.0);
        assert_eq!(s.responded_count, 15);
    }

    #[test]
    fn aggregate_nothing_tracked() {
        let events = (0..4).map(|_| tracked_event(None)).collect();
        let s = aggregate(events, 4).unwrap();
        assert_eq!(s.r_p, 0.0);
        assert_eq!((s.t_d, s.t_s, s.a_r, s.a_s), (None, None, None, None));
        assert_eq!(aggregate(vec![], 0), Err(ScoreError::NoPrompts));
    }

    #[test]
    fn streaming_single_prompt_matches_score_prompt() {
        let p = spec(PI / 2.0, 1.3);
        let w = PromptWindow { spec: p, onset: 0.0 };
        let samples = stream(1.3, 0.02, |t| if t > 0.5 { (0.02, 1.0) } else { (1.0, 0.3) });
        let mut scorer = StreamingScorer::new(vec![w], tol());
        for s in &samples {
            assert!(scorer.push(*s).accepted());
        }
        let streamed = scorer.finish().unwrap();
        let direct = score_prompt(&samples, &p, &tol());
        assert_eq!(streamed.per_prompt[0], direct);
    }

    #[test]
    fn empty_stream_closes_to_zero() {
        let w = PromptWindow { spec: spec(0.0, 1.0), onset: 0.0 };
        let s = StreamingScorer::new(vec![w], tol()).finish().unwrap();
        assert_eq!(s.r_p, 0.0);
        assert_eq!(s.t_d, None);
    }

    #[test]
    fn out_of_order_and_late_samples_are_counted() {
        let windows = vec![
            PromptWindow { spec: spec(0.0, 1.0), onset: 0.0 },
            PromptWindow { spec: PromptSpec { m: 2, ..spec(0.0, 1.0) }, onset: 1.5 },
        ];
        let mut scorer = StreamingScorer::new(windows, tol());
        assert_eq!(scorer.push(CommandVector::new(0.5, 1.0, 0.0)), Routed::Prompt(1));
        assert_eq!(scorer.push(CommandVector::new(0.4, 1.0, 0.0)), Routed::OutOfOrder);
        assert_eq!(scorer.close_through(1.2), 1);
        assert_eq!(scorer.push(CommandVector::new(0.9, 1.0, 0.0)), Routed::Late);
        assert_eq!(scorer.push(CommandVector::new(1.3, 1.0, 0.0)), Routed::Between);
        assert_eq!(scorer.push(CommandVector::new(1.6, f64::NAN, 0.0)), Routed::NonFinite);
        assert_eq!(scorer.push(CommandVector::new(1.6, 1.0, 0.0)), Routed::Prompt(2));
        let c = scorer.counts();
        assert_eq!(c.received, 6);
        assert_eq!(c.received, c.scored + c.between + c.dropped());
    }

    #[test]
    fn batch_rejects_unordered() {
        let w = PromptWindow { spec: spec(0.0, 1.0), onset: 0.0 };
        let samples = [CommandVector::new(0.5, 1.0, 0.0), CommandVector::new(0.4, 1.0, 0.0)];
        assert!(matches!(batch_score(&[w], &samples, &tol()), Err(ScoreError::OutOfOrder { .. })));
    }
}
