use std::fmt::Write as _;

use assess_core::OutcomeReport;

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "not defined".to_owned(), |v| format!("{v:.4}"))
}

pub fn report_table(label: &str, report: &OutcomeReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{label} ({})", report.task);
    for (measure, value) in report.measures() {
        let _ = writeln!(out, "  {:<16} {}", measure.name(), cell(value));
    }
    if !report.per_segment.is_empty() {
        let _ = writeln!(out, "  {:>3} {:<6} {:>8} {:>8} {:>8}", "seg", "kind", "length", "v", "s");
        for row in &report.per_segment {
            let kind = format!("{:?}", row.kind).to_lowercase();
            let _ = writeln!(
                out,
                "  {:>3} {:<6} {:>8.3} {:>8} {:>8}{}",
                row.segment_id,
                kind,
                row.length,
                row.v.map_or("-".into(), |v| format!("{v:.3}")),
                row.s.map_or("-".into(), |v| format!("{v:.2}")),
                row.note.as_deref().map(|n| format!("  ({n})")).unwrap_or_default()
            );
        }
    }
    out
}
