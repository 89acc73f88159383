use super::ScoreReport;

/// One labelled line of a score table.
pub struct TableRow<'a> {
    pub label: String,
    pub report: &'a ScoreReport,
}

/// Aligned-column text table, scores in percent.
pub fn render_table(title: &str, rows: &[TableRow<'_>]) -> String {
    let width = rows
        .iter()
        .map(|r| r.label.len())
        .chain([title.len()])
        .max()
        .unwrap_or(0);
    let mut out = format!(
        "{title:<width$}  {:>7}  {:>7}  {:>7}  {:>6}  {:>6}  {:>6}\n",
        "P", "R", "F1", "TP", "FP", "FN"
    );
    for r in rows {
        let s = r.report;
        out.push_str(&format!(
            "{:<width$}  {:>7.2}  {:>7.2}  {:>7.2}  {:>6}  {:>6}  {:>6}\n",
            r.label,
            100.0 * s.precision,
            100.0 * s.recall,
            100.0 * s.f1,
            s.counts.tp,
            s.counts.fp,
            s.counts.fn_
        ));
    }
    out
}
