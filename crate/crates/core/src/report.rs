//! JSON, CSV and plain-text renderings of audit and ratio reports.
//!
//! JSON and CSV carry full-precision numbers (shortest round-trip form), so
//! both parse back to the same values. Tables round to six decimals.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::audit::{AuditCampaign, AuditReport, CampaignHeader, MonotonicityCheck, RatioEstimate};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    Table,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "table" => Ok(OutputFormat::Table),
            other => Err(format!("unknown format {other:?} (expected json, csv or table)")),
        }
    }
}

/// Up to six decimals, trailing zeros trimmed.
pub fn fmt_num(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn csv_header(h: &CampaignHeader) -> String {
    format!(
        "# mechanism={} mode={} trials={} n_min={} n_max={} d={} seed={} injected={} generator=\"{}\"\n",
        h.mechanism, h.mode, h.trials, h.n_min, h.n_max, h.d, h.seed, h.injected, h.generator
    )
}

fn csv_body<R: Serialize>(rows: &[R]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    line(headers.to_vec(), &mut out);
    let rules: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    line(rules.iter().map(String::as_str).collect(), &mut out);
    for row in rows {
        line(row.iter().map(String::as_str).collect(), &mut out);
    }
    out
}

fn header_lines(h: &CampaignHeader) -> String {
    format!(
        "mechanism: {}\nmode: {}\ntrials: {} (+{} injected)\nagents: {}..={}\nsegment: {}\nseed: {}\ngenerator: {}\n",
        h.mechanism,
        h.mode,
        h.trials,
        h.injected,
        h.n_min,
        h.n_max,
        fmt_num(h.d),
        h.seed,
        h.generator
    )
}

pub trait Render {
    fn to_json(&self) -> String;
    fn to_csv(&self) -> String;
    fn to_table(&self) -> String;

    fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => self.to_json(),
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Table => self.to_table(),
        }
    }
}

impl Render for AuditReport {
    fn to_json(&self) -> String {
        to_json(self)
    }

    fn to_csv(&self) -> String {
        #[derive(Serialize)]
        struct Row {
            agent: usize,
            reported: String,
            stage: String,
            facility: Option<f64>,
            truthful_utility: f64,
            deviating_utility: f64,
        }
        let rows: Vec<Row> = self
            .violations
            .iter()
            .map(|v| Row {
                agent: v.agent,
                reported: v.reported.token().into(),
                stage: stage_token(v.stage).into(),
                facility: v.facility,
                truthful_utility: v.truthful_utility,
                deviating_utility: v.deviating_utility,
            })
            .collect();
        let mut out = format!(
            "# mechanism={} truthful={} max_gain={}\n",
            self.mechanism, self.truthful, self.max_gain
        );
        if rows.is_empty() {
            out.push_str("agent,reported,stage,facility,truthful_utility,deviating_utility\n");
        } else {
            out.push_str(&csv_body(&rows));
        }
        out
    }

    fn to_table(&self) -> String {
        let mut out = format!(
            "mechanism: {}\nverdict: {}\nmax gain: {}\n",
            self.mechanism,
            if self.truthful { "truthful" } else { "not truthful" },
            fmt_num(self.max_gain)
        );
        if !self.violations.is_empty() {
            out.push('\n');
            let rows: Vec<Vec<String>> = self
                .violations
                .iter()
                .map(|v| {
                    vec![
                        v.agent.to_string(),
                        v.reported.token().into(),
                        stage_token(v.stage).into(),
                        v.facility.map_or("expected".into(), fmt_num),
                        fmt_num(v.truthful_utility),
                        fmt_num(v.deviating_utility),
                        fmt_num(v.gain()),
                    ]
                })
                .collect();
            out.push_str(&table(
                &["agent", "report", "stage", "facility", "truthful", "deviating", "gain"],
                &rows,
            ));
        }
        out
    }
}

fn stage_token(stage: crate::mechanisms::Stage) -> &'static str {
    match stage {
        crate::mechanisms::Stage::Allocated => "allocated",
        crate::mechanisms::Stage::Exchanged => "exchanged",
    }
}

impl Render for AuditCampaign {
    fn to_json(&self) -> String {
        to_json(self)
    }

    fn to_csv(&self) -> String {
        let mut out = csv_header(&self.header);
        out.push_str(&csv_body(&self.rows));
        out
    }

    fn to_table(&self) -> String {
        let mut out = header_lines(&self.header);
        let verdict = if self.all_truthful() {
            format!("truthful on all trials, max_gain {}", fmt_num(self.max_gain))
        } else {
            format!(
                "{} of {} trials violated truthfulness, max_gain {}",
                self.violating_trials,
                self.rows.len(),
                fmt_num(self.max_gain)
            )
        };
        let _ = writeln!(out, "result: {verdict}");
        if let Some(w) = &self.first_violation {
            let _ = writeln!(out, "\nfirst violation (trial {}):", w.trial);
            out.push_str(&w.report.to_table());
        }
        out
    }
}

impl Render for RatioEstimate {
    fn to_json(&self) -> String {
        to_json(self)
    }

    fn to_csv(&self) -> String {
        let mut out = csv_header(&self.header);
        out.push_str(&csv_body(&self.rows));
        out
    }

    fn to_table(&self) -> String {
        let mut out = header_lines(&self.header);
        let _ = writeln!(
            out,
            "worst ratio: {} (trial {}, n = {})",
            fmt_num(self.worst_ratio),
            self.worst_trial,
            self.worst_instance.n()
        );
        let _ = writeln!(out, "oracle discrepancies: {}", self.oracle_discrepancies);
        let mut worst: Vec<_> = self.rows.iter().collect();
        worst.sort_by(|a, b| b.ratio.total_cmp(&a.ratio).then(a.trial.cmp(&b.trial)));
        let rows: Vec<Vec<String>> = worst
            .into_iter()
            .take(10)
            .map(|r| {
                vec![
                    r.trial.to_string(),
                    r.n.to_string(),
                    fmt_num(r.optimum),
                    fmt_num(r.achieved),
                    fmt_num(r.ratio),
                ]
            })
            .collect();
        out.push('\n');
        out.push_str(&table(&["trial", "n", "optimum", "achieved", "ratio"], &rows));
        out
    }
}

impl Render for MonotonicityCheck {
    fn to_json(&self) -> String {
        to_json(self)
    }

    fn to_csv(&self) -> String {
        format!(
            "holds,trials,counterexample_trial\n{},{},{}\n",
            self.holds,
            self.trials,
            self.counterexample
                .as_ref()
                .map_or(String::new(), |c| c.trial.to_string())
        )
    }

    fn to_table(&self) -> String {
        match &self.counterexample {
            None => format!("welfare monotone on all {} trials\n", self.trials),
            Some(c) => format!(
                "counterexample at trial {}: {:?} (facility {})\n",
                c.trial,
                c.failure,
                fmt_num(c.facility)
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        assert_eq!(fmt_num(35.0), "35");
        assert_eq!(fmt_num(6.5), "6.5");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(2.0000000001), "2");
    }

    #[test]
    fn format_tokens() {
        assert_eq!("json".parse::<OutputFormat>().unwrap(), OutputFormat::Json);
        assert_eq!("csv".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
        assert_eq!("table".parse::<OutputFormat>().unwrap(), OutputFormat::Table);
        assert!("xml".parse::<OutputFormat>().is_err());
    }
}
