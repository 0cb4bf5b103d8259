use std::path::Path;
use std::str::FromStr;

use serde_json::{json, Value};

use super::experiment::ExperimentResult;
use crate::error::HarnessError;

pub const CSV_COLUMNS: [&str; 15] = [
    "family",
    "d",
    "p",
    "mode",
    "shots",
    "gates",
    "failures",
    "rate",
    "ci_lo",
    "ci_hi",
    "tw_rate",
    "heralds_w",
    "heralds_c",
    "avg_delay",
    "secs_per_shot",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(format!("unknown format `{s}`")),
        }
    }
}

/// One report row as ordered (column, value) cells. `timing = false` zeroes
/// `secs_per_shot` so reruns compare byte for byte.
pub fn report_row(r: &ExperimentResult, timing: bool) -> Vec<(&'static str, Value)> {
    let c = &r.config;
    let vals = vec![
        json!(c.family.as_str()),
        json!(c.d),
        json!(c.p),
        json!(c.mode.as_str()),
        json!(r.shots),
        json!(r.gates),
        json!(r.failures),
        json!(r.rate),
        json!(r.ci_lo),
        json!(r.ci_hi),
        r.tw_rate.map_or(Value::Null, |x| json!(x)),
        json!(r.heralds_w),
        json!(r.heralds_c),
        json!(r.avg_delay),
        json!(if timing { r.secs_per_shot } else { 0.0 }),
    ];
    CSV_COLUMNS.iter().copied().zip(vals).collect()
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn render_report(results: &[ExperimentResult], format: ReportFormat, timing: bool) -> String {
    match format {
        ReportFormat::Csv => {
            let mut out = CSV_COLUMNS.join(",");
            out.push('\n');
            for r in results {
                let row: Vec<String> = report_row(r, timing).iter().map(|(_, v)| cell(v)).collect();
                out.push_str(&row.join(","));
                out.push('\n');
            }
            out
        }
        ReportFormat::Json => {
            let rows: Vec<Value> = results
                .iter()
                .map(|r| Value::Object(report_row(r, timing).into_iter().map(|(k, v)| (k.to_string(), v)).collect()))
                .collect();
            let mut s = serde_json::to_string_pretty(&rows).expect("report rows serialize");
            s.push('\n');
            s
        }
    }
}

pub fn emit_report(results: &[ExperimentResult], format: ReportFormat, path: &Path, timing: bool) -> Result<(), HarnessError> {
    std::fs::write(path, render_report(results, format, timing))?;
    Ok(())
}

/// Parses a CSV report back into rows of cells.
pub fn parse_csv_report(text: &str) -> Result<Vec<Vec<String>>, HarnessError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != CSV_COLUMNS.join(",") {
        return Err(HarnessError::Invalid(format!("unexpected header `{header}`")));
    }
    Ok(lines.map(|l| l.split(',').map(str::to_string).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{ExperimentConfig, Family, Mode};
    use crate::harness::experiment::run_experiment;

    fn results() -> Vec<ExperimentResult> {
        let mut c = ExperimentConfig::new(Family::Tproxy, Mode::Windowed, 3, 0.004, 60);
        c.compare_global = true;
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&ExperimentConfig::new(Family::Memory, Mode::Global, 3, 0.004, 60)).unwrap();
        vec![a, b]
    }

    #[test]
    fn csv_and_json_agree() {
        let rs = results();
        let csv = parse_csv_report(&render_report(&rs, ReportFormat::Csv, true)).unwrap();
        let json: Vec<Value> = serde_json::from_str(&render_report(&rs, ReportFormat::Json, true)).unwrap();
        assert_eq!(csv.len(), json.len());
        for (row, obj) in csv.iter().zip(&json) {
            for (i, col) in CSV_COLUMNS.iter().enumerate() {
                assert_eq!(row[i], cell(&obj[*col]), "{col}");
            }
        }
        // the memory row has no TW comparison
        assert_eq!(csv[1][10], "");
    }

    #[test]
    fn reruns_are_byte_identical() {
        let a = render_report(&results(), ReportFormat::Csv, false);
        let b = render_report(&results(), ReportFormat::Csv, false);
        assert_eq!(a, b);
        let dir = tempdir();
        let path = dir.join("r.json");
        emit_report(&results(), ReportFormat::Json, &path, false).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), render_report(&results(), ReportFormat::Json, false));
        assert!(emit_report(&results(), ReportFormat::Csv, &dir.join("missing/r.csv"), false).is_err());
    }

    fn tempdir() -> std::path::PathBuf {
        let d = std::env::temp_dir().join(format!("ghostlab-report-{}", std::process::id()));
        std::fs::create_dir_all(&d).unwrap();
        d
    }
}
