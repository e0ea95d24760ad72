use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::formula::RankPrediction;

/// Column order of the CSV report.
pub const CSV_COLUMNS: [&str; 16] = [
    "kind", "variant", "trial", "seed", "n", "m", "rank", "nullity", "core_vars", "core_checks", "metric", "value",
    "stderr", "expected", "tolerance", "pass",
];

/// Metric name used for flag rows.
pub const FLAG_METRIC: &str = "flag";

/// Flag raised when the core comparison falls outside the theorem's hypothesis.
pub const HYPOTHESIS_VIOLATED: &str = "hypothesis-violated";

/// One sampled instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialRecord {
    pub variant: String,
    pub trial: usize,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub rank: Option<usize>,
    pub nullity: Option<usize>,
    pub core_vars: Option<usize>,
    pub core_checks: Option<usize>,
}

/// A statistic over trials, optionally judged against an expected value.
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub variant: String,
    pub metric: String,
    pub value: f64,
    pub std_error: f64,
    pub expected: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: Option<bool>,
}

impl Aggregate {
    /// Mean and standard error of `xs`, judged when both `expected` and
    /// `tolerance` are given.
    pub fn judged(variant: &str, metric: &str, xs: &[f64], expected: Option<f64>, tolerance: Option<f64>) -> Self {
        let (value, std_error) = crate::pinning::mean_and_std_error(xs);
        let pass = expected.zip(tolerance).map(|(e, t)| (value - e).abs() <= t);
        Aggregate { variant: variant.into(), metric: metric.into(), value, std_error, expected, tolerance, pass }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentReport {
    pub kind: String,
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<Aggregate>,
    pub prediction: Option<RankPrediction>,
    pub flags: Vec<String>,
}

impl ExperimentReport {
    /// True when no judged aggregate failed.
    pub fn all_pass(&self) -> bool {
        self.aggregates.iter().all(|a| a.pass != Some(false))
    }

    pub fn aggregate(&self, variant: &str, metric: &str) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.variant == variant && a.metric == metric)
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Pretty,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "pretty" => Ok(ReportFormat::Pretty),
            other => Err(Error::InvalidArgument(format!("unknown format {other:?}"))),
        }
    }
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

/// Renders reports. CSV output holds one row per trial, then one row per
/// aggregate and flag, under a single header.
pub fn emit_report(reports: &[ExperimentReport], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => emit_csv(reports),
        ReportFormat::Pretty => Ok(emit_pretty(reports)),
    }
}

fn emit_csv(reports: &[ExperimentReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for r in reports {
        for t in &r.records {
            w.write_record([
                r.kind.clone(),
                t.variant.clone(),
                t.trial.to_string(),
                t.seed.to_string(),
                t.n.to_string(),
                t.m.to_string(),
                opt(t.rank),
                opt(t.nullity),
                opt(t.core_vars),
                opt(t.core_checks),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ])?;
        }
        for a in &r.aggregates {
            let mut row = vec![r.kind.clone(), a.variant.clone()];
            row.extend(std::iter::repeat_n(String::new(), 8));
            row.extend([
                a.metric.clone(),
                a.value.to_string(),
                a.std_error.to_string(),
                opt(a.expected),
                opt(a.tolerance),
                opt(a.pass),
            ]);
            w.write_record(&row)?;
        }
        for f in &r.flags {
            let mut row = vec![r.kind.clone(), f.clone()];
            row.extend(std::iter::repeat_n(String::new(), 8));
            row.push(FLAG_METRIC.into());
            row.extend(std::iter::repeat_n(String::new(), 5));
            w.write_record(&row)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn emit_pretty(reports: &[ExperimentReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let _ = writeln!(out, "== {} ({} trials) ==", r.kind, r.records.len());
        if let Some(p) = &r.prediction {
            let _ = writeln!(
                out,
                "prediction: rank/n = {:.6}  alpha* = {:.6}  rho = {:.6}  core = ({:.6}, {:.6})  {}",
                p.rank_fraction, p.alpha_star, p.rho, p.core_var_fraction, p.core_check_fraction, p.tightness
            );
        }
        for a in &r.aggregates {
            let verdict = match a.pass {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "-",
            };
            let _ = writeln!(
                out,
                "{:<28} {:<22} {:>10.6} +- {:<9.6} expected {:<10} tol {:<6} {}",
                a.variant,
                a.metric,
                a.value,
                a.std_error,
                a.expected.map_or("-".into(), |e| format!("{e:.6}")),
                a.tolerance.map_or("-".into(), |t| t.to_string()),
                verdict
            );
        }
        for f in &r.flags {
            let _ = writeln!(out, "flag: {f}");
        }
    }
    out
}

fn field<T: FromStr>(rec: &csv::StringRecord, idx: usize, line: usize) -> Result<Option<T>> {
    let s = rec.get(idx).unwrap_or("");
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| Error::Parse { line, msg: format!("bad {} value {s:?}", CSV_COLUMNS[idx]) })
}

fn required<T: FromStr>(rec: &csv::StringRecord, idx: usize, line: usize) -> Result<T> {
    field(rec, idx, line)?.ok_or_else(|| Error::Parse { line, msg: format!("missing {}", CSV_COLUMNS[idx]) })
}

/// Reads CSV produced by [`emit_report`] back into reports (without the
/// prediction block, which the CSV does not carry).
pub fn parse_report_csv(text: &str) -> Result<Vec<ExperimentReport>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers()?.clone();
    if header.iter().ne(CSV_COLUMNS) {
        return Err(Error::Parse { line: 1, msg: "unexpected header".into() });
    }
    let mut reports: Vec<ExperimentReport> = Vec::new();
    for (idx, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = idx + 2;
        let kind = rec.get(0).unwrap_or("").to_string();
        if reports.last().is_none_or(|r| r.kind != kind) {
            reports.push(ExperimentReport { kind: kind.clone(), ..Default::default() });
        }
        let report = reports.last_mut().expect("pushed above");
        let variant = rec.get(1).unwrap_or("").to_string();
        match rec.get(10).unwrap_or("") {
            "" => report.records.push(TrialRecord {
                variant,
                trial: required(&rec, 2, line)?,
                seed: required(&rec, 3, line)?,
                n: required(&rec, 4, line)?,
                m: required(&rec, 5, line)?,
                rank: field(&rec, 6, line)?,
                nullity: field(&rec, 7, line)?,
                core_vars: field(&rec, 8, line)?,
                core_checks: field(&rec, 9, line)?,
            }),
            FLAG_METRIC => report.flags.push(variant),
            metric => report.aggregates.push(Aggregate {
                variant,
                metric: metric.to_string(),
                value: required(&rec, 11, line)?,
                std_error: required(&rec, 12, line)?,
                expected: field(&rec, 13, line)?,
                tolerance: field(&rec, 14, line)?,
                pass: field(&rec, 15, line)?,
            }),
        }
    }
    Ok(reports)
}
