//! Plain-text trace files and CSV exports.
//!
//! A trace file holds one sample per line, optionally preceded by
//! `# key=value` header lines (`sample_rate` is understood; `seed`, `family`
//! and `coherence_time` are kept as provenance). Alternatively each line may
//! be a `time,value` pair, with the sampling rate inferred from the time
//! column. Other `#` lines and blank lines are ignored.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimation::CovarianceCurve;
use crate::trace::SampleTrace;
use crate::DEFAULT_SAMPLE_RATE;

/// A parsed trace plus its `# key=value` headers, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub trace: SampleTrace,
    pub headers: Vec<(String, String)>,
}

impl TraceFile {
    pub fn header(&self, key: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// Shortest round-trip decimal, switching to exponent notation for very
/// large or very small magnitudes.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_number(s: &str, line: usize) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("`{}` is not a number", s.trim())))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("`{}` is not finite", s.trim())));
    }
    Ok(v)
}

/// Parse a trace file's contents.
pub fn parse_trace(text: &str) -> Result<TraceFile> {
    let mut headers = Vec::new();
    let mut header_rate: Option<(f64, usize)> = None;
    let mut values = Vec::new();
    let mut times = Vec::new();
    let mut two_column: Option<bool> = None;
    let mut first_data_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                let (k, v) = (k.trim(), v.trim());
                if k == "sample_rate" {
                    let rate = parse_number(v, line_no)?;
                    if rate <= 0.0 {
                        return Err(parse_err(line_no, "sample_rate must be positive"));
                    }
                    header_rate = Some((rate, line_no));
                }
                headers.push((k.to_string(), v.to_string()));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let is_pair = match fields.len() {
            1 => false,
            2 => true,
            n => {
                return Err(parse_err(
                    line_no,
                    format!("expected 1 or 2 columns, found {n}"),
                ))
            }
        };
        match two_column {
            None => {
                // A `time,value` column header is allowed before any data.
                if is_pair && fields[0].trim().eq_ignore_ascii_case("time") {
                    two_column = Some(true);
                    continue;
                }
                two_column = Some(is_pair);
                first_data_line = line_no;
            }
            Some(expected) if expected != is_pair => {
                return Err(parse_err(line_no, "inconsistent column count"));
            }
            Some(_) => {}
        }
        if first_data_line == 0 {
            first_data_line = line_no;
        }
        if is_pair {
            times.push((parse_number(fields[0], line_no)?, line_no));
            values.push((parse_number(fields[1], line_no)?, line_no));
        } else {
            values.push((parse_number(fields[0], line_no)?, line_no));
        }
    }

    if values.is_empty() {
        return Err(parse_err(text.lines().count().max(1), "no samples found"));
    }
    if let Some(&(v, line)) = values.iter().find(|(v, _)| *v < 0.0) {
        return Err(parse_err(line, format!("negative sample {v}")));
    }

    let rate = if times.len() >= 2 {
        let inferred = infer_rate(&times)?;
        if let Some((r, line)) = header_rate {
            if (r / inferred - 1.0).abs() > 0.01 {
                return Err(parse_err(
                    line,
                    format!("sample_rate={r} disagrees with the time column ({inferred})"),
                ));
            }
            r
        } else {
            inferred
        }
    } else {
        header_rate.map(|(r, _)| r).unwrap_or(DEFAULT_SAMPLE_RATE)
    };
    let samples = values.into_iter().map(|(v, _)| v).collect();
    let trace =
        SampleTrace::new(samples, rate).map_err(|e| parse_err(first_data_line, e.to_string()))?;
    Ok(TraceFile { trace, headers })
}

/// Rate from a time column: strictly increasing, every step within 1% of the
/// first one.
fn infer_rate(times: &[(f64, usize)]) -> Result<f64> {
    let n = times.len();
    let first_step = times[1].0 - times[0].0;
    for w in times.windows(2) {
        let step = w[1].0 - w[0].0;
        if step <= 0.0 {
            return Err(parse_err(w[1].1, "time column must increase strictly"));
        }
        if (step / first_step - 1.0).abs() > 0.01 {
            return Err(parse_err(w[1].1, "time column is not uniformly spaced"));
        }
    }
    Ok((n - 1) as f64 / (times[n - 1].0 - times[0].0))
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<TraceFile> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_trace(&text)
}

/// Render a trace with a `# sample_rate=` header followed by `headers`
/// (e.g. seed, family, coherence_time), one sample per line.
pub fn format_trace(trace: &SampleTrace, headers: &[(String, String)]) -> String {
    let mut out = String::with_capacity(trace.len() * 22 + 64);
    let _ = writeln!(out, "# sample_rate={}", format_float(trace.sample_rate()));
    for (k, v) in headers {
        let _ = writeln!(out, "# {k}={v}");
    }
    for &v in trace.samples() {
        out.push_str(&format_float(v));
        out.push('\n');
    }
    out
}

pub fn write_trace(
    path: impl AsRef<Path>,
    trace: &SampleTrace,
    headers: &[(String, String)],
) -> Result<()> {
    std::fs::write(path.as_ref(), format_trace(trace, headers))
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))
}

/// `lag_seconds,coefficient` CSV at round-trip precision.
pub fn format_covariance(curve: &CovarianceCurve) -> String {
    let mut out = String::from("lag_seconds,coefficient\n");
    for (t, b) in curve.lags().iter().zip(curve.coefficients()) {
        let _ = writeln!(out, "{},{}", format_float(*t), format_float(*b));
    }
    out
}

/// Parse the output of [`format_covariance`]; `#` lines are skipped.
pub fn parse_covariance(text: &str) -> Result<CovarianceCurve> {
    let mut lags = Vec::new();
    let mut coefficients = Vec::new();
    let mut seen_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_header {
            if line != "lag_seconds,coefficient" {
                return Err(parse_err(
                    line_no,
                    "expected `lag_seconds,coefficient` header",
                ));
            }
            seen_header = true;
            continue;
        }
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| parse_err(line_no, "expected two columns"))?;
        lags.push(parse_number(a, line_no)?);
        coefficients.push(parse_number(b, line_no)?);
    }
    CovarianceCurve::new(lags, coefficients).map_err(|e| parse_err(0, e.to_string()))
}
