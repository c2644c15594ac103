//! Trace CSV files.
//!
//! ```text
//! # method=mb_ellipsoid
//! # gamma=0.5
//! event,total_oracle_calls,n_value_evals,n_grad_evals,f_value,event_kind,set_log_volume,step_sqnorm
//! 0,2,1,1,6.5000000000000000e-1,init,4.6051701859880914e1,0.0000000000000000e0
//! # status=converged
//! ```
//!
//! Floats carry 17 significant digits; `set_log_volume` is empty for methods
//! without a candidate set. The final iterate is not stored.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::optimizers::{EventKind, RunStatus, RunTrace, TraceEvent};

pub const COLUMNS: [&str; 8] = [
    "event",
    "total_oracle_calls",
    "n_value_evals",
    "n_grad_evals",
    "f_value",
    "event_kind",
    "set_log_volume",
    "step_sqnorm",
];

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trace_to_csv(trace: &RunTrace) -> String {
    let mut out = String::new();
    for (k, v) in &trace.header {
        out.push_str(&format!("# {k}={v}\n"));
    }
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(COLUMNS).expect("in-memory write");
    for e in &trace.events {
        w.write_record([
            e.event_index.to_string(),
            e.total_oracle_calls().to_string(),
            e.n_value_evals.to_string(),
            e.n_grad_evals.to_string(),
            fmt_float(e.f_value),
            e.kind.as_str().to_string(),
            e.set_log_volume.map(fmt_float).unwrap_or_default(),
            fmt_float(e.step_sqnorm),
        ])
        .expect("in-memory write");
    }
    let body = w.into_inner().expect("in-memory flush");
    out.push_str(std::str::from_utf8(&body).expect("ascii csv"));
    if let Some(status) = trace.status {
        out.push_str(&format!("# status={}\n", status.as_str()));
    }
    out
}

pub fn write_trace(path: &Path, trace: &RunTrace) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(trace_to_csv(trace).as_bytes())
        .map_err(|e| Error::io(path, e))
}

pub fn read_trace(path: &Path) -> Result<RunTrace> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace(&text)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_trace(text: &str) -> Result<RunTrace> {
    let mut header = Vec::new();
    let mut status = None;
    let mut seen_columns = false;
    let mut body = String::new();
    let mut body_lines = Vec::new();

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if let Some(comment) = line.strip_prefix('#') {
            let (k, v) = comment
                .trim()
                .split_once('=')
                .ok_or_else(|| parse_err(lineno, "header line without `=`"))?;
            if seen_columns {
                if k.trim() != "status" {
                    return Err(parse_err(lineno, format!("unexpected trailer `{}`", k.trim())));
                }
                status = Some(v.trim().parse::<RunStatus>().map_err(|e| parse_err(lineno, e.to_string()))?);
            } else {
                header.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !seen_columns {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols != COLUMNS {
                return Err(parse_err(lineno, format!("unexpected column row `{line}`")));
            }
            seen_columns = true;
            continue;
        }
        if status.is_some() {
            return Err(parse_err(lineno, "data after the status row"));
        }
        body.push_str(line);
        body.push('\n');
        body_lines.push(lineno);
    }
    if !seen_columns {
        return Err(parse_err(text.lines().count().max(1), "missing column row"));
    }

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(body.as_bytes());
    let mut events = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let lineno = body_lines.get(k).copied().unwrap_or(0);
        let rec = rec.map_err(|e| parse_err(lineno, e.to_string()))?;
        if rec.len() != COLUMNS.len() {
            return Err(parse_err(
                lineno,
                format!("expected {} fields, found {}", COLUMNS.len(), rec.len()),
            ));
        }
        let num = |idx: usize| -> Result<u64> {
            rec[idx]
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad {}: `{}`", COLUMNS[idx], &rec[idx])))
        };
        let float = |idx: usize| -> Result<f64> {
            rec[idx]
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad {}: `{}`", COLUMNS[idx], &rec[idx])))
        };
        let event = TraceEvent {
            event_index: num(0)? as usize,
            n_value_evals: num(2)?,
            n_grad_evals: num(3)?,
            f_value: float(4)?,
            kind: rec[5]
                .parse::<EventKind>()
                .map_err(|e| parse_err(lineno, e.to_string()))?,
            set_log_volume: if rec[6].is_empty() { None } else { Some(float(6)?) },
            step_sqnorm: float(7)?,
        };
        if num(1)? != event.total_oracle_calls() {
            return Err(parse_err(lineno, "total_oracle_calls is not the sum of its parts"));
        }
        events.push(event);
    }
    Ok(RunTrace {
        header,
        events,
        status,
        x_final: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::{Method, RunConfig};

    fn sample() -> RunTrace {
        RunTrace {
            header: RunConfig::new(Method::MbBox, 12).header(),
            events: vec![
                TraceEvent {
                    event_index: 0,
                    n_value_evals: 1,
                    n_grad_evals: 1,
                    f_value: 0.1 + 0.2,
                    kind: EventKind::Init,
                    set_log_volume: Some(-1.0 / 3.0),
                    step_sqnorm: 0.0,
                },
                TraceEvent {
                    event_index: 1,
                    n_value_evals: 2,
                    n_grad_evals: 2,
                    f_value: f64::INFINITY,
                    kind: EventKind::FallbackShrink,
                    set_log_volume: None,
                    step_sqnorm: 1e-300,
                },
            ],
            status: Some(RunStatus::Diverged),
            x_final: Vec::new(),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let t = sample();
        assert_eq!(parse_trace(&trace_to_csv(&t)).unwrap(), t);
    }

    #[test]
    fn header_echoes_box_gamma() {
        let csv = trace_to_csv(&sample());
        assert!(csv.contains(&format!("# gamma={:?}\n", 1.0f64 / 24.0)));
    }

    #[test]
    fn empty_trace_is_header_only() {
        let t = RunTrace {
            header: vec![("method".into(), "gd_ls".into())],
            events: vec![],
            status: None,
            x_final: vec![],
        };
        let text = trace_to_csv(&t);
        assert_eq!(text.lines().count(), 2);
        assert_eq!(parse_trace(&text).unwrap(), t);
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let good = trace_to_csv(&sample());
        let lines: Vec<&str> = good.lines().collect();
        let n_header = lines.iter().take_while(|l| l.starts_with('#')).count();
        let row = n_header + 2; // 1-based line of the first event
        let mut broken: Vec<String> = lines.iter().map(|s| s.to_string()).collect();
        broken[row - 1] = "0,2,1,1,oops,init,,0".into();
        let err = parse_trace(&broken.join("\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line, .. } if line == row), "{err}");

        broken[row - 1] = "0,2,1".into();
        assert!(matches!(parse_trace(&broken.join("\n")), Err(Error::Parse { line, .. }) if line == row));
        assert!(parse_trace("# a=b\n").is_err());
    }
}
