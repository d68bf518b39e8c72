//! Trace CSV format: header `iter,x0,...,x{d-1},phase`, one row per kept state.

use std::fmt::Write as _;
use std::io::{self, Write};

use srld_core::dynamics::{Phase, Trace};
use srld_core::SampleMatrix;

/// Phase label of a kept state: the phase of the step that produced it.
fn state_phase(trace: &Trace, iter: usize) -> Phase {
    trace
        .steps()
        .get(iter.saturating_sub(1))
        .map_or(Phase::Burnin, |s| s.phase)
}

pub fn write_trace<W: Write>(trace: &Trace, mut out: W) -> io::Result<()> {
    let d = trace.dim();
    let mut line = String::from("iter");
    for j in 0..d {
        write!(line, ",x{j}").unwrap();
    }
    line.push_str(",phase\n");
    out.write_all(line.as_bytes())?;
    for (i, &k) in trace.iters().iter().enumerate() {
        line.clear();
        write!(line, "{k}").unwrap();
        for x in trace.state(i) {
            write!(line, ",{x}").unwrap();
        }
        writeln!(line, ",{}", state_phase(trace, k).as_str()).unwrap();
        out.write_all(line.as_bytes())?;
    }
    out.flush()
}

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("no data rows")]
    Empty,
}

/// Coordinates from a trace CSV, or from any CSV of plain numeric rows.
///
/// With a header, only `x<j>` columns are read. Rows whose `iter` is below
/// `skip_below` are dropped.
pub fn read_samples(text: &str, skip_below: usize) -> Result<SampleMatrix, CsvError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).peekable();
    let first = lines.peek().map(|(_, l)| *l).ok_or(CsvError::Empty)?;
    let has_header = first.split(',').any(|f| f.trim().parse::<f64>().is_err());
    let (coord_cols, iter_col) = if has_header {
        let names: Vec<&str> = first.split(',').map(str::trim).collect();
        lines.next();
        let coords: Vec<usize> = names
            .iter()
            .enumerate()
            .filter(|(_, n)| n.len() > 1 && n.starts_with('x') && n[1..].parse::<usize>().is_ok())
            .map(|(i, _)| i)
            .collect();
        if coords.is_empty() {
            return Err(CsvError::Malformed {
                line: 1,
                reason: "header has no x<j> columns".into(),
            });
        }
        (Some(coords), names.iter().position(|n| *n == "iter"))
    } else {
        (None, None)
    };

    let mut dim = coord_cols.as_ref().map(Vec::len);
    let mut data = Vec::new();
    let mut rows = 0;
    for (idx, l) in lines {
        let fields: Vec<&str> = l.split(',').map(str::trim).collect();
        let bad = |reason: String| CsvError::Malformed { line: idx + 1, reason };
        if let Some(c) = iter_col {
            let k: usize = fields
                .get(c)
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| bad("bad iter field".into()))?;
            if k < skip_below {
                continue;
            }
        }
        let picked: Vec<&str> = match &coord_cols {
            Some(cols) => cols
                .iter()
                .map(|&c| fields.get(c).copied().ok_or_else(|| bad("short row".into())))
                .collect::<Result<_, _>>()?,
            None => fields,
        };
        if *dim.get_or_insert(picked.len()) != picked.len() {
            return Err(bad(format!("expected {} values, got {}", dim.unwrap(), picked.len())));
        }
        for f in picked {
            let v: f64 = f.parse().map_err(|_| bad(format!("not a number: `{f}`")))?;
            data.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(CsvError::Empty);
    }
    SampleMatrix::new(dim.unwrap(), data).map_err(|e| CsvError::Malformed {
        line: 0,
        reason: e.to_string(),
    })
}

/// Plain numeric CSV with an `x0,...` header.
pub fn write_samples<W: Write>(samples: &SampleMatrix, mut out: W) -> io::Result<()> {
    let header: Vec<String> = (0..samples.dim()).map(|j| format!("x{j}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for r in samples.rows() {
        let fields: Vec<String> = r.iter().map(|x| x.to_string()).collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()
}
