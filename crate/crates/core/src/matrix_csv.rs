//! Gradient matrix files: one row per worker, comma-separated reals, optional
//! `#` header/comment lines.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::vector::GradVec;

/// Parses a gradient matrix. Blank lines are skipped; every data row must have
/// the same number of finite columns.
pub fn parse_grad_matrix(text: &str) -> Result<Vec<GradVec>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows: Vec<GradVec> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::Parse { line, message: e.to_string() }
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let values = record
            .iter()
            .map(|field| match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(v) => Err(Error::Parse { line, message: format!("non-finite value {v}") }),
                Err(_) => Err(Error::Parse { line, message: format!("not a number: {field:?}") }),
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.dim() != values.len() {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} columns, found {}", first.dim(), values.len()),
                });
            }
        }
        rows.push(GradVec::new(values));
    }
    if rows.is_empty() {
        return Err(Error::Parse { line: 0, message: "no gradient rows".into() });
    }
    Ok(rows)
}

pub fn read_grad_matrix(mut source: impl Read) -> Result<Vec<GradVec>> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    parse_grad_matrix(&text)
}

/// Writes rows with [`fmt_real`] formatting.
pub fn write_grad_matrix(mut sink: impl Write, rows: &[GradVec]) -> Result<()> {
    for row in rows {
        let line: Vec<String> = row.iter().map(|&v| fmt_real(v)).collect();
        writeln!(sink, "{}", line.join(","))?;
    }
    Ok(())
}

/// Formats a real with 9 significant digits, trailing zeros removed
/// (the C `%.9g` convention).
pub fn fmt_real(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let fixed = format!("{v:.decimals$}");
        strip_zeros(&fixed)
    } else {
        format!("{}e{}{:02}", strip_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn strip_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}
