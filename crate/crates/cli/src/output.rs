use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use ips_core::sim::format_sig;
use serde::Serialize;
use serde_json::Value;

pub const DIGITS: usize = 12;

pub fn num(v: f64) -> String {
    format_sig(v, DIGITS)
}

/// Rounds every float in `v` to [`DIGITS`] significant digits.
fn round(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            let r: f64 = num(x).parse().expect("formatted float parses");
            serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round(v))).collect()),
        other => other,
    }
}

pub fn json_string<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string_pretty(&round(v))?)
}

pub fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "{}", json_string(value)?)?;
    Ok(())
}

/// Runs `write` against the file at `path`, or standard output when `path` is `None`.
pub fn with_sink(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            let mut w = BufWriter::new(file);
            write(&mut w).with_context(|| format!("writing {}", p.display()))?;
            w.flush()?;
        }
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            write(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

/// Grayscale raster with the first row written on top.
pub fn write_pgm(w: &mut dyn Write, width: usize, rows: &[Vec<u8>], binary: bool) -> io::Result<()> {
    if binary {
        write!(w, "P5\n{width} {}\n255\n", rows.len())?;
        for row in rows {
            w.write_all(row)?;
        }
    } else {
        writeln!(w, "P2\n{width} {}\n255", rows.len())?;
        for row in rows {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
    }
    Ok(())
}
