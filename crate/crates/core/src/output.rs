//! CSV and JSON emission with numbers rounded to 15 significant digits.

use crate::dde::{Event, SimulationResult};
use crate::error::{Error, Result};
use crate::kernel::MemoryKernel;
use crate::structure::ModalStructure;
use serde::Serialize;
use serde_json::{Map, Value};
use std::io::Write;
use std::path::Path;

/// Scientific notation with 15 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    format!("{x:.14e}")
}

/// `x` rounded to 15 significant digits.
pub fn round15(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    fmt_num(x).parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round15(x)) {
                    *n = r;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON text of `value` with rounded floats and a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}

/// CSV text with the given header and preformatted rows.
pub fn csv_string<I>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(&row).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::invalid("csv", e.to_string()))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(text.as_bytes())?;
    f.flush()?;
    Ok(())
}

pub fn modes_csv(ms: &ModalStructure) -> Result<String> {
    csv_string(
        &["k", "omega", "damping", "tip_value"],
        (0..ms.len()).map(|k| {
            vec![(k + 1).to_string(), fmt_num(ms.omegas[k]), fmt_num(ms.dampings[k]), fmt_num(ms.tip_values[k])]
        }),
    )
}

/// Kernel samples `L(j eps)`; the first row is `tau = 0` with the raw value `L(0)`.
pub fn kernel_csv(kernel: &MemoryKernel) -> Result<String> {
    csv_string(
        &["tau", "L1", "L2"],
        kernel.values.iter().enumerate().map(|(j, v)| {
            let l = if j == 0 { kernel.function.eval(0.0) } else { *v };
            vec![fmt_num(j as f64 * kernel.eps), fmt_num(l[0]), fmt_num(l[1])]
        }),
    )
}

#[derive(Serialize)]
struct JumpRecord {
    tau: f64,
    #[serde(rename = "dL1")]
    dl1: f64,
    #[serde(rename = "dL2")]
    dl2: f64,
}

/// Kernel summary object.
pub fn kernel_summary(kernel: &MemoryKernel) -> Value {
    let jumps: Vec<JumpRecord> =
        kernel.jump_table.iter().map(|j| JumpRecord { tau: j.tau, dl1: j.delta[0], dl2: j.delta[1] }).collect();
    let mut m = Map::new();
    m.insert("L_plus".into(), serde_json::json!(kernel.l_plus));
    m.insert("L_infty".into(), serde_json::json!(kernel.l_infty));
    m.insert("verdict".into(), Value::String(kernel.verdict.as_str().into()));
    m.insert("jumps".into(), serde_json::to_value(jumps).unwrap_or(Value::Null));
    m.insert("plateau_window".into(), serde_json::json!([kernel.l_plus_window.0, kernel.l_plus_window.1]));
    m.insert("eps".into(), serde_json::json!(kernel.eps));
    m.insert("samples".into(), serde_json::json!(kernel.values.len()));
    m.insert("truncation_index".into(), serde_json::json!(kernel.truncation_index));
    Value::Object(m)
}

pub fn trajectory_csv(result: &SimulationResult) -> Result<String> {
    csv_string(
        &["t", "y1", "y2", "fc", "in_contact"],
        (0..result.times.len()).map(|i| {
            vec![
                fmt_num(result.times[i]),
                fmt_num(result.y[i][0]),
                fmt_num(result.y[i][1]),
                fmt_num(result.fc[i]),
                u8::from(result.in_contact[i]).to_string(),
            ]
        }),
    )
}

pub fn events_json(events: &[Event]) -> Result<String> {
    to_json_string(&events)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_significant_digits() {
        assert_eq!(fmt_num(1.0 / 3.0), "3.33333333333333e-1");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(round15(0.1 + 0.2), 0.3);
    }

    #[test]
    fn json_floats_rounded() {
        let s = to_json_string(&vec![0.1 + 0.2, 2.0]).unwrap();
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.3, 2.0]);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let s = csv_string(&["a", "b"], vec![vec!["1".into(), "2".into()]]).unwrap();
        assert_eq!(s, "a,b\n1,2\n");
    }
}
