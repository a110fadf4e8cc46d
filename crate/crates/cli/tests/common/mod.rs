//! Shared helpers for the command tests.

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_l4dec"))
}

pub fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Numbers equal to a relative 1e-9, everything else exactly.
pub fn json_close(a: &Value, b: &Value, at: &str) -> Result<(), String> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            if (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1e-300) {
                Ok(())
            } else {
                Err(format!("{at}: {x} != {y}"))
            }
        }
        (Value::Array(x), Value::Array(y)) => {
            if x.len() != y.len() {
                return Err(format!("{at}: length {} != {}", x.len(), y.len()));
            }
            x.iter().zip(y).enumerate().try_for_each(|(i, (u, v))| json_close(u, v, &format!("{at}[{i}]")))
        }
        (Value::Object(x), Value::Object(y)) => {
            let kx: Vec<_> = x.keys().collect();
            let ky: Vec<_> = y.keys().collect();
            if kx != ky {
                return Err(format!("{at}: keys {kx:?} != {ky:?}"));
            }
            x.iter().try_for_each(|(k, u)| json_close(u, &y[k], &format!("{at}.{k}")))
        }
        _ if a == b => Ok(()),
        _ => Err(format!("{at}: {a} != {b}")),
    }
}

/// CSV text as JSON rows of numbers or strings, so it can go through
/// [`json_close`].
pub fn csv_as_json(text: &str) -> Value {
    Value::Array(
        text.lines()
            .map(|line| {
                Value::Array(
                    line.split(',')
                        .map(|cell| match cell.parse::<f64>() {
                            Ok(v) if v.is_finite() => serde_json::json!(v),
                            _ => Value::String(cell.to_string()),
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

/// Compares `actual` with the stored golden file; `L4DEC_UPDATE_GOLDEN=1`
/// rewrites it instead.
pub fn check_golden(name: &str, actual: &Value) {
    let path = golden_path(name);
    if std::env::var_os("L4DEC_UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, serde_json::to_string_pretty(actual).unwrap() + "\n").unwrap();
        return;
    }
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let expected: Value = serde_json::from_str(&text).unwrap();
    if let Err(msg) = json_close(actual, &expected, name) {
        panic!("golden mismatch: {msg}");
    }
}
