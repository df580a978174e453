//! Atomic file output and number encoding.

use std::io::Write;
use std::path::Path;

use hwm_core::dynamics::Trajectory;
use hwm_core::C64;
use serde_json::{json, Value};

/// A finite number, or `"inf"`, `"-inf"`, `"nan"`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|x| num(*x)).collect())
}

pub fn cnum(z: C64) -> Value {
    json!([num(z.re), num(z.im)])
}

pub fn cnums(zs: &[C64]) -> Value {
    Value::Array(zs.iter().map(|z| cnum(*z)).collect())
}

/// Write through a temporary file in the same directory and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_json(path: &Path, value: &Value) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("values are serialisable");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Header of the trajectory table for `n` solitons.
pub fn trajectory_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for j in 1..=n {
        h.push(format!("x{j}_re"));
        h.push(format!("x{j}_im"));
    }
    for j in 1..=n {
        h.push(format!("v{j}_re"));
        h.push(format!("v{j}_im"));
    }
    for j in 1..=n {
        for c in 1..=3 {
            h.push(format!("s{j}_{c}_re"));
            h.push(format!("s{j}_{c}_im"));
        }
    }
    for j in 1..=n {
        h.push(format!("nilpotency{j}"));
        h.push(format!("orthogonality{j}"));
    }
    h.push("max_residual".to_string());
    h
}

/// RFC 4180 table of every sample, in time order. Floats use the shortest
/// representation that round-trips.
pub fn trajectory_csv(traj: &Trajectory) -> Vec<u8> {
    let n = traj.samples[0].1.len();
    let mut order: Vec<usize> = (0..traj.samples.len()).collect();
    order.sort_by(|a, b| traj.samples[*a].0.total_cmp(&traj.samples[*b].0));
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(trajectory_header(n)).expect("in-memory write");
    for k in order {
        let (t, st) = &traj.samples[k];
        let mon = &traj.monitors[k];
        let mut row = vec![*t];
        for p in &st.poles {
            row.extend([p.re, p.im]);
        }
        for v in &st.velocities {
            row.extend([v.re, v.im]);
        }
        for s in &st.spins {
            for c in &s.0 {
                row.extend([c.re, c.im]);
            }
        }
        for j in 0..n {
            row.extend([mon.nilpotency[j], mon.orthogonality[j]]);
        }
        row.push(mon.max_residual);
        w.write_record(row.iter().map(|x| format!("{x:?}"))).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}
