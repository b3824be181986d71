//! CSV log and metrics file formats.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading
//! a log back reproduces the in-memory values bit for bit.

use super::run::MetricsSummary;
use crate::sim::LogRecord;
use crate::spatial::Vec3;
use crate::vehicle::ROTOR_COUNT;
use crate::wrench::Wrench;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed log line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub const METRIC_KEYS: [&str; 7] = [
    "pos_rmse_m",
    "att_rmse_rad",
    "max_tilt_rate",
    "sat_steps",
    "mask_switches",
    "final_pos_err_m",
    "final_att_err_rad",
];

const COLUMNS: usize = 1 + 3 + 4 + 3 + 2 * ROTOR_COUNT + 12 + 1 + ROTOR_COUNT;

pub fn csv_header() -> String {
    let mut cols: Vec<String> = [
        "t", "px", "py", "pz", "qw", "qx", "qy", "qz", "wx", "wy", "wz",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend((1..=ROTOR_COUNT).map(|i| format!("a{i}")));
    cols.extend((1..=ROTOR_COUNT).map(|i| format!("n{i}")));
    for prefix in ["Fc", "Mc", "Fr", "Mr"] {
        cols.extend(["x", "y", "z"].iter().map(|a| format!("{prefix}{a}")));
    }
    cols.push("mask".into());
    cols.extend((1..=ROTOR_COUNT).map(|i| format!("sat{i}")));
    cols.join(",")
}

pub fn format_csv(records: &[LogRecord]) -> String {
    let mut out = csv_header();
    out.push('\n');
    for r in records {
        let mut fields: Vec<f64> = Vec::with_capacity(COLUMNS);
        fields.push(r.time);
        fields.extend(r.position.iter());
        fields.extend(r.attitude);
        fields.extend(r.rates.iter());
        fields.extend(r.tilts);
        fields.extend(r.speeds);
        fields.extend(r.commanded.to_array());
        fields.extend(r.realized.to_array());
        let mut line = fields
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let _ = write!(line, ",{}", r.mask_size);
        for s in r.saturated {
            line.push_str(if s { ",1" } else { ",0" });
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Reads back a log written by [`format_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<LogRecord>, OutputError> {
    let mut lines = text.lines().enumerate();
    let bad = |line: usize, message: String| OutputError::Parse {
        line: line + 1,
        message,
    };
    match lines.next() {
        Some((_, h)) if h == csv_header() => {}
        _ => return Err(bad(0, "unexpected header".into())),
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != COLUMNS {
            return Err(bad(
                idx,
                format!("expected {COLUMNS} fields, got {}", fields.len()),
            ));
        }
        let num = |k: usize| -> Result<f64, OutputError> {
            fields[k]
                .parse()
                .map_err(|_| bad(idx, format!("bad number '{}'", fields[k])))
        };
        let v3 = |k: usize| -> Result<Vec3, OutputError> {
            Ok(Vec3::new(num(k)?, num(k + 1)?, num(k + 2)?))
        };
        let arr = |k: usize| -> Result<[f64; ROTOR_COUNT], OutputError> {
            let mut a = [0.0; ROTOR_COUNT];
            for (i, slot) in a.iter_mut().enumerate() {
                *slot = num(k + i)?;
            }
            Ok(a)
        };
        let tail = 1 + 3 + 4 + 3 + 2 * ROTOR_COUNT + 12;
        let mask_size = fields[tail]
            .parse()
            .map_err(|_| bad(idx, format!("bad mask '{}'", fields[tail])))?;
        let mut saturated = [false; ROTOR_COUNT];
        for (i, s) in saturated.iter_mut().enumerate() {
            *s = match fields[tail + 1 + i] {
                "1" => true,
                "0" => false,
                other => return Err(bad(idx, format!("bad flag '{other}'"))),
            };
        }
        let wr = 11 + 2 * ROTOR_COUNT;
        records.push(LogRecord {
            time: num(0)?,
            position: v3(1)?,
            attitude: [num(4)?, num(5)?, num(6)?, num(7)?],
            rates: v3(8)?,
            tilts: arr(11)?,
            speeds: arr(11 + ROTOR_COUNT)?,
            commanded: Wrench::new(v3(wr)?, v3(wr + 3)?),
            realized: Wrench::new(v3(wr + 6)?, v3(wr + 9)?),
            mask_size,
            saturated,
        });
    }
    Ok(records)
}

pub fn format_metrics(m: &MetricsSummary) -> String {
    format!(
        "pos_rmse_m = {}\natt_rmse_rad = {}\nmax_tilt_rate = {}\nsat_steps = {}\n\
         mask_switches = {}\nfinal_pos_err_m = {}\nfinal_att_err_rad = {}\n",
        m.pos_rmse_m,
        m.att_rmse_rad,
        m.max_tilt_rate,
        m.sat_steps,
        m.mask_switches,
        m.final_pos_err_m,
        m.final_att_err_rad
    )
}

/// Parses a metrics file into `(key, value)` pairs in file order.
pub fn parse_metrics(text: &str) -> Vec<(String, f64)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .filter_map(|(k, v)| Some((k.trim().to_string(), v.trim().parse().ok()?)))
        .collect()
}

fn write_file(path: &Path, contents: &str) -> Result<(), OutputError> {
    let io_err = |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err)?;
    }
    std::fs::write(path, contents).map_err(io_err)
}

pub fn write_outputs(
    records: &[LogRecord],
    metrics: &MetricsSummary,
    csv_path: &Path,
    metrics_path: &Path,
) -> Result<(), OutputError> {
    write_file(csv_path, &format_csv(records))?;
    write_file(metrics_path, &format_metrics(metrics))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_exact() {
        assert_eq!(
            csv_header(),
            "t,px,py,pz,qw,qx,qy,qz,wx,wy,wz,a1,a2,a3,a4,a5,a6,n1,n2,n3,n4,n5,n6,\
             Fcx,Fcy,Fcz,Mcx,Mcy,Mcz,Frx,Fry,Frz,Mrx,Mry,Mrz,mask,sat1,sat2,sat3,sat4,sat5,sat6"
        );
        assert_eq!(csv_header().split(',').count(), COLUMNS);
    }

    #[test]
    fn csv_round_trips_exactly() {
        let r = LogRecord {
            time: 0.1 + 0.2,
            position: Vec3::new(1.0 / 3.0, -2e-17, 5.0),
            attitude: [0.5f64.sqrt(), 0.0, 0.5f64.sqrt(), 0.0],
            rates: Vec3::new(0.1, 0.2, 0.3),
            tilts: [0.1, -0.2, 3.5, 0.0, -0.0, 1e-300],
            speeds: [900.0, 901.5, 902.25, 0.0, 1100.0, 1e3],
            commanded: Wrench::new(Vec3::new(1.0, 2.0, -31.392), Vec3::new(0.01, 0.0, -0.01)),
            realized: Wrench::new(Vec3::new(1.5, 2.5, -31.0), Vec3::new(0.0, 0.1, 0.2)),
            mask_size: 4,
            saturated: [false, true, false, false, true, false],
        };
        let text = format_csv(&[r, r]);
        let back = parse_csv(&text).unwrap();
        assert_eq!(back, vec![r, r]);
        assert!(parse_csv("t,px\n").is_err());
    }

    #[test]
    fn metrics_file_keys_in_order() {
        let m = MetricsSummary {
            pos_rmse_m: 0.125,
            sat_steps: 3,
            ..Default::default()
        };
        let parsed = parse_metrics(&format_metrics(&m));
        let keys: Vec<&str> = parsed.iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(keys, METRIC_KEYS);
        assert_eq!(parsed[0].1, 0.125);
        assert_eq!(parsed[3].1, 3.0);
    }

    #[test]
    fn write_errors_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let target = blocker.join("log.csv");
        let err = write_outputs(
            &[],
            &MetricsSummary::default(),
            &target,
            &dir.path().join("m.txt"),
        )
        .unwrap_err();
        assert!(err.to_string().contains("log.csv") || err.to_string().contains("file"));
    }
}
