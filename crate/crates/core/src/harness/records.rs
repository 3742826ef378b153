//! Trial records on disk: a CSV file with the exact header
//! `backend,n,trial,seconds,flops` plus a JSON metadata sidecar next to it
//! (`results.csv` -> `results.meta.json`).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{HarnessError, RunMetadata, TrialRecord};
use crate::matrix::flop_count;

pub const CSV_HEADER: [&str; 5] = ["backend", "n", "trial", "seconds", "flops"];

pub fn metadata_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes the CSV and its sidecar. Floats carry 17 significant digits so a
/// read returns bitwise-identical values.
pub fn write_records(path: &Path, records: &[TrialRecord], metadata: &RunMetadata) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{}", CSV_HEADER.join(",")).map_err(io_err(path))?;
    for r in records {
        if r.backend.contains([',', '"', '\n', '\r']) {
            return Err(HarnessError::Validation {
                path: path.display().to_string(),
                line: 0,
                message: format!("backend name {:?} cannot be stored unquoted", r.backend),
            });
        }
        writeln!(w, "{},{},{},{:.16e},{:.16e}", r.backend, r.n, r.trial, r.seconds, r.flops).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))?;

    let meta_path = metadata_path(path);
    let json = serde_json::to_string_pretty(metadata).map_err(|e| HarnessError::Metadata {
        path: meta_path.display().to_string(),
        message: e.to_string(),
    })?;
    std::fs::write(&meta_path, json + "\n").map_err(io_err(&meta_path))
}

/// Reads and validates the CSV alone.
pub fn read_csv(path: &Path) -> Result<Vec<TrialRecord>, HarnessError> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);

    let parse_err = |line: u64, message: String| HarnessError::Parse {
        path: display.clone(),
        line,
        message,
    };
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let mut idx = [0usize; 5];
    for (slot, column) in idx.iter_mut().zip(CSV_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == column)
            .ok_or_else(|| HarnessError::MissingColumn {
                path: display.clone(),
                column: column.to_owned(),
            })?;
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(idx[i]).unwrap_or("").trim();
        let num = |i: usize| {
            field(i)
                .parse::<f64>()
                .map_err(|_| parse_err(line, format!("{}: {:?} is not a number", CSV_HEADER[i], field(i))))
        };
        let int = |i: usize| {
            field(i)
                .parse::<usize>()
                .map_err(|_| parse_err(line, format!("{}: {:?} is not an integer", CSV_HEADER[i], field(i))))
        };
        let backend = field(0).to_owned();
        let (n, trial, seconds, flops) = (int(1)?, int(2)?, num(3)?, num(4)?);

        let invalid = |message: String| HarnessError::Validation {
            path: display.clone(),
            line,
            message,
        };
        if backend.is_empty() {
            return Err(invalid("empty backend name".into()));
        }
        if n == 0 {
            return Err(invalid("n must be positive".into()));
        }
        if !(seconds.is_finite() && seconds > 0.0) {
            return Err(invalid(format!("seconds must be positive, got {seconds}")));
        }
        if !(flops.is_finite() && flops > 0.0) {
            return Err(invalid(format!("flops must be positive, got {flops}")));
        }
        let expected = flop_count(n as u64).map_err(|e| invalid(e.to_string()))? as f64 / seconds;
        if ((flops - expected) / flops).abs() > 1e-12 {
            return Err(invalid(format!(
                "flops {flops:e} disagrees with flop_count(n)/seconds = {expected:e}"
            )));
        }
        records.push(TrialRecord {
            backend,
            n,
            trial,
            seconds,
            flops,
        });
    }
    Ok(records)
}

/// Metadata sidecar for `csv_path`, if one exists.
pub fn read_metadata(csv_path: &Path) -> Result<Option<RunMetadata>, HarnessError> {
    let meta_path = metadata_path(csv_path);
    let text = match std::fs::read_to_string(&meta_path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(io_err(&meta_path)(e)),
    };
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| HarnessError::Metadata {
            path: meta_path.display().to_string(),
            message: e.to_string(),
        })
}

pub fn read_records(path: &Path) -> Result<(Vec<TrialRecord>, RunMetadata), HarnessError> {
    let records = read_csv(path)?;
    let metadata = read_metadata(path)?.ok_or_else(|| HarnessError::Metadata {
        path: metadata_path(path).display().to_string(),
        message: "sidecar file not found".into(),
    })?;
    Ok((records, metadata))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::RunConfig;
    use proptest::prelude::*;

    fn metadata() -> RunMetadata {
        RunMetadata::capture(&RunConfig::new(vec!["naive".into()], vec![8]))
    }

    fn sample_records(count: usize) -> Vec<TrialRecord> {
        (0..count)
            .map(|i| {
                let n = 8 + (i % 4) * 8;
                TrialRecord::new(format!("b{}", i % 2), n, i % 30, 1e-6 * (1.0 + i as f64 / 7.0)).unwrap()
            })
            .collect()
    }

    #[test]
    fn round_trip_120_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let recs = sample_records(120);
        let meta = metadata();
        write_records(&path, &recs, &meta).unwrap();
        let (back, meta_back) = read_records(&path).unwrap();
        assert_eq!(back, recs);
        assert_eq!(meta_back, meta);
        let header = std::fs::read_to_string(&path).unwrap();
        assert!(header.starts_with("backend,n,trial,seconds,flops\n"));
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.meta.json")).unwrap()).unwrap();
        for key in ["timestamp", "host", "cores", "config"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn missing_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        std::fs::write(&path, "backend,n,trial,flops\nnaive,8,0,1e9\n").unwrap();
        match read_csv(&path) {
            Err(HarnessError::MissingColumn { column, .. }) => assert_eq!(column, "seconds"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_seconds_rejected_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        std::fs::write(&path, "backend,n,trial,seconds,flops\nnaive,1,0,1,1\nnaive,8,0,0,1e9\n").unwrap();
        match read_csv(&path) {
            Err(HarnessError::Validation { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("seconds"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_number_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        std::fs::write(&path, "backend,n,trial,seconds,flops\nnaive,8,x,1,1023\n").unwrap();
        assert!(matches!(read_csv(&path), Err(HarnessError::Parse { line: 2, .. })));
        std::fs::write(&path, "backend,n,trial,seconds,flops\nnaive,8\n").unwrap();
        assert!(matches!(read_csv(&path), Err(HarnessError::Parse { line: 2, .. })));
    }

    #[test]
    fn inconsistent_flops_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        std::fs::write(&path, "backend,n,trial,seconds,flops\nnaive,2,0,1,13\n").unwrap();
        assert!(matches!(read_csv(&path), Err(HarnessError::Validation { .. })));
    }

    #[test]
    fn missing_file_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("none.csv");
        assert!(matches!(read_csv(&path), Err(HarnessError::Io { .. })));
        std::fs::write(&path, "backend,n,trial,seconds,flops\n").unwrap();
        assert!(read_csv(&path).unwrap().is_empty());
        assert!(read_metadata(&path).unwrap().is_none());
        assert!(matches!(read_records(&path), Err(HarnessError::Metadata { .. })));
    }

    proptest! {
        #[test]
        fn floats_round_trip_bitwise(secs in prop::collection::vec(1e-9f64..1e3, 1..20), n in 1usize..5000) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("p.csv");
            let recs: Vec<_> = secs.iter().enumerate().map(|(i, &s)| TrialRecord::new("x", n, i, s).unwrap()).collect();
            write_records(&path, &recs, &metadata()).unwrap();
            let back = read_csv(&path).unwrap();
            for (a, b) in recs.iter().zip(&back) {
                prop_assert_eq!(a.seconds.to_bits(), b.seconds.to_bits());
                prop_assert_eq!(a.flops.to_bits(), b.flops.to_bits());
            }
        }
    }
}
