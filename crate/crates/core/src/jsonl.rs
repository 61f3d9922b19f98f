//! Line-delimited JSON files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line_no}: {message}")]
    SchemaViolation { line_no: usize, message: String },
    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

/// Serializes records one per line, each terminated by `\n`. An empty
/// slice produces an empty file.
pub fn to_bytes<T: Serialize>(records: &[T]) -> Result<Vec<u8>, JsonlError> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(records: &[T], path: &Path) -> Result<(), JsonlError> {
    let io_err = |source| JsonlError::Io { path: path.display().to_string(), source };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    w.write_all(&to_bytes(records)?).map_err(io_err)?;
    w.flush().map_err(io_err)
}

/// Parses records; blank lines are skipped, line numbers are 1-based.
pub fn from_reader<T: DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>, JsonlError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| JsonlError::SchemaViolation { line_no, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| JsonlError::SchemaViolation { line_no, message: e.to_string() })?;
        out.push(record);
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, JsonlError> {
    let file = File::open(path)
        .map_err(|source| JsonlError::Io { path: path.display().to_string(), source })?;
    from_reader(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Row {
        a: u32,
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let text = (1..=6).map(|i| format!("{{\"a\": {i}}}\n")).collect::<String>() + "{\"a\": oops}\n";
        let err = from_reader::<Row>(text.as_bytes()).unwrap_err();
        assert!(matches!(err, JsonlError::SchemaViolation { line_no: 7, .. }), "{err}");
    }

    #[test]
    fn empty_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.jsonl");
        write_jsonl::<Row>(&[], &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"");
        assert!(read_jsonl::<Row>(&path).unwrap().is_empty());
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            read_jsonl::<Row>(Path::new("/nonexistent/x.jsonl")),
            Err(JsonlError::Io { .. })
        ));
    }
}
