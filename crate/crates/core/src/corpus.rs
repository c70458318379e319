//! Loading of plain-text and JSON document collections used for language
//! model training and detector calibration.

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: no documents found")]
    Empty { path: String },
}

/// Reads one document collection.
///
/// `.json` files hold a JSON array of objects, `.jsonl` files one object per
/// line; in both the text comes from the first present of the `text`,
/// `response` or `output` field. Any other extension is treated as plain
/// text with one document per line (blank lines skipped).
pub fn load_corpus(path: &Path) -> Result<Vec<String>, CorpusError> {
    let display = path.display().to_string();
    let raw = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: display.clone(),
        source,
    })?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let docs = match ext.as_str() {
        "json" => parse_json_array(&display, &raw)?,
        "jsonl" => parse_json_lines(&display, &raw)?,
        _ => raw
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.to_string())
            .collect(),
    };
    if docs.is_empty() {
        return Err(CorpusError::Empty { path: display });
    }
    Ok(docs)
}

fn text_field(value: &serde_json::Value) -> Option<String> {
    for field in ["text", "response", "output"] {
        if let Some(s) = value.get(field).and_then(|v| v.as_str()) {
            return Some(s.to_string());
        }
    }
    None
}

fn parse_json_array(path: &str, raw: &str) -> Result<Vec<String>, CorpusError> {
    let value: serde_json::Value = serde_json::from_str(raw).map_err(|e| CorpusError::Parse {
        path: path.to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let items = value.as_array().ok_or_else(|| CorpusError::Parse {
        path: path.to_string(),
        line: 1,
        message: "expected a top-level JSON array".into(),
    })?;
    items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            text_field(item).ok_or_else(|| CorpusError::Parse {
                path: path.to_string(),
                line: i + 1,
                message: "object has no text/response/output field".into(),
            })
        })
        .collect()
}

fn parse_json_lines(path: &str, raw: &str) -> Result<Vec<String>, CorpusError> {
    let mut docs = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| CorpusError::Parse {
                path: path.to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
        docs.push(text_field(&value).ok_or_else(|| CorpusError::Parse {
            path: path.to_string(),
            line: i + 1,
            message: "object has no text/response/output field".into(),
        })?);
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_text_one_doc_per_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.txt");
        std::fs::write(&path, "first doc\n\nsecond doc\n").unwrap();
        assert_eq!(load_corpus(&path).unwrap(), vec!["first doc", "second doc"]);
    }

    #[test]
    fn jsonl_uses_text_aliases() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        std::fs::write(
            &path,
            "{\"text\":\"a\"}\n{\"response\":\"b\"}\n{\"output\":\"c\"}\n",
        )
        .unwrap();
        assert_eq!(load_corpus(&path).unwrap(), vec!["a", "b", "c"]);
    }

    #[test]
    fn errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        std::fs::write(&path, "{\"text\":\"a\"}\n{\"nope\":1}\n").unwrap();
        match load_corpus(&path) {
            Err(CorpusError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.txt");
        std::fs::write(&path, "\n\n").unwrap();
        assert!(matches!(load_corpus(&path), Err(CorpusError::Empty { .. })));
    }
}
