//! Prediction files: one post per line, `id<TAB>[i, j, ...]`.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::span::CharIndexSet;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prediction {
    pub id: String,
    pub spans: CharIndexSet,
}

impl Prediction {
    pub fn new(id: impl Into<String>, spans: CharIndexSet) -> Self {
        Prediction {
            id: id.into(),
            spans,
        }
    }
}

pub fn write_predictions<W: Write>(mut w: W, preds: &[Prediction]) -> std::io::Result<()> {
    for p in preds {
        writeln!(w, "{}\t{}", p.id, p.spans)?;
    }
    w.flush()
}

pub fn save_predictions(path: impl AsRef<Path>, preds: &[Prediction]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_predictions(std::io::BufWriter::new(file), preds).map_err(|e| Error::io(path, e))
}

/// Parses a prediction file. Blank lines are ignored; ids must be unique
/// and must not contain tabs.
pub fn read_predictions<R: Read>(reader: R) -> Result<Vec<Prediction>> {
    let mut out: Vec<Prediction> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::parse(line_no, 1, e.to_string()))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let Some((id, literal)) = line.split_once('\t') else {
            return Err(Error::parse(line_no, 1, "expected `id<TAB>[indices]`"));
        };
        if id.is_empty() {
            return Err(Error::parse(line_no, 1, "empty post id"));
        }
        let spans = CharIndexSet::parse_literal(literal).map_err(|e| match e {
            Error::Parse {
                column, message, ..
            } => Error::parse(line_no, id.chars().count() + 1 + column, message),
            other => other,
        })?;
        if !seen.insert(id.to_string()) {
            return Err(Error::Validation(format!(
                "duplicate post id `{id}` on line {line_no}"
            )));
        }
        out.push(Prediction::new(id, spans));
    }
    Ok(out)
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<Prediction>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_predictions(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let preds = vec![
            Prediction::new("0", CharIndexSet::range(3, 7)),
            Prediction::new("post-b", CharIndexSet::new()),
        ];
        let mut buf = Vec::new();
        write_predictions(&mut buf, &preds).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "0\t[3, 4, 5, 6]\npost-b\t[]\n");
        assert_eq!(read_predictions(buf.as_slice()).unwrap(), preds);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            read_predictions("0 [1]\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_predictions("0\t[1]\n\n1\t[x]\n".as_bytes()),
            Err(Error::Parse { line: 3, column: 4, .. })
        ));
        assert!(matches!(
            read_predictions("0\t[1]\n0\t[2]\n".as_bytes()),
            Err(Error::Validation(_))
        ));
    }
}
