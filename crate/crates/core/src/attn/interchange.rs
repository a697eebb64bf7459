//! Line-delimited JSON produced by the encoder exporter.
//!
//! The first line is a header object; every following non-blank line is one
//! post record with word-level attention (already mean-pooled over
//! subwords), the sentence hate probability and optional embeddings.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::span::char_len;

pub const FORMAT_NAME: &str = "toxspans-interchange";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportHeader {
    pub format: String,
    pub version: u32,
    #[serde(default)]
    pub checkpoint_digest: String,
    /// Embedding width; 0 when no embeddings are exported.
    #[serde(default)]
    pub emb_dim: usize,
    /// Number of inputs cut at the exporter's token limit.
    #[serde(default)]
    pub truncated: usize,
}

impl ExportHeader {
    pub fn new(checkpoint_digest: impl Into<String>, emb_dim: usize) -> Self {
        ExportHeader {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            checkpoint_digest: checkpoint_digest.into(),
            emb_dim,
            truncated: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportWord {
    pub start: usize,
    pub end: usize,
    pub attn: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emb: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportRecord {
    pub id: String,
    pub text: String,
    pub sent_prob: f64,
    #[serde(default)]
    pub truncated: bool,
    pub words: Vec<ExportWord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Interchange {
    pub header: ExportHeader,
    pub records: Vec<ExportRecord>,
}

/// Every contract violation of one record, empty when well formed.
pub fn check_record(header: &ExportHeader, rec: &ExportRecord) -> Vec<String> {
    let mut out = Vec::new();
    if !(0.0..=1.0).contains(&rec.sent_prob) {
        out.push(format!("sent_prob {} outside [0, 1]", rec.sent_prob));
    }
    let n = char_len(&rec.text);
    let mut prev_end = 0;
    for (k, w) in rec.words.iter().enumerate() {
        if w.start >= w.end || w.end > n {
            out.push(format!(
                "word {k}: span {}..{} invalid for a {n}-char text",
                w.start, w.end
            ));
        } else if w.start < prev_end {
            out.push(format!("word {k}: overlaps or precedes the previous word"));
        }
        prev_end = prev_end.max(w.end);
        if !w.attn.is_finite() || w.attn < 0.0 {
            out.push(format!("word {k}: attention {} is not a finite non-negative", w.attn));
        }
        match &w.emb {
            Some(e) if e.len() != header.emb_dim => out.push(format!(
                "word {k}: embedding length {} differs from header {}",
                e.len(),
                header.emb_dim
            )),
            Some(e) if e.iter().any(|x| !x.is_finite()) => {
                out.push(format!("word {k}: non-finite embedding value"))
            }
            None if header.emb_dim > 0 => out.push(format!("word {k}: missing embedding")),
            _ => {}
        }
    }
    out
}

/// Reads and validates an interchange stream. The first violation found
/// is reported with its line number and record id.
pub fn read_interchange<R: Read>(reader: R) -> Result<Interchange> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let header = loop {
        let Some((i, line)) = lines.next() else {
            return Err(Error::parse(1, 1, "missing interchange header"));
        };
        let line = line.map_err(|e| Error::parse(i + 1, 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let header: ExportHeader = serde_json::from_str(&line)
            .map_err(|e| Error::parse(i + 1, e.column(), format!("header: {e}")))?;
        if header.format != FORMAT_NAME || header.version != FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "unsupported interchange format {} v{}",
                header.format, header.version
            )));
        }
        break header;
    };

    let mut records = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| Error::parse(i + 1, 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ExportRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(i + 1, e.column(), e.to_string()))?;
        let violations = check_record(&header, &rec);
        if let Some(first) = violations.first() {
            return Err(Error::Validation(format!(
                "line {}, record `{}`: {first}",
                i + 1,
                rec.id
            )));
        }
        records.push(rec);
    }
    Ok(Interchange { header, records })
}

pub fn load_interchange(path: impl AsRef<Path>) -> Result<Interchange> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_interchange(file)
}

pub fn write_interchange<W: Write>(mut w: W, data: &Interchange) -> Result<()> {
    let io = |e| Error::io("<interchange>", e);
    serde_json::to_writer(&mut w, &data.header)?;
    w.write_all(b"\n").map_err(io)?;
    for rec in &data.records {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Interchange {
        Interchange {
            header: ExportHeader::new("sha256:abc", 2),
            records: vec![ExportRecord {
                id: "p1".into(),
                text: "you idiot".into(),
                sent_prob: 0.9,
                truncated: false,
                words: vec![
                    ExportWord { start: 0, end: 3, attn: 0.1, pos: Some("PRON".into()), emb: Some(vec![0.1, 0.2]) },
                    ExportWord { start: 4, end: 9, attn: 0.8, pos: None, emb: Some(vec![0.3, -0.4]) },
                ],
            }],
        }
    }

    fn encode(data: &Interchange) -> Vec<u8> {
        let mut buf = Vec::new();
        write_interchange(&mut buf, data).unwrap();
        buf
    }

    #[test]
    fn round_trip() {
        let data = sample();
        assert_eq!(read_interchange(encode(&data).as_slice()).unwrap(), data);
    }

    #[test]
    fn out_of_bounds_word_is_rejected() {
        let mut data = sample();
        data.records[0].words[1].end = 12;
        let err = read_interchange(encode(&data).as_slice()).unwrap_err().to_string();
        assert!(err.contains("record `p1`") && err.contains("invalid"), "{err}");
    }

    #[test]
    fn mixed_embedding_lengths_are_rejected() {
        let mut data = sample();
        data.records[0].words[0].emb = Some(vec![1.0]);
        assert!(matches!(
            read_interchange(encode(&data).as_slice()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn every_violation_is_listed() {
        let mut data = sample();
        data.records[0].sent_prob = 1.5;
        data.records[0].words[0].attn = -1.0;
        data.records[0].words[1].start = 2;
        assert_eq!(check_record(&data.header, &data.records[0]).len(), 3);
    }

    #[test]
    fn header_problems() {
        assert!(matches!(read_interchange("".as_bytes()), Err(Error::Parse { .. })));
        assert!(matches!(read_interchange("{nope".as_bytes()), Err(Error::Parse { line: 1, .. })));
        let other = r#"{"format":"other","version":1}"#;
        assert!(matches!(read_interchange(other.as_bytes()), Err(Error::Validation(_))));
        let ok = r#"{"format":"toxspans-interchange","version":1}"#;
        assert_eq!(read_interchange(ok.as_bytes()).unwrap().header.emb_dim, 0);
    }
}
