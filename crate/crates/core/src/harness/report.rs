use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    /// 1-based.
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub train_f1: f64,
    pub test_f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub folds: Vec<FoldResult>,
    pub mean_train_f1: f64,
    pub mean_test_f1: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

impl MethodReport {
    pub fn from_folds(method: impl Into<String>, folds: Vec<FoldResult>) -> Self {
        MethodReport {
            method: method.into(),
            mean_train_f1: mean(folds.iter().map(|f| f.train_f1)),
            mean_test_f1: mean(folds.iter().map(|f| f.test_f1)),
            folds,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMeta {
    pub tool_version: String,
    pub seed: u64,
    pub folds: usize,
    /// FNV-1a of the resolved configuration, hex.
    pub config_hash: String,
    pub dataset: String,
    pub rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub meta: RunMeta,
    pub methods: Vec<MethodReport>,
}

impl Report {
    /// Checks that every stored mean equals the mean of its folds.
    pub fn validate(&self) -> Result<()> {
        for m in &self.methods {
            let train = mean(m.folds.iter().map(|f| f.train_f1));
            let test = mean(m.folds.iter().map(|f| f.test_f1));
            if (train - m.mean_train_f1).abs() > 1e-12 || (test - m.mean_test_f1).abs() > 1e-12 {
                return Err(Error::Validation(format!(
                    "report for {}: stored means do not match its folds",
                    m.method
                )));
            }
        }
        Ok(())
    }
}

/// Human-readable table with F1 to three decimals.
pub fn render_table(r: &Report) -> String {
    let m = &r.meta;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# toxspans {} | dataset {} | rows {} | folds {} | seed {} | config {}",
        m.tool_version, m.dataset, m.rows, m.folds, m.seed, m.config_hash
    );
    let width = r
        .methods
        .iter()
        .map(|x| x.method.len())
        .max()
        .unwrap_or(0)
        .max("method".len());
    let _ = writeln!(
        out,
        "{:<width$}  {:>4}  {:>6}  {:>5}  {:>8}  {:>7}",
        "method", "fold", "train", "test", "train_f1", "test_f1"
    );
    for mr in &r.methods {
        for f in &mr.folds {
            let _ = writeln!(
                out,
                "{:<width$}  {:>4}  {:>6}  {:>5}  {:>8.3}  {:>7.3}",
                mr.method, f.fold, f.train_size, f.test_size, f.train_f1, f.test_f1
            );
        }
        let _ = writeln!(
            out,
            "{:<width$}  {:>4}  {:>6}  {:>5}  {:>8.3}  {:>7.3}",
            mr.method, "mean", "", "", mr.mean_train_f1, mr.mean_test_f1
        );
    }
    out
}

/// Where [`write_report`] puts the table for a given JSON path.
pub fn table_path(json: &Path) -> PathBuf {
    if json.extension().is_some_and(|e| e == "txt") {
        let mut s = json.as_os_str().to_owned();
        s.push(".table");
        PathBuf::from(s)
    } else {
        json.with_extension("txt")
    }
}

/// Writes the report as JSON to `path` and as a table next to it.
pub fn write_report(r: &Report, path: &Path) -> Result<PathBuf> {
    let json = serde_json::to_string_pretty(r)?;
    std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))?;
    let table = table_path(path);
    std::fs::write(&table, render_table(r)).map_err(|e| Error::io(&table, e))?;
    Ok(table)
}

pub fn read_report(path: &Path) -> Result<Report> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let r: Report = serde_json::from_str(&text)?;
    r.validate()?;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> RunMeta {
        RunMeta {
            tool_version: "0.1.0".into(),
            seed: 7,
            folds: 2,
            config_hash: "00ff".into(),
            dataset: "train.csv".into(),
            rows: 10,
        }
    }

    fn sample() -> Report {
        let folds = vec![
            FoldResult {
                fold: 1,
                train_size: 5,
                test_size: 5,
                train_f1: 0.7,
                test_f1: 0.6481,
            },
            FoldResult {
                fold: 2,
                train_size: 5,
                test_size: 5,
                train_f1: 0.9,
                test_f1: 0.1,
            },
        ];
        Report {
            meta: meta(),
            methods: vec![MethodReport::from_folds("crf", folds)],
        }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let table = write_report(&sample(), &path).unwrap();
        assert_eq!(read_report(&path).unwrap(), sample());
        let text = std::fs::read_to_string(table).unwrap();
        assert!(text.contains("0.648"));
        assert!(!text.contains("0.6481"));
    }

    #[test]
    fn empty_report_is_header_only() {
        let r = Report {
            meta: meta(),
            methods: vec![],
        };
        assert_eq!(render_table(&r).lines().count(), 2);
        assert!(r.validate().is_ok());
    }

    #[test]
    fn means_are_checked() {
        let mut r = sample();
        assert!((r.methods[0].mean_train_f1 - 0.8).abs() < 1e-12);
        r.methods[0].mean_test_f1 = 0.5;
        assert!(r.validate().is_err());
    }

    #[test]
    fn table_columns_align() {
        let t = render_table(&sample());
        let lens: Vec<usize> = t.lines().skip(1).map(|l| l.len()).collect();
        assert!(lens.windows(2).all(|w| w[0] == w[1]), "{t}");
    }

    #[test]
    fn table_path_never_clobbers() {
        assert_eq!(table_path(Path::new("a/r.json")), PathBuf::from("a/r.txt"));
        assert_eq!(table_path(Path::new("r.txt")), PathBuf::from("r.txt.table"));
    }
}
