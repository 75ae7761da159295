//! Flat result tables and their writers. Every number that reaches disk
//! goes through the shortest-round-trip float formatter, and nothing
//! time- or machine-dependent is written, so identical runs produce
//! byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One row of the results table: the headline numbers of a single check.
/// `mean` and `se` are empty for checks whose outcome is purely boolean
/// or that failed before producing an estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub operation: String,
    pub model: String,
    pub estimator: String,
    pub n: u64,
    pub seed: u64,
    pub mean: Option<f64>,
    pub se: Option<f64>,
    pub pass: bool,
}

/// Writes any homogeneous list of flat serializable rows as CSV with a
/// header row. Used for the results table and for every plot table.
pub fn write_rows_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| std::io::Error::other(e.to_string()))?;
    for row in rows {
        w.serialize(row)
            .map_err(|e| std::io::Error::other(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the records as a JSON array, pretty-printed with a trailing
/// newline.
pub fn write_records_json(path: &Path, records: &[CheckRecord]) -> Result<()> {
    write_json(path, records)
}

/// Writes any serializable document as pretty JSON.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, doc: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    let body = serde_json::to_string_pretty(doc)
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    f.write_all(body.as_bytes())?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

/// Plot row for a risk sweep over ||theta||.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RiskSweepRow {
    pub theta_norm: f64,
    pub risk_estimator: f64,
    pub risk_baseline: f64,
    pub mean_difference: f64,
    pub std_error: f64,
}

/// Plot row for the orthant sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrthantPlotRow {
    pub theta_norm: f64,
    pub mean_difference: f64,
    pub std_error: f64,
    pub risk_shrunk: f64,
    pub risk_projection: f64,
    pub pass: bool,
}

/// Plot row for the ball-average monotonicity spot check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BallAveragePlotRow {
    pub radius: f64,
    pub value: f64,
    pub std_error: f64,
}

/// Plot row for a shrinkage-factor table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RwTableRow {
    pub w: f64,
    pub r: f64,
    pub error_estimate: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_records() -> Vec<CheckRecord> {
        vec![
            CheckRecord {
                operation: "mc_risk".into(),
                model: "normal6".into(),
                estimator: "identity".into(),
                n: 1000,
                seed: 7,
                mean: Some(6.01),
                se: Some(0.02),
                pass: true,
            },
            CheckRecord {
                operation: "certify_minimax".into(),
                model: "-".into(),
                estimator: "gb(a=0,b=4)".into(),
                n: 0,
                seed: 7,
                mean: None,
                se: None,
                pass: false,
            },
        ]
    }

    #[test]
    fn csv_has_header_and_empty_cells_for_missing_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        write_rows_csv(&path, &sample_records()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "operation,model,estimator,n,seed,mean,se,pass"
        );
        assert!(lines.next().unwrap().ends_with("6.01,0.02,true"));
        assert!(lines.next().unwrap().ends_with(",,false"));
    }

    #[test]
    fn json_round_trips_records_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.json");
        let records = sample_records();
        write_records_json(&path, &records).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let back: Vec<CheckRecord> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn writes_are_byte_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        write_rows_csv(&a, &sample_records()).unwrap();
        write_rows_csv(&b, &sample_records()).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
}
