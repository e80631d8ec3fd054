//! JSON matrix files: `{"n": 2, "precision_bits": 64, "entries": [["1", "0.5"], ...]}`.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::numerics::{OverflowReport, PrecisionReal};

use super::SquareMatrix;

#[derive(Debug, Serialize, Deserialize)]
pub struct MatrixFile {
    pub n: usize,
    pub precision_bits: u32,
    pub entries: Vec<Vec<String>>,
}

impl MatrixFile {
    pub fn from_matrix(m: &SquareMatrix) -> Self {
        let n = m.n();
        MatrixFile {
            n,
            precision_bits: m.bits(),
            entries: (0..n)
                .map(|i| (0..n).map(|j| m.get(i, j).to_decimal_string()).collect())
                .collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<SquareMatrix, String> {
        if self.precision_bits == 0 {
            return Err("precision_bits must be positive".into());
        }
        if self.entries.len() != self.n || self.entries.iter().any(|r| r.len() != self.n) {
            return Err(format!("entries must be a {0}x{0} array", self.n));
        }
        let mut vals = Vec::with_capacity(self.n * self.n);
        for (i, row) in self.entries.iter().enumerate() {
            for (j, s) in row.iter().enumerate() {
                let v = PrecisionReal::parse_decimal(s, self.precision_bits)
                    .map_err(|e| format!("entry ({i}, {j}): {e}"))?;
                vals.push(v);
            }
        }
        Ok(SquareMatrix::from_entries(self.n, &vals, self.precision_bits))
    }
}

pub fn parse_matrix(text: &str) -> Result<SquareMatrix, String> {
    let f: MatrixFile = serde_json::from_str(text)
        .map_err(|e| format!("line {}, column {}: {e}", e.line(), e.column()))?;
    f.to_matrix()
}

pub fn matrix_to_json(m: &SquareMatrix) -> String {
    serde_json::to_string_pretty(&MatrixFile::from_matrix(m)).expect("plain data serializes")
}

pub fn overflow_to_json(o: &OverflowReport) -> String {
    serde_json::to_string_pretty(&json!({
        "overflow": true,
        "witness": o.witness,
        "log_norm_estimate": o.log_norm_estimate.to_decimal_string(),
    }))
    .expect("plain data serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let m = SquareMatrix::from_f64(2, &[1.0, -0.5, 0.125, 3.0], 32);
        let text = matrix_to_json(&m);
        assert_eq!(parse_matrix(&text).unwrap(), m);
    }

    #[test]
    fn reports_location() {
        let err = parse_matrix("{\"n\": 2,\n \"entries\": }").unwrap_err();
        assert!(err.contains("line 2"), "{err}");
        assert!(parse_matrix(r#"{"n":2,"precision_bits":8,"entries":[["1"]]}"#).is_err());
    }
}
