use std::io::{Read, Write};

use crate::signal::{Record, RecordKind, SignalError};

/// Per-bit node matrix: row `i` holds the `k` node values of bit `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirResponse {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl ReservoirResponse {
    /// Panics if `values.len() != rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), rows * cols, "response shape mismatch");
        Self { rows, cols, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// First `rows` bits only.
    pub fn truncated(&self, rows: usize) -> Self {
        let rows = rows.min(self.rows);
        Self {
            rows,
            cols: self.cols,
            values: self.values[..rows * self.cols].to_vec(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["bit".to_string()];
        header.extend((0..self.cols).map(|c| format!("node_{c}")));
        w.write_record(&header)?;
        for i in 0..self.rows {
            let mut rec = vec![i.to_string()];
            rec.extend(self.row(i).iter().map(|v| format!("{v:e}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, csv::Error> {
        let mut r = csv::Reader::from_reader(input);
        let cols = r.headers()?.len().saturating_sub(1);
        let mut values = Vec::new();
        let mut rows = 0;
        for rec in r.records() {
            let rec = rec?;
            for field in rec.iter().skip(1) {
                let v: f64 = field.trim().parse().map_err(|e| {
                    csv::Error::from(std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{e}: {field}")))
                })?;
                values.push(v);
            }
            rows += 1;
        }
        Ok(Self { rows, cols, values })
    }

    /// Multi-column real record with one column per node.
    pub fn to_record(&self, bit_rate_bps: f64) -> Record {
        Record {
            kind: RecordKind::Real,
            normalized: false,
            columns: self.cols as u32,
            sample_rate_hz: bit_rate_bps,
            center_wavelength_nm: 0.0,
            ase_psd_mw_per_hz: 0.0,
            data: self.values.clone(),
        }
    }

    pub fn from_record(rec: &Record) -> Result<Self, SignalError> {
        if rec.kind != RecordKind::Real {
            return Err(SignalError::WrongKind {
                expected: RecordKind::Real,
                found: rec.kind,
            });
        }
        let cols = rec.columns as usize;
        if cols == 0 || rec.data.len() % cols != 0 {
            return Err(SignalError::CorruptHeader(format!(
                "{} values do not fill {cols}-column rows",
                rec.data.len()
            )));
        }
        Ok(Self {
            rows: rec.data.len() / cols,
            cols,
            values: rec.data.clone(),
        })
    }
}
