//! Row-major sample matrices and their CSV representation.
//!
//! Data files are comma-separated with a header row, one sample per row,
//! decimal-point floats, UTF-8.

use std::io::{Read, Write};
use std::path::Path;

use crate::{Error, Result};

/// A dense matrix of samples: one row per observation, one column per
/// coordinate. Stored flat in row-major order so a row is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl SampleMatrix {
    /// Builds a matrix from row-major data. `data.len()` must equal
    /// `rows * cols` and `cols` must be nonzero.
    pub fn new(data: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if cols == 0 || rows == 0 {
            return Err(Error::EmptyMatrix);
        }
        if data.len() != rows * cols {
            return Err(Error::RaggedRows {
                row: rows,
                got: data.len() % cols.max(1),
                expected: cols,
            });
        }
        Ok(Self { data, rows, cols })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            data: vec![0.0; rows * cols],
            rows,
            cols,
        }
    }

    /// Builds a matrix from a list of equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        let cols = rows[0].len();
        if cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut data = Vec::with_capacity(n * cols);
        for (idx, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::RaggedRows {
                    row: idx,
                    got: row.len(),
                    expected: cols,
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            data,
            rows: n,
            cols,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    /// Splits each row at `d_x`, viewing the matrix as pairs (x, y).
    pub fn split_row(&self, i: usize, d_x: usize) -> (&[f64], &[f64]) {
        self.row(i).split_at(d_x)
    }

    /// Keeps only the first `n` rows.
    pub fn truncated(&self, n: usize) -> Self {
        assert!(n <= self.rows);
        Self {
            data: self.data[..n * self.cols].to_vec(),
            rows: n,
            cols: self.cols,
        }
    }

    /// Stacks two matrices of equal width vertically.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.cols,
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self {
            data,
            rows: self.rows + other.rows,
            cols: self.cols,
        })
    }

    /// Joins two matrices with equal row counts side by side, pairing row
    /// `i` of `self` with row `i` of `other`.
    pub fn hstack(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: other.rows,
            });
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Ok(Self {
            data,
            rows: self.rows,
            cols,
        })
    }

    /// Reads a headered CSV of floats. The header row is skipped; every
    /// other row must parse as `cols` floats.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut data = Vec::new();
        let mut cols = 0usize;
        let mut rows = 0usize;
        for (idx, record) in rdr.records().enumerate() {
            let record = record?;
            if cols == 0 {
                cols = record.len();
            } else if record.len() != cols {
                return Err(Error::RaggedRows {
                    row: idx,
                    got: record.len(),
                    expected: cols,
                });
            }
            for field in record.iter() {
                let value: f64 = field.parse().map_err(|_| Error::MalformedNumber {
                    row: idx,
                    field: field.to_string(),
                })?;
                data.push(value);
            }
            rows += 1;
        }
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        Ok(Self { data, rows, cols })
    }

    pub fn read_csv_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    /// Writes a headered CSV (`c0,c1,...`), one sample per row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let header: Vec<String> = (0..self.cols).map(|j| format!("c{j}")).collect();
        wtr.write_record(&header)?;
        for row in self.rows() {
            let fields: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            wtr.write_record(&fields)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Squared Euclidean distance between two equal-length points.
pub(crate) fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum()
}
