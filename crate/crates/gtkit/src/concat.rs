//! Kautz-Singleton concatenation and the binary test-matrix type.
//!
//! Each q-ary symbol becomes a unit-weight indicator block of length q, so
//! a length-M_q codebook over GF(q) turns into constant-weight binary
//! columns of length q*M_q. Columns are stored as packed bit vectors;
//! every disjunctness check downstream is a union/containment scan over
//! these words.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::codes::Codebook;
use crate::field::FieldSpec;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("symbol {symbol} out of range for alphabet {q}")]
    SymbolOutOfRange { q: u32, symbol: u32 },
    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("duplicate columns {first} and {second}")]
    DuplicateColumn { first: usize, second: usize },
    #[error("matrix must have at least one row and one column")]
    Empty,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strictness {
    /// Reject duplicate columns.
    Strict,
    /// Permit duplicate columns (pedagogical counterexamples).
    Lenient,
}

/// An M x N 0/1 test matrix stored column-major as packed bit vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryTestMatrix {
    rows: usize,
    cols: usize,
    words_per_col: usize,
    bits: Vec<u64>,
    provenance: Option<String>,
}

impl BinaryTestMatrix {
    /// Build from explicit per-column support sets.
    pub fn from_supports(
        rows: usize,
        supports: &[Vec<usize>],
        strictness: Strictness,
    ) -> Result<BinaryTestMatrix, MatrixError> {
        if rows == 0 || supports.is_empty() {
            return Err(MatrixError::Empty);
        }
        let cols = supports.len();
        let wpc = rows.div_ceil(64);
        let mut bits = vec![0u64; cols * wpc];
        for (j, support) in supports.iter().enumerate() {
            for &r in support {
                if r >= rows {
                    return Err(MatrixError::Format {
                        line: 0,
                        msg: format!("row index {r} out of range for {rows} rows"),
                    });
                }
                bits[j * wpc + r / 64] |= 1u64 << (r % 64);
            }
        }
        let m = BinaryTestMatrix {
            rows,
            cols,
            words_per_col: wpc,
            bits,
            provenance: None,
        };
        if strictness == Strictness::Strict {
            m.check_distinct()?;
        }
        Ok(m)
    }

    pub fn tests(&self) -> usize {
        self.rows
    }

    pub fn items(&self) -> usize {
        self.cols
    }

    pub fn words_per_col(&self) -> usize {
        self.words_per_col
    }

    pub fn column(&self, j: usize) -> &[u64] {
        &self.bits[j * self.words_per_col..(j + 1) * self.words_per_col]
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.column(col)[row / 64] >> (row % 64) & 1 == 1
    }

    pub fn column_weight(&self, j: usize) -> u32 {
        self.column(j).iter().map(|w| w.count_ones()).sum()
    }

    pub fn column_support(&self, j: usize) -> Vec<usize> {
        (0..self.rows).filter(|&r| self.get(r, j)).collect()
    }

    /// The common column weight, if the matrix is constant-weight.
    pub fn uniform_weight(&self) -> Option<u32> {
        let w = self.column_weight(0);
        (1..self.cols)
            .all(|j| self.column_weight(j) == w)
            .then_some(w)
    }

    /// Hamming distance between two columns.
    pub fn column_distance(&self, i: usize, j: usize) -> u32 {
        self.column(i)
            .iter()
            .zip(self.column(j))
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }

    pub fn provenance(&self) -> Option<&str> {
        self.provenance.as_deref()
    }

    pub fn set_provenance(&mut self, text: impl Into<String>) {
        self.provenance = Some(text.into());
    }

    fn check_distinct(&self) -> Result<(), MatrixError> {
        let mut seen: std::collections::HashMap<&[u64], usize> = std::collections::HashMap::new();
        for j in 0..self.cols {
            if let Some(&first) = seen.get(self.column(j)) {
                return Err(MatrixError::DuplicateColumn { first, second: j });
            }
            seen.insert(self.column(j), j);
        }
        Ok(())
    }
}

/// Concatenate a q-ary codebook with the unit-weight indicator map: column
/// j is, block by block, the indicator vector of codeword j's symbols.
/// The result has q * M_q rows and one 1 per q-row block per column.
pub fn ks_concatenate(book: &Codebook, field: &FieldSpec) -> Result<BinaryTestMatrix, MatrixError> {
    let q = field.order() as usize;
    let m_q = book.length();
    let n = book.size();
    let rows = q * m_q;
    let wpc = rows.div_ceil(64);
    let mut bits = vec![0u64; n * wpc];
    for j in 0..n {
        for (pos, &sym) in book.word(j).iter().enumerate() {
            if sym as usize >= q {
                return Err(MatrixError::SymbolOutOfRange {
                    q: q as u32,
                    symbol: sym as u32,
                });
            }
            let row = pos * q + sym as usize;
            bits[j * wpc + row / 64] |= 1u64 << (row % 64);
        }
    }
    let m = BinaryTestMatrix {
        rows,
        cols: n,
        words_per_col: wpc,
        bits,
        provenance: None,
    };
    m.check_distinct()?;
    Ok(m)
}

/// Write the GTMATRIX v1 text format: magic line, `#`-prefixed provenance
/// lines, `M N`, then M rows of N characters in {0,1}. Bit-exact contract.
pub fn matrix_write(matrix: &BinaryTestMatrix, mut w: impl Write) -> io::Result<()> {
    writeln!(w, "GTMATRIX v1")?;
    if let Some(prov) = matrix.provenance() {
        for line in prov.lines() {
            writeln!(w, "# {line}")?;
        }
    }
    writeln!(w, "{} {}", matrix.rows, matrix.cols)?;
    let mut line = String::with_capacity(matrix.cols);
    for r in 0..matrix.rows {
        line.clear();
        for c in 0..matrix.cols {
            line.push(if matrix.get(r, c) { '1' } else { '0' });
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn matrix_write_path(matrix: &BinaryTestMatrix, path: impl AsRef<Path>) -> io::Result<()> {
    let f = File::create(path)?;
    let mut w = BufWriter::new(f);
    matrix_write(matrix, &mut w)?;
    w.flush()
}

pub fn matrix_read(r: impl Read, strictness: Strictness) -> Result<BinaryTestMatrix, MatrixError> {
    let reader = BufReader::new(r);
    let mut lines = reader.lines().enumerate();

    let (_, magic) = lines.next().ok_or(MatrixError::Format {
        line: 1,
        msg: "empty input".into(),
    })?;
    let magic = magic?;
    if magic.trim_end() != "GTMATRIX v1" {
        return Err(MatrixError::Format {
            line: 1,
            msg: format!("expected `GTMATRIX v1`, found `{magic}`"),
        });
    }

    let mut provenance = Vec::new();
    let (dims_line_no, dims) = loop {
        let (i, line) = lines.next().ok_or(MatrixError::Format {
            line: 2,
            msg: "missing dimension line".into(),
        })?;
        let line = line?;
        if let Some(rest) = line.strip_prefix('#') {
            provenance.push(rest.trim_start().to_string());
        } else {
            break (i + 1, line);
        }
    };

    let parts: Vec<&str> = dims.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(MatrixError::Format {
            line: dims_line_no,
            msg: format!("expected `M N`, found `{dims}`"),
        });
    }
    let rows: usize = parts[0].parse().map_err(|_| MatrixError::Format {
        line: dims_line_no,
        msg: format!("bad row count `{}`", parts[0]),
    })?;
    let cols: usize = parts[1].parse().map_err(|_| MatrixError::Format {
        line: dims_line_no,
        msg: format!("bad column count `{}`", parts[1]),
    })?;
    if rows == 0 || cols == 0 {
        return Err(MatrixError::Empty);
    }

    let wpc = rows.div_ceil(64);
    let mut bits = vec![0u64; cols * wpc];
    for r in 0..rows {
        let (line_no, line) = lines.next().ok_or(MatrixError::Format {
            line: dims_line_no + 1 + r,
            msg: format!("missing data row {r}"),
        })?;
        let line = line?;
        let row = line.trim_end();
        if row.len() != cols {
            return Err(MatrixError::Format {
                line: line_no + 1,
                msg: format!("declared N={cols} but line has {} characters", row.len()),
            });
        }
        for (c, ch) in row.bytes().enumerate() {
            match ch {
                b'0' => {}
                b'1' => bits[c * wpc + r / 64] |= 1u64 << (r % 64),
                _ => {
                    return Err(MatrixError::Format {
                        line: line_no + 1,
                        msg: format!("invalid character `{}`", ch as char),
                    })
                }
            }
        }
    }

    let m = BinaryTestMatrix {
        rows,
        cols,
        words_per_col: wpc,
        bits,
        provenance: (!provenance.is_empty()).then(|| provenance.join("\n")),
    };
    if strictness == Strictness::Strict {
        m.check_distinct()?;
    }
    Ok(m)
}

pub fn matrix_read_path(
    path: impl AsRef<Path>,
    strictness: Strictness,
) -> Result<BinaryTestMatrix, MatrixError> {
    matrix_read(File::open(path)?, strictness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{distance_profile, Codebook, DEFAULT_DISTANCE_BUDGET};

    /// q=3 codebook {(0,0), (1,2), (2,1)} from the worked example.
    fn small_ks() -> BinaryTestMatrix {
        let book = Codebook::from_words(3, vec![vec![0, 0], vec![1, 2], vec![2, 1]]).unwrap();
        let f = FieldSpec::new(3).unwrap();
        ks_concatenate(&book, &f).unwrap()
    }

    #[test]
    fn worked_example_supports_and_distances() {
        let m = small_ks();
        assert_eq!((m.tests(), m.items()), (6, 3));
        assert_eq!(m.column_support(0), vec![0, 3]);
        assert_eq!(m.column_support(1), vec![1, 5]);
        assert_eq!(m.column_support(2), vec![2, 4]);
        for i in 0..3 {
            for j in i + 1..3 {
                assert_eq!(m.column_distance(i, j), 4);
            }
        }
        assert_eq!(m.uniform_weight(), Some(2));
    }

    #[test]
    fn single_symbol_column() {
        let book = Codebook::from_words(2, vec![vec![0], vec![1]]).unwrap();
        let f = FieldSpec::new(2).unwrap();
        let m = ks_concatenate(&book, &f).unwrap();
        assert_eq!(m.column_support(0), vec![0]);
        assert_eq!(m.column_support(1), vec![1]);
    }

    #[test]
    fn classic_shape_q8() {
        let f = FieldSpec::new(8).unwrap();
        let code = crate::codes::rs_generator(&f, 2, 7).unwrap();
        let book = Codebook::from_full_linear(&code).unwrap();
        let m = ks_concatenate(&book, &f).unwrap();
        assert_eq!((m.tests(), m.items()), (56, 64));
        assert_eq!(m.uniform_weight(), Some(7));
        // One 1 per q-row block per column.
        for j in 0..m.items() {
            for block in 0..7 {
                let ones = (0..8).filter(|&s| m.get(block * 8 + s, j)).count();
                assert_eq!(ones, 1);
            }
        }
    }

    #[test]
    fn ks_distances_double_the_qary_profile() {
        let f = FieldSpec::new(5).unwrap();
        let code = crate::codes::rs_generator(&f, 2, 4).unwrap();
        let book = Codebook::from_full_linear(&code).unwrap();
        let profile = distance_profile(&book, DEFAULT_DISTANCE_BUDGET, None).unwrap();
        let m = ks_concatenate(&book, &f).unwrap();

        let n = m.items();
        let mut min_d = u32::MAX;
        let mut min_sum = u64::MAX;
        for i in 0..n {
            let mut sum = 0u64;
            for j in 0..n {
                if i != j {
                    let d = m.column_distance(i, j);
                    min_d = min_d.min(d);
                    sum += d as u64;
                }
            }
            min_sum = min_sum.min(sum);
        }
        assert_eq!(min_d, 2 * profile.min_distance);
        assert_eq!(
            num_rational::Ratio::new(min_sum, n as u64 - 1),
            profile.avg_distance * num_rational::Ratio::new(2u64, 1)
        );
    }

    #[test]
    fn rejects_out_of_range_symbols() {
        let book = Codebook::from_words(5, vec![vec![0, 4], vec![1, 2]]).unwrap();
        let f = FieldSpec::new(3).unwrap();
        assert!(matches!(
            ks_concatenate(&book, &f),
            Err(MatrixError::SymbolOutOfRange { q: 3, symbol: 4 })
        ));
    }

    #[test]
    fn identity_render() {
        let m =
            BinaryTestMatrix::from_supports(3, &[vec![0], vec![1], vec![2]], Strictness::Strict)
                .unwrap();
        let mut out = Vec::new();
        matrix_write(&m, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "GTMATRIX v1\n3 3\n100\n010\n001\n"
        );
    }

    #[test]
    fn round_trip_with_provenance() {
        let mut m = small_ks();
        m.set_provenance("q=3\nsource=test");
        let mut out = Vec::new();
        matrix_write(&m, &mut out).unwrap();
        let back = matrix_read(&out[..], Strictness::Strict).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.provenance(), Some("q=3\nsource=test"));
    }

    #[test]
    fn read_rejects_malformed_input() {
        let bad_header = "GTMATRIX v0\n2 2\n10\n01\n";
        assert!(matches!(
            matrix_read(bad_header.as_bytes(), Strictness::Strict),
            Err(MatrixError::Format { line: 1, .. })
        ));
        let bad_width = "GTMATRIX v1\n2 3\n10\n010\n";
        assert!(matches!(
            matrix_read(bad_width.as_bytes(), Strictness::Strict),
            Err(MatrixError::Format { line: 3, .. })
        ));
        let bad_char = "GTMATRIX v1\n2 2\n10\n0x\n";
        assert!(matches!(
            matrix_read(bad_char.as_bytes(), Strictness::Strict),
            Err(MatrixError::Format { line: 4, .. })
        ));
    }

    #[test]
    fn duplicate_columns_strict_vs_lenient() {
        let text = "GTMATRIX v1\n2 2\n11\n00\n";
        assert!(matches!(
            matrix_read(text.as_bytes(), Strictness::Strict),
            Err(MatrixError::DuplicateColumn {
                first: 0,
                second: 1
            })
        ));
        let m = matrix_read(text.as_bytes(), Strictness::Lenient).unwrap();
        assert_eq!(m.items(), 2);
    }
}
