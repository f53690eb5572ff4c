//! Matrix file formats: MatrixMarket coordinate and dense CSV.
//!
//! MatrixMarket files use the `coordinate` layout with `integer` or `real`
//! field and `general` symmetry, 1-based indices, rows = genes. Gene and
//! cell identifiers travel in newline-delimited sidecar files
//! `<stem>.genes.txt` and `<stem>.cells.txt` next to the matrix; when the
//! sidecars are absent, ids `G1..Gn` / `C1..Cm` are synthesized.
//!
//! Dense CSV has a header row of cell ids (optionally preceded by a corner
//! label) and one row per gene whose first column is the gene id.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{default_ids, CountMatrix, MatrixValue, RealMatrix, SparseMatrix};

/// Supported on-disk matrix formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixFormat {
    MatrixMarket,
    DenseCsv,
}

impl MatrixFormat {
    /// Guess the format from a file extension (`.mtx` / `.csv`).
    pub fn from_path(path: &Path) -> Option<MatrixFormat> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("mtx") => Some(MatrixFormat::MatrixMarket),
            Some("csv") => Some(MatrixFormat::DenseCsv),
            _ => None,
        }
    }
}

impl std::str::FromStr for MatrixFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "matrix-market" | "mtx" => Ok(MatrixFormat::MatrixMarket),
            "dense-csv" | "csv" => Ok(MatrixFormat::DenseCsv),
            other => Err(format!(
                "unknown matrix format {other:?} (expected matrix-market or dense-csv)"
            )),
        }
    }
}

/// A matrix read from disk: integer counts or reals, per the file contents.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyMatrix {
    Counts(CountMatrix),
    Reals(RealMatrix),
}

impl AnyMatrix {
    pub fn n_genes(&self) -> usize {
        match self {
            AnyMatrix::Counts(m) => m.n_genes(),
            AnyMatrix::Reals(m) => m.n_genes(),
        }
    }

    pub fn n_cells(&self) -> usize {
        match self {
            AnyMatrix::Counts(m) => m.n_cells(),
            AnyMatrix::Reals(m) => m.n_cells(),
        }
    }

    pub fn gene_ids(&self) -> &[String] {
        match self {
            AnyMatrix::Counts(m) => m.gene_ids(),
            AnyMatrix::Reals(m) => m.gene_ids(),
        }
    }

    pub fn cell_ids(&self) -> &[String] {
        match self {
            AnyMatrix::Counts(m) => m.cell_ids(),
            AnyMatrix::Reals(m) => m.cell_ids(),
        }
    }

    /// View as a real matrix, converting counts if needed.
    pub fn to_real(&self) -> RealMatrix {
        match self {
            AnyMatrix::Counts(m) => m.to_real(),
            AnyMatrix::Reals(m) => m.clone(),
        }
    }

    /// Extract integer counts. Real matrices convert only if every stored
    /// value is an exact nonnegative integer.
    pub fn into_counts(self) -> Result<CountMatrix> {
        match self {
            AnyMatrix::Counts(m) => Ok(m),
            AnyMatrix::Reals(m) => {
                let gene_ids = m.gene_ids().to_vec();
                let cell_ids = m.cell_ids().to_vec();
                let triplets: Vec<(usize, usize, u64)> = m
                    .iter()
                    .map(|(g, c, v)| {
                        if v.fract() == 0.0 && v >= 0.0 && v <= 2f64.powi(53) {
                            Ok((g, c, v as u64))
                        } else {
                            Err(Error::Domain(format!(
                                "expected integer counts but entry ({g}, {c}) is {v}"
                            )))
                        }
                    })
                    .collect::<Result<_>>()?;
                CountMatrix::from_triplets(gene_ids, cell_ids, triplets)
            }
        }
    }

    /// Write in the given format, preserving the integer/real distinction.
    pub fn write(&self, path: &Path, format: MatrixFormat) -> Result<()> {
        match self {
            AnyMatrix::Counts(m) => write_matrix(m, path, format),
            AnyMatrix::Reals(m) => write_matrix(m, path, format),
        }
    }
}

fn sidecar_paths(path: &Path) -> (PathBuf, PathBuf) {
    (
        path.with_extension("genes.txt"),
        path.with_extension("cells.txt"),
    )
}

fn read_id_file(path: &Path, expected: usize, kind: &str) -> Result<Vec<String>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let ids: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(path, e))?
        .into_iter()
        .map(|l| l.trim_end().to_string())
        .filter(|l| !l.is_empty())
        .collect();
    if ids.len() != expected {
        return Err(Error::Domain(format!(
            "{}: expected {expected} {kind} ids, found {}",
            path.display(),
            ids.len()
        )));
    }
    Ok(ids)
}

/// Read a matrix file. MatrixMarket headers decide integer vs real; dense
/// CSV yields counts when every value is written as a plain nonnegative
/// integer, reals otherwise.
pub fn read_matrix(path: &Path, format: MatrixFormat) -> Result<AnyMatrix> {
    match format {
        MatrixFormat::MatrixMarket => read_matrix_market(path),
        MatrixFormat::DenseCsv => read_dense_csv(path),
    }
}

/// Write a matrix. Output re-reads to an equal matrix (values exact).
pub fn write_matrix<T: MatrixValue>(
    m: &SparseMatrix<T>,
    path: &Path,
    format: MatrixFormat,
) -> Result<()> {
    match format {
        MatrixFormat::MatrixMarket => write_matrix_market(m, path),
        MatrixFormat::DenseCsv => write_dense_csv(m, path),
    }
}

fn read_matrix_market(path: &Path) -> Result<AnyMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty file"))?;
    let header = header.map_err(|e| Error::io(path, e))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "%%MatrixMarket" {
        return Err(Error::parse(
            path,
            1,
            "header must be '%%MatrixMarket matrix coordinate integer|real general'",
        ));
    }
    if fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(Error::parse(
            path,
            1,
            format!("unsupported object/format '{} {}'", fields[1], fields[2]),
        ));
    }
    let integer = match fields[3] {
        "integer" => true,
        "real" => false,
        other => {
            return Err(Error::parse(
                path,
                1,
                format!("unsupported field '{other}' (expected integer or real)"),
            ))
        }
    };
    if fields[4] != "general" {
        return Err(Error::parse(
            path,
            1,
            format!("unsupported symmetry '{}' (expected general)", fields[4]),
        ));
    }

    // Dimensions line: first non-comment, non-blank line after the header.
    let mut dims: Option<(usize, usize, usize)> = None;
    let mut dims_line = 0;
    for (idx, line) in lines.by_ref() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = trimmed.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::parse(
                path,
                idx + 1,
                "dimensions line must be '<genes> <cells> <entries>'",
            ));
        }
        let parse = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| {
                Error::parse(path, idx + 1, format!("invalid dimension {s:?}"))
            })
        };
        dims = Some((parse(parts[0])?, parse(parts[1])?, parse(parts[2])?));
        dims_line = idx + 1;
        break;
    }
    let (n_genes, n_cells, nnz) =
        dims.ok_or_else(|| Error::parse(path, dims_line + 1, "missing dimensions line"))?;

    let mut int_triplets: Vec<(usize, usize, u64)> = Vec::with_capacity(if integer { nnz } else { 0 });
    let mut real_triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(if integer { 0 } else { nnz });
    let mut seen = 0usize;
    for (idx, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let lineno = idx + 1;
        if seen == nnz {
            return Err(Error::parse(
                path,
                lineno,
                format!("more than the declared {nnz} entries"),
            ));
        }
        let parts: Vec<&str> = trimmed.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::parse(
                path,
                lineno,
                "entry line must be '<gene> <cell> <value>'",
            ));
        }
        let g: usize = parts[0]
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("invalid gene index {:?}", parts[0])))?;
        let c: usize = parts[1]
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("invalid cell index {:?}", parts[1])))?;
        if g == 0 || c == 0 || g > n_genes || c > n_cells {
            return Err(Error::parse(
                path,
                lineno,
                format!("coordinate ({g}, {c}) outside 1-based {n_genes}x{n_cells} bounds"),
            ));
        }
        if integer {
            let v: i64 = parts[2].parse().map_err(|_| {
                Error::parse(path, lineno, format!("invalid integer value {:?}", parts[2]))
            })?;
            if v < 0 {
                return Err(Error::Domain(format!(
                    "{}: line {lineno}: negative count {v}",
                    path.display()
                )));
            }
            int_triplets.push((g - 1, c - 1, v as u64));
        } else {
            let v: f64 = parts[2].parse().map_err(|_| {
                Error::parse(path, lineno, format!("invalid real value {:?}", parts[2]))
            })?;
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Domain(format!(
                    "{}: line {lineno}: invalid value {v} (must be finite and nonnegative)",
                    path.display()
                )));
            }
            real_triplets.push((g - 1, c - 1, v));
        }
        seen += 1;
    }
    if seen != nnz {
        return Err(Error::parse(
            path,
            dims_line,
            format!("declared {nnz} entries but found {seen}"),
        ));
    }

    let (genes_path, cells_path) = sidecar_paths(path);
    let gene_ids = if genes_path.is_file() {
        read_id_file(&genes_path, n_genes, "gene")?
    } else {
        default_ids("G", n_genes)
    };
    let cell_ids = if cells_path.is_file() {
        read_id_file(&cells_path, n_cells, "cell")?
    } else {
        default_ids("C", n_cells)
    };

    let ctx = |e: Error| match e {
        Error::Domain(msg) => Error::Domain(format!("{}: {msg}", path.display())),
        other => other,
    };
    if integer {
        Ok(AnyMatrix::Counts(
            CountMatrix::from_triplets(gene_ids, cell_ids, int_triplets).map_err(ctx)?,
        ))
    } else {
        Ok(AnyMatrix::Reals(
            RealMatrix::from_triplets(gene_ids, cell_ids, real_triplets).map_err(ctx)?,
        ))
    }
}

fn write_matrix_market<T: MatrixValue>(m: &SparseMatrix<T>, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(path, e);
    writeln!(
        w,
        "%%MatrixMarket matrix coordinate {} general",
        T::MM_FIELD
    )
    .map_err(io_err)?;
    writeln!(w, "{} {} {}", m.n_genes(), m.n_cells(), m.nnz()).map_err(io_err)?;
    for (g, c, v) in m.iter() {
        writeln!(w, "{} {} {}", g + 1, c + 1, v.format()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;

    let (genes_path, cells_path) = sidecar_paths(path);
    write_id_file(&genes_path, m.gene_ids())?;
    write_id_file(&cells_path, m.cell_ids())?;
    Ok(())
}

fn write_id_file(path: &Path, ids: &[String]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for id in ids {
        writeln!(w, "{id}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_dense_csv(path: &Path) -> Result<AnyMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::parse(path, 1, format!("{other:?}")),
        })?;

    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| csv_error(path, e))?,
        None => return Err(Error::parse(path, 1, "empty file")),
    };

    let mut gene_ids = Vec::new();
    let mut rows: Vec<Vec<String>> = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let mut fields = rec.iter();
        let gene = fields.next().ok_or_else(|| {
            Error::parse(path, line, "row missing gene id column")
        })?;
        gene_ids.push(gene.to_string());
        rows.push(fields.map(str::to_string).collect());
    }
    if rows.is_empty() {
        return Err(Error::parse(path, 1, "no gene rows"));
    }
    let n_cells = rows[0].len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n_cells {
            return Err(Error::parse(
                path,
                i + 2,
                format!("row has {} values, expected {n_cells}", row.len()),
            ));
        }
    }

    // Header may or may not carry a corner label before the cell ids.
    let header_fields: Vec<String> = header.iter().map(str::to_string).collect();
    let cell_ids: Vec<String> = if header_fields.len() == n_cells + 1 {
        header_fields[1..].to_vec()
    } else if header_fields.len() == n_cells {
        header_fields
    } else {
        return Err(Error::parse(
            path,
            1,
            format!(
                "header has {} fields but rows carry {n_cells} values",
                header_fields.len()
            ),
        ));
    };

    // Counts when every nonempty value is a plain nonnegative integer.
    let all_integer = rows
        .iter()
        .flatten()
        .all(|v| v.parse::<u64>().is_ok());

    let ctx = |e: Error| match e {
        Error::Domain(msg) => Error::Domain(format!("{}: {msg}", path.display())),
        other => other,
    };
    if all_integer {
        let mut triplets = Vec::new();
        for (g, row) in rows.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                let v: u64 = v.parse().unwrap();
                if v != 0 {
                    triplets.push((g, c, v));
                }
            }
        }
        Ok(AnyMatrix::Counts(
            CountMatrix::from_triplets(gene_ids, cell_ids, triplets).map_err(ctx)?,
        ))
    } else {
        let mut triplets = Vec::new();
        for (g, row) in rows.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                let parsed: f64 = v.parse().map_err(|_| {
                    Error::parse(path, g + 2, format!("invalid value {v:?}"))
                })?;
                if !parsed.is_finite() || parsed < 0.0 {
                    return Err(Error::Domain(format!(
                        "{}: row {}: invalid value {parsed} (must be finite and nonnegative)",
                        path.display(),
                        g + 2
                    )));
                }
                if parsed != 0.0 {
                    triplets.push((g, c, parsed));
                }
            }
        }
        Ok(AnyMatrix::Reals(
            RealMatrix::from_triplets(gene_ids, cell_ids, triplets).map_err(ctx)?,
        ))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, line, format!("{other:?}")),
    }
}

fn write_dense_csv<T: MatrixValue>(m: &SparseMatrix<T>, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, 0, format!("{other:?}")),
    })?;
    let mut header = Vec::with_capacity(m.n_cells() + 1);
    header.push("gene".to_string());
    header.extend(m.cell_ids().iter().cloned());
    w.write_record(&header).map_err(|e| csv_error(path, e))?;

    let rows = m.to_dense_rows();
    for (g, row) in rows.iter().enumerate() {
        let mut record = Vec::with_capacity(m.n_cells() + 1);
        record.push(m.gene_ids()[g].clone());
        record.extend(row.iter().map(|&v| format_csv_value(v)));
        w.write_record(&record).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn format_csv_value(v: f64) -> String {
    // Integral values print without a fraction so count matrices stay
    // integer-typed across a round trip; f64 Display round-trips exactly.
    if v.fract() == 0.0 && v.abs() < 9.007_199_254_740_992e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}
