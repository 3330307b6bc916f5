//! CSV files: matrices and training traces.
//!
//! A matrix file starts with a `rows,cols` line followed by one
//! comma-separated line per row. Values are written with 17 significant
//! digits so that reading a file back gives the same bits. Lines starting
//! with `#` are ignored on input.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use eqdrop_core::sgd::TrainTrace;
use eqdrop_core::Matrix;

use crate::error::CliError;

/// `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input)
}

pub fn parse_matrix<R: Read>(input: R, name: &str) -> Result<Matrix, CliError> {
    let mut records = reader(input).into_records();
    let bad = |line: u64, msg: String| CliError::usage(format!("{name}: line {line}: {msg}"));

    let header = match records.next() {
        Some(rec) => rec.map_err(|e| CliError::usage(format!("{name}: {e}")))?,
        None => return Err(CliError::usage(format!("{name}: empty file, expected a rows,cols line"))),
    };
    let line = header.position().map_or(1, |p| p.line());
    if header.len() != 2 {
        return Err(bad(line, format!("expected rows,cols, found {} fields", header.len())));
    }
    let dim = |s: &str| s.parse::<usize>().ok().filter(|&d| d > 0);
    let (rows, cols) = match (dim(&header[0]), dim(&header[1])) {
        (Some(r), Some(c)) => (r, c),
        _ => return Err(bad(line, format!("invalid dimensions '{},{}'", &header[0], &header[1]))),
    };

    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for rec in records {
        let rec = rec.map_err(|e| CliError::usage(format!("{name}: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if seen == rows {
            return Err(bad(line, format!("more than the declared {rows} rows")));
        }
        if rec.len() != cols {
            return Err(bad(line, format!("expected {cols} values, found {}", rec.len())));
        }
        for field in rec.iter() {
            let x: f64 = field.parse().map_err(|_| bad(line, format!("not a number: '{field}'")))?;
            if !x.is_finite() {
                return Err(bad(line, format!("non-finite value '{field}'")));
            }
            data.push(x);
        }
        seen += 1;
    }
    if seen != rows {
        return Err(CliError::usage(format!("{name}: declared {rows} rows, found {seen}")));
    }
    Matrix::from_vec(rows, cols, data).map_err(|e| CliError::usage(format!("{name}: {e}")))
}

pub fn read_matrix(path: &Path) -> Result<Matrix, CliError> {
    let file = File::open(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    parse_matrix(file, &path.display().to_string())
}

fn csv_bytes(rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}

pub fn matrix_csv(m: &Matrix) -> Vec<u8> {
    let header = vec![m.rows().to_string(), m.cols().to_string()];
    let body = (0..m.rows()).map(|i| m.row(i).iter().map(|&x| fmt_f64(x)).collect());
    csv_bytes(std::iter::once(header).chain(body))
}

pub fn trace_csv(trace: &TrainTrace) -> Vec<u8> {
    let header = ["step", "objective", "importance_variance"].map(String::from).to_vec();
    let body = (0..trace.len()).map(|k| {
        vec![trace.steps[k].to_string(), fmt_f64(trace.objective[k]), fmt_f64(trace.importance_variance[k])]
    });
    csv_bytes(std::iter::once(header).chain(body))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<(), CliError> {
    write_file(path, &matrix_csv(m))
}

pub fn write_trace(path: &Path, trace: &TrainTrace) -> Result<(), CliError> {
    write_file(path, &trace_csv(trace))
}
