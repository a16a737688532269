//! Byte-stable record and summary files.
//!
//! Floats are written in scientific notation with 17 significant digits
//! (`{:.16e}`), which round-trips every `f64` exactly. Non-finite values are
//! written as `NaN`, `inf` and `-inf`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::TransferRecord;
use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 24] = [
    "realization_index",
    "N",
    "xi",
    "alpha_threshold",
    "E",
    "V",
    "alpha_plus",
    "alpha_minus",
    "E_plus",
    "E_minus",
    "splitting",
    "s_plus",
    "s_minus",
    "delta_s",
    "coupling_norm_sq_plus",
    "coupling_norm_sq_minus",
    "P_H_restricted",
    "P_H_window",
    "t",
    "T_R",
    "ratio_dynamical",
    "ratio_spectral",
    "p_H",
    "degeneracy_flag",
];

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_float(s: &str) -> Option<f64> {
    match s {
        "NaN" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

fn record_fields(r: &TransferRecord) -> Vec<String> {
    let f = format_float;
    vec![
        r.realization_index.to_string(),
        r.n.to_string(),
        f(r.xi),
        f(r.alpha_threshold),
        f(r.e),
        f(r.v),
        f(r.alpha_plus),
        f(r.alpha_minus),
        f(r.e_plus),
        f(r.e_minus),
        f(r.splitting),
        f(r.s_plus),
        f(r.s_minus),
        f(r.delta_s),
        f(r.coupling_norm_sq_plus),
        f(r.coupling_norm_sq_minus),
        f(r.p_h_restricted),
        f(r.p_h_window),
        f(r.t),
        f(r.t_r),
        f(r.ratio_dynamical),
        f(r.ratio_spectral),
        f(r.p_h),
        r.degeneracy_flag.to_string(),
    ]
}

pub fn write_records<W: Write>(out: W, records: &[TransferRecord]) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.write_record(record_fields(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn records_to_string(records: &[TransferRecord]) -> String {
    let mut buf = Vec::new();
    write_records(&mut buf, records).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}

pub fn write_records_csv(path: &Path, records: &[TransferRecord]) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_records(BufWriter::new(file), records).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_error(path: &Path, message: String) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message,
    }
}

pub fn read_records_csv(path: &Path) -> Result<Vec<TransferRecord>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let header = rdr
        .headers()
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?
        .clone();
    if header.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(parse_error(path, "unexpected header".into()));
    }
    let mut out = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let float = |k: usize| -> Result<f64> {
            parse_float(&row[k]).ok_or_else(|| {
                parse_error(
                    path,
                    format!("row {}: bad value {:?} in column {}", line + 1, &row[k], CSV_COLUMNS[k]),
                )
            })
        };
        let int = |k: usize| -> Result<u64> {
            row[k].parse().map_err(|_| {
                parse_error(
                    path,
                    format!("row {}: bad integer {:?} in column {}", line + 1, &row[k], CSV_COLUMNS[k]),
                )
            })
        };
        out.push(TransferRecord {
            realization_index: int(0)?,
            n: int(1)? as usize,
            xi: float(2)?,
            alpha_threshold: float(3)?,
            e: float(4)?,
            v: float(5)?,
            alpha_plus: float(6)?,
            alpha_minus: float(7)?,
            e_plus: float(8)?,
            e_minus: float(9)?,
            splitting: float(10)?,
            s_plus: float(11)?,
            s_minus: float(12)?,
            delta_s: float(13)?,
            coupling_norm_sq_plus: float(14)?,
            coupling_norm_sq_minus: float(15)?,
            p_h_restricted: float(16)?,
            p_h_window: float(17)?,
            t: float(18)?,
            t_r: float(19)?,
            ratio_dynamical: float(20)?,
            ratio_spectral: float(21)?,
            p_h: float(22)?,
            degeneracy_flag: int(23)? as u32,
        });
    }
    Ok(out)
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("summary types serialize");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes named numeric columns as CSV.
pub fn write_columns(path: &Path, names: &[&str], columns: &[Vec<f64>]) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    let wrap = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    w.write_record(names).map_err(wrap)?;
    let rows = columns.iter().map(Vec::len).max().unwrap_or(0);
    for i in 0..rows {
        let row: Vec<String> = columns
            .iter()
            .map(|c| c.get(i).copied().map(format_float).unwrap_or_default())
            .collect();
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}
