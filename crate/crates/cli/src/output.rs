use std::path::Path;

use crate::error::{CliError, Result};

/// Scientific notation with 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let io_err = |e: csv::Error| CliError::Io { path: path.display().to_string(), source: e.into() };
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    w.write_record(header).map_err(io_err)?;
    for row in rows {
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(|source| CliError::Io { path: path.display().to_string(), source })
}
