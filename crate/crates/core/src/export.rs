//! Plain-text output: value CSVs, matrix triplets with a JSON sidecar.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::domain::DomainSpec;
use crate::error::Result;
use crate::matrix::{MatrixView, SparseMatrix};
use crate::multiindex::GridSize;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// One value per line under the header `value`.
pub fn write_values_csv(path: &Path, values: &[f64]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "value")?;
    for &v in values {
        writeln!(w, "{}", fmt17(v))?;
    }
    w.flush()?;
    Ok(())
}

/// A table with a header row; cells are written as given.
pub fn write_table_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        writeln!(w, "{}", r.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct TripletSidecar<'a> {
    pub size: usize,
    pub domain: &'a DomainSpec,
    pub n: &'a GridSize,
    pub d_n_omega: usize,
}

/// Lines `row col value` (1-based); complex matrices get a fourth column
/// with the imaginary part.
pub fn write_triplets(path: &Path, m: &SparseMatrix) -> Result<()> {
    let mut w = create(path)?;
    let complex = !m.is_real();
    for (i, j, v) in m.triplets() {
        if complex {
            writeln!(w, "{} {} {} {}", i + 1, j + 1, fmt17(v.re), fmt17(v.im))?;
        } else {
            writeln!(w, "{} {} {}", i + 1, j + 1, fmt17(v.re))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `<stem>.txt` with the triplets and `<stem>.json` with the sidecar.
pub fn export_system(
    dir: &Path,
    stem: &str,
    m: &SparseMatrix,
    domain: &DomainSpec,
    n: &GridSize,
    d_n_omega: usize,
) -> Result<()> {
    write_triplets(&dir.join(format!("{stem}.txt")), m)?;
    let sidecar = TripletSidecar {
        size: m.nrows(),
        domain,
        n,
        d_n_omega,
    };
    write_json(&dir.join(format!("{stem}.json")), &sidecar)
}
