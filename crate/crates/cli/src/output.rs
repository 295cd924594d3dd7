//! Result files. Tables go out as CSV or as a JSON array of row objects;
//! summaries are always JSON.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use topotrack::io::write_records;
use topotrack::EdgeVector;

use crate::config::Format;
use crate::error::{data_err, CliError, CliResult};

pub fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Writes `rows` to `dir/stem.{csv,json}` and returns the path.
pub fn write_table<T: Serialize>(dir: &Path, stem: &str, format: Format, rows: &[T]) -> CliResult<PathBuf> {
    let path = dir.join(format!("{stem}.{}", format.extension()));
    let mut out = create(&path)?;
    match format {
        Format::Csv => write_records(rows, &mut out).map_err(data_err)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, rows).map_err(|e| CliError::Data(e.to_string()))?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(path)
}

/// Reads a table written by [`write_table`], choosing the parser by extension.
pub fn read_table<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let file = File::open(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    let ctx = |e: &dyn std::fmt::Display| CliError::Data(format!("{}: {e}", path.display()));
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| ctx(&e))
    } else {
        csv::Reader::from_reader(file)
            .deserialize()
            .collect::<Result<Vec<T>, _>>()
            .map_err(|e| ctx(&e))
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Data(e.to_string()))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct EdgeRow {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Edge list with 1-based endpoints, every pair included.
pub fn write_edges(dir: &Path, stem: &str, format: Format, w: &EdgeVector) -> CliResult<PathBuf> {
    match format {
        Format::Csv => {
            let path = dir.join(format!("{stem}.csv"));
            let mut out = create(&path)?;
            topotrack::io::write_edge_list(w, &mut out).map_err(data_err)?;
            out.flush()?;
            Ok(path)
        }
        Format::Json => {
            let rows: Vec<EdgeRow> = w
                .edges()
                .map(|(i, j, weight)| EdgeRow { i: i + 1, j: j + 1, weight })
                .collect();
            write_table(dir, stem, format, &rows)
        }
    }
}
