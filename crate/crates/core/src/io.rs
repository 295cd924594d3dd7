//! CSV layouts.
//!
//! | file            | header                                 | rows                           |
//! |-----------------|----------------------------------------|--------------------------------|
//! | edge list       | `i,j,weight`                           | one per pair, 1-based, `i < j` |
//! | edge vector     | `weight`                               | one per pair, canonical order  |
//! | signal matrix   | optional channel names                 | one per time sample, N columns |
//! | track records   | `t,method,error,total_weight,f_measure`| one per step and method        |
//!
//! Edge lists always list every pair, zero weights included, so the node
//! count is recoverable from the file alone.

use std::io::{Read, Write};

use serde::Serialize;

use crate::edges::{nodes_from_pair_count, EdgeVector, PairIndex};
use crate::{Error, Result};

fn csv_err(e: csv::Error) -> Error {
    Error::Data(e.to_string())
}

pub fn write_edge_list<W: Write>(w: &EdgeVector, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["i", "j", "weight"]).map_err(csv_err)?;
    for (i, j, weight) in w.edges() {
        wtr.write_record([(i + 1).to_string(), (j + 1).to_string(), weight.to_string()])
            .map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_edge_list<R: Read>(input: R) -> Result<EdgeVector> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != ["i", "j", "weight"] {
        return Err(Error::Data(format!(
            "expected header i,j,weight, found {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = r + 2;
        let field = |c: usize| -> Result<&str> {
            rec.get(c)
                .ok_or_else(|| Error::Data(format!("line {line}: missing column {}", c + 1)))
        };
        let i: usize = field(0)?
            .trim()
            .parse()
            .map_err(|_| Error::Data(format!("line {line}, column 1: not a node index")))?;
        let j: usize = field(1)?
            .trim()
            .parse()
            .map_err(|_| Error::Data(format!("line {line}, column 2: not a node index")))?;
        let weight: f64 = field(2)?
            .trim()
            .parse()
            .map_err(|_| Error::Data(format!("line {line}, column 3: not a number")))?;
        if i == 0 || j <= i {
            return Err(Error::Data(format!(
                "line {line}: endpoints must satisfy 1 <= i < j, got ({i}, {j})"
            )));
        }
        rows.push((i - 1, j - 1, weight));
    }
    let n = nodes_from_pair_count(rows.len())
        .ok_or_else(|| Error::Data(format!("{} rows is not a complete pair list", rows.len())))?;
    let index = PairIndex::new(n)?;
    let mut weights = vec![f64::NAN; rows.len()];
    for (i, j, wt) in rows {
        if j >= n {
            return Err(Error::Data(format!("node {} exceeds {n} nodes", j + 1)));
        }
        weights[index.index_of(i, j)] = wt;
    }
    if weights.iter().any(|w| w.is_nan()) {
        return Err(Error::Data("edge list repeats a pair".into()));
    }
    EdgeVector::new(n, weights)
}

pub fn write_edge_vector<W: Write>(w: &EdgeVector, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["weight"]).map_err(csv_err)?;
    for weight in w.as_slice() {
        wtr.write_record([weight.to_string()]).map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_edge_vector<R: Read>(input: R) -> Result<EdgeVector> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut weights = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let v: f64 = rec
            .get(0)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| Error::Data(format!("line {}: not a number", r + 2)))?;
        weights.push(v);
    }
    let n = nodes_from_pair_count(weights.len()).ok_or_else(|| {
        Error::Data(format!("{} weights is not N(N-1)/2 for any N", weights.len()))
    })?;
    EdgeVector::new(n, weights)
}

/// Time samples of a multichannel recording.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalMatrix {
    pub channels: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
}

impl SignalMatrix {
    pub fn n_channels(&self) -> usize {
        self.rows.first().map(Vec::len).unwrap_or(0)
    }
}

/// Reads a rectangular numeric CSV, one row per time sample. A first row
/// containing any non-numeric cell is taken as channel names.
pub fn read_signal_matrix<R: Read>(input: R) -> Result<SignalMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut channels = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = r + 1;
        if r == 0 && rec.iter().any(|c| c.trim().parse::<f64>().is_err()) {
            channels = Some(rec.iter().map(|c| c.trim().to_string()).collect::<Vec<_>>());
            width = Some(rec.len());
            continue;
        }
        let expected = *width.get_or_insert(rec.len());
        if rec.len() != expected {
            return Err(Error::Data(format!(
                "line {line}: expected {expected} columns, found {}",
                rec.len()
            )));
        }
        let mut row = Vec::with_capacity(expected);
        for (c, cell) in rec.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::Data(format!("line {line}, column {}: '{cell}' is not a number", c + 1))
            })?;
            if !v.is_finite() {
                return Err(Error::Data(format!(
                    "line {line}, column {}: value is not finite",
                    c + 1
                )));
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Data("signal file has no data rows".into()));
    }
    if rows[0].len() < 2 {
        return Err(Error::Data("signal file needs at least 2 columns".into()));
    }
    Ok(SignalMatrix { channels, rows })
}

pub fn write_signal_matrix<W: Write>(m: &SignalMatrix, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    if let Some(ch) = &m.channels {
        wtr.write_record(ch).map_err(csv_err)?;
    }
    for row in &m.rows {
        wtr.write_record(row.iter().map(|v| v.to_string()))
            .map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes serializable rows with a header derived from the field names.
pub fn write_records<W: Write, T: Serialize>(records: &[T], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for r in records {
        wtr.serialize(r).map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{Method, TrackRecord};
    use proptest::prelude::*;

    #[test]
    fn edge_list_layout() {
        let w = EdgeVector::new(3, vec![1.0, 0.0, 2.5]).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&w, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "i,j,weight\n1,2,1\n1,3,0\n2,3,2.5\n"
        );
        assert_eq!(read_edge_list(&buf[..]).unwrap(), w);

        let mut flat = Vec::new();
        write_edge_vector(&w, &mut flat).unwrap();
        assert_eq!(String::from_utf8(flat.clone()).unwrap(), "weight\n1\n0\n2.5\n");
        assert_eq!(read_edge_vector(&flat[..]).unwrap(), w);
    }

    #[test]
    fn edge_list_errors() {
        assert!(read_edge_list("a,b,c\n1,2,1\n".as_bytes()).is_err());
        assert!(read_edge_list("i,j,weight\n2,1,1\n".as_bytes()).is_err());
        assert!(read_edge_list("i,j,weight\n1,2,1\n1,2,1\n1,3,1\n".as_bytes()).is_err());
        assert!(read_edge_list("i,j,weight\n1,2,1\n1,3,1\n".as_bytes()).is_err());
        assert!(read_edge_vector("weight\n1\n2\n".as_bytes()).is_err());
    }

    #[test]
    fn signal_matrix_header_detection_and_diagnostics() {
        let m = read_signal_matrix("a,b,c\n1,2,3\n4,5,6\n".as_bytes()).unwrap();
        assert_eq!(m.channels.as_deref(), Some(&["a".to_string(), "b".into(), "c".into()][..]));
        assert_eq!(m.rows, vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);

        let bare = read_signal_matrix("1,2\n3,4\n".as_bytes()).unwrap();
        assert!(bare.channels.is_none());

        let ragged = read_signal_matrix("1,2,3\n4,5\n".as_bytes()).unwrap_err();
        assert!(ragged.to_string().contains("line 2"), "{ragged}");
        let bad = read_signal_matrix("a,b\n1,2\n3,x\n".as_bytes()).unwrap_err();
        assert!(bad.to_string().contains("line 3, column 2"), "{bad}");
        assert!(read_signal_matrix("1,inf\n".as_bytes()).is_err());
        assert!(read_signal_matrix("a,b\n".as_bytes()).is_err());
    }

    #[test]
    fn record_header() {
        let recs = vec![TrackRecord {
            t: 1,
            method: Method::PrimalPg,
            error: Some(0.5),
            total_weight: 2.0,
            f_measure: None,
        }];
        let mut buf = Vec::new();
        write_records(&recs, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,method,error,total_weight,f_measure\n1,primal_pg,0.5,2.0,\n"
        );
    }

    proptest! {
        #[test]
        fn signal_matrix_roundtrip(rows in proptest::collection::vec(proptest::collection::vec(-1e6f64..1e6, 4), 1..20)) {
            let m = SignalMatrix { channels: Some(vec!["c1".into(), "c2".into(), "c3".into(), "c4".into()]), rows };
            let mut buf = Vec::new();
            write_signal_matrix(&m, &mut buf).unwrap();
            prop_assert_eq!(read_signal_matrix(&buf[..]).unwrap(), m);
        }
    }
}
