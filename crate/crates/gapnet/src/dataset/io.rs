//! JSON-lines dataset format.
//!
//! Line 1 is a header object `{"variables": [...], "t_len": N}`; every
//! following line is one episode `{"id", "label", "timestamps", "values"}`
//! with `null` marking missing entries.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EpisodeSet, MaskedSeries};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Header {
    variables: Vec<String>,
    t_len: usize,
}

#[derive(Serialize, Deserialize)]
struct Record {
    id: String,
    label: u8,
    timestamps: Vec<f64>,
    values: Vec<Vec<Option<f64>>>,
}

pub fn load_episodes<P: AsRef<Path>>(path: P) -> Result<EpisodeSet> {
    let file = File::open(path.as_ref())?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 1, msg: "empty file, expected header".into() })?;
    let header: Header = serde_json::from_str(&first?)
        .map_err(|e| Error::Parse { line: 1, msg: format!("bad header: {e}") })?;

    let mut series = Vec::new();
    let mut labels = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line)
            .map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?;
        if rec.label > 1 {
            return Err(Error::Parse { line: line_no, msg: format!("label must be 0 or 1, got {}", rec.label) });
        }
        if rec.values.len() != header.t_len {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("episode '{}' has {} time steps, header says {}", rec.id, rec.values.len(), header.t_len),
            });
        }
        let s = MaskedSeries::from_rows(rec.id, &rec.values, rec.timestamps)
            .map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?;
        if s.n_vars() != header.variables.len() {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("episode '{}' has {} variables, header says {}", s.id, s.n_vars(), header.variables.len()),
            });
        }
        series.push(s);
        labels.push(rec.label);
    }
    EpisodeSet::new(series, labels, header.variables)
}

pub fn save_episodes<P: AsRef<Path>>(set: &EpisodeSet, path: P) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut w = BufWriter::new(file);
    let header = Header { variables: set.variable_names.clone(), t_len: set.t_len() };
    serde_json::to_writer(&mut w, &header).map_err(io_err)?;
    w.write_all(b"\n")?;
    for (s, &label) in set.series.iter().zip(&set.labels) {
        let values = (0..s.t_len())
            .map(|t| {
                (0..s.n_vars())
                    .map(|v| if s.mask[[t, v]] == 1 { Some(s.values[[t, v]]) } else { None })
                    .collect()
            })
            .collect();
        let rec = Record {
            id: s.id.clone(),
            label,
            timestamps: s.timestamps.to_vec(),
            values,
        };
        serde_json::to_writer(&mut w, &rec).map_err(io_err)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn io_err(e: serde_json::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
