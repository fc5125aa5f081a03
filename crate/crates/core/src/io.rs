//! CSV reading and writing for sample frames and the search tables.
//!
//! All files are comma separated, UTF-8, with a mandatory header row. Numbers
//! are written in the shortest form that parses back to the same `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::TimeSeriesFrame;

/// Reads a frame: one column per observable, one row per period.
pub fn read_frame<R: Read>(input: R) -> Result<TimeSeriesFrame> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if names.is_empty() {
        return Err(Error::Parse("missing header row".into()));
    }
    let mut data = Vec::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec?;
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::Parse(format!(
                    "row {}, column `{}`: `{field}` is not a number",
                    rows + 2,
                    names[j]
                ))
            })?;
            data.push(v);
        }
        rows += 1;
    }
    TimeSeriesFrame::new(names.clone(), DMatrix::from_row_slice(rows, names.len(), &data))
}

pub fn read_frame_path(path: &Path) -> Result<TimeSeriesFrame> {
    read_frame(BufReader::new(File::open(path)?))
}

pub fn write_frame<W: Write>(frame: &TimeSeriesFrame, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(frame.names())?;
    let v = frame.values();
    for i in 0..v.nrows() {
        w.write_record(v.row(i).iter().map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_frame_path(frame: &TimeSeriesFrame, path: &Path) -> Result<()> {
    write_frame(frame, BufWriter::new(File::create(path)?))
}

/// A row of the ranked-model table or the Monte Carlo tally.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub index: usize,
    pub exogenous_states: Vec<String>,
    pub endogenous_states: Vec<String>,
    /// Remaining columns, parsed as numbers.
    pub values: Vec<f64>,
}

/// A parsed ranked-model, tally or other index-keyed table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub value_columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

fn split_names(cell: &str) -> Vec<String> {
    cell.split_whitespace().map(str::to_string).collect()
}

/// Parses tables written by [`crate::search::write_results_csv`] and
/// [`crate::search::write_tally_csv`].
pub fn read_table<R: Read>(input: R) -> Result<Table> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if headers.len() < 3 || headers[..3] != ["index", "exogenous_states", "endogenous_states"] {
        return Err(Error::Parse(
            "expected header starting `index,exogenous_states,endogenous_states`".into(),
        ));
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |col: &str| Error::Parse(format!("row {}: bad `{col}`", line + 2));
        rows.push(TableRow {
            index: rec[0].parse().map_err(|_| bad("index"))?,
            exogenous_states: split_names(&rec[1]),
            endogenous_states: split_names(&rec[2]),
            values: rec
                .iter()
                .zip(&headers)
                .skip(3)
                .map(|(f, h)| f.parse().map_err(|_| bad(h)))
                .collect::<Result<_>>()?,
        });
    }
    Ok(Table {
        value_columns: headers[3..].to_vec(),
        rows,
    })
}

/// Writes a [`Table`] back in the layout it was read from.
pub fn write_table<W: Write>(table: &Table, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["index".to_string(), "exogenous_states".into(), "endogenous_states".into()];
    header.extend(table.value_columns.iter().cloned());
    w.write_record(&header)?;
    for r in &table.rows {
        let mut rec = vec![
            r.index.to_string(),
            r.exogenous_states.join(" "),
            r.endogenous_states.join(" "),
        ];
        rec.extend(r.values.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
