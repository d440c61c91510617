//! CSV reading and writing.
//!
//! Dialect: UTF-8, comma delimiter, mandatory header row, double-quote
//! quoting with doubled quotes inside. Fields are quoted on output only when
//! they contain a comma, quote or line break; missing cells are empty fields.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use sdc_core::utility::ScatterPoint;
use sdc_core::{AttributeMeta, Table};

use crate::error::{Error, Result};

/// Reads a CSV stream whose header lists exactly the schema's attribute
/// names, in order.
pub fn load_table<R: Read>(source: R, schema: Vec<AttributeMeta>) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    check_header(&header, &schema)?;
    let records = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_owned).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Table::parse(schema, records)?)
}

pub(crate) fn check_header(header: &[String], schema: &[AttributeMeta]) -> Result<()> {
    if header.len() != schema.len() || header.iter().zip(schema).any(|(h, m)| *h != m.name) {
        return Err(Error::HeaderMismatch {
            expected: schema
                .iter()
                .map(|m| m.name.as_str())
                .collect::<Vec<_>>()
                .join(", "),
            found: header.join(", "),
        });
    }
    Ok(())
}

pub fn read_table(path: &Path, schema: Vec<AttributeMeta>) -> Result<Table> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_table(file, schema).map_err(|e| match e {
        Error::Csv(c) => Error::syntax(path.display().to_string(), 0, c.to_string()),
        other => other,
    })
}

fn writer<W: Write>(sink: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(sink)
}

pub fn emit_table<W: Write>(t: &Table, sink: W) -> Result<()> {
    let mut w = writer(sink);
    w.write_record(t.names())?;
    for row in t.rows() {
        w.write_record(row.iter().map(ToString::to_string))?;
    }
    w.flush()?;
    Ok(())
}

/// Plot-ready `x,y,label` rows; missing coordinates are empty fields.
pub fn emit_scatter<W: Write>(points: &[ScatterPoint], sink: W) -> Result<()> {
    let mut w = writer(sink);
    w.write_record(["x", "y", "label"])?;
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (x, y, label) in points {
        w.write_record([fmt(*x), fmt(*y), label.clone()])?;
    }
    w.flush()?;
    Ok(())
}
