//! Field CSV format (`s,t,value`, one row per node, `s` outer) and its JSON
//! sidecar.

use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{ensure, Error, Result};
use crate::grid::{GridField, Rectangle};

/// Sidecar metadata stored next to a field CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub domain: Rectangle,
    pub ns: usize,
    pub nt: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub params: Option<serde_json::Value>,
}

impl FieldMeta {
    pub fn of(f: &GridField) -> Self {
        Self { domain: f.domain(), ns: f.ns(), nt: f.nt(), seed: None, params: None }
    }
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Parameter(format!("field i/o: {e}"))
}

/// Writes the field as CSV with 17 significant digits, which round-trips
/// every `f64` exactly.
pub fn write_field_csv<W: Write>(f: &GridField, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["s", "t", "value"]).map_err(io_err)?;
    for i in 0..=f.ns() {
        let s = format!("{:.16e}", f.s_coord(i));
        for j in 0..=f.nt() {
            w.write_record([s.as_str(), &format!("{:.16e}", f.t_coord(j)), &format!("{:.16e}", f.at(i, j))])
                .map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

pub fn read_field_csv<R: Read>(input: R) -> Result<GridField> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(io_err)?.clone();
    ensure!(headers.iter().map(str::trim).eq(["s", "t", "value"]), Parameter, "field csv header must be `s,t,value`");
    let mut rows: Vec<[f64; 3]> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(io_err)?;
        ensure!(rec.len() == 3, Parameter, "field csv rows need three columns");
        let mut row = [0.0; 3];
        for (k, cell) in rec.iter().enumerate() {
            row[k] = cell.trim().parse::<f64>().map_err(io_err)?;
        }
        rows.push(row);
    }
    ensure!(rows.len() >= 4, Parameter, "field csv has too few rows");
    let width = rows.iter().take_while(|r| r[0] == rows[0][0]).count();
    ensure!(width >= 2 && rows.len().is_multiple_of(width), Parameter, "field csv is not a tensor grid");
    let (ns, nt) = (rows.len() / width - 1, width - 1);
    let last = rows[rows.len() - 1];
    let domain = Rectangle::new(rows[0][0], last[0], rows[0][1], last[1])?;
    let values: Vec<f64> = rows.iter().map(|r| r[2]).collect();
    let field = GridField::new(domain, ns, nt, values)?;
    let tol = 1e-12 * (1.0 + domain.width().abs().max(domain.height().abs()));
    for (k, r) in rows.iter().enumerate() {
        let (i, j) = (k / width, k % width);
        ensure!(
            (r[0] - field.s_coord(i)).abs() <= tol && (r[1] - field.t_coord(j)).abs() <= tol,
            Alignment,
            "row {} at ({}, {}) is off the uniform grid",
            k + 2,
            r[0],
            r[1]
        );
    }
    Ok(field)
}

pub fn save_field(f: &GridField, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(io_err)?;
    write_field_csv(f, std::io::BufWriter::new(file))
}

pub fn load_field(path: &Path) -> Result<GridField> {
    let file = std::fs::File::open(path).map_err(io_err)?;
    read_field_csv(std::io::BufReader::new(file))
}

/// Sidecar path for a field CSV: `x.csv` becomes `x.json`.
pub fn sidecar_path(csv_path: &Path) -> std::path::PathBuf {
    csv_path.with_extension("json")
}

pub fn save_meta(meta: &FieldMeta, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(meta).map_err(io_err)?;
    std::fs::write(path, text + "\n").map_err(io_err)
}

pub fn load_meta(path: &Path) -> Result<FieldMeta> {
    let text = std::fs::read_to_string(path).map_err(io_err)?;
    serde_json::from_str(&text).map_err(io_err)
}
