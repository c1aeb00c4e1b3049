use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::hex_digest;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::grid::{CoupledField, Side, SplitGrid};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

/// Files written into one output directory, with their digests.
#[derive(Debug)]
pub(crate) struct OutputDir {
    root: PathBuf,
    prefix: String,
    files: Vec<OutputFile>,
}

impl OutputDir {
    pub fn create(root: &Path, sub: Option<&str>) -> Result<Self> {
        let dir = match sub {
            Some(s) => root.join(s),
            None => root.to_path_buf(),
        };
        fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        Ok(OutputDir {
            root: dir,
            prefix: sub.map(|s| format!("{s}/")).unwrap_or_default(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.files.push(OutputFile {
            file: format!("{}{name}", self.prefix),
            sha256: hex_digest(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn finish(mut self) -> Vec<OutputFile> {
        self.files.sort_by(|a, b| a.file.cmp(&b.file));
        self.files
    }
}

pub fn field_file_name(side: Side) -> String {
    format!("field_{}.csv", side.tag())
}

/// One side of a field as CSV: node index, position and value, at full precision.
pub fn field_csv(u: &CoupledField, side: Side) -> Result<Vec<u8>> {
    let sg = u.grid().side(side);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["node", "x0", "x1", "x2", "u0", "u1", "u2"]).map_err(csv_err)?;
    for (i, v) in u.side(side).iter().enumerate() {
        let x = sg.position(i);
        let mut row = vec![i.to_string()];
        row.extend(x.iter().chain(v.iter()).map(|c| format!("{c:.17e}")));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

#[derive(Deserialize)]
struct FieldRow {
    node: usize,
    #[allow(dead_code)]
    x0: f64,
    #[allow(dead_code)]
    x1: f64,
    #[allow(dead_code)]
    x2: f64,
    u0: f64,
    u1: f64,
    u2: f64,
}

/// Reads a field written by [`field_csv`] back onto `grid`.
pub fn read_field(dir: &Path, grid: SplitGrid) -> Result<CoupledField> {
    let mut sides = Vec::with_capacity(2);
    for side in Side::BOTH {
        let path = dir.join(field_file_name(side));
        let len = grid.side(side).len();
        let mut values = vec![None; len];
        let mut reader = csv::Reader::from_path(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        for row in reader.deserialize::<FieldRow>() {
            let row = row.map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let slot = values
                .get_mut(row.node)
                .ok_or_else(|| Error::invalid(format!("{}: node {} outside the grid", path.display(), row.node)))?;
            *slot = Some(Vec3::new(row.u0, row.u1, row.u2));
        }
        let values: Option<Vec<Vec3>> = values.into_iter().collect();
        sides.push(values.ok_or_else(|| {
            Error::invalid(format!("{}: expected {len} nodes for this grid", path.display()))
        })?);
    }
    let minus = sides.pop().expect("two sides");
    let plus = sides.pop().expect("two sides");
    CoupledField::new(grid, plus, minus)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Rows of numbers as CSV with a header.
pub(crate) fn table_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Measured scalars, keyed for stable output order.
pub type Measured = BTreeMap<String, f64>;
