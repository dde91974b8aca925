//! CSV and JSON outputs. All CSV files are UTF-8, comma separated, with a
//! header row; floats are written in Rust's shortest round-trip form so
//! repeated runs give byte-identical files.

use std::io::{Read, Write};
use std::path::Path;

use magnus_delay_core::epidemic::Grid2D;
use magnus_delay_core::magnus::{StepMetric, Trajectory};
use magnus_delay_core::StateVector;
use serde::{Deserialize, Serialize};

use crate::harness::{Order, OrderTable};
use crate::{HarnessError, Result};

/// Trajectory column layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Columns {
    /// `t, u0, u1, ...`
    Components,
    /// `t, <block>_sum, ...`, or `t, sum` for unnamed states.
    Blocks,
}

/// Components when the state has at most this many entries.
pub const MAX_COMPONENT_COLUMNS: usize = 64;

pub fn auto_columns(dim: usize) -> Columns {
    if dim <= MAX_COMPONENT_COLUMNS {
        Columns::Components
    } else {
        Columns::Blocks
    }
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn block_sums(u: &StateVector) -> Vec<(String, f64)> {
    if u.blocks().is_empty() {
        return vec![("sum".into(), u.sum())];
    }
    u.blocks()
        .iter()
        .map(|b| {
            let name = b.name.to_string();
            let s = u.block(&name).map(|x| x.iter().sum()).unwrap_or(0.0);
            (format!("{name}_sum"), s)
        })
        .collect()
}

pub fn write_trajectory_csv<W: Write>(w: W, traj: &Trajectory, columns: Columns) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let first = traj.states.first().ok_or_else(|| HarnessError::Study("empty trajectory".into()))?;
    let mut header = vec!["t".to_string()];
    match columns {
        Columns::Components => header.extend((0..first.len()).map(|i| format!("u{i}"))),
        Columns::Blocks => header.extend(block_sums(first).into_iter().map(|(n, _)| n)),
    }
    out.write_record(&header)?;
    for (t, u) in traj.times.iter().zip(&traj.states) {
        let mut row = vec![num(*t)];
        match columns {
            Columns::Components => row.extend(u.as_slice().iter().map(|x| num(*x))),
            Columns::Blocks => row.extend(block_sums(u).into_iter().map(|(_, s)| num(s))),
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftRecord {
    pub step: usize,
    pub t: f64,
    pub min_component: f64,
    pub mass_drift: f64,
}

impl From<&StepMetric> for DriftRecord {
    fn from(m: &StepMetric) -> Self {
        DriftRecord { step: m.step, t: m.t, min_component: m.min_component, mass_drift: m.mass_drift }
    }
}

/// Per-step invariant metrics: `step, t, min_component, mass_drift`.
pub fn write_drift_csv<W: Write>(w: W, metrics: &[StepMetric]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["step", "t", "min_component", "mass_drift"])?;
    for m in metrics {
        out.write_record([m.step.to_string(), num(m.t), num(m.min_component), num(m.mass_drift)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_drift_csv<R: Read>(r: R) -> Result<Vec<DriftRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// One order-table row as stored on disk. `error` and `order` are empty
/// for failed runs; `order` is `floor` at the tolerance floor and empty on
/// the last row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub tau: f64,
    pub error: String,
    pub order: String,
}

/// `N, tau, error, order`
pub fn write_order_table_csv<W: Write>(w: W, table: &OrderTable) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["N", "tau", "error", "order"])?;
    for r in &table.rows {
        let error = r.error.map(num).unwrap_or_default();
        let order = match r.order {
            Some(Order::Value(p)) => num(p),
            Some(Order::Floor(_)) => "floor".into(),
            None => String::new(),
        };
        out.write_record([r.n.to_string(), num(r.tau), error, order])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_order_table_csv<R: Read>(r: R) -> Result<Vec<OrderRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub struct FieldRecord {
    #[serde(rename = "x")]
    pub x: f64,
    #[serde(rename = "y")]
    pub y: f64,
    pub s: f64,
    pub i: f64,
    pub r: f64,
}

/// Cell-centre snapshot of an epidemic state: `x, y, S, I, R`, row by row in `y`.
pub fn write_fields_csv<W: Write>(w: W, grid: &Grid2D, u: &StateVector) -> Result<()> {
    let block = |name: &str| {
        u.block(name)
            .filter(|b| b.len() == grid.cells())
            .ok_or_else(|| HarnessError::Study(format!("state has no {name} block matching the grid")))
    };
    let (s, i, r) = (block("S")?, block("I")?, block("R")?);
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "y", "S", "I", "R"])?;
    for k in 0..grid.cells() {
        let (x, y) = grid.center(k);
        out.write_record([num(x), num(y), num(s[k]), num(i[k]), num(r[k])])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_fields_csv<R: Read>(r: R) -> Result<Vec<FieldRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Creates `path` and hands a buffered writer to `f`.
pub fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}
