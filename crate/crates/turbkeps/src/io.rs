//! File formats: the TKEF gridded-field container, plain-text field input,
//! diagnostics tables and the report emitters.
//!
//! All multi-byte values are little-endian. JSON is assembled explicitly so
//! that non-finite measurements survive serialization (`serde_json` refuses
//! NaN); they are encoded as the strings `"NaN"`, `"inf"` and `"-inf"`, and
//! object keys come out alphabetically ordered, which keeps reruns
//! byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::{Map, Number, Value};

use crate::audit::{AuditReport, SweepAxis, UniformityReport, Verdict};
use crate::domain::{Basis, Grid};
use crate::error::IoError;
use crate::scalar::Real;
use crate::solver::{StepDiagnostics, Trajectory};

/// Container format version written by this build.
pub const TKEF_VERSION: u32 = 1;

const MAGIC: [u8; 4] = *b"TKEF";

/// One time record of a gridded-field container.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRecord {
    pub t: f64,
    /// Component-major nodal values, row-major within each component.
    pub fields: Vec<Vec<f64>>,
}

/// Self-describing gridded-field container.
///
/// Layout: magic `"TKEF"`, version u32, dimension u32, grid resolution u32,
/// component count u32, record count u32, extent (dimension f64s), then per
/// record the time stamp f64 followed by the nodal values of each component
/// in row-major node order.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldContainer {
    pub dim: u32,
    pub grid_n: u32,
    pub extent: Vec<f64>,
    pub components: u32,
    pub records: Vec<FieldRecord>,
}

impl FieldContainer {
    /// Serializes the container to `path` in one write.
    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        let nodes = self.node_count();
        if self.extent.len() != self.dim as usize {
            return Err(corrupt(path, "extent length disagrees with dimension"));
        }
        if self.components == 0 {
            return Err(corrupt(path, "zero components"));
        }
        for rec in &self.records {
            if rec.fields.len() != self.components as usize
                || rec.fields.iter().any(|f| f.len() != nodes)
            {
                return Err(corrupt(path, "ragged record shape"));
            }
        }
        let mut buf = Vec::with_capacity(
            24 + 8 * self.extent.len()
                + self.records.len() * (8 + 8 * nodes * self.components as usize),
        );
        buf.extend_from_slice(&MAGIC);
        for word in [
            TKEF_VERSION,
            self.dim,
            self.grid_n,
            self.components,
            self.records.len() as u32,
        ] {
            buf.extend_from_slice(&word.to_le_bytes());
        }
        for &e in &self.extent {
            buf.extend_from_slice(&e.to_le_bytes());
        }
        for rec in &self.records {
            buf.extend_from_slice(&rec.t.to_le_bytes());
            for field in &rec.fields {
                for &v in field {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        fs::write(path, buf).map_err(|e| file_err(path, e))
    }

    /// Reads a container back; the node count per component is recovered
    /// from the record size, so both grid layouts round-trip.
    pub fn read(path: &Path) -> Result<Self, IoError> {
        let bytes = fs::read(path).map_err(|e| file_err(path, e))?;
        let mut cur = Cursor {
            bytes: &bytes,
            pos: 0,
            path,
        };
        let magic = cur.take(4)?;
        if magic != MAGIC {
            return Err(IoError::BadMagic {
                path: path.display().to_string(),
            });
        }
        let version = cur.u32()?;
        if version != TKEF_VERSION {
            return Err(IoError::BadVersion {
                path: path.display().to_string(),
                version,
            });
        }
        let dim = cur.u32()?;
        let grid_n = cur.u32()?;
        let components = cur.u32()?;
        let n_records = cur.u32()?;
        if components == 0 {
            return Err(corrupt(path, "zero components"));
        }
        let extent: Vec<f64> = (0..dim).map(|_| cur.f64()).collect::<Result<_, _>>()?;
        let remaining = bytes.len() - cur.pos;
        let mut records = Vec::with_capacity(n_records as usize);
        let nodes = if n_records == 0 {
            if remaining != 0 {
                return Err(corrupt(path, "payload after an empty record table"));
            }
            0
        } else {
            if remaining % n_records as usize != 0 {
                return Err(corrupt(path, "payload does not split into records"));
            }
            let record_len = remaining / n_records as usize;
            let field_bytes = record_len
                .checked_sub(8)
                .ok_or_else(|| corrupt(path, "record shorter than its time stamp"))?;
            if field_bytes % (8 * components as usize) != 0 {
                return Err(corrupt(path, "record does not split into components"));
            }
            field_bytes / (8 * components as usize)
        };
        for _ in 0..n_records {
            let t = cur.f64()?;
            let fields = (0..components)
                .map(|_| (0..nodes).map(|_| cur.f64()).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            records.push(FieldRecord { t, fields });
        }
        Ok(FieldContainer {
            dim,
            grid_n,
            extent,
            components,
            records,
        })
    }

    /// Nodes per component, 0 when the container holds no records.
    pub fn node_count(&self) -> usize {
        self.records.first().map_or(0, |r| r.fields.first().map_or(0, Vec::len))
    }

    /// Checks the header and record shape against an expected layout.
    pub fn expect_layout(
        &self,
        path: &Path,
        dim: u32,
        grid_n: u32,
        components: u32,
        nodes: usize,
    ) -> Result<(), IoError> {
        if self.dim != dim || self.grid_n != grid_n {
            return Err(corrupt(
                path,
                format!(
                    "grid mismatch: container is d={} N={}, expected d={dim} N={grid_n}",
                    self.dim, self.grid_n
                ),
            ));
        }
        if self.components != components {
            return Err(corrupt(
                path,
                format!(
                    "component mismatch: container has {}, expected {components}",
                    self.components
                ),
            ));
        }
        if !self.records.is_empty() && self.node_count() != nodes {
            return Err(corrupt(
                path,
                format!(
                    "node mismatch: container has {}, grid has {nodes}",
                    self.node_count()
                ),
            ));
        }
        Ok(())
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IoError> {
        if self.pos + n > self.bytes.len() {
            return Err(corrupt(self.path, "unexpected end of file"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, IoError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, IoError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn file_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::File {
        path: path.display().to_string(),
        source,
    }
}

fn corrupt(path: &Path, detail: impl Into<String>) -> IoError {
    IoError::Corrupt {
        path: path.display().to_string(),
        detail: detail.into(),
    }
}

/// Evaluates the trajectory samples to nodal fields.
///
/// Components, in order: velocity x, velocity y, turbulent energy.
pub fn trajectory_container<T: Real>(traj: &Trajectory<T>, basis: &Basis<T>) -> FieldContainer {
    let nodes = basis.grid.node_count();
    let records = traj
        .samples
        .iter()
        .map(|s| {
            let mut ux = vec![T::zero(); nodes];
            let mut uy = vec![T::zero(); nodes];
            let mut k = vec![T::zero(); nodes];
            basis.eval_velocity(&s.velocity, &mut ux, &mut uy);
            basis.eval_scalar(&s.tke, &mut k);
            FieldRecord {
                t: s.t.to_f64_lossy(),
                fields: [ux, uy, k]
                    .into_iter()
                    .map(|f| f.into_iter().map(|v| v.to_f64_lossy()).collect())
                    .collect(),
            }
        })
        .collect();
    FieldContainer {
        dim: 2,
        grid_n: basis.grid.grid_n,
        extent: basis.grid.extent.iter().map(|e| e.to_f64_lossy()).collect(),
        components: 3,
        records,
    }
}

/// Reads an `x,y,value` table into a nodal field on `grid`.
///
/// Rows may come in any order and an optional non-numeric header line is
/// skipped; every node must be covered exactly once. On the torus the seam
/// coordinate (x equal to the extent) addresses node 0.
pub fn read_field_csv(path: &Path, grid: &Grid<f64>) -> Result<Vec<f64>, IoError> {
    let text = fs::read_to_string(path).map_err(|e| file_err(path, e))?;
    let nodes = grid.node_count();
    let periodic = grid.mode.is_periodic();
    let mut values = vec![0.0; nodes];
    let mut seen = vec![false; nodes];
    let mut covered = 0usize;
    let mut first_data_seen = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> = cols.iter().map(|c| c.parse::<f64>().ok()).collect();
        let row = match parsed {
            Some(row) => row,
            // one header line is allowed before any data
            None if !first_data_seen => continue,
            None => {
                return Err(corrupt(path, format!("line {}: not numeric", lineno + 1)));
            }
        };
        first_data_seen = true;
        if row.len() != 3 {
            return Err(corrupt(
                path,
                format!("line {}: expected x,y,value", lineno + 1),
            ));
        }
        let [x, y, v] = [row[0], row[1], row[2]];
        if !v.is_finite() {
            return Err(corrupt(
                path,
                format!("line {}: non-finite value {v}", lineno + 1),
            ));
        }
        let ix = locate(path, lineno, x, grid.h[0], grid.nodes_per_side, periodic)?;
        let iy = locate(path, lineno, y, grid.h[1], grid.nodes_per_side, periodic)?;
        let idx = iy * grid.nodes_per_side + ix;
        if seen[idx] {
            return Err(corrupt(
                path,
                format!("line {}: node ({x}, {y}) listed twice", lineno + 1),
            ));
        }
        seen[idx] = true;
        covered += 1;
        values[idx] = v;
    }
    if covered != nodes {
        return Err(corrupt(
            path,
            format!("{covered} of {nodes} grid nodes covered"),
        ));
    }
    Ok(values)
}

fn locate(
    path: &Path,
    lineno: usize,
    x: f64,
    h: f64,
    n_side: usize,
    periodic: bool,
) -> Result<usize, IoError> {
    let i = (x / h).round();
    if !i.is_finite() || (x - i * h).abs() > 1e-6 * h {
        return Err(corrupt(
            path,
            format!("line {}: coordinate {x} is not a grid node", lineno + 1),
        ));
    }
    let i = i as i64;
    if periodic {
        // nodes_per_side equals the resolution; the seam wraps to node 0
        let n = n_side as i64;
        if i < 0 || i > n {
            return Err(corrupt(
                path,
                format!("line {}: coordinate {x} outside the domain", lineno + 1),
            ));
        }
        Ok((i % n) as usize)
    } else {
        if i < 0 || i >= n_side as i64 {
            return Err(corrupt(
                path,
                format!("line {}: coordinate {x} outside the domain", lineno + 1),
            ));
        }
        Ok(i as usize)
    }
}

/// Writes the per-step integrator diagnostics as a CSV table.
pub fn write_diagnostics_csv<T: Real>(
    path: &Path,
    diags: &[StepDiagnostics<T>],
) -> Result<(), IoError> {
    let mut out = String::from("t,dt,local_error,min_k,energy_residual\n");
    for d in diags {
        let _ = writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e}",
            d.t.to_f64_lossy(),
            d.dt.to_f64_lossy(),
            d.local_error.to_f64_lossy(),
            d.min_k.to_f64_lossy(),
            d.energy_residual.to_f64_lossy(),
        );
    }
    fs::write(path, out).map_err(|e| file_err(path, e))
}

/// JSON encoding of a float that tolerates non-finite values.
pub fn json_f64(x: f64) -> Value {
    if x.is_nan() {
        Value::String("NaN".into())
    } else if x == f64::INFINITY {
        Value::String("inf".into())
    } else if x == f64::NEG_INFINITY {
        Value::String("-inf".into())
    } else {
        Value::Number(Number::from_f64(x).expect("finite"))
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Holds => "holds",
        Verdict::Violated => "violated",
        Verdict::Measured => "measured",
    }
}

/// Machine view of an audit report: estimate name, anchor string, left and
/// right hand values, margin and verdict per record, plus the global flags.
pub fn audit_report_value(report: &AuditReport) -> Value {
    let records: Vec<Value> = report
        .records
        .iter()
        .map(|r| {
            let mut m = Map::new();
            m.insert("name".into(), Value::String(r.name.clone()));
            m.insert("anchor".into(), Value::String(r.anchor.to_string()));
            m.insert("lhs".into(), json_f64(r.lhs));
            m.insert("rhs_or_bound".into(), json_f64(r.rhs_or_bound));
            m.insert("margin".into(), json_f64(r.margin));
            m.insert("verdict".into(), Value::String(verdict_str(r.verdict).into()));
            Value::Object(m)
        })
        .collect();
    let mut m = Map::new();
    m.insert("records".into(), Value::Array(records));
    m.insert(
        "positivity_events".into(),
        Value::Number(report.positivity_events.into()),
    );
    m.insert("min_k".into(), json_f64(report.min_k));
    m.insert(
        "notes".into(),
        Value::Array(
            report
                .notes
                .iter()
                .map(|n| Value::String(n.clone()))
                .collect(),
        ),
    );
    Value::Object(m)
}

/// Machine view of a refinement study.
pub fn uniformity_report_value(report: &UniformityReport) -> Value {
    let axis = match report.axis {
        SweepAxis::Regularization => "regularization",
        SweepAxis::VelocityModes => "velocity_modes",
        SweepAxis::ScalarModes => "scalar_modes",
    };
    let mut m = Map::new();
    m.insert("axis".into(), Value::String(axis.into()));
    m.insert(
        "levels".into(),
        Value::Array(report.levels.iter().map(|&l| Value::Number(l.into())).collect()),
    );
    m.insert(
        "tracks".into(),
        Value::Array(
            report
                .tracks
                .iter()
                .map(|t| {
                    let mut tm = Map::new();
                    tm.insert("name".into(), Value::String(t.name.into()));
                    tm.insert(
                        "values".into(),
                        Value::Array(t.values.iter().copied().map(json_f64).collect()),
                    );
                    tm.insert("max".into(), json_f64(t.max));
                    tm.insert("bounded".into(), Value::Bool(t.bounded));
                    Value::Object(tm)
                })
                .collect(),
        ),
    );
    m.insert(
        "velocity_cauchy".into(),
        Value::Array(report.velocity_cauchy.iter().copied().map(json_f64).collect()),
    );
    m.insert(
        "cauchy_decreasing".into(),
        Value::Bool(report.cauchy_decreasing),
    );
    m.insert("bounded".into(), Value::Bool(report.bounded));
    m.insert(
        "failures".into(),
        Value::Array(
            report
                .failures
                .iter()
                .map(|(level, msg)| {
                    let mut fm = Map::new();
                    fm.insert("level".into(), Value::Number((*level).into()));
                    fm.insert("message".into(), Value::String(msg.clone()));
                    Value::Object(fm)
                })
                .collect(),
        ),
    );
    Value::Object(m)
}

/// Pretty-prints a JSON document with a trailing newline.
pub fn write_json(path: &Path, value: &Value) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).expect("no non-string keys");
    text.push('\n');
    fs::write(path, text).map_err(|e| file_err(path, e))
}

/// Writes an audit report as JSON.
pub fn write_audit_json(path: &Path, report: &AuditReport) -> Result<(), IoError> {
    write_json(path, &audit_report_value(report))
}

/// Writes an audit report as CSV, one row per estimate record.
pub fn write_audit_csv(path: &Path, report: &AuditReport) -> Result<(), IoError> {
    let mut out = String::from("name,anchor,lhs,rhs_or_bound,margin,verdict\n");
    for r in &report.records {
        let _ = writeln!(
            out,
            "{},{},{:e},{:e},{:e},{}",
            csv_field(&r.name),
            csv_field(r.anchor),
            r.lhs,
            r.rhs_or_bound,
            r.margin,
            verdict_str(r.verdict),
        );
    }
    fs::write(path, out).map_err(|e| file_err(path, e))
}

/// Writes a refinement study as JSON.
pub fn write_uniformity_json(path: &Path, report: &UniformityReport) -> Result<(), IoError> {
    write_json(path, &uniformity_report_value(report))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
