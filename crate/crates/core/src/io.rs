//! Field snapshots, functional traces and slicing reports on disk.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::functional::slicing::SlicingReport;
use crate::functional::trace::FunctionalTrace;
use crate::lattice::CharacteristicField;

pub const DUMP_MAGIC: &[u8; 4] = b"DWF1";
pub const DUMP_HEADER_LEN: usize = 16;

/// Rows of a field on a uniform grid: `x_j = -x_max + j dx`, row `n` at time `n dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump {
    pub dx: f64,
    pub x_max: f64,
    pub t_max: f64,
    pub nx: usize,
    pub values: Vec<f64>,
}

impl FieldDump {
    pub fn from_lattice(field: &CharacteristicField) -> Self {
        let g = field.grid();
        let rows = field.valid_rows();
        Self {
            dx: g.h(),
            x_max: g.x_max(),
            t_max: g.t(rows.saturating_sub(1)),
            nx: g.nx(),
            values: field.values()[..rows * g.nx()].to_vec(),
        }
    }

    pub fn from_levels(dx: f64, x_max: f64, t_max: f64, levels: &[Vec<f64>]) -> Result<Self> {
        let nx = levels.first().map_or(0, Vec::len);
        if levels.iter().any(|l| l.len() != nx) {
            return Err(Error::GridMismatch("levels differ in length".into()));
        }
        Ok(Self {
            dx,
            x_max,
            t_max,
            nx,
            values: levels.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.values.len().checked_div(self.nx).unwrap_or(0)
    }

    /// 16-byte header (magic, then `h`, `X`, `t_max` as little-endian f32) and row-major f64 values.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(DUMP_HEADER_LEN + 8 * self.values.len());
        out.extend_from_slice(DUMP_MAGIC);
        for v in [self.dx, self.x_max, self.t_max] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < DUMP_HEADER_LEN || &bytes[..4] != DUMP_MAGIC {
            return Err("missing DWF1 header".into());
        }
        let f = |i: usize| f32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as f64;
        let (dx, x_max, t_max) = (f(4), f(8), f(12));
        if !(dx > 0.0) || !(x_max > 0.0) {
            return Err(format!("bad header values h = {dx}, X = {x_max}"));
        }
        let nx = (2.0 * x_max / dx).round() as usize + 1;
        let body = &bytes[DUMP_HEADER_LEN..];
        if !body.len().is_multiple_of(8 * nx) {
            return Err(format!(
                "body of {} bytes is not a whole number of rows of {nx}",
                body.len()
            ));
        }
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            dx,
            x_max,
            t_max,
            nx,
            values,
        })
    }

    /// `x,t,value` rows with `t = n dt`.
    pub fn to_csv(&self, dt: f64) -> String {
        let mut out = String::from("x,t,value\n");
        for (n, row) in self.values.chunks(self.nx.max(1)).enumerate() {
            let t = n as f64 * dt;
            for (j, v) in row.iter().enumerate() {
                let _ = writeln!(out, "{},{},{}", -self.x_max + j as f64 * self.dx, t, v);
            }
        }
        out
    }
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_dump(path: &Path, dump: &FieldDump) -> Result<()> {
    write(path, dump.to_bytes())
}

pub fn read_dump(path: &Path) -> Result<FieldDump> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    FieldDump::from_bytes(&bytes).map_err(|r| Error::format(path, r))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write(path, text)
}

pub const TRACE_HEADER: &str = "t,F,F1,F2,source";

pub fn trace_to_csv(trace: &FunctionalTrace) -> String {
    let mut out = format!("{TRACE_HEADER}\n");
    for i in 0..trace.times.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            trace.times[i], trace.f[i], trace.f1[i], trace.f2[i], trace.source[i]
        );
    }
    out
}

pub fn write_trace(path: &Path, trace: &FunctionalTrace) -> Result<()> {
    write(path, trace_to_csv(trace))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text =
        serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e.to_string()))?;
    write(path, text + "\n")
}

pub fn write_slicing(path: &Path, report: &SlicingReport) -> Result<()> {
    write_json(path, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::CharacteristicGrid;

    #[test]
    fn dump_round_trip() {
        let g = CharacteristicGrid::covering(2.0, 4, 3.0).unwrap();
        let field = CharacteristicField::from_fn(g, |x, t| x * x - t);
        let dump = FieldDump::from_lattice(&field);
        let back = FieldDump::from_bytes(&dump.to_bytes()).unwrap();
        assert_eq!(back, dump);
        assert_eq!(back.rows(), field.valid_rows());
        assert_eq!(&dump.to_bytes()[..4], b"DWF1");
    }

    #[test]
    fn truncated_dump_rejected() {
        let g = CharacteristicGrid::covering(2.0, 4, 1.0).unwrap();
        let dump = FieldDump::from_lattice(&CharacteristicField::zeros(g));
        let bytes = dump.to_bytes();
        assert!(FieldDump::from_bytes(&bytes[..bytes.len() - 8]).is_err());
        assert!(FieldDump::from_bytes(b"nope").is_err());
    }

    #[test]
    fn io_errors_carry_path() {
        let err = read_dump(Path::new("/nonexistent/field.bin")).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("/nonexistent/field.bin"));
    }

    #[test]
    fn csv_has_one_line_per_node() {
        let dump = FieldDump::from_levels(0.5, 1.0, 0.5, &[vec![0.0; 5], vec![1.0; 5]]).unwrap();
        let csv = dump.to_csv(0.5);
        assert_eq!(csv.lines().count(), 11);
        assert!(csv.starts_with("x,t,value\n-1,0,0\n"));
    }
}
