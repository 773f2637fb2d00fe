//! Lifespan records and their CSV form.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "eps,p,solver,h,t_blowup,status,walltime";

/// `ln T` above which a blow-up time is written as `exp(ln T)`.
const LN_WRITE_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// Blow-up confirmed at `h/2` within the confirmation tolerance.
    Confirmed,
    /// Blow-up seen, but `h` and `h/2` disagree.
    Unconfirmed,
    /// ODE surrogate blow-up; needs no grid confirmation.
    Resolved,
    /// No blow-up detected, or the run failed.
    Unresolved,
}

impl RunStatus {
    /// Whether a record with this status may enter a fit.
    pub fn fit_eligible(&self) -> bool {
        matches!(self, RunStatus::Confirmed | RunStatus::Resolved)
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::Confirmed => "confirmed",
            RunStatus::Unconfirmed => "unconfirmed",
            RunStatus::Resolved => "resolved",
            RunStatus::Unresolved => "unresolved",
        })
    }
}

impl FromStr for RunStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "confirmed" => Ok(RunStatus::Confirmed),
            "unconfirmed" => Ok(RunStatus::Unconfirmed),
            "resolved" => Ok(RunStatus::Resolved),
            "unresolved" => Ok(RunStatus::Unresolved),
            _ => Err(Error::InvalidParameter(format!("unknown run status '{s}'"))),
        }
    }
}

/// A blow-up time, kept as `ln T` once `T` leaves the f64 range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupTime {
    Value(f64),
    Exp(f64),
}

impl BlowupTime {
    pub fn from_ln(ln_t: f64) -> Self {
        if ln_t > LN_WRITE_LIMIT {
            BlowupTime::Exp(ln_t)
        } else {
            BlowupTime::Value(ln_t.exp())
        }
    }

    pub fn ln(&self) -> f64 {
        match *self {
            BlowupTime::Value(t) => t.ln(),
            BlowupTime::Exp(l) => l,
        }
    }

    /// The time itself, infinite when only its log is representable.
    pub fn value(&self) -> f64 {
        match *self {
            BlowupTime::Value(t) => t,
            BlowupTime::Exp(l) => l.exp(),
        }
    }
}

impl fmt::Display for BlowupTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlowupTime::Value(t) => write!(f, "{t}"),
            BlowupTime::Exp(l) => write!(f, "exp({l})"),
        }
    }
}

impl FromStr for BlowupTime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|e| Error::InvalidParameter(format!("bad t_blowup '{s}': {e}")))
        };
        match s.strip_prefix("exp(").and_then(|r| r.strip_suffix(')')) {
            Some(inner) => Ok(BlowupTime::Exp(num(inner)?)),
            None => Ok(BlowupTime::Value(num(s)?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifespanRecord {
    pub eps: f64,
    pub p: f64,
    pub solver: String,
    /// Grid spacing, 0 for the ODE surrogate.
    pub h: f64,
    pub t_blowup: Option<BlowupTime>,
    pub status: RunStatus,
    pub walltime: f64,
}

impl LifespanRecord {
    pub fn unresolved(eps: f64, p: f64, solver: &str, h: f64, walltime: f64) -> Self {
        Self {
            eps,
            p,
            solver: solver.into(),
            h,
            t_blowup: None,
            status: RunStatus::Unresolved,
            walltime,
        }
    }

    pub fn ln_t_blowup(&self) -> Option<f64> {
        self.t_blowup.map(|t| t.ln())
    }

    pub fn to_csv_row(&self) -> String {
        let t = self.t_blowup.map(|t| t.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            self.eps, self.p, self.solver, self.h, t, self.status, self.walltime
        )
    }

    pub fn from_csv_row(line: &str) -> Result<Self> {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(Error::InvalidParameter(format!(
                "expected 7 columns, got {}",
                cols.len()
            )));
        }
        let num = |s: &str, what: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidParameter(format!("bad {what} '{s}': {e}")))
        };
        let t = cols[4].trim();
        let t_blowup = if t.is_empty() { None } else { Some(t.parse()?) };
        Ok(Self {
            eps: num(cols[0], "eps")?,
            p: num(cols[1], "p")?,
            solver: cols[2].trim().to_string(),
            h: num(cols[3], "h")?,
            t_blowup,
            status: cols[5].trim().parse()?,
            walltime: num(cols[6], "walltime")?,
        })
    }
}

pub fn records_to_csv(records: &[LifespanRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.to_csv_row());
        out.push('\n');
    }
    out
}

pub fn records_from_csv(text: &str) -> Result<Vec<LifespanRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => {
            return Err(Error::InvalidParameter(format!(
                "expected header '{CSV_HEADER}', got {:?}",
                other.unwrap_or("")
            )))
        }
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(LifespanRecord::from_csv_row)
        .collect()
}

pub fn write_records(path: &Path, records: &[LifespanRecord]) -> Result<()> {
    std::fs::write(path, records_to_csv(records)).map_err(|e| Error::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<LifespanRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    records_from_csv(&text).map_err(|e| Error::format(path, e.to_string()))
}
