//! Records CSV, fits JSON and a gnuplot script for the lifespan curves.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::harness::fit::{FitModel, ScalingFit};
use crate::harness::records::{records_to_csv, LifespanRecord};
use crate::io::{write_json, write_text};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputPaths {
    pub records_csv: PathBuf,
    pub fits_json: PathBuf,
    pub plot_data: PathBuf,
    pub plot_script: PathBuf,
}

impl OutputPaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            records_csv: dir.join("records.csv"),
            fits_json: dir.join("fits.json"),
            plot_data: dir.join("lifespan.dat"),
            plot_script: dir.join("lifespan.gp"),
        }
    }
}

/// `ln(1/eps)`, `ln T` for every record with a blow-up time, one block per solver and spacing.
pub fn plot_data(records: &[LifespanRecord]) -> String {
    let mut out = String::from("# ln(1/eps) ln(T) eps solver h\n");
    let mut last: Option<(&str, f64)> = None;
    for r in records {
        let Some(ln_t) = r.ln_t_blowup() else {
            continue;
        };
        let key = (r.solver.as_str(), r.h);
        if last.is_some_and(|l| l != key) {
            out.push_str("\n\n");
        }
        last = Some(key);
        let _ = writeln!(
            out,
            "{} {} {} {} {}",
            -r.eps.ln(),
            ln_t,
            r.eps,
            r.solver,
            r.h
        );
    }
    out
}

/// Gnuplot commands plotting the data file and, for power fits, the
/// predicted slope through the fitted intercept.
pub fn plot_script(data_file: &str, fits: &[ScalingFit]) -> String {
    let mut out = String::new();
    out.push_str("set xlabel 'ln(1/eps)'\nset ylabel 'ln T'\nset key left top\n");
    let mut plots = vec![format!(
        "'{data_file}' using 1:2 with linespoints title 'measured'"
    )];
    for (i, f) in fits.iter().enumerate() {
        if f.model != FitModel::Power {
            continue;
        }
        let _ = writeln!(out, "fit{i}(x) = {} + {} * x", f.intercept, f.exponent);
        plots.push(format!(
            "fit{i}(x) title 'fit p={} slope {:.4}'",
            f.p, f.exponent
        ));
        if let Some(t) = f.theoretical {
            let _ = writeln!(out, "pred{i}(x) = {} + {} * x", f.intercept, t);
            plots.push(format!(
                "pred{i}(x) dashtype 2 title 'predicted slope {t:.4}'"
            ));
        }
    }
    let _ = writeln!(out, "plot {}", plots.join(", \\\n     "));
    out
}

pub fn emit_outputs(
    records: &[LifespanRecord],
    fits: &[ScalingFit],
    paths: &OutputPaths,
) -> Result<()> {
    write_text(&paths.records_csv, &records_to_csv(records))?;
    write_json(&paths.fits_json, &fits)?;
    write_text(&paths.plot_data, &plot_data(records))?;
    let data_name = paths
        .plot_data
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    write_text(&paths.plot_script, &plot_script(&data_name, fits))
}
