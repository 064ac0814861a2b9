//! CSV tables and the JSON provenance sidecar.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), which
//! round-trips every `f64`. The sidecar holds the resolved spec and parses
//! back to the same spec.

use std::fs;
use std::io;
use std::path::Path;

use tailgate_core::ensemble::{Axis, SweepSeries, TaskTemplate};

use crate::config::{sidecar_for, ExperimentSpec};

/// Header of a sweep CSV.
pub const SERIES_HEADER: [&str; 11] = [
    "axis",
    "alpha",
    "inv_alpha",
    "k1",
    "k2",
    "max_final_error",
    "eta",
    "batch",
    "dim",
    "variant",
    "seed",
];

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write `rows` under `header` to `path`, creating parent directories.
pub fn write_csv<R, I>(path: &Path, header: &[&str], rows: R) -> io::Result<()>
where
    R: IntoIterator<Item = I>,
    I: IntoIterator<Item = String>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>())?;
    }
    w.flush()
}

/// Write the resolved spec next to `out` (see [`sidecar_for`]), with its
/// `out` field pointing at `out`.
pub fn write_sidecar(spec: &ExperimentSpec, out: &Path) -> io::Result<()> {
    let mut spec = spec.clone();
    spec.out = out.to_path_buf();
    let text = serde_json::to_string_pretty(&spec.to_json())?;
    fs::write(sidecar_for(out), text + "\n")
}

/// Sweep rows in axis order under [`SERIES_HEADER`], plus the sidecar.
pub fn emit_series(series: &SweepSeries, spec: &ExperimentSpec, path: &Path) -> io::Result<()> {
    if series.points.is_empty() {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "empty sweep series"));
    }
    let rows = series.points.iter().map(|p| {
        let est = &p.result.estimate;
        let axis_value = match series.axis {
            Axis::Eta => fmt_f64(p.value),
            Axis::Batch | Axis::Dimension => format!("{}", p.value as u64),
        };
        let dim = match &p.config.task {
            TaskTemplate::Realizable { dim } => *dim,
            TaskTemplate::Mixture(m) => m.input_dim(),
        };
        vec![
            axis_value,
            fmt_f64(est.alpha),
            fmt_f64(est.inv_alpha),
            est.k1.to_string(),
            est.k2.to_string(),
            fmt_f64(p.result.convergence),
            fmt_f64(p.config.train.eta),
            p.config.train.batch.to_string(),
            dim.to_string(),
            p.config.train.variant.as_str().to_string(),
            p.config.master_seed.to_string(),
        ]
    });
    write_csv(path, &SERIES_HEADER, rows)?;
    write_sidecar(spec, path)
}
