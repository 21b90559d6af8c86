//! Report CSV emission and the wide summary join.

use std::path::Path;

use crate::benchmarks::RegretReport;
use crate::error::{Error, Result};
use crate::traces::format_f64;

pub const REPORT_HEADER: [&str; 10] = [
    "t",
    "loss",
    "loss_static",
    "loss_dynamic",
    "regret_static",
    "regret_dynamic",
    "avg_regret_static",
    "avg_regret_dynamic",
    "h",
    "bound",
];

pub fn report_csv(report: &RegretReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Config(format!("serializing report: {e}"));
    w.write_record(REPORT_HEADER).map_err(err)?;
    for r in &report.rows {
        let cells = [
            r.loss,
            r.loss_static,
            r.loss_dynamic,
            r.regret_static,
            r.regret_dynamic,
            r.avg_regret_static,
            r.avg_regret_dynamic,
            r.h,
            r.bound,
        ];
        let mut row = vec![r.t.to_string()];
        row.extend(cells.iter().map(|v| format_f64(*v)));
        w.write_record(&row).map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::Config(format!("serializing report: {e}")))
}

/// Writes next to the target and renames into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// The average-regret columns of one report file.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageColumns {
    pub name: String,
    pub avg_static: Vec<String>,
    pub avg_dynamic: Vec<String>,
}

pub fn read_average_columns(path: &Path) -> Result<AverageColumns> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::TraceSource(format!("{}: {e}", path.display())))?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::TraceSource(format!("{}: {e}", path.display())))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::TraceSource(format!("{}: missing column {name}", path.display())))
    };
    let (is, id, it) = (col("avg_regret_static")?, col("avg_regret_dynamic")?, col("t")?);
    let mut out = AverageColumns {
        name: path.file_stem().map_or_else(|| "report".into(), |s| s.to_string_lossy().into_owned()),
        avg_static: Vec::new(),
        avg_dynamic: Vec::new(),
    };
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::TraceSource(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.get(it) != Some((i + 1).to_string().as_str()) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected t = {}", i + 1),
            });
        }
        for (idx, dst) in [(is, &mut out.avg_static), (id, &mut out.avg_dynamic)] {
            let cell = rec.get(idx).unwrap_or("");
            cell.parse::<f64>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("non-numeric value {cell:?}"),
            })?;
            dst.push(cell.to_string());
        }
    }
    Ok(out)
}

/// Joins average-regret columns of several reports on `t`.
pub fn summary_csv(columns: &[AverageColumns]) -> Result<Vec<u8>> {
    let Some(first) = columns.first() else {
        return Err(Error::Config("report needs at least one input file".into()));
    };
    let horizon = first.avg_static.len();
    if let Some(c) = columns.iter().find(|c| c.avg_static.len() != horizon) {
        return Err(Error::HorizonMismatch(format!(
            "{} has {} rows, {} has {horizon}",
            c.name,
            c.avg_static.len(),
            first.name
        )));
    }
    let mut header = vec!["t".to_string()];
    for (i, c) in columns.iter().enumerate() {
        // disambiguate equal file stems from different directories
        let name = if columns[..i].iter().any(|o| o.name == c.name) {
            format!("{}_{}", c.name, i + 1)
        } else {
            c.name.clone()
        };
        header.push(format!("{name}_avg_regret_static"));
        header.push(format!("{name}_avg_regret_dynamic"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Config(format!("serializing summary: {e}"));
    w.write_record(&header).map_err(err)?;
    for t in 0..horizon {
        let mut row = vec![(t + 1).to_string()];
        for c in columns {
            row.push(c.avg_static[t].clone());
            row.push(c.avg_dynamic[t].clone());
        }
        w.write_record(&row).map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::Config(format!("serializing summary: {e}")))
}
