use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::KsReport;

pub const MARGINALS_HEADER: &str = "a,u,replicate,log_Y_scaled,Z_scaled";
pub const KS_HEADER: &str = "a,u,source,statistic,threshold,pass";
pub const LIL_HEADER: &str = "scale,statistic,running_max,target";
pub const REFERENCE_HEADER: &str = "u,x,cdf";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalRow {
    pub a: Option<f64>,
    pub u: Option<f64>,
    pub replicate: u32,
    #[serde(rename = "log_Y_scaled")]
    pub log_y_scaled: Option<f64>,
    #[serde(rename = "Z_scaled")]
    pub z_scaled: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsRow {
    pub a: Option<f64>,
    pub u: Option<f64>,
    pub source: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LilRow {
    pub scale: f64,
    pub statistic: f64,
    pub running_max: f64,
    pub target: f64,
}

/// Limit distribution function tabulated for the plotting layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub u: Option<f64>,
    pub x: f64,
    pub cdf: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub a: Option<f64>,
    pub u: Option<f64>,
    pub ks: BTreeMap<String, KsReport>,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: Option<String>,
    pub config_digest: String,
    pub cells: Vec<CellSummary>,
    pub checks: Vec<CheckOutcome>,
    pub pass: bool,
    pub runtime_seconds: f64,
}

/// Everything one experiment writes.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ReportBundle {
    pub experiment: Option<String>,
    pub config_digest: String,
    pub cells: Vec<CellSummary>,
    pub checks: Vec<CheckOutcome>,
    pub runtime_seconds: f64,
    pub marginals: Option<Vec<MarginalRow>>,
    pub ks: Option<Vec<KsRow>>,
    pub lil: Option<Vec<LilRow>>,
    pub reference: Option<Vec<ReferenceRow>>,
}

impl ReportBundle {
    pub fn empty() -> Self {
        Self::default()
    }

    /// True when every check and every recorded KS verdict passed.
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn summary(&self) -> Summary {
        Summary {
            experiment: self.experiment.clone(),
            config_digest: self.config_digest.clone(),
            cells: self.cells.clone(),
            checks: self.checks.clone(),
            pass: self.pass(),
            runtime_seconds: self.runtime_seconds,
        }
    }
}

fn write_csv<T: Serialize>(path: &Path, header: &str, rows: &[T]) -> Result<()> {
    let csv_err = |e: csv::Error| Error::io(path, std::io::Error::other(e.to_string()));
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(header.split(',')).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Write `summary.json` and the CSV tables present in the bundle.
pub fn emit_reports(bundle: &ReportBundle, output_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(output_dir).map_err(|e| Error::io(output_dir, e))?;
    let mut written = Vec::new();
    let summary_path = output_dir.join("summary.json");
    let mut json = serde_json::to_string_pretty(&bundle.summary()).expect("summary serializes");
    json.push('\n');
    std::fs::write(&summary_path, json).map_err(|e| Error::io(&summary_path, e))?;
    written.push(summary_path);

    let name = bundle.experiment.as_deref().unwrap_or("experiment");
    if let Some(rows) = &bundle.marginals {
        let p = output_dir.join(format!("marginals_{name}.csv"));
        write_csv(&p, MARGINALS_HEADER, rows)?;
        written.push(p);
    }
    if let Some(rows) = &bundle.ks {
        let p = output_dir.join(format!("ks_{name}.csv"));
        write_csv(&p, KS_HEADER, rows)?;
        written.push(p);
    }
    if let Some(rows) = &bundle.lil {
        let p = output_dir.join(format!("lil_{name}.csv"));
        write_csv(&p, LIL_HEADER, rows)?;
        written.push(p);
    }
    if let Some(rows) = &bundle.reference {
        let p = output_dir.join(format!("reference_{name}.csv"));
        write_csv(&p, REFERENCE_HEADER, rows)?;
        written.push(p);
    }
    Ok(written)
}
