//! Scenario runner for `layerfem-core`: JSON configs, verification reports
//! and plot-ready tables.
//!
//! A run writes `report.json`, `solution.csv`, `elements.csv`, `traces.csv`
//! and, on request, `mesh.txt` into the output directory. The report is a
//! pure function of the config, so repeated runs give identical bytes.

pub mod config;
pub mod error;
pub mod formats;
pub mod oracle;
pub mod runner;

use std::path::Path;

pub use config::{parse_config, parse_config_str, ScenarioConfig, Verification};
pub use error::{CliError, Result};
pub use runner::{run, RunReport};

/// Writes the report and tables of a run into `dir`, creating it if needed.
pub fn write_outputs(report: &RunReport, dir: &Path, dump_mesh: bool) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let write = |name: &str, text: &str| {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| CliError::io(path, e))
    };
    write(
        "report.json",
        &(serde_json::to_string_pretty(&report.json)? + "\n"),
    )?;
    for (name, table) in [
        ("solution.csv", &report.solution_csv),
        ("elements.csv", &report.elements_csv),
        ("traces.csv", &report.traces_csv),
    ] {
        if let Some(t) = table {
            write(name, t)?;
        }
    }
    if dump_mesh {
        if let Some(m) = &report.mesh_text {
            write("mesh.txt", m)?;
        }
    }
    Ok(())
}
