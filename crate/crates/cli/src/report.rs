//! Report assembly: every run produces one `report.json` with the full
//! resolved config stamped in, plus one or more CSV tables. Files are
//! buffered in memory and only persisted once the whole run has
//! succeeded, so a failing run leaves nothing behind.

use std::io;
use std::path::Path;

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct ReportEnvelope {
    pub subcommand: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub metrics: serde_json::Value,
}

#[derive(Debug, Clone)]
pub struct Report {
    envelope: ReportEnvelope,
    tables: Vec<(String, String)>,
}

impl Report {
    pub fn new<P: Serialize, M: Serialize>(
        subcommand: &str,
        seed: u64,
        params: &P,
        metrics: &M,
    ) -> Result<Self, serde_json::Error> {
        Ok(Report {
            envelope: ReportEnvelope {
                subcommand: subcommand.to_string(),
                seed,
                config: serde_json::to_value(params)?,
                metrics: serde_json::to_value(metrics)?,
            },
            tables: Vec::new(),
        })
    }

    pub fn add_table(&mut self, filename: &str, csv: String) {
        self.tables.push((filename.to_string(), csv));
    }

    pub fn metrics(&self) -> &serde_json::Value {
        &self.envelope.metrics
    }

    pub fn file_count(&self) -> usize {
        self.tables.len() + 1
    }

    pub fn render_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.envelope).expect("report serializes");
        text.push('\n');
        text
    }

    pub fn write_to(&self, out_dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(out_dir)?;
        std::fs::write(out_dir.join("report.json"), self.render_json())?;
        for (name, contents) in &self.tables {
            std::fs::write(out_dir.join(name), contents)?;
        }
        Ok(())
    }
}
