//! Artifact formatting: JSON with embedded config, CSV, DOT and JSON lines.

use std::fmt;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use intervaldyn::lyapunov::ScanReport;

/// Invalid arguments detected after parsing; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Shipped schemas, by artifact kind.
pub const SCHEMAS: &[(&str, &str)] = &[
    ("tower", include_str!("../schemas/tower.schema.json")),
    ("conj-eval", include_str!("../schemas/conj-eval.schema.json")),
    ("conj-sign", include_str!("../schemas/conj-sign.schema.json")),
    ("conj-cycles", include_str!("../schemas/conj-cycles.schema.json")),
    ("design", include_str!("../schemas/design.schema.json")),
    ("induce", include_str!("../schemas/induce.schema.json")),
    ("induce-profile", include_str!("../schemas/induce-profile.schema.json")),
    ("kneading", include_str!("../schemas/kneading.schema.json")),
    ("scan-line", include_str!("../schemas/scan-line.schema.json")),
];

pub fn write_schemas(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, body) in SCHEMAS {
        let path = dir.join(format!("{name}.schema.json"));
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

/// 17 significant digits.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct Artifact(String);

impl Artifact {
    pub fn json<T: Serialize>(kind: &str, config: &Value, result: &T) -> Result<Self> {
        let v = json!({
            "$schema": format!("{kind}.schema.json"),
            "config": config,
            "result": result,
        });
        Ok(Artifact(serde_json::to_string_pretty(&v)? + "\n"))
    }

    /// RFC 4180 with a leading `# config` comment line.
    pub fn csv<I, R>(config: &Value, header: &[&str], rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let mut buf = format!("# config {}\r\n", serde_json::to_string(config)?).into_bytes();
        {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::CRLF)
                .from_writer(&mut buf);
            w.write_record(header)?;
            for row in rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
        Ok(Artifact(String::from_utf8(buf)?))
    }

    pub fn dot(config: &Value, body: &str) -> Self {
        Artifact(format!(
            "// config {}\n{body}",
            serde_json::to_string(config).unwrap_or_default()
        ))
    }

    /// One record per line, then a summary line; every line carries the config.
    pub fn scan_lines(config: &Value, report: &ScanReport) -> Result<Self> {
        let mut s = String::new();
        for r in &report.records {
            s += &serde_json::to_string(&json!({ "config": config, "record": r }))?;
            s.push('\n');
        }
        let summary = json!({
            "family": report.family,
            "scan": report.config,
            "records": report.records.len(),
            "violations": report.violations,
        });
        s += &serde_json::to_string(&json!({ "config": config, "summary": summary }))?;
        s.push('\n');
        Ok(Artifact(s))
    }

    pub fn write(&self, out: Option<&Path>) -> Result<()> {
        match out {
            Some(p) => std::fs::write(p, &self.0).with_context(|| format!("writing {}", p.display())),
            None => {
                let mut so = std::io::stdout().lock();
                so.write_all(self.0.as_bytes())?;
                Ok(so.flush()?)
            }
        }
    }
}
