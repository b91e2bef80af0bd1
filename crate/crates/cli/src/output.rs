//! CSV and JSON writers. Every CSV starts with `#` provenance lines (tool
//! version, command line, convergence notes and the resolved configuration)
//! so a file can be regenerated from itself.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct Provenance {
    pub command: String,
    pub notes: Vec<String>,
    pub config: Option<String>,
}

impl Provenance {
    pub fn new(command: impl Into<String>) -> Self {
        Self { command: command.into(), ..Self::default() }
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn with_config(mut self, toml: String) -> Self {
        self.config = Some(toml);
        self
    }

    pub fn header(&self) -> String {
        let mut out = format!("# qbounce {}\n# command: {}\n", env!("CARGO_PKG_VERSION"), self.command);
        for n in &self.notes {
            out.push_str(&format!("# {n}\n"));
        }
        if let Some(cfg) = &self.config {
            out.push_str("# config:\n");
            for line in cfg.lines() {
                out.push_str(&format!("#   {line}\n"));
            }
        }
        out
    }
}

/// Shortest form that round-trips: 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<I>(path: &Path, provenance: &Provenance, columns: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut file = BufWriter::new(File::create(path)?);
    file.write_all(provenance.header().as_bytes())?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(columns)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(file, value).map_err(|e| CliError::Io(e.into()))
}

/// Delay scan read back from a CSV with `tau` and `population` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    pub delays: Vec<f64>,
    pub populations: Vec<f64>,
}

pub fn read_scan(path: &Path) -> Result<ScanTable, CliError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_path(path)?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::config(format!("{}: missing '{name}' column", path.display())))
    };
    let (tau, pop) = (col("tau")?, col("population")?);
    let mut table = ScanTable { delays: Vec::new(), populations: Vec::new() };
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let field = |c: usize| -> Result<f64, CliError> {
            record
                .get(c)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CliError::config(format!("{}: bad number in data row {}", path.display(), line + 1)))
        };
        table.delays.push(field(tau)?);
        table.populations.push(field(pop)?);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scan_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scan.csv");
        let prov = Provenance::new("qbounce scan").note("hello").with_config("mode = \"scan\"\n".into());
        let delays = [2.0, 2.05, 0.1 + 0.2];
        let pops = [1.0, 0.3, 1.0 / 3.0];
        let rows = delays.iter().zip(&pops).map(|(t, p)| vec![num(*t), num(*p), "0".into()]);
        write_csv(&path, &prov, &["tau", "population", "flagged"], rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# qbounce "));
        assert!(text.contains("#   mode = \"scan\""));
        let back = read_scan(&path).unwrap();
        // bit-exact thanks to 17 significant digits
        assert_eq!(back.delays, delays);
        assert_eq!(back.populations, pops);
    }

    #[test]
    fn missing_column_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "t,value\n1,2\n").unwrap();
        assert_eq!(read_scan(&path).unwrap_err().exit_code(), 1);
    }
}
