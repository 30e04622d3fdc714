use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    config: &'a ExperimentConfig,
    versions: BTreeMap<&'static str, &'static str>,
    files: &'a BTreeMap<String, String>,
}

/// Output directory; records a sha256 for every file it writes.
pub struct OutDir {
    root: PathBuf,
    files: BTreeMap<String, String>,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), files: BTreeMap::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        std::fs::write(self.path(name), bytes)?;
        self.files.insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    /// Writes through a closure that fills a byte buffer, e.g. a core `write_csv`.
    pub fn write_with<F>(&mut self, name: &str, fill: F) -> CliResult<()>
    where
        F: FnOnce(&mut Vec<u8>) -> nevlab::Result<()>,
    {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        self.write(name, &buf)
    }

    /// `<stem>.dat` with tab-separated columns and a gnuplot `<stem>.plt`.
    pub fn plot(&mut self, stem: &str, plot: &Plot) -> CliResult<()> {
        self.write(&format!("{stem}.dat"), plot.data().as_bytes())?;
        self.write(&format!("{stem}.plt"), plot.script(stem).as_bytes())
    }

    pub fn finish(mut self, config: &ExperimentConfig) -> CliResult<PathBuf> {
        let files = std::mem::take(&mut self.files);
        let versions = BTreeMap::from([("nevlab-cli", env!("CARGO_PKG_VERSION")), ("nevlab-core", nevlab::VERSION)]);
        let m = Manifest { config, versions, files: &files };
        let mut s = serde_json::to_string_pretty(&m).map_err(|e| CliError::Io(e.to_string()))?;
        s.push('\n');
        let path = self.path("manifest.json");
        std::fs::write(&path, s)?;
        Ok(path)
    }
}

pub struct Series {
    pub title: String,
    /// 1-based data column plotted against column 1.
    pub column: usize,
    pub errorbars: Option<usize>,
}

/// Columnar plot data plus axis settings.
pub struct Plot {
    pub xlabel: String,
    pub ylabel: String,
    pub logx: bool,
    pub logy: bool,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub series: Vec<Series>,
}

impl Plot {
    pub fn new(xlabel: &str, ylabel: &str, columns: &[&str]) -> Self {
        Self {
            xlabel: xlabel.into(),
            ylabel: ylabel.into(),
            logx: false,
            logy: false,
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            series: Vec::new(),
        }
    }

    pub fn log_x(mut self) -> Self {
        self.logx = true;
        self
    }

    pub fn log_y(mut self) -> Self {
        self.logy = true;
        self
    }

    pub fn series(mut self, title: &str, column: usize) -> Self {
        self.series.push(Series { title: title.into(), column, errorbars: None });
        self
    }

    pub fn series_with_errors(mut self, title: &str, column: usize, err: usize) -> Self {
        self.series.push(Series { title: title.into(), column, errorbars: Some(err) });
        self
    }

    pub fn row(&mut self, r: Vec<f64>) {
        self.rows.push(r);
    }

    fn data(&self) -> String {
        let mut s = format!("# {}\n", self.columns.join("\t"));
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
            s.push_str(&cells.join("\t"));
            s.push('\n');
        }
        s
    }

    fn script(&self, stem: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "set terminal pngcairo size 900,600");
        let _ = writeln!(s, "set output '{stem}.png'");
        let _ = writeln!(s, "set datafile separator '\\t'");
        let _ = writeln!(s, "set xlabel '{}'", self.xlabel);
        let _ = writeln!(s, "set ylabel '{}'", self.ylabel);
        if self.logx {
            let _ = writeln!(s, "set logscale x");
        }
        if self.logy {
            let _ = writeln!(s, "set logscale y");
        }
        let _ = writeln!(s, "set key left top");
        let parts: Vec<String> = self
            .series
            .iter()
            .map(|p| match p.errorbars {
                Some(e) => format!("'{stem}.dat' using 1:{}:{} with yerrorbars title '{}'", p.column, e, p.title),
                None => format!("'{stem}.dat' using 1:{} with linespoints title '{}'", p.column, p.title),
            })
            .collect();
        let _ = writeln!(s, "plot {}", parts.join(", \\\n     "));
        s
    }
}

/// Shortest round-trip form; scientific outside [10⁻⁴, 10¹⁵).
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Fixed scientific form used in derived tables.
pub fn sci(v: f64) -> String {
    format!("{v:.12e}")
}

/// Comma-separated rows with LF endings.
pub fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}
