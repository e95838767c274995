//! CSV tables, gnuplot scripts and the JSON run summary.

use crate::RunError;
use serde_json::{json, Map, Value};
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

/// Shortest round-trip scientific notation, stable across platforms.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: Vec<&'static str>) -> Self {
        Table { name: name.to_string(), header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Which columns a plot script draws (1-based, gnuplot style).
pub struct Plot {
    pub x: usize,
    pub ys: Vec<usize>,
    pub logx: bool,
    pub logy: bool,
}

fn io(path: &Path, e: impl std::fmt::Display) -> RunError {
    RunError::config(format!("cannot write {}: {e}", path.display()))
}

pub struct Output {
    pub dir: PathBuf,
    pub files: Vec<String>,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self, RunError> {
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        Ok(Output { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn table(&mut self, t: &Table, plot: Option<Plot>) -> Result<(), RunError> {
        let file = format!("{}.csv", t.name);
        let path = self.dir.join(&file);
        let mut w = csv::Writer::from_path(&path).map_err(|e| io(&path, e))?;
        w.write_record(&t.header).map_err(|e| io(&path, e))?;
        for r in &t.rows {
            w.write_record(r).map_err(|e| io(&path, e))?;
        }
        w.flush().map_err(|e| io(&path, e))?;
        self.files.push(file.clone());
        if let Some(p) = plot {
            let gp = format!("{}.gp", t.name);
            let script = gnuplot(&file, t, &p);
            let gpath = self.dir.join(&gp);
            std::fs::write(&gpath, script).map_err(|e| io(&gpath, e))?;
            self.files.push(gp);
        }
        Ok(())
    }

    pub fn summary(&self, mut body: Map<String, Value>) -> Result<(), RunError> {
        body.insert("outputs".into(), json!(self.files));
        let path = self.dir.join("summary.json");
        let mut text = serde_json::to_string_pretty(&Value::Object(body)).map_err(|e| io(&path, e))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| io(&path, e))
    }
}

fn gnuplot(file: &str, t: &Table, p: &Plot) -> String {
    let mut s = format!("# plots {file}; run with: gnuplot -p {}.gp\n", t.name);
    s.push_str("set datafile separator ','\nset key autotitle columnhead\n");
    if p.logx {
        s.push_str("set logscale x\n");
    }
    if p.logy {
        s.push_str("set logscale y\n");
    }
    s.push_str(&format!("set xlabel '{}'\n", t.header[p.x - 1]));
    let curves: Vec<String> = p.ys.iter().map(|y| format!("'{file}' using {}:{} with linespoints", p.x, y)).collect();
    s.push_str(&format!("plot {}\n", curves.join(", \\\n     ")));
    s
}

/// One pass/fail line in the summary.
pub fn check(name: &str, measured: f64, limit: f64, pass: bool) -> Value {
    json!({ "name": name, "measured": measured, "limit": limit, "pass": pass })
}
