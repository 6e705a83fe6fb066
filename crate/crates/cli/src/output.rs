use anyhow::{Context, Result};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::svg;

/// Everything one subcommand produces.
#[derive(Default)]
pub struct RunOutput {
    pub manifest: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub assertions: Vec<(String, bool, String)>,
    /// Named (x, y) series for the optional plot.
    pub series: Vec<(String, Vec<(f64, f64)>)>,
    pub plot_title: String,
    pub log_axes: (bool, bool),
}

impl RunOutput {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), ..Default::default() }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.manifest.push((key.to_string(), value.to_string()));
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn check(&mut self, name: &str, ok: bool, detail: impl ToString) {
        self.assertions.push((name.to_string(), ok, detail.to_string()));
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.1)
    }

    pub fn csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s += &r.join(",");
            s.push('\n');
        }
        s
    }

    pub fn manifest_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.manifest {
            let _ = writeln!(s, "{k}={v}");
        }
        for (name, ok, detail) in &self.assertions {
            let _ = writeln!(s, "assert.{name}={} ({detail})", if *ok { "pass" } else { "fail" });
        }
        s
    }

    pub fn write(&self, dir: &Path, plot: bool) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join("manifest"), self.manifest_text())?;
        fs::write(dir.join("results.csv"), self.csv())?;
        if plot && !self.series.is_empty() {
            let doc = svg::line_plot(&self.plot_title, &self.series, self.log_axes);
            fs::write(dir.join("plot.svg"), doc)?;
        }
        Ok(())
    }
}

pub fn num(x: f64) -> String {
    format!("{x:e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_manifest_layout() {
        let mut o = RunOutput::new(&["a", "b"]);
        o.row(vec!["1".into(), "2".into()]);
        o.meta("k", 3);
        o.check("c", false, "why");
        assert_eq!(o.csv(), "a,b\n1,2\n");
        assert_eq!(o.manifest_text(), "k=3\nassert.c=fail (why)\n");
        assert!(!o.passed());
    }
}
