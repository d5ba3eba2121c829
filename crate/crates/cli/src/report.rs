//! Assertion records and their on-disk form.
//!
//! `report.txt` starts with `#` header lines (experiment, seed, step), then
//! one record per line:
//! `experiment=<e> name=<n> value=<v> tolerance=<t> pass=<bool>`.
//! Floats use the shortest round-trip representation, so equal runs give
//! byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub experiment: String,
    pub seed: u64,
    pub step: f64,
    pub records: Vec<Record>,
    /// `(file stem, csv)` written to `curves/<stem>.csv`.
    pub curves: Vec<(String, String)>,
    /// Extra record files, e.g. focal point listings.
    pub attachments: Vec<(String, String)>,
}

impl Report {
    pub fn new(experiment: &str, seed: u64, step: f64) -> Self {
        Report {
            experiment: experiment.to_string(),
            seed,
            step,
            records: Vec::new(),
            curves: Vec::new(),
            attachments: Vec::new(),
        }
    }

    /// `value ≤ tolerance` (NaN fails).
    pub fn check(&mut self, name: impl Into<String>, value: f64, tolerance: f64) {
        self.records.push(Record {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        });
    }

    /// A yes/no condition, recorded as a mismatch count against tolerance 0.
    pub fn check_flag(&mut self, name: impl Into<String>, ok: bool) {
        self.check(name, if ok { 0.0 } else { 1.0 }, 0.0);
    }

    pub fn passed(&self) -> bool {
        !self.records.is_empty() && self.records.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(|r| !r.pass)
    }

    pub fn to_records(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# finslab report");
        let _ = writeln!(out, "# experiment={}", self.experiment);
        let _ = writeln!(out, "# seed={}", self.seed);
        let _ = writeln!(out, "# step={:?}", self.step);
        for r in &self.records {
            let _ = writeln!(
                out,
                "experiment={} name={} value={:?} tolerance={:?} pass={}",
                self.experiment, r.name, r.value, r.tolerance, r.pass
            );
        }
        out
    }

    /// Write `report.txt`, `curves/*.csv` and attachments under `dir`.
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.txt"), self.to_records())?;
        if !self.curves.is_empty() {
            let curves = dir.join("curves");
            fs::create_dir_all(&curves)?;
            for (stem, csv) in &self.curves {
                fs::write(curves.join(format!("{stem}.csv")), csv)?;
            }
        }
        for (name, text) in &self.attachments {
            fs::write(dir.join(name), text)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_line_key_order() {
        let mut r = Report::new("geodesic", 3, 1e-3);
        r.check("drift", 1.5e-12, 1e-8);
        r.check_flag("admissible", false);
        let text = r.to_records();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[2], "# seed=3");
        assert_eq!(lines[4], "experiment=geodesic name=drift value=1.5e-12 tolerance=1e-8 pass=true");
        assert_eq!(lines[5], "experiment=geodesic name=admissible value=1.0 tolerance=0.0 pass=false");
        assert!(!r.passed());
    }

    #[test]
    fn nan_fails() {
        let mut r = Report::new("x", 0, 1.0);
        r.check("bad", f64::NAN, 1.0);
        assert!(!r.passed());
    }
}
