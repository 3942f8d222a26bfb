//! Pass/fail rows and deterministic CSV output.

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use heatgauss::fit::FitResult;
use heatgauss::inequalities::SweepReport;

use crate::error::CliResult;

/// Floats carry 17 significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub check: String,
    pub parameters: String,
    pub statistic: f64,
    pub pass: bool,
    pub witness: Option<String>,
}

impl ReportRow {
    /// Failing rows always get a witness; one naming the check and parameters is synthesized if missing.
    pub fn new(check: &str, parameters: impl Into<String>, statistic: f64, pass: bool, witness: Option<String>) -> Self {
        let parameters = parameters.into();
        let pass = pass && !statistic.is_nan();
        let witness = match witness {
            Some(w) => Some(w),
            None if !pass => Some(format!("{check} [{parameters}] statistic={}", float(statistic))),
            None => None,
        };
        Self { check: check.to_string(), parameters, statistic, pass, witness }
    }

    /// Row for an upper-bound check `statistic ≤ limit`.
    pub fn at_most(check: &str, parameters: impl Into<String>, statistic: f64, limit: f64, witness: Option<String>) -> Self {
        let p = parameters.into();
        let tagged = format!("{p} limit={limit:e}");
        Self::new(check, tagged, statistic, statistic <= limit, witness)
    }

    /// Fitted constant, its worst point, and the drift or violation witness when failing.
    pub fn from_fit(check: &str, parameters: impl Into<String>, name: &str, fit: &FitResult) -> Self {
        let stat = fit.constant(name).unwrap_or(f64::NAN);
        let witness =
            if fit.passed() { fit.worst.clone() } else { Some(fit.violation_witness.clone().unwrap_or_else(|| fit.to_string())) };
        let p = parameters.into();
        let p = match fit.drift {
            Some(d) => format!("{p} drift={d:.6e} budget={}", fit.drift_budget),
            None => p,
        };
        Self::new(
            check,
            format!("{p} training={} held_out={} violations={}", fit.training, fit.held_out, fit.violations),
            stat,
            fit.passed(),
            witness,
        )
    }

    pub fn from_sweep(parameters: impl Into<String>, sweep: &SweepReport) -> Self {
        let witness = if sweep.passed() {
            Some(format!("worst at {}", sweep.worst_at))
        } else {
            Some(sweep.counterexamples.first().cloned().unwrap_or_else(|| sweep.worst_at.clone()))
        };
        let p = format!("{} points={} violations={}", parameters.into(), sweep.points, sweep.violations);
        Self::new(&sweep.check, p, sweep.worst_margin, sweep.passed(), witness)
    }

    /// Row for a failure raised by the library; never passes.
    pub fn error(check: &str, parameters: impl Into<String>, err: &dyn fmt::Display) -> Self {
        Self::new(check, parameters, f64::NAN, false, Some(err.to_string()))
    }
}

impl fmt::Display for ReportRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} [{}] statistic={}",
            if self.pass { "PASS" } else { "FAIL" },
            self.check,
            self.parameters,
            float(self.statistic)
        )?;
        if let Some(w) = &self.witness {
            write!(f, " witness: {w}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn push(&mut self, row: ReportRow) {
        self.rows.push(row);
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    pub fn write_csv(&self, path: &Path) -> CliResult<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["check", "parameters", "statistic", "pass", "witness"])?;
        for r in &self.rows {
            w.write_record([
                r.check.as_str(),
                r.parameters.as_str(),
                float(r.statistic).as_str(),
                if r.pass { "true" } else { "false" },
                r.witness.as_deref().unwrap_or(""),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Numeric table written as CSV with a header row.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, path: &Path) -> CliResult<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|&x| float(x)))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Artifacts collected during a run and written together at the end.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub tables: Vec<(String, Table)>,
    pub svgs: Vec<(String, String)>,
}

impl Artifacts {
    pub fn table(&mut self, name: &str, t: Table) {
        self.tables.push((name.to_string(), t));
    }

    pub fn svg(&mut self, name: &str, body: String) {
        self.svgs.push((name.to_string(), body));
    }

    pub fn write(&self, dir: &Path) -> CliResult<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for (name, t) in &self.tables {
            let p = dir.join(name);
            t.write_csv(&p)?;
            paths.push(p);
        }
        for (name, body) in &self.svgs {
            let p = dir.join(name);
            File::create(&p)?.write_all(body.as_bytes())?;
            paths.push(p);
        }
        Ok(paths)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(float(0.1), "1.0000000000000001e-1");
        assert_eq!(float(1.0), "1.0000000000000000e0");
        let x = 1.0 / 3.0;
        assert_eq!(float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn failing_rows_carry_witnesses() {
        let r = ReportRow::new("c", "a=1", 2.0, false, None);
        assert!(r.witness.as_deref().unwrap().contains("a=1"));
        let r = ReportRow::at_most("c", "", 2.0, 1.0, None);
        assert!(!r.pass && r.witness.is_some());
        assert!(!ReportRow::new("c", "", f64::NAN, true, None).pass);
        assert!(ReportRow::new("c", "", 1.0, true, None).witness.is_none());
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let mut rep = Report::default();
        rep.push(ReportRow::new("gap", "n=10", 1.5, true, None));
        let p = dir.path().join("r.csv");
        rep.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text, "check,parameters,statistic,pass,witness\ngap,n=10,1.5000000000000000e0,true,\n");
    }
}
