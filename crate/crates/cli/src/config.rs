//! `[section]` / `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use heatgauss::assembly::{FormMatrix, OperatorSpec};
use heatgauss::domain::{GammaSchedule, Grid1D};
use heatgauss::profiles;

use crate::error::{CliError, CliResult};

pub const MAX_N: usize = 800;
pub const MAX_M: usize = 3;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
    column: usize,
}

const KNOWN: &[(&str, &[&str])] = &[
    ("operator", &["m", "n", "length", "coefficients"]),
    ("schedule", &["gamma", "epsilon"]),
    ("sweep", &["t", "lambda", "c2", "samples", "x", "points", "sector_p", "alpha", "seed"]),
    ("output", &["dir"]),
];

/// Sections of raw entries with their source positions.
#[derive(Debug, Clone, Default)]
struct Raw {
    path: String,
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

impl Raw {
    fn error(&self, line: usize, column: usize, message: impl Into<String>) -> CliError {
        CliError::Parse { path: self.path.clone(), line, column, message: message.into() }
    }

    fn parse(path: &str, text: &str) -> CliResult<Self> {
        let mut raw = Raw { path: path.to_string(), ..Default::default() };
        let mut section: Option<String> = None;
        for (k, full) in text.lines().enumerate() {
            let line = k + 1;
            let content = full.split('#').next().unwrap_or("");
            let trimmed = content.trim();
            if trimmed.is_empty() {
                continue;
            }
            let indent = content.len() - content.trim_start().len();
            let col = content[..indent].chars().count() + 1;
            if let Some(rest) = trimmed.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| raw.error(line, col, "section header is missing its closing ']'"))?
                    .trim();
                if !KNOWN.iter().any(|(s, _)| *s == name) {
                    return Err(raw.error(line, col + 1, format!("unknown section [{name}]")));
                }
                if raw.sections.contains_key(name) {
                    return Err(raw.error(line, col + 1, format!("section [{name}] appears twice")));
                }
                raw.sections.insert(name.to_string(), BTreeMap::new());
                section = Some(name.to_string());
                continue;
            }
            let eq = trimmed.find('=').ok_or_else(|| raw.error(line, col, "expected `key = value`"))?;
            let key = trimmed[..eq].trim();
            let value = trimmed[eq + 1..].trim();
            let vcol = col + trimmed[..eq + 1].chars().count() + (trimmed[eq + 1..].len() - trimmed[eq + 1..].trim_start().len());
            let sec = section.clone().ok_or_else(|| raw.error(line, col, "key outside of any [section]"))?;
            if key.is_empty() {
                return Err(raw.error(line, col, "empty key"));
            }
            let allowed = KNOWN.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
            if !allowed.contains(&key) {
                return Err(raw.error(line, col, format!("unknown key `{key}` in [{sec}]")));
            }
            if value.is_empty() {
                return Err(raw.error(line, vcol, format!("`{key}` has no value")));
            }
            let map = raw.sections.get_mut(&sec).expect("section registered");
            if map.contains_key(key) {
                return Err(raw.error(line, col, format!("`{key}` is set twice in [{sec}]")));
            }
            map.insert(key.to_string(), Entry { value: value.to_string(), line, column: vcol });
        }
        Ok(raw)
    }

    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section).and_then(|s| s.get(key))
    }

    fn scalar<T: std::str::FromStr>(&self, section: &str, key: &str) -> CliResult<Option<T>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|_| self.error(e.line, e.column, format!("cannot parse `{}` as a value for `{key}`", e.value))),
        }
    }

    fn list(&self, section: &str, key: &str) -> CliResult<Option<Vec<f64>>> {
        let Some(e) = self.get(section, key) else { return Ok(None) };
        let mut out = Vec::new();
        let mut offset = 0;
        for item in e.value.split(',') {
            let lead = item.len() - item.trim_start().len();
            let t = item.trim();
            let v: f64 = t.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                self.error(e.line, e.column + offset + lead, format!("cannot parse `{t}` as a number in `{key}`"))
            })?;
            out.push(v);
            offset += item.chars().count() + 1;
        }
        Ok(Some(out))
    }
}

/// Where the coefficients of the form come from.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientSource {
    Polyharmonic,
    Csv(PathBuf),
    Profile(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorConfig {
    pub m: usize,
    pub n: usize,
    pub length: f64,
    pub source: CoefficientSource,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleConfig {
    Gamma(Vec<f64>),
    Epsilon(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Explicit sample times; derived from the mesh when absent.
    pub times: Option<Vec<f64>>,
    pub lambdas: Vec<f64>,
    pub c2: Option<Vec<f64>>,
    pub samples: usize,
    /// Positions as fractions of the interval length.
    pub positions: Vec<f64>,
    pub points: usize,
    pub sector_p: Vec<f64>,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub operator: OperatorConfig,
    pub schedule: ScheduleConfig,
    pub sweep: SweepConfig,
    pub seed: u64,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&path.display().to_string(), &text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Parses and validates; relative CSV paths resolve against `base`.
    pub fn parse(name: &str, text: &str, base: &Path) -> CliResult<Self> {
        let raw = Raw::parse(name, text)?;
        let m_entry = raw.get("operator", "m").ok_or_else(|| CliError::Parse {
            path: name.to_string(),
            line: 1,
            column: 1,
            message: "[operator] must set `m`".into(),
        })?;
        let m: usize = raw.scalar("operator", "m")?.expect("present");
        if m == 0 || m > MAX_M {
            return Err(raw.error(m_entry.line, m_entry.column, format!("m must lie in 1..={MAX_M}, got {m}")));
        }
        let source = match raw.get("operator", "coefficients").map(|e| e.value.as_str()) {
            None | Some("polyharmonic") => CoefficientSource::Polyharmonic,
            Some(v) if v.starts_with("csv:") => {
                let p = PathBuf::from(&v[4..]);
                CoefficientSource::Csv(if p.is_relative() { base.join(p) } else { p })
            }
            Some(v) => {
                let e = raw.get("operator", "coefficients").expect("present");
                let prof = profiles::builtin(v).map_err(|err| raw.error(e.line, e.column, err.to_string()))?;
                if prof.m() != m {
                    return Err(raw.error(
                        m_entry.line,
                        m_entry.column,
                        format!("profile {v} has m={}, config sets m={m}", prof.m()),
                    ));
                }
                CoefficientSource::Profile(v.to_string())
            }
        };
        let profile_length = match &source {
            CoefficientSource::Profile(p) => Some(profiles::builtin(p)?.length),
            _ => None,
        };
        let length = match (raw.scalar::<f64>("operator", "length")?, profile_length) {
            (Some(l), Some(pl)) if (l - pl).abs() > 1e-12 * pl => {
                let e = raw.get("operator", "length").expect("present");
                return Err(raw.error(e.line, e.column, format!("profile length is {pl}, config sets {l}")));
            }
            (Some(l), _) => l,
            (None, Some(pl)) => pl,
            (None, None) => 1.0,
        };
        if !(length > 0.0) {
            return Err(CliError::Config(format!("length must be positive, got {length}")));
        }
        let n: usize = raw.scalar("operator", "n")?.unwrap_or(200);
        if !(8..=MAX_N).contains(&n) {
            let e = raw.get("operator", "n");
            let (l, c) = e.map_or((1, 1), |e| (e.line, e.column));
            return Err(raw.error(l, c, format!("n must lie in 8..={MAX_N}, got {n}")));
        }
        let schedule = match (raw.list("schedule", "gamma")?, raw.list("schedule", "epsilon")?) {
            (Some(_), Some(_)) => {
                let e = raw.get("schedule", "epsilon").expect("present");
                return Err(raw.error(e.line, e.column, "set either `gamma` or `epsilon`, not both"));
            }
            (Some(g), None) => ScheduleConfig::Gamma(g),
            (None, Some(e)) => ScheduleConfig::Epsilon(e),
            (None, None) => ScheduleConfig::Gamma(vec![0.0]),
        };
        let sweep = SweepConfig {
            times: raw.list("sweep", "t")?,
            lambdas: raw.list("sweep", "lambda")?.unwrap_or_else(|| vec![0.0, 0.5, 1.0, 2.0]),
            c2: raw.list("sweep", "c2")?,
            samples: raw.scalar("sweep", "samples")?.unwrap_or(1000),
            positions: raw.list("sweep", "x")?.unwrap_or_else(|| vec![0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95]),
            points: raw.scalar("sweep", "points")?.unwrap_or(100_000),
            sector_p: raw.list("sweep", "sector_p")?.unwrap_or_else(|| vec![0.25, 0.5, 0.75]),
            alpha: raw.scalar("sweep", "alpha")?.unwrap_or(0.5),
        };
        let seed = raw.scalar("sweep", "seed")?.unwrap_or(DEFAULT_SEED);
        let out = raw.get("output", "dir").map_or_else(|| PathBuf::from("out"), |e| PathBuf::from(&e.value));
        let cfg = Self { operator: OperatorConfig { m, n, length, source }, schedule, sweep, seed, out };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> CliResult<()> {
        let s = &self.sweep;
        if let Some(t) = &s.times {
            if t.iter().any(|&t| !(t > 0.0)) {
                return Err(CliError::Config("sample times must be positive".into()));
            }
        }
        if let Some(c) = &s.c2 {
            if c.iter().any(|&c| !(c > 0.0)) {
                return Err(CliError::Config("c2 candidates must be positive".into()));
            }
        }
        if s.positions.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
            return Err(CliError::Config("positions `x` are fractions of the length and must lie in (0, 1)".into()));
        }
        if s.sector_p.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(CliError::Config("sector parameters must lie in (0, 1)".into()));
        }
        if s.lambdas.iter().any(|&l| l < 0.0) {
            return Err(CliError::Config("twist strengths must be non-negative".into()));
        }
        if !(s.alpha > 0.0 && s.alpha < 1.0) {
            return Err(CliError::Config(format!("alpha must lie in (0, 1), got {}", s.alpha)));
        }
        if s.samples < 2 || s.points < 100 {
            return Err(CliError::Config("need samples ≥ 2 and points ≥ 100".into()));
        }
        if let CoefficientSource::Csv(p) = &self.operator.source {
            if !p.is_file() {
                return Err(CliError::Config(format!("coefficient file {} does not exist", p.display())));
            }
        }
        self.schedules()?;
        Ok(())
    }

    pub fn schedules(&self) -> CliResult<Vec<GammaSchedule>> {
        let m = self.operator.m;
        let res: heatgauss::Result<Vec<GammaSchedule>> = match &self.schedule {
            ScheduleConfig::Gamma(g) => g.iter().map(|&g| GammaSchedule::from_gamma(m, 1, g)).collect(),
            ScheduleConfig::Epsilon(e) => e.iter().map(|&e| GammaSchedule::from_epsilon(m, 1, e)).collect(),
        };
        res.map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn spec(&self) -> CliResult<OperatorSpec> {
        Ok(match &self.operator.source {
            CoefficientSource::Polyharmonic => OperatorSpec::polyharmonic(self.operator.m)?,
            CoefficientSource::Csv(p) => OperatorSpec::from_csv(self.operator.m, p)?,
            CoefficientSource::Profile(name) => profiles::builtin(name)?.spec,
        })
    }

    pub fn grid(&self, n: usize) -> CliResult<Grid1D> {
        Ok(Grid1D::new(self.operator.length, n)?)
    }

    pub fn form(&self, n: usize) -> CliResult<FormMatrix> {
        Ok(heatgauss::assembly::assemble_form(&self.spec()?, &self.grid(n)?)?)
    }

    /// Short description of the operator for report rows.
    pub fn label(&self) -> String {
        let src = match &self.operator.source {
            CoefficientSource::Polyharmonic => "polyharmonic".to_string(),
            CoefficientSource::Csv(p) => format!("csv:{}", p.display()),
            CoefficientSource::Profile(p) => p.clone(),
        };
        format!("{src} m={} L={} n={}", self.operator.m, self.operator.length, self.operator.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> CliResult<RunConfig> {
        RunConfig::parse("test.cfg", text, Path::new("."))
    }

    #[test]
    fn full_example() {
        let cfg = parse(
            "# comment\n[operator]\nm = 2\ncoefficients = beam-1  # trailing\nn = 100\n\n[schedule]\ngamma = 0, 0.75\n\n[sweep]\nlambda = 0.5, 1\nseed = 7\n[output]\ndir = res\n",
        )
        .unwrap();
        assert_eq!(cfg.operator.m, 2);
        assert_eq!(cfg.operator.length, 1.0);
        assert_eq!(cfg.schedule, ScheduleConfig::Gamma(vec![0.0, 0.75]));
        assert_eq!(cfg.sweep.lambdas, vec![0.5, 1.0]);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.out, PathBuf::from("res"));
        assert_eq!(cfg.schedules().unwrap().len(), 2);
    }

    #[test]
    fn defaults() {
        let cfg = parse("[operator]\nm = 1\n").unwrap();
        assert_eq!(cfg.seed, DEFAULT_SEED);
        assert_eq!(cfg.operator.n, 200);
        assert_eq!(cfg.operator.source, CoefficientSource::Polyharmonic);
    }

    fn position(e: CliError) -> (usize, usize) {
        match e {
            CliError::Parse { line, column, .. } => (line, column),
            other => panic!("expected a parse error, got {other}"),
        }
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(position(parse("[operator]\nn = 10\n").unwrap_err()), (1, 1));
        assert_eq!(position(parse("[operator]\nm = 1\nn = ten\n").unwrap_err()), (3, 5));
        assert_eq!(position(parse("[operator]\nm = 1\n  bogus = 1\n").unwrap_err()), (3, 3));
        assert_eq!(position(parse("[operator]\nm = 1\n[sweep]\nlambda = 1, x\n").unwrap_err()), (4, 13));
        assert_eq!(position(parse("m = 1\n").unwrap_err()), (1, 1));
        assert_eq!(position(parse("[operator\nm = 1\n").unwrap_err()), (1, 1));
        assert_eq!(position(parse("[operator]\nm = 4\n").unwrap_err()), (2, 5));
        assert_eq!(position(parse("[operator]\nm = 1\nn = 801\n").unwrap_err()), (3, 5));
        assert_eq!(position(parse("[operator]\nm = 1\ncoefficients = beam-1\n").unwrap_err()), (2, 5));
    }

    #[test]
    fn semantic_errors_exit_two() {
        let e = parse("[operator]\nm = 1\n[schedule]\ngamma = 0.6\n").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = parse("[operator]\nm = 1\ncoefficients = csv:missing.csv\n").unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
