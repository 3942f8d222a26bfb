//! Subcommands: each fills a [`Report`] and collects its artifacts.

mod bounds;
mod inequalities;
mod kernel;
mod plots;
mod spectrum;
mod twist;

use heatgauss::assembly::FormMatrix;
use heatgauss::bounds::{log_grid, FLOOR_MARGIN};
use heatgauss::spectral::SpectralDecomposition;

use crate::config::{RunConfig, MAX_N};
use crate::error::{CliError, CliResult};
use crate::report::{Artifacts, Report};

pub use kernel::envelope_for;
pub use spectrum::{clamped_beam_root, reference_first_eigenvalue};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Spectrum,
    Kernel,
    VerifyBounds,
    VerifyTwist,
    VerifyInequalities,
    Report,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::Kernel => "kernel",
            Self::VerifyBounds => "verify-bounds",
            Self::VerifyTwist => "verify-twist",
            Self::VerifyInequalities => "verify-inequalities",
            Self::Report => "report",
        }
    }
}

/// Discretized operator with its eigendecomposition.
pub struct Problem {
    pub form: FormMatrix,
    pub decomp: SpectralDecomposition,
}

impl Problem {
    pub fn build(cfg: &RunConfig, n: usize) -> CliResult<Self> {
        let form = cfg.form(n)?;
        let decomp = SpectralDecomposition::from_form(&form)?;
        Ok(Self { form, decomp })
    }

    pub fn n(&self) -> usize {
        self.decomp.len()
    }

    pub fn gap(&self) -> CliResult<f64> {
        Ok(self.decomp.spectral_gap()?)
    }
}

/// The configured mesh and, with `--refine`, the doubled one.
pub struct Session {
    pub cfg: RunConfig,
    pub coarse: Problem,
    pub fine: Option<Problem>,
}

impl Session {
    pub fn new(cfg: RunConfig, refine: bool) -> CliResult<Self> {
        let n = cfg.operator.n;
        if refine && 2 * n > MAX_N {
            return Err(CliError::Config(format!("--refine doubles n={n} past the limit {MAX_N}")));
        }
        let coarse = Problem::build(&cfg, n)?;
        let fine = if refine { Some(Problem::build(&cfg, 2 * n)?) } else { None };
        Ok(Self { cfg, coarse, fine })
    }

    pub fn seed(&self) -> u64 {
        self.cfg.seed
    }

    /// Configured sample times above the mesh floor, or a log grid on [10·floor, 2/s].
    pub fn times(&self, count: usize) -> CliResult<Vec<f64>> {
        let floor = self.coarse.form.grid().time_floor(self.cfg.operator.m);
        match &self.cfg.sweep.times {
            Some(t) => {
                let kept: Vec<f64> = t.iter().copied().filter(|&t| t >= floor).collect();
                if kept.is_empty() {
                    return Err(CliError::Config(format!("every sample time lies below the mesh floor {floor:.3e}")));
                }
                Ok(kept)
            }
            None => Ok(log_grid(FLOOR_MARGIN * floor, 2.0 / self.coarse.gap()?, count)),
        }
    }

    /// Grid indices of the configured positions, deduplicated in order.
    pub fn positions(&self, p: &Problem) -> Vec<usize> {
        let g = p.form.grid();
        let mut idx: Vec<usize> = self.cfg.sweep.positions.iter().map(|f| g.nearest_index(f * g.length())).collect();
        idx.dedup();
        idx
    }

    pub fn label(&self) -> String {
        match &self.fine {
            Some(f) => format!("{} refined_n={}", self.cfg.label(), f.n()),
            None => self.cfg.label(),
        }
    }
}

pub fn execute(cmd: Subcommand, session: &Session) -> CliResult<(Report, Artifacts)> {
    let mut report = Report::default();
    let mut art = Artifacts::default();
    match cmd {
        Subcommand::Spectrum => spectrum::run(session, &mut report, &mut art)?,
        Subcommand::Kernel => kernel::run(session, &mut report, &mut art)?,
        Subcommand::VerifyBounds => bounds::run(session, &mut report, &mut art)?,
        Subcommand::VerifyTwist => twist::run(session, &mut report, &mut art)?,
        Subcommand::VerifyInequalities => inequalities::run(session, &mut report, &mut art)?,
        Subcommand::Report => plots::run(session, &mut report, &mut art)?,
    }
    Ok((report, art))
}
