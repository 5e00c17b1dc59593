//! Suite implementations. Each suite returns its checks and writes its CSV
//! files into its own directory.

mod admissibility;
mod energy;
mod equivalence;
mod extend;
mod heat;
mod jacobian;
mod maximal;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use bmoext::manifold::{ManifoldModel, SampleGrid};
use bmoext::report::csv_writer;

use crate::config::RunConfig;
use crate::summary::Check;
use crate::{RunError, Suite};

pub(crate) struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    dir: PathBuf,
    pub checks: Vec<Check>,
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a RunConfig, dir: &Path) -> Result<Self, RunError> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { cfg, dir: dir.to_path_buf(), checks: Vec::new() })
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    /// Unwraps a library result, turning an error into a failed check.
    pub fn ok<T, E: std::fmt::Display>(&mut self, name: &str, statement: &str, r: Result<T, E>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(Check::failed(name, statement, e));
                None
            }
        }
    }

    pub fn csv<I, R>(&self, file: &str, header: &[&str], rows: I) -> Result<(), RunError>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator,
        R::Item: AsRef<[u8]>,
    {
        let mut out = csv_writer(BufWriter::new(File::create(self.dir.join(file))?));
        out.write_record(header).map_err(csv_io)?;
        for r in rows {
            out.write_record(r).map_err(csv_io)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn file(&self, name: &str) -> Result<BufWriter<File>, RunError> {
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }
}

fn csv_io(e: csv::Error) -> RunError {
    RunError::Io(e.into())
}

pub(crate) fn circle(cfg: &RunConfig) -> ManifoldModel {
    ManifoldModel::circle(cfg.circle.length).expect("validated length")
}

pub(crate) fn torus(cfg: &RunConfig) -> ManifoldModel {
    ManifoldModel::torus2(cfg.torus.lengths[0], cfg.torus.lengths[1]).expect("validated lengths")
}

pub(crate) fn circle_grid(cfg: &RunConfig, refine: usize) -> SampleGrid {
    SampleGrid::uniform(circle(cfg), cfg.circle.points * refine).expect("validated size")
}

pub(crate) fn torus_grid(cfg: &RunConfig, refine: usize) -> SampleGrid {
    SampleGrid::uniform(torus(cfg), cfg.torus.points * refine).expect("validated size")
}

pub(crate) fn geom(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Extension heights from the grid spacing to the configured top.
pub(crate) fn levels(cfg: &RunConfig, grid: &SampleGrid) -> Vec<f64> {
    let h = grid.spacing();
    geom(h, cfg.levels.top.max(2.0 * h), cfg.levels.count)
}

/// Removes the grid mean.
pub(crate) fn centred(grid: &SampleGrid, mut u: Vec<f64>) -> Vec<f64> {
    let m = grid.integrate(&u) / grid.integrate(&vec![1.0; u.len()]);
    u.iter_mut().for_each(|v| *v -= m);
    u
}

/// Relative spread `max/min` of positive values; 1 for fewer than two.
pub(crate) fn spread(values: &[f64]) -> f64 {
    let (lo, hi) = values.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    if values.len() < 2 {
        1.0
    } else if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

pub(crate) fn run_suite(suite: Suite, cfg: &RunConfig, dir: &Path) -> Result<Vec<Check>, RunError> {
    let mut ctx = Ctx::new(cfg, dir)?;
    match suite {
        Suite::HeatCheck => heat::run(&mut ctx)?,
        Suite::ExtendCheck => extend::run(&mut ctx)?,
        Suite::Admissibility => admissibility::run(&mut ctx)?,
        Suite::SquareEnergy => energy::run_square(&mut ctx)?,
        Suite::Pairing => energy::run_pairing(&mut ctx)?,
        Suite::Equivalence => equivalence::run(&mut ctx)?,
        Suite::Jacobian => jacobian::run(&mut ctx)?,
        Suite::Maximal => maximal::run(&mut ctx)?,
        Suite::All => unreachable!("expanded by the caller"),
    }
    Ok(ctx.checks)
}
