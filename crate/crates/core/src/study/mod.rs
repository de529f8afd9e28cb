//! End-to-end studies: offline snapshot and basis construction, online error
//! and timing sweeps, and the invariant report.

mod config;
mod io;
mod offline;
mod online;
mod validate;

pub use config::{MeshSpec, ModeSpec, Strategy, StudyConfig, TestSpec, TrainingSpec};
pub use io::{
    read_matrix, write_matrix, write_vtk, Manifest, OfflineTimings, Spectra, BASIS_P, BASIS_SUP,
    BASIS_U, CONTAINER_VERSION, MANIFEST, SNAPSHOTS_P, SNAPSHOTS_SUP, SNAPSHOTS_U, STALE,
};
pub use offline::{load_artifacts, run_offline, Bases, OfflineArtifacts};
pub use online::{run_online, ErrorRow, OnlineReport, SampleError, TimingRow, Variant};
pub use validate::{run_validate, Check, ValidationReport};

use crate::assembly::{assemble_stokes, solve_fom, BlockSystem, FieldSolution};
use crate::error::Result;
use crate::geometry::SurrogateDomain;
use crate::mesh::{MassMatrix, TriMesh};

/// A validated config with its background mesh and mass matrix.
#[derive(Debug, Clone)]
pub struct Study {
    pub config: StudyConfig,
    pub mesh: TriMesh,
    pub mass: MassMatrix,
}

impl Study {
    pub fn new(config: StudyConfig) -> Result<Self> {
        config.validate()?;
        let mesh = config.mesh.build()?;
        let mass = MassMatrix::assemble(&mesh);
        Ok(Self { config, mesh, mass })
    }

    pub fn surrogate(&self, mu: &[f64]) -> Result<SurrogateDomain> {
        let geom = self.config.geometry.instantiate(mu)?;
        SurrogateDomain::build(&self.mesh, &geom, self.config.edge_quadrature)
    }

    pub fn assemble(&self, mu: &[f64]) -> Result<(SurrogateDomain, BlockSystem)> {
        let surr = self.surrogate(mu)?;
        let sys = assemble_stokes(&self.mesh, &surr, &self.config.physics)?;
        Ok((surr, sys))
    }

    pub fn solve(&self, mu: &[f64]) -> Result<FieldSolution> {
        let (_, sys) = self.assemble(mu)?;
        solve_fom(&sys, mu)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = v
        .into_iter()
        .fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}
