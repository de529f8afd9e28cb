//! JSON study configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assembly::ProblemConfig;
use crate::error::{Error, Result};
use crate::geometry::GeometryFamily;
use crate::mesh::{Rect, TriMesh};
use crate::rom::{sample_parameters, ParameterBox, Sampling};

/// Background mesh source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSpec {
    Structured {
        rect: Rect,
        nx: usize,
        ny: usize,
    },
    /// Plain-text mesh file; relative paths resolve against the config file.
    File {
        path: PathBuf,
    },
}

impl MeshSpec {
    pub fn build(&self) -> Result<TriMesh> {
        match self {
            MeshSpec::Structured { rect, nx, ny } => TriMesh::generate_structured(*rect, *nx, *ny),
            MeshSpec::File { path } => TriMesh::load(path),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Equispaced,
    /// Seeded from the study seed.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSpec {
    pub count: usize,
    pub strategy: Strategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestSpec {
    pub count: usize,
    /// Defaults to the training box.
    pub parameter_box: Option<ParameterBox>,
    /// Evaluate at the training samples instead of fresh random ones.
    pub use_training: bool,
}

impl Default for TestSpec {
    fn default() -> Self {
        Self {
            count: 10,
            parameter_box: None,
            use_training: false,
        }
    }
}

/// Mode counts at schedule entry `j` are `velocity·j`, `pressure·j` and
/// `supremizer·j`, each capped by the available modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModeSpec {
    pub schedule: Vec<usize>,
    pub velocity: usize,
    pub pressure: usize,
    pub supremizer: usize,
}

impl Default for ModeSpec {
    fn default() -> Self {
        Self {
            schedule: vec![8, 16, 32, 48],
            velocity: 1,
            pressure: 6,
            supremizer: 4,
        }
    }
}

impl ModeSpec {
    pub fn counts(&self, j: usize) -> (usize, usize, usize) {
        (self.velocity * j, self.pressure * j, self.supremizer * j)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub name: String,
    pub mesh: MeshSpec,
    pub geometry: GeometryFamily,
    pub parameter_box: ParameterBox,
    #[serde(default)]
    pub physics: ProblemConfig,
    pub training: TrainingSpec,
    #[serde(default)]
    pub test: TestSpec,
    #[serde(default)]
    pub modes: ModeSpec,
    #[serde(default = "default_true")]
    pub supremizers: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_edge_quadrature")]
    pub edge_quadrature: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Test-sample indices written as VTK fields.
    #[serde(default)]
    pub vtk_samples: Vec<usize>,
    #[serde(default = "default_timing_repeats")]
    pub timing_repeats: usize,
}

fn default_true() -> bool {
    true
}

fn default_edge_quadrature() -> usize {
    2
}

fn default_timing_repeats() -> usize {
    3
}

/// The fields that determine offline artifacts.
#[derive(Serialize)]
struct OfflineKey<'a> {
    mesh: &'a MeshSpec,
    geometry: &'a GeometryFamily,
    parameter_box: &'a ParameterBox,
    physics: &'a ProblemConfig,
    training: &'a TrainingSpec,
    seed: Option<u64>,
    supremizers: bool,
    edge_quadrature: usize,
}

impl StudyConfig {
    /// Parses and validates a config file; relative paths inside it resolve
    /// against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: StudyConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let MeshSpec::File { path: p } = &mut cfg.mesh {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(out) = &mut cfg.output {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::invalid("study name must not be empty"));
        }
        match &self.mesh {
            MeshSpec::Structured { rect, nx, ny } => {
                if *nx == 0 || *ny == 0 || !(rect.width() > 0.0 && rect.height() > 0.0) {
                    return Err(Error::invalid(
                        "structured mesh needs positive counts and a non-degenerate rectangle",
                    ));
                }
            }
            MeshSpec::File { path } => {
                if !path.is_file() {
                    return Err(Error::invalid(format!(
                        "mesh file {} does not exist",
                        path.display()
                    )));
                }
            }
        }
        self.parameter_box.validate()?;
        if self.parameter_box.dim() != self.geometry.n_params() {
            return Err(Error::invalid(format!(
                "parameter box has {} dimensions but the geometry takes {} parameters",
                self.parameter_box.dim(),
                self.geometry.n_params()
            )));
        }
        if let Some(b) = &self.test.parameter_box {
            b.validate()?;
            if b.dim() != self.parameter_box.dim() {
                return Err(Error::invalid(
                    "test box dimension differs from the training box",
                ));
            }
        }
        self.physics.validate()?;
        if self.training.count == 0 {
            return Err(Error::invalid("training.count must be at least 1"));
        }
        if self.test.count == 0 && !self.test.use_training {
            return Err(Error::invalid("test.count must be at least 1"));
        }
        if self.modes.schedule.contains(&0) {
            return Err(Error::invalid("mode schedule entries must be positive"));
        }
        if self.modes.velocity == 0 || self.modes.pressure == 0 {
            return Err(Error::invalid(
                "velocity and pressure mode ratios must be positive",
            ));
        }
        if self.supremizers && self.modes.supremizer == 0 {
            return Err(Error::invalid(
                "supremizer ratio must be positive when supremizers are enabled",
            ));
        }
        if !(1..=3).contains(&self.edge_quadrature) {
            return Err(Error::invalid("edge_quadrature must be 1, 2 or 3"));
        }
        if self.timing_repeats == 0 {
            return Err(Error::invalid("timing_repeats must be at least 1"));
        }
        // sampling errors (e.g. a non-square equispaced count) surface at load time
        self.training_samples()?;
        Ok(())
    }

    pub fn training_samples(&self) -> Result<Vec<Vec<f64>>> {
        let strategy = match self.training.strategy {
            Strategy::Equispaced => Sampling::Equispaced,
            Strategy::Random => Sampling::Random { seed: self.seed },
        };
        sample_parameters(&self.parameter_box, self.training.count, strategy)
    }

    /// Random test samples drawn with a stream distinct from training.
    pub fn test_samples(&self, training: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        if self.test.use_training {
            return Ok(training.to_vec());
        }
        let space = self
            .test
            .parameter_box
            .as_ref()
            .unwrap_or(&self.parameter_box);
        sample_parameters(
            space,
            self.test.count,
            Sampling::Random {
                seed: self.seed.wrapping_add(1),
            },
        )
    }

    /// Hex SHA-256 of every field that influences offline artifacts.
    pub fn offline_hash(&self) -> String {
        let key = OfflineKey {
            mesh: &self.mesh,
            geometry: &self.geometry,
            parameter_box: &self.parameter_box,
            physics: &self.physics,
            training: &self.training,
            seed: (self.training.strategy == Strategy::Random).then_some(self.seed),
            supremizers: self.supremizers,
            edge_quadrature: self.edge_quadrature,
        };
        let json = serde_json::to_vec(&key).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}
