//! Offline stage: snapshots, supremizers, POD bases and their persistence.

use std::path::Path;
use std::time::Instant;

use faer::Mat;

use super::io::*;
use super::Study;
use crate::error::{Error, Result};
use crate::rom::{collect_snapshots, pod, supremizer_snapshots, PodBasis, Snapshots};

#[derive(Debug, Clone)]
pub struct OfflineArtifacts {
    pub snapshots: Snapshots,
    pub supremizer_snapshots: Option<Mat<f64>>,
    pub velocity: PodBasis,
    pub pressure: PodBasis,
    pub supremizer: Option<PodBasis>,
    pub manifest: Manifest,
}

impl OfflineArtifacts {
    pub fn bases(&self) -> Bases {
        Bases {
            velocity: self.velocity.modes.clone(),
            pressure: self.pressure.modes.clone(),
            supremizer: self.supremizer.as_ref().map(|b| b.modes.clone()),
        }
    }
}

/// Stored POD modes, each group internally M-orthonormal.
#[derive(Debug, Clone)]
pub struct Bases {
    pub velocity: Mat<f64>,
    pub pressure: Mat<f64>,
    pub supremizer: Option<Mat<f64>>,
}

/// Runs every training solve on the current rayon pool and writes the
/// artifacts to `out`. A `STALE` marker guards the directory until the
/// manifest is written.
pub fn run_offline(study: &Study, out: &Path) -> Result<OfflineArtifacts> {
    std::fs::create_dir_all(out)?;
    let stale = out.join(STALE);
    std::fs::write(&stale, "offline stage in progress\n")?;
    match offline_inner(study, out) {
        Ok(a) => {
            std::fs::remove_file(&stale)?;
            Ok(a)
        }
        Err(e) => {
            // keep the marker; the message is diagnostic only
            let _ = std::fs::write(&stale, format!("offline stage failed: {e}\n"));
            Err(e)
        }
    }
}

fn offline_inner(study: &Study, out: &Path) -> Result<OfflineArtifacts> {
    let cfg = &study.config;
    let start = Instant::now();
    let samples = cfg.training_samples()?;
    let ns = samples.len();
    log::info!(
        "offline: {ns} full-order solves on {} nodes",
        study.mesh.n_nodes()
    );

    let t = Instant::now();
    let snapshots = collect_snapshots(&samples, |mu| study.solve(mu))?;
    let t_snap = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let sup = if cfg.supremizers {
        log::info!("offline: {ns} supremizer solves");
        Some(supremizer_snapshots(
            &snapshots.p,
            &samples,
            &study.mesh,
            &cfg.physics,
            |mu| study.surrogate(mu),
        )?)
    } else {
        None
    };
    let t_sup = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let velocity = pod(&snapshots.u, &study.mass, ns)?;
    let pressure = pod(&snapshots.p, &study.mass, ns)?;
    let supremizer = sup.as_ref().map(|s| pod(s, &study.mass, ns)).transpose()?;
    let t_pod = t.elapsed().as_secs_f64();

    write_matrix(&out.join(SNAPSHOTS_U), &snapshots.u)?;
    write_matrix(&out.join(SNAPSHOTS_P), &snapshots.p)?;
    write_matrix(&out.join(BASIS_U), &velocity.modes)?;
    write_matrix(&out.join(BASIS_P), &pressure.modes)?;
    if let (Some(s), Some(b)) = (&sup, &supremizer) {
        write_matrix(&out.join(SNAPSHOTS_SUP), s)?;
        write_matrix(&out.join(BASIS_SUP), &b.modes)?;
    } else {
        for f in [SNAPSHOTS_SUP, BASIS_SUP] {
            if out.join(f).exists() {
                std::fs::remove_file(out.join(f))?;
            }
        }
    }

    let manifest = Manifest {
        study: cfg.name.clone(),
        container_version: CONTAINER_VERSION,
        config_hash: cfg.offline_hash(),
        mesh_hash: study.mesh.content_hash(),
        n_nodes: study.mesh.n_nodes(),
        training_samples: samples,
        eigenvalues: Spectra {
            velocity: velocity.eigenvalues.clone(),
            pressure: pressure.eigenvalues.clone(),
            supremizer: supremizer.as_ref().map(|b| b.eigenvalues.clone()),
        },
        modes: [
            velocity.n_modes(),
            pressure.n_modes(),
            supremizer.as_ref().map_or(0, PodBasis::n_modes),
        ],
        timings: OfflineTimings {
            snapshots: t_snap,
            supremizers: t_sup,
            pod: t_pod,
            total: start.elapsed().as_secs_f64(),
        },
    };
    write_json(&out.join(MANIFEST), &manifest)?;
    Ok(OfflineArtifacts {
        snapshots,
        supremizer_snapshots: sup,
        velocity,
        pressure,
        supremizer,
        manifest,
    })
}

/// Loads bases written by [`run_offline`], refusing stale outputs and
/// artifacts built from a different mesh or config.
pub fn load_artifacts(study: &Study, dir: &Path) -> Result<(Manifest, Bases)> {
    if dir.join(STALE).exists() {
        return Err(Error::ArtifactMismatch(format!(
            "{} is marked stale; rerun the offline stage",
            dir.display()
        )));
    }
    let path = dir.join(MANIFEST);
    if !path.is_file() {
        return Err(Error::ArtifactMismatch(format!(
            "no manifest in {}; run the offline stage first",
            dir.display()
        )));
    }
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
    let mesh_hash = study.mesh.content_hash();
    if manifest.mesh_hash != mesh_hash {
        return Err(Error::ArtifactMismatch(format!(
            "artifacts were built on mesh {} but the config gives mesh {mesh_hash}",
            manifest.mesh_hash
        )));
    }
    let config_hash = study.config.offline_hash();
    if manifest.config_hash != config_hash {
        return Err(Error::ArtifactMismatch(format!(
            "artifacts were built with config {} but the config hashes to {config_hash}",
            manifest.config_hash
        )));
    }
    let nh = study.mesh.n_nodes();
    let load = |name: &str, rows: usize, cols: usize| -> Result<Mat<f64>> {
        let m = read_matrix(&dir.join(name))?;
        if m.nrows() != rows || m.ncols() != cols {
            return Err(Error::ArtifactMismatch(format!(
                "{name} is {}x{}, manifest expects {rows}x{cols}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(m)
    };
    let [nu, np, nsup] = manifest.modes;
    let bases = Bases {
        velocity: load(BASIS_U, 2 * nh, nu)?,
        pressure: load(BASIS_P, nh, np)?,
        supremizer: if study.config.supremizers {
            Some(load(BASIS_SUP, 2 * nh, nsup)?)
        } else {
            None
        },
    };
    Ok((manifest, bases))
}
