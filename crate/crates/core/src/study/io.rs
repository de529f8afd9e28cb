//! Binary matrix containers, the artifact manifest, CSV and VTK writers.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// 12 bytes of magic followed by a little-endian `u32` format version.
const MAGIC: &[u8; 12] = b"SBMROM-MATRX";
pub const CONTAINER_VERSION: u32 = 1;

/// Header, `nrows` and `ncols` as little-endian `u64`, then column-major
/// little-endian `f64` values.
pub fn write_matrix(path: &Path, m: &Mat<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&CONTAINER_VERSION.to_le_bytes())?;
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for j in 0..m.ncols() {
        for v in m.col_as_slice(j) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<Mat<f64>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; 32];
    r.read_exact(&mut header).map_err(|e| {
        Error::ArtifactMismatch(format!("{}: truncated header ({e})", path.display()))
    })?;
    if &header[..12] != MAGIC {
        return Err(Error::ArtifactMismatch(format!(
            "{}: not a matrix container",
            path.display()
        )));
    }
    let version = u32::from_le_bytes(header[12..16].try_into().unwrap());
    if version != CONTAINER_VERSION {
        return Err(Error::ArtifactMismatch(format!(
            "{}: container version {version}, expected {CONTAINER_VERSION}",
            path.display()
        )));
    }
    let nrows = u64::from_le_bytes(header[16..24].try_into().unwrap()) as usize;
    let ncols = u64::from_le_bytes(header[24..32].try_into().unwrap()) as usize;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if Some(bytes.len()) != nrows.checked_mul(ncols).and_then(|n| n.checked_mul(8)) {
        return Err(Error::ArtifactMismatch(format!(
            "{}: payload of {} bytes does not match {nrows}x{ncols}",
            path.display(),
            bytes.len()
        )));
    }
    let mut m = Mat::zeros(nrows, ncols);
    for (j, chunk) in bytes.chunks_exact(8 * nrows.max(1)).enumerate().take(ncols) {
        for (dst, b) in m.col_as_slice_mut(j).iter_mut().zip(chunk.chunks_exact(8)) {
            *dst = f64::from_le_bytes(b.try_into().unwrap());
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectra {
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
    pub supremizer: Option<Vec<f64>>,
}

/// Wall-clock seconds per offline stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OfflineTimings {
    pub snapshots: f64,
    pub supremizers: f64,
    pub pod: f64,
    pub total: f64,
}

/// JSON sidecar of the offline artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub study: String,
    pub container_version: u32,
    pub config_hash: String,
    pub mesh_hash: String,
    pub n_nodes: usize,
    pub training_samples: Vec<Vec<f64>>,
    pub eigenvalues: Spectra,
    /// Modes stored per basis.
    pub modes: [usize; 3],
    pub timings: OfflineTimings,
}

pub const MANIFEST: &str = "manifest.json";
/// Present while offline outputs are incomplete or after a failed run.
pub const STALE: &str = "STALE";
pub const SNAPSHOTS_U: &str = "snapshots_u.bin";
pub const SNAPSHOTS_P: &str = "snapshots_p.bin";
pub const SNAPSHOTS_SUP: &str = "snapshots_sup.bin";
pub const BASIS_U: &str = "basis_u.bin";
pub const BASIS_P: &str = "basis_p.bin";
pub const BASIS_SUP: &str = "basis_sup.bin";

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Writes a header line and rows; every row must have the header's width.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        debug_assert_eq!(r.len(), header.len());
        writeln!(w, "{}", r.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Legacy ASCII unstructured grid with point data `u` (vector, component-major
/// input) and `p` (scalar).
pub fn write_vtk(path: &Path, title: &str, mesh: &TriMesh, u: &[f64], p: &[f64]) -> Result<()> {
    let n = mesh.n_nodes();
    let nt = mesh.n_triangles();
    if u.len() != 2 * n || p.len() != n {
        return Err(Error::invalid("field length does not match the mesh"));
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {n} double")?;
    for q in mesh.nodes() {
        writeln!(w, "{:e} {:e} 0", q[0], q[1])?;
    }
    writeln!(w, "CELLS {nt} {}", 4 * nt)?;
    for t in mesh.triangles() {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(w, "5")?;
    }
    writeln!(w, "POINT_DATA {n}")?;
    writeln!(w, "VECTORS u double")?;
    for k in 0..n {
        writeln!(w, "{:e} {:e} 0", u[k], u[n + k])?;
    }
    writeln!(w, "SCALARS p double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in p {
        writeln!(w, "{v:e}")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Rect;

    #[test]
    fn matrix_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let m = Mat::from_fn(5, 3, |i, j| {
            (i as f64 + 0.1).powi(j as i32 + 1) * std::f64::consts::PI
        });
        write_matrix(&path, &m).unwrap();
        let back = read_matrix(&path).unwrap();
        assert_eq!((back.nrows(), back.ncols()), (5, 3));
        for j in 0..3 {
            for i in 0..5 {
                assert_eq!(back[(i, j)].to_bits(), m[(i, j)].to_bits());
            }
        }
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 32 + 8 * 15);
        assert_eq!(&bytes[..12], MAGIC);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 5);
        // column-major: second stored value is m[(1, 0)]
        assert_eq!(
            f64::from_le_bytes(bytes[40..48].try_into().unwrap()),
            m[(1, 0)]
        );
    }

    #[test]
    fn empty_matrix_roundtrips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.bin");
        write_matrix(&path, &Mat::zeros(0, 4)).unwrap();
        let back = read_matrix(&path).unwrap();
        assert_eq!((back.nrows(), back.ncols()), (0, 4));
    }

    #[test]
    fn corrupted_containers_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        write_matrix(&path, &Mat::from_fn(2, 2, |i, j| (i + j) as f64)).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.pop();
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            read_matrix(&path),
            Err(Error::ArtifactMismatch(_))
        ));
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            read_matrix(&path),
            Err(Error::ArtifactMismatch(_))
        ));
    }

    #[test]
    fn vtk_has_expected_sections() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.vtk");
        let mesh = TriMesh::generate_structured(Rect::new(0.0, 1.0, 0.0, 1.0), 2, 1).unwrap();
        let n = mesh.n_nodes();
        write_vtk(&path, "t", &mesh, &vec![1.0; 2 * n], &vec![0.5; n]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("DATASET UNSTRUCTURED_GRID"));
        assert!(text.contains(&format!("POINTS {n} double")));
        assert!(text.contains("CELLS 4 16"));
        assert!(text.contains("VECTORS u double"));
        assert!(text.contains("SCALARS p double 1"));
        assert!(write_vtk(&path, "t", &mesh, &[1.0], &[1.0]).is_err());
    }
}
