//! Online stage: reduced solves over a test set with errors and timings.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::io::{write_csv, write_vtk};
use super::offline::Bases;
use super::{mean, median, Study};
use crate::assembly::{solve_fom, FieldSolution};
use crate::error::{Error, Result};
use crate::rom::{
    enrich, project, reconstruct, relative_error, solve_reduced, ReducedSolution, RomBasis,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Plain,
    Supremizer,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Plain => "plain",
            Variant::Supremizer => "supremizer",
        }
    }
}

/// Mean errors over the test set for one schedule entry and variant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRow {
    pub j: usize,
    pub variant: Variant,
    pub n_u: usize,
    pub n_p: usize,
    pub n_sup: usize,
    pub e_u: f64,
    pub e_p: f64,
    /// Test samples whose reduced system was singular (errors are NaN there).
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleError {
    pub j: usize,
    pub variant: Variant,
    pub sample: usize,
    pub e_u: f64,
    pub e_p: f64,
}

/// Mean over test samples of per-sample medians, in seconds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub j: usize,
    pub variant: Variant,
    /// Surrogate construction and full-order assembly, shared by both models.
    pub assembly: f64,
    pub fom_solve: f64,
    pub projection: f64,
    pub rom_solve: f64,
    /// Expansion of the coefficients into nodal fields; not part of either total.
    pub reconstruction: f64,
}

impl TimingRow {
    pub fn fom_total(&self) -> f64 {
        self.assembly + self.fom_solve
    }

    pub fn rom_total(&self) -> f64 {
        self.assembly + self.projection + self.rom_solve
    }

    /// Full-order solve over reduced solve.
    pub fn solve_speedup(&self) -> f64 {
        self.fom_solve / self.rom_solve
    }

    /// Full-order assembly and solve over reduced assembly, projection and solve.
    pub fn online_speedup(&self) -> f64 {
        self.fom_total() / self.rom_total()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OnlineReport {
    pub test_samples: Vec<Vec<f64>>,
    pub errors: Vec<ErrorRow>,
    pub per_sample: Vec<SampleError>,
    pub timings: Vec<TimingRow>,
}

impl OnlineReport {
    pub fn error(&self, j: usize, variant: Variant) -> Option<&ErrorRow> {
        self.errors
            .iter()
            .find(|r| r.j == j && r.variant == variant)
    }
}

pub const ERRORS_CSV: &str = "errors.csv";
pub const TABLE_CSV: &str = "error_table.csv";
pub const SAMPLES_CSV: &str = "sample_errors.csv";
pub const TIMINGS_CSV: &str = "timings.csv";

struct Case {
    j: usize,
    variant: Variant,
    basis: RomBasis,
}

fn cases(study: &Study, bases: &Bases) -> Result<Vec<Case>> {
    let modes = &study.config.modes;
    let mut out = Vec::new();
    for &j in &modes.schedule {
        let (ru, rp, rs) = modes.counts(j);
        let n_u = ru.min(bases.velocity.ncols());
        let n_p = rp.min(bases.pressure.ncols());
        let l_u = bases.velocity.subcols(0, n_u).to_owned();
        let pressure = bases.pressure.subcols(0, n_p).to_owned();
        out.push(Case {
            j,
            variant: Variant::Plain,
            basis: RomBasis {
                velocity: l_u.clone(),
                pressure: pressure.clone(),
                n_u,
                n_sup: 0,
            },
        });
        if let Some(sup) = &bases.supremizer {
            let n_sup = rs.min(sup.ncols());
            out.push(Case {
                j,
                variant: Variant::Supremizer,
                basis: RomBasis {
                    velocity: enrich(&l_u, Some(sup), n_sup)?,
                    pressure,
                    n_u,
                    n_sup,
                },
            });
        }
    }
    Ok(out)
}

fn fmt(v: f64) -> String {
    format!("{v:.10e}")
}

fn timed<T>(repeats: usize, mut f: impl FnMut() -> Result<T>) -> Result<(T, f64)> {
    let mut times = Vec::with_capacity(repeats);
    let mut last = None;
    for _ in 0..repeats {
        let t = Instant::now();
        last = Some(f()?);
        times.push(t.elapsed().as_secs_f64());
    }
    Ok((last.expect("at least one repeat"), median(times)))
}

/// Evaluates every schedule entry on the test set and writes the CSV tables
/// (and requested VTK fields) into `out`. Test samples run sequentially so
/// that timings are not distorted by concurrent work.
pub fn run_online(
    study: &Study,
    training: &[Vec<f64>],
    bases: &Bases,
    out: &Path,
) -> Result<OnlineReport> {
    let cfg = &study.config;
    std::fs::create_dir_all(out)?;
    let nh = study.mesh.n_nodes();
    if bases.velocity.nrows() != 2 * nh || bases.pressure.nrows() != nh {
        return Err(Error::ArtifactMismatch(
            "basis rows do not match the mesh".into(),
        ));
    }
    let test = cfg.test_samples(training)?;
    if let Some(&k) = cfg.vtk_samples.iter().find(|&&k| k >= test.len()) {
        return Err(Error::invalid(format!(
            "vtk sample {k} is outside the {} test samples",
            test.len()
        )));
    }
    let cases = cases(study, bases)?;
    let reps = cfg.timing_repeats;
    let mut per_sample = Vec::new();
    // per case: (assembly, fom solve, projection, rom solve, reconstruction) per sample
    let mut times: Vec<Vec<[f64; 5]>> = vec![Vec::new(); cases.len()];
    if !cases.is_empty() {
        for (k, mu) in test.iter().enumerate() {
            log::info!(
                "online: test sample {}/{} at mu = {mu:?}",
                k + 1,
                test.len()
            );
            let ((_, sys), t_asm) = timed(reps, || study.assemble(mu))?;
            let (fom, t_fom) = timed(reps, || solve_fom(&sys, mu)).map_err(|e| Error::Sample {
                index: k,
                mu: mu.clone(),
                source: Box::new(e),
            })?;
            let mut vtk_rom: Option<ReducedSolution> = None;
            for (c, case) in cases.iter().enumerate() {
                let (red, t_proj) = timed(reps, || project(&sys, &case.basis))?;
                let (e_u, e_p, t_rom, t_rec) = match timed(reps, || solve_reduced(&red)) {
                    Ok(((a, b), t)) => {
                        let (sol, t_rec) =
                            timed(1, || Ok(reconstruct(&case.basis, a.clone(), b.clone())))?;
                        let (e_u, e_p) = relative_error(&fom, &sol, &study.mass)?;
                        if cfg.vtk_samples.contains(&k) && c + 1 == cases.len() {
                            vtk_rom = Some(sol);
                        }
                        (e_u, e_p, t, t_rec)
                    }
                    Err(Error::Stability(msg)) => {
                        log::warn!(
                            "j = {} ({}), sample {k}: {msg}",
                            case.j,
                            case.variant.as_str()
                        );
                        (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
                    }
                    Err(e) => return Err(e),
                };
                per_sample.push(SampleError {
                    j: case.j,
                    variant: case.variant,
                    sample: k,
                    e_u,
                    e_p,
                });
                times[c].push([t_asm, t_fom, t_proj, t_rom, t_rec]);
            }
            if let Some(rom) = vtk_rom {
                write_fields(study, out, k, &fom, &rom)?;
            }
        }
    }

    let mut errors = Vec::new();
    let mut timings = Vec::new();
    for (c, case) in cases.iter().enumerate() {
        let rows: Vec<&SampleError> = per_sample
            .iter()
            .filter(|r| r.j == case.j && r.variant == case.variant)
            .collect();
        let failures = rows.iter().filter(|r| r.e_u.is_nan()).count();
        errors.push(ErrorRow {
            j: case.j,
            variant: case.variant,
            n_u: case.basis.n_u,
            n_p: case.basis.n_p(),
            n_sup: case.basis.n_sup,
            e_u: mean(rows.iter().map(|r| r.e_u)),
            e_p: mean(rows.iter().map(|r| r.e_p)),
            failures,
        });
        let col = |i: usize| mean(times[c].iter().map(|t| t[i]).filter(|v| !v.is_nan()));
        timings.push(TimingRow {
            j: case.j,
            variant: case.variant,
            assembly: col(0),
            fom_solve: col(1),
            projection: col(2),
            rom_solve: col(3),
            reconstruction: col(4),
        });
    }
    let report = OnlineReport {
        test_samples: test,
        errors,
        per_sample,
        timings,
    };
    write_tables(&report, out)?;
    Ok(report)
}

fn write_fields(
    study: &Study,
    out: &Path,
    k: usize,
    fom: &FieldSolution,
    rom: &ReducedSolution,
) -> Result<()> {
    let mesh = &study.mesh;
    let mu = format!("{:?}", fom.mu);
    write_vtk(
        &out.join(format!("sample_{k}_full.vtk")),
        &format!("full-order mu = {mu}"),
        mesh,
        &fom.u,
        &fom.p,
    )?;
    write_vtk(
        &out.join(format!("sample_{k}_reduced.vtk")),
        &format!("reduced mu = {mu}"),
        mesh,
        &rom.u,
        &rom.p,
    )?;
    let du: Vec<f64> = fom
        .u
        .iter()
        .zip(&rom.u)
        .map(|(a, b)| (a - b).abs())
        .collect();
    let dp: Vec<f64> = fom
        .p
        .iter()
        .zip(&rom.p)
        .map(|(a, b)| (a - b).abs())
        .collect();
    write_vtk(
        &out.join(format!("sample_{k}_error.vtk")),
        &format!("absolute error mu = {mu}"),
        mesh,
        &du,
        &dp,
    )
}

fn write_tables(report: &OnlineReport, out: &Path) -> Result<()> {
    let rows: Vec<Vec<String>> = report
        .errors
        .iter()
        .map(|r| {
            vec![
                r.j.to_string(),
                r.variant.as_str().into(),
                r.n_u.to_string(),
                r.n_p.to_string(),
                r.n_sup.to_string(),
                fmt(r.e_u),
                fmt(r.e_p),
                r.failures.to_string(),
            ]
        })
        .collect();
    write_csv(
        &out.join(ERRORS_CSV),
        &[
            "j", "variant", "n_u", "n_p", "n_sup", "e_u", "e_p", "failures",
        ],
        &rows,
    )?;

    let mut js: Vec<usize> = report.errors.iter().map(|r| r.j).collect();
    js.dedup();
    let cell = |j: usize, v: Variant| {
        report
            .error(j, v)
            .map_or((String::new(), String::new()), |r| (fmt(r.e_u), fmt(r.e_p)))
    };
    let table: Vec<Vec<String>> = js
        .iter()
        .map(|&j| {
            let plain = report.error(j, Variant::Plain).expect("plain row exists");
            let n_sup = report.error(j, Variant::Supremizer).map_or(0, |r| r.n_sup);
            let (u0, p0) = cell(j, Variant::Plain);
            let (u1, p1) = cell(j, Variant::Supremizer);
            vec![
                j.to_string(),
                plain.n_u.to_string(),
                plain.n_p.to_string(),
                n_sup.to_string(),
                u0,
                p0,
                u1,
                p1,
            ]
        })
        .collect();
    write_csv(
        &out.join(TABLE_CSV),
        &[
            "j",
            "n_u",
            "n_p",
            "n_sup",
            "e_u",
            "e_p",
            "e_u_supremizer",
            "e_p_supremizer",
        ],
        &table,
    )?;

    let samples: Vec<Vec<String>> = report
        .per_sample
        .iter()
        .map(|r| {
            let mu = report.test_samples[r.sample]
                .iter()
                .map(|v| fmt(*v))
                .collect::<Vec<_>>()
                .join(" ");
            vec![
                r.j.to_string(),
                r.variant.as_str().into(),
                r.sample.to_string(),
                mu,
                fmt(r.e_u),
                fmt(r.e_p),
            ]
        })
        .collect();
    write_csv(
        &out.join(SAMPLES_CSV),
        &["j", "variant", "sample", "mu", "e_u", "e_p"],
        &samples,
    )?;

    let timing: Vec<Vec<String>> = report
        .timings
        .iter()
        .map(|t| {
            vec![
                t.j.to_string(),
                t.variant.as_str().into(),
                fmt(t.assembly),
                fmt(t.fom_solve),
                fmt(t.projection),
                fmt(t.rom_solve),
                fmt(t.reconstruction),
                fmt(t.fom_total()),
                fmt(t.rom_total()),
                fmt(t.solve_speedup()),
                fmt(t.online_speedup()),
            ]
        })
        .collect();
    write_csv(
        &out.join(TIMINGS_CSV),
        &[
            "j",
            "variant",
            "t_assembly",
            "t_fom_solve",
            "t_projection",
            "t_rom_solve",
            "t_reconstruction",
            "t_fom",
            "t_rom",
            "speedup_solve",
            "speedup_online",
        ],
        &timing,
    )
}
