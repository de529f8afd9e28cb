//! Invariant report over the geometry, assembly, POD and ROM layers.

use std::fmt;

use faer::Mat;

use super::Study;
use crate::assembly::{solve_fom, RESIDUAL_TOL};
use crate::error::Result;
use crate::geometry::{Geometry, SurrogateDomain};
use crate::linalg::{relative_residual, symmetric_part_indefinite_pivot};
use crate::rom::{
    apply_mass, collect_snapshots, pod, project, relative_error, sample_parameters, solve_rom,
    RomBasis, Sampling,
};

/// Random parameters checked for geometric invariants.
const GEOMETRY_SAMPLES: usize = 50;
/// Training parameters used for the POD and ROM checks.
const ROM_SAMPLES: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Measured value or failure reason.
    pub measured: String,
    pub tolerance: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "{tag} {}: {} (required {})",
            self.name, self.measured, self.tolerance
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: &str, passed: bool, measured: String, tolerance: &str) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            measured,
            tolerance: tolerance.into(),
        });
    }

    /// `value <= tol` with the value printed in scientific notation.
    fn bound(&mut self, name: &str, value: f64, tol: f64) {
        self.push(
            name,
            value <= tol,
            format!("{value:.3e}"),
            &format!("<= {tol:.0e}"),
        );
    }

    fn failed(&mut self, names: &[&str], reason: &str) {
        for n in names {
            self.push(n, false, reason.to_string(), "no error");
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "{} checks, {failed} failed", self.checks.len())
    }
}

/// Runs every invariant check; a failing stage marks its dependent checks as
/// failed instead of aborting the report.
pub fn run_validate(study: &Study) -> Result<ValidationReport> {
    let mut r = ValidationReport::default();
    mesh_checks(study, &mut r);
    geometry_checks(study, &mut r)?;
    assembly_checks(study, &mut r);
    rom_checks(study, &mut r)?;
    Ok(r)
}

fn mesh_checks(study: &Study, r: &mut ValidationReport) {
    let mesh = &study.mesh;
    let min_area = (0..mesh.n_triangles())
        .map(|e| mesh.element(e).area)
        .fold(f64::INFINITY, f64::min);
    r.push(
        "mesh: positive orientation",
        min_area > 0.0,
        format!("min area {min_area:.3e}"),
        "> 0",
    );
    let ones = vec![1.0; mesh.n_nodes()];
    let area = mesh.bbox().area();
    r.bound(
        "mesh: mass matrix total area",
        (study.mass.inner(&ones, &ones) - area).abs() / area,
        1e-12,
    );
}

fn geometry_checks(study: &Study, r: &mut ValidationReport) -> Result<()> {
    const NAMES: [&str; 3] = [
        "geometry: n.n~ >= 0",
        "geometry: d parallel to n",
        "geometry: projection on boundary",
    ];
    let cfg = &study.config;
    let samples = sample_parameters(
        &cfg.parameter_box,
        GEOMETRY_SAMPLES,
        Sampling::Random { seed: cfg.seed },
    )?;
    let (mut align, mut parallel, mut residual) = (f64::INFINITY, 0.0f64, 0.0f64);
    for mu in &samples {
        let built = cfg.geometry.instantiate(mu).and_then(|g| {
            let s = SurrogateDomain::build(&study.mesh, &g, cfg.edge_quadrature)?;
            Ok((g, s))
        });
        let (geom, surr) = match built {
            Ok(x) => x,
            Err(e) => {
                r.failed(&NAMES, &format!("mu = {mu:?}: {e}"));
                return Ok(());
            }
        };
        align = align.min(surr.min_normal_alignment());
        let (p, q) = projection_errors(&geom, &surr);
        parallel = parallel.max(p);
        residual = residual.max(q);
    }
    r.push(
        NAMES[0],
        align >= 0.0,
        format!("min {align:.3e} over {GEOMETRY_SAMPLES} samples"),
        ">= 0",
    );
    r.bound(NAMES[1], parallel, 1e-10);
    r.bound(NAMES[2], residual, 1e-10);
    Ok(())
}

/// `max |d − (d·n) n| / |d|` and `max |φ(x̃ + d)|` over the surrogate points.
fn projection_errors(geom: &Geometry, surr: &SurrogateDomain) -> (f64, f64) {
    let (mut par, mut res) = (0.0f64, 0.0f64);
    for q in surr.edges().iter().flat_map(|e| &e.points) {
        let pr = &q.projection;
        let d = pr.distance_vector;
        let dn = d[0] * pr.normal[0] + d[1] * pr.normal[1];
        let len = d[0].hypot(d[1]);
        if len > 0.0 {
            par = par.max((d[0] - dn * pr.normal[0]).hypot(d[1] - dn * pr.normal[1]) / len);
        }
        res = res.max(
            geom.signed_distance([q.point[0] + d[0], q.point[1] + d[1]])
                .abs(),
        );
    }
    (par, res)
}

fn center(study: &Study) -> Vec<f64> {
    let b = &study.config.parameter_box;
    b.lower
        .iter()
        .zip(&b.upper)
        .map(|(l, u)| 0.5 * (l + u))
        .collect()
}

fn assembly_checks(study: &Study, r: &mut ValidationReport) {
    const NAMES: [&str; 4] = [
        "assembly: C symmetric",
        "assembly: Nitsche coercivity (sym(A) positive definite)",
        "assembly: full-order residual",
        "assembly: ghost values zero",
    ];
    let mu = center(study);
    let (surr, sys) = match study.assemble(&mu) {
        Ok(x) => x,
        Err(e) => return r.failed(&NAMES, &format!("mu = {mu:?}: {e}")),
    };
    let scale = sys.c.max_abs().max(f64::MIN_POSITIVE);
    r.bound(
        NAMES[0],
        sys.c.max_abs_diff(&sys.c.transpose()) / scale,
        1e-12,
    );
    match symmetric_part_indefinite_pivot(&sys.a) {
        Ok(None) => r.push(
            NAMES[1],
            true,
            "Cholesky succeeded".into(),
            "all pivots > 0",
        ),
        Ok(Some(i)) => r.push(
            NAMES[1],
            false,
            format!("non-positive pivot at velocity DOF {i}"),
            "all pivots > 0",
        ),
        Err(e) => r.push(NAMES[1], false, e.to_string(), "all pivots > 0"),
    }
    match solve_fom(&sys, &mu) {
        Ok(sol) => {
            let m = sys.saddle_matrix();
            let mut x = sys.gather(&sol.u, 2);
            x.extend(sys.gather(&sol.p, 1));
            r.bound(
                NAMES[2],
                relative_residual(&m, &x, &sys.rhs()),
                RESIDUAL_TOL,
            );
            let nh = study.mesh.n_nodes();
            let ghost_max = surr
                .ghost_nodes()
                .iter()
                .map(|&g| sol.u[g].abs().max(sol.u[nh + g].abs()).max(sol.p[g].abs()))
                .fold(0.0, f64::max);
            r.push(
                NAMES[3],
                ghost_max == 0.0,
                format!("max |value| {ghost_max:e}"),
                "exactly 0",
            );
        }
        Err(e) => r.failed(&NAMES[2..], &format!("mu = {mu:?}: {e}")),
    }
}

fn rom_checks(study: &Study, r: &mut ValidationReport) -> Result<()> {
    const NAMES: [&str; 5] = [
        "pod: M-orthonormality",
        "pod: eigenvalues non-increasing",
        "pod: projection error equals eigenvalue tail",
        "rom: training velocity reproduced",
        "rom: training pressure reproduced",
    ];
    let cfg = &study.config;
    let n = cfg.training.count.min(ROM_SAMPLES);
    let samples = sample_parameters(&cfg.parameter_box, n, Sampling::Random { seed: cfg.seed })?;
    let snaps = match collect_snapshots(&samples, |mu| study.solve(mu)) {
        Ok(s) => s,
        Err(e) => {
            r.failed(&NAMES, &e.to_string());
            return Ok(());
        }
    };
    let (bu, bp) = match (pod(&snaps.u, &study.mass, n), pod(&snaps.p, &study.mass, n)) {
        (Ok(u), Ok(p)) => (u, p),
        (Err(e), _) | (_, Err(e)) => {
            r.failed(&NAMES, &e.to_string());
            return Ok(());
        }
    };
    r.bound(
        NAMES[0],
        bu.orthonormality_error(&study.mass)
            .max(bp.orthonormality_error(&study.mass)),
        1e-8,
    );
    let sorted = [&bu, &bp]
        .iter()
        .all(|b| b.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    r.push(
        NAMES[1],
        sorted,
        if sorted {
            "sorted".into()
        } else {
            "unsorted".into()
        },
        "descending",
    );
    let mut optimality = 0.0f64;
    for (s, b) in [(&snaps.u, &bu), (&snaps.p, &bp)] {
        let total: f64 = b.eigenvalues.iter().sum();
        for nr in 1..=b.n_modes() {
            let tail: f64 = b.eigenvalues[nr..].iter().sum();
            optimality = optimality
                .max((projection_energy(s, &b.truncated(nr), study) - tail).abs() / total);
        }
    }
    r.bound(NAMES[2], optimality, 1e-8);

    let basis = RomBasis {
        velocity: bu.modes.clone(),
        pressure: bp.modes.clone(),
        n_u: bu.n_modes(),
        n_sup: 0,
    };
    let (mut eu, mut ep) = (0.0f64, 0.0f64);
    for (k, mu) in samples.iter().enumerate() {
        let reproduced = study
            .assemble(mu)
            .and_then(|(_, sys)| project(&sys, &basis))
            .and_then(|red| solve_rom(&red, &basis))
            .and_then(|sol| {
                let full = crate::assembly::FieldSolution {
                    u: snaps.u.col_as_slice(k).to_vec(),
                    p: snaps.p.col_as_slice(k).to_vec(),
                    mu: mu.clone(),
                };
                relative_error(&full, &sol, &study.mass)
            });
        match reproduced {
            Ok((u, p)) => {
                eu = eu.max(u);
                ep = ep.max(p);
            }
            Err(e) => {
                r.failed(&NAMES[3..], &format!("mu = {mu:?}: {e}"));
                return Ok(());
            }
        }
    }
    r.bound(NAMES[3], eu, 1e-6);
    r.bound(NAMES[4], ep, 1e-5);
    Ok(())
}

/// `Σ_i ‖s_i − L Lᵀ M s_i‖²_M`.
fn projection_energy(s: &Mat<f64>, l: &Mat<f64>, study: &Study) -> f64 {
    let ms = apply_mass(s, &study.mass);
    let coef = l.transpose() * &ms;
    let resid = s - l * &coef;
    let mr = apply_mass(&resid, &study.mass);
    (0..s.ncols())
        .map(|j| {
            resid
                .col_as_slice(j)
                .iter()
                .zip(mr.col_as_slice(j))
                .map(|(a, b)| a * b)
                .sum::<f64>()
        })
        .sum()
}
