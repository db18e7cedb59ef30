//! The experiment pipeline: limit profile → mesh → homology → geometry →
//! deflated multiplicity searches per (ε, h) → Morse-count comparison →
//! genericity summary.
//!
//! Each run writes into `output.dir/<config-hash prefix>/`: JSON for
//! structured reports, one CSV across all solution records, and a closing
//! `manifest.json`. Wall-clock numbers go to `timings.json` only, so
//! rerunning the same config reproduces every other artifact byte for
//! byte. Every artifact embeds the config hash and the crate version.
//!
//! Verdicts compare the number of distinct low-energy solutions against
//! `P₁(M)`. A run can at best be *consistent with* that prediction — a
//! finite sample of (ε, h) pairs cannot verify a statement about generic
//! parameters, and the wording keeps that distinction.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::functional::EnergySetting;
use crate::manifold::{
    flat_torus, icosphere, injectivity_estimate, projective_plane, sample_perturbation,
    MetricField, SurfaceMesh,
};
use crate::ansatz::reach_proxy;
use crate::profile::{shoot_ground_state, ProblemParams};
use crate::solver::{
    default_seed_family, distinct_threshold, multiplicity_run, NewtonOptions, SearchOptions,
    SolveReport,
};
use crate::topology::{betti, morse_relation_check, PoincarePolynomial};

use super::config::{ConfigError, MeshSource, RunConfig};

pub const PROFILE_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
#[error("stage `{stage}` failed: {message}")]
pub struct StageError {
    pub stage: &'static str,
    pub message: String,
}

impl From<ConfigError> for StageError {
    fn from(e: ConfigError) -> Self {
        StageError {
            stage: "config",
            message: e.to_string(),
        }
    }
}

fn stage<T, E: Display>(name: &'static str, r: Result<T, E>) -> Result<T, StageError> {
    r.map_err(|e| StageError {
        stage: name,
        message: e.to_string(),
    })
}

/// One (ε, h) slot of the solve stage. `h_seed = None` is the unperturbed
/// metric; otherwise the seed that drew the perturbation.
#[derive(Debug, Clone, Serialize)]
pub struct SolveSlot {
    pub eps: f64,
    pub h_seed: Option<u64>,
    pub rho: f64,
    pub report: SolveReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub eps: f64,
    pub h_seed: Option<u64>,
    pub distinct_count: usize,
    pub p1: usize,
    pub outside_regime: bool,
    /// Every record spectrally nondegenerate (and at least one record).
    pub all_nondegenerate: bool,
    /// Surplus check of the index counts over the Betti numbers; absent
    /// when the run is outside the regime or carries degenerate records.
    pub morse_relation: Option<bool>,
    pub statement: String,
}

#[derive(Debug, Serialize)]
pub struct HomologyReport {
    pub field_char: u64,
    pub betti: Vec<usize>,
    pub poincare_coeffs: Vec<usize>,
    pub p1: usize,
    pub euler: i64,
}

/// The measured constants the analysis leaves abstract: mesh scale, volume,
/// injectivity estimate, and the tube radius proxy.
#[derive(Debug, Serialize)]
pub struct GeometryReport {
    pub n_vertices: usize,
    pub n_edges: usize,
    pub n_faces: usize,
    pub euler_characteristic: i64,
    pub orientable: bool,
    pub volume: f64,
    pub mean_edge_length: f64,
    pub injectivity_at_base: f64,
    pub reach_proxy: f64,
}

#[derive(Debug, Serialize)]
pub struct GenericityRow {
    pub eps: f64,
    pub h_seed: Option<u64>,
    pub record_count: usize,
    pub min_margin_ratio: f64,
    pub all_nondegenerate: bool,
}

#[derive(Debug, Serialize)]
pub struct GenericityReport {
    pub rho: f64,
    pub rows: Vec<GenericityRow>,
    pub fraction_nondegenerate: f64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub version: String,
    pub config: RunConfig,
    pub mesh: String,
    /// Subdirectory of `output.dir` holding this run.
    pub dir: String,
    pub artifacts: Vec<String>,
    pub verdicts: Vec<Verdict>,
}

#[derive(Debug, Serialize)]
struct StageTiming {
    stage: String,
    seconds: f64,
}

/// Wrapper giving every artifact the config hash and crate version.
#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    config_hash: &'a str,
    version: &'a str,
    #[serde(flatten)]
    body: T,
}

pub fn config_hash(config: &RunConfig) -> String {
    let canonical = serde_json::to_string(config).expect("config serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn build_mesh(source: &MeshSource) -> Result<SurfaceMesh, StageError> {
    match source {
        MeshSource::Sphere { refine } => Ok(icosphere(*refine)),
        MeshSource::Torus { cells } => Ok(flat_torus(*cells)),
        MeshSource::ProjectivePlane { refine } => Ok(projective_plane(*refine)),
        MeshSource::File { path } => stage("mesh", SurfaceMesh::load(path)),
    }
}

fn mean_edge_length(mesh: &SurfaceMesh) -> f64 {
    let total: f64 = mesh
        .edges()
        .iter()
        .map(|&[a, b]| {
            mesh.vertex(a)
                .iter()
                .zip(mesh.vertex(b))
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        })
        .sum();
    total / mesh.n_edges().max(1) as f64
}

fn verdict_for(slot: &SolveSlot, poly: &PoincarePolynomial) -> Verdict {
    let report = &slot.report;
    let p1 = poly.p1();
    let h_label = match slot.h_seed {
        None => "h = 0".to_string(),
        Some(s) => format!("h sampled with seed {s}"),
    };
    let at = format!("(eps = {}, {})", slot.eps, h_label);
    let all_nondegenerate =
        !report.records.is_empty() && report.records.iter().all(|r| !r.degenerate);
    let mut morse_relation = None;
    let mut notes = String::new();
    if !report.outside_regime && all_nondegenerate {
        let indices: Vec<usize> = report.records.iter().map(|r| r.morse_index).collect();
        match morse_relation_check(&indices, poly) {
            Ok(check) => morse_relation = Some(check.pass),
            Err(e) => {
                morse_relation = Some(false);
                notes = format!("; index count invalid: {e}");
            }
        }
    }
    let statement = if report.outside_regime {
        format!(
            "outside the constant-exclusion regime at {at}: eps is not below 2^(1/n) times \
             the threshold, so the count prediction does not apply"
        )
    } else if report.distinct_count >= p1 {
        format!(
            "consistent with the multiplicity prediction at {at}: found {} distinct \
             low-energy solutions, predicted at least {p1}{notes}",
            report.distinct_count
        )
    } else {
        format!(
            "below the predicted count at {at}: found {} distinct low-energy solutions, \
             predicted at least {p1}{notes}",
            report.distinct_count
        )
    };
    Verdict {
        eps: slot.eps,
        h_seed: slot.h_seed,
        distinct_count: report.distinct_count,
        p1,
        outside_regime: report.outside_regime,
        all_nondegenerate,
        morse_relation,
        statement,
    }
}

fn records_csv(mesh: &SurfaceMesh, slots: &[SolveSlot], hash: &str, version: &str) -> String {
    let nd = mesh.ambient_dim();
    let mut out = String::new();
    out.push_str(&format!("# config_hash={hash} version={version}\n"));
    out.push_str("run,eps,h_seed,seed,energy,morse_index,min_abs_eig,tol_eig,degenerate,nehari_residual,grad_norm,newton_iters,min_value,strong_positive,peak_vertex,concentrated,in_tube");
    for k in 0..nd {
        out.push_str(&format!(",bary_{k}"));
    }
    out.push('\n');
    for (i, slot) in slots.iter().enumerate() {
        let h = slot.h_seed.map_or("0".to_string(), |s| s.to_string());
        for rec in &slot.report.records {
            out.push_str(&format!(
                "{i},{},{h},{},{:.12e},{},{:.6e},{:.6e},{},{:.6e},{:.6e},{},{:.6e},{},{},{},{}",
                slot.eps,
                rec.seed_center,
                rec.energy,
                rec.morse_index,
                rec.min_abs_eig,
                rec.tol_eig,
                rec.degenerate,
                rec.nehari_residual,
                rec.grad_norm,
                rec.newton_iters,
                rec.min_value,
                rec.strong_positive,
                rec.peak_vertex,
                rec.concentrated,
                rec.in_tube,
            ));
            for k in 0..nd {
                out.push_str(&format!(",{:.9e}", rec.barycenter.point[k]));
            }
            out.push('\n');
        }
    }
    out
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), StageError> {
    stage("artifacts", fs::write(dir.join(name), text))
}

fn write_json<T: Serialize>(
    dir: &Path,
    name: &str,
    hash: &str,
    version: &str,
    body: T,
) -> Result<(), StageError> {
    let wrapped = Artifact {
        config_hash: hash,
        version,
        body,
    };
    let text = stage("artifacts", serde_json::to_string_pretty(&wrapped))?;
    write_text(dir, name, &(text + "\n"))
}

/// Runs the full pipeline and writes artifacts under
/// `config.output_dir/<hash prefix>/`. Fails on the first stage error with
/// the stage name in the message.
pub fn run_experiment(config: &RunConfig) -> Result<RunManifest, StageError> {
    config.validate()?;
    let hash = config_hash(config);
    let version = env!("CARGO_PKG_VERSION").to_string();
    let dir_name = hash[..12].to_string();
    let dir: PathBuf = config.output_dir.join(&dir_name);
    stage("artifacts", fs::create_dir_all(&dir))?;
    let mut artifacts: Vec<String> = Vec::new();
    let mut timings: Vec<StageTiming> = Vec::new();
    let mut clock = std::time::Instant::now();
    let tick = |name: &str, timings: &mut Vec<StageTiming>, clock: &mut std::time::Instant| {
        timings.push(StageTiming {
            stage: name.to_string(),
            seconds: clock.elapsed().as_secs_f64(),
        });
        *clock = std::time::Instant::now();
    };

    if config.n != 2 {
        return Err(StageError {
            stage: "config",
            message: format!("surface experiments need problem.n = 2, got {}", config.n),
        });
    }
    let params = stage("profile", ProblemParams::new(config.n, config.p))?;
    let profile = stage("profile", shoot_ground_state(&params, PROFILE_TOL))?;
    let delta = config.delta_factor * profile.m_infty;
    write_json(
        &dir,
        "profile.json",
        &hash,
        &version,
        serde_json::json!({
            "n": params.n,
            "p": params.p,
            "u0": profile.u0,
            "m_infty": profile.m_infty,
            "l2sq": profile.l2sq,
            "gradsq": profile.gradsq,
            "lp": profile.lp,
            "nehari_residual": profile.nehari_residual(),
        }),
    )?;
    artifacts.push("profile.json".into());
    tick("profile", &mut timings, &mut clock);

    let mesh = build_mesh(&config.mesh)?;
    tick("mesh", &mut timings, &mut clock);

    let poly = stage("homology", betti(&mesh, config.homology_char))?;
    if poly.euler() != mesh.euler_characteristic() {
        return Err(StageError {
            stage: "homology",
            message: format!(
                "Betti alternating sum {} disagrees with V - E + F = {}",
                poly.euler(),
                mesh.euler_characteristic()
            ),
        });
    }
    write_json(
        &dir,
        "homology.json",
        &hash,
        &version,
        HomologyReport {
            field_char: poly.field_char,
            betti: poly.coeffs.clone(),
            poincare_coeffs: poly.coeffs.clone(),
            p1: poly.p1(),
            euler: poly.euler(),
        },
    )?;
    artifacts.push("homology.json".into());
    tick("homology", &mut timings, &mut clock);

    let base_metric = MetricField::induced(&mesh);
    let volume = stage(
        "geometry",
        EnergySetting::assemble(&mesh, &base_metric, config.eps_list[0], params)
            .map(|s| s.volume()),
    )?;
    write_json(
        &dir,
        "geometry.json",
        &hash,
        &version,
        GeometryReport {
            n_vertices: mesh.n_vertices(),
            n_edges: mesh.n_edges(),
            n_faces: mesh.n_faces(),
            euler_characteristic: mesh.euler_characteristic(),
            orientable: mesh.is_orientable(),
            volume,
            mean_edge_length: mean_edge_length(&mesh),
            injectivity_at_base: injectivity_estimate(&mesh, &base_metric, 0),
            reach_proxy: reach_proxy(&mesh),
        },
    )?;
    artifacts.push("geometry.json".into());
    tick("geometry", &mut timings, &mut clock);

    let p1 = poly.p1();
    // (ε, h) samples fan out in parallel; the indexed collect keeps the
    // artifact order (and therefore the bytes) independent of scheduling.
    let jobs: Vec<(f64, Option<u64>)> = config
        .eps_list
        .iter()
        .flat_map(|&eps| {
            std::iter::once((eps, None))
                .chain(config.h_seeds.iter().map(move |&s| (eps, Some(s))))
        })
        .collect();
    let slots: Vec<SolveSlot> = jobs
        .par_iter()
        .map(|&(eps, h_seed)| {
            let metric = match h_seed {
                None => base_metric.clone(),
                Some(s) => {
                    let h = stage("solve", sample_perturbation(&mesh, config.rho, s))?;
                    stage("solve", MetricField::perturbed(&mesh, &h))?
                }
            };
            let family = default_seed_family(&mesh, &metric, p1);
            let search = SearchOptions {
                radius_factor: config.radius_factor,
                newton: NewtonOptions {
                    max_iters: config.max_iters,
                    tol: config.newton_tol,
                    projection_iters: 3,
                    distinct_threshold: distinct_threshold(&profile, eps),
                    inner_rel: 1.0,
                    damping: 0.0,
                },
            };
            let report = stage(
                "solve",
                multiplicity_run(&mesh, &metric, &profile, eps, delta, &family, p1, &search),
            )?;
            Ok(SolveSlot {
                eps,
                h_seed,
                rho: if h_seed.is_some() { config.rho } else { 0.0 },
                report,
            })
        })
        .collect::<Result<_, StageError>>()?;
    for (i, slot) in slots.iter().enumerate() {
        let name = format!("solve_{i:03}.json");
        write_json(&dir, &name, &hash, &version, slot)?;
        artifacts.push(name);
    }
    write_text(
        &dir,
        "records.csv",
        &records_csv(&mesh, &slots, &hash, &version),
    )?;
    artifacts.push("records.csv".into());
    tick("solve", &mut timings, &mut clock);

    let verdicts: Vec<Verdict> = slots.iter().map(|s| verdict_for(s, &poly)).collect();
    tick("morse", &mut timings, &mut clock);

    if config.rho > 0.0 && !config.h_seeds.is_empty() {
        let rows: Vec<GenericityRow> = slots
            .iter()
            .map(|slot| {
                let min_margin_ratio = slot
                    .report
                    .records
                    .iter()
                    .map(|r| r.min_abs_eig / r.tol_eig)
                    .fold(f64::INFINITY, f64::min);
                GenericityRow {
                    eps: slot.eps,
                    h_seed: slot.h_seed,
                    record_count: slot.report.records.len(),
                    min_margin_ratio,
                    all_nondegenerate: !slot.report.records.is_empty()
                        && slot.report.records.iter().all(|r| !r.degenerate),
                }
            })
            .collect();
        let fraction = rows.iter().filter(|r| r.all_nondegenerate).count() as f64
            / rows.len().max(1) as f64;
        write_json(
            &dir,
            "genericity.json",
            &hash,
            &version,
            GenericityReport {
                rho: config.rho,
                rows,
                fraction_nondegenerate: fraction,
            },
        )?;
        artifacts.push("genericity.json".into());
    }
    tick("genericity", &mut timings, &mut clock);

    artifacts.sort();
    let manifest = RunManifest {
        config_hash: hash.clone(),
        version: version.clone(),
        config: config.clone(),
        mesh: config.mesh.to_string(),
        dir: dir_name,
        artifacts,
        verdicts,
    };
    let text = stage("artifacts", serde_json::to_string_pretty(&manifest))?;
    write_text(&dir, "manifest.json", &(text + "\n"))?;
    let timing_text = stage("artifacts", serde_json::to_string_pretty(&timings))?;
    write_text(&dir, "timings.json", &(timing_text + "\n"))?;
    Ok(manifest)
}
