//! `spikes` — command line front end for the spike solver.
//!
//! Subcommands map onto the pipeline stages: `profile` and `homology`
//! expose single stages, `ansatz` and `solve` run one configuration,
//! `sweep` runs the whole experiment grid from a config file, `verify`
//! runs the acceptance suite, and `mesh-gen` writes the built-in meshes
//! to OFF files. Structured output is JSON on stdout; artifacts go to
//! the directory named in the config, overridable with `SPIKES_OUTPUT_DIR`.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use spikes_core::ansatz::{barycenter, build_ansatz};
use spikes_core::functional::EnergySetting;
use spikes_core::harness::acceptance::run_all;
use spikes_core::harness::run::{build_mesh, config_hash, run_experiment};
use spikes_core::harness::{MeshSource, RunConfig};
use spikes_core::manifold::{injectivity_estimate, MetricField, SurfaceMesh};
use spikes_core::profile::{shoot_ground_state, ProblemParams};
use spikes_core::solver::{
    default_seed_family, multiplicity_run, SearchOptions,
};
use spikes_core::topology::betti;

const OUTPUT_ENV: &str = "SPIKES_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "spikes", version, about = "Spike solutions on closed surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Mesh selection shared by the subcommands that do not read a config file.
#[derive(Args)]
struct MeshArgs {
    /// Built-in mesh: sphere | torus | rp2
    #[arg(long, conflicts_with = "mesh_file")]
    shape: Option<String>,
    /// Refinement level for sphere / rp2
    #[arg(long, default_value_t = 4)]
    refine: u32,
    /// Grid cells per side for the torus
    #[arg(long, default_value_t = 48)]
    cells: usize,
    /// Load the mesh from an OFF file instead
    #[arg(long)]
    mesh_file: Option<PathBuf>,
}

impl MeshArgs {
    fn source(&self) -> Result<MeshSource> {
        if let Some(path) = &self.mesh_file {
            return Ok(MeshSource::File { path: path.clone() });
        }
        match self.shape.as_deref() {
            Some("sphere") => Ok(MeshSource::Sphere { refine: self.refine }),
            Some("torus") => Ok(MeshSource::Torus { cells: self.cells }),
            Some("rp2") => Ok(MeshSource::ProjectivePlane { refine: self.refine }),
            Some(other) => bail!("unknown shape `{other}` (expected sphere, torus, or rp2)"),
            None => bail!("either --shape or --mesh-file is required"),
        }
    }

    fn build(&self) -> Result<SurfaceMesh> {
        build_mesh(&self.source()?).map_err(|e| anyhow::anyhow!("{e}"))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute the radial limit profile by shooting
    Profile {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        p: f64,
        /// Shooting tolerance on the decay defect
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Also write the sampled curve (r, U(r)) as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Betti numbers of a mesh over a prime field
    Homology {
        #[command(flatten)]
        mesh: MeshArgs,
        /// Field characteristic (prime)
        #[arg(long, default_value_t = 2)]
        char: u64,
    },
    /// Build one spike ansatz and report its projection diagnostics
    Ansatz {
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long)]
        eps: f64,
        /// Center vertex (defaults to vertex 0)
        #[arg(long, default_value_t = 0)]
        center: usize,
        /// Cutoff radius as a fraction of the local injectivity estimate
        #[arg(long, default_value_t = 0.8)]
        radius_factor: f64,
    },
    /// One multiplicity run at a single (eps, h) from a config file
    Solve {
        /// Key=value config file
        #[arg(long)]
        config: PathBuf,
        /// Override: use this eps instead of the config's list
        #[arg(long)]
        eps: Option<f64>,
        /// Override: perturbation seed (omit for the unperturbed metric)
        #[arg(long)]
        h_seed: Option<u64>,
    },
    /// Full experiment grid from a config file; writes the artifact directory
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the acceptance suite; nonzero exit on any failure
    Verify {
        /// Emit the machine-readable report as JSON instead of text lines
        #[arg(long)]
        json: bool,
    },
    /// Generate a built-in mesh and write it as an OFF file
    MeshGen {
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: &PathBuf) -> Result<RunConfig> {
    let mut config =
        RunConfig::from_file(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(dir) = std::env::var(OUTPUT_ENV) {
        config.output_dir = PathBuf::from(dir);
    }
    Ok(config)
}

fn cmd_profile(n: u32, p: f64, tol: f64, csv: Option<PathBuf>) -> Result<()> {
    let params = ProblemParams::new(n, p)?;
    let prof = shoot_ground_state(&params, tol)?;
    let doc = json!({
        "params": { "n": n, "p": p },
        "u0": prof.u0,
        "m_infty": prof.m_infty,
        "l2sq": prof.l2sq,
        "gradsq": prof.gradsq,
        "lp": prof.lp,
        "grid": { "points": prof.radii.len(), "r_max": prof.radii.last() },
        "nehari_residual": prof.nehari_residual(),
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    if let Some(path) = csv {
        let mut out = String::from("r,u\n");
        for (r, u) in prof.radii.iter().zip(&prof.values) {
            out.push_str(&format!("{r:.12e},{u:.12e}\n"));
        }
        std::fs::write(&path, out).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_homology(mesh: &MeshArgs, field_char: u64) -> Result<()> {
    let m = mesh.build()?;
    let poly = betti(&m, field_char)?;
    let doc = json!({
        "mesh": mesh.source()?.to_string(),
        "field_char": field_char,
        "betti": poly.coeffs,
        "p1": poly.p1(),
        "euler": poly.euler(),
        "euler_from_counts": m.euler_characteristic(),
        "orientable": m.is_orientable(),
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

fn cmd_ansatz(mesh: &MeshArgs, eps: f64, center: usize, radius_factor: f64) -> Result<()> {
    let m = mesh.build()?;
    if center >= m.n_vertices() {
        bail!("center {center} out of range ({} vertices)", m.n_vertices());
    }
    let metric = MetricField::induced(&m);
    let params = ProblemParams::new(2, 4.0)?;
    let prof = shoot_ground_state(&params, 1e-6)?;
    let setting = EnergySetting::assemble(&m, &metric, eps, params)?;
    let radius = radius_factor * injectivity_estimate(&m, &metric, center);
    let a = build_ansatz(&setting, &prof, &m, &metric, center, radius)?;
    let projected = a.projected();
    let b = barycenter(&setting, &m, &projected)?;
    let qx = m.vertex(center);
    let gap: f64 = b
        .point
        .iter()
        .zip(qx)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let doc = json!({
        "mesh": mesh.source()?.to_string(),
        "eps": eps,
        "center": center,
        "radius": radius,
        "nehari_t": a.nehari_t,
        "energy_after_projection": a.energy_after_projection,
        "energy_gap_to_limit": (a.energy_after_projection - prof.m_infty).abs(),
        "barycenter": b.point,
        "barycenter_gap": gap,
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

fn cmd_solve(config_path: &PathBuf, eps: Option<f64>, h_seed: Option<u64>) -> Result<()> {
    let config = load_config(config_path)?;
    config.validate()?;
    let eps = eps.unwrap_or(config.eps_list[0]);
    let mesh = build_mesh(&config.mesh).map_err(|e| anyhow::anyhow!("{e}"))?;
    let metric = match h_seed {
        None => MetricField::induced(&mesh),
        Some(s) => {
            let h = spikes_core::manifold::sample_perturbation(&mesh, config.rho, s)?;
            MetricField::perturbed(&mesh, &h)?
        }
    };
    let params = ProblemParams::new(config.n, config.p)?;
    let prof = shoot_ground_state(&params, 1e-6)?;
    let poly = betti(&mesh, config.homology_char)?;
    let p1 = poly.p1();
    let family = default_seed_family(&mesh, &metric, p1);
    let mut search = SearchOptions::standard(&prof, eps);
    search.radius_factor = config.radius_factor;
    search.newton.tol = config.newton_tol;
    search.newton.max_iters = config.max_iters;
    let report = multiplicity_run(
        &mesh,
        &metric,
        &prof,
        eps,
        config.delta_factor * prof.m_infty,
        &family,
        p1,
        &search,
    )?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn cmd_sweep(config_path: &PathBuf) -> Result<()> {
    let config = load_config(config_path)?;
    let manifest = run_experiment(&config)?;
    for v in &manifest.verdicts {
        eprintln!("{}", v.statement);
    }
    let doc = json!({
        "config_hash": config_hash(&config),
        "dir": config.output_dir.join(&manifest.dir),
        "artifacts": manifest.artifacts,
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

fn cmd_verify(as_json: bool) -> Result<ExitCode> {
    let reports = run_all();
    let failed: Vec<_> = reports.iter().filter(|r| !r.pass).collect();
    if as_json {
        println!("{}", serde_json::to_string_pretty(&reports)?);
    } else {
        for r in &reports {
            println!("{}", r.summary_line());
            for d in &r.details {
                println!("    {d}");
            }
        }
    }
    if failed.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        if !as_json {
            let names: Vec<_> = failed.iter().map(|r| r.id).collect();
            eprintln!("failed criteria: {names:?}");
        }
        Ok(ExitCode::FAILURE)
    }
}

fn cmd_mesh_gen(mesh: &MeshArgs, out: &PathBuf) -> Result<()> {
    let m = mesh.build()?;
    m.save(out).with_context(|| format!("writing {}", out.display()))?;
    println!(
        "{}",
        json!({
            "mesh": mesh.source()?.to_string(),
            "vertices": m.n_vertices(),
            "faces": m.n_faces(),
            "euler": m.euler_characteristic(),
            "path": out,
        })
    );
    Ok(())
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Profile { n, p, tol, csv } => cmd_profile(n, p, tol, csv).map(|_| ExitCode::SUCCESS),
        Command::Homology { mesh, char } => cmd_homology(&mesh, char).map(|_| ExitCode::SUCCESS),
        Command::Ansatz {
            mesh,
            eps,
            center,
            radius_factor,
        } => cmd_ansatz(&mesh, eps, center, radius_factor).map(|_| ExitCode::SUCCESS),
        Command::Solve {
            config,
            eps,
            h_seed,
        } => cmd_solve(&config, eps, h_seed).map(|_| ExitCode::SUCCESS),
        Command::Sweep { config } => cmd_sweep(&config).map(|_| ExitCode::SUCCESS),
        Command::Verify { json } => cmd_verify(json),
        Command::MeshGen { mesh, out } => cmd_mesh_gen(&mesh, &out).map(|_| ExitCode::SUCCESS),
    }
}
