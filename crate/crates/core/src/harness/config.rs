//! Run configuration: a flat `key = value` text format with typed keys.
//!
//! The format is deliberately plain — one assignment per line, `#` starts a
//! comment — so configs diff cleanly and can be generated from any language.
//! Every key is validated on parse; ranges that depend on computed
//! quantities (the energy-window fraction must stay below a quarter of the
//! limit energy) are re-checked by the pipeline once those quantities exist.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("key `{key}`: {message}")]
    InvalidValue { key: String, message: String },
    #[error("missing required key `{key}`")]
    MissingKey { key: &'static str },
    #[error("could not read config file: {0}")]
    Io(#[from] std::io::Error),
}

/// Which surface the experiment runs on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum MeshSource {
    /// Subdivided icosahedron projected to the unit sphere.
    Sphere { refine: u32 },
    /// Unit-area flat torus, `cells × cells` grid.
    Torus { cells: usize },
    /// Projective plane (antipodally identified icosphere).
    ProjectivePlane { refine: u32 },
    /// OFF file on disk.
    File { path: PathBuf },
}

impl fmt::Display for MeshSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshSource::Sphere { refine } => write!(f, "sphere(refine={refine})"),
            MeshSource::Torus { cells } => write!(f, "torus(cells={cells})"),
            MeshSource::ProjectivePlane { refine } => write!(f, "rp2(refine={refine})"),
            MeshSource::File { path } => write!(f, "file({})", path.display()),
        }
    }
}

/// Everything a full experiment needs. See the field docs for the accepted
/// keys; `RunConfig::default()` is the desk-scale torus run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// `mesh.kind` (`sphere` | `torus` | `rp2` | `file`) together with
    /// `mesh.refine` (generators) or `mesh.path` (files).
    pub mesh: MeshSource,
    /// `problem.n`: ambient dimension of the limit profile (surfaces need 2).
    pub n: u32,
    /// `problem.p`: nonlinearity exponent, strictly between 2 and the
    /// critical exponent when `n > 2` (unrestricted above 2 for n ≤ 2).
    pub p: f64,
    /// `eps.list`: comma-separated scale parameters, each in (0, 1).
    pub eps_list: Vec<f64>,
    /// `perturb.rho`: metric perturbation amplitude, ≥ 0.
    pub rho: f64,
    /// `perturb.seeds`: comma-separated RNG seeds, one perturbed metric per
    /// seed. The unperturbed metric is always run as well.
    pub h_seeds: Vec<u64>,
    /// `perturb.degree`: polynomial degree of the perturbation basis. Only
    /// degree 2 is implemented; the key exists so configs state it.
    pub perturb_degree: u32,
    /// `solver.delta_factor`: energy window is `J < 2m_∞ − δ` with
    /// `δ = factor · m_∞`; the factor must lie in (0, 1/4) so that δ stays
    /// inside the admissible window (0, m_∞/4).
    pub delta_factor: f64,
    /// `solver.tol`: Newton convergence threshold on the scaled gradient.
    pub newton_tol: f64,
    /// `solver.max_iters`: Newton iteration cap per seed.
    pub max_iters: usize,
    /// `ansatz.radius_factor`: seed cutoff radius as a fraction of the local
    /// injectivity estimate, in (0, 1].
    pub radius_factor: f64,
    /// `homology.char`: coefficient field characteristic (a prime).
    pub homology_char: u64,
    /// `output.dir`: root directory for run artifacts. Each run writes into
    /// a subdirectory named by its config hash, so identical configs rerun
    /// into the same place and the artifacts are reproducible byte for byte.
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mesh: MeshSource::Torus { cells: 48 },
            n: 2,
            p: 4.0,
            eps_list: vec![0.08],
            rho: 0.0,
            h_seeds: Vec::new(),
            perturb_degree: 2,
            delta_factor: 0.1,
            newton_tol: 1e-9,
            max_iters: 100,
            radius_factor: 0.8,
            homology_char: 2,
            output_dir: PathBuf::from("runs"),
        }
    }
}

fn is_prime(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= q {
        if q % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        message: message.into(),
    }
}

fn parse_as<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| invalid(key, format!("`{value}` is not {what}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_as(key, s, what))
        .collect()
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        let mut seen: Vec<String> = Vec::new();
        let mut mesh_kind: Option<String> = None;
        let mut mesh_refine: Option<u64> = None;
        let mut mesh_path: Option<PathBuf> = None;
        let mut cfg = RunConfig::default();
        let mut eps_set = false;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Malformed {
                    line,
                    text: content.to_string(),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if seen.iter().any(|k| k == key) {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
            seen.push(key.to_string());

            match key {
                "mesh.kind" => mesh_kind = Some(value.to_string()),
                "mesh.refine" => mesh_refine = Some(parse_as(key, value, "a nonnegative integer")?),
                "mesh.path" => mesh_path = Some(PathBuf::from(value)),
                "problem.n" => cfg.n = parse_as(key, value, "a positive integer")?,
                "problem.p" => cfg.p = parse_as(key, value, "a number")?,
                "eps.list" => {
                    cfg.eps_list = parse_list(key, value, "a number")?;
                    eps_set = true;
                }
                "perturb.rho" => cfg.rho = parse_as(key, value, "a number")?,
                "perturb.seeds" => cfg.h_seeds = parse_list(key, value, "an integer seed")?,
                "perturb.degree" => cfg.perturb_degree = parse_as(key, value, "a nonnegative integer")?,
                "solver.delta_factor" => cfg.delta_factor = parse_as(key, value, "a number")?,
                "solver.tol" => cfg.newton_tol = parse_as(key, value, "a number")?,
                "solver.max_iters" => cfg.max_iters = parse_as(key, value, "a positive integer")?,
                "ansatz.radius_factor" => cfg.radius_factor = parse_as(key, value, "a number")?,
                "homology.char" => cfg.homology_char = parse_as(key, value, "an integer")?,
                "output.dir" => cfg.output_dir = PathBuf::from(value),
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    })
                }
            }
        }

        let kind = mesh_kind.ok_or(ConfigError::MissingKey { key: "mesh.kind" })?;
        cfg.mesh = match kind.as_str() {
            "sphere" | "rp2" => {
                let refine = mesh_refine.ok_or(ConfigError::MissingKey { key: "mesh.refine" })?;
                let refine = u32::try_from(refine)
                    .map_err(|_| invalid("mesh.refine", "does not fit a refinement level"))?;
                if refine > 9 {
                    return Err(invalid("mesh.refine", "levels above 9 exceed desk scale"));
                }
                if kind == "sphere" {
                    MeshSource::Sphere { refine }
                } else {
                    MeshSource::ProjectivePlane { refine }
                }
            }
            "torus" => {
                let cells = mesh_refine.ok_or(ConfigError::MissingKey { key: "mesh.refine" })? as usize;
                if !(3..=1024).contains(&cells) {
                    return Err(invalid("mesh.refine", "torus grid must have 3 to 1024 cells per side"));
                }
                MeshSource::Torus { cells }
            }
            "file" => {
                let path = mesh_path.ok_or(ConfigError::MissingKey { key: "mesh.path" })?;
                MeshSource::File { path }
            }
            other => return Err(invalid("mesh.kind", format!("`{other}` is not sphere | torus | rp2 | file"))),
        };
        if !eps_set {
            return Err(ConfigError::MissingKey { key: "eps.list" });
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        Self::from_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 || self.n > 2 {
            return Err(invalid("problem.n", "only n = 1 and n = 2 are supported"));
        }
        if !(self.p > 2.0) || !self.p.is_finite() {
            return Err(invalid("problem.p", "the exponent must be a finite number above 2"));
        }
        if self.eps_list.is_empty() {
            return Err(invalid("eps.list", "at least one scale is required"));
        }
        for &eps in &self.eps_list {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(invalid("eps.list", format!("eps = {eps} is outside (0, 1)")));
            }
        }
        if !(self.rho >= 0.0) || !self.rho.is_finite() {
            return Err(invalid("perturb.rho", "the amplitude must be a finite nonnegative number"));
        }
        if self.perturb_degree != 2 {
            return Err(invalid("perturb.degree", "only the degree-2 perturbation basis is implemented"));
        }
        if !(self.delta_factor > 0.0 && self.delta_factor < 0.25) {
            return Err(invalid(
                "solver.delta_factor",
                "the window fraction must lie strictly between 0 and 1/4",
            ));
        }
        if !(self.newton_tol > 0.0 && self.newton_tol < 1.0) {
            return Err(invalid("solver.tol", "the tolerance must lie strictly between 0 and 1"));
        }
        if self.max_iters == 0 {
            return Err(invalid("solver.max_iters", "at least one iteration is required"));
        }
        if !(self.radius_factor > 0.0 && self.radius_factor <= 1.0) {
            return Err(invalid("ansatz.radius_factor", "the factor must lie in (0, 1]"));
        }
        if !is_prime(self.homology_char) {
            return Err(invalid(
                "homology.char",
                format!("{} is not a prime characteristic", self.homology_char),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "\
# desk-scale torus run
mesh.kind = torus
mesh.refine = 48
eps.list = 0.08, 0.1
perturb.rho = 0.02
perturb.seeds = 11, 12, 13
solver.delta_factor = 0.1
output.dir = out/torus
";

    #[test]
    fn parses_a_full_config() {
        let cfg = RunConfig::from_str(GOOD).unwrap();
        assert_eq!(cfg.mesh, MeshSource::Torus { cells: 48 });
        assert_eq!(cfg.eps_list, vec![0.08, 0.1]);
        assert_eq!(cfg.h_seeds, vec![11, 12, 13]);
        assert_eq!(cfg.rho, 0.02);
        assert_eq!(cfg.output_dir, PathBuf::from("out/torus"));
        // untouched keys keep their defaults
        assert_eq!(cfg.homology_char, 2);
        assert_eq!(cfg.max_iters, 100);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let cfg = RunConfig::from_str(
            "mesh.kind = sphere # round\n\nmesh.refine = 4 # coarse\neps.list = 0.1\n",
        )
        .unwrap();
        assert_eq!(cfg.mesh, MeshSource::Sphere { refine: 4 });
    }

    #[test]
    fn unknown_and_duplicate_keys_are_rejected() {
        let err = RunConfig::from_str("mesh.kind = torus\nmesh.refine = 8\neps.list = 0.1\nsolver.gamma = 3\n")
            .unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { key, .. } if key == "solver.gamma"));
        let err = RunConfig::from_str("mesh.kind = torus\nmesh.kind = sphere\n").unwrap_err();
        assert!(matches!(err, ConfigError::DuplicateKey { key, .. } if key == "mesh.kind"));
    }

    #[test]
    fn out_of_range_values_name_the_key() {
        for (text, key) in [
            ("mesh.kind = torus\nmesh.refine = 48\neps.list = 1.5\n", "eps.list"),
            (
                "mesh.kind = torus\nmesh.refine = 48\neps.list = 0.1\nsolver.delta_factor = 0.3\n",
                "solver.delta_factor",
            ),
            (
                "mesh.kind = torus\nmesh.refine = 48\neps.list = 0.1\nhomology.char = 6\n",
                "homology.char",
            ),
            (
                "mesh.kind = torus\nmesh.refine = 48\neps.list = 0.1\nansatz.radius_factor = 0\n",
                "ansatz.radius_factor",
            ),
        ] {
            match RunConfig::from_str(text).unwrap_err() {
                ConfigError::InvalidValue { key: k, .. } => assert_eq!(k, key),
                other => panic!("expected InvalidValue for {key}, got {other:?}"),
            }
        }
    }

    #[test]
    fn missing_mesh_or_eps_is_an_error() {
        assert!(matches!(
            RunConfig::from_str("eps.list = 0.1\n").unwrap_err(),
            ConfigError::MissingKey { key: "mesh.kind" }
        ));
        assert!(matches!(
            RunConfig::from_str("mesh.kind = torus\nmesh.refine = 16\n").unwrap_err(),
            ConfigError::MissingKey { key: "eps.list" }
        ));
    }

    #[test]
    fn malformed_lines_report_their_number() {
        match RunConfig::from_str("mesh.kind = torus\nnot a key value\n").unwrap_err() {
            ConfigError::Malformed { line, .. } => assert_eq!(line, 2),
            other => panic!("expected Malformed, got {other:?}"),
        }
    }
}
