//! Run configuration: model parameters, grid, solver and simulation settings.
//!
//! A config file is a flat key-value TOML file, e.g.
//!
//! ```toml
//! rho = 0.03
//! b = 0.65
//! c = 1.0
//! sigma = 0.1
//! l = 10.0
//! n = 1000
//! ```
//!
//! Every key is optional; missing keys keep their defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hjb::{DiffusionForm, Grid, RightBoundary, SolveOptions, SolverMethod};
use crate::model::LakeParams;
use crate::sde::{Integrator, PathConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub l: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.l, self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub tol: f64,
    pub max_sweeps: usize,
    pub method: SolverMethod,
    pub diffusion: DiffusionForm,
    pub right_boundary: RightBoundary,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = SolveOptions::default();
        Self {
            tol: d.tol,
            max_sweeps: d.max_sweeps,
            method: d.method,
            diffusion: d.diffusion,
            right_boundary: d.right_boundary,
        }
    }
}

impl SolverSpec {
    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tol,
            max_sweeps: self.max_sweeps,
            method: self.method,
            diffusion: self.diffusion,
            right_boundary: self.right_boundary,
            init: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub x0: f64,
    /// `None` means [`PathConfig::default_horizon`].
    pub t_max: Option<f64>,
    pub dt: f64,
    pub paths: usize,
    pub integrator: Integrator,
    pub seed: u64,
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            x0: 0.5,
            t_max: None,
            dt: 0.01,
            paths: 10_000,
            integrator: Integrator::KernelQuadrature,
            seed: 20_240_601,
        }
    }
}

impl SimSpec {
    pub fn path_config(&self, params: &LakeParams) -> Result<PathConfig> {
        let t_max = self
            .t_max
            .unwrap_or_else(|| PathConfig::default_horizon(params));
        PathConfig::new(t_max, self.dt, self.integrator, self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: LakeParams,
    pub grid: GridSpec,
    pub solver: SolverSpec,
    pub sim: SimSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: LakeParams::standard(),
            grid: GridSpec { l: 10.0, n: 1000 },
            solver: SolverSpec::default(),
            sim: SimSpec::default(),
        }
    }
}

impl RunConfig {
    /// Defaults overridden by the keys present in `path`.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::default();
        cfg.apply(&ConfigFile::parse(&text)?)?;
        Ok(cfg)
    }

    pub fn apply(&mut self, f: &ConfigFile) -> Result<()> {
        macro_rules! set {
            ($dst:expr, $src:expr) => {
                if let Some(v) = $src.clone() {
                    $dst = v;
                }
            };
        }
        set!(self.params.rho, f.rho);
        set!(self.params.b, f.b);
        set!(self.params.c, f.c);
        set!(self.params.sigma, f.sigma);
        set!(self.grid.l, f.l);
        set!(self.grid.n, f.n);
        set!(self.solver.tol, f.tol);
        set!(self.solver.max_sweeps, f.max_sweeps);
        if let Some(m) = &f.method {
            self.solver.method = m.parse()?;
        }
        if let Some(d) = &f.scheme_diffusion {
            self.solver.diffusion = d.parse()?;
        }
        if let Some(r) = &f.right_boundary {
            self.solver.right_boundary = r.parse()?;
        }
        set!(self.sim.x0, f.x0);
        if f.t_max.is_some() {
            self.sim.t_max = f.t_max;
        }
        set!(self.sim.dt, f.dt);
        set!(self.sim.paths, f.paths);
        set!(self.sim.seed, f.seed);
        if let Some(i) = &f.integrator {
            self.sim.integrator = i.parse()?;
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        content_hash(self)
    }
}

/// Hex SHA-256 of the compact JSON form of `value`.
pub fn content_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("config serialises");
    hex::encode(Sha256::digest(json.as_bytes()))
}

/// Flat key-value view of a config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub rho: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub sigma: Option<f64>,
    pub l: Option<f64>,
    pub n: Option<usize>,
    pub tol: Option<f64>,
    pub max_sweeps: Option<usize>,
    pub method: Option<String>,
    pub scheme_diffusion: Option<String>,
    pub right_boundary: Option<String>,
    pub x0: Option<f64>,
    pub t_max: Option<f64>,
    pub dt: Option<f64>,
    pub paths: Option<usize>,
    pub integrator: Option<String>,
    pub seed: Option<u64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_key_values() {
        let f = ConfigFile::parse("rho = 0.05\nb = 0.7\nc = 1\nsigma = 0.2\nn = 500\n").unwrap();
        let mut cfg = RunConfig::default();
        cfg.apply(&f).unwrap();
        assert_eq!(cfg.params, LakeParams::new(0.05, 0.7, 1.0, 0.2).unwrap());
        assert_eq!(cfg.grid.n, 500);
        assert_eq!(cfg.grid.l, 10.0);
    }

    #[test]
    fn rejects_unknown_keys_and_values() {
        assert!(ConfigFile::parse("rhoo = 1.0").is_err());
        let f = ConfigFile::parse("scheme_diffusion = \"cubic\"").unwrap();
        assert!(RunConfig::default().apply(&f).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(a.hash(), b.hash());
        b.params.sigma = 0.2;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
