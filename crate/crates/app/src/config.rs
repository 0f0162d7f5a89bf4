//! Flat `key = value` run configuration.
//!
//! One namespace; unknown keys are rejected so typos fail loudly. Grid keys
//! use the unfolded counts (`N_r_hat` includes the axis node, `N_theta_hat`
//! must be a multiple of k*q).

use branchsolve_core::{grid::Grid, Real};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Eq, Copy)]
pub enum Command {
    SolvePoisson,
    SolveNonlinear,
    Diagnose,
    GenExample,
    CrossCheck,
}

impl Command {
    pub fn parse(s: &str) -> Result<Self, String> {
        match s {
            "solve-poisson" => Ok(Command::SolvePoisson),
            "solve-nonlinear" => Ok(Command::SolveNonlinear),
            "diagnose" => Ok(Command::Diagnose),
            "gen-example" => Ok(Command::GenExample),
            "cross-check" => Ok(Command::CrossCheck),
            other => Err(format!("unknown command '{other}'")),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::SolvePoisson => "solve-poisson",
            Command::SolveNonlinear => "solve-nonlinear",
            Command::Diagnose => "diagnose",
            Command::GenExample => "gen-example",
            Command::CrossCheck => "cross-check",
        }
    }
}

/// Parsed configuration; field meanings are documented in the README.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub q: usize,
    pub k: usize,
    pub nr_hat: usize,
    pub ntheta_hat: usize,
    pub ny: Vec<usize>,
    pub rho: Vec<Real>,
    pub boundary: Option<String>,
    pub g_file: Option<PathBuf>,
    pub f_file: Option<PathBuf>,
    pub example: Option<String>,
    pub nonlinearity: Option<String>,
    pub epsilon: Real,
    pub tol: Real,
    pub residual_tol: Real,
    pub max_iters: usize,
    pub mu: Option<Real>,
    pub sym_tol: Real,
    pub relaxation: Option<Real>,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub input_field: Option<PathBuf>,
    pub diagnostics: Vec<String>,
    pub decay_window: (Real, Real),
    pub frequency_radii: Vec<Real>,
    pub y0: Vec<Real>,
    pub cauchy_p_max: usize,
    pub cauchy_radius: Real,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            q: 2,
            k: 3,
            nr_hat: 65,
            ntheta_hat: 48,
            ny: vec![1],
            rho: vec![std::f64::consts::TAU],
            boundary: None,
            g_file: None,
            f_file: None,
            example: None,
            nonlinearity: None,
            epsilon: 1e-3,
            tol: 1e-12,
            residual_tol: 1e-8,
            max_iters: 30,
            mu: None,
            sym_tol: 1e-8,
            relaxation: None,
            seed: 0,
            out_dir: None,
            threads: None,
            input_field: None,
            diagnostics: vec![],
            decay_window: (1e-6, 1e-2),
            frequency_radii: vec![0.1, 0.2, 0.4],
            y0: vec![],
            cauchy_p_max: 6,
            cauchy_radius: 0.25,
        }
    }
}

fn parse_list<T: std::str::FromStr>(v: &str, what: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    v.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|e| format!("bad {what} entry '{s}': {e}"))
        })
        .collect()
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<Self, String> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected 'key = value'", lineno + 1))?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        let mut cfg = RunConfig::default();
        let mut ny: BTreeMap<usize, usize> = BTreeMap::new();
        let mut rho: BTreeMap<usize, Real> = BTreeMap::new();
        for (key, value) in &map {
            match key.as_str() {
                "command" => cfg.command = Some(Command::parse(value)?),
                "q" => cfg.q = value.parse().map_err(|e| format!("bad q: {e}"))?,
                "k" => cfg.k = value.parse().map_err(|e| format!("bad k: {e}"))?,
                "n" => {
                    let n: usize = value.parse().map_err(|e| format!("bad n: {e}"))?;
                    if !(3..=4).contains(&n) {
                        return Err(format!("unsupported n = {n}"));
                    }
                }
                "N_r_hat" => cfg.nr_hat = value.parse().map_err(|e| format!("bad N_r_hat: {e}"))?,
                "N_theta_hat" => {
                    cfg.ntheta_hat = value.parse().map_err(|e| format!("bad N_theta_hat: {e}"))?
                }
                k2 if k2.starts_with("N_y_") => {
                    let d: usize = k2[4..].parse().map_err(|e| format!("bad key {k2}: {e}"))?;
                    ny.insert(d, value.parse().map_err(|e| format!("bad {k2}: {e}"))?);
                }
                k2 if k2.starts_with("rho_") => {
                    let d: usize = k2[4..].parse().map_err(|e| format!("bad key {k2}: {e}"))?;
                    rho.insert(d, value.parse().map_err(|e| format!("bad {k2}: {e}"))?);
                }
                "boundary" => cfg.boundary = Some(value.clone()),
                "g_file" => cfg.g_file = Some(PathBuf::from(value)),
                "f_file" => cfg.f_file = Some(PathBuf::from(value)),
                "example" => cfg.example = Some(value.clone()),
                "nonlinearity" => cfg.nonlinearity = Some(value.clone()),
                "epsilon" => cfg.epsilon = value.parse().map_err(|e| format!("bad epsilon: {e}"))?,
                "tol" => cfg.tol = value.parse().map_err(|e| format!("bad tol: {e}"))?,
                "residual_tol" => {
                    cfg.residual_tol = value.parse().map_err(|e| format!("bad residual_tol: {e}"))?
                }
                "max_iters" => {
                    cfg.max_iters = value.parse().map_err(|e| format!("bad max_iters: {e}"))?
                }
                "mu" => cfg.mu = Some(value.parse().map_err(|e| format!("bad mu: {e}"))?),
                "sym_tol" => cfg.sym_tol = value.parse().map_err(|e| format!("bad sym_tol: {e}"))?,
                "relaxation" => {
                    cfg.relaxation = Some(value.parse().map_err(|e| format!("bad relaxation: {e}"))?)
                }
                "seed" => cfg.seed = value.parse().map_err(|e| format!("bad seed: {e}"))?,
                "out_dir" => cfg.out_dir = Some(PathBuf::from(value)),
                "threads" => cfg.threads = Some(value.parse().map_err(|e| format!("bad threads: {e}"))?),
                "input_field" => cfg.input_field = Some(PathBuf::from(value)),
                "diagnostics" => {
                    cfg.diagnostics = value.split(',').map(|s| s.trim().to_string()).collect()
                }
                "decay_window_lo" => {
                    cfg.decay_window.0 = value.parse().map_err(|e| format!("bad window: {e}"))?
                }
                "decay_window_hi" => {
                    cfg.decay_window.1 = value.parse().map_err(|e| format!("bad window: {e}"))?
                }
                "frequency_radii" => cfg.frequency_radii = parse_list(value, "frequency_radii")?,
                "y0" => cfg.y0 = parse_list(value, "y0")?,
                "cauchy_p_max" => {
                    cfg.cauchy_p_max = value.parse().map_err(|e| format!("bad cauchy_p_max: {e}"))?
                }
                "cauchy_radius" => {
                    cfg.cauchy_radius = value.parse().map_err(|e| format!("bad cauchy_radius: {e}"))?
                }
                other => return Err(format!("unknown config key '{other}'")),
            }
        }
        if !ny.is_empty() || !rho.is_empty() {
            if ny.len() != rho.len()
                || ny.keys().zip(1..).any(|(&d, e)| d != e)
                || rho.keys().zip(1..).any(|(&d, e)| d != e)
            {
                return Err("N_y_i / rho_i keys must be 1-based and paired".into());
            }
            cfg.ny = ny.into_values().collect();
            cfg.rho = rho.into_values().collect();
        }
        if cfg.tol <= 0.0 || cfg.residual_tol <= 0.0 || cfg.sym_tol <= 0.0 {
            return Err("tolerances must be positive".into());
        }
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::from_str(&text)
    }

    pub fn grid(&self) -> branchsolve_core::Result<Grid<Real>> {
        Grid::new(
            self.q,
            self.k,
            self.nr_hat,
            self.ntheta_hat,
            self.ny.clone(),
            self.rho.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let text = "\
command = solve-poisson
q = 2
k = 3
N_r_hat = 257
N_theta_hat = 48
N_y_1 = 8
rho_1 = 6.283185307179586
boundary = id:q2k3-harmonic
seed = 7
";
        let cfg = RunConfig::from_str(text).unwrap();
        assert_eq!(cfg.command, Some(Command::SolvePoisson));
        assert_eq!(cfg.nr_hat, 257);
        assert_eq!(cfg.ny, vec![8]);
        assert_eq!(cfg.seed, 7);
        assert!(cfg.grid().is_ok());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_tolerances() {
        assert!(RunConfig::from_str("frobnicate = 1\n").is_err());
        assert!(RunConfig::from_str("tol = 0\n").is_err());
        assert!(RunConfig::from_str("q - 2\n").is_err());
    }
}
