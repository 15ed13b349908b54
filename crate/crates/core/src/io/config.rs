use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use crate::assembly::{vector_fn, BCSet, MaterialParams};
use crate::cases::{generate_couette_case, generate_packaging_case, Case, CouetteParams, PackagingParams};
use crate::solver::{LinearSolverKind, SolverConfig};
use crate::vring::MotionProgram;
use crate::{Error, Result};

use super::read_mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    Couette,
    Packaging,
    /// Mesh file with constant Dirichlet values per marker.
    Custom,
}

impl FromStr for CaseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "couette" => Ok(CaseKind::Couette),
            "packaging" => Ok(CaseKind::Packaging),
            "custom" => Ok(CaseKind::Custom),
            _ => Err(Error::Config(format!("unknown case '{s}', expected couette, packaging or custom"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseConfig {
    pub case: CaseKind,
    pub dt: f64,
    pub n_steps: usize,
    pub rho: Option<f64>,
    pub mu: Option<f64>,
    pub motion: Option<MotionProgram>,
    pub delta: Option<f64>,
    pub scale: f64,
    /// Snapshot cadence in steps; 0 writes none.
    pub write_every: usize,
    pub out: Option<PathBuf>,
    pub mesh: Option<PathBuf>,
    pub check_invariants: bool,
    pub deterministic: bool,
    pub linear_solver: LinearSolverKind,
    pub newton_tol: Option<f64>,
    pub newton_max_iters: Option<usize>,
    /// Constant wall velocities of a custom case.
    pub dirichlet: Vec<(String, [f64; 2])>,
    pub pressure_pin: Option<(usize, f64)>,
}

/// Settings given on the command line; each one present replaces the file value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub case: Option<String>,
    pub steps: Option<usize>,
    pub dt: Option<f64>,
    pub scale: Option<f64>,
    pub out: Option<PathBuf>,
    pub write_every: Option<usize>,
    pub check_invariants: bool,
    pub deterministic: Option<bool>,
}

pub const CONFIG_KEYS: &[&str] = &[
    "case",
    "steps",
    "dt",
    "scale",
    "out",
    "write_every",
    "check_invariants",
    "deterministic",
    "rho",
    "mu",
    "speed",
    "stroke",
    "delta",
    "mesh",
    "linear_solver",
    "newton_tol",
    "newton_max_iters",
    "pressure_pin",
    "dirichlet.<marker>",
];

/// Reads `key = value` lines (`#` starts a comment) and applies `overrides`.
pub fn parse_config(path: Option<&Path>, overrides: &ConfigOverrides) -> Result<CaseConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
        None => String::new(),
    };
    parse_config_str(&text, path.unwrap_or(Path::new("<flags>")), overrides)
}

fn parse<T: FromStr>(path: &Path, line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("invalid value '{v}' for {key}"),
    })
}

fn parse_bool(path: &Path, line: usize, key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => parse(path, line, key, "not-a-bool"),
    }
}

fn parse_list(path: &Path, line: usize, key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(|c: char| c == ',' || c == ':' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| parse(path, line, key, t))
        .collect()
}

pub fn parse_config_str(text: &str, path: &Path, overrides: &ConfigOverrides) -> Result<CaseConfig> {
    let mut case: Option<String> = None;
    let mut dt = None;
    let mut steps = None;
    let mut cfg = CaseConfig {
        case: CaseKind::Couette,
        dt: 0.0,
        n_steps: 0,
        rho: None,
        mu: None,
        motion: None,
        delta: None,
        scale: PackagingParams::default().scale,
        write_every: 0,
        out: None,
        mesh: None,
        check_invariants: false,
        deterministic: true,
        linear_solver: LinearSolverKind::Direct,
        newton_tol: None,
        newton_max_iters: None,
        dirichlet: Vec::new(),
        pressure_pin: None,
    };
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse { path: path.to_path_buf(), line: ln, message: format!("expected key = value, found '{line}'") });
        };
        let (k, v) = (k.trim(), v.trim());
        match k {
            "case" => case = Some(v.to_string()),
            "steps" => steps = Some(parse(path, ln, k, v)?),
            "dt" => dt = Some(parse(path, ln, k, v)?),
            "scale" => cfg.scale = parse(path, ln, k, v)?,
            "out" => cfg.out = Some(PathBuf::from(v)),
            "write_every" => cfg.write_every = parse(path, ln, k, v)?,
            "check_invariants" => cfg.check_invariants = parse_bool(path, ln, k, v)?,
            "deterministic" => cfg.deterministic = parse_bool(path, ln, k, v)?,
            "rho" => cfg.rho = Some(parse(path, ln, k, v)?),
            "mu" => cfg.mu = Some(parse(path, ln, k, v)?),
            "speed" => cfg.motion = Some(MotionProgram::Constant(parse(path, ln, k, v)?)),
            "stroke" => {
                let vals = parse_list(path, ln, k, v)?;
                if vals.len() < 4 || vals.len() % 2 != 0 {
                    return Err(Error::Parse { path: path.to_path_buf(), line: ln, message: "stroke needs at least two t:v knots".into() });
                }
                cfg.motion = Some(MotionProgram::PiecewiseLinear(vals.chunks(2).map(|c| (c[0], c[1])).collect()));
            }
            "delta" => cfg.delta = Some(parse(path, ln, k, v)?),
            "mesh" => cfg.mesh = Some(PathBuf::from(v)),
            "linear_solver" => {
                cfg.linear_solver = match v {
                    "direct" => LinearSolverKind::Direct,
                    "iterative" | "gmres" => LinearSolverKind::Iterative,
                    _ => return Err(Error::Parse { path: path.to_path_buf(), line: ln, message: format!("linear_solver must be direct or iterative, found '{v}'") }),
                }
            }
            "newton_tol" => cfg.newton_tol = Some(parse(path, ln, k, v)?),
            "newton_max_iters" => cfg.newton_max_iters = Some(parse(path, ln, k, v)?),
            "pressure_pin" => {
                let vals = parse_list(path, ln, k, v)?;
                if vals.len() != 2 || vals[0] < 0.0 || vals[0].fract() != 0.0 {
                    return Err(Error::Parse { path: path.to_path_buf(), line: ln, message: "pressure_pin = <node> <value>".into() });
                }
                cfg.pressure_pin = Some((vals[0] as usize, vals[1]));
            }
            _ if k.starts_with("dirichlet.") && k.len() > "dirichlet.".len() => {
                let vals = parse_list(path, ln, k, v)?;
                if vals.len() != 2 {
                    return Err(Error::Parse { path: path.to_path_buf(), line: ln, message: format!("{k} = <ux>, <uy>") });
                }
                cfg.dirichlet.push((k["dirichlet.".len()..].to_string(), [vals[0], vals[1]]));
            }
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: ln,
                    message: format!("unknown key '{k}', valid keys: {}", CONFIG_KEYS.join(", ")),
                })
            }
        }
    }
    let o = overrides;
    let case = o.case.clone().or(case).ok_or_else(|| Error::Config("case required".into()))?;
    cfg.case = case.parse()?;
    if let Some(v) = o.scale {
        cfg.scale = v;
    }
    if let Some(v) = &o.out {
        cfg.out = Some(v.clone());
    }
    if let Some(v) = o.write_every {
        cfg.write_every = v;
    }
    if let Some(v) = o.deterministic {
        cfg.deterministic = v;
    }
    cfg.check_invariants |= o.check_invariants;
    let (dt0, steps0) = match cfg.case {
        CaseKind::Couette => (CouetteParams::default().dt, 8),
        CaseKind::Packaging => (PackagingParams::default().dt, 700),
        CaseKind::Custom => (f64::NAN, 1),
    };
    cfg.dt = o.dt.or(dt).unwrap_or(dt0);
    if cfg.dt.is_nan() {
        return Err(Error::Config("custom case requires dt".into()));
    }
    cfg.n_steps = o.steps.or(steps).unwrap_or(steps0);
    if !(cfg.dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {}", cfg.dt)));
    }
    if cfg.case == CaseKind::Custom && cfg.mesh.is_none() {
        return Err(Error::Config("custom case requires mesh".into()));
    }
    Ok(cfg)
}

impl CaseConfig {
    pub fn build_case(&self) -> Result<Case> {
        let mut case = match self.case {
            CaseKind::Couette => {
                let d = CouetteParams::default();
                generate_couette_case(&CouetteParams {
                    rho: self.rho.unwrap_or(d.rho),
                    mu: self.mu.unwrap_or(d.mu),
                    dt: self.dt,
                    delta: self.delta.or(d.delta),
                    ..d
                })?
            }
            CaseKind::Packaging => {
                let d = PackagingParams::default();
                let mut case = generate_packaging_case(&PackagingParams {
                    rho: self.rho.unwrap_or(d.rho),
                    mu: self.mu.unwrap_or(d.mu),
                    dt: self.dt,
                    scale: self.scale,
                    ..d
                })?;
                if let (Some(delta), Some(ring)) = (self.delta, case.ring.as_mut()) {
                    let min = ring.min_moving_extent(&case.mesh)?;
                    ring.set_delta(delta, min)?;
                }
                case
            }
            CaseKind::Custom => self.custom_case()?,
        };
        if let Some(m) = &self.motion {
            case.motion = m.clone();
        }
        case.dt = self.dt;
        Ok(case)
    }

    fn custom_case(&self) -> Result<Case> {
        let path = self.mesh.as_ref().expect("checked by parse_config");
        let (mesh, mut ring) = read_mesh(path)?;
        if let (Some(delta), Some(r)) = (self.delta, ring.as_mut()) {
            let min = r.min_moving_extent(&mesh)?;
            r.set_delta(delta, min)?;
        }
        let (Some(rho), Some(mu)) = (self.rho, self.mu) else {
            return Err(Error::Config("custom case requires rho and mu".into()));
        };
        let bcs = BCSet {
            dirichlet: self.dirichlet.iter().map(|(m, u)| {
                let u = *u;
                (m.clone(), vector_fn(move |_, _| u))
            }).collect(),
            neumann: Vec::new(),
            pressure_pin: self.pressure_pin,
        };
        Ok(Case {
            name: "custom".into(),
            mesh,
            ring,
            bcs,
            params: MaterialParams::new(rho, mu)?,
            motion: self.motion.clone().unwrap_or(MotionProgram::Constant(0.0)),
            initial: Arc::new(|_| ([0.0, 0.0], 0.0)),
            exact: None,
            reference_speed: 1.0,
            dt: self.dt,
            t0: 0.0,
        })
    }

    pub fn solver_config(&self) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            newton_tol: self.newton_tol.unwrap_or(d.newton_tol),
            newton_max_iters: self.newton_max_iters.unwrap_or(d.newton_max_iters),
            linear_solver: self.linear_solver,
            deterministic_assembly: self.deterministic,
            ..d
        }
    }
}
