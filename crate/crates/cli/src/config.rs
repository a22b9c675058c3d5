//! Flat `key = value` run configuration with `[section]` headers.
//!
//! Unknown sections or keys are rejected so typos fail loudly. `#` and `;`
//! start comments. The full key reference is printed by `latgas --help`.

use crate::{CliError, Result};
use latgas_core::model::ModelParams;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Initial macroscopic density profile. Values may jump only at the
/// interface points `u = 0` and `u = 1`; inside each region the profile is
/// continuous.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialProfile {
    /// Constant value per region.
    Step { left: f64, bulk: f64, right: f64 },
    Constant { value: f64 },
    /// Piecewise-linear between `(u, value)` breakpoints; duplicate `u`
    /// entries at 0 or 1 encode jumps.
    Piecewise { points: Vec<(f64, f64)> },
}

impl InitialProfile {
    /// Density at macroscopic position `u` seen from inside `region`
    /// (0 = left reservoir, 1 = bulk, 2 = right reservoir).
    pub fn eval(&self, region: usize, u: f64) -> f64 {
        match self {
            InitialProfile::Step { left, bulk, right } => match region {
                0 => *left,
                1 => *bulk,
                _ => *right,
            },
            InitialProfile::Constant { value } => *value,
            InitialProfile::Piecewise { points } => {
                // nudge onto the open side of the region so jumps at the
                // interfaces resolve to the correct one-sided limit
                let lo = [-1.0, 0.0, 1.0][region];
                let eps = 1e-9;
                let u = u.clamp(lo + eps, lo + 1.0 - eps);
                if u <= points[0].0 {
                    return points[0].1;
                }
                for w in points.windows(2) {
                    let ((u0, v0), (u1, v1)) = (w[0], w[1]);
                    if u <= u1 {
                        if u1 == u0 {
                            return v1;
                        }
                        return v0 + (v1 - v0) * (u - u0) / (u1 - u0);
                    }
                }
                points.last().unwrap().1
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let check = |v: f64, what: &str| {
            if !(0.0..=1.0).contains(&v) {
                return Err(CliError::Validation(format!("{what} = {v} outside [0, 1]")));
            }
            Ok(())
        };
        match self {
            InitialProfile::Step { left, bulk, right } => {
                check(*left, "initial.left")?;
                check(*bulk, "initial.bulk")?;
                check(*right, "initial.right")
            }
            InitialProfile::Constant { value } => check(*value, "initial.value"),
            InitialProfile::Piecewise { points } => {
                if points.len() < 2 {
                    return Err(CliError::Validation(
                        "initial.points needs at least two breakpoints".into(),
                    ));
                }
                for w in points.windows(2) {
                    if w[1].0 < w[0].0 {
                        return Err(CliError::Validation(
                            "initial.points must be sorted by position".into(),
                        ));
                    }
                    if w[1].0 == w[0].0 && !(w[0].0 == 0.0 || w[0].0 == 1.0) {
                        return Err(CliError::Validation(format!(
                            "initial.points may jump only at u = 0 or u = 1 (got {})",
                            w[0].0
                        )));
                    }
                }
                for &(u, v) in points {
                    if !(-1.0..=2.0).contains(&u) {
                        return Err(CliError::Validation(format!(
                            "initial.points position {u} outside [-1, 2]"
                        )));
                    }
                    check(v, "initial.points value")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n: usize,
}

impl ModelConfig {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.theta, self.alpha, self.beta, self.n).map_err(CliError::validation)
    }
}

#[derive(Debug, Clone)]
pub struct SimulateConfig {
    pub t_end: f64,
    pub snapshots: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    pub block_l: usize,
    pub averaging_k: usize,
}

#[derive(Debug, Clone)]
pub struct PdeConfig {
    pub cells: usize,
    pub safety: f64,
    pub snapshots: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GibbsCheckConfig {
    pub interval: usize,
    pub lambdas: Vec<f64>,
    pub samples: usize,
    pub lln_blocks: Vec<usize>,
    pub lln_densities: Vec<f64>,
    pub lln_samples: usize,
    pub lln_delta: f64,
    pub tv_tolerance: f64,
}

#[derive(Debug, Clone)]
pub struct EnsemblesConfig {
    pub rho_min: f64,
    pub rho_max: f64,
    pub rho_step: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_step: f64,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub initial: InitialProfile,
    pub simulate: SimulateConfig,
    pub pde: PdeConfig,
    pub gibbs: GibbsCheckConfig,
    pub ensembles: EnsemblesConfig,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Self> {
        let raw = parse_sections(text)?;
        let known_sections =
            ["model", "initial", "simulate", "pde", "gibbs", "ensembles", "output"];
        for section in raw.keys() {
            if !known_sections.contains(&section.as_str()) {
                return Err(CliError::Validation(format!("unknown section [{section}]")));
            }
        }

        let model = {
            let mut s = SectionReader::new(&raw, "model");
            let model = ModelConfig {
                theta: s.required_f64("theta")?,
                alpha: s.required_f64("alpha")?,
                beta: s.required_f64("beta")?,
                n: s.required_usize("n")?,
            };
            s.finish()?;
            model
        };
        model.params()?; // surface parameter problems at parse time

        let initial = {
            let mut s = SectionReader::new(&raw, "initial");
            let profile = s.string("profile", "step");
            let initial = match profile.as_str() {
                "step" => InitialProfile::Step {
                    left: s.f64("left", 0.5)?,
                    bulk: s.f64("bulk", 0.5)?,
                    right: s.f64("right", 0.5)?,
                },
                "constant" => InitialProfile::Constant { value: s.f64("value", 0.5)? },
                "piecewise" => {
                    let spec = s.required_string("points")?;
                    let mut points = Vec::new();
                    for part in spec.split(',') {
                        let part = part.trim();
                        let (u, v) = part.split_once(':').ok_or_else(|| {
                            CliError::Validation(format!(
                                "initial.points entry '{part}' is not u:value"
                            ))
                        })?;
                        points.push((parse_f64("initial.points", u)?, parse_f64("initial.points", v)?));
                    }
                    InitialProfile::Piecewise { points }
                }
                other => {
                    return Err(CliError::Validation(format!(
                        "initial.profile must be step | constant | piecewise (got '{other}')"
                    )))
                }
            };
            s.finish()?;
            initial.validate()?;
            initial
        };

        let simulate = {
            let mut s = SectionReader::new(&raw, "simulate");
            let t_end = s.f64("t_end", 0.5)?;
            let simulate = SimulateConfig {
                t_end,
                snapshots: s.f64_list("snapshots", &default_snapshots(t_end))?,
                replicas: s.usize("replicas", 100)?,
                seed: s.u64("seed", 1)?,
                block_l: s.usize("block_l", (model.n / 4).clamp(1, 8))?,
                averaging_k: s.usize("averaging_k", (model.n / 2).clamp(3, 16))?,
            };
            s.finish()?;
            simulate
        };
        validate_snapshots("simulate.snapshots", &simulate.snapshots, simulate.t_end)?;
        if simulate.replicas < 1 {
            return Err(CliError::Validation("simulate.replicas must be at least 1".into()));
        }
        if simulate.block_l < 1 || simulate.block_l > model.n / 4 {
            return Err(CliError::Validation(format!(
                "simulate.block_l must lie in [1, N/4] (got {})",
                simulate.block_l
            )));
        }
        if simulate.averaging_k < 3 || simulate.averaging_k > model.n / 2 {
            return Err(CliError::Validation(format!(
                "simulate.averaging_k must lie in [3, N/2] (got {})",
                simulate.averaging_k
            )));
        }

        let pde = {
            let mut s = SectionReader::new(&raw, "pde");
            let pde = PdeConfig {
                cells: s.usize("cells", 150)?,
                safety: s.f64("safety", 0.4)?,
                snapshots: s.f64_list("snapshots", &simulate.snapshots)?,
            };
            s.finish()?;
            pde
        };
        let pde_t_end = pde.snapshots.last().copied().unwrap_or(simulate.t_end);
        validate_snapshots("pde.snapshots", &pde.snapshots, pde_t_end)?;
        if pde.cells < 2 {
            return Err(CliError::Validation("pde.cells must be at least 2".into()));
        }
        if !(pde.safety > 0.0 && pde.safety <= 0.5) {
            return Err(CliError::Validation(format!(
                "pde.safety must lie in (0, 0.5] (got {})",
                pde.safety
            )));
        }

        let gibbs = {
            let mut s = SectionReader::new(&raw, "gibbs");
            let gibbs = GibbsCheckConfig {
                interval: s.usize("interval", 8)?,
                lambdas: s.f64_list("lambdas", &[-0.5, 0.0, 0.5])?,
                samples: s.usize("samples", 1_000_000)?,
                lln_blocks: s.usize_list("lln_blocks", &[50, 100, 200])?,
                lln_densities: s.f64_list("lln_densities", &[0.3, 0.5, 0.7])?,
                lln_samples: s.usize("lln_samples", 10_000)?,
                lln_delta: s.f64("lln_delta", 0.1)?,
                tv_tolerance: s.f64("tv_tolerance", 0.01)?,
            };
            s.finish()?;
            gibbs
        };
        if gibbs.interval < 2 || gibbs.interval > 16 {
            return Err(CliError::Validation(
                "gibbs.interval must lie in [2, 16] (enumeration oracle)".into(),
            ));
        }

        let ensembles = {
            let mut s = SectionReader::new(&raw, "ensembles");
            let ensembles = EnsemblesConfig {
                rho_min: s.f64("rho_min", 0.02)?,
                rho_max: s.f64("rho_max", 0.98)?,
                rho_step: s.f64("rho_step", 0.02)?,
                lambda_min: s.f64("lambda_min", -5.0)?,
                lambda_max: s.f64("lambda_max", 5.0)?,
                lambda_step: s.f64("lambda_step", 0.25)?,
            };
            s.finish()?;
            ensembles
        };
        if !(ensembles.rho_min > 0.0 && ensembles.rho_max < 1.0 && ensembles.rho_step > 0.0) {
            return Err(CliError::Validation("ensembles rho grid must stay inside (0, 1)".into()));
        }

        let output_dir = {
            let mut s = SectionReader::new(&raw, "output");
            let dir = PathBuf::from(s.string("dir", "out"));
            s.finish()?;
            dir
        };

        Ok(RunConfig { model, initial, simulate, pde, gibbs, ensembles, output_dir })
    }
}

fn default_snapshots(t_end: f64) -> Vec<f64> {
    (0..=10).map(|i| t_end * i as f64 / 10.0).collect()
}

fn validate_snapshots(what: &str, snaps: &[f64], t_end: f64) -> Result<()> {
    if snaps.is_empty() {
        return Err(CliError::Validation(format!("{what} must not be empty")));
    }
    if snaps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Validation(format!("{what} must be strictly increasing")));
    }
    if snaps[0] < 0.0 || *snaps.last().unwrap() > t_end + 1e-12 {
        return Err(CliError::Validation(format!("{what} must lie within [0, {t_end}]")));
    }
    Ok(())
}

type Sections = BTreeMap<String, BTreeMap<String, String>>;

fn parse_sections(text: &str) -> Result<Sections> {
    let mut out: Sections = BTreeMap::new();
    let mut current = String::new();
    for (lineno, raw_line) in text.lines().enumerate() {
        let line = strip_comment(raw_line).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| {
                CliError::Validation(format!("line {}: malformed section header", lineno + 1))
            })?;
            current = name.trim().to_string();
            out.entry(current.clone()).or_default();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Validation(format!("line {}: expected key = value", lineno + 1))
        })?;
        if current.is_empty() {
            return Err(CliError::Validation(format!(
                "line {}: key outside any [section]",
                lineno + 1
            )));
        }
        let prev = out
            .get_mut(&current)
            .unwrap()
            .insert(key.trim().to_string(), value.trim().to_string());
        if prev.is_some() {
            return Err(CliError::Validation(format!(
                "line {}: duplicate key '{}' in [{}]",
                lineno + 1,
                key.trim(),
                current
            )));
        }
    }
    Ok(out)
}

fn strip_comment(line: &str) -> &str {
    match line.find(['#', ';']) {
        Some(idx) => &line[..idx],
        None => line,
    }
}

fn parse_f64(what: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| CliError::Validation(format!("{what}: '{s}' is not a number")))
}

struct SectionReader<'a> {
    name: &'static str,
    section: Option<&'a BTreeMap<String, String>>,
    seen: Vec<String>,
}

impl<'a> SectionReader<'a> {
    fn new(raw: &'a Sections, name: &'static str) -> Self {
        Self { name, section: raw.get(name), seen: Vec::new() }
    }

    fn get(&mut self, key: &str) -> Option<&'a str> {
        self.seen.push(key.to_string());
        self.section.and_then(|s| s.get(key)).map(|v| v.as_str())
    }

    fn required_string(&mut self, key: &str) -> Result<String> {
        self.get(key)
            .map(|s| s.to_string())
            .ok_or_else(|| CliError::Validation(format!("missing {}.{key}", self.name)))
    }

    fn string(&mut self, key: &str, default: &str) -> String {
        self.get(key).map(|s| s.to_string()).unwrap_or_else(|| default.to_string())
    }

    fn required_f64(&mut self, key: &str) -> Result<f64> {
        let raw = self.required_string(key)?;
        parse_f64(&format!("{}.{key}", self.name), &raw)
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            Some(raw) => parse_f64(&format!("{}.{key}", self.name), raw),
            None => Ok(default),
        }
    }

    fn required_usize(&mut self, key: &str) -> Result<usize> {
        let raw = self.required_string(key)?;
        raw.trim()
            .parse::<usize>()
            .map_err(|_| CliError::Validation(format!("{}.{key}: '{raw}' is not a count", self.name)))
    }

    fn usize(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            Some(raw) => raw.trim().parse::<usize>().map_err(|_| {
                CliError::Validation(format!("{}.{key}: '{raw}' is not a count", self.name))
            }),
            None => Ok(default),
        }
    }

    fn u64(&mut self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            Some(raw) => raw.trim().parse::<u64>().map_err(|_| {
                CliError::Validation(format!("{}.{key}: '{raw}' is not an unsigned integer", self.name))
            }),
            None => Ok(default),
        }
    }

    fn f64_list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(key) {
            Some(raw) => raw
                .split(',')
                .map(|p| parse_f64(&format!("{}.{key}", self.name), p))
                .collect(),
            None => Ok(default.to_vec()),
        }
    }

    fn usize_list(&mut self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.get(key) {
            Some(raw) => raw
                .split(',')
                .map(|p| {
                    p.trim().parse::<usize>().map_err(|_| {
                        CliError::Validation(format!("{}.{key}: '{p}' is not a count", self.name))
                    })
                })
                .collect(),
            None => Ok(default.to_vec()),
        }
    }

    /// Rejects keys that were present but never consumed.
    fn finish(self) -> Result<()> {
        if let Some(section) = self.section {
            for key in section.keys() {
                if !self.seen.iter().any(|s| s == key) {
                    return Err(CliError::Validation(format!(
                        "unknown key '{}' in [{}]",
                        key, self.name
                    )));
                }
            }
        }
        Ok(())
    }
}
