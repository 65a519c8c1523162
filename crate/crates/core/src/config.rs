//! Run configuration: flat `key = value` text with `#` comments, overridable by
//! command-line flags of the same names.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::cases::{BzVariant, L2Norm, Plane};
use crate::error::{Error, Result};
use crate::evolution::GlmParams;
use crate::flux::{ReconstructionVars, SchemeOptions};
use crate::mesh::{Boundary, Domain, VariableScaling, MAX_SUPPORTED_LEVEL};
use crate::state::{Direction, GasGamma};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    Riemann1D,
    Riemann2D,
    /// Smooth entropy wave on the periodic unit cube.
    Smooth,
    /// Initial leaves read from a mesh dump.
    Custom,
}

impl Problem {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "riemann1d" => Some(Problem::Riemann1D),
            "riemann2d" => Some(Problem::Riemann2D),
            "smooth" => Some(Problem::Smooth),
            "custom" => Some(Problem::Custom),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Problem::Riemann1D => "riemann1d",
            Problem::Riemann2D => "riemann2d",
            Problem::Smooth => "smooth",
            Problem::Custom => "custom",
        }
    }
}

/// How the solution is sampled for the error norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormSampling {
    /// Every cell of the uniform grid at the maximum level.
    #[default]
    FullGrid,
    /// The row of finest cells through the domain centre along the run axis.
    Centerline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub problem: Problem,
    pub axis: Direction,
    pub plane: Plane,
    pub gamma: f64,
    pub nu: f64,
    pub alpha: f64,
    pub eps0: f64,
    pub max_level: u8,
    /// Explicit domain; `None` uses the natural domain of the problem.
    pub domain: Option<Domain>,
    pub boundary: Option<Boundary>,
    pub t_end: f64,
    pub max_steps: usize,
    pub output: PathBuf,
    /// Steps between intermediate mesh dumps; 0 writes only the final mesh.
    pub cadence: usize,
    pub threshold: bool,
    pub scaling: VariableScaling,
    pub start_level: u8,
    pub bz: BzVariant,
    pub norm: L2Norm,
    pub norm_sampling: NormSampling,
    pub reference: Option<PathBuf>,
    pub initial: Option<PathBuf>,
    pub reconstruction: ReconstructionVars,
    pub reconstruct_psi: bool,
    pub slice_plane: Plane,
    pub slice_coord: f64,
    pub slice_vars: Vec<String>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            problem: Problem::Riemann1D,
            axis: Direction::X,
            plane: Plane::XY,
            gamma: 5.0 / 3.0,
            nu: 0.3,
            alpha: 0.4,
            eps0: 0.1,
            max_level: 8,
            domain: None,
            boundary: None,
            t_end: 0.1,
            max_steps: 1_000_000,
            output: PathBuf::from("out"),
            cadence: 0,
            threshold: true,
            scaling: VariableScaling::PerVariable,
            start_level: 3,
            bz: BzVariant::Literature,
            norm: L2Norm::CountRoot,
            norm_sampling: NormSampling::FullGrid,
            reference: None,
            initial: None,
            reconstruction: ReconstructionVars::Conservative,
            reconstruct_psi: true,
            slice_plane: Plane::XY,
            slice_coord: 0.0,
            slice_vars: ["rho", "p", "ux", "uy", "uz", "Bx", "By", "Bz"].map(String::from).to_vec(),
        }
    }
}

/// Every accepted key, in canonical order.
pub const KEYS: [&str; 27] = [
    "problem",
    "axis",
    "plane",
    "gamma",
    "nu",
    "alpha",
    "eps0",
    "max_level",
    "domain_lo",
    "domain_hi",
    "boundary",
    "t_end",
    "max_steps",
    "output",
    "cadence",
    "threshold",
    "scaling",
    "start_level",
    "bz",
    "norm",
    "norm_sampling",
    "reference",
    "initial",
    "reconstruction",
    "reconstruct_psi",
    "slice_plane",
    "slice_coord",
];

/// Extra key listing the sliced variables (comma-separated).
pub const SLICE_VARS_KEY: &str = "slice_vars";

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| Error::config(key, format!("cannot parse `{v}`: {e}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::config(key, format!("expected a boolean, got `{v}`"))),
    }
}

fn parse_vec3(key: &str, v: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [x] => {
            let x = parse_num(key, x)?;
            Ok([x; 3])
        }
        [x, y, z] => Ok([parse_num(key, x)?, parse_num(key, y)?, parse_num(key, z)?]),
        _ => Err(Error::config(key, format!("expected one or three numbers, got `{v}`"))),
    }
}

fn parse_choice<T>(key: &str, v: &str, f: impl Fn(&str) -> Option<T>, valid: &str) -> Result<T> {
    f(v).ok_or_else(|| Error::config(key, format!("unknown value `{v}`, expected one of {valid}")))
}

/// Reads `key = value` lines. Later duplicates win.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: n + 1,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl SimConfig {
    /// Parses a config file, then applies `overrides` in order.
    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, overrides)
    }

    pub fn from_text(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut pairs = parse_pairs(text)?;
        pairs.extend(overrides.iter().cloned());
        Self::from_pairs(&pairs)
    }

    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut c = SimConfig::default();
        let (mut lo, mut hi) = (None, None);
        for (k, v) in pairs {
            c.set(k, v, &mut lo, &mut hi)?;
        }
        c.domain = match (lo, hi) {
            (None, None) => None,
            (Some(lo), Some(hi)) => Some(Domain::new(lo, hi).map_err(|e| Error::config("domain_lo", e.to_string()))?),
            (Some(_), None) => return Err(Error::config("domain_hi", "must be given together with domain_lo")),
            (None, Some(_)) => return Err(Error::config("domain_lo", "must be given together with domain_hi")),
        };
        c.validate()?;
        Ok(c)
    }

    fn set(&mut self, k: &str, v: &str, lo: &mut Option<[f64; 3]>, hi: &mut Option<[f64; 3]>) -> Result<()> {
        match k {
            "problem" => {
                self.problem = parse_choice(k, v, Problem::parse, "riemann1d, riemann2d, smooth, custom")?
            }
            "axis" => {
                self.axis = parse_choice(
                    k,
                    v,
                    |s| match s {
                        "x" => Some(Direction::X),
                        "y" => Some(Direction::Y),
                        "z" => Some(Direction::Z),
                        _ => None,
                    },
                    "x, y, z",
                )?
            }
            "plane" => self.plane = parse_choice(k, v, Plane::parse, "xy, yz, zx")?,
            "gamma" => self.gamma = parse_num(k, v)?,
            "nu" => self.nu = parse_num(k, v)?,
            "alpha" => self.alpha = parse_num(k, v)?,
            "eps0" => self.eps0 = parse_num(k, v)?,
            "max_level" => self.max_level = parse_num(k, v)?,
            "domain_lo" | "domain_hi" | "boundary" if v.is_empty() => {}
            "domain_lo" => *lo = Some(parse_vec3(k, v)?),
            "domain_hi" => *hi = Some(parse_vec3(k, v)?),
            "boundary" => {
                self.boundary = Some(parse_choice(
                    k,
                    v,
                    |s| match s {
                        "zero-gradient" => Some(Boundary::ZeroGradient),
                        "periodic" => Some(Boundary::Periodic),
                        _ => None,
                    },
                    "zero-gradient, periodic",
                )?)
            }
            "t_end" => self.t_end = parse_num(k, v)?,
            "max_steps" => self.max_steps = parse_num(k, v)?,
            "output" => self.output = PathBuf::from(v),
            "cadence" => self.cadence = parse_num(k, v)?,
            "threshold" => self.threshold = parse_bool(k, v)?,
            "scaling" => self.scaling = parse_choice(k, v, VariableScaling::parse, "per-variable, per-group, none")?,
            "start_level" => self.start_level = parse_num(k, v)?,
            "bz" => self.bz = parse_choice(k, v, BzVariant::parse, "literature, as-printed")?,
            "norm" => self.norm = parse_choice(k, v, L2Norm::parse, "mean-square, rms, count-root")?,
            "norm_sampling" => {
                self.norm_sampling = parse_choice(
                    k,
                    v,
                    |s| match s {
                        "full" => Some(NormSampling::FullGrid),
                        "centerline" => Some(NormSampling::Centerline),
                        _ => None,
                    },
                    "full, centerline",
                )?
            }
            "reference" => self.reference = (!v.is_empty()).then(|| PathBuf::from(v)),
            "initial" => self.initial = (!v.is_empty()).then(|| PathBuf::from(v)),
            "reconstruction" => {
                self.reconstruction = parse_choice(
                    k,
                    v,
                    |s| match s {
                        "conservative" => Some(ReconstructionVars::Conservative),
                        "primitive" => Some(ReconstructionVars::Primitive),
                        _ => None,
                    },
                    "conservative, primitive",
                )?
            }
            "reconstruct_psi" => self.reconstruct_psi = parse_bool(k, v)?,
            "slice_plane" => self.slice_plane = parse_choice(k, v, Plane::parse, "xy, yz, zx")?,
            "slice_coord" => self.slice_coord = parse_num(k, v)?,
            SLICE_VARS_KEY => {
                self.slice_vars = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
            }
            _ => return Err(Error::config(k, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        GasGamma::new(self.gamma).map_err(|e| Error::config("gamma", e.to_string()))?;
        GlmParams::new(self.nu, self.alpha)?;
        if !(self.eps0 >= 0.0) || !self.eps0.is_finite() {
            return Err(Error::config("eps0", format!("must be finite and >= 0, got {}", self.eps0)));
        }
        if self.max_level < 1 || self.max_level > MAX_SUPPORTED_LEVEL {
            return Err(Error::config(
                "max_level",
                format!("must lie in 1..={MAX_SUPPORTED_LEVEL}, got {}", self.max_level),
            ));
        }
        if self.start_level > self.max_level {
            return Err(Error::config("start_level", "must not exceed max_level"));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::config("t_end", format!("must be positive, got {}", self.t_end)));
        }
        if self.max_steps == 0 {
            return Err(Error::config("max_steps", "must be positive"));
        }
        match self.problem {
            Problem::Smooth if self.domain.is_some() => {
                return Err(Error::config("domain_lo", "the smooth problem is fixed to the unit cube"))
            }
            Problem::Custom if self.initial.is_none() => {
                return Err(Error::config("initial", "required for the custom problem"))
            }
            _ => {}
        }
        if let Some(d) = self.domain {
            if !(d.lo[self.slice_plane_normal()] <= self.slice_coord && self.slice_coord <= d.hi[self.slice_plane_normal()]) {
                return Err(Error::config("slice_coord", format!("{} lies outside the domain", self.slice_coord)));
            }
        }
        Ok(())
    }

    fn slice_plane_normal(&self) -> usize {
        let (a, b) = self.slice_plane.axes();
        3 - a - b
    }

    pub fn gas_gamma(&self) -> GasGamma {
        GasGamma::new(self.gamma).expect("validated")
    }

    pub fn scheme(&self) -> SchemeOptions {
        SchemeOptions {
            variables: self.reconstruction,
            reconstruct_psi: self.reconstruct_psi,
        }
    }

    /// Canonical `key = value` text of the effective configuration, used for the
    /// provenance hash.
    pub fn canonical(&self) -> String {
        let axis = ["x", "y", "z"][self.axis.axis()];
        let plane = |p: Plane| match p {
            Plane::XY => "xy",
            Plane::YZ => "yz",
            Plane::ZX => "zx",
        };
        let v3 = |a: [f64; 3]| format!("{},{},{}", a[0], a[1], a[2]);
        let path = |p: &Option<PathBuf>| p.as_ref().map_or(String::new(), |p| p.display().to_string());
        let values: [String; 27] = [
            self.problem.name().into(),
            axis.into(),
            plane(self.plane).into(),
            self.gamma.to_string(),
            self.nu.to_string(),
            self.alpha.to_string(),
            self.eps0.to_string(),
            self.max_level.to_string(),
            self.domain.map_or(String::new(), |d| v3(d.lo)),
            self.domain.map_or(String::new(), |d| v3(d.hi)),
            match self.boundary {
                None => String::new(),
                Some(Boundary::ZeroGradient) => "zero-gradient".into(),
                Some(Boundary::Periodic) => "periodic".into(),
            },
            self.t_end.to_string(),
            self.max_steps.to_string(),
            self.output.display().to_string(),
            self.cadence.to_string(),
            self.threshold.to_string(),
            self.scaling.name().into(),
            self.start_level.to_string(),
            self.bz.name().into(),
            self.norm.name().into(),
            match self.norm_sampling {
                NormSampling::FullGrid => "full".into(),
                NormSampling::Centerline => "centerline".into(),
            },
            path(&self.reference),
            path(&self.initial),
            match self.reconstruction {
                ReconstructionVars::Conservative => "conservative".into(),
                ReconstructionVars::Primitive => "primitive".into(),
            },
            self.reconstruct_psi.to_string(),
            plane(self.slice_plane).into(),
            self.slice_coord.to_string(),
        ];
        let mut map: BTreeMap<&str, String> = KEYS.iter().copied().zip(values).collect();
        map.insert(SLICE_VARS_KEY, self.slice_vars.join(","));
        map.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
