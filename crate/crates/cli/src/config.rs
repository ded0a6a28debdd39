//! INI-style run configuration.
//!
//! Every key is optional; unknown sections or keys and unparsable values are
//! rejected with the offending `[section] key` named.

use ancient_mcf_core::ancient::AncientConfig;
use ancient_mcf_core::geometry::{build_catenoid, build_synthetic, Potential, SurfaceModel};
use ancient_mcf_core::mesh::AngularScheme;
use ancient_mcf_core::nonlinear::{ModelNonlinearity, Nonlinearity};
use ancient_mcf_core::spectrum::ModeCount;
use ini::Ini;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config key [{section}] {key}: {msg}")]
    Key { section: String, key: String, msg: String },
    #[error("config: {0}")]
    Syntax(String),
}

const KEYS: &[(&str, &[&str])] = &[
    ("geometry", &["model", "v_max", "potential", "depth", "width", "circumference", "length"]),
    ("mesh", &["R", "n_v", "n_theta", "angular"]),
    ("spectrum", &["k", "epsilon", "harnack_collar", "quotient_epsilon", "reference_R"]),
    (
        "ancient",
        &[
            "a", "t_min", "dt", "n_modes", "picard_tol", "max_iter", "proj_tol", "coeff_tol", "residual_tol",
            "gap_tol", "window", "nonlinearity", "quadratic", "gradient", "start", "start_amplitude",
        ],
    ),
    ("diagnostics", &["t0", "t1", "fit_start", "fit_end", "mass_tol", "decay_tol"]),
    ("output", &["dir"]),
    ("run", &["seed", "workers"]),
    ("sweep", &["R", "compare_v", "a_scales", "contraction_max", "convexity_max", "bisection_steps"]),
];

/// Keys that do not influence numerical output and stay out of the hash.
const UNHASHED: &[(&str, &str)] = &[("output", "dir"), ("run", "workers")];

#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    Catenoid { v_max: f64 },
    Synthetic { potential: Potential, circumference: f64, length: f64 },
}

impl ModelSpec {
    pub fn build(&self) -> ancient_mcf_core::Result<SurfaceModel> {
        match self {
            ModelSpec::Catenoid { v_max } => build_catenoid(*v_max),
            ModelSpec::Synthetic { potential, circumference, length } => {
                build_synthetic(potential.clone(), *circumference, *length)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StartSpec {
    Zero,
    Random { amplitude: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub radii: Vec<f64>,
    pub compare_v: Option<f64>,
    pub a_scales: Vec<f64>,
    pub contraction_max: Option<f64>,
    pub convexity_max: Option<f64>,
    pub bisection_steps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub radius: f64,
    pub n_v: usize,
    pub n_theta: usize,
    pub scheme: AngularScheme,
    pub modes: ModeCount,
    pub epsilon: Option<f64>,
    pub harnack_collar: f64,
    pub quotient_epsilon: f64,
    pub reference_radius: Option<f64>,
    /// `None`: `(1e-2, 0, …, 0)` sized to the Morse index.
    pub a: Option<Vec<f64>>,
    pub ancient: AncientConfig,
    pub nonlinearity: Nonlinearity,
    pub start: StartSpec,
    pub t0: Option<f64>,
    pub t1: Option<f64>,
    pub fit_start: Option<f64>,
    pub fit_end: Option<f64>,
    pub mass_tol: f64,
    pub decay_tol: f64,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub workers: usize,
    pub sweep: SweepSpec,
    /// SHA-256 of the canonical numerical settings.
    pub hash: String,
    /// The configuration text as read.
    pub source: String,
}

/// A real number, or `sinh(x)`.
pub fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    let v = if let Some(inner) = s.strip_prefix("sinh(").and_then(|r| r.strip_suffix(')')) {
        inner.trim().parse::<f64>().ok()?.sinh()
    } else {
        s.parse::<f64>().ok()?
    };
    v.is_finite().then_some(v)
}

struct Table {
    values: BTreeMap<(String, String), String>,
}

impl Table {
    fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.values.get(&(section.to_string(), key.to_string())).map(|s| s.as_str())
    }

    fn err(section: &str, key: &str, msg: impl Into<String>) -> ConfigError {
        ConfigError::Key { section: section.into(), key: key.into(), msg: msg.into() }
    }

    fn real(&self, section: &str, key: &str) -> Result<Option<f64>, ConfigError> {
        self.raw(section, key)
            .map(|s| parse_real(s).ok_or_else(|| Self::err(section, key, format!("{s:?} is not a number"))))
            .transpose()
    }

    fn real_or(&self, section: &str, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.real(section, key)?.unwrap_or(default))
    }

    fn positive_or(&self, section: &str, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.real_or(section, key, default)?;
        if !(v > 0.0) {
            return Err(Self::err(section, key, format!("must be positive, got {v}")));
        }
        Ok(v)
    }

    fn count(&self, section: &str, key: &str) -> Result<Option<usize>, ConfigError> {
        self.raw(section, key)
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Self::err(section, key, format!("{s:?} is not a non-negative integer")))
            })
            .transpose()
    }

    fn list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(s) = self.raw(section, key) else { return Ok(None) };
        let mut out = Vec::new();
        for part in split_list(s) {
            out.push(parse_real(part).ok_or_else(|| Self::err(section, key, format!("{part:?} is not a number")))?);
        }
        if out.is_empty() {
            return Err(Self::err(section, key, "empty list"));
        }
        Ok(Some(out))
    }

    fn word(&self, section: &str, key: &str, default: &str, allowed: &[&str]) -> Result<String, ConfigError> {
        let w = self.raw(section, key).unwrap_or(default).trim().to_ascii_lowercase();
        if !allowed.contains(&w.as_str()) {
            return Err(Self::err(section, key, format!("{w:?} is not one of {allowed:?}")));
        }
        Ok(w)
    }
}

/// Splits on commas that are not inside parentheses.
fn split_list(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0usize);
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out.retain(|p| !p.is_empty());
    out
}

fn read_table(text: &str) -> Result<Table, ConfigError> {
    let ini = Ini::load_from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let mut values = BTreeMap::new();
    for (section, props) in ini.iter() {
        let Some(section) = section else {
            if let Some((k, _)) = props.iter().next() {
                return Err(Table::err("", k, "keys must appear inside a section"));
            }
            continue;
        };
        let Some((_, keys)) = KEYS.iter().find(|(s, _)| *s == section) else {
            let key = props.iter().next().map(|(k, _)| k.to_string()).unwrap_or_default();
            return Err(Table::err(section, &key, format!("unknown section [{section}]")));
        };
        for (k, v) in props.iter() {
            if !keys.contains(&k) {
                return Err(Table::err(section, k, "unknown key"));
            }
            if values.insert((section.to_string(), k.to_string()), v.trim().to_string()).is_some() {
                return Err(Table::err(section, k, "key given twice"));
            }
        }
    }
    Ok(Table { values })
}

fn canonical_hash(t: &Table) -> String {
    let mut h = Sha256::new();
    for ((s, k), v) in &t.values {
        if UNHASHED.contains(&(s.as_str(), k.as_str())) {
            continue;
        }
        h.update(format!("{s}.{k}={v}\n").as_bytes());
    }
    hex::encode(h.finalize())
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let t = read_table(text)?;
    let model = match t.word("geometry", "model", "catenoid", &["catenoid", "synthetic"])?.as_str() {
        "catenoid" => ModelSpec::Catenoid { v_max: t.real_or("geometry", "v_max", 12.0)? },
        _ => {
            let depth = t.real_or("geometry", "depth", 6.0)?;
            let width = t.real_or("geometry", "width", 1.0)?;
            let potential = match t.word("geometry", "potential", "sech2", &["zero", "sech2", "bump"])?.as_str() {
                "zero" => Potential::Zero,
                "sech2" => Potential::Sech2 { depth, width },
                _ => Potential::Bump { depth, width },
            };
            ModelSpec::Synthetic {
                potential,
                circumference: t.positive_or("geometry", "circumference", 2.0 * std::f64::consts::PI * 0.4)?,
                length: t.positive_or("geometry", "length", 12.0)?,
            }
        }
    };
    let scheme = match t.word("mesh", "angular", "spectral", &["spectral", "fd2"])?.as_str() {
        "spectral" => AngularScheme::Spectral,
        _ => AngularScheme::Fd2,
    };
    let modes = match t.raw("spectrum", "k").map(|s| s.trim().to_ascii_lowercase()) {
        None => ModeCount::All,
        Some(s) if s == "all" => ModeCount::All,
        Some(_) => match t.count("spectrum", "k")? {
            Some(0) | None => return Err(Table::err("spectrum", "k", "must be 'all' or a positive integer")),
            Some(k) => ModeCount::Lowest(k),
        },
    };
    let mut ancient = AncientConfig::default();
    ancient.t_min = t.real("ancient", "t_min")?;
    ancient.dt = t.real("ancient", "dt")?;
    ancient.n_modes = t.count("ancient", "n_modes")?;
    ancient.picard_tol = t.positive_or("ancient", "picard_tol", ancient.picard_tol)?;
    ancient.max_iter = t.count("ancient", "max_iter")?.unwrap_or(ancient.max_iter);
    ancient.proj_tol = t.positive_or("ancient", "proj_tol", ancient.proj_tol)?;
    ancient.coeff_tol = t.positive_or("ancient", "coeff_tol", ancient.coeff_tol)?;
    ancient.residual_tol = t.positive_or("ancient", "residual_tol", ancient.residual_tol)?;
    ancient.gap_tol = t.positive_or("ancient", "gap_tol", ancient.gap_tol)?;
    ancient.window = t.positive_or("ancient", "window", ancient.window)?;
    let nonlinearity = match t.word("ancient", "nonlinearity", "geometric", &["geometric", "model"])?.as_str() {
        "geometric" => Nonlinearity::Geometric,
        _ => Nonlinearity::Model(ModelNonlinearity::mixed(
            t.real_or("ancient", "quadratic", 1.0)?,
            t.real_or("ancient", "gradient", 0.0)?,
        )),
    };
    let start = match t.word("ancient", "start", "zero", &["zero", "random"])?.as_str() {
        "zero" => StartSpec::Zero,
        _ => StartSpec::Random { amplitude: t.positive_or("ancient", "start_amplitude", 1e-4)? },
    };
    let workers = t.count("run", "workers")?.unwrap_or(1);
    if workers == 0 {
        return Err(Table::err("run", "workers", "must be at least 1"));
    }
    let n_v = t.count("mesh", "n_v")?.unwrap_or(401);
    let n_theta = t.count("mesh", "n_theta")?.unwrap_or(8);
    let sweep = SweepSpec {
        radii: t.list("sweep", "R")?.unwrap_or_else(|| vec![2f64.sinh(), 3f64.sinh(), 4f64.sinh()]),
        compare_v: t.real("sweep", "compare_v")?,
        a_scales: t.list("sweep", "a_scales")?.unwrap_or_default(),
        contraction_max: t.real("sweep", "contraction_max")?,
        convexity_max: t.real("sweep", "convexity_max")?,
        bisection_steps: t.count("sweep", "bisection_steps")?.unwrap_or(6),
    };
    Ok(RunConfig {
        model,
        radius: t.real_or("mesh", "R", 5f64.sinh())?,
        n_v,
        n_theta,
        scheme,
        modes,
        epsilon: t.real("spectrum", "epsilon")?,
        harnack_collar: t.positive_or("spectrum", "harnack_collar", 1.0)?,
        quotient_epsilon: t.positive_or("spectrum", "quotient_epsilon", 0.1)?,
        reference_radius: t.real("spectrum", "reference_R")?,
        a: t.list("ancient", "a")?,
        ancient,
        nonlinearity,
        start,
        t0: t.real("diagnostics", "t0")?,
        t1: t.real("diagnostics", "t1")?,
        fit_start: t.real("diagnostics", "fit_start")?,
        fit_end: t.real("diagnostics", "fit_end")?,
        mass_tol: t.positive_or("diagnostics", "mass_tol", 1e-2)?,
        decay_tol: t.positive_or("diagnostics", "decay_tol", 0.05)?,
        out_dir: PathBuf::from(t.raw("output", "dir").unwrap_or("run")),
        seed: t.count("run", "seed")?.unwrap_or(0) as u64,
        workers,
        sweep,
        hash: canonical_hash(&t),
        source: text.to_string(),
    })
}
