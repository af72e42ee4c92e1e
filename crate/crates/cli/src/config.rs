//! Scenario files: TOML with `[link]`, `[system]`, `[inid]`, `[sweep]`,
//! `[snr]`, `[run]` and `[mc]` sections.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use fsocap_core::channel::AtmosphericLink;
use fsocap_core::{McConfig, Method};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Iid,
    Inid,
}

/// Quantity varied along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "rho_db")]
    RhoDb,
    #[serde(rename = "gamma_bar_db")]
    GammaBarDb,
    #[serde(rename = "mean_snr_db")]
    MeanSnrDb,
    #[serde(rename = "cn2")]
    Cn2,
    #[serde(rename = "D", alias = "aperture")]
    Aperture,
    #[serde(rename = "L", alias = "distance")]
    Distance,
    #[serde(rename = "beta")]
    Beta,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::RhoDb => "rho_db",
            SweepAxis::GammaBarDb => "gamma_bar_db",
            SweepAxis::MeanSnrDb => "mean_snr_db",
            SweepAxis::Cn2 => "cn2",
            SweepAxis::Aperture => "D",
            SweepAxis::Distance => "L",
            SweepAxis::Beta => "beta",
        }
    }

    /// The SNR axis this sweep runs along, if it is one.
    pub fn snr_axis(self) -> Option<SnrAxis> {
        match self {
            SweepAxis::RhoDb => Some(SnrAxis::RhoDb),
            SweepAxis::GammaBarDb => Some(SnrAxis::GammaBarDb),
            SweepAxis::MeanSnrDb => Some(SnrAxis::MeanSnrDb),
            _ => None,
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How an SNR value in dB is interpreted.
///
/// `rho_db` is the transmit SNR ρ, `gamma_bar_db` is γ̄ = γ₀(MN)² = η²ρ and
/// `mean_snr_db` is the mean electrical SNR γ₀E(S²).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrAxis {
    RhoDb,
    GammaBarDb,
    MeanSnrDb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub cn2: f64,
    #[serde(default = "default_wavelength")]
    pub wavelength: f64,
    pub distance: f64,
    pub aperture: f64,
}

fn default_wavelength() -> f64 {
    850e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub m: u32,
    pub n: u32,
    #[serde(default = "one")]
    pub eta: f64,
    pub mode: Mode,
}

fn one() -> f64 {
    1.0
}

/// Per-link mean irradiances for the i.n.i.d. mode: either a geometric
/// progression with ratio `beta`, scaled so that ΣΩ = MN, or an explicit list.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InidSection {
    pub beta: Option<f64>,
    pub omega: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepSection {
    /// Evenly spaced values, `stop` included exactly.
    pub fn values(&self) -> Vec<f64> {
        let last = self.steps - 1;
        (0..self.steps)
            .map(|i| {
                if i == last {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * i as f64 / last as f64
                }
            })
            .collect()
    }
}

/// Fixed SNR for sweeps over a physical parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrSection {
    pub axis: SnrAxis,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            methods: default_methods(),
            tolerance: default_tolerance(),
        }
    }
}

fn default_methods() -> Vec<String> {
    ["closed_form", "high_snr", "awgn"].map(String::from).to_vec()
}

pub fn default_tolerance() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_batch")]
    pub batch: usize,
}

impl Default for McSection {
    fn default() -> Self {
        let d = McConfig::default();
        Self {
            samples: d.samples,
            seed: d.seed,
            batch: d.batch,
        }
    }
}

fn default_samples() -> u64 {
    McConfig::default().samples
}
fn default_seed() -> u64 {
    McConfig::default().seed
}
fn default_batch() -> usize {
    McConfig::default().batch
}

impl From<McSection> for McConfig {
    fn from(s: McSection) -> Self {
        McConfig {
            samples: s.samples,
            seed: s.seed,
            batch: s.batch,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub link: LinkSection,
    pub system: SystemSection,
    #[serde(default)]
    pub inid: Option<InidSection>,
    pub sweep: SweepSection,
    #[serde(default)]
    pub snr: Option<SnrSection>,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub mc: McSection,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub tolerance: Option<f64>,
    pub seed: Option<u64>,
    pub samples: Option<u64>,
}

/// A parsed and validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub methods: Vec<Method>,
    pub digest: String,
}

impl Scenario {
    pub fn load(path: &Path, ov: &Overrides) -> Result<Self, CliError> {
        let src = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&src, ov)
    }

    pub fn parse(src: &str, ov: &Overrides) -> Result<Self, CliError> {
        let mut file: ScenarioFile = toml::from_str(src).map_err(|e| {
            let line = e.span().map(|s| line_of_offset(src, s.start));
            CliError::config(line, e.message().trim().to_string())
        })?;
        if let Some(t) = ov.tolerance {
            file.run.tolerance = t;
        }
        if let Some(s) = ov.seed {
            file.mc.seed = s;
        }
        if let Some(n) = ov.samples {
            file.mc.samples = n;
        }
        let methods = validate(&file, src)?;
        Ok(Self {
            file,
            methods,
            digest: sha256_hex(src.as_bytes()),
        })
    }

    pub fn links(&self) -> usize {
        (self.file.system.m * self.file.system.n) as usize
    }

    pub fn mc_config(&self) -> McConfig {
        self.file.mc.into()
    }

    pub fn tolerance(&self) -> f64 {
        self.file.run.tolerance
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn line_of_offset(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// Line of `key` inside `[section]`, or of the section header itself.
fn line_of(src: &str, section: &str, key: Option<&str>) -> Option<usize> {
    let mut current = "";
    let mut header = None;
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim();
            if current == section && header.is_none() {
                header = Some(i + 1);
            }
            continue;
        }
        if current != section {
            continue;
        }
        if let Some(k) = key {
            let lhs = line.split('=').next().unwrap_or("").trim();
            if line.contains('=') && lhs == k {
                return Some(i + 1);
            }
        }
    }
    header
}

fn bad(src: &str, section: &str, key: &str, msg: impl Into<String>) -> CliError {
    CliError::config(line_of(src, section, Some(key)), msg)
}

fn validate(f: &ScenarioFile, src: &str) -> Result<Vec<Method>, CliError> {
    let l = &f.link;
    AtmosphericLink::new(l.cn2, l.wavelength, l.distance, l.aperture)
        .map_err(|e| CliError::config(line_of(src, "link", None), e.to_string()))?;

    let s = &f.system;
    if s.m == 0 {
        return Err(bad(src, "system", "m", "m must be at least 1"));
    }
    if s.n == 0 {
        return Err(bad(src, "system", "n", "n must be at least 1"));
    }
    if !(s.eta > 0.0 && s.eta.is_finite()) {
        return Err(bad(src, "system", "eta", format!("eta must be positive, got {}", s.eta)));
    }

    let sw = &f.sweep;
    if !sw.start.is_finite() || !sw.stop.is_finite() {
        return Err(bad(src, "sweep", "start", "sweep bounds must be finite"));
    }
    if sw.steps < 2 {
        return Err(bad(src, "sweep", "steps", format!("steps must be at least 2, got {}", sw.steps)));
    }
    let physical = sw.axis.snr_axis().is_none();
    match (physical, &f.snr) {
        (true, None) => {
            return Err(CliError::config(
                line_of(src, "sweep", Some("axis")),
                format!("a sweep over {} needs an [snr] section fixing the SNR", sw.axis),
            ))
        }
        (false, Some(_)) => {
            return Err(CliError::config(
                line_of(src, "snr", None),
                "[snr] only applies to sweeps over a physical parameter",
            ))
        }
        (true, Some(snr)) if !snr.value.is_finite() => {
            return Err(bad(src, "snr", "value", "SNR must be finite"));
        }
        _ => {}
    }
    if matches!(sw.axis, SweepAxis::Cn2 | SweepAxis::Aperture | SweepAxis::Distance)
        && !(sw.start > 0.0 && sw.stop > 0.0)
    {
        return Err(bad(src, "sweep", "start", format!("{} must stay positive", sw.axis)));
    }

    let inid = f.inid.clone().unwrap_or_default();
    match s.mode {
        Mode::Iid => {
            if f.inid.is_some() {
                return Err(CliError::config(
                    line_of(src, "inid", None),
                    "[inid] is only valid with mode = \"inid\"",
                ));
            }
            if sw.axis == SweepAxis::Beta {
                return Err(bad(src, "sweep", "axis", "a beta sweep needs mode = \"inid\""));
            }
        }
        Mode::Inid => {
            let beta_axis = sw.axis == SweepAxis::Beta;
            match (&inid.beta, &inid.omega) {
                (Some(_), Some(_)) => return Err(bad(src, "inid", "omega", "give either beta or omega, not both")),
                (None, None) if !beta_axis => {
                    return Err(CliError::config(
                        line_of(src, "system", Some("mode")),
                        "mode = \"inid\" needs [inid] beta or omega",
                    ))
                }
                (_, Some(_)) if beta_axis => {
                    return Err(bad(src, "inid", "omega", "an explicit omega list cannot be swept over beta"))
                }
                _ => {}
            }
            if let Some(b) = inid.beta {
                if !(b >= 1.0 && b.is_finite()) {
                    return Err(bad(src, "inid", "beta", format!("beta must be at least 1, got {b}")));
                }
            }
            if beta_axis && !(sw.start >= 1.0 && sw.stop >= 1.0) {
                return Err(bad(src, "sweep", "start", "beta must be at least 1"));
            }
            if let Some(w) = &inid.omega {
                let links = (s.m * s.n) as usize;
                if w.len() != links {
                    return Err(bad(
                        src,
                        "inid",
                        "omega",
                        format!("omega has {} entries for {links} links", w.len()),
                    ));
                }
                if let Some(bad_w) = w.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
                    return Err(bad(src, "inid", "omega", format!("omega entries must be positive, got {bad_w}")));
                }
            }
        }
    }

    let r = &f.run;
    if !(r.tolerance > 0.0 && r.tolerance.is_finite()) {
        return Err(bad(src, "run", "tolerance", format!("tolerance must be positive, got {}", r.tolerance)));
    }
    if r.methods.is_empty() {
        return Err(bad(src, "run", "methods", "no methods selected"));
    }
    let mut methods = Vec::new();
    for name in &r.methods {
        let m = Method::from_str(name).map_err(|_| {
            bad(
                src,
                "run",
                "methods",
                format!(
                    "unknown method {name:?}; expected one of {}",
                    Method::ALL.map(|m| m.as_str()).join(", ")
                ),
            )
        })?;
        if methods.contains(&m) {
            return Err(bad(src, "run", "methods", format!("method {name} listed twice")));
        }
        methods.push(m);
    }
    // rows come out in a fixed method order whatever the file says
    methods.sort_by_key(|m| Method::ALL.iter().position(|x| x == m));

    if methods.contains(&Method::MonteCarlo) {
        McConfig::from(f.mc).validate().map_err(|e| bad(src, "mc", "samples", e.to_string()))?;
    }
    Ok(methods)
}
