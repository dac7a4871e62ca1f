//! Flat `key = value` scenario configuration.
//!
//! Lists are comma separated. `chi` may repeat, one Fourier entry per line
//! as `k:re:im`; three-dimensional wave vectors are written `kx/ky/kz`.
//! Modes are `p:spin` with `spin` one of `up`/`down`. Lines starting with
//! `#` are comments.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::modes::{MomentumGrid, ModeLabel, Spin};

pub const DEFAULT_F_LIST: [f64; 8] = [0.0, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Fock,
    Gaussian,
    Both,
}

impl Backend {
    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "fock" => Some(Backend::Fock),
            "gaussian" => Some(Backend::Gaussian),
            "both" => Some(Backend::Both),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Backend::Fock => "fock",
            Backend::Gaussian => "gaussian",
            Backend::Both => "both",
        }
    }

    pub fn uses_fock(self) -> bool {
        matches!(self, Backend::Fock | Backend::Both)
    }

    pub fn uses_gaussian(self) -> bool {
        matches!(self, Backend::Gaussian | Backend::Both)
    }
}

/// A positive-energy mode given by its physical momentum and spin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpec {
    pub momentum: [f64; 3],
    pub spin: Spin,
}

impl ModeSpec {
    pub fn label(&self, grid: &MomentumGrid) -> Result<ModeLabel> {
        Ok(ModeLabel::electron(self.spin, grid.wave_index(self.momentum)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub dim: usize,
    pub box_length: f64,
    pub n_min: Option<i32>,
    pub n_max: i32,
    pub fock_n_min: Option<i32>,
    pub fock_n_max: i32,
    pub mass: f64,
    pub charge: f64,
    pub mode1: ModeSpec,
    pub mode2: ModeSpec,
    /// Physical wave vectors and amplitudes of the gauge profile; the
    /// conjugate partners are implied.
    pub chi: Vec<([f64; 3], C64)>,
    pub omega: Option<f64>,
    pub t_final: f64,
    pub steps: Option<usize>,
    pub sample_every: usize,
    pub f_list: Vec<f64>,
    pub backend: Backend,
    pub cutoffs: Vec<i32>,
    pub drives: usize,
    pub drive_amplitude: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            box_length: 2.0 * PI,
            n_min: None,
            n_max: 2,
            fock_n_min: None,
            fock_n_max: 1,
            mass: 1.0,
            charge: 1.0,
            mode1: ModeSpec { momentum: [0.0; 3], spin: Spin::Up },
            mode2: ModeSpec { momentum: [0.0, 0.0, 1.0], spin: Spin::Up },
            chi: vec![([0.0, 0.0, 1.0], C64::new(0.05, 0.0))],
            omega: None,
            t_final: 1.0,
            steps: None,
            sample_every: 10,
            f_list: DEFAULT_F_LIST.to_vec(),
            backend: Backend::Both,
            cutoffs: vec![2, 3, 4],
            drives: 5,
            drive_amplitude: 0.5,
            seed: 0,
        }
    }
}

const KEYS: [&str; 21] = [
    "dim",
    "box_length",
    "n_min",
    "n_max",
    "fock_n_min",
    "fock_n_max",
    "mass",
    "charge",
    "mode1",
    "mode2",
    "chi",
    "omega",
    "t_final",
    "steps",
    "sample_every",
    "f_list",
    "backend",
    "cutoffs",
    "drives",
    "drive_amplitude",
    "seed",
];

fn config_error(key: &str, reason: impl Into<String>) -> Error {
    Error::Config { key: key.into(), reason: reason.into() }
}

fn parse_num<T: std::str::FromStr>(key: &str, text: &str) -> Result<T> {
    text.trim().parse().map_err(|_| config_error(key, format!("cannot parse `{text}`")))
}

fn parse_list<T: std::str::FromStr>(key: &str, text: &str) -> Result<Vec<T>> {
    text.split(',').map(|part| parse_num(key, part)).collect()
}

fn parse_vector(key: &str, text: &str, dim: usize) -> Result<[f64; 3]> {
    let parts: Vec<f64> = text.split('/').map(|p| parse_num(key, p)).collect::<Result<_>>()?;
    match (dim, parts.as_slice()) {
        (1, [z]) => Ok([0.0, 0.0, *z]),
        (3, [x, y, z]) => Ok([*x, *y, *z]),
        _ => Err(config_error(key, format!("expected {dim} component(s) in `{text}`"))),
    }
}

fn format_vector(v: [f64; 3], dim: usize) -> String {
    if dim == 1 {
        format!("{}", v[2])
    } else {
        format!("{}/{}/{}", v[0], v[1], v[2])
    }
}

fn parse_mode(key: &str, text: &str, dim: usize) -> Result<ModeSpec> {
    let (p, s) = text.rsplit_once(':').ok_or_else(|| config_error(key, "expected `momentum:spin`"))?;
    let spin = match s.trim() {
        "up" | "+" => Spin::Up,
        "down" | "-" => Spin::Down,
        other => return Err(config_error(key, format!("unknown spin `{other}`"))),
    };
    Ok(ModeSpec { momentum: parse_vector(key, p.trim(), dim)?, spin })
}

fn format_mode(m: &ModeSpec, dim: usize) -> String {
    let s = match m.spin {
        Spin::Up => "up",
        Spin::Down => "down",
    };
    format!("{}:{s}", format_vector(m.momentum, dim))
}

impl ScenarioConfig {
    pub fn momentum_grid(&self) -> Result<MomentumGrid> {
        MomentumGrid::window(self.box_length, self.dim, self.n_min.unwrap_or(-self.n_max), self.n_max)
    }

    /// Grid used by exact Fock-space runs.
    pub fn fock_grid(&self) -> Result<MomentumGrid> {
        MomentumGrid::window(self.box_length, self.dim, self.fock_n_min.unwrap_or(-self.fock_n_max), self.fock_n_max)
    }

    pub fn symmetric_grid(&self, n_max: i32) -> Result<MomentumGrid> {
        MomentumGrid::new(self.box_length, self.dim, n_max)
    }

    pub fn omega(&self) -> f64 {
        self.omega.unwrap_or(PI / self.t_final)
    }

    pub fn steps_or(&self, default: usize) -> usize {
        self.steps.unwrap_or(default)
    }

    /// Smallest `f` values above zero, ascending.
    pub fn smallest_nonzero_f(&self, count: usize) -> Vec<f64> {
        let mut fs: Vec<f64> = self.f_list.iter().copied().filter(|f| *f > 0.0).collect();
        fs.sort_by(f64::total_cmp);
        fs.dedup();
        fs.truncate(count);
        fs
    }

    /// Checks value ranges; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 3 {
            return Err(config_error("dim", format!("must be 1 or 3, got {}", self.dim)));
        }
        if !(self.box_length > 0.0 && self.box_length.is_finite()) {
            return Err(config_error("box_length", "must be positive"));
        }
        if self.n_max < 0 {
            return Err(config_error("n_max", format!("must be >= 0, got {}", self.n_max)));
        }
        if self.n_min.is_some_and(|n| n > self.n_max) {
            return Err(config_error("n_min", "must not exceed n_max"));
        }
        if self.fock_n_max < 0 {
            return Err(config_error("fock_n_max", format!("must be >= 0, got {}", self.fock_n_max)));
        }
        if self.fock_n_min.is_some_and(|n| n > self.fock_n_max) {
            return Err(config_error("fock_n_min", "must not exceed fock_n_max"));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(config_error("mass", "must be positive"));
        }
        if !self.charge.is_finite() {
            return Err(config_error("charge", "must be finite"));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(config_error("t_final", "must be positive"));
        }
        if let Some(w) = self.omega {
            if !(w.is_finite() && (1.0 - (w * self.t_final).cos()).abs() > 1e-12) {
                return Err(config_error("omega", "cos(omega * t_final) must differ from 1"));
            }
        }
        if self.steps == Some(0) {
            return Err(config_error("steps", "must be >= 1"));
        }
        if self.sample_every == 0 {
            return Err(config_error("sample_every", "must be >= 1"));
        }
        if self.f_list.is_empty() || self.f_list.iter().any(|f| !f.is_finite()) {
            return Err(config_error("f_list", "must be a nonempty list of finite numbers"));
        }
        if self.cutoffs.is_empty() || self.cutoffs.iter().any(|c| *c < 0) {
            return Err(config_error("cutoffs", "must be a nonempty list of nonnegative integers"));
        }
        if self.drives == 0 {
            return Err(config_error("drives", "must be >= 1"));
        }
        if !self.drive_amplitude.is_finite() || self.drive_amplitude < 0.0 {
            return Err(config_error("drive_amplitude", "must be nonnegative"));
        }
        let grid = self.momentum_grid().map_err(|e| config_error("n_max", e.to_string()))?;
        for (key, mode) in [("mode1", &self.mode1), ("mode2", &self.mode2)] {
            let label = mode.label(&grid).map_err(|e| config_error(key, e.to_string()))?;
            if !grid.contains(label.n) {
                return Err(config_error(key, "momentum lies outside the grid"));
            }
        }
        if self.mode1 == self.mode2 {
            return Err(config_error("mode2", "must differ from mode1"));
        }
        for (k, _) in &self.chi {
            grid.wave_index(*k).map_err(|e| config_error("chi", e.to_string()))?;
        }
        Ok(())
    }

    /// Canonical text form; parsing it yields the same configuration.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let join = |v: &[String]| v.join(",");
        let _ = writeln!(out, "dim = {}", self.dim);
        let _ = writeln!(out, "box_length = {}", self.box_length);
        if let Some(n) = self.n_min {
            let _ = writeln!(out, "n_min = {n}");
        }
        let _ = writeln!(out, "n_max = {}", self.n_max);
        if let Some(n) = self.fock_n_min {
            let _ = writeln!(out, "fock_n_min = {n}");
        }
        let _ = writeln!(out, "fock_n_max = {}", self.fock_n_max);
        let _ = writeln!(out, "mass = {}", self.mass);
        let _ = writeln!(out, "charge = {}", self.charge);
        let _ = writeln!(out, "mode1 = {}", format_mode(&self.mode1, self.dim));
        let _ = writeln!(out, "mode2 = {}", format_mode(&self.mode2, self.dim));
        if self.chi.is_empty() {
            let _ = writeln!(out, "chi = none");
        }
        for (k, v) in &self.chi {
            let _ = writeln!(out, "chi = {}:{}:{}", format_vector(*k, self.dim), v.re, v.im);
        }
        if let Some(w) = self.omega {
            let _ = writeln!(out, "omega = {w}");
        }
        let _ = writeln!(out, "t_final = {}", self.t_final);
        if let Some(s) = self.steps {
            let _ = writeln!(out, "steps = {s}");
        }
        let _ = writeln!(out, "sample_every = {}", self.sample_every);
        let _ = writeln!(out, "f_list = {}", join(&self.f_list.iter().map(|f| f.to_string()).collect::<Vec<_>>()));
        let _ = writeln!(out, "backend = {}", self.backend.name());
        let _ = writeln!(out, "cutoffs = {}", join(&self.cutoffs.iter().map(|c| c.to_string()).collect::<Vec<_>>()));
        let _ = writeln!(out, "drives = {}", self.drives);
        let _ = writeln!(out, "drive_amplitude = {}", self.drive_amplitude);
        let _ = writeln!(out, "seed = {}", self.seed);
        out
    }

    /// Key-value view for reports.
    pub fn params(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        let mut chi = Vec::new();
        for line in self.to_text().lines() {
            if let Some((k, v)) = line.split_once(" = ") {
                if k == "chi" {
                    chi.push(v.to_string());
                } else {
                    out.insert(k.to_string(), v.to_string());
                }
            }
        }
        out.insert("chi".into(), chi.join(";"));
        out
    }
}

/// Parses configuration text on top of the defaults and validates it.
pub fn parse_config_str(text: &str) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::default();
    let mut entries: Vec<(String, String)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| config_error(&format!("line {}", lineno + 1), "expected `key = value`"))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(config_error(key, "unknown key"));
        }
        entries.push((key.to_string(), value.trim().to_string()));
    }
    // dimension first, since vector-valued keys depend on it
    if let Some((_, v)) = entries.iter().rev().find(|(k, _)| k == "dim") {
        cfg.dim = parse_num("dim", v)?;
    }
    let mut chi: Option<Vec<([f64; 3], C64)>> = None;
    for (key, value) in &entries {
        let (key, value) = (key.as_str(), value.as_str());
        match key {
            "dim" => {}
            "box_length" => cfg.box_length = parse_num(key, value)?,
            "n_min" => cfg.n_min = Some(parse_num(key, value)?),
            "n_max" => cfg.n_max = parse_num(key, value)?,
            "fock_n_min" => cfg.fock_n_min = Some(parse_num(key, value)?),
            "fock_n_max" => cfg.fock_n_max = parse_num(key, value)?,
            "mass" => cfg.mass = parse_num(key, value)?,
            "charge" => cfg.charge = parse_num(key, value)?,
            "mode1" => cfg.mode1 = parse_mode(key, value, cfg.dim)?,
            "mode2" => cfg.mode2 = parse_mode(key, value, cfg.dim)?,
            "chi" => {
                let list = chi.get_or_insert_with(Vec::new);
                if value == "none" {
                    continue;
                }
                let parts: Vec<&str> = value.split(':').collect();
                let [k, re, im] = parts.as_slice() else {
                    return Err(config_error(key, format!("expected `k:re:im`, got `{value}`")));
                };
                list.push((parse_vector(key, k, cfg.dim)?, C64::new(parse_num(key, re)?, parse_num(key, im)?)));
            }
            "omega" => cfg.omega = Some(parse_num(key, value)?),
            "t_final" => cfg.t_final = parse_num(key, value)?,
            "steps" => cfg.steps = Some(parse_num(key, value)?),
            "sample_every" => cfg.sample_every = parse_num(key, value)?,
            "f_list" => cfg.f_list = parse_list(key, value)?,
            "backend" => cfg.backend = Backend::parse(value).ok_or_else(|| config_error(key, format!("unknown backend `{value}`")))?,
            "cutoffs" => cfg.cutoffs = parse_list(key, value)?,
            "drives" => cfg.drives = parse_num(key, value)?,
            "drive_amplitude" => cfg.drive_amplitude = parse_num(key, value)?,
            "seed" => cfg.seed = parse_num(key, value)?,
            _ => unreachable!("keys are checked against KEYS"),
        }
    }
    if let Some(chi) = chi {
        cfg.chi = chi;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| config_error("config", format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(parse_config_str("").unwrap(), ScenarioConfig::default());
        assert_eq!(parse_config_str("# only a comment\n\n").unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn comments_are_ignored() {
        let cfg = parse_config_str("# header\nsteps = 20 # short run\n\n  # indented\nseed = 4").unwrap();
        assert_eq!((cfg.steps, cfg.seed), (Some(20), 4));
    }

    #[test]
    fn three_dimensional_vectors() {
        let cfg = parse_config_str("dim = 3\nmode2 = 0/0/1:down\nchi = 1/0/0:0.1:0").unwrap();
        assert_eq!(cfg.mode2, ModeSpec { momentum: [0.0, 0.0, 1.0], spin: Spin::Down });
        assert_eq!(cfg.chi, vec![([1.0, 0.0, 0.0], C64::new(0.1, 0.0))]);
        assert!(parse_config_str("dim = 3\nmode2 = 1:up").unwrap_err().to_string().contains("mode2"));
    }

    #[test]
    fn errors_name_the_key() {
        let err = parse_config_str("n_max = -1").unwrap_err();
        assert_eq!(err, Error::Config { key: "n_max".into(), reason: "must be >= 0, got -1".into() });
        assert!(matches!(parse_config_str("bogus = 1"), Err(Error::Config { key, .. }) if key == "bogus"));
        assert!(matches!(parse_config_str("mass = heavy"), Err(Error::Config { key, .. }) if key == "mass"));
        assert!(matches!(parse_config_str("chi = 0.5:1:0"), Err(Error::Config { key, .. }) if key == "chi"));
        assert!(matches!(parse_config_str("mode2 = 0:up"), Err(Error::Config { key, .. }) if key == "mode2"));
        assert!(matches!(parse_config_str("backend = gpu"), Err(Error::Config { key, .. }) if key == "backend"));
    }

    #[test]
    fn explicit_values() {
        let cfg = parse_config_str("n_min = 0\nn_max = 1\nchi = 1:0.1:0.2\nchi = -2:0.3:0\nf_list = 0, 0.5\nmode2 = 1:down\nbackend = fock").unwrap();
        assert_eq!(cfg.n_min, Some(0));
        assert_eq!(cfg.chi, vec![([0.0, 0.0, 1.0], C64::new(0.1, 0.2)), ([0.0, 0.0, -2.0], C64::new(0.3, 0.0))]);
        assert_eq!(cfg.f_list, vec![0.0, 0.5]);
        assert_eq!(cfg.mode2.spin, Spin::Down);
        assert_eq!(cfg.backend, Backend::Fock);
        assert!(parse_config_str("chi = none").unwrap().chi.is_empty());
        let three = parse_config_str("dim = 3\nn_max = 1\nmode2 = 1/0/0:up\nchi = 0/1/0:0.1:0").unwrap();
        assert_eq!(three.mode2.momentum, [1.0, 0.0, 0.0]);
    }

    #[test]
    fn serialization_is_idempotent() {
        let text = "n_max = 3\nomega = 2.5\nchi = 1:0.1:-0.2\nsteps = 77\nseed = 9\nfock_n_min = 0";
        let once = parse_config_str(text).unwrap();
        let again = parse_config_str(&once.to_text()).unwrap();
        assert_eq!(once, again);
        assert_eq!(once.to_text(), again.to_text());
        assert_eq!(parse_config_str("chi = none").unwrap().to_text().matches("chi = none").count(), 1);
    }

    proptest! {
        #[test]
        fn prop_round_trip(n_max in 1i32..5, mass in 0.1f64..4.0, amp in -1.0f64..1.0, steps in 1usize..2000, t in 0.1f64..3.0) {
            let text = format!("n_max = {n_max}\nmass = {mass}\nchi = 1:{amp}:0\nsteps = {steps}\nt_final = {t}");
            let cfg = parse_config_str(&text).unwrap();
            let back = parse_config_str(&cfg.to_text()).unwrap();
            prop_assert_eq!(&cfg, &back);
        }
    }
}
