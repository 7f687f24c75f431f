//! Line-oriented run configuration.
//!
//! ```text
//! # comment
//! [section]
//! key = value
//! ```
//!
//! Every key is optional and has a documented default; unknown sections or keys,
//! repeated keys and unparsable values are errors carrying the line number.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use dskg_core::blowup::BModel;
use dskg_core::params::{derive_constants, validate_regime};
use dskg_core::spectral::Grid;
use dskg_core::{Equation, MassKind, PhysicalParams};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}` in [{section}]")]
    UnknownKey { line: usize, section: String, key: String },
    #[error("line {line}: unknown section [{section}]")]
    UnknownSection { line: usize, section: String },
    #[error("line {line}: bad value for `{key}`: {message}")]
    Value { line: usize, key: String, message: String },
    #[error("constraint violated: {0}")]
    Constraint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Experiment {
    Evolve,
    BlowupOde,
    BlowupPde,
    Lifespan,
    Scatter,
    Modes,
    EnergyAudit,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Evolve,
        Experiment::BlowupOde,
        Experiment::BlowupPde,
        Experiment::Lifespan,
        Experiment::Scatter,
        Experiment::Modes,
        Experiment::EnergyAudit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Evolve => "evolve",
            Experiment::BlowupOde => "blowup_ode",
            Experiment::BlowupPde => "blowup_pde",
            Experiment::Lifespan => "lifespan",
            Experiment::Scatter => "scatter",
            Experiment::Modes => "modes",
            Experiment::EnergyAudit => "energy_audit",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.replace('-', "_");
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == norm)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataKind {
    Gaussian { amplitude: f64, width: f64, center: [f64; 3] },
    Mode { k: [i64; 3], amplitude: f64 },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub kind: DataKind,
    /// `u₁ = velocity·profile`; ignored for file data.
    pub velocity: f64,
    /// Amplitude of seeded uniform noise added to `u₀`.
    pub noise: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Direct,
    Picard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub experiment: Experiment,
    pub seed: u64,
    pub params: PhysicalParams,
    pub points: usize,
    pub length: f64,
    pub t_end: f64,
    pub dt: f64,
    pub tol: f64,
    pub save_every: usize,
    pub data: DataConfig,
    pub directory: Option<PathBuf>,
    pub timeseries: bool,
    pub snapshots: bool,
    pub snapshot_times: Vec<f64>,
    pub method: Method,
    pub equation: Equation,
    pub mu: f64,
    pub dealias: bool,
    pub max_iter: usize,
    pub w0: f64,
    pub w1: Option<f64>,
    pub r_support0: f64,
    pub b_model: BModel,
    pub threshold: f64,
    pub mu0: f64,
    pub d_mu0: Option<f64>,
    pub big_c: f64,
    pub c0: f64,
    pub lifespan_q: Option<f64>,
    pub lifespan_r0: Option<f64>,
    pub t_cut: Option<f64>,
    pub tail_tol: f64,
    pub ksq: Vec<f64>,
    /// Regime notes recorded in the run manifest.
    pub warnings: Vec<String>,
}

impl Config {
    pub fn defaults(experiment: Experiment) -> Self {
        let mut cfg = Config {
            experiment,
            seed: 0,
            params: PhysicalParams::default(),
            points: 64,
            length: 20.0,
            t_end: 1.0,
            dt: 0.01,
            tol: 1e-12,
            save_every: 1,
            data: DataConfig {
                kind: DataKind::Gaussian {
                    amplitude: 0.1,
                    width: 1.0,
                    center: [0.0; 3],
                },
                velocity: 0.0,
                noise: 0.0,
            },
            directory: None,
            timeseries: true,
            snapshots: true,
            snapshot_times: Vec::new(),
            method: Method::Direct,
            equation: Equation::ShiftedCubic,
            mu: 0.0,
            dealias: false,
            max_iter: 60,
            w0: 1.0,
            w1: None,
            r_support0: 1.0,
            b_model: BModel::Exact,
            threshold: 1e12,
            mu0: 0.0,
            d_mu0: None,
            big_c: 1.0,
            c0: 1.0,
            lifespan_q: None,
            lifespan_r0: None,
            t_cut: None,
            tail_tol: 1e-3,
            ksq: vec![0.0, 1.0, 4.0, 16.0],
            warnings: Vec::new(),
        };
        match experiment {
            Experiment::BlowupOde | Experiment::BlowupPde => {
                cfg.params.hubble = 0.5;
                cfg.params.p = 2.0;
                cfg.params.mass_kind = MassKind::Imaginary;
                cfg.equation = Equation::GaugeVariantBlowup;
                cfg.t_end = 100.0;
                if experiment == Experiment::BlowupPde {
                    cfg.points = 32;
                    cfg.t_end = 10.0;
                    cfg.dt = 1e-3;
                    cfg.save_every = 10;
                    cfg.data.kind = DataKind::Gaussian {
                        amplitude: 1.0,
                        width: 1.0,
                        center: [0.0; 3],
                    };
                    cfg.data.velocity = 1.5;
                }
            }
            Experiment::Lifespan => {
                cfg.params.n = 3;
                cfg.params.hubble = -0.5;
                cfg.points = 16;
                cfg.length = 10.0;
                cfg.d_mu0 = Some(0.1);
                cfg.lifespan_q = Some(1.0);
                cfg.lifespan_r0 = Some(1.0);
            }
            Experiment::Scatter => {
                cfg.params.hubble = 0.5;
                cfg.method = Method::Picard;
                cfg.t_end = 16.0;
                cfg.dt = 0.04;
                cfg.points = 32;
                cfg.length = 16.0;
                cfg.data.kind = DataKind::Gaussian {
                    amplitude: 0.05,
                    width: 1.0,
                    center: [0.0; 3],
                };
            }
            Experiment::Modes => {
                cfg.params.hubble = 0.5;
                cfg.t_end = 10.0;
                cfg.dt = 0.05;
            }
            Experiment::EnergyAudit => {
                cfg.params.hubble = 0.3;
                cfg.t_end = 2.0;
                cfg.dt = 0.002;
            }
            Experiment::Evolve => {}
        }
        cfg
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.params.n, self.points, self.length).expect("validated at load time")
    }

    /// Checks every field against the preconditions of the module that will consume it.
    pub fn validate(&mut self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Constraint(m));
        self.params.validate().map_err(|e| ConfigError::Constraint(e.to_string()))?;
        if !(1..=3).contains(&self.params.n) {
            return bad(format!("grid dimension n must be 1, 2 or 3, got {}", self.params.n));
        }
        Grid::new(self.params.n, self.points, self.length).map_err(|e| ConfigError::Constraint(e.to_string()))?;
        if !(self.t_end > 0.0 && self.dt > 0.0) {
            return bad(format!("need T > 0 and dt > 0, got T = {}, dt = {}", self.t_end, self.dt));
        }
        let steps = (self.t_end / self.dt).round();
        if (steps * self.dt - self.t_end).abs() > 1e-9 * self.t_end {
            return bad(format!("T = {} is not a multiple of dt = {}", self.t_end, self.dt));
        }
        if self.save_every == 0 || (steps as usize) % self.save_every != 0 {
            return bad(format!("save_every = {} must divide T/dt = {steps}", self.save_every));
        }
        if !(self.tol > 0.0) || !(self.tail_tol > 0.0) || !(self.threshold > 1.0) {
            return bad("tolerances must be positive and the divergence threshold above 1".into());
        }
        if !(self.mu >= 0.0) {
            return bad(format!("Sobolev order mu must be non-negative, got {}", self.mu));
        }
        if let DataKind::File(path) = &self.data.kind {
            if !path.is_file() {
                return bad(format!("data file {} does not exist", path.display()));
            }
        }
        if let DataKind::Gaussian { width, .. } = self.data.kind {
            if !(width > 0.0) {
                return bad(format!("gaussian width must be positive, got {width}"));
            }
        }
        if self.snapshot_times.iter().any(|&t| !(0.0..=self.t_end).contains(&t)) {
            return bad("snapshot times must lie in [0, T]".into());
        }
        let derived = derive_constants(&self.params).map_err(|e| ConfigError::Constraint(e.to_string()))?;
        let report = validate_regime(&self.params);
        match self.experiment {
            Experiment::BlowupOde | Experiment::BlowupPde => {
                if derived.q > 0.0 {
                    return bad(format!("blow-up experiments need Q <= 0, got Q = {}", derived.q));
                }
                if !(self.w0 >= 0.0) || self.w1.is_some_and(|w| !(w > 0.0)) {
                    return bad("blow-up data needs w0 >= 0 and w1 > 0".into());
                }
                if !(self.r_support0 > 0.0) {
                    return bad("support radius must be positive".into());
                }
            }
            Experiment::Lifespan => {
                if !(self.params.hubble < 0.0) {
                    return bad(format!("lifespan bound needs H < 0, got {}", self.params.hubble));
                }
                let n = self.params.n as f64;
                let lo = (0.5 * (n - 3.0)).max(0.0);
                if !(self.mu0 >= lo && self.mu0 < 0.5 * n) {
                    return bad(format!("mu0 = {} outside [{lo}, {})", self.mu0, 0.5 * n));
                }
                let q = self.lifespan_q.unwrap_or(derived.q);
                if !(q > 0.0) {
                    return bad(format!("lifespan bound needs Q > 0, got {q}"));
                }
                if self.d_mu0.is_some_and(|d| !(d >= 0.0)) || !(self.big_c > 0.0 && self.c0 > 0.0) {
                    return bad("lifespan constants must be positive".into());
                }
                if self.lifespan_r0.is_some_and(|r| !(r >= 0.0)) {
                    return bad("r0 must be non-negative".into());
                }
            }
            Experiment::Scatter => {
                if !(derived.q > 0.0) {
                    return bad(format!("scattering needs Q > 0, got {}", derived.q));
                }
                if let Some(t) = self.t_cut {
                    if !(t > 0.0 && t <= self.t_end) {
                        return bad(format!("t_cut = {t} must lie in (0, T]"));
                    }
                }
            }
            Experiment::Modes => {
                if self.ksq.iter().any(|&k| !(k >= 0.0)) {
                    return bad("ksq values must be non-negative".into());
                }
                if derived.q < 0.0 {
                    return bad(format!("mode bounds need Q >= 0, got {}", derived.q));
                }
            }
            Experiment::Evolve | Experiment::EnergyAudit => {
                if self.method == Method::Picard && !(derived.q > 0.0) {
                    return bad(format!("Picard iteration needs Q > 0, got {}", derived.q));
                }
                if self.experiment == Experiment::EnergyAudit && derived.q < 0.0 {
                    return bad(format!("energy audit needs Q >= 0, got {}", derived.q));
                }
                if !report.expanding_window && !report.contracting_window {
                    self.warnings.push(format!(
                        "H = {} lies outside both existence windows (|H| < {})",
                        self.params.hubble,
                        self.params.hubble_threshold()
                    ));
                }
            }
        }
        Ok(())
    }
}

fn parse_num<T: FromStr>(v: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| e.to_string())
}

fn parse_list<T: FromStr>(v: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| parse_num(s.trim())).collect()
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got `{v}`")),
    }
}

fn parse_triple<T: FromStr + Copy + Default>(v: &str) -> Result<[T; 3], String>
where
    T::Err: fmt::Display,
{
    let items: Vec<T> = parse_list(v)?;
    if items.is_empty() || items.len() > 3 {
        return Err(format!("expected 1 to 3 comma-separated values, got `{v}`"));
    }
    let mut out = [T::default(); 3];
    out[..items.len()].copy_from_slice(&items);
    Ok(out)
}

fn parse_equation(v: &str) -> Result<Equation, String> {
    [
        Equation::ShiftedCubic,
        Equation::GaugeVariantBlowup,
        Equation::Unshifted,
        Equation::ShiftedPhi,
    ]
    .into_iter()
    .find(|e| e.name() == v)
    .ok_or_else(|| format!("unknown equation `{v}`"))
}

/// Raw gaussian/mode settings collected before the kind is known.
#[derive(Default)]
struct DataDraft {
    kind: Option<String>,
    amplitude: Option<f64>,
    width: Option<f64>,
    center: Option<[f64; 3]>,
    k: Option<[i64; 3]>,
    path: Option<PathBuf>,
}

/// Parses config text for `experiment`; a `[run] experiment` entry, if present, must agree.
pub fn parse_config(text: &str, experiment: Option<Experiment>) -> Result<Config, ConfigError> {
    let mut section = String::new();
    let mut seen = BTreeSet::new();
    let mut entries = Vec::new();
    let mut declared = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("unterminated section header `{content}`"),
            })?;
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::UnknownSection {
                    line,
                    section: name.to_string(),
                });
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if section.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                message: format!("key `{key}` appears before any [section]"),
            });
        }
        if !seen.insert((section.clone(), key.to_string())) {
            return Err(ConfigError::Syntax {
                line,
                message: format!("duplicate key `{key}` in [{section}]"),
            });
        }
        if section == "run" && key == "experiment" {
            declared = Some(value.parse::<Experiment>().map_err(|message| ConfigError::Value {
                line,
                key: key.into(),
                message,
            })?);
        }
        entries.push((line, section.clone(), key.to_string(), value.to_string()));
    }
    let experiment = match (experiment, declared) {
        (Some(a), Some(b)) if a != b => {
            return Err(ConfigError::Constraint(format!(
                "config declares experiment {b} but {a} was requested"
            )))
        }
        (Some(a), _) => a,
        (None, Some(b)) => b,
        (None, None) => return Err(ConfigError::Constraint("no experiment given".into())),
    };
    let mut cfg = Config::defaults(experiment);
    let mut draft = DataDraft::default();
    for (line, section, key, value) in entries {
        apply(&mut cfg, &mut draft, &section, &key, &value).map_err(|e| match e {
            Applied::Unknown => ConfigError::UnknownKey {
                line,
                section: section.clone(),
                key: key.clone(),
            },
            Applied::Bad(message) => ConfigError::Value {
                line,
                key: key.clone(),
                message,
            },
        })?;
    }
    finish_data(&mut cfg, draft)?;
    cfg.validate()?;
    Ok(cfg)
}

const SECTIONS: [&str; 11] = [
    "run", "params", "grid", "time", "data", "output", "solver", "blowup", "lifespan", "scatter", "modes",
];

enum Applied {
    Unknown,
    Bad(String),
}

impl From<String> for Applied {
    fn from(s: String) -> Self {
        Applied::Bad(s)
    }
}

fn apply(cfg: &mut Config, draft: &mut DataDraft, section: &str, key: &str, v: &str) -> Result<(), Applied> {
    let p = &mut cfg.params;
    match (section, key) {
        ("run", "experiment") => {}
        ("run", "seed") => cfg.seed = parse_num(v)?,
        ("params", "c") => p.c = parse_num(v)?,
        ("params", "hbar") => p.hbar = parse_num(v)?,
        ("params", "H") => p.hubble = parse_num(v)?,
        ("params", "mass") => p.mass = parse_num(v)?,
        ("params", "mass_kind") => {
            p.mass_kind = match v {
                "real" => MassKind::Real,
                "imaginary" => MassKind::Imaginary,
                "zero" => MassKind::Zero,
                _ => return Err(Applied::Bad(format!("expected real, imaginary or zero, got `{v}`"))),
            }
        }
        ("params", "lambda") => p.lambda = parse_num(v)?,
        ("params", "p") => p.p = parse_num(v)?,
        ("grid", "n") => p.n = parse_num(v)?,
        ("grid", "N") => cfg.points = parse_num(v)?,
        ("grid", "L") => cfg.length = parse_num(v)?,
        ("time", "T") => cfg.t_end = parse_num(v)?,
        ("time", "dt") => cfg.dt = parse_num(v)?,
        ("time", "tol") => cfg.tol = parse_num(v)?,
        ("time", "save_every") => cfg.save_every = parse_num(v)?,
        ("data", "kind") => draft.kind = Some(v.to_string()),
        ("data", "amplitude") => draft.amplitude = Some(parse_num(v)?),
        ("data", "width") => draft.width = Some(parse_num(v)?),
        ("data", "center") => draft.center = Some(parse_triple(v)?),
        ("data", "k") => draft.k = Some(parse_triple(v)?),
        ("data", "path") => draft.path = Some(PathBuf::from(v)),
        ("data", "velocity") => cfg.data.velocity = parse_num(v)?,
        ("data", "noise") => cfg.data.noise = parse_num(v)?,
        ("output", "directory") => cfg.directory = Some(PathBuf::from(v)),
        ("output", "formats") => {
            let formats: Vec<&str> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            if let Some(f) = formats.iter().find(|f| !matches!(**f, "timeseries" | "snapshots")) {
                return Err(Applied::Bad(format!("unknown format `{f}`")));
            }
            cfg.timeseries = formats.contains(&"timeseries");
            cfg.snapshots = formats.contains(&"snapshots");
        }
        ("output", "snapshot_times") => cfg.snapshot_times = parse_list(v)?,
        ("solver", "method") => {
            cfg.method = match v {
                "direct" => Method::Direct,
                "picard" => Method::Picard,
                _ => return Err(Applied::Bad(format!("expected direct or picard, got `{v}`"))),
            }
        }
        ("solver", "equation") => cfg.equation = parse_equation(v)?,
        ("solver", "mu") => cfg.mu = parse_num(v)?,
        ("solver", "dealias") => cfg.dealias = parse_bool(v)?,
        ("solver", "max_iter") => cfg.max_iter = parse_num(v)?,
        ("blowup", "w0") => cfg.w0 = parse_num(v)?,
        ("blowup", "w1") => cfg.w1 = Some(parse_num(v)?),
        ("blowup", "r_support0") => cfg.r_support0 = parse_num(v)?,
        ("blowup", "b_model") => {
            cfg.b_model = match v {
                "exact" => BModel::Exact,
                "floor" => BModel::Floor,
                "zero" => BModel::Zero,
                _ => return Err(Applied::Bad(format!("expected exact, floor or zero, got `{v}`"))),
            }
        }
        ("blowup", "threshold") => cfg.threshold = parse_num(v)?,
        ("lifespan", "mu0") => cfg.mu0 = parse_num(v)?,
        ("lifespan", "D") => cfg.d_mu0 = Some(parse_num(v)?),
        ("lifespan", "C") => cfg.big_c = parse_num(v)?,
        ("lifespan", "C0") => cfg.c0 = parse_num(v)?,
        ("lifespan", "Q") => cfg.lifespan_q = Some(parse_num(v)?),
        ("lifespan", "r0") => cfg.lifespan_r0 = Some(parse_num(v)?),
        ("scatter", "t_cut") => cfg.t_cut = Some(parse_num(v)?),
        ("scatter", "tail_tol") => cfg.tail_tol = parse_num(v)?,
        ("modes", "ksq") => cfg.ksq = parse_list(v)?,
        _ => return Err(Applied::Unknown),
    }
    Ok(())
}

fn finish_data(cfg: &mut Config, draft: DataDraft) -> Result<(), ConfigError> {
    let current = cfg.data.kind.clone();
    let kind = draft.kind.clone().unwrap_or_else(|| match current {
        DataKind::Gaussian { .. } => "gaussian".into(),
        DataKind::Mode { .. } => "mode".into(),
        DataKind::File(_) => "file".into(),
    });
    let (def_amp, def_width, def_center) = match current {
        DataKind::Gaussian {
            amplitude,
            width,
            center,
        } => (amplitude, width, center),
        _ => (0.1, 1.0, [0.0; 3]),
    };
    let unused = |name: &str, set: bool| -> Result<(), ConfigError> {
        if set {
            Err(ConfigError::Constraint(format!("`{name}` does not apply to {kind} data")))
        } else {
            Ok(())
        }
    };
    cfg.data.kind = match kind.as_str() {
        "gaussian" => {
            unused("k", draft.k.is_some())?;
            unused("path", draft.path.is_some())?;
            DataKind::Gaussian {
                amplitude: draft.amplitude.unwrap_or(def_amp),
                width: draft.width.unwrap_or(def_width),
                center: draft.center.unwrap_or(def_center),
            }
        }
        "mode" => {
            unused("width", draft.width.is_some())?;
            unused("center", draft.center.is_some())?;
            unused("path", draft.path.is_some())?;
            DataKind::Mode {
                k: draft.k.unwrap_or([1, 0, 0]),
                amplitude: draft.amplitude.unwrap_or(def_amp),
            }
        }
        "file" => {
            unused("amplitude", draft.amplitude.is_some())?;
            unused("k", draft.k.is_some())?;
            let path = draft
                .path
                .ok_or_else(|| ConfigError::Constraint("file data needs a `path`".into()))?;
            DataKind::File(path)
        }
        other => return Err(ConfigError::Constraint(format!("unknown data kind `{other}`"))),
    };
    Ok(())
}

fn list<T: fmt::Debug>(xs: &[T]) -> String {
    xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

impl Config {
    /// Canonical text form; parsing it back yields the same configuration.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let mut line = |l: String| {
            s.push_str(&l);
            s.push('\n');
        };
        line("[run]".into());
        line(format!("experiment = {}", self.experiment));
        line(format!("seed = {}", self.seed));
        line("[params]".into());
        line(format!("c = {:?}", p.c));
        line(format!("hbar = {:?}", p.hbar));
        line(format!("H = {:?}", p.hubble));
        line(format!("mass = {:?}", p.mass));
        let kind = match p.mass_kind {
            MassKind::Real => "real",
            MassKind::Imaginary => "imaginary",
            MassKind::Zero => "zero",
        };
        line(format!("mass_kind = {kind}"));
        line(format!("lambda = {:?}", p.lambda));
        line(format!("p = {:?}", p.p));
        line("[grid]".into());
        line(format!("n = {}", p.n));
        line(format!("N = {}", self.points));
        line(format!("L = {:?}", self.length));
        line("[time]".into());
        line(format!("T = {:?}", self.t_end));
        line(format!("dt = {:?}", self.dt));
        line(format!("tol = {:?}", self.tol));
        line(format!("save_every = {}", self.save_every));
        line("[data]".into());
        match &self.data.kind {
            DataKind::Gaussian {
                amplitude,
                width,
                center,
            } => {
                line("kind = gaussian".into());
                line(format!("amplitude = {amplitude:?}"));
                line(format!("width = {width:?}"));
                line(format!("center = {}", list(center)));
            }
            DataKind::Mode { k, amplitude } => {
                line("kind = mode".into());
                line(format!("amplitude = {amplitude:?}"));
                line(format!("k = {}", list(k)));
            }
            DataKind::File(path) => {
                line("kind = file".into());
                line(format!("path = {}", path.display()));
            }
        }
        line(format!("velocity = {:?}", self.data.velocity));
        line(format!("noise = {:?}", self.data.noise));
        line("[output]".into());
        if let Some(dir) = &self.directory {
            line(format!("directory = {}", dir.display()));
        }
        let formats: Vec<&str> = [(self.timeseries, "timeseries"), (self.snapshots, "snapshots")]
            .into_iter()
            .filter(|f| f.0)
            .map(|f| f.1)
            .collect();
        line(format!("formats = {}", formats.join(", ")));
        line(format!("snapshot_times = {}", list(&self.snapshot_times)));
        line("[solver]".into());
        let method = match self.method {
            Method::Direct => "direct",
            Method::Picard => "picard",
        };
        line(format!("method = {method}"));
        line(format!("equation = {}", self.equation.name()));
        line(format!("mu = {:?}", self.mu));
        line(format!("dealias = {}", self.dealias));
        line(format!("max_iter = {}", self.max_iter));
        line("[blowup]".into());
        line(format!("w0 = {:?}", self.w0));
        if let Some(w1) = self.w1 {
            line(format!("w1 = {w1:?}"));
        }
        line(format!("r_support0 = {:?}", self.r_support0));
        let model = match self.b_model {
            BModel::Exact => "exact",
            BModel::Floor => "floor",
            BModel::Zero => "zero",
        };
        line(format!("b_model = {model}"));
        line(format!("threshold = {:?}", self.threshold));
        line("[lifespan]".into());
        line(format!("mu0 = {:?}", self.mu0));
        if let Some(d) = self.d_mu0 {
            line(format!("D = {d:?}"));
        }
        line(format!("C = {:?}", self.big_c));
        line(format!("C0 = {:?}", self.c0));
        if let Some(q) = self.lifespan_q {
            line(format!("Q = {q:?}"));
        }
        if let Some(r) = self.lifespan_r0 {
            line(format!("r0 = {r:?}"));
        }
        line("[scatter]".into());
        if let Some(t) = self.t_cut {
            line(format!("t_cut = {t:?}"));
        }
        line(format!("tail_tol = {:?}", self.tail_tol));
        line("[modes]".into());
        line(format!("ksq = {}", list(&self.ksq)));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = parse_config("[run]\nexperiment = evolve\n", None).unwrap();
        assert_eq!(cfg.experiment, Experiment::Evolve);
        assert_eq!(cfg.params, PhysicalParams::default());
        assert_eq!(cfg.points, 64);
        assert!(cfg.warnings.is_empty());
    }

    #[test]
    fn misspelled_key_is_named() {
        let err = parse_config("[params]\nlamda = 2\n", Some(Experiment::Evolve)).unwrap_err();
        assert!(err.to_string().contains("lamda"), "{err}");
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        for (text, line) in [
            ("[params]\nc 1\n", 2),
            ("\n\n[params\n", 3),
            ("c = 1\n", 1),
            ("[params]\nc = 1\nc = 2\n", 3),
            ("[nope]\n", 1),
            ("[params]\nc = abc\n", 2),
        ] {
            let err = parse_config(text, Some(Experiment::Evolve)).unwrap_err();
            assert!(err.to_string().contains(&format!("line {line}")), "{text:?}: {err}");
        }
    }

    #[test]
    fn regime_warning_outside_windows() {
        let cfg = parse_config("[params]\nH = 3.5\nmass = 1\n", Some(Experiment::Evolve)).unwrap();
        assert_eq!(cfg.warnings.len(), 1);
    }

    #[test]
    fn constraints_are_checked() {
        for text in [
            "[params]\nc = -1\n",
            "[grid]\nN = 7\n",
            "[time]\nT = 1\ndt = 0.3\n",
            "[data]\nkind = file\npath = /nonexistent/file.dskg\n",
            "[data]\nkind = mode\nwidth = 2\n",
            "[output]\nsnapshot_times = 5\n",
        ] {
            assert!(
                matches!(parse_config(text, Some(Experiment::Evolve)), Err(ConfigError::Constraint(_))),
                "{text:?}"
            );
        }
    }

    #[test]
    fn experiment_must_match() {
        let text = "[run]\nexperiment = modes\n";
        assert!(parse_config(text, Some(Experiment::Evolve)).is_err());
        assert!(parse_config(text, Some(Experiment::Modes)).is_ok());
    }

    #[test]
    fn presets_are_valid() {
        for e in Experiment::ALL {
            let mut cfg = Config::defaults(e);
            cfg.validate().unwrap_or_else(|err| panic!("{e}: {err}"));
        }
    }

    #[test]
    fn full_config_round_trip() {
        let text = "\
# everything
[run]
experiment = energy-audit
seed = 9
[params]
c = 1.5
hbar = 1
H = 0.2
mass = 0.8
mass_kind = real
lambda = 2   # trailing comment
p = 3
[grid]
n = 2
N = 16
L = 8
[time]
T = 0.5
dt = 0.005
save_every = 10
[data]
kind = mode
k = 1, 2
amplitude = 0.3
velocity = 0.1
noise = 0.01
[output]
formats = timeseries
snapshot_times = 0, 0.25
[solver]
equation = shifted_cubic
mu = 0.5
dealias = yes
";
        let cfg = parse_config(text, None).unwrap();
        assert_eq!(cfg.experiment, Experiment::EnergyAudit);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.params.n, 2);
        assert_eq!(cfg.params.lambda, 2.0);
        assert_eq!(cfg.data.kind, DataKind::Mode { k: [1, 2, 0], amplitude: 0.3 });
        assert!(cfg.timeseries && !cfg.snapshots);
        assert_eq!(cfg.snapshot_times, vec![0.0, 0.25]);
        assert!(cfg.dealias);
        let back = parse_config(&cfg.to_text(), None).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn presets_round_trip_through_text() {
        for e in Experiment::ALL {
            let mut cfg = Config::defaults(e);
            cfg.validate().unwrap();
            let back = parse_config(&cfg.to_text(), None).unwrap();
            assert_eq!(back.to_text(), cfg.to_text(), "{e}");
        }
    }
}
