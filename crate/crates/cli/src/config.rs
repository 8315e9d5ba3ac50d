//! Flat `section.key = value unit` configuration files.
//!
//! ```text
//! preset = li
//! drive.intensity = 20.4 TWcm2   # overrides the preset
//! propagation.T_total = 150 fs
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use zeno_core::drive::{DriveMode, DriveParams, Envelope};
use zeno_core::model::{DensityExponent, LevelScheme};
use zeno_core::propagator::PropagationConfig;
use zeno_core::simulation::{GridSpec, Scenario};
use zeno_core::units::{rabi_from_intensity, Dimension, Quantity, DEFAULT_DIPOLE_AU};

use crate::presets;

/// A configuration problem tied to one key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn new(key: &str, message: impl Into<String>) -> Self {
        Self {
            key: key.to_string(),
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: `{}`: {}", self.key, self.message),
            None => write!(f, "`{}`: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Every error found while reading one file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration")?;
        for e in &self.0 {
            write!(f, "\n  {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

impl From<ConfigError> for ConfigErrors {
    fn from(e: ConfigError) -> Self {
        ConfigErrors(vec![e])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Quantity(Dimension),
    /// A quantity or `auto`.
    AutoQuantity(Dimension),
    /// A time or `inf`.
    Lifetime,
    Integer,
    AutoInteger,
    Real,
    Bool,
    Word(&'static [&'static str]),
    TimeList,
}

const MODES: &[&str] = &[
    "off",
    "pulsed",
    "continuous",
    "rwa_pulsed",
    "rwa_continuous",
];
const ENVELOPES: &[&str] = &["square", "cosine_ramp"];

/// Known keys, in echo order.
const KEYS: &[(&str, Kind)] = &[
    ("model.E1", Kind::Quantity(Dimension::Energy)),
    ("model.E2", Kind::Quantity(Dimension::Energy)),
    ("model.eps_c", Kind::Quantity(Dimension::Energy)),
    ("model.tau1", Kind::Lifetime),
    ("model.tau2", Kind::Lifetime),
    ("grid.half_width", Kind::AutoQuantity(Dimension::Energy)),
    ("grid.points", Kind::AutoInteger),
    ("grid.exponent", Kind::Integer),
    ("grid.safety", Kind::Real),
    ("drive.mode", Kind::Word(MODES)),
    ("drive.Omega", Kind::Quantity(Dimension::Energy)),
    ("drive.intensity", Kind::Quantity(Dimension::Intensity)),
    ("drive.dipole", Kind::Quantity(Dimension::Dipole)),
    ("drive.omega", Kind::AutoQuantity(Dimension::Energy)),
    ("drive.delta", Kind::Quantity(Dimension::Energy)),
    ("drive.t_m", Kind::Quantity(Dimension::Time)),
    ("drive.dt_delay", Kind::Quantity(Dimension::Time)),
    ("drive.envelope", Kind::Word(ENVELOPES)),
    ("drive.ramp", Kind::Quantity(Dimension::Time)),
    ("drive.phase_reset", Kind::Bool),
    ("propagation.T_total", Kind::Quantity(Dimension::Time)),
    ("propagation.dt_max", Kind::AutoQuantity(Dimension::Time)),
    ("propagation.krylov_dim", Kind::Integer),
    ("propagation.residual_tol", Kind::Real),
    ("propagation.max_subdivisions", Kind::Integer),
    ("propagation.sample_stride", Kind::Quantity(Dimension::Time)),
    ("propagation.spectrum_snapshot_times", Kind::TimeList),
    ("output.noise_floor", Kind::Real),
    ("output.concurrence_times", Kind::TimeList),
    ("output.concurrence_floor", Kind::Real),
];

fn kind_of(key: &str) -> Option<Kind> {
    KEYS.iter().find(|(k, _)| *k == key).map(|(_, kind)| *kind)
}

/// Key/value pairs as written, before typing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, Option<usize>)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigErrors> {
        let mut raw = RawConfig::default();
        let mut errors = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                errors.push(ConfigError {
                    key: content.to_string(),
                    line: Some(line_no),
                    message: "expected `key = value`".into(),
                });
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            if raw.entries.contains_key(key) {
                errors.push(ConfigError {
                    key: key.to_string(),
                    line: Some(line_no),
                    message: "duplicate key".into(),
                });
                continue;
            }
            raw.entries
                .insert(key.to_string(), (value.to_string(), Some(line_no)));
        }
        if errors.is_empty() {
            Ok(raw)
        } else {
            Err(ConfigErrors(errors))
        }
    }

    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
        Ok(Self::parse(&text)?)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries
            .insert(key.to_string(), (value.trim().to_string(), None));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries
            .iter()
            .map(|(k, (v, _))| (k.as_str(), v.as_str()))
    }

    /// Drops source line numbers (for text that is not a user file).
    pub fn forget_lines(mut self) -> Self {
        for entry in self.entries.values_mut() {
            entry.1 = None;
        }
        self
    }

    pub fn remove(&mut self, key: &str) {
        self.entries.remove(key);
    }

    /// Copies the entries of `top` over `self`. Setting one of
    /// `drive.Omega` / `drive.intensity` drops the other.
    pub fn layer(&mut self, top: &RawConfig) {
        for (k, (v, line)) in &top.entries {
            if k == "preset" {
                continue;
            }
            match k.as_str() {
                "drive.Omega" => self.remove("drive.intensity"),
                "drive.intensity" => self.remove("drive.Omega"),
                _ => {}
            }
            self.entries.insert(k.clone(), (v.clone(), *line));
        }
    }

    /// Applies `key=value`.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::new(assignment, "override must look like key=value"))?;
        self.set(key.trim(), value);
        Ok(())
    }

    /// Layers `self` over the preset it names (or `preset`, if given).
    pub fn expand(&self, preset: Option<&str>) -> Result<RawConfig, ConfigErrors> {
        let name = preset.or_else(|| self.get("preset"));
        let mut base = match name {
            Some(n) => presets::raw(n).ok_or_else(|| {
                ConfigError::new(
                    "preset",
                    format!(
                        "unknown preset `{n}` (known: {})",
                        presets::NAMES.join(", ")
                    ),
                )
            })?,
            None => RawConfig::default(),
        };
        if let Some(n) = name {
            base.set("preset", n);
        }
        base.layer(self);
        Ok(base)
    }

    fn error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            key: key.to_string(),
            line: self.entries.get(key).and_then(|(_, l)| *l),
            message: message.into(),
        }
    }
}

/// Output switches that do not affect the dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputOptions {
    pub noise_floor: f64,
    pub concurrence_times: Vec<f64>,
    pub concurrence_floor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub scenario: Scenario,
    pub output: OutputOptions,
    /// Set when the Rabi energy came from an intensity.
    pub intensity: Option<f64>,
    pub dipole: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Number(f64),
    Auto,
    Text(String),
    Bool(bool),
    Times(Vec<f64>),
}

fn parse_value(kind: Kind, text: &str) -> Result<Value, String> {
    let quantity = |t: &str, dim| {
        Quantity::parse(t, dim)
            .map(|q| q.to_atomic())
            .map_err(|e| e.to_string())
    };
    match kind {
        Kind::Quantity(dim) => quantity(text, dim).map(Value::Number),
        Kind::AutoQuantity(_) if text == "auto" => Ok(Value::Auto),
        Kind::AutoQuantity(dim) => quantity(text, dim).map(Value::Number),
        Kind::Lifetime if text == "inf" => Ok(Value::Number(f64::INFINITY)),
        Kind::Lifetime => quantity(text, Dimension::Time).map(Value::Number),
        Kind::AutoInteger if text == "auto" => Ok(Value::Auto),
        Kind::Integer | Kind::AutoInteger => text
            .parse::<u64>()
            .map(|n| Value::Number(n as f64))
            .map_err(|_| format!("expected a non-negative integer, got `{text}`")),
        Kind::Real => text
            .parse::<f64>()
            .map(Value::Number)
            .map_err(|_| format!("expected a number, got `{text}`")),
        Kind::Bool => match text {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            _ => Err(format!("expected true or false, got `{text}`")),
        },
        Kind::Word(allowed) if allowed.contains(&text) => Ok(Value::Text(text.to_string())),
        Kind::Word(allowed) => Err(format!(
            "expected one of {}, got `{text}`",
            allowed.join(", ")
        )),
        Kind::TimeList if text.is_empty() || text == "none" => Ok(Value::Times(Vec::new())),
        Kind::TimeList => text
            .split(',')
            .map(|t| quantity(t.trim(), Dimension::Time))
            .collect::<Result<Vec<_>, _>>()
            .map(Value::Times),
    }
}

struct Typed {
    values: BTreeMap<&'static str, Value>,
}

impl Typed {
    fn num(&self, key: &str) -> Option<f64> {
        match self.values.get(key) {
            Some(Value::Number(x)) => Some(*x),
            _ => None,
        }
    }

    fn auto_num(&self, key: &str) -> Option<f64> {
        self.num(key)
    }

    fn text(&self, key: &str) -> Option<&str> {
        match self.values.get(key) {
            Some(Value::Text(t)) => Some(t),
            _ => None,
        }
    }

    fn flag(&self, key: &str) -> Option<bool> {
        match self.values.get(key) {
            Some(Value::Bool(b)) => Some(*b),
            _ => None,
        }
    }

    fn times(&self, key: &str) -> Vec<f64> {
        match self.values.get(key) {
            Some(Value::Times(t)) => t.clone(),
            _ => Vec::new(),
        }
    }
}

/// Smallest point count whose recurrence time clears `safety · T` with a 2%
/// margin.
pub fn auto_points(half_width: f64, t_total: f64, safety: f64) -> usize {
    let d_eps = 2.0 * std::f64::consts::PI / (safety * t_total * 1.02);
    ((2.0 * half_width / d_eps).ceil() as usize + 1).max(3)
}

impl RunConfig {
    /// Types and validates an expanded configuration.
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigErrors> {
        let mut errors = Vec::new();
        let mut values = BTreeMap::new();
        for (key, (text, line)) in &raw.entries {
            if key == "preset" {
                continue;
            }
            let Some((name, kind)) = KEYS.iter().find(|(k, _)| k == key) else {
                errors.push(ConfigError {
                    key: key.clone(),
                    line: *line,
                    message: "unknown key".into(),
                });
                continue;
            };
            match parse_value(*kind, text) {
                Ok(v) => {
                    values.insert(*name, v);
                }
                Err(message) => errors.push(ConfigError {
                    key: key.clone(),
                    line: *line,
                    message,
                }),
            }
        }
        if !errors.is_empty() {
            return Err(ConfigErrors(errors));
        }
        let t = Typed { values };
        let required = |key: &str, errors: &mut Vec<ConfigError>| -> f64 {
            t.num(key).unwrap_or_else(|| {
                errors.push(raw.error(key, "missing required value"));
                f64::NAN
            })
        };

        let e1 = required("model.E1", &mut errors);
        let e2 = required("model.E2", &mut errors);
        let eps_c = required("model.eps_c", &mut errors);
        let tau1 = required("model.tau1", &mut errors);
        let tau2 = t.num("model.tau2").unwrap_or(f64::INFINITY);
        let t_total = required("propagation.T_total", &mut errors);
        if !errors.is_empty() {
            return Err(ConfigErrors(errors));
        }
        let levels = LevelScheme::new(e1, e2, eps_c, tau1, tau2)
            .map_err(|e| raw.error("model", e.to_string()))?;

        let mode = DriveMode::parse(t.text("drive.mode").unwrap_or("off"))
            .map_err(|e| raw.error("drive.mode", e.to_string()))?;
        let dipole = t.num("drive.dipole").unwrap_or(DEFAULT_DIPOLE_AU);
        let intensity = t.num("drive.intensity");
        let rabi = match (t.num("drive.Omega"), intensity) {
            (Some(_), Some(_)) => {
                return Err(raw
                    .error(
                        "drive.intensity",
                        "give either drive.Omega or drive.intensity, not both",
                    )
                    .into())
            }
            (Some(r), None) => r,
            (None, Some(i)) => rabi_from_intensity(i, dipole)
                .map_err(|e| raw.error("drive.intensity", e.to_string()))?,
            (None, None) => 0.0,
        };
        let delta = t.num("drive.delta").unwrap_or(0.0);
        let photon = match t.auto_num("drive.omega") {
            Some(w) => {
                if raw.get("drive.delta").is_some()
                    && (w - levels.delta() - delta).abs() > 1e-12 * w.abs().max(1.0)
                {
                    return Err(raw
                        .error(
                            "drive.delta",
                            "drive.delta disagrees with drive.omega − (E2 − E1); set only one",
                        )
                        .into());
                }
                w
            }
            None => levels.delta() + delta,
        };
        let detuning = photon - levels.delta();
        let envelope = match t.text("drive.envelope").unwrap_or("square") {
            "cosine_ramp" => Envelope::CosineRamp {
                ramp: t.num("drive.ramp").unwrap_or(0.0),
            },
            _ => Envelope::Square,
        };
        let drive = DriveParams {
            mode,
            rabi,
            photon,
            detuning,
            t_m: t.num("drive.t_m").unwrap_or(0.0),
            dt_delay: t.num("drive.dt_delay").unwrap_or(0.0),
            envelope,
            phase_reset: t.flag("drive.phase_reset").unwrap_or(false),
        };

        let exponent = t.num("grid.exponent").unwrap_or(1.0);
        let exponent = DensityExponent::new(exponent as u8)
            .ok()
            .filter(|_| (1.0..=3.0).contains(&exponent))
            .ok_or_else(|| raw.error("grid.exponent", "must be 1, 2 or 3"))?;
        let safety = t.num("grid.safety").unwrap_or(1.5);

        let mut propagation = PropagationConfig::new(
            t_total,
            t.num("propagation.sample_stride")
                .unwrap_or(t_total / 200.0),
        );
        propagation.dt_max = t.auto_num("propagation.dt_max");
        if let Some(k) = t.num("propagation.krylov_dim") {
            propagation.krylov_dim = k as usize;
        }
        if let Some(r) = t.num("propagation.residual_tol") {
            propagation.residual_tol = r;
        }
        if let Some(m) = t.num("propagation.max_subdivisions") {
            propagation.max_subdivisions = m as usize;
        }
        propagation.spectrum_times = t.times("propagation.spectrum_snapshot_times");
        let concurrence_times = t.times("output.concurrence_times");
        propagation.state_times = concurrence_times.clone();
        propagation
            .validate()
            .map_err(|e| raw.error("propagation", e.to_string()))?;

        let mut scenario = Scenario {
            levels,
            grid: GridSpec {
                half_width: t.auto_num("grid.half_width"),
                points: 0,
                exponent,
                safety,
            },
            drive,
            propagation,
        };
        let w = scenario.half_width();
        scenario.grid.half_width = Some(w);
        scenario.grid.points = match t.num("grid.points") {
            Some(n) => n as usize,
            None => auto_points(w, t_total, safety),
        };

        Ok(RunConfig {
            preset: raw.get("preset").map(str::to_string),
            scenario,
            output: OutputOptions {
                noise_floor: t
                    .num("output.noise_floor")
                    .unwrap_or(zeno_core::observables::DEFAULT_NOISE_FLOOR),
                concurrence_times,
                concurrence_floor: t
                    .num("output.concurrence_floor")
                    .unwrap_or(zeno_core::entanglement::DEFAULT_FLOOR),
            },
            intensity,
            dipole,
        })
    }

    /// Reads a file (or nothing), applies the preset and overrides, and types
    /// the result.
    pub fn load(
        path: Option<&Path>,
        preset: Option<&str>,
        overrides: &[String],
    ) -> anyhow::Result<(RawConfig, RunConfig)> {
        let mut raw = match path {
            Some(p) => RawConfig::from_file(p)?,
            None => RawConfig::default(),
        };
        for o in overrides {
            raw.apply_override(o).map_err(ConfigErrors::from)?;
        }
        let expanded = raw.expand(preset)?;
        let config = RunConfig::from_raw(&expanded)?;
        Ok((expanded, config))
    }

    /// Every key with its resolved value, in atomic units with 17
    /// significant digits. Reading it back gives the same configuration.
    pub fn echo(&self) -> String {
        let s = &self.scenario;
        let d = &s.drive;
        let p = &s.propagation;
        let num = |x: f64| crate::output::fmt_f64(x);
        let q = |x: f64, unit: &str| format!("{} {unit}", num(x));
        let times = |v: &[f64]| {
            if v.is_empty() {
                "none".to_string()
            } else {
                v.iter().map(|&t| q(t, "au")).collect::<Vec<_>>().join(", ")
            }
        };
        let lifetime = |t: f64| {
            if t.is_infinite() {
                "inf".into()
            } else {
                q(t, "au")
            }
        };
        let mut out = String::new();
        out.push_str("# expanded configuration, atomic units\n");
        if let Some(name) = &self.preset {
            out.push_str(&format!("preset = {name}\n"));
        }
        if let Some(i) = self.intensity {
            out.push_str(&format!(
                "# drive.Omega derived from intensity {} au with dipole {} au\n",
                num(i),
                num(self.dipole)
            ));
        }
        let (envelope, ramp) = match d.envelope {
            Envelope::Square => ("square", 0.0),
            Envelope::CosineRamp { ramp } => ("cosine_ramp", ramp),
        };
        let lines = [
            ("model.E1", q(s.levels.e1, "Ha")),
            ("model.E2", q(s.levels.e2, "Ha")),
            ("model.eps_c", q(s.levels.eps_c, "Ha")),
            ("model.tau1", lifetime(s.levels.tau1)),
            ("model.tau2", lifetime(s.levels.tau2)),
            ("grid.half_width", q(s.half_width(), "Ha")),
            ("grid.points", s.grid.points.to_string()),
            ("grid.exponent", s.grid.exponent.get().to_string()),
            ("grid.safety", num(s.grid.safety)),
            ("drive.mode", d.mode.name().to_string()),
            ("drive.Omega", q(d.rabi, "Ha")),
            ("drive.dipole", q(self.dipole, "au")),
            ("drive.omega", q(d.photon, "Ha")),
            ("drive.t_m", q(d.t_m, "au")),
            ("drive.dt_delay", q(d.dt_delay, "au")),
            ("drive.envelope", envelope.to_string()),
            ("drive.ramp", q(ramp, "au")),
            ("drive.phase_reset", d.phase_reset.to_string()),
            ("propagation.T_total", q(p.t_total, "au")),
            (
                "propagation.dt_max",
                p.dt_max.map_or("auto".to_string(), |x| q(x, "au")),
            ),
            ("propagation.krylov_dim", p.krylov_dim.to_string()),
            ("propagation.residual_tol", num(p.residual_tol)),
            (
                "propagation.max_subdivisions",
                p.max_subdivisions.to_string(),
            ),
            ("propagation.sample_stride", q(p.sample_stride, "au")),
            (
                "propagation.spectrum_snapshot_times",
                times(&p.spectrum_times),
            ),
            ("output.noise_floor", num(self.output.noise_floor)),
            (
                "output.concurrence_times",
                times(&self.output.concurrence_times),
            ),
            (
                "output.concurrence_floor",
                num(self.output.concurrence_floor),
            ),
        ];
        for (k, v) in lines {
            debug_assert!(kind_of(k).is_some(), "{k}");
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}
