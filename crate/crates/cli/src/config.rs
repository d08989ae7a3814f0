//! Run configuration: a single JSON document checked against a strict
//! schema. Every problem is collected before reporting, and unknown keys
//! come with the closest known key as a suggestion.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use deom_core::bath::ScalarFamily;
use deom_core::observables::ObservableSpec;

/// One schema violation, located by a dotted path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", if self.path.is_empty() { "<root>" } else { &self.path }, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{} configuration error(s):\n{}", .0.len(), .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<ConfigIssue>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub initial_state: InitialState,
    pub frame: FrameConfig,
    pub field_frame: FieldFrameConfig,
    pub bath: BathConfig,
    pub hierarchy: HierarchyConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SystemConfig {
    /// `ω₀σ_z/2 + Δσ_x/2`; `coupling` maps axes to the Pauli matrix standing
    /// in for that momentum component.
    TwoLevel { omega0: f64, delta: f64, mass: f64, charge: f64, coupling: BTreeMap<String, String> },
    Ring { m_max: usize, inertia: f64, radius: f64, charge: f64, v_cos: f64 },
    Oscillator { n_max: usize, mass: f64, omega0: f64, charge: f64 },
}

impl SystemConfig {
    pub fn charge(&self) -> f64 {
        match *self {
            SystemConfig::TwoLevel { charge, .. } | SystemConfig::Ring { charge, .. } | SystemConfig::Oscillator { charge, .. } => charge,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            SystemConfig::TwoLevel { .. } => 2,
            SystemConfig::Ring { m_max, .. } => 2 * m_max + 1,
            SystemConfig::Oscillator { n_max, .. } => n_max + 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InitialState {
    Basis { index: usize },
    Pure { amplitudes: Vec<[f64; 2]> },
    Density { matrix: Vec<Vec<[f64; 2]>> },
    /// Gibbs state of `H_S(0)` at the bath temperature.
    Gibbs,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameConfig {
    pub rotation: RotationConfig,
    pub translation: TranslationConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RotationConfig {
    None,
    Constant { axis: [f64; 3], omega: f64 },
    Piecewise { segments: Vec<SegmentConfig> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentConfig {
    pub start: f64,
    pub axis: [f64; 3],
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TranslationConfig {
    None,
    Boost { velocity: [f64; 3] },
    ConstantAccel { acceleration: [f64; 3] },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldFrameConfig {
    Static,
    Comoving,
    Custom(FrameConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BathConfig {
    pub spectral: SpectralConfig,
    pub beta: f64,
    pub expansion: ExpansionKind,
    pub terms: usize,
    /// Coupled spatial axes; `None` picks them from the system and frame.
    pub components: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionKind {
    Pade,
    Matsubara,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SpectralConfig {
    Scalar(ScalarFamily),
    Matrix { family: MatrixTag, terms: Vec<MatrixTerm> },
    Cavity { family: CavityTag, modes: Vec<CavityModeConfig> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixTag {
    Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CavityTag {
    Cavity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixTerm {
    pub spectral: ScalarFamily,
    pub weight: [[f64; 3]; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CavityModeConfig {
    pub frequency: f64,
    pub weight: f64,
    pub polarizations: Vec<[f64; 3]>,
    pub width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HierarchyConfig {
    pub max_tier: usize,
    pub dt: f64,
    pub t_final: f64,
    pub stride: u64,
    pub filter_tol: f64,
    pub scaling: bool,
    pub max_slots: usize,
    pub divergence_bound: f64,
    /// Steps between checkpoints; 0 writes one only when the run stops.
    pub checkpoint_every: u64,
    /// Threshold for the L vs L+2 check in `validate`.
    pub convergence_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputConfig {
    pub path: String,
    pub observables: Vec<ObservableSpec>,
    pub format: String,
}

pub const DEFAULT_MAX_SLOTS: usize = 2_000_000;

// ---------------------------------------------------------------------------

struct Issues(RefCell<Vec<ConfigIssue>>);

impl Issues {
    fn push(&self, path: &str, message: impl Into<String>) {
        self.0.borrow_mut().push(ConfigIssue { path: path.to_string(), message: message.into() });
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn closest<'k>(word: &str, candidates: impl IntoIterator<Item = &'k str>) -> Option<&'k str> {
    candidates
        .into_iter()
        .map(|c| (strsim::damerau_levenshtein(word, c), c))
        .filter(|(d, c)| *d <= 2.max(c.len() / 3))
        .min_by_key(|(d, _)| *d)
        .map(|(_, c)| c)
}

/// A JSON object being consumed key by key; keys never read are reported
/// as unknown when the section is closed.
struct Section<'a> {
    issues: &'a Issues,
    path: String,
    map: Option<&'a Map<String, Value>>,
    known: RefCell<Vec<&'static str>>,
}

impl<'a> Section<'a> {
    fn new(issues: &'a Issues, path: String, value: Option<&'a Value>) -> Self {
        let map = match value {
            Some(Value::Object(m)) => Some(m),
            Some(_) => {
                issues.push(&path, "expected an object");
                None
            }
            None => None,
        };
        Self { issues, path, map, known: RefCell::new(Vec::new()) }
    }

    fn get(&self, key: &'static str) -> Option<&'a Value> {
        self.known.borrow_mut().push(key);
        self.map.and_then(|m| m.get(key)).filter(|v| !v.is_null())
    }

    fn path(&self, key: &str) -> String {
        join(&self.path, key)
    }

    fn missing(&self, key: &str) {
        self.issues.push(&self.path(key), "missing required field");
    }

    fn f64_with(&self, key: &'static str, default: Option<f64>, check: impl Fn(f64) -> Result<(), &'static str>) -> f64 {
        let v = match self.get(key) {
            None => match default {
                Some(d) => return d,
                None => {
                    self.missing(key);
                    return f64::NAN;
                }
            },
            Some(v) => v,
        };
        match v.as_f64() {
            Some(x) if x.is_finite() => {
                if let Err(m) = check(x) {
                    self.issues.push(&self.path(key), format!("{m}, got {x}"));
                }
                x
            }
            _ => {
                self.issues.push(&self.path(key), format!("expected a finite number, got {v}"));
                f64::NAN
            }
        }
    }

    fn f64(&self, key: &'static str, default: Option<f64>) -> f64 {
        self.f64_with(key, default, |_| Ok(()))
    }

    fn positive(&self, key: &'static str, default: Option<f64>) -> f64 {
        self.f64_with(key, default, |x| if x > 0.0 { Ok(()) } else { Err("must be positive") })
    }

    fn non_negative(&self, key: &'static str, default: Option<f64>) -> f64 {
        self.f64_with(key, default, |x| if x >= 0.0 { Ok(()) } else { Err("must be non-negative") })
    }

    fn uint(&self, key: &'static str, default: Option<u64>) -> u64 {
        match self.get(key) {
            None => default.unwrap_or_else(|| {
                self.missing(key);
                0
            }),
            Some(v) => v.as_u64().unwrap_or_else(|| {
                self.issues.push(&self.path(key), format!("expected a non-negative integer, got {v}"));
                0
            }),
        }
    }

    fn boolean(&self, key: &'static str, default: bool) -> bool {
        match self.get(key) {
            None => default,
            Some(Value::Bool(b)) => *b,
            Some(v) => {
                self.issues.push(&self.path(key), format!("expected true or false, got {v}"));
                default
            }
        }
    }

    fn string(&self, key: &'static str, default: Option<&str>) -> String {
        match self.get(key) {
            None => default.map(str::to_string).unwrap_or_else(|| {
                self.missing(key);
                String::new()
            }),
            Some(Value::String(s)) => s.clone(),
            Some(v) => {
                self.issues.push(&self.path(key), format!("expected a string, got {v}"));
                String::new()
            }
        }
    }

    fn choice(&self, key: &'static str, options: &[&'static str], default: Option<&'static str>) -> &'static str {
        let s = self.string(key, default);
        if let Some(o) = options.iter().find(|o| **o == s) {
            return o;
        }
        if !s.is_empty() || self.get(key).is_some() {
            let hint = closest(&s, options.iter().copied()).map(|c| format!(" (did you mean \"{c}\"?)")).unwrap_or_default();
            self.issues.push(&self.path(key), format!("unknown value \"{s}\"; expected one of {}{hint}", options.join(", ")));
        }
        options[0]
    }

    fn vec3(&self, key: &'static str, default: Option<[f64; 3]>) -> [f64; 3] {
        match self.get(key) {
            None => default.unwrap_or_else(|| {
                self.missing(key);
                [0.0; 3]
            }),
            Some(v) => parse_vec3(self.issues, &self.path(key), v),
        }
    }

    fn child(&self, key: &'static str) -> Section<'a> {
        Section::new(self.issues, self.path(key), self.get(key))
    }

    fn array(&self, key: &'static str) -> Option<&'a Vec<Value>> {
        match self.get(key) {
            None => None,
            Some(Value::Array(a)) => Some(a),
            Some(v) => {
                self.issues.push(&self.path(key), format!("expected an array, got {v}"));
                None
            }
        }
    }

    /// Reports keys that were never asked for.
    fn close(self) {
        let Some(map) = self.map else { return };
        let known = self.known.borrow();
        for k in map.keys() {
            if !known.contains(&k.as_str()) {
                let hint = closest(k, known.iter().copied()).map(|c| format!(" (did you mean \"{c}\"?)")).unwrap_or_default();
                self.issues.push(&self.path(k), format!("unknown key{hint}"));
            }
        }
    }
}

fn parse_vec3(issues: &Issues, path: &str, v: &Value) -> [f64; 3] {
    let mut out = [0.0; 3];
    match v.as_array() {
        Some(a) if a.len() == 3 && a.iter().all(|x| x.as_f64().is_some_and(f64::is_finite)) => {
            for (o, x) in out.iter_mut().zip(a) {
                *o = x.as_f64().unwrap();
            }
        }
        _ => issues.push(path, format!("expected three finite numbers, got {v}")),
    }
    out
}

fn parse_complex(issues: &Issues, path: &str, v: &Value) -> [f64; 2] {
    match v {
        Value::Number(n) => [n.as_f64().unwrap_or(f64::NAN), 0.0],
        Value::Array(a) if a.len() == 2 && a.iter().all(|x| x.as_f64().is_some()) => [a[0].as_f64().unwrap(), a[1].as_f64().unwrap()],
        _ => {
            issues.push(path, format!("expected a number or [re, im], got {v}"));
            [0.0, 0.0]
        }
    }
}

const FAMILIES: [&str; 6] = ["drude", "ohmic_exponential", "lorentzian_mode", "broadened_line", "matrix", "cavity"];

fn parse_scalar_family(s: &Section, family: &str) -> ScalarFamily {
    let f = match family {
        "drude" => ScalarFamily::Drude { lambda: s.non_negative("lambda", None), gamma: s.positive("gamma", None) },
        "ohmic_exponential" => ScalarFamily::OhmicExponential { eta: s.non_negative("eta", None), cutoff: s.positive("cutoff", None) },
        "lorentzian_mode" => ScalarFamily::LorentzianMode {
            lambda: s.non_negative("lambda", None),
            omega0: s.positive("omega0", None),
            gamma: s.positive("gamma", None),
        },
        _ => ScalarFamily::BroadenedLine {
            frequency: s.positive("frequency", None),
            weight: s.non_negative("weight", None),
            width: s.positive("width", None),
        },
    };
    f
}

fn parse_spectral(s: &Section) -> SpectralConfig {
    let family = s.choice("family", &FAMILIES, None);
    match family {
        "matrix" => {
            let mut terms = Vec::new();
            match s.array("terms") {
                None => s.missing("terms"),
                Some(list) if list.is_empty() => s.issues.push(&s.path("terms"), "needs at least one term"),
                Some(list) => {
                    for (k, item) in list.iter().enumerate() {
                        let t = Section::new(s.issues, format!("{}[{k}]", s.path("terms")), Some(item));
                        let inner = t.child("spectral");
                        let fam = inner.choice("family", &FAMILIES[..4], None);
                        let spectral = parse_scalar_family(&inner, fam);
                        inner.close();
                        let mut weight = [[0.0; 3]; 3];
                        match t.array("weight") {
                            Some(rows) if rows.len() == 3 => {
                                for (r, row) in rows.iter().enumerate() {
                                    weight[r] = parse_vec3(s.issues, &format!("{}[{r}]", t.path("weight")), row);
                                }
                                let symmetric = (0..3).all(|i| (0..3).all(|j| weight[i][j] == weight[j][i]));
                                if !symmetric {
                                    s.issues.push(&t.path("weight"), "weight matrix must be symmetric");
                                }
                            }
                            Some(_) => s.issues.push(&t.path("weight"), "expected a 3x3 matrix"),
                            None => t.missing("weight"),
                        }
                        t.close();
                        terms.push(MatrixTerm { spectral, weight });
                    }
                }
            }
            SpectralConfig::Matrix { family: MatrixTag::Matrix, terms }
        }
        "cavity" => {
            let mut modes = Vec::new();
            match s.array("modes") {
                None => s.missing("modes"),
                Some(list) if list.is_empty() => s.issues.push(&s.path("modes"), "needs at least one mode"),
                Some(list) => {
                    for (k, item) in list.iter().enumerate() {
                        let m = Section::new(s.issues, format!("{}[{k}]", s.path("modes")), Some(item));
                        let frequency = m.positive("frequency", None);
                        let weight = m.non_negative("weight", None);
                        let width = m.get("width").map(|_| m.positive("width", None));
                        let mut polarizations = Vec::new();
                        match m.array("polarizations") {
                            Some(list) if !list.is_empty() => {
                                for (j, p) in list.iter().enumerate() {
                                    polarizations.push(parse_vec3(s.issues, &format!("{}[{j}]", m.path("polarizations")), p));
                                }
                            }
                            Some(_) => s.issues.push(&m.path("polarizations"), "needs at least one polarization"),
                            None => m.missing("polarizations"),
                        }
                        m.close();
                        modes.push(CavityModeConfig { frequency, weight, polarizations, width });
                    }
                }
            }
            SpectralConfig::Cavity { family: CavityTag::Cavity, modes }
        }
        f => SpectralConfig::Scalar(parse_scalar_family(s, f)),
    }
}

fn parse_frame(s: &Section) -> FrameConfig {
    let r = s.child("rotation");
    let rotation = match r.choice("type", &["none", "constant", "piecewise"], Some("none")) {
        "constant" => RotationConfig::Constant { axis: r.vec3("axis", None), omega: r.f64("omega", None) },
        "piecewise" => {
            let mut segments = Vec::new();
            match r.array("segments") {
                Some(list) if !list.is_empty() => {
                    for (k, item) in list.iter().enumerate() {
                        let g = Section::new(r.issues, format!("{}[{k}]", r.path("segments")), Some(item));
                        segments.push(SegmentConfig { start: g.non_negative("start", None), axis: g.vec3("axis", None), omega: g.f64("omega", None) });
                        g.close();
                    }
                    if segments[0].start != 0.0 {
                        r.issues.push(&r.path("segments"), "the first segment must start at 0");
                    }
                    if segments.windows(2).any(|w| w[1].start <= w[0].start) {
                        r.issues.push(&r.path("segments"), "segment start times must increase");
                    }
                }
                Some(_) => r.issues.push(&r.path("segments"), "needs at least one segment"),
                None => r.missing("segments"),
            }
            RotationConfig::Piecewise { segments }
        }
        _ => RotationConfig::None,
    };
    if let RotationConfig::Constant { axis, .. } = &rotation {
        if axis.iter().all(|a| *a == 0.0) {
            r.issues.push(&r.path("axis"), "rotation axis must be nonzero");
        }
    }
    r.close();
    let t = s.child("translation");
    let translation = match t.choice("type", &["none", "boost", "constant_accel"], Some("none")) {
        "boost" => TranslationConfig::Boost { velocity: t.vec3("velocity", None) },
        "constant_accel" => TranslationConfig::ConstantAccel { acceleration: t.vec3("acceleration", None) },
        _ => TranslationConfig::None,
    };
    t.close();
    FrameConfig { rotation, translation }
}

fn parse_system(s: &Section) -> SystemConfig {
    let kind = s.choice("type", &["two_level", "ring", "oscillator"], None);
    match kind {
        "ring" => SystemConfig::Ring {
            m_max: s.uint("m_max", None) as usize,
            inertia: s.positive("inertia", Some(1.0)),
            radius: s.positive("radius", Some(1.0)),
            charge: s.f64("charge", Some(1.0)),
            v_cos: s.f64("v_cos", Some(0.0)),
        },
        "oscillator" => SystemConfig::Oscillator {
            n_max: s.uint("n_max", None) as usize,
            mass: s.positive("mass", Some(1.0)),
            omega0: s.positive("omega0", None),
            charge: s.f64("charge", Some(1.0)),
        },
        _ => {
            let omega0 = s.f64("omega0", None);
            let delta = s.f64("delta", Some(0.0));
            let mass = s.positive("mass", Some(1.0));
            let charge = s.f64("charge", Some(1.0));
            let mut coupling = BTreeMap::new();
            match s.get("coupling") {
                None => {
                    coupling.insert("z".to_string(), "sigma_z".to_string());
                }
                Some(Value::Object(m)) => {
                    for (axis, op) in m {
                        let p = join(&s.path("coupling"), axis);
                        if !["x", "y", "z"].contains(&axis.as_str()) {
                            s.issues.push(&p, "axis must be x, y or z");
                        }
                        match op.as_str() {
                            Some(o @ ("sigma_x" | "sigma_y" | "sigma_z")) => {
                                coupling.insert(axis.clone(), o.to_string());
                            }
                            _ => s.issues.push(&p, format!("expected \"sigma_x\", \"sigma_y\" or \"sigma_z\", got {op}")),
                        }
                    }
                }
                Some(v) => s.issues.push(&s.path("coupling"), format!("expected an object mapping axes to Pauli matrices, got {v}")),
            }
            SystemConfig::TwoLevel { omega0, delta, mass, charge, coupling }
        }
    }
}

fn parse_initial(s: &Section, dim: usize) -> InitialState {
    match s.choice("type", &["basis", "pure", "density", "gibbs"], Some("basis")) {
        "pure" => {
            let amplitudes: Vec<[f64; 2]> = match s.array("amplitudes") {
                Some(a) => a.iter().enumerate().map(|(k, v)| parse_complex(s.issues, &format!("{}[{k}]", s.path("amplitudes")), v)).collect(),
                None => {
                    s.missing("amplitudes");
                    Vec::new()
                }
            };
            if !amplitudes.is_empty() && amplitudes.len() != dim {
                s.issues.push(&s.path("amplitudes"), format!("expected {dim} amplitudes, got {}", amplitudes.len()));
            }
            InitialState::Pure { amplitudes }
        }
        "density" => {
            let mut matrix = Vec::new();
            match s.array("matrix") {
                Some(rows) => {
                    for (r, row) in rows.iter().enumerate() {
                        let p = format!("{}[{r}]", s.path("matrix"));
                        match row.as_array() {
                            Some(cols) => matrix.push(cols.iter().enumerate().map(|(c, v)| parse_complex(s.issues, &format!("{p}[{c}]"), v)).collect::<Vec<_>>()),
                            None => s.issues.push(&p, "expected a row array"),
                        }
                    }
                    if matrix.len() != dim || matrix.iter().any(|r| r.len() != dim) {
                        s.issues.push(&s.path("matrix"), format!("expected a {dim}x{dim} matrix"));
                    }
                }
                None => s.missing("matrix"),
            }
            InitialState::Density { matrix }
        }
        "gibbs" => InitialState::Gibbs,
        _ => {
            let index = s.uint("index", Some(0)) as usize;
            if index >= dim {
                s.issues.push(&s.path("index"), format!("basis index must be below the dimension {dim}"));
            }
            InitialState::Basis { index }
        }
    }
}

fn parse_field_frame(s: &Section) -> FieldFrameConfig {
    match s.get("field_frame") {
        None => FieldFrameConfig::Static,
        Some(Value::String(m)) => match m.as_str() {
            "static" => FieldFrameConfig::Static,
            "comoving" => FieldFrameConfig::Comoving,
            other => {
                let hint = closest(other, ["static", "comoving"]).map(|c| format!(" (did you mean \"{c}\"?)")).unwrap_or_default();
                s.issues.push(&s.path("field_frame"), format!("expected \"static\", \"comoving\" or {{\"custom\": frame}}{hint}"));
                FieldFrameConfig::Static
            }
        },
        Some(v @ Value::Object(_)) => {
            let o = Section::new(s.issues, s.path("field_frame"), Some(v));
            let f = o.child("custom");
            let frame = parse_frame(&f);
            f.close();
            o.close();
            FieldFrameConfig::Custom(frame)
        }
        Some(v) => {
            s.issues.push(&s.path("field_frame"), format!("expected a string or object, got {v}"));
            FieldFrameConfig::Static
        }
    }
}

/// Parses and validates a configuration document.
pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let value: Value = serde_json::from_str(text)?;
    parse_config_value(&value)
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_config_str(&text)
}

pub fn parse_config_value(value: &Value) -> Result<RunConfig, ConfigError> {
    let issues = Issues(RefCell::new(Vec::new()));
    let root = Section::new(&issues, String::new(), Some(value));
    if root.map.is_none() {
        return Err(ConfigError::Invalid(issues.0.into_inner()));
    }

    let sys = root.child("system");
    if sys.map.is_none() && root.get("system").is_none() {
        root.missing("system");
    }
    let system = parse_system(&sys);
    sys.close();

    let init = root.child("initial_state");
    let initial_state = parse_initial(&init, system.dim().max(1));
    init.close();

    let fr = root.child("frame");
    let frame = parse_frame(&fr);
    fr.close();

    let field_frame = parse_field_frame(&root);

    let b = root.child("bath");
    if b.map.is_none() && root.get("bath").is_none() {
        root.missing("bath");
    }
    let sp = b.child("spectral");
    if sp.map.is_none() && b.map.is_some() && b.get("spectral").is_none() {
        b.missing("spectral");
    }
    let spectral = parse_spectral(&sp);
    sp.close();
    let beta = b.positive("beta", None);
    let expansion = match b.choice("expansion", &["pade", "matsubara"], Some("pade")) {
        "matsubara" => ExpansionKind::Matsubara,
        _ => ExpansionKind::Pade,
    };
    let terms = b.uint("terms", Some(4)) as usize;
    let components = b.array("components").map(|list| {
        let mut out: Vec<String> = Vec::new();
        for (k, v) in list.iter().enumerate() {
            match v.as_str() {
                Some(a @ ("x" | "y" | "z")) if !out.iter().any(|o| o == a) => out.push(a.to_string()),
                _ => issues.push(&format!("bath.components[{k}]"), format!("expected a distinct axis \"x\", \"y\" or \"z\", got {v}")),
            }
        }
        if out.is_empty() {
            issues.push("bath.components", "needs at least one axis");
        }
        out
    });
    b.close();
    let bath = BathConfig { spectral, beta, expansion, terms, components };

    let h = root.child("hierarchy");
    if h.map.is_none() && root.get("hierarchy").is_none() {
        root.missing("hierarchy");
    }
    let hierarchy = HierarchyConfig {
        max_tier: h.uint("max_tier", None) as usize,
        dt: h.positive("dt", None),
        t_final: h.non_negative("t_final", None),
        stride: h.uint("stride", Some(1)),
        filter_tol: h.non_negative("filter_tol", Some(0.0)),
        scaling: h.boolean("scaling", false),
        max_slots: h.uint("max_slots", Some(DEFAULT_MAX_SLOTS as u64)) as usize,
        divergence_bound: h.positive("divergence_bound", Some(1e8)),
        checkpoint_every: h.uint("checkpoint_every", Some(0)),
        convergence_tol: h.positive("convergence_tol", Some(1e-6)),
    };
    if hierarchy.stride == 0 {
        issues.push("hierarchy.stride", "must be at least 1");
    }
    h.close();

    let o = root.child("output");
    let path = o.string("path", Some("deom-out"));
    let format = o.choice("format", &["csv"], Some("csv")).to_string();
    let observables = match o.array("observables") {
        Some(list) => list
            .iter()
            .enumerate()
            .filter_map(|(k, v)| {
                let p = format!("output.observables[{k}]");
                match v.as_str().map(str::parse::<ObservableSpec>) {
                    Some(Ok(spec)) => Some(spec),
                    Some(Err(e)) => {
                        issues.push(&p, e.to_string());
                        None
                    }
                    None => {
                        issues.push(&p, format!("expected a string, got {v}"));
                        None
                    }
                }
            })
            .collect(),
        None => default_observables(system.dim()),
    };
    for spec in &observables {
        let d = system.dim();
        let bad = match spec {
            ObservableSpec::Population(i) => *i >= d,
            ObservableSpec::Coherence(i, j) => *i >= d || *j >= d,
            _ => false,
        };
        if bad {
            issues.push("output.observables", format!("{spec} is outside the {d}-dimensional system"));
        }
    }
    o.close();
    let output = OutputConfig { path, observables, format };

    root.close();
    let list = issues.0.into_inner();
    if !list.is_empty() {
        return Err(ConfigError::Invalid(list));
    }
    Ok(RunConfig { system, initial_state, frame, field_frame, bath, hierarchy, output })
}

fn default_observables(dim: usize) -> Vec<ObservableSpec> {
    let mut v: Vec<ObservableSpec> = (0..dim.min(4)).map(ObservableSpec::Population).collect();
    if dim >= 2 {
        v.push(ObservableSpec::Coherence(0, 1));
    }
    v
}

impl RunConfig {
    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("configuration serialises")
    }
}
