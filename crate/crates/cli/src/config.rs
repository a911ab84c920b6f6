//! Run configuration: a single JSON document, validated after parsing with
//! errors that point at the offending line.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use ncfield::dynamics::Integrator;
use ncfield::{Coordinate, DeformationParams, Kind, ModeIndex, ModeSet, ModeState};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

/// Tolerance names accepted under `"tolerances"` with their defaults.
pub const DEFAULT_TOLERANCES: [(&str, f64); 8] = [
    ("bracket", 1e-12),
    ("canonicity", 1e-12),
    ("commutator", 1e-13),
    ("diagonalization", 1e-12),
    ("orthogonality", 1e-10),
    ("route_equivalence", 1e-6),
    ("energy_drift", 1e-7),
    ("symplecticity", 1e-10),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Variables {
    /// Amplitudes are the deformed `(q, p)`.
    #[default]
    Deformed,
    /// Amplitudes are the canonical `(Q, P)`; they are undressed on load.
    Canonical,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum RawInitial {
    Keyword(String),
    Amplitudes(BTreeMap<String, [f64; 2]>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    theta: f64,
    theta_bar: f64,
    n_max: i64,
    #[serde(default = "default_dt")]
    dt: f64,
    #[serde(default = "default_t_final")]
    t_final: f64,
    #[serde(default)]
    integrator: Option<Integrator>,
    #[serde(default)]
    sample_stride: Option<i64>,
    #[serde(default)]
    initial_state: Option<RawInitial>,
    #[serde(default)]
    initial_variables: Variables,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    field_points: Option<i64>,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_t_final() -> f64 {
    10.0
}

/// How the initial state was specified.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// Seeded uniform amplitudes in `[-1, 1]`.
    Random,
    /// Explicit amplitudes keyed by coordinate, e.g. `q1[2]`.
    Amplitudes(BTreeMap<Coordinate, Complex64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub theta: f64,
    pub theta_bar: f64,
    pub n_max: u32,
    pub dt: f64,
    pub t_final: f64,
    pub integrator: Integrator,
    pub sample_stride: usize,
    pub initial_state: Option<InitialState>,
    pub initial_variables: Variables,
    pub output_dir: PathBuf,
    pub tolerances: BTreeMap<String, f64>,
    pub field_points: usize,
}

/// A configuration error, optionally anchored to a line of the source.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.source, line, self.message),
            None => write!(f, "{}: {}", self.source, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// First line (1-based) on which `"key"` appears.
fn locate(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

/// Parses `q1[3]`, `p2[-1]` style labels.
pub fn parse_coordinate(label: &str) -> Option<Coordinate> {
    let kind = match label.chars().next()? {
        'q' => Kind::Q,
        'p' => Kind::P,
        _ => return None,
    };
    let rest = &label[1..];
    let open = rest.find('[')?;
    if !rest.ends_with(']') {
        return None;
    }
    let component: usize = rest[..open].parse().ok()?;
    if component == 0 {
        return None;
    }
    let mode: i64 = rest[open + 1..rest.len() - 1].parse().ok()?;
    Some(Coordinate {
        kind,
        component: component - 1,
        mode: ModeIndex(mode),
    })
}

impl RunConfig {
    /// The configuration used when no file is given.
    pub fn default_run() -> Self {
        Self {
            theta: 0.5,
            theta_bar: 0.5,
            n_max: 4,
            dt: 1e-3,
            t_final: 10.0,
            integrator: Integrator::Rk4,
            sample_stride: 10,
            initial_state: Some(InitialState::Random),
            initial_variables: Variables::Deformed,
            output_dir: PathBuf::from("out"),
            tolerances: DEFAULT_TOLERANCES.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            field_points: 64,
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let source = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            source: source.clone(),
            line: None,
            message: format!("cannot read config: {e}"),
        })?;
        Self::parse(&text, &source)
    }

    pub fn parse(text: &str, source: &str) -> Result<Self, ConfigError> {
        let fail = |key: &str, message: String| ConfigError {
            source: source.to_string(),
            line: locate(text, key),
            message,
        };
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| ConfigError {
            source: source.to_string(),
            line: Some(e.line()),
            message: e.to_string(),
        })?;

        for (key, value) in [("theta", raw.theta), ("theta_bar", raw.theta_bar)] {
            if !value.is_finite() {
                return Err(fail(key, format!("{key} must be finite")));
            }
        }
        if raw.n_max < 1 || raw.n_max > 4096 {
            return Err(fail("n_max", format!("n_max must be in 1..=4096, got {}", raw.n_max)));
        }
        if !(raw.dt > 0.0 && raw.dt.is_finite()) {
            return Err(fail("dt", format!("dt must be positive, got {}", raw.dt)));
        }
        if !(raw.t_final >= 0.0 && raw.t_final.is_finite()) {
            return Err(fail("t_final", format!("t_final must be non-negative, got {}", raw.t_final)));
        }
        let sample_stride = match raw.sample_stride {
            None => 10,
            Some(s) if s >= 1 => s as usize,
            Some(s) => return Err(fail("sample_stride", format!("sample_stride must be at least 1, got {s}"))),
        };
        let field_points = match raw.field_points {
            None => 64,
            Some(m) if m >= 1 => m as usize,
            Some(m) => return Err(fail("field_points", format!("field_points must be at least 1, got {m}"))),
        };

        let mut tolerances: BTreeMap<String, f64> =
            DEFAULT_TOLERANCES.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (name, value) in raw.tolerances {
            if !tolerances.contains_key(&name) {
                let known: Vec<_> = DEFAULT_TOLERANCES.iter().map(|(k, _)| *k).collect();
                return Err(fail(&name, format!("unknown tolerance '{name}', expected one of {}", known.join(", "))));
            }
            if !(value > 0.0 && value.is_finite()) {
                return Err(fail(&name, format!("tolerance '{name}' must be positive, got {value}")));
            }
            tolerances.insert(name, value);
        }

        let n_max = raw.n_max as u32;
        let initial_state = match raw.initial_state {
            None => None,
            Some(RawInitial::Keyword(k)) if k == "random" => Some(InitialState::Random),
            Some(RawInitial::Keyword(k)) => {
                return Err(fail("initial_state", format!("initial_state must be \"random\" or an amplitude map, got \"{k}\"")))
            }
            Some(RawInitial::Amplitudes(map)) => {
                let mut out = BTreeMap::new();
                for (label, [re, im]) in map {
                    let coord = parse_coordinate(&label).ok_or_else(|| {
                        fail(&label, format!("'{label}' is not a coordinate label like q1[2] or p2[-1]"))
                    })?;
                    if coord.component > 1 || coord.mode.value().unsigned_abs() > u64::from(n_max) {
                        return Err(fail(&label, format!("'{label}' is outside 2 components and n_max {n_max}")));
                    }
                    if coord.mode.value() == 0 && im != 0.0 {
                        return Err(fail(&label, format!("zero mode '{label}' must be real")));
                    }
                    out.insert(coord, Complex64::new(re, im));
                }
                for (coord, z) in &out {
                    let partner = Coordinate { mode: coord.mode.neg(), ..*coord };
                    if let Some(w) = out.get(&partner) {
                        if (w - z.conj()).norm() > 1e-12 {
                            return Err(fail(
                                &partner.to_string(),
                                format!("'{partner}' must be the complex conjugate of '{coord}'"),
                            ));
                        }
                    }
                }
                Some(InitialState::Amplitudes(out))
            }
        };

        let params = DeformationParams::new(raw.theta, raw.theta_bar);
        if let Err(e) = ncfield::build_symplectic_structure(&params) {
            return Err(fail("theta_bar", e.to_string()));
        }

        Ok(Self {
            theta: raw.theta,
            theta_bar: raw.theta_bar,
            n_max,
            dt: raw.dt,
            t_final: raw.t_final,
            integrator: raw.integrator.unwrap_or(Integrator::Rk4),
            sample_stride,
            initial_state,
            initial_variables: raw.initial_variables,
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("out")),
            tolerances,
            field_points,
        })
    }

    pub fn params(&self) -> DeformationParams {
        DeformationParams::new(self.theta, self.theta_bar)
    }

    pub fn modes(&self) -> ModeSet {
        ModeSet::new(self.n_max).expect("validated on load")
    }

    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances
            .get(name)
            .copied()
            .unwrap_or_else(|| DEFAULT_TOLERANCES.iter().find(|(k, _)| *k == name).map(|(_, v)| *v).unwrap_or(0.0))
    }

    /// Builds the initial deformed-variable state. `None` if the config has no
    /// `initial_state`.
    pub fn initial_state(&self, seed: u64) -> Option<ncfield::Result<ModeState>> {
        let init = self.initial_state.as_ref()?;
        let modes = self.modes();
        let mut state = ModeState::zeros(2, modes);
        let filled = match init {
            InitialState::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut result = Ok(());
                for n in modes.nonnegative() {
                    for i in 0..2 {
                        for c in [Coordinate::q(i, n.value()), Coordinate::p(i, n.value())] {
                            let re = rng.random_range(-1.0..1.0);
                            let im = if n.value() == 0 { 0.0 } else { rng.random_range(-1.0..1.0) };
                            result = result.and(state.set_pair(c, Complex64::new(re, im)));
                        }
                    }
                }
                result
            }
            InitialState::Amplitudes(map) => map
                .iter()
                .try_for_each(|(c, z)| state.set_pair(*c, *z)),
        };
        Some(filled.and_then(|_| match self.initial_variables {
            Variables::Deformed => Ok(state),
            Variables::Canonical => {
                let coeffs = ncfield::solve_dressing(&self.params())?;
                ncfield::undress(&state, &coeffs)
            }
        }))
    }
}
