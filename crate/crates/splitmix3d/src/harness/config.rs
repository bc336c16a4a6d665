//! Experiment configuration: a TOML file with `[fields]`, `[dynamics]`,
//! `[task]`, and `[output]` sections. Parsing collects every offending key
//! before reporting, resolution fills documented defaults, and the resolved
//! form has a canonical serialization whose SHA-256 digest identifies the
//! run.

use crate::fields::{FunctionTriple, SplitVectorField, TrigPoly, Verdict};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::Path;
use thiserror::Error;
use toml::value::{Table, Value};

/// Why a config file was rejected.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("config does not parse as TOML: {0}")]
    Parse(String),
    #[error("invalid config:\n{}", problems.join("\n"))]
    Invalid {
        /// One entry per offending key, as `section.key: message`.
        problems: Vec<String>,
    },
}

/// The scalar profile triple, as declared under `[fields]`.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FieldsSpec {
    /// Pure sines with amplitudes A, B, C.
    Abc {
        #[serde(rename = "A")]
        a: f64,
        #[serde(rename = "B")]
        b: f64,
        #[serde(rename = "C")]
        c: f64,
    },
    /// General trigonometric polynomials; index j of each array is the
    /// coefficient of cos((j+1)x) or sin((j+1)x).
    Trigpoly {
        f1_cos: Vec<f64>,
        f1_sin: Vec<f64>,
        f2_cos: Vec<f64>,
        f2_sin: Vec<f64>,
        f3_cos: Vec<f64>,
        f3_sin: Vec<f64>,
    },
}

impl FieldsSpec {
    /// Builds the split vector field this spec describes.
    pub fn build(&self) -> Result<SplitVectorField, String> {
        match self {
            FieldsSpec::Abc { a, b, c } => Ok(SplitVectorField::abc(*a, *b, *c)),
            FieldsSpec::Trigpoly { f1_cos, f1_sin, f2_cos, f2_sin, f3_cos, f3_sin } => {
                let poly = |cos: &[f64], sin: &[f64], name: &str| -> Result<TrigPoly, String> {
                    let n = cos.len().max(sin.len());
                    let terms: Vec<(u32, f64, f64)> = (0..n)
                        .map(|j| {
                            (
                                j as u32 + 1,
                                cos.get(j).copied().unwrap_or(0.0),
                                sin.get(j).copied().unwrap_or(0.0),
                            )
                        })
                        .collect();
                    TrigPoly::new(&terms).map_err(|e| format!("fields.{name}: {e}"))
                };
                let f1 = poly(f1_cos, f1_sin, "f1_cos/f1_sin")?;
                let f2 = poly(f2_cos, f2_sin, "f2_cos/f2_sin")?;
                let f3 = poly(f3_cos, f3_sin, "f3_cos/f3_sin")?;
                let triple =
                    FunctionTriple::new(f1, f2, f3).map_err(|e| format!("fields: {e}"))?;
                Ok(SplitVectorField::new(triple))
            }
        }
    }
}

/// The `[dynamics]` section: switching-time mean, horizon, ensemble size,
/// and the master seed every random stream derives from.
#[derive(Debug, Clone, Serialize)]
pub struct Dynamics {
    pub h: f64,
    pub cycles: usize,
    pub trials: usize,
    pub seed: u64,
}

/// The `[task]` section: which diagnostic runs and its knobs, fully
/// defaulted. Every knob is echoed in the resolved config even when the
/// default was taken.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum TaskSpec {
    /// One orbit from `x0`, dumped cycle by cycle.
    Simulate { x0: [f64; 3] },
    /// Splitting-vs-deterministic-flow convergence over refinement levels.
    Converge { t: f64, levels: Vec<usize> },
    /// Plan a schedule steering `x` to `y` and verify it by replay.
    Steer { x: [f64; 3], y: [f64; 3] },
    /// Top Lyapunov exponent plus the full spectrum.
    Lyapunov { cadence: usize },
    /// Moment Lyapunov function on a grid of moment orders.
    Moment { q_grid: Vec<f64> },
    /// Lie bracket spanning certificates at the constructed points.
    Liecheck { level: String },
    /// Two-point diagnostics; `diag` picks invariance, drift, or meeting.
    Twopoint {
        diag: String,
        x0: [f64; 3],
        t_samples: usize,
        q: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        lambda_q: Option<f64>,
        scale: f64,
        pairs: usize,
        n_mc: usize,
        table_grid: usize,
        table_dirs: usize,
        table_cycles: usize,
        table_samples: usize,
        d0: f64,
    },
    /// Quenched correlation decay for a set of Fourier observables.
    Mixing { n_grid: usize, seeds: usize, window: [usize; 2], modes: Vec<[i64; 3]> },
    /// Frozen-flux magnetic field growth.
    Dynamo { ensemble: usize, b0: [f64; 3], snap_every: usize, burn_in: f64 },
    /// Spread of a point mass and stationarity of the uniform measure.
    Ergodicity { bins: usize, start: [f64; 3] },
}

impl TaskSpec {
    /// The task name as it appears in configs and on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            TaskSpec::Simulate { .. } => "simulate",
            TaskSpec::Converge { .. } => "converge",
            TaskSpec::Steer { .. } => "steer",
            TaskSpec::Lyapunov { .. } => "lyapunov",
            TaskSpec::Moment { .. } => "moment",
            TaskSpec::Liecheck { .. } => "liecheck",
            TaskSpec::Twopoint { .. } => "twopoint",
            TaskSpec::Mixing { .. } => "mixing",
            TaskSpec::Dynamo { .. } => "dynamo",
            TaskSpec::Ergodicity { .. } => "ergodicity",
        }
    }
}

/// All task names the CLI and the config accept.
pub const TASK_NAMES: [&str; 10] = [
    "simulate",
    "converge",
    "steer",
    "lyapunov",
    "moment",
    "liecheck",
    "twopoint",
    "mixing",
    "dynamo",
    "ergodicity",
];

/// The `[output]` section.
#[derive(Debug, Clone, Serialize)]
pub struct OutputSpec {
    pub dir: String,
    pub formats: Vec<String>,
}

/// A fully validated and defaulted experiment description. Two configs that
/// resolve to the same value produce byte-identical artifacts.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub fields: FieldsSpec,
    pub dynamics: Dynamics,
    pub task: TaskSpec,
    pub output: OutputSpec,
}

impl ResolvedConfig {
    /// Reads, parses, validates, and resolves a config file. Also returns
    /// the content hash of the raw input bytes.
    pub fn load(path: &Path) -> Result<(Self, String), ConfigError> {
        let bytes = std::fs::read(path)?;
        let text = String::from_utf8_lossy(&bytes);
        let resolved = Self::parse_str(&text)?;
        Ok((resolved, content_hash(&bytes)))
    }

    /// Parses and validates config text, collecting every offending key.
    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let root: Table =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let mut problems = Vec::new();

        for key in root.keys() {
            if !["fields", "dynamics", "task", "output"].contains(&key.as_str()) {
                problems.push(format!("{key}: unknown section"));
            }
        }

        let fields = parse_fields(&root, &mut problems);
        let dynamics = parse_dynamics(&root, &mut problems);
        let task = parse_task(&root, &mut problems);
        let output = parse_output(&root, &mut problems);

        if let (Some(dynamics), Some(task)) = (&dynamics, &task) {
            cross_checks(dynamics, task, &mut problems);
        }

        match (fields, dynamics, task, output) {
            (Some(fields), Some(dynamics), Some(task), Some(output)) if problems.is_empty() => {
                Ok(ResolvedConfig { fields, dynamics, task, output })
            }
            _ => Err(ConfigError::Invalid { problems }),
        }
    }

    /// The canonical serialization: sections and keys in schema order, all
    /// defaults explicit. This is what `config.resolved` contains.
    pub fn canonical_toml(&self) -> String {
        toml::to_string(self).expect("resolved config serializes")
    }

    /// SHA-256 over the canonical `[fields]`, `[dynamics]`, and `[task]`
    /// sections, as lowercase hex. Stable under reordering of keys in the
    /// input file; the output location does not change the hash.
    pub fn config_hash(&self) -> String {
        #[derive(Serialize)]
        struct Core<'a> {
            fields: &'a FieldsSpec,
            dynamics: &'a Dynamics,
            task: &'a TaskSpec,
        }
        let core = Core { fields: &self.fields, dynamics: &self.dynamics, task: &self.task };
        hex_digest(toml::to_string(&core).expect("core config serializes").as_bytes())
    }
}

/// Content hash of raw input bytes in the style of a blob store: the length
/// header is hashed along with the payload.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("blob {}\0", bytes.len()).as_bytes());
    hasher.update(bytes);
    hex(&hasher.finalize())
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex(&hasher.finalize())
}

fn hex(digest: &[u8]) -> String {
    let mut s = String::with_capacity(digest.len() * 2);
    for b in digest {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

fn section<'a>(root: &'a Table, name: &str, problems: &mut Vec<String>) -> Option<&'a Table> {
    match root.get(name) {
        Some(Value::Table(t)) => Some(t),
        Some(_) => {
            problems.push(format!("{name}: must be a table"));
            None
        }
        None => {
            problems.push(format!("{name}: missing section"));
            None
        }
    }
}

fn check_keys(t: &Table, sec: &str, allowed: &[&str], problems: &mut Vec<String>) {
    for key in t.keys() {
        if !allowed.contains(&key.as_str()) {
            problems.push(format!("{sec}.{key}: unknown key"));
        }
    }
}

fn number(t: &Table, sec: &str, key: &str, problems: &mut Vec<String>) -> Option<f64> {
    match t.get(key) {
        Some(Value::Float(x)) if x.is_finite() => Some(*x),
        Some(Value::Integer(n)) => Some(*n as f64),
        Some(_) => {
            problems.push(format!("{sec}.{key}: must be a finite number"));
            None
        }
        None => None,
    }
}

fn unsigned(t: &Table, sec: &str, key: &str, problems: &mut Vec<String>) -> Option<u64> {
    match t.get(key) {
        Some(Value::Integer(n)) if *n >= 0 => Some(*n as u64),
        Some(_) => {
            problems.push(format!("{sec}.{key}: must be a nonnegative integer"));
            None
        }
        None => None,
    }
}

fn string(t: &Table, sec: &str, key: &str, problems: &mut Vec<String>) -> Option<String> {
    match t.get(key) {
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            problems.push(format!("{sec}.{key}: must be a string"));
            None
        }
        None => None,
    }
}

fn number_array(t: &Table, sec: &str, key: &str, problems: &mut Vec<String>) -> Option<Vec<f64>> {
    match t.get(key) {
        Some(Value::Array(items)) => {
            let mut out = Vec::with_capacity(items.len());
            for item in items {
                match item {
                    Value::Float(x) if x.is_finite() => out.push(*x),
                    Value::Integer(n) => out.push(*n as f64),
                    _ => {
                        problems
                            .push(format!("{sec}.{key}: entries must be finite numbers"));
                        return None;
                    }
                }
            }
            Some(out)
        }
        Some(_) => {
            problems.push(format!("{sec}.{key}: must be an array of numbers"));
            None
        }
        None => None,
    }
}

fn point3(t: &Table, sec: &str, key: &str, problems: &mut Vec<String>) -> Option<[f64; 3]> {
    let arr = number_array(t, sec, key, problems)?;
    if arr.len() == 3 {
        Some([arr[0], arr[1], arr[2]])
    } else {
        problems.push(format!("{sec}.{key}: must have exactly 3 entries"));
        None
    }
}

fn parse_fields(root: &Table, problems: &mut Vec<String>) -> Option<FieldsSpec> {
    let t = section(root, "fields", problems)?;
    let kind = match string(t, "fields", "kind", problems) {
        Some(k) => k,
        None => {
            if !t.contains_key("kind") {
                problems
                    .push("fields.kind: missing (expected \"abc\" or \"trigpoly\")".into());
            }
            return None;
        }
    };
    let spec = match kind.as_str() {
        "abc" => {
            check_keys(t, "fields", &["kind", "A", "B", "C"], problems);
            let mut amp = |key: &str| -> Option<f64> {
                let v = number(t, "fields", key, problems);
                match v {
                    Some(x) if x != 0.0 => Some(x),
                    Some(_) => {
                        problems.push(format!("fields.{key}: must be nonzero"));
                        None
                    }
                    None => {
                        if !t.contains_key(key) {
                            problems.push(format!("fields.{key}: missing amplitude"));
                        }
                        None
                    }
                }
            };
            let (a, b, c) = (amp("A"), amp("B"), amp("C"));
            FieldsSpec::Abc { a: a?, b: b?, c: c? }
        }
        "trigpoly" => {
            let allowed =
                ["kind", "f1_cos", "f1_sin", "f2_cos", "f2_sin", "f3_cos", "f3_sin"];
            check_keys(t, "fields", &allowed, problems);
            let arr = |key: &str, problems: &mut Vec<String>| -> Vec<f64> {
                if t.contains_key(key) {
                    number_array(t, "fields", key, problems).unwrap_or_default()
                } else {
                    Vec::new()
                }
            };
            let spec = FieldsSpec::Trigpoly {
                f1_cos: arr("f1_cos", problems),
                f1_sin: arr("f1_sin", problems),
                f2_cos: arr("f2_cos", problems),
                f2_sin: arr("f2_sin", problems),
                f3_cos: arr("f3_cos", problems),
                f3_sin: arr("f3_sin", problems),
            };
            spec
        }
        other => {
            problems.push(format!(
                "fields.kind: unknown kind {other:?} (expected \"abc\" or \"trigpoly\")"
            ));
            return None;
        }
    };
    match spec.build() {
        Ok(field) => {
            let report = crate::fields::check_h1(&field.triple, 4096)
                .expect("profile triple evaluates on the validation grid");
            if matches!(report.verdict, Verdict::Fail) {
                let failing: Vec<String> = report
                    .checks
                    .iter()
                    .filter(|c| matches!(c.verdict, Verdict::Fail))
                    .map(|c| {
                        let pair = if c.pair == 0 { "f and f'" } else { "f' and f''" };
                        format!("f{} has a shared zero of {pair}", c.profile)
                    })
                    .collect();
                problems.push(format!(
                    "fields: profile triple fails the zero-separation condition ({})",
                    failing.join("; ")
                ));
                return None;
            }
            Some(spec)
        }
        Err(msg) => {
            problems.push(msg);
            None
        }
    }
}

fn parse_dynamics(root: &Table, problems: &mut Vec<String>) -> Option<Dynamics> {
    let t = section(root, "dynamics", problems)?;
    check_keys(t, "dynamics", &["h", "cycles", "trials", "seed"], problems);
    let h = match number(t, "dynamics", "h", problems) {
        Some(x) if x > 0.0 => Some(x),
        Some(_) => {
            problems.push("dynamics.h: must be positive".into());
            None
        }
        None => {
            if !t.contains_key("h") {
                problems.push("dynamics.h: missing mean switching time".into());
            }
            None
        }
    };
    let cycles = match unsigned(t, "dynamics", "cycles", problems) {
        Some(n) if n >= 1 => Some(n as usize),
        Some(_) => {
            problems.push("dynamics.cycles: must be at least 1".into());
            None
        }
        None => {
            if !t.contains_key("cycles") {
                problems.push("dynamics.cycles: missing cycle count".into());
            }
            None
        }
    };
    let trials = match unsigned(t, "dynamics", "trials", problems) {
        Some(n) if n >= 1 => Some(n as usize),
        Some(_) => {
            problems.push("dynamics.trials: must be at least 1".into());
            None
        }
        None if t.contains_key("trials") => None,
        None => Some(16),
    };
    let seed = match unsigned(t, "dynamics", "seed", problems) {
        Some(n) => Some(n),
        None if t.contains_key("seed") => None,
        None => Some(0),
    };
    Some(Dynamics { h: h?, cycles: cycles?, trials: trials?, seed: seed? })
}

fn parse_task(root: &Table, problems: &mut Vec<String>) -> Option<TaskSpec> {
    let t = section(root, "task", problems)?;
    let name = match string(t, "task", "name", problems) {
        Some(n) => n,
        None => {
            if !t.contains_key("name") {
                problems.push(format!("task.name: missing (one of {TASK_NAMES:?})"));
            }
            return None;
        }
    };
    let spec = match name.as_str() {
        "simulate" => {
            check_keys(t, "task", &["name", "x0"], problems);
            TaskSpec::Simulate {
                x0: opt_point3(t, "x0", [0.1, 0.2, 0.3], problems)?,
            }
        }
        "converge" => {
            check_keys(t, "task", &["name", "t", "levels"], problems);
            let time = match number(t, "task", "t", problems) {
                Some(x) if x > 0.0 => Some(x),
                Some(_) => {
                    problems.push("task.t: must be positive".into());
                    None
                }
                None if t.contains_key("t") => None,
                None => Some(1.0),
            };
            let levels = match t.get("levels") {
                None => Some(vec![4, 8, 16, 32]),
                Some(_) => {
                    let arr = number_array(t, "task", "levels", problems)?;
                    let mut out = Vec::with_capacity(arr.len());
                    for x in &arr {
                        if *x < 2.0 || x.fract() != 0.0 {
                            problems
                                .push("task.levels: entries must be integers >= 2".into());
                            return None;
                        }
                        out.push(*x as usize);
                    }
                    if out.len() < 2 {
                        problems.push("task.levels: need at least 2 levels".into());
                        return None;
                    }
                    Some(out)
                }
            };
            TaskSpec::Converge { t: time?, levels: levels? }
        }
        "steer" => {
            check_keys(t, "task", &["name", "x", "y"], problems);
            let x = req_point3(t, "x", problems);
            let y = req_point3(t, "y", problems);
            TaskSpec::Steer { x: x?, y: y? }
        }
        "lyapunov" => {
            check_keys(t, "task", &["name", "cadence"], problems);
            let cadence = match unsigned(t, "task", "cadence", problems) {
                Some(n) if n >= 1 => Some(n as usize),
                Some(_) => {
                    problems.push("task.cadence: must be at least 1".into());
                    None
                }
                None if t.contains_key("cadence") => None,
                None => Some(20),
            };
            TaskSpec::Lyapunov { cadence: cadence? }
        }
        "moment" => {
            check_keys(t, "task", &["name", "q_grid"], problems);
            let q_grid = match t.get("q_grid") {
                None => Some((-4..=4).map(|i| i as f64 * 0.05).collect::<Vec<f64>>()),
                Some(_) => number_array(t, "task", "q_grid", problems),
            };
            TaskSpec::Moment { q_grid: q_grid? }
        }
        "liecheck" => {
            check_keys(t, "task", &["name", "level"], problems);
            let level = match string(t, "task", "level", problems) {
                Some(l) => {
                    if ["all", "lifted", "projective", "twopoint"].contains(&l.as_str()) {
                        Some(l)
                    } else {
                        problems.push(format!(
                            "task.level: unknown level {l:?} (expected all, lifted, projective, or twopoint)"
                        ));
                        None
                    }
                }
                None if t.contains_key("level") => None,
                None => Some("all".to_string()),
            };
            TaskSpec::Liecheck { level: level? }
        }
        "twopoint" => {
            let allowed = [
                "name",
                "diag",
                "x0",
                "t_samples",
                "q",
                "lambda_q",
                "scale",
                "pairs",
                "n_mc",
                "table_grid",
                "table_dirs",
                "table_cycles",
                "table_samples",
                "d0",
            ];
            check_keys(t, "task", &allowed, problems);
            let diag = match string(t, "task", "diag", problems) {
                Some(d) => {
                    if ["invariance", "drift", "meeting"].contains(&d.as_str()) {
                        Some(d)
                    } else {
                        problems.push(format!(
                            "task.diag: unknown diagnostic {d:?} (expected invariance, drift, or meeting)"
                        ));
                        None
                    }
                }
                None if t.contains_key("diag") => None,
                None => {
                    problems.push(
                        "task.diag: missing (expected invariance, drift, or meeting)".into(),
                    );
                    None
                }
            };
            let q = match number(t, "task", "q", problems) {
                Some(x) if x > 0.0 && x <= 0.2 => Some(x),
                Some(_) => {
                    problems.push("task.q: must lie in (0, 0.2]".into());
                    None
                }
                None if t.contains_key("q") => None,
                None => Some(0.1),
            };
            let lambda_q = match t.get("lambda_q") {
                None => Some(None),
                Some(_) => number(t, "task", "lambda_q", problems).map(Some),
            };
            let scale = match number(t, "task", "scale", problems) {
                Some(x) if x > 0.0 && x <= 0.1 => Some(x),
                Some(_) => {
                    problems.push("task.scale: must lie in (0, 0.1]".into());
                    None
                }
                None if t.contains_key("scale") => None,
                None => Some(0.05),
            };
            let d0 = match number(t, "task", "d0", problems) {
                Some(x) if x > 0.0 && x < 1.0 => Some(x),
                Some(_) => {
                    problems.push("task.d0: must lie in (0, 1)".into());
                    None
                }
                None if t.contains_key("d0") => None,
                None => Some(1e-3),
            };
            let mut count = |key: &str, default: usize, min: usize| -> Option<usize> {
                match unsigned(t, "task", key, problems) {
                    Some(n) if n as usize >= min => Some(n as usize),
                    Some(_) => {
                        problems.push(format!("task.{key}: must be at least {min}"));
                        None
                    }
                    None if t.contains_key(key) => None,
                    None => Some(default),
                }
            };
            let t_samples = count("t_samples", 128, 64);
            let pairs = count("pairs", 1000, 1);
            let n_mc = count("n_mc", 64, 1);
            let table_grid = count("table_grid", 6, 2);
            let table_dirs = count("table_dirs", 48, 4);
            let table_cycles = count("table_cycles", 60, 1);
            let table_samples = count("table_samples", 128, 1);
            TaskSpec::Twopoint {
                diag: diag?,
                x0: opt_point3(t, "x0", [0.1, 0.2, 0.3], problems)?,
                t_samples: t_samples?,
                q: q?,
                lambda_q: lambda_q?,
                scale: scale?,
                pairs: pairs?,
                n_mc: n_mc?,
                table_grid: table_grid?,
                table_dirs: table_dirs?,
                table_cycles: table_cycles?,
                table_samples: table_samples?,
                d0: d0?,
            }
        }
        "mixing" => {
            check_keys(t, "task", &["name", "n_grid", "seeds", "window", "modes"], problems);
            let n_grid = match unsigned(t, "task", "n_grid", problems) {
                Some(n) if n >= 32 => Some(n as usize),
                Some(_) => {
                    problems.push("task.n_grid: must be at least 32".into());
                    None
                }
                None if t.contains_key("n_grid") => None,
                None => Some(128),
            };
            let seeds = match unsigned(t, "task", "seeds", problems) {
                Some(n) if n >= 4 => Some(n as usize),
                Some(_) => {
                    problems.push("task.seeds: must be at least 4".into());
                    None
                }
                None if t.contains_key("seeds") => None,
                None => Some(8),
            };
            let window = match t.get("window") {
                None => Some([5usize, 60usize]),
                Some(_) => {
                    let arr = number_array(t, "task", "window", problems)?;
                    if arr.len() != 2
                        || arr.iter().any(|x| *x < 0.0 || x.fract() != 0.0)
                        || arr[0] < 1.0
                        || arr[1] < arr[0] + 9.0
                    {
                        problems.push(
                            "task.window: must be [start, end] with start >= 1 and end >= start + 9"
                                .into(),
                        );
                        None
                    } else {
                        Some([arr[0] as usize, arr[1] as usize])
                    }
                }
            };
            let modes = match t.get("modes") {
                None => Some(vec![[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]]),
                Some(Value::Array(rows)) => {
                    let mut out: Vec<[i64; 3]> = Vec::with_capacity(rows.len());
                    let mut ok = true;
                    for row in rows {
                        match row {
                            Value::Array(xs)
                                if xs.len() == 3
                                    && xs.iter().all(|x| matches!(x, Value::Integer(_))) =>
                            {
                                let k: Vec<i64> =
                                    xs.iter().map(|x| x.as_integer().unwrap()).collect();
                                if k.iter().all(|&c| c == 0) {
                                    problems
                                        .push("task.modes: the zero mode is not allowed".into());
                                    ok = false;
                                } else if k.iter().any(|&c| c.abs() > 1000) {
                                    problems.push(
                                        "task.modes: components must lie in [-1000, 1000]".into(),
                                    );
                                    ok = false;
                                } else {
                                    out.push([k[0], k[1], k[2]]);
                                }
                            }
                            _ => {
                                problems.push(
                                    "task.modes: entries must be integer wavevectors [kx, ky, kz]"
                                        .into(),
                                );
                                ok = false;
                            }
                        }
                    }
                    if out.len() < 4 {
                        problems.push("task.modes: need at least 4 modes".into());
                        ok = false;
                    }
                    ok.then_some(out)
                }
                Some(_) => {
                    problems.push("task.modes: must be an array of wavevectors".into());
                    None
                }
            };
            TaskSpec::Mixing { n_grid: n_grid?, seeds: seeds?, window: window?, modes: modes? }
        }
        "dynamo" => {
            check_keys(t, "task", &["name", "ensemble", "b0", "snap_every", "burn_in"], problems);
            let ensemble = match unsigned(t, "task", "ensemble", problems) {
                Some(n) if n >= 10_000 => Some(n as usize),
                Some(_) => {
                    problems.push("task.ensemble: must be at least 10000".into());
                    None
                }
                None if t.contains_key("ensemble") => None,
                None => Some(10_000),
            };
            let b0 = match opt_point3(t, "b0", [0.0, 0.0, 1.0], problems) {
                Some(v) => {
                    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                    if (norm - 1.0).abs() <= 1e-9 {
                        Some(v)
                    } else {
                        problems.push("task.b0: must be a unit vector".into());
                        None
                    }
                }
                None => None,
            };
            let snap_every = match unsigned(t, "task", "snap_every", problems) {
                Some(n) if n >= 1 => Some(n as usize),
                Some(_) => {
                    problems.push("task.snap_every: must be at least 1".into());
                    None
                }
                None if t.contains_key("snap_every") => None,
                None => Some(20),
            };
            let burn_in = match number(t, "task", "burn_in", problems) {
                Some(x) if (0.0..0.5).contains(&x) => Some(x),
                Some(_) => {
                    problems.push("task.burn_in: must lie in [0, 0.5)".into());
                    None
                }
                None if t.contains_key("burn_in") => None,
                None => Some(0.3),
            };
            TaskSpec::Dynamo {
                ensemble: ensemble?,
                b0: b0?,
                snap_every: snap_every?,
                burn_in: burn_in?,
            }
        }
        "ergodicity" => {
            check_keys(t, "task", &["name", "bins", "start"], problems);
            let bins = match unsigned(t, "task", "bins", problems) {
                Some(n) if n >= 2 => Some(n as usize),
                Some(_) => {
                    problems.push("task.bins: must be at least 2".into());
                    None
                }
                None if t.contains_key("bins") => None,
                None => Some(8),
            };
            TaskSpec::Ergodicity {
                bins: bins?,
                start: opt_point3(t, "start", [0.1, 0.2, 0.3], problems)?,
            }
        }
        other => {
            problems.push(format!("task.name: unknown task {other:?} (one of {TASK_NAMES:?})"));
            return None;
        }
    };
    Some(spec)
}

fn opt_point3(
    t: &Table,
    key: &str,
    default: [f64; 3],
    problems: &mut Vec<String>,
) -> Option<[f64; 3]> {
    if t.contains_key(key) {
        point3(t, "task", key, problems)
    } else {
        Some(default)
    }
}

fn req_point3(t: &Table, key: &str, problems: &mut Vec<String>) -> Option<[f64; 3]> {
    if t.contains_key(key) {
        point3(t, "task", key, problems)
    } else {
        problems.push(format!("task.{key}: missing point"));
        None
    }
}

fn parse_output(root: &Table, problems: &mut Vec<String>) -> Option<OutputSpec> {
    let t = match root.get("output") {
        None => {
            return Some(OutputSpec {
                dir: "out".to_string(),
                formats: vec!["csv".to_string(), "json".to_string()],
            })
        }
        Some(Value::Table(t)) => t,
        Some(_) => {
            problems.push("output: must be a table".into());
            return None;
        }
    };
    check_keys(t, "output", &["dir", "formats"], problems);
    let dir = match string(t, "output", "dir", problems) {
        Some(d) => Some(d),
        None if t.contains_key("dir") => None,
        None => Some("out".to_string()),
    };
    let formats = match t.get("formats") {
        None => Some(vec!["csv".to_string(), "json".to_string()]),
        Some(Value::Array(items)) => {
            let mut out = Vec::new();
            let mut ok = true;
            for item in items {
                match item {
                    Value::String(s) if s == "csv" || s == "json" => out.push(s.clone()),
                    _ => {
                        problems.push(
                            "output.formats: entries must be \"csv\" or \"json\"".into(),
                        );
                        ok = false;
                    }
                }
            }
            ok.then_some(out)
        }
        Some(_) => {
            problems.push("output.formats: must be an array".into());
            None
        }
    };
    Some(OutputSpec { dir: dir?, formats: formats? })
}

fn cross_checks(dynamics: &Dynamics, task: &TaskSpec, problems: &mut Vec<String>) {
    match task {
        TaskSpec::Ergodicity { .. } if dynamics.trials < 10_000 => {
            problems.push("dynamics.trials: ergodicity needs at least 10000 trials".into());
        }
        TaskSpec::Lyapunov { .. } if dynamics.trials < 8 || dynamics.cycles < 1000 => {
            if dynamics.trials < 8 {
                problems.push("dynamics.trials: lyapunov estimation needs at least 8".into());
            }
            if dynamics.cycles < 1000 {
                problems.push("dynamics.cycles: lyapunov estimation needs at least 1000".into());
            }
        }
        TaskSpec::Moment { .. } if dynamics.trials < 10_000 || dynamics.cycles < 50 => {
            if dynamics.trials < 10_000 {
                problems
                    .push("dynamics.trials: moment curve sampling needs at least 10000".into());
            }
            if dynamics.cycles < 50 {
                problems.push("dynamics.cycles: moment curve needs at least 50".into());
            }
        }
        TaskSpec::Twopoint { diag, .. } if diag == "meeting" && dynamics.trials < 1000 => {
            problems.push("dynamics.trials: meeting statistics need at least 1000 trials".into());
        }
        TaskSpec::Mixing { window, .. } if dynamics.cycles < window[1] => {
            problems.push(format!(
                "dynamics.cycles: must reach the fit window end {}",
                window[1]
            ));
        }
        _ => {}
    }
}
