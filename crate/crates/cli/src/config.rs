//! Run configuration: a UTF-8 `key = value` document, one key per line,
//! `#` starting a comment. Every problem in a document is reported at once.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use sha2::{Digest, Sha256};
use stp_core::fixedpoint::Grid;
use stp_core::maps::{parse_map, MapKind};
use stp_core::sequences::parse_sequence;

pub const MIN_Q: u32 = 16;
pub const MAX_Q: u32 = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verb {
    Limsup,
    Kurzweil,
    FixedCenter,
    Marchese,
    Loglaw,
    AlphaSurvey,
    Equidist,
    MeasureVn,
    MeasurePair,
    UnionBound,
    IntervalLemma,
}

impl Verb {
    pub const ALL: [Verb; 11] = [
        Verb::Limsup,
        Verb::Kurzweil,
        Verb::FixedCenter,
        Verb::Marchese,
        Verb::Loglaw,
        Verb::AlphaSurvey,
        Verb::Equidist,
        Verb::MeasureVn,
        Verb::MeasurePair,
        Verb::UnionBound,
        Verb::IntervalLemma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Verb::Limsup => "limsup",
            Verb::Kurzweil => "kurzweil",
            Verb::FixedCenter => "fixed-center",
            Verb::Marchese => "marchese",
            Verb::Loglaw => "loglaw",
            Verb::AlphaSurvey => "alpha-survey",
            Verb::Equidist => "equidist",
            Verb::MeasureVn => "measure-vn",
            Verb::MeasurePair => "measure-pair",
            Verb::UnionBound => "union-bound",
            Verb::IntervalLemma => "interval-lemma",
        }
    }

    pub fn parse(text: &str) -> Option<Verb> {
        Verb::ALL.into_iter().find(|v| v.name() == text)
    }

    /// Keys this verb reads beyond the common ones, with defaults
    /// (`None` marks a required key).
    pub fn keys(self) -> &'static [(&'static str, Option<&'static str>)] {
        match self {
            Verb::Limsup => &[
                ("map", None),
                ("seq", None),
                ("n", None),
                ("samples", Some("1000")),
                ("alpha", Some("sqrt2m1")),
                ("x", Some("0")),
                ("tails", Some("")),
                ("gate", Some("0.95")),
            ],
            Verb::Kurzweil => &[
                ("seq", None),
                ("n", None),
                ("samples", Some("1000")),
                ("alpha", Some("sqrt2m1")),
                ("x", Some("0")),
                ("tails", Some("")),
                ("gate", Some("0.95")),
            ],
            Verb::FixedCenter => &[
                ("map", None),
                ("seq", None),
                ("n", None),
                ("samples", Some("1000")),
                ("y_center", Some("1/2")),
                ("tails", Some("")),
                ("gate", Some("0.95")),
            ],
            Verb::Marchese => &[
                ("map", None),
                ("seq", None),
                ("n", None),
                ("delta", Some("1")),
                ("delta_prime", Some("1")),
                ("draws", Some("1")),
                ("gate", Some("0.5")),
            ],
            Verb::Loglaw => &[
                ("map", None),
                ("radius_exponents", Some("5..14")),
                ("samples", Some("64")),
                ("cap", Some("100000000")),
                ("draws", Some("1")),
                ("gate", Some("0.8")),
            ],
            Verb::AlphaSurvey => &[
                ("map", None),
                ("seq", None),
                ("n", None),
                ("samples", Some("100")),
                ("alpha_samples", Some("100")),
                ("theta", Some("0.5")),
                ("x", Some("0")),
                ("gate", Some("0.9")),
            ],
            Verb::Equidist => &[
                ("map", None),
                ("alpha", Some("sqrt2m1")),
                ("x", Some("0")),
                ("y", Some("0")),
                ("checkpoints", Some("1000,10000,100000,1000000")),
            ],
            Verb::MeasureVn => &[
                ("map", None),
                ("seq", None),
                ("n", None),
                ("samples", Some("1000000")),
                ("exhaustive_bits", Some("0")),
                ("sigmas", Some("4")),
            ],
            Verb::MeasurePair => &[
                ("map", None),
                ("seq", None),
                ("pairs", None),
                ("samples", Some("1000000")),
                ("exhaustive_bits", Some("0")),
                ("sigmas", Some("4")),
            ],
            Verb::UnionBound => &[
                ("map", Some("rot:golden")),
                ("seq", Some("bprime(harmonic:1)")),
                ("t", Some("1")),
                ("n0", Some("1")),
                ("n", Some("40000000")),
                ("samples", Some("1000000")),
                ("sigmas", Some("4")),
            ],
            Verb::IntervalLemma => &[("lemma_q", Some("65536")), ("samples", Some("1000")), ("density", Some("0.3"))],
        }
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Keys every verb accepts. `out` and `workers` never enter the hash.
const COMMON: [(&str, Option<&str>); 5] =
    [("verb", None), ("q", Some("64")), ("seed", Some("1")), ("out", Some("out")), ("workers", Some("0"))];

const UNHASHED: [&str; 2] = ["out", "workers"];

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Text(String),
    Int(u64),
    Real(f64),
    List(Vec<u64>),
    Pairs(Vec<(u64, u64)>),
    Range(u32, u32),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        match self {
            Value::Text(s) => f.write_str(s),
            Value::Int(n) => write!(f, "{n}"),
            Value::Real(x) => write!(f, "{x}"),
            Value::List(v) => f.write_str(&join(v)),
            Value::Pairs(v) => {
                f.write_str(&v.iter().map(|(j, k)| format!("{j}:{k}")).collect::<Vec<_>>().join(","))
            }
            Value::Range(a, b) => write!(f, "{a}..{b}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Every error found in one document.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// A validated configuration with every default resolved.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub verb: Verb,
    values: BTreeMap<&'static str, Value>,
    pub out: PathBuf,
    pub workers: usize,
}

impl RunConfig {
    fn get(&self, key: &str) -> &Value {
        self.values.get(key).unwrap_or_else(|| panic!("{key} is not a key of {}", self.verb))
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn text(&self, key: &str) -> &str {
        match self.get(key) {
            Value::Text(s) => s,
            v => panic!("{key} = {v} is not text"),
        }
    }

    pub fn int(&self, key: &str) -> u64 {
        match self.get(key) {
            Value::Int(n) => *n,
            v => panic!("{key} = {v} is not an integer"),
        }
    }

    pub fn real(&self, key: &str) -> f64 {
        match self.get(key) {
            Value::Real(x) => *x,
            v => panic!("{key} = {v} is not a number"),
        }
    }

    pub fn list(&self, key: &str) -> &[u64] {
        match self.get(key) {
            Value::List(v) => v,
            v => panic!("{key} = {v} is not a list"),
        }
    }

    pub fn pairs(&self) -> &[(u64, u64)] {
        match self.get("pairs") {
            Value::Pairs(v) => v,
            v => panic!("pairs = {v} is not a pair list"),
        }
    }

    pub fn range(&self, key: &str) -> (u32, u32) {
        match self.get(key) {
            Value::Range(a, b) => (*a, *b),
            v => panic!("{key} = {v} is not a range"),
        }
    }

    pub fn q(&self) -> u32 {
        self.int("q") as u32
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.q()).expect("validated")
    }

    pub fn seed(&self) -> u64 {
        self.int("seed")
    }

    pub fn map(&self) -> &str {
        self.text("map")
    }

    pub fn seq(&self) -> &str {
        self.text("seq")
    }

    /// Horizon `N`; for `measure-vn` the largest requested index.
    pub fn horizon(&self) -> u64 {
        match self.get("n") {
            Value::List(v) => v.iter().copied().max().unwrap_or(1),
            _ => self.int("n"),
        }
    }

    pub fn samples(&self) -> u64 {
        self.int("samples")
    }

    /// Tail starts: explicit, or `1, N/4, N/2, 3N/4`.
    pub fn tails(&self) -> Vec<u64> {
        let v = self.list("tails");
        if v.is_empty() {
            stp_core::experiments::tail_starts(self.horizon())
        } else {
            v.to_vec()
        }
    }

    /// Sorted `key = value` lines of every hashed key.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    /// SHA-256 of [`canonical`](Self::canonical), hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    pub fn canonical_map(&self) -> BTreeMap<String, String> {
        self.values.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    /// Applies `STP_OUT_DIR` and `STP_WORKERS`, the only environment overrides.
    pub fn apply_env(&mut self) -> Result<(), ConfigErrors> {
        if let Ok(dir) = std::env::var("STP_OUT_DIR") {
            if !dir.is_empty() {
                self.out = PathBuf::from(dir);
            }
        }
        if let Ok(w) = std::env::var("STP_WORKERS") {
            self.workers = w.trim().parse().map_err(|_| {
                ConfigErrors(vec![ConfigError { line: None, message: format!("STP_WORKERS={w:?} is not a count") }])
            })?;
        }
        Ok(())
    }
}

struct Entry<'a> {
    value: &'a str,
    line: usize,
}

fn err(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError { line, message: message.into() }
}

fn parse_list(text: &str) -> Result<Vec<u64>, String> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',').map(|s| s.trim().parse::<u64>().map_err(|_| format!("{s:?} is not an integer"))).collect()
}

fn increasing_positive(v: &[u64]) -> bool {
    v.first().map_or(true, |&a| a >= 1) && v.windows(2).all(|w| w[0] < w[1])
}

/// Parses one value of `key` into its typed form.
fn parse_value(verb: Verb, key: &str, raw: &str) -> Result<Value, String> {
    let raw = raw.trim();
    let int = |min: u64| -> Result<Value, String> {
        let n: u64 = raw.parse().map_err(|_| format!("{key} = {raw:?} is not an integer"))?;
        if n < min {
            return Err(format!("{key} must be at least {min}, got {n}"));
        }
        Ok(Value::Int(n))
    };
    let real = |lo: f64, hi: f64| -> Result<Value, String> {
        let x: f64 = raw.parse().map_err(|_| format!("{key} = {raw:?} is not a number"))?;
        if !(lo..=hi).contains(&x) {
            return Err(format!("{key} must lie in [{lo}, {hi}], got {x}"));
        }
        Ok(Value::Real(x))
    };
    match key {
        "q" => {
            let q: u32 = raw.parse().map_err(|_| format!("q = {raw:?} is not an integer"))?;
            if !(MIN_Q..=MAX_Q).contains(&q) {
                return Err(format!("q must lie in [{MIN_Q}, {MAX_Q}], got {q}"));
            }
            Ok(Value::Int(q as u64))
        }
        "n" if verb == Verb::MeasureVn => {
            let v = parse_list(raw)?;
            if v.is_empty() || v.contains(&0) {
                return Err("n must list strip indices ≥ 1".into());
            }
            Ok(Value::List(v))
        }
        "n" => int(1),
        "seed" | "workers" => int(0),
        "samples" | "alpha_samples" | "cap" | "draws" | "delta" | "delta_prime" => int(1),
        "lemma_q" => {
            let v = int(1024)?;
            if let Value::Int(q) = v {
                if q % 512 != 0 || q > 1 << 26 {
                    return Err(format!("lemma_q must be a multiple of 512 up to 2^26, got {q}"));
                }
            }
            Ok(v)
        }
        "exhaustive_bits" => {
            let v = int(0)?;
            if let Value::Int(b) = v {
                if b != 0 && !(4..=12).contains(&b) {
                    return Err(format!("exhaustive_bits must be 0 (off) or in [4, 12], got {b}"));
                }
            }
            Ok(v)
        }
        "gate" | "theta" => real(0.0, 1.0),
        "density" => real(1e-6, 1.0),
        "sigmas" => real(0.5, 100.0),
        "tails" | "checkpoints" | "t" | "n0" => {
            let v = parse_list(raw)?;
            if !increasing_positive(&v) {
                return Err(format!("{key} must be positive and strictly increasing"));
            }
            if key != "tails" && v.is_empty() {
                return Err(format!("{key} must not be empty"));
            }
            Ok(Value::List(v))
        }
        "pairs" => {
            let v = raw
                .split(',')
                .map(|p| {
                    let (j, k) = p.split_once(':').ok_or_else(|| format!("pair {p:?} is not j:k"))?;
                    let j: u64 = j.trim().parse().map_err(|_| format!("pair {p:?} is not j:k"))?;
                    let k: u64 = k.trim().parse().map_err(|_| format!("pair {p:?} is not j:k"))?;
                    if j == 0 || j >= k {
                        return Err(format!("pair {p:?} needs 1 ≤ j < k"));
                    }
                    Ok((j, k))
                })
                .collect::<Result<Vec<_>, String>>()?;
            Ok(Value::Pairs(v))
        }
        "radius_exponents" => {
            let (a, b) = raw.split_once("..").ok_or_else(|| format!("{key} = {raw:?} is not a..b"))?;
            let a: u32 = a.trim().parse().map_err(|_| format!("{key} = {raw:?} is not a..b"))?;
            let b: u32 = b.trim().parse().map_err(|_| format!("{key} = {raw:?} is not a..b"))?;
            if !(1 <= a && a < b && b <= 60) {
                return Err(format!("{key} needs 1 ≤ a < b ≤ 60, got {a}..{b}"));
            }
            Ok(Value::Range(a, b))
        }
        "seq" => parse_sequence(raw).map(|s| Value::Text(s.to_string())).map_err(|e| format!("seq: {e}")),
        _ => {
            if raw.is_empty() {
                return Err(format!("{key} must not be empty"));
            }
            Ok(Value::Text(raw.to_string()))
        }
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let mut errors = Vec::new();
    let mut entries: BTreeMap<&str, Entry<'_>> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errors.push(err(Some(line), format!("expected `key = value`, got {content:?}")));
            continue;
        };
        let key = key.trim();
        if let Some(first) = entries.get(key) {
            errors.push(err(Some(line), format!("duplicate key {key:?} (first set on line {}, again on line {line})", first.line)));
            continue;
        }
        entries.insert(key, Entry { value: value.trim(), line });
    }

    let verb = match entries.get("verb") {
        None => {
            errors.push(err(None, "missing required key \"verb\""));
            None
        }
        Some(e) => match Verb::parse(e.value) {
            Some(v) => Some(v),
            None => {
                let known = Verb::ALL.map(Verb::name).join(", ");
                errors.push(err(Some(e.line), format!("unknown verb {:?} (expected one of {known})", e.value)));
                None
            }
        },
    };

    let all_keys: Vec<&str> = COMMON
        .iter()
        .map(|k| k.0)
        .chain(Verb::ALL.iter().flat_map(|v| v.keys().iter().map(|k| k.0)))
        .collect();
    for (key, e) in &entries {
        if !all_keys.contains(key) {
            errors.push(err(Some(e.line), format!("unknown key {key:?}")));
        } else if let Some(v) = verb {
            if !COMMON.iter().any(|c| c.0 == *key) && !v.keys().iter().any(|c| c.0 == *key) {
                errors.push(err(Some(e.line), format!("key {key:?} is not used by verb {v}")));
            }
        }
    }

    let Some(verb) = verb else {
        return Err(ConfigErrors(errors));
    };

    let mut values: BTreeMap<&'static str, Value> = BTreeMap::new();
    let mut lines: BTreeMap<&'static str, Option<usize>> = BTreeMap::new();
    for &(key, default) in COMMON.iter().skip(1).chain(verb.keys()) {
        let (raw, line) = match (entries.get(key), default) {
            (Some(e), _) => (e.value, Some(e.line)),
            (None, Some(d)) => (d, None),
            (None, None) => {
                errors.push(err(None, format!("verb {verb} requires key {key:?}")));
                continue;
            }
        };
        match parse_value(verb, key, raw) {
            Ok(v) => {
                values.insert(key, v);
                lines.insert(key, line);
            }
            Err(m) => errors.push(err(line, m)),
        }
    }

    check_semantics(verb, &values, &lines, &mut errors);
    if !errors.is_empty() {
        errors.sort_by_key(|e| e.line.unwrap_or(usize::MAX));
        return Err(ConfigErrors(errors));
    }

    let out = match values.remove("out") {
        Some(Value::Text(s)) => PathBuf::from(s),
        _ => unreachable!("out has a default"),
    };
    let workers = match values.remove("workers") {
        Some(Value::Int(w)) => w as usize,
        _ => unreachable!("workers has a default"),
    };
    debug_assert!(UNHASHED.iter().all(|k| !values.contains_key(k)));
    values.insert("verb", Value::Text(verb.name().into()));
    Ok(RunConfig { verb, values, out, workers })
}

/// The seed in a trailing `random:<seed>`, if any.
pub fn random_seed_of(map: &str) -> Option<u64> {
    let (head, seed) = map.trim().rsplit_once(':')?;
    if head.ends_with("random") {
        seed.parse().ok()
    } else {
        None
    }
}

/// The map spec used for draw `i`: draw 0 is the spec itself, later draws
/// advance the trailing `random:<seed>`.
pub fn map_for_draw(map: &str, i: u64) -> String {
    match random_seed_of(map) {
        Some(seed) if i > 0 => {
            let (head, _) = map.trim().rsplit_once(':').expect("has a seed");
            format!("{head}:{}", seed.wrapping_add(i))
        }
        _ => map.trim().to_string(),
    }
}

fn check_semantics(
    verb: Verb,
    values: &BTreeMap<&'static str, Value>,
    lines: &BTreeMap<&'static str, Option<usize>>,
    errors: &mut Vec<ConfigError>,
) {
    let line = |k: &str| lines.get(k).copied().flatten();
    let int = |k: &str| match values.get(k) {
        Some(Value::Int(n)) => Some(*n),
        _ => None,
    };
    let grid = int("q").and_then(|q| Grid::new(q as u32).ok());

    if let (Some(g), Some(Value::Text(m))) = (grid, values.get("map")) {
        match parse_map(m, g) {
            Err(e) => errors.push(err(line("map"), format!("map: {e}"))),
            Ok(f) => {
                if verb == Verb::Marchese {
                    if !matches!(f.kind(), MapKind::Iet(_)) {
                        errors.push(err(line("map"), "marchese needs an interval exchange map"));
                    } else {
                        let d = f.discontinuities().len() as u64;
                        for k in ["delta", "delta_prime"] {
                            if int(k).is_some_and(|i| i > d) {
                                errors.push(err(line(k), format!("{k} exceeds the {d} discontinuities of the map")));
                            }
                        }
                    }
                }
            }
        }
        if int("draws").is_some_and(|d| d > 1) && random_seed_of(m).is_none() {
            errors.push(err(line("draws"), "draws > 1 needs a map ending in random:<seed>"));
        }
    }
    for k in ["alpha", "x", "y", "y_center"] {
        if let (Some(g), Some(Value::Text(p))) = (grid, values.get(k)) {
            if let Err(e) = g.parse_point(p) {
                errors.push(err(line(k), format!("{k}: {e}")));
            }
        }
    }
    let n = int("n");
    if let (Some(n), Some(Value::List(t))) = (n, values.get("tails")) {
        if t.iter().any(|&s| s > n) {
            errors.push(err(line("tails"), "tail starts must not exceed n"));
        }
    }
    let minimum = match verb {
        Verb::Limsup | Verb::Kurzweil | Verb::FixedCenter => 1000,
        Verb::AlphaSurvey => 100,
        Verb::MeasureVn | Verb::MeasurePair | Verb::UnionBound => stp_core::geometry::MIN_SAMPLES,
        _ => 1,
    };
    if int("samples").is_some_and(|s| s < minimum) {
        errors.push(err(line("samples"), format!("verb {verb} needs samples ≥ {minimum}")));
    }
    if verb == Verb::AlphaSurvey && int("alpha_samples").is_some_and(|s| s < 100) {
        errors.push(err(line("alpha_samples"), "alpha-survey needs alpha_samples ≥ 100"));
    }
    if let Some(Value::List(c)) = values.get("checkpoints") {
        if c.first().is_some_and(|&c| c < 1000) {
            errors.push(err(line("checkpoints"), "checkpoints must be at least 1000"));
        }
    }
    if verb == Verb::UnionBound {
        if let (Some(n), Some(Value::List(n0))) = (n, values.get("n0")) {
            if n0.iter().any(|&s| s > n) {
                errors.push(err(line("n0"), "n0 must not exceed n"));
            }
        }
        if let (Some(n), Some(Value::List(t))) = (n, values.get("t")) {
            if t.iter().any(|&t| t.checked_mul(n).map_or(true, |h| h > 1 << 34)) {
                errors.push(err(line("n"), "t·n must stay below 2^34"));
            }
        }
    }
}
