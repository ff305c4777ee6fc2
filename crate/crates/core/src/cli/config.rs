//! Line-based experiment configuration.
//!
//! ```text
//! # comment
//! task = sweep
//! m = 1
//! N = 16
//! lattice = [1, 0, 0, 1]
//! beta = [(0, 0, 0, 0, 1, 0)]
//! ```
//!
//! One `key = value` per line. Values are bare tokens or bracketed lists
//! whose items are tokens or parenthesised tuples. Keys are case-sensitive
//! (`N` is the grid size, `n` the half dimension of the target manifold).
//! Coefficient tuples are `(k1, k2, row, col, re, im)`: the entry
//! `(row, col)` of the Fourier coefficient at mode `(k1, k2)`; repeated
//! entries add up.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}unknown key `{key}`", location(*line))]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: duplicate key `{key}` (first set on line {first})")]
    Duplicate { key: String, line: usize, first: usize },
    #[error("override {index}, column {column}: {message}")]
    Override {
        index: usize,
        column: usize,
        message: String,
    },
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
}

fn location(line: usize) -> String {
    if line == 0 {
        "command line: ".to_string()
    } else {
        format!("line {line}: ")
    }
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Index,
    Covers,
    Sweep,
    Weitzenboeck,
    Factor,
    Schur,
}

impl Task {
    pub const ALL: [Task; 6] = [
        Task::Index,
        Task::Covers,
        Task::Sweep,
        Task::Weitzenboeck,
        Task::Factor,
        Task::Schur,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Index => "index",
            Task::Covers => "covers",
            Task::Sweep => "sweep",
            Task::Weitzenboeck => "weitzenboeck",
            Task::Factor => "factor",
            Task::Schur => "schur",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown task `{s}`"))
    }
}

/// One `(k1, k2, row, col, re, im)` entry of a coefficient list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientEntry {
    pub k1: i64,
    pub k2: i64,
    pub row: usize,
    pub col: usize,
    pub re: f64,
    pub im: f64,
}

/// A validated experiment description. Defaults are those of [`Default`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: Task,
    /// Bundle rank `m`.
    pub rank: usize,
    /// Grid size `N`.
    pub grid: usize,
    /// `[v1x, v1y, v2x, v2y]`.
    pub lattice: [f64; 4],
    pub tau_min: f64,
    pub tau_max: f64,
    pub samples: usize,
    pub seed: u64,
    /// Operator parameter for `weitzenboeck`.
    pub tau: f64,
    pub linear: Vec<CoefficientEntry>,
    pub antilinear: Vec<CoefficientEntry>,
    /// Half dimension `n` for `index`.
    pub half_dim: i64,
    pub genus: i64,
    pub c1: i64,
    /// Cover degree for `covers`.
    pub degree: i64,
    /// Base point, probe radius and probe count for `schur`.
    pub tau0: f64,
    pub radius: f64,
    pub probes: usize,
    /// CSV with header `row,col,re,im` for `factor`; random when absent.
    pub matrix: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub plot: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: Task::Sweep,
            rank: 1,
            grid: 16,
            lattice: [1.0, 0.0, 0.0, 1.0],
            tau_min: -2.0,
            tau_max: 2.0,
            samples: 201,
            seed: 0,
            tau: 1.0,
            linear: Vec::new(),
            antilinear: Vec::new(),
            half_dim: 2,
            genus: 0,
            c1: 0,
            degree: 1,
            tau0: 0.0,
            radius: 1.0,
            probes: 41,
            matrix: None,
            out: None,
            plot: false,
        }
    }
}

pub const KEYS: [&str; 21] = [
    "task", "m", "N", "lattice", "tau_min", "tau_max", "samples", "seed", "tau", "A", "beta", "n", "g",
    "c1", "d", "tau0", "radius", "probes", "matrix", "out", "plot",
];

#[derive(Debug, Clone, PartialEq)]
enum Item {
    Token(String),
    Tuple(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Token(String),
    List(Vec<Item>),
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: Value,
    line: usize,
}

/// Parsed but not yet interpreted `key = value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

/// Split at top-level commas, returning `(start column offset, piece)`.
fn split_top(text: &str, line: usize, base: usize) -> Result<Vec<(usize, &str)>, ConfigError> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in text.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(syntax(line, base + i, "unbalanced `)`"));
                }
            }
            ',' if depth == 0 => {
                out.push((start, &text[start..i]));
                start = i + 1;
            }
            '[' | ']' => return Err(syntax(line, base + i, "nested lists are not supported")),
            _ => {}
        }
    }
    if depth != 0 {
        return Err(syntax(line, base + text.len(), "unclosed `(`"));
    }
    out.push((start, &text[start..]));
    Ok(out)
}

fn token(text: &str, line: usize, column: usize) -> Result<String, ConfigError> {
    let t = text.trim();
    if t.is_empty() {
        return Err(syntax(line, column, "empty value"));
    }
    if let Some(bad) = t.find(|c: char| c.is_whitespace() || "()[],=".contains(c)) {
        let lead = text.len() - text.trim_start().len();
        return Err(syntax(line, column + lead + bad, format!("unexpected `{}`", &t[bad..bad + 1])));
    }
    Ok(t.to_string())
}

fn parse_value(text: &str, line: usize, column: usize) -> Result<Value, ConfigError> {
    let Some(inner) = text.strip_prefix('[') else {
        return Ok(Value::Token(token(text, line, column)?));
    };
    let Some(inner) = inner.strip_suffix(']') else {
        return Err(syntax(line, column + text.len(), "expected `]` at end of list"));
    };
    let base = column + 1;
    if inner.trim().is_empty() {
        return Ok(Value::List(Vec::new()));
    }
    let mut items = Vec::new();
    for (offset, piece) in split_top(inner, line, base)? {
        let col = base + offset;
        let trimmed = piece.trim();
        let lead = piece.len() - piece.trim_start().len();
        if let Some(body) = trimmed.strip_prefix('(') {
            let Some(body) = body.strip_suffix(')') else {
                return Err(syntax(line, col + lead, "expected `)` at end of tuple"));
            };
            let mut fields = Vec::new();
            let mut pos = col + lead + 1;
            for field in body.split(',') {
                fields.push(token(field, line, pos)?);
                pos += field.len() + 1;
            }
            items.push(Item::Tuple(fields));
        } else {
            items.push(Item::Token(token(piece, line, col)?));
        }
    }
    Ok(Value::List(items))
}

impl RawConfig {
    /// Tokenize configuration text. Columns are 1-based byte offsets.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        for (idx, full) in text.lines().enumerate() {
            let line = idx + 1;
            let content = full.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let Some(eq) = content.find('=') else {
                let col = content.len() - content.trim_start().len() + 1;
                return Err(syntax(line, col, "expected `key = value`"));
            };
            let key_part = &content[..eq];
            let key = key_part.trim();
            let key_col = key_part.len() - key_part.trim_start().len() + 1;
            let valid_key = key
                .chars()
                .enumerate()
                .all(|(i, c)| c == '_' || c.is_ascii_alphabetic() || (i > 0 && c.is_ascii_digit()));
            if key.is_empty() || !valid_key {
                return Err(syntax(line, key_col, "expected a key before `=`"));
            }
            let value_part = &content[eq + 1..];
            let lead = value_part.len() - value_part.trim_start().len();
            let value_col = eq + 2 + lead;
            let value_text = value_part.trim();
            if value_text.is_empty() {
                return Err(syntax(line, eq + 2, "missing value"));
            }
            let value = parse_value(value_text, line, value_col)?;
            if let Some(prev) = raw.entries.get(key) {
                return Err(ConfigError::Duplicate {
                    key: key.to_string(),
                    line,
                    first: prev.line,
                });
            }
            raw.entries.insert(key.to_string(), Entry { value, line });
        }
        Ok(raw)
    }

    /// Parse `key=value` command-line overrides; later ones replace earlier
    /// ones and all replace file values.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), ConfigError> {
        for (i, item) in overrides.iter().enumerate() {
            let parsed = RawConfig::parse(item).map_err(|e| match e {
                ConfigError::Syntax { column, message, .. } => ConfigError::Override {
                    index: i + 1,
                    column,
                    message,
                },
                other => other,
            })?;
            for (k, mut v) in parsed.entries {
                v.line = 0;
                self.entries.insert(k, v);
            }
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = parse_value(value, 0, 1)?;
        self.entries.insert(key.to_string(), Entry { value, line: 0 });
        Ok(())
    }

    pub fn build(&self) -> Result<ExperimentConfig, ConfigError> {
        for (key, entry) in &self.entries {
            if !KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey {
                    key: key.clone(),
                    line: entry.line,
                });
            }
        }
        let mut c = ExperimentConfig::default();
        if let Some(v) = self.token("task")? {
            c.task = v.parse().map_err(|e: String| invalid("task", e))?;
        }
        self.number("m", &mut c.rank)?;
        self.number("N", &mut c.grid)?;
        if let Some(items) = self.list("lattice")? {
            let values: Vec<f64> = items
                .iter()
                .map(|it| match it {
                    Item::Token(t) => parse_num::<f64>("lattice", t),
                    Item::Tuple(_) => Err(invalid("lattice", "expected four numbers")),
                })
                .collect::<Result<_, _>>()?;
            c.lattice = values
                .try_into()
                .map_err(|_| invalid("lattice", "expected four numbers [v1x, v1y, v2x, v2y]"))?;
        }
        self.number("tau_min", &mut c.tau_min)?;
        self.number("tau_max", &mut c.tau_max)?;
        self.number("samples", &mut c.samples)?;
        self.number("seed", &mut c.seed)?;
        self.number("tau", &mut c.tau)?;
        if let Some(items) = self.list("A")? {
            c.linear = coefficient_list("A", items)?;
        }
        if let Some(items) = self.list("beta")? {
            c.antilinear = coefficient_list("beta", items)?;
        }
        self.number("n", &mut c.half_dim)?;
        self.number("g", &mut c.genus)?;
        self.number("c1", &mut c.c1)?;
        self.number("d", &mut c.degree)?;
        self.number("tau0", &mut c.tau0)?;
        self.number("radius", &mut c.radius)?;
        self.number("probes", &mut c.probes)?;
        if let Some(v) = self.token("matrix")? {
            c.matrix = Some(PathBuf::from(v));
        }
        if let Some(v) = self.token("out")? {
            c.out = Some(PathBuf::from(v));
        }
        self.number("plot", &mut c.plot)?;
        c.validate()?;
        Ok(c)
    }

    fn token(&self, key: &str) -> Result<Option<&str>, ConfigError> {
        match self.entries.get(key).map(|e| &e.value) {
            None => Ok(None),
            Some(Value::Token(t)) => Ok(Some(t)),
            Some(Value::List(_)) => Err(invalid(key, "expected a single value, found a list")),
        }
    }

    fn list(&self, key: &str) -> Result<Option<&[Item]>, ConfigError> {
        match self.entries.get(key).map(|e| &e.value) {
            None => Ok(None),
            Some(Value::List(items)) => Ok(Some(items)),
            Some(Value::Token(_)) => Err(invalid(key, "expected a bracketed list")),
        }
    }

    fn number<T: FromStr>(&self, key: &str, slot: &mut T) -> Result<(), ConfigError> {
        if let Some(t) = self.token(key)? {
            *slot = parse_num(key, t)?;
        }
        Ok(())
    }
}

fn parse_num<T: FromStr>(key: &str, text: &str) -> Result<T, ConfigError> {
    text.parse()
        .map_err(|_| invalid(key, format!("cannot parse `{text}`")))
}

fn coefficient_list(key: &str, items: &[Item]) -> Result<Vec<CoefficientEntry>, ConfigError> {
    items
        .iter()
        .map(|item| {
            let Item::Tuple(f) = item else {
                return Err(invalid(key, "expected tuples (k1, k2, row, col, re, im)"));
            };
            if f.len() != 6 {
                return Err(invalid(key, format!("tuple has {} fields, expected 6", f.len())));
            }
            Ok(CoefficientEntry {
                k1: parse_num(key, &f[0])?,
                k2: parse_num(key, &f[1])?,
                row: parse_num(key, &f[2])?,
                col: parse_num(key, &f[3])?,
                re: parse_num(key, &f[4])?,
                im: parse_num(key, &f[5])?,
            })
        })
        .collect()
}

impl ExperimentConfig {
    /// Semantic checks; each failure names the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.rank == 0 {
            return Err(invalid("m", "rank must be at least 1"));
        }
        if self.grid % 2 != 0 {
            return Err(invalid("N", "N must be even"));
        }
        if self.grid < 4 {
            return Err(invalid("N", "N must be at least 4"));
        }
        let [a, b, c, d] = self.lattice;
        if self.lattice.iter().any(|x| !x.is_finite()) || !(a * d - b * c > 0.0) {
            return Err(invalid("lattice", "basis must be finite and positively oriented"));
        }
        for (key, v) in [
            ("tau_min", self.tau_min),
            ("tau_max", self.tau_max),
            ("tau", self.tau),
            ("tau0", self.tau0),
            ("radius", self.radius),
        ] {
            if !v.is_finite() {
                return Err(invalid(key, "must be finite"));
            }
        }
        if !(self.tau_min < self.tau_max) {
            return Err(invalid("tau_max", "tau_max must exceed tau_min"));
        }
        if self.samples < 2 {
            return Err(invalid("samples", "samples must be at least 2"));
        }
        if !(self.radius > 0.0) {
            return Err(invalid("radius", "radius must be positive"));
        }
        if self.probes == 0 {
            return Err(invalid("probes", "probes must be at least 1"));
        }
        if self.half_dim < 2 {
            return Err(invalid("n", "n must be at least 2"));
        }
        if self.genus < 0 {
            return Err(invalid("g", "genus must be nonnegative"));
        }
        if self.degree < 1 {
            return Err(invalid("d", "degree must be at least 1"));
        }
        for (key, list) in [("A", &self.linear), ("beta", &self.antilinear)] {
            for e in list {
                if e.row >= self.rank || e.col >= self.rank {
                    return Err(invalid(key, format!("entry ({}, {}) outside rank {}", e.row, e.col, self.rank)));
                }
                if !e.re.is_finite() || !e.im.is_finite() {
                    return Err(invalid(key, "coefficients must be finite"));
                }
                let limit = (self.grid / 4) as i64;
                if e.k1.abs().max(e.k2.abs()) > limit {
                    return Err(invalid(key, format!("mode ({}, {}) exceeds bandwidth N/4 = {limit}", e.k1, e.k2)));
                }
            }
        }
        for (key, path) in [("matrix", &self.matrix), ("out", &self.out)] {
            if let Some(p) = path {
                let s = p.to_string_lossy();
                if s.is_empty() || s.contains(|c: char| c.is_whitespace() || "#()[],=".contains(c)) {
                    return Err(invalid(key, "path must be a single token without spaces or `#()[],=`"));
                }
            }
        }
        Ok(())
    }

    /// Canonical text form; `parse_config(&c.render()) == Ok(c)`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        line("task", self.task.to_string());
        line("m", self.rank.to_string());
        line("N", self.grid.to_string());
        line(
            "lattice",
            format!("[{}]", self.lattice.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")),
        );
        line("tau_min", format!("{:?}", self.tau_min));
        line("tau_max", format!("{:?}", self.tau_max));
        line("samples", self.samples.to_string());
        line("seed", self.seed.to_string());
        line("tau", format!("{:?}", self.tau));
        line("A", render_entries(&self.linear));
        line("beta", render_entries(&self.antilinear));
        line("n", self.half_dim.to_string());
        line("g", self.genus.to_string());
        line("c1", self.c1.to_string());
        line("d", self.degree.to_string());
        line("tau0", format!("{:?}", self.tau0));
        line("radius", format!("{:?}", self.radius));
        line("probes", self.probes.to_string());
        if let Some(p) = &self.matrix {
            line("matrix", p.to_string_lossy().into_owned());
        }
        if let Some(p) = &self.out {
            line("out", p.to_string_lossy().into_owned());
        }
        line("plot", self.plot.to_string());
        out
    }
}

fn render_entries(list: &[CoefficientEntry]) -> String {
    let items: Vec<String> = list
        .iter()
        .map(|e| format!("({}, {}, {}, {}, {:?}, {:?})", e.k1, e.k2, e.row, e.col, e.re, e.im))
        .collect();
    format!("[{}]", items.join(", "))
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    RawConfig::parse(text)?.build()
}
