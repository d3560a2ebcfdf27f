//! Line-oriented experiment configuration.
//!
//! The format is deliberately small: `[experiment.<name>]` section headers,
//! one `key = value` assignment per line, `#` comments, and bracketed lists
//! for parameter grids. A list value expands the experiment into the
//! cartesian product over all listed keys, in key order with later keys
//! varying fastest. Parsing is strict: unknown keys, duplicate keys, and
//! invariant violations are errors that name the offending line.
//!
//! ```text
//! # Gaussian thresholding sweep
//! [experiment.demo]
//! n = 4096
//! s = 16
//! family = gaussian          # gaussian | bernoulli
//! theta = 2.0                # gaussian only; bernoulli uses p0/p1
//! procedure = simple_st      # fixed_sample | sprt | simple_st | general_st
//! delta = 0.1
//! m = [4, 8, 16]
//! trials = 2000
//! seed = 7
//! ```
//!
//! Keys by procedure: `fixed_sample` takes `m` and `rule` (`top_s` or
//! `llr_threshold` with `tau`); `sprt` takes `epsilon` and optionally
//! `j_max` (defaulted from `s` and the pair's divergence); `simple_st`
//! takes `delta` and even `m`; `general_st` takes `delta`, `m`, `rho`.
//! Optional everywhere: `alt_known` (default true) and `support_placement`
//! (`uniform_random`, the default, or `fixed_first_s`).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::distributions::DistributionPair;
use crate::harness::{ExperimentSpec, SupportPlacement};
use crate::procedures::{
    DecisionRule, FixedSampleConfig, GeneralStConfig, ProcedureConfig, SimpleStConfig, SprtConfig,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("experiment '{experiment}': {message}")]
    Validation { experiment: String, message: String },
}

/// One fully-expanded experiment with the name it came from (grid entries
/// get a `[key=value ...]` suffix).
#[derive(Debug, Clone)]
pub struct ParsedExperiment {
    pub name: String,
    pub spec: ExperimentSpec,
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Word(String),
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "integer",
            Value::Float(_) => "number",
            Value::Bool(_) => "boolean",
            Value::Word(_) => "word",
        }
    }

    fn render(&self) -> String {
        match self {
            Value::Int(i) => i.to_string(),
            Value::Float(f) => f.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Word(w) => w.clone(),
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "n",
    "s",
    "family",
    "theta",
    "p0",
    "p1",
    "alt_known",
    "procedure",
    "m",
    "rule",
    "tau",
    "epsilon",
    "j_max",
    "delta",
    "rho",
    "trials",
    "seed",
    "support_placement",
];

struct Section {
    name: String,
    header_line: usize,
    // key -> (line, values); a scalar is a one-element list
    entries: Vec<(String, usize, Vec<Value>)>,
}

fn parse_scalar(token: &str, line: usize) -> Result<Value, ConfigError> {
    let t = token.trim();
    if t.is_empty() {
        return Err(ConfigError::Parse {
            line,
            message: "empty value".into(),
        });
    }
    if t == "true" {
        return Ok(Value::Bool(true));
    }
    if t == "false" {
        return Ok(Value::Bool(false));
    }
    if let Ok(i) = t.parse::<i64>() {
        return Ok(Value::Int(i));
    }
    if let Ok(f) = t.parse::<f64>() {
        return Ok(Value::Float(f));
    }
    if t.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Ok(Value::Word(t.to_string()));
    }
    Err(ConfigError::Parse {
        line,
        message: format!("cannot parse value '{t}'"),
    })
}

fn parse_sections(text: &str) -> Result<Vec<Section>, ConfigError> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[') {
            let inner = inner.strip_suffix(']').ok_or(ConfigError::Parse {
                line: line_no,
                message: "unterminated section header".into(),
            })?;
            let name = inner.strip_prefix("experiment.").ok_or(ConfigError::Parse {
                line: line_no,
                message: format!("section must be [experiment.<name>], got [{inner}]"),
            })?;
            if name.is_empty()
                || !name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(ConfigError::Parse {
                    line: line_no,
                    message: format!("invalid experiment name '{name}'"),
                });
            }
            if sections.iter().any(|s| s.name == name) {
                return Err(ConfigError::Parse {
                    line: line_no,
                    message: format!("duplicate experiment name '{name}'"),
                });
            }
            sections.push(Section {
                name: name.to_string(),
                header_line: line_no,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Parse {
            line: line_no,
            message: format!("expected 'key = value', got '{line}'"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError::Parse {
                line: line_no,
                message: format!("unknown key '{key}'"),
            });
        }
        let section = sections.last_mut().ok_or(ConfigError::Parse {
            line: line_no,
            message: "assignment before any [experiment.<name>] section".into(),
        })?;
        if section.entries.iter().any(|(k, _, _)| k == key) {
            return Err(ConfigError::Parse {
                line: line_no,
                message: format!("duplicate key '{key}' in experiment '{}'", section.name),
            });
        }
        let values = if let Some(list) = value.strip_prefix('[') {
            let list = list.strip_suffix(']').ok_or(ConfigError::Parse {
                line: line_no,
                message: "unterminated list".into(),
            })?;
            let items: Result<Vec<Value>, ConfigError> = list
                .split(',')
                .map(|item| parse_scalar(item, line_no))
                .collect();
            let items = items?;
            if items.is_empty() {
                return Err(ConfigError::Parse {
                    line: line_no,
                    message: "empty list".into(),
                });
            }
            items
        } else {
            vec![parse_scalar(value, line_no)?]
        };
        section.entries.push((key.to_string(), line_no, values));
    }
    Ok(sections)
}

struct Resolved<'a> {
    experiment: &'a str,
    map: BTreeMap<&'a str, &'a Value>,
}

impl<'a> Resolved<'a> {
    fn err(&self, message: impl Into<String>) -> ConfigError {
        ConfigError::Validation {
            experiment: self.experiment.to_string(),
            message: message.into(),
        }
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.map.get(key).copied()
    }

    fn require(&self, key: &str) -> Result<&'a Value, ConfigError> {
        self.get(key)
            .ok_or_else(|| self.err(format!("missing required key '{key}'")))
    }

    fn positive_int(&self, key: &str) -> Result<u64, ConfigError> {
        match self.require(key)? {
            Value::Int(i) if *i > 0 => Ok(*i as u64),
            v => Err(self.err(format!(
                "key '{key}' must be a positive integer, got {}",
                v.render()
            ))),
        }
    }

    fn int_any(&self, key: &str) -> Result<i64, ConfigError> {
        match self.require(key)? {
            Value::Int(i) => Ok(*i),
            v => Err(self.err(format!(
                "key '{key}' must be an integer, got {} ({})",
                v.render(),
                v.type_name()
            ))),
        }
    }

    fn float(&self, key: &str) -> Result<f64, ConfigError> {
        match self.require(key)? {
            Value::Float(f) => Ok(*f),
            Value::Int(i) => Ok(*i as f64),
            v => Err(self.err(format!(
                "key '{key}' must be a number, got {}",
                v.render()
            ))),
        }
    }

    fn word(&self, key: &str) -> Result<&'a str, ConfigError> {
        match self.require(key)? {
            Value::Word(w) => Ok(w),
            v => Err(self.err(format!(
                "key '{key}' must be a word, got {}",
                v.render()
            ))),
        }
    }

    fn reject(&self, key: &str, reason: &str) -> Result<(), ConfigError> {
        if self.map.contains_key(key) {
            return Err(self.err(format!("key '{key}' is not applicable: {reason}")));
        }
        Ok(())
    }
}

fn build_spec(r: &Resolved) -> Result<ExperimentSpec, ConfigError> {
    let n = self_positive_usize(r, "n")?;
    let s = self_positive_usize(r, "s")?;
    if 2 * s > n {
        return Err(r.err(format!("s = {s} violates the constraint s <= n/2 (n = {n})")));
    }

    let alt_known = match r.get("alt_known") {
        None => true,
        Some(Value::Bool(b)) => *b,
        Some(v) => {
            return Err(r.err(format!(
                "key 'alt_known' must be true or false, got {}",
                v.render()
            )))
        }
    };

    let pair = match r.word("family")? {
        "gaussian" | "gaussian_shift" => {
            r.reject("p0", "gaussian family takes theta")?;
            r.reject("p1", "gaussian family takes theta")?;
            let theta = r.float("theta")?;
            DistributionPair::gaussian_shift(theta)
                .map_err(|e| r.err(e.to_string()))?
                .with_alt_known(alt_known)
        }
        "bernoulli" | "bernoulli_pair" => {
            r.reject("theta", "bernoulli family takes p0 and p1")?;
            let p0 = r.float("p0")?;
            let p1 = r.float("p1")?;
            DistributionPair::bernoulli_pair(p0, p1)
                .map_err(|e| r.err(e.to_string()))?
                .with_alt_known(alt_known)
        }
        other => {
            return Err(r.err(format!(
                "unknown family '{other}' (expected gaussian or bernoulli)"
            )))
        }
    };

    let procedure = match r.word("procedure")? {
        "fixed_sample" => {
            r.reject("delta", "fixed_sample takes m and rule")?;
            r.reject("rho", "fixed_sample takes m and rule")?;
            r.reject("epsilon", "fixed_sample takes m and rule")?;
            r.reject("j_max", "fixed_sample takes m and rule")?;
            let m = r.positive_int("m")?;
            let rule = match r.get("rule") {
                None => DecisionRule::TopS,
                Some(Value::Word(w)) if w == "top_s" => {
                    r.reject("tau", "rule top_s takes no threshold")?;
                    DecisionRule::TopS
                }
                Some(Value::Word(w)) if w == "llr_threshold" => {
                    DecisionRule::LlrThreshold(r.float("tau")?)
                }
                Some(v) => {
                    return Err(r.err(format!(
                        "rule must be top_s or llr_threshold, got {}",
                        v.render()
                    )))
                }
            };
            ProcedureConfig::FixedSample(FixedSampleConfig { m, rule })
        }
        "sprt" => {
            r.reject("m", "sprt has no fixed budget")?;
            r.reject("delta", "sprt takes epsilon and j_max")?;
            r.reject("rho", "sprt takes epsilon and j_max")?;
            r.reject("rule", "sprt takes epsilon and j_max")?;
            r.reject("tau", "sprt takes epsilon and j_max")?;
            let epsilon = r.float("epsilon")?;
            let j_max = match r.get("j_max") {
                Some(_) => r.positive_int("j_max")?,
                None => {
                    let d01 = pair
                        .llr_stats()
                        .map_err(|e| r.err(format!("cannot derive default j_max: {e}")))?
                        .d01;
                    if d01 <= 0.0 {
                        return Err(r.err(
                            "cannot derive default j_max for a zero-divergence pair; set j_max"
                                .to_string(),
                        ));
                    }
                    SprtConfig::default_j_max(s, d01)
                }
            };
            ProcedureConfig::Sprt(SprtConfig { epsilon, j_max })
        }
        "simple_st" => {
            r.reject("rho", "simple_st takes delta and m")?;
            r.reject("epsilon", "simple_st takes delta and m")?;
            r.reject("rule", "simple_st takes delta and m")?;
            r.reject("tau", "simple_st takes delta and m")?;
            r.reject("j_max", "simple_st takes delta and m")?;
            ProcedureConfig::SimpleSt(SimpleStConfig {
                delta: r.float("delta")?,
                m: r.positive_int("m")?,
            })
        }
        "general_st" => {
            r.reject("epsilon", "general_st takes delta, m, rho")?;
            r.reject("rule", "general_st takes delta, m, rho")?;
            r.reject("tau", "general_st takes delta, m, rho")?;
            r.reject("j_max", "general_st takes delta, m, rho")?;
            ProcedureConfig::GeneralSt(GeneralStConfig {
                delta: r.float("delta")?,
                m: r.positive_int("m")?,
                rho: r.float("rho")?,
            })
        }
        other => {
            return Err(r.err(format!(
                "unknown procedure '{other}' (expected fixed_sample, sprt, simple_st, general_st)"
            )))
        }
    };
    procedure
        .validate()
        .map_err(|e| r.err(e.to_string()))?;

    let support_placement = match r.get("support_placement") {
        None => SupportPlacement::UniformRandom,
        Some(Value::Word(w)) if w == "uniform_random" => SupportPlacement::UniformRandom,
        Some(Value::Word(w)) if w == "fixed_first_s" => SupportPlacement::FixedFirstS,
        Some(v) => {
            return Err(r.err(format!(
                "support_placement must be uniform_random or fixed_first_s, got {}",
                v.render()
            )))
        }
    };

    let spec = ExperimentSpec {
        n,
        s,
        pair,
        procedure,
        trials: r.positive_int("trials")?,
        base_seed: r.int_any("seed")? as u64,
        support_placement,
    };
    spec.validate().map_err(|e| r.err(e.to_string()))?;
    Ok(spec)
}

fn self_positive_usize(r: &Resolved, key: &str) -> Result<usize, ConfigError> {
    Ok(r.positive_int(key)? as usize)
}

/// Parse a configuration document into fully-validated experiment specs,
/// grids expanded, in document order.
pub fn parse_config(text: &str) -> Result<Vec<ParsedExperiment>, ConfigError> {
    let sections = parse_sections(text)?;
    if sections.is_empty() {
        return Err(ConfigError::Parse {
            line: 1,
            message: "no [experiment.<name>] sections found".into(),
        });
    }
    let mut out = Vec::new();
    for section in &sections {
        let _ = section.header_line;
        let grid_keys: Vec<&(String, usize, Vec<Value>)> = section
            .entries
            .iter()
            .filter(|(_, _, vs)| vs.len() > 1)
            .collect();
        let combos = grid_keys
            .iter()
            .map(|(_, _, vs)| vs.len())
            .product::<usize>();
        for combo in 0..combos {
            // later grid keys vary fastest
            let mut picks: Vec<usize> = Vec::with_capacity(grid_keys.len());
            let mut rest = combo;
            for (_, _, vs) in grid_keys.iter().rev() {
                picks.push(rest % vs.len());
                rest /= vs.len();
            }
            picks.reverse();
            let mut map: BTreeMap<&str, &Value> = BTreeMap::new();
            let mut grid_idx = 0;
            let mut suffix = String::new();
            for (key, _, vs) in &section.entries {
                let v = if vs.len() > 1 {
                    let v = &vs[picks[grid_idx]];
                    grid_idx += 1;
                    if !suffix.is_empty() {
                        suffix.push(' ');
                    }
                    suffix.push_str(&format!("{key}={}", v.render()));
                    v
                } else {
                    &vs[0]
                };
                map.insert(key.as_str(), v);
            }
            let resolved = Resolved {
                experiment: &section.name,
                map,
            };
            let spec = build_spec(&resolved)?;
            let name = if suffix.is_empty() {
                section.name.clone()
            } else {
                format!("{}[{}]", section.name, suffix)
            };
            out.push(ParsedExperiment { name, spec });
        }
    }
    Ok(out)
}
