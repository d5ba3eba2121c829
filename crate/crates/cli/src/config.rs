//! Plain-text configuration: `[section]` headers followed by `key = value`
//! lines; `#` starts a comment line.
//!
//! Numeric values are constant expressions (`pi/2`, `sqrt(3)/2`), lists
//! are comma-separated at parenthesis depth zero. Every key must be read by
//! the experiment that runs, so typos surface as errors.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use finslab_core::expr::{Expr, Scope};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {what} '{}': {source}", path.display())]
    Io {
        what: &'static str,
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing [{section}] section")]
    MissingSection { section: String },
    #[error("missing key '{key}' in [{section}]")]
    MissingKey { section: String, key: String },
    #[error("[{section}] {key} = '{value}': {reason}")]
    Invalid {
        section: String,
        key: String,
        value: String,
        reason: String,
    },
    #[error("unknown {what} '{name}'")]
    Unknown { what: &'static str, name: String },
    #[error("unused entries: {0}")]
    Unused(String),
}

pub type ConfigResult<T> = Result<T, ConfigError>;

#[derive(Debug, Default)]
pub struct Section {
    pub name: String,
    entries: BTreeMap<String, String>,
    read: RefCell<BTreeSet<String>>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&str> {
        let v = self.entries.get(key)?;
        self.read.borrow_mut().insert(key.to_string());
        Some(v.as_str())
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn require(&self, key: &str) -> ConfigResult<&str> {
        self.get(key).ok_or_else(|| ConfigError::MissingKey {
            section: self.name.clone(),
            key: key.to_string(),
        })
    }

    pub fn invalid(&self, key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            section: self.name.clone(),
            key: key.to_string(),
            value: value.to_string(),
            reason: reason.into(),
        }
    }

    fn number(&self, key: &str, src: &str) -> ConfigResult<f64> {
        let expr = Expr::parse(src, Scope::params(0)).map_err(|e| self.invalid(key, src, e.to_string()))?;
        let v = expr.eval_real(&[], &[], &[]).map_err(|e| self.invalid(key, src, e.to_string()))?;
        if !v.is_finite() {
            return Err(self.invalid(key, src, "not a finite number"));
        }
        Ok(v)
    }

    pub fn f64(&self, key: &str) -> ConfigResult<f64> {
        let src = self.require(key)?;
        self.number(key, src)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> ConfigResult<f64> {
        match self.get(key) {
            Some(src) => self.number(key, src),
            None => Ok(default),
        }
    }

    /// Positive number, default when absent.
    pub fn positive_or(&self, key: &str, default: f64) -> ConfigResult<f64> {
        let v = self.f64_or(key, default)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.invalid(key, &v.to_string(), "must be positive"))
        }
    }

    pub fn list(&self, key: &str) -> ConfigResult<Vec<f64>> {
        let src = self.require(key)?;
        split_top_level(src).iter().map(|item| self.number(key, item)).collect()
    }

    pub fn list_opt(&self, key: &str) -> ConfigResult<Option<Vec<f64>>> {
        if self.has(key) {
            self.list(key).map(Some)
        } else {
            Ok(None)
        }
    }

    /// Items separated by `;` (used for expression lists, which may
    /// contain commas).
    pub fn items(&self, key: &str) -> ConfigResult<Vec<String>> {
        let src = self.require(key)?;
        Ok(src.split(';').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
    }

    pub fn usize_or(&self, key: &str, default: usize) -> ConfigResult<usize> {
        match self.get(key) {
            Some(src) => src.parse().map_err(|_| self.invalid(key, src, "expected a non-negative integer")),
            None => Ok(default),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> ConfigResult<bool> {
        match self.get(key) {
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(other) => Err(self.invalid(key, other, "expected true or false")),
            None => Ok(default),
        }
    }

    fn unused(&self) -> Vec<String> {
        let read = self.read.borrow();
        self.entries
            .keys()
            .filter(|k| !read.contains(*k))
            .map(|k| format!("[{}] {k}", self.name))
            .collect()
    }
}

/// Split on commas that are not inside parentheses.
fn split_top_level(src: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in src.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    out.push(cur.trim().to_string());
    out
}

#[derive(Debug, Default)]
pub struct Config {
    sections: Vec<Section>,
    touched: RefCell<BTreeSet<String>>,
    /// Directory relative paths inside the config resolve against.
    pub base_dir: PathBuf,
}

impl Config {
    pub fn parse(text: &str) -> ConfigResult<Config> {
        let mut cfg = Config::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = idx + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                    line: lineno,
                    message: "unterminated section header".into(),
                })?;
                let name = name.trim();
                if name.is_empty() {
                    return Err(ConfigError::Syntax {
                        line: lineno,
                        message: "empty section name".into(),
                    });
                }
                if cfg.sections.iter().any(|s| s.name == name) {
                    return Err(ConfigError::Syntax {
                        line: lineno,
                        message: format!("duplicate section [{name}]"),
                    });
                }
                cfg.sections.push(Section {
                    name: name.to_string(),
                    ..Section::default()
                });
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: lineno,
                message: format!("expected 'key = value', found '{line}'"),
            })?;
            let section = cfg.sections.last_mut().ok_or_else(|| ConfigError::Syntax {
                line: lineno,
                message: "entry before the first [section]".into(),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError::Syntax {
                    line: lineno,
                    message: "empty key".into(),
                });
            }
            if section.entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(ConfigError::Syntax {
                    line: lineno,
                    message: format!("duplicate key '{key}' in [{}]", section.name),
                });
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> ConfigResult<Config> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            what: "config file",
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Config::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        let s = self.sections.iter().find(|s| s.name == name)?;
        self.touched.borrow_mut().insert(name.to_string());
        Some(s)
    }

    pub fn require(&self, name: &str) -> ConfigResult<&Section> {
        self.section(name).ok_or_else(|| ConfigError::MissingSection {
            section: name.to_string(),
        })
    }

    pub fn resolve(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Error out on sections or keys nobody read.
    pub fn ensure_consumed(&self) -> ConfigResult<()> {
        let touched = self.touched.borrow();
        let mut unused = Vec::new();
        for s in &self.sections {
            if touched.contains(&s.name) {
                unused.extend(s.unused());
            } else {
                unused.push(format!("[{}]", s.name));
            }
        }
        if unused.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Unused(unused.join(", ")))
        }
    }
}
