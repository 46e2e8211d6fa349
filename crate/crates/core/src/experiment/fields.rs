//! Strict reader over JSON objects that collects every violation with its path.

use std::cell::RefCell;
use std::collections::BTreeSet;

use serde_json::{Map, Value};

use crate::error::ConfigIssue;

#[derive(Debug, Default)]
pub(crate) struct Issues(RefCell<Vec<ConfigIssue>>);

impl Issues {
    pub(crate) fn push(&self, path: impl Into<String>, message: impl Into<String>) {
        self.0.borrow_mut().push(ConfigIssue::new(path, message));
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.0.borrow().is_empty()
    }

    pub(crate) fn into_vec(self) -> Vec<ConfigIssue> {
        self.0.into_inner()
    }
}

/// One JSON object; every key read is marked so the rest can be reported as unknown.
pub(crate) struct Section<'a> {
    path: String,
    map: Option<&'a Map<String, Value>>,
    used: RefCell<BTreeSet<String>>,
    issues: &'a Issues,
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

impl<'a> Section<'a> {
    pub(crate) fn root(value: &'a Value, issues: &'a Issues) -> Self {
        let map = value.as_object();
        if map.is_none() {
            issues.push("$", "config must be a JSON object");
        }
        Self {
            path: String::new(),
            map,
            used: RefCell::default(),
            issues,
        }
    }

    pub(crate) fn path_of(&self, key: &str) -> String {
        join(&self.path, key)
    }

    pub(crate) fn has(&self, key: &str) -> bool {
        self.map.is_some_and(|m| m.contains_key(key))
    }

    fn raw(&self, key: &str) -> Option<&'a Value> {
        self.used.borrow_mut().insert(key.to_string());
        self.map.and_then(|m| m.get(key)).filter(|v| !v.is_null())
    }

    /// Nested object; a missing key yields an empty section.
    pub(crate) fn section(&self, key: &str) -> Section<'a> {
        let map = match self.raw(key) {
            None => None,
            Some(Value::Object(m)) => Some(m),
            Some(_) => {
                self.issues.push(self.path_of(key), "expected an object");
                None
            }
        };
        Section {
            path: self.path_of(key),
            map,
            used: RefCell::default(),
            issues: self.issues,
        }
    }

    pub(crate) fn opt_f64(&self, key: &str) -> Option<f64> {
        match self.raw(key)? {
            Value::Number(n) => match n.as_f64() {
                Some(x) if x.is_finite() => Some(x),
                _ => {
                    self.issues.push(self.path_of(key), "number out of range");
                    None
                }
            },
            _ => {
                self.issues.push(self.path_of(key), "expected a number");
                None
            }
        }
    }

    pub(crate) fn f64_or(&self, key: &str, default: f64) -> f64 {
        self.opt_f64(key).unwrap_or(default)
    }

    /// Like [`f64_or`](Self::f64_or) but records a violation when `ok` fails.
    pub(crate) fn f64_where(&self, key: &str, default: f64, ok: impl Fn(f64) -> bool, rule: &str) -> f64 {
        let x = self.f64_or(key, default);
        if self.has(key) && !ok(x) {
            self.issues.push(self.path_of(key), format!("{rule}, got {x}"));
        }
        x
    }

    pub(crate) fn opt_u64(&self, key: &str) -> Option<u64> {
        match self.raw(key)? {
            Value::Number(n) if n.is_u64() => n.as_u64(),
            _ => {
                self.issues.push(self.path_of(key), "expected a non-negative integer");
                None
            }
        }
    }

    pub(crate) fn u64_where(&self, key: &str, default: u64, ok: impl Fn(u64) -> bool, rule: &str) -> u64 {
        let x = self.opt_u64(key).unwrap_or(default);
        if self.has(key) && !ok(x) {
            self.issues.push(self.path_of(key), format!("{rule}, got {x}"));
        }
        x
    }

    pub(crate) fn opt_i64(&self, key: &str) -> Option<i64> {
        match self.raw(key)? {
            Value::Number(n) if n.is_i64() => n.as_i64(),
            _ => {
                self.issues.push(self.path_of(key), "expected an integer");
                None
            }
        }
    }

    pub(crate) fn opt_str(&self, key: &str) -> Option<&'a str> {
        match self.raw(key)? {
            Value::String(s) => Some(s.as_str()),
            _ => {
                self.issues.push(self.path_of(key), "expected a string");
                None
            }
        }
    }

    /// String restricted to `choices`.
    pub(crate) fn choice(&self, key: &str, default: &'static str, choices: &[&'static str]) -> &'static str {
        match self.opt_str(key) {
            None => default,
            Some(s) => match choices.iter().find(|c| **c == s) {
                Some(c) => c,
                None => {
                    self.issues
                        .push(self.path_of(key), format!("unknown value \"{s}\" (expected one of: {})", choices.join(", ")));
                    default
                }
            },
        }
    }

    pub(crate) fn opt_f64_list(&self, key: &str) -> Option<Vec<f64>> {
        match self.raw(key)? {
            Value::Array(items) => {
                let mut out = Vec::with_capacity(items.len());
                for (i, v) in items.iter().enumerate() {
                    match v.as_f64() {
                        Some(x) if x.is_finite() => out.push(x),
                        _ => self.issues.push(format!("{}[{i}]", self.path_of(key)), "expected a number"),
                    }
                }
                Some(out)
            }
            _ => {
                self.issues.push(self.path_of(key), "expected an array of numbers");
                None
            }
        }
    }

    /// Marks `key` as known without interpreting it.
    pub(crate) fn accept(&self, key: &str) {
        self.used.borrow_mut().insert(key.to_string());
    }

    /// Reports every key that was never read.
    pub(crate) fn finish(&self) {
        if let Some(m) = self.map {
            let used = self.used.borrow();
            for key in m.keys().filter(|k| !used.contains(*k)) {
                self.issues.push(self.path_of(key), "unknown key");
            }
        }
    }
}
