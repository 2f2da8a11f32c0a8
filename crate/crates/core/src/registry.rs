//! Name-keyed registries of interchangeable strategies.
//!
//! A registry maps a short name (as it appears in configuration files) to a
//! constructor taking numeric parameters plus a build context. Each entry
//! declares the parameter keys it understands; anything else is rejected.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{invalid, Error, Result};

/// Numeric key/value parameters handed to a registry constructor.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    values: BTreeMap<String, f64>,
}

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.values.insert(key.to_string(), value);
        self
    }

    pub fn insert(&mut self, key: &str, value: f64) {
        self.values.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }

    pub fn get_or(&self, key: &str, default: f64) -> f64 {
        self.get(key).unwrap_or(default)
    }

    pub fn require(&self, key: &str) -> Result<f64> {
        self.get(key)
            .ok_or_else(|| invalid(format!("missing parameter `{key}`")))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

/// Constructor signature stored in a registry.
pub type Builder<T, C> = fn(&Params, &C) -> Result<Box<T>>;

struct Entry<T: ?Sized, C> {
    summary: &'static str,
    keys: &'static [&'static str],
    build: Builder<T, C>,
}

pub struct Registry<T: ?Sized, C = ()> {
    kind: &'static str,
    entries: BTreeMap<&'static str, Entry<T, C>>,
}

impl<T: ?Sized, C> Registry<T, C> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Registers `build` under `name`. A later registration replaces an earlier one.
    pub fn register(
        &mut self,
        name: &'static str,
        summary: &'static str,
        keys: &'static [&'static str],
        build: Builder<T, C>,
    ) -> &mut Self {
        self.entries.insert(
            name,
            Entry {
                summary,
                keys,
                build,
            },
        );
        self
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    /// Parameter keys accepted by `name`.
    pub fn keys(&self, name: &str) -> Option<&'static [&'static str]> {
        self.entries.get(name).map(|e| e.keys)
    }

    pub fn summary(&self, name: &str) -> Option<&'static str> {
        self.entries.get(name).map(|e| e.summary)
    }

    pub fn build(&self, name: &str, params: &Params, ctx: &C) -> Result<Box<T>> {
        let entry = self.entries.get(name).ok_or_else(|| Error::UnknownStrategy {
            kind: self.kind,
            name: name.to_string(),
            available: self.names().collect::<Vec<_>>().join(", "),
        })?;
        if let Some(key) = params.keys().find(|k| !entry.keys.contains(k)) {
            return Err(invalid(format!(
                "{} `{name}` does not accept parameter `{key}`",
                self.kind
            )));
        }
        (entry.build)(params, ctx)
    }
}

impl<T: ?Sized, C> fmt::Debug for Registry<T, C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("entries", &self.names().collect::<Vec<_>>())
            .finish()
    }
}
