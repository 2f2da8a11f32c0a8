//! Line-oriented experiment configuration.
//!
//! ```text
//! [domain]
//! kind = interval          # or rectangle
//! bounds = 0 1             # a b, or x0 x1 y0 y1
//! resolution = 256
//!
//! [exponents]
//! p = 2
//! q = 3
//!
//! [mu]
//! kind = constant          # any weight field name, followed by its parameters
//! value = 0
//!
//! [f]
//! kind = power             # power, f1, f2, f3
//! r = 4
//!
//! [lambda]
//! mode = multiple          # or absolute
//! values = 0.5 1.5 3.0
//!
//! [solver]
//! tol = 1e-8
//!
//! [output]
//! dir = out
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use dphase::descent::descent_registry;
use dphase::eigen::EigenOptions;
use dphase::field::{build_field, field_registry};
use dphase::nonlinearity::{build_nonlinearity, nonlinearity_registry, Nonlinearity};
use dphase::solver::SolveOptions;
use dphase::{build_mesh, Domain, Exponents, Params, Problem};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// 1-based line, or 0 for problems not tied to a line (missing keys).
    pub line: usize,
    pub key: String,
    pub reason: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}: {}", self.key, self.reason)
        } else {
            write!(f, "line {}: {}: {}", self.line, self.key, self.reason)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub Vec<Diagnostic>);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", lines.join("\n"))
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaMode {
    Absolute,
    /// Values are multiples of the first eigenvalue.
    Multiple,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSpec {
    pub mode: LambdaMode,
    pub values: Vec<f64>,
}

impl LambdaSpec {
    pub fn resolve(&self, lambda1: f64) -> Vec<f64> {
        match self.mode {
            LambdaMode::Absolute => self.values.clone(),
            LambdaMode::Multiple => self.values.iter().map(|m| m * lambda1).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub eigen_tol: f64,
    pub eigen_max_iter: usize,
    pub tol_bound: f64,
    pub descent: String,
    pub seed: u64,
    pub samples: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolveOptions::default();
        Self {
            tol: d.tol,
            max_iter: d.max_iter,
            eigen_tol: d.eigen_tol,
            eigen_max_iter: d.eigen_max_iter,
            tol_bound: d.tol_bound_rel,
            descent: d.descent,
            seed: 0,
            samples: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub domain: Domain,
    pub resolution: usize,
    pub p: f64,
    pub q: f64,
    pub mu_kind: String,
    pub mu_params: Params,
    pub f_kind: String,
    pub f_params: Params,
    pub lambda: LambdaSpec,
    pub solver: SolverConfig,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn exponents(&self) -> dphase::Result<Exponents> {
        Exponents::new(self.p, self.q, self.dim())
    }

    pub fn build_problem(&self) -> dphase::Result<Problem> {
        let mesh = Arc::new(build_mesh(self.domain, self.resolution)?);
        let mu = build_field(&self.mu_kind, &self.mu_params, self.dim())?;
        Problem::new(mesh, self.exponents()?, mu)
    }

    pub fn build_f(&self) -> dphase::Result<Arc<dyn Nonlinearity>> {
        build_nonlinearity(&self.f_kind, &self.f_params, &self.exponents()?)
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            eigen_tol: self.solver.eigen_tol,
            eigen_max_iter: self.solver.eigen_max_iter,
            tol_bound_rel: self.solver.tol_bound,
            descent: self.solver.descent.clone(),
            ..SolveOptions::default()
        }
    }

    pub fn eigen_options(&self) -> EigenOptions {
        EigenOptions::new(self.solver.eigen_tol, self.solver.eigen_max_iter)
    }
}

const SECTIONS: [&str; 7] = ["domain", "exponents", "mu", "f", "lambda", "solver", "output"];

struct Entry {
    line: usize,
    value: String,
}

/// Collects diagnostics while reading typed values out of the raw sections.
struct Reader {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
    diags: Vec<Diagnostic>,
}

impl Reader {
    fn push(&mut self, line: usize, key: &str, reason: impl Into<String>) {
        self.diags.push(Diagnostic {
            line,
            key: key.to_string(),
            reason: reason.into(),
        });
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section).and_then(|s| s.get(key))
    }

    fn line_of(&self, section: &str, key: &str) -> usize {
        self.entry(section, key).map_or(0, |e| e.line)
    }

    fn raw(&mut self, section: &str, key: &str, required: bool) -> Option<(usize, String)> {
        match self.entry(section, key) {
            Some(e) => Some((e.line, e.value.clone())),
            None => {
                if required {
                    self.push(0, &format!("{section}.{key}"), "missing required key");
                }
                None
            }
        }
    }

    fn numbers(&mut self, section: &str, key: &str, required: bool) -> Option<(usize, Vec<f64>)> {
        let (line, text) = self.raw(section, key, required)?;
        let mut out = Vec::new();
        for tok in text.split_whitespace() {
            match tok.parse::<f64>() {
                Ok(v) if v.is_finite() => out.push(v),
                _ => {
                    self.push(line, &format!("{section}.{key}"), format!("malformed number `{tok}`"));
                    return None;
                }
            }
        }
        if out.is_empty() {
            self.push(line, &format!("{section}.{key}"), "expected a number");
            return None;
        }
        Some((line, out))
    }

    fn number(&mut self, section: &str, key: &str, required: bool) -> Option<(usize, f64)> {
        let (line, vals) = self.numbers(section, key, required)?;
        if vals.len() != 1 {
            self.push(line, &format!("{section}.{key}"), "expected a single number");
            return None;
        }
        Some((line, vals[0]))
    }

    fn count(&mut self, section: &str, key: &str, required: bool) -> Option<(usize, usize)> {
        let (line, text) = self.raw(section, key, required)?;
        match text.parse::<usize>() {
            Ok(v) => Some((line, v)),
            Err(_) => {
                self.push(line, &format!("{section}.{key}"), format!("malformed integer `{text}`"));
                None
            }
        }
    }

    /// All keys of a registry-backed section other than `kind`, as parameters.
    fn params(&mut self, section: &str, allowed: &[&str]) -> Params {
        let keys: Vec<String> = self
            .sections
            .get(section)
            .map(|s| s.keys().filter(|k| *k != "kind").cloned().collect())
            .unwrap_or_default();
        let mut params = Params::new();
        for key in keys {
            if !allowed.contains(&key.as_str()) {
                let line = self.line_of(section, &key);
                self.push(line, &format!("{section}.{key}"), "unknown key");
                continue;
            }
            if let Some((_, v)) = self.number(section, &key, true) {
                params.insert(&key, v);
            }
        }
        params
    }
}

fn allowed_keys(section: &str) -> &'static [&'static str] {
    match section {
        "domain" => &["kind", "bounds", "resolution"],
        "exponents" => &["p", "q"],
        "lambda" => &["mode", "values"],
        "solver" => &[
            "tol",
            "max_iter",
            "eigen_tol",
            "eigen_max_iter",
            "tol_bound",
            "descent",
            "seed",
            "samples",
        ],
        "output" => &["dir"],
        _ => &[],
    }
}

/// Parses and validates a configuration, reporting every problem found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut rd = Reader {
        sections: BTreeMap::new(),
        diags: Vec::new(),
    };
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            if SECTIONS.contains(&name) {
                rd.sections.entry(name.to_string()).or_default();
                current = Some(name.to_string());
            } else {
                rd.push(line, name, "unknown section");
                current = None;
            }
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            rd.push(line, content, "expected `key = value`");
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(section) = current.clone() else {
            rd.push(line, key, "key outside a known section");
            continue;
        };
        let fixed = allowed_keys(&section);
        let open = section == "mu" || section == "f";
        if !open && !fixed.contains(&key) {
            rd.push(line, &format!("{section}.{key}"), "unknown key");
            continue;
        }
        let table = rd.sections.get_mut(&section).expect("section registered");
        if table.contains_key(key) {
            rd.push(line, &format!("{section}.{key}"), "duplicate key");
            continue;
        }
        table.insert(
            key.to_string(),
            Entry {
                line,
                value: value.to_string(),
            },
        );
    }

    // [domain]
    let domain_kind = rd.raw("domain", "kind", true);
    let bounds = rd.numbers("domain", "bounds", false);
    let resolution = rd.count("domain", "resolution", true);
    let domain = domain_kind.and_then(|(line, kind)| {
        let b = bounds.as_ref().map(|(_, v)| v.clone());
        let bline = bounds.as_ref().map_or(line, |(l, _)| *l);
        match (kind.as_str(), b) {
            ("interval", None) => Some(Domain::unit_interval()),
            ("rectangle", None) => Some(Domain::unit_square()),
            ("interval", Some(b)) if b.len() == 2 => Some(Domain::Interval { a: b[0], b: b[1] }),
            ("rectangle", Some(b)) if b.len() == 4 => Some(Domain::Rectangle {
                x0: b[0],
                x1: b[1],
                y0: b[2],
                y1: b[3],
            }),
            ("interval", Some(_)) => {
                rd.push(bline, "domain.bounds", "an interval needs two bounds");
                None
            }
            ("rectangle", Some(_)) => {
                rd.push(bline, "domain.bounds", "a rectangle needs four bounds");
                None
            }
            (other, _) => {
                rd.push(line, "domain.kind", format!("unknown domain `{other}`; expected interval or rectangle"));
                None
            }
        }
    });

    // [exponents]
    let p = rd.number("exponents", "p", true);
    let q = rd.number("exponents", "q", true);
    if let (Some((_, pv)), Some((ql, qv))) = (p, q) {
        if !(pv < qv) {
            rd.push(ql, "exponents.q", "p < q required");
        }
    }
    if let Some((pl, pv)) = p {
        if !(pv > 1.0) {
            rd.push(pl, "exponents.p", "p > 1 required");
        }
    }

    // [mu]
    let mu_kind = rd.raw("mu", "kind", true);
    let mut mu_params = Params::new();
    if let Some((line, kind)) = &mu_kind {
        let reg = field_registry();
        match reg.keys(kind) {
            Some(keys) => mu_params = rd.params("mu", keys),
            None => {
                let names: Vec<&str> = reg.names().collect();
                rd.push(*line, "mu.kind", format!("unknown weight `{kind}`; available: {}", names.join(", ")));
            }
        }
    }

    // [f]
    let f_kind = rd.raw("f", "kind", true);
    let mut f_params = Params::new();
    if let Some((line, kind)) = &f_kind {
        let reg = nonlinearity_registry();
        match reg.keys(kind) {
            Some(keys) => f_params = rd.params("f", keys),
            None => {
                let names: Vec<&str> = reg.names().collect();
                rd.push(*line, "f.kind", format!("unknown nonlinearity `{kind}`; available: {}", names.join(", ")));
            }
        }
    }

    // [lambda]
    let mode = match rd.raw("lambda", "mode", false) {
        None => Some(LambdaMode::Absolute),
        Some((_, m)) if m == "absolute" => Some(LambdaMode::Absolute),
        Some((_, m)) if m == "multiple" => Some(LambdaMode::Multiple),
        Some((line, m)) => {
            rd.push(line, "lambda.mode", format!("unknown mode `{m}`; expected absolute or multiple"));
            None
        }
    };
    let values = rd.numbers("lambda", "values", true);
    if let Some((line, v)) = &values {
        if v.iter().any(|x| !(*x > 0.0)) {
            rd.push(*line, "lambda.values", "values must be positive");
        }
    }

    // [solver]
    let mut solver = SolverConfig::default();
    if let Some((line, v)) = rd.number("solver", "tol", false) {
        if v > 0.0 {
            solver.tol = v;
        } else {
            rd.push(line, "solver.tol", "must be positive");
        }
    }
    if let Some((line, v)) = rd.number("solver", "eigen_tol", false) {
        if v > 0.0 {
            solver.eigen_tol = v;
        } else {
            rd.push(line, "solver.eigen_tol", "must be positive");
        }
    }
    if let Some((line, v)) = rd.number("solver", "tol_bound", false) {
        if v >= 0.0 {
            solver.tol_bound = v;
        } else {
            rd.push(line, "solver.tol_bound", "must be nonnegative");
        }
    }
    if let Some((_, v)) = rd.count("solver", "max_iter", false) {
        solver.max_iter = v;
    }
    if let Some((_, v)) = rd.count("solver", "eigen_max_iter", false) {
        solver.eigen_max_iter = v;
    }
    if let Some((_, v)) = rd.count("solver", "samples", false) {
        solver.samples = v;
    }
    if let Some((line, text)) = rd.raw("solver", "seed", false) {
        match text.parse::<u64>() {
            Ok(v) => solver.seed = v,
            Err(_) => rd.push(line, "solver.seed", format!("malformed integer `{text}`")),
        }
    }
    if let Some((line, name)) = rd.raw("solver", "descent", false) {
        let reg = descent_registry();
        if reg.contains(&name) {
            solver.descent = name;
        } else {
            let names: Vec<&str> = reg.names().collect();
            rd.push(line, "solver.descent", format!("unknown strategy `{name}`; available: {}", names.join(", ")));
        }
    }

    let output_dir = rd.raw("output", "dir", false).map(|(_, d)| PathBuf::from(d));

    if !rd.diags.is_empty() {
        return Err(ConfigError(rd.diags));
    }
    let (domain, (res_line, resolution)) = (domain.expect("checked"), resolution.expect("checked"));
    let (p, q) = (p.expect("checked").1, q.expect("checked").1);
    let (mu_line, mu_kind) = mu_kind.expect("checked");
    let (f_line, f_kind) = f_kind.expect("checked");
    let cfg = ExperimentConfig {
        domain,
        resolution,
        p,
        q,
        mu_kind,
        mu_params,
        f_kind,
        f_params,
        lambda: LambdaSpec {
            mode: mode.expect("checked"),
            values: values.expect("checked").1,
        },
        solver,
        output_dir,
    };

    // Checks that need the assembled objects.
    let mut late = Vec::new();
    match build_mesh(cfg.domain, cfg.resolution) {
        Err(e) => late.push(Diagnostic {
            line: res_line,
            key: "domain".into(),
            reason: e.to_string(),
        }),
        Ok(mesh) => match build_field(&cfg.mu_kind, &cfg.mu_params, cfg.dim()) {
            Err(e) => late.push(Diagnostic {
                line: mu_line,
                key: "mu".into(),
                reason: e.to_string(),
            }),
            Ok(mu) => {
                let negative = mesh.vertices().iter().any(|x| mu.value(x) < 0.0);
                if negative {
                    let line = if cfg.mu_kind == "constant" {
                        rd.line_of("mu", "value")
                    } else {
                        mu_line
                    };
                    late.push(Diagnostic {
                        line,
                        key: "mu".into(),
                        reason: "μ ≥ 0 required".into(),
                    });
                }
            }
        },
    }
    if let Err(e) = cfg.build_f() {
        late.push(Diagnostic {
            line: f_line,
            key: "f".into(),
            reason: e.to_string(),
        });
    }
    if late.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError(late))
    }
}
