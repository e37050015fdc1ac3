//! Scenario files: `[section]` headers, `key = value` lines, `#` comments.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use growthlab_core::bgp::VerdictSettings;
use growthlab_core::characteristics::{AdvectivePde, Profile, MIN_GRID};
use growthlab_core::production::{BiasKind, Family, ProductionFunction, TechBias};
use growthlab_core::ModelParams;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Every problem found in a file, in line order.
#[derive(Debug, Clone, PartialEq, Eq)]
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

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Linear,
    Log,
    /// `F(K0, L)` of the configured kernel.
    Kernel,
}

impl ProfileKind {
    pub fn name(self) -> &'static str {
        match self {
            ProfileKind::Linear => "linear",
            ProfileKind::Log => "log",
            ProfileKind::Kernel => "kernel",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeSettings {
    /// Advection rate; defaults to the technology's labor-augmenting rate.
    pub rate: Option<f64>,
    pub l_min: f64,
    pub l_max: f64,
    pub t_horizon: f64,
    pub n_l: usize,
    /// Defaults to the CFL floor for `n_l`.
    pub n_t: Option<usize>,
    pub profile: ProfileKind,
}

impl Default for PdeSettings {
    fn default() -> Self {
        Self {
            rate: None,
            l_min: 0.5,
            l_max: 8.0,
            t_horizon: 20.0,
            n_l: 64,
            n_t: None,
            profile: ProfileKind::Kernel,
        }
    }
}

/// The fixed 3 x 4 matrix behind `classify`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifySettings {
    pub alpha: f64,
    pub share: f64,
    pub rate: f64,
}

impl Default for ClassifySettings {
    fn default() -> Self {
        Self {
            alpha: 1.0 / 3.0,
            share: 0.4,
            rate: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OutputSettings {
    /// Prepended to every file written under the output directory.
    pub prefix: String,
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub family: Family,
    pub bias: TechBias,
    pub model: ModelParams,
    pub run: VerdictSettings,
    pub pde: PdeSettings,
    pub classify: ClassifySettings,
    pub output: OutputSettings,
}

impl ScenarioConfig {
    pub fn technology(&self) -> growthlab_core::Result<ProductionFunction> {
        ProductionFunction::new(self.family.clone(), self.bias)
    }

    /// Resolved configuration as `(section, [(key, value)])`, defaults included.
    pub fn sections(&self) -> Vec<(&'static str, Vec<(&'static str, String)>)> {
        let mut production = vec![];
        match &self.family {
            Family::CobbDouglas { alpha } => {
                production.push(("family", "cobb_douglas".to_string()));
                production.push(("alpha", alpha.to_string()));
            }
            Family::Ces { share, sigma } => {
                production.push(("family", "ces".to_string()));
                production.push(("share", share.to_string()));
                production.push(("sigma", sigma.to_string()));
            }
            Family::Custom(k) => production.push(("family", format!("custom:{}", k.name()))),
        }
        let technology = vec![
            ("bias", self.bias.kind().name().to_string()),
            ("rate", self.bias.rate().to_string()),
        ];
        let m = &self.model;
        let model = vec![
            ("s", m.saving_rate.to_string()),
            ("delta", m.depreciation.to_string()),
            ("n", m.population_growth.to_string()),
            ("K0", m.capital0.to_string()),
            ("L0", m.labor0.to_string()),
        ];
        let r = &self.run;
        let run = vec![
            ("t_end", r.t_end.to_string()),
            ("dt", r.dt.to_string()),
            ("tail_fraction", r.tail_fraction.to_string()),
            ("tol", r.tol.to_string()),
        ];
        let p = &self.pde;
        let pde = vec![
            (
                "c",
                p.rate.map_or_else(|| "auto".to_string(), |c| c.to_string()),
            ),
            ("l_min", p.l_min.to_string()),
            ("l_max", p.l_max.to_string()),
            ("t_horizon", p.t_horizon.to_string()),
            ("n_l", p.n_l.to_string()),
            (
                "n_t",
                p.n_t.map_or_else(|| "auto".to_string(), |n| n.to_string()),
            ),
            ("profile", p.profile.name().to_string()),
        ];
        let c = &self.classify;
        let classify = vec![
            ("alpha", c.alpha.to_string()),
            ("share", c.share.to_string()),
            ("rate", c.rate.to_string()),
        ];
        let output = vec![("prefix", self.output.prefix.clone())];
        vec![
            ("production", production),
            ("technology", technology),
            ("model", model),
            ("run", run),
            ("pde", pde),
            ("classify", classify),
            ("output", output),
        ]
    }

    /// Advection problem for `pde`, with the rate resolved.
    pub fn advective_pde(&self) -> anyhow::Result<AdvectivePde> {
        let pf = self.technology()?;
        let rate = match self.pde.rate {
            Some(c) => c,
            None => pf.harrod_equivalent_rate().ok_or_else(|| {
                anyhow::anyhow!(
                    "[pde] c is required: the technology has no labor-augmenting equivalent"
                )
            })?,
        };
        let profile: Profile = match self.pde.profile {
            ProfileKind::Linear => Arc::new(|l| l),
            ProfileKind::Log => Arc::new(f64::ln),
            ProfileKind::Kernel => {
                let kernel = pf.unbiased();
                let k0 = self.model.capital0;
                Arc::new(move |l| kernel.kernel(k0, l))
            }
        };
        let pde = AdvectivePde::covering(
            rate,
            profile,
            (self.pde.l_min, self.pde.l_max),
            self.pde.t_horizon,
        )?;
        Ok(pde)
    }
}

struct Entry {
    value: String,
    line: usize,
    used: bool,
}

const SECTIONS: [&str; 7] = [
    "production",
    "technology",
    "model",
    "run",
    "pde",
    "classify",
    "output",
];

/// Raw key/value table plus the errors collected while reading it.
struct Table {
    entries: BTreeMap<(String, String), Entry>,
    section_lines: BTreeMap<String, usize>,
    errors: Vec<ConfigError>,
}

impl Table {
    fn read(text: &str) -> Self {
        let mut t = Table {
            entries: BTreeMap::new(),
            section_lines: BTreeMap::new(),
            errors: vec![],
        };
        let mut section: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    t.err(line, format!("malformed section header `{content}`"));
                    continue;
                };
                let name = name.trim().to_string();
                if !SECTIONS.contains(&name.as_str()) {
                    t.err(line, format!("unknown section [{name}]"));
                    section = None;
                    continue;
                }
                if t.section_lines.insert(name.clone(), line).is_some() {
                    t.err(line, format!("section [{name}] appears twice"));
                }
                section = Some(name);
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                t.err(
                    line,
                    format!("malformed line `{content}`: expected key = value"),
                );
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                t.err(line, "missing key before `=`".to_string());
                continue;
            }
            let Some(sec) = &section else {
                t.err(line, format!("key `{key}` outside of any section"));
                continue;
            };
            let slot = (sec.clone(), key.to_string());
            if let Some(prev) = t.entries.get(&slot) {
                let msg = format!(
                    "duplicate key `{key}` in [{sec}] (first on line {})",
                    prev.line
                );
                t.err(line, msg);
                continue;
            }
            t.entries.insert(
                slot,
                Entry {
                    value: value.to_string(),
                    line,
                    used: false,
                },
            );
        }
        t
    }

    fn err(&mut self, line: usize, message: String) {
        self.errors.push(ConfigError {
            line: Some(line),
            message,
        });
    }

    fn take(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        let e = self
            .entries
            .get_mut(&(section.to_string(), key.to_string()))?;
        e.used = true;
        Some((e.value.clone(), e.line))
    }

    fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        self.entries
            .get(&(section.to_string(), key.to_string()))
            .map(|e| e.line)
            .or_else(|| self.section_lines.get(section).copied())
    }

    fn number(&mut self, section: &str, key: &str) -> Option<f64> {
        let (raw, line) = self.take(section, key)?;
        match parse_number(&raw) {
            Some(v) => Some(v),
            None => {
                self.err(line, format!("[{section}] {key}: `{raw}` is not a number"));
                None
            }
        }
    }

    fn required_number(&mut self, section: &str, key: &str) -> Option<f64> {
        if !self
            .entries
            .contains_key(&(section.to_string(), key.to_string()))
        {
            let line = self.section_lines.get(section).copied();
            self.errors.push(ConfigError {
                line,
                message: format!("missing required key `{key}` in [{section}]"),
            });
            return None;
        }
        self.number(section, key)
    }

    fn count(&mut self, section: &str, key: &str) -> Option<usize> {
        let (raw, line) = self.take(section, key)?;
        match raw.parse::<usize>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.err(
                    line,
                    format!("[{section}] {key}: `{raw}` is not a non-negative integer"),
                );
                None
            }
        }
    }

    fn reject_unused(&mut self) {
        let unused: Vec<(usize, String, String)> = self
            .entries
            .iter()
            .filter(|(_, e)| !e.used)
            .map(|((s, k), e)| (e.line, s.clone(), k.clone()))
            .collect();
        for (line, s, k) in unused {
            self.err(line, format!("unknown key `{k}` in [{s}]"));
        }
    }
}

/// Plain decimal or a ratio `a/b`.
fn parse_number(raw: &str) -> Option<f64> {
    let v = match raw.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?,
        None => raw.parse::<f64>().ok()?,
    };
    v.is_finite().then_some(v)
}

/// Message without the error-kind prefix.
fn bare(e: growthlab_core::Error) -> String {
    match e {
        growthlab_core::Error::Config(m) | growthlab_core::Error::Domain(m) => m,
        other => other.to_string(),
    }
}

/// Picks the key a validation message is about from its first word.
fn blame(table: &Table, section: &str, keys: &[&str], message: &str) -> Option<usize> {
    let first = message.split_whitespace().next().unwrap_or("");
    keys.iter()
        .find(|k| k.eq_ignore_ascii_case(first))
        .and_then(|k| table.line_of(section, k))
        .or_else(|| table.section_lines.get(section).copied())
}

pub fn parse_str(text: &str) -> Result<ScenarioConfig, ConfigErrors> {
    let mut t = Table::read(text);

    // production
    let family = match t.take("production", "family") {
        None => {
            let line = t.section_lines.get("production").copied();
            t.errors.push(ConfigError {
                line,
                message: "missing required key `family` in [production]".into(),
            });
            None
        }
        Some((name, line)) => match name.to_ascii_lowercase().as_str() {
            "cobb_douglas" | "cobbdouglas" | "cd" => t
                .required_number("production", "alpha")
                .map(|alpha| Family::CobbDouglas { alpha }),
            "ces" => {
                let share = t.required_number("production", "share");
                let sigma = t.required_number("production", "sigma");
                share
                    .zip(sigma)
                    .map(|(share, sigma)| Family::Ces { share, sigma })
            }
            _ => {
                t.err(
                    line,
                    format!("unknown family `{name}` (expected cobb_douglas or ces)"),
                );
                None
            }
        },
    };

    // technology
    let kind = match t.take("technology", "bias") {
        None => Some(BiasKind::None),
        Some((raw, line)) => match raw.parse::<BiasKind>() {
            Ok(k) => Some(k),
            Err(e) => {
                t.err(line, bare(e));
                None
            }
        },
    };
    let rate = match kind {
        Some(BiasKind::None) | None => t.number("technology", "rate").unwrap_or(0.0),
        Some(_) => t.required_number("technology", "rate").unwrap_or(0.0),
    };
    let bias = kind.and_then(|k| match TechBias::new(k, rate) {
        Ok(b) => Some(b),
        Err(e) => {
            let line = t.line_of("technology", "rate");
            t.errors.push(ConfigError {
                line,
                message: bare(e),
            });
            None
        }
    });

    let technology = match (&family, bias) {
        (Some(f), Some(b)) => match ProductionFunction::new(f.clone(), b) {
            Ok(_) => Some((f.clone(), b)),
            Err(e) => {
                let msg = bare(e);
                let line = blame(&t, "production", &["alpha", "share", "sigma"], &msg);
                t.errors.push(ConfigError { line, message: msg });
                None
            }
        },
        _ => None,
    };

    // model
    let s = t.required_number("model", "s");
    let delta = t.required_number("model", "delta");
    let n = t.required_number("model", "n");
    let k0 = t.number("model", "K0").unwrap_or(1.0);
    let l0 = t.number("model", "L0").unwrap_or(1.0);
    let model = match (s, delta, n) {
        (Some(s), Some(delta), Some(n)) => {
            let mp = ModelParams {
                saving_rate: s,
                depreciation: delta,
                population_growth: n,
                capital0: k0,
                labor0: l0,
            };
            let check = match bias {
                Some(b) => mp.validate_with(b),
                None => mp.validate(),
            };
            match check {
                Ok(()) => Some(mp),
                Err(e) => {
                    let msg = bare(e);
                    let line = blame(&t, "model", &["s", "delta", "n", "K0", "L0"], &msg);
                    t.errors.push(ConfigError { line, message: msg });
                    None
                }
            }
        }
        _ => None,
    };

    // run
    let defaults = VerdictSettings::default();
    let run = VerdictSettings {
        t_end: t.number("run", "t_end").unwrap_or(defaults.t_end),
        dt: t.number("run", "dt").unwrap_or(defaults.dt),
        tail_fraction: t
            .number("run", "tail_fraction")
            .unwrap_or(defaults.tail_fraction),
        tol: t.number("run", "tol").unwrap_or(defaults.tol),
    };
    let mut run_errors = vec![];
    if !(run.t_end > 0.0) {
        run_errors.push((
            "t_end",
            format!("t_end must be positive, got {}", run.t_end),
        ));
    }
    if !(run.dt > 0.0 && run.dt <= run.t_end) {
        run_errors.push(("dt", format!("dt must lie in (0, t_end], got {}", run.dt)));
    }
    if !(run.tail_fraction > 0.0 && run.tail_fraction < 1.0) {
        run_errors.push((
            "tail_fraction",
            format!("tail_fraction out of range (0,1): {}", run.tail_fraction),
        ));
    }
    if !(run.tol > 0.0) {
        run_errors.push(("tol", format!("tol must be positive, got {}", run.tol)));
    }
    for (key, message) in run_errors {
        let line = t.line_of("run", key);
        t.errors.push(ConfigError { line, message });
    }

    // pde
    let pd = PdeSettings::default();
    let profile = match t.take("pde", "profile") {
        None => pd.profile,
        Some((raw, line)) => match raw.as_str() {
            "linear" => ProfileKind::Linear,
            "log" => ProfileKind::Log,
            "kernel" => ProfileKind::Kernel,
            _ => {
                t.err(
                    line,
                    format!("unknown profile `{raw}` (expected linear, log or kernel)"),
                );
                pd.profile
            }
        },
    };
    let pde = PdeSettings {
        rate: t.number("pde", "c"),
        l_min: t.number("pde", "l_min").unwrap_or(pd.l_min),
        l_max: t.number("pde", "l_max").unwrap_or(pd.l_max),
        t_horizon: t.number("pde", "t_horizon").unwrap_or(pd.t_horizon),
        n_l: t.count("pde", "n_l").unwrap_or(pd.n_l),
        n_t: t.count("pde", "n_t"),
        profile,
    };
    let mut pde_errors = vec![];
    if !(pde.l_min > 0.0) {
        pde_errors.push((
            "l_min",
            format!("l_min must be positive, got {}", pde.l_min),
        ));
    }
    if !(pde.l_max > pde.l_min) {
        pde_errors.push((
            "l_max",
            format!("l_max must exceed l_min, got {}", pde.l_max),
        ));
    }
    if !(pde.t_horizon > 0.0) {
        pde_errors.push((
            "t_horizon",
            format!("t_horizon must be positive, got {}", pde.t_horizon),
        ));
    }
    if pde.n_l < MIN_GRID {
        pde_errors.push((
            "n_l",
            format!("n_l must be at least {MIN_GRID}, got {}", pde.n_l),
        ));
    }
    if let Some(n_t) = pde.n_t.filter(|&n| n < MIN_GRID) {
        pde_errors.push(("n_t", format!("n_t must be at least {MIN_GRID}, got {n_t}")));
    }
    for (key, message) in pde_errors {
        let line = t.line_of("pde", key);
        t.errors.push(ConfigError { line, message });
    }

    // classify
    let cd = ClassifySettings::default();
    let classify = ClassifySettings {
        alpha: t.number("classify", "alpha").unwrap_or(cd.alpha),
        share: t.number("classify", "share").unwrap_or(cd.share),
        rate: t.number("classify", "rate").unwrap_or(cd.rate),
    };
    for (key, v) in [("alpha", classify.alpha), ("share", classify.share)] {
        if !(v > 0.0 && v < 1.0) {
            let line = t.line_of("classify", key);
            t.errors.push(ConfigError {
                line,
                message: format!("{key} out of range (0,1): {v}"),
            });
        }
    }

    let output = OutputSettings {
        prefix: t
            .take("output", "prefix")
            .map(|(v, _)| v)
            .unwrap_or_default(),
    };

    t.reject_unused();
    if !t.errors.is_empty() {
        let mut errors = t.errors;
        errors.sort_by_key(|e| e.line.unwrap_or(0));
        return Err(ConfigErrors(errors));
    }
    let (family, bias) = technology.expect("validated technology");
    Ok(ScenarioConfig {
        family,
        bias,
        model: model.expect("validated model"),
        run,
        pde,
        classify,
        output,
    })
}

pub fn parse_config(path: impl AsRef<Path>) -> anyhow::Result<ScenarioConfig> {
    let path = path.as_ref();
    let bytes =
        std::fs::read(path).map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
    let text = String::from_utf8(bytes)
        .map_err(|_| anyhow::anyhow!("{} is not valid UTF-8", path.display()))?;
    Ok(parse_str(&text)?)
}
