use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;

use growthlab_core::bgp::{uzawa_verdict, verify_harrod_form_with, Expectation, Verdict};
use growthlab_core::characteristics::{cfl_min_steps, exact_grid, refinement_study, solve_upwind};
use growthlab_core::dynamics::{format_f64, simulate};
use growthlab_core::production::{BiasKind, ProductionFunction, TechBias};
use growthlab_core::timescale::{analytic_cd_rate, convergence_rate};
use growthlab_core::{Error, Family};

use crate::config::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Simulate,
    Verdict,
    Classify,
    Pde,
    Timescale,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::Verdict => "verdict",
            Subcommand::Classify => "classify",
            Subcommand::Pde => "pde",
            Subcommand::Timescale => "timescale",
        }
    }
}

/// Result of a run that completed without an operational error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// A simulated result contradicts the steady-state growth theorem.
    Inconsistent(String),
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::Inconsistent(_) => 2,
        }
    }
}

/// Plain-text report: the resolved config followed by result sections.
struct Report {
    text: String,
}

impl Report {
    fn new(sub: Subcommand, cfg: &ScenarioConfig) -> Self {
        let mut r = Report {
            text: format!("# growthlab {} {}\n", env!("CARGO_PKG_VERSION"), sub.name()),
        };
        for (name, entries) in cfg.sections() {
            r.section(name, entries.into_iter().map(|(k, v)| (k.to_string(), v)));
        }
        r
    }

    fn section(&mut self, name: &str, entries: impl IntoIterator<Item = (String, String)>) {
        let _ = writeln!(self.text, "\n[{name}]");
        for (k, v) in entries {
            let _ = writeln!(self.text, "{k} = {v}");
        }
    }

    fn raw(&mut self, name: &str, body: &str) {
        let _ = writeln!(self.text, "\n[{name}]");
        self.text.push_str(body);
    }
}

fn owned(kv: Vec<(&'static str, String)>) -> Vec<(String, String)> {
    kv.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

struct Output<'a> {
    dir: &'a Path,
    prefix: &'a str,
}

impl Output<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(format!("{}{name}", self.prefix))
    }

    fn write(&self, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

pub fn run(sub: Subcommand, cfg: &ScenarioConfig, out_dir: &Path) -> anyhow::Result<Outcome> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let out = Output {
        dir: out_dir,
        prefix: &cfg.output.prefix,
    };
    match sub {
        Subcommand::Simulate => run_simulate(cfg, &out),
        Subcommand::Verdict => run_verdict(cfg, &out),
        Subcommand::Classify => run_classify(cfg, &out),
        Subcommand::Pde => run_pde(cfg, &out),
        Subcommand::Timescale => run_timescale(cfg, &out),
    }
}

fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn run_simulate(cfg: &ScenarioConfig, out: &Output) -> anyhow::Result<Outcome> {
    let pf = cfg.technology()?;
    let traj = match simulate(&pf, &cfg.model, cfg.run.t_end, cfg.run.dt) {
        Ok(traj) => traj,
        Err(Error::Overflow { t, partial }) => {
            let path = out.path("trajectory.csv");
            partial.save_csv(&path)?;
            anyhow::bail!(
                "overflow at t = {t}; partial trajectory written to {}",
                path.display()
            );
        }
        Err(e) => return Err(e.into()),
    };
    traj.save_csv(out.path("trajectory.csv"))?;
    let last = traj.len() - 1;
    let mut report = Report::new(Subcommand::Simulate, cfg);
    report.section(
        "simulate",
        owned(vec![
            ("points", traj.len().to_string()),
            ("t_final", format_f64(traj.times()[last])),
            ("Y_final", format_f64(traj.output()[last])),
            ("K_final", format_f64(traj.capital()[last])),
            (
                "max_abs_eq1_residual",
                format_f64(max_abs(traj.eq1_residual())),
            ),
            (
                "max_abs_euler_residual",
                format_f64(max_abs(traj.euler_residual())),
            ),
            ("trajectory", format!("{}trajectory.csv", cfg.output.prefix)),
        ]),
    );
    out.write("simulate.txt", &report.text)?;
    Ok(Outcome::Success)
}

fn run_verdict(cfg: &ScenarioConfig, out: &Output) -> anyhow::Result<Outcome> {
    let pf = cfg.technology()?;
    let v = uzawa_verdict(&pf, &cfg.model, &cfg.run)?;
    let mut report = Report::new(Subcommand::Verdict, cfg);
    let mut kv = owned(v.key_values());
    if v.verdict == Verdict::Bgp {
        let dev = verify_harrod_form_with(&v.trajectory, &pf, &v.report)?;
        kv.push(("harrod_form_deviation".into(), format_f64(dev)));
    }
    report.section("verdict", kv);
    out.write("verdict.txt", &report.text)?;
    v.trajectory.save_csv(out.path("verdict_trajectory.csv"))?;
    if v.consistent {
        Ok(Outcome::Success)
    } else {
        Ok(Outcome::Inconsistent(format!(
            "verdict {} contradicts the expected {} (g_hat = {})",
            v.verdict,
            v.expectation.label(),
            v.g_hat
        )))
    }
}

/// One cell of the classification matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRow {
    pub family: String,
    pub bias: BiasKind,
    pub expected: Expectation,
    pub verdict: Verdict,
    pub g_hat: f64,
    pub rho_implied: f64,
    /// Max relative deviation from the labor-augmenting form (BGP cells only).
    pub harrod_deviation: Option<f64>,
    pub consistent: bool,
    pub horizon: f64,
    pub truncated_at: Option<f64>,
}

pub const MATRIX_CSV_HEADER: &str = "family,bias,expected,verdict,g_hat,rho_implied,rho_expected,harrod_form_deviation,consistent,horizon,truncated_at";

impl MatrixRow {
    pub fn rho_expected(&self) -> Option<f64> {
        match self.expected {
            Expectation::Bgp { rho } => Some(rho),
            _ => None,
        }
    }

    fn fields(&self) -> [String; 11] {
        let opt = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
        [
            self.family.clone(),
            self.bias.name().to_string(),
            self.expected.label().to_string(),
            self.verdict.to_string(),
            format_f64(self.g_hat),
            format_f64(self.rho_implied),
            opt(self.rho_expected()),
            opt(self.harrod_deviation),
            self.consistent.to_string(),
            format_f64(self.horizon),
            opt(self.truncated_at),
        ]
    }
}

/// The 12 cells {Cobb-Douglas, CES 0.5, CES 2} x {none, Harrod, Hicks, Solow},
/// in that order, run in parallel.
pub fn classification_matrix(cfg: &ScenarioConfig) -> anyhow::Result<Vec<MatrixRow>> {
    let c = cfg.classify;
    let families = [
        ("cobb_douglas", Family::CobbDouglas { alpha: c.alpha }),
        (
            "ces_sigma_0.5",
            Family::Ces {
                share: c.share,
                sigma: 0.5,
            },
        ),
        (
            "ces_sigma_2",
            Family::Ces {
                share: c.share,
                sigma: 2.0,
            },
        ),
    ];
    let mut cells = vec![];
    for (label, family) in &families {
        for kind in BiasKind::ALL {
            let rate = if kind == BiasKind::None { 0.0 } else { c.rate };
            cells.push((*label, family.clone(), TechBias::new(kind, rate)?));
        }
    }
    cells
        .into_par_iter()
        .map(|(label, family, bias)| {
            let pf = ProductionFunction::new(family, bias)?;
            let v = uzawa_verdict(&pf, &cfg.model, &cfg.run)
                .with_context(|| format!("{label} / {}", bias.kind().name()))?;
            let harrod_deviation = match v.verdict {
                Verdict::Bgp => Some(verify_harrod_form_with(&v.trajectory, &pf, &v.report)?),
                Verdict::NoBgp => None,
            };
            Ok(MatrixRow {
                family: label.to_string(),
                bias: bias.kind(),
                expected: v.expectation,
                verdict: v.verdict,
                g_hat: v.g_hat,
                rho_implied: v.rho_implied,
                harrod_deviation,
                consistent: v.consistent,
                horizon: v.horizon,
                truncated_at: v.truncated_at,
            })
        })
        .collect()
}

pub fn matrix_csv(rows: &[MatrixRow]) -> String {
    let mut s = format!("{MATRIX_CSV_HEADER}\n");
    for row in rows {
        s.push_str(&row.fields().join(","));
        s.push('\n');
    }
    s
}

/// Column-aligned version of [`matrix_csv`].
pub fn matrix_table(rows: &[MatrixRow]) -> String {
    let header: Vec<String> = MATRIX_CSV_HEADER.split(',').map(String::from).collect();
    let body: Vec<Vec<String>> = rows.iter().map(|r| r.fields().to_vec()).collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut s = String::new();
    for row in std::iter::once(&header).chain(&body) {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        s.push_str(cells.join("  ").trim_end());
        s.push('\n');
    }
    s
}

fn run_classify(cfg: &ScenarioConfig, out: &Output) -> anyhow::Result<Outcome> {
    let rows = classification_matrix(cfg)?;
    out.write("classify.csv", &matrix_csv(&rows))?;
    let mut report = Report::new(Subcommand::Classify, cfg);
    report.raw("classify", &matrix_table(&rows));
    out.write("classify.txt", &report.text)?;
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| !r.consistent)
        .map(|r| format!("{}/{}", r.family, r.bias.name()))
        .collect();
    if bad.is_empty() {
        Ok(Outcome::Success)
    } else {
        Ok(Outcome::Inconsistent(format!(
            "inconsistent cells: {}",
            bad.join(", ")
        )))
    }
}

fn run_pde(cfg: &ScenarioConfig, out: &Output) -> anyhow::Result<Outcome> {
    let pde = cfg.advective_pde()?;
    let n_l = cfg.pde.n_l;
    let n_t = cfg.pde.n_t.unwrap_or_else(|| cfl_min_steps(&pde, n_l));
    let upwind = solve_upwind(&pde, n_l, n_t)?;
    let exact = exact_grid(&pde, n_l, n_t)?;
    upwind.save_csv(out.path("pde_upwind.csv"))?;
    exact.save_csv(out.path("pde_exact.csv"))?;

    let steps_per_point = n_t.div_ceil(n_l).max(1);
    let levels: Vec<usize> = (0..4).map(|k| n_l << k).collect();
    let study = refinement_study(&pde, &levels, steps_per_point)?;
    let mut table = String::from("n_l,n_t,dxi,max_error,order\n");
    for (i, level) in study.levels.iter().enumerate() {
        let order = if i == 0 {
            String::new()
        } else {
            format_f64(study.pairwise_orders[i - 1])
        };
        let _ = writeln!(
            table,
            "{},{},{},{},{order}",
            level.n_l,
            level.n_t,
            format_f64(level.dxi),
            format_f64(level.max_error)
        );
    }
    out.write("pde_refinement.csv", &table)?;

    let dxi = (pde.domain().1.ln() - pde.domain().0.ln()) / (n_l - 1) as f64;
    let courant = pde.rate().abs() * pde.t_horizon() / n_t as f64 / dxi;
    let mut report = Report::new(Subcommand::Pde, cfg);
    report.section(
        "pde_result",
        owned(vec![
            ("c", format_f64(pde.rate())),
            ("n_t_used", n_t.to_string()),
            ("courant", format_f64(courant)),
            ("max_error", format_f64(upwind.max_abs_difference(&exact)?)),
            ("fitted_order", format_f64(study.fitted_order)),
        ]),
    );
    report.raw("refinement", &table);
    out.write("pde.txt", &report.text)?;
    Ok(Outcome::Success)
}

fn run_timescale(cfg: &ScenarioConfig, out: &Output) -> anyhow::Result<Outcome> {
    let pf = cfg.technology()?;
    let traj = simulate(&pf, &cfg.model, cfg.run.t_end, cfg.run.dt)?;
    let r = convergence_rate(&traj, &pf)?;
    let mut kv = owned(r.key_values());
    if let (Family::CobbDouglas { alpha }, Some(rho)) = (pf.family(), pf.harrod_equivalent_rate()) {
        let m = &cfg.model;
        let analytic = analytic_cd_rate(*alpha, m.population_growth, rho, m.depreciation);
        kv.push(("lambda_analytic".into(), format_f64(analytic)));
        kv.push((
            "lambda_relative_error".into(),
            format_f64(r.lambda_hat / analytic - 1.0),
        ));
    }
    let mut report = Report::new(Subcommand::Timescale, cfg);
    report.section("timescale", kv);
    report.raw("time_to_fraction", &r.fraction_csv());
    out.write("timescale.txt", &report.text)?;
    out.write("timescale_fractions.csv", &r.fraction_csv())?;
    Ok(Outcome::Success)
}
