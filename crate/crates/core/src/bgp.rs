//! Balanced-growth detection and the labor-augmenting classification.
//!
//! A run is on a balanced growth path when, over a tail window, output and
//! capital grow at one common constant rate and factor shares stay put.
//! Constancy is judged against an explicit tolerance since any finite
//! horizon only approaches the asymptotic steady state.

use std::fmt;

use crate::dynamics::{self, evaluate_point, simulate, ModelParams, StatePoint, Trajectory};
use crate::error::{Error, Result};
use crate::production::{Family, ProductionFunction};

pub const DEFAULT_TAIL_FRACTION: f64 = 0.25;
pub const DEFAULT_TOL: f64 = 1e-4;
pub const MIN_WINDOW_POINTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Bgp,
    NoBgp,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Bgp => "BGP",
            Verdict::NoBgp => "NoBGP",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BgpReport {
    /// Mean of `Y'/Y` over the window.
    pub g_hat: f64,
    pub window: (f64, f64),
    pub window_points: usize,
    pub g_y_drift: f64,
    pub g_k_drift: f64,
    /// `max |share_K - mean| / mean` over the window.
    pub share_drift: f64,
    pub tol: f64,
    pub verdict: Verdict,
    pub rho_implied: f64,
}

impl BgpReport {
    pub fn max_drift(&self) -> f64 {
        self.g_y_drift.max(self.g_k_drift).max(self.share_drift)
    }

    pub fn key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("verdict", self.verdict.to_string()),
            ("g_hat", fmt_num(self.g_hat)),
            ("rho_implied", fmt_num(self.rho_implied)),
            ("window_start", fmt_num(self.window.0)),
            ("window_end", fmt_num(self.window.1)),
            ("window_points", self.window_points.to_string()),
            ("gY_drift", fmt_num(self.g_y_drift)),
            ("gK_drift", fmt_num(self.g_k_drift)),
            ("share_drift", fmt_num(self.share_drift)),
            ("tol", fmt_num(self.tol)),
        ]
    }

    /// Flat `key = value` block.
    pub fn render(&self) -> String {
        self.key_values()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

fn fmt_num(v: f64) -> String {
    dynamics::format_f64(v)
}

/// Classifies the tail of `traj`.
///
/// `g_hat` is the mean of `Y'/Y` over the last `tail_fraction` of the time
/// span; the verdict is BGP iff both growth rates stay within `tol` of it
/// and the capital share stays within relative `tol` of its window mean.
pub fn detect_bgp(traj: &Trajectory, tail_fraction: f64, tol: f64) -> Result<BgpReport> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(Error::Config(format!(
            "tail_fraction out of range (0,1): {tail_fraction}"
        )));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Config(format!("tol must be positive, got {tol}")));
    }
    let range = traj.tail_range(tail_fraction);
    if range.len() < MIN_WINDOW_POINTS {
        return Err(Error::Analysis(format!(
            "tail window holds {} points, need at least {MIN_WINDOW_POINTS}",
            range.len()
        )));
    }
    let g_y = &traj.g_y()[range.clone()];
    let g_k = &traj.g_k()[range.clone()];
    let share = &traj.share_k()[range.clone()];
    let count = range.len() as f64;

    let g_hat = g_y.iter().sum::<f64>() / count;
    let max_dev =
        |xs: &[f64], centre: f64| xs.iter().fold(0.0_f64, |m, x| m.max((x - centre).abs()));
    let g_y_drift = max_dev(g_y, g_hat);
    let g_k_drift = max_dev(g_k, g_hat);
    let share_mean = share.iter().sum::<f64>() / count;
    let share_drift = if share_mean > 0.0 {
        max_dev(share, share_mean) / share_mean
    } else {
        // capital has no share at all: shares are not balanced in any useful sense
        f64::INFINITY
    };

    let times = traj.times();
    let verdict = if g_y_drift <= tol && g_k_drift <= tol && share_drift <= tol {
        Verdict::Bgp
    } else {
        Verdict::NoBgp
    };
    Ok(BgpReport {
        g_hat,
        window: (times[range.start], times[range.end - 1]),
        window_points: range.len(),
        g_y_drift,
        g_k_drift,
        share_drift,
        tol,
        verdict,
        rho_implied: g_hat - traj.params().population_growth,
    })
}

/// `[n + f_t / (f_L L)] - Y'/Y` at a state point.
pub fn bgp_condition_residual(
    pf: &ProductionFunction,
    mp: &ModelParams,
    p: &StatePoint,
) -> Result<f64> {
    let rec = evaluate_point(pf, mp, p)?;
    let mps = pf.marginal_products(p.capital, p.labor, p.t)?;
    let wage_bill = mps.f_l * p.labor;
    if !(wage_bill.abs() > 1e-290) {
        return Err(Error::Numerical(format!(
            "f_L L = {wage_bill} below underflow guard at t = {}",
            p.t
        )));
    }
    Ok(mp.population_growth + mps.f_t / wage_bill - rec.g_y)
}

/// Residual series over a trajectory's recorded points.
pub fn bgp_condition_series(pf: &ProductionFunction, traj: &Trajectory) -> Result<Vec<f64>> {
    (0..traj.len())
        .map(|i| bgp_condition_residual(pf, traj.params(), &traj.point(i)))
        .collect()
}

/// What the steady-state growth theorem predicts for a technology.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Expectation {
    /// A BGP growing at `n + rho`.
    Bgp { rho: f64 },
    /// No BGP can exist.
    NoBgp,
    /// Custom kernel with non-labor-augmenting bias: no prediction.
    Unconstrained,
}

impl Expectation {
    pub fn for_technology(pf: &ProductionFunction) -> Self {
        match pf.harrod_equivalent_rate() {
            Some(rho) => Expectation::Bgp { rho },
            None => match pf.family() {
                Family::Custom(_) => Expectation::Unconstrained,
                _ => Expectation::NoBgp,
            },
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Expectation::Bgp { .. } => "BGP",
            Expectation::NoBgp => "NoBGP",
            Expectation::Unconstrained => "unconstrained",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerdictSettings {
    pub t_end: f64,
    pub dt: f64,
    pub tail_fraction: f64,
    pub tol: f64,
}

impl Default for VerdictSettings {
    fn default() -> Self {
        Self {
            t_end: dynamics::DEFAULT_T_END,
            dt: dynamics::DEFAULT_DT,
            tail_fraction: DEFAULT_TAIL_FRACTION,
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct UzawaVerdict {
    pub verdict: Verdict,
    pub g_hat: f64,
    pub rho_implied: f64,
    pub expectation: Expectation,
    /// False when the simulated verdict contradicts the theorem.
    pub consistent: bool,
    pub report: BgpReport,
    /// Horizon of the run the verdict rests on (doubled on a retry).
    pub horizon: f64,
    /// Set when the run stopped early on overflow (explosive growth).
    pub truncated_at: Option<f64>,
    pub trajectory: Trajectory,
}

impl UzawaVerdict {
    pub fn key_values(&self) -> Vec<(&'static str, String)> {
        let mut kv = self.report.key_values();
        kv.push(("expected", self.expectation.label().to_string()));
        if let Expectation::Bgp { rho } = self.expectation {
            kv.push(("rho_expected", fmt_num(rho)));
        }
        kv.push(("consistent", self.consistent.to_string()));
        kv.push(("horizon", fmt_num(self.horizon)));
        kv.push((
            "truncated_at",
            self.truncated_at
                .map_or_else(|| "none".to_string(), fmt_num),
        ));
        kv
    }
}

fn run_and_detect(
    pf: &ProductionFunction,
    mp: &ModelParams,
    settings: &VerdictSettings,
    t_end: f64,
) -> Result<(Trajectory, Option<f64>, BgpReport)> {
    let (traj, truncated_at) = match simulate(pf, mp, t_end, settings.dt) {
        Ok(traj) => (traj, None),
        // super-exponential growth; the record up to the blow-up is the evidence
        Err(Error::Overflow { t, partial }) => (*partial, Some(t)),
        Err(e) => return Err(e),
    };
    let report = detect_bgp(&traj, settings.tail_fraction, settings.tol)?;
    Ok((traj, truncated_at, report))
}

/// Simulates, classifies and checks the result against the theorem.
///
/// A NoBGP verdict is only accepted if it survives a rerun at twice the
/// horizon; otherwise slow convergence could pass for divergence.
pub fn uzawa_verdict(
    pf: &ProductionFunction,
    mp: &ModelParams,
    settings: &VerdictSettings,
) -> Result<UzawaVerdict> {
    let mut horizon = settings.t_end;
    let (mut traj, mut truncated_at, mut report) = run_and_detect(pf, mp, settings, horizon)?;
    if report.verdict == Verdict::NoBgp && truncated_at.is_none() {
        horizon *= 2.0;
        (traj, truncated_at, report) = run_and_detect(pf, mp, settings, horizon)?;
    }

    let expectation = Expectation::for_technology(pf);
    let consistent = match expectation {
        Expectation::Bgp { rho } => {
            report.verdict == Verdict::Bgp
                && (report.g_hat - (mp.population_growth + rho)).abs() <= settings.tol
        }
        Expectation::NoBgp => report.verdict == Verdict::NoBgp,
        Expectation::Unconstrained => true,
    };
    Ok(UzawaVerdict {
        verdict: report.verdict,
        g_hat: report.g_hat,
        rho_implied: report.rho_implied,
        expectation,
        consistent,
        report,
        horizon,
        truncated_at,
        trajectory: traj,
    })
}

/// Max relative gap between recorded `Y(t)` and the unbiased kernel at
/// `(K(t), L(t) exp((g_hat - n) t))` over the tail window.
pub fn verify_harrod_form_with(
    traj: &Trajectory,
    pf: &ProductionFunction,
    report: &BgpReport,
) -> Result<f64> {
    if report.verdict != Verdict::Bgp {
        return Err(Error::Analysis(
            "no balanced growth path: a labor-augmenting representation does not exist".into(),
        ));
    }
    let rho = report.g_hat - traj.params().population_growth;
    let mut worst: f64 = 0.0;
    for i in window_indices(traj, report) {
        let p = traj.point(i);
        let y = traj.output()[i];
        let harrod = pf.kernel(p.capital, p.labor * (rho * p.t).exp());
        worst = worst.max((harrod / y - 1.0).abs());
    }
    Ok(worst)
}

/// [`verify_harrod_form_with`] using the default detection settings.
pub fn verify_harrod_form(traj: &Trajectory, pf: &ProductionFunction) -> Result<f64> {
    let report = detect_bgp(traj, DEFAULT_TAIL_FRACTION, DEFAULT_TOL)?;
    verify_harrod_form_with(traj, pf, &report)
}

/// Indices of `traj` inside the report's window.
pub(crate) fn window_indices(traj: &Trajectory, report: &BgpReport) -> std::ops::Range<usize> {
    let times = traj.times();
    let start = times.partition_point(|&t| t < report.window.0);
    let end = times.partition_point(|&t| t <= report.window.1);
    start..end
}
