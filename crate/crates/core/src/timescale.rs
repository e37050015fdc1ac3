//! How long the approach to the balanced growth path takes.
//!
//! Convergence is measured in capital per efficiency unit `k = K / (A L)`,
//! whose fixed point defines the path. Near it the gap decays like
//! `exp(-lambda t)`; for Cobb-Douglas the linearised rate is
//! `(1 - alpha)(n + rho + delta)`.

use std::f64::consts::LN_2;

use crate::dynamics::{effective_steady_state, effective_units, format_f64, Trajectory};
use crate::error::{Error, Result};
use crate::production::ProductionFunction;

pub const GAP_FRACTIONS: [f64; 4] = [0.5, 0.1, 0.05, 0.01];
const FIT_UPPER: f64 = 0.5;
const FIT_LOWER: f64 = 0.01;
const MIN_START_GAP: f64 = 0.1;
const MIN_FIT_POINTS: usize = 10;
pub const R2_WARNING: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares `y = intercept + slope x`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    LinearFit {
        slope,
        intercept: my - slope * mx,
        r2,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimescaleReport {
    pub lambda_hat: f64,
    pub half_life: f64,
    pub k_star: f64,
    pub initial_gap: f64,
    /// First time the gap falls to each fraction of its initial value;
    /// `None` if the run ends first.
    pub time_to_fraction: Vec<(f64, Option<f64>)>,
    pub fit_window: (f64, f64),
    pub fit_points: usize,
    pub fit_r2: f64,
    /// Set when `fit_r2` is below 0.99.
    pub fit_warning: bool,
}

impl TimescaleReport {
    pub fn time_to(&self, fraction: f64) -> Option<f64> {
        self.time_to_fraction
            .iter()
            .find(|(f, _)| *f == fraction)
            .and_then(|(_, t)| *t)
    }

    pub fn key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("lambda_hat", format_f64(self.lambda_hat)),
            ("half_life", format_f64(self.half_life)),
            ("k_star", format_f64(self.k_star)),
            ("initial_gap", format_f64(self.initial_gap)),
            ("fit_window_start", format_f64(self.fit_window.0)),
            ("fit_window_end", format_f64(self.fit_window.1)),
            ("fit_points", self.fit_points.to_string()),
            ("fit_r2", format_f64(self.fit_r2)),
            ("fit_warning", self.fit_warning.to_string()),
        ]
    }

    /// `fraction,time` rows; unreached fractions get an empty time.
    pub fn fraction_csv(&self) -> String {
        let mut out = String::from("fraction,time\n");
        for (f, t) in &self.time_to_fraction {
            let t = t.map(format_f64).unwrap_or_default();
            out.push_str(&format!("{},{t}\n", format_f64(*f)));
        }
        out
    }
}

/// Linearised Cobb-Douglas convergence rate `(1 - alpha)(n + rho + delta)`.
pub fn analytic_cd_rate(alpha: f64, n: f64, rho: f64, delta: f64) -> f64 {
    (1.0 - alpha) * (n + rho + delta)
}

/// Fits `ln |k(t) - k*|` over the stretch where the gap lies between 1% and
/// 50% of its starting value.
pub fn convergence_rate(traj: &Trajectory, pf: &ProductionFunction) -> Result<TimescaleReport> {
    if traj.is_empty() {
        return Err(Error::Analysis("empty trajectory".into()));
    }
    let k_star = effective_steady_state(pf, traj.params())?;
    let gaps: Vec<f64> = (0..traj.len())
        .map(|i| {
            let p = traj.point(i);
            effective_units(pf, p.capital, p.labor, p.t).map(|k| (k - k_star).abs())
        })
        .collect::<Result<_>>()?;
    let initial_gap = gaps[0];
    if initial_gap / k_star < MIN_START_GAP {
        return Err(Error::Analysis(format!(
            "run starts within {:.3}% of the steady state; need at least {}%",
            100.0 * initial_gap / k_star,
            100.0 * MIN_START_GAP
        )));
    }

    let times = traj.times();
    let start = gaps
        .iter()
        .position(|&g| g <= FIT_UPPER * initial_gap)
        .ok_or_else(|| Error::Analysis("gap never halves: run does not converge".into()))?;
    let end = gaps[start..]
        .iter()
        .position(|&g| g < FIT_LOWER * initial_gap)
        .map_or(gaps.len(), |p| start + p);
    if end - start < MIN_FIT_POINTS {
        return Err(Error::Analysis(format!(
            "only {} points in the fit window",
            end - start
        )));
    }
    let xs = &times[start..end];
    let ys: Vec<f64> = gaps[start..end].iter().map(|g| g.ln()).collect();
    let fit = least_squares(xs, &ys);
    let lambda_hat = -fit.slope;
    if !(lambda_hat > 0.0) {
        return Err(Error::Analysis(format!(
            "gap is not shrinking (fitted rate {lambda_hat})"
        )));
    }

    let time_to_fraction = GAP_FRACTIONS
        .iter()
        .map(|&f| (f, first_crossing(times, &gaps, f * initial_gap)))
        .collect();

    Ok(TimescaleReport {
        lambda_hat,
        half_life: LN_2 / lambda_hat,
        k_star,
        initial_gap,
        time_to_fraction,
        fit_window: (times[start], times[end - 1]),
        fit_points: end - start,
        fit_r2: fit.r2,
        fit_warning: fit.r2 < R2_WARNING,
    })
}

/// First time `gaps` reaches `level`, linearly interpolated between samples.
fn first_crossing(times: &[f64], gaps: &[f64], level: f64) -> Option<f64> {
    let i = gaps.iter().position(|&g| g <= level)?;
    if i == 0 {
        return Some(times[0]);
    }
    let (g0, g1) = (gaps[i - 1], gaps[i]);
    let w = (g0 - level) / (g0 - g1);
    Some(times[i - 1] + w * (times[i] - times[i - 1]))
}
