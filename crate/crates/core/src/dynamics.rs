//! Solow/Swan accumulation `K' = s Y - delta K`, `L' = n L`, integrated with
//! fixed-step classical RK4.
//!
//! Every recorded point carries the growth-accounting decomposition
//!
//! ```text
//! Y'/Y = (f_K K / Y) K'/K + (f_L L / Y) L'/L + f_t / Y
//! ```
//!
//! with `Y'/Y` obtained from the chain rule through the kernel's effective
//! arguments and the bracket from the partials of `f`, so the residual
//! checks that `f_t` and the marginal products agree with the bias.

use std::io::Write;
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};
use crate::production::{BiasKind, ProductionFunction, TechBias};

pub const TRAJECTORY_CSV_HEADER: [&str; 11] = [
    "t",
    "K",
    "L",
    "A",
    "Y",
    "gY",
    "gK",
    "share_K",
    "share_L",
    "eq1_residual",
    "euler_residual",
];

pub const DEFAULT_DT: f64 = 0.05;
pub const DEFAULT_T_END: f64 = 600.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Saving rate `s`, in (0, 1).
    pub saving_rate: f64,
    /// Depreciation `delta` per unit time.
    pub depreciation: f64,
    /// Labor growth `n` per unit time.
    pub population_growth: f64,
    pub capital0: f64,
    pub labor0: f64,
}

impl ModelParams {
    pub fn new(
        saving_rate: f64,
        depreciation: f64,
        population_growth: f64,
        capital0: f64,
        labor0: f64,
    ) -> Result<Self> {
        let mp = Self {
            saving_rate,
            depreciation,
            population_growth,
            capital0,
            labor0,
        };
        mp.validate()?;
        Ok(mp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.saving_rate.is_finite() && self.saving_rate > 0.0 && self.saving_rate < 1.0) {
            return Err(Error::Config(format!(
                "s out of range (0,1): {}",
                self.saving_rate
            )));
        }
        if !(self.depreciation.is_finite() && self.depreciation >= 0.0) {
            return Err(Error::Config(format!(
                "delta must be >= 0, got {}",
                self.depreciation
            )));
        }
        if !self.population_growth.is_finite() {
            return Err(Error::Config(format!(
                "n must be finite, got {}",
                self.population_growth
            )));
        }
        if !(self.capital0.is_finite() && self.capital0 > 0.0) {
            return Err(Error::Config(format!(
                "K0 must be positive, got {}",
                self.capital0
            )));
        }
        if !(self.labor0.is_finite() && self.labor0 > 0.0) {
            return Err(Error::Config(format!(
                "L0 must be positive, got {}",
                self.labor0
            )));
        }
        Ok(())
    }

    /// Checks `n + delta + rate > 0`, needed for a steady state in effective units.
    pub fn validate_with(&self, bias: TechBias) -> Result<()> {
        self.validate()?;
        let total = self.population_growth + self.depreciation + bias.rate();
        if total <= 0.0 {
            return Err(Error::Config(format!(
                "n + delta + bias rate must be positive, got {total}"
            )));
        }
        Ok(())
    }

    pub fn with_initial(mut self, capital0: f64, labor0: f64) -> Self {
        self.capital0 = capital0;
        self.labor0 = labor0;
        self
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            saving_rate: 0.2,
            depreciation: 0.05,
            population_growth: 0.01,
            capital0: 1.0,
            labor0: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatePoint {
    pub t: f64,
    pub capital: f64,
    pub labor: f64,
}

/// Everything recorded at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointRecord {
    pub t: f64,
    pub capital: f64,
    pub labor: f64,
    pub augmentation: f64,
    pub output: f64,
    pub g_y: f64,
    pub g_k: f64,
    pub share_k: f64,
    pub share_l: f64,
    pub eq1_residual: f64,
    pub euler_residual: f64,
}

impl PointRecord {
    fn values(&self) -> [f64; 11] {
        [
            self.t,
            self.capital,
            self.labor,
            self.augmentation,
            self.output,
            self.g_y,
            self.g_k,
            self.share_k,
            self.share_l,
            self.eq1_residual,
            self.euler_residual,
        ]
    }

    fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

/// Time-gridded simulation record, stored column-wise.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    params: ModelParams,
    bias: TechBias,
    t: Vec<f64>,
    capital: Vec<f64>,
    labor: Vec<f64>,
    augmentation: Vec<f64>,
    output: Vec<f64>,
    g_y: Vec<f64>,
    g_k: Vec<f64>,
    share_k: Vec<f64>,
    share_l: Vec<f64>,
    eq1_residual: Vec<f64>,
    euler_residual: Vec<f64>,
}

impl Trajectory {
    fn with_capacity(params: ModelParams, bias: TechBias, n: usize) -> Self {
        Self {
            params,
            bias,
            t: Vec::with_capacity(n),
            capital: Vec::with_capacity(n),
            labor: Vec::with_capacity(n),
            augmentation: Vec::with_capacity(n),
            output: Vec::with_capacity(n),
            g_y: Vec::with_capacity(n),
            g_k: Vec::with_capacity(n),
            share_k: Vec::with_capacity(n),
            share_l: Vec::with_capacity(n),
            eq1_residual: Vec::with_capacity(n),
            euler_residual: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, r: PointRecord) {
        self.t.push(r.t);
        self.capital.push(r.capital);
        self.labor.push(r.labor);
        self.augmentation.push(r.augmentation);
        self.output.push(r.output);
        self.g_y.push(r.g_y);
        self.g_k.push(r.g_k);
        self.share_k.push(r.share_k);
        self.share_l.push(r.share_l);
        self.eq1_residual.push(r.eq1_residual);
        self.euler_residual.push(r.euler_residual);
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn bias(&self) -> TechBias {
        self.bias
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn capital(&self) -> &[f64] {
        &self.capital
    }

    pub fn labor(&self) -> &[f64] {
        &self.labor
    }

    pub fn augmentation(&self) -> &[f64] {
        &self.augmentation
    }

    pub fn output(&self) -> &[f64] {
        &self.output
    }

    pub fn g_y(&self) -> &[f64] {
        &self.g_y
    }

    pub fn g_k(&self) -> &[f64] {
        &self.g_k
    }

    pub fn share_k(&self) -> &[f64] {
        &self.share_k
    }

    pub fn share_l(&self) -> &[f64] {
        &self.share_l
    }

    pub fn eq1_residual(&self) -> &[f64] {
        &self.eq1_residual
    }

    pub fn euler_residual(&self) -> &[f64] {
        &self.euler_residual
    }

    pub fn point(&self, i: usize) -> StatePoint {
        StatePoint {
            t: self.t[i],
            capital: self.capital[i],
            labor: self.labor[i],
        }
    }

    pub fn record(&self, i: usize) -> PointRecord {
        PointRecord {
            t: self.t[i],
            capital: self.capital[i],
            labor: self.labor[i],
            augmentation: self.augmentation[i],
            output: self.output[i],
            g_y: self.g_y[i],
            g_k: self.g_k[i],
            share_k: self.share_k[i],
            share_l: self.share_l[i],
            eq1_residual: self.eq1_residual[i],
            euler_residual: self.euler_residual[i],
        }
    }

    /// Index range of the last `fraction` of the recorded time span.
    pub fn tail_range(&self, fraction: f64) -> Range<usize> {
        if self.t.is_empty() {
            return 0..0;
        }
        let t0 = self.t[0];
        let t1 = self.t[self.t.len() - 1];
        let start_time = t1 - fraction * (t1 - t0);
        let start = self.t.partition_point(|&t| t < start_time);
        start..self.t.len()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(TRAJECTORY_CSV_HEADER)?;
        for i in 0..self.len() {
            w.write_record(self.record(i).values().iter().map(|v| format_f64(*v)))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// 17 significant digits, round-trip exact.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

enum StageFault {
    NonPositive(f64),
    NonFinite,
}

fn rhs(
    pf: &ProductionFunction,
    mp: &ModelParams,
    t: f64,
    k: f64,
    l: f64,
) -> std::result::Result<(f64, f64), StageFault> {
    if !(k.is_finite() && l.is_finite()) {
        return Err(StageFault::NonFinite);
    }
    if k <= 0.0 {
        return Err(StageFault::NonPositive(k));
    }
    let y = pf.value_unchecked(k, l, t);
    let dk = mp.saving_rate * y - mp.depreciation * k;
    let dl = mp.population_growth * l;
    if !(dk.is_finite() && dl.is_finite()) {
        return Err(StageFault::NonFinite);
    }
    Ok((dk, dl))
}

fn check_point(pf: &ProductionFunction, p: &StatePoint) -> Result<()> {
    pf.evaluate(p.capital, p.labor, p.t).map(|_| ())
}

/// Builds the full record at a state point. Growth rates come from the ODE
/// right-hand side, never from differencing grid points.
pub fn evaluate_point(
    pf: &ProductionFunction,
    mp: &ModelParams,
    p: &StatePoint,
) -> Result<PointRecord> {
    check_point(pf, p)?;
    let StatePoint {
        t,
        capital: k,
        labor: l,
    } = *p;
    let bias = pf.bias();
    let gamma = bias.rate();
    let n = mp.population_growth;

    let y = pf.value_unchecked(k, l, t);
    let mps = pf.marginal_products_unchecked(k, l, t);
    let k_dot = mp.saving_rate * y - mp.depreciation * k;
    let g_k = k_dot / k;

    // Y = scale * F(k_e, l_e); differentiate through the effective inputs.
    let eff = pf.effective_inputs(k, l, t);
    let f_eff = pf.kernel(eff.capital, eff.labor);
    let (f1, f2) = pf.kernel_gradient(eff.capital, eff.labor);
    let elast_k = f1 * eff.capital / f_eff;
    let elast_l = f2 * eff.labor / f_eff;
    let (g_scale, g_ke, g_le) = match bias.kind() {
        BiasKind::None => (0.0, g_k, n),
        BiasKind::Harrod => (0.0, g_k, n + gamma),
        BiasKind::Solow => (0.0, g_k + gamma, n),
        BiasKind::Hicks => (gamma, g_k, n),
    };
    let g_y = g_scale + elast_k * g_ke + elast_l * g_le;

    let share_k = mps.f_k * k / y;
    let share_l = mps.f_l * l / y;
    let eq1_residual = g_y - (share_k * g_k + share_l * n + mps.f_t / y);
    let euler_residual = (mps.f_k * k + mps.f_l * l - y) / y;

    Ok(PointRecord {
        t,
        capital: k,
        labor: l,
        augmentation: bias.factor(t),
        output: y,
        g_y,
        g_k,
        share_k,
        share_l,
        eq1_residual,
        euler_residual,
    })
}

/// `Y'/Y - [(f_K K/Y) K'/K + (f_L L/Y) L'/L + f_t/Y]` at a state point.
pub fn growth_accounting_residual(
    pf: &ProductionFunction,
    mp: &ModelParams,
    p: &StatePoint,
) -> Result<f64> {
    Ok(evaluate_point(pf, mp, p)?.eq1_residual)
}

/// Integrates the closed economy from `(K0, L0)` at `t = 0` to `t_end`.
///
/// The grid is `t_i = i * dt`; if `dt` does not divide `t_end` the final
/// step is shortened so the last point lands on `t_end`.
pub fn simulate(
    pf: &ProductionFunction,
    mp: &ModelParams,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    mp.validate_with(pf.bias())?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::Config(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    if !(dt.is_finite() && dt > 0.0 && dt <= t_end) {
        return Err(Error::Config(format!(
            "dt must lie in (0, t_end], got {dt}"
        )));
    }

    let steps = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    let mut traj = Trajectory::with_capacity(*mp, pf.bias(), steps + 1);

    let mut k = mp.capital0;
    let mut l = mp.labor0;
    let mut t = 0.0;

    for i in 0..=steps {
        let rec = evaluate_point(
            pf,
            mp,
            &StatePoint {
                t,
                capital: k,
                labor: l,
            },
        )?;
        if !rec.is_finite() {
            return Err(Error::Overflow {
                t,
                partial: Box::new(traj),
            });
        }
        traj.push(rec);
        if i == steps {
            break;
        }

        let t_next = if i + 1 == steps {
            t_end
        } else {
            (i + 1) as f64 * dt
        };
        let h = t_next - t;
        let half = 0.5 * h;
        let stages = (|| {
            let (k1, l1) = rhs(pf, mp, t, k, l)?;
            let (k2, l2) = rhs(pf, mp, t + half, k + half * k1, l + half * l1)?;
            let (k3, l3) = rhs(pf, mp, t + half, k + half * k2, l + half * l2)?;
            let (k4, l4) = rhs(pf, mp, t + h, k + h * k3, l + h * l3)?;
            let k_new = k + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            let l_new = l + h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
            if !(k_new.is_finite() && l_new.is_finite()) {
                return Err(StageFault::NonFinite);
            }
            if k_new <= 0.0 {
                return Err(StageFault::NonPositive(k_new));
            }
            Ok((k_new, l_new))
        })();
        let (k_new, l_new) = match stages {
            Ok(state) => state,
            Err(StageFault::NonFinite) => {
                return Err(Error::Overflow {
                    t: t_next,
                    partial: Box::new(traj),
                });
            }
            Err(StageFault::NonPositive(k_bad)) => {
                return Err(Error::Integration {
                    t: t_next,
                    reason: format!("capital stock became non-positive ({k_bad})"),
                });
            }
        };
        k = k_new;
        l = l_new;
        t = t_next;
    }
    Ok(traj)
}

/// Capital per efficiency unit of labor, `K / (L exp(rho t))`, where `rho`
/// is the technology's labor-augmenting rate (or its exact equivalent).
pub fn effective_units(pf: &ProductionFunction, k: f64, l: f64, t: f64) -> Result<f64> {
    let rho = pf.harrod_equivalent_rate().ok_or_else(|| {
        Error::Config(format!(
            "{} with {} bias has no labor-augmenting representation",
            pf.family().label(),
            pf.bias().kind()
        ))
    })?;
    Ok(k / (l * (rho * t).exp()))
}

/// Steady state of capital per efficiency unit: root of
/// `s F(k, 1) = (n + rho + delta) k`, found by bisection in `ln k`.
pub fn effective_steady_state(pf: &ProductionFunction, mp: &ModelParams) -> Result<f64> {
    let rho = pf.harrod_equivalent_rate().ok_or_else(|| {
        Error::Analysis("no balanced growth path: technology is not labor-augmenting".into())
    })?;
    let c = mp.population_growth + rho + mp.depreciation;
    if c <= 0.0 {
        return Err(Error::Config(format!(
            "n + rho + delta must be positive, got {c}"
        )));
    }
    // gap(x) = s F(e^x, 1) / e^x - c decreases in x for concave F
    let gap = |x: f64| {
        let k = x.exp();
        mp.saving_rate * pf.kernel(k, 1.0) / k - c
    };
    let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
    let mut expand = 0;
    while gap(lo) < 0.0 || gap(hi) > 0.0 {
        lo -= 4.0;
        hi += 4.0;
        expand += 1;
        if expand > 100 {
            return Err(Error::Numerical(
                "no effective-units steady state: s F(k,1)/k never crosses n + rho + delta".into(),
            ));
        }
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}
