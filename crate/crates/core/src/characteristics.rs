//! Transport equation `u_t - c L u_L = 0`, `u(L, 0) = F(L)`.
//!
//! Along the characteristics `L(t) = L0 exp(-c t)` the solution is constant,
//! which gives the closed form `u(L, t) = F(L exp(c t))`. With `c = g - n`
//! and `F` the production kernel at frozen `K`, this is the labor-augmenting
//! form of output on a balanced growth path.
//!
//! [`solve_upwind`] is an independent finite-difference route: in
//! `xi = ln L` the equation becomes `u_t = c u_xi`, a constant-speed
//! advection that first-order upwinding handles under the usual CFL bound.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use crate::bgp::{self, BgpReport, Verdict};
use crate::dynamics::{format_f64, Trajectory};
use crate::error::{Error, Result};
use crate::production::ProductionFunction;

pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub const MIN_GRID: usize = 16;

#[derive(Clone)]
pub struct AdvectivePde {
    rate: f64,
    profile: Profile,
    profile_domain: (f64, f64),
    l_min: f64,
    l_max: f64,
    t_horizon: f64,
}

impl fmt::Debug for AdvectivePde {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdvectivePde")
            .field("rate", &self.rate)
            .field("profile_domain", &self.profile_domain)
            .field("l_min", &self.l_min)
            .field("l_max", &self.l_max)
            .field("t_horizon", &self.t_horizon)
            .finish()
    }
}

impl AdvectivePde {
    /// `profile_domain` is where `F` may be evaluated; no extrapolation
    /// happens outside it.
    pub fn new(
        rate: f64,
        profile: Profile,
        profile_domain: (f64, f64),
        domain: (f64, f64),
        t_horizon: f64,
    ) -> Result<Self> {
        let (l_min, l_max) = domain;
        if !rate.is_finite() {
            return Err(Error::Config(format!(
                "advection rate must be finite, got {rate}"
            )));
        }
        if !(l_min > 0.0 && l_min.is_finite()) {
            return Err(Error::Config(format!(
                "L_min must be positive, got {l_min}"
            )));
        }
        if !(l_max > l_min && l_max.is_finite()) {
            return Err(Error::Config(format!(
                "L_max must exceed L_min, got [{l_min}, {l_max}]"
            )));
        }
        if !(t_horizon >= 0.0 && t_horizon.is_finite()) {
            return Err(Error::Config(format!(
                "t_horizon must be >= 0, got {t_horizon}"
            )));
        }
        let (lo, hi) = profile_domain;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::Config(format!(
                "profile domain must satisfy 0 < lo < hi, got [{lo}, {hi}]"
            )));
        }
        if lo > l_min || hi < l_max {
            return Err(Error::Config(format!(
                "profile domain [{lo}, {hi}] must contain [{l_min}, {l_max}]"
            )));
        }
        for l in [l_min, l_max] {
            let v = profile(l);
            if !v.is_finite() {
                return Err(Error::Config(format!(
                    "initial profile not finite at L = {l}"
                )));
            }
        }
        Ok(Self {
            rate,
            profile,
            profile_domain,
            l_min,
            l_max,
            t_horizon,
        })
    }

    /// Sizes the profile domain to exactly cover every characteristic foot
    /// reachable from `[l_min, l_max] x [0, t_horizon]`.
    pub fn covering(
        rate: f64,
        profile: Profile,
        domain: (f64, f64),
        t_horizon: f64,
    ) -> Result<Self> {
        let shift = (rate * t_horizon).exp();
        let lo = domain.0 * shift.min(1.0);
        let hi = domain.1 * shift.max(1.0);
        Self::new(rate, profile, (lo, hi), domain, t_horizon)
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.l_min, self.l_max)
    }

    pub fn profile_domain(&self) -> (f64, f64) {
        self.profile_domain
    }

    pub fn t_horizon(&self) -> f64 {
        self.t_horizon
    }

    pub fn initial(&self, l: f64) -> f64 {
        (self.profile)(l)
    }

    /// The problem restarted at `t1`: its initial profile is `u(., t1)`.
    pub fn advanced(&self, t1: f64) -> Result<Self> {
        let shift = (self.rate * t1).exp();
        let profile = Arc::clone(&self.profile);
        let (lo, hi) = self.profile_domain;
        let horizon = (self.t_horizon - t1).max(0.0);
        Ok(Self {
            rate: self.rate,
            profile: Arc::new(move |l| profile(l * shift)),
            profile_domain: (lo / shift, hi / shift),
            l_min: self.l_min,
            l_max: self.l_max,
            t_horizon: horizon,
        })
    }
}

/// Closed-form solution `F(L exp(c t))`.
pub fn solve_characteristics(pde: &AdvectivePde, l: f64, t: f64) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::Domain(format!("L must be positive, got {l}")));
    }
    let foot = l * (pde.rate * t).exp();
    let (lo, hi) = pde.profile_domain;
    // relative slack absorbs the rounding of exp() at the domain edges
    let slack = 1e-12;
    if !(foot >= lo * (1.0 - slack) && foot <= hi * (1.0 + slack)) {
        return Err(Error::OutOfDomain { foot, lo, hi });
    }
    Ok((pde.profile)(foot))
}

/// Values on a log-spaced L grid and a uniform t grid. `values[j][i]` is
/// `u(l_grid[i], t_grid[j])`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSolution {
    l_grid: Vec<f64>,
    t_grid: Vec<f64>,
    values: Vec<f64>,
}

impl GridSolution {
    pub fn l_grid(&self) -> &[f64] {
        &self.l_grid
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn value(&self, t_index: usize, l_index: usize) -> f64 {
        self.values[t_index * self.l_grid.len() + l_index]
    }

    pub fn slice(&self, t_index: usize) -> &[f64] {
        let n = self.l_grid.len();
        &self.values[t_index * n..(t_index + 1) * n]
    }

    pub fn last_slice(&self) -> &[f64] {
        self.slice(self.t_grid.len() - 1)
    }

    /// Max `|self - other|` over every grid value; grids must match.
    pub fn max_abs_difference(&self, other: &GridSolution) -> Result<f64> {
        if self.l_grid.len() != other.l_grid.len() || self.t_grid.len() != other.t_grid.len() {
            return Err(Error::Config("grid shapes differ".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }

    /// First row: `t\L` then the L grid. Each following row: t then values.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let mut header = vec!["t\\L".to_string()];
        header.extend(self.l_grid.iter().map(|&l| format_f64(l)));
        w.write_record(&header)?;
        for (j, &t) in self.t_grid.iter().enumerate() {
            let mut row = vec![format_f64(t)];
            row.extend(self.slice(j).iter().map(|&v| format_f64(v)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

struct Grid {
    xi0: f64,
    dxi: f64,
    dt: f64,
    l_grid: Vec<f64>,
    t_grid: Vec<f64>,
}

fn build_grid(pde: &AdvectivePde, n_l: usize, n_t: usize) -> Result<Grid> {
    if n_l < MIN_GRID || n_t < MIN_GRID {
        return Err(Error::Config(format!(
            "grid needs at least {MIN_GRID} points per axis, got {n_l} x {n_t}"
        )));
    }
    let xi0 = pde.l_min.ln();
    let xi1 = pde.l_max.ln();
    let dxi = (xi1 - xi0) / (n_l - 1) as f64;
    let dt = pde.t_horizon / n_t as f64;
    let mut l_grid: Vec<f64> = (0..n_l).map(|i| (xi0 + i as f64 * dxi).exp()).collect();
    // pin the endpoints so boundary values use the exact domain edges
    l_grid[0] = pde.l_min;
    l_grid[n_l - 1] = pde.l_max;
    let t_grid = (0..=n_t).map(|j| j as f64 * dt).collect();
    Ok(Grid {
        xi0,
        dxi,
        dt,
        l_grid,
        t_grid,
    })
}

/// Smallest number of time steps that satisfies `|c| dt <= d(xi)`.
pub fn cfl_min_steps(pde: &AdvectivePde, n_l: usize) -> usize {
    let dxi = (pde.l_max.ln() - pde.l_min.ln()) / (n_l.max(2) - 1) as f64;
    let steps = (pde.rate.abs() * pde.t_horizon / dxi * (1.0 - 1e-12)).ceil() as usize;
    steps.max(MIN_GRID)
}

/// Closed form sampled on the grid [`solve_upwind`] would use.
pub fn exact_grid(pde: &AdvectivePde, n_l: usize, n_t: usize) -> Result<GridSolution> {
    let g = build_grid(pde, n_l, n_t)?;
    let mut values = Vec::with_capacity(g.l_grid.len() * g.t_grid.len());
    for &t in &g.t_grid {
        for &l in &g.l_grid {
            values.push(solve_characteristics(pde, l, t)?);
        }
    }
    Ok(GridSolution {
        l_grid: g.l_grid,
        t_grid: g.t_grid,
        values,
    })
}

/// First-order upwind in `(ln L, t)`. The inflow boundary takes the exact
/// characteristic value; the outflow boundary needs no condition.
pub fn solve_upwind(pde: &AdvectivePde, n_l: usize, n_t: usize) -> Result<GridSolution> {
    let g = build_grid(pde, n_l, n_t)?;
    let c = pde.rate;
    let courant = c.abs() * g.dt / g.dxi;
    if courant > 1.0 + 1e-12 {
        return Err(Error::Cfl {
            nt: n_t,
            min_nt: cfl_min_steps(pde, n_l),
        });
    }
    debug_assert!(g.xi0.is_finite());

    let mut values = Vec::with_capacity(n_l * (n_t + 1));
    let mut current: Vec<f64> = g.l_grid.iter().map(|&l| pde.initial(l)).collect();
    values.extend_from_slice(&current);
    let mut next = vec![0.0; n_l];

    for j in 1..=n_t {
        let t = g.t_grid[j];
        if c > 0.0 {
            // information travels toward smaller L: downwind stencil uses i + 1
            for i in 0..n_l - 1 {
                next[i] = (1.0 - courant) * current[i] + courant * current[i + 1];
            }
            next[n_l - 1] = solve_characteristics(pde, g.l_grid[n_l - 1], t)?;
        } else if c < 0.0 {
            for i in 1..n_l {
                next[i] = (1.0 - courant) * current[i] + courant * current[i - 1];
            }
            next[0] = solve_characteristics(pde, g.l_grid[0], t)?;
        } else {
            next.copy_from_slice(&current);
        }
        if let Some(bad) = next.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "upwind value not finite at L = {}, t = {t}",
                g.l_grid[bad]
            )));
        }
        std::mem::swap(&mut current, &mut next);
        values.extend_from_slice(&current);
    }
    Ok(GridSolution {
        l_grid: g.l_grid,
        t_grid: g.t_grid,
        values,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementLevel {
    pub n_l: usize,
    pub n_t: usize,
    pub dxi: f64,
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementStudy {
    pub levels: Vec<RefinementLevel>,
    /// `log2(e_k / e_{k+1})` for consecutive levels.
    pub pairwise_orders: Vec<f64>,
    /// Least-squares slope of `ln error` against `ln d(xi)`.
    pub fitted_order: f64,
}

/// Upwind against the closed form on successively doubled grids, with the
/// time step refined in proportion so the Courant number stays fixed.
pub fn refinement_study(
    pde: &AdvectivePde,
    n_l_levels: &[usize],
    steps_per_point: usize,
) -> Result<RefinementStudy> {
    if n_l_levels.len() < 2 {
        return Err(Error::Config(
            "refinement study needs at least two levels".into(),
        ));
    }
    let mut levels = Vec::with_capacity(n_l_levels.len());
    for &n_l in n_l_levels {
        let n_t = n_l * steps_per_point;
        let upwind = solve_upwind(pde, n_l, n_t)?;
        let exact = exact_grid(pde, n_l, n_t)?;
        let max_error = upwind.max_abs_difference(&exact)?;
        let dxi = (pde.l_max.ln() - pde.l_min.ln()) / (n_l - 1) as f64;
        levels.push(RefinementLevel {
            n_l,
            n_t,
            dxi,
            max_error,
        });
    }
    let pairwise_orders = levels
        .windows(2)
        .map(|w| (w[0].max_error / w[1].max_error).ln() / (w[0].dxi / w[1].dxi).ln())
        .collect();
    let xs: Vec<f64> = levels.iter().map(|l| l.dxi.ln()).collect();
    let ys: Vec<f64> = levels.iter().map(|l| l.max_error.ln()).collect();
    let fitted_order = crate::timescale::least_squares(&xs, &ys).slope;
    Ok(RefinementStudy {
        levels,
        pairwise_orders,
        fitted_order,
    })
}

/// Checks recorded output against the transported profile: at each tail
/// point, `K(t)` is frozen and the kernel `F(K, .)` is carried along the
/// characteristic with rate `g_hat - n`.
pub fn verify_corollary_on_trajectory(
    traj: &Trajectory,
    pf: &ProductionFunction,
    report: &BgpReport,
) -> Result<f64> {
    if report.verdict != Verdict::Bgp {
        return Err(Error::Analysis(
            "no balanced growth path: the transported labor-augmenting form does not exist".into(),
        ));
    }
    let rate = report.g_hat - traj.params().population_growth;
    let mut worst: f64 = 0.0;
    for i in bgp::window_indices(traj, report) {
        let p = traj.point(i);
        let kernel = pf.unbiased();
        let capital = p.capital;
        let profile: Profile = Arc::new(move |l| kernel.kernel(capital, l));
        let pde = AdvectivePde {
            rate,
            profile,
            profile_domain: (f64::MIN_POSITIVE, f64::MAX),
            l_min: p.labor,
            l_max: p.labor * 2.0,
            t_horizon: p.t,
        };
        let u = solve_characteristics(&pde, p.labor, p.t)?;
        worst = worst.max((u / traj.output()[i] - 1.0).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(rate: f64) -> AdvectivePde {
        AdvectivePde::covering(rate, Arc::new(|x| x), (1.0, 10.0), 10.0).unwrap()
    }

    #[test]
    fn linear_profile_grows_exponentially() {
        let u = solve_characteristics(&linear(0.02), 1.0, 10.0).unwrap();
        assert!((u - 0.2_f64.exp()).abs() < 1e-15);
        assert!((u - 1.221402758).abs() < 1e-9);
    }

    #[test]
    fn log_profile_adds_rate_times_time() {
        for c in [-0.03, 0.01, 0.07] {
            let pde =
                AdvectivePde::covering(c, Arc::new(|x: f64| x.ln()), (0.5, 4.0), 20.0).unwrap();
            for t in [0.0, 3.5, 20.0] {
                let u = solve_characteristics(&pde, 1.0, t).unwrap();
                assert!((u - c * t).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_rate_is_stationary() {
        let pde =
            AdvectivePde::covering(0.0, Arc::new(|x: f64| x.sin() + 2.0), (1.0, 3.0), 5.0).unwrap();
        assert_eq!(
            solve_characteristics(&pde, 2.0, 5.0).unwrap(),
            2.0_f64.sin() + 2.0
        );
        let grid = solve_upwind(&pde, 32, 32).unwrap();
        let first = grid.slice(0).to_vec();
        for j in 0..grid.t_grid().len() {
            assert_eq!(grid.slice(j), &first[..]);
        }
    }

    #[test]
    fn foot_outside_profile_domain_is_rejected() {
        let pde = AdvectivePde::new(0.1, Arc::new(|x| x), (1.0, 10.0), (1.0, 10.0), 10.0).unwrap();
        assert!(matches!(
            solve_characteristics(&pde, 9.0, 5.0),
            Err(Error::OutOfDomain { .. })
        ));
        // the upwind inflow boundary needs the same foot
        assert!(matches!(
            solve_upwind(&pde, 32, 32),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn cfl_violation_reports_floor() {
        let pde = AdvectivePde::covering(2.0, Arc::new(|x| x), (1.0, 2.0), 1.0).unwrap();
        let floor = cfl_min_steps(&pde, 64);
        match solve_upwind(&pde, 64, 16) {
            Err(Error::Cfl { nt, min_nt }) => {
                assert_eq!(nt, 16);
                assert_eq!(min_nt, floor);
            }
            other => panic!("expected CFL error, got {other:?}"),
        }
        assert!(solve_upwind(&pde, 64, floor).is_ok());
        assert!(solve_upwind(&pde, 64, floor - 1).is_err());
    }

    #[test]
    fn negative_rate_flows_the_other_way() {
        let pde =
            AdvectivePde::covering(-0.05, Arc::new(|x: f64| x * x), (1.0, 5.0), 10.0).unwrap();
        let up = solve_upwind(&pde, 128, 256).unwrap();
        let ex = exact_grid(&pde, 128, 256).unwrap();
        let coarse = up.max_abs_difference(&ex).unwrap();
        assert!(coarse / 25.0 < 0.02, "error {coarse}");
        assert_eq!(up.value(256, 0), ex.value(256, 0));
        let fine = solve_upwind(&pde, 256, 512)
            .unwrap()
            .max_abs_difference(&exact_grid(&pde, 256, 512).unwrap())
            .unwrap();
        assert!(fine < 0.6 * coarse);
    }

    #[test]
    fn rejects_bad_geometry() {
        let p: Profile = Arc::new(|x| x);
        assert!(AdvectivePde::new(0.1, p.clone(), (1.0, 2.0), (0.0, 2.0), 1.0).is_err());
        assert!(AdvectivePde::new(0.1, p.clone(), (1.0, 2.0), (2.0, 1.0), 1.0).is_err());
        assert!(AdvectivePde::new(0.1, p.clone(), (1.5, 2.0), (1.0, 2.0), 1.0).is_err());
        assert!(AdvectivePde::new(0.1, p, (1.0, 2.0), (1.0, 2.0), -1.0).is_err());
        assert!(solve_upwind(&linear(0.02), 8, 64).is_err());
    }

    #[test]
    fn grid_csv_layout() {
        let grid = solve_upwind(&linear(0.02), 16, 16).unwrap();
        let mut buf = Vec::new();
        grid.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
        assert_eq!(rows.len(), 17 + 1);
        assert_eq!(rows[0].len(), 17);
        assert_eq!(rows[0][1].parse::<f64>().unwrap(), 1.0);
        assert_eq!(rows[1][0].parse::<f64>().unwrap(), 0.0);
        assert_eq!(rows[17][0].parse::<f64>().unwrap(), 10.0);
    }
}
