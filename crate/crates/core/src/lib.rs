//! Numerical laboratory for steady-state growth under technical change.
//!
//! - [`production`]: constant-returns technologies with Harrod, Solow or
//!   Hicks bias, exact marginal products and Euler diagnostics.
//! - [`dynamics`]: Solow/Swan accumulation with the growth-accounting
//!   decomposition recorded at every point.
//! - [`bgp`]: balanced-growth detection and the labor-augmenting verdict.
//! - [`characteristics`]: the transport equation behind the labor-augmenting
//!   form, solved in closed form and by upwinding.
//! - [`timescale`]: convergence rates and half-lives.

// `!(x > 0.0)` is used on purpose: it rejects NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bgp;
pub mod characteristics;
pub mod dynamics;
pub mod error;
pub mod production;
pub mod timescale;

pub use bgp::{
    bgp_condition_residual, detect_bgp, uzawa_verdict, verify_harrod_form, BgpReport, Expectation,
    UzawaVerdict, Verdict, VerdictSettings,
};
pub use characteristics::{
    solve_characteristics, solve_upwind, verify_corollary_on_trajectory, AdvectivePde, GridSolution,
};
pub use dynamics::{
    effective_steady_state, effective_units, growth_accounting_residual, simulate, ModelParams,
    StatePoint, Trajectory,
};
pub use error::{Error, Result};
pub use production::{
    BiasKind, CustomKernel, FactorShares, Family, MarginalProducts, ProductionFunction, TechBias,
};
pub use timescale::{analytic_cd_rate, convergence_rate, TimescaleReport};
