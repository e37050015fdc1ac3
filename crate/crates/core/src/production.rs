//! Constant-returns production technologies `Y = f(K, L, t)`.
//!
//! A [`ProductionFunction`] is a degree-1 kernel `F(K, L)` together with an
//! exponential technical-change bias `A(t) = exp(rate * t)` that enters
//! in one of three places:
//!
//! ```text
//! Harrod (labor-augmenting)    Y = F(K, A(t) L)
//! Solow  (capital-augmenting)  Y = F(A(t) K, L)
//! Hicks  (output-augmenting)   Y = A(t) F(K, L)
//! ```
//!
//! Partial derivatives are exact for the built-in families. Custom kernels
//! may supply their own gradient; otherwise central differences are used.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BiasKind {
    None,
    Harrod,
    Solow,
    Hicks,
}

impl BiasKind {
    pub const ALL: [BiasKind; 4] = [
        BiasKind::None,
        BiasKind::Harrod,
        BiasKind::Hicks,
        BiasKind::Solow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BiasKind::None => "none",
            BiasKind::Harrod => "harrod",
            BiasKind::Solow => "solow",
            BiasKind::Hicks => "hicks",
        }
    }
}

impl fmt::Display for BiasKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BiasKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(BiasKind::None),
            "harrod" | "labor" | "labour" => Ok(BiasKind::Harrod),
            "solow" | "capital" => Ok(BiasKind::Solow),
            "hicks" | "output" => Ok(BiasKind::Hicks),
            other => Err(Error::Config(format!("unknown bias kind `{other}`"))),
        }
    }
}

/// Single-rate exponential technical change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TechBias {
    kind: BiasKind,
    rate: f64,
}

impl TechBias {
    pub fn new(kind: BiasKind, rate: f64) -> Result<Self> {
        if !rate.is_finite() {
            return Err(Error::Config(format!(
                "bias rate must be finite, got {rate}"
            )));
        }
        let rate = if kind == BiasKind::None { 0.0 } else { rate };
        Ok(Self { kind, rate })
    }

    pub fn none() -> Self {
        Self {
            kind: BiasKind::None,
            rate: 0.0,
        }
    }

    pub fn harrod(rate: f64) -> Result<Self> {
        Self::new(BiasKind::Harrod, rate)
    }

    pub fn solow(rate: f64) -> Result<Self> {
        Self::new(BiasKind::Solow, rate)
    }

    pub fn hicks(rate: f64) -> Result<Self> {
        Self::new(BiasKind::Hicks, rate)
    }

    pub fn kind(&self) -> BiasKind {
        self.kind
    }

    /// Rate per unit time; always 0 for [`BiasKind::None`].
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Augmentation factor `A(t) = exp(rate * t)`.
    pub fn factor(&self, t: f64) -> f64 {
        if self.kind == BiasKind::None {
            1.0
        } else {
            (self.rate * t).exp()
        }
    }
}

impl Default for TechBias {
    fn default() -> Self {
        Self::none()
    }
}

pub type KernelFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type KernelGradientFn = Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>;

/// User-supplied kernel `F(K, L)`, assumed homogeneous of degree 1.
///
/// Nothing enforces the homogeneity; [`ProductionFunction::homogeneity_check`]
/// and [`ProductionFunction::euler_residual`] are how callers find out.
#[derive(Clone)]
pub struct CustomKernel {
    name: String,
    value: KernelFn,
    gradient: Option<KernelGradientFn>,
}

impl CustomKernel {
    pub fn new<F>(name: impl Into<String>, value: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            value: Arc::new(value),
            gradient: None,
        }
    }

    /// Replaces the finite-difference gradient with a closed form.
    pub fn with_gradient<G>(mut self, gradient: G) -> Self
    where
        G: Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomKernel")
            .field("name", &self.name)
            .field("analytic_gradient", &self.gradient.is_some())
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum Family {
    CobbDouglas {
        alpha: f64,
    },
    /// `F = (share K^p + (1 - share) L^p)^(1/p)` with `p = (sigma - 1) / sigma`.
    Ces {
        share: f64,
        sigma: f64,
    },
    Custom(CustomKernel),
}

impl Family {
    pub fn label(&self) -> String {
        match self {
            Family::CobbDouglas { alpha } => format!("cobb_douglas(alpha={alpha})"),
            Family::Ces { share, sigma } => format!("ces(share={share}, sigma={sigma})"),
            Family::Custom(k) => format!("custom({})", k.name),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalProducts {
    pub f_k: f64,
    pub f_l: f64,
    pub f_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorShares {
    pub capital: f64,
    pub labor: f64,
}

/// Arguments actually fed to the kernel: `Y = scale * F(capital, labor)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveInputs {
    pub capital: f64,
    pub labor: f64,
    pub scale: f64,
}

#[derive(Debug, Clone)]
pub struct ProductionFunction {
    family: Family,
    bias: TechBias,
}

/// Step for central differences: `max(|x|, 1) * eps^(1/3)`, balancing
/// O(h^2) truncation against O(eps / h) roundoff. Rounded down to a power of
/// two so `x +- h` is exact and linear kernels differentiate exactly.
pub fn central_difference_step(x: f64) -> f64 {
    let h = x.abs().max(1.0) * f64::EPSILON.cbrt();
    2f64.powi(h.log2().floor() as i32)
}

fn check_unit_interval(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} out of range (0,1): {v}")))
    }
}

fn check_inputs(k: f64, l: f64, t: f64) -> Result<()> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::Domain(format!(
            "capital must be positive and finite, got {k}"
        )));
    }
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::Domain(format!(
            "labor must be positive and finite, got {l}"
        )));
    }
    if !t.is_finite() {
        return Err(Error::Domain(format!("time must be finite, got {t}")));
    }
    Ok(())
}

impl ProductionFunction {
    /// Validates parameters. CES with `sigma == 1` becomes Cobb-Douglas with
    /// `alpha = share`.
    pub fn new(family: Family, bias: TechBias) -> Result<Self> {
        let family = match family {
            Family::CobbDouglas { alpha } => {
                check_unit_interval("alpha", alpha)?;
                Family::CobbDouglas { alpha }
            }
            Family::Ces { share, sigma } => {
                check_unit_interval("share", share)?;
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(Error::Config(format!(
                        "sigma must be positive, got {sigma}"
                    )));
                }
                if sigma == 1.0 {
                    Family::CobbDouglas { alpha: share }
                } else {
                    Family::Ces { share, sigma }
                }
            }
            custom @ Family::Custom(_) => custom,
        };
        Ok(Self { family, bias })
    }

    pub fn cobb_douglas(alpha: f64) -> Result<Self> {
        Self::new(Family::CobbDouglas { alpha }, TechBias::none())
    }

    pub fn ces(share: f64, sigma: f64) -> Result<Self> {
        Self::new(Family::Ces { share, sigma }, TechBias::none())
    }

    pub fn custom(kernel: CustomKernel) -> Self {
        Self {
            family: Family::Custom(kernel),
            bias: TechBias::none(),
        }
    }

    pub fn with_bias(mut self, bias: TechBias) -> Self {
        self.bias = bias;
        self
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn bias(&self) -> TechBias {
        self.bias
    }

    /// Same kernel, no technical change.
    pub fn unbiased(&self) -> Self {
        Self {
            family: self.family.clone(),
            bias: TechBias::none(),
        }
    }

    /// True when partial derivatives are exact (built-in families or a
    /// custom kernel that ships its own gradient).
    pub fn has_analytic_partials(&self) -> bool {
        match &self.family {
            Family::Custom(k) => k.has_analytic_gradient(),
            _ => true,
        }
    }

    /// Constant labor-augmenting rate that reproduces this technology
    /// exactly, if one exists.
    ///
    /// For Cobb-Douglas every bias has one: Hicks `g` maps to `g / (1 - alpha)`
    /// and Solow `g` to `g * alpha / (1 - alpha)`.
    pub fn harrod_equivalent_rate(&self) -> Option<f64> {
        let rate = self.bias.rate();
        match (self.bias.kind(), &self.family) {
            (BiasKind::None, _) => Some(0.0),
            (BiasKind::Harrod, _) => Some(rate),
            (BiasKind::Hicks, Family::CobbDouglas { alpha }) => Some(rate / (1.0 - alpha)),
            (BiasKind::Solow, Family::CobbDouglas { alpha }) => Some(rate * alpha / (1.0 - alpha)),
            _ => None,
        }
    }

    /// The unbiased kernel `F(K, L)`. No domain checks.
    pub fn kernel(&self, k: f64, l: f64) -> f64 {
        match &self.family {
            Family::CobbDouglas { alpha } => k.powf(*alpha) * l.powf(1.0 - alpha),
            Family::Ces { share, sigma } => ces_log_value(*share, *sigma, k, l).exp(),
            Family::Custom(c) => (c.value)(k, l),
        }
    }

    /// `(dF/dK, dF/dL)` of the unbiased kernel.
    pub fn kernel_gradient(&self, k: f64, l: f64) -> (f64, f64) {
        match &self.family {
            Family::CobbDouglas { alpha } => {
                let y = self.kernel(k, l);
                (alpha * y / k, (1.0 - alpha) * y / l)
            }
            Family::Ces { share, sigma } => {
                let p = (sigma - 1.0) / sigma;
                let ln_y = ces_log_value(*share, *sigma, k, l);
                // dF/dK = share (F/K)^(1-p), dF/dL = (1-share) (F/L)^(1-p)
                let fk = (share.ln() + (1.0 - p) * (ln_y - k.ln())).exp();
                let fl = ((1.0 - share).ln() + (1.0 - p) * (ln_y - l.ln())).exp();
                (fk, fl)
            }
            Family::Custom(c) => match &c.gradient {
                Some(g) => g(k, l),
                None => {
                    let hk = central_difference_step(k);
                    let hl = central_difference_step(l);
                    let f = &c.value;
                    // keep the stencil inside the positive orthant
                    let hk = if k > hk { hk } else { k * f64::EPSILON.cbrt() };
                    let hl = if l > hl { hl } else { l * f64::EPSILON.cbrt() };
                    let fk = (f(k + hk, l) - f(k - hk, l)) / (2.0 * hk);
                    let fl = (f(k, l + hl) - f(k, l - hl)) / (2.0 * hl);
                    (fk, fl)
                }
            },
        }
    }

    /// Where the bias puts `A(t)`.
    pub fn effective_inputs(&self, k: f64, l: f64, t: f64) -> EffectiveInputs {
        let a = self.bias.factor(t);
        match self.bias.kind() {
            BiasKind::None => EffectiveInputs {
                capital: k,
                labor: l,
                scale: 1.0,
            },
            BiasKind::Harrod => EffectiveInputs {
                capital: k,
                labor: l * a,
                scale: 1.0,
            },
            BiasKind::Solow => EffectiveInputs {
                capital: k * a,
                labor: l,
                scale: 1.0,
            },
            BiasKind::Hicks => EffectiveInputs {
                capital: k,
                labor: l,
                scale: a,
            },
        }
    }

    pub fn evaluate(&self, k: f64, l: f64, t: f64) -> Result<f64> {
        check_inputs(k, l, t)?;
        Ok(self.value_unchecked(k, l, t))
    }

    pub(crate) fn value_unchecked(&self, k: f64, l: f64, t: f64) -> f64 {
        let e = self.effective_inputs(k, l, t);
        e.scale * self.kernel(e.capital, e.labor)
    }

    pub fn marginal_products(&self, k: f64, l: f64, t: f64) -> Result<MarginalProducts> {
        check_inputs(k, l, t)?;
        Ok(self.marginal_products_unchecked(k, l, t))
    }

    pub(crate) fn marginal_products_unchecked(&self, k: f64, l: f64, t: f64) -> MarginalProducts {
        let g = self.bias.rate();
        let a = self.bias.factor(t);
        match self.bias.kind() {
            BiasKind::None => {
                let (fk, fl) = self.kernel_gradient(k, l);
                MarginalProducts {
                    f_k: fk,
                    f_l: fl,
                    f_t: 0.0,
                }
            }
            BiasKind::Harrod => {
                let la = l * a;
                let (f1, f2) = self.kernel_gradient(k, la);
                MarginalProducts {
                    f_k: f1,
                    f_l: a * f2,
                    f_t: g * la * f2,
                }
            }
            BiasKind::Solow => {
                let ka = k * a;
                let (f1, f2) = self.kernel_gradient(ka, l);
                MarginalProducts {
                    f_k: a * f1,
                    f_l: f2,
                    f_t: g * ka * f1,
                }
            }
            BiasKind::Hicks => {
                let (f1, f2) = self.kernel_gradient(k, l);
                let y = a * self.kernel(k, l);
                MarginalProducts {
                    f_k: a * f1,
                    f_l: a * f2,
                    f_t: g * y,
                }
            }
        }
    }

    pub fn factor_shares(&self, k: f64, l: f64, t: f64) -> Result<FactorShares> {
        check_inputs(k, l, t)?;
        let y = self.value_unchecked(k, l, t);
        let mp = self.marginal_products_unchecked(k, l, t);
        Ok(FactorShares {
            capital: mp.f_k * k / y,
            labor: mp.f_l * l / y,
        })
    }

    /// `(f_K K + f_L L - Y) / Y`; zero for degree-1 technologies.
    pub fn euler_residual(&self, k: f64, l: f64, t: f64) -> Result<f64> {
        check_inputs(k, l, t)?;
        let y = self.value_unchecked(k, l, t);
        let mp = self.marginal_products_unchecked(k, l, t);
        Ok((mp.f_k * k + mp.f_l * l - y) / y)
    }

    /// Max over `lambdas` of `|f(lK, lL, t) - l f(K, L, t)| / (l f(K, L, t))`.
    pub fn homogeneity_check(&self, k: f64, l: f64, t: f64, lambdas: &[f64]) -> Result<f64> {
        check_inputs(k, l, t)?;
        if lambdas.is_empty() {
            return Err(Error::Config(
                "homogeneity check needs at least one scale factor".into(),
            ));
        }
        let y = self.value_unchecked(k, l, t);
        let mut worst: f64 = 0.0;
        for &lambda in lambdas {
            if !(lambda.is_finite() && lambda > 0.0) {
                return Err(Error::Config(format!(
                    "scale factor must be positive, got {lambda}"
                )));
            }
            let scaled = self.value_unchecked(lambda * k, lambda * l, t);
            let dev = (scaled - lambda * y).abs() / (lambda * y);
            worst = worst.max(dev);
        }
        Ok(worst)
    }
}

/// `ln F` for the CES kernel, evaluated as a log-sum-exp so extreme
/// exponents do not overflow.
fn ces_log_value(share: f64, sigma: f64, k: f64, l: f64) -> f64 {
    let p = (sigma - 1.0) / sigma;
    let a = share.ln() + p * k.ln();
    let b = (1.0 - share).ln() + p * l.ln();
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    (hi + (lo - hi).exp().ln_1p()) / p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn cobb_douglas_square_root() {
        let pf = ProductionFunction::cobb_douglas(0.5).unwrap();
        assert_eq!(pf.evaluate(4.0, 1.0, 0.0).unwrap(), 2.0);
    }

    #[test]
    fn cobb_douglas_identity_point() {
        let pf = ProductionFunction::cobb_douglas(0.3).unwrap();
        for t in [0.0, 3.0, 250.0] {
            assert_eq!(pf.evaluate(1.0, 1.0, t).unwrap(), 1.0);
        }
        let mp = pf.marginal_products(1.0, 1.0, 0.0).unwrap();
        assert!(close(mp.f_k, 0.3, 1e-15));
        assert!(close(mp.f_l, 0.7, 1e-15));
        assert_eq!(mp.f_t, 0.0);
    }

    #[test]
    fn ces_reference_point() {
        // sigma = 0.5 makes p = -1: F = 1 / (0.4/2 + 0.6/1) = 1.25 exactly.
        // f_K = 0.4 (F/K)^2 = 0.15625, f_L = 0.6 F^2 = 0.9375.
        let pf = ProductionFunction::ces(0.4, 0.5).unwrap();
        assert!(close(pf.evaluate(2.0, 1.0, 0.0).unwrap(), 1.25, 1e-14));
        let mp = pf.marginal_products(2.0, 1.0, 0.0).unwrap();
        assert!(close(mp.f_k, 0.15625, 1e-14));
        assert!(close(mp.f_l, 0.9375, 1e-14));
        let s = pf.factor_shares(2.0, 1.0, 0.0).unwrap();
        assert!(close(s.capital, 0.25, 1e-14));
        assert!(close(s.labor, 0.75, 1e-14));
    }

    #[test]
    fn ces_unit_sigma_routes_to_cobb_douglas() {
        let pf = ProductionFunction::ces(0.35, 1.0).unwrap();
        assert!(matches!(pf.family(), Family::CobbDouglas { alpha } if *alpha == 0.35));
    }

    #[test]
    fn ces_survives_extreme_exponents() {
        let pf = ProductionFunction::ces(0.4, 0.1).unwrap();
        let y = pf.evaluate(1e-30, 1e30, 0.0).unwrap();
        assert!(y.is_finite() && y > 0.0);
        let (fk, fl) = pf.kernel_gradient(1e-30, 1e30);
        assert!(fk.is_finite() && fl.is_finite());
    }

    #[test]
    fn hicks_time_derivative_is_rate_times_output() {
        let pf = ProductionFunction::ces(0.4, 2.0)
            .unwrap()
            .with_bias(TechBias::hicks(0.03).unwrap());
        let (k, l, t) = (3.0, 1.7, 12.0);
        let y = pf.evaluate(k, l, t).unwrap();
        let mp = pf.marginal_products(k, l, t).unwrap();
        assert!(close(mp.f_t, 0.03 * y, 1e-14));
    }

    #[test]
    fn cobb_douglas_shares_are_exponents() {
        let pf = ProductionFunction::cobb_douglas(0.3)
            .unwrap()
            .with_bias(TechBias::solow(0.02).unwrap());
        let s = pf.factor_shares(7.0, 0.2, 40.0).unwrap();
        assert!(close(s.capital, 0.3, 1e-14));
        assert!(close(s.labor, 0.7, 1e-14));
    }

    #[test]
    fn linear_custom_kernel_has_zero_euler_residual() {
        let pf = ProductionFunction::custom(CustomKernel::new("linear", |k, l| k + l));
        assert_eq!(pf.euler_residual(2.0, 3.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn non_homogeneous_kernel_is_detected() {
        let pf = ProductionFunction::custom(CustomKernel::new("deg06", |k: f64, l: f64| {
            k.powf(0.3) * l.powf(0.3)
        }));
        let r = pf.euler_residual(2.0, 5.0, 0.0).unwrap();
        assert!((r + 0.4).abs() < 1e-8, "residual {r}");
        let dev = pf.homogeneity_check(2.0, 5.0, 0.0, &[2.0]).unwrap();
        let expected = (2f64.powf(0.6) / 2.0 - 1.0).abs();
        assert!((dev - expected).abs() < 1e-12);
        assert!((dev - 0.2421).abs() < 1e-4);
    }

    #[test]
    fn exact_homogeneity_for_builtin_families() {
        let lambdas = [0.5, 2.0, 10.0];
        let cd = ProductionFunction::cobb_douglas(0.3).unwrap();
        let ces = ProductionFunction::ces(0.4, 0.5).unwrap();
        assert!(cd.homogeneity_check(1.3, 2.9, 0.0, &lambdas).unwrap() <= 1e-12);
        assert!(ces.homogeneity_check(1.3, 2.9, 0.0, &lambdas).unwrap() <= 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let pf = ProductionFunction::cobb_douglas(0.3).unwrap();
        assert!(matches!(pf.evaluate(0.0, 1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(pf.evaluate(1.0, -1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(
            ProductionFunction::cobb_douglas(1.5),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            ProductionFunction::ces(0.4, 0.0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            ProductionFunction::ces(1.0, 0.5),
            Err(Error::Config(_))
        ));
        assert!(matches!(TechBias::harrod(f64::NAN), Err(Error::Config(_))));
        assert!(pf.homogeneity_check(1.0, 1.0, 0.0, &[]).is_err());
    }

    #[test]
    fn none_bias_ignores_rate() {
        let b = TechBias::new(BiasKind::None, 0.7).unwrap();
        assert_eq!(b.rate(), 0.0);
        assert_eq!(b.factor(100.0), 1.0);
    }

    #[test]
    fn harrod_equivalents() {
        let cd = ProductionFunction::cobb_douglas(0.3).unwrap();
        let hicks = cd.clone().with_bias(TechBias::hicks(0.014).unwrap());
        assert!(close(hicks.harrod_equivalent_rate().unwrap(), 0.02, 1e-14));
        let solow = cd.with_bias(TechBias::solow(0.02).unwrap());
        assert!(close(
            solow.harrod_equivalent_rate().unwrap(),
            0.02 * 0.3 / 0.7,
            1e-14
        ));
        let ces = ProductionFunction::ces(0.4, 0.5).unwrap();
        assert!(ces
            .clone()
            .with_bias(TechBias::hicks(0.02).unwrap())
            .harrod_equivalent_rate()
            .is_none());
        assert_eq!(
            ces.with_bias(TechBias::harrod(0.02).unwrap())
                .harrod_equivalent_rate(),
            Some(0.02)
        );
    }
}
