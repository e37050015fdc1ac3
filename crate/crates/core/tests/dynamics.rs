use growthlab_core::dynamics::{
    effective_steady_state, effective_units, growth_accounting_residual, simulate, ModelParams,
};
use growthlab_core::production::{CustomKernel, ProductionFunction, TechBias};
use proptest::prelude::*;

/// Cobb-Douglas Solow model in closed form: z = k^(1-a) obeys
/// z' = (1-a)(s - m z) with m = n + g + delta.
fn cd_exact_capital(alpha: f64, g: f64, mp: &ModelParams, t: f64) -> f64 {
    let m = mp.population_growth + g + mp.depreciation;
    let z_star = mp.saving_rate / m;
    let k0 = mp.capital0 / mp.labor0;
    let z0 = k0.powf(1.0 - alpha);
    let z = z_star + (z0 - z_star) * (-(1.0 - alpha) * m * t).exp();
    let l = mp.labor0 * (mp.population_growth * t).exp();
    z.powf(1.0 / (1.0 - alpha)) * (g * t).exp() * l
}

fn cd_harrod() -> ProductionFunction {
    ProductionFunction::cobb_douglas(1.0 / 3.0)
        .unwrap()
        .with_bias(TechBias::harrod(0.02).unwrap())
}

#[test]
fn matches_closed_form() {
    let pf = cd_harrod();
    let mp = ModelParams::default();
    let traj = simulate(&pf, &mp, 100.0, 0.05).unwrap();
    for i in (0..traj.len()).step_by(97) {
        let t = traj.times()[i];
        let exact = cd_exact_capital(1.0 / 3.0, 0.02, &mp, t);
        assert!((traj.capital()[i] / exact - 1.0).abs() < 1e-10, "t = {t}");
    }
}

#[test]
fn fourth_order_convergence() {
    let pf = cd_harrod();
    let mp = ModelParams::default();
    let exact = cd_exact_capital(1.0 / 3.0, 0.02, &mp, 40.0);
    let err = |dt: f64| {
        let traj = simulate(&pf, &mp, 40.0, dt).unwrap();
        (traj.capital().last().unwrap() - exact).abs()
    };
    let (e1, e2, e3) = (err(4.0), err(2.0), err(1.0));
    let order_a = (e1 / e2).log2();
    let order_b = (e2 / e3).log2();
    assert!(
        order_a >= 3.5 && order_b >= 3.5,
        "orders {order_a} {order_b}"
    );
}

#[test]
fn labor_is_exact_exponential() {
    let pf = cd_harrod();
    let mp = ModelParams::default().with_initial(2.0, 3.0);
    let traj = simulate(&pf, &mp, 200.0, 0.05).unwrap();
    for (t, l) in traj.times().iter().zip(traj.labor()) {
        let exact = 3.0 * (0.01 * t).exp();
        assert!((l / exact - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn effective_capital_converges() {
    let pf = cd_harrod();
    let mp = ModelParams::default();
    let traj = simulate(&pf, &mp, 600.0, 0.05).unwrap();
    let i = traj.len() - 1;
    let p = traj.point(i);
    let k = effective_units(&pf, p.capital, p.labor, p.t).unwrap();

    // independent Newton solve of s k^a = m k
    let (s, m, a) = (0.2_f64, 0.08_f64, 1.0_f64 / 3.0);
    let mut x = 1.0_f64;
    for _ in 0..50 {
        let f = s * x.powf(a) - m * x;
        let df = s * a * x.powf(a - 1.0) - m;
        x -= f / df;
    }
    assert!((x - 3.9528).abs() < 1e-4);
    assert!((k / x - 1.0).abs() < 1e-8);
    assert!((effective_steady_state(&pf, &mp).unwrap() / x - 1.0).abs() < 1e-10);
}

#[test]
fn steady_state_for_ces() {
    // sigma = 0.5: F(k,1) = 1/(0.4/k + 0.6); s F/k = m gives k = (s - 0.4 m)/(0.6 m)
    let pf = ProductionFunction::ces(0.4, 0.5).unwrap();
    let mp = ModelParams::default();
    let m = 0.06;
    let expected = (0.2 - 0.4 * m) / (0.6 * m);
    let k = effective_steady_state(&pf, &mp).unwrap();
    assert!((k / expected - 1.0).abs() < 1e-10);
}

#[test]
fn growth_accounting_holds_for_every_technology() {
    let mp = ModelParams::default().with_initial(3.0, 0.5);
    let families = [
        ProductionFunction::cobb_douglas(0.3).unwrap(),
        ProductionFunction::ces(0.4, 0.5).unwrap(),
        ProductionFunction::ces(0.4, 2.0).unwrap(),
    ];
    for base in families {
        for bias in [
            TechBias::none(),
            TechBias::harrod(0.02).unwrap(),
            TechBias::hicks(0.02).unwrap(),
            TechBias::solow(0.02).unwrap(),
        ] {
            let pf = base.clone().with_bias(bias);
            let traj = simulate(&pf, &mp, 150.0, 0.05).unwrap();
            let worst = traj
                .eq1_residual()
                .iter()
                .fold(0.0_f64, |m, r| m.max(r.abs()));
            assert!(worst <= 1e-9, "{} {:?}: {worst}", pf.family().label(), bias);
        }
    }
}

#[test]
fn growth_accounting_with_numerical_partials() {
    let kernel = CustomKernel::new("hand_ces", |k: f64, l: f64| 1.0 / (0.4 / k + 0.6 / l));
    let pf = ProductionFunction::custom(kernel).with_bias(TechBias::hicks(0.015).unwrap());
    let mp = ModelParams::default();
    let traj = simulate(&pf, &mp, 100.0, 0.1).unwrap();
    let worst = traj
        .eq1_residual()
        .iter()
        .fold(0.0_f64, |m, r| m.max(r.abs()));
    assert!(worst <= 1e-5, "{worst}");
}

#[test]
fn residual_off_the_grid() {
    let pf = ProductionFunction::ces(0.3, 1.7)
        .unwrap()
        .with_bias(TechBias::solow(0.03).unwrap());
    let mp = ModelParams::default();
    for &(t, k, l) in &[(0.0, 0.1, 10.0), (25.0, 40.0, 0.3), (80.0, 5.0, 5.0)] {
        let p = growthlab_core::StatePoint {
            t,
            capital: k,
            labor: l,
        };
        assert!(growth_accounting_residual(&pf, &mp, &p).unwrap().abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn state_stays_positive(
        alpha in 0.1..0.9f64,
        s in 0.05..0.5f64,
        delta in 0.0..0.1f64,
        n in -0.01..0.03f64,
        k0 in 0.1..20.0f64,
        l0 in 0.1..20.0f64,
    ) {
        prop_assume!(n + delta > 0.005);
        let pf = ProductionFunction::cobb_douglas(alpha).unwrap();
        let mp = ModelParams::new(s, delta, n, k0, l0).unwrap();
        let traj = simulate(&pf, &mp, 100.0, 0.1).unwrap();
        prop_assert!(traj.capital().iter().all(|&k| k > 0.0));
        prop_assert!(traj.output().iter().all(|&y| y > 0.0 && y.is_finite()));
        let shares_ok = traj.share_k().iter().zip(traj.share_l())
            .all(|(a, b)| (a + b - 1.0).abs() < 1e-9);
        prop_assert!(shares_ok);
    }
}
