use mwbarrier::oracles::{convergence_study, direct_quadrature_price, mc_price};
use mwbarrier::quadrature::DEFAULT_POINTS;
use mwbarrier::{price_double_barrier, BasisSpec, MarketParams, QuadratureRule};

fn corridor(monitors: usize, lower: f64) -> MarketParams {
    MarketParams {
        spot: 100.0,
        strike: 100.0,
        lower,
        upper: 120.0,
        rate: 0.05,
        vol: 0.25,
        maturity: 0.5,
        monitors,
    }
}

fn engine(p: &MarketParams) -> f64 {
    let rule = QuadratureRule::cached(DEFAULT_POINTS).unwrap();
    price_double_barrier(p, BasisSpec::scaling(4, 5).unwrap(), rule)
        .unwrap()
        .price
}

#[test]
fn quadrature_oracle_agrees_with_engine() {
    for &(m, l) in &[(5, 95.0), (25, 80.0), (125, 99.0), (250, 99.9)] {
        let p = corridor(m, l);
        let q = direct_quadrature_price(&p, 2048).unwrap();
        assert!((q - engine(&p)).abs() < 1e-4, "M={m} L={l}");
    }
}

#[test]
fn quadrature_oracle_refines_stably() {
    let p = corridor(25, 95.0);
    let a = direct_quadrature_price(&p, 1024).unwrap();
    let b = direct_quadrature_price(&p, 2048).unwrap();
    assert!((a - b).abs() < 1e-8);
}

#[test]
fn reference_simulation_band_contains_engine_price() {
    let p = MarketParams {
        upper: 110.0,
        ..corridor(5, 95.0)
    };
    let v = engine(&p);
    assert!((v - 0.232508).abs() < 1e-5);
    assert!((v - 0.23263).abs() <= 3.0 * 0.00036);
    let mc = mc_price(&p, 100_000, 77).unwrap();
    assert!(mc.within(v, 3.0), "{} ± {}", mc.estimate, mc.std_error);
}

#[test]
fn convergence_slopes_match_order() {
    let p = corridor(25, 95.0);
    let r4 = convergence_study(&p, 4, 3, 7).unwrap();
    assert!(r4.is_monotone(), "{:?}", r4.errors);
    assert!(
        (-4.7..=-3.3).contains(&r4.fitted_slope),
        "{}",
        r4.fitted_slope
    );
    let r3 = convergence_study(&p, 3, 3, 7).unwrap();
    assert!(r3.is_monotone(), "{:?}", r3.errors);
    assert!(
        (-3.6..=-2.4).contains(&r3.fitted_slope),
        "{}",
        r3.fitted_slope
    );
    assert!(r4.errors.iter().zip(&r3.errors).all(|(a, b)| a < b));
}
