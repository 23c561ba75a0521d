//! Deterministic quadrature of |x|^e over rectangles, cross-checked against
//! analytic values and the stratified Monte Carlo estimator.
//!
//! ```bash
//! cargo run --example quadrature_oracles
//! ```

use steinweiss::quad::{integrate_power_over_rect, mc_integrate_power, QuadConfig, Rectangle};
use steinweiss::ProductSpace;

fn main() {
    let cfg = QuadConfig::default();
    let line = ProductSpace::new(vec![1]).unwrap();
    let plane = ProductSpace::new(vec![1, 1]).unwrap();

    let unit1 = Rectangle::with_centers(&line, &[1.0], &[vec![0.5]]).unwrap();
    let v = integrate_power_over_rect(&unit1, -0.5, &cfg).unwrap();
    println!(
        "int_0^1 x^(-1/2) dx        = {:.12}  (exact 2, err est {:.1e})",
        v.value, v.error_estimate
    );

    let unit2 = Rectangle::with_centers(&plane, &[1.0, 1.0], &[vec![0.5], vec![0.5]]).unwrap();
    let v = integrate_power_over_rect(&unit2, -1.0, &cfg).unwrap();
    let exact = 2.0 * (1.0 + 2f64.sqrt()).ln();
    println!(
        "int_[0,1]^2 |x|^(-1) dx    = {:.12}  (exact {:.12})",
        v.value, exact
    );

    // Homogeneity: scaling the rectangle by lambda scales the integral by
    // lambda^(N+e) exactly.
    let e = -1.3;
    let base = integrate_power_over_rect(&unit2, e, &cfg).unwrap().value;
    for lam in [0.5f64, 2.0, 8.0] {
        let scaled = integrate_power_over_rect(&unit2.scaled(lam), e, &cfg)
            .unwrap()
            .value;
        println!(
            "lambda = {lam}: scaled/base = {:.9} vs lambda^(N+e) = {:.9}",
            scaled / base,
            lam.powf(2.0 + e)
        );
    }

    // Monte Carlo cross-check near the integrability edge.
    let e = -1.9;
    let det = integrate_power_over_rect(&unit2, e, &cfg).unwrap();
    let mc = mc_integrate_power(&unit2, e, 500_000, 0).unwrap();
    println!(
        "e = {e}: deterministic {:.6}, Monte Carlo {:.6} +/- {:.1e} ({}x stderr apart)",
        det.value,
        mc.estimate,
        mc.stderr,
        ((det.value - mc.estimate).abs() / mc.stderr).round()
    );
}
