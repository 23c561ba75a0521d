//! Bump selection and the eccentricity decay fit: for bounded instances with
//! strict subbalance the bumped characteristic decays exponentially as the
//! rectangle gets eccentric.
//!
//! ```bash
//! cargo run --example eccentricity_decay
//! ```

use steinweiss::characteristic::{choose_r, eccentricity_decay_fit, SearchLattice};
use steinweiss::param::Instance;
use steinweiss::quad::QuadConfig;
use steinweiss::rational::{rat, rat_one, rational_to_string, to_f64};

fn main() {
    let cfg = QuadConfig::default();
    let lattice = SearchLattice::default();

    let inst = Instance::new(
        vec![1, 1],
        vec![rat(11, 20), rat(1, 5)],
        rat(2, 1),
        rat(2, 1),
        rat(3, 10),
        rat(9, 20),
    )
    .unwrap();
    let r = choose_r(&inst).unwrap();
    println!("bump parameter r = {}", rational_to_string(&r));
    let fit = eccentricity_decay_fit(&inst, 0, &r, 10, &lattice, &cfg).unwrap();
    println!("weighted instance ladder (pivot 0):");
    for rung in &fit.rungs {
        println!("  t = {:?}: A(t) = {:.6}", rung.t, rung.value);
    }
    println!(
        "  fitted decay exponent {:.4} +/- {:.4}",
        fit.eps_hat, fit.stderr
    );

    // Zero weights: the profile is the exact geometry power law, and the fit
    // recovers the smaller factor excess.
    let plain = Instance::new(
        vec![1, 1],
        vec![rat(7, 10), rat(3, 5)],
        rat(4, 3),
        rat(4, 1),
        rat(0, 1),
        rat(0, 1),
    )
    .unwrap();
    let fit = eccentricity_decay_fit(&plain, 0, &rat_one(), 10, &lattice, &cfg).unwrap();
    println!(
        "zero-weight instance: fitted {:.6} vs closed form {:.6}",
        fit.eps_hat,
        to_f64(&plain.factor_excess(1))
    );
}
