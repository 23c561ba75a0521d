//! Blow-up witnesses: build the rectangle family keyed to each violated
//! constraint and compare the measured growth exponent to the exact
//! prediction.
//!
//! ```bash
//! cargo run --example witness_blowup
//! ```

use steinweiss::param::Instance;
use steinweiss::quad::QuadConfig;
use steinweiss::rational::{rat, rat_one, rational_to_string, to_f64};
use steinweiss::witness::{families_for_verdict, run_blowup};

fn hunt(label: &str, inst: &Instance, k_max: u32) {
    let cfg = QuadConfig::default();
    println!("{label}: verdict {:?}", inst.verdict().status);
    for (violation, family) in families_for_verdict(inst, k_max) {
        match family {
            Ok(family) => {
                let report = run_blowup(inst, &family, &rat_one(), &cfg);
                println!(
                    "  {} -> {:?}: predicted {} ({:.4}), fitted {:.4}, growth x{:.0}, {:?}",
                    violation,
                    family.case,
                    rational_to_string(&family.predicted_exponent),
                    to_f64(&family.predicted_exponent),
                    report.c_hat.unwrap_or(f64::NAN),
                    report.growth_ratio.unwrap_or(f64::NAN),
                    report.verdict,
                );
            }
            Err(e) => println!("  {violation}: {e}"),
        }
    }
}

fn main() {
    // Dominance violated at factor 0 (the small-exponent case needs a deep
    // ladder before the tenfold growth rule triggers).
    let case_one = Instance::new(
        vec![1, 1],
        vec![rat(3, 5), rat(1, 5)],
        rat(2, 1),
        rat(2, 1),
        rat(4, 5),
        rat(0, 1),
    )
    .unwrap();
    hunt("dominance violation, exponent 1/10", &case_one, 48);

    // Balance identity violated: the isotropic family drifts at rate 2/5.
    let formula = Instance::new(
        vec![1, 1],
        vec![rat(3, 5), rat(1, 5)],
        rat(2, 1),
        rat(2, 1),
        rat(3, 10),
        rat(9, 10),
    )
    .unwrap();
    hunt("balance violation, exponent 2/5", &formula, 32);

    // Subbalance violated at factor 1: shrink that factor off-origin.
    let subbalance = Instance::new(
        vec![1, 1],
        vec![rat(3, 5), rat(2, 5)],
        rat(4, 3),
        rat(4, 1),
        rat(1, 10),
        rat(-1, 10),
    )
    .unwrap();
    hunt("subbalance violation, exponent 1/10", &subbalance, 48);
}
