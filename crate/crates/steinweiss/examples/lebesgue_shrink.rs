//! Shrinking the balanced directions of a rectangle drives the characteristic
//! to the subspace characteristic of the kept factors.
//!
//! ```bash
//! cargo run --example lebesgue_shrink
//! ```

use steinweiss::param::Instance;
use steinweiss::quad::QuadConfig;
use steinweiss::rational::rat;
use steinweiss::witness::lebesgue_shrink_probe;

fn main() {
    let cfg = QuadConfig::default();
    // Both factors balanced (alpha_i/N_i = 1/p - 1/q) with mild one-weight
    // powers; shrinking factor 1 must reproduce the single-factor value.
    let inst = Instance::new(
        vec![1, 1],
        vec![rat(1, 2), rat(1, 2)],
        rat(4, 3),
        rat(4, 1),
        rat(1, 20),
        rat(-1, 20),
    )
    .unwrap();
    let probe = lebesgue_shrink_probe(&inst, &[0], 12, 1e-2, &cfg).unwrap();
    println!("shrinking factor 1, keeping factor 0 at unit side:");
    for (k, v) in probe.rungs.iter().enumerate() {
        println!("  side 2^-{k:<2}: characteristic {v:.8}");
    }
    println!("subspace characteristic (factor 0 alone): {:.8}", probe.subspace_char);
    println!("converged: {}", probe.converged);

    // A strictly sub-balanced direction is rejected: there the shrink family
    // is a blow-up witness instead, not a differentiation limit.
    let strict = Instance::new(
        vec![1, 1],
        vec![rat(3, 5), rat(1, 5)],
        rat(2, 1),
        rat(2, 1),
        rat(3, 10),
        rat(1, 2),
    )
    .unwrap();
    match lebesgue_shrink_probe(&strict, &[0], 8, 1e-2, &cfg) {
        Err(e) => println!("strictly unbalanced shrink direction rejected: {e}"),
        Ok(_) => unreachable!(),
    }
}
