//! Verdict map over a rational lattice of weight powers, showing the
//! boundedness region carved out by the constraint lines.
//!
//! ```bash
//! cargo run --example parameter_sweep
//! ```

use steinweiss::param::{Instance, Status};
use steinweiss::rational::rat;

fn main() {
    // Fixed orders and exponents; gamma and delta sweep over a 1/8 lattice.
    // The balance identity pins gamma + delta = 7/8, so the bounded region
    // is a segment of that anti-diagonal.
    let alpha = [rat(5, 8), rat(1, 4)];
    let (p, q) = (rat(2, 1), rat(2, 1));

    println!("verdict map for alpha = (5/8, 1/4), p = q = 2");
    println!("rows: gamma = 1 .. 0 (step 1/8); cols: delta = 0 .. 1 (step 1/8)");
    println!("B = bounded, U = unbounded, E = endpoint\n");
    for g8 in (0..=8).rev() {
        let mut row = String::new();
        for d8 in 0..=8 {
            let inst = Instance::new(
                vec![1, 1],
                alpha.to_vec(),
                p.clone(),
                q.clone(),
                rat(g8, 8),
                rat(d8, 8),
            )
            .unwrap();
            row.push(match inst.verdict().status {
                Status::Bounded => 'B',
                Status::Unbounded => 'U',
                Status::Endpoint => 'E',
            });
            row.push(' ');
        }
        println!("gamma = {g8}/8: {row}");
    }
    println!(
        "\nThe bounded segment lives on the balance line gamma + delta = 7/8; \
         the subset-sum equalities cap it with endpoints."
    );

    // Duality: swapping (gamma, delta, p, q) -> (delta, gamma, q', p')
    // preserves the verdict.
    let sample = Instance::new(
        vec![1, 1],
        alpha.to_vec(),
        p,
        q,
        rat(3, 8),
        rat(1, 2),
    )
    .unwrap();
    println!(
        "duality check: {:?} vs dual {:?}",
        sample.verdict().status,
        sample.dual().verdict().status
    );
}
