//! Discretized strong fractional integral: separable vs direct application,
//! self-adjointness, cone cover counts, and the weighted norm ratio.
//!
//! ```bash
//! cargo run --example operator_identities
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use steinweiss::operator::{
    apply_cone_partial, apply_direct, apply_separable, cone_cover_check, product_bump,
    weighted_ratio, Grid, GridFunction,
};
use steinweiss::param::Instance;
use steinweiss::rational::rat;

fn main() {
    let inst = Instance::new(
        vec![1, 1],
        vec![rat(3, 5), rat(1, 5)],
        rat(2, 1),
        rat(2, 1),
        rat(3, 10),
        rat(1, 2),
    )
    .unwrap();
    let grid = Grid::offset(inst.space(), 32, 4.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let f = GridFunction::new(
        grid.clone(),
        (0..grid.total_points()).map(|_| rng.gen::<f64>()).collect(),
    )
    .unwrap();

    let direct = apply_direct(&f, &inst).unwrap();
    let separable = apply_separable(&f, &inst).unwrap();
    let max_rel = direct
        .values()
        .iter()
        .zip(separable.values())
        .map(|(a, b)| (a - b).abs() / a.abs().max(f64::MIN_POSITIVE))
        .fold(0.0f64, f64::max);
    println!("separable vs direct max relative deviation: {max_rel:.2e}");

    let g = product_bump(&grid, 1.5).unwrap();
    let ig = apply_separable(&g, &inst).unwrap();
    let cell = grid.cell_volume();
    let a: f64 = g
        .values()
        .iter()
        .zip(direct.values())
        .map(|(x, y)| x * y)
        .sum::<f64>()
        * cell;
    let b: f64 = f
        .values()
        .iter()
        .zip(ig.values())
        .map(|(x, y)| x * y)
        .sum::<f64>()
        * cell;
    println!(
        "self-adjointness <g, If> vs <f, Ig>: rel deviation {:.2e}",
        (a - b).abs() / a
    );

    let cover = cone_cover_check(&grid).unwrap();
    println!(
        "cone cover over all ordered pairs: min {} max {}",
        cover.min_cover, cover.max_cover
    );

    // Per-cone partial sums dominate the direct sum pointwise.
    let mut partial_sum = vec![0.0; grid.total_points()];
    for nu in 0..2 {
        for k in 0..=7u32 {
            let mut t = vec![k; 2];
            t[nu] = 0;
            let part = apply_cone_partial(&f, &inst, nu, &t).unwrap();
            for (acc, v) in partial_sum.iter_mut().zip(part.values()) {
                *acc += v;
            }
        }
    }
    let dominated = partial_sum
        .iter()
        .zip(direct.values())
        .all(|(s, d)| *s >= d - 1e-10 * d.abs());
    println!("cone partial sums dominate the direct sum: {dominated}");

    let ratio = weighted_ratio(&g, &inst).unwrap();
    println!(
        "weighted norm ratio ||omega If||_q / ||f sigma||_p = {:.6}",
        ratio.ratio
    );
}
