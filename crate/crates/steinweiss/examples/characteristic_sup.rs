//! Supremum search for the Muckenhoupt characteristic over a log-side
//! lattice: finite for a bounded instance, monotone growth into the lattice
//! edge for an unbounded one.
//!
//! ```bash
//! cargo run --example characteristic_sup
//! ```

use steinweiss::characteristic::{sup_search, SearchLattice};
use steinweiss::param::Instance;
use steinweiss::quad::QuadConfig;
use steinweiss::rational::{rat, rat_one};

fn main() {
    let cfg = QuadConfig::default();
    let lattice = SearchLattice {
        log2_side_min: -10,
        log2_side_max: 10,
        center_offsets: vec![1.0, 4.0, 16.0],
    };

    let bounded = Instance::new(
        vec![1, 1],
        vec![rat(3, 5), rat(1, 5)],
        rat(2, 1),
        rat(2, 1),
        rat(3, 10),
        rat(1, 2),
    )
    .unwrap();
    let s = sup_search(&bounded, &rat_one(), &lattice, &cfg).unwrap();
    println!("bounded instance:");
    println!("  lattice points {}", s.trace.len());
    println!("  sup estimate   {:.6}", s.sup);
    println!(
        "  quotiented     {} (balance identity holds, one scale removed)",
        s.quotiented
    );
    println!("  edge growth    {}", s.unbounded_suspected);

    let unbounded = Instance::new(
        vec![1, 1],
        vec![rat(3, 5), rat(1, 5)],
        rat(2, 1),
        rat(2, 1),
        rat(4, 5),
        rat(0, 1),
    )
    .unwrap();
    let s = sup_search(&unbounded, &rat_one(), &lattice, &cfg).unwrap();
    println!("unbounded instance:");
    println!("  sup estimate   {:.6} (lattice maximum, not a bound)", s.sup);
    println!(
        "  edge growth    {} toward {}",
        s.unbounded_suspected,
        s.growth_direction.unwrap_or_default()
    );
}
