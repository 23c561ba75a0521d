//! The per-factor dilation identity of the characteristic: squeezing the
//! weights anisotropically equals a dyadic prefactor times the characteristic
//! of the squeezed rectangle. When the balance identity fails, isotropic
//! dilation instead exhibits an exact power drift.
//!
//! ```bash
//! cargo run --example dilation_invariance
//! ```

use steinweiss::characteristic::{dilation_check, rect_characteristic};
use steinweiss::param::Instance;
use steinweiss::quad::{QuadConfig, Rectangle};
use steinweiss::rational::{rat, rat_one};

fn main() {
    let cfg = QuadConfig::default();
    let inst = Instance::new(
        vec![1, 1],
        vec![rat(3, 5), rat(1, 5)],
        rat(2, 1),
        rat(2, 1),
        rat(3, 10),
        rat(1, 2),
    )
    .unwrap();
    let rect =
        Rectangle::with_centers(inst.space(), &[1.0, 2.0], &[vec![0.5], vec![0.0]]).unwrap();

    println!("dyadic dilation identity (balance holds):");
    for t in [[1u32, 0], [0, 2], [3, 1]] {
        let d = dilation_check(&inst, &rect, &t, &rat_one(), &cfg).unwrap();
        println!(
            "  t = {:?}: lhs {:.9}, rhs {:.9}, rel err {:.2e}",
            t, d.lhs, d.rhs, d.rel_err
        );
    }

    // Violate the balance identity by bumping delta; the characteristic of
    // the dilated rectangle drifts like lambda^(-drift).
    let off = Instance::new(
        vec![1, 1],
        vec![rat(3, 5), rat(1, 5)],
        rat(2, 1),
        rat(2, 1),
        rat(3, 10),
        rat(3, 5),
    )
    .unwrap();
    let unit = Rectangle::centered_cubes(off.space(), &[1.0, 1.0]).unwrap();
    let base = rect_characteristic(&off, &unit, &rat_one(), &cfg)
        .unwrap()
        .value;
    println!("isotropic scan with the balance identity violated by 1/10:");
    for k in [-2i32, -1, 1, 2] {
        let lam = 2f64.powi(k);
        let v = rect_characteristic(&off, &unit.scaled(lam), &rat_one(), &cfg)
            .unwrap()
            .value;
        println!(
            "  lambda = {lam:>5}: value/base = {:.6} (drift exponent {:.4})",
            v / base,
            (v / base).log2() / -(k as f64)
        );
    }
}
