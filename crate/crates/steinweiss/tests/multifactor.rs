//! Three-factor and higher-dimensional-factor coverage: the decision
//! procedure, quadrature, characteristic, operator, and witness machinery
//! all accept general products, not just pairs of lines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use steinweiss::characteristic::{rect_characteristic, sup_search, SearchLattice};
use steinweiss::operator::{apply_direct, apply_separable, cone_cover_check, Grid, GridFunction};
use steinweiss::param::{ConstraintId, Instance, Status};
use steinweiss::quad::{integrate_power_over_rect, mc_integrate_power, QuadConfig, Rectangle};
use steinweiss::rational::{rat, rat_one, to_f64};
use steinweiss::witness::{build_family, run_blowup, BlowupVerdict, WitnessCase};

fn three_factor_bounded() -> Instance {
    Instance::new(
        vec![1, 1, 1],
        vec![rat(2, 5), rat(3, 10), rat(3, 10)],
        rat(2, 1),
        rat(2, 1),
        rat(1, 2),
        rat(1, 2),
    )
    .unwrap()
}

#[test]
fn three_factor_sup_search_stays_flat() {
    let inst = three_factor_bounded();
    assert_eq!(inst.verdict().status, Status::Bounded);
    let lattice = SearchLattice {
        log2_side_min: -5,
        log2_side_max: 5,
        center_offsets: vec![1.0],
    };
    let s = sup_search(&inst, &rat_one(), &lattice, &QuadConfig::default()).unwrap();
    assert!(s.quotiented);
    assert!(s.sup.is_finite() && s.sup > 0.0);
    assert!(!s.unbounded_suspected, "direction {:?}", s.growth_direction);
}

#[test]
fn three_factor_witness_matches_prediction() {
    let inst = Instance::new(
        vec![1, 1, 1],
        vec![rat(11, 20), rat(1, 10), rat(1, 10)],
        rat(2, 1),
        rat(2, 1),
        rat(29, 20),
        rat(-7, 10),
    )
    .unwrap();
    let verdict = inst.verdict();
    assert_eq!(verdict.status, Status::Unbounded);
    assert!(verdict.violations.contains(&ConstraintId::DeltaDominates(0)));
    let family = build_family(&inst, WitnessCase::CaseOne(0), 24).unwrap();
    assert_eq!(family.predicted_exponent, rat(3, 4));
    // Both non-pivot factors shrink together on each rung.
    assert_eq!(family.rungs[2].side(0), 1.0);
    assert_eq!(family.rungs[2].side(1), 0.25);
    assert_eq!(family.rungs[2].side(2), 0.25);
    let report = run_blowup(&inst, &family, &rat_one(), &QuadConfig::default());
    assert_eq!(report.verdict, BlowupVerdict::BlowUp);
    let fitted = report.c_hat.unwrap();
    assert!(
        ((fitted - 0.75) / 0.75).abs() < 0.05,
        "fitted {fitted} vs predicted 0.75"
    );
}

#[test]
fn three_factor_separable_matches_direct() {
    let inst = three_factor_bounded();
    let grid = Grid::offset(inst.space(), 8, 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f = GridFunction::new(
        grid.clone(),
        (0..grid.total_points()).map(|_| rng.gen::<f64>()).collect(),
    )
    .unwrap();
    let a = apply_direct(&f, &inst).unwrap();
    let b = apply_separable(&f, &inst).unwrap();
    let dev = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs() / x.max(f64::MIN_POSITIVE))
        .fold(0.0f64, f64::max);
    assert!(dev <= 1e-10, "deviation {dev}");
    let cover = cone_cover_check(&grid).unwrap();
    assert!(cover.min_cover >= 1);
    assert!(cover.max_cover <= 3);
}

fn planar_factor_instance() -> Instance {
    // One line factor, one plane factor: total dimension 3.
    Instance::new(
        vec![1, 2],
        vec![rat(2, 5), rat(4, 5)],
        rat(2, 1),
        rat(2, 1),
        rat(3, 5),
        rat(3, 5),
    )
    .unwrap()
}

#[test]
fn planar_factor_quadrature_agrees_with_monte_carlo() {
    let inst = planar_factor_instance();
    assert_eq!(inst.verdict().status, Status::Bounded);
    let rect = Rectangle::centered_cubes(inst.space(), &[1.0, 0.5]).unwrap();
    assert_eq!(rect.total_dim(), 3);
    assert_eq!(rect.factor_volume(1), 0.25);
    let cfg = QuadConfig::default();
    let det = integrate_power_over_rect(&rect, -1.7, &cfg).unwrap();
    let mc = mc_integrate_power(&rect, -1.7, 400_000, 1).unwrap();
    assert!(
        (det.value - mc.estimate).abs() <= 3.0 * mc.stderr + det.error_estimate,
        "det {} vs mc {} +/- {}",
        det.value,
        mc.estimate,
        mc.stderr
    );
}

#[test]
fn planar_factor_characteristic_factorizes() {
    let inst = planar_factor_instance();
    let rect = Rectangle::centered_cubes(inst.space(), &[1.0, 0.5]).unwrap();
    let rep = rect_characteristic(&inst, &rect, &rat_one(), &QuadConfig::default()).unwrap();
    assert_eq!(rep.value, rep.geometry * rep.w_omega * rep.w_sigma);
    // gamma = delta and p = q make the two averages identical.
    assert!((rep.w_omega - rep.w_sigma).abs() <= 1e-9 * rep.w_omega);
    // geometry = side_0^{e_0} * side_1^{e_1} with e_i = alpha_i - N_i(1/p-1/q)
    let expect = 1.0f64.powf(to_f64(&inst.factor_excess(0)))
        * 0.5f64.powf(to_f64(&inst.factor_excess(1)));
    assert!((rep.geometry - expect).abs() < 1e-12);
}

#[test]
fn planar_factor_operator_routes_agree() {
    let inst = planar_factor_instance();
    let grid = Grid::offset(inst.space(), 6, 1.5).unwrap();
    assert_eq!(grid.total_points(), 216);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let f = GridFunction::new(
        grid.clone(),
        (0..grid.total_points()).map(|_| rng.gen::<f64>()).collect(),
    )
    .unwrap();
    let a = apply_direct(&f, &inst).unwrap();
    let b = apply_separable(&f, &inst).unwrap();
    let dev = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs() / x.max(f64::MIN_POSITIVE))
        .fold(0.0f64, f64::max);
    assert!(dev <= 1e-10, "deviation {dev}");
}
