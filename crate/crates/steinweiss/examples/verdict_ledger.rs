//! Decide boundedness for a few instances and print the constraint ledger.
//!
//! ```bash
//! cargo run --example verdict_ledger
//! ```

use steinweiss::param::Instance;
use steinweiss::rational::{rat, rational_to_string};

fn show(label: &str, inst: &Instance) {
    let verdict = inst.verdict();
    println!("{label}");
    println!("  status     {:?} ({:?})", verdict.status, verdict.case);
    if !verdict.violations.is_empty() {
        let v: Vec<String> = verdict.violations.iter().map(|c| c.to_string()).collect();
        println!("  violations {}", v.join(", "));
    }
    if !verdict.binding.is_empty() {
        let b: Vec<String> = verdict.binding.iter().map(|c| c.to_string()).collect();
        println!("  binding    {}", b.join(", "));
    }
    let f = inst.check_formula();
    println!(
        "  balance residual {}  (alpha/N - (1/p - 1/q) - (gamma+delta)/N)",
        rational_to_string(&f.residual)
    );
    let (u, v) = inst.subsets_uv();
    println!("  subsets    U = {u:?}, V = {v:?}");
    println!();
}

fn main() {
    // A strictly interior two-weight instance: every constraint has margin.
    let bounded = Instance::new(
        vec![1, 1],
        vec![rat(3, 5), rat(1, 5)],
        rat(2, 1),
        rat(2, 1),
        rat(3, 10),
        rat(1, 2),
    )
    .unwrap();
    show("bounded (both weights positive)", &bounded);

    // Pushing gamma past its per-factor threshold breaks a dominance
    // constraint; the verdict lists exactly which factor fails.
    let unbounded = Instance::new(
        vec![1, 1],
        vec![rat(3, 5), rat(1, 5)],
        rat(2, 1),
        rat(2, 1),
        rat(4, 5),
        rat(0, 1),
    )
    .unwrap();
    show("unbounded (dominance violated)", &unbounded);

    // A subset-sum equality: reported as an endpoint, not silently bounded.
    let endpoint = Instance::new(
        vec![1, 1],
        vec![rat(7, 10), rat(1, 5)],
        rat(2, 1),
        rat(2, 1),
        rat(7, 10),
        rat(1, 5),
    )
    .unwrap();
    show("endpoint (subset sum binds)", &endpoint);

    // Shifting both reciprocal exponents splits the binding equality.
    let perturbed = endpoint.perturb_endpoints(&rat(1, 100)).unwrap();
    println!(
        "endpoint neighbors at eps = 1/100: minus -> {:?}, plus -> {:?}",
        perturbed.minus_verdict.status, perturbed.plus_verdict.status
    );
}
