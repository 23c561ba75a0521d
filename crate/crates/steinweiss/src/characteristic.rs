//! Multi-parameter Muckenhoupt characteristic of power weights.
//!
//! A rectangle's characteristic is the product of a geometry factor
//! `prod_i side_i^{alpha_i - N_i (1/p - 1/q)}` with the two weight averages
//! from [`crate::quad::weight_averages`]. The supremum over all rectangles is
//! approximated on a log-side lattice with a small set of centers; when the
//! exponent balance identity holds, one scale dimension is quotiented out
//! because the characteristic is invariant under simultaneous dilation of
//! sides and centers.

use num::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::param::{dimension_subset_sums, decay_range_interior, ConstraintId, Instance, Status};
use crate::quad::{integrate_scaled_power, weight_averages, QuadConfig, QuadError, Rectangle};
use crate::rational::{rat, rat_int, rat_one, rat_pow2, rational_to_string, to_f64, Rational};
use crate::util::{fit_line, LineFit};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CharError {
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("no bump r > 1 on the ladder keeps every decay inequality strict")]
    RNotFound,
    #[error("decay fit needs at least 3 finite rungs, got {0}")]
    FitFailed(usize),
    #[error("pivot {pivot} out of range for {n} factors")]
    BadPivot { pivot: usize, n: usize },
}

/// Itemized characteristic of one rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharReport {
    pub rect: Rectangle,
    #[serde(with = "crate::rational::serde_rational")]
    pub r: Rational,
    pub value: f64,
    pub geometry: f64,
    pub w_omega: f64,
    pub w_sigma: f64,
    pub err_omega: f64,
    pub err_sigma: f64,
}

/// Geometry factor `prod_i side_i^{alpha_i - N_i(1/p-1/q)}`.
pub fn geometry_factor(inst: &Instance, rect: &Rectangle) -> f64 {
    (0..inst.space().factors())
        .map(|i| rect.side(i).powf(to_f64(&inst.factor_excess(i))))
        .product()
}

pub fn rect_characteristic(
    inst: &Instance,
    rect: &Rectangle,
    r: &Rational,
    cfg: &QuadConfig,
) -> Result<CharReport, CharError> {
    let averages = weight_averages(rect, inst, r, cfg)?;
    let geometry = geometry_factor(inst, rect);
    Ok(CharReport {
        rect: rect.clone(),
        r: r.clone(),
        value: geometry * averages.w_omega * averages.w_sigma,
        geometry,
        w_omega: averages.w_omega,
        w_sigma: averages.w_sigma,
        err_omega: averages.err_omega,
        err_sigma: averages.err_sigma,
    })
}

// ---------------------------------------------------------------------------
// Supremum search
// ---------------------------------------------------------------------------

/// Log-side lattice and center set for the supremum search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchLattice {
    pub log2_side_min: i32,
    pub log2_side_max: i32,
    /// Offsets placed on the first coordinate of one factor at a time;
    /// the origin-centered rectangle is always included.
    pub center_offsets: Vec<f64>,
}

impl Default for SearchLattice {
    fn default() -> Self {
        SearchLattice {
            log2_side_min: -12,
            log2_side_max: 12,
            center_offsets: vec![1.0, 4.0, 16.0],
        }
    }
}

/// Center placement: origin, or an offset along one factor's first axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenterSpec {
    pub factor: Option<usize>,
    pub offset: f64,
}

impl CenterSpec {
    pub const ORIGIN: CenterSpec = CenterSpec {
        factor: None,
        offset: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupSample {
    pub log_sides: Vec<i32>,
    pub center: CenterSpec,
    pub value: f64,
    pub geometry: f64,
    pub w_omega: f64,
    pub w_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupSearch {
    pub sup: f64,
    pub argmax: Rectangle,
    /// True when the balance identity held and the overall scale was fixed.
    pub quotiented: bool,
    pub trace: Vec<SupSample>,
    /// Set when values grow monotonically into a lattice edge.
    pub unbounded_suspected: bool,
    pub growth_direction: Option<String>,
}

fn lattice_side_tuples(n: usize, lattice: &SearchLattice, quotient: bool) -> Vec<Vec<i32>> {
    let (lo, hi) = if quotient {
        (lattice.log2_side_min, 0)
    } else {
        (lattice.log2_side_min, lattice.log2_side_max)
    };
    let span = (hi - lo + 1) as usize;
    let mut tuples = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let tuple: Vec<i32> = idx.iter().map(|&k| lo + k as i32).collect();
        if !quotient || tuple.contains(&0) {
            tuples.push(tuple);
        }
        let mut t = 0;
        loop {
            idx[t] += 1;
            if idx[t] < span {
                break;
            }
            idx[t] = 0;
            t += 1;
            if t == n {
                return tuples;
            }
        }
    }
}

fn center_set(n: usize, offsets: &[f64]) -> Vec<CenterSpec> {
    let mut centers = vec![CenterSpec::ORIGIN];
    for f in 0..n {
        for &z in offsets {
            centers.push(CenterSpec {
                factor: Some(f),
                offset: z,
            });
        }
    }
    centers
}

fn build_rect(
    inst: &Instance,
    log_sides: &[i32],
    center: CenterSpec,
) -> Result<Rectangle, QuadError> {
    let space = inst.space();
    let sides: Vec<f64> = log_sides.iter().map(|&l| 2f64.powi(l)).collect();
    let mut centers: Vec<Vec<f64>> = (0..space.factors())
        .map(|i| vec![0.0; space.dim(i) as usize])
        .collect();
    if let Some(f) = center.factor {
        centers[f][0] = center.offset;
    }
    Rectangle::with_centers(space, &sides, &centers)
}

fn check_bump_integrability(inst: &Instance, r: &Rational) -> Result<(), CharError> {
    let n = rat_int(inst.space().total_dim() as i64);
    let gq = inst.gamma() * inst.q() * r;
    if gq >= n {
        return Err(CharError::Precondition(format!(
            "omega average diverges: gamma*q*r = {} >= N",
            rational_to_string(&gq),
        )));
    }
    let dp = inst.delta() * inst.p() * r / (inst.p() - rat_one());
    if dp >= n {
        return Err(CharError::Precondition(format!(
            "sigma average diverges: delta*p*r/(p-1) = {} >= N",
            rational_to_string(&dp),
        )));
    }
    Ok(())
}

/// Maximizes the characteristic over the lattice and inspects the edges for
/// monotone growth.
pub fn sup_search(
    inst: &Instance,
    r: &Rational,
    lattice: &SearchLattice,
    cfg: &QuadConfig,
) -> Result<SupSearch, CharError> {
    check_bump_integrability(inst, r)?;
    let n = inst.space().factors();
    let quotient = inst.check_formula().holds;
    let tuples = lattice_side_tuples(n, lattice, quotient);
    let centers = center_set(n, &lattice.center_offsets);

    let jobs: Vec<(Vec<i32>, CenterSpec)> = tuples
        .iter()
        .flat_map(|t| centers.iter().map(move |c| (t.clone(), *c)))
        .collect();
    let values: Vec<Result<CharReport, CharError>> = jobs
        .par_iter()
        .map(|(t, c)| {
            let rect = build_rect(inst, t, *c)?;
            rect_characteristic(inst, &rect, r, cfg)
        })
        .collect();

    let mut trace = Vec::with_capacity(jobs.len());
    for ((t, c), v) in jobs.iter().zip(values) {
        let rep = v?;
        trace.push(SupSample {
            log_sides: t.clone(),
            center: *c,
            value: rep.value,
            geometry: rep.geometry,
            w_omega: rep.w_omega,
            w_sigma: rep.w_sigma,
        });
    }

    let best = trace
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.value.partial_cmp(&b.1.value).unwrap())
        .map(|(i, _)| i)
        .expect("lattice nonempty");
    let argmax = build_rect(inst, &trace[best].log_sides, trace[best].center)?;
    let sup = trace[best].value;

    let (unbounded_suspected, growth_direction) =
        detect_edge_growth(&trace, sup, lattice, quotient);

    Ok(SupSearch {
        sup,
        argmax,
        quotiented: quotient,
        trace,
        unbounded_suspected,
        growth_direction,
    })
}

/// Re-runs the edge-growth detection on an externally modified trace.
/// Used by the verify command's corruption hook.
pub fn sup_search_growth_for_tests(
    trace: &[SupSample],
    sup: f64,
    lattice: &SearchLattice,
    quotient: bool,
) -> (bool, Option<String>) {
    detect_edge_growth(trace, sup, lattice, quotient)
}

/// Scans every one-parameter lattice line (single-axis lines and the
/// isotropic diagonal) for monotone growth into an edge.
fn detect_edge_growth(
    trace: &[SupSample],
    sup: f64,
    lattice: &SearchLattice,
    quotient: bool,
) -> (bool, Option<String>) {
    use std::collections::HashMap;
    // lattice line keyed by (fixed log sides, center factor, center offset bits)
    type LineKey = (Vec<i32>, Option<usize>, u64);
    type Line = Vec<(i32, f64)>;
    let n = match trace.first() {
        Some(s) => s.log_sides.len(),
        None => return (false, None),
    };
    let mut best: Option<(f64, String)> = None;
    let mut consider = |values: &[(i32, f64)], label: String| {
        // `values` ordered with the edge last.
        if values.len() < 4 {
            return;
        }
        let tail = &values[values.len() - 4..];
        let monotone = tail.windows(2).all(|w| w[1].1 > w[0].1);
        let ratio = tail[3].1 / tail[0].1.max(f64::MIN_POSITIVE);
        let relevant = tail[3].1 >= 0.25 * sup;
        if monotone && ratio >= 1.15 && relevant && best.as_ref().is_none_or(|(r, _)| ratio > *r)
        {
            best = Some((ratio, label));
        }
    };

    for axis in 0..n {
        let mut lines: HashMap<LineKey, Line> = HashMap::new();
        for s in trace {
            let mut key = s.log_sides.clone();
            key.remove(axis);
            lines
                .entry((key, s.center.factor, s.center.offset.to_bits()))
                .or_default()
                .push((s.log_sides[axis], s.value));
        }
        let mut keys: Vec<_> = lines.keys().cloned().collect();
        keys.sort();
        for key in keys {
            let mut line = lines.remove(&key).unwrap();
            line.sort_by_key(|&(l, _)| l);
            let mut toward_min = line.clone();
            toward_min.reverse();
            consider(
                &toward_min,
                format!("factor {axis} side -> 2^{}", lattice.log2_side_min),
            );
            if !quotient {
                consider(
                    &line,
                    format!("factor {axis} side -> 2^{}", lattice.log2_side_max),
                );
            }
        }
    }

    let mut diag: HashMap<(Option<usize>, u64), Line> = HashMap::new();
    for s in trace {
        if s.log_sides.iter().all(|&l| l == s.log_sides[0]) {
            diag.entry((s.center.factor, s.center.offset.to_bits()))
                .or_default()
                .push((s.log_sides[0], s.value));
        }
    }
    let mut keys: Vec<_> = diag.keys().cloned().collect();
    keys.sort();
    for key in keys {
        let mut line = diag.remove(&key).unwrap();
        line.sort_by_key(|&(l, _)| l);
        let mut toward_min = line.clone();
        toward_min.reverse();
        consider(
            &toward_min,
            format!("all sides -> 2^{}", lattice.log2_side_min),
        );
        if !quotient {
            consider(&line, format!("all sides -> 2^{}", lattice.log2_side_max));
        }
    }

    match best {
        Some((_, label)) => (true, Some(label)),
        None => (false, None),
    }
}

// ---------------------------------------------------------------------------
// Dilation identity
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DilationCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

/// Verifies the per-factor dilation identity: the characteristic of `rect`
/// with weights evaluated at the dyadically squeezed points `(2^{-t_i} x_i)_i`
/// equals `prod_i 2^{t_i (alpha_i - N_i/p + N_i/q)}` times the characteristic
/// of the squeezed rectangle. The two sides go through different quadrature
/// decompositions, so the reported discrepancy is pure quadrature noise.
pub fn dilation_check(
    inst: &Instance,
    rect: &Rectangle,
    t: &[u32],
    r: &Rational,
    cfg: &QuadConfig,
) -> Result<DilationCheck, CharError> {
    assert_eq!(t.len(), inst.space().factors());
    check_bump_integrability(inst, r)?;

    let axes = rect.flat_intervals();
    let mut scales = Vec::with_capacity(axes.len());
    for (i, &ti) in t.iter().enumerate() {
        let s = 2f64.powi(-(ti as i32));
        for _ in 0..inst.space().dim(i) {
            scales.push(s);
        }
    }
    let vol = rect.volume();
    let e_omega = to_f64(&-(inst.gamma() * inst.q() * r));
    let e_sigma = to_f64(&-(inst.delta() * inst.p() * r / (inst.p() - rat_one())));
    let pow_or_unit = |e: f64, outer: f64| -> Result<f64, CharError> {
        if e == 0.0 {
            return Ok(1.0);
        }
        let q = integrate_scaled_power(&axes, e, &scales, cfg)?;
        Ok((q.value / vol).powf(outer))
    };
    let outer_omega = to_f64(&(inst.q() * r).recip());
    let outer_sigma = to_f64(&((inst.p() - rat_one()) / (inst.p() * r)));
    let lhs = geometry_factor(inst, rect)
        * pow_or_unit(e_omega, outer_omega)?
        * pow_or_unit(e_sigma, outer_sigma)?;

    let t_signed: Vec<i32> = t.iter().map(|&ti| ti as i32).collect();
    let squeezed = rect.dilated_pow2(&t_signed);
    let exponent: Rational = (0..inst.space().factors()).fold(rat_int(0), |acc, i| {
        let ni = rat_int(inst.space().dim(i) as i64);
        acc + rat_int(t[i] as i64)
            * (inst.alpha(i) - ni.clone() * inst.p().recip() + ni * inst.q().recip())
    });
    let prefactor = 2f64.powf(to_f64(&exponent));
    let rhs = prefactor * rect_characteristic(inst, &squeezed, r, cfg)?.value;

    let rel_err = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    Ok(DilationCheck { lhs, rhs, rel_err })
}

// ---------------------------------------------------------------------------
// Eccentricity decay
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRung {
    pub t: Vec<u32>,
    pub sum_t: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub pivot: usize,
    #[serde(with = "crate::rational::serde_rational")]
    pub r: Rational,
    pub rungs: Vec<DecayRung>,
    /// Fitted decay exponent of `log2 A` against `sum_i t_i`.
    pub eps_hat: f64,
    pub stderr: f64,
}

/// Evaluates the fixed-eccentricity characteristic on the ladder
/// `t = (0, k, ..., k)` (zero at the pivot), maximizing over the center set
/// with the pivot side pinned to 1, and fits the decay exponent.
///
/// Preconditions: at least two factors, strict subbalance everywhere, weight
/// powers off the window edges, and a verdict in scope: `Bounded`, or the
/// zero-weight case whose only failure is the balance identity (there the
/// profile is the exact geometry power law).
pub fn eccentricity_decay_fit(
    inst: &Instance,
    pivot: usize,
    r: &Rational,
    k_max: u32,
    lattice: &SearchLattice,
    cfg: &QuadConfig,
) -> Result<DecayFit, CharError> {
    let n = inst.space().factors();
    if pivot >= n {
        return Err(CharError::BadPivot { pivot, n });
    }
    if n < 2 {
        return Err(CharError::Precondition(
            "eccentricity ladders need at least two factors".into(),
        ));
    }
    for (i, f) in inst.strict_subbalance().iter().enumerate() {
        if !f.strict {
            return Err(CharError::Precondition(format!(
                "strict subbalance fails at factor {i}"
            )));
        }
    }
    if !decay_range_interior(inst) {
        return Err(CharError::Precondition(
            "a weight power sits on a range-window edge".into(),
        ));
    }
    let verdict = inst.verdict();
    let geometry_profile_only = verdict.violations == vec![ConstraintId::Formula]
        && inst.gamma().is_zero()
        && inst.delta().is_zero();
    if verdict.status != Status::Bounded && !geometry_profile_only {
        return Err(CharError::Precondition(format!(
            "instance not in scope for the decay bound: {:?}",
            verdict.status
        )));
    }
    check_bump_integrability(inst, r)?;

    let centers = center_set(n, &lattice.center_offsets);
    let mut rungs = Vec::new();
    for k in 0..=k_max {
        let mut t = vec![k; n];
        t[pivot] = 0;
        let log_sides: Vec<i32> = t.iter().map(|&ti| -(ti as i32)).collect();
        let values: Vec<Result<f64, CharError>> = centers
            .par_iter()
            .map(|c| {
                let rect = build_rect(inst, &log_sides, *c)?;
                Ok(rect_characteristic(inst, &rect, r, cfg)?.value)
            })
            .collect();
        let mut best = f64::NEG_INFINITY;
        for v in values {
            best = best.max(v?);
        }
        rungs.push(DecayRung {
            sum_t: t.iter().sum(),
            t,
            value: best,
        });
    }

    let finite: Vec<&DecayRung> = rungs.iter().filter(|r| r.value.is_finite()).collect();
    if finite.len() < 3 {
        return Err(CharError::FitFailed(finite.len()));
    }
    // Fit on the ladder tail where the asymptotic regime dominates; fall
    // back to the whole ladder when the tail is too short.
    let tail_floor = (k_max / 2) * (n as u32 - 1);
    let tail: Vec<&&DecayRung> = finite.iter().filter(|r| r.sum_t >= tail_floor).collect();
    let pts: Vec<&DecayRung> = if tail.len() >= 4 {
        tail.into_iter().copied().collect()
    } else {
        finite.clone()
    };
    let xs: Vec<f64> = pts.iter().map(|r| r.sum_t as f64).collect();
    let ys: Vec<f64> = pts.iter().map(|r| r.value.log2()).collect();
    let fit: LineFit = fit_line(&xs, &ys).ok_or(CharError::FitFailed(finite.len()))?;
    Ok(DecayFit {
        pivot,
        r: r.clone(),
        rungs,
        eps_hat: -fit.slope,
        stderr: fit.slope_stderr,
    })
}

// ---------------------------------------------------------------------------
// Bump selection
// ---------------------------------------------------------------------------

/// Largest `r = 1 + 2^{-j}`, `j = 1..12`, keeping every inequality used by
/// the decay bound strict with margin `1e-6`, evaluated in exact rationals:
/// the per-factor caps of the form `alpha_i - N_i/p + (1 - 1/r) N_i/q < 0`,
/// their duals, the bump-shifted threshold and subset-sum conditions, and the
/// window caps keeping `gamma q r` and `delta p r/(p-1)` inside their dyadic
/// windows.
pub fn choose_r(inst: &Instance) -> Result<Rational, CharError> {
    let verdict = inst.verdict();
    if verdict.status != Status::Bounded {
        return Err(CharError::Precondition(format!(
            "bump selection needs a Bounded instance, got {:?}",
            verdict.status
        )));
    }
    for (i, f) in inst.strict_subbalance().iter().enumerate() {
        if !f.strict {
            return Err(CharError::Precondition(format!(
                "strict subbalance fails at factor {i}"
            )));
        }
    }
    if !decay_range_interior(inst) {
        return Err(CharError::Precondition(
            "a weight power sits on a range-window edge".into(),
        ));
    }

    let margin = rat(1, 1_000_000);
    let n = inst.space().factors();
    let g = inst.gamma();
    let d = inst.delta();
    let (u_set, v_set) = inst.subsets_uv();
    let sums = dimension_subset_sums(inst.space());
    let next_above = |v: &Rational| -> Option<Rational> {
        sums.iter().map(|&s| rat_int(s as i64)).find(|s| s > v)
    };

    'ladder: for j in 1..=12u32 {
        let r = rat_one() + rat_pow2(-(j as i32));
        let bump = rat_one() - r.recip();
        for i in 0..n {
            let ni = rat_int(inst.space().dim(i) as i64);
            // Leading-factor cap: alpha_i < N_i (1/r + (1-1/r)(1/p-1/q)).
            let cap = ni * (r.recip() + bump.clone() * inst.pq_gap());
            if inst.alpha(i) - cap > -margin.clone() {
                continue 'ladder;
            }
        }
        let case_one = !g.is_negative() && !d.is_positive();
        let case_two = !g.is_positive() && !d.is_negative();
        let case_three = g.is_positive() && d.is_positive();
        if case_one {
            for i in 0..n {
                let ni = rat_int(inst.space().dim(i) as i64);
                let lhs = inst.alpha(i) - inst.dim_over_p(i)
                    + bump.clone() * ni.clone() * inst.q().recip();
                if lhs > -margin.clone() {
                    continue 'ladder;
                }
                let off_sum: Rational = (0..n)
                    .filter(|&k| k != i)
                    .fold(rat_int(0), |acc, k| acc + inst.factor_excess(k));
                if g.clone() - ni * (inst.q() * &r).recip() - off_sum > -margin.clone() {
                    continue 'ladder;
                }
            }
        }
        if case_two {
            for i in 0..n {
                let ni = rat_int(inst.space().dim(i) as i64);
                let pc = rat_one() - inst.p().recip();
                let lhs = inst.alpha(i) - inst.dim_times_q_conj(i)
                    + bump.clone() * pc.clone() * ni.clone();
                if lhs > -margin.clone() {
                    continue 'ladder;
                }
                let off_sum: Rational = (0..n)
                    .filter(|&k| k != i)
                    .fold(rat_int(0), |acc, k| acc + inst.factor_excess(k));
                if d.clone() - ni * pc / &r - off_sum > -margin.clone() {
                    continue 'ladder;
                }
            }
        }
        if case_three {
            for i in 0..n {
                let ni = rat_int(inst.space().dim(i) as i64);
                if !u_set.contains(&i) {
                    let lhs = inst.alpha(i) - inst.dim_over_p(i)
                        + bump.clone() * ni.clone() * inst.q().recip();
                    if lhs > -margin.clone() {
                        continue 'ladder;
                    }
                }
                if !v_set.contains(&i) {
                    let pc = rat_one() - inst.p().recip();
                    let lhs = inst.alpha(i) - inst.dim_times_q_conj(i) + bump.clone() * pc * ni;
                    if lhs > -margin.clone() {
                        continue 'ladder;
                    }
                }
            }
            let u_sum: Rational = u_set.iter().fold(rat_int(0), |acc, &i| {
                acc + inst.alpha(i) - inst.dim_over_p(i)
            });
            let u_dims: Rational = u_set.iter().fold(rat_int(0), |acc, &i| {
                acc + rat_int(inst.space().dim(i) as i64)
            });
            if d.clone() - u_sum - bump.clone() * u_dims * inst.q().recip() < margin.clone() {
                continue 'ladder;
            }
            let v_sum: Rational = v_set.iter().fold(rat_int(0), |acc, &i| {
                acc + inst.alpha(i) - inst.dim_times_q_conj(i)
            });
            let v_dims: Rational = v_set.iter().fold(rat_int(0), |acc, &i| {
                acc + rat_int(inst.space().dim(i) as i64)
            });
            let pc = rat_one() - inst.p().recip();
            if g.clone() - v_sum - bump.clone() * pc * v_dims < margin.clone() {
                continue 'ladder;
            }
        }
        if g.is_positive() {
            let gq = g * inst.q();
            match next_above(&gq) {
                Some(edge) => {
                    if gq * &r > edge - margin.clone() {
                        continue 'ladder;
                    }
                }
                None => continue 'ladder,
            }
        }
        if d.is_positive() {
            let dp = d.clone() * inst.p() / (inst.p() - rat_one());
            match next_above(&dp) {
                Some(edge) => {
                    if dp * &r > edge - margin.clone() {
                        continue 'ladder;
                    }
                }
                None => continue 'ladder,
            }
        }
        return Ok(r);
    }
    Err(CharError::RNotFound)
}
