//! Blow-up witnesses for violated constraints.
//!
//! Each violated constraint of the decision procedure has a matching family
//! of rectangles whose characteristic diverges along a dyadic scale ladder,
//! with a growth exponent computed exactly from the violation margin:
//!
//! * `FormulaDilation`: the isotropically dilated family; drift exponent
//!   `gamma + delta - alpha + N (1/p - 1/q)`.
//! * `CaseOne(i)` / `CaseTwo(i)`: factor `i` pinned at unit side, all other
//!   sides shrinking; exponents `gamma - N_i/q - sum_{j!=i} e_j` and
//!   `delta - N_i (p-1)/p - sum_{j!=i} e_j` with `e_j` the factor excess.
//! * `CaseThreeU` / `CaseThreeV`: the `U` (resp. `V`) sides growing;
//!   exponents `sum_U (alpha_i - N_i/p) - delta` and
//!   `sum_V (alpha_i - N_i (q-1)/q) - gamma`.
//! * `SubbalanceShrink(i)`: factor `i` shrinking around an off-origin
//!   center; exponent `N_i (1/p - 1/q) - alpha_i`.
//!
//! [`run_blowup`] measures the actual characteristic along the ladder and
//! compares the fitted slope against the predicted exponent.

use num::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::characteristic::{rect_characteristic, CharError};
use crate::operator::{weight_samples, Grid, GridFunction, OperatorError};
use crate::param::{ConstraintId, Instance, ParamError};
use crate::quad::{QuadConfig, Rectangle};
use crate::rational::{rat_int, rat_one, to_f64, Rational};
use crate::util::fit_line;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WitnessError {
    #[error("not a witness: {reason}")]
    NotAWitness { reason: String },
    #[error("shrink direction {index} must have alpha_i = N_i (1/p - 1/q) exactly")]
    ShrinkHypothesis { index: usize },
    #[error(transparent)]
    Char(#[from] CharError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Quad(#[from] crate::quad::QuadError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum WitnessCase {
    FormulaDilation,
    CaseOne(usize),
    CaseTwo(usize),
    CaseThreeU,
    CaseThreeV,
    SubbalanceShrink(usize),
}

impl WitnessCase {
    /// Witness cases keyed to a verdict violation.
    pub fn for_violation(v: ConstraintId) -> Option<WitnessCase> {
        match v {
            ConstraintId::Formula => Some(WitnessCase::FormulaDilation),
            ConstraintId::DeltaDominates(i) => Some(WitnessCase::CaseOne(i)),
            ConstraintId::GammaDominates(i) => Some(WitnessCase::CaseTwo(i)),
            ConstraintId::SubsetSumDelta => Some(WitnessCase::CaseThreeU),
            ConstraintId::SubsetSumGamma => Some(WitnessCase::CaseThreeV),
            ConstraintId::Subbalance(i) => Some(WitnessCase::SubbalanceShrink(i)),
            _ => None,
        }
    }
}

/// A scale ladder of rectangles together with the exact predicted slope of
/// `log2(characteristic)` per rung.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessFamily {
    pub case: WitnessCase,
    pub k_max: u32,
    #[serde(with = "crate::rational::serde_rational")]
    pub predicted_exponent: Rational,
    pub rungs: Vec<Rectangle>,
}

fn not_a_witness(reason: impl Into<String>) -> WitnessError {
    WitnessError::NotAWitness {
        reason: reason.into(),
    }
}

/// Builds the rectangle ladder for the requested violation case. The side
/// prescriptions follow the necessity constructions exactly; the predicted
/// exponent is evaluated in exact rationals.
pub fn build_family(
    inst: &Instance,
    case: WitnessCase,
    k_max: u32,
) -> Result<WitnessFamily, WitnessError> {
    let space = inst.space();
    let n = space.factors();
    let g = inst.gamma();
    let d = inst.delta();
    let off_excess = |i: usize| -> Rational {
        (0..n)
            .filter(|&j| j != i)
            .fold(rat_int(0), |acc, j| acc + inst.factor_excess(j))
    };
    let cube = |sides: &[f64]| Rectangle::centered_cubes(space, sides).map_err(WitnessError::from);

    let (predicted, rungs): (Rational, Vec<Rectangle>) = match case {
        WitnessCase::FormulaDilation => {
            let drift = (g + d) - inst.alpha_total()
                + rat_int(space.total_dim() as i64) * inst.pq_gap();
            // Ladder direction follows the blow-up side of the drift.
            let shrink = !drift.is_negative();
            let mut rungs = Vec::new();
            for k in 0..=k_max {
                let lam = if shrink {
                    2f64.powi(-(k as i32))
                } else {
                    2f64.powi(k as i32)
                };
                rungs.push(cube(&vec![lam; n])?);
            }
            (drift.abs(), rungs)
        }
        WitnessCase::CaseOne(i) => {
            if i >= n {
                return Err(not_a_witness(format!("factor {i} out of range")));
            }
            if g.is_negative() || d.is_positive() {
                return Err(not_a_witness("sign pattern requires gamma >= 0, delta <= 0"));
            }
            let margin = inst.alpha(i) - inst.dim_over_p(i);
            if margin < *d {
                return Err(not_a_witness(format!(
                    "factor {i} satisfies its dominance constraint strictly"
                )));
            }
            if n < 2 {
                return Err(not_a_witness(
                    "single-factor shrink family is degenerate",
                ));
            }
            let predicted =
                g.clone() - rat_int(space.dim(i) as i64) * inst.q().recip() - off_excess(i);
            let mut rungs = Vec::new();
            for k in 0..=k_max {
                let lam = 2f64.powi(-(k as i32));
                let sides: Vec<f64> = (0..n).map(|j| if j == i { 1.0 } else { lam }).collect();
                rungs.push(cube(&sides)?);
            }
            (predicted, rungs)
        }
        WitnessCase::CaseTwo(i) => {
            if i >= n {
                return Err(not_a_witness(format!("factor {i} out of range")));
            }
            if g.is_positive() || d.is_negative() {
                return Err(not_a_witness("sign pattern requires gamma <= 0, delta >= 0"));
            }
            let margin = inst.alpha(i) - inst.dim_times_q_conj(i);
            if margin < *g {
                return Err(not_a_witness(format!(
                    "factor {i} satisfies its dominance constraint strictly"
                )));
            }
            if n < 2 {
                return Err(not_a_witness(
                    "single-factor shrink family is degenerate",
                ));
            }
            let predicted = d.clone()
                - rat_int(space.dim(i) as i64) * (rat_one() - inst.p().recip())
                - off_excess(i);
            let mut rungs = Vec::new();
            for k in 0..=k_max {
                let lam = 2f64.powi(-(k as i32));
                let sides: Vec<f64> = (0..n).map(|j| if j == i { 1.0 } else { lam }).collect();
                rungs.push(cube(&sides)?);
            }
            (predicted, rungs)
        }
        WitnessCase::CaseThreeU => {
            if !g.is_positive() || !d.is_positive() {
                return Err(not_a_witness("sign pattern requires gamma > 0, delta > 0"));
            }
            let (u, _) = inst.subsets_uv();
            if u.is_empty() {
                return Err(not_a_witness("subset U is empty"));
            }
            let u_sum: Rational = u.iter().fold(rat_int(0), |acc, &i| {
                acc + inst.alpha(i) - inst.dim_over_p(i)
            });
            if u_sum < *d {
                return Err(not_a_witness("U subset sum satisfies its bound strictly"));
            }
            let predicted = u_sum - d;
            let mut rungs = Vec::new();
            for k in 0..=k_max {
                let grow = 2f64.powi(k as i32);
                let sides: Vec<f64> = (0..n)
                    .map(|j| if u.contains(&j) { grow } else { 1.0 })
                    .collect();
                rungs.push(cube(&sides)?);
            }
            (predicted, rungs)
        }
        WitnessCase::CaseThreeV => {
            if !g.is_positive() || !d.is_positive() {
                return Err(not_a_witness("sign pattern requires gamma > 0, delta > 0"));
            }
            let (_, v) = inst.subsets_uv();
            if v.is_empty() {
                return Err(not_a_witness("subset V is empty"));
            }
            let v_sum: Rational = v.iter().fold(rat_int(0), |acc, &i| {
                acc + inst.alpha(i) - inst.dim_times_q_conj(i)
            });
            if v_sum < *g {
                return Err(not_a_witness("V subset sum satisfies its bound strictly"));
            }
            let predicted = v_sum - g;
            let mut rungs = Vec::new();
            for k in 0..=k_max {
                let grow = 2f64.powi(k as i32);
                let sides: Vec<f64> = (0..n)
                    .map(|j| if v.contains(&j) { grow } else { 1.0 })
                    .collect();
                rungs.push(cube(&sides)?);
            }
            (predicted, rungs)
        }
        WitnessCase::SubbalanceShrink(i) => {
            if i >= n {
                return Err(not_a_witness(format!("factor {i} out of range")));
            }
            let excess = inst.factor_excess(i);
            if !excess.is_negative() {
                return Err(not_a_witness(format!(
                    "factor {i} satisfies subbalance"
                )));
            }
            let predicted = -excess;
            // Shrink factor i around an off-origin point so both weight
            // averages converge to finite limits.
            let mut rungs = Vec::new();
            for k in 0..=k_max {
                let lam = 2f64.powi(-(k as i32));
                let sides: Vec<f64> = (0..n).map(|j| if j == i { lam } else { 1.0 }).collect();
                let centers: Vec<Vec<f64>> = (0..n)
                    .map(|j| {
                        let mut c = vec![0.0; space.dim(j) as usize];
                        if j == i {
                            c[0] = 2.0;
                        }
                        c
                    })
                    .collect();
                rungs.push(
                    Rectangle::with_centers(space, &sides, &centers)
                        .map_err(WitnessError::from)?,
                );
            }
            (predicted, rungs)
        }
    };

    Ok(WitnessFamily {
        case,
        k_max,
        predicted_exponent: predicted,
        rungs,
    })
}

/// Families for every violation in the instance's verdict, in ledger order.
pub fn families_for_verdict(
    inst: &Instance,
    k_max: u32,
) -> Vec<(ConstraintId, Result<WitnessFamily, WitnessError>)> {
    inst.verdict()
        .violations
        .into_iter()
        .filter_map(|v| {
            WitnessCase::for_violation(v).map(|case| (v, build_family(inst, case, k_max)))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlowupVerdict {
    BlowUp,
    Stable,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    /// Characteristic per rung; rungs whose quadrature fails are excluded.
    pub values: Vec<Option<f64>>,
    /// Fitted slope of `log2(value)` per rung over the ladder tail.
    pub c_hat: Option<f64>,
    pub stderr: Option<f64>,
    /// Last finite value over first finite value.
    pub growth_ratio: Option<f64>,
    pub verdict: BlowupVerdict,
}

/// Evaluates the characteristic along the family and classifies the trend.
/// `BlowUp` demands a positive fitted exponent exceeding twice its standard
/// error and at least a tenfold rise across the ladder.
pub fn run_blowup(
    inst: &Instance,
    family: &WitnessFamily,
    r: &Rational,
    cfg: &QuadConfig,
) -> BlowupReport {
    let values: Vec<Option<f64>> = family
        .rungs
        .par_iter()
        .map(|rect| {
            rect_characteristic(inst, rect, r, cfg)
                .ok()
                .map(|rep| rep.value)
                .filter(|v| v.is_finite() && *v > 0.0)
        })
        .collect();

    let finite: Vec<(usize, f64)> = values
        .iter()
        .enumerate()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect();
    if finite.len() < 3 {
        return BlowupReport {
            values,
            c_hat: None,
            stderr: None,
            growth_ratio: None,
            verdict: BlowupVerdict::Inconclusive,
        };
    }
    let growth_ratio = finite.last().unwrap().1 / finite.first().unwrap().1;

    // Fit on the tail half where the asymptotic regime dominates, falling
    // back to the whole ladder when the tail is too short.
    let tail_start = (family.k_max / 2) as usize;
    let tail: Vec<&(usize, f64)> = finite.iter().filter(|(k, _)| *k >= tail_start).collect();
    let pts: Vec<&(usize, f64)> = if tail.len() >= 3 {
        tail
    } else {
        finite.iter().collect()
    };
    let xs: Vec<f64> = pts.iter().map(|(k, _)| *k as f64).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, v)| v.log2()).collect();
    let Some(fit) = fit_line(&xs, &ys) else {
        return BlowupReport {
            values,
            c_hat: None,
            stderr: None,
            growth_ratio: Some(growth_ratio),
            verdict: BlowupVerdict::Inconclusive,
        };
    };

    let c_hat = fit.slope;
    let verdict = if c_hat > 0.0 && c_hat > 2.0 * fit.slope_stderr && growth_ratio >= 10.0 {
        BlowupVerdict::BlowUp
    } else {
        BlowupVerdict::Stable
    };
    BlowupReport {
        values,
        c_hat: Some(c_hat),
        stderr: Some(fit.slope_stderr),
        growth_ratio: Some(growth_ratio),
        verdict,
    }
}

// ---------------------------------------------------------------------------
// Test function and shrink probe
// ---------------------------------------------------------------------------

/// Samples `f(x) = chi_Q(x) |x|^{-delta p/(p-1)}` on the grid, with analytic
/// cell averages on origin cells.
pub fn necessity_function(
    inst: &Instance,
    rect: &Rectangle,
    grid: &Grid,
) -> Result<GridFunction, WitnessError> {
    let power = inst.delta() * inst.p() / (inst.p() - rat_one());
    let exponent = to_f64(&-power.clone());
    if power >= rat_int(inst.space().total_dim() as i64) {
        return Err(WitnessError::Operator(OperatorError::WeightNotIntegrable {
            exponent,
            dim: inst.space().total_dim(),
        }));
    }
    let w = weight_samples(grid, exponent)?;
    let intervals = rect.flat_intervals();
    let total = grid.total_points();
    let mut values = vec![0.0; total];
    for (p, v) in values.iter_mut().enumerate() {
        let x = grid.point(p);
        let inside = x
            .iter()
            .zip(&intervals)
            .all(|(c, &(lo, hi))| *c >= lo && *c <= hi);
        if inside {
            *v = w[p];
        }
    }
    GridFunction::new(grid.clone(), values).map_err(WitnessError::from)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkProbe {
    /// Directions kept at unit side.
    pub kept: Vec<usize>,
    pub rungs: Vec<f64>,
    /// Characteristic of the unit rectangle on the kept-factor subspace.
    pub subspace_char: f64,
    /// Relative change between the last two rungs fell below the tolerance.
    pub converged: bool,
}

/// Shrinks the balanced directions (complement of `kept`) toward the origin
/// and checks convergence of the characteristic to the subspace value.
pub fn lebesgue_shrink_probe(
    inst: &Instance,
    kept: &[usize],
    k_max: u32,
    tol: f64,
    cfg: &QuadConfig,
) -> Result<ShrinkProbe, WitnessError> {
    let n = inst.space().factors();
    let keep: Vec<usize> = {
        let mut k = kept.to_vec();
        k.sort_unstable();
        k.dedup();
        k
    };
    if keep.iter().any(|&i| i >= n) || keep.is_empty() {
        return Err(not_a_witness("kept direction set must be a nonempty subset"));
    }
    let shrink: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    for &i in &shrink {
        if !inst.factor_excess(i).is_zero() {
            return Err(WitnessError::ShrinkHypothesis { index: i });
        }
    }

    let sub_inst = Instance::new(
        keep.iter().map(|&i| inst.space().dim(i)).collect(),
        keep.iter().map(|&i| inst.alpha(i).clone()).collect(),
        inst.p().clone(),
        inst.q().clone(),
        inst.gamma().clone(),
        inst.delta().clone(),
    )?;
    let sub_rect = Rectangle::centered_cubes(sub_inst.space(), &vec![1.0; keep.len()])
        .map_err(WitnessError::from)?;
    let subspace_char = rect_characteristic(&sub_inst, &sub_rect, &rat_one(), cfg)?.value;

    if shrink.is_empty() {
        return Ok(ShrinkProbe {
            kept: keep,
            rungs: vec![subspace_char],
            subspace_char,
            converged: true,
        });
    }

    let mut rungs = Vec::new();
    for k in 0..=k_max {
        let lam = 2f64.powi(-(k as i32));
        let sides: Vec<f64> = (0..n)
            .map(|i| if shrink.contains(&i) { lam } else { 1.0 })
            .collect();
        let rect = Rectangle::centered_cubes(inst.space(), &sides).map_err(WitnessError::from)?;
        rungs.push(rect_characteristic(inst, &rect, &rat_one(), cfg)?.value);
    }
    let m = rungs.len();
    let converged = m >= 2 && ((rungs[m - 1] - rungs[m - 2]) / rungs[m - 1]).abs() <= tol;
    Ok(ShrinkProbe {
        kept: keep,
        rungs,
        subspace_char,
        converged,
    })
}
