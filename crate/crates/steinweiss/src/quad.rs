//! Integration of power integrands `|x|^e` over product rectangles.
//!
//! The integrand is singular at the origin whenever `e < 0`, with `|x|` the
//! Euclidean norm on the full space. The deterministic route splits a
//! rectangle touching the origin into a self-similar corner box plus smooth
//! peel boxes: the corner is summed exactly as a geometric series over dyadic
//! max-norm annuli, the peels go through adaptive tensor Gauss quadrature.
//! A stratified Monte Carlo estimator with an annulus-profile importance
//! sampler serves as the independent cross-check.

use num::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::param::{Instance, ProductSpace};
use crate::rational::{rat_int, rat_one, to_f64, Rational};
use crate::util::{pairwise_sum, pow2_at_most};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("|x|^{exponent} is not integrable over a rectangle touching the origin in dimension {dim}")]
    NonIntegrable { exponent: f64, dim: u32 },
    #[error("tolerance not met at maximum subdivision depth: value {value} +/- {error}")]
    ToleranceNotMet { value: f64, error: f64 },
    #[error("bad rectangle: {0}")]
    BadRectangle(String),
    #[error("bump parameter r = {0} must be >= 1")]
    InvalidBump(f64),
    #[error("weight average for the {factor:?} factor diverges: {source}")]
    WeightNotIntegrable {
        factor: WeightFactor,
        source: Box<QuadError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightFactor {
    Omega,
    Sigma,
}

/// Axis-aligned product rectangle: a cube per factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub center: Vec<f64>,
    pub half_side: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    factors: Vec<Factor>,
}

impl Rectangle {
    pub fn new(factors: Vec<Factor>) -> Result<Self, QuadError> {
        if factors.is_empty() {
            return Err(QuadError::BadRectangle("no factors".into()));
        }
        for (i, f) in factors.iter().enumerate() {
            if f.center.is_empty() {
                return Err(QuadError::BadRectangle(format!("factor {i} has no axes")));
            }
            if f.half_side <= 0.0 || !f.half_side.is_finite() {
                return Err(QuadError::BadRectangle(format!(
                    "factor {i} half-side {} must be positive and finite",
                    f.half_side
                )));
            }
            if f.center.iter().any(|c| !c.is_finite()) {
                return Err(QuadError::BadRectangle(format!("factor {i} center not finite")));
            }
        }
        Ok(Rectangle { factors })
    }

    /// Origin-centered rectangle with the given per-factor sides.
    pub fn centered_cubes(space: &ProductSpace, sides: &[f64]) -> Result<Self, QuadError> {
        Self::with_centers(
            space,
            sides,
            &(0..space.factors())
                .map(|i| vec![0.0; space.dim(i) as usize])
                .collect::<Vec<_>>(),
        )
    }

    pub fn with_centers(
        space: &ProductSpace,
        sides: &[f64],
        centers: &[Vec<f64>],
    ) -> Result<Self, QuadError> {
        if sides.len() != space.factors() || centers.len() != space.factors() {
            return Err(QuadError::BadRectangle(
                "side/center count does not match the factor count".into(),
            ));
        }
        let factors = (0..space.factors())
            .map(|i| {
                if centers[i].len() != space.dim(i) as usize {
                    return Err(QuadError::BadRectangle(format!(
                        "factor {i} center has {} axes, expected {}",
                        centers[i].len(),
                        space.dim(i)
                    )));
                }
                Ok(Factor {
                    center: centers[i].clone(),
                    half_side: sides[i] * 0.5,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Rectangle::new(factors)
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }

    /// Side length `2 h_i` of the factor-`i` cube.
    pub fn side(&self, i: usize) -> f64 {
        2.0 * self.factors[i].half_side
    }

    pub fn total_dim(&self) -> usize {
        self.factors.iter().map(|f| f.center.len()).sum()
    }

    pub fn factor_volume(&self, i: usize) -> f64 {
        self.side(i).powi(self.factors[i].center.len() as i32)
    }

    pub fn volume(&self) -> f64 {
        (0..self.n()).map(|i| self.factor_volume(i)).product()
    }

    /// Dilation about the origin: all sides and centers scaled by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Rectangle {
        Rectangle {
            factors: self
                .factors
                .iter()
                .map(|f| Factor {
                    center: f.center.iter().map(|c| c * lambda).collect(),
                    half_side: f.half_side * lambda,
                })
                .collect(),
        }
    }

    /// Per-factor dyadic dilation: factor `i` scaled by `2^{-t_i}`.
    pub fn dilated_pow2(&self, t: &[i32]) -> Rectangle {
        assert_eq!(t.len(), self.n());
        Rectangle {
            factors: self
                .factors
                .iter()
                .zip(t)
                .map(|(f, &ti)| {
                    let s = 2f64.powi(-ti);
                    Factor {
                        center: f.center.iter().map(|c| c * s).collect(),
                        half_side: f.half_side * s,
                    }
                })
                .collect(),
        }
    }

    /// Side ratios `side_i / side_pivot`.
    pub fn eccentricities(&self, pivot: usize) -> Vec<f64> {
        let base = self.side(pivot);
        (0..self.n()).map(|i| self.side(i) / base).collect()
    }

    /// Flattened scalar intervals over all axes of all factors.
    pub fn flat_intervals(&self) -> Vec<(f64, f64)> {
        self.factors
            .iter()
            .flat_map(|f| {
                f.center
                    .iter()
                    .map(move |c| (c - f.half_side, c + f.half_side))
            })
            .collect()
    }

    pub fn touches_origin(&self) -> bool {
        self.flat_intervals()
            .iter()
            .all(|&(lo, hi)| lo <= 0.0 && 0.0 <= hi)
    }
}

/// Quadrature and Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    /// Target relative tolerance for deterministic integrals.
    pub rel_tol: f64,
    /// Maximum dyadic subdivision depth toward a singular corner.
    pub max_depth: u32,
    /// Tensor Gauss order per axis (the error estimate adds 4).
    pub gauss_order: usize,
    pub mc_samples: u64,
    pub seed: u64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            rel_tol: 1e-9,
            max_depth: 60,
            gauss_order: 12,
            mc_samples: 200_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
}

// ---------------------------------------------------------------------------
// Gauss-Legendre rules
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct GaussTable {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn gauss_legendre(n: usize) -> GaussTable {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_deriv(n, x);
            let dx = -p / dp;
            x += dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_deriv(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    GaussTable { nodes, weights }
}

fn tensor_gauss<F: FnMut(&[f64]) -> f64>(
    cell: &[(f64, f64)],
    table: &GaussTable,
    f: &mut F,
) -> f64 {
    let n = cell.len();
    let g = table.nodes.len();
    let mids: Vec<f64> = cell.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect();
    let halfs: Vec<f64> = cell.iter().map(|&(lo, hi)| 0.5 * (hi - lo)).collect();
    let jac: f64 = halfs.iter().product();
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0; n];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for t in 0..n {
            x[t] = mids[t] + halfs[t] * table.nodes[idx[t]];
            w *= table.weights[idx[t]];
        }
        total += w * f(&x);
        let mut t = 0;
        loop {
            idx[t] += 1;
            if idx[t] < g {
                break;
            }
            idx[t] = 0;
            t += 1;
            if t == n {
                return total * jac;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Deterministic integration of |S x|^e
// ---------------------------------------------------------------------------

struct PowerIntegrand<'a> {
    e: f64,
    scales: &'a [f64],
}

impl PowerIntegrand<'_> {
    #[inline]
    fn eval(&self, x: &[f64]) -> f64 {
        let mut sq = 0.0;
        for (xi, s) in x.iter().zip(self.scales) {
            let v = xi * s;
            sq += v * v;
        }
        sq.powf(0.5 * self.e)
    }
}

struct Cells {
    values: Vec<f64>,
    errors: Vec<f64>,
    capped: bool,
}

struct Adaptive<'a> {
    integrand: PowerIntegrand<'a>,
    lo_table: GaussTable,
    hi_table: GaussTable,
    rel_tol: f64,
    max_splits: u32,
}

impl Adaptive<'_> {
    fn run(&self, cell: &[(f64, f64)], depth: u32, out: &mut Cells) {
        let mut f = |x: &[f64]| self.integrand.eval(x);
        let coarse = tensor_gauss(cell, &self.lo_table, &mut f);
        let fine = tensor_gauss(cell, &self.hi_table, &mut f);
        let err = (coarse - fine).abs();
        if err <= self.rel_tol * fine.abs().max(f64::MIN_POSITIVE) || depth >= self.max_splits {
            if depth >= self.max_splits && err > self.rel_tol * fine.abs() {
                out.capped = true;
            }
            out.values.push(fine);
            out.errors.push(err);
            return;
        }
        let widest = cell
            .iter()
            .enumerate()
            .max_by(|a, b| {
                let wa = a.1 .1 - a.1 .0;
                let wb = b.1 .1 - b.1 .0;
                wa.partial_cmp(&wb).unwrap()
            })
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi) = cell[widest];
        let mid = 0.5 * (lo + hi);
        let mut left = cell.to_vec();
        left[widest] = (lo, mid);
        let mut right = cell.to_vec();
        right[widest] = (mid, hi);
        self.run(&left, depth + 1, out);
        self.run(&right, depth + 1, out);
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum AxisSide {
    Pos,
    Neg,
    Both,
}

/// Disjoint cover of `outer \ inner` by boxes, peeling two slabs per axis.
/// `inner` must be contained in `outer`.
fn peel(outer: &[(f64, f64)], inner: &[(f64, f64)]) -> Vec<Vec<(f64, f64)>> {
    let n = outer.len();
    let mut boxes = Vec::new();
    for t in 0..n {
        let mut base: Vec<(f64, f64)> = Vec::with_capacity(n);
        base.extend_from_slice(&inner[..t]);
        base.push((0.0, 0.0)); // placeholder for axis t
        base.extend_from_slice(&outer[t + 1..]);
        if outer[t].0 < inner[t].0 {
            let mut b = base.clone();
            b[t] = (outer[t].0, inner[t].0);
            boxes.push(b);
        }
        if inner[t].1 < outer[t].1 {
            let mut b = base;
            b[t] = (inner[t].1, outer[t].1);
            boxes.push(b);
        }
    }
    boxes
}

fn corner_shape(axes: &[(f64, f64)]) -> Vec<AxisSide> {
    axes.iter()
        .map(|&(lo, hi)| {
            if lo == 0.0 {
                AxisSide::Pos
            } else if hi == 0.0 {
                AxisSide::Neg
            } else {
                AxisSide::Both
            }
        })
        .collect()
}

fn shape_box(shape: &[AxisSide], radius: f64) -> Vec<(f64, f64)> {
    shape
        .iter()
        .map(|s| match s {
            AxisSide::Pos => (0.0, radius),
            AxisSide::Neg => (-radius, 0.0),
            AxisSide::Both => (-radius, radius),
        })
        .collect()
}

/// Integrates `|diag(scales) x|^e` over the flattened box.
pub(crate) fn integrate_scaled_power(
    axes: &[(f64, f64)],
    e: f64,
    scales: &[f64],
    cfg: &QuadConfig,
) -> Result<Quadrature, QuadError> {
    assert_eq!(axes.len(), scales.len());
    let dim = axes.len() as u32;
    if axes.iter().any(|&(lo, hi)| hi <= lo || lo.is_nan() || hi.is_nan()) {
        return Err(QuadError::BadRectangle("empty axis interval".into()));
    }
    let volume: f64 = axes.iter().map(|&(lo, hi)| hi - lo).product();
    if e == 0.0 {
        return Ok(Quadrature {
            value: volume,
            error_estimate: 0.0,
        });
    }

    let order = cfg.gauss_order.max(2);
    let adaptive = Adaptive {
        integrand: PowerIntegrand { e, scales },
        lo_table: gauss_legendre(order),
        hi_table: gauss_legendre(order + 4),
        rel_tol: cfg.rel_tol,
        max_splits: cfg.max_depth * dim + 16,
    };

    let touches = axes.iter().all(|&(lo, hi)| lo <= 0.0 && 0.0 <= hi);
    let mut cells = Cells {
        values: Vec::new(),
        errors: Vec::new(),
        capped: false,
    };
    let mut corner = 0.0;
    let mut corner_err = 0.0;

    if touches {
        if e <= -(dim as f64) {
            return Err(QuadError::NonIntegrable {
                exponent: e,
                dim,
            });
        }
        // Largest corner radius whose clipped box is a scaled copy of the
        // unit corner shape.
        let d_min = axes
            .iter()
            .flat_map(|&(lo, hi)| [lo.abs(), hi.abs()])
            .filter(|&d| d > 0.0)
            .fold(f64::INFINITY, f64::min);
        let rho = pow2_at_most(d_min);
        let shape = corner_shape(axes);
        let unit = shape_box(&shape, 1.0);
        let half = shape_box(&shape, 0.5);
        // Geometric series over dyadic max-norm annuli: the integrand is
        // homogeneous of degree e, so the corner integral is the annulus
        // integral divided by 1 - 2^{-(dim+e)}.
        let mut shell_cells = Cells {
            values: Vec::new(),
            errors: Vec::new(),
            capped: false,
        };
        for b in peel(&unit, &half) {
            adaptive.run(&b, 0, &mut shell_cells);
        }
        let theta = 0.5f64.powf(dim as f64 + e);
        let shell_value = pairwise_sum(&shell_cells.values);
        let shell_err = pairwise_sum(&shell_cells.errors);
        let unit_corner = shell_value / (1.0 - theta);
        let unit_corner_err = shell_err / (1.0 - theta);
        let scale_pow = rho.powf(dim as f64 + e);
        corner = scale_pow * unit_corner;
        corner_err = scale_pow * unit_corner_err;
        cells.capped |= shell_cells.capped;

        let inner = shape_box(&shape, rho);
        for b in peel(axes, &inner) {
            adaptive.run(&b, 0, &mut cells);
        }
    } else {
        adaptive.run(axes, 0, &mut cells);
    }

    let value = pairwise_sum(&cells.values) + corner;
    let error_estimate = pairwise_sum(&cells.errors) + corner_err;
    if cells.capped && error_estimate > cfg.rel_tol * value.abs() {
        return Err(QuadError::ToleranceNotMet {
            value,
            error: error_estimate,
        });
    }
    Ok(Quadrature {
        value,
        error_estimate,
    })
}

/// Integrates `|x|^e` over the rectangle, `|x|` the Euclidean norm on the
/// full product space.
pub fn integrate_power_over_rect(
    rect: &Rectangle,
    e: f64,
    cfg: &QuadConfig,
) -> Result<Quadrature, QuadError> {
    let axes = rect.flat_intervals();
    let scales = vec![1.0; axes.len()];
    integrate_scaled_power(&axes, e, &scales, cfg)
}

// ---------------------------------------------------------------------------
// Monte Carlo oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

fn sample_uniform(rng: &mut ChaCha8Rng, cell: &[(f64, f64)], x: &mut [f64]) {
    for (t, &(lo, hi)) in cell.iter().enumerate() {
        x[t] = lo + (hi - lo) * rng.gen::<f64>();
    }
}

/// Unbiased Monte Carlo estimate of the same integral, stratified over
/// dyadic max-norm annuli when the integrand is singular inside the box.
pub fn mc_integrate_power(
    rect: &Rectangle,
    e: f64,
    samples: u64,
    seed: u64,
) -> Result<McEstimate, QuadError> {
    let axes = rect.flat_intervals();
    let dim = axes.len() as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let touches = axes.iter().all(|&(lo, hi)| lo <= 0.0 && 0.0 <= hi);
    if touches && e <= -(dim as f64) {
        return Err(QuadError::NonIntegrable { exponent: e, dim });
    }
    let norm_pow = |x: &[f64]| -> f64 {
        let sq: f64 = x.iter().map(|v| v * v).sum();
        sq.powf(0.5 * e)
    };

    if !touches || e >= 0.0 {
        let vol: f64 = axes.iter().map(|&(lo, hi)| hi - lo).product();
        let n = samples.max(2);
        let mut x = vec![0.0; axes.len()];
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            sample_uniform(&mut rng, &axes, &mut x);
            let f = norm_pow(&x);
            sum += f;
            sumsq += f * f;
        }
        let nf = n as f64;
        let mean = sum / nf;
        let var = (sumsq / nf - mean * mean).max(0.0) / (nf - 1.0);
        return Ok(McEstimate {
            estimate: vol * mean,
            stderr: vol * var.sqrt(),
        });
    }

    // Singular case: uniform strata on the peel boxes outside the corner,
    // annulus-profile importance sampling inside it.
    let d_min = axes
        .iter()
        .flat_map(|&(lo, hi)| [lo.abs(), hi.abs()])
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min);
    let rho = pow2_at_most(d_min);
    let shape = corner_shape(&axes);
    let corner_box = shape_box(&shape, rho);
    let peel_boxes = peel(&axes, &corner_box);
    let shell0 = peel(&shape_box(&shape, rho), &shape_box(&shape, rho * 0.5));
    let shell0_vols: Vec<f64> = shell0
        .iter()
        .map(|b| b.iter().map(|&(lo, hi)| hi - lo).product())
        .collect();
    let shell0_vol: f64 = shell0_vols.iter().sum();
    let theta = 0.5f64.powf(dim as f64 + e);

    // Crude per-stratum contribution guesses drive the allocation.
    let mut guesses: Vec<f64> = peel_boxes
        .iter()
        .map(|b| {
            let mid: Vec<f64> = b.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect();
            let vol: f64 = b.iter().map(|&(lo, hi)| hi - lo).product();
            norm_pow(&mid) * vol
        })
        .collect();
    guesses.push(shell0_vol * rho.powf(e) / (1.0 - theta));
    let guess_total: f64 = guesses.iter().sum();
    let strata = guesses.len();
    let min_per = 64u64;
    let budget = samples.max(min_per * strata as u64);
    let alloc: Vec<u64> = guesses
        .iter()
        .map(|g| ((budget as f64 * g / guess_total) as u64).max(min_per))
        .collect();

    let mut estimate = 0.0;
    let mut variance = 0.0;
    let mut x = vec![0.0; axes.len()];

    for (j, b) in peel_boxes.iter().enumerate() {
        let vol: f64 = b.iter().map(|&(lo, hi)| hi - lo).product();
        let n = alloc[j];
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            sample_uniform(&mut rng, b, &mut x);
            let f = norm_pow(&x);
            sum += f;
            sumsq += f * f;
        }
        let nf = n as f64;
        let mean = sum / nf;
        let var = (sumsq / nf - mean * mean).max(0.0) / (nf - 1.0);
        estimate += vol * mean;
        variance += vol * vol * var;
    }

    // Corner stratum. The integral over each deeper annulus is theta times
    // the previous one by homogeneity, so the whole corner equals the outer
    // annulus integral divided by 1 - theta. Sampling the outer annulus
    // uniformly therefore gives an unbiased corner estimate with the bounded
    // weight f(x) * V0 / (1 - theta).
    {
        let n = *alloc.last().unwrap();
        let weight_scale = shell0_vol / (1.0 - theta);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let mut pick = rng.gen::<f64>() * shell0_vol;
            let mut idx = 0;
            for (k, v) in shell0_vols.iter().enumerate() {
                if pick < *v {
                    idx = k;
                    break;
                }
                pick -= v;
                idx = k;
            }
            sample_uniform(&mut rng, &shell0[idx], &mut x);
            let w = weight_scale * norm_pow(&x);
            sum += w;
            sumsq += w * w;
        }
        let nf = n as f64;
        let mean = sum / nf;
        let var = (sumsq / nf - mean * mean).max(0.0) / (nf - 1.0);
        estimate += mean;
        variance += var;
    }

    Ok(McEstimate {
        estimate,
        stderr: variance.sqrt(),
    })
}

// ---------------------------------------------------------------------------
// Weight averages
// ---------------------------------------------------------------------------

/// The two bracketed factors of the bumped characteristic:
/// `W_omega = (avg_Q |x|^{-gamma q r})^{1/(q r)}` and
/// `W_sigma = (avg_Q |x|^{-delta p r/(p-1)})^{(p-1)/(p r)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightAverages {
    pub w_omega: f64,
    pub w_sigma: f64,
    pub err_omega: f64,
    pub err_sigma: f64,
}

pub fn weight_averages(
    rect: &Rectangle,
    inst: &Instance,
    r: &Rational,
    cfg: &QuadConfig,
) -> Result<WeightAverages, QuadError> {
    let r_f = to_f64(r);
    if r_f < 1.0 {
        return Err(QuadError::InvalidBump(r_f));
    }
    let total_dim = inst.space().total_dim();
    let exp_omega = -(inst.gamma() * inst.q() * r);
    let exp_sigma = -(inst.delta() * inst.p() * r / (inst.p() - rat_one()));
    let touches = rect.touches_origin();
    let n_rat = rat_int(total_dim as i64);
    if touches && -exp_omega.clone() >= n_rat {
        return Err(QuadError::WeightNotIntegrable {
            factor: WeightFactor::Omega,
            source: Box::new(QuadError::NonIntegrable {
                exponent: to_f64(&exp_omega),
                dim: total_dim,
            }),
        });
    }
    if touches && -exp_sigma.clone() >= n_rat {
        return Err(QuadError::WeightNotIntegrable {
            factor: WeightFactor::Sigma,
            source: Box::new(QuadError::NonIntegrable {
                exponent: to_f64(&exp_sigma),
                dim: total_dim,
            }),
        });
    }

    let vol = rect.volume();
    let avg_pow = |exp: &Rational, outer: f64, factor: WeightFactor| -> Result<(f64, f64), QuadError> {
        if exp.is_zero() {
            return Ok((1.0, 0.0));
        }
        let q = integrate_power_over_rect(rect, to_f64(exp), cfg).map_err(|e| {
            QuadError::WeightNotIntegrable {
                factor,
                source: Box::new(e),
            }
        })?;
        let avg = q.value / vol;
        let w = avg.powf(outer);
        let rel = if q.value > 0.0 {
            q.error_estimate / q.value
        } else {
            0.0
        };
        Ok((w, w * outer.abs() * rel))
    };

    let outer_omega = to_f64(&(inst.q() * r).recip());
    let outer_sigma = to_f64(&((inst.p() - rat_one()) / (inst.p() * r)));
    let (w_omega, err_omega) = avg_pow(&exp_omega, outer_omega, WeightFactor::Omega)?;
    let (w_sigma, err_sigma) = avg_pow(&exp_sigma, outer_sigma, WeightFactor::Sigma)?;
    Ok(WeightAverages {
        w_omega,
        w_sigma,
        err_omega,
        err_sigma,
    })
}
