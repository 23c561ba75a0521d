//! Grid discretization of the strong fractional integral operator.
//!
//! The operator convolves against the product kernel
//! `prod_i |x_i - y_i|^{alpha_i - N_i}`; on a uniform grid the diagonal cell
//! of each factor is replaced by the analytic cell average so the kernel
//! table stays finite. The same table backs three application routes: the
//! direct double sum, the separable per-factor convolution passes (identical
//! up to float reassociation), and the cone-restricted partial sums of the
//! dyadic decomposition.

use std::io::{Read as _, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::param::{Instance, ProductSpace};
use crate::quad::{integrate_scaled_power, QuadConfig, QuadError};
use crate::rational::{rat_int, to_f64};
use crate::util::{fit_line, pairwise_sum};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("grid does not match the instance's product space")]
    SpaceMismatch,
    #[error("bad grid: {0}")]
    BadGrid(String),
    #[error("grid function values must be finite and nonnegative")]
    NegativeValues,
    #[error("value buffer has wrong length: got {got}, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("input function is identically zero")]
    DegenerateInput,
    #[error("all per-factor displacements vanish")]
    ZeroDisplacement,
    #[error("cone index must vanish at the pivot")]
    BadConeIndex,
    #[error("weight |x|^{exponent} is not locally integrable on the grid (needs exponent > -{dim})")]
    WeightNotIntegrable { exponent: f64, dim: u32 },
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("file format: {0}")]
    Format(String),
}

// ---------------------------------------------------------------------------
// Grid and grid functions
// ---------------------------------------------------------------------------

/// Uniform symmetric 1-d sample set shared by all axes of one factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub points: usize,
    pub extent: f64,
    /// Aligned grids (odd point count) contain 0 exactly; offset grids
    /// (even point count) are cell-centered and avoid it.
    pub aligned: bool,
}

impl GridAxis {
    pub fn spacing(&self) -> f64 {
        if self.aligned {
            2.0 * self.extent / (self.points - 1) as f64
        } else {
            2.0 * self.extent / self.points as f64
        }
    }

    pub fn coord(&self, k: usize) -> f64 {
        if self.aligned {
            -self.extent + k as f64 * self.spacing()
        } else {
            -self.extent + (k as f64 + 0.5) * self.spacing()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    space: ProductSpace,
    axes: Vec<GridAxis>,
}

impl Grid {
    /// Cell-centered grid; `points` must be even so 0 falls between samples.
    pub fn offset(space: &ProductSpace, points: usize, extent: f64) -> Result<Self, OperatorError> {
        if points < 2 || !points.is_multiple_of(2) {
            return Err(OperatorError::BadGrid(format!(
                "offset grids need an even point count >= 2, got {points}"
            )));
        }
        Self::build(space, points, extent, false)
    }

    /// Node-aligned grid; `points` must be odd so 0 is a sample.
    pub fn aligned(space: &ProductSpace, points: usize, extent: f64) -> Result<Self, OperatorError> {
        if points < 3 || points % 2 != 1 {
            return Err(OperatorError::BadGrid(format!(
                "aligned grids need an odd point count >= 3, got {points}"
            )));
        }
        Self::build(space, points, extent, true)
    }

    fn build(
        space: &ProductSpace,
        points: usize,
        extent: f64,
        aligned: bool,
    ) -> Result<Self, OperatorError> {
        if extent <= 0.0 || !extent.is_finite() {
            return Err(OperatorError::BadGrid("extent must be positive".into()));
        }
        Ok(Grid {
            space: space.clone(),
            axes: (0..space.factors())
                .map(|_| GridAxis {
                    points,
                    extent,
                    aligned,
                })
                .collect(),
        })
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn axis(&self, factor: usize) -> &GridAxis {
        &self.axes[factor]
    }

    pub fn spacing(&self, factor: usize) -> f64 {
        self.axes[factor].spacing()
    }

    /// Point counts of the flattened scalar axes (factor order, row-major).
    pub fn flat_dims(&self) -> Vec<usize> {
        (0..self.space.factors())
            .flat_map(|i| std::iter::repeat_n(self.axes[i].points, self.space.dim(i) as usize))
            .collect()
    }

    /// Factor owning each flattened scalar axis.
    pub fn axis_factors(&self) -> Vec<usize> {
        (0..self.space.factors())
            .flat_map(|i| std::iter::repeat_n(i, self.space.dim(i) as usize))
            .collect()
    }

    pub fn total_points(&self) -> usize {
        self.flat_dims().iter().product()
    }

    /// Volume of one grid cell, `prod_i h_i^{N_i}`.
    pub fn cell_volume(&self) -> f64 {
        (0..self.space.factors())
            .map(|i| self.spacing(i).powi(self.space.dim(i) as i32))
            .product()
    }

    /// Coordinates of the flattened point `index`.
    pub fn point(&self, index: usize) -> Vec<f64> {
        let dims = self.flat_dims();
        let factors = self.axis_factors();
        let mut rem = index;
        let mut out = vec![0.0; dims.len()];
        for a in (0..dims.len()).rev() {
            let k = rem % dims[a];
            rem /= dims[a];
            out[a] = self.axes[factors[a]].coord(k);
        }
        out
    }

    fn multi_indices(&self) -> Vec<u16> {
        let dims = self.flat_dims();
        let total = self.total_points();
        let n = dims.len();
        let mut flat = vec![0u16; total * n];
        let mut idx = vec![0usize; n];
        for p in 0..total {
            for a in 0..n {
                flat[p * n + a] = idx[a] as u16;
            }
            let mut a = n;
            while a > 0 {
                a -= 1;
                idx[a] += 1;
                if idx[a] < dims[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        flat
    }
}

/// Nonnegative sampled function on a product grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, OperatorError> {
        let expected = grid.total_points();
        if values.len() != expected {
            return Err(OperatorError::LengthMismatch {
                got: values.len(),
                expected,
            });
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(OperatorError::NegativeValues);
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self, OperatorError> {
        let values: Vec<f64> = (0..grid.total_points())
            .map(|p| f(&grid.point(p)))
            .collect();
        GridFunction::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

// ---------------------------------------------------------------------------
// Kernel tables
// ---------------------------------------------------------------------------

/// Per-factor kernel lookup over absolute index displacements. Entry 0 (all
/// axes coincide) holds the analytic cell average of `|u|^{alpha_i - N_i}`.
struct KernelTable {
    dims: Vec<usize>,
    values: Vec<f64>,
}

impl KernelTable {
    fn flat(&self, abs_idx: &[usize]) -> f64 {
        let mut pos = 0;
        for (a, &k) in abs_idx.iter().enumerate() {
            pos = pos * self.dims[a] + k;
        }
        self.values[pos]
    }
}

fn kernel_tables(inst: &Instance, grid: &Grid) -> Result<Vec<KernelTable>, OperatorError> {
    let mut tables = Vec::new();
    let quad_cfg = QuadConfig {
        rel_tol: 1e-12,
        ..QuadConfig::default()
    };
    for i in 0..inst.space().factors() {
        let nf = inst.space().dim(i) as usize;
        let pts = grid.axis(i).points;
        let h = grid.spacing(i);
        let exp = to_f64(&(inst.alpha(i) - rat_int(nf as i64)));
        let dims = vec![pts; nf];
        let total: usize = dims.iter().product();
        let mut values = vec![0.0; total];
        let mut idx = vec![0usize; nf];
        for v in values.iter_mut() {
            if idx.iter().all(|&k| k == 0) {
                let cell: Vec<(f64, f64)> = (0..nf).map(|_| (-0.5 * h, 0.5 * h)).collect();
                let scales = vec![1.0; nf];
                let q = integrate_scaled_power(&cell, exp, &scales, &quad_cfg)?;
                *v = q.value / h.powi(nf as i32);
            } else {
                let d2: f64 = idx.iter().map(|&k| (k as f64 * h).powi(2)).sum();
                *v = d2.powf(0.5 * exp);
            }
            let mut a = nf;
            while a > 0 {
                a -= 1;
                idx[a] += 1;
                if idx[a] < pts {
                    break;
                }
                idx[a] = 0;
            }
        }
        tables.push(KernelTable { dims, values });
    }
    Ok(tables)
}

fn check_space(inst: &Instance, grid: &Grid) -> Result<(), OperatorError> {
    if inst.space() != grid.space() {
        return Err(OperatorError::SpaceMismatch);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Direct and separable application
// ---------------------------------------------------------------------------

/// Direct double sum `(I f)(x) = h^N sum_y f(y) prod_i K_i(x_i - y_i)`.
pub fn apply_direct(f: &GridFunction, inst: &Instance) -> Result<GridFunction, OperatorError> {
    let grid = f.grid();
    check_space(inst, grid)?;
    let tables = kernel_tables(inst, grid)?;
    let dims = grid.flat_dims();
    let n_axes = dims.len();
    let factors = grid.axis_factors();
    let mi = grid.multi_indices();
    let total = grid.total_points();
    let cell_vol = grid.cell_volume();

    // Axis range per factor in the flattened layout.
    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut a = 0;
    for i in 0..inst.space().factors() {
        let nf = inst.space().dim(i) as usize;
        spans.push((a, a + nf));
        a += nf;
    }

    let mut out = vec![0.0; total];
    let mut abs_idx = vec![0usize; n_axes];
    for (x, out_x) in out.iter_mut().enumerate() {
        let xi = &mi[x * n_axes..(x + 1) * n_axes];
        let mut acc = 0.0;
        for y in 0..total {
            let fy = f.values[y];
            if fy == 0.0 {
                continue;
            }
            let yi = &mi[y * n_axes..(y + 1) * n_axes];
            for t in 0..n_axes {
                abs_idx[t] = (xi[t] as isize - yi[t] as isize).unsigned_abs();
            }
            let mut k = 1.0;
            for (i, &(s0, s1)) in spans.iter().enumerate() {
                k *= tables[i].flat(&abs_idx[s0..s1]);
            }
            acc += fy * k;
        }
        *out_x = acc * cell_vol;
        let _ = factors;
    }
    GridFunction::new(grid.clone(), out)
}

/// Same sum reassociated into successive per-factor convolutions.
pub fn apply_separable(f: &GridFunction, inst: &Instance) -> Result<GridFunction, OperatorError> {
    let grid = f.grid();
    check_space(inst, grid)?;
    let tables = kernel_tables(inst, grid)?;
    let dims = grid.flat_dims();
    let mut current = f.values().to_vec();

    let mut axis_start = 0usize;
    for (i, table) in tables.iter().enumerate() {
        let nf = inst.space().dim(i) as usize;
        let block_dims = &dims[axis_start..axis_start + nf];
        let block: usize = block_dims.iter().product();
        let inner: usize = dims[axis_start + nf..].iter().product();
        let outer: usize = dims[..axis_start].iter().product();
        let h_pow = grid.spacing(i).powi(nf as i32);

        let mut next = vec![0.0; current.len()];
        let mut xb_idx = vec![0usize; nf];
        let mut yb_idx = vec![0usize; nf];
        let mut abs_idx = vec![0usize; nf];
        for o in 0..outer {
            for inn in 0..inner {
                let base = o * block * inner + inn;
                // Convolve the factor block at stride `inner`.
                xb_idx.iter_mut().for_each(|v| *v = 0);
                for xb in 0..block {
                    let mut acc = 0.0;
                    yb_idx.iter_mut().for_each(|v| *v = 0);
                    for yb in 0..block {
                        let v = current[base + yb * inner];
                        if v != 0.0 {
                            for t in 0..nf {
                                abs_idx[t] =
                                    (xb_idx[t] as isize - yb_idx[t] as isize).unsigned_abs();
                            }
                            acc += v * table.flat(&abs_idx);
                        }
                        let mut t = nf;
                        while t > 0 {
                            t -= 1;
                            yb_idx[t] += 1;
                            if yb_idx[t] < block_dims[t] {
                                break;
                            }
                            yb_idx[t] = 0;
                        }
                    }
                    next[base + xb * inner] = acc * h_pow;
                    let mut t = nf;
                    while t > 0 {
                        t -= 1;
                        xb_idx[t] += 1;
                        if xb_idx[t] < block_dims[t] {
                            break;
                        }
                        xb_idx[t] = 0;
                    }
                }
            }
        }
        current = next;
        axis_start += nf;
    }
    GridFunction::new(grid.clone(), current)
}

// ---------------------------------------------------------------------------
// Weighted norms and ratios
// ---------------------------------------------------------------------------

/// Pointwise weight `|x|^{exponent}` with analytic cell averages on the grid
/// cells whose closure contains the origin.
pub(crate) fn weight_samples(grid: &Grid, exponent: f64) -> Result<Vec<f64>, OperatorError> {
    let dim = grid.space().total_dim();
    if exponent <= -(dim as f64) {
        return Err(OperatorError::WeightNotIntegrable {
            exponent,
            dim,
        });
    }
    let total = grid.total_points();
    let factors = grid.axis_factors();
    let quad_cfg = QuadConfig {
        rel_tol: 1e-12,
        ..QuadConfig::default()
    };
    let mut out = vec![0.0; total];
    for (p, out_p) in out.iter_mut().enumerate() {
        let x = grid.point(p);
        let half: Vec<f64> = factors.iter().map(|&i| 0.5 * grid.spacing(i)).collect();
        let origin_cell = x.iter().zip(&half).all(|(c, h)| c.abs() <= *h + 1e-12 * h);
        if exponent == 0.0 {
            *out_p = 1.0;
        } else if origin_cell {
            let cell: Vec<(f64, f64)> = x
                .iter()
                .zip(&half)
                .map(|(c, h)| (c - h, c + h))
                .collect();
            let scales = vec![1.0; cell.len()];
            let q = integrate_scaled_power(&cell, exponent, &scales, &quad_cfg)?;
            let vol: f64 = cell.iter().map(|(lo, hi)| hi - lo).product();
            *out_p = q.value / vol;
        } else {
            let sq: f64 = x.iter().map(|c| c * c).sum();
            *out_p = sq.powf(0.5 * exponent);
        }
    }
    Ok(out)
}

/// `|| omega g ||_q` with `omega = |x|^{-gamma}` on the grid.
pub fn weighted_output_norm(g: &GridFunction, inst: &Instance) -> Result<f64, OperatorError> {
    check_space(inst, g.grid())?;
    let q = to_f64(inst.q());
    let w = weight_samples(g.grid(), to_f64(&-(inst.gamma() * inst.q())))?;
    let cell_vol = g.grid().cell_volume();
    let terms: Vec<f64> = g
        .values()
        .iter()
        .zip(&w)
        .map(|(v, w)| w * v.powf(q) * cell_vol)
        .collect();
    Ok(pairwise_sum(&terms).powf(1.0 / q))
}

/// `|| f sigma ||_p` with `sigma = |x|^{delta}` on the grid.
pub fn weighted_input_norm(f: &GridFunction, inst: &Instance) -> Result<f64, OperatorError> {
    check_space(inst, f.grid())?;
    let p = to_f64(inst.p());
    let w = weight_samples(f.grid(), to_f64(&(inst.delta() * inst.p())))?;
    let cell_vol = f.grid().cell_volume();
    let terms: Vec<f64> = f
        .values()
        .iter()
        .zip(&w)
        .map(|(v, w)| w * v.powf(p) * cell_vol)
        .collect();
    Ok(pairwise_sum(&terms).powf(1.0 / p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedRatio {
    pub ratio: f64,
    pub numerator: f64,
    pub denominator: f64,
}

/// Discrete operator norm ratio `|| omega I f ||_q / || f sigma ||_p`.
pub fn weighted_ratio(f: &GridFunction, inst: &Instance) -> Result<WeightedRatio, OperatorError> {
    if f.is_zero() {
        return Err(OperatorError::DegenerateInput);
    }
    let image = apply_separable(f, inst)?;
    let numerator = weighted_output_norm(&image, inst)?;
    let denominator = weighted_input_norm(f, inst)?;
    if denominator == 0.0 || !denominator.is_finite() {
        return Err(OperatorError::DegenerateInput);
    }
    Ok(WeightedRatio {
        ratio: numerator / denominator,
        numerator,
        denominator,
    })
}

// ---------------------------------------------------------------------------
// Dyadic cones
// ---------------------------------------------------------------------------

/// Classifies per-factor displacements into the dyadic cone with pivot `nu`:
/// `t_i` is the band with `2^{-t_i-1} <= dx_i/dx_nu < 2^{-t_i}`, except the
/// top band `t_i = 0` which is the closed `[1/2, 1]`. Returns `None` when a
/// ratio exceeds 1, vanishes, or the pivot displacement is zero.
pub fn cone_index(dx: &[f64], nu: usize) -> Result<Option<Vec<u32>>, OperatorError> {
    if dx.iter().all(|&d| d == 0.0) {
        return Err(OperatorError::ZeroDisplacement);
    }
    assert!(nu < dx.len(), "pivot out of range");
    let base = dx[nu];
    if base == 0.0 {
        return Ok(None);
    }
    let mut t = vec![0u32; dx.len()];
    for (i, &d) in dx.iter().enumerate() {
        if i == nu {
            continue;
        }
        let ratio = d / base;
        if ratio > 1.0 || ratio == 0.0 {
            return Ok(None);
        }
        if ratio >= 0.5 {
            t[i] = 0;
        } else {
            let mut k = (-(ratio.log2())).ceil() as i64 - 1;
            if k < 1 {
                k = 1;
            }
            while 2f64.powi(-(k as i32)) <= ratio {
                k -= 1;
            }
            while 2f64.powi(-(k as i32) - 1) > ratio {
                k += 1;
            }
            t[i] = k as u32;
        }
    }
    Ok(Some(t))
}

/// Per-factor Euclidean displacements of a grid pair, with exact zeros
/// replaced by the half-spacing (the scale of the diagonal cell the kernel
/// table averages over).
fn effective_displacements(
    grid: &Grid,
    xi: &[u16],
    yi: &[u16],
    spans: &[(usize, usize)],
) -> Vec<f64> {
    spans
        .iter()
        .enumerate()
        .map(|(i, &(s0, s1))| {
            let h = grid.spacing(i);
            let d2: f64 = (s0..s1)
                .map(|a| {
                    let d = (xi[a] as isize - yi[a] as isize) as f64 * h;
                    d * d
                })
                .sum();
            if d2 == 0.0 {
                0.5 * h
            } else {
                d2.sqrt()
            }
        })
        .collect()
}

fn factor_spans(space: &ProductSpace) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut a = 0;
    for i in 0..space.factors() {
        let nf = space.dim(i) as usize;
        spans.push((a, a + nf));
        a += nf;
    }
    spans
}

/// Direct sum restricted to pairs classified into the cone `(nu, t)`.
pub fn apply_cone_partial(
    f: &GridFunction,
    inst: &Instance,
    nu: usize,
    t: &[u32],
) -> Result<GridFunction, OperatorError> {
    let grid = f.grid();
    check_space(inst, grid)?;
    if t.len() != inst.space().factors() || t[nu] != 0 {
        return Err(OperatorError::BadConeIndex);
    }
    let tables = kernel_tables(inst, grid)?;
    let dims = grid.flat_dims();
    let n_axes = dims.len();
    let mi = grid.multi_indices();
    let total = grid.total_points();
    let cell_vol = grid.cell_volume();
    let spans = factor_spans(inst.space());

    let mut out = vec![0.0; total];
    let mut abs_idx = vec![0usize; n_axes];
    for (x, out_x) in out.iter_mut().enumerate() {
        let xi = &mi[x * n_axes..(x + 1) * n_axes];
        let mut acc = 0.0;
        for y in 0..total {
            let fy = f.values[y];
            if fy == 0.0 {
                continue;
            }
            let yi = &mi[y * n_axes..(y + 1) * n_axes];
            let dx = effective_displacements(grid, xi, yi, &spans);
            match cone_index(&dx, nu)? {
                Some(idx) if idx == t => {}
                _ => continue,
            }
            for a in 0..n_axes {
                abs_idx[a] = (xi[a] as isize - yi[a] as isize).unsigned_abs();
            }
            let mut k = 1.0;
            for (i, &(s0, s1)) in spans.iter().enumerate() {
                k *= tables[i].flat(&abs_idx[s0..s1]);
            }
            acc += fy * k;
        }
        *out_x = acc * cell_vol;
    }
    GridFunction::new(grid.clone(), out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverStats {
    pub min_cover: usize,
    pub max_cover: usize,
}

/// Counts, for every ordered grid pair `x != y`, the number of `(nu, t)`
/// cones containing it.
pub fn cone_cover_check(grid: &Grid) -> Result<CoverStats, OperatorError> {
    let dims = grid.flat_dims();
    let n_axes = dims.len();
    let mi = grid.multi_indices();
    let total = grid.total_points();
    let spans = factor_spans(grid.space());
    let pivots = grid.space().factors();

    let mut min_cover = usize::MAX;
    let mut max_cover = 0usize;
    for x in 0..total {
        let xi = &mi[x * n_axes..(x + 1) * n_axes];
        for y in 0..total {
            if x == y {
                continue;
            }
            let yi = &mi[y * n_axes..(y + 1) * n_axes];
            let dx = effective_displacements(grid, xi, yi, &spans);
            let mut count = 0;
            for nu in 0..pivots {
                if cone_index(&dx, nu)?.is_some() {
                    count += 1;
                }
            }
            min_cover = min_cover.min(count);
            max_cover = max_cover.max(count);
        }
    }
    Ok(CoverStats {
        min_cover,
        max_cover,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeProfile {
    pub pivot: usize,
    /// Per-rung best ratio over the adversarial family; `None` marks rungs
    /// no grid pair realizes.
    pub rungs: Vec<Option<f64>>,
    pub decay_rate: f64,
    pub stderr: f64,
}

/// Weighted ratios of the cone-restricted operator on the ladder
/// `t = (0, k, ..., k)`, with the fitted geometric decay rate.
pub fn per_cone_ratio_profile(
    family: &[GridFunction],
    inst: &Instance,
    nu: usize,
    k_max: u32,
) -> Result<ConeProfile, OperatorError> {
    if family.is_empty() {
        return Err(OperatorError::DegenerateInput);
    }
    let n = inst.space().factors();
    let mut rungs = Vec::new();
    for k in 0..=k_max {
        let mut t = vec![k; n];
        t[nu] = 0;
        let mut best: Option<f64> = None;
        for f in family {
            let image = apply_cone_partial(f, inst, nu, &t)?;
            if image.is_zero() {
                continue;
            }
            let num = weighted_output_norm(&image, inst)?;
            let den = weighted_input_norm(f, inst)?;
            if den > 0.0 {
                let ratio = num / den;
                best = Some(best.map_or(ratio, |b: f64| b.max(ratio)));
            }
        }
        rungs.push(best);
    }
    let xs: Vec<f64> = rungs
        .iter()
        .enumerate()
        .filter_map(|(k, v)| v.map(|_| k as f64))
        .collect();
    let ys: Vec<f64> = rungs.iter().filter_map(|v| v.map(f64::log2)).collect();
    let fit = fit_line(&xs, &ys).ok_or(OperatorError::DegenerateInput)?;
    Ok(ConeProfile {
        pivot: nu,
        rungs,
        decay_rate: -fit.slope,
        stderr: fit.slope_stderr,
    })
}

// ---------------------------------------------------------------------------
// Flat binary I/O
// ---------------------------------------------------------------------------

/// JSON sidecar for the flat little-endian f64 value file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridHeader {
    pub dims: Vec<u32>,
    pub points: Vec<usize>,
    pub extent: Vec<f64>,
    pub spacing: Vec<f64>,
    pub aligned: bool,
    pub count: usize,
}

pub fn write_grid_function(
    gf: &GridFunction,
    bin_path: &Path,
    header_path: &Path,
) -> Result<(), OperatorError> {
    let grid = gf.grid();
    let header = GridHeader {
        dims: grid.space().dims().to_vec(),
        points: (0..grid.space().factors())
            .map(|i| grid.axis(i).points)
            .collect(),
        extent: (0..grid.space().factors())
            .map(|i| grid.axis(i).extent)
            .collect(),
        spacing: (0..grid.space().factors())
            .map(|i| grid.spacing(i))
            .collect(),
        aligned: grid.axis(0).aligned,
        count: gf.values().len(),
    };
    let io_err = |e: std::io::Error| OperatorError::Format(e.to_string());
    let mut bin = std::fs::File::create(bin_path).map_err(io_err)?;
    let mut buf = Vec::with_capacity(gf.values().len() * 8);
    for v in gf.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    bin.write_all(&buf).map_err(io_err)?;
    let json = serde_json::to_string_pretty(&header)
        .map_err(|e| OperatorError::Format(e.to_string()))?;
    std::fs::write(header_path, json).map_err(io_err)?;
    Ok(())
}

pub fn read_grid_function(
    bin_path: &Path,
    header_path: &Path,
) -> Result<GridFunction, OperatorError> {
    let io_err = |e: std::io::Error| OperatorError::Format(e.to_string());
    let header: GridHeader = serde_json::from_str(
        &std::fs::read_to_string(header_path).map_err(io_err)?,
    )
    .map_err(|e| OperatorError::Format(e.to_string()))?;
    let space = ProductSpace::new(header.dims.clone())
        .map_err(|e| OperatorError::Format(e.to_string()))?;
    if header.points.is_empty() || header.points.len() != space.factors() {
        return Err(OperatorError::Format("bad point counts".into()));
    }
    let points = header.points[0];
    let extent = header.extent.first().copied().unwrap_or(0.0);
    if header
        .points
        .iter()
        .any(|&p| p != points)
        || header.extent.iter().any(|&e| e != extent)
    {
        return Err(OperatorError::Format(
            "only uniform per-factor grids are supported".into(),
        ));
    }
    let grid = if header.aligned {
        Grid::aligned(&space, points, extent)?
    } else {
        Grid::offset(&space, points, extent)?
    };
    let mut bin = std::fs::File::open(bin_path).map_err(io_err)?;
    let mut buf = Vec::new();
    bin.read_to_end(&mut buf).map_err(io_err)?;
    if buf.len() != header.count * 8 {
        return Err(OperatorError::Format(format!(
            "value file has {} bytes, expected {}",
            buf.len(),
            header.count * 8
        )));
    }
    let values: Vec<f64> = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    GridFunction::new(grid, values)
}

// ---------------------------------------------------------------------------
// Canned test functions
// ---------------------------------------------------------------------------

/// Smooth product bump `prod_a max(0, 1 - (x_a/width)^2)^2`, supported on the
/// centered cube of half-width `width`.
pub fn product_bump(grid: &Grid, width: f64) -> Result<GridFunction, OperatorError> {
    GridFunction::from_fn(grid.clone(), |x| {
        x.iter()
            .map(|&c| {
                let u = c / width;
                let s = 1.0 - u * u;
                if s > 0.0 {
                    s * s
                } else {
                    0.0
                }
            })
            .product()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    
    use crate::rational::rat;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn inst2(
        alpha: &[(i64, i64)],
        p: (i64, i64),
        q: (i64, i64),
        gamma: (i64, i64),
        delta: (i64, i64),
    ) -> Instance {
        Instance::new(
            vec![1, 1],
            alpha.iter().map(|&(n, d)| rat(n, d)).collect(),
            rat(p.0, p.1),
            rat(q.0, q.1),
            rat(gamma.0, gamma.1),
            rat(delta.0, delta.1),
        )
        .unwrap()
    }

    fn random_function(grid: &Grid, seed: u64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..grid.total_points()).map(|_| rng.gen::<f64>()).collect();
        GridFunction::new(grid.clone(), values).unwrap()
    }

    #[test]
    fn grid_offset_avoids_zero_aligned_contains_it() {
        let space = ProductSpace::new(vec![1, 1]).unwrap();
        let off = Grid::offset(&space, 16, 4.0).unwrap();
        assert!((0..16).all(|k| off.axis(0).coord(k) != 0.0));
        let ali = Grid::aligned(&space, 17, 4.0).unwrap();
        assert!((0..17).any(|k| ali.axis(0).coord(k) == 0.0));
        assert_eq!(off.total_points(), 256);
    }

    #[test]
    fn zero_function_maps_to_zero() {
        let i = inst2(&[(3, 5), (1, 5)], (2, 1), (2, 1), (0, 1), (0, 1));
        let grid = Grid::offset(i.space(), 8, 2.0).unwrap();
        let f = GridFunction::new(grid.clone(), vec![0.0; grid.total_points()]).unwrap();
        let out = apply_direct(&f, &i).unwrap();
        assert!(out.is_zero());
    }

    #[test]
    fn far_field_kernel_value() {
        let i = inst2(&[(7, 10), (3, 5)], (2, 1), (2, 1), (0, 1), (0, 1));
        let grid = Grid::offset(i.space(), 64, 2.0).unwrap();
        let h = grid.spacing(0);
        // Unit mass in the cell just above the origin in both axes.
        let mut values = vec![0.0; grid.total_points()];
        let k0 = 32; // coordinate h/2
        values[k0 * 64 + k0] = 1.0;
        let f = GridFunction::new(grid.clone(), values).unwrap();
        let out = apply_direct(&f, &i).unwrap();
        let y = grid.axis(0).coord(k0);
        for probe in [(56usize, 52usize), (52, 58), (60, 60)] {
            let x1 = grid.axis(0).coord(probe.0);
            let x2 = grid.axis(1).coord(probe.1);
            assert!(x1 - y >= 10.0 * h && x2 - y >= 10.0 * h);
            let got = out.values()[probe.0 * 64 + probe.1];
            let expect = h * h * x1.abs().powf(0.7 - 1.0) * x2.abs().powf(0.6 - 1.0);
            assert!(
                ((got - expect) / expect).abs() < 0.02,
                "probe {probe:?}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn image_even_when_input_even() {
        let i = inst2(&[(3, 5), (1, 5)], (2, 1), (2, 1), (0, 1), (0, 1));
        let grid = Grid::offset(i.space(), 16, 2.0).unwrap();
        let f = GridFunction::from_fn(grid.clone(), |x| {
            (-(x[0] * x[0] + 0.5 * x[1] * x[1])).exp()
        })
        .unwrap();
        let out = apply_direct(&f, &i).unwrap();
        let p = 16usize;
        for a in 0..p {
            for b in 0..p {
                let v = out.values()[a * p + b];
                let m = out.values()[(p - 1 - a) * p + b];
                assert!((v - m).abs() <= 1e-12 * v.abs().max(m.abs()));
            }
        }
    }

    #[test]
    fn separable_matches_direct() {
        let i = inst2(&[(3, 5), (1, 5)], (2, 1), (2, 1), (0, 1), (0, 1));
        let grid = Grid::offset(i.space(), 18, 2.0).unwrap();
        let f = random_function(&grid, 11);
        let a = apply_direct(&f, &i).unwrap();
        let b = apply_separable(&f, &i).unwrap();
        let max_rel = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).abs() / x.abs().max(1e-300))
            .fold(0.0f64, f64::max);
        assert!(max_rel <= 1e-10, "max rel deviation {max_rel}");
    }

    #[test]
    fn single_factor_routes_agree() {
        let i = Instance::new(
            vec![1],
            vec![rat(1, 2)],
            rat(2, 1),
            rat(2, 1),
            rat(0, 1),
            rat(0, 1),
        )
        .unwrap();
        let grid = Grid::offset(i.space(), 32, 2.0).unwrap();
        let f = random_function(&grid, 3);
        let a = apply_direct(&f, &i).unwrap();
        let b = apply_separable(&f, &i).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-12 * x.abs());
        }
    }

    #[test]
    fn monotone_in_the_input() {
        let i = inst2(&[(3, 5), (1, 5)], (2, 1), (2, 1), (0, 1), (0, 1));
        let grid = Grid::offset(i.space(), 12, 2.0).unwrap();
        let f = random_function(&grid, 5);
        let g_vals: Vec<f64> = f.values().iter().map(|v| v * 0.5).collect();
        let g = GridFunction::new(grid.clone(), g_vals).unwrap();
        let fi = apply_direct(&f, &i).unwrap();
        let gi = apply_direct(&g, &i).unwrap();
        assert!(fi
            .values()
            .iter()
            .zip(gi.values())
            .all(|(a, b)| a >= b));
    }

    #[test]
    fn self_adjointness() {
        let i = inst2(&[(3, 5), (1, 5)], (2, 1), (2, 1), (0, 1), (0, 1));
        let grid = Grid::offset(i.space(), 20, 2.0).unwrap();
        let f = random_function(&grid, 17);
        let g = random_function(&grid, 23);
        let cell = grid.cell_volume();
        let fi = apply_separable(&f, &i).unwrap();
        let gi = apply_separable(&g, &i).unwrap();
        let a: f64 = g.values().iter().zip(fi.values()).map(|(x, y)| x * y).sum::<f64>() * cell;
        let b: f64 = f.values().iter().zip(gi.values()).map(|(x, y)| x * y).sum::<f64>() * cell;
        assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()));
    }

    #[test]
    fn scaling_covariance_on_rescalable_grid() {
        // f_2(x) = f(2x) on the same aligned grid; then
        // (I f_2)(x) = 2^{-alpha} (I f)(2x) up to discretization error.
        let i = inst2(&[(3, 5), (1, 5)], (2, 1), (2, 1), (0, 1), (0, 1));
        let grid = Grid::aligned(i.space(), 65, 4.0).unwrap();
        let width = 1.5;
        let f = product_bump(&grid, width).unwrap();
        let f2 = GridFunction::from_fn(grid.clone(), |x| {
            x.iter()
                .map(|&c| {
                    let u = 2.0 * c / width;
                    let s = 1.0 - u * u;
                    if s > 0.0 {
                        s * s
                    } else {
                        0.0
                    }
                })
                .product()
        })
        .unwrap();
        let if1 = apply_direct(&f, &i).unwrap();
        let if2 = apply_direct(&f2, &i).unwrap();
        let alpha = to_f64(&i.alpha_total());
        let p = 65usize;
        let mut worst = 0.0f64;
        // compare on interior points where 2x stays on the grid
        for a in 24..=40usize {
            for b in 24..=40usize {
                let x_idx = a * p + b;
                let y_idx = (2 * a - 32) * p + (2 * b - 32);
                let lhs = if2.values()[x_idx];
                let rhs = 2f64.powf(-alpha) * if1.values()[y_idx];
                if rhs > 1e-9 {
                    worst = worst.max((lhs - rhs).abs() / rhs);
                }
            }
        }
        assert!(worst <= 0.03, "worst relative deviation {worst}");
    }

    #[test]
    fn ratio_scale_invariant_and_positive() {
        let i = inst2(&[(3, 5), (1, 5)], (2, 1), (2, 1), (0, 1), (0, 1));
        let grid = Grid::offset(i.space(), 24, 2.0).unwrap();
        let f = product_bump(&grid, 0.8).unwrap();
        let r1 = weighted_ratio(&f, &i).unwrap();
        assert!(r1.ratio > 0.0 && r1.ratio.is_finite());
        let scaled =
            GridFunction::new(grid.clone(), f.values().iter().map(|v| 3.0 * v).collect())
                .unwrap();
        let r2 = weighted_ratio(&scaled, &i).unwrap();
        assert!((r1.ratio - r2.ratio).abs() <= 1e-12 * r1.ratio);
    }

    #[test]
    fn ratio_rejects_zero_input() {
        let i = inst2(&[(3, 5), (1, 5)], (2, 1), (2, 1), (0, 1), (0, 1));
        let grid = Grid::offset(i.space(), 8, 2.0).unwrap();
        let f = GridFunction::new(grid.clone(), vec![0.0; grid.total_points()]).unwrap();
        assert!(matches!(
            weighted_ratio(&f, &i),
            Err(OperatorError::DegenerateInput)
        ));
    }

    #[test]
    fn cone_index_band_examples() {
        assert_eq!(cone_index(&[1.0, 0.3], 0).unwrap(), Some(vec![0, 1]));
        assert_eq!(cone_index(&[1.0, 1.0], 0).unwrap(), Some(vec![0, 0]));
        assert_eq!(cone_index(&[0.3, 1.0], 0).unwrap(), None);
        assert_eq!(cone_index(&[1.0, 0.5], 0).unwrap(), Some(vec![0, 0]));
        assert_eq!(cone_index(&[1.0, 0.25], 0).unwrap(), Some(vec![0, 1]));
        assert_eq!(cone_index(&[1.0, 0.125], 0).unwrap(), Some(vec![0, 2]));
        assert_eq!(cone_index(&[0.0, 1.0], 0).unwrap(), None);
        assert!(matches!(
            cone_index(&[0.0, 0.0], 0),
            Err(OperatorError::ZeroDisplacement)
        ));
    }

    #[test]
    fn cone_cover_on_grid() {
        let space = ProductSpace::new(vec![1, 1]).unwrap();
        let grid = Grid::offset(&space, 8, 2.0).unwrap();
        let stats = cone_cover_check(&grid).unwrap();
        assert!(stats.min_cover >= 1, "min cover {}", stats.min_cover);
        assert!(stats.max_cover <= 2, "max cover {}", stats.max_cover);

        // 9x9 node-aligned enumeration, pivot ties included.
        let aligned = Grid::aligned(&space, 9, 2.0).unwrap();
        let stats = cone_cover_check(&aligned).unwrap();
        assert!(stats.min_cover >= 1);
        assert!(stats.max_cover <= 4);
    }

    #[test]
    fn single_factor_cover_is_exactly_one() {
        let space = ProductSpace::new(vec![1]).unwrap();
        let grid = Grid::offset(&space, 16, 2.0).unwrap();
        let stats = cone_cover_check(&grid).unwrap();
        assert_eq!(stats.min_cover, 1);
        assert_eq!(stats.max_cover, 1);
    }

    #[test]
    fn cone_partials_dominate_direct() {
        let i = inst2(&[(3, 5), (1, 5)], (2, 1), (2, 1), (0, 1), (0, 1));
        let grid = Grid::offset(i.space(), 10, 2.0).unwrap();
        let f = random_function(&grid, 9);
        let direct = apply_direct(&f, &i).unwrap();
        let k_cap = 8u32;
        let mut total = vec![0.0; grid.total_points()];
        for nu in 0..2 {
            let mut tuples = Vec::new();
            for k in 0..=k_cap {
                let mut t = vec![k; 2];
                t[nu] = 0;
                tuples.push(t);
            }
            // all bands (t1, t2) with t[nu] = 0: for n=2 that is the ladder
            for t in tuples {
                let part = apply_cone_partial(&f, &i, nu, &t).unwrap();
                for (acc, v) in total.iter_mut().zip(part.values()) {
                    *acc += v;
                }
            }
        }
        for (s, d) in total.iter().zip(direct.values()) {
            assert!(*s >= d - 1e-10 * d.abs(), "cone sum {s} < direct {d}");
        }
    }

    #[test]
    fn cone_partial_requires_zero_pivot_band() {
        let i = inst2(&[(3, 5), (1, 5)], (2, 1), (2, 1), (0, 1), (0, 1));
        let grid = Grid::offset(i.space(), 8, 2.0).unwrap();
        let f = random_function(&grid, 2);
        assert!(matches!(
            apply_cone_partial(&f, &i, 0, &[1, 0]),
            Err(OperatorError::BadConeIndex)
        ));
    }

    #[test]
    fn deep_cone_is_empty() {
        let i = inst2(&[(3, 5), (1, 5)], (2, 1), (2, 1), (0, 1), (0, 1));
        let grid = Grid::offset(i.space(), 16, 2.0).unwrap();
        let f = random_function(&grid, 1);
        // side count 16, extent 2: log2(range of displacements) ~ 6; depth 12
        // is past anything realizable with the half-cell floor.
        let part = apply_cone_partial(&f, &i, 0, &[0, 12]).unwrap();
        assert!(part.is_zero());
    }

    #[test]
    fn equal_band_double_count_enumeration() {
        // Explicit pair classification on a small grid: the two pivots'
        // top cones overlap exactly on pairs whose effective displacements
        // tie within a factor of two in both orientations.
        let i = inst2(&[(3, 5), (1, 5)], (2, 1), (2, 1), (0, 1), (0, 1));
        let grid = Grid::offset(i.space(), 8, 2.0).unwrap();
        let f = random_function(&grid, 13);
        let a = apply_cone_partial(&f, &i, 0, &[0, 0]).unwrap();
        let b = apply_cone_partial(&f, &i, 1, &[0, 0]).unwrap();

        // Enumerate by hand.
        let tables = kernel_tables(&i, &grid).unwrap();
        let dims = grid.flat_dims();
        let mi = grid.multi_indices();
        let total = grid.total_points();
        let spans = factor_spans(i.space());
        let cell = grid.cell_volume();
        let mut expect = vec![0.0; total];
        for x in 0..total {
            let xi = &mi[x * dims.len()..(x + 1) * dims.len()];
            for y in 0..total {
                let fy = f.values()[y];
                if fy == 0.0 {
                    continue;
                }
                let yi = &mi[y * dims.len()..(y + 1) * dims.len()];
                let dx = effective_displacements(&grid, xi, yi, &spans);
                let mut hits = 0;
                for nu in 0..2 {
                    if cone_index(&dx, nu).unwrap() == Some(vec![0, 0]) {
                        hits += 1;
                    }
                }
                if hits > 0 {
                    let k = tables[0].flat(&[(xi[0] as isize - yi[0] as isize).unsigned_abs()])
                        * tables[1].flat(&[(xi[1] as isize - yi[1] as isize).unsigned_abs()]);
                    expect[x] += hits as f64 * fy * k * cell;
                }
            }
        }
        for ((av, bv), ev) in a.values().iter().zip(b.values()).zip(&expect) {
            let got = av + bv;
            assert!((got - ev).abs() <= 1e-10 * ev.abs().max(1e-300));
        }
    }

    #[test]
    fn cone_profile_recovers_min_excess_for_zero_weights() {
        // gamma = delta = 0 with the pivot at the larger excess: the
        // per-rung ratio decays at the smaller factor excess, up to the
        // fixed-family fit error. Deep rungs beyond the grid resolution are
        // reported empty and excluded.
        let i = inst2(&[(3, 5), (1, 5)], (2, 1), (2, 1), (0, 1), (0, 1));
        let grid = Grid::offset(i.space(), 48, 4.0).unwrap();
        let fam = vec![product_bump(&grid, 1.0).unwrap(), random_function(&grid, 5)];
        let prof = per_cone_ratio_profile(&fam, &i, 0, 6).unwrap();
        assert!(prof.decay_rate > 0.0);
        let expect = 0.2; // smaller excess at p = q
        assert!(
            (prof.decay_rate - expect).abs() <= 2.0 * prof.stderr,
            "rate {} stderr {}",
            prof.decay_rate,
            prof.stderr
        );
        let deep = apply_cone_partial(&fam[0], &i, 0, &[0, 14]).unwrap();
        assert!(deep.is_zero(), "band beyond the grid resolution must be empty");
    }

    #[test]
    fn cone_profile_positive_decay_for_bounded_weighted_instance() {
        let i = inst2(&[(3, 5), (1, 5)], (2, 1), (2, 1), (3, 10), (1, 2));
        let grid = Grid::offset(i.space(), 48, 4.0).unwrap();
        let fam = vec![product_bump(&grid, 1.0).unwrap()];
        let prof = per_cone_ratio_profile(&fam, &i, 0, 6).unwrap();
        assert!(prof.decay_rate > 0.0, "rate {}", prof.decay_rate);
    }

    #[test]
    fn grid_function_roundtrips_through_files() {
        let space = ProductSpace::new(vec![1, 1]).unwrap();
        let grid = Grid::offset(&space, 8, 2.0).unwrap();
        let f = random_function(&grid, 77);
        let dir = std::env::temp_dir().join("steinweiss-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let bin = dir.join("f.bin");
        let json = dir.join("f.json");
        write_grid_function(&f, &bin, &json).unwrap();
        let back = read_grid_function(&bin, &json).unwrap();
        assert_eq!(back.values(), f.values());
        assert_eq!(back.grid(), f.grid());
    }
}
