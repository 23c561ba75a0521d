//! Small numeric helpers shared across modules.

/// Pairwise (tree) summation; deterministic for a fixed slice order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Largest power of two `<= x` (x > 0).
pub fn pow2_at_most(x: f64) -> f64 {
    debug_assert!(x > 0.0 && x.is_finite());
    let mut p = 2f64.powi(x.log2().floor() as i32);
    while p > x {
        p *= 0.5;
    }
    while p * 2.0 <= x {
        p *= 2.0;
    }
    p
}

/// Ordinary least squares line fit with the slope's standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope (infinite when under-determined).
    pub slope_stderr: f64,
    pub points: usize,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let mean_x = xs.iter().sum::<f64>() / nf;
    let mean_y = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let slope_stderr = if n > 2 {
        let ss_res: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let pred = intercept + slope * x;
                (y - pred).powi(2)
            })
            .sum();
        (ss_res / ((nf - 2.0) * sxx)).sqrt()
    } else {
        f64::INFINITY
    };
    Some(LineFit {
        slope,
        intercept,
        slope_stderr,
        points: n,
    })
}
