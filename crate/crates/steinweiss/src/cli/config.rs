//! JSON run configuration. Unknown keys are rejected everywhere.

use serde::{Deserialize, Serialize};

use crate::characteristic::SearchLattice;
use crate::operator::{Grid, OperatorError};
use crate::param::{InstanceSpec, ProductSpace};
use crate::quad::{QuadConfig, QuadError, Rectangle};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub instance: InstanceSpec,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tol: Option<f64>,
    /// Bump parameter: a rational string, or `"auto"` for the ladder choice.
    #[serde(default)]
    pub r: Option<String>,
    #[serde(default)]
    pub lattice: Option<SearchLattice>,
    #[serde(default)]
    pub quad: Option<QuadSettings>,
    #[serde(default)]
    pub rect: Option<RectSpec>,
    #[serde(default)]
    pub grid: Option<GridSettings>,
    #[serde(default)]
    pub decay: Option<DecaySettings>,
    #[serde(default)]
    pub witness: Option<WitnessSettings>,
    #[serde(default)]
    pub sweep: Option<SweepSettings>,
    #[serde(default)]
    pub verify: Option<VerifySettings>,
}

impl RunConfig {
    pub fn quad_config(&self, seed: u64, tol_override: Option<f64>) -> QuadConfig {
        let mut cfg = QuadConfig {
            seed,
            ..QuadConfig::default()
        };
        if let Some(q) = &self.quad {
            if let Some(t) = q.rel_tol {
                cfg.rel_tol = t;
            }
            if let Some(d) = q.max_depth {
                cfg.max_depth = d;
            }
            if let Some(g) = q.gauss_order {
                cfg.gauss_order = g;
            }
            if let Some(m) = q.mc_samples {
                cfg.mc_samples = m;
            }
        }
        if let Some(t) = tol_override.or(self.tol) {
            cfg.rel_tol = t;
        }
        cfg
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadSettings {
    #[serde(default)]
    pub rel_tol: Option<f64>,
    #[serde(default)]
    pub max_depth: Option<u32>,
    #[serde(default)]
    pub gauss_order: Option<usize>,
    #[serde(default)]
    pub mc_samples: Option<u64>,
}

/// Explicit rectangle: per-factor sides, optional per-factor centers.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectSpec {
    pub sides: Vec<f64>,
    #[serde(default)]
    pub centers: Option<Vec<Vec<f64>>>,
}

impl RectSpec {
    pub fn build(&self, space: &ProductSpace) -> Result<Rectangle, QuadError> {
        match &self.centers {
            Some(centers) => Rectangle::with_centers(space, &self.sides, centers),
            None => Rectangle::centered_cubes(space, &self.sides),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSettings {
    pub points: usize,
    pub extent: f64,
    pub aligned: bool,
    pub bump_width: f64,
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings {
            points: 256,
            extent: 8.0,
            aligned: false,
            bump_width: 1.0,
        }
    }
}

impl GridSettings {
    pub fn build(&self, space: &ProductSpace) -> Result<Grid, OperatorError> {
        if self.aligned {
            Grid::aligned(space, self.points, self.extent)
        } else {
            Grid::offset(space, self.points, self.extent)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecaySettings {
    /// Ladder pivot; defaults to the factor with the largest excess.
    pub pivot: Option<usize>,
    pub k_max: u32,
}

impl Default for DecaySettings {
    fn default() -> Self {
        DecaySettings {
            pivot: None,
            k_max: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WitnessSettings {
    pub k_max: u32,
}

impl Default for WitnessSettings {
    fn default() -> Self {
        WitnessSettings { k_max: 10 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub min: String,
    pub max: String,
    pub step: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSettings {
    pub gamma: RangeSpec,
    pub delta: RangeSpec,
    #[serde(default)]
    pub dual_column: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySettings {
    pub ratio_points: usize,
    pub ratio_extent: f64,
    pub witness_k_max: u32,
    pub decay_k_max: u32,
    pub max_ratio_variation: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            ratio_points: 512,
            ratio_extent: 8.0,
            // A tenfold rise needs k_max >= log2(10)/exponent rungs; 48
            // resolves fitted exponents down to about 0.07.
            witness_k_max: 48,
            decay_k_max: 12,
            max_ratio_variation: 0.25,
        }
    }
}
