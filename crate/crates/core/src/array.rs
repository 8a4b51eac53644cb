//! Uniform linear array geometry, angle grids and beampatterns.

use crate::{DfrcError, Result};
use dfrc_conic::hermitian::{hermitian_defect, hermitian_part, C64};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Relative asymmetry above which a matrix is rejected as non-Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-8;

/// Slack for angle comparisons in radians.
const ANGLE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub num_antennas: usize,
    /// Wavelength in meters.
    pub wavelength: f64,
    /// Element spacing in meters.
    pub spacing: f64,
    /// Carrier frequency in Hz. Informational only.
    pub carrier_hz: f64,
}

impl ArrayConfig {
    /// Half-wavelength ULA at `carrier_hz`.
    pub fn half_wavelength(num_antennas: usize, carrier_hz: f64) -> Result<Self> {
        let wavelength = SPEED_OF_LIGHT / carrier_hz;
        Self::new(num_antennas, wavelength, wavelength / 2.0, carrier_hz)
    }

    pub fn new(num_antennas: usize, wavelength: f64, spacing: f64, carrier_hz: f64) -> Result<Self> {
        let cfg = ArrayConfig { num_antennas, wavelength, spacing, carrier_hz };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_antennas == 0 {
            return Err(DfrcError::Domain("array needs at least one antenna".into()));
        }
        if !(self.wavelength > 0.0) || !(self.spacing > 0.0) {
            return Err(DfrcError::Domain("wavelength and spacing must be positive".into()));
        }
        Ok(())
    }
}

impl Default for ArrayConfig {
    fn default() -> Self {
        ArrayConfig::half_wavelength(10, 5e9).expect("default array is valid")
    }
}

/// Ordered azimuth sample points in `[-pi/2, pi/2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleGrid {
    points: Vec<f64>,
}

impl AngleGrid {
    /// `len` equally spaced points from `-pi/2` to `pi/2` inclusive.
    pub fn uniform(len: usize) -> Result<Self> {
        if len < 2 {
            return Err(DfrcError::Domain(format!("angle grid needs at least 2 points, got {len}")));
        }
        let step = PI / (len - 1) as f64;
        let mut points: Vec<f64> = (0..len).map(|l| -FRAC_PI_2 + step * l as f64).collect();
        // pin the endpoint against accumulated rounding
        points[len - 1] = FRAC_PI_2;
        Ok(AngleGrid { points })
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(DfrcError::Domain("angle grid needs at least 2 points".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DfrcError::Domain("angle grid must be strictly increasing".into()));
        }
        if points[0] < -FRAC_PI_2 - ANGLE_EPS || points[points.len() - 1] > FRAC_PI_2 + ANGLE_EPS {
            return Err(DfrcError::Domain("angle grid must lie within [-pi/2, pi/2]".into()));
        }
        Ok(AngleGrid { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains_angle(&self, theta: f64) -> bool {
        theta >= self.points[0] - ANGLE_EPS && theta <= self.points[self.points.len() - 1] + ANGLE_EPS
    }
}

/// Desired pattern on a grid plus the directions of interest it was built for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeampatternSpec {
    pub grid: AngleGrid,
    pub desired: Vec<f64>,
    pub dois: Vec<f64>,
    pub mainlobe_halfwidth: f64,
}

impl BeampatternSpec {
    /// Rectangular plateaus of unit height around each DOI.
    pub fn rectangular(grid: AngleGrid, dois: Vec<f64>, halfwidth: f64) -> Result<Self> {
        let desired = ideal_beampattern(&dois, halfwidth, &grid)?;
        let spec = BeampatternSpec { grid, desired, dois, mainlobe_halfwidth: halfwidth };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.desired.len() != self.grid.len() {
            return Err(DfrcError::Domain("desired pattern length differs from grid length".into()));
        }
        if self.dois.is_empty() {
            return Err(DfrcError::Domain("at least one direction of interest is required".into()));
        }
        if let Some(d) = self.dois.iter().find(|&&d| !self.grid.contains_angle(d)) {
            return Err(DfrcError::Domain(format!("DOI {d} rad lies outside the grid span")));
        }
        if self.desired.iter().any(|&v| v < 0.0) {
            return Err(DfrcError::Domain("desired pattern must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn num_dois(&self) -> usize {
        self.dois.len()
    }
}

/// `a(theta)` with entries `exp(j 2 pi / lambda * n * spacing * sin theta)`.
pub fn steering_vector(cfg: &ArrayConfig, theta: f64) -> Result<DVector<C64>> {
    if !(theta.abs() <= FRAC_PI_2 + ANGLE_EPS) {
        return Err(DfrcError::Domain(format!("angle {theta} rad outside [-pi/2, pi/2]")));
    }
    let k = 2.0 * PI / cfg.wavelength * cfg.spacing * theta.sin();
    Ok(DVector::from_fn(cfg.num_antennas, |n, _| C64::from_polar(1.0, k * n as f64)))
}

/// Steering vectors for every grid point, as columns.
pub fn steering_matrix(cfg: &ArrayConfig, grid: &AngleGrid) -> Result<DMatrix<C64>> {
    let mut m = DMatrix::from_element(cfg.num_antennas, grid.len(), C64::new(0.0, 0.0));
    for (l, &theta) in grid.points().iter().enumerate() {
        m.set_column(l, &steering_vector(cfg, theta)?);
    }
    Ok(m)
}

/// Indicator of the union of `[doi - halfwidth, doi + halfwidth]` on the grid.
pub fn ideal_beampattern(dois: &[f64], halfwidth: f64, grid: &AngleGrid) -> Result<Vec<f64>> {
    if dois.is_empty() {
        return Err(DfrcError::Domain("at least one direction of interest is required".into()));
    }
    if halfwidth < 0.0 {
        return Err(DfrcError::Domain("mainlobe half-width must be nonnegative".into()));
    }
    Ok(grid
        .points()
        .iter()
        .map(|&t| {
            let near = dois.iter().map(|&d| (t - d).abs()).fold(f64::INFINITY, f64::min);
            if near <= halfwidth + ANGLE_EPS {
                1.0
            } else {
                0.0
            }
        })
        .collect())
}

/// Checks `r` is Hermitian within [`HERMITIAN_TOL`] and returns its Hermitian part.
pub fn checked_hermitian(r: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    if !r.is_square() {
        return Err(DfrcError::Domain("matrix is not square".into()));
    }
    let defect = hermitian_defect(r);
    if defect > HERMITIAN_TOL {
        return Err(DfrcError::Domain(format!("matrix is not Hermitian (relative asymmetry {defect:.3e})")));
    }
    Ok(hermitian_part(r))
}

/// `a^H R a` at one steering vector.
pub fn quadratic_form(r: &DMatrix<C64>, a: &DVector<C64>) -> C64 {
    a.dotc(&(r * a))
}

/// Transmit beampattern `a^H(theta_l) R a(theta_l)` on the grid.
pub fn beampattern(cfg: &ArrayConfig, r: &DMatrix<C64>, grid: &AngleGrid) -> Result<Vec<f64>> {
    if r.nrows() != cfg.num_antennas {
        return Err(DfrcError::Domain(format!(
            "covariance is {}x{}, array has {} antennas",
            r.nrows(),
            r.ncols(),
            cfg.num_antennas
        )));
    }
    let r = checked_hermitian(r)?;
    grid.points()
        .iter()
        .map(|&t| Ok(quadratic_form(&r, &steering_vector(cfg, t)?).re))
        .collect()
}

/// Beampattern of `sum_k w_k w_k^H`, computed as `sum_k |a^H w_k|^2`.
pub fn beampattern_of_beamformers(cfg: &ArrayConfig, w: &[DVector<C64>], grid: &AngleGrid) -> Result<Vec<f64>> {
    grid.points()
        .iter()
        .map(|&t| {
            let a = steering_vector(cfg, t)?;
            Ok(w.iter().map(|wk| a.dotc(wk).norm_sqr()).sum())
        })
        .collect()
}
