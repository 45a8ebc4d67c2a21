//! Uniform linear arrays with half-wavelength spacing.
//!
//! The array response of a half-wavelength ULA is a pure sinusoid in
//! `sin(angle)`, so both steering vectors and grid dictionaries are indexed in
//! the sin domain. Grid bin `i` of a `G`-point grid sits at `2i/G` for
//! `i < G/2` and at `2i/G - 2` otherwise, which is exactly the DFT frequency-bin
//! ordering when the grid multiplier is one.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// A uniform linear array with half-wavelength element spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ArrayGeometry {
    n_ant: usize,
}

impl ArrayGeometry {
    /// Element spacing in wavelengths.
    pub const SPACING: f64 = 0.5;

    pub fn new(n_ant: usize) -> Result<Self> {
        if n_ant == 0 {
            return Err(Error::param("array must have at least one element"));
        }
        Ok(Self { n_ant })
    }

    pub fn n_ant(&self) -> usize {
        self.n_ant
    }

    pub fn spacing(&self) -> f64 {
        Self::SPACING
    }

    /// Steering vector for a direction given by its sine.
    ///
    /// Element `n` is `exp(j*pi*n*sin) / sqrt(n_ant)`.
    pub fn response_at_sin(&self, sin: f64) -> DVector<Complex64> {
        let scale = 1.0 / (self.n_ant as f64).sqrt();
        DVector::from_fn(self.n_ant, |n, _| {
            Complex64::from_polar(scale, PI * n as f64 * sin)
        })
    }
}

/// Steering vector of `geometry` towards `angle` (radians from broadside).
pub fn steering_vector(geometry: &ArrayGeometry, angle: f64) -> Result<DVector<Complex64>> {
    if !angle.is_finite() || angle.abs() > FRAC_PI_2 {
        return Err(Error::InvalidAngle(angle));
    }
    Ok(geometry.response_at_sin(angle.sin()))
}

/// Sine of grid bin `index` on a `bins`-point sin-domain grid.
pub fn grid_sin(index: usize, bins: usize) -> f64 {
    let s = 2.0 * index as f64 / bins as f64;
    if 2 * index < bins {
        s
    } else {
        s - 2.0
    }
}

/// Oversampled array-response grid: `G = n_ant * multiplier` unit-norm atoms
/// uniformly spaced in the sin domain.
#[derive(Debug, Clone)]
pub struct GridDictionary {
    geometry: ArrayGeometry,
    multiplier: usize,
    sin_grid: Vec<f64>,
    atoms: DMatrix<Complex64>,
}

impl GridDictionary {
    pub fn build(geometry: ArrayGeometry, multiplier: usize) -> Result<Self> {
        if multiplier == 0 {
            return Err(Error::param("grid multiplier must be at least 1"));
        }
        let n_ant = geometry.n_ant();
        let bins = n_ant * multiplier;
        let sin_grid = (0..bins).map(|i| grid_sin(i, bins)).collect();
        // Phase pi*n*sin_i reduces to 2*pi*(n*i mod G)/G, which keeps the
        // multiplier-one grid an exact DFT basis.
        let scale = 1.0 / (n_ant as f64).sqrt();
        let atoms = DMatrix::from_fn(n_ant, bins, |n, i| {
            let turns = ((n * i) % bins) as f64 / bins as f64;
            Complex64::from_polar(scale, 2.0 * PI * turns)
        });
        Ok(Self {
            geometry,
            multiplier,
            sin_grid,
            atoms,
        })
    }

    pub fn geometry(&self) -> ArrayGeometry {
        self.geometry
    }

    pub fn multiplier(&self) -> usize {
        self.multiplier
    }

    pub fn n_bins(&self) -> usize {
        self.sin_grid.len()
    }

    pub fn sin_grid(&self) -> &[f64] {
        &self.sin_grid
    }

    pub fn atoms(&self) -> &DMatrix<Complex64> {
        &self.atoms
    }

    /// Beam index (on the multiplier-one DFT grid) closest to grid bin `bin`.
    ///
    /// Bin `b` lies at `b / multiplier` beam widths, so rounding and wrapping
    /// modulo the beam count gives the nearest DFT direction.
    pub fn bin_to_beam(&self, bin: usize, n_beams: usize) -> usize {
        let k = self.multiplier;
        // round(b / k) with halves rounded up
        ((2 * bin + k) / (2 * k)) % n_beams
    }
}
