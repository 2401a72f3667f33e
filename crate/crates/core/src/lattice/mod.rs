//! Position and phase-space lattices, the density-matrix and Wigner containers,
//! and moment extraction.

mod density;
mod moments;
mod series;
mod wigner;

pub use density::DensityMatrix;
pub use moments::{momentum_distribution, moments, p2_finite_difference, Moments};
pub use series::{MomentRecord, MomentSeries, RecordKind};
pub(crate) use wigner::{rotated_pair, samples_to_wigner, wigner_to_samples};
pub use wigner::{inverse_wigner, wigner_transform, wigner_transform_detailed, WignerFunction};

use std::f64::consts::PI;

use crate::error::{Result, ZenoError};

/// Uniform, origin-centred lattice: point `i` sits at `(i - n/2) * spacing`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n_points: usize,
    spacing: f64,
}

impl Grid1D {
    pub fn new(n_points: usize, spacing: f64) -> Result<Self> {
        if n_points < 8 {
            return Err(ZenoError::Config(format!(
                "lattice.n must be at least 8, got {n_points}"
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(ZenoError::Config(format!(
                "lattice.eta must be positive, got {spacing}"
            )));
        }
        Ok(Self { n_points, spacing })
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n_points / 2) as f64) * self.spacing
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.coord(i)).collect()
    }

    /// Smallest and largest coordinate on the lattice.
    pub fn bounds(&self) -> (f64, f64) {
        (self.coord(0), self.coord(self.n_points - 1))
    }

    /// Momentum lattice conjugate to this one: spacing `2 pi hbar / (n eta)`,
    /// spanning `[-pi hbar / eta, pi hbar / eta)`.
    pub fn momentum_grid(&self, hbar: f64) -> Grid1D {
        Grid1D {
            n_points: self.n_points,
            spacing: 2.0 * PI * hbar / (self.n_points as f64 * self.spacing),
        }
    }

    /// Largest momentum the lattice resolves, `pi hbar / eta`.
    pub fn momentum_cutoff(&self, hbar: f64) -> f64 {
        PI * hbar / self.spacing
    }

    pub(crate) fn require_even(&self) -> Result<()> {
        if !self.n_points.is_multiple_of(2) {
            return Err(ZenoError::Config(format!(
                "phase-space transforms need an even lattice, got {} points",
                self.n_points
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinates_are_origin_centred() {
        let g = Grid1D::new(256, 0.02).unwrap();
        assert_eq!(g.coord(128), 0.0);
        assert!((g.coord(0) + 2.56).abs() < 1e-12);
        assert!((g.coord(153) - 0.5).abs() < 1e-12);
        assert!((g.momentum_cutoff(1.0) - 157.079_632_679).abs() < 1e-6);
    }

    #[test]
    fn rejects_small_or_degenerate_lattices() {
        assert!(Grid1D::new(4, 0.1).is_err());
        assert!(Grid1D::new(16, 0.0).is_err());
        assert!(Grid1D::new(16, -1.0).is_err());
        assert!(Grid1D::new(9, 0.1).unwrap().require_even().is_err());
    }
}
