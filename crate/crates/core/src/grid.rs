//! Uniform periodic 1D lattice and spectral operators on it.

use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::C64;

/// `len` points `x_min + j * spacing`, periodic with period `len * spacing`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub x_min: f64,
    pub spacing: f64,
    pub len: usize,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
}

fn default_hbar() -> f64 {
    1.0
}

impl Grid {
    /// Periodic grid on `[x_min, x_max)` with `len` points.
    pub fn new(x_min: f64, x_max: f64, len: usize, hbar: f64) -> Result<Self> {
        if len < 2 || !(x_max > x_min) {
            return Err(Error::InvalidParameter(format!(
                "grid needs len >= 2 and x_max > x_min (got {len}, [{x_min}, {x_max}])"
            )));
        }
        if !(hbar > 0.0) {
            return Err(Error::InvalidParameter(format!("hbar must be > 0, got {hbar}")));
        }
        Ok(Self {
            x_min,
            spacing: (x_max - x_min) / len as f64,
            len,
            hbar,
        })
    }

    /// Periodic grid on `[x_min, x_max)` with the given spacing.
    pub fn with_spacing(x_min: f64, x_max: f64, spacing: f64, hbar: f64) -> Result<Self> {
        let len = ((x_max - x_min) / spacing).round() as usize;
        Self::new(x_min, x_min + len as f64 * spacing, len, hbar)
    }

    pub fn point(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.spacing
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|j| self.point(j))
    }

    /// Last lattice point.
    pub fn x_last(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn period(&self) -> f64 {
        self.len as f64 * self.spacing
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.len as i64;
        let dk = 2.0 * std::f64::consts::PI / self.period();
        (0..n)
            .map(|j| if j < (n + 1) / 2 { j } else { j - n } as f64 * dk)
            .collect()
    }

    pub fn label(&self) -> String {
        format!("grid:{}:{}:{}", self.x_min, self.spacing, self.len)
    }

    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        lo >= self.x_min && hi <= self.x_last()
    }
}

/// Forward/inverse FFT pair for one grid length.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            forward: planner.plan_fft_forward(grid.len),
            inverse: planner.plan_fft_inverse(grid.len),
            k: grid.wavenumbers(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    /// Applies the Fourier multiplier `m(k)` in place.
    pub fn apply_multiplier<F: Fn(f64) -> C64>(&self, psi: &mut [C64], m: F) {
        self.forward.process(psi);
        let scale = 1.0 / self.grid.len as f64;
        for (x, &k) in psi.iter_mut().zip(&self.k) {
            *x *= m(k) * scale;
        }
        self.inverse.process(psi);
    }

    /// Same as [`Self::apply_multiplier`] with a precomputed table in FFT order.
    pub fn apply_table(&self, psi: &mut [C64], table: &[C64]) {
        self.forward.process(psi);
        let scale = 1.0 / self.grid.len as f64;
        for (x, t) in psi.iter_mut().zip(table) {
            *x *= t * scale;
        }
        self.inverse.process(psi);
    }

    /// `p psi` with `p = -i hbar d/dx` evaluated spectrally.
    pub fn momentum(&self, psi: &[C64]) -> Vec<C64> {
        let mut out = psi.to_vec();
        let hbar = self.grid.hbar;
        self.apply_multiplier(&mut out, |k| C64::new(hbar * k, 0.0));
        out
    }

    /// `<psi|p|psi> / <psi|psi>`.
    pub fn momentum_expectation(&self, psi: &[C64]) -> f64 {
        let (num, den) = self.k_moments(psi, 1);
        self.grid.hbar * num / den
    }

    /// `<psi|p^2|psi> / <psi|psi>`.
    pub fn momentum_sq_expectation(&self, psi: &[C64]) -> f64 {
        let (num, den) = self.k_moments(psi, 2);
        self.grid.hbar * self.grid.hbar * num / den
    }

    fn k_moments(&self, psi: &[C64], power: i32) -> (f64, f64) {
        let mut f = psi.to_vec();
        self.forward.process(&mut f);
        let mut num = 0.0;
        let mut den = 0.0;
        for (x, &k) in f.iter().zip(&self.k) {
            let w = x.norm_sqr();
            num += w * k.powi(power);
            den += w;
        }
        (num, den)
    }

    /// Translation `psi(x) -> psi(x - shift)` via the phase `exp(-i k shift)`.
    pub fn translate(&self, psi: &mut [C64], shift: f64) {
        self.apply_multiplier(psi, |k| C64::from_polar(1.0, -k * shift));
    }

    /// Dense matrix of the spectral momentum operator, Hermitian.
    pub fn momentum_matrix(&self) -> DMatrix<C64> {
        let n = self.grid.len;
        let mut m = DMatrix::<C64>::zeros(n, n);
        let mut col = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            col.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
            col[j] = C64::new(1.0, 0.0);
            let pc = self.momentum(&col);
            for i in 0..n {
                m[(i, j)] = pc[i];
            }
        }
        // remove rounding asymmetry
        let mh = m.adjoint();
        (m + mh) * C64::new(0.5, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_layout() {
        let g = Grid::new(-10.0, 10.0, 400, 1.0).unwrap();
        assert!((g.spacing - 0.05).abs() < 1e-15);
        assert_eq!(g.point(200), 0.0);
        assert!((g.x_last() - 9.95).abs() < 1e-12);
        let g2 = Grid::with_spacing(-10.0, 10.0, 0.05, 1.0).unwrap();
        assert_eq!(g2.len, 400);
        assert!(Grid::new(1.0, 0.0, 10, 1.0).is_err());
    }

    #[test]
    fn translation_of_plane_wave_is_a_phase() {
        let g = Grid::new(0.0, 2.0 * std::f64::consts::PI, 64, 1.0).unwrap();
        let s = Spectral::new(g);
        let mut psi: Vec<C64> = g.points().map(|x| C64::from_polar(1.0, 3.0 * x)).collect();
        s.translate(&mut psi, 0.4);
        for (x, v) in g.points().zip(&psi) {
            let expected = C64::from_polar(1.0, 3.0 * (x - 0.4));
            assert!((v - expected).norm() < 1e-12);
        }
        let p = s.momentum_expectation(&psi);
        assert!((p - 3.0).abs() < 1e-12);
    }

    #[test]
    fn momentum_matrix_is_hermitian() {
        let g = Grid::new(-1.0, 1.0, 16, 0.7).unwrap();
        let m = Spectral::new(g).momentum_matrix();
        assert!((m.clone() - m.adjoint()).norm() < 1e-14);
    }
}
