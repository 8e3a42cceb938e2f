//! Gaussian states and wave packets as points of projective space.
//!
//! A Gaussian state of center `a` and width `sigma` has amplitude
//! proportional to `exp(-(x - a)^2 / (4 sigma^2))`; a wave packet carries the
//! extra factor `exp(i p x / hbar)`. Equal-width states satisfy
//! `cos^2 theta = exp(-|a - b|^2 / (4 sigma^2))`, so for small separations
//! the Fubini–Study distance is `|a - b| / (2 sigma)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Spectral};
use crate::hilbert::{self, HorizontalFrame, State, C64};

/// Number of widths the grid must extend beyond the center on each side.
pub const COVERAGE_WIDTHS: f64 = 6.0;
/// Maximum spacing in units of the width.
pub const MAX_SPACING_RATIO: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianParams {
    pub center: Vec<f64>,
    pub momentum: Vec<f64>,
    pub sigma: f64,
}

impl GaussianParams {
    pub fn new(center: Vec<f64>, momentum: Vec<f64>, sigma: f64) -> Result<Self> {
        let p = Self {
            center,
            momentum,
            sigma,
        };
        p.validate()?;
        Ok(p)
    }

    /// Zero-momentum state.
    pub fn at_rest(center: Vec<f64>, sigma: f64) -> Result<Self> {
        let d = center.len();
        Self::new(center, vec![0.0; d], sigma)
    }

    pub fn line(center: f64, momentum: f64, sigma: f64) -> Result<Self> {
        Self::new(vec![center], vec![momentum], sigma)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma must be > 0, got {}", self.sigma)));
        }
        let d = self.center.len();
        if !(1..=3).contains(&d) || self.momentum.len() != d {
            return Err(Error::InvalidParameter(format!(
                "dimension must be 1..=3 with matching momentum (center {d}, momentum {})",
                self.momentum.len()
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn at_rest_p(&self) -> bool {
        self.momentum.iter().all(|&p| p == 0.0)
    }
}

/// Gaussian sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldPoint {
    pub params: GaussianParams,
    pub grid: Grid,
    pub state: State,
}

fn check_resolution(params: &GaussianParams, grid: &Grid) -> Result<()> {
    params.validate()?;
    if params.dim() != 1 {
        return Err(Error::InvalidParameter(format!(
            "grid states are one-dimensional, got d = {}",
            params.dim()
        )));
    }
    let a = params.center[0];
    let s = params.sigma;
    let (lo, hi) = (a - COVERAGE_WIDTHS * s, a + COVERAGE_WIDTHS * s);
    if !grid.covers(lo, hi) {
        return Err(Error::UnderResolved(format!(
            "grid [{}, {}] does not cover [{lo}, {hi}]",
            grid.x_min,
            grid.x_last()
        )));
    }
    if grid.spacing > MAX_SPACING_RATIO * s {
        return Err(Error::UnderResolved(format!(
            "spacing {} exceeds sigma/4 = {}",
            grid.spacing,
            s * MAX_SPACING_RATIO
        )));
    }
    Ok(())
}

fn raw_amplitudes(params: &GaussianParams, grid: &Grid) -> Vec<C64> {
    let a = params.center[0];
    let p = params.momentum[0];
    let s2 = 4.0 * params.sigma * params.sigma;
    let amps: Vec<C64> = grid
        .points()
        .map(|x| C64::from_polar((-(x - a) * (x - a) / s2).exp(), p * x / grid.hbar))
        .collect();
    let n = hilbert::norm(&amps);
    amps.into_iter().map(|z| z / n).collect()
}

fn sampled(params: &GaussianParams, grid: &Grid) -> Result<State> {
    State::new(raw_amplitudes(params, grid), grid.label())
}

/// Unit-norm samples of `exp(i p x / hbar) exp(-(x-a)^2 / (4 sigma^2))`
/// without the state gauge, so that time-dependent phases survive.
pub fn packet_amplitudes(params: &GaussianParams, grid: &Grid) -> Result<Vec<C64>> {
    check_resolution(params, grid)?;
    let ratio = params.momentum[0].abs() * grid.spacing / grid.hbar;
    if ratio >= std::f64::consts::FRAC_PI_4 {
        return Err(Error::Aliasing { ratio });
    }
    Ok(raw_amplitudes(params, grid))
}

/// Zero-momentum Gaussian on a grid.
pub fn gaussian_state(params: &GaussianParams, grid: &Grid) -> Result<ManifoldPoint> {
    check_resolution(params, grid)?;
    if !params.at_rest_p() {
        return Err(Error::NonzeroMomentum);
    }
    Ok(ManifoldPoint {
        params: params.clone(),
        grid: *grid,
        state: sampled(params, grid)?,
    })
}

/// Gaussian wave packet on a grid.
pub fn wave_packet(params: &GaussianParams, grid: &Grid) -> Result<ManifoldPoint> {
    check_resolution(params, grid)?;
    let ratio = params.momentum[0].abs() * grid.spacing / grid.hbar;
    if ratio >= std::f64::consts::FRAC_PI_4 {
        return Err(Error::Aliasing { ratio });
    }
    Ok(ManifoldPoint {
        params: params.clone(),
        grid: *grid,
        state: sampled(params, grid)?,
    })
}

/// Squared overlap of two zero-momentum Gaussians in closed form:
/// `(2 sigma delta / (sigma^2 + delta^2))^d exp(-|a - b|^2 / (2 (sigma^2 + delta^2)))`.
pub fn overlap_closed_form(p1: &GaussianParams, p2: &GaussianParams) -> Result<f64> {
    p1.validate()?;
    p2.validate()?;
    if !p1.at_rest_p() || !p2.at_rest_p() {
        return Err(Error::NonzeroMomentum);
    }
    if p1.dim() != p2.dim() {
        return Err(Error::DimensionMismatch {
            expected: p1.dim(),
            got: p2.dim(),
        });
    }
    let (s, d) = (p1.sigma, p2.sigma);
    let sum = s * s + d * d;
    let r2: f64 = p1
        .center
        .iter()
        .zip(&p2.center)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((2.0 * s * d / sum).powi(p1.dim() as i32) * (-r2 / (2.0 * sum)).exp())
}

/// `|<s1, s2>|^2` on a shared grid.
pub fn overlap_quadrature(s1: &ManifoldPoint, s2: &ManifoldPoint) -> Result<f64> {
    if s1.grid != s2.grid {
        return Err(Error::GridMismatch);
    }
    Ok(hilbert::transition_probability(&s1.state, &s2.state))
}

/// Quadrature overlap of `d`-dimensional Gaussians as the product of
/// one-dimensional overlaps on `grid` along each axis.
pub fn overlap_quadrature_separable(p1: &GaussianParams, p2: &GaussianParams, grid: &Grid) -> Result<f64> {
    if p1.dim() != p2.dim() {
        return Err(Error::DimensionMismatch {
            expected: p1.dim(),
            got: p2.dim(),
        });
    }
    let mut prod = 1.0;
    for axis in 0..p1.dim() {
        let a = GaussianParams::line(p1.center[axis], p1.momentum[axis], p1.sigma)?;
        let b = GaussianParams::line(p2.center[axis], p2.momentum[axis], p2.sigma)?;
        prod *= overlap_quadrature(&wave_packet(&a, grid)?, &wave_packet(&b, grid)?)?;
    }
    Ok(prod)
}

/// Equal-width pair on a line whose Fubini–Study distance is `theta`:
/// centers `0` and `2 sigma sqrt(-ln cos^2 theta)`.
pub fn realize_fs_distance(theta: f64, sigma: f64) -> Result<(GaussianParams, GaussianParams)> {
    if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
        return Err(Error::AngleOutOfRange(theta));
    }
    let c2 = theta.cos().powi(2);
    let sep = 2.0 * sigma * (-c2.ln()).sqrt();
    Ok((
        GaussianParams::at_rest(vec![0.0], sigma)?,
        GaussianParams::at_rest(vec![sep], sigma)?,
    ))
}

/// Base state with an orthonormal horizontal frame tangent to the
/// translations, and the scale that converts tangent coordinates to classical
/// lengths.
#[derive(Clone, Debug)]
pub struct TranslationChart {
    pub frame: HorizontalFrame,
    /// Norms of the raw derivatives `dg/da_j` before normalization.
    pub raw_norms: Vec<f64>,
    pub sigma: f64,
    pub hbar: f64,
}

impl TranslationChart {
    pub fn base(&self) -> &State {
        self.frame.base()
    }

    pub fn dim(&self) -> usize {
        self.frame.len()
    }
}

fn normalized_frame(base: &State, raws: Vec<Vec<C64>>) -> Result<(HorizontalFrame, Vec<f64>)> {
    let mut vectors = Vec::with_capacity(raws.len());
    let mut norms = Vec::with_capacity(raws.len());
    for raw in raws {
        let t = hilbert::horizontal_project(base, &raw);
        let n = t.norm();
        if !(n > 1e-8) {
            return Err(Error::UnderResolved("degenerate translation derivative".into()));
        }
        norms.push(n);
        vectors.push(t.components.into_iter().map(|x| x / n).collect());
    }
    Ok((HorizontalFrame::new(base.clone(), vectors)?, norms))
}

/// Tangent frame to the translations at a grid Gaussian. The derivative of
/// the sampled state with respect to the center is `(x - a)/(2 sigma^2) g`.
pub fn translation_tangent_basis(m: &ManifoldPoint) -> Result<TranslationChart> {
    if !m.params.at_rest_p() {
        return Err(Error::NonzeroMomentum);
    }
    check_resolution(&m.params, &m.grid)?;
    let a = m.params.center[0];
    let s2 = 2.0 * m.params.sigma * m.params.sigma;
    let raw: Vec<C64> = m
        .grid
        .points()
        .zip(m.state.amplitudes())
        .map(|(x, g)| g * ((x - a) / s2))
        .collect();
    let (frame, raw_norms) = normalized_frame(&m.state, vec![raw])?;
    Ok(TranslationChart {
        frame,
        raw_norms,
        sigma: m.params.sigma,
        hbar: m.grid.hbar,
    })
}

/// `theta(g_0, g_eps) / |eps|` on `grid`; tends to `1/(2 sigma)`.
pub fn induced_metric_ratio(sigma: f64, eps: f64, grid: &Grid) -> Result<f64> {
    if eps == 0.0 || !eps.is_finite() {
        return Err(Error::InvalidParameter("displacement must be nonzero".into()));
    }
    if eps.abs() > sigma {
        return Err(Error::DisplacementTooLarge { eps, sigma });
    }
    let g0 = gaussian_state(&GaussianParams::at_rest(vec![0.0], sigma)?, grid)?;
    let g1 = gaussian_state(&GaussianParams::at_rest(vec![eps], sigma)?, grid)?;
    Ok(hilbert::fs_distance(&g0.state, &g1.state) / eps.abs())
}

/// Truncated harmonic-oscillator basis in `d` dimensions whose ground state
/// is the zero-momentum Gaussian of width `sigma` centred at the origin.
///
/// Basis vectors are occupation tuples with total quanta `<= max_quanta`,
/// ordered by total quanta then lexicographically; index 0 is the ground
/// state. Position and momentum are `x_j = sigma (a_j + a_j^+)` and
/// `p_j = i hbar / (2 sigma) (a_j^+ - a_j)`.
#[derive(Clone, Debug)]
pub struct OscillatorBasis {
    pub dim: usize,
    pub sigma: f64,
    pub hbar: f64,
    pub max_quanta: usize,
    occupations: Vec<Vec<usize>>,
}

impl OscillatorBasis {
    pub fn new(dim: usize, sigma: f64, hbar: f64, max_quanta: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) || max_quanta < 1 || !(sigma > 0.0) || !(hbar > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "oscillator basis needs d in 1..=3, max_quanta >= 1, sigma, hbar > 0 (d={dim}, q={max_quanta})"
            )));
        }
        let mut occupations = Vec::new();
        for total in 0..=max_quanta {
            let mut buf = vec![0; dim];
            fill_occupations(&mut occupations, &mut buf, 0, total);
        }
        Ok(Self {
            dim,
            sigma,
            hbar,
            max_quanta,
            occupations,
        })
    }

    pub fn len(&self) -> usize {
        self.occupations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupations.is_empty()
    }

    pub fn occupations(&self) -> &[Vec<usize>] {
        &self.occupations
    }

    pub fn label(&self) -> String {
        format!("oscillator:d{}:q{}:s{}", self.dim, self.max_quanta, self.sigma)
    }

    fn index_of(&self, occ: &[usize]) -> Option<usize> {
        self.occupations.iter().position(|o| o == occ)
    }

    pub fn ground_state(&self) -> State {
        State::basis_state(self.len(), 0).with_basis(self.label())
    }

    /// Matrix of `p_j` (Hermitian, exact on states below the truncation).
    pub fn momentum(&self, axis: usize) -> DMatrix<C64> {
        let n = self.len();
        let c = self.hbar / (2.0 * self.sigma);
        let mut m = DMatrix::<C64>::zeros(n, n);
        for (col, occ) in self.occupations.iter().enumerate() {
            // a^+ term: +i c sqrt(n+1) |n+1>
            let mut up = occ.clone();
            up[axis] += 1;
            if let Some(row) = self.index_of(&up) {
                m[(row, col)] += C64::new(0.0, c * (up[axis] as f64).sqrt());
            }
            // -a term: -i c sqrt(n) |n-1>
            if occ[axis] > 0 {
                let mut down = occ.clone();
                down[axis] -= 1;
                let row = self.index_of(&down).expect("lower occupation present");
                m[(row, col)] -= C64::new(0.0, c * (occ[axis] as f64).sqrt());
            }
        }
        m
    }

    /// Translation chart at the ground state; raw derivatives are
    /// `-(i/hbar) p_j g`.
    pub fn chart(&self) -> Result<TranslationChart> {
        let g = self.ground_state();
        let gv = nalgebra::DVector::from_column_slice(g.amplitudes());
        let raws = (0..self.dim)
            .map(|j| {
                let pg = self.momentum(j) * &gv;
                pg.iter().map(|x| x * C64::new(0.0, -1.0 / self.hbar)).collect()
            })
            .collect();
        let (frame, raw_norms) = normalized_frame(&g, raws)?;
        Ok(TranslationChart {
            frame,
            raw_norms,
            sigma: self.sigma,
            hbar: self.hbar,
        })
    }
}

fn fill_occupations(out: &mut Vec<Vec<usize>>, buf: &mut Vec<usize>, axis: usize, remaining: usize) {
    if axis + 1 == buf.len() {
        buf[axis] = remaining;
        out.push(buf.clone());
        return;
    }
    for k in (0..=remaining).rev() {
        buf[axis] = k;
        fill_occupations(out, buf, axis + 1, remaining - k);
    }
}

/// `<x>` of a grid state.
pub fn position_mean(state: &State, grid: &Grid) -> f64 {
    grid.points()
        .zip(state.amplitudes())
        .map(|(x, a)| x * a.norm_sqr())
        .sum::<f64>()
        / state.norm().powi(2)
}

/// `Var(x)` of a grid state.
pub fn position_variance(state: &State, grid: &Grid) -> f64 {
    let m = position_mean(state, grid);
    grid.points()
        .zip(state.amplitudes())
        .map(|(x, a)| (x - m).powi(2) * a.norm_sqr())
        .sum::<f64>()
        / state.norm().powi(2)
}

/// `<p>` of a grid state, evaluated spectrally.
pub fn momentum_mean(state: &State, grid: &Grid) -> f64 {
    Spectral::new(*grid).momentum_expectation(state.amplitudes())
}
