//! Grid Schrödinger propagation and the action functional.
//!
//! `split_step_evolve` integrates `i hbar d/dt psi = (p^2/2m + V) psi` with
//! Strang splitting (half potential, spectral kinetic, half potential). For
//! potentials of degree at most one the splitting is exact up to a global
//! phase.
//!
//! `action_quantum` evaluates `int <phi|(i hbar d/dt - h)|phi> dt` on a dense
//! trajectory. The time-derivative term is taken from phase increments,
//! `-hbar arg <phi_k|phi_{k+1}>`, which is gauge-consistent and exact for
//! stationary states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{packet_amplitudes, GaussianParams, ManifoldPoint, COVERAGE_WIDTHS};
use crate::grid::{Grid, Spectral};
use crate::hilbert::{self, State, C64};

/// Largest `1 - |<phi_k|phi_{k+1}>|` accepted by [`action_quantum`].
pub const MAX_STEP_INFIDELITY: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    Free,
    /// `V = -F x`.
    Linear { force: f64 },
    /// `V = k x^2 / 2`.
    Harmonic { k: f64 },
}

impl PotentialSpec {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Self::Free => 0.0,
            Self::Linear { force } => -force * x,
            Self::Harmonic { k } => 0.5 * k * x * x,
        }
    }

    /// `-dV/dx`.
    pub fn force(&self, x: f64) -> f64 {
        match *self {
            Self::Free => 0.0,
            Self::Linear { force } => force,
            Self::Harmonic { k } => -k * x,
        }
    }

    /// Classical Hamiltonian `h(p, a) = p^2/2m + V(a)`.
    pub fn hamiltonian(&self, p: f64, a: f64, mass: f64) -> f64 {
        p * p / (2.0 * mass) + self.value(a)
    }

    /// Newtonian phase-space point at time `t` from `(a0, p0)`.
    pub fn newtonian(&self, mass: f64, a0: f64, p0: f64, t: f64) -> (f64, f64) {
        match *self {
            Self::Free => (a0 + p0 * t / mass, p0),
            Self::Linear { force } => (
                a0 + p0 * t / mass + 0.5 * force * t * t / mass,
                p0 + force * t,
            ),
            Self::Harmonic { k } => {
                let w = (k / mass).sqrt();
                let (s, c) = (w * t).sin_cos();
                (a0 * c + p0 / (mass * w) * s, -mass * w * a0 * s + p0 * c)
            }
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Self::Free => "free".into(),
            Self::Linear { force } => format!("linear(F={force})"),
            Self::Harmonic { k } => format!("harmonic(k={k})"),
        }
    }
}

/// Observables of a grid trajectory, recorded at every step; wave functions
/// kept at `stride`. Wave functions are unit-norm and carry their dynamical
/// phase (no state gauge).
#[derive(Clone, Debug)]
pub struct PacketPath {
    pub grid: Grid,
    pub potential: PotentialSpec,
    pub mass: f64,
    pub dt: f64,
    pub stride: usize,
    pub times: Vec<f64>,
    pub x_mean: Vec<f64>,
    pub p_mean: Vec<f64>,
    pub energy: Vec<f64>,
    pub sigma_eff: Vec<f64>,
    pub states: Vec<(usize, Vec<C64>)>,
}

struct Observer {
    spectral: Spectral,
    v: Vec<f64>,
    mass: f64,
}

impl Observer {
    fn new(grid: Grid, pot: &PotentialSpec, mass: f64) -> Self {
        Self {
            spectral: Spectral::new(grid),
            v: grid.points().map(|x| pot.value(x)).collect(),
            mass,
        }
    }

    /// `(<x>, <p>, <h>, sqrt(Var x))`.
    fn observe(&self, psi: &[C64]) -> (f64, f64, f64, f64) {
        let grid = self.spectral.grid();
        let (mut w, mut wx, mut wx2, mut wv) = (0.0, 0.0, 0.0, 0.0);
        for ((x, a), v) in grid.points().zip(psi).zip(&self.v) {
            let r = a.norm_sqr();
            w += r;
            wx += r * x;
            wx2 += r * x * x;
            wv += r * v;
        }
        let xm = wx / w;
        let var = (wx2 / w - xm * xm).max(0.0);
        let p = self.spectral.momentum_expectation(psi);
        let p2 = self.spectral.momentum_sq_expectation(psi);
        (xm, p, p2 / (2.0 * self.mass) + wv / w, var.sqrt())
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be > 0, got {x}")))
    }
}

fn check_domain(grid: &Grid, x: f64, s: f64) -> Result<()> {
    let (lo, hi) = (x - COVERAGE_WIDTHS * s, x + COVERAGE_WIDTHS * s);
    if grid.covers(lo, hi) {
        Ok(())
    } else {
        Err(Error::DomainExit {
            lo,
            hi,
            grid_lo: grid.x_min,
            grid_hi: grid.x_last(),
        })
    }
}

impl PacketPath {
    fn empty(grid: Grid, potential: PotentialSpec, mass: f64, dt: f64, stride: usize) -> Self {
        Self {
            grid,
            potential,
            mass,
            dt,
            stride,
            times: Vec::new(),
            x_mean: Vec::new(),
            p_mean: Vec::new(),
            energy: Vec::new(),
            sigma_eff: Vec::new(),
            states: Vec::new(),
        }
    }

    fn record(&mut self, obs: &Observer, k: usize, psi: &[C64]) -> (f64, f64) {
        let (x, p, e, s) = obs.observe(psi);
        self.times.push(k as f64 * self.dt);
        self.x_mean.push(x);
        self.p_mean.push(p);
        self.energy.push(e);
        self.sigma_eff.push(s);
        (x, s)
    }

    /// Dense path (stride 1) from explicit wave functions at spacing `dt`.
    pub fn from_states(grid: Grid, potential: PotentialSpec, mass: f64, dt: f64, states: Vec<Vec<C64>>) -> Result<Self> {
        check_positive("mass", mass)?;
        check_positive("dt", dt)?;
        let obs = Observer::new(grid, &potential, mass);
        let mut path = Self::empty(grid, potential, mass, dt, 1);
        for (k, psi) in states.into_iter().enumerate() {
            if psi.len() != grid.len {
                return Err(Error::DimensionMismatch {
                    expected: grid.len,
                    got: psi.len(),
                });
            }
            path.record(&obs, k, &psi);
            path.states.push((k, psi));
        }
        Ok(path)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Gauge-fixed snapshot `i`.
    pub fn state(&self, i: usize) -> Result<State> {
        State::new(self.states[i].1.clone(), self.grid.label())
    }

    /// Largest relative energy deviation from the initial value.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        let scale = e0.abs().max(f64::MIN_POSITIVE);
        self.energy
            .iter()
            .map(|e| (e - e0).abs() / scale)
            .fold(0.0, f64::max)
    }

    /// Largest deviation of `(<x>, <p>)` from the Newtonian path started at
    /// the initial expectation values, each relative to `max(|reference|, 1)`.
    pub fn newtonian_residuals(&self) -> (f64, f64) {
        let (a0, p0) = (self.x_mean[0], self.p_mean[0]);
        let mut rx: f64 = 0.0;
        let mut rp: f64 = 0.0;
        for ((t, x), p) in self.times.iter().zip(&self.x_mean).zip(&self.p_mean) {
            let (xn, pn) = self.potential.newtonian(self.mass, a0, p0, *t);
            rx = rx.max((x - xn).abs() / xn.abs().max(1.0));
            rp = rp.max((p - pn).abs() / pn.abs().max(1.0));
        }
        (rx, rp)
    }
}

/// Strang-split propagation of `phi0` for `steps` steps of `dt`. The packet
/// must stay inside the grid by `6 sigma_eff` at every step.
pub fn split_step_evolve(
    phi0: &ManifoldPoint,
    pot: &PotentialSpec,
    mass: f64,
    dt: f64,
    steps: usize,
    stride: usize,
) -> Result<PacketPath> {
    check_positive("mass", mass)?;
    check_positive("dt", dt)?;
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be >= 1".into()));
    }
    let grid = phi0.grid;
    let hbar = grid.hbar;
    let obs = Observer::new(grid, pot, mass);
    let half_v: Vec<C64> = obs
        .v
        .iter()
        .map(|v| C64::from_polar(1.0, -v * dt / (2.0 * hbar)))
        .collect();
    let kinetic: Vec<C64> = obs
        .spectral
        .wavenumbers()
        .iter()
        .map(|k| C64::from_polar(1.0, -hbar * k * k * dt / (2.0 * mass)))
        .collect();

    let mut psi = phi0.state.amplitudes().to_vec();
    let mut path = PacketPath::empty(grid, *pot, mass, dt, stride);
    let (x, s) = path.record(&obs, 0, &psi);
    check_domain(&grid, x, s)?;
    path.states.push((0, psi.clone()));
    for k in 1..=steps {
        for (a, h) in psi.iter_mut().zip(&half_v) {
            *a *= h;
        }
        obs.spectral.apply_table(&mut psi, &kinetic);
        for (a, h) in psi.iter_mut().zip(&half_v) {
            *a *= h;
        }
        let (x, s) = path.record(&obs, k, &psi);
        check_domain(&grid, x, s)?;
        if k % stride == 0 || k == steps {
            path.states.push((k, psi.clone()));
        }
    }
    Ok(path)
}

/// `sum_k [-hbar arg <phi_k|phi_{k+1}> - dt (E_k + E_{k+1}) / 2]` over a
/// dense path.
pub fn action_quantum(path: &PacketPath) -> Result<f64> {
    if path.stride != 1 || path.states.len() != path.len() {
        return Err(Error::StrideTooCoarse(format!(
            "action needs every step, got stride {} with {} of {} states",
            path.stride,
            path.states.len(),
            path.len()
        )));
    }
    let hbar = path.grid.hbar;
    let mut s = 0.0;
    for (k, w) in path.states.windows(2).enumerate() {
        let c = hilbert::inner(&w[0].1, &w[1].1);
        let infidelity = 1.0 - c.norm();
        let phase = c.arg();
        if infidelity > MAX_STEP_INFIDELITY || phase.abs() > std::f64::consts::FRAC_PI_2 {
            return Err(Error::StrideTooCoarse(format!(
                "step {k}: 1 - |overlap| = {infidelity:.3e}, phase increment {phase:.3}"
            )));
        }
        s += -hbar * phase - path.dt * 0.5 * (path.energy[k] + path.energy[k + 1]);
    }
    Ok(s)
}

/// `int (p da/dt - h(p, a)) dt`: `sum p_mid (a_{k+1} - a_k)` minus the
/// trapezoid of `h`.
pub fn action_classical(times: &[f64], a: &[f64], p: &[f64], pot: &PotentialSpec, mass: f64) -> Result<f64> {
    if a.len() != times.len() || p.len() != times.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            got: a.len().min(p.len()),
        });
    }
    let mut s = 0.0;
    for k in 1..times.len() {
        let dt = times[k] - times[k - 1];
        let p_mid = 0.5 * (p[k] + p[k - 1]);
        let h = 0.5 * (pot.hamiltonian(p[k], a[k], mass) + pot.hamiltonian(p[k - 1], a[k - 1], mass));
        s += p_mid * (a[k] - a[k - 1]) - dt * h;
    }
    Ok(s)
}

/// Dense path of rigid wave packets `g_{a(t), p(t), sigma}` sampled at
/// `times` (uniform spacing).
pub fn rigid_path(
    grid: &Grid,
    sigma: f64,
    pot: &PotentialSpec,
    mass: f64,
    times: &[f64],
    a: &[f64],
    p: &[f64],
) -> Result<PacketPath> {
    if times.len() < 2 || a.len() != times.len() || p.len() != times.len() {
        return Err(Error::InvalidParameter("rigid path needs >= 2 matching samples".into()));
    }
    let dt = times[1] - times[0];
    let states = a
        .iter()
        .zip(p)
        .map(|(&ak, &pk)| packet_amplitudes(&GaussianParams::line(ak, pk, sigma)?, grid))
        .collect::<Result<Vec<_>>>()?;
    PacketPath::from_states(*grid, *pot, mass, dt, states)
}

/// `action_quantum - action_classical` for the rigid packet family following
/// `(a(t), p(t))`.
pub fn action_difference(
    grid: &Grid,
    sigma: f64,
    pot: &PotentialSpec,
    mass: f64,
    times: &[f64],
    a: &[f64],
    p: &[f64],
) -> Result<f64> {
    let path = rigid_path(grid, sigma, pot, mass, times, a, p)?;
    Ok(action_quantum(&path)? - action_classical(times, a, p, pot, mass)?)
}

/// Smooth path on `[0, T]` from `(a0, p0)` to `(a1, p1)` sampled at `n + 1`
/// points: the straight line plus `c sin(pi t/T)` in `a` and
/// `-2c sin(2 pi t/T)` in `p`. Returns `(times, a, p)`.
pub fn shared_endpoint_path(
    n: usize,
    total: f64,
    (a0, p0): (f64, f64),
    (a1, p1): (f64, f64),
    c: f64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    use std::f64::consts::PI;
    let times: Vec<f64> = (0..=n).map(|k| total * k as f64 / n as f64).collect();
    let a = times
        .iter()
        .map(|t| a0 + (a1 - a0) * t / total + c * (PI * t / total).sin())
        .collect();
    let p = times
        .iter()
        .map(|t| p0 + (p1 - p0) * t / total - 2.0 * c * (2.0 * PI * t / total).sin())
        .collect();
    (times, a, p)
}

/// Kinetic-moment rate `hbar^2 d / (8 m sigma^2)` of a width-`sigma` packet.
pub fn kinetic_offset(sigma: f64, mass: f64, hbar: f64, d: usize) -> f64 {
    hbar * hbar * d as f64 / (8.0 * mass * sigma * sigma)
}

/// FS distance between (i) evolving `phi0` under `V = -F x` and (ii) evolving
/// freely, then translating by `F t^2 / 2m` and boosting by `F t`.
pub fn accelerated_frame_distance(phi0: &ManifoldPoint, force: f64, mass: f64, dt: f64, steps: usize) -> Result<f64> {
    let lin = split_step_evolve(phi0, &PotentialSpec::Linear { force }, mass, dt, steps, steps.max(1))?;
    let free = split_step_evolve(phi0, &PotentialSpec::Free, mass, dt, steps, steps.max(1))?;
    let t = steps as f64 * dt;
    let grid = phi0.grid;
    let spectral = Spectral::new(grid);
    let mut psi = free.states.last().expect("final state").1.clone();
    spectral.translate(&mut psi, 0.5 * force * t * t / mass);
    for (a, x) in psi.iter_mut().zip(grid.points()) {
        *a *= C64::from_polar(1.0, force * t * x / grid.hbar);
    }
    let target = lin.states.last().expect("final state").1.clone();
    Ok(hilbert::fs_distance(
        &State::new(psi, grid.label())?,
        &State::new(target, grid.label())?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::wave_packet;
    use crate::rmt::eigh;

    fn packet(grid: &Grid, a: f64, p: f64, sigma: f64) -> ManifoldPoint {
        wave_packet(&GaussianParams::line(a, p, sigma).unwrap(), grid).unwrap()
    }

    #[test]
    fn free_packet_spreads_in_place() {
        let grid = Grid::new(-20.0, 20.0, 1024, 1.0).unwrap();
        let path = split_step_evolve(&packet(&grid, 0.5, 0.0, 1.0), &PotentialSpec::Free, 1.0, 1e-3, 2000, 500).unwrap();
        for ((t, x), s) in path.times.iter().zip(&path.x_mean).zip(&path.sigma_eff) {
            assert!((x - 0.5).abs() < 1e-10);
            let expected = (1.0 + (t / 2.0).powi(2)).sqrt();
            assert!((s - expected).abs() < 1e-8, "t={t}: {s} vs {expected}");
        }
        assert_eq!(path.states.len(), 5);
    }

    #[test]
    fn free_packet_moves_uniformly() {
        let grid = Grid::new(-15.0, 15.0, 1024, 1.0).unwrap();
        let path = split_step_evolve(&packet(&grid, 0.0, 1.0, 1.0), &PotentialSpec::Free, 1.0, 1e-3, 1000, 1000).unwrap();
        assert!((path.x_mean.last().unwrap() - 1.0).abs() < 1e-6);
        assert!(path.energy_drift() < 1e-12);
    }

    #[test]
    fn linear_potential_follows_parabola() {
        let grid = Grid::new(-15.0, 15.0, 1024, 1.0).unwrap();
        let pot = PotentialSpec::Linear { force: 2.0 };
        let path = split_step_evolve(&packet(&grid, 0.0, 0.0, 1.0), &pot, 1.0, 1e-3, 1000, 1000).unwrap();
        assert!((path.x_mean.last().unwrap() - 1.0).abs() < 1e-6);
        let (rx, rp) = path.newtonian_residuals();
        assert!(rx < 1e-6 && rp < 1e-6, "{rx} {rp}");
        assert!(path.energy_drift() < 1e-6);
    }

    #[test]
    fn harmonic_energy_and_ehrenfest() {
        let grid = Grid::new(-10.0, 10.0, 512, 1.0).unwrap();
        let pot = PotentialSpec::Harmonic { k: 1.0 };
        let path = split_step_evolve(&packet(&grid, 1.0, 0.5, 0.7), &pot, 1.0, 1e-3, 2000, 100).unwrap();
        assert!(path.energy_drift() < 1e-6, "{}", path.energy_drift());
        let (rx, rp) = path.newtonian_residuals();
        assert!(rx < 1e-5 && rp < 1e-5, "{rx} {rp}");
    }

    #[test]
    fn domain_exit_detected() {
        let grid = Grid::new(-5.0, 5.0, 256, 1.0).unwrap();
        let err = split_step_evolve(&packet(&grid, 0.0, 3.0, 0.5), &PotentialSpec::Free, 1.0, 1e-2, 500, 1).unwrap_err();
        assert!(matches!(err, Error::DomainExit { .. }));
    }

    #[test]
    fn eigenstate_has_zero_action() {
        let grid = Grid::new(-8.0, 8.0, 64, 1.0).unwrap();
        let pot = PotentialSpec::Harmonic { k: 1.0 };
        let p = Spectral::new(grid).momentum_matrix();
        let mut h = &p * &p * C64::new(0.5, 0.0);
        for (i, x) in grid.points().enumerate() {
            h[(i, i)] += pot.value(x);
        }
        let (vals, vecs) = eigh(&h).unwrap();
        let ground: Vec<C64> = vecs.column(0).iter().copied().collect();
        let dt = 0.01;
        let states = (0..200)
            .map(|k| {
                let ph = C64::from_polar(1.0, -vals[0] * dt * k as f64);
                ground.iter().map(|a| a * ph).collect()
            })
            .collect();
        let path = PacketPath::from_states(grid, pot, 1.0, dt, states).unwrap();
        assert!((path.energy[0] - vals[0]).abs() < 1e-10);
        assert!(action_quantum(&path).unwrap().abs() < 1e-10);
    }

    #[test]
    fn static_gaussian_action() {
        let grid = Grid::new(-10.0, 10.0, 512, 1.0).unwrap();
        let sigma = 0.8;
        let psi = packet_amplitudes(&GaussianParams::line(0.0, 0.0, sigma).unwrap(), &grid).unwrap();
        let path = PacketPath::from_states(grid, PotentialSpec::Free, 1.0, 0.01, vec![psi; 101]).unwrap();
        let expected = -kinetic_offset(sigma, 1.0, 1.0, 1) * 1.0;
        let s = action_quantum(&path).unwrap();
        assert!((s - expected).abs() < 1e-10 * expected.abs(), "{s} vs {expected}");
    }

    #[test]
    fn coarse_stride_rejected() {
        let grid = Grid::new(-15.0, 15.0, 512, 1.0).unwrap();
        let path = split_step_evolve(&packet(&grid, 0.0, 1.0, 1.0), &PotentialSpec::Free, 1.0, 1e-3, 100, 10).unwrap();
        assert!(matches!(action_quantum(&path), Err(Error::StrideTooCoarse(_))));
        let jumpy = vec![
            packet_amplitudes(&GaussianParams::line(0.0, 0.0, 1.0).unwrap(), &grid).unwrap(),
            packet_amplitudes(&GaussianParams::line(3.0, 0.0, 1.0).unwrap(), &grid).unwrap(),
        ];
        let path = PacketPath::from_states(grid, PotentialSpec::Free, 1.0, 0.1, jumpy).unwrap();
        assert!(matches!(action_quantum(&path), Err(Error::StrideTooCoarse(_))));
    }

    fn wiggly(n: usize, c: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        shared_endpoint_path(n, 1.0, (0.0, 0.0), (0.5, 0.3), c)
    }

    #[test]
    fn action_quantum_converges_in_dt() {
        let grid = Grid::new(-4.0, 4.0, 512, 1.0).unwrap();
        let pot = PotentialSpec::Harmonic { k: 1.0 };
        let (t1, a1, p1) = wiggly(500, 0.2);
        let (t2, a2, p2) = wiggly(1000, 0.2);
        let s1 = action_quantum(&rigid_path(&grid, 0.3, &pot, 1.0, &t1, &a1, &p1).unwrap()).unwrap();
        let s2 = action_quantum(&rigid_path(&grid, 0.3, &pot, 1.0, &t2, &a2, &p2).unwrap()).unwrap();
        assert!((s1 - s2).abs() < 1e-6 * s2.abs(), "{s1} {s2}");
    }

    #[test]
    fn classical_action_examples() {
        let n = 10_000;
        let times: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        let zeros = vec![0.0; n + 1];
        assert_eq!(action_classical(&times, &zeros, &zeros, &PotentialSpec::Free, 1.0).unwrap(), 0.0);

        let a: Vec<f64> = times.iter().map(|t| 1.5 * t / 2.0).collect();
        let p = vec![1.5; n + 1];
        let s = action_classical(&times, &a, &p, &PotentialSpec::Free, 2.0).unwrap();
        assert!((s - 1.5 * 1.5 / 4.0).abs() < 1e-12);

        let pot = PotentialSpec::Linear { force: 2.0 };
        let (a, p): (Vec<f64>, Vec<f64>) = times.iter().map(|&t| pot.newtonian(1.0, 0.0, 0.0, t)).unzip();
        let s = action_classical(&times, &a, &p, &pot, 1.0).unwrap();
        assert!((s - 4.0 / 3.0).abs() < 1e-8, "{s}");
    }

    #[test]
    fn action_reduction_is_path_independent() {
        let grid = Grid::new(-3.0, 3.0, 600, 1.0).unwrap();
        let pot = PotentialSpec::Harmonic { k: 1.0 };
        let sigma = 0.1;
        let diffs: Vec<f64> = [0.0, 0.15, -0.25]
            .iter()
            .map(|&c| {
                let (t, a, p) = wiggly(1000, c);
                action_difference(&grid, sigma, &pot, 1.0, &t, &a, &p).unwrap()
            })
            .collect();
        assert!((diffs[1] - diffs[0]).abs() < 1e-4, "{diffs:?}");
        assert!((diffs[2] - diffs[0]).abs() < 1e-4, "{diffs:?}");
        // constant = -[p a] - (hbar^2/(8 m sigma^2) + k sigma^2 / 2) T
        let expected = -0.5 * 0.3 - kinetic_offset(sigma, 1.0, 1.0, 1) - 0.5 * sigma * sigma;
        assert!((diffs[0] - expected).abs() < 1e-6, "{} vs {expected}", diffs[0]);
    }

    #[test]
    fn linear_potential_is_accelerated_frame() {
        let grid = Grid::new(-15.0, 15.0, 1024, 1.0).unwrap();
        let d = accelerated_frame_distance(&packet(&grid, -1.0, 0.5, 1.0), 2.0, 1.0, 1e-3, 1000).unwrap();
        assert!(d < 1e-6, "{d}");
    }
}
