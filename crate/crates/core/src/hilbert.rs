//! Finite-dimensional state arithmetic and Fubini–Study geometry.
//!
//! A [`State`] is a unit vector in `C^n` standing for a point of projective
//! space. Its global phase is fixed so that the first amplitude of largest
//! modulus is real and positive; two states describing the same ray therefore
//! compare equal amplitude by amplitude.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default dimension of abstract state spaces.
pub const DEFAULT_DIM: usize = 128;

/// Numerical tolerances shared by the geometry routines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub norm: f64,
    pub horizontal: f64,
    pub gram: f64,
    pub hermitian: f64,
    pub unitary: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            norm: 1e-12,
            horizontal: 1e-10,
            gram: 1e-8,
            hermitian: 1e-12,
            unitary: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    amplitudes: Vec<C64>,
    basis: String,
}

impl State {
    /// Normalizes `v` and fixes its gauge.
    pub fn new(v: Vec<C64>, basis: impl Into<String>) -> Result<Self> {
        let norm = norm(&v);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::DegenerateState);
        }
        let inv = 1.0 / norm;
        let amplitudes = v.into_iter().map(|a| a * inv).collect();
        Ok(Self::gauge_fixed(amplitudes, basis.into()))
    }

    /// Wraps amplitudes produced by a norm-preserving map. Only the gauge is
    /// fixed, so any norm drift stays observable.
    pub(crate) fn from_unitary_image(amplitudes: Vec<C64>, basis: String) -> Self {
        Self::gauge_fixed(amplitudes, basis)
    }

    fn gauge_fixed(mut amplitudes: Vec<C64>, basis: String) -> Self {
        // ties within rounding go to the lowest index
        let max_mod = amplitudes.iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
        let best = amplitudes
            .iter()
            .position(|a| a.norm_sqr() >= max_mod * (1.0 - 1e-12))
            .unwrap_or(0);
        if max_mod > 0.0 {
            let a = amplitudes[best];
            let phase = a.conj() / a.norm();
            for x in amplitudes.iter_mut() {
                *x *= phase;
            }
            amplitudes[best] = C64::new(amplitudes[best].norm(), 0.0);
        }
        Self { amplitudes, basis }
    }

    pub fn basis_state(dim: usize, index: usize) -> Self {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[index] = C64::new(1.0, 0.0);
        Self {
            amplitudes: v,
            basis: "abstract".into(),
        }
    }

    /// Unitarily invariant random state: normalized complex Gaussian vector.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        loop {
            let v: Vec<C64> = (0..dim)
                .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            if let Ok(s) = Self::new(v, "abstract") {
                return s;
            }
        }
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn basis(&self) -> &str {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// `<self, other>`, antilinear in `self`.
    pub fn inner(&self, other: &State) -> C64 {
        inner(&self.amplitudes, &other.amplitudes)
    }

    pub fn with_basis(mut self, basis: impl Into<String>) -> Self {
        self.basis = basis.into();
        self
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }
}

/// Normalizes a vector in the abstract basis.
pub fn normalize(v: &[C64]) -> Result<State> {
    State::new(v.to_vec(), "abstract")
}

pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    assert_eq!(u.len(), v.len(), "inner product of vectors of different length");
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Fubini–Study distance in `[0, pi/2]`.
///
/// Evaluated as `atan2(|v_perp|, |<u,v>|)`, which stays accurate for nearly
/// coincident states where `acos` loses half the digits.
pub fn fs_distance(u: &State, v: &State) -> f64 {
    let c = u.inner(v);
    let perp: f64 = u
        .amplitudes
        .iter()
        .zip(&v.amplitudes)
        .map(|(a, b)| (b - a * c).norm_sqr())
        .sum::<f64>()
        .sqrt();
    perp.atan2(c.norm())
}

/// Born transition probability `|<u,v>|^2`.
pub fn transition_probability(u: &State, v: &State) -> f64 {
    u.inner(v).norm_sqr().clamp(0.0, 1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    pub components: Vec<C64>,
    pub base: State,
}

impl TangentVector {
    pub fn norm(&self) -> f64 {
        norm(&self.components)
    }
}

/// Removes the component of `w` along `base`.
pub fn horizontal_project(base: &State, w: &[C64]) -> TangentVector {
    let b = base.amplitudes();
    let c = inner(b, w);
    let components = w.iter().zip(b).map(|(wi, bi)| wi - bi * c).collect();
    TangentVector {
        components,
        base: base.clone(),
    }
}

/// Orthonormal family of horizontal vectors at a base state.
#[derive(Clone, Debug)]
pub struct HorizontalFrame {
    base: State,
    vectors: Vec<Vec<C64>>,
}

impl HorizontalFrame {
    pub fn new(base: State, vectors: Vec<Vec<C64>>) -> Result<Self> {
        Self::with_tolerances(base, vectors, &Tolerances::default())
    }

    pub fn with_tolerances(base: State, vectors: Vec<Vec<C64>>, tol: &Tolerances) -> Result<Self> {
        let n = base.dim();
        for v in &vectors {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        let mut deviation: f64 = 0.0;
        for (i, u) in vectors.iter().enumerate() {
            for (j, v) in vectors.iter().enumerate().skip(i) {
                let g = inner(u, v);
                let target = if i == j { 1.0 } else { 0.0 };
                deviation = deviation.max((g - target).norm());
            }
        }
        if deviation > tol.gram {
            return Err(Error::NonOrthonormalFrame {
                deviation,
                tolerance: tol.gram,
            });
        }
        for (index, v) in vectors.iter().enumerate() {
            let overlap = inner(base.amplitudes(), v).norm();
            if overlap > tol.gram {
                return Err(Error::NonHorizontalFrame { index, overlap });
            }
        }
        Ok(Self { base, vectors })
    }

    /// A full frame of `n - 1` vectors spanning the horizontal space at `base`,
    /// built by Gram–Schmidt over the standard basis.
    pub fn complete(base: &State) -> Self {
        let n = base.dim();
        let b = base.amplitudes();
        let mut vectors: Vec<Vec<C64>> = Vec::with_capacity(n.saturating_sub(1));
        for k in 0..n {
            if vectors.len() + 1 == n {
                break;
            }
            let mut w = vec![C64::new(0.0, 0.0); n];
            w[k] = C64::new(1.0, 0.0);
            // twice is enough for double precision
            for _ in 0..2 {
                let c = inner(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= bi * c;
                }
                for v in &vectors {
                    let c = inner(v, &w);
                    for (wi, vi) in w.iter_mut().zip(v) {
                        *wi -= vi * c;
                    }
                }
            }
            let nw = norm(&w);
            if nw > 1e-6 {
                vectors.push(w.into_iter().map(|x| x / nw).collect());
            }
        }
        Self {
            base: base.clone(),
            vectors,
        }
    }

    pub fn base(&self) -> &State {
        &self.base
    }

    pub fn vectors(&self) -> &[Vec<C64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Coordinates `c_k = <e_k, t>` of a tangent vector in a horizontal frame.
pub fn tangent_components(t: &TangentVector, frame: &HorizontalFrame) -> Result<Vec<C64>> {
    if t.components.len() != frame.base.dim() {
        return Err(Error::DimensionMismatch {
            expected: frame.base.dim(),
            got: t.components.len(),
        });
    }
    Ok(frame.vectors.iter().map(|e| inner(e, &t.components)).collect())
}

/// `sum_k c_k e_k`.
pub fn reconstruct(components: &[C64], frame: &HorizontalFrame) -> Vec<C64> {
    let n = frame.base.dim();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (c, e) in components.iter().zip(&frame.vectors) {
        for (o, ei) in out.iter_mut().zip(e) {
            *o += c * ei;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn normalize_scales() {
        let s = normalize(&[c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(s.amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn normalize_rejects_zero() {
        assert_eq!(normalize(&[c(0.0, 0.0); 4]), Err(Error::DegenerateState));
    }

    #[test]
    fn normalize_fixes_gauge() {
        let s = normalize(&[c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-12);
        // tie in modulus: the first one is made real positive
        assert_eq!(s.amplitudes()[0].im, 0.0);
        assert!(s.amplitudes()[0].re > 0.0);
        let t = normalize(&[c(0.0, 3.0), c(-3.0, 0.0)]).unwrap();
        assert!(fs_distance(&s, &t) < 1e-12);
        for (a, b) in s.amplitudes().iter().zip(t.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn fs_distance_basics() {
        let e0 = State::basis_state(4, 0);
        let e1 = State::basis_state(4, 1);
        assert_eq!(fs_distance(&e0, &e0), 0.0);
        assert!((fs_distance(&e0, &e1) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(transition_probability(&e0, &e0), 1.0);
        assert_eq!(transition_probability(&e0, &e1), 0.0);
    }

    #[test]
    fn horizontal_projection_cases() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let base = State::random(6, &mut rng);
        let t = horizontal_project(&base, base.amplitudes());
        assert!(t.norm() < 1e-15);

        let e = horizontal_project(&base, State::random(6, &mut rng).amplitudes()).components;
        let t = horizontal_project(&base, &e);
        for (a, b) in t.components.iter().zip(&e) {
            assert!((a - b).norm() < 1e-15);
        }
        let w: Vec<C64> = base.amplitudes().iter().zip(&e).map(|(b, x)| b + x).collect();
        let t = horizontal_project(&base, &w);
        for (a, b) in t.components.iter().zip(&e) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn tangent_components_cases() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let base = State::random(8, &mut rng);
        let frame = HorizontalFrame::complete(&base);
        assert_eq!(frame.len(), 7);
        let frame = HorizontalFrame::new(base.clone(), frame.vectors().to_vec()).unwrap();

        let t = TangentVector {
            components: frame.vectors()[0].clone(),
            base: base.clone(),
        };
        let comps = tangent_components(&t, &frame).unwrap();
        assert!((comps[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(comps[1..].iter().all(|x| x.norm() < 1e-12));

        let zero = TangentVector {
            components: vec![c(0.0, 0.0); 8],
            base: base.clone(),
        };
        assert!(tangent_components(&zero, &frame)
            .unwrap()
            .iter()
            .all(|x| *x == c(0.0, 0.0)));

        let w = State::random(8, &mut rng);
        let t = horizontal_project(&base, w.amplitudes());
        let comps = tangent_components(&t, &frame).unwrap();
        let back = reconstruct(&comps, &frame);
        let residual: f64 = norm(
            &back
                .iter()
                .zip(&t.components)
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>(),
        );
        assert!(residual < 1e-10, "residual {residual}");
    }

    #[test]
    fn frame_rejects_non_orthonormal() {
        let base = State::basis_state(3, 0);
        let v1 = vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)];
        let v2 = vec![c(0.0, 0.0), c(1.0, 0.0), c(0.1, 0.0)];
        assert!(matches!(
            HorizontalFrame::new(base.clone(), vec![v1.clone(), v2]),
            Err(Error::NonOrthonormalFrame { .. })
        ));
        let v3 = vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        assert!(matches!(
            HorizontalFrame::new(base, vec![v1, v3]),
            Err(Error::NonHorizontalFrame { index: 1, .. })
        ));
    }

    #[test]
    fn triangle_inequality_random_triples() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for trial in 0..10_000 {
            let n = 2 + trial % 7;
            let (a, b, c) = (
                State::random(n, &mut rng),
                State::random(n, &mut rng),
                State::random(n, &mut rng),
            );
            let lhs = fs_distance(&a, &c);
            let rhs = fs_distance(&a, &b) + fs_distance(&b, &c);
            assert!(lhs <= rhs + 1e-10, "violation {lhs} > {rhs}");
        }
    }

    #[test]
    fn completeness_of_transition_probabilities() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let u = State::random(10, &mut rng);
        let v = State::random(10, &mut rng);
        // v completed to an orthonormal basis
        let frame = HorizontalFrame::complete(&v);
        let mut total = transition_probability(&u, &v);
        for e in frame.vectors() {
            total += inner(e, u.amplitudes()).norm_sqr();
        }
        assert!((total - 1.0).abs() < 1e-10);
    }

    fn arb_vec(n: usize) -> impl Strategy<Value = Vec<C64>> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
            .prop_map(|v| v.into_iter().map(|(re, im)| C64::new(re, im)).collect())
    }

    proptest! {
        #[test]
        fn global_phase_invariance(u in arb_vec(5), v in arb_vec(5), phase in 0.0f64..std::f64::consts::TAU) {
            prop_assume!(norm(&u) > 1e-3 && norm(&v) > 1e-3);
            let s = normalize(&u).unwrap();
            let t = normalize(&v).unwrap();
            let rot = C64::from_polar(1.0, phase);
            let raw: Vec<C64> = s.amplitudes().iter().map(|a| a * rot).collect();
            let s_rot = State { amplitudes: raw, basis: "abstract".into() };
            prop_assert!((fs_distance(&s, &t) - fs_distance(&s_rot, &t)).abs() < 1e-12);
            prop_assert!((transition_probability(&s, &t) - transition_probability(&t, &s_rot)).abs() < 1e-12);
            prop_assert!((transition_probability(&s, &t) - fs_distance(&s, &t).cos().powi(2)).abs() < 1e-12);
            prop_assert!((fs_distance(&s, &t) - fs_distance(&t, &s)).abs() < 1e-14);
        }

        #[test]
        fn projection_is_idempotent(b in arb_vec(6), w in arb_vec(6)) {
            prop_assume!(norm(&b) > 1e-3);
            let base = normalize(&b).unwrap();
            let once = horizontal_project(&base, &w);
            let twice = horizontal_project(&base, &once.components);
            for (x, y) in once.components.iter().zip(&twice.components) {
                prop_assert!((x - y).norm() < 1e-12);
            }
            prop_assert!(inner(base.amplitudes(), &once.components).norm() < 1e-10);
        }

        #[test]
        fn normalize_preserves_direction(v in arb_vec(4)) {
            prop_assume!(norm(&v) > 1e-3);
            let s = normalize(&v).unwrap();
            prop_assert!((s.norm() - 1.0).abs() < 1e-12);
            let raw = State { amplitudes: v.iter().map(|a| a / norm(&v)).collect(), basis: "abstract".into() };
            prop_assert!(fs_distance(&s, &raw) < 1e-7);
        }
    }
}
