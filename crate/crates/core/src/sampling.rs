//! Seedable random streams and the spherical densities the protocols draw from.
//!
//! Densities are per unit solid angle on `S₂`. Samplers are exact: every
//! rejection step uses an envelope that is a proven pointwise upper bound of
//! its target, so acceptance probabilities never exceed one.

use std::f64::consts::{FRAC_1_PI, PI};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::bloch::{collapse, theta, BlochVector, CollapseData, StateParam};
use crate::error::{Error, Result};

/// Guard band for float round-off in the non-negativity of `ρ̃_x`.
pub const CLAMP_BAND: f64 = 1e-12;
/// Below this, a negative `ρ̃_x` is a genuine violation rather than round-off.
pub const VIOLATION_BAND: f64 = 1e-9;

/// A reproducible random stream identified by `(seed, stream)`.
///
/// Backed by ChaCha8 with the 64-bit stream id selecting one of 2⁶⁴
/// independent keystreams, so round `r` of a run draws the same numbers
/// regardless of how rounds are scheduled across workers.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    #[inline]
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Probability density per unit solid angle.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct DensityEval(pub f64);

impl DensityEval {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Uniform in `(0, 1]`; keeps `√u` and `ln u` finite.
#[inline]
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Unit vector about `axis` with polar cosine `t` and azimuth `phi`.
#[inline]
fn about_axis(axis: BlochVector, t: f64, phi: f64) -> BlochVector {
    let (e1, e2) = axis.orthonormal_frame();
    let s = (1.0 - t * t).max(0.0).sqrt();
    let (sp, cp) = phi.sin_cos();
    axis * t + e1 * (s * cp) + e2 * (s * sp)
}

#[inline]
fn azimuth<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    2.0 * PI * rng.random::<f64>()
}

pub fn sample_uniform_sphere<R: Rng + ?Sized>(rng: &mut R) -> BlochVector {
    let v: [f64; 3] = UnitSphere.sample(rng);
    BlochVector::from_array(v)
}

/// `λ ~ Θ(λ·v)/π`: polar cosine with density `2t` on `(0, 1]`, uniform azimuth.
pub fn sample_theta_hemisphere<R: Rng + ?Sized>(rng: &mut R, v: BlochVector) -> BlochVector {
    let t = open_unit(rng).sqrt();
    about_axis(v, t, azimuth(rng))
}

/// Result of the two-vector "choice" construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegorreChoice {
    pub chosen: BlochVector,
    /// `true` when the first vector was kept (message `c = 1`).
    pub first: bool,
    pub lambda1: BlochVector,
    pub lambda2: BlochVector,
}

/// Keeps the one of two given vectors with the larger `|λ·v|` (ties keep the first).
/// The kept vector is distributed as `|λ·v|/(2π)` when both inputs are uniform.
#[inline]
pub fn choose_aligned(v: BlochVector, lambda1: BlochVector, lambda2: BlochVector) -> DegorreChoice {
    let first = v.dot(lambda1).abs() >= v.dot(lambda2).abs();
    DegorreChoice {
        chosen: if first { lambda1 } else { lambda2 },
        first,
        lambda1,
        lambda2,
    }
}

pub fn degorre_choice<R: Rng + ?Sized>(rng: &mut R, v: BlochVector) -> DegorreChoice {
    let l1 = sample_uniform_sphere(rng);
    let l2 = sample_uniform_sphere(rng);
    choose_aligned(v, l1, l2)
}

impl CollapseData {
    /// `ρ_x(λ) = p₊Θ(λ·v₊)/π + p₋Θ(λ·v₋)/π`.
    #[inline]
    pub fn rho(&self, lambda: BlochVector) -> f64 {
        (self.p_plus * theta(lambda.dot(self.v_plus))
            + self.p_minus * theta(lambda.dot(self.v_minus)))
            * FRAC_1_PI
    }

    /// `ρ_x(λ) − (2p−1)Θ(λ·ẑ)/π` without any clamping.
    #[inline]
    pub fn rho_tilde_raw(&self, lambda: BlochVector) -> f64 {
        self.rho(lambda) - self.bias * theta(lambda.z) * FRAC_1_PI
    }

    /// `ρ̃_x(λ)`, with round-off negatives clamped to zero.
    #[inline]
    pub fn rho_tilde(&self, lambda: BlochVector) -> Result<f64> {
        let v = self.rho_tilde_raw(lambda);
        if v >= 0.0 {
            Ok(v)
        } else if v >= -VIOLATION_BAND {
            Ok(0.0)
        } else {
            Err(Error::Consistency(format!(
                "rho_tilde({lambda:?}) = {v:e} is negative"
            )))
        }
    }
}

pub fn eval_rho(state: StateParam, x: BlochVector, lambda: BlochVector) -> Result<DensityEval> {
    Ok(DensityEval(collapse(state, x)?.rho(lambda)))
}

pub fn eval_rho_tilde(
    state: StateParam,
    x: BlochVector,
    lambda: BlochVector,
) -> Result<DensityEval> {
    collapse(state, x)?.rho_tilde(lambda).map(DensityEval)
}

/// `ρ̃_max` as a function of `cosθ = λ·ẑ`.
#[inline]
pub fn rho_tilde_max_at(state: StateParam, cos_theta: f64) -> f64 {
    let c = state.bias();
    let sin2 = (1.0 - cos_theta * cos_theta).max(0.0);
    let one_minus_c2 = 1.0 - c * c;
    if one_minus_c2 == 0.0 {
        return 0.0;
    }
    one_minus_c2 / ((1.0 - c * c * sin2).sqrt() + c * cos_theta.abs()) / (2.0 * PI)
}

/// Pointwise envelope of every `ρ̃_x` for this state, depending only on `λ·ẑ`.
pub fn eval_rho_tilde_max(state: StateParam, lambda: BlochVector) -> DensityEval {
    DensityEval(rho_tilde_max_at(state, lambda.z))
}

/// `√(p(1−p))/π`, the global maximum of `ρ̃_max` (at the equator).
#[inline]
pub fn rho_tilde_bound(state: StateParam) -> f64 {
    (state.p() * (1.0 - state.p())).sqrt() * FRAC_1_PI
}

/// `N(p) = ∫ρ̃_max = 2p(1−p)/(2p−1)·ln(p/(1−p)) + 2(1−p)` on `(1/2, 1]`.
///
/// Evaluated as `(1−C²)/C·atanh(C) + (1−C)` with `C = 2p−1`, which is the
/// same expression but keeps full precision as `p → 1/2`.
pub fn n_of_p(state: StateParam) -> Result<f64> {
    let c = state.bias();
    if c <= 0.0 {
        return Err(Error::Domain {
            what: "N(p)".into(),
            range: "(1/2, 1]".into(),
            p: state.p(),
        });
    }
    if c >= 1.0 {
        return Ok(0.0);
    }
    Ok((1.0 - c * c) / c * c.atanh() + (1.0 - c))
}

/// Smallest `p` with `N(p) ≤ 1`, located by bisection to `tol`.
pub fn one_bit_threshold(tol: f64) -> f64 {
    let n = |p: f64| n_of_p(StateParam::new(p).unwrap()).unwrap();
    // N is decreasing on (1/2, 1] with N(1/2⁺) = 2 and N(1) = 0.
    let (mut lo, mut hi) = (0.5 + 1e-9, 1.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if n(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Draw from `ρ̃_max/N(p)`, also returning the number of proposals used.
pub fn sample_rho_tilde_max_counted<R: Rng + ?Sized>(
    rng: &mut R,
    state: StateParam,
) -> Result<(BlochVector, u32)> {
    if state.p() >= 1.0 {
        return Err(Error::Domain {
            what: "sampling rho_tilde_max".into(),
            range: "[1/2, 1)".into(),
            p: state.p(),
        });
    }
    let envelope = rho_tilde_bound(state);
    let mut trials = 0u32;
    loop {
        trials += 1;
        // cosθ of a uniform point on the sphere is uniform on [−1, 1].
        let t = 2.0 * rng.random::<f64>() - 1.0;
        let u = rng.random::<f64>();
        if u * envelope < rho_tilde_max_at(state, t) {
            return Ok((about_axis(BlochVector::Z, t, azimuth(rng)), trials));
        }
    }
}

pub fn sample_rho_tilde_max<R: Rng + ?Sized>(
    rng: &mut R,
    state: StateParam,
) -> Result<BlochVector> {
    sample_rho_tilde_max_counted(rng, state).map(|(v, _)| v)
}

/// Draw from `ρ̃_x/(2(1−p))` by thinning `ρ̃_max` proposals; returns the
/// number of `ρ̃_max` draws consumed alongside the sample.
pub fn sample_rho_tilde_counted<R: Rng + ?Sized>(
    rng: &mut R,
    state: StateParam,
    collapsed: &CollapseData,
) -> Result<(BlochVector, u32)> {
    if state.p() >= 1.0 {
        return Err(Error::Domain {
            what: "sampling rho_tilde (identically zero at p = 1)".into(),
            range: "[1/2, 1)".into(),
            p: state.p(),
        });
    }
    let mut proposals = 0u32;
    loop {
        proposals += 1;
        let lambda = sample_rho_tilde_max(rng, state)?;
        let ratio = collapsed.rho_tilde(lambda)? / rho_tilde_max_at(state, lambda.z);
        if ratio > 1.0 + CLAMP_BAND {
            return Err(Error::Consistency(format!(
                "rho_tilde exceeds rho_tilde_max by ratio {ratio} at {lambda:?}"
            )));
        }
        if rng.random::<f64>() < ratio {
            return Ok((lambda, proposals));
        }
    }
}

pub fn sample_rho_tilde<R: Rng + ?Sized>(
    rng: &mut R,
    state: StateParam,
    x: BlochVector,
) -> Result<BlochVector> {
    let c = collapse(state, x)?;
    sample_rho_tilde_counted(rng, state, &c).map(|(v, _)| v)
}
