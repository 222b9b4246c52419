//! Exact two-qubit quantum mechanics for the state `√p|00⟩ + √(1−p)|11⟩`.
//!
//! Everything in the rest of the crate is checked against the functions here.
//! Two independent routes are provided for the joint outcome distribution:
//! an explicit 4×4 density-matrix trace ([`born_joint`]) and the closed-form
//! correlation expansion ([`born_joint_closed_form`]).

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|v| = 1` for vectors accepted as measurements or states.
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// Below this marginal the post-measurement state is treated as undefined.
const DEGENERATE_MARGINAL: f64 = 1e-15;

/// Heaviside step with `H(0) = 1`.
#[inline]
pub fn heaviside(z: f64) -> f64 {
    if z >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// `Θ(z) = H(z)·z`.
#[inline]
pub fn theta(z: f64) -> f64 {
    if z >= 0.0 {
        z
    } else {
        0.0
    }
}

/// Outcome of a ±1-valued measurement. `sgn(0)` maps to [`Outcome::Plus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    #[inline]
    pub fn sgn(z: f64) -> Self {
        if z >= 0.0 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    #[inline]
    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    #[inline]
    pub fn sign(self) -> f64 {
        f64::from(self.value())
    }

    /// Table index: 0 for +1, 1 for −1.
    #[inline]
    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }

    pub fn from_value(v: i8) -> Option<Self> {
        match v {
            1 => Some(Outcome::Plus),
            -1 => Some(Outcome::Minus),
            _ => None,
        }
    }

    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];
}

/// A real 3-vector; unit length when it stands for a measurement direction
/// or a pure qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const X: BlochVector = BlochVector::new(1.0, 0.0, 0.0);
    pub const Y: BlochVector = BlochVector::new(0.0, 1.0, 0.0);
    pub const Z: BlochVector = BlochVector::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        BlochVector { x, y, z }
    }

    /// Builds a vector and rejects it unless its norm is 1 within [`UNIT_TOLERANCE`].
    pub fn unit(x: f64, y: f64, z: f64) -> Result<Self> {
        BlochVector::new(x, y, z).validated()
    }

    /// Scales `(x, y, z)` onto the sphere. Fails for the zero vector or non-finite input.
    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = BlochVector::new(x, y, z);
        let n = v.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NotUnit { x, y, z, norm: n });
        }
        Ok(v * (1.0 / n))
    }

    pub fn validated(self) -> Result<Self> {
        let n = self.norm();
        if (n - 1.0).abs() > UNIT_TOLERANCE || !n.is_finite() {
            return Err(Error::NotUnit {
                x: self.x,
                y: self.y,
                z: self.z,
                norm: n,
            });
        }
        Ok(self)
    }

    #[inline]
    pub fn dot(self, other: BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    #[inline]
    pub fn cross(self, o: BlochVector) -> BlochVector {
        BlochVector::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Two unit vectors completing `self` to a right-handed orthonormal frame.
    pub fn orthonormal_frame(self) -> (BlochVector, BlochVector) {
        // Duff et al., "Building an Orthonormal Basis, Revisited" (2017).
        let sign = 1.0f64.copysign(self.z);
        let a = -1.0 / (sign + self.z);
        let b = self.x * self.y * a;
        (
            BlochVector::new(1.0 + sign * self.x * self.x * a, sign * b, -sign * self.x),
            BlochVector::new(b, sign + self.y * self.y * a, -self.y),
        )
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        BlochVector::new(a[0], a[1], a[2])
    }
}

impl Add for BlochVector {
    type Output = BlochVector;
    fn add(self, o: BlochVector) -> BlochVector {
        BlochVector::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for BlochVector {
    type Output = BlochVector;
    fn sub(self, o: BlochVector) -> BlochVector {
        BlochVector::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for BlochVector {
    type Output = BlochVector;
    fn neg(self) -> BlochVector {
        BlochVector::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for BlochVector {
    type Output = BlochVector;
    fn mul(self, s: f64) -> BlochVector {
        BlochVector::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Schmidt coefficient `p ∈ [1/2, 1]` of `√p|00⟩ + √(1−p)|11⟩`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct StateParam(f64);

impl StateParam {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.5..=1.0).contains(&p) {
            return Err(Error::InvalidState(p));
        }
        Ok(StateParam(p))
    }

    pub const MAXIMALLY_ENTANGLED: StateParam = StateParam(0.5);
    pub const PRODUCT: StateParam = StateParam(1.0);

    #[inline]
    pub fn p(self) -> f64 {
        self.0
    }

    /// `C = 2p − 1`, the weight of the communication-free part of every `ρ_x`.
    #[inline]
    pub fn bias(self) -> f64 {
        2.0 * self.0 - 1.0
    }

    /// `2√(p(1−p))`, the transverse correlation strength.
    #[inline]
    pub fn coherence(self) -> f64 {
        2.0 * (self.0 * (1.0 - self.0)).sqrt()
    }

    fn amplitudes(self) -> [f64; 2] {
        [self.0.sqrt(), (1.0 - self.0).sqrt()]
    }
}

impl TryFrom<f64> for StateParam {
    type Error = Error;
    fn try_from(p: f64) -> Result<Self> {
        StateParam::new(p)
    }
}

impl From<StateParam> for f64 {
    fn from(s: StateParam) -> f64 {
        s.0
    }
}

/// Born-rule probabilities `p(a, b)` indexed by [`Outcome::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub probs: [[f64; 2]; 2],
}

impl JointDistribution {
    #[inline]
    pub fn get(&self, a: Outcome, b: Outcome) -> f64 {
        self.probs[a.index()][b.index()]
    }

    /// `E = Σ ab·p(a,b)`.
    pub fn correlation(&self) -> f64 {
        self.probs[0][0] + self.probs[1][1] - self.probs[0][1] - self.probs[1][0]
    }

    pub fn alice_marginal(&self, a: Outcome) -> f64 {
        self.probs[a.index()].iter().sum()
    }

    pub fn bob_marginal(&self, b: Outcome) -> f64 {
        self.probs[0][b.index()] + self.probs[1][b.index()]
    }

    pub fn flat(&self) -> [f64; 4] {
        [
            self.probs[0][0],
            self.probs[0][1],
            self.probs[1][0],
            self.probs[1][1],
        ]
    }
}

// ---------------------------------------------------------------------------
// Density-matrix route
// ---------------------------------------------------------------------------

type Mat2 = [[Complex64; 2]; 2];
type Mat4 = [[Complex64; 4]; 4];

/// `(1 + s·n·σ)/2` as an explicit 2×2 matrix.
fn projector(n: BlochVector, s: Outcome) -> Mat2 {
    let h = 0.5 * s.sign();
    [
        [
            Complex64::new(0.5 + h * n.z, 0.0),
            Complex64::new(h * n.x, -h * n.y),
        ],
        [
            Complex64::new(h * n.x, h * n.y),
            Complex64::new(0.5 - h * n.z, 0.0),
        ],
    ]
}

fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = [[Complex64::new(0.0, 0.0); 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[2 * i + k][2 * j + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn density_matrix(state: StateParam) -> Mat4 {
    let [s0, s1] = state.amplitudes();
    let psi = [s0, 0.0, 0.0, s1];
    let mut rho = [[Complex64::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            rho[i][j] = Complex64::new(psi[i] * psi[j], 0.0);
        }
    }
    rho
}

fn trace_product(a: &Mat4, b: &Mat4) -> Complex64 {
    let mut t = Complex64::new(0.0, 0.0);
    for i in 0..4 {
        for k in 0..4 {
            t += a[i][k] * b[k][i];
        }
    }
    t
}

/// `p_Q(a,b|x,y) = Tr[|ax⟩⟨ax| ⊗ |by⟩⟨by| · |Ψ⟩⟨Ψ|]` by explicit 4×4 algebra.
pub fn born_joint(state: StateParam, x: BlochVector, y: BlochVector) -> Result<JointDistribution> {
    let (x, y) = (x.validated()?, y.validated()?);
    let rho = density_matrix(state);
    let mut probs = [[0.0; 2]; 2];
    for a in Outcome::BOTH {
        for b in Outcome::BOTH {
            let op = kron(&projector(x, a), &projector(y, b));
            probs[a.index()][b.index()] = trace_product(&op, &rho).re;
        }
    }
    Ok(JointDistribution { probs })
}

/// Closed-form correlation `E(x,y) = x_z y_z + 2√(p(1−p))(x_x y_x − x_y y_y)`.
#[inline]
pub fn correlation_closed_form(state: StateParam, x: BlochVector, y: BlochVector) -> f64 {
    x.z * y.z + state.coherence() * (x.x * y.x - x.y * y.y)
}

/// `p_Q(a,b) = ¼[1 + a·C·x_z + b·C·y_z + ab·E(x,y)]` with `C = 2p − 1`.
pub fn born_joint_closed_form(
    state: StateParam,
    x: BlochVector,
    y: BlochVector,
) -> Result<JointDistribution> {
    let (x, y) = (x.validated()?, y.validated()?);
    let c = state.bias();
    let e = correlation_closed_form(state, x, y);
    let mut probs = [[0.0; 2]; 2];
    for a in Outcome::BOTH {
        for b in Outcome::BOTH {
            let (sa, sb) = (a.sign(), b.sign());
            probs[a.index()][b.index()] = 0.25 * (1.0 + sa * c * x.z + sb * c * y.z + sa * sb * e);
        }
    }
    Ok(JointDistribution { probs })
}

// ---------------------------------------------------------------------------
// Collapse
// ---------------------------------------------------------------------------

/// Alice's marginals and Bob's conditional pure states for one setting `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseData {
    pub p_plus: f64,
    pub p_minus: f64,
    pub v_plus: BlochVector,
    pub v_minus: BlochVector,
    /// The branch with zero probability whose `v` was set to `ẑ` by convention.
    pub degenerate: Option<Outcome>,
    /// `C = 2p − 1` of the state this was computed for.
    pub bias: f64,
}

impl CollapseData {
    #[inline]
    pub fn marginal(&self, a: Outcome) -> f64 {
        match a {
            Outcome::Plus => self.p_plus,
            Outcome::Minus => self.p_minus,
        }
    }

    #[inline]
    pub fn post_state(&self, a: Outcome) -> BlochVector {
        match a {
            Outcome::Plus => self.v_plus,
            Outcome::Minus => self.v_minus,
        }
    }
}

/// Spinor `|+n⟩` for a unit vector `n`, stable over the whole sphere.
fn spinor(n: BlochVector) -> [Complex64; 2] {
    if n.z >= 0.0 {
        let s = (2.0 * (1.0 + n.z)).sqrt();
        [
            Complex64::new((1.0 + n.z) / s, 0.0),
            Complex64::new(n.x / s, n.y / s),
        ]
    } else {
        let s = (2.0 * (1.0 - n.z)).sqrt();
        [
            Complex64::new(n.x / s, -n.y / s),
            Complex64::new((1.0 - n.z) / s, 0.0),
        ]
    }
}

/// Bloch vector of an (unnormalized) qubit amplitude pair, with its squared norm.
fn bloch_of(amp: [Complex64; 2]) -> (BlochVector, f64) {
    let n0 = amp[0].norm_sqr();
    let n1 = amp[1].norm_sqr();
    let norm = n0 + n1;
    let off = amp[0].conj() * amp[1];
    (
        BlochVector::new(2.0 * off.re / norm, 2.0 * off.im / norm, (n0 - n1) / norm),
        norm,
    )
}

/// Alice measures `x`; returns `p_±` and the collapsed states `v_±` of Bob's qubit.
pub fn collapse(state: StateParam, x: BlochVector) -> Result<CollapseData> {
    let x = x.validated()?;
    let c = state.bias();
    let amps = state.amplitudes();
    let mut marginals = [0.0; 2];
    let mut posts = [BlochVector::Z; 2];
    let mut degenerate = None;
    for a in Outcome::BOTH {
        let phi = spinor(x * a.sign());
        // ⟨±x|_A ⊗ 1 applied to √p|00⟩ + √(1−p)|11⟩
        let bob = [phi[0].conj() * amps[0], phi[1].conj() * amps[1]];
        marginals[a.index()] = 0.5 * (1.0 + a.sign() * c * x.z);
        let (v, weight) = bloch_of(bob);
        if weight <= DEGENERATE_MARGINAL {
            degenerate = Some(a);
        } else {
            posts[a.index()] = v;
        }
    }
    Ok(CollapseData {
        p_plus: marginals[0],
        p_minus: marginals[1],
        v_plus: posts[0],
        v_minus: posts[1],
        degenerate,
        bias: c,
    })
}

/// CHSH value `S = E(x₁,y₁) + E(x₁,y₂) + E(x₂,y₁) − E(x₂,y₂)` from the oracle.
pub fn chsh_value(state: StateParam, settings: &ChshSettings) -> Result<f64> {
    let e = |x, y| born_joint(state, x, y).map(|j| j.correlation());
    Ok(
        e(settings.x1, settings.y1)? + e(settings.x1, settings.y2)? + e(settings.x2, settings.y1)?
            - e(settings.x2, settings.y2)?,
    )
}

/// The four directions of a CHSH experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub x1: BlochVector,
    pub x2: BlochVector,
    pub y1: BlochVector,
    pub y2: BlochVector,
}

impl ChshSettings {
    /// `x₁ = ẑ, x₂ = x̂, y₁ = (ẑ+x̂)/√2, y₂ = (ẑ−x̂)/√2`, optimal for `p = 1/2`.
    pub fn tsirelson() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        ChshSettings {
            x1: BlochVector::Z,
            x2: BlochVector::X,
            y1: BlochVector::new(h, 0.0, h),
            y2: BlochVector::new(-h, 0.0, h),
        }
    }

    /// Settings in the x–z plane parametrized by angles from `ẑ`.
    pub fn in_xz_plane(ax1: f64, ax2: f64, by1: f64, by2: f64) -> Self {
        let dir = |t: f64| BlochVector::new(t.sin(), 0.0, t.cos());
        ChshSettings {
            x1: dir(ax1),
            x2: dir(ax2),
            y1: dir(by1),
            y2: dir(by2),
        }
    }

    /// The four `(x, y)` pairs in the order `(1,1), (1,2), (2,1), (2,2)`.
    pub fn pairs(&self) -> [(BlochVector, BlochVector); 4] {
        [
            (self.x1, self.y1),
            (self.x1, self.y2),
            (self.x2, self.y1),
            (self.x2, self.y2),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sp(p: f64) -> StateParam {
        StateParam::new(p).unwrap()
    }

    #[test]
    fn singlet_like_zz_is_perfectly_correlated() {
        let j = born_joint(sp(0.5), BlochVector::Z, BlochVector::Z).unwrap();
        assert_abs_diff_eq!(j.get(Outcome::Plus, Outcome::Plus), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(j.get(Outcome::Minus, Outcome::Minus), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(j.get(Outcome::Plus, Outcome::Minus), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(j.get(Outcome::Minus, Outcome::Plus), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn product_state_zz() {
        let j = born_joint(sp(1.0), BlochVector::Z, BlochVector::Z).unwrap();
        assert_abs_diff_eq!(j.get(Outcome::Plus, Outcome::Plus), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(j.flat().iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn xx_correlation_at_p07() {
        let j = born_joint(sp(0.7), BlochVector::X, BlochVector::X).unwrap();
        assert_abs_diff_eq!(j.correlation(), 2.0 * 0.21f64.sqrt(), epsilon = 1e-12);
        // x_z = y_z = 0 so every marginal is flat
        let e = 2.0 * 0.21f64.sqrt();
        assert_abs_diff_eq!(
            j.get(Outcome::Plus, Outcome::Plus),
            0.25 * (1.0 + e),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            j.get(Outcome::Plus, Outcome::Minus),
            0.25 * (1.0 - e),
            epsilon = 1e-12
        );
    }

    #[test]
    fn rejects_non_unit_inputs() {
        assert!(born_joint(sp(0.7), BlochVector::new(1.0, 1.0, 0.0), BlochVector::Z).is_err());
        assert!(collapse(sp(0.7), BlochVector::new(0.0, 0.0, 1.1)).is_err());
        assert!(StateParam::new(0.4).is_err());
        assert!(StateParam::new(1.0 + 1e-9).is_err());
    }

    #[test]
    fn collapse_maximally_entangled_is_antipodal() {
        let x = BlochVector::normalized(0.3, -0.4, 0.5).unwrap();
        let c = collapse(sp(0.5), x).unwrap();
        assert_abs_diff_eq!(c.p_plus, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!((c.v_plus + c.v_minus).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn collapse_product_state_is_always_z() {
        for x in [
            BlochVector::X,
            BlochVector::Y,
            BlochVector::normalized(1.0, 2.0, -3.0).unwrap(),
        ] {
            let c = collapse(sp(1.0), x).unwrap();
            assert_abs_diff_eq!((c.v_plus - BlochVector::Z).norm(), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!((c.v_minus - BlochVector::Z).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn collapse_degenerate_branch_is_flagged() {
        let c = collapse(sp(1.0), -BlochVector::Z).unwrap();
        assert_eq!(c.degenerate, Some(Outcome::Plus));
        assert_eq!(c.p_plus, 0.0);
        assert_eq!(c.v_plus, BlochVector::Z);
        let c = collapse(sp(1.0), BlochVector::Z).unwrap();
        assert_eq!(c.degenerate, Some(Outcome::Minus));
    }

    #[test]
    fn collapse_p07_along_z() {
        let c = collapse(sp(0.7), BlochVector::Z).unwrap();
        assert_abs_diff_eq!(c.p_plus, 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!((c.v_plus - BlochVector::Z).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((c.v_minus + BlochVector::Z).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn tsirelson_bound_at_maximal_entanglement() {
        let s = chsh_value(sp(0.5), &ChshSettings::tsirelson()).unwrap();
        assert_abs_diff_eq!(s, 2.0 * 2f64.sqrt(), epsilon = 1e-12);
        let s1 = chsh_value(sp(1.0), &ChshSettings::tsirelson()).unwrap();
        assert!(s1.abs() <= 2.0 + 1e-12);
    }

    #[test]
    fn chsh_p07_matches_closed_form() {
        // Same settings: E(zz)=1, E(xx)=2√(p(1−p)) ⇒ S = √2(1 + 2√0.21)... computed term by term.
        let st = sp(0.7);
        let set = ChshSettings::tsirelson();
        let expect: f64 = set
            .pairs()
            .iter()
            .zip([1.0, 1.0, 1.0, -1.0])
            .map(|(&(x, y), s)| s * correlation_closed_form(st, x, y))
            .sum();
        assert_abs_diff_eq!(chsh_value(st, &set).unwrap(), expect, epsilon = 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(
            expect,
            2.0 * h + 2.0 * h * 2.0 * 0.21f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn orthonormal_frame_is_orthonormal() {
        for v in [
            BlochVector::Z,
            -BlochVector::Z,
            BlochVector::normalized(0.1, -0.9, 0.2).unwrap(),
        ] {
            let (a, b) = v.orthonormal_frame();
            assert_abs_diff_eq!(a.norm(), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(b.norm(), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(a.dot(b), 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(a.dot(v), 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(b.dot(v), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn sgn_zero_is_plus() {
        assert_eq!(Outcome::sgn(0.0), Outcome::Plus);
        assert_eq!(Outcome::sgn(-0.0), Outcome::Plus);
        assert_eq!(heaviside(0.0), 1.0);
        assert_eq!(theta(-1.0), 0.0);
    }
}
