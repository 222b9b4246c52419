//! Deterministic numerical integration on `[a, b]` and on the sphere.
//!
//! Used as the independent route for every closed-form area and marginal
//! the samplers are checked against.

use std::f64::consts::PI;

use crate::bloch::{BlochVector, StateParam};
use crate::sampling::rho_tilde_max_at;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = ((i as f64 + 0.75) / (n as f64 + 0.5) * PI).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss–Legendre over `panels` equal subintervals of each
/// `[breaks[i], breaks[i+1]]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, breaks: &[f64], panels: usize, order: usize) -> f64 {
    let rule = gauss_legendre(order);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let h = (b - a) / panels as f64;
        for k in 0..panels {
            let lo = a + h * k as f64;
            let mid = lo + 0.5 * h;
            total += rule
                .iter()
                .map(|&(x, wt)| wt * f(mid + 0.5 * h * x))
                .sum::<f64>()
                * 0.5
                * h;
        }
    }
    total
}

/// `∫₀^{2π} Θ(A + B cos φ) dφ` for `B ≥ 0`.
pub fn ring_integral(a: f64, b: f64) -> f64 {
    if a >= b {
        2.0 * PI * a
    } else if a <= -b {
        0.0
    } else {
        let phi0 = (-a / b).acos();
        2.0 * (a * phi0 + b * phi0.sin())
    }
}

/// Density of `t = λ·axis` when `λ ~ Θ(λ·v)/π`.
pub fn kochen_specker_axis_density(axis: BlochVector, v: BlochVector, t: f64) -> f64 {
    let cos_a = axis.dot(v).clamp(-1.0, 1.0);
    let sin_a = (1.0 - cos_a * cos_a).max(0.0).sqrt();
    let s = (1.0 - t * t).max(0.0).sqrt();
    ring_integral(t * cos_a, s * sin_a) / PI
}

/// `t`-values where the ring integrand of `Θ(λ·v)` about `axis` has a kink.
pub fn kink_points(axis: BlochVector, v: BlochVector) -> [f64; 2] {
    let cos_a = axis.dot(v).clamp(-1.0, 1.0);
    let sin_a = (1.0 - cos_a * cos_a).max(0.0).sqrt();
    [-sin_a, sin_a]
}

fn sorted_breaks(mut pts: Vec<f64>) -> Vec<f64> {
    pts.push(-1.0);
    pts.push(1.0);
    pts.retain(|t| (-1.0..=1.0).contains(t));
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    pts
}

/// `∫_{S₂} Σ_k w_k Θ(λ·v_k) dλ`, integrating over `t = λ·ẑ` with the azimuth done exactly.
pub fn theta_mixture_integral(terms: &[(f64, BlochVector)]) -> f64 {
    let breaks = sorted_breaks(
        terms
            .iter()
            .flat_map(|&(_, v)| kink_points(BlochVector::Z, v))
            .chain(std::iter::once(0.0))
            .collect(),
    );
    integrate(
        |t| {
            terms
                .iter()
                .map(|&(w, v)| w * PI * kochen_specker_axis_density(BlochVector::Z, v, t))
                .sum()
        },
        &breaks,
        64,
        16,
    )
}

/// `∫_{S₂} ρ̃_max dλ = 2π ∫ ρ̃_max(t) dt`.
pub fn rho_tilde_max_area(state: StateParam) -> f64 {
    2.0 * PI * integrate(|t| rho_tilde_max_at(state, t), &[-1.0, 0.0, 1.0], 64, 16)
}

/// Probability mass of `[lo, hi]` under an axis-marginal density `f(t)`.
pub fn bin_mass<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, kinks: &[f64]) -> f64 {
    let mut pts: Vec<f64> = kinks
        .iter()
        .copied()
        .filter(|&k| k > lo && k < hi)
        .collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    integrate(f, &pts, 8, 16)
}
