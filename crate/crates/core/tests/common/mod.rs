#![allow(dead_code)]

use std::f64::consts::TAU;

use entsim::bloch::{BlochVector, CollapseData, StateParam};
use entsim::verify::quadrature::{bin_mass, kink_points, kochen_specker_axis_density};
use proptest::prelude::*;

pub fn sp(p: f64) -> StateParam {
    StateParam::new(p).unwrap()
}

pub fn unit_from(z: f64, phi: f64) -> BlochVector {
    let r = (1.0 - z * z).max(0.0).sqrt();
    BlochVector::new(r * phi.cos(), r * phi.sin(), z)
}

pub fn unit_vector() -> impl Strategy<Value = BlochVector> {
    (-1.0..=1.0f64, 0.0..TAU).prop_map(|(z, phi)| unit_from(z, phi))
}

pub fn state() -> impl Strategy<Value = StateParam> {
    (0.5..=1.0f64).prop_map(sp)
}

/// A weighted sum of hemisphere densities `Σ w Θ(λ·v)/π`, as its marginal along `axis`.
pub struct AxisMarginal {
    pub axis: BlochVector,
    pub terms: Vec<(f64, BlochVector)>,
}

impl AxisMarginal {
    /// `ρ_x` for this collapse.
    pub fn rho(c: &CollapseData, axis: BlochVector) -> Self {
        AxisMarginal {
            axis,
            terms: vec![(c.p_plus, c.v_plus), (c.p_minus, c.v_minus)],
        }
    }

    /// `ρ̃_x / 2(1−p)`.
    pub fn rho_tilde(c: &CollapseData, axis: BlochVector) -> Self {
        let area = 1.0 - c.bias;
        AxisMarginal {
            axis,
            terms: vec![
                (c.p_plus / area, c.v_plus),
                (c.p_minus / area, c.v_minus),
                (-c.bias / area, BlochVector::Z),
            ],
        }
    }

    pub fn density(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(w, v)| w * kochen_specker_axis_density(self.axis, v, t))
            .sum()
    }

    pub fn kinks(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self
            .terms
            .iter()
            .flat_map(|&(_, v)| kink_points(self.axis, v))
            .collect();
        k.push(0.0);
        k
    }

    /// Probabilities of `bins` equal-width bins on `[-1, 1]`.
    pub fn bin_probs(&self, bins: usize) -> Vec<f64> {
        let kinks = self.kinks();
        (0..bins)
            .map(|i| {
                let lo = -1.0 + 2.0 * i as f64 / bins as f64;
                let hi = -1.0 + 2.0 * (i + 1) as f64 / bins as f64;
                bin_mass(|t| self.density(t), lo, hi, &kinks).max(0.0)
            })
            .collect()
    }
}

pub fn histogram(values: impl IntoIterator<Item = f64>, bins: usize) -> Vec<u64> {
    let mut h = vec![0u64; bins];
    for t in values {
        let i = (((t + 1.0) * 0.5 * bins as f64) as usize).min(bins - 1);
        h[i] += 1;
    }
    h
}
