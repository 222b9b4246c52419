//! Property suites for the hemisphere encoding and for `ρ̃_x`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bloch::{collapse, BlochVector, CollapseData, StateParam};
use crate::error::Result;
use crate::protocols::bob_output;
use crate::sampling::{
    rho_tilde_bound, rho_tilde_max_at, sample_theta_hemisphere, sample_uniform_sphere, RngStream,
};

use super::quadrature::theta_mixture_integral;

/// `p̂(b=+1)` for Bob measuring `y` on hemisphere draws about `v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub v: BlochVector,
    pub y: BlochVector,
    pub rounds: u64,
    pub p_hat: f64,
    pub expected: f64,
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Draws `m` vectors from `Θ(λ·v)/π`, has Bob output `sgn(y·λ)` and compares
/// the `+1` frequency with `(1 + y·v)/2` at `4√(¼/m)`.
pub fn lemma1_check(v: BlochVector, y: BlochVector, m: u64, seed: u64) -> Result<Lemma1Report> {
    let (v, y) = (v.validated()?, y.validated()?);
    let mut rng = RngStream::new(seed, 0);
    let mut plus = 0u64;
    for _ in 0..m {
        let l = sample_theta_hemisphere(&mut rng, v);
        plus += u64::from(bob_output(y, l).value() > 0);
    }
    let p_hat = plus as f64 / m as f64;
    let expected = 0.5 * (1.0 + y.dot(v));
    let tolerance = 4.0 * (0.25 / m as f64).sqrt();
    let deviation = (p_hat - expected).abs();
    Ok(Lemma1Report {
        v,
        y,
        rounds: m,
        p_hat,
        expected,
        deviation,
        tolerance,
        pass: deviation <= tolerance,
    })
}

/// Evaluation point of a property.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub p: f64,
    pub x: BlochVector,
    pub lambda: BlochVector,
    pub value: f64,
}

/// Worst observed `bound − value` for one property.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub property: String,
    pub description: String,
    pub worst_margin: f64,
    pub witness: Option<Witness>,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaCheck {
    pub p: f64,
    pub x: BlochVector,
    pub expected: f64,
    pub monte_carlo: f64,
    pub monte_carlo_stderr: f64,
    pub quadrature: f64,
    /// Largest `ρ̃_x` seen among the Monte Carlo points, next to its bound `√(p(1−p))/π`.
    pub max_observed: f64,
    pub bound: f64,
    pub pass_monte_carlo: bool,
    pub pass_quadrature: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Config {
    /// States with an area check and `trials` point checks each.
    pub p_values: Vec<f64>,
    /// Point checks per listed state, and again with `p` uniform on `[1/2, 1]`.
    pub trials: usize,
    pub area_samples: usize,
    pub guard: f64,
    pub area_rel_tolerance: f64,
    pub quadrature_tolerance: f64,
    pub seed: u64,
}

impl Default for Lemma2Config {
    fn default() -> Self {
        Lemma2Config {
            p_values: vec![0.5, 0.7, 0.835, 0.933, 0.99, 1.0],
            trials: 100_000,
            area_samples: 4_000_000,
            guard: 1e-12,
            area_rel_tolerance: 0.01,
            quadrature_tolerance: 1e-6,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Report {
    pub properties: Vec<PropertyResult>,
    pub areas: Vec<AreaCheck>,
    pub points_checked: usize,
    pub pass: bool,
}

impl Lemma2Report {
    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .properties
            .iter()
            .filter(|p| !p.pass)
            .map(|p| match &p.witness {
                Some(w) => format!(
                    "property ({}) violated by {:e} at p={}, x=({}, {}, {}), lambda=({}, {}, {})",
                    p.property,
                    -p.worst_margin,
                    w.p,
                    w.x.x,
                    w.x.y,
                    w.x.z,
                    w.lambda.x,
                    w.lambda.y,
                    w.lambda.z
                ),
                None => format!("property ({}) failed", p.property),
            })
            .collect();
        for a in &self.areas {
            if !(a.pass_monte_carlo && a.pass_quadrature) {
                out.push(format!(
                    "property (iii) area at p={}: expected {}, monte carlo {}, quadrature {}",
                    a.p, a.expected, a.monte_carlo, a.quadrature
                ));
            }
        }
        out
    }
}

struct Tracker {
    property: &'static str,
    description: &'static str,
    worst: f64,
    witness: Option<Witness>,
}

impl Tracker {
    fn new(property: &'static str, description: &'static str) -> Self {
        Tracker {
            property,
            description,
            worst: f64::INFINITY,
            witness: None,
        }
    }

    fn observe(&mut self, margin: f64, w: Witness) {
        if margin < self.worst || margin.is_nan() {
            self.worst = margin;
            self.witness = Some(w);
        }
    }

    fn finish(self, guard: f64) -> PropertyResult {
        PropertyResult {
            property: self.property.into(),
            description: self.description.into(),
            worst_margin: self.worst,
            pass: self.worst >= -guard,
            witness: self.witness,
        }
    }
}

/// Property suite for the production evaluator `ρ̃_x`.
pub fn lemma2_suite(config: &Lemma2Config) -> Result<Lemma2Report> {
    lemma2_suite_with(config, |c, l| c.rho_tilde_raw(l))
}

/// Property suite against an arbitrary evaluator of `ρ̃_x(λ)`.
pub fn lemma2_suite_with<F>(config: &Lemma2Config, rho_tilde: F) -> Result<Lemma2Report>
where
    F: Fn(&CollapseData, BlochVector) -> f64,
{
    let states: Vec<StateParam> = config
        .p_values
        .iter()
        .map(|&p| StateParam::new(p))
        .collect::<Result<_>>()?;
    let mut rng = RngStream::new(config.seed, 0);

    let mut t1 = Tracker::new("i", "rho_tilde >= 0");
    let mut t2 = Tracker::new("ii", "rho_tilde(l) = rho_tilde(-l)");
    let mut t4 = Tracker::new("iv", "rho_tilde <= p_pm |l.v_pm| / pi");
    let mut t5 = Tracker::new("v", "rho_tilde <= rho_tilde_max");
    let mut t6 = Tracker::new("vi", "rho_tilde <= sqrt(p(1-p)) / pi");
    let mut points = 0usize;

    let mut check = |state: StateParam, x: BlochVector, l: BlochVector| -> Result<()> {
        let c = collapse(state, x)?;
        let v = rho_tilde(&c, l);
        let w = Witness {
            p: state.p(),
            x,
            lambda: l,
            value: v,
        };
        t1.observe(v, w);
        t2.observe(-(v - rho_tilde(&c, -l)).abs(), w);
        let iv = (c.p_plus * l.dot(c.v_plus).abs()).min(c.p_minus * l.dot(c.v_minus).abs()) / PI;
        t4.observe(iv - v, w);
        t5.observe(rho_tilde_max_at(state, l.z) - v, w);
        t6.observe(rho_tilde_bound(state) - v, w);
        points += 1;
        Ok(())
    };

    for &state in &states {
        for _ in 0..config.trials {
            let x = sample_uniform_sphere(&mut rng);
            let l = sample_uniform_sphere(&mut rng);
            check(state, x, l)?;
        }
    }
    for _ in 0..config.trials {
        let state = StateParam::new(rng.random_range(0.5..=1.0))?;
        let x = sample_uniform_sphere(&mut rng);
        let l = sample_uniform_sphere(&mut rng);
        check(state, x, l)?;
    }

    let mut areas = Vec::with_capacity(states.len());
    for &state in &states {
        let x = sample_uniform_sphere(&mut rng);
        let c = collapse(state, x)?;
        let (mut sum, mut sum_sq, mut max) = (0.0, 0.0, 0.0f64);
        for _ in 0..config.area_samples {
            let l = sample_uniform_sphere(&mut rng);
            let f = 4.0 * PI * rho_tilde(&c, l);
            sum += f;
            sum_sq += f * f;
            max = max.max(f / (4.0 * PI));
        }
        let n = config.area_samples as f64;
        let mc = sum / n;
        let stderr = ((sum_sq / n - mc * mc).max(0.0) / n).sqrt();
        let quad = theta_mixture_integral(&[
            (c.p_plus / PI, c.v_plus),
            (c.p_minus / PI, c.v_minus),
            (-state.bias() / PI, BlochVector::Z),
        ]);
        let expected = 2.0 * (1.0 - state.p());
        // 1% relative, with an absolute floor for the empty area at p = 1
        let mc_tol = (config.area_rel_tolerance * expected).max(1e-9);
        areas.push(AreaCheck {
            p: state.p(),
            x,
            expected,
            monte_carlo: mc,
            monte_carlo_stderr: stderr,
            quadrature: quad,
            max_observed: max,
            bound: rho_tilde_bound(state),
            pass_monte_carlo: (mc - expected).abs() <= mc_tol,
            pass_quadrature: (quad - expected).abs() <= config.quadrature_tolerance,
        });
    }

    let properties: Vec<PropertyResult> = [t1, t2, t4, t5, t6]
        .into_iter()
        .map(|t| t.finish(config.guard))
        .collect();
    let pass = properties.iter().all(|p| p.pass)
        && areas
            .iter()
            .all(|a| a.pass_monte_carlo && a.pass_quadrature);
    Ok(Lemma2Report {
        properties,
        areas,
        points_checked: points,
        pass,
    })
}
