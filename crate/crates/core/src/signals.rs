//! Reference signals with exact derivatives: bumps, polynomials,
//! trigonometric functions, truncated Weierstrass series and Dirac masses.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::germ::Distribution;
use crate::grid::{Grid, SampledFunction, Window};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalSpec {
    /// `amplitude * exp(-1/(1 - u^2))`, `u = (x - center)/radius`.
    Bump {
        center: f64,
        radius: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `sum_k coefficients[k] x^k`.
    Poly { coefficients: Vec<f64> },
    /// `amplitude * cos(frequency x + phase)`.
    Trig {
        #[serde(default = "one")]
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `sum_{k < terms} a^k cos(b^k x)`.
    Weierstrass { a: f64, b: f64, terms: u32 },
    Dirac { location: f64 },
}

fn one() -> f64 {
    1.0
}

/// A sampled signal with its derivatives, or a pairing-only distribution.
#[derive(Clone, Debug)]
pub enum Realized {
    /// `derivatives[0]` is the function itself.
    Function { derivatives: Vec<SampledFunction> },
    Distribution(Distribution),
}

impl Realized {
    pub fn function(&self) -> Option<&SampledFunction> {
        match self {
            Realized::Function { derivatives } => derivatives.first(),
            Realized::Distribution(_) => None,
        }
    }

    /// The signal as a distribution (integration against its density).
    pub fn distribution(&self) -> Distribution {
        match self {
            Realized::Function { derivatives } => Distribution::from_density(derivatives[0].clone()),
            Realized::Distribution(d) => d.clone(),
        }
    }
}

impl SignalSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ParameterViolation(m));
        match *self {
            SignalSpec::Bump { radius, .. } if !(radius > 0.0) => bad(format!("bump radius {radius}")),
            SignalSpec::Poly { ref coefficients } if coefficients.is_empty() => {
                bad("polynomial without coefficients".into())
            }
            SignalSpec::Weierstrass { a, b, terms } if !(a > 0.0 && a < 1.0 && b > 1.0 && a * b > 1.0 && terms > 0) => {
                bad(format!("Weierstrass needs 0 < a < 1 < b, ab > 1, terms > 0; got a = {a}, b = {b}, terms = {terms}"))
            }
            _ => Ok(()),
        }
    }

    /// Pointwise value of the `order`-th derivative.
    pub fn derivative_value(&self, order: usize, x: f64) -> f64 {
        match self {
            SignalSpec::Bump { center, radius, amplitude } => {
                let u = (x - center) / radius;
                amplitude * bump_derivative(order, u) / radius.powi(order as i32)
            }
            SignalSpec::Poly { coefficients } => {
                let mut c = coefficients.clone();
                for _ in 0..order {
                    c = poly_derivative(&c);
                }
                poly_eval(&c, x)
            }
            SignalSpec::Trig { amplitude, frequency, phase } => {
                amplitude * frequency.powi(order as i32) * (frequency * x + phase + order as f64 * FRAC_PI_2).cos()
            }
            SignalSpec::Weierstrass { a, b, terms } => (0..*terms)
                .map(|k| {
                    let bk = b.powi(k as i32);
                    a.powi(k as i32) * bk.powi(order as i32) * (bk * x + order as f64 * FRAC_PI_2).cos()
                })
                .sum(),
            SignalSpec::Dirac { .. } => f64::NAN,
        }
    }

    /// Hoelder index `-log a / log b` of the untruncated Weierstrass series.
    pub fn holder_index(&self) -> Option<f64> {
        match self {
            SignalSpec::Weierstrass { a, b, .. } => Some(-a.ln() / b.ln()),
            _ => None,
        }
    }
}

/// Sample the signal and its first `count - 1` derivatives.
pub fn realize(spec: &SignalSpec, grid: Grid, count: usize) -> Result<Realized> {
    spec.validate()?;
    if let SignalSpec::Dirac { location } = spec {
        if location.abs() > grid.half_length() {
            return Err(Error::SupportOverflow(format!("Dirac mass at {location} outside the grid")));
        }
        return Ok(Realized::Distribution(Distribution::dirac(*location)));
    }
    let window = match spec {
        SignalSpec::Bump { center, radius, .. } => {
            let w = Window::new(center - radius, center + radius);
            if !grid.domain().contains(&w) {
                return Err(Error::SupportOverflow("bump leaves the grid".into()));
            }
            w
        }
        _ => grid.domain(),
    };
    let derivatives = (0..count.max(1))
        .map(|k| {
            SampledFunction::from_fn(grid, window, |x| {
                if let SignalSpec::Bump { center, radius, .. } = spec {
                    if (x - center).abs() >= *radius {
                        return 0.0;
                    }
                }
                spec.derivative_value(k, x)
            })
        })
        .collect::<Result<_>>()?;
    Ok(Realized::Function { derivatives })
}

/// The distributional derivative of a sampled function signal.
pub fn derivative_distribution(spec: &SignalSpec, grid: Grid) -> Result<Distribution> {
    match realize(spec, grid, 1)? {
        Realized::Function { derivatives } => Ok(Distribution::derivative_of(derivatives[0].clone())),
        Realized::Distribution(_) => Err(Error::ParameterViolation(
            "derivative of a pairing-only signal is not sampled".into(),
        )),
    }
}

fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

fn poly_derivative(c: &[f64]) -> Vec<f64> {
    if c.len() <= 1 {
        return vec![0.0];
    }
    c.iter().enumerate().skip(1).map(|(k, a)| k as f64 * a).collect()
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] += y;
    }
    out
}

/// `d^n/du^n exp(-1/(1-u^2)) = exp(-1/(1-u^2)) P_n(u) / (1-u^2)^{2n}` with
/// `P_{n+1} = P_n' (1-u^2)^2 + 4n u (1-u^2) P_n - 2u P_n`.
fn bump_derivative(order: usize, u: f64) -> f64 {
    if u.abs() >= 1.0 {
        return 0.0;
    }
    let one_minus = [1.0, 0.0, -1.0];
    let one_minus_sq = poly_mul(&one_minus, &one_minus);
    let mut p = vec![1.0];
    for n in 0..order {
        let a = poly_mul(&poly_derivative(&p), &one_minus_sq);
        let b = poly_mul(&poly_mul(&[0.0, 4.0 * n as f64], &one_minus), &p);
        let c = poly_mul(&[0.0, -2.0], &p);
        p = poly_add(&poly_add(&a, &b), &c);
    }
    let s = 1.0 - u * u;
    (-1.0 / s).exp() * poly_eval(&p, u) / s.powi(2 * order as i32)
}
