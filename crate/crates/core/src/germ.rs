//! Distributions, germs and the concrete germ constructors.
//!
//! Every germ in the corpus except closure germs has the form
//! `F_x(psi) = sum_j c_j(x) D((. - x)^j psi)` for a fixed distribution `D`.
//! For those, pairing the same `psi` against many base points `x + h` only
//! needs the moments `D((. - x)^i psi)` once, followed by a binomial
//! re-expansion. [`Germ::pair_shifts`] exposes that.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, SampledFunction, Window};

/// Exponents `(alpha, beta, gamma)` of the coherence and homogeneity bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentTriple {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Whether `alpha <= gamma` is enforced.
    #[serde(default = "yes")]
    pub ordered: bool,
}

fn yes() -> bool {
    true
}

impl ExponentTriple {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let t = Self { alpha, beta, gamma, ordered: true };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.alpha, self.beta, self.gamma].iter().all(|v| v.is_finite()) {
            return Err(Error::ParameterViolation("exponents must be finite".into()));
        }
        if self.ordered && self.alpha > self.gamma {
            return Err(Error::ParameterViolation(format!(
                "alpha = {} exceeds gamma = {}",
                self.alpha, self.gamma
            )));
        }
        Ok(())
    }
}

type PairingFn = dyn Fn(&SampledFunction) -> Result<f64> + Send + Sync;

#[derive(Clone)]
enum Kind {
    Zero,
    Lebesgue,
    Density { density: SampledFunction, domain: Window },
    /// Distributional derivative of a sampled function.
    Derivative(SampledFunction),
    Dirac(f64),
    Sum(Vec<(f64, Distribution)>),
    Pairing(Arc<PairingFn>),
}

/// A linear functional on sampled test functions.
#[derive(Clone)]
pub struct Distribution {
    kind: Arc<Kind>,
}

impl fmt::Debug for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match &*self.kind {
            Kind::Zero => "zero",
            Kind::Lebesgue => "lebesgue",
            Kind::Density { .. } => "density",
            Kind::Derivative(_) => "derivative",
            Kind::Dirac(_) => "dirac",
            Kind::Sum(_) => "sum",
            Kind::Pairing(_) => "pairing",
        };
        write!(f, "Distribution({name})")
    }
}

fn trapezoid_weight(k: usize, len: usize) -> f64 {
    if k == 0 || k + 1 == len {
        0.5
    } else {
        1.0
    }
}

impl Distribution {
    fn new(kind: Kind) -> Self {
        Self { kind: Arc::new(kind) }
    }

    pub fn zero() -> Self {
        Self::new(Kind::Zero)
    }

    /// Integration against the constant density 1.
    pub fn lebesgue() -> Self {
        Self::new(Kind::Lebesgue)
    }

    /// Integration against `density`.
    pub fn from_density(density: SampledFunction) -> Self {
        let domain = density.grid().domain();
        Self::new(Kind::Density { density, domain })
    }

    /// Integration against `density`, defined only for test functions
    /// supported in `domain`.
    pub fn from_density_on(density: SampledFunction, domain: Window) -> Self {
        Self::new(Kind::Density { density, domain })
    }

    /// `psi -> -int w psi'`.
    pub fn derivative_of(w: SampledFunction) -> Self {
        Self::new(Kind::Derivative(w))
    }

    /// `psi -> psi(location)`.
    pub fn dirac(location: f64) -> Self {
        Self::new(Kind::Dirac(location))
    }

    pub fn from_pairing(pairing: impl Fn(&SampledFunction) -> Result<f64> + Send + Sync + 'static) -> Self {
        Self::new(Kind::Pairing(Arc::new(pairing)))
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Distribution, b: f64) -> Self {
        Self::new(Kind::Sum(vec![(a, self.clone()), (b, other.clone())]))
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self::new(Kind::Sum(vec![(t, self.clone())]))
    }

    pub fn density(&self) -> Option<&SampledFunction> {
        match &*self.kind {
            Kind::Density { density, .. } => Some(density),
            _ => None,
        }
    }

    pub fn pair(&self, psi: &SampledFunction) -> Result<f64> {
        let mut out = [0.0];
        self.pair_moments(psi, 0.0, &mut out)?;
        Ok(out[0])
    }

    /// `out[i] = D((. - center)^i psi)`.
    pub fn pair_moments(&self, psi: &SampledFunction, center: f64, out: &mut [f64]) -> Result<()> {
        out.iter_mut().for_each(|o| *o = 0.0);
        if psi.is_empty() || out.is_empty() {
            return Ok(());
        }
        let grid = psi.grid();
        let dx = grid.spacing();
        match &*self.kind {
            Kind::Zero => {}
            Kind::Lebesgue => {
                let len = psi.values().len();
                for (k, (z, v)) in psi.points().enumerate() {
                    let mut term = v * dx * trapezoid_weight(k, len);
                    let t = z - center;
                    for o in out.iter_mut() {
                        *o += term;
                        term *= t;
                    }
                }
            }
            Kind::Density { density, domain } => {
                grid.check_same(density.grid())?;
                if !domain.contains(&psi.support()) {
                    return Err(Error::SupportOverflow(format!(
                        "test function on [{}, {}] outside [{}, {}]",
                        psi.support().lo,
                        psi.support().hi,
                        domain.lo,
                        domain.hi
                    )));
                }
                let len = psi.values().len();
                for (k, (z, v)) in psi.points().enumerate() {
                    let i = psi.start_index() + k as i64;
                    let mut term = v * density.at_index(i) * dx * trapezoid_weight(k, len);
                    let t = z - center;
                    for o in out.iter_mut() {
                        *o += term;
                        term *= t;
                    }
                }
            }
            Kind::Derivative(w) => {
                grid.check_same(w.grid())?;
                let dpsi = psi.derivative();
                if !grid.domain().contains(&dpsi.support()) {
                    return Err(Error::SupportOverflow("derivative stencil leaves domain".into()));
                }
                // -(d/dz)[(z-c)^i psi] = -(i (z-c)^{i-1} psi + (z-c)^i psi')
                for (k, (z, dv)) in dpsi.points().enumerate() {
                    let idx = dpsi.start_index() + k as i64;
                    let wv = w.at_index(idx);
                    if wv == 0.0 {
                        continue;
                    }
                    let v = psi.at_index(idx);
                    let t = z - center;
                    let mut pow = 1.0; // t^i
                    let mut pow_prev = 0.0; // t^{i-1}
                    for (i, o) in out.iter_mut().enumerate() {
                        *o -= dx * wv * (i as f64 * pow_prev * v + pow * dv);
                        pow_prev = pow;
                        pow *= t;
                    }
                }
            }
            Kind::Dirac(x0) => {
                let v = psi.eval(*x0);
                let t = x0 - center;
                let mut term = v;
                for o in out.iter_mut() {
                    *o = term;
                    term *= t;
                }
            }
            Kind::Sum(terms) => {
                let mut buf = vec![0.0; out.len()];
                for (a, d) in terms {
                    d.pair_moments(psi, center, &mut buf)?;
                    for (o, b) in out.iter_mut().zip(&buf) {
                        *o += a * b;
                    }
                }
            }
            Kind::Pairing(f) => {
                for (i, o) in out.iter_mut().enumerate() {
                    let eta = psi.multiply_by(|z| (z - center).powi(i as i32));
                    *o = f(&eta)?;
                }
            }
        }
        Ok(())
    }
}

/// A family `x -> F_x` of distributions.
pub trait Germ: Send + Sync {
    /// `F_x(psi)` for an already scaled and centred `psi`.
    fn pair(&self, x: f64, psi: &SampledFunction) -> Result<f64>;

    /// `out[k] = F_{x + shifts[k]}(psi)`.
    fn pair_shifts(&self, x: f64, psi: &SampledFunction, shifts: &[f64], out: &mut [f64]) -> Result<()> {
        for (o, &h) in out.iter_mut().zip(shifts) {
            *o = self.pair(x + h, psi)?;
        }
        Ok(())
    }

    /// Declared exponents, when known.
    fn exponents(&self) -> Option<ExponentTriple> {
        None
    }
}

pub type GermRef = Arc<dyn Germ>;

/// Coefficient function of a polynomial germ.
#[derive(Clone, Debug)]
pub enum Coefficient {
    Constant(f64),
    Sampled(SampledFunction),
}

impl Coefficient {
    fn eval(&self, x: f64) -> Result<f64> {
        match self {
            Coefficient::Constant(c) => Ok(*c),
            Coefficient::Sampled(f) => {
                let s = f.support();
                if x < s.lo - 1e-12 || x > s.hi + 1e-12 {
                    return Err(Error::SupportOverflow(format!(
                        "germ evaluated at {x}, outside [{}, {}]",
                        s.lo, s.hi
                    )));
                }
                Ok(f.eval(x))
            }
        }
    }

    fn scaled(&self, t: f64) -> Self {
        match self {
            Coefficient::Constant(c) => Coefficient::Constant(t * c),
            Coefficient::Sampled(f) => Coefficient::Sampled(f.scaled(t)),
        }
    }
}

/// `F_x(psi) = sum_j c_j(x) D((. - x)^j psi)`.
#[derive(Clone, Debug)]
pub struct PolynomialGerm {
    coefficients: Vec<Coefficient>,
    base: Distribution,
    base_is_lebesgue: bool,
    exponents: Option<ExponentTriple>,
}

impl PolynomialGerm {
    pub fn new(coefficients: Vec<Coefficient>, base: Distribution) -> Self {
        let base_is_lebesgue = matches!(&*base.kind, Kind::Lebesgue);
        Self { coefficients, base, base_is_lebesgue, exponents: None }
    }

    pub fn with_exponents(mut self, exponents: ExponentTriple) -> Self {
        self.exponents = Some(exponents);
        self
    }

    pub fn coefficients(&self) -> &[Coefficient] {
        &self.coefficients
    }

    pub fn base(&self) -> &Distribution {
        &self.base
    }

    /// The polynomial `z -> sum_j c_j(x) (z - x)^j`.
    pub fn polynomial_at(&self, x: f64, z: f64) -> Result<f64> {
        let mut acc = 0.0;
        let mut pow = 1.0;
        for c in &self.coefficients {
            acc += c.eval(x)? * pow;
            pow *= z - x;
        }
        Ok(acc)
    }

    /// `t * F`.
    pub fn scaled(&self, t: f64) -> Self {
        Self {
            coefficients: self.coefficients.iter().map(|c| c.scaled(t)).collect(),
            ..self.clone()
        }
    }
}

impl Germ for PolynomialGerm {
    fn pair(&self, x: f64, psi: &SampledFunction) -> Result<f64> {
        let mut out = [0.0];
        self.pair_shifts(x, psi, &[0.0], &mut out)?;
        Ok(out[0])
    }

    fn pair_shifts(&self, x: f64, psi: &SampledFunction, shifts: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.coefficients.len();
        let mut m = vec![0.0; n];
        self.base.pair_moments(psi, x, &mut m)?;
        let mut binom = vec![vec![0.0; n]; n];
        for j in 0..n {
            binom[j][0] = 1.0;
            for i in 1..=j {
                binom[j][i] = binom[j - 1][i - 1] + if i < j { binom[j - 1][i] } else { 0.0 };
            }
        }
        let mut powers = vec![0.0; n];
        for (o, &h) in out.iter_mut().zip(shifts) {
            let mut pw = 1.0;
            for p in powers.iter_mut() {
                *p = pw;
                pw *= -h;
            }
            let mut acc = 0.0;
            for (j, c) in self.coefficients.iter().enumerate() {
                let cj = c.eval(x + h)?;
                if cj == 0.0 {
                    continue;
                }
                let inner: f64 = (0..=j).map(|i| binom[j][i] * powers[j - i] * m[i]).sum();
                acc += cj * inner;
            }
            *o = acc;
        }
        Ok(())
    }

    fn exponents(&self) -> Option<ExponentTriple> {
        self.exponents
    }
}

/// The Taylor germ `F_x(z) = sum_{k < beta} f^(k)(x) (z - x)^k / k!`.
/// `derivatives[0]` is `f` itself.
pub fn taylor_germ(derivatives: &[SampledFunction], beta: f64) -> Result<PolynomialGerm> {
    if !(beta > 0.0) || beta.fract() == 0.0 {
        return Err(Error::ParameterViolation(format!("beta = {beta} must be positive and non-integer")));
    }
    let expected = beta.ceil() as usize;
    if derivatives.len() != expected {
        return Err(Error::ArityMismatch { expected, got: derivatives.len() });
    }
    let grid = *derivatives[0].grid();
    let mut factorial = 1.0;
    let mut coefficients = Vec::with_capacity(expected);
    for (k, d) in derivatives.iter().enumerate() {
        grid.check_same(d.grid())?;
        if k > 0 {
            factorial *= k as f64;
        }
        coefficients.push(Coefficient::Sampled(d.scaled(1.0 / factorial)));
    }
    Ok(PolynomialGerm::new(coefficients, Distribution::lebesgue())
        .with_exponents(ExponentTriple { alpha: 0.0, beta: 0.0, gamma: beta, ordered: true }))
}

/// `P_x(psi) = g(psi F_x)` for a Taylor germ `F`.
pub fn product_germ(g: &Distribution, taylor: &PolynomialGerm) -> Result<PolynomialGerm> {
    if !taylor.base_is_lebesgue {
        return Err(Error::ParameterViolation("product germs need a Taylor germ".into()));
    }
    Ok(PolynomialGerm::new(taylor.coefficients.clone(), g.clone()))
}

/// `F_x = xi` for every `x`.
pub fn constant_germ(xi: &Distribution) -> PolynomialGerm {
    PolynomialGerm::new(vec![Coefficient::Constant(1.0)], xi.clone())
}

/// `F_x(z) = z - x`.
pub fn monomial_germ() -> PolynomialGerm {
    PolynomialGerm::new(
        vec![Coefficient::Constant(0.0), Coefficient::Constant(1.0)],
        Distribution::lebesgue(),
    )
    .with_exponents(ExponentTriple { alpha: 0.0, beta: 1.0, gamma: 1.0, ordered: true })
}

/// Germ given by an arbitrary pairing rule.
pub struct ClosureGerm {
    pairing: Box<dyn Fn(f64, &SampledFunction) -> Result<f64> + Send + Sync>,
    exponents: Option<ExponentTriple>,
}

impl ClosureGerm {
    pub fn new(pairing: impl Fn(f64, &SampledFunction) -> Result<f64> + Send + Sync + 'static) -> Self {
        Self { pairing: Box::new(pairing), exponents: None }
    }

    pub fn with_exponents(mut self, exponents: ExponentTriple) -> Self {
        self.exponents = Some(exponents);
        self
    }
}

impl Germ for ClosureGerm {
    fn pair(&self, x: f64, psi: &SampledFunction) -> Result<f64> {
        (self.pairing)(x, psi)
    }

    fn exponents(&self) -> Option<ExponentTriple> {
        self.exponents
    }
}

/// `sum_i a_i F^i`.
pub struct LinearCombination {
    terms: Vec<(f64, GermRef)>,
}

impl LinearCombination {
    pub fn new(terms: Vec<(f64, GermRef)>) -> Self {
        Self { terms }
    }
}

impl Germ for LinearCombination {
    fn pair(&self, x: f64, psi: &SampledFunction) -> Result<f64> {
        self.terms
            .iter()
            .try_fold(0.0, |acc, (a, g)| Ok(acc + a * g.pair(x, psi)?))
    }

    fn pair_shifts(&self, x: f64, psi: &SampledFunction, shifts: &[f64], out: &mut [f64]) -> Result<()> {
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut buf = vec![0.0; shifts.len()];
        for (a, g) in &self.terms {
            g.pair_shifts(x, psi, shifts, &mut buf)?;
            for (o, b) in out.iter_mut().zip(&buf) {
                *o += a * b;
            }
        }
        Ok(())
    }

    fn exponents(&self) -> Option<ExponentTriple> {
        self.terms.first().and_then(|(_, g)| g.exponents())
    }
}

/// `t * F`.
pub fn scale_germ(t: f64, germ: GermRef) -> LinearCombination {
    LinearCombination::new(vec![(t, germ)])
}

/// Sample `f` on the whole domain of `grid`.
pub fn sample(grid: Grid, f: impl Fn(f64) -> f64) -> SampledFunction {
    SampledFunction::on_domain(grid, f)
}
