//! Multiplication of a distribution `g` of negative regularity `alpha` by a
//! function `f` of regularity `beta > -alpha`, as the reconstruction of
//! `P_x(psi) = g(psi F_x)` with `F` the Taylor germ of `f`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::germ::{product_germ, taylor_germ, Distribution, ExponentTriple, PolynomialGerm};
use crate::grid::{lq_seq_norm, IntegrabilityParam, SampledFunction};
use crate::norms::{fg_tables, m_sequences_with};
use crate::reconstruct::{reconstruct, Path, ReconstructionConfig, ReconstructionResult};
use crate::testfn::TestFunction;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YoungConfig {
    /// Regularity of `g`, negative.
    pub alpha: f64,
    /// Regularity of `f`, positive and not an integer.
    pub beta: f64,
    pub p1: IntegrabilityParam,
    pub p2: IntegrabilityParam,
    pub q1: IntegrabilityParam,
    pub q2: IntegrabilityParam,
    pub r: usize,
    pub reconstruction: ReconstructionConfig,
}

impl Default for YoungConfig {
    fn default() -> Self {
        Self {
            alpha: -0.4,
            beta: 1.5,
            p1: IntegrabilityParam::Inf,
            p2: IntegrabilityParam::Inf,
            q1: IntegrabilityParam::Inf,
            q2: IntegrabilityParam::Inf,
            r: 2,
            reconstruction: ReconstructionConfig::default(),
        }
    }
}

impl YoungConfig {
    pub fn validate(&self) -> Result<()> {
        let (a, b) = (self.alpha, self.beta);
        if !(a < 0.0 && b > 0.0 && a + b > 0.0) {
            return Err(Error::ParameterViolation(format!("need alpha < 0 < beta and alpha + beta > 0, got {a}, {b}")));
        }
        if b.fract() == 0.0 {
            return Err(Error::ParameterViolation(format!("beta = {b} must not be an integer")));
        }
        if self.r as f64 <= -a {
            return Err(Error::ParameterViolation(format!("r = {} must exceed -alpha = {}", self.r, -a)));
        }
        Ok(())
    }

    /// `1/p = 1/p1 + 1/p2`.
    pub fn p(&self) -> Result<IntegrabilityParam> {
        IntegrabilityParam::from_reciprocal(self.p1.reciprocal() + self.p2.reciprocal())
    }

    /// `1/q = 1/q1 + 1/q2`.
    pub fn q(&self) -> Result<IntegrabilityParam> {
        IntegrabilityParam::from_reciprocal(self.q1.reciprocal() + self.q2.reciprocal())
    }

    /// Reconstruction settings for the product germ: exponents
    /// `(alpha, alpha, alpha + beta)`, the derived `p` and `q`, and `q1` for
    /// the homogeneity sequence.
    pub fn resolved(&self) -> Result<ReconstructionConfig> {
        self.validate()?;
        let mut cfg = self.reconstruction.clone();
        cfg.path = Path::Positive;
        cfg.norm.exponents = ExponentTriple { alpha: self.alpha, beta: self.alpha, gamma: self.alpha + self.beta, ordered: true };
        cfg.norm.p = self.p()?;
        cfg.norm.q = self.q()?;
        cfg.norm.q1 = self.q1;
        cfg.norm.r = self.r;
        Ok(cfg)
    }
}

/// The germ `P_x(psi) = g(psi F_x)`; `derivatives[0]` is `f`.
pub fn product_of(g: &Distribution, derivatives: &[SampledFunction], beta: f64) -> Result<PolynomialGerm> {
    product_germ(g, &taylor_germ(derivatives, beta)?)
}

/// The product distribution with its series diagnostics and bound table.
pub fn young_product(
    g: &Distribution,
    derivatives: &[SampledFunction],
    phi_hat: &TestFunction,
    cfg: &YoungConfig,
) -> Result<ReconstructionResult> {
    let resolved = cfg.resolved()?;
    let germ = product_of(g, derivatives, cfg.beta)?;
    reconstruct(&germ, phi_hat, &resolved)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VQuantities {
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    pub v4: f64,
    /// Geometric tails added to the truncated sums of `v3` and `v4`, per level.
    pub tail3: Vec<f64>,
    pub tail4: Vec<f64>,
}

/// The four hypothesis quantities of the product germ, truncated at the
/// norm depth and completed by geometric tails.
pub fn v_quantities(
    g: &Distribution,
    derivatives: &[SampledFunction],
    phi: &TestFunction,
    cfg: &YoungConfig,
) -> Result<VQuantities> {
    let resolved = cfg.resolved()?;
    let germ = product_of(g, derivatives, cfg.beta)?;
    let table = fg_tables(&germ, phi, &resolved.norm)?;
    let m = m_sequences_with(&table, cfg.alpha + cfg.beta, cfg.alpha + cfg.r as f64, 0.0);
    let q = resolved.norm.q;
    let complete = |s: &[f64], t: &[f64]| -> Vec<f64> { s.iter().zip(t).map(|(a, b)| a + b).collect() };
    Ok(VQuantities {
        v1: lq_seq_norm(&table.g, cfg.q1),
        v2: lq_seq_norm(&m.m1, q),
        v3: lq_seq_norm(&complete(&m.m2, &m.tail2), q),
        v4: lq_seq_norm(&complete(&m.m3, &m.tail3), q),
        tail3: m.tail2,
        tail4: m.tail3,
    })
}

/// `<W' f, psi> = -int W (f' psi + f psi')`, with `psi'` by finite differences.
pub fn ibp_oracle(w: &SampledFunction, f: &SampledFunction, df: &SampledFunction, psi: &SampledFunction) -> f64 {
    let dpsi = psi.derivative();
    let dx = w.grid().spacing();
    -dx * dpsi
        .points()
        .enumerate()
        .map(|(k, (_, dp))| {
            let i = dpsi.start_index() + k as i64;
            w.at_index(i) * (df.at_index(i) * psi.at_index(i) + f.at_index(i) * dp)
        })
        .sum::<f64>()
}
