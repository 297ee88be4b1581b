//! Coherence and homogeneity tables, their averaged sequences, the
//! resulting norms, Besov norms by local means and by Taylor remainders,
//! and a numeric check of the series lemma behind the `l^q` bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::germ::{Distribution, ExponentTriple, Germ};
use crate::grid::{
    lq_seq_norm, DyadicAnnulusScheme, Grid, HNodes, IntegrabilityParam, Lattice, SampledFunction, Window,
};
use crate::testfn::{build_dictionary, min_scale, scale_recenter, DictionarySpec, TestFunction};

/// Rows evaluated per parallel batch; batches are reduced in order so the
/// result does not depend on the thread count.
const BATCH: usize = 512;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormConfig {
    pub exponents: ExponentTriple,
    pub p: IntegrabilityParam,
    pub q: IntegrabilityParam,
    pub q1: IntegrabilityParam,
    /// Logarithmic correction used when `gamma = 0`.
    pub epsilon: f64,
    /// The window `K`.
    pub window: Window,
    pub n_max: usize,
    pub points_per_annulus: usize,
    /// Regularity order of the test function balls.
    pub r: usize,
    pub dictionary: DictionarySpec,
    /// `2^x_resolution` lattice points per unit of the current scale in `x`.
    pub x_resolution: u32,
}

impl Default for NormConfig {
    fn default() -> Self {
        Self {
            exponents: ExponentTriple { alpha: 0.0, beta: 0.0, gamma: 1.0, ordered: true },
            p: IntegrabilityParam::Inf,
            q: IntegrabilityParam::Inf,
            q1: IntegrabilityParam::Inf,
            epsilon: 1.0,
            window: Window::centered(0.5),
            n_max: 8,
            points_per_annulus: 8,
            r: 2,
            dictionary: DictionarySpec::default(),
            x_resolution: 6,
        }
    }
}

impl NormConfig {
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        self.exponents.validate()?;
        if !(self.epsilon > 0.0) {
            return Err(Error::ParameterViolation("epsilon must be positive".into()));
        }
        if !(self.window.hi > self.window.lo) {
            return Err(Error::ParameterViolation("empty window".into()));
        }
        if self.scale(self.n_max) < min_scale(grid) {
            return Err(Error::ParameterViolation(format!(
                "2^-{} is below the resolution guard {}",
                self.n_max,
                min_scale(grid)
            )));
        }
        if !grid.domain().contains(&self.window.enlarge(4.0)) {
            return Err(Error::SupportOverflow("the window enlarged by 4 must fit in the grid".into()));
        }
        Ok(())
    }

    pub fn scale(&self, n: usize) -> f64 {
        (-(n as f64)).exp2()
    }

    /// `h` nodes over `B(0, 2)` with the `2 * spacing` cutoff.
    pub fn nodes(&self, grid: &Grid) -> HNodes {
        DyadicAnnulusScheme::for_grid(grid, 2.0, self.points_per_annulus).nodes(Some(grid))
    }

    pub fn lattice(&self, grid: &Grid, window: Window, n: usize) -> Lattice {
        Lattice::for_scale(*grid, window, self.scale(n), self.x_resolution)
    }

    pub fn scaling(&self, lambda: f64) -> f64 {
        scaling_function(self.exponents.gamma, self.q, self.epsilon, lambda)
    }
}

/// `k(lambda)`: `lambda^gamma`, or a logarithmic substitute when `gamma = 0`.
pub fn scaling_function(gamma: f64, q: IntegrabilityParam, epsilon: f64, lambda: f64) -> f64 {
    if gamma != 0.0 {
        lambda.powf(gamma)
    } else if q.is_inf() {
        1.0 + lambda.ln().abs()
    } else {
        1.0 + lambda.ln().abs().powf(1.0 + epsilon)
    }
}

/// Least-squares slope of `log2(values)` against the index, skipping
/// non-positive entries.
pub fn fit_log2_slope(values: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0 && v.is_finite())
        .map(|(n, v)| (n as f64, v.log2()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    num / den
}

/// Apply `row` to every lattice point and hand the results to `sink` in
/// lattice order.
pub(crate) fn scan_lattice<F, S>(lattice: &Lattice, row: F, mut sink: S) -> Result<()>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
    S: FnMut(usize, &[f64]),
{
    let mut start = 0;
    while start < lattice.count {
        let end = (start + BATCH).min(lattice.count);
        let rows: Vec<Vec<f64>> = (start..end)
            .into_par_iter()
            .map(|k| row(lattice.point(k)))
            .collect::<Result<_>>()?;
        for (k, r) in (start..end).zip(&rows) {
            sink(k, r);
        }
        start = end;
    }
    Ok(())
}

/// Running `L^p` norms of several lattice functions at once.
pub(crate) struct NormAccumulator {
    p: IntegrabilityParam,
    acc: Vec<f64>,
}

impl NormAccumulator {
    pub(crate) fn new(p: IntegrabilityParam, len: usize) -> Self {
        Self { p, acc: vec![0.0; len] }
    }

    pub(crate) fn add(&mut self, weight: f64, values: impl IntoIterator<Item = f64>) {
        for (a, v) in self.acc.iter_mut().zip(values) {
            match self.p {
                IntegrabilityParam::Inf => *a = a.max(v.abs()),
                IntegrabilityParam::Finite(p) => *a += weight * v.abs().powf(p),
            }
        }
    }

    pub(crate) fn finish(self) -> Vec<f64> {
        match self.p {
            IntegrabilityParam::Inf => self.acc,
            IntegrabilityParam::Finite(p) => self.acc.into_iter().map(|a| a.powf(1.0 / p)).collect(),
        }
    }
}

/// Per-level `L^p(window)` norms of the normalised differences
/// `(F_{x+h} - F_x)(phi_x^lambda) / (lambda^alpha (lambda + |h|)^(gamma - alpha))`
/// for every node, and of `F_x(phi_x^lambda) / lambda^beta`.
fn level_norms(
    germ: &dyn Germ,
    phi: &TestFunction,
    cfg: &NormConfig,
    window: Window,
    nodes: &HNodes,
    n: usize,
) -> Result<(Vec<f64>, f64)> {
    let grid = *phi.grid();
    let lambda = cfg.scale(n);
    let base = scale_recenter(phi, 0.0, lambda)?;
    let lattice = cfg.lattice(&grid, window, n);
    let ExponentTriple { alpha, beta, gamma, .. } = cfg.exponents;
    let mut shifts = Vec::with_capacity(nodes.len() + 1);
    shifts.push(0.0);
    shifts.extend_from_slice(&nodes.h);
    let norm: Vec<f64> = nodes
        .h
        .iter()
        .map(|h| 1.0 / (lambda.powf(alpha) * (lambda + h.abs()).powf(gamma - alpha)))
        .collect();
    let g_norm = 1.0 / lambda.powf(beta);
    let mut acc = NormAccumulator::new(cfg.p, nodes.len() + 1);
    scan_lattice(
        &lattice,
        |x| {
            let psi = base.shifted(grid.nearest_index(x))?;
            let mut out = vec![0.0; shifts.len()];
            germ.pair_shifts(x, &psi, &shifts, &mut out)?;
            let centre = out[0];
            out[0] = centre * g_norm;
            for (o, w) in out[1..].iter_mut().zip(&norm) {
                *o = (*o - centre) * w;
            }
            Ok(out)
        },
        |k, row| acc.add(lattice.weight(k), row.iter().copied()),
    )?;
    let mut v = acc.finish();
    let g = v.remove(0);
    Ok((v, g))
}

/// The sampled tables `f(n, h)` and `g(n)`.
#[derive(Clone, Debug)]
pub struct CoherenceTable {
    pub nodes: HNodes,
    /// `f[n][node]`.
    pub f: Vec<Vec<f64>>,
    pub g: Vec<f64>,
}

impl CoherenceTable {
    /// Table built from closed-form values.
    pub fn synthetic(
        nodes: HNodes,
        n_max: usize,
        f: impl Fn(usize, f64) -> f64,
        g: impl Fn(usize) -> f64,
    ) -> Self {
        let table = (0..=n_max).map(|n| nodes.h.iter().map(|&h| f(n, h)).collect()).collect();
        Self { f: table, g: (0..=n_max).map(g).collect(), nodes }
    }

    pub fn n_max(&self) -> usize {
        self.f.len() - 1
    }

    /// `int_{|h| <= radius} f(n, h) dh`.
    pub fn ball_integral(&self, n: usize, radius: f64) -> f64 {
        self.nodes
            .ball_weights(radius)
            .iter()
            .zip(&self.f[n])
            .map(|(w, v)| w * v)
            .sum()
    }
}

/// `f` and `g` over `x` in the window enlarged by 2.
pub fn fg_tables(germ: &dyn Germ, phi_hat: &TestFunction, cfg: &NormConfig) -> Result<CoherenceTable> {
    let grid = *phi_hat.grid();
    cfg.validate(&grid)?;
    let nodes = cfg.nodes(&grid);
    let window = cfg.window.enlarge(2.0);
    let mut f = Vec::with_capacity(cfg.n_max + 1);
    let mut g = Vec::with_capacity(cfg.n_max + 1);
    for n in 0..=cfg.n_max {
        let (fn_, gn) = level_norms(germ, phi_hat, cfg, window, &nodes, n)?;
        f.push(fn_);
        g.push(gn);
    }
    Ok(CoherenceTable { nodes, f, g })
}

/// The four averaged sequences with their truncation tails.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MSequences {
    pub m1: Vec<f64>,
    pub m2: Vec<f64>,
    pub m3: Vec<f64>,
    pub m4: Vec<f64>,
    pub tail2: Vec<f64>,
    pub tail3: Vec<f64>,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

fn geometric_tail(last: f64, c: f64) -> f64 {
    if c > 0.0 {
        let ratio = (-c).exp2();
        last * ratio / (1.0 - ratio)
    } else {
        f64::INFINITY
    }
}

/// Sequences with decay parameters `c2`, `c3`, `c4`.
pub fn m_sequences_with(table: &CoherenceTable, c2: f64, c3: f64, c4: f64) -> MSequences {
    let n_max = table.n_max();
    let p2 = |k: usize| (-(k as f64)).exp2();
    let mut out = MSequences {
        m1: Vec::new(),
        m2: Vec::new(),
        m3: Vec::new(),
        m4: Vec::new(),
        tail2: Vec::new(),
        tail3: Vec::new(),
        c2,
        c3,
        c4,
    };
    let inner: Vec<f64> = (0..=n_max).map(|k| table.ball_integral(k, p2(k))).collect();
    let outer: Vec<f64> = (0..=n_max).map(|k| table.ball_integral(k, 2.0 * p2(k))).collect();
    for n in 0..=n_max {
        out.m1.push(outer[n] / p2(n));
        let mut sum2 = 0.0;
        let mut sum3 = 0.0;
        let mut last2 = 0.0;
        let mut last3 = 0.0;
        let ball_n_tables: Vec<f64> = (n..=n_max).map(|k| table.ball_integral(k, 2.0 * p2(n))).collect();
        for k in n..=n_max {
            let d = (k - n) as f64;
            last2 = (-d * c2).exp2() * inner[k] / p2(k);
            last3 = (-d * c3).exp2() * ball_n_tables[k - n] / p2(n);
            sum2 += last2;
            sum3 += last3;
        }
        out.m2.push(sum2);
        out.m3.push(sum3);
        out.tail2.push(geometric_tail(last2, c2));
        out.tail3.push(geometric_tail(last3, c3));
        let sum4: f64 = (0..n)
            .map(|k| ((n as f64 - k as f64) * c4).exp2() * outer[k] / p2(k))
            .sum();
        out.m4.push(sum4);
    }
    out
}

/// Sequences with the parameters `gamma`, `alpha + r`, `gamma`.
pub fn m_sequences(table: &CoherenceTable, exponents: &ExponentTriple, r: usize) -> MSequences {
    m_sequences_with(table, exponents.gamma, exponents.alpha + r as f64, exponents.gamma)
}

/// The norm assembled from `g` and the averaged sequences, by sign of gamma.
pub fn g_norm_from_table(table: &CoherenceTable, cfg: &NormConfig, r: usize) -> f64 {
    let m = m_sequences(table, &cfg.exponents, r);
    // Truncated series are completed by their geometric tails.
    let m2: Vec<f64> = m.m2.iter().zip(&m.tail2).map(|(a, b)| a + b).collect();
    let m3: Vec<f64> = m.m3.iter().zip(&m.tail3).map(|(a, b)| a + b).collect();
    let gamma = cfg.exponents.gamma;
    let g = lq_seq_norm(&table.g, cfg.q1);
    let q = cfg.q;
    if gamma > 0.0 {
        g + lq_seq_norm(&m.m1, q) + lq_seq_norm(&m2, q) + lq_seq_norm(&m3, q)
    } else if gamma < 0.0 {
        g + lq_seq_norm(&m3, q) + lq_seq_norm(&m.m4, q)
    } else {
        let tilde = |s: &[f64]| -> Vec<f64> {
            s.iter()
                .enumerate()
                .map(|(n, v)| v / cfg.scaling(cfg.scale(n)))
                .collect()
        };
        g + lq_seq_norm(&tilde(&m3), q) + lq_seq_norm(&tilde(&m.m4), q)
    }
}

pub fn g_norm(germ: &dyn Germ, phi_hat: &TestFunction, cfg: &NormConfig, r: usize) -> Result<f64> {
    if r as f64 <= -cfg.exponents.beta {
        return Err(Error::ParameterViolation(format!("r = {r} must exceed -beta")));
    }
    let table = fg_tables(germ, phi_hat, cfg)?;
    Ok(g_norm_from_table(&table, cfg, r))
}

/// `L^q(dh/|h|)` over `B(0,2)` of `max_n` of the `L^p(K)` norms of the
/// normalised differences.
pub fn coherence_norm(germ: &dyn Germ, phi: &TestFunction, cfg: &NormConfig) -> Result<f64> {
    let grid = *phi.grid();
    cfg.validate(&grid)?;
    let nodes = cfg.nodes(&grid);
    let mut worst = vec![0.0f64; nodes.len()];
    for n in 0..=cfg.n_max {
        let (f, _) = level_norms(germ, phi, cfg, cfg.window, &nodes, n)?;
        for (w, v) in worst.iter_mut().zip(f) {
            *w = w.max(v);
        }
    }
    Ok(nodes.lq_norm(&worst, cfg.q))
}

/// `max_n` of `|| F_x(phi_x^{2^-n}) / 2^{-n beta} ||_{L^p(K)}`.
pub fn homogeneity_norm(germ: &dyn Germ, phi: &TestFunction, cfg: &NormConfig) -> Result<f64> {
    let grid = *phi.grid();
    cfg.validate(&grid)?;
    let empty = HNodes { h: Vec::new(), log_weight: Vec::new() };
    let mut best = 0.0f64;
    for n in 0..=cfg.n_max {
        let (_, g) = level_norms(germ, phi, cfg, cfg.window, &empty, n)?;
        best = best.max(g);
    }
    Ok(best)
}

/// Result of [`besov_localmeans_norm`].
#[derive(Clone, Debug, Serialize)]
pub struct LocalMeansReport {
    pub alpha: f64,
    pub n0: usize,
    /// `|| max_psi |xi(psi_x^{2^-n})| ||_{L^p(K)} / 2^{-n alpha}`.
    pub per_level: Vec<f64>,
    /// The same without the `2^{n alpha}` factor.
    pub unnormalized: Vec<f64>,
    /// Unit-scale term, present when `alpha >= 0`.
    pub unit_scale: Option<f64>,
    pub value: f64,
    pub slope: f64,
}

/// `|| max_{psi} |xi(psi_x^lambda)| ||_{L^p(window)}` at scale `lambda`.
pub fn local_means_level(
    xi: &Distribution,
    members: &[TestFunction],
    lambda: f64,
    lattice: &Lattice,
    p: IntegrabilityParam,
) -> Result<f64> {
    let grid = lattice.grid;
    let scaled: Vec<SampledFunction> = members
        .iter()
        .map(|psi| scale_recenter(psi, 0.0, lambda))
        .collect::<Result<_>>()?;
    let mut acc = NormAccumulator::new(p, 1);
    scan_lattice(
        lattice,
        |x| {
            let shift = grid.nearest_index(x);
            let mut best = 0.0f64;
            for s in &scaled {
                best = best.max(xi.pair(&s.shifted(shift)?)?.abs());
            }
            Ok(vec![best])
        },
        |k, row| acc.add(lattice.weight(k), row.iter().copied()),
    )?;
    Ok(acc.finish()[0])
}

/// Besov norm by local means over `x` in `cfg.window`, with the supremum over
/// the test function ball replaced by the configured dictionary.
pub fn besov_localmeans_norm(
    xi: &Distribution,
    alpha: f64,
    cfg: &NormConfig,
    grid: &Grid,
) -> Result<LocalMeansReport> {
    if cfg.scale(cfg.n_max) < min_scale(grid) {
        return Err(Error::ParameterViolation("scale depth below resolution guard".into()));
    }
    if !(cfg.dictionary.r as f64 > -alpha) {
        return Err(Error::ParameterViolation(format!(
            "dictionary order {} must exceed -alpha = {}",
            cfg.dictionary.r, -alpha
        )));
    }
    let plain = build_dictionary(*grid, DictionarySpec { s: -1, ..cfg.dictionary })?;
    let members = if alpha >= 0.0 {
        build_dictionary(*grid, DictionarySpec { s: alpha.floor() as i32, ..cfg.dictionary })?.members
    } else {
        plain.members.clone()
    };
    let mut per_level = Vec::with_capacity(cfg.n_max + 1);
    let mut unnormalized = Vec::with_capacity(cfg.n_max + 1);
    for n in 0..=cfg.n_max {
        let lambda = cfg.scale(n);
        let lattice = cfg.lattice(grid, cfg.window, n);
        let v = local_means_level(xi, &members, lambda, &lattice, cfg.p)?;
        unnormalized.push(v);
        per_level.push(v / lambda.powf(alpha));
    }
    let unit_scale = if alpha >= 0.0 {
        let lattice = cfg.lattice(grid, cfg.window, 0);
        Some(local_means_level(xi, &plain.members, 1.0, &lattice, cfg.p)?)
    } else {
        None
    };
    let value = lq_seq_norm(&per_level, cfg.q) + unit_scale.unwrap_or(0.0);
    let slope = fit_log2_slope(&unnormalized);
    Ok(LocalMeansReport { alpha, n0: 0, per_level, unnormalized, unit_scale, value, slope })
}

/// Besov norm by Taylor remainders: for every `k < alpha`, the
/// `L^q(B(0, h0), dh/|h|)` norm of the `L^p(window)` norm of
/// `(f^(k)(x+h) - sum_{l < alpha-k} f^(k+l)(x) h^l / l!) / |h|^(alpha-k)`,
/// plus `sum_k || f^(k) ||_{L^p(window)}`. `derivatives[0]` is `f`.
#[allow(clippy::too_many_arguments)]
pub fn besov_taylor_norm(
    derivatives: &[SampledFunction],
    alpha: f64,
    p: IntegrabilityParam,
    q: IntegrabilityParam,
    h0: f64,
    window: Window,
    points_per_annulus: usize,
) -> Result<f64> {
    if !(alpha > 0.0) || alpha.fract() == 0.0 {
        return Err(Error::ParameterViolation(format!("alpha = {alpha} must be positive and non-integer")));
    }
    let count = alpha.ceil() as usize;
    if derivatives.len() != count {
        return Err(Error::ArityMismatch { expected: count, got: derivatives.len() });
    }
    let grid = *derivatives[0].grid();
    for d in derivatives {
        grid.check_same(d.grid())?;
        if !d.support().contains(&window.enlarge(h0)) {
            return Err(Error::SupportOverflow("window enlarged by h0 exceeds the samples".into()));
        }
    }
    let nodes = DyadicAnnulusScheme::for_grid(&grid, h0, points_per_annulus).nodes(Some(&grid));
    let lattice = Lattice::over(grid, window, 1);
    let mut total = 0.0;
    let mut factorial = vec![1.0; count + 1];
    for l in 1..=count {
        factorial[l] = factorial[l - 1] * l as f64;
    }
    for k in 0..count {
        let order = alpha - k as f64;
        let terms = (order.ceil() as usize).min(count - k);
        let mut acc = NormAccumulator::new(p, nodes.len());
        scan_lattice(
            &lattice,
            |x| {
                let i = grid.nearest_index(x);
                let local: Vec<f64> = (0..terms).map(|l| derivatives[k + l].at_index(i)).collect();
                Ok(nodes
                    .h
                    .iter()
                    .map(|&h| {
                        if h == 0.0 {
                            return 0.0;
                        }
                        let shifted = derivatives[k].at_index(i + grid.nearest_index(h));
                        let taylor: f64 = (0..terms).map(|l| local[l] * h.powi(l as i32) / factorial[l]).sum();
                        (shifted - taylor) / h.abs().powf(order)
                    })
                    .collect())
            },
            |j, row| acc.add(lattice.weight(j), row.iter().copied()),
        )?;
        total += nodes.lq_norm(&acc.finish(), q);
        total += lattice.norm(
            &(0..lattice.count).map(|j| derivatives[k].at_index(lattice.index(j))).collect::<Vec<_>>(),
            p,
        );
    }
    Ok(total)
}

/// Result of [`series_lemma_verify`].
#[derive(Clone, Debug, Serialize)]
pub struct SeriesLemmaReport {
    pub u: Vec<f64>,
    pub lhs: f64,
    pub witness: f64,
    /// The constant `4 A` of the lemma in one dimension.
    pub constant: f64,
    /// `lhs / witness`.
    pub ratio: f64,
    pub bound_holds: bool,
}

/// Check `|| u ||_{l^q} <= 4 A || sup_k f_k ||_{L^q(B(0,2), dx/|x|)}` for
/// `u_n = sum_k a[k][n] int_{|x| <= 2^{1-k}} 2^k f_k(x) dx`.
pub fn series_lemma_verify(
    a: &[Vec<f64>],
    f: &[Vec<f64>],
    nodes: &HNodes,
    q: IntegrabilityParam,
    bound_a: f64,
) -> Result<SeriesLemmaReport> {
    if a.len() != f.len() {
        return Err(Error::ArityMismatch { expected: a.len(), got: f.len() });
    }
    let n_cols = a.first().map_or(0, Vec::len);
    if a.iter().flatten().chain(f.iter().flatten()).any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::HypothesisViolated("entries must be finite and non-negative".into()));
    }
    let tol = bound_a * (1.0 + 1e-12);
    for (k, row) in a.iter().enumerate() {
        let s: f64 = row.iter().sum();
        if s > tol {
            return Err(Error::HypothesisViolated(format!("sum over n for k = {k} is {s} > {bound_a}")));
        }
    }
    for n in 0..n_cols {
        let s: f64 = a.iter().map(|row| row[n]).sum();
        if s > tol {
            return Err(Error::HypothesisViolated(format!("sum over k for n = {n} is {s} > {bound_a}")));
        }
    }
    let integrals: Vec<f64> = f
        .iter()
        .enumerate()
        .map(|(k, fk)| {
            let r = (1.0 - k as f64).exp2();
            let w = nodes.ball_weights(r);
            (k as f64).exp2() * w.iter().zip(fk).map(|(w, v)| w * v).sum::<f64>()
        })
        .collect();
    let u: Vec<f64> = (0..n_cols)
        .map(|n| a.iter().zip(&integrals).map(|(row, i)| row[n] * i).sum())
        .collect();
    let sup: Vec<f64> = (0..nodes.len())
        .map(|j| f.iter().fold(0.0f64, |m, fk| m.max(fk[j])))
        .collect();
    let witness = nodes.lq_norm(&sup, q);
    let lhs = lq_seq_norm(&u, q);
    let constant = 4.0 * bound_a;
    Ok(SeriesLemmaReport {
        lhs,
        witness,
        constant,
        ratio: lhs / witness,
        bound_holds: lhs <= constant * witness * (1.0 + 1e-9),
        u,
    })
}
