//! The reconstruction operator built from the dyadic mollifier
//! `rho = phi_hat^2 * phi_hat`, the reconstruction-bound table and the
//! four error terms that control it.
//!
//! Every level of the series is a density in `z`:
//! `B_k(z) = int F_x(phi_hat_x^e) phi_check^e(x - z) dx` for the `u'` part and
//! `E_k(z) = int (F_z - F_x)(phi_hat_x^e) phi_check^e(x - z) dx` for the `u''`
//! part, with `e = 2^-k`. Each is evaluated on a lattice of step about
//! `e 2^-x_resolution`, interpolated onto the grid and summed, so the
//! reconstruction is stored as one density on the enlarged window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::germ::{Distribution, Germ};
use crate::grid::{convolve, lq_seq_norm, Grid, Lattice, SampledFunction, Window};
use crate::norms::{fit_log2_slope, scan_lattice, NormAccumulator, NormConfig};
use crate::testfn::{
    bump_profile, build_dictionary, make_phicheck, min_scale, mollifier, scale_recenter, solve_dense, standard_bump,
    DictionarySpec,
    TestFunction,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Path {
    /// Full series, for `gamma > 0`.
    Positive,
    /// Series without the `u''` terms, starting at level 0, for `gamma <= 0`.
    Nonpositive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionConfig {
    pub n0: usize,
    /// Last level kept in the series.
    pub n_max: usize,
    pub path: Path,
    pub norm: NormConfig,
    /// `2^x_resolution` lattice points per unit of the level scale.
    #[serde(default = "default_resolution")]
    pub x_resolution: u32,
}

fn default_resolution() -> u32 {
    8
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self { n0: 0, n_max: 8, path: Path::Positive, norm: NormConfig::default(), x_resolution: 8 }
    }
}

impl ReconstructionConfig {
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        self.norm.validate(grid)?;
        let gamma = self.norm.exponents.gamma;
        match self.path {
            Path::Positive if !(gamma > 0.0) => {
                return Err(Error::ParameterViolation(format!("positive path needs gamma > 0, got {gamma}")))
            }
            Path::Nonpositive if gamma > 0.0 => {
                return Err(Error::ParameterViolation(format!("nonpositive path needs gamma <= 0, got {gamma}")))
            }
            _ => {}
        }
        if self.norm.r as f64 <= -self.norm.exponents.beta {
            return Err(Error::ParameterViolation(format!(
                "r = {} must exceed -beta = {}",
                self.norm.r, -self.norm.exponents.beta
            )));
        }
        if (-(self.n_max as f64)).exp2() < min_scale(grid) {
            return Err(Error::ParameterViolation(format!(
                "2^-{} is below the resolution guard {}",
                self.n_max,
                min_scale(grid)
            )));
        }
        if self.path == Path::Positive && self.n0 > self.n_max {
            return Err(Error::ParameterViolation(format!("n0 = {} exceeds n_max = {}", self.n0, self.n_max)));
        }
        Ok(())
    }

    /// The window `K` enlarged by 1, where the reconstruction lives.
    pub fn domain(&self) -> Window {
        self.norm.window.enlarge(1.0)
    }

    /// `phi_hat` at the finest level must span at least 16 grid points.
    pub fn check_resolution(&self, phi_hat: &TestFunction) -> Result<()> {
        let grid = phi_hat.grid();
        let finest = (-(self.n_max as f64)).exp2();
        let min = 8.0 * grid.spacing() / phi_hat.radius();
        if finest < min {
            return Err(Error::ResolutionTooFine { scale: finest, min });
        }
        Ok(())
    }

    fn first_level(&self) -> usize {
        match self.path {
            Path::Positive => self.n0,
            Path::Nonpositive => 0,
        }
    }
}

/// `|u'_k|`, `|u''_k|` for a reference test function.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SeriesDiagnostics {
    pub levels: Vec<usize>,
    pub u_prime: Vec<f64>,
    /// Empty on the nonpositive path.
    pub u_second: Vec<f64>,
    /// Pairing of the base term with the reference test function.
    pub base: f64,
    pub slope_prime: f64,
    pub slope_second: f64,
}

/// Dictionary-maximised reconstruction bound per level.
#[derive(Clone, Debug, Default, Serialize)]
pub struct BoundReport {
    /// `|| max_psi |(R - F_x)(psi_x^{2^-n})| / k(2^-n) ||_{L^p(K)}`.
    pub per_level: Vec<f64>,
    pub unnormalized: Vec<f64>,
    pub lq_norm: f64,
    pub slope: f64,
}

#[derive(Clone, Debug)]
pub struct ReconstructionResult {
    pub distribution: Distribution,
    pub diagnostics: SeriesDiagnostics,
    pub bound: Option<BoundReport>,
}

/// `phi_hat`, `phi_check = phi_hat^{1/2} - phi_hat^2` and `rho`.
#[derive(Clone, Debug)]
pub struct Kernels {
    pub phi_hat: TestFunction,
    pub phi_check: TestFunction,
    pub rho: TestFunction,
}

impl Kernels {
    pub fn new(phi_hat: &TestFunction) -> Result<Self> {
        Ok(Self {
            phi_hat: phi_hat.clone(),
            phi_check: make_phicheck(phi_hat)?,
            rho: mollifier(phi_hat)?,
        })
    }

    /// `sup |rho^{lambda/2} - rho^lambda - phi_hat^lambda * phi_check^lambda|`.
    pub fn telescoping_residual(&self, lambda: f64) -> Result<f64> {
        let fine = scale_recenter(&self.rho, 0.0, 0.5 * lambda)?;
        let coarse = scale_recenter(&self.rho, 0.0, lambda)?;
        let product = convolve(
            &scale_recenter(&self.phi_hat, 0.0, lambda)?,
            &scale_recenter(&self.phi_check, 0.0, lambda)?,
        )?;
        Ok(fine.axpby(1.0, &coarse, -1.0)?.axpby(1.0, &product, -1.0)?.sup_norm())
    }
}

/// The reference test function of the diagnostics: the standard bump on
/// `B(centre of K, 1)`.
pub fn reference_test_function(grid: Grid, cfg: &ReconstructionConfig) -> Result<SampledFunction> {
    let w = cfg.norm.window;
    scale_recenter(&standard_bump(grid), 0.5 * (w.lo + w.hi), 1.0)
}

/// Level values on `lattice`.
#[derive(Clone, Debug)]
pub(crate) struct LevelDensity {
    pub lattice: Lattice,
    pub values: Vec<f64>,
    /// Largest raw germ pairing seen while building the level.
    pub peak: f64,
}

impl LevelDensity {
    /// Cubic interpolation onto every grid point of `window`.
    fn upsample(&self, window: Window) -> Result<SampledFunction> {
        let grid = self.lattice.grid;
        let lat = &self.lattice;
        let values = &self.values;
        let f = |z: f64| {
            let t = (grid.nearest_index(z) - lat.first) as f64 / lat.stride as f64;
            let j = t.floor() as i64;
            let s = t - j as f64;
            if s == 0.0 {
                return values[j as usize];
            }
            let v = |k: i64| values[(j + k) as usize];
            let (a, b, c, d) = (v(-1), v(0), v(1), v(2));
            // Lagrange weights on the nodes -1, 0, 1, 2.
            -a * s * (s - 1.0) * (s - 2.0) / 6.0 + b * (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0
                - c * (s + 1.0) * s * (s - 2.0) / 2.0
                + d * (s + 1.0) * s * (s - 1.0) / 6.0
        };
        SampledFunction::from_fn(grid, window, f)
    }
}

/// Lattice over `target` at scale `eps`, padded by three steps for the
/// interpolation stencil.
fn padded_lattice(grid: Grid, target: Window, eps: f64, resolution: u32) -> Lattice {
    let probe = Lattice::for_scale(grid, target, eps, resolution);
    Lattice::over(grid, target.enlarge(3.0 * probe.step()), probe.stride)
}

/// Lattice with the stride of `inner` extended by `pad` points on each side.
fn extended(inner: &Lattice, pad: usize) -> Lattice {
    Lattice {
        grid: inner.grid,
        first: inner.first - pad as i64 * inner.stride,
        stride: inner.stride,
        count: inner.count + 2 * pad,
    }
}

/// For every `z` on a lattice over `target`,
/// `first(z) = int F_x(test_x^eps) kernel^kappa(x - z) dx` and
/// `second(z) = int (F_z - F_x)(test_x^eps) kernel^kappa(x - z) dx`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn level_densities(
    germ: &dyn Germ,
    test: &TestFunction,
    eps: f64,
    kernel: &TestFunction,
    kappa: f64,
    target: Window,
    resolution: u32,
    want_second: bool,
) -> Result<(LevelDensity, LevelDensity)> {
    let grid = *test.grid();
    let lz = padded_lattice(grid, target, eps, resolution);
    let step = lz.step();
    let pad = (kernel.radius() * kappa / step).ceil() as usize;
    let lx = extended(&lz, pad);
    let taps = corrected_taps(kernel, kappa, step, pad)?;
    let base = scale_recenter(test, 0.0, eps)?;
    let shifts: Vec<f64> = if want_second {
        (-(pad as i64)..=pad as i64).map(|m| m as f64 * step).collect()
    } else {
        vec![0.0]
    };
    let centre = if want_second { pad } else { 0 };
    let mut first = vec![0.0; lz.count];
    let mut second = vec![0.0; lz.count];
    let mut peak = 0.0f64;
    scan_lattice(
        &lx,
        |x| {
            let psi = base.shifted(grid.nearest_index(x))?;
            let mut out = vec![0.0; shifts.len()];
            germ.pair_shifts(x, &psi, &shifts, &mut out)?;
            Ok(out)
        },
        |i, row| {
            peak = row.iter().fold(peak, |m, v| m.max(v.abs()));
            let a = row[centre];
            // x_i - z_j = (i - j - pad) step
            let lo = i.saturating_sub(2 * pad);
            for j in lo..=i.min(lz.count.saturating_sub(1)) {
                if j + 2 * pad < i {
                    continue;
                }
                first[j] += step * a * taps[i - j];
            }
            if want_second {
                // z_j = x_i + m step with j = i + m - pad
                for (k, d) in row.iter().enumerate() {
                    let m = k as i64 - pad as i64;
                    let j = i as i64 + m - pad as i64;
                    if j < 0 || j >= lz.count as i64 || m == 0 {
                        continue;
                    }
                    second[j as usize] += step * (d - a) * taps[(pad as i64 - m) as usize];
                }
            }
        },
    )?;
    Ok((
        LevelDensity { lattice: lz, values: first, peak },
        LevelDensity { lattice: lz, values: second, peak },
    ))
}

/// Moments of the taps matched by [`corrected_taps`].
const TAP_MOMENTS: usize = 4;

/// Samples of `kernel^kappa` at `m * step`, `|m| <= pad`, corrected by a
/// bump-weighted polynomial so that their discrete moments of order below
/// [`TAP_MOMENTS`] equal those of the kernel. Plain lattice sums of a bump
/// resolved by a few dozen points are only good to about `1e-6`.
fn corrected_taps(kernel: &TestFunction, kappa: f64, step: f64, pad: usize) -> Result<Vec<f64>> {
    let width = kernel.radius() * kappa;
    let offsets: Vec<f64> = (-(pad as i64)..=pad as i64).map(|m| m as f64 * step / width).collect();
    let mut taps: Vec<f64> = offsets.iter().map(|u| kernel.eval(u * kernel.radius()) / kappa).collect();
    let envelope: Vec<f64> = offsets.iter().map(|&u| bump_profile(u)).collect();
    // Moments in the unit variable u = y / width.
    let moment = |w: &[f64], k: usize| step * w.iter().zip(&offsets).map(|(v, u)| v * u.powi(k as i32)).sum::<f64>();
    let rhs: Vec<f64> = (0..TAP_MOMENTS)
        .map(|k| kernel.moment(k) / kernel.radius().powi(k as i32) - moment(&taps, k))
        .collect();
    if rhs.iter().all(|v| *v == 0.0) {
        return Ok(taps);
    }
    let gram = (0..TAP_MOMENTS)
        .map(|k| {
            (0..TAP_MOMENTS)
                .map(|j| {
                    let w: Vec<f64> = envelope.iter().zip(&offsets).map(|(e, u)| e * u.powi(j as i32)).collect();
                    moment(&w, k)
                })
                .collect()
        })
        .collect();
    let coeffs = solve_dense(gram, rhs)?;
    for ((t, e), u) in taps.iter_mut().zip(&envelope).zip(&offsets) {
        *t += e * coeffs.iter().enumerate().map(|(j, c)| c * u.powi(j as i32)).sum::<f64>();
    }
    Ok(taps)
}

/// `z -> F_z(test_z^eps)` on a lattice over `target`.
fn diagonal_density(germ: &dyn Germ, test: &TestFunction, eps: f64, target: Window, resolution: u32) -> Result<LevelDensity> {
    let grid = *test.grid();
    let lz = padded_lattice(grid, target, eps, resolution);
    let base = scale_recenter(test, 0.0, eps)?;
    let mut values = vec![0.0; lz.count];
    scan_lattice(
        &lz,
        |z| Ok(vec![germ.pair(z, &base.shifted(grid.nearest_index(z))?)?]),
        |j, row| values[j] = row[0],
    )?;
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(LevelDensity { lattice: lz, values, peak })
}

fn add_into(total: &mut [f64], part: &SampledFunction) {
    for (t, v) in total.iter_mut().zip(part.values()) {
        *t += v;
    }
}

/// `scale` bounds the size of the pairings, so that values at round-off
/// level count as converged.
fn check_decay(levels: &[usize], u: &[f64], scale: f64) -> Result<()> {
    if u.len() < 3 {
        return Ok(());
    }
    let floor = 1e-12 * scale;
    let n = u.len();
    let (a, c) = (u[n - 3].abs(), u[n - 1].abs());
    if c > floor && c >= a {
        return Err(Error::NotConvergent(format!(
            "|u_{}| = {c:e} is not below |u_{}| = {a:e}",
            levels[n - 1],
            levels[n - 3]
        )));
    }
    Ok(())
}

fn reconstruct_series(germ: &dyn Germ, phi_hat: &TestFunction, cfg: &ReconstructionConfig) -> Result<ReconstructionResult> {
    let grid = *phi_hat.grid();
    cfg.validate(&grid)?;
    cfg.check_resolution(phi_hat)?;
    let kernels = Kernels::new(phi_hat)?;
    let domain = cfg.domain();
    let reference = reference_test_function(grid, cfg)?;
    let first = cfg.first_level();
    let want_second = cfg.path == Path::Positive;

    let base_eps = (-(first as f64)).exp2();
    let base_level = diagonal_density(germ, &kernels.rho, base_eps, domain, cfg.x_resolution)?;
    let reference_mass = pair_abs(&SampledFunction::on_domain(grid, |_| 1.0), &reference);
    let base = base_level.upsample(domain)?;
    let mut total = base.values().to_vec();
    let mut diagnostics = SeriesDiagnostics { base: pair_density(&base, &reference), ..Default::default() };
    let mut scale = pair_abs(&base, &reference).max(base_level.peak * reference_mass);
    for k in first..=cfg.n_max {
        let eps = (-(k as f64)).exp2();
        let (b, e) = level_densities(
            germ,
            &kernels.phi_hat,
            eps,
            &kernels.phi_check,
            eps,
            domain,
            cfg.x_resolution,
            want_second,
        )?;
        scale = scale.max(b.peak * reference_mass);
        let b = b.upsample(domain)?;
        add_into(&mut total, &b);
        diagnostics.levels.push(k);
        diagnostics.u_prime.push(pair_density(&b, &reference));
        scale = scale.max(pair_abs(&b, &reference));
        if want_second {
            let e = e.upsample(domain)?;
            add_into(&mut total, &e);
            diagnostics.u_second.push(pair_density(&e, &reference));
            scale = scale.max(pair_abs(&e, &reference));
        }
    }
    let u: Vec<f64> = diagnostics
        .u_prime
        .iter()
        .enumerate()
        .map(|(i, a)| a + diagnostics.u_second.get(i).copied().unwrap_or(0.0))
        .collect();
    check_decay(&diagnostics.levels, &u, scale)?;
    let abs_prime: Vec<f64> = diagnostics.u_prime.iter().map(|v| v.abs()).collect();
    let abs_second: Vec<f64> = diagnostics.u_second.iter().map(|v| v.abs()).collect();
    diagnostics.slope_prime = fit_log2_slope(&abs_prime);
    diagnostics.slope_second = fit_log2_slope(&abs_second);
    diagnostics.u_prime = abs_prime;
    diagnostics.u_second = abs_second;
    let density = SampledFunction::new(grid, base.start_index(), total)?;
    Ok(ReconstructionResult {
        distribution: Distribution::from_density_on(density, domain),
        diagnostics,
        bound: None,
    })
}

fn pair_abs(density: &SampledFunction, psi: &SampledFunction) -> f64 {
    let dx = density.grid().spacing();
    psi.points()
        .enumerate()
        .map(|(k, (_, v))| (v * density.at_index(psi.start_index() + k as i64)).abs())
        .sum::<f64>()
        * dx
}

fn pair_density(density: &SampledFunction, psi: &SampledFunction) -> f64 {
    let dx = density.grid().spacing();
    psi.points()
        .enumerate()
        .map(|(k, (_, v))| v * density.at_index(psi.start_index() + k as i64))
        .sum::<f64>()
        * dx
}

/// Reconstruction for `gamma > 0`: base term at level `n0` plus
/// `u'_k + u''_k` for `k = n0..=n_max`.
pub fn reconstruct_pos(germ: &dyn Germ, phi_hat: &TestFunction, cfg: &ReconstructionConfig) -> Result<ReconstructionResult> {
    if cfg.path != Path::Positive {
        return Err(Error::ParameterViolation("reconstruct_pos needs the positive path".into()));
    }
    reconstruct_series(germ, phi_hat, cfg)
}

/// Reconstruction for `gamma <= 0`: base term at level 0 plus `u'_k` for
/// `k = 0..=n_max`.
pub fn reconstruct_nonpos(germ: &dyn Germ, phi_hat: &TestFunction, cfg: &ReconstructionConfig) -> Result<ReconstructionResult> {
    if cfg.path != Path::Nonpositive {
        return Err(Error::ParameterViolation("reconstruct_nonpos needs the nonpositive path".into()));
    }
    reconstruct_series(germ, phi_hat, cfg)
}

/// Dispatch on `cfg.path` and fill the bound table.
pub fn reconstruct(germ: &dyn Germ, phi_hat: &TestFunction, cfg: &ReconstructionConfig) -> Result<ReconstructionResult> {
    let mut result = reconstruct_series(germ, phi_hat, cfg)?;
    result.bound = Some(reconstruction_bound_report(&result.distribution, germ, phi_hat.grid(), cfg)?);
    Ok(result)
}

/// `int F_z(rho_z^{2^-level}) psi(z) dz`, the telescoped form of the
/// truncated series.
pub fn mollified_pairing(
    germ: &dyn Germ,
    phi_hat: &TestFunction,
    level: usize,
    psi: &SampledFunction,
) -> Result<f64> {
    let grid = *phi_hat.grid();
    let rho = mollifier(phi_hat)?;
    let base = scale_recenter(&rho, 0.0, (-(level as f64)).exp2())?;
    let mut total = 0.0;
    for (k, (z, v)) in psi.points().enumerate() {
        if v == 0.0 {
            continue;
        }
        let i = psi.start_index() + k as i64;
        total += v * germ.pair(z, &base.shifted(i)?)?;
    }
    Ok(total * grid.spacing())
}

fn ball_members(grid: Grid, spec: DictionarySpec) -> Result<Vec<TestFunction>> {
    Ok(build_dictionary(grid, DictionarySpec { s: -1, ..spec })?.members)
}

/// Reconstruction bound of `candidate` against `germ` per level
/// `n = 0..=cfg.norm.n_max` over `x` in `K`.
pub fn reconstruction_bound_report(
    candidate: &Distribution,
    germ: &dyn Germ,
    grid: &Grid,
    cfg: &ReconstructionConfig,
) -> Result<BoundReport> {
    let members = ball_members(*grid, cfg.norm.dictionary)?;
    let mut report = BoundReport::default();
    for n in 0..=cfg.norm.n_max {
        let lambda = cfg.norm.scale(n);
        let scaled: Vec<SampledFunction> = members
            .iter()
            .map(|m| scale_recenter(m, 0.0, lambda))
            .collect::<Result<_>>()?;
        let lattice = cfg.norm.lattice(grid, cfg.norm.window, n);
        let mut acc = NormAccumulator::new(cfg.norm.p, 1);
        scan_lattice(
            &lattice,
            |x| {
                let shift = grid.nearest_index(x);
                let mut best = 0.0f64;
                for s in &scaled {
                    let psi = s.shifted(shift)?;
                    best = best.max((candidate.pair(&psi)? - germ.pair(x, &psi)?).abs());
                }
                Ok(vec![best])
            },
            |k, row| acc.add(lattice.weight(k), row.iter().copied()),
        )?;
        let value = acc.finish()[0];
        report.unnormalized.push(value);
        report.per_level.push(value / cfg.norm.scaling(lambda));
    }
    report.lq_norm = lq_seq_norm(&report.per_level, cfg.norm.q);
    report.slope = fit_log2_slope(&report.unnormalized);
    Ok(report)
}

/// The four error terms at level `n`, as `L^p(K)` norms in `w` of their
/// dictionary maxima.
#[derive(Clone, Debug, Serialize)]
pub struct ProofTerms {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Signed values of the four terms for every `w` on `lattice` and every
/// member, indexed `[w][member]`.
pub(crate) struct SignedTerms {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
}

/// `sum_x step (F_x - F_w)(test_x^eps) chi(x - w)` with
/// `chi = kernel^kappa * psi^lambda`, for `w` on `wl` and each `psi`.
#[allow(clippy::too_many_arguments)]
fn pinned_sums(
    germ: &dyn Germ,
    test: &TestFunction,
    eps: f64,
    kernel: &TestFunction,
    kappa: f64,
    psis: &[SampledFunction],
    lambda: f64,
    wl: &Lattice,
    resolution: u32,
) -> Result<Vec<Vec<f64>>> {
    let grid = *test.grid();
    let probe = Lattice::for_scale(grid, Window::centered(1.0), eps, resolution);
    let stride = probe.stride.min(wl.stride);
    let step = stride as f64 * grid.spacing();
    let kernel_samples = scale_recenter(kernel, 0.0, kappa)?;
    let chis: Vec<SampledFunction> = psis
        .iter()
        .map(|p| convolve(&kernel_samples, p))
        .collect::<Result<_>>()?;
    let reach = kernel.radius() * kappa + lambda;
    let span = Window::new(grid.point(wl.index(0)), grid.point(wl.index(wl.count.saturating_sub(1))));
    let lx = Lattice::over(grid, span.enlarge(reach), stride);
    let base = scale_recenter(test, 0.0, eps)?;
    let w_range = |x: f64| {
        let lo = ((x - reach - grid.point(wl.first)) / wl.step()).ceil().max(0.0) as usize;
        let hi = ((x + reach - grid.point(wl.first)) / wl.step()).floor();
        let hi = if hi < 0.0 { None } else { Some((hi as usize).min(wl.count - 1)) };
        (lo, hi)
    };
    let mut acc = vec![vec![0.0; psis.len()]; wl.count];
    scan_lattice(
        &lx,
        |x| {
            let (lo, hi) = w_range(x);
            let Some(hi) = hi else { return Ok(Vec::new()) };
            if lo > hi {
                return Ok(Vec::new());
            }
            let mut shifts = vec![0.0];
            shifts.extend((lo..=hi).map(|j| wl.point(j) - x));
            let mut out = vec![0.0; shifts.len()];
            germ.pair_shifts(x, &base.shifted(grid.nearest_index(x))?, &shifts, &mut out)?;
            Ok(out)
        },
        |i, row| {
            if row.is_empty() {
                return;
            }
            let x_index = lx.index(i);
            let (lo, _) = w_range(grid.point(x_index));
            let at_x = row[0];
            for (k, f_w) in row[1..].iter().enumerate() {
                let j = lo + k;
                let offset = x_index - wl.index(j);
                let diff = at_x - f_w;
                for (a, chi) in acc[j].iter_mut().zip(&chis) {
                    *a += step * diff * chi.at_index(offset);
                }
            }
        },
    )?;
    Ok(acc)
}

pub(crate) fn signed_proof_terms(
    germ: &dyn Germ,
    phi_hat: &TestFunction,
    cfg: &ReconstructionConfig,
    n: usize,
    psis_unit: &[TestFunction],
    wl: Lattice,
) -> Result<SignedTerms> {
    let grid = *phi_hat.grid();
    let kernels = Kernels::new(phi_hat)?;
    let eps_n = (-(n as f64)).exp2();
    let psis: Vec<SampledFunction> = psis_unit
        .iter()
        .map(|p| scale_recenter(p, 0.0, eps_n))
        .collect::<Result<_>>()?;
    let span = Window::new(grid.point(wl.index(0)), grid.point(wl.index(wl.count.saturating_sub(1))));
    let target = span.enlarge(eps_n);
    let pair_all = |density: &SampledFunction| -> Result<Vec<Vec<f64>>> {
        (0..wl.count)
            .map(|j| {
                psis.iter()
                    .map(|p| Ok(pair_density(density, &p.shifted(wl.index(j))?)))
                    .collect()
            })
            .collect()
    };
    let res = cfg.x_resolution;
    let (_, ia) = level_densities(germ, &kernels.phi_hat, eps_n, &kernels.phi_hat, 2.0 * eps_n, target, res, true)?;
    let a = pair_all(&ia.upsample(target)?)?;
    let b = pinned_sums(germ, &kernels.phi_hat, eps_n, &kernels.phi_hat, 2.0 * eps_n, &psis, eps_n, &wl, res)?;
    let mut c_density = vec![0.0; 0];
    let mut start = 0;
    let mut d = vec![vec![0.0; psis.len()]; wl.count];
    for k in n..=cfg.n_max {
        let eps = (-(k as f64)).exp2();
        let (_, e) = level_densities(germ, &kernels.phi_hat, eps, &kernels.phi_check, eps, target, res, true)?;
        let e = e.upsample(target)?;
        if c_density.is_empty() {
            c_density = e.values().to_vec();
            start = e.start_index();
        } else {
            add_into(&mut c_density, &e);
        }
        let dk = pinned_sums(germ, &kernels.phi_hat, eps, &kernels.phi_check, eps, &psis, eps_n, &wl, res)?;
        for (row, add) in d.iter_mut().zip(dk) {
            for (v, a) in row.iter_mut().zip(add) {
                *v += a;
            }
        }
    }
    let c = if c_density.is_empty() {
        vec![vec![0.0; psis.len()]; wl.count]
    } else {
        pair_all(&SampledFunction::new(grid, start, c_density)?)?
    };
    Ok(SignedTerms { a, b, c, d })
}

/// The terms `a_n`, `b_n`, `c_n`, `d_n` with `w` on a lattice of step about
/// `2^-n / 16` over `K`, series truncated at `cfg.n_max`.
pub fn proof_terms(
    germ: &dyn Germ,
    phi_hat: &TestFunction,
    cfg: &ReconstructionConfig,
    n: usize,
) -> Result<ProofTerms> {
    let grid = *phi_hat.grid();
    cfg.validate(&grid)?;
    cfg.check_resolution(phi_hat)?;
    if cfg.path != Path::Positive {
        return Err(Error::ParameterViolation("proof terms are defined on the positive path".into()));
    }
    if n > cfg.n_max {
        return Err(Error::ParameterViolation(format!("level {n} exceeds n_max = {}", cfg.n_max)));
    }
    let members = ball_members(grid, cfg.norm.dictionary)?;
    let wl = Lattice::for_scale(grid, cfg.norm.window, (-(n as f64)).exp2(), 4);
    let t = signed_proof_terms(germ, phi_hat, cfg, n, &members, wl)?;
    let norm = |v: &[Vec<f64>]| {
        let maxed: Vec<f64> = v.iter().map(|row| row.iter().fold(0.0f64, |m, x| m.max(x.abs()))).collect();
        wl.norm(&maxed, cfg.norm.p)
    };
    Ok(ProofTerms { n, a: norm(&t.a), b: norm(&t.b), c: norm(&t.c), d: norm(&t.d) })
}

/// `int f psi`, the quadrature oracle for reconstructions of functions.
pub fn function_pairing(f: &SampledFunction, psi: &SampledFunction) -> f64 {
    pair_density(f, psi)
}
