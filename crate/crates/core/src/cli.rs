//! Batch experiment driver: a JSON config in, CSV tables and a summary JSON out.

use std::fs;
use std::path::{Path as FsPath, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::Error;
use crate::germ::{constant_germ, monomial_germ, taylor_germ, Distribution, PolynomialGerm};
use crate::grid::{Grid, SampledFunction, Window};
use crate::norms::{
    besov_localmeans_norm, besov_taylor_norm, coherence_norm, fg_tables, g_norm_from_table, homogeneity_norm,
    m_sequences, NormConfig,
};
use crate::reconstruct::{function_pairing, reconstruct, Kernels, ReconstructionConfig};
use crate::signals::{realize, Realized, SignalSpec};
use crate::testfn::{
    annihilation_bound_check, build_dictionary, default_scales, scale_recenter, standard_bump, tweak, DictionarySpec,
    TestFunction,
};
use crate::young::{ibp_oracle, v_quantities, young_product, YoungConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0} check(s) failed")]
    ChecksFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => e.exit_code(),
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::ChecksFailed(_) => 5,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    TweakCheck,
    Coherence,
    Reconstruct,
    Young,
    Besov,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::TweakCheck => "tweak-check",
            Command::Coherence => "coherence",
            Command::Reconstruct => "reconstruct",
            Command::Young => "young",
            Command::Besov => "besov",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub half_length: u32,
    pub level: u32,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { half_length: 8, level: 16 }
    }
}

/// Germs available from a config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GermSpec {
    Zero,
    /// `F_x = xi` for every `x`.
    Constant { signal: SignalSpec },
    /// `F_x(z) = z - x`.
    #[default]
    Monomial,
    /// Taylor expansion of order `beta` of a function signal.
    Taylor { signal: SignalSpec, beta: f64 },
}

/// A germ together with the distribution it should reconstruct to.
pub struct BuiltGerm {
    pub germ: PolynomialGerm,
    pub target: Distribution,
}

impl GermSpec {
    pub fn build(&self, grid: Grid) -> crate::Result<BuiltGerm> {
        Ok(match self {
            GermSpec::Zero => {
                BuiltGerm { germ: constant_germ(&Distribution::zero()), target: Distribution::zero() }
            }
            GermSpec::Constant { signal } => {
                let xi = realize(signal, grid, 1)?.distribution();
                BuiltGerm { germ: constant_germ(&xi), target: xi }
            }
            GermSpec::Monomial => BuiltGerm { germ: monomial_germ(), target: Distribution::zero() },
            GermSpec::Taylor { signal, beta } => {
                let derivatives = function_derivatives(signal, grid, beta.ceil() as usize)?;
                let target = Distribution::from_density(derivatives[0].clone());
                BuiltGerm { germ: taylor_germ(&derivatives, *beta)?, target }
            }
        })
    }
}

fn function_derivatives(signal: &SignalSpec, grid: Grid, count: usize) -> crate::Result<Vec<SampledFunction>> {
    match realize(signal, grid, count)? {
        Realized::Function { derivatives } => Ok(derivatives),
        Realized::Distribution(_) => {
            Err(Error::ParameterViolation("a sampled function signal is required here".into()))
        }
    }
}

/// Test functions `psi_c^lambda` built from the standard bump, with random
/// centres and scales keeping the support inside the window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PanelSpec {
    pub size: usize,
    pub min_scale: f64,
    pub max_scale: f64,
}

impl Default for PanelSpec {
    fn default() -> Self {
        Self { size: 10, min_scale: 0.1, max_scale: 0.4 }
    }
}

#[derive(Clone, Debug)]
pub struct PanelMember {
    pub center: f64,
    pub scale: f64,
    pub psi: SampledFunction,
}

pub fn psi_panel(grid: Grid, window: Window, spec: PanelSpec, seed: u64) -> crate::Result<Vec<PanelMember>> {
    if !(spec.min_scale > 0.0 && spec.max_scale >= spec.min_scale && 2.0 * spec.max_scale < window.width()) {
        return Err(Error::ParameterViolation("panel scales must be positive and fit the window".into()));
    }
    let bump = standard_bump(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..spec.size)
        .map(|_| {
            let scale = if spec.max_scale > spec.min_scale {
                rng.gen_range(spec.min_scale..spec.max_scale)
            } else {
                spec.min_scale
            };
            let center = rng.gen_range(window.lo + scale..window.hi - scale);
            Ok(PanelMember { center, scale, psi: scale_recenter(&bump, center, scale)? })
        })
        .collect()
}

/// `|value - reference|` relative to `|reference|`, or to `scale` when the
/// reference vanishes.
pub fn relative_error(value: f64, reference: f64, scale: f64) -> f64 {
    let d = (value - reference).abs();
    if reference != 0.0 {
        d / reference.abs()
    } else if scale > 0.0 {
        d / scale
    } else {
        d
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TweakSection {
    pub r: usize,
    /// Explicit scales `lambda_i`; derived from the radius when absent.
    pub scales: Option<Vec<f64>>,
    /// Randomized cases of the annihilation bound.
    pub cases: usize,
    /// Levels `n = 0..telescoping_levels` of the telescoping check.
    pub telescoping_levels: usize,
}

impl Default for TweakSection {
    fn default() -> Self {
        Self { r: 2, scales: None, cases: 20, telescoping_levels: 7 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct YoungSection {
    pub alpha: f64,
    pub beta: f64,
    pub p1: crate::grid::IntegrabilityParam,
    pub p2: crate::grid::IntegrabilityParam,
    pub q1: crate::grid::IntegrabilityParam,
    pub q2: crate::grid::IntegrabilityParam,
    pub r: usize,
    pub g: SignalSpec,
    /// Use the distributional derivative of `g` instead of `g`.
    pub g_derivative: bool,
    pub f: SignalSpec,
}

impl Default for YoungSection {
    fn default() -> Self {
        let d = YoungConfig::default();
        Self {
            alpha: d.alpha,
            beta: d.beta,
            p1: d.p1,
            p2: d.p2,
            q1: d.q1,
            q2: d.q2,
            r: d.r,
            g: SignalSpec::Trig { amplitude: 1.0, frequency: 1.0, phase: 0.0 },
            g_derivative: false,
            f: SignalSpec::Trig { amplitude: 1.0, frequency: 1.0, phase: -std::f64::consts::FRAC_PI_2 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BesovSection {
    pub signal: SignalSpec,
    /// Use the distributional derivative of the signal.
    pub derivative: bool,
    pub alpha: f64,
    /// Regularity for the Taylor-remainder norm of a function signal.
    pub taylor_alpha: Option<f64>,
    /// Radius of the `h` ball in the Taylor-remainder norm.
    pub h0: f64,
}

impl Default for BesovSection {
    fn default() -> Self {
        Self { signal: SignalSpec::Dirac { location: 0.0 }, derivative: false, alpha: -1.0, taylor_alpha: None, h0: 1.0 }
    }
}

/// The full experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    pub grid: GridSpec,
    /// Seed of the test function panel and of the randomized checks.
    pub seed: u64,
    pub germ: GermSpec,
    pub reconstruction: ReconstructionConfig,
    pub panel: PanelSpec,
    pub tweak: TweakSection,
    pub young: YoungSection,
    pub besov: BesovSection,
    /// Tolerance of the pass/fail check of the command, if any.
    pub tolerance: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: None,
            grid: GridSpec::default(),
            seed: 1,
            germ: GermSpec::default(),
            reconstruction: ReconstructionConfig::default(),
            panel: PanelSpec::default(),
            tweak: TweakSection::default(),
            young: YoungSection::default(),
            besov: BesovSection::default(),
            tolerance: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &FsPath) -> CliResult<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn grid(&self) -> crate::Result<Grid> {
        Grid::new(self.grid.half_length, self.grid.level)
    }

    pub fn norm(&self) -> &NormConfig {
        &self.reconstruction.norm
    }

    pub fn young_config(&self) -> YoungConfig {
        let y = &self.young;
        YoungConfig {
            alpha: y.alpha,
            beta: y.beta,
            p1: y.p1,
            p2: y.p2,
            q1: y.q1,
            q2: y.q2,
            r: y.r,
            reconstruction: self.reconstruction.clone(),
        }
    }

    /// The unit-mass kernel `phi_hat` of order `r`.
    pub fn phi_hat(&self, grid: Grid, r: usize) -> crate::Result<TestFunction> {
        let bump = standard_bump(grid);
        let scales = match &self.tweak.scales {
            Some(s) => s.clone(),
            None => default_scales(&bump, r),
        };
        Ok(tweak(&bump, r, &scales)?.function)
    }
}

/// A CSV table with a header; numbers are written with 12 significant digits.
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&'static str]) -> Self {
        Self { name: name.to_string(), header: header.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

/// Tables and summary of one run.
pub struct Report {
    pub tables: Vec<Table>,
    pub results: Value,
    pub failures: usize,
}

impl Report {
    pub fn write(&self, config: &ExperimentConfig, command: Command, out: &FsPath) -> CliResult<Vec<PathBuf>> {
        fs::create_dir_all(out)?;
        let mut written = Vec::new();
        for t in &self.tables {
            let path = out.join(format!("{}.csv", t.name));
            let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Config(e.to_string()))?;
            w.write_record(&t.header).map_err(|e| CliError::Config(e.to_string()))?;
            for row in &t.rows {
                w.write_record(row).map_err(|e| CliError::Config(e.to_string()))?;
            }
            w.flush()?;
            written.push(path);
        }
        let mut resolved = config.clone();
        resolved.command = Some(command);
        let summary = json!({
            "command": command.name(),
            "status": if self.failures == 0 { "pass" } else { "fail" },
            "failures": self.failures,
            "config": resolved,
            "results": self.results,
        });
        let path = out.join("summary.json");
        fs::write(&path, serde_json::to_string_pretty(&summary).expect("serializable summary") + "\n")?;
        written.push(path);
        Ok(written)
    }
}

/// Run `command`, write its outputs under `out`, and fail with exit code 5 if
/// any check failed.
pub fn run(command: Command, config: &ExperimentConfig, out: &FsPath) -> CliResult<Report> {
    if let Some(c) = config.command {
        if c != command {
            return Err(CliError::Config(format!("config is for {}, not {}", c.name(), command.name())));
        }
    }
    let report = match command {
        Command::TweakCheck => tweak_check(config)?,
        Command::Coherence => coherence(config)?,
        Command::Reconstruct => reconstruct_cmd(config)?,
        Command::Young => young(config)?,
        Command::Besov => besov(config)?,
    };
    report.write(config, command, out)?;
    if report.failures > 0 {
        return Err(CliError::ChecksFailed(report.failures));
    }
    Ok(report)
}

struct Checks {
    table: Table,
    failures: usize,
}

impl Checks {
    fn new() -> Self {
        Self { table: Table::new("checks", &["check_name", "value", "tolerance", "pass"]), failures: 0 }
    }

    fn add(&mut self, name: String, value: f64, tolerance: f64) {
        let pass = value <= tolerance;
        if !pass {
            self.failures += 1;
        }
        self.table.push(vec![name, num(value), num(tolerance), pass.to_string()]);
    }
}

fn tweak_check(config: &ExperimentConfig) -> CliResult<Report> {
    let grid = config.grid()?;
    let r = config.tweak.r;
    let phi_hat = config.phi_hat(grid, r)?;
    let kernels = Kernels::new(&phi_hat)?;
    let mut checks = Checks::new();
    checks.add("moment_0".into(), (phi_hat.mass() - 1.0).abs(), 1e-9);
    for k in 1..r {
        checks.add(format!("moment_{k}"), phi_hat.moment(k).abs(), 1e-8);
    }
    for n in 0..config.tweak.telescoping_levels {
        let residual = kernels.telescoping_residual((-(n as f64)).exp2())?;
        checks.add(format!("telescoping_{n}"), residual, 1e-6 * (n as f64).exp2());
    }
    // Polynomials of degree < r are annihilated: phi_check^lambda * x^k at 0.
    for k in 0..r {
        let lambda = 0.25;
        let s = scale_recenter(&kernels.phi_check, 0.0, lambda)?;
        let v: f64 = s.points().map(|(y, w)| w * (-y).powi(k as i32)).sum::<f64>() * grid.spacing();
        checks.add(format!("annihilate_degree_{k}"), v.abs(), 1e-8);
    }
    let etas = build_dictionary(grid, DictionarySpec { r, s: -1, size: config.tweak.cases, seed: config.seed })?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut cases = Table::new("annihilation", &["case", "lambda", "lhs", "rhs", "halving_ratio"]);
    for (i, eta) in etas.members.iter().enumerate() {
        let lambda = rng.gen_range(-6.0f64..-2.0).exp2();
        let (lhs, rhs) = annihilation_bound_check(&kernels.phi_check, eta, lambda, r)?;
        let (half, _) = annihilation_bound_check(&kernels.phi_check, eta, 0.5 * lambda, r)?;
        cases.push(vec![i.to_string(), num(lambda), num(lhs), num(rhs), num(half / lhs)]);
        checks.add(format!("annihilation_bound_{i}"), lhs - rhs, 0.0);
    }
    let results = json!({
        "r": r,
        "radius": phi_hat.radius(),
        "mass": phi_hat.mass(),
    });
    let failures = checks.failures;
    Ok(Report { tables: vec![checks.table, cases], results, failures })
}

fn coherence(config: &ExperimentConfig) -> CliResult<Report> {
    let grid = config.grid()?;
    let norm = config.norm();
    let phi_hat = config.phi_hat(grid, norm.r)?;
    let built = config.germ.build(grid)?;
    let table = fg_tables(&built.germ, &phi_hat, norm)?;
    let mut f_table = Table::new("f_table", &["n", "h", "f_value"]);
    for (n, row) in table.f.iter().enumerate() {
        for (h, v) in table.nodes.h.iter().zip(row) {
            f_table.push(vec![n.to_string(), num(*h), num(*v)]);
        }
    }
    let mut g_table = Table::new("g_table", &["n", "g_value"]);
    for (n, v) in table.g.iter().enumerate() {
        g_table.push(vec![n.to_string(), num(*v)]);
    }
    let m = m_sequences(&table, &norm.exponents, norm.r);
    let mut m_table = Table::new("m_sequences", &["n", "m1", "m2", "m3", "m4", "tail2", "tail3"]);
    for n in 0..m.m1.len() {
        m_table.push(vec![
            n.to_string(),
            num(m.m1[n]),
            num(m.m2[n]),
            num(m.m3[n]),
            num(m.m4[n]),
            num(m.tail2[n]),
            num(m.tail3[n]),
        ]);
    }
    let coherence = coherence_norm(&built.germ, &phi_hat, norm)?;
    let homogeneity = homogeneity_norm(&built.germ, &phi_hat, norm)?;
    let g = g_norm_from_table(&table, norm, norm.r);
    let mut failures = 0;
    if let Some(tol) = config.tolerance {
        if !(coherence <= tol) {
            failures += 1;
        }
    }
    let results = json!({ "coherence": coherence, "homogeneity": homogeneity, "g_norm": g });
    Ok(Report { tables: vec![f_table, g_table, m_table], results, failures })
}

fn reconstruct_cmd(config: &ExperimentConfig) -> CliResult<Report> {
    let grid = config.grid()?;
    let cfg = &config.reconstruction;
    let phi_hat = config.phi_hat(grid, cfg.norm.r)?;
    let built = config.germ.build(grid)?;
    let result = reconstruct(&built.germ, &phi_hat, cfg)?;
    let d = &result.diagnostics;
    let mut series = Table::new("series", &["k", "u_prime", "u_second"]);
    for (i, k) in d.levels.iter().enumerate() {
        let second = d.u_second.get(i).map(|v| num(*v)).unwrap_or_default();
        series.push(vec![k.to_string(), num(d.u_prime[i]), second]);
    }
    let mut bound = Table::new("bound", &["n", "value", "unnormalized"]);
    let report = result.bound.clone().unwrap_or_default();
    for (n, (v, u)) in report.per_level.iter().zip(&report.unnormalized).enumerate() {
        bound.push(vec![n.to_string(), num(*v), num(*u)]);
    }
    let panel = psi_panel(grid, cfg.norm.window, config.panel, config.seed)?;
    let mut pairings = Table::new("pairings", &["psi", "center", "scale", "value", "reference", "rel_err"]);
    let mut worst = 0.0f64;
    for (i, m) in panel.iter().enumerate() {
        let value = result.distribution.pair(&m.psi)?;
        let reference = built.target.pair(&m.psi)?;
        let scale = TestFunction::from_samples(m.psi.clone(), m.scale)?.cr_norm(cfg.norm.r);
        let err = relative_error(value, reference, scale);
        worst = worst.max(err);
        pairings.push(vec![i.to_string(), num(m.center), num(m.scale), num(value), num(reference), num(err)]);
    }
    let failures = usize::from(config.tolerance.is_some_and(|t| !(worst <= t)));
    let results = json!({
        "slope": report.slope,
        "lq_norm": report.lq_norm,
        "max_rel_err": worst,
        "series_slope_prime": d.slope_prime,
        "series_slope_second": d.slope_second,
    });
    Ok(Report { tables: vec![series, bound, pairings], results, failures })
}

fn young(config: &ExperimentConfig) -> CliResult<Report> {
    let grid = config.grid()?;
    let ycfg = config.young_config();
    ycfg.validate()?;
    let y = &config.young;
    let phi_hat = config.phi_hat(grid, ycfg.reconstruction.norm.r)?;
    let count = (y.beta.ceil() as usize).max(1);
    let f = function_derivatives(&y.f, grid, count.max(2))?;
    let w = function_derivatives(&y.g, grid, 1)?.remove(0);
    let g = if y.g_derivative { Distribution::derivative_of(w.clone()) } else { Distribution::from_density(w.clone()) };
    let result = young_product(&g, &f[..count], &phi_hat, &ycfg)?;
    let v = v_quantities(&g, &f[..count], &phi_hat, &ycfg)?;
    let panel = psi_panel(grid, ycfg.reconstruction.norm.window, config.panel, config.seed)?;
    let mut pairings = Table::new("pairings", &["psi", "center", "scale", "value", "oracle", "rel_err"]);
    let mut worst = 0.0f64;
    for (i, m) in panel.iter().enumerate() {
        let value = result.distribution.pair(&m.psi)?;
        let oracle = if y.g_derivative {
            ibp_oracle(&w, &f[0], &f[1], &m.psi)
        } else {
            function_pairing(&w, &m.psi.multiply_by(|x| f[0].eval(x)))
        };
        let err = relative_error(value, oracle, 0.0);
        worst = worst.max(err);
        pairings.push(vec![i.to_string(), num(m.center), num(m.scale), num(value), num(oracle), num(err)]);
    }
    let mut vt = Table::new("v_quantities", &["name", "value"]);
    for (name, val) in [("v1", v.v1), ("v2", v.v2), ("v3", v.v3), ("v4", v.v4)] {
        vt.push(vec![name.to_string(), num(val)]);
    }
    let report = result.bound.clone().unwrap_or_default();
    let mut bound = Table::new("bound", &["n", "value"]);
    for (n, val) in report.per_level.iter().enumerate() {
        bound.push(vec![n.to_string(), num(*val)]);
    }
    let failures = usize::from(config.tolerance.is_some_and(|t| !(worst <= t)));
    let results = json!({
        "v1": v.v1, "v2": v.v2, "v3": v.v3, "v4": v.v4,
        "max_rel_err": worst,
        "bound_slope": report.slope,
        "bound_lq_norm": report.lq_norm,
    });
    Ok(Report { tables: vec![pairings, vt, bound], results, failures })
}

fn besov(config: &ExperimentConfig) -> CliResult<Report> {
    let grid = config.grid()?;
    let b = &config.besov;
    let norm = config.norm();
    let realized = realize(&b.signal, grid, 1)?;
    let xi = match (&realized, b.derivative) {
        (Realized::Function { derivatives }, true) => Distribution::derivative_of(derivatives[0].clone()),
        (_, true) => return Err(Error::ParameterViolation("derivative of a pairing-only signal".into()).into()),
        _ => realized.distribution(),
    };
    let report = besov_localmeans_norm(&xi, b.alpha, norm, &grid)?;
    let mut lm = Table::new("local_means", &["n", "per_level", "unnormalized"]);
    for (n, (v, u)) in report.per_level.iter().zip(&report.unnormalized).enumerate() {
        lm.push(vec![n.to_string(), num(*v), num(*u)]);
    }
    let (lo, hi) = report.per_level.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let spread = if hi > 0.0 { (hi - lo) / hi } else { 0.0 };
    let taylor = match b.taylor_alpha {
        Some(a) => {
            let d = function_derivatives(&b.signal, grid, a.ceil() as usize)?;
            Some(besov_taylor_norm(&d, a, norm.p, norm.q, b.h0, norm.window, norm.points_per_annulus)?)
        }
        None => None,
    };
    let failures = usize::from(config.tolerance.is_some_and(|t| !(spread <= t)));
    let results = json!({
        "value": report.value,
        "slope": report.slope,
        "unit_scale": report.unit_scale,
        "ratio_spread": spread,
        "taylor_norm": taylor,
    });
    Ok(Report { tables: vec![lm], results, failures })
}
