//! Test functions: the standard bump, scaled and recentred copies, moments,
//! moment tweaking, the derived kernels `phi_check` and `rho`, and finite
//! dictionaries standing in for unit balls of `C^r`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{convolve, lp_norm, Grid, IntegrabilityParam, SampledFunction, Window};

/// Number of cached moments (`k = 0..=MOMENT_CACHE`).
pub const MOMENT_CACHE: usize = 8;
/// Highest derivative order with a cached sup norm.
pub const MAX_SMOOTHNESS: usize = 4;

/// Analytic profile of a compactly supported function.
pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A compactly supported smooth function, kept both as an analytic profile
/// and as unit-scale samples centred at the origin.
#[derive(Clone)]
pub struct TestFunction {
    profile: Profile,
    radius: f64,
    samples: SampledFunction,
    moments: Vec<f64>,
    cr_norms: Vec<f64>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("radius", &self.radius)
            .field("moments", &self.moments)
            .field("cr_norms", &self.cr_norms)
            .finish()
    }
}

impl TestFunction {
    /// Wrap `profile`, which must vanish outside `[-radius, radius]`.
    pub fn from_profile(grid: Grid, radius: f64, profile: Profile) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::ParameterViolation(format!("support radius {radius} must be positive")));
        }
        let p = profile.clone();
        let samples = SampledFunction::from_fn(grid, Window::centered(radius), move |x| {
            if x.abs() < radius {
                p(x)
            } else {
                0.0
            }
        })?;
        let moments = sample_moments(&samples, MOMENT_CACHE);
        let cr_norms = fd_sup_norms(&*profile, radius);
        Ok(Self { profile, radius, samples, moments, cr_norms })
    }

    /// Smooth function known only through samples centred at the origin;
    /// the profile is their cubic interpolant.
    pub fn from_samples(samples: SampledFunction, radius: f64) -> Result<Self> {
        let s = samples.clone();
        let profile: Profile = Arc::new(move |x| s.eval_cubic(x));
        let moments = sample_moments(&samples, MOMENT_CACHE);
        let cr_norms = fd_sup_norms(&*profile, radius);
        Ok(Self { profile, radius, samples, moments, cr_norms })
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x.abs() < self.radius {
            (self.profile)(x)
        } else {
            0.0
        }
    }

    pub fn profile(&self) -> Profile {
        self.profile.clone()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn grid(&self) -> &Grid {
        self.samples.grid()
    }

    /// Unit-scale samples centred at the origin.
    pub fn samples(&self) -> &SampledFunction {
        &self.samples
    }

    pub fn moment(&self, k: usize) -> f64 {
        self.moments[k]
    }

    pub fn mass(&self) -> f64 {
        self.moments[0]
    }

    /// `max_{k <= r} sup |D^k phi|`.
    pub fn cr_norm(&self, r: usize) -> f64 {
        self.cr_norms[..=r.min(MAX_SMOOTHNESS)].iter().fold(0.0, |m, &v| m.max(v))
    }

    pub fn l1_norm(&self) -> f64 {
        lp_norm(&self.samples, IntegrabilityParam::Finite(1.0), Window::centered(self.radius))
    }

    /// The function `x -> factor * phi(x / width)` (not mass preserving).
    pub fn dilate(&self, width: f64, factor: f64) -> Result<Self> {
        let p = self.profile.clone();
        Self::from_profile(
            *self.grid(),
            self.radius * width,
            Arc::new(move |x| factor * p(x / width)),
        )
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &TestFunction, b: f64) -> Result<Self> {
        let (p, q) = (self.profile.clone(), other.profile.clone());
        let (rp, rq) = (self.radius, other.radius);
        Self::from_profile(
            *self.grid(),
            rp.max(rq),
            Arc::new(move |x| {
                let u = if x.abs() < rp { p(x) } else { 0.0 };
                let v = if x.abs() < rq { q(x) } else { 0.0 };
                a * u + b * v
            }),
        )
    }
}

fn sample_moments(samples: &SampledFunction, k_max: usize) -> Vec<f64> {
    let mut m = vec![0.0; k_max + 1];
    let dx = samples.grid().spacing();
    for (x, v) in samples.points() {
        let mut power = v * dx;
        for mk in m.iter_mut() {
            *mk += power;
            power *= x;
        }
    }
    m
}

/// Sup norms of derivatives `0..=MAX_SMOOTHNESS` by fourth-order centred
/// differences with step `radius / 256`.
fn fd_sup_norms(profile: &(dyn Fn(f64) -> f64 + Send + Sync), radius: f64) -> Vec<f64> {
    let h = radius / 256.0;
    let n = 256 + 4;
    let f = |k: i64| {
        let x = k as f64 * h;
        if x.abs() < radius {
            profile(x)
        } else {
            0.0
        }
    };
    let vals: Vec<f64> = (-n..=n).map(f).collect();
    let at = |k: i64| vals[(k + n) as usize];
    let mut sup = vec![0.0f64; MAX_SMOOTHNESS + 1];
    for k in (-n + 3)..=(n - 3) {
        let (m3, m2, m1, c, p1, p2, p3) =
            (at(k - 3), at(k - 2), at(k - 1), at(k), at(k + 1), at(k + 2), at(k + 3));
        let d = [
            c,
            (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h),
            (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h),
            (m3 - 8.0 * m2 + 13.0 * m1 - 13.0 * p1 + 8.0 * p2 - p3) / (8.0 * h.powi(3)),
            (-m3 + 12.0 * m2 - 39.0 * m1 + 56.0 * c - 39.0 * p1 + 12.0 * p2 - p3) / (6.0 * h.powi(4)),
        ];
        for (s, v) in sup.iter_mut().zip(d) {
            *s = s.max(v.abs());
        }
    }
    sup
}

/// `exp(-1/(1-x^2))` on `(-1, 1)`.
pub fn bump_profile(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

/// The standard bump with support radius 1.
pub fn standard_bump(grid: Grid) -> TestFunction {
    TestFunction::from_profile(grid, 1.0, Arc::new(bump_profile)).expect("unit bump fits any grid")
}

/// Smallest admissible scale on `grid`.
pub fn min_scale(grid: &Grid) -> f64 {
    8.0 * grid.spacing()
}

/// Samples of `phi_x^lambda(z) = phi((z - x)/lambda) / lambda`.
pub fn scale_recenter(phi: &TestFunction, x: f64, lambda: f64) -> Result<SampledFunction> {
    let grid = *phi.grid();
    if !(lambda >= min_scale(&grid)) {
        return Err(Error::ResolutionTooFine { scale: lambda, min: min_scale(&grid) });
    }
    let radius = lambda * phi.radius;
    let support = Window::new(x - radius, x + radius);
    if !grid.domain().contains(&support) {
        return Err(Error::SupportOverflow(format!(
            "B({x}, {radius}) leaves [-{L}, {L}]",
            L = grid.half_length()
        )));
    }
    let p = phi.profile.clone();
    let r = phi.radius;
    let inv = 1.0 / lambda;
    SampledFunction::from_fn(grid, support, move |z| {
        let u = (z - x) * inv;
        if u.abs() < r {
            inv * p(u)
        } else {
            0.0
        }
    })
}

/// Moments `int x^k phi` for `k = 0..=k_max`.
pub fn moments(phi: &TestFunction, k_max: usize) -> Result<Vec<f64>> {
    if k_max > MOMENT_CACHE {
        return Err(Error::ParameterViolation(format!(
            "moment order {k_max} exceeds cache size {MOMENT_CACHE}"
        )));
    }
    Ok(phi.moments[..=k_max].to_vec())
}

/// Dense solve with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::DegenerateSystem("zero matrix".into()));
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() <= 1e-14 * scale {
            return Err(Error::DegenerateSystem(format!("singular pivot in column {col}")));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}

/// Scales `2^-(i+2) / (1 + R)` for `i < r`.
pub fn default_scales(phi: &TestFunction, r: usize) -> Vec<f64> {
    (0..r.max(1))
        .map(|i| (-(i as f64 + 2.0)).exp2() / (1.0 + phi.radius))
        .collect()
}

/// Output of [`tweak`].
#[derive(Clone, Debug)]
pub struct Tweaked {
    pub function: TestFunction,
    /// Coefficients `c_i` of the scalings actually used.
    pub coefficients: Vec<f64>,
    pub scales: Vec<f64>,
    /// Moment orders kept in the linear system.
    pub active_rows: Vec<usize>,
}

/// Combination of rescalings of `phi` with unit mass and vanishing moments
/// of orders `1..r`.
pub fn tweak(phi: &TestFunction, r: usize, scales: &[f64]) -> Result<Tweaked> {
    if r == 0 || r > MOMENT_CACHE {
        return Err(Error::ParameterViolation(format!("tweak order {r} outside 1..={MOMENT_CACHE}")));
    }
    let limit = 0.5 / phi.radius;
    if let Some(&bad) = scales.iter().find(|&&l| !(l > 0.0 && l < limit)) {
        return Err(Error::ScaleTooLarge { scale: bad, limit });
    }
    let m0 = phi.mass();
    if m0.abs() < 1e-14 {
        return Err(Error::DegenerateSystem("test function has zero mass".into()));
    }
    let active_rows: Vec<usize> = (0..r)
        .filter(|&k| k == 0 || phi.moment(k).abs() > 1e-10 * m0.abs() * phi.radius.powi(k as i32))
        .collect();
    if active_rows.len() > scales.len() {
        return Err(Error::DegenerateSystem(format!(
            "{} active moment rows but only {} scales",
            active_rows.len(),
            scales.len()
        )));
    }
    let used = &scales[..active_rows.len()];
    let matrix = active_rows
        .iter()
        .map(|&k| used.iter().map(|l| phi.moment(k) / m0 * l.powi(k as i32)).collect())
        .collect();
    let rhs = active_rows.iter().map(|&k| if k == 0 { 1.0 } else { 0.0 }).collect();
    let coefficients = solve_dense(matrix, rhs)?;
    let p = phi.profile.clone();
    let r_phi = phi.radius;
    let terms: Vec<(f64, f64)> = coefficients.iter().zip(used).map(|(&c, &l)| (c / m0, l)).collect();
    let radius = used.iter().fold(0.0f64, |m, &l| m.max(l)) * r_phi;
    let function = TestFunction::from_profile(
        *phi.grid(),
        radius,
        Arc::new(move |x| {
            terms
                .iter()
                .map(|&(c, l)| {
                    let u = x / l;
                    if u.abs() < r_phi {
                        c * p(u) / l
                    } else {
                        0.0
                    }
                })
                .sum()
        }),
    )?;
    Ok(Tweaked { function, coefficients, scales: used.to_vec(), active_rows })
}

/// `phi_check = phi_hat^{1/2} - phi_hat^{2}`.
pub fn make_phicheck(phi_hat: &TestFunction) -> Result<TestFunction> {
    let p = phi_hat.profile.clone();
    let r = phi_hat.radius;
    let f = move |u: f64| if u.abs() < r { p(u) } else { 0.0 };
    TestFunction::from_profile(
        *phi_hat.grid(),
        2.0 * r,
        Arc::new(move |x| 2.0 * f(2.0 * x) - 0.5 * f(0.5 * x)),
    )
}

/// `rho = phi_hat^{2} * phi_hat`.
pub fn mollifier(phi_hat: &TestFunction) -> Result<TestFunction> {
    let wide = scale_recenter(phi_hat, 0.0, 2.0)?;
    let rho = convolve(&wide, phi_hat.samples())?;
    TestFunction::from_samples(rho, 3.0 * phi_hat.radius)
}

/// `phi_check^lambda * eta` on the grid.
pub fn annihilation_residual(
    phi_check: &TestFunction,
    eta: &TestFunction,
    lambda: f64,
) -> Result<SampledFunction> {
    convolve(&scale_recenter(phi_check, 0.0, lambda)?, eta.samples())
}

/// `(sup |phi_check^lambda * eta|, |eta|_{C^r} |phi_check|_{L^1} lambda^r)`.
pub fn annihilation_bound_check(
    phi_check: &TestFunction,
    eta: &TestFunction,
    lambda: f64,
    r: usize,
) -> Result<(f64, f64)> {
    let lhs = annihilation_residual(phi_check, eta, lambda)?.sup_norm();
    let rhs = eta.cr_norm(r) * phi_check.l1_norm() * lambda.powi(r as i32);
    Ok((lhs, rhs))
}

/// Parameters of a dictionary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DictionarySpec {
    pub r: usize,
    /// Highest vanishing moment, `-1` for none.
    pub s: i32,
    pub size: usize,
    pub seed: u64,
}

impl Default for DictionarySpec {
    fn default() -> Self {
        Self { r: 2, s: -1, size: 16, seed: 7 }
    }
}

/// Finite family in the unit ball of `C^r(B(0,1))`.
#[derive(Clone, Debug)]
pub struct Dictionary {
    pub r: usize,
    pub s: i32,
    pub members: Vec<TestFunction>,
}

impl Dictionary {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Deterministic dictionary of translated, modulated and odd bumps with
/// unit `C^r` norm and, for `s >= 0`, vanishing moments `0..=s`.
pub fn build_dictionary(grid: Grid, spec: DictionarySpec) -> Result<Dictionary> {
    let DictionarySpec { r, s, size, seed } = spec;
    if size == 0 || r > MAX_SMOOTHNESS || s >= MOMENT_CACHE as i32 {
        return Err(Error::ParameterViolation(format!(
            "dictionary needs size >= 1, r <= {MAX_SMOOTHNESS}, s < {MOMENT_CACHE}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Correction basis x^j b(2x), supported in B(0, 1/2).
    let basis: Vec<TestFunction> = (0..=s.max(-1))
        .map(|j| {
            TestFunction::from_profile(
                grid,
                0.5,
                Arc::new(move |x| x.powi(j) * bump_profile(2.0 * x)),
            )
        })
        .collect::<Result<_>>()?;
    let mut members = Vec::with_capacity(size);
    for i in 0..size {
        let c: f64 = rng.gen_range(-0.5..0.5);
        let w: f64 = rng.gen_range(0.3..(1.0 - c.abs()));
        let omega: f64 = rng.gen_range(1.0..8.0);
        let theta: f64 = rng.gen_range(0.0..2.0 * PI);
        let profile: Profile = match i % 3 {
            0 => Arc::new(move |x| bump_profile((x - c) / w)),
            1 => Arc::new(move |x| (omega * (x - c) + theta).cos() * bump_profile((x - c) / w)),
            _ => Arc::new(move |x| (x - c) / w * bump_profile((x - c) / w)),
        };
        let mut psi = TestFunction::from_profile(grid, 1.0, profile)?;
        if !basis.is_empty() {
            let n = basis.len();
            let gram = (0..n).map(|k| (0..n).map(|j| basis[j].moment(k)).collect()).collect();
            let rhs = (0..n).map(|k| psi.moment(k)).collect();
            let coeffs = solve_dense(gram, rhs)?;
            for (b, a) in basis.iter().zip(coeffs) {
                psi = psi.combine(1.0, b, -a)?;
            }
        }
        let norm = psi.cr_norm(r);
        psi = psi.dilate(1.0, 1.0 / norm)?;
        members.push(psi);
    }
    Ok(Dictionary { r, s, members })
}
