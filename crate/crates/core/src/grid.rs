//! Uniform grids on `[-L, L]`, sampled functions, quadrature, discrete
//! convolution and the mixed norms used throughout the crate.
//!
//! Grid points are addressed by a signed index `i` with `x = i * spacing`, so
//! the origin is always a grid point and recentering at a grid point is an
//! index shift. A [`SampledFunction`] stores only the samples over its
//! declared support; everything outside is zero.

use std::fmt;
use std::sync::Arc;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    half_length: u32,
    level: u32,
}

impl Grid {
    /// Grid on `[-half_length, half_length]` with spacing `2^-level`.
    pub fn new(half_length: u32, level: u32) -> Result<Self> {
        if half_length == 0 || level == 0 || level > 30 {
            return Err(Error::ParameterViolation(format!(
                "grid needs L > 0 and 1 <= J <= 30, got L = {half_length}, J = {level}"
            )));
        }
        Ok(Self { half_length, level })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length as f64
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn spacing(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    /// Largest admissible signed index, `L * 2^J`.
    pub fn max_index(&self) -> i64 {
        (self.half_length as i64) << self.level
    }

    pub fn len(&self) -> usize {
        (2 * self.max_index() + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, index: i64) -> f64 {
        index as f64 * self.spacing()
    }

    /// Nearest grid index to `x` (not clamped).
    pub fn nearest_index(&self, x: f64) -> i64 {
        (x / self.spacing()).round() as i64
    }

    /// Index of `x` when `x` is a grid point up to round-off.
    pub fn exact_index(&self, x: f64) -> Option<i64> {
        let t = x / self.spacing();
        let i = t.round();
        ((t - i).abs() < 1e-7).then_some(i as i64)
    }

    pub fn contains_index(&self, index: i64) -> bool {
        index.abs() <= self.max_index()
    }

    /// Snap `x` to the grid.
    pub fn snap(&self, x: f64) -> f64 {
        self.point(self.nearest_index(x))
    }

    pub fn domain(&self) -> Window {
        Window::new(-self.half_length(), self.half_length())
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn centered(half_width: f64) -> Self {
        Self::new(-half_width, half_width)
    }

    /// The enlargement `K + B(0, radius)`.
    pub fn enlarge(&self, radius: f64) -> Self {
        Self::new(self.lo - radius, self.hi + radius)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, other: &Window) -> bool {
        other.lo >= self.lo - 1e-12 && other.hi <= self.hi + 1e-12
    }
}

/// An exponent `p` in `[1, inf]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IntegrabilityParam {
    Finite(f64),
    Inf,
}

impl IntegrabilityParam {
    pub fn finite(p: f64) -> Result<Self> {
        if p.is_finite() && p >= 1.0 {
            Ok(Self::Finite(p))
        } else if p == f64::INFINITY {
            Ok(Self::Inf)
        } else {
            Err(Error::ParameterViolation(format!("integrability exponent {p} < 1")))
        }
    }

    pub fn is_inf(&self) -> bool {
        matches!(self, Self::Inf)
    }

    /// `1/p`, zero for infinity.
    pub fn reciprocal(&self) -> f64 {
        match self {
            Self::Finite(p) => 1.0 / p,
            Self::Inf => 0.0,
        }
    }

    /// Exponent with `1/p = reciprocal`.
    pub fn from_reciprocal(reciprocal: f64) -> Result<Self> {
        if reciprocal == 0.0 {
            Ok(Self::Inf)
        } else {
            Self::finite(1.0 / reciprocal)
        }
    }

    /// Combine weighted magnitudes `sum w |v|^p` into a norm.
    pub fn weighted_norm<I: IntoIterator<Item = (f64, f64)>>(&self, pairs: I) -> f64 {
        match *self {
            Self::Inf => pairs.into_iter().fold(0.0, |m, (_, v)| m.max(v.abs())),
            Self::Finite(p) if p == 1.0 => pairs.into_iter().map(|(w, v)| w * v.abs()).sum(),
            Self::Finite(p) => pairs
                .into_iter()
                .map(|(w, v)| w * v.abs().powf(p))
                .sum::<f64>()
                .powf(1.0 / p),
        }
    }
}

impl fmt::Display for IntegrabilityParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(p) => write!(f, "{p}"),
            Self::Inf => write!(f, "inf"),
        }
    }
}

impl Serialize for IntegrabilityParam {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(p) => s.serialize_f64(*p),
            Self::Inf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for IntegrabilityParam {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct ParamVisitor;
        impl Visitor<'_> for ParamVisitor {
            type Value = IntegrabilityParam;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number >= 1 or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Self::Value, E> {
                IntegrabilityParam::finite(v).map_err(E::custom)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                self.visit_f64(v as f64)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                self.visit_f64(v as f64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                match v.to_ascii_lowercase().as_str() {
                    "inf" | "infinity" => Ok(IntegrabilityParam::Inf),
                    other => other
                        .parse::<f64>()
                        .map_err(E::custom)
                        .and_then(|p| self.visit_f64(p)),
                }
            }
        }
        d.deserialize_any(ParamVisitor)
    }
}

/// Samples of a function on a grid over its support window.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    start: i64,
    values: Arc<[f64]>,
}

impl SampledFunction {
    pub fn new(grid: Grid, start: i64, values: Vec<f64>) -> Result<Self> {
        let f = Self { grid, start, values: values.into() };
        f.check_domain()?;
        Ok(f)
    }

    pub fn zero(grid: Grid) -> Self {
        Self { grid, start: 0, values: Arc::from(Vec::new()) }
    }

    /// Sample `f` at every grid point of `window`.
    pub fn from_fn(grid: Grid, window: Window, f: impl Fn(f64) -> f64) -> Result<Self> {
        let dx = grid.spacing();
        let first = (window.lo / dx - 1e-9).ceil() as i64;
        let last = (window.hi / dx + 1e-9).floor() as i64;
        let values = (first..=last.max(first - 1)).map(|i| f(i as f64 * dx)).collect();
        Self::new(grid, first, values)
    }

    /// Sample `f` over the whole domain.
    pub fn on_domain(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, grid.domain(), f).expect("domain window fits")
    }

    fn check_domain(&self) -> Result<()> {
        if self.values.is_empty() {
            return Ok(());
        }
        if !self.grid.contains_index(self.start) || !self.grid.contains_index(self.end_index()) {
            return Err(Error::SupportOverflow(format!(
                "support [{}, {}] leaves [-{}, {}]",
                self.grid.point(self.start),
                self.grid.point(self.end_index()),
                self.grid.half_length(),
                self.grid.half_length()
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn start_index(&self) -> i64 {
        self.start
    }

    /// Last stored index (inclusive).
    pub fn end_index(&self) -> i64 {
        self.start + self.values.len() as i64 - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn support(&self) -> Window {
        if self.values.is_empty() {
            return Window::new(0.0, 0.0);
        }
        Window::new(self.grid.point(self.start), self.grid.point(self.end_index()))
    }

    /// Sample at a grid index, zero off the support.
    pub fn at_index(&self, index: i64) -> f64 {
        let k = index - self.start;
        if k < 0 || k as usize >= self.values.len() {
            0.0
        } else {
            self.values[k as usize]
        }
    }

    /// Abscissae paired with samples.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let dx = self.grid.spacing();
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &v)| ((self.start + k as i64) as f64 * dx, v))
    }

    /// Linear interpolation.
    pub fn eval(&self, x: f64) -> f64 {
        let t = x / self.grid.spacing();
        let i = t.floor();
        let frac = t - i;
        let i = i as i64;
        if frac < 1e-9 {
            return self.at_index(i);
        }
        if frac > 1.0 - 1e-9 {
            return self.at_index(i + 1);
        }
        (1.0 - frac) * self.at_index(i) + frac * self.at_index(i + 1)
    }

    /// Four-point Lagrange interpolation; exact on cubics.
    pub fn eval_cubic(&self, x: f64) -> f64 {
        let t = x / self.grid.spacing();
        let i = t.floor();
        let s = t - i;
        let i = i as i64;
        if s < 1e-12 {
            return self.at_index(i);
        }
        let (a, b, c, d) = (
            self.at_index(i - 1),
            self.at_index(i),
            self.at_index(i + 1),
            self.at_index(i + 2),
        );
        -s * (s - 1.0) * (s - 2.0) / 6.0 * a + (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0 * b
            - (s + 1.0) * s * (s - 2.0) / 2.0 * c
            + (s + 1.0) * s * (s - 1.0) / 6.0 * d
    }

    /// Translate by `shift` grid steps.
    pub fn shifted(&self, shift: i64) -> Result<Self> {
        let f = Self { grid: self.grid, start: self.start + shift, values: self.values.clone() };
        f.check_domain()?;
        Ok(f)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|v| factor * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            start: self.start,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise `a*self + b*other` over the union of supports.
    pub fn axpby(&self, a: f64, other: &SampledFunction, b: f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        if self.is_empty() {
            return Ok(other.scaled(b));
        }
        if other.is_empty() {
            return Ok(self.scaled(a));
        }
        let start = self.start.min(other.start);
        let end = self.end_index().max(other.end_index());
        let values = (start..=end)
            .map(|i| a * self.at_index(i) + b * other.at_index(i))
            .collect();
        Self::new(self.grid, start, values)
    }

    /// Pointwise product with `g` evaluated at grid points of the support.
    pub fn multiply_by(&self, g: impl Fn(f64) -> f64) -> Self {
        let dx = self.grid.spacing();
        Self {
            grid: self.grid,
            start: self.start,
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(k, &v)| v * g((self.start + k as i64) as f64 * dx))
                .collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// First derivative by fourth-order centred differences, support padded
    /// by two points on each side.
    pub fn derivative(&self) -> Self {
        if self.is_empty() {
            return self.clone();
        }
        let inv = 1.0 / (12.0 * self.grid.spacing());
        let start = self.start - 2;
        let end = self.end_index() + 2;
        let values = (start..=end)
            .map(|i| {
                (-self.at_index(i + 2) + 8.0 * self.at_index(i + 1) - 8.0 * self.at_index(i - 1)
                    + self.at_index(i - 2))
                    * inv
            })
            .collect();
        Self { grid: self.grid, start, values }
    }
}

/// Composite trapezoid rule over the stored samples.
pub fn integrate(f: &SampledFunction) -> f64 {
    let v = f.values();
    match v.len() {
        0 | 1 => 0.0,
        n => (v.iter().sum::<f64>() - 0.5 * (v[0] + v[n - 1])) * f.grid().spacing(),
    }
}

/// `(f * g)(x_i) = spacing * sum_j f(x_j) g(x_i - x_j)`.
pub fn convolve(f: &SampledFunction, g: &SampledFunction) -> Result<SampledFunction> {
    f.grid().check_same(g.grid())?;
    if f.is_empty() || g.is_empty() {
        return Ok(SampledFunction::zero(*f.grid()));
    }
    let (a, b) = (f.values(), g.values());
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &fa) in a.iter().enumerate() {
        if fa == 0.0 {
            continue;
        }
        for (o, &gb) in out[i..i + b.len()].iter_mut().zip(b) {
            *o += fa * gb;
        }
    }
    let dx = f.grid().spacing();
    out.iter_mut().for_each(|v| *v *= dx);
    SampledFunction::new(*f.grid(), f.start_index() + g.start_index(), out)
}

/// `L^p` norm of `f` restricted to `window` (trapezoid, or max for `p = inf`).
pub fn lp_norm(f: &SampledFunction, p: IntegrabilityParam, window: Window) -> f64 {
    let grid = f.grid();
    let dx = grid.spacing();
    let first = (window.lo / dx - 1e-9).ceil() as i64;
    let last = (window.hi / dx + 1e-9).floor() as i64;
    if last < first {
        return 0.0;
    }
    let lo = first.max(f.start_index());
    let hi = last.min(f.end_index());
    if hi < lo {
        return 0.0;
    }
    p.weighted_norm((lo..=hi).map(|i| {
        let w = if i == first || i == last { 0.5 * dx } else { dx };
        (w, f.at_index(i))
    }))
}

/// `l^q` norm of a finite sequence.
pub fn lq_seq_norm(a: &[f64], q: IntegrabilityParam) -> f64 {
    q.weighted_norm(a.iter().map(|&v| (1.0, v)))
}

/// Symmetric dyadic annuli `2^-(j+1) R <= |h| <= 2^-j R`, `j = 0..=j_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicAnnulusScheme {
    pub outer_radius: f64,
    pub j_max: u32,
    pub points_per_annulus: usize,
}

impl DyadicAnnulusScheme {
    pub fn new(outer_radius: f64, j_max: u32, points_per_annulus: usize) -> Self {
        Self { outer_radius, j_max, points_per_annulus: points_per_annulus.max(2) }
    }

    /// Deepest scheme whose inner radius stays above `cutoff`.
    pub fn with_cutoff(outer_radius: f64, cutoff: f64, points_per_annulus: usize) -> Self {
        let ratio = (outer_radius / cutoff).log2().floor();
        let j_max = (ratio as i64 - 1).max(0) as u32;
        Self::new(outer_radius, j_max, points_per_annulus)
    }

    /// Cutoff `2 * spacing` on `grid`.
    pub fn for_grid(grid: &Grid, outer_radius: f64, points_per_annulus: usize) -> Self {
        Self::with_cutoff(outer_radius, 2.0 * grid.spacing(), points_per_annulus)
    }

    pub fn inner_radius(&self) -> f64 {
        self.outer_radius * (-(self.j_max as f64 + 1.0)).exp2()
    }

    /// Quadrature nodes, snapped to `grid` when given.
    pub fn nodes(&self, grid: Option<&Grid>) -> HNodes {
        let snap = |h: f64| grid.map_or(h, |g| g.snap(h));
        let m = self.points_per_annulus;
        let mut positive: Vec<f64> = Vec::new();
        let mut annuli: Vec<Vec<f64>> = Vec::new();
        for j in 0..=self.j_max {
            let outer = self.outer_radius * (-(j as f64)).exp2();
            let inner = 0.5 * outer;
            let mut pts: Vec<f64> = (0..m)
                .map(|i| snap(inner + (outer - inner) * i as f64 / (m - 1) as f64))
                .collect();
            pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
            positive.extend_from_slice(&pts);
            annuli.push(pts);
        }
        positive.sort_by(f64::total_cmp);
        positive.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let mut log_weight = vec![0.0; positive.len()];
        for pts in &annuli {
            for (k, &h) in pts.iter().enumerate() {
                let left = if k > 0 { h - pts[k - 1] } else { 0.0 };
                let right = if k + 1 < pts.len() { pts[k + 1] - h } else { 0.0 };
                let idx = positive
                    .binary_search_by(|p| p.total_cmp(&h))
                    .expect("node present");
                log_weight[idx] += 0.5 * (left + right) / h;
            }
        }
        let mut h: Vec<f64> = positive.iter().rev().map(|&v| -v).collect();
        h.push(0.0);
        h.extend_from_slice(&positive);
        let mut w: Vec<f64> = log_weight.iter().rev().copied().collect();
        w.push(0.0);
        w.extend_from_slice(&log_weight);
        HNodes { h, log_weight: w }
    }
}

/// Sorted symmetric `h` samples including `h = 0`, with weights for
/// `dh/|h|` (zero at the origin).
#[derive(Clone, Debug, PartialEq)]
pub struct HNodes {
    pub h: Vec<f64>,
    pub log_weight: Vec<f64>,
}

impl HNodes {
    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// Trapezoid weights for `dh` restricted to `|h| <= radius`.
    pub fn ball_weights(&self, radius: f64) -> Vec<f64> {
        let inside: Vec<bool> = self.h.iter().map(|h| h.abs() <= radius * (1.0 + 1e-12)).collect();
        let mut w = vec![0.0; self.h.len()];
        for k in 0..self.h.len().saturating_sub(1) {
            if inside[k] && inside[k + 1] {
                let half = 0.5 * (self.h[k + 1] - self.h[k]);
                w[k] += half;
                w[k + 1] += half;
            }
        }
        w
    }

    /// `L^q(dh/|h|)` norm of values at the nodes (origin excluded).
    pub fn lq_norm(&self, values: &[f64], q: IntegrabilityParam) -> f64 {
        q.weighted_norm(
            self.h
                .iter()
                .zip(&self.log_weight)
                .zip(values)
                .filter(|((h, _), _)| **h != 0.0)
                .map(|((_, &w), &v)| (w, v)),
        )
    }
}

/// `L^q(B(0,R), dh/|h|)` norm of `phi` sampled on the scheme's nodes.
pub fn lqh_norm(
    phi: impl Fn(f64) -> f64,
    q: IntegrabilityParam,
    scheme: &DyadicAnnulusScheme,
    grid: Option<&Grid>,
) -> f64 {
    let nodes = scheme.nodes(grid);
    let values: Vec<f64> = nodes.h.iter().map(|&h| phi(h)).collect();
    nodes.lq_norm(&values, q)
}

/// Grid points of a window taken every `stride` steps, aligned so that
/// every point is a multiple of `stride * spacing`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    pub grid: Grid,
    pub first: i64,
    pub stride: i64,
    pub count: usize,
}

impl Lattice {
    pub fn over(grid: Grid, window: Window, stride: i64) -> Self {
        let stride = stride.max(1);
        let step = grid.spacing() * stride as f64;
        let first = (window.lo / step - 1e-9).ceil() as i64;
        let last = (window.hi / step + 1e-9).floor() as i64;
        let count = (last - first + 1).max(0) as usize;
        Self { grid, first: first * stride, stride, count }
    }

    /// Lattice with `2^resolution` points per unit of `scale`, capped at
    /// the grid spacing.
    pub fn for_scale(grid: Grid, window: Window, scale: f64, resolution: u32) -> Self {
        let step = scale * (-(resolution as f64)).exp2();
        let raw = (step / grid.spacing()).floor().max(1.0) as i64;
        let stride = 1i64 << (63 - raw.leading_zeros());
        Self::over(grid, window, stride)
    }

    pub fn step(&self) -> f64 {
        self.stride as f64 * self.grid.spacing()
    }

    pub fn index(&self, k: usize) -> i64 {
        self.first + k as i64 * self.stride
    }

    pub fn point(&self, k: usize) -> f64 {
        self.grid.point(self.index(k))
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|k| self.point(k))
    }

    /// Trapezoid weight of the `k`-th point.
    pub fn weight(&self, k: usize) -> f64 {
        if self.count <= 1 {
            return if self.count == 1 { self.step() } else { 0.0 };
        }
        if k == 0 || k + 1 == self.count {
            0.5 * self.step()
        } else {
            self.step()
        }
    }

    /// `L^p` norm of lattice values.
    pub fn norm(&self, values: &[f64], p: IntegrabilityParam) -> f64 {
        p.weighted_norm(values.iter().enumerate().map(|(k, &v)| (self.weight(k), v)))
    }
}
