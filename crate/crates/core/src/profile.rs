//! The convex profile `N(u) = ‖(u, 1)‖` of a planar norm: one-sided and
//! regularized derivatives, the slope limit `k = ‖(1, 0)‖`, the asymptotic
//! offsets `d±` and the constant `c = d₊ + d₋`.
//!
//! Polygonal norms (including ℓ1 and ℓ∞) give piecewise-linear profiles whose
//! kinks and slopes are exact. ℓ_p profiles use closed forms. Black-box gauges
//! are differentiated numerically, with kinks located by tangent
//! intersection and the derivative tabulated on a graded grid.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::norm_model::{NormSpec, Vec2};

/// How a profile was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// Upper envelope of finitely many affine functions; exact.
    PiecewiseLinear,
    /// Closed-form smooth profile (ℓ_p, 1 < p < ∞).
    Smooth,
    /// Finite differences of a black-box gauge.
    Numeric,
}

/// Knobs for numeric profiles and asymptotic limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileOptions {
    /// Convergence tolerance of the doubling ladder, relative to `k + ‖(0,1)‖`.
    pub limit_tol: f64,
    pub max_doublings: usize,
    /// First rung of the ladder, in units of the profile scale.
    pub ladder_start: f64,
    /// A slope jump above `kink_threshold · k` is a kink.
    pub kink_threshold: f64,
    /// Window `[-T, T]` is grown until the tail masses fall below `window_mass_tol · k`.
    pub window_mass_tol: f64,
    /// Cap on `T`, in units of the profile scale.
    pub max_window: f64,
    /// Ratio of the geometric part of the tabulation grid.
    pub grid_ratio: f64,
    /// Spacing of the uniform core of the tabulation grid, in profile units.
    pub core_step: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            limit_tol: 1e-10,
            max_doublings: 40,
            ladder_start: 100.0,
            kink_threshold: 1e-5,
            window_mass_tol: 1e-10,
            max_window: 1e4,
            grid_ratio: 1.02,
            core_step: 1.0 / 64.0,
        }
    }
}

/// A located kink of a numeric profile with the derivative just left and
/// right of it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kink {
    pub t: f64,
    pub left: f64,
    pub right: f64,
    /// Half-width of the excluded window around `t`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Envelope {
    slopes: Vec<f64>,
    intercepts: Vec<f64>,
    breaks: Vec<f64>,
}

impl Envelope {
    /// Upper envelope of the lines `a·u + b`.
    fn from_lines(mut lines: Vec<(f64, f64)>) -> Self {
        lines.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        let mut uniq: Vec<(f64, f64)> = Vec::with_capacity(lines.len());
        for l in lines {
            if let Some(last) = uniq.last_mut() {
                if (last.0 - l.0).abs() <= 1e-15 * (1.0 + l.0.abs()) {
                    last.1 = last.1.max(l.1);
                    continue;
                }
            }
            uniq.push(l);
        }
        let cross = |l1: (f64, f64), l2: (f64, f64)| (l1.1 - l2.1) / (l2.0 - l1.0);
        let mut hull: Vec<(f64, f64)> = Vec::with_capacity(uniq.len());
        for l in uniq {
            while hull.len() >= 2 {
                let n = hull.len();
                if cross(hull[n - 2], l) <= cross(hull[n - 2], hull[n - 1]) {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(l);
        }
        let breaks = hull.windows(2).map(|w| cross(w[0], w[1])).collect();
        Self { slopes: hull.iter().map(|l| l.0).collect(), intercepts: hull.iter().map(|l| l.1).collect(), breaks }
    }

    fn scaled(mut self, f: f64) -> Self {
        self.slopes.iter_mut().for_each(|s| *s *= f);
        self.intercepts.iter_mut().for_each(|s| *s *= f);
        self
    }

    fn eval(&self, u: f64) -> f64 {
        self.slopes.iter().zip(&self.intercepts).map(|(a, b)| a * u + b).fold(f64::NEG_INFINITY, f64::max)
    }

    fn slope_plus(&self, u: f64) -> f64 {
        self.slopes[self.breaks.partition_point(|&b| b <= u)]
    }

    fn slope_minus(&self, u: f64) -> f64 {
        self.slopes[self.breaks.partition_point(|&b| b < u)]
    }

    pub(crate) fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub(crate) fn slopes(&self) -> &[f64] {
        &self.slopes
    }
}

/// Tabulated derivative of a numeric profile on `[-T, T]`.
#[derive(Debug, Clone)]
pub(crate) struct NumericTable {
    pub window: f64,
    pub kinks: Vec<Kink>,
    /// One monotone cubic per smooth stretch between kinks.
    pub segments: Vec<MonotoneCubic>,
}

impl NumericTable {
    fn value(&self, u: f64) -> Option<(f64, f64)> {
        if u < -self.window || u > self.window {
            return None;
        }
        for k in &self.kinks {
            if (u - k.t).abs() <= k.gap {
                return Some(match u.total_cmp(&k.t) {
                    std::cmp::Ordering::Less => (k.left, k.left),
                    std::cmp::Ordering::Greater => (k.right, k.right),
                    std::cmp::Ordering::Equal => (k.left, k.right),
                });
            }
        }
        let seg = self.segments.iter().find(|s| u >= s.lo() && u <= s.hi())?;
        let y = seg.eval(u);
        Some((y, y))
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Shape {
    Envelope(Envelope),
    Power { p: f64, scale: f64 },
    Numeric(Arc<NumericTable>),
}

/// The profile `N(u) = ‖(u, 1)‖` together with its derivative data.
#[derive(Debug, Clone)]
pub struct ConvexProfile {
    norm: NormSpec,
    shape: Shape,
    breakpoints: Vec<f64>,
    k: f64,
    c: f64,
    d_plus: f64,
    d_minus: f64,
    vertical: f64,
    sigma: f64,
}

impl ConvexProfile {
    pub fn norm(&self) -> &NormSpec {
        &self.norm
    }

    pub fn kind(&self) -> ProfileKind {
        match self.shape {
            Shape::Envelope(_) => ProfileKind::PiecewiseLinear,
            Shape::Power { .. } => ProfileKind::Smooth,
            Shape::Numeric(_) => ProfileKind::Numeric,
        }
    }

    pub(crate) fn shape(&self) -> &Shape {
        &self.shape
    }

    /// `N(u) = ‖(u, 1)‖`.
    pub fn n(&self, u: f64) -> f64 {
        match &self.shape {
            Shape::Envelope(e) => e.eval(u),
            _ => self.norm.norm2(Vec2::new(u, 1.0)),
        }
    }

    pub fn n_prime_plus(&self, u: f64) -> f64 {
        match &self.shape {
            Shape::Envelope(e) => e.slope_plus(u),
            Shape::Power { p, scale } => scale * power_slope(*p, u),
            Shape::Numeric(_) => self.diff_plus(u, self.step(u)),
        }
    }

    pub fn n_prime_minus(&self, u: f64) -> f64 {
        match &self.shape {
            Shape::Envelope(e) => e.slope_minus(u),
            Shape::Power { p, scale } => scale * power_slope(*p, u),
            Shape::Numeric(_) => self.diff_minus(u, self.step(u)),
        }
    }

    /// Regularized derivative `(N′₊ + N′₋)/2`.
    pub fn n_prime(&self, u: f64) -> f64 {
        0.5 * (self.n_prime_plus(u) + self.n_prime_minus(u))
    }

    /// One-sided derivatives `(N′₋, N′₊)` from the fastest available source:
    /// closed forms, or the tabulated derivative of a numeric profile.
    pub(crate) fn one_sided_fast(&self, u: f64) -> (f64, f64) {
        if let Shape::Numeric(t) = &self.shape {
            if let Some(v) = t.value(u) {
                return v;
            }
        }
        (self.n_prime_minus(u), self.n_prime_plus(u))
    }

    /// Kink locations (sorted).
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `k = ‖(1, 0)‖`.
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn d_plus(&self) -> f64 {
        self.d_plus
    }

    pub fn d_minus(&self) -> f64 {
        self.d_minus
    }

    /// `‖(0, 1)‖ = N(0)`.
    pub fn vertical(&self) -> f64 {
        self.vertical
    }

    /// Natural length scale `‖(0,1)‖ / ‖(1,0)‖` of the profile.
    pub fn scale(&self) -> f64 {
        self.sigma
    }

    /// Beyond this abscissa a piecewise-linear profile is affine.
    pub fn far_field(&self) -> f64 {
        10.0 * (self.breakpoints.iter().fold(0.0f64, |m, b| m.max(b.abs())) + self.sigma)
    }

    fn step(&self, u: f64) -> f64 {
        numeric_step(self.sigma, u)
    }

    fn diff_plus(&self, u: f64, h: f64) -> f64 {
        let n0 = self.n(u);
        let d1 = (self.n(u + h) - n0) / h;
        let d2 = (self.n(u + 0.5 * h) - n0) / (0.5 * h);
        2.0 * d2 - d1
    }

    fn diff_minus(&self, u: f64, h: f64) -> f64 {
        let n0 = self.n(u);
        let d1 = (n0 - self.n(u - h)) / h;
        let d2 = (n0 - self.n(u - 0.5 * h)) / (0.5 * h);
        2.0 * d2 - d1
    }

    fn diff_central(&self, u: f64, h: f64) -> f64 {
        let d1 = (self.n(u + h) - self.n(u - h)) / (2.0 * h);
        let d2 = (self.n(u + 0.5 * h) - self.n(u - 0.5 * h)) / h;
        (4.0 * d2 - d1) / 3.0
    }

    /// CSV rows `u,N,N_minus,N_plus` on the given grid.
    pub fn to_csv(&self, grid: &[f64]) -> String {
        let mut out = String::from("u,N,N_minus,N_plus\n");
        for &u in grid {
            let _ = writeln!(out, "{},{},{},{}", u, self.n(u), self.n_prime_minus(u), self.n_prime_plus(u));
        }
        out
    }
}

/// Finite-difference step for numeric profiles.
fn numeric_step(sigma: f64, u: f64) -> f64 {
    sigma * (1e-6f64).max(1e-8 * (1.0 + u.abs() / sigma))
}

/// Derivative of `(|u|^p + 1)^{1/p}`.
pub(crate) fn power_slope(p: f64, u: f64) -> f64 {
    let a = u.abs();
    let mag = if a <= 1.0 {
        a.powf(p - 1.0) * (a.powf(p) + 1.0).powf(1.0 / p - 1.0)
    } else {
        (1.0 + a.powf(-p)).powf(1.0 / p - 1.0)
    };
    mag.copysign(u) * if u == 0.0 { 0.0 } else { 1.0 }
}

/// `k = ‖(1, 0)‖`.
pub fn slope_limit_k(spec: &NormSpec) -> Result<f64> {
    spec.slope_limit()
}

fn envelope_for(spec: &NormSpec) -> Option<Envelope> {
    match spec {
        NormSpec::L1 => Some(Envelope::from_lines(vec![(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)])),
        NormSpec::Lp(p) if p.is_infinite() => {
            Some(Envelope::from_lines(vec![(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)]))
        }
        NormSpec::Polygonal(poly) => Some(Envelope::from_lines(poly.facets().iter().map(|n| (n.a, n.b)).collect())),
        NormSpec::Scaled(f, inner) => envelope_for(inner).map(|e| e.scaled(*f)),
        _ => None,
    }
}

fn power_for(spec: &NormSpec) -> Option<(f64, f64)> {
    match spec {
        NormSpec::Lp(p) if p.is_finite() => Some((*p, 1.0)),
        NormSpec::Scaled(f, inner) => power_for(inner).map(|(p, s)| (p, s * f)),
        _ => None,
    }
}

/// Builds the profile of a planar norm.
pub fn profile_from_norm(spec: &NormSpec, opts: &ProfileOptions) -> Result<ConvexProfile> {
    if !spec.is_planar() {
        return Err(Error::InvalidNorm(format!("{} is not a norm on the plane", spec.label())));
    }
    let k = spec.eval2(Vec2::new(1.0, 0.0))?;
    let vertical = spec.eval2(Vec2::new(0.0, 1.0))?;
    if !(k > 0.0 && vertical > 0.0) {
        return Err(Error::InvalidNorm("norm vanishes on a basis vector".into()));
    }
    let sigma = vertical / k;
    if let Some(env) = envelope_for(spec) {
        let d_plus = *env.intercepts.last().unwrap();
        let d_minus = env.intercepts[0];
        let breakpoints = env.breaks.clone();
        let mut prof = ConvexProfile {
            norm: spec.clone(),
            shape: Shape::Envelope(env),
            breakpoints,
            k,
            c: 0.0,
            d_plus,
            d_minus,
            vertical,
            sigma,
        };
        prof.c = constant_c(&prof, opts)?;
        return Ok(prof);
    }
    if let Some((p, scale)) = power_for(spec) {
        return Ok(ConvexProfile {
            norm: spec.clone(),
            shape: Shape::Power { p, scale },
            breakpoints: Vec::new(),
            k,
            c: 0.0,
            d_plus: 0.0,
            d_minus: 0.0,
            vertical,
            sigma,
        });
    }
    numeric_profile(spec, k, vertical, sigma, opts)
}

fn numeric_profile(spec: &NormSpec, k: f64, vertical: f64, sigma: f64, opts: &ProfileOptions) -> Result<ConvexProfile> {
    let mut prof = ConvexProfile {
        norm: spec.clone(),
        shape: Shape::Numeric(Arc::new(NumericTable { window: 0.0, kinks: vec![], segments: vec![] })),
        breakpoints: vec![],
        k,
        c: 0.0,
        d_plus: 0.0,
        d_minus: 0.0,
        vertical,
        sigma,
    };
    convexity_probe(&prof, 200, 1e-9)?;
    let bound_ok = (0..=40).all(|i| {
        let u = sigma * (i as f64 - 20.0) * 2.5;
        (prof.n(u) - u.abs() * k).abs() <= vertical * (1.0 + 1e-9) + 1e-12
    });
    if !bound_ok {
        return Err(Error::NonConvex("profile leaves the band |N(u) − k|u|| ≤ ‖(0,1)‖".into()));
    }
    let (d_plus, d_minus) = asymptotic_offsets(|u| prof.n(u), k, sigma, vertical, opts)?;
    prof.d_plus = d_plus;
    prof.d_minus = d_minus;

    // window
    let mut window = 16.0 * sigma;
    while window < opts.max_window * sigma {
        let hr = 1e-3 * (sigma + window);
        let right = k - prof.diff_central(window, hr);
        let left = k + prof.diff_central(-window, hr);
        if right <= opts.window_mass_tol * k && left <= opts.window_mass_tol * k {
            break;
        }
        window *= 2.0;
    }
    window = window.min(opts.max_window * sigma);

    // graded grid
    let mut grid: Vec<f64> = Vec::new();
    let core = sigma;
    let n_core = (1.0 / opts.core_step).ceil() as i64;
    for i in -n_core..=n_core {
        grid.push(core * i as f64 / n_core as f64);
    }
    let mut t = core;
    while t < window {
        t *= opts.grid_ratio;
        let tt = t.min(window);
        grid.push(tt);
        grid.push(-tt);
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let thr = opts.kink_threshold * k;
    let central_at = |u: f64| prof.diff_central(u, 1e-3 * (sigma + u.abs()).min(2.0 * sigma) * 1e-2);
    let node_slopes: Vec<f64> = grid.iter().map(|&u| central_at(u)).collect();
    let mut kinks: Vec<f64> = Vec::new();
    for i in 0..grid.len() - 1 {
        if node_slopes[i + 1] - node_slopes[i] > thr {
            // widened so that a kink sitting on a node is interior
            let lo = grid[i.saturating_sub(1)];
            let hi = grid[(i + 2).min(grid.len() - 1)];
            find_kinks(&prof, lo, hi, thr, 0, &mut kinks);
        }
    }
    kinks.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::new();
    for kk in kinks {
        if merged.last().is_none_or(|m| kk - m > 16.0 * prof.step(kk)) {
            merged.push(kk);
        }
    }

    let kink_records: Vec<Kink> = merged
        .iter()
        .map(|&kt| {
            let h = prof.step(kt);
            let gap = 4.0 * h;
            Kink { t: kt, left: prof.diff_minus(kt - gap, h), right: prof.diff_plus(kt + gap, h), gap }
        })
        .collect();

    // smooth stretches
    let mut bounds: Vec<(f64, f64)> = Vec::new();
    let mut lo = -window;
    let mut lo_val = None::<f64>;
    let mut stretches: Vec<(f64, Option<f64>, f64, Option<f64>)> = Vec::new();
    for kr in &kink_records {
        stretches.push((lo, lo_val, kr.t - kr.gap, Some(kr.left)));
        lo = kr.t + kr.gap;
        lo_val = Some(kr.right);
    }
    stretches.push((lo, lo_val, window, None));
    let mut segments = Vec::with_capacity(stretches.len());
    for (a, a_val, b, b_val) in stretches {
        if !(b > a) {
            continue;
        }
        bounds.push((a, b));
        let dist_to_kink = |u: f64| merged.iter().map(|kt| (u - kt).abs()).fold(f64::INFINITY, f64::min);
        let mut xs = vec![a];
        let mut ys = vec![a_val.unwrap_or_else(|| prof.diff_central(a, node_h(sigma, a, dist_to_kink(a))))];
        for &g in grid.iter().filter(|&&g| g > a && g < b) {
            let h = prof.step(g);
            if g - a < 8.0 * h || b - g < 8.0 * h {
                continue;
            }
            let dk = dist_to_kink(g);
            let y = if dk < 16.0 * h {
                if g > a + 0.5 * (b - a) {
                    prof.diff_minus(g, h)
                } else {
                    prof.diff_plus(g, h)
                }
            } else {
                prof.diff_central(g, node_h(sigma, g, dk))
            };
            xs.push(g);
            ys.push(y);
        }
        xs.push(b);
        ys.push(b_val.unwrap_or_else(|| prof.diff_central(b, node_h(sigma, b, dist_to_kink(b)))));
        // monotone repair within noise; a real decrease means the gauge is not convex
        for i in 1..ys.len() {
            if ys[i] < ys[i - 1] {
                if ys[i - 1] - ys[i] > 1e-8 * k {
                    return Err(Error::NonConvex(format!(
                        "derivative decreases by {:e} near u = {}",
                        ys[i - 1] - ys[i],
                        xs[i]
                    )));
                }
                ys[i] = ys[i - 1];
            }
        }
        for y in ys.iter_mut() {
            *y = y.clamp(-k, k);
        }
        // node slopes (the density) by differencing the derivative itself
        let slope_of = |u: f64| {
            let dk = dist_to_kink(u);
            let h = prof.step(u);
            if dk < 16.0 * h {
                if u > 0.5 * (a + b) {
                    prof.diff_minus(u, h)
                } else {
                    prof.diff_plus(u, h)
                }
            } else {
                prof.diff_central(u, node_h(sigma, u, dk))
            }
        };
        let ds: Vec<f64> = (0..xs.len())
            .map(|j| {
                let left = if j > 0 { xs[j] - xs[j - 1] } else { f64::INFINITY };
                let right = if j + 1 < xs.len() { xs[j + 1] - xs[j] } else { f64::INFINITY };
                let delta = 0.01 * left.min(right);
                let x = xs[j];
                if j > 0 && j + 1 < xs.len() {
                    (slope_of(x + delta) - slope_of(x - delta)) / (2.0 * delta)
                } else {
                    let dir = if j == 0 { 1.0 } else { -1.0 };
                    let (y1, y2) = (slope_of(x + dir * delta), slope_of(x + 2.0 * dir * delta));
                    dir * (-3.0 * ys[j] + 4.0 * y1 - y2) / (2.0 * delta)
                }
            })
            .collect();
        segments.push(MonotoneCubic::limited(xs, ys, ds));
    }
    prof.breakpoints = merged;
    prof.shape = Shape::Numeric(Arc::new(NumericTable { window, kinks: kink_records, segments }));
    prof.c = constant_c(&prof, opts)?;
    let tol = 10.0 * opts.limit_tol * (k + vertical);
    if (prof.c - (prof.d_plus + prof.d_minus)).abs() > tol.max(1e-8 * (k + vertical)) {
        return Err(Error::NonConvergence { steps: opts.max_doublings, last_change: prof.c - (prof.d_plus + prof.d_minus) });
    }
    Ok(prof)
}

/// Step for central differences at tabulation nodes: wide where the
/// profile is smooth, shrinking near kinks.
fn node_h(sigma: f64, u: f64, dist_to_kink: f64) -> f64 {
    let wide = 1e-3 * (sigma + u.abs());
    wide.min(0.25 * dist_to_kink).max(numeric_step(sigma, u))
}

/// Finds kinks inside `[a, b]` by iterated tangent intersection.
fn find_kinks(prof: &ConvexProfile, a: f64, b: f64, thr: f64, depth: usize, out: &mut Vec<f64>) {
    if depth > 8 || !(b > a) {
        return;
    }
    let Some(t) = locate_kink(prof, a, b, thr) else { return };
    out.push(t);
    let h = prof.step(t);
    let guard = 16.0 * h;
    for (lo, hi) in [(a, t - guard), (t + guard, b)] {
        if hi - lo > 64.0 * h {
            let hl = numeric_step(prof.sigma, lo);
            let hh = numeric_step(prof.sigma, hi);
            if prof.diff_plus(hi - 8.0 * hh, hh) - prof.diff_minus(lo + 8.0 * hl, hl) > thr {
                find_kinks(prof, lo, hi, thr, depth + 1, out);
            }
        }
    }
}

fn locate_kink(prof: &ConvexProfile, a0: f64, b0: f64, thr: f64) -> Option<f64> {
    let (mut a, mut b) = (a0, b0);
    let slope = |u: f64| {
        let h = prof.step(u);
        prof.diff_central(u, h)
    };
    let mut sa = slope(a);
    let mut sb = slope(b);
    let mut t = 0.5 * (a + b);
    for _ in 0..80 {
        if sb - sa <= thr {
            return None;
        }
        let cand = (prof.n(b) - prof.n(a) + sa * a - sb * b) / (sa - sb);
        if !(cand > a && cand < b) {
            return None;
        }
        t = cand;
        let w = (b - a) / 8.0;
        if w < 32.0 * prof.step(t) {
            break;
        }
        a = (t - w).max(a);
        b = (t + w).min(b);
        sa = slope(a);
        sb = slope(b);
    }
    let h = prof.step(t);
    let jump = prof.diff_plus(t + 4.0 * h, h) - prof.diff_minus(t - 4.0 * h, h);
    (jump > thr).then_some(t)
}

/// Chord test on random triples in `[-50σ, 50σ]`.
fn convexity_probe(prof: &ConvexProfile, triples: usize, tol: f64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let r = 50.0 * prof.sigma;
    for _ in 0..triples {
        let mut u = [rng.random_range(-r..r), rng.random_range(-r..r), rng.random_range(-r..r)];
        u.sort_by(f64::total_cmp);
        if !(u[2] > u[0]) {
            continue;
        }
        let lam = (u[1] - u[0]) / (u[2] - u[0]);
        let chord = (1.0 - lam) * prof.n(u[0]) + lam * prof.n(u[2]);
        let mid = prof.n(u[1]);
        if mid > chord + tol * (1.0 + chord.abs()) {
            return Err(Error::NonConvex(format!("chord test fails at u = {:?}", u)));
        }
    }
    Ok(())
}

/// Limit of `g(u)` as `u → ∞` along the ladder `u0, 2u0, 4u0, …`, with Aitken
/// extrapolation.
fn ladder_limit(g: impl Fn(f64) -> f64, u0: f64, tol: f64, max_doublings: usize, k_for_error: f64) -> Result<f64> {
    let mut vals = vec![g(u0)];
    let mut u = u0;
    let mut prev_est: Option<f64> = None;
    let mut growing = 0usize;
    let mut last_change = f64::INFINITY;
    for _ in 0..max_doublings {
        u *= 2.0;
        vals.push(g(u));
        let n = vals.len();
        let d1 = vals[n - 1] - vals[n - 2];
        last_change = d1;
        if !d1.is_finite() {
            return Err(Error::Divergence { k: k_for_error });
        }
        if d1.abs() <= tol {
            return Ok(vals[n - 1]);
        }
        let mut est = vals[n - 1];
        if n >= 3 {
            let d0 = vals[n - 2] - vals[n - 3];
            if d1.abs() >= d0.abs() * (1.0 - 1e-3) && d1.abs() > tol {
                growing += 1;
                if growing >= 4 {
                    return Err(Error::Divergence { k: k_for_error });
                }
            } else {
                growing = 0;
            }
            let den = d1 - d0;
            let ratio = d1 / d0;
            if den != 0.0 && ratio > 0.0 && ratio < 0.95 {
                est = vals[n - 1] - d1 * d1 / den;
            }
        }
        if let Some(p) = prev_est {
            if (est - p).abs() <= tol {
                return Ok(est);
            }
        }
        prev_est = Some(est);
    }
    Err(Error::NonConvergence { steps: max_doublings, last_change })
}

/// `d₊ = lim_{u→∞} [f(u) − k·u]` and `d₋ = lim_{u→−∞} [f(u) + k·u]` by the
/// doubling ladder started at `ladder_start · scale`.
pub fn asymptotic_offsets(f: impl Fn(f64) -> f64, k: f64, scale: f64, magnitude: f64, opts: &ProfileOptions) -> Result<(f64, f64)> {
    let tol = opts.limit_tol * (k.abs() + magnitude.abs()).max(f64::MIN_POSITIVE);
    let u0 = opts.ladder_start * scale;
    let d_plus = ladder_limit(|u| f(u) - k * u, u0, tol, opts.max_doublings, k)?;
    let d_minus = ladder_limit(|u| f(-u) - k * u, u0, tol, opts.max_doublings, k)?;
    Ok((d_plus, d_minus))
}

/// `c = lim_{u→∞} (‖(u,1)‖ − 2‖(u,0)‖ + ‖(u,−1)‖)`.
pub fn constant_c(profile: &ConvexProfile, opts: &ProfileOptions) -> Result<f64> {
    let norm = &profile.norm;
    let expr = |u: f64| norm.norm2(Vec2::new(u, 1.0)) - 2.0 * norm.norm2(Vec2::new(u, 0.0)) + norm.norm2(Vec2::new(u, -1.0));
    let c = match profile.kind() {
        ProfileKind::PiecewiseLinear => expr(profile.far_field()),
        ProfileKind::Smooth => 0.0,
        ProfileKind::Numeric => {
            let tol = opts.limit_tol * (profile.k + profile.vertical);
            ladder_limit(expr, opts.ladder_start * profile.sigma, tol, opts.max_doublings, profile.k)?
        }
    };
    Ok(c.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm_model::{Gauge, Polygon};

    fn opts() -> ProfileOptions {
        ProfileOptions::default()
    }

    fn hexagon() -> NormSpec {
        NormSpec::Polygonal(Polygon::regular(6).unwrap())
    }

    #[test]
    fn linf_profile() {
        let p = profile_from_norm(&NormSpec::linf(), &opts()).unwrap();
        assert_eq!(p.kind(), ProfileKind::PiecewiseLinear);
        assert_eq!(p.breakpoints(), &[-1.0, 1.0]);
        assert_eq!(p.n(0.3), 1.0);
        assert_eq!(p.n(-2.0), 2.0);
        assert_eq!(p.n_prime(0.0), 0.0);
        assert_eq!(p.n_prime(3.0), 1.0);
        assert_eq!(p.n_prime(-3.0), -1.0);
        assert_eq!(p.n_prime(-1.0), -0.5);
        assert_eq!(p.n_prime(1.0), 0.5);
        assert_eq!(p.k(), 1.0);
        assert_eq!(p.c(), 0.0);
        assert_eq!((p.d_plus(), p.d_minus()), (0.0, 0.0));
    }

    #[test]
    fn l1_profile() {
        let p = profile_from_norm(&NormSpec::L1, &opts()).unwrap();
        assert_eq!(p.breakpoints(), &[0.0]);
        assert_eq!(p.n_prime_minus(0.0), -1.0);
        assert_eq!(p.n_prime_plus(0.0), 1.0);
        assert_eq!(p.n_prime(0.0), 0.0);
        assert_eq!(p.k(), 1.0);
        assert_eq!(p.c(), 2.0);
        assert_eq!((p.d_plus(), p.d_minus()), (1.0, 1.0));
    }

    #[test]
    fn l2_profile() {
        let p = profile_from_norm(&NormSpec::Lp(2.0), &opts()).unwrap();
        assert_eq!(p.kind(), ProfileKind::Smooth);
        assert!(p.breakpoints().is_empty());
        for u in [-7.0, -0.3, 0.0, 0.5, 40.0] {
            assert!((p.n_prime(u) - u / (u * u + 1.0f64).sqrt()).abs() < 1e-15);
            assert!((p.n(u) - (u * u + 1.0f64).sqrt()).abs() < 1e-14);
        }
        assert_eq!(p.k(), 1.0);
        assert_eq!(p.c(), 0.0);
    }

    #[test]
    fn slope_limits() {
        for q in [1.5, 2.0, 3.0, f64::INFINITY] {
            assert_eq!(slope_limit_k(&NormSpec::Lp(q)).unwrap(), 1.0);
        }
        let diamond = NormSpec::polygon(&[Vec2::new(2.0, 0.0), Vec2::new(0.0, 1.0)]).unwrap();
        assert!((slope_limit_k(&diamond).unwrap() - 0.5).abs() < 1e-15);
        let scaled = NormSpec::Lp(3.0).scaled(2.5).unwrap();
        assert!((slope_limit_k(&scaled).unwrap() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn constants_for_standard_norms() {
        let square = NormSpec::polygon(&[Vec2::new(1.0, 1.0), Vec2::new(-1.0, 1.0)]).unwrap();
        assert_eq!(profile_from_norm(&square, &opts()).unwrap().c(), 0.0);
        // direct evaluation at u = 2
        let e = square.eval2(Vec2::new(2.0, 1.0)).unwrap() - 2.0 * square.eval2(Vec2::new(2.0, 0.0)).unwrap()
            + square.eval2(Vec2::new(2.0, -1.0)).unwrap();
        assert_eq!(e, 0.0);
        for q in [1.5, 2.0, 3.0] {
            assert_eq!(profile_from_norm(&NormSpec::Lp(q), &opts()).unwrap().c(), 0.0);
        }
    }

    #[test]
    fn asymptotic_offset_examples() {
        let o = opts();
        let (a, b) = asymptotic_offsets(|u: f64| u.abs() + 1.0, 1.0, 1.0, 1.0, &o).unwrap();
        assert!((a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
        let (a, b) = asymptotic_offsets(|u: f64| (u * u + 1.0).sqrt(), 1.0, 1.0, 1.0, &o).unwrap();
        assert!(a.abs() < 1e-9 && b.abs() < 1e-9, "{a} {b}");
        let (a, b) = asymptotic_offsets(|u: f64| u.abs().max(1.0), 1.0, 1.0, 1.0, &o).unwrap();
        assert_eq!((a, b), (0.0, 0.0));
        assert!(matches!(
            asymptotic_offsets(|u: f64| u.abs() + 1.0, 0.5, 1.0, 1.0, &o),
            Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn hexagon_profile_is_exact() {
        let p = profile_from_norm(&hexagon(), &opts()).unwrap();
        assert_eq!(p.kind(), ProfileKind::PiecewiseLinear);
        assert!((p.c() - (p.d_plus() + p.d_minus())).abs() < 1e-12);
        assert!(p.c() >= 0.0);
        let spec = hexagon();
        for i in -50..=50 {
            let u = i as f64 * 0.37;
            assert!((p.n(u) - spec.eval2(Vec2::new(u, 1.0)).unwrap()).abs() < 1e-13);
        }
    }

    #[test]
    fn invariants_on_exact_profiles() {
        let specs = [NormSpec::L1, NormSpec::linf(), NormSpec::Lp(1.5), NormSpec::Lp(3.0), hexagon()];
        for spec in specs {
            let p = profile_from_norm(&spec, &opts()).unwrap();
            convexity_probe(&p, 200, 1e-9).unwrap();
            let mut prev = f64::NEG_INFINITY;
            for i in 0..1000 {
                let u = -50.0 + 0.1 * i as f64;
                assert!((p.n(u) - u.abs() * p.k()).abs() <= p.vertical() + 1e-12);
                let d = p.n_prime(u);
                assert!(d >= prev - 1e-12);
                assert!((d - 0.5 * (p.n_prime_plus(u) + p.n_prime_minus(u))).abs() == 0.0);
                prev = d;
            }
            let far = 1e6;
            assert!((p.n_prime_plus(far) - p.k()).abs() < 1e-6);
            assert!((p.n_prime_minus(-far) + p.k()).abs() < 1e-6);
            assert!((p.c() - (p.d_plus() + p.d_minus())).abs() < 1e-9);
        }
    }

    #[test]
    fn numeric_profile_of_smooth_gauge() {
        let g = NormSpec::gauge(Gauge::new("l2", 1.0, |x: Vec2| x.u.hypot(x.v)));
        let p = profile_from_norm(&g, &opts()).unwrap();
        assert_eq!(p.kind(), ProfileKind::Numeric);
        assert!(p.breakpoints().is_empty(), "{:?}", p.breakpoints());
        assert!(p.c().abs() < 1e-8);
        assert!(p.d_plus().abs() < 1e-8);
        for u in [-3.0, 0.0, 0.7, 12.0] {
            assert!((p.n_prime(u) - u / (u * u + 1.0f64).sqrt()).abs() < 1e-7);
        }
    }

    #[test]
    fn numeric_profile_finds_polygon_kinks() {
        let hex = Polygon::regular(6).unwrap();
        let g = NormSpec::gauge(Gauge::new("hexagon", 2.0, move |x: Vec2| hex.eval(x)));
        let p = profile_from_norm(&g, &opts()).unwrap();
        let exact = profile_from_norm(&hexagon(), &opts()).unwrap();
        assert_eq!(p.breakpoints().len(), exact.breakpoints().len(), "{:?} vs {:?}", p.breakpoints(), exact.breakpoints());
        for (a, b) in p.breakpoints().iter().zip(exact.breakpoints()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        assert!((p.c() - exact.c()).abs() < 1e-8);
    }

    #[test]
    fn non_convex_gauge_is_rejected() {
        // a star-shaped but non-convex "norm"
        let g = NormSpec::gauge(Gauge::new("star", 1.0, |x: Vec2| {
            let r = x.u.hypot(x.v);
            let th = x.v.atan2(x.u);
            r * (1.0 + 0.5 * (4.0 * th).cos())
        }));
        assert!(matches!(profile_from_norm(&g, &opts()), Err(Error::NonConvex(_))));
    }

    #[test]
    fn planar_only() {
        assert!(profile_from_norm(&NormSpec::Johnson(3), &opts()).is_err());
    }

    #[test]
    fn csv_export() {
        let p = profile_from_norm(&NormSpec::L1, &opts()).unwrap();
        let csv = p.to_csv(&[-1.0, 0.0, 1.0]);
        assert_eq!(csv, "u,N,N_minus,N_plus\n-1,2,-1,-1\n0,1,-1,1\n1,2,1,1\n");
    }
}
