//! The decomposition `‖(u,v)‖ = c|v|/2 + ½∫|u − tv| dN′(t)`, the regularized
//! cdf `F = ½ + N′/(2k)`, its left-continuous inverse, and the embedding
//! `(u, v) ↦ uξ + vη` into `L1(0, 1)`.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{measure_from_profile, RepresentingMeasure};
use crate::norm_model::{NormSpec, Vec2};
use crate::profile::{profile_from_norm, ConvexProfile, ProfileOptions, Shape};
use crate::quadrature::{adaptive, push_algebraic, stieltjes_integrate, QuadratureOptions, Segment};

/// `c|v|/2 + ½∫|u − tv| dN′(t)`.
pub fn eval_decomposition(m: &RepresentingMeasure, u: f64, v: f64, opts: &QuadratureOptions) -> Result<f64> {
    if !(u.is_finite() && v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if u == 0.0 && v == 0.0 {
        return Ok(0.0);
    }
    let kinks: Vec<f64> = if v != 0.0 { vec![u / v] } else { vec![] };
    let r = stieltjes_integrate(m, move |t: f64| (u - t * v).abs(), &kinks, opts)?;
    Ok(0.5 * m.c() * v.abs() + 0.5 * r.value)
}

/// A jump of `F` with its one-sided limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jump {
    pub t: f64,
    pub left: f64,
    pub right: f64,
}

/// `F(u) = ½ + N′(u)/(2k)` with `N′` the regularized derivative.
#[derive(Debug, Clone)]
pub struct RegularizedCdf {
    profile: ConvexProfile,
    jumps: Vec<Jump>,
    k: f64,
}

impl RegularizedCdf {
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn eval(&self, u: f64) -> f64 {
        let (lo, hi) = self.one_sided(u);
        0.5 * (lo + hi)
    }

    /// `(F(u−), F(u+))`.
    pub fn one_sided(&self, u: f64) -> (f64, f64) {
        if u == f64::INFINITY {
            return (1.0, 1.0);
        }
        if u == f64::NEG_INFINITY {
            return (0.0, 0.0);
        }
        let (dm, dp) = self.profile.one_sided_fast(u);
        let f = |d: f64| (0.5 + d / (2.0 * self.k)).clamp(0.0, 1.0);
        (f(dm), f(dp))
    }

    /// Whether `F` is a step function.
    pub fn is_atomic(&self) -> bool {
        matches!(self.profile.shape(), Shape::Envelope(_))
    }
}

pub fn cdf_from_profile(profile: &ConvexProfile) -> RegularizedCdf {
    let k = profile.k();
    let mut cdf = RegularizedCdf { profile: profile.clone(), jumps: Vec::new(), k };
    cdf.jumps = profile
        .breakpoints()
        .iter()
        .map(|&t| {
            let (l, r) = cdf.one_sided(t);
            Jump { t, left: l, right: r }
        })
        .collect();
    cdf
}

/// `F⁻¹(s) = inf{u : F(u) ≥ s}` for `0 < s < 1`.
pub fn quantile(cdf: &RegularizedCdf, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidArgument(format!("quantile level {s} outside (0, 1)")));
    }
    Ok(quantile_unchecked(cdf, s))
}

fn quantile_unchecked(cdf: &RegularizedCdf, s: f64) -> f64 {
    match cdf.profile.shape() {
        Shape::Envelope(_) => {
            // first jump whose right limit reaches s
            let i = cdf.jumps.partition_point(|j| j.right < s);
            cdf.jumps.get(i).map_or(f64::INFINITY, |j| j.t)
        }
        Shape::Power { p, .. } => power_quantile(*p, s),
        Shape::Numeric(_) => {
            // {F ≥ s} and {F(·+) ≥ s} have the same infimum
            let ok = |u: f64| cdf.one_sided(u).1 >= s;
            let sigma = cdf.profile.scale();
            let (mut lo, mut hi) = (-sigma, sigma);
            while ok(lo) && lo > -1e300 {
                lo *= 2.0;
            }
            while !ok(hi) && hi < 1e300 {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if ok(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        }
    }
}

/// Inverse of `s = ½ + ½·sgn(u)|u|^{p−1}(|u|^p + 1)^{1/p−1}`.
fn power_quantile(p: f64, s: f64) -> f64 {
    if s == 0.5 {
        return 0.0;
    }
    // e = 1 − |2s − 1|, kept exact near the ends
    let e = 2.0 * s.min(1.0 - s);
    let q = p / (p - 1.0);
    let log_y = q * (-e).ln_1p();
    let y = log_y.exp();
    let one_minus_y = -log_y.exp_m1();
    (y / one_minus_y).powf(1.0 / p).copysign(s - 0.5)
}

/// The pair `(ξ, η)` with `(u, v) ↦ uξ + vη` an isometry into `L1(0, 1)`.
///
/// `ξ = a` and `η = −a·F⁻¹(2s)` on `(0, ½)`, `ξ = 0` and `η = c` on `[½, 1)`.
/// The isometric pair has `a = 2k`; [`EmbeddingPair::literal`] keeps `a = 1`.
#[derive(Debug, Clone)]
pub struct EmbeddingPair {
    cdf: RegularizedCdf,
    amplitude: f64,
    k: f64,
    c: f64,
}

impl EmbeddingPair {
    /// The variant with `ξ = 1` on `(0, ½)`; it is an isometry only when `k = ½`.
    pub fn literal(profile: &ConvexProfile) -> Self {
        Self { amplitude: 1.0, ..embedding_pair(profile) }
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn xi(&self, s: f64) -> f64 {
        if s > 0.0 && s < 0.5 {
            self.amplitude
        } else {
            0.0
        }
    }

    pub fn eta(&self, s: f64) -> f64 {
        if s > 0.0 && s < 0.5 {
            -self.amplitude * quantile_unchecked(&self.cdf, 2.0 * s)
        } else if (0.5..1.0).contains(&s) {
            self.c
        } else {
            0.0
        }
    }

    /// CSV rows `s,xi,eta` on a grid that contains every step edge.
    pub fn to_csv(&self, n: usize) -> String {
        let mut grid: Vec<f64> = (1..n).map(|i| i as f64 / n as f64).collect();
        for j in self.cdf.jumps() {
            for r in [j.left, j.right] {
                let s = 0.5 * r;
                if s > 0.0 && s < 1.0 {
                    grid.push(s);
                    grid.push((s + 1e-9).min(1.0 - 1e-12));
                }
            }
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let mut out = String::from("s,xi,eta\n");
        for s in grid {
            let _ = writeln!(out, "{},{},{}", s, self.xi(s), self.eta(s));
        }
        out
    }
}

pub fn embedding_pair(profile: &ConvexProfile) -> EmbeddingPair {
    EmbeddingPair { cdf: cdf_from_profile(profile), amplitude: 2.0 * profile.k(), k: profile.k(), c: profile.c() }
}

/// `∫_0^1 |u ξ(s) + v η(s)| ds`.
pub fn eval_embedding(pair: &EmbeddingPair, u: f64, v: f64, opts: &QuadratureOptions) -> Result<f64> {
    if !(u.is_finite() && v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if u == 0.0 && v == 0.0 {
        return Ok(0.0);
    }
    let upper = 0.5 * (v * pair.c).abs();
    // on (0, ½): a|u − v F⁻¹(2s)|; with r = 2s this is (a/2)∫_0^1 |u − v F⁻¹(r)| dr
    let half = 0.5 * pair.amplitude;
    let cdf = &pair.cdf;
    let lower = match cdf.profile.shape() {
        Shape::Envelope(_) => {
            let mut acc = 0.0;
            let mut comp = 0.0;
            for j in cdf.jumps() {
                let y = (j.right - j.left) * (u - v * j.t).abs() - comp;
                let t = acc + y;
                comp = (t - acc) - y;
                acc = t;
            }
            acc
        }
        shape => {
            let alpha = match shape {
                Shape::Power { p, .. } => -1.0 / p,
                _ => -0.75,
            };
            let f = move |r: f64| (u - v * quantile_unchecked(cdf, r)).abs();
            // u − v F⁻¹(r) changes sign once, at r* = F(u/v)
            let split = if v != 0.0 { Some(cdf.eval(u / v)) } else { None };
            let mut segs: Vec<Segment<'_>> = Vec::new();
            match split.filter(|r| *r > 1e-15 && *r < 1.0 - 1e-15) {
                Some(r) => {
                    push_algebraic(&mut segs, f, 0.0, r, alpha, 0.0);
                    push_algebraic(&mut segs, f, r, 1.0, 0.0, alpha);
                }
                None => push_algebraic(&mut segs, f, 0.0, 1.0, alpha, alpha),
            }
            let r = adaptive(&segs, opts);
            r.value
        }
    };
    Ok(upper + half * lower)
}

/// Worst residuals of the decomposition and the embedding over a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    pub points: usize,
    pub max_residual_decomposition: f64,
    pub max_residual_embedding: f64,
    pub worst_decomposition_point: [f64; 2],
    pub worst_embedding_point: [f64; 2],
}

pub fn residual_scan(spec: &NormSpec, grid: &[Vec2], opts: &QuadratureOptions) -> Result<ResidualReport> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    let profile = profile_from_norm(spec, &ProfileOptions::default())?;
    let m = measure_from_profile(&profile)?;
    let pair = embedding_pair(&profile);
    let rows: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|x| -> Result<(f64, f64)> {
            let n = spec.eval2(*x)?;
            let d = eval_decomposition(&m, x.u, x.v, opts)?;
            let e = eval_embedding(&pair, x.u, x.v, opts)?;
            Ok(((n - d).abs(), (n - e).abs()))
        })
        .collect::<Result<_>>()?;
    let mut rep = ResidualReport {
        points: grid.len(),
        max_residual_decomposition: 0.0,
        max_residual_embedding: 0.0,
        worst_decomposition_point: [grid[0].u, grid[0].v],
        worst_embedding_point: [grid[0].u, grid[0].v],
    };
    for (x, (d, e)) in grid.iter().zip(rows) {
        if d > rep.max_residual_decomposition {
            rep.max_residual_decomposition = d;
            rep.worst_decomposition_point = [x.u, x.v];
        }
        if e > rep.max_residual_embedding {
            rep.max_residual_embedding = e;
            rep.worst_embedding_point = [x.u, x.v];
        }
    }
    Ok(rep)
}

/// `n × n` grid on `[−r, r]²`.
pub fn square_grid(n: usize, r: f64) -> Vec<Vec2> {
    let step = if n > 1 { 2.0 * r / (n - 1) as f64 } else { 0.0 };
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let u = if n > 1 { -r + step * i as f64 } else { 0.0 };
            let v = if n > 1 { -r + step * j as f64 } else { 0.0 };
            out.push(Vec2::new(u, v));
        }
    }
    out
}

/// `n` points on the Euclidean unit circle.
pub fn circle_grid(n: usize) -> Vec<Vec2> {
    (0..n)
        .map(|i| {
            let th = std::f64::consts::TAU * i as f64 / n as f64;
            Vec2::new(th.cos(), th.sin())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm_model::{Gauge, Polygon};

    fn build(spec: &NormSpec) -> (ConvexProfile, RepresentingMeasure) {
        let p = profile_from_norm(spec, &ProfileOptions::default()).unwrap();
        let m = measure_from_profile(&p).unwrap();
        (p, m)
    }

    fn q() -> QuadratureOptions {
        QuadratureOptions::default()
    }

    #[test]
    fn decomposition_examples() {
        let (_, m) = build(&NormSpec::linf());
        assert_eq!(eval_decomposition(&m, 1.0, 1.0, &q()).unwrap(), 1.0);
        let (_, m) = build(&NormSpec::L1);
        assert_eq!(eval_decomposition(&m, 3.0, -2.0, &q()).unwrap(), 5.0);
        let (_, m) = build(&NormSpec::Lp(2.0));
        assert!((eval_decomposition(&m, 1.0, 0.0, &q()).unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(eval_decomposition(&m, 0.0, 0.0, &q()).unwrap(), 0.0);
        assert!(eval_decomposition(&m, f64::NAN, 0.0, &q()).is_err());
    }

    #[test]
    fn cdf_examples() {
        let (p, _) = build(&NormSpec::linf());
        let f = cdf_from_profile(&p);
        let want = [(-2.0, 0.0), (-1.0, 0.25), (0.0, 0.5), (1.0, 0.75), (2.0, 1.0)];
        for (u, v) in want {
            assert_eq!(f.eval(u), v);
        }
        for j in f.jumps() {
            assert_eq!(2.0 * f.eval(j.t), j.left + j.right);
        }
        let (p, _) = build(&NormSpec::L1);
        let f = cdf_from_profile(&p);
        assert_eq!((f.eval(-0.1), f.eval(0.0), f.eval(0.1)), (0.0, 0.5, 1.0));
        let (p, _) = build(&NormSpec::Lp(2.0));
        let f = cdf_from_profile(&p);
        for u in [-3.0, 0.0, 0.4] {
            assert!((f.eval(u) - (0.5 + u / (2.0 * (u * u + 1.0f64).sqrt()))).abs() < 1e-15);
        }
    }

    #[test]
    fn quantile_examples() {
        let (p, _) = build(&NormSpec::linf());
        let f = cdf_from_profile(&p);
        assert_eq!(quantile(&f, 0.3).unwrap(), -1.0);
        assert_eq!(quantile(&f, 0.6).unwrap(), 1.0);
        assert_eq!(quantile(&f, 0.5).unwrap(), -1.0);
        let (p, _) = build(&NormSpec::L1);
        assert_eq!(quantile(&cdf_from_profile(&p), 0.5).unwrap(), 0.0);
        let (p, _) = build(&NormSpec::Lp(2.0));
        let f = cdf_from_profile(&p);
        assert_eq!(quantile(&f, 0.5).unwrap(), 0.0);
        for s in [1e-9, 0.1, 0.37, 0.9, 1.0 - 1e-9] {
            let u = quantile(&f, s).unwrap();
            assert!((f.eval(u) - s).abs() < 1e-12 * (1.0 + u.abs()), "s={s} u={u}");
        }
        assert!(quantile(&f, 0.0).is_err());
        assert!(quantile(&f, 1.0).is_err());
    }

    #[test]
    fn quantile_is_monotone_and_left_continuous() {
        let hex = NormSpec::Polygonal(Polygon::regular(6).unwrap());
        for spec in [NormSpec::linf(), hex, NormSpec::Lp(1.5)] {
            let (p, _) = build(&spec);
            let f = cdf_from_profile(&p);
            let mut prev = f64::NEG_INFINITY;
            for i in 1..1000 {
                let s = i as f64 / 1000.0;
                let x = quantile(&f, s).unwrap();
                assert!(x >= prev);
                prev = x;
            }
            for j in f.jumps() {
                // just above the left limit the quantile is the jump point
                let s = j.left + 1e-12;
                if s < 1.0 && s < j.right {
                    assert_eq!(quantile(&f, s).unwrap(), j.t);
                }
                if j.right + 1e-12 < 1.0 {
                    assert!(quantile(&f, j.right + 1e-12).unwrap() > j.t);
                }
            }
        }
    }

    #[test]
    fn embedding_examples() {
        let (p, _) = build(&NormSpec::L1);
        let pair = embedding_pair(&p);
        assert_eq!((pair.xi(0.2), pair.xi(0.7)), (2.0, 0.0));
        assert_eq!((pair.eta(0.2), pair.eta(0.7)), (0.0, 2.0));
        assert_eq!(eval_embedding(&pair, 3.0, -2.0, &q()).unwrap(), 5.0);
        let (p, _) = build(&NormSpec::linf());
        let pair = embedding_pair(&p);
        assert_eq!((pair.eta(0.1), pair.eta(0.25), pair.eta(0.3), pair.eta(0.6)), (2.0, 2.0, -2.0, 0.0));
        assert_eq!(eval_embedding(&pair, 1.0, 1.0, &q()).unwrap(), 1.0);
        for (u, v) in [(0.3, -1.7), (2.0, 0.5), (-1.0, -1.0)] {
            let e = eval_embedding(&pair, u, v, &q()).unwrap();
            assert_eq!(e, 0.5 * (u + v).abs() + 0.5 * (u - v).abs());
        }
        assert_eq!(eval_embedding(&pair, 0.0, 0.0, &q()).unwrap(), 0.0);
        let (p, _) = build(&NormSpec::Lp(2.0));
        let pair = embedding_pair(&p);
        assert!((eval_embedding(&pair, 1.0, 0.0, &q()).unwrap() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn literal_pair_halves_the_l1_horizontal_part() {
        let (p, _) = build(&NormSpec::L1);
        let lit = EmbeddingPair::literal(&p);
        for (u, v) in [(3.0, -2.0), (1.0, 0.0), (0.0, 1.0), (-0.5, 4.0)] {
            let got = eval_embedding(&lit, u, v, &q()).unwrap();
            let want = 0.5 * f64::abs(u) + f64::abs(v);
            assert_eq!(got, want);
        }
    }

    #[test]
    fn residual_scans() {
        let circle = circle_grid(100);
        let r = residual_scan(&NormSpec::linf(), &circle, &q()).unwrap();
        assert!(r.max_residual_decomposition <= 1e-12 && r.max_residual_embedding <= 1e-12, "{r:?}");
        let r = residual_scan(&NormSpec::Lp(1.5), &circle, &q()).unwrap();
        assert!(r.max_residual_decomposition <= 1e-7 && r.max_residual_embedding <= 1e-7, "{r:?}");
        let oct = NormSpec::polygon(&[
            Vec2::new(1.0, 0.1),
            Vec2::new(0.8, 0.7),
            Vec2::new(0.2, 1.1),
            Vec2::new(-0.6, 0.9),
        ])
        .unwrap();
        let r = residual_scan(&oct, &circle, &q()).unwrap();
        assert!(r.max_residual_decomposition <= 1e-9 && r.max_residual_embedding <= 1e-9, "{r:?}");
        assert!(residual_scan(&oct, &[], &q()).is_err());
    }

    #[test]
    fn homogeneity_and_continuity() {
        let hex = NormSpec::Polygonal(Polygon::regular(6).unwrap());
        for spec in [hex, NormSpec::Lp(3.0)] {
            let (_, m) = build(&spec);
            for (u, v) in [(0.7, -0.2), (-1.3, 2.2)] {
                let base = eval_decomposition(&m, u, v, &q()).unwrap();
                for lam in [-3.0, 0.5, 7.25] {
                    let scaled = eval_decomposition(&m, lam * u, lam * v, &q()).unwrap();
                    assert!((scaled - f64::abs(lam) * base).abs() <= 1e-9 * (1.0 + scaled));
                }
                let at0 = eval_decomposition(&m, u, 0.0, &q()).unwrap();
                let vertical = spec.eval2(Vec2::new(0.0, 1.0)).unwrap();
                let mut prev = f64::INFINITY;
                for j in 4..30 {
                    let h = 2f64.powi(-j);
                    let gap = (eval_decomposition(&m, u, h, &q()).unwrap() - at0)
                        .abs()
                        .max((eval_decomposition(&m, u, -h, &q()).unwrap() - at0).abs());
                    assert!(gap <= h * vertical + 1e-10);
                    prev = gap;
                }
                assert!(prev < 1e-7);
            }
        }
    }

    #[test]
    fn numeric_gauge_end_to_end() {
        let hex = Polygon::regular(6).unwrap();
        let gauge_hex = NormSpec::gauge(Gauge::new("hexagon", 2.0, move |x: Vec2| hex.eval(x)));
        let gauge_l3 = NormSpec::gauge(Gauge::new("l3", 1.0, |x: Vec2| {
            (x.u.abs().powi(3) + x.v.abs().powi(3)).cbrt()
        }));
        let grid = square_grid(9, 3.0);
        for spec in [gauge_hex, gauge_l3] {
            let r = residual_scan(&spec, &grid, &q()).unwrap();
            assert!(r.max_residual_decomposition < 1e-6, "{} {r:?}", spec.label());
            assert!(r.max_residual_embedding < 1e-5, "{} {r:?}", spec.label());
        }
    }
}
