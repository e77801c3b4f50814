//! Norms on the plane (and the few d-dimensional norms used by the
//! counterexamples), together with a randomized checker for the norm axioms.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub u: f64,
    pub v: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { u: 0.0, v: 0.0 };

    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn is_finite(self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    pub fn is_zero(self) -> bool {
        self.u == 0.0 && self.v == 0.0
    }

    pub fn cross(self, other: Vec2) -> f64 {
        self.u * other.v - self.v * other.u
    }

    pub fn to_vecd(self) -> VecD {
        VecD(vec![self.u, self.v])
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.u + o.u, self.v + o.v)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.u - o.u, self.v - o.v)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.u, -self.v)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, x: Vec2) -> Vec2 {
        Vec2::new(self * x.u, self * x.v)
    }
}

/// A point of ℝ^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VecD(pub Vec<f64>);

impl VecD {
    pub fn zeros(d: usize) -> Self {
        VecD(vec![0.0; d])
    }

    /// The `i`-th standard basis vector (0-based).
    pub fn basis(d: usize, i: usize) -> Self {
        let mut x = vec![0.0; d];
        x[i] = 1.0;
        VecD(x)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn add(&self, other: &VecD) -> VecD {
        VecD(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &VecD) -> VecD {
        VecD(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, s: f64) -> VecD {
        VecD(self.0.iter().map(|a| s * a).collect())
    }

    pub fn dot(&self, other: &VecD) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }
}

impl From<Vec2> for VecD {
    fn from(x: Vec2) -> Self {
        x.to_vecd()
    }
}

/// The linear functional `(u, v) ↦ a·u + b·v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Functional2 {
    pub a: f64,
    pub b: f64,
}

impl Functional2 {
    pub const fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    /// The functional `(u, v) ↦ u − t·v`, i.e. `(1, −t)`.
    pub const fn slanted(t: f64) -> Self {
        Self { a: 1.0, b: -t }
    }

    /// The functional `(u, v) ↦ v`.
    pub const VERTICAL: Functional2 = Functional2 { a: 0.0, b: 1.0 };

    pub fn apply(self, x: Vec2) -> f64 {
        self.a * x.u + self.b * x.v
    }

    pub fn scale(self, s: f64) -> Functional2 {
        Functional2::new(s * self.a, s * self.b)
    }
}

/// A centrally symmetric convex polygon used as a unit ball.
///
/// Vertices are stored counter-clockwise by angle. Each facet carries the
/// functional `n` with `n·x = 1` on that edge, so the norm is `max_k n_k·x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Vec2>,
    facets: Vec<Functional2>,
}

const VERTEX_DEDUP_TOL: f64 = 1e-12;

impl Polygon {
    /// Builds the polygon spanned by `vertices` and their negatives.
    ///
    /// Points may be given for half the ball only; duplicates within 1e-12
    /// are merged and collinear boundary points dropped. Points lying strictly
    /// inside the hull are rejected.
    pub fn new(vertices: &[Vec2]) -> Result<Self> {
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidNorm("non-finite polygon vertex".into()));
        }
        let mut pts: Vec<Vec2> = Vec::with_capacity(2 * vertices.len());
        for &p in vertices {
            if p.is_zero() {
                return Err(Error::InvalidNorm("polygon vertex at the origin".into()));
            }
            pts.push(p);
            pts.push(-p);
        }
        pts.sort_by(|a, b| angle_of(*a).total_cmp(&angle_of(*b)));
        let scale = pts.iter().map(|p| p.u.abs().max(p.v.abs())).fold(0.0, f64::max);
        let mut dedup: Vec<Vec2> = Vec::with_capacity(pts.len());
        for p in pts {
            let dup = dedup.iter().any(|q| {
                (q.u - p.u).abs() <= VERTEX_DEDUP_TOL * scale.max(1.0)
                    && (q.v - p.v).abs() <= VERTEX_DEDUP_TOL * scale.max(1.0)
            });
            if !dup {
                dedup.push(p);
            }
        }
        // Two points on the same ray: the outer one survives only if the inner
        // one is dropped below as non-extreme.
        let mut ring = dedup;
        loop {
            let n = ring.len();
            if n < 4 {
                return Err(Error::InvalidNorm(
                    "polygon needs at least two independent directions".into(),
                ));
            }
            let mut removed = false;
            for i in 0..n {
                let prev = ring[(i + n - 1) % n];
                let cur = ring[i];
                let next = ring[(i + 1) % n];
                let turn = (cur - prev).cross(next - cur);
                let size = (cur - prev).u.hypot((cur - prev).v) * (next - cur).u.hypot((next - cur).v);
                if turn.abs() <= 1e-12 * size.max(f64::MIN_POSITIVE) {
                    if (cur - prev).u * (next - cur).u + (cur - prev).v * (next - cur).v >= 0.0 {
                        // collinear boundary point
                        ring.remove(i);
                        removed = true;
                        break;
                    }
                    return Err(Error::InvalidNorm("degenerate polygon".into()));
                }
                if turn < 0.0 {
                    return Err(Error::InvalidNorm(format!(
                        "vertex ({}, {}) is not in convex position",
                        cur.u, cur.v
                    )));
                }
            }
            if !removed {
                break;
            }
        }
        let n = ring.len();
        let mut facets = Vec::with_capacity(n);
        for i in 0..n {
            let p = ring[i];
            let q = ring[(i + 1) % n];
            let det = p.cross(q);
            if det <= 0.0 {
                return Err(Error::InvalidNorm("origin is not strictly inside the polygon".into()));
            }
            facets.push(Functional2::new((q.v - p.v) / det, (p.u - q.u) / det));
        }
        Ok(Self { vertices: ring, facets })
    }

    /// Regular polygon with `2m` vertices on the unit circle, starting at (1, 0).
    pub fn regular(two_m: usize) -> Result<Self> {
        if two_m < 4 || two_m % 2 != 0 {
            return Err(Error::InvalidNorm("regular polygon needs an even vertex count ≥ 4".into()));
        }
        let verts: Vec<Vec2> = (0..two_m / 2)
            .map(|i| {
                let th = std::f64::consts::PI * 2.0 * i as f64 / two_m as f64;
                Vec2::new(th.cos(), th.sin())
            })
            .collect();
        Self::new(&verts)
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Functional2] {
        &self.facets
    }

    pub fn eval(&self, x: Vec2) -> f64 {
        self.facets.iter().map(|n| n.apply(x)).fold(0.0, f64::max)
    }
}

fn angle_of(p: Vec2) -> f64 {
    p.v.atan2(p.u)
}

/// A black-box norm on the plane.
#[derive(Clone)]
pub struct Gauge {
    eval: Arc<dyn Fn(Vec2) -> f64 + Send + Sync>,
    /// Declared upper bound on the Lipschitz constant with respect to the
    /// max-norm; sets the scale of finite-difference steps.
    pub lipschitz: f64,
    pub label: String,
}

impl Gauge {
    pub fn new(label: impl Into<String>, lipschitz: f64, f: impl Fn(Vec2) -> f64 + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(f), lipschitz, label: label.into() }
    }

    pub fn eval(&self, x: Vec2) -> f64 {
        (self.eval)(x)
    }
}

impl fmt::Debug for Gauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gauge").field("label", &self.label).field("lipschitz", &self.lipschitz).finish()
    }
}

impl PartialEq for Gauge {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.eval, &other.eval) && self.lipschitz == other.lipschitz
    }
}

/// A norm.
///
/// `Lp` and `L1` act on vectors of any dimension; `Polygonal` and `Gauge`
/// are planar; `Johnson(d)` acts on ℝ^d.
#[derive(Debug, Clone, PartialEq)]
pub enum NormSpec {
    /// ℓ_p with `p ∈ (1, ∞]`; `f64::INFINITY` is the sup norm.
    Lp(f64),
    L1,
    Polygonal(Polygon),
    Johnson(usize),
    Gauge(Gauge),
    /// `factor · ‖·‖_inner` with `factor > 0`.
    Scaled(f64, Box<NormSpec>),
}

impl NormSpec {
    pub fn lp(p: f64) -> Result<Self> {
        if p.is_nan() || p <= 1.0 {
            return Err(Error::InvalidNorm(format!("ℓ_p needs p in (1, ∞], got {p}")));
        }
        Ok(NormSpec::Lp(p))
    }

    pub fn linf() -> Self {
        NormSpec::Lp(f64::INFINITY)
    }

    pub fn polygon(vertices: &[Vec2]) -> Result<Self> {
        Polygon::new(vertices).map(NormSpec::Polygonal)
    }

    pub fn johnson(d: usize) -> Result<Self> {
        if d < 3 {
            return Err(Error::InvalidNorm(format!("Johnson norm needs d ≥ 3, got {d}")));
        }
        Ok(NormSpec::Johnson(d))
    }

    pub fn gauge(g: Gauge) -> Self {
        NormSpec::Gauge(g)
    }

    pub fn scaled(self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidNorm(format!("scale factor must be positive, got {factor}")));
        }
        Ok(NormSpec::Scaled(factor, Box::new(self)))
    }

    /// Fixed dimension, if the norm has one.
    pub fn dim(&self) -> Option<usize> {
        match self {
            NormSpec::Lp(_) | NormSpec::L1 => None,
            NormSpec::Polygonal(_) | NormSpec::Gauge(_) => Some(2),
            NormSpec::Johnson(d) => Some(*d),
            NormSpec::Scaled(_, inner) => inner.dim(),
        }
    }

    /// Whether the norm can act on ℝ².
    pub fn is_planar(&self) -> bool {
        self.dim().is_none_or(|d| d == 2)
    }

    /// Checks structural invariants; gauges are additionally run through
    /// [`validate_norm`].
    pub fn validated(self) -> Result<Self> {
        self.check_structure()?;
        if self.contains_gauge() {
            let report = validate_norm(&self, 1000, 1e-9);
            if !report.passed {
                return Err(Error::InvalidNorm(format!(
                    "gauge failed norm-axiom validation ({})",
                    report.failure.unwrap_or_default()
                )));
            }
        }
        Ok(self)
    }

    fn check_structure(&self) -> Result<()> {
        match self {
            NormSpec::Lp(p) if p.is_nan() || *p <= 1.0 => {
                Err(Error::InvalidNorm(format!("ℓ_p needs p in (1, ∞], got {p}")))
            }
            NormSpec::Johnson(d) if *d < 3 => Err(Error::InvalidNorm(format!("Johnson norm needs d ≥ 3, got {d}"))),
            NormSpec::Gauge(g) if !(g.lipschitz > 0.0 && g.lipschitz.is_finite()) => {
                Err(Error::InvalidNorm("gauge Lipschitz bound must be positive".into()))
            }
            NormSpec::Scaled(f, inner) => {
                if !(*f > 0.0 && f.is_finite()) {
                    return Err(Error::InvalidNorm("scale factor must be positive".into()));
                }
                inner.check_structure()
            }
            _ => Ok(()),
        }
    }

    fn contains_gauge(&self) -> bool {
        match self {
            NormSpec::Gauge(_) => true,
            NormSpec::Scaled(_, inner) => inner.contains_gauge(),
            _ => false,
        }
    }

    /// Evaluates the norm at a point of ℝ^d.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if let Some(d) = self.dim() {
            if x.len() != d {
                return Err(Error::DimensionMismatch { expected: d, actual: x.len() });
            }
        }
        if x.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, actual: 0 });
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(self.eval_unchecked(x))
    }

    /// Evaluates the norm at a point of the plane.
    pub fn eval2(&self, x: Vec2) -> Result<f64> {
        self.eval(&[x.u, x.v])
    }

    /// Planar evaluation without dimension checks. Callers guarantee the norm
    /// is planar.
    pub(crate) fn norm2(&self, x: Vec2) -> f64 {
        self.eval_unchecked(&[x.u, x.v])
    }

    fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            NormSpec::Lp(p) => lp_norm(*p, x),
            NormSpec::L1 => x.iter().map(|c| c.abs()).sum(),
            NormSpec::Polygonal(poly) => poly.eval(Vec2::new(x[0], x[1])),
            NormSpec::Johnson(_) => johnson_value(x),
            NormSpec::Gauge(g) => g.eval(Vec2::new(x[0], x[1])),
            NormSpec::Scaled(f, inner) => f * inner.eval_unchecked(x),
        }
    }

    /// `‖(1, 0)‖`, the asymptotic slope of the profile.
    pub fn slope_limit(&self) -> Result<f64> {
        self.eval2(Vec2::new(1.0, 0.0))
    }

    /// Short human-readable name.
    pub fn label(&self) -> String {
        match self {
            NormSpec::Lp(p) if p.is_infinite() => "linf".into(),
            NormSpec::Lp(p) => format!("l{p}"),
            NormSpec::L1 => "l1".into(),
            NormSpec::Polygonal(poly) => format!("polygon{}", poly.vertices().len()),
            NormSpec::Johnson(d) => format!("johnson{d}"),
            NormSpec::Gauge(g) => format!("gauge:{}", g.label),
            NormSpec::Scaled(f, inner) => format!("{f}*{}", inner.label()),
        }
    }
}

fn lp_norm(p: f64, x: &[f64]) -> f64 {
    let m = x.iter().map(|c| c.abs()).fold(0.0, f64::max);
    if p.is_infinite() || m == 0.0 {
        return m;
    }
    if p == 2.0 {
        let s: f64 = x.iter().map(|c| (c / m) * (c / m)).sum();
        return m * s.sqrt();
    }
    let s: f64 = x.iter().map(|c| (c.abs() / m).powf(p)).sum();
    m * s.powf(1.0 / p)
}

fn johnson_value(x: &[f64]) -> f64 {
    let mut best = 0.0f64;
    for (i, &xi) in x.iter().enumerate() {
        best = best.max(xi.abs());
        for &xj in &x[i + 1..] {
            best = best.max((xi - xj).abs());
        }
    }
    best
}

/// `max{|x_i| ∨ |x_i − x_j| : i, j}` on ℝ^d.
pub fn johnson_norm(d: usize, x: &VecD) -> Result<f64> {
    NormSpec::johnson(d)?.eval(x.as_slice())
}

/// Outcome of [`validate_norm`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub samples: usize,
    pub passed: bool,
    /// Largest relative violation over all checks.
    pub worst_violation: f64,
    pub worst_homogeneity: f64,
    pub worst_triangle: f64,
    pub worst_symmetry: f64,
    pub worst_definiteness: f64,
    /// Name of the first check that exceeded the tolerance.
    pub failure: Option<String>,
}

/// Randomized check of the norm axioms with a fixed seed.
pub fn validate_norm(spec: &NormSpec, samples: usize, tol: f64) -> ValidationReport {
    validate_norm_seeded(spec, samples.max(1), tol, 0)
}

pub fn validate_norm_seeded(spec: &NormSpec, samples: usize, tol: f64, seed: u64) -> ValidationReport {
    let d = spec.dim().unwrap_or(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample_point = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let mag = 10f64.powf(rng.random_range(-2.0..2.0));
        (0..d).map(|_| mag * rng.random_range(-1.0..1.0)).collect::<Vec<f64>>()
    };
    let eval = |x: &[f64]| spec.eval_unchecked(x);
    let mut hom = 0.0f64;
    let mut tri = 0.0f64;
    let mut sym = 0.0f64;
    let mut def = 0.0f64;
    let zero = vec![0.0; d];
    let z = eval(&zero);
    if !(z == 0.0) {
        def = f64::INFINITY;
    }
    for _ in 0..samples {
        let x = sample_point(&mut rng);
        let y = sample_point(&mut rng);
        let lambda: f64 = rng.random_range(-5.0..5.0);
        let nx = eval(&x);
        let ny = eval(&y);
        let scale_x: f64 = x.iter().map(|c| c.abs()).fold(0.0, f64::max);
        if !(nx > 0.0) || !nx.is_finite() {
            def = def.max(if nx.is_finite() { 1.0 } else { f64::INFINITY });
        }
        let lx: Vec<f64> = x.iter().map(|c| lambda * c).collect();
        let nlx = eval(&lx);
        let denom = (lambda.abs() * nx).max(lambda.abs() * scale_x * f64::EPSILON).max(f64::MIN_POSITIVE);
        hom = hom.max(rel(nlx - lambda.abs() * nx, denom));
        let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let nxy = eval(&xy);
        tri = tri.max(rel((nxy - nx - ny).max(0.0), (nx + ny).max(f64::MIN_POSITIVE)));
        let mx: Vec<f64> = x.iter().map(|c| -c).collect();
        sym = sym.max(rel(eval(&mx) - nx, nx.max(f64::MIN_POSITIVE)));
    }
    let checks = [("definiteness", def), ("homogeneity", hom), ("triangle", tri), ("symmetry", sym)];
    let failure = checks.iter().find(|(_, v)| !(*v <= tol)).map(|(n, v)| format!("{n} violation {v:e}"));
    let worst = checks.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    ValidationReport {
        samples,
        passed: failure.is_none(),
        worst_violation: worst,
        worst_homogeneity: hom,
        worst_triangle: tri,
        worst_symmetry: sym,
        worst_definiteness: def,
        failure,
    }
}

fn rel(diff: f64, denom: f64) -> f64 {
    if diff.is_nan() {
        f64::INFINITY
    } else {
        diff.abs() / denom
    }
}

/// JSON norm descriptor, the input contract of the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum NormDescriptor {
    Lp { p: f64 },
    L1,
    Linf,
    Polygon { vertices: Vec<[f64; 2]> },
    Johnson { d: usize },
    Scaled { factor: f64, inner: Box<NormDescriptor> },
}

impl NormDescriptor {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_spec(&self) -> Result<NormSpec> {
        let spec = match self {
            NormDescriptor::Lp { p } if p.is_infinite() => NormSpec::linf(),
            NormDescriptor::Lp { p } => NormSpec::lp(*p)?,
            NormDescriptor::L1 => NormSpec::L1,
            NormDescriptor::Linf => NormSpec::linf(),
            NormDescriptor::Polygon { vertices } => {
                let pts: Vec<Vec2> = vertices.iter().map(|[a, b]| Vec2::new(*a, *b)).collect();
                NormSpec::polygon(&pts)?
            }
            NormDescriptor::Johnson { d } => NormSpec::johnson(*d)?,
            NormDescriptor::Scaled { factor, inner } => inner.to_spec()?.scaled(*factor)?,
        };
        spec.validated()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Gauge of a convex polygon by bisection on the scale, with a
    /// ray-casting membership test. Independent of the facet representation.
    fn bisection_gauge(vertices: &[Vec2], x: Vec2) -> f64 {
        let inside = |p: Vec2| -> bool {
            let n = vertices.len();
            let mut c = false;
            for i in 0..n {
                let a = vertices[i];
                let b = vertices[(i + 1) % n];
                if (a.v > p.v) != (b.v > p.v) {
                    let xint = a.u + (p.v - a.v) * (b.u - a.u) / (b.v - a.v);
                    if p.u < xint {
                        c = !c;
                    }
                }
            }
            c
        };
        if x.is_zero() {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while !inside((1.0 / hi) * x) {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if inside((1.0 / mid) * x) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    fn square() -> NormSpec {
        NormSpec::polygon(&[Vec2::new(1.0, 1.0), Vec2::new(-1.0, 1.0)]).unwrap()
    }

    fn hexagon() -> NormSpec {
        let h = 3f64.sqrt() / 2.0;
        NormSpec::polygon(&[Vec2::new(1.0, 0.0), Vec2::new(0.5, h), Vec2::new(-0.5, h)]).unwrap()
    }

    #[test]
    fn simple_evaluations() {
        assert_eq!(NormSpec::linf().eval2(Vec2::new(3.0, -2.0)).unwrap(), 3.0);
        assert_eq!(NormSpec::L1.eval2(Vec2::new(1.0, 1.0)).unwrap(), 2.0);
        assert_eq!(square().eval2(Vec2::new(0.5, 0.5)).unwrap(), 0.5);
        let oracle = bisection_gauge(square_vertices().as_slice(), Vec2::new(0.5, 0.5));
        assert!((oracle - 0.5).abs() < 1e-12);
    }

    fn square_vertices() -> Vec<Vec2> {
        vec![Vec2::new(1.0, 1.0), Vec2::new(-1.0, 1.0), Vec2::new(-1.0, -1.0), Vec2::new(1.0, -1.0)]
    }

    #[test]
    fn zero_iff_origin() {
        for spec in [NormSpec::L1, NormSpec::linf(), NormSpec::Lp(2.5), square(), hexagon()] {
            assert_eq!(spec.eval2(Vec2::ZERO).unwrap(), 0.0);
            assert!(spec.eval2(Vec2::new(1e-300, 0.0)).unwrap() > 0.0);
        }
    }

    #[test]
    fn polygon_matches_bisection_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for spec in [square(), hexagon()] {
            let NormSpec::Polygonal(poly) = &spec else { unreachable!() };
            for _ in 0..1000 {
                let x = Vec2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
                let exact = spec.eval2(x).unwrap();
                let oracle = bisection_gauge(poly.vertices(), x);
                assert!((exact - oracle).abs() <= 1e-10 * (1.0 + exact), "{x:?}: {exact} vs {oracle}");
            }
        }
    }

    #[test]
    fn polygon_preprocessing() {
        // half ball, a duplicate, and a collinear edge midpoint
        let p = Polygon::new(&[
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 1.0 + 1e-14),
            Vec2::new(0.0, 1.0),
            Vec2::new(-1.0, 1.0),
        ])
        .unwrap();
        assert_eq!(p.vertices().len(), 4);
        assert_eq!(p.facets().len(), 4);
    }

    #[test]
    fn polygon_rejects_bad_input() {
        assert!(Polygon::new(&[Vec2::new(1.0, 0.0)]).is_err());
        assert!(Polygon::new(&[Vec2::new(1.0, 1.0), Vec2::new(-1.0, 1.0), Vec2::new(0.0, 0.5)]).is_err());
        assert!(Polygon::new(&[Vec2::new(1.0, 0.0), Vec2::new(0.0, 0.0)]).is_err());
        assert!(Polygon::new(&[Vec2::new(f64::NAN, 0.0), Vec2::new(0.0, 1.0)]).is_err());
    }

    #[test]
    fn johnson_examples() {
        assert_eq!(johnson_norm(4, &VecD(vec![1.0, -1.0, 0.0, 0.0])).unwrap(), 2.0);
        assert_eq!(johnson_norm(4, &VecD(vec![1.0, 1.0, 0.0, 0.0])).unwrap(), 1.0);
        assert_eq!(johnson_norm(3, &VecD::zeros(3)).unwrap(), 0.0);
        assert!(johnson_norm(2, &VecD::zeros(2)).is_err());
        assert!(matches!(
            johnson_norm(4, &VecD::zeros(3)),
            Err(Error::DimensionMismatch { expected: 4, actual: 3 })
        ));
    }

    #[test]
    fn dimension_checks() {
        assert!(matches!(square().eval(&[1.0, 2.0, 3.0]), Err(Error::DimensionMismatch { .. })));
        assert!(NormSpec::Lp(2.0).eval(&[1.0, 2.0, 2.0]).unwrap() == 3.0);
        assert!(matches!(NormSpec::L1.eval(&[f64::NAN]), Err(Error::NonFinite)));
    }

    #[test]
    fn validation_reports() {
        let r = validate_norm(&NormSpec::Lp(2.0), 1000, 1e-12);
        assert!(r.passed, "{r:?}");
        assert!(r.worst_violation <= 1e-15);
        assert!(validate_norm(&hexagon(), 1000, 1e-9).passed);
        for d in 3..=5 {
            assert!(validate_norm(&NormSpec::Johnson(d), 1000, 1e-9).passed);
        }
        let bad = NormSpec::gauge(Gauge::new("u^2", 1.0, |x: Vec2| x.u * x.u));
        let r = validate_norm(&bad, 1000, 1e-9);
        assert!(!r.passed);
        assert!(r.worst_homogeneity > 0.1);
        assert!(bad.validated().is_err());
    }

    #[test]
    fn invalid_specs() {
        assert!(NormSpec::lp(1.0).is_err());
        assert!(NormSpec::lp(0.5).is_err());
        assert!(NormSpec::johnson(2).is_err());
        assert!(NormSpec::L1.scaled(-1.0).is_err());
    }

    #[test]
    fn descriptors_parse() {
        let d = NormDescriptor::from_json(r#"{"type":"lp","p":2.5}"#).unwrap();
        assert_eq!(d.to_spec().unwrap(), NormSpec::Lp(2.5));
        let d = NormDescriptor::from_json(r#"{"type":"linf"}"#).unwrap();
        assert_eq!(d.to_spec().unwrap(), NormSpec::linf());
        let d = NormDescriptor::from_json(r#"{"type":"polygon","vertices":[[1,0],[0,1]]}"#).unwrap();
        assert!(matches!(d.to_spec().unwrap(), NormSpec::Polygonal(_)));
        assert!(NormDescriptor::from_json(r#"{"type":"lp","p":0.5}"#).unwrap().to_spec().is_err());
        assert!(NormDescriptor::from_json(r#"{"type":"mystery"}"#).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn axioms_hold(p in 1.01f64..12.0, u in -50.0f64..50.0, v in -50.0f64..50.0,
                           a in -50.0f64..50.0, b in -50.0f64..50.0, lam in -10.0f64..10.0) {
                for spec in [NormSpec::Lp(p), NormSpec::L1, NormSpec::linf(), hexagon()] {
                    let x = Vec2::new(u, v);
                    let y = Vec2::new(a, b);
                    let nx = spec.eval2(x).unwrap();
                    let tol = 1e-9 * (1.0 + nx.abs() * (1.0 + lam.abs()));
                    prop_assert!((spec.eval2(lam * x).unwrap() - lam.abs() * nx).abs() <= tol);
                    prop_assert!(spec.eval2(x + y).unwrap() <= nx + spec.eval2(y).unwrap() + 1e-9 * (1.0 + nx));
                }
            }
        }
    }
}
