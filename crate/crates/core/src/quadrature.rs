//! Adaptive Gauss–Kronrod integration with kink splitting, algebraic endpoint
//! singularities, improper-integral handling, and Stieltjes integration
//! against a [`RepresentingMeasure`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::measure::RepresentingMeasure;

/// Kronrod nodes on [0, 1] (positive half, the rule is symmetric).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the 7-point rule embedded at odd Kronrod indices.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances for the adaptive integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Bisection depth limit per subinterval.
    pub max_depth: u32,
    pub truncation_tail_tol: f64,
    /// Hard cap on live subintervals.
    pub max_intervals: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-10, max_depth: 60, truncation_tail_tol: 1e-12, max_intervals: 20_000 }
    }
}

impl QuadratureOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.abs_tol > 0.0
            && self.rel_tol > 0.0
            && self.truncation_tail_tol > 0.0
            && self.max_depth >= 10
            && self.max_intervals >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid quadrature options {self:?}")))
        }
    }

    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }
}

/// Value plus the achieved error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub converged: bool,
    /// Subintervals in the final partition.
    pub intervals: usize,
    pub evaluations: usize,
}

impl QuadResult {
    fn zero() -> Self {
        QuadResult { value: 0.0, abs_error: 0.0, converged: true, intervals: 0, evaluations: 0 }
    }

    /// Turns a non-converged estimate into an error.
    pub fn require(self, opts: &QuadratureOptions) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::Quadrature { achieved: self.abs_error, requested: opts.abs_tol.max(opts.rel_tol * self.value.abs()) })
        }
    }
}

/// One G7/K15 panel on [a, b]: (kronrod, |kronrod − gauss|).
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Panel {
    seg: usize,
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    depth: u32,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// A finite parameter interval with its own (already transformed) integrand.
pub(crate) struct Segment<'a> {
    pub f: Box<dyn Fn(f64) -> f64 + 'a>,
    pub a: f64,
    pub b: f64,
}

/// Globally adaptive integration of a sum of segments: the panel with the
/// largest error estimate is bisected until the total estimate meets the
/// tolerance.
pub(crate) fn adaptive(segments: &[Segment<'_>], opts: &QuadratureOptions) -> QuadResult {
    if segments.is_empty() {
        return QuadResult::zero();
    }
    let mut heap = BinaryHeap::new();
    let mut finished_value = 0.0;
    let mut finished_error = 0.0;
    let mut finished = 0usize;
    let mut evals = 0usize;
    let mut total = 0.0;
    let mut total_err = 0.0;
    for (i, s) in segments.iter().enumerate() {
        if !(s.b > s.a) {
            continue;
        }
        let (v, e) = gk15(&*s.f, s.a, s.b);
        evals += 15;
        total += v;
        total_err += e;
        heap.push(Panel { seg: i, a: s.a, b: s.b, value: v, error: e, depth: 0 });
    }
    let target = |total: f64| opts.abs_tol.max(opts.rel_tol * total.abs());
    while total_err > target(total) {
        let Some(p) = heap.pop() else { break };
        if !p.error.is_finite() && !p.value.is_finite() {
            // non-finite integrand; nothing bisection can fix
            finished_value += p.value;
            finished_error += p.error;
            finished += 1;
            break;
        }
        let mid = 0.5 * (p.a + p.b);
        if p.depth >= opts.max_depth || mid <= p.a || mid >= p.b || heap.len() + finished >= opts.max_intervals {
            finished_value += p.value;
            finished_error += p.error;
            finished += 1;
            if heap.len() + finished >= opts.max_intervals {
                break;
            }
            continue;
        }
        let f = &*segments[p.seg].f;
        let (v1, e1) = gk15(f, p.a, mid);
        let (v2, e2) = gk15(f, mid, p.b);
        evals += 30;
        total += v1 + v2 - p.value;
        total_err += e1 + e2 - p.error;
        heap.push(Panel { seg: p.seg, a: p.a, b: mid, value: v1, error: e1, depth: p.depth + 1 });
        heap.push(Panel { seg: p.seg, a: mid, b: p.b, value: v2, error: e2, depth: p.depth + 1 });
    }
    // Re-sum to shed drift from the running updates.
    let mut value = finished_value;
    let mut error = finished_error;
    let mut comp = 0.0;
    for p in heap.iter() {
        let y = p.value - comp;
        let t = value + y;
        comp = (t - value) - y;
        value = t;
        error += p.error;
    }
    let intervals = heap.len() + finished;
    QuadResult { value, abs_error: error, converged: error <= target(value), intervals, evaluations: evals }
}

/// Segment for `∫_a^b f` with algebraic endpoint behaviour `|t − a|^alpha_a`
/// and `|t − b|^alpha_b`. Exponents below zero are removed by a power
/// substitution; both-sided singular intervals are split at the midpoint.
pub(crate) fn push_algebraic<'a, F>(out: &mut Vec<Segment<'a>>, f: F, a: f64, b: f64, alpha_a: f64, alpha_b: f64)
where
    F: Fn(f64) -> f64 + Clone + 'a,
{
    if !(b > a) {
        return;
    }
    let sing_a = alpha_a < 0.0;
    let sing_b = alpha_b < 0.0;
    if sing_a && sing_b {
        let m = 0.5 * (a + b);
        push_algebraic(out, f.clone(), a, m, alpha_a, 0.0);
        push_algebraic(out, f, m, b, 0.0, alpha_b);
        return;
    }
    if sing_a {
        let m = 1.0 / (1.0 + alpha_a);
        let w = b - a;
        out.push(Segment {
            f: Box::new(move |s: f64| {
                let sm = s.powf(m);
                f(a + w * sm) * w * m * sm / s
            }),
            a: 0.0,
            b: 1.0,
        });
    } else if sing_b {
        let m = 1.0 / (1.0 + alpha_b);
        let w = b - a;
        out.push(Segment {
            f: Box::new(move |s: f64| {
                let sm = s.powf(m);
                f(b - w * sm) * w * m * sm / s
            }),
            a: 0.0,
            b: 1.0,
        });
    } else {
        out.push(Segment { f: Box::new(f), a, b });
    }
}

/// Segment for `∫_A^∞ f` (`A > 0`, `dir = +1`) or `∫_{−∞}^{−A} f` (`dir = −1`)
/// through `t = ±A/s`, with an optional power substitution removing an
/// `s^alpha` endpoint singularity.
pub(crate) fn push_tail<'a, F>(out: &mut Vec<Segment<'a>>, f: F, anchor: f64, dir: f64, alpha: f64)
where
    F: Fn(f64) -> f64 + 'a,
{
    debug_assert!(anchor > 0.0);
    let m = if alpha < 0.0 { 1.0 / (1.0 + alpha) } else { 1.0 };
    out.push(Segment {
        f: Box::new(move |w: f64| {
            let s = w.powf(m);
            let t = dir * anchor / s;
            if !t.is_finite() {
                return 0.0;
            }
            let v = f(t);
            if v == 0.0 {
                0.0
            } else {
                v * anchor * m * s / (w * s * s)
            }
        }),
        a: 0.0,
        b: 1.0,
    });
}

fn split_points(a: f64, b: f64, kinks: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = kinks.iter().copied().filter(|k| k.is_finite() && *k > a && *k < b).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `∫_a^b f(t) dt`, pre-split at every kink inside (a, b). Infinite limits
/// are mapped to finite intervals by `t = a + (1 − s)/s`.
pub fn integrate<F>(f: F, a: f64, b: f64, kinks: &[f64], opts: &QuadratureOptions) -> QuadResult
where
    F: Fn(f64) -> f64 + Clone,
{
    if a == b {
        return QuadResult::zero();
    }
    if a > b {
        let mut r = integrate(f, b, a, kinks, opts);
        r.value = -r.value;
        return r;
    }
    let inner = split_points(a, b, kinks);
    let mut nodes = Vec::with_capacity(inner.len() + 2);
    nodes.push(a);
    nodes.extend(inner);
    nodes.push(b);
    let mut segs: Vec<Segment<'_>> = Vec::new();
    for w in nodes.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => segs.push(Segment { f: Box::new(f.clone()), a: lo, b: hi }),
            (true, false) => {
                let g = f.clone();
                segs.push(Segment {
                    f: Box::new(move |s: f64| {
                        let t = lo + (1.0 - s) / s;
                        if t.is_finite() {
                            g(t) / (s * s)
                        } else {
                            0.0
                        }
                    }),
                    a: 0.0,
                    b: 1.0,
                })
            }
            (false, true) => {
                let g = f.clone();
                segs.push(Segment {
                    f: Box::new(move |s: f64| {
                        let t = hi - (1.0 - s) / s;
                        if t.is_finite() {
                            g(t) / (s * s)
                        } else {
                            0.0
                        }
                    }),
                    a: 0.0,
                    b: 1.0,
                })
            }
            (false, false) => {
                // whole line: split at 0
                let g1 = f.clone();
                let g2 = f.clone();
                segs.push(Segment {
                    f: Box::new(move |s: f64| {
                        let t = (1.0 - s) / s;
                        if t.is_finite() {
                            g1(t) / (s * s)
                        } else {
                            0.0
                        }
                    }),
                    a: 0.0,
                    b: 1.0,
                });
                segs.push(Segment {
                    f: Box::new(move |s: f64| {
                        let t = -(1.0 - s) / s;
                        if t.is_finite() {
                            g2(t) / (s * s)
                        } else {
                            0.0
                        }
                    }),
                    a: 0.0,
                    b: 1.0,
                });
            }
        }
    }
    adaptive(&segs, opts)
}

/// How [`integrate_halfline`] handles the infinite end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HalflineMethod {
    /// Truncate at `T` with `C/T ≤ tail_tol·|partial|`.
    #[default]
    Truncate,
    /// Substitute `t = tan θ`.
    Tangent,
}

/// Direction of a half-line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalfLine {
    Positive,
    Negative,
}

/// `∫_0^{±∞} f(t) dt` for `|f(t)| ≤ C/t²` at large `|t|`.
///
/// The truncated result carries the tail bound `C/T` in its error estimate.
pub fn integrate_halfline<F>(
    f: F,
    side: HalfLine,
    tail_constant: f64,
    method: HalflineMethod,
    opts: &QuadratureOptions,
) -> Result<QuadResult>
where
    F: Fn(f64) -> f64 + Clone,
{
    let sgn = match side {
        HalfLine::Positive => 1.0,
        HalfLine::Negative => -1.0,
    };
    let g = move |t: f64| f(sgn * t);
    match method {
        HalflineMethod::Tangent => {
            let h = move |th: f64| {
                let c = th.cos();
                g(th.tan()) / (c * c)
            };
            Ok(integrate(h, 0.0, std::f64::consts::FRAC_PI_2, &[], opts))
        }
        HalflineMethod::Truncate => {
            if !(tail_constant > 0.0) {
                return Err(Error::InvalidArgument("tail constant must be positive".into()));
            }
            let mut acc = integrate(g.clone(), 0.0, 1.0, &[], opts);
            let mut t = 1.0f64;
            loop {
                let tail = tail_constant / t;
                if tail <= opts.truncation_tail_tol * acc.value.abs() || t > 1e300 {
                    break;
                }
                // spot-check the declared envelope on the stretch we are about to skip
                for frac in [1.0, 1.5, 2.0, 3.0] {
                    let s = t * frac;
                    let obs = g(s).abs() * s * s;
                    if obs > tail_constant * (1.0 + 1e-9) {
                        return Err(Error::TailBound { t: sgn * s, observed: obs, declared: tail_constant });
                    }
                }
                let next = t * 4.0;
                let piece = integrate(g.clone(), t, next, &[], opts);
                acc.value += piece.value;
                acc.abs_error += piece.abs_error;
                acc.converged &= piece.converged;
                acc.intervals += piece.intervals;
                acc.evaluations += piece.evaluations;
                t = next;
            }
            acc.abs_error += tail_constant / t;
            Ok(acc)
        }
    }
}

/// Inserts geometric points between same-sign neighbours whose magnitudes
/// differ by more than `ratio`, so that far-away split points do not create
/// badly scaled panels.
fn geometric_fill(pts: &[f64], ratio: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(pts.len());
    for (i, &p) in pts.iter().enumerate() {
        out.push(p);
        if let Some(&q) = pts.get(i + 1) {
            if p * q > 0.0 {
                let (small, big) = if p.abs() < q.abs() { (p, q) } else { (q, p) };
                let mut x = small * ratio;
                let mut fill = Vec::new();
                while x.abs() * ratio < big.abs() {
                    fill.push(x);
                    x *= ratio;
                }
                if p.abs() > q.abs() {
                    fill.reverse();
                }
                out.extend(fill);
            }
        }
    }
    out
}

/// `∫ g dν` for the Stieltjes measure ν = dN′ carried by `m`: the atom sum
/// plus the density integral, split at `g_kinks` and at the density's own
/// breakpoints, singular points and support edges.
///
/// `g` may grow at most linearly; atoms must not sit on a discontinuity of `g`.
pub fn stieltjes_integrate<G>(m: &RepresentingMeasure, g: G, g_kinks: &[f64], opts: &QuadratureOptions) -> Result<QuadResult>
where
    G: Fn(f64) -> f64 + Clone + Sync,
{
    let mut atom_sum = 0.0;
    let mut comp = 0.0;
    for atom in m.atoms() {
        if g_kinks.iter().any(|k| (k - atom.t).abs() <= 1e-12 * (1.0 + atom.t.abs())) {
            let d = 1e-9 * (1.0 + atom.t.abs());
            let (l, c, r) = (g(atom.t - d), g(atom.t), g(atom.t + d));
            let jump = (l - c).abs().max((r - c).abs());
            if !(jump <= 1e-6 * (1.0 + c.abs())) {
                return Err(Error::DiscontinuousAtAtom(atom.t));
            }
        }
        let y = atom.mass * g(atom.t) - comp;
        let t = atom_sum + y;
        comp = (t - atom_sum) - y;
        atom_sum = t;
    }
    let mut result = QuadResult { value: atom_sum, ..QuadResult::zero() };
    let Some(density) = m.density() else {
        return Ok(result);
    };
    let (lo, hi) = density.support();
    let sing = density.singular_points();
    let exponent_at = |x: f64| -> f64 {
        sing.iter().find(|(loc, _)| (*loc - x).abs() <= 1e-14 * (1.0 + x.abs())).map_or(0.0, |s| s.1)
    };
    let mut pts: Vec<f64> = g_kinks
        .iter()
        .copied()
        .chain(density.breakpoints().iter().copied())
        .chain(sing.iter().map(|s| s.0))
        .filter(|x| x.is_finite() && *x > lo && *x < hi)
        .collect();
    if lo.is_finite() {
        pts.push(lo);
    }
    if hi.is_finite() {
        pts.push(hi);
    }
    for anchor in [-1.0, 1.0] {
        if anchor > lo && anchor < hi {
            pts.push(anchor);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (1.0 + a.abs()));
    pts = geometric_fill(&pts, 16.0);
    if lo == f64::NEG_INFINITY && pts.first().is_none_or(|x| *x >= 0.0) {
        let anchor = pts.first().map_or(-1.0, |x| -(1.0f64).max(x.abs() * 2.0));
        pts.insert(0, anchor);
    }
    if hi == f64::INFINITY && pts.last().is_none_or(|x| *x <= 0.0) {
        let anchor = pts.last().map_or(1.0, |x| (1.0f64).max(x.abs() * 2.0));
        pts.push(anchor);
    }
    let rho = |t: f64| density.eval(t);
    let integrand = move |t: f64| {
        let r = rho(t);
        if r == 0.0 {
            0.0
        } else {
            g(t) * r
        }
    };
    let mut segs: Vec<Segment<'_>> = Vec::new();
    for w in pts.windows(2) {
        push_algebraic(&mut segs, integrand.clone(), w[0], w[1], exponent_at(w[0]), exponent_at(w[1]));
    }
    let tail_alpha = density.tail_decay().map_or(0.0, |d| d - 3.0);
    if lo == f64::NEG_INFINITY {
        if tail_alpha <= -1.0 {
            return Err(Error::InvalidArgument("density tail too heavy for a linearly growing integrand".into()));
        }
        push_tail(&mut segs, integrand.clone(), -pts[0], -1.0, tail_alpha);
    }
    if hi == f64::INFINITY {
        if tail_alpha <= -1.0 {
            return Err(Error::InvalidArgument("density tail too heavy for a linearly growing integrand".into()));
        }
        push_tail(&mut segs, integrand.clone(), *pts.last().unwrap(), 1.0, tail_alpha);
    }
    let dens = adaptive(&segs, opts);
    result.value += dens.value;
    result.abs_error = dens.abs_error;
    result.intervals = dens.intervals;
    result.evaluations = dens.evaluations;
    result.converged = dens.converged || dens.abs_error <= opts.abs_tol.max(opts.rel_tol * result.value.abs());
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn opts() -> QuadratureOptions {
        QuadratureOptions::default()
    }

    #[test]
    fn absolute_value_with_kink() {
        let r = integrate(|t: f64| t.abs(), -1.0, 1.0, &[0.0], &opts());
        assert!((r.value - 1.0).abs() < 1e-14);
        assert!(r.converged);
        assert_eq!(r.intervals, 2);
    }

    #[test]
    fn polynomials_exact() {
        let polys: [fn(f64) -> f64; 3] = [|t| t.powi(5) - 3.0 * t * t + 1.0, |t| 2.0 * t.powi(4) - t, |t| 7.0 * t.powi(3)];
        let exact = [-3.0f64.powi(3) * 2.0 + 6.0, 2.0 * 2.0 * 3.0f64.powi(5) / 5.0, 0.0];
        for (p, e) in polys.iter().zip(exact) {
            let r = integrate(p, -3.0, 3.0, &[], &opts());
            assert!((r.value - e).abs() < 1e-12, "{} vs {}", r.value, e);
            assert_eq!(r.intervals, 1);
        }
    }

    #[test]
    fn whole_line_lorentz_power() {
        // antiderivative t / sqrt(t^2 + 1)
        let r = integrate(|t: f64| (t * t + 1.0).powf(-1.5), f64::NEG_INFINITY, f64::INFINITY, &[], &opts());
        assert!((r.value - 2.0).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn reversed_and_empty() {
        assert_eq!(integrate(|t: f64| t, 1.0, 1.0, &[], &opts()).value, 0.0);
        let r = integrate(|t: f64| t, 1.0, 0.0, &[], &opts());
        assert!((r.value + 0.5).abs() < 1e-15);
    }

    #[test]
    fn halfline_examples() {
        let r = integrate_halfline(|t: f64| 1.0 / (1.0 + t * t), HalfLine::Positive, 1.0, HalflineMethod::Truncate, &opts())
            .unwrap();
        assert!((r.value - PI / 2.0).abs() < 1e-10, "{}", r.value);
        let r = integrate_halfline(|t: f64| (-t).exp(), HalfLine::Positive, 0.6, HalflineMethod::Truncate, &opts()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
        let r = integrate_halfline(|t: f64| 1.0 / (1.0 + t * t), HalfLine::Negative, 1.0, HalflineMethod::Tangent, &opts())
            .unwrap();
        assert!((r.value - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn halfline_point_mass_cf_integrand() {
        // (1 − cos(a t))/t² with a = 3: total π·3/2
        let a = 3.0f64;
        let f = move |t: f64| {
            let s = (0.5 * a * t).sin();
            if t == 0.0 {
                0.5 * a * a
            } else {
                2.0 * s * s / (t * t)
            }
        };
        let r = integrate_halfline(f, HalfLine::Positive, 2.0, HalflineMethod::Truncate, &QuadratureOptions {
            truncation_tail_tol: 1e-6,
            ..opts()
        })
        .unwrap();
        assert!((r.value - PI * a / 2.0).abs() < 1e-4, "{}", r.value);
    }

    #[test]
    fn halfline_detects_envelope_violation() {
        let r = integrate_halfline(|t: f64| 1.0 / (1.0 + t.abs()), HalfLine::Positive, 1.0, HalflineMethod::Truncate, &opts());
        assert!(matches!(r, Err(Error::TailBound { .. })));
    }

    #[test]
    fn dirichlet_type_integral() {
        let f = |t: f64| {
            let s = (0.5 * t).sin();
            2.0 * s * s / (t * t)
        };
        let head = integrate(f, 0.0, 400.0 * PI, &(1..400).map(|i| i as f64 * PI).collect::<Vec<_>>(), &opts());
        // tail of 1/t² exactly, oscillatory remainder is O(1/T²)
        let v = head.value + 1.0 / (400.0 * PI);
        assert!((v - PI / 2.0).abs() < 1e-5, "{v}");
    }

    #[test]
    fn algebraic_endpoint_singularity() {
        // ∫_0^1 t^{-0.8} dt = 5
        let mut segs = Vec::new();
        push_algebraic(&mut segs, |t: f64| t.powf(-0.8), 0.0, 1.0, -0.8, 0.0);
        let r = adaptive(&segs, &opts());
        assert!((r.value - 5.0).abs() < 1e-10, "{}", r.value);
        // both ends: ∫_0^1 (t(1−t))^{-1/2} dt = π
        let mut segs = Vec::new();
        push_algebraic(&mut segs, |t: f64| (t * (1.0 - t)).powf(-0.5), 0.0, 1.0, -0.5, -0.5);
        let r = adaptive(&segs, &opts());
        assert!((r.value - PI).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn tail_substitution() {
        // ∫_1^∞ t^{-1.5} dt = 2, tail exponent in s is -0.5
        let mut segs = Vec::new();
        push_tail(&mut segs, |t: f64| t.abs().powf(-1.5), 1.0, 1.0, -0.5);
        let r = adaptive(&segs, &opts());
        assert!((r.value - 2.0).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn options_validate() {
        assert!(QuadratureOptions::default().validate().is_ok());
        assert!(QuadratureOptions { max_depth: 5, ..Default::default() }.validate().is_err());
        assert!(QuadratureOptions { abs_tol: 0.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn nonconvergence_is_reported() {
        let tight = QuadratureOptions { abs_tol: 1e-300, rel_tol: 1e-300, max_intervals: 50, ..Default::default() };
        let r = integrate(|t: f64| (1.0 / t).sin(), 1e-6, 1.0, &[], &tight);
        assert!(!r.converged);
        assert!(r.abs_error > 0.0);
        assert!(r.require(&tight).is_err());
    }
}
