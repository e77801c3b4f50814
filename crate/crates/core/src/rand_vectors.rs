//! Exact expectations for finitely supported random vectors: Rademacher
//! sums, pairwise `E‖X ± Y‖`, and the one-dimensional identity
//! `E|X+Y| − E|X−Y| = 2∫_0^∞ [P(X>r) − P(X<−r)]² dr`.

use num_rational::Rational64;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::norm_model::{NormSpec, VecD};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// A random vector taking finitely many values.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    d: usize,
    support: Vec<VecD>,
    probs: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct DistributionDescriptor {
    d: usize,
    support: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(support: Vec<VecD>, probs: Vec<f64>) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidDistribution(m));
        if support.is_empty() {
            return bad("empty support".into());
        }
        if support.len() != probs.len() {
            return bad(format!("{} support points but {} probabilities", support.len(), probs.len()));
        }
        let d = support[0].dim();
        if d == 0 {
            return bad("zero-dimensional support".into());
        }
        if let Some(x) = support.iter().find(|x| x.dim() != d) {
            return bad(format!("support point of dimension {} in a {d}-dimensional distribution", x.dim()));
        }
        if support.iter().any(|x| x.0.iter().any(|c| !c.is_finite())) {
            return bad("non-finite support point".into());
        }
        if let Some(p) = probs.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
            return bad(format!("probability {p} is not positive"));
        }
        let mut total = KahanSum::default();
        probs.iter().for_each(|p| total.add(*p));
        if (total.value() - 1.0).abs() > 1e-12 {
            return bad(format!("probabilities sum to {}", total.value()));
        }
        let mut sorted: Vec<&VecD> = support.iter().collect();
        sorted.sort_by(|a, b| a.0.iter().zip(&b.0).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return bad("repeated support point".into());
        }
        Ok(Self { d, support, probs })
    }

    /// Uniform distribution on distinct points.
    pub fn uniform(support: Vec<VecD>) -> Result<Self> {
        let n = support.len();
        Self::new(support, vec![1.0 / n as f64; n])
    }

    pub fn point_mass(x: VecD) -> Self {
        Self { d: x.dim(), support: vec![x], probs: vec![1.0] }
    }

    /// Parses `{"d": 2, "support": [[..], ..], "probs": [..]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let desc: DistributionDescriptor = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("distribution at line {} column {}: {e}", e.line(), e.column())))?;
        let dist = Self::new(desc.support.into_iter().map(VecD).collect(), desc.probs)?;
        if dist.d != desc.d {
            return Err(Error::InvalidDistribution(format!("declared d = {} but points have dimension {}", desc.d, dist.d)));
        }
        Ok(dist)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "d": self.d,
            "support": self.support.iter().map(|x| x.0.clone()).collect::<Vec<_>>(),
            "probs": self.probs,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn support(&self) -> &[VecD] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// `Σ p_a f(x_a)` in compensated arithmetic.
    pub fn expect(&self, mut f: impl FnMut(&VecD) -> f64) -> f64 {
        let mut acc = KahanSum::default();
        for (x, p) in self.support.iter().zip(&self.probs) {
            acc.add(p * f(x));
        }
        acc.value()
    }

    /// The law of `−X`.
    pub fn negated(&self) -> Self {
        Self { d: self.d, support: self.support.iter().map(|x| x.scale(-1.0)).collect(), probs: self.probs.clone() }
    }
}

/// Rademacher sum `Σ ε_i x_i` with independent fair signs.
#[derive(Debug, Clone, PartialEq)]
pub struct RademacherInstance {
    vectors: Vec<VecD>,
}

/// Enumeration guard: at most this many vectors.
pub const MAX_RADEMACHER: usize = 24;

impl RademacherInstance {
    pub fn new(vectors: Vec<VecD>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::InvalidArgument("a Rademacher sum needs at least one vector".into()));
        }
        if vectors.len() > MAX_RADEMACHER {
            return Err(Error::TooLarge { what: "Rademacher vectors", size: vectors.len(), limit: MAX_RADEMACHER });
        }
        let d = vectors[0].dim();
        if let Some(x) = vectors.iter().find(|x| x.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, actual: x.dim() });
        }
        if vectors.iter().any(|x| x.0.iter().any(|c| !c.is_finite())) {
            return Err(Error::NonFinite);
        }
        Ok(Self { vectors })
    }

    /// Parses `[[x11, x12], [x21, x22], ...]`.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Vec<Vec<f64>> = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("vectors at line {} column {}: {e}", e.line(), e.column())))?;
        Self::new(v.into_iter().map(VecD).collect())
    }

    pub fn vectors(&self) -> &[VecD] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].dim()
    }
}

fn check_dim(norm: &NormSpec, d: usize) -> Result<()> {
    match norm.dim() {
        Some(nd) if nd != d => Err(Error::DimensionMismatch { expected: nd, actual: d }),
        _ => Ok(()),
    }
}

/// Fixed partition count, so that the result does not depend on the pool size.
const CHUNKS: u64 = 64;
/// Recompute the running sum from scratch this often.
const RESYNC: u64 = 1 << 12;

/// `E‖Σ ε_i x_i‖^j = 2^{−n} Σ_{ε} ‖Σ ε_i x_i‖^j`.
///
/// Signs are enumerated in Gray-code order with ε_n fixed to +1 (the norm is
/// even), updating the running sum by one vector per step.
pub fn rademacher_moment(norm: &NormSpec, inst: &RademacherInstance, j: u32) -> Result<f64> {
    if j == 0 {
        return Err(Error::InvalidArgument("moment order must be positive".into()));
    }
    let d = inst.dim();
    check_dim(norm, d)?;
    let xs = &inst.vectors;
    let n = xs.len();
    let free = (n - 1) as u32;
    let total: u64 = 1 << free;
    let chunks = CHUNKS.min(total);
    let per = total / chunks;
    let partials: Vec<Result<KahanSum>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * per;
            let end = if c + 1 == chunks { total } else { start + per };
            let mut acc = KahanSum::default();
            let mut s = vec![0.0; d];
            let fill = |s: &mut Vec<f64>, g: u64| {
                let code = g ^ (g >> 1);
                s.iter_mut().for_each(|v| *v = 0.0);
                for (i, x) in xs.iter().enumerate() {
                    let sign = if i < free as usize && (code >> i) & 1 == 1 { -1.0 } else { 1.0 };
                    for (sv, xv) in s.iter_mut().zip(&x.0) {
                        *sv += sign * xv;
                    }
                }
            };
            fill(&mut s, start);
            let mut code = start ^ (start >> 1);
            for g in start..end {
                if g > start {
                    if (g - start) % RESYNC == 0 {
                        fill(&mut s, g);
                        code = g ^ (g >> 1);
                    } else {
                        let bit = g.trailing_zeros() as usize;
                        code ^= 1 << bit;
                        let sign = if (code >> bit) & 1 == 1 { -2.0 } else { 2.0 };
                        for (sv, xv) in s.iter_mut().zip(&xs[bit].0) {
                            *sv += sign * xv;
                        }
                    }
                }
                acc.add(norm.eval(&s)?.powi(j as i32));
            }
            Ok(acc)
        })
        .collect();
    let mut acc = KahanSum::default();
    for p in partials {
        acc.add(p?.value());
    }
    Ok(acc.value() / total as f64)
}

/// Pair-count guard for the double sums.
pub const MAX_PAIRS: usize = 10_000;

/// `(E‖X − Y‖, E‖X + Y‖)` for independent copies `X, Y`.
pub fn pairwise_expectations(norm: &NormSpec, dist: &DiscreteDistribution) -> Result<(f64, f64)> {
    check_dim(norm, dist.d)?;
    let pairs = dist.len() * dist.len();
    if pairs > MAX_PAIRS {
        return Err(Error::TooLarge { what: "support pairs", size: pairs, limit: MAX_PAIRS });
    }
    let mut diff = KahanSum::default();
    let mut sum = KahanSum::default();
    for (xa, pa) in dist.support.iter().zip(&dist.probs) {
        for (xb, pb) in dist.support.iter().zip(&dist.probs) {
            let w = pa * pb;
            diff.add(w * norm.eval(xa.sub(xb).as_slice())?);
            sum.add(w * norm.eval(xa.add(xb).as_slice())?);
        }
    }
    Ok((diff.value(), sum.value()))
}

/// `E|X+Y| − E|X−Y| − 2∫_0^∞ [P(X>r) − P(X<−r)]² dr` for a real `X`.
pub fn one_dim_identity_residual(dist: &DiscreteDistribution) -> Result<f64> {
    if dist.d != 1 {
        return Err(Error::DimensionMismatch { expected: 1, actual: dist.d });
    }
    let xs: Vec<f64> = dist.support.iter().map(|x| x.0[0]).collect();
    let ps = &dist.probs;
    let mut plus = KahanSum::default();
    let mut minus = KahanSum::default();
    for (a, pa) in xs.iter().zip(ps) {
        for (b, pb) in xs.iter().zip(ps) {
            plus.add(pa * pb * (a + b).abs());
            minus.add(pa * pb * (a - b).abs());
        }
    }
    // the bracket is constant between consecutive |x_a|
    let mut cuts: Vec<f64> = std::iter::once(0.0).chain(xs.iter().map(|x| x.abs())).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut integral = KahanSum::default();
    for w in cuts.windows(2) {
        let r = 0.5 * (w[0] + w[1]);
        let mut above = KahanSum::default();
        for (x, p) in xs.iter().zip(ps) {
            if *x > r {
                above.add(*p);
            } else if *x < -r {
                above.add(-*p);
            }
        }
        let b = above.value();
        integral.add((w[1] - w[0]) * b * b);
    }
    Ok(plus.value() - minus.value() - 2.0 * integral.value())
}

/// A distribution with exact rational support and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalDistribution {
    pub support: Vec<Vec<Rational64>>,
    pub probs: Vec<Rational64>,
}

impl RationalDistribution {
    pub fn new(support: Vec<Vec<Rational64>>, probs: Vec<Rational64>) -> Result<Self> {
        if support.is_empty() || support.len() != probs.len() {
            return Err(Error::InvalidDistribution("support and probabilities must be nonempty and of equal length".into()));
        }
        let total: Rational64 = probs.iter().copied().sum();
        if total != Rational64::from_integer(1) || probs.iter().any(|p| !p.is_positive()) {
            return Err(Error::InvalidDistribution("rational probabilities must be positive and sum to 1".into()));
        }
        Ok(Self { support, probs })
    }
}

/// Exact `(E‖X − Y‖, E‖X + Y‖)` for a rational-valued norm.
pub fn pairwise_expectations_exact(
    norm: impl Fn(&[Rational64]) -> Rational64,
    dist: &RationalDistribution,
) -> (Rational64, Rational64) {
    let mut diff = Rational64::zero();
    let mut sum = Rational64::zero();
    for (xa, pa) in dist.support.iter().zip(&dist.probs) {
        for (xb, pb) in dist.support.iter().zip(&dist.probs) {
            let minus: Vec<Rational64> = xa.iter().zip(xb).map(|(a, b)| a - b).collect();
            let plus: Vec<Rational64> = xa.iter().zip(xb).map(|(a, b)| a + b).collect();
            diff += pa * pb * norm(&minus);
            sum += pa * pb * norm(&plus);
        }
    }
    (diff, sum)
}

/// `max_{i,j} max(|x_i|, |x_i − x_j|)` in exact arithmetic.
pub fn johnson_norm_exact(x: &[Rational64]) -> Rational64 {
    let mut m = Rational64::zero();
    for (i, a) in x.iter().enumerate() {
        m = m.max(a.abs());
        for b in &x[i + 1..] {
            m = m.max((a - b).abs());
        }
    }
    m
}
