//! Moments of `‖X‖` from the characteristic function of `X`:
//!
//! `E‖X‖ = (2/π) ∫ μ(dℓ) ∫_0^∞ (1 − Re E e^{itXℓ}) dt/t²`,
//!
//! its `j`-fold analogue for `E‖X‖^j`, and the disjoint-subset expansion of
//! `∏(1 − cos θ_α)`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_2_PI, PI};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measure::{functional_pushforward, RepresentingMeasure};
use crate::norm_model::{Functional2, VecD};
use crate::quadrature::{integrate, QuadratureOptions};
use crate::rand_vectors::{DiscreteDistribution, KahanSum};
use crate::special::one_minus_cos_tail;

/// `φ(ℓ) = Σ_a p_a exp(i x_a ℓ)` for a finitely supported planar `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharFn {
    dist: DiscreteDistribution,
}

impl CharFn {
    pub fn new(dist: DiscreteDistribution) -> Result<Self> {
        if dist.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, actual: dist.dim() });
        }
        Ok(Self { dist })
    }

    pub fn dist(&self) -> &DiscreteDistribution {
        &self.dist
    }

    fn projections(&self, l: Functional2) -> Vec<(f64, f64)> {
        self.dist.support().iter().zip(self.dist.probs()).map(|(x, p)| (l.a * x.0[0] + l.b * x.0[1], *p)).collect()
    }

    pub fn eval(&self, l: Functional2) -> Complex64 {
        let (mut re, mut im) = (KahanSum::default(), KahanSum::default());
        for (w, p) in self.projections(l) {
            re.add(p * w.cos());
            im.add(p * w.sin());
        }
        Complex64::new(re.value(), im.value())
    }

    /// `1 − Re φ(tℓ)`, evaluated as `Σ p 2 sin²(t w/2)` to avoid cancellation.
    pub fn one_minus_re(&self, l: Functional2, t: f64) -> f64 {
        one_minus_re(&self.projections(l), t)
    }
}

fn one_minus_re(proj: &[(f64, f64)], t: f64) -> f64 {
    let mut acc = KahanSum::default();
    for &(w, p) in proj {
        let s = (0.5 * t * w).sin();
        acc.add(2.0 * p * s * s);
    }
    acc.value()
}

/// Oscillation periods of the fastest projection integrated numerically
/// before switching to the closed-form tail.
const INNER_PERIODS: usize = 10;

struct InnerFlags {
    out_of_range: AtomicBool,
    unconverged: AtomicBool,
}

/// `∫_0^∞ (1 − Re φ(tℓ))/t² dt`.
///
/// `[0, T]` is integrated numerically, with the removable singularity at 0
/// replaced by its limit `½ E(Xℓ)²`; the remainder is
/// `Σ p |w| ∫_{|w|T}^∞ (1 − cos s)/s² ds`.
fn inner_integral(proj: &[(f64, f64)], opts: &QuadratureOptions, flags: &InnerFlags) -> f64 {
    let wmax = proj.iter().map(|(w, _)| w.abs()).fold(0.0, f64::max);
    if wmax == 0.0 {
        return 0.0;
    }
    let period = 2.0 * PI / wmax;
    let t_end = INNER_PERIODS as f64 * period;
    let limit0 = 0.5 * proj.iter().map(|(w, p)| p * w * w).sum::<f64>();
    let f = |t: f64| {
        if t == 0.0 {
            return limit0;
        }
        let num = one_minus_re(proj, t);
        if !(0.0..=2.0 + 1e-12).contains(&num) {
            flags.out_of_range.store(true, Ordering::Relaxed);
        }
        num / (t * t)
    };
    let cuts: Vec<f64> = (1..INNER_PERIODS).map(|i| i as f64 * period).collect();
    let body = integrate(f, 0.0, t_end, &cuts, opts);
    if !body.converged {
        flags.unconverged.store(true, Ordering::Relaxed);
    }
    let mut tail = KahanSum::default();
    for &(w, p) in proj {
        if w != 0.0 {
            tail.add(p * w.abs() * one_minus_cos_tail(w.abs() * t_end));
        }
    }
    body.value + tail.value()
}

fn inner_options(opts: &QuadratureOptions) -> QuadratureOptions {
    QuadratureOptions { abs_tol: (opts.abs_tol * 1e-3).max(1e-16), rel_tol: (opts.rel_tol * 1e-3).max(1e-14), ..*opts }
}

/// `E‖X‖` through the characteristic function and the representing measure.
pub fn expected_norm_via_cf(m: &RepresentingMeasure, cf: &CharFn, opts: &QuadratureOptions) -> Result<f64> {
    opts.validate()?;
    let support: Arc<Vec<VecD>> = Arc::new(cf.dist.support().to_vec());
    let probs: Arc<Vec<f64>> = Arc::new(cf.dist.probs().to_vec());
    let kinks: Vec<f64> = support.iter().filter(|x| x.0[1] != 0.0).map(|x| x.0[0] / x.0[1]).collect();
    let flags = Arc::new(InnerFlags { out_of_range: AtomicBool::new(false), unconverged: AtomicBool::new(false) });
    let inner_opts = inner_options(opts);
    let g = {
        let flags = Arc::clone(&flags);
        move |l: Functional2| {
            let proj: Vec<(f64, f64)> =
                support.iter().zip(probs.iter()).map(|(x, p)| (l.a * x.0[0] + l.b * x.0[1], *p)).collect();
            inner_integral(&proj, &inner_opts, &flags)
        }
    };
    let outer = functional_pushforward(m, g, &kinks, opts)?;
    if flags.out_of_range.load(Ordering::Relaxed) {
        return Err(Error::InvalidArgument("1 − Re φ left [0, 2] during integration".into()));
    }
    if flags.unconverged.load(Ordering::Relaxed) {
        return Err(Error::Quadrature { achieved: f64::NAN, requested: inner_opts.abs_tol });
    }
    Ok(FRAC_2_PI * outer.require(opts)?)
}

/// `E‖X‖^j` for `j ≤ 3`.
///
/// On a finite support the `j`-fold integrand `E ∏_α (1 − cos(t_α Xℓ_α))`
/// is `Σ_a p_a ∏_α (1 − cos(t_α x_a ℓ_α))`, so the `j`-fold integral is
/// `Σ_a p_a I_a^j` where `I_a` is the single-axis integral for the point mass
/// at `x_a`.
pub fn moment_via_cf(m: &RepresentingMeasure, cf: &CharFn, j: u32, opts: &QuadratureOptions) -> Result<f64> {
    match j {
        1 => expected_norm_via_cf(m, cf, opts),
        2 | 3 => {
            let mut acc = KahanSum::default();
            for (x, p) in cf.dist.support().iter().zip(cf.dist.probs()) {
                let point = CharFn { dist: DiscreteDistribution::point_mass(x.clone()) };
                acc.add(p * expected_norm_via_cf(m, &point, opts)?.powi(j as i32));
            }
            Ok(acc.value())
        }
        _ => Err(Error::InvalidArgument(format!("moment order {j} outside 1..=3"))),
    }
}

/// The expansion and the product it must equal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbExpansion {
    /// `Σ_{(A,B)} (−½)^{|A∪B|} cos(Σ_A θ − Σ_B θ)` over disjoint `A, B`.
    pub expansion: f64,
    /// `∏ (1 − cos θ_α)`.
    pub product: f64,
}

impl AbExpansion {
    pub fn residual(&self) -> f64 {
        (self.expansion - self.product).abs()
    }
}

pub const MAX_AB_ORDER: usize = 12;

pub fn ab_expansion(thetas: &[f64]) -> Result<AbExpansion> {
    let j = thetas.len();
    if j > MAX_AB_ORDER {
        return Err(Error::TooLarge { what: "expansion order", size: j, limit: MAX_AB_ORDER });
    }
    let mut acc = KahanSum::default();
    // each index is in A (digit 1), in B (digit 2) or in neither
    for code in 0..3usize.pow(j as u32) {
        let (mut c, mut phase, mut size) = (code, 0.0, 0);
        for theta in thetas {
            match c % 3 {
                1 => {
                    phase += theta;
                    size += 1;
                }
                2 => {
                    phase -= theta;
                    size += 1;
                }
                _ => {}
            }
            c /= 3;
        }
        acc.add((-0.5f64).powi(size) * phase.cos());
    }
    let product = thetas.iter().map(|t| 2.0 * (0.5 * t).sin().powi(2)).product();
    Ok(AbExpansion { expansion: acc.value(), product })
}

pub const MAX_SUM_SUPPORT: usize = 10_000;

/// Characteristic function of the sum of independent vectors: the
/// convolution of their laws, with coinciding sums merged.
pub fn cf_of_sum(cfs: &[CharFn]) -> Result<CharFn> {
    let (first, rest) = cfs.split_first().ok_or_else(|| Error::InvalidArgument("empty list of characteristic functions".into()))?;
    let mut points: Vec<(VecD, f64)> = first.dist.support().iter().cloned().zip(first.dist.probs().iter().copied()).collect();
    for cf in rest {
        let size = points.len() * cf.dist.len();
        if size > MAX_SUM_SUPPORT {
            return Err(Error::TooLarge { what: "convolution support", size, limit: MAX_SUM_SUPPORT });
        }
        let mut merged: BTreeMap<[u64; 2], (VecD, f64)> = BTreeMap::new();
        for (x, p) in &points {
            for (y, q) in cf.dist.support().iter().zip(cf.dist.probs()) {
                let s = x.add(y);
                // +0.0 so that −0 and 0 coincide
                let key = [(s.0[0] + 0.0).to_bits(), (s.0[1] + 0.0).to_bits()];
                merged.entry(key).or_insert_with(|| (s, 0.0)).1 += p * q;
            }
        }
        points = merged.into_values().collect();
    }
    let (support, probs): (Vec<VecD>, Vec<f64>) = points.into_iter().unzip();
    CharFn::new(DiscreteDistribution::new(support, probs)?)
}
