//! Hlawka's inequality, the Khinchin–Kahane chain with its improved middle
//! bound, and `E‖X − Y‖ ≤ E‖X + Y‖` together with Johnson's
//! counterexamples in higher dimension.

use num_rational::Rational64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::{functional_pushforward, measure_from_profile, RepresentingMeasure};
use crate::norm_model::{Functional2, NormSpec, Vec2, VecD};
use crate::profile::{profile_from_norm, ProfileOptions};
use crate::quadrature::QuadratureOptions;
use crate::rand_vectors::{
    johnson_norm_exact, pairwise_expectations, pairwise_expectations_exact, rademacher_moment, DiscreteDistribution,
    RademacherInstance, RationalDistribution,
};

#[derive(Debug, Clone)]
pub struct HlawkaReport {
    /// `‖x+y+z‖ + ‖x‖ + ‖y‖ + ‖z‖ − ‖x+y‖ − ‖y+z‖ − ‖z+x‖`.
    pub margin: f64,
    pub triple: [VecD; 3],
    pub norm: NormSpec,
}

pub fn hlawka_margin(norm: &NormSpec, x: &VecD, y: &VecD, z: &VecD) -> Result<HlawkaReport> {
    if x.dim() != y.dim() || x.dim() != z.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), actual: if x.dim() != y.dim() { y.dim() } else { z.dim() } });
    }
    let n = |w: &VecD| norm.eval(w.as_slice());
    let margin = n(&x.add(y).add(z))? + n(x)? + n(y)? + n(z)? - n(&x.add(y))? - n(&y.add(z))? - n(&z.add(x))?;
    Ok(HlawkaReport { margin, triple: [x.clone(), y.clone(), z.clone()], norm: norm.clone() })
}

/// Cap on distinct norm evaluations in a lattice search.
pub const MAX_HLAWKA_EVALUATIONS: usize = 10_000_000;
/// Cap on enumerated triples.
pub const MAX_HLAWKA_TRIPLES: usize = 100_000_000;

/// Violations must be below this to count.
pub const HLAWKA_STRICT: f64 = -1e-9;

/// Exhaustive search over triples with integer components in `{−r, …, r}`.
///
/// Norms of all lattice sums in `{−3r, …, 3r}^d` are tabulated once. Returns
/// the most negative margin (smallest triple index on ties) if it is a strict
/// violation.
pub fn hlawka_search(norm: &NormSpec, d: usize, r: usize) -> Result<Option<HlawkaReport>> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("lattice dimension {d} must be at least 2")));
    }
    if let Some(nd) = norm.dim() {
        if nd != d {
            return Err(Error::DimensionMismatch { expected: nd, actual: d });
        }
    }
    let side = 2 * r + 1;
    let big = 6 * r + 1;
    let too_large = |what, size: Option<usize>, limit| Error::TooLarge { what, size: size.unwrap_or(usize::MAX), limit };
    let table_len = big.checked_pow(d as u32).filter(|s| *s <= MAX_HLAWKA_EVALUATIONS);
    let table_len = table_len.ok_or_else(|| too_large("norm evaluations", big.checked_pow(d as u32), MAX_HLAWKA_EVALUATIONS))?;
    let points = side.pow(d as u32);
    let triples = points.checked_pow(3).filter(|t| *t <= MAX_HLAWKA_TRIPLES);
    triples.ok_or_else(|| too_large("lattice triples", points.checked_pow(3), MAX_HLAWKA_TRIPLES))?;

    let offset = 3 * r as i64;
    let coords = |mut idx: usize, base: usize, shift: i64| -> Vec<i64> {
        (0..d)
            .map(|_| {
                let c = (idx % base) as i64 - shift;
                idx /= base;
                c
            })
            .collect()
    };
    let table: Vec<f64> = (0..table_len)
        .into_par_iter()
        .map(|i| {
            let x: Vec<f64> = coords(i, big, offset).into_iter().map(|c| c as f64).collect();
            norm.eval(&x)
        })
        .collect::<Result<_>>()?;
    let lattice: Vec<Vec<i64>> = (0..points).map(|i| coords(i, side, r as i64)).collect();
    let lookup = |parts: &[&Vec<i64>]| -> f64 {
        let mut idx = 0usize;
        for axis in (0..d).rev() {
            let c: i64 = parts.iter().map(|p| p[axis]).sum();
            idx = idx * big + (c + offset) as usize;
        }
        table[idx]
    };

    let best = (0..points)
        .into_par_iter()
        .map(|a| {
            let x = &lattice[a];
            let mut best = (f64::INFINITY, usize::MAX);
            for b in 0..points {
                let y = &lattice[b];
                for c in 0..points {
                    let z = &lattice[c];
                    let m = lookup(&[x, y, z]) + lookup(&[x]) + lookup(&[y]) + lookup(&[z])
                        - lookup(&[x, y])
                        - lookup(&[y, z])
                        - lookup(&[z, x]);
                    if m < best.0 {
                        best = (m, (a * points + b) * points + c);
                    }
                }
            }
            best
        })
        .reduce(|| (f64::INFINITY, usize::MAX), |p, q| if q.0 < p.0 || (q.0 == p.0 && q.1 < p.1) { q } else { p });

    if best.0 >= HLAWKA_STRICT {
        return Ok(None);
    }
    let to_vec = |i: usize| VecD(lattice[i].iter().map(|c| *c as f64).collect());
    let (x, y, z) = (to_vec(best.1 / (points * points)), to_vec(best.1 / points % points), to_vec(best.1 % points));
    // recompute directly rather than from the table so the report is self-contained
    hlawka_margin(norm, &x, &y, &z).map(Some)
}

/// `2(E‖S‖)² ≥ B ≥ E‖S‖²` for a Rademacher sum `S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KhinchinChain {
    pub two_e_sq: f64,
    pub improved_bound: f64,
    pub second_moment: f64,
    /// Quadrature error estimate carried by `improved_bound`.
    pub bound_error: f64,
}

impl KhinchinChain {
    pub fn holds(&self, slack: f64) -> bool {
        self.two_e_sq + slack >= self.improved_bound && self.improved_bound + slack >= self.second_moment
    }
}

pub fn khinchin_chain(spec: &NormSpec, inst: &RademacherInstance, opts: &QuadratureOptions) -> Result<KhinchinChain> {
    let profile = profile_from_norm(spec, &ProfileOptions::default())?;
    let m = measure_from_profile(&profile)?;
    khinchin_chain_with(&m, spec, inst, opts)
}

/// As [`khinchin_chain`] with a prebuilt measure for `spec`.
pub fn khinchin_chain_with(
    m: &RepresentingMeasure,
    spec: &NormSpec,
    inst: &RademacherInstance,
    opts: &QuadratureOptions,
) -> Result<KhinchinChain> {
    if inst.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, actual: inst.dim() });
    }
    let first = rademacher_moment(spec, inst, 1)?;
    let second = rademacher_moment(spec, inst, 2)?;
    let xs: Vec<Vec2> = inst.vectors().iter().map(|x| Vec2::new(x.0[0], x.0[1])).collect();
    let kinks: Vec<f64> = xs.iter().filter(|x| x.v != 0.0).map(|x| x.u / x.v).collect();
    let g = {
        let xs = xs.clone();
        move |l: Functional2| xs.iter().map(|x| l.apply(*x).powi(2)).sum::<f64>().sqrt()
    };
    let b = functional_pushforward(m, g, &kinks, opts)?;
    let root = b.require(opts)?;
    Ok(KhinchinChain {
        two_e_sq: 2.0 * first * first,
        improved_bound: root * root,
        second_moment: second,
        bound_error: 2.0 * root.abs() * b.abs_error,
    })
}

/// `E‖X + Y‖ − E‖X − Y‖` for a planar norm.
pub fn buja_margin(norm: &NormSpec, dist: &DiscreteDistribution) -> Result<f64> {
    if dist.dim() != 2 || !norm.is_planar() {
        return Err(Error::InvalidArgument("the margin is defined for planar norms and distributions".into()));
    }
    let (diff, sum) = pairwise_expectations(norm, dist)?;
    Ok(sum - diff)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JohnsonRow {
    pub d: usize,
    pub e_diff: Rational64,
    pub e_sum: Rational64,
}

/// Exact `E‖X ∓ Y‖` under the Johnson norm for the `d`-dimensional example.
pub fn johnson_counterexample(d: usize) -> Result<JohnsonRow> {
    let r = Rational64::from_integer;
    let basis = |i: usize| (0..d).map(|j| if i == j { r(1) } else { r(0) }).collect::<Vec<_>>();
    let dist = match d {
        3 => RationalDistribution::new(
            vec![basis(0), basis(1), basis(2), vec![Rational64::new(-1, 2); 3]],
            vec![Rational64::new(1, 4); 4],
        )?,
        4..=6 => RationalDistribution::new((0..d).map(basis).collect(), vec![Rational64::new(1, d as i64); d])?,
        _ => return Err(Error::InvalidArgument(format!("counterexamples are tabulated for d in 3..=6, not {d}"))),
    };
    let (e_diff, e_sum) = pairwise_expectations_exact(johnson_norm_exact, &dist);
    Ok(JohnsonRow { d, e_diff, e_sum })
}

pub fn johnson_counterexamples() -> Vec<JohnsonRow> {
    (3..=6).map(|d| johnson_counterexample(d).expect("tabulated dimension")).collect()
}
