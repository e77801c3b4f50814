//! The representing measure of a planar norm: atoms at the jumps of `N′`, an
//! absolutely continuous part, and the constant `c`.
//!
//! Masses are stored for the raw Stieltjes measure `dN′`. The factor ½ of the
//! decomposition lives in the consumers ([`functional_pushforward`] and the
//! `decompose` module).

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::norm_model::{Functional2, NormSpec};
use crate::profile::{power_slope, ConvexProfile, Shape};
use crate::quadrature::{stieltjes_integrate, QuadResult, QuadratureOptions};
use crate::special::{gauss_hermite_normal, normal_rule_half_range};

/// A point mass of `dN′`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub t: f64,
    pub mass: f64,
    /// Lumps the mass of `dN′` beyond a truncation window (numeric and
    /// tabulated measures only); not a jump of `N′`.
    pub lumped: bool,
}

impl Atom {
    pub fn new(t: f64, mass: f64) -> Self {
        Self { t, mass, lumped: false }
    }
}

#[derive(Debug, Clone)]
enum DensityKind {
    /// `scale · (p−1)|t|^{p−2}(|t|^p+1)^{1/p−2}`.
    Power { p: f64, scale: f64 },
    /// Derivative of piecewise-cubic `N′` pieces; zero between pieces.
    Tabulated(Vec<MonotoneCubic>),
}

/// Absolutely continuous part of `dN′`.
#[derive(Debug, Clone)]
pub struct Density {
    kind: DensityKind,
    support: (f64, f64),
    singular: Vec<(f64, f64)>,
    breakpoints: Vec<f64>,
    tail_decay: Option<f64>,
}

impl Density {
    fn power(p: f64, scale: f64) -> Self {
        Self {
            kind: DensityKind::Power { p, scale },
            support: (f64::NEG_INFINITY, f64::INFINITY),
            singular: vec![(0.0, p - 2.0)],
            breakpoints: vec![],
            tail_decay: Some(p + 1.0),
        }
    }

    fn tabulated(pieces: Vec<MonotoneCubic>) -> Self {
        let lo = pieces.first().map_or(0.0, |p| p.lo());
        let hi = pieces.last().map_or(0.0, |p| p.hi());
        let breakpoints = pieces.iter().flat_map(|p| p.nodes().iter().copied()).collect();
        Self { kind: DensityKind::Tabulated(pieces), support: (lo, hi), singular: vec![], breakpoints, tail_decay: None }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            DensityKind::Power { p, scale } => scale * lp_density_unchecked(*p, t),
            DensityKind::Tabulated(pieces) => piece_at(pieces, t).map_or(0.0, |pc| pc.derivative(t).max(0.0)),
        }
    }

    /// `N′(t)` up to an additive constant on each piece; exact for the
    /// closed-form case.
    fn cumulative(&self, t: f64) -> f64 {
        match &self.kind {
            DensityKind::Power { p, scale } => scale * power_slope(*p, t),
            DensityKind::Tabulated(pieces) => piece_at(pieces, t).map_or(0.0, |pc| pc.eval(t)),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// Points where the density behaves like `|t − t0|^alpha`, as `(t0, alpha)`.
    pub fn singular_points(&self) -> &[(f64, f64)] {
        &self.singular
    }

    /// Points where the density is not smooth.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Decay exponent `q` with density `≈ |t|^{−q}` at infinity.
    pub fn tail_decay(&self) -> Option<f64> {
        self.tail_decay
    }
}

fn piece_at(pieces: &[MonotoneCubic], t: f64) -> Option<&MonotoneCubic> {
    let i = pieces.partition_point(|p| p.lo() <= t);
    if i == 0 {
        return None;
    }
    let pc = &pieces[i - 1];
    (t <= pc.hi()).then_some(pc)
}

/// Atoms, density, `c` and `k` of a planar norm.
#[derive(Debug, Clone)]
pub struct RepresentingMeasure {
    atoms: Vec<Atom>,
    density: Option<Density>,
    c: f64,
    k: f64,
    vertical: f64,
    source: Option<NormSpec>,
}

impl RepresentingMeasure {
    /// All point masses, including lumped tail masses, sorted by location.
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Atoms that are genuine jumps of `N′`.
    pub fn jump_atoms(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter().filter(|a| !a.lumped)
    }

    pub fn density(&self) -> Option<&Density> {
        self.density.as_ref()
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// `‖(0, 1)‖`.
    pub fn vertical(&self) -> f64 {
        self.vertical
    }

    /// The norm the measure was built from; `None` for imported tables.
    pub fn source(&self) -> Option<&NormSpec> {
        self.source.as_ref()
    }

    pub fn is_atomic(&self) -> bool {
        self.density.is_none()
    }
}

/// Density of `dN′` for the ℓ_p norm, `1 < p < ∞`.
pub fn lp_density(p: f64, t: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("the ℓ_p density needs 1 < p < ∞, got p = {p}")));
    }
    Ok(lp_density_unchecked(p, t))
}

fn lp_density_unchecked(p: f64, t: f64) -> f64 {
    let a = t.abs();
    if a <= 1.0 {
        (p - 1.0) * a.powf(p - 2.0) * (a.powf(p) + 1.0).powf(1.0 / p - 2.0)
    } else {
        // |t|^{p−2} · |t|^{1−2p} (1 + |t|^{−p})^{1/p−2}
        (p - 1.0) * a.powf(-p - 1.0) * (1.0 + a.powf(-p)).powf(1.0 / p - 2.0)
    }
}

/// Builds the representing measure from a profile.
pub fn measure_from_profile(profile: &ConvexProfile) -> Result<RepresentingMeasure> {
    let (atoms, density) = match profile.shape() {
        Shape::Envelope(env) => {
            let atoms = env
                .breaks()
                .iter()
                .zip(env.slopes().windows(2))
                .filter(|(_, w)| w[1] > w[0])
                .map(|(&t, w)| Atom::new(t, w[1] - w[0]))
                .collect();
            (atoms, None)
        }
        Shape::Power { p, scale } => (vec![], Some(Density::power(*p, *scale))),
        Shape::Numeric(table) => {
            let pieces = table.segments.clone();
            let mut atoms = Vec::new();
            for w in pieces.windows(2) {
                let left = *w[0].values().last().unwrap();
                let right = w[1].values()[0];
                let t = table
                    .kinks
                    .iter()
                    .map(|k| k.t)
                    .find(|&t| t > w[0].hi() && t < w[1].lo())
                    .unwrap_or(0.5 * (w[0].hi() + w[1].lo()));
                if right - left < -1e-8 * profile.k() {
                    return Err(Error::NonConvex(format!("negative jump at t = {t}")));
                }
                if right > left {
                    atoms.push(Atom::new(t, right - left));
                }
            }
            let k = profile.k();
            let (lo, hi) = (pieces[0].lo(), pieces.last().unwrap().hi());
            let y_lo = pieces[0].values()[0];
            let y_hi = *pieces.last().unwrap().values().last().unwrap();
            let right_mass = k - y_hi;
            let right_moment = profile.n(hi) - hi * y_hi - profile.d_plus();
            if right_mass > 0.0 && right_moment > 0.0 {
                atoms.push(Atom { t: (right_moment / right_mass).max(hi), mass: right_mass, lumped: true });
            }
            let left_mass = y_lo + k;
            let left_moment = profile.n(lo) - lo * y_lo - profile.d_minus();
            if left_mass > 0.0 && left_moment > 0.0 {
                atoms.insert(0, Atom { t: (-left_moment / left_mass).min(lo), mass: left_mass, lumped: true });
            }
            (atoms, Some(Density::tabulated(pieces)))
        }
    };
    Ok(RepresentingMeasure {
        atoms,
        density,
        c: profile.c(),
        k: profile.k(),
        vertical: profile.vertical(),
        source: Some(profile.norm().clone()),
    })
}

/// Residuals of the two mass identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassReport {
    pub total_mass: f64,
    pub first_moment: f64,
    pub total_mass_residual: f64,
    pub first_moment_residual: f64,
}

/// `|∫dN′ − 2k|` and `|∫|t| dN′ − (2‖(0,1)‖ − c)|`.
pub fn mass_checks(m: &RepresentingMeasure, opts: &QuadratureOptions) -> Result<MassReport> {
    let total = stieltjes_integrate(m, |_| 1.0, &[], opts)?.value;
    let first = stieltjes_integrate(m, f64::abs, &[0.0], opts)?.value;
    Ok(MassReport {
        total_mass: total,
        first_moment: first,
        total_mass_residual: (total - 2.0 * m.k).abs(),
        first_moment_residual: (first - (2.0 * m.vertical - m.c)).abs(),
    })
}

/// `∫ g dμ = ½[c·g((0,1)) + ∫ g((1,−t)) dN′(t)]`.
pub fn functional_pushforward<G>(m: &RepresentingMeasure, g: G, g_kinks_in_t: &[f64], opts: &QuadratureOptions) -> Result<QuadResult>
where
    G: Fn(Functional2) -> f64 + Clone + Sync,
{
    let vertical = if m.c > 0.0 { m.c * g(Functional2::VERTICAL) } else { 0.0 };
    let g2 = g.clone();
    let mut r = stieltjes_integrate(m, move |t| g2(Functional2::slanted(t)), g_kinks_in_t, opts)?;
    r.value = 0.5 * (vertical + r.value);
    r.abs_error *= 0.5;
    Ok(r)
}

/// Default truncation window, in units of the profile scale, for exporting
/// closed-form densities.
const EXPORT_WINDOW: f64 = 1e4;
const EXPORT_INNER: f64 = 1e-8;
const EXPORT_RATIO: f64 = 1.02;

impl RepresentingMeasure {
    /// CSV export. Rows are `atom,t,mass,`, `tail,t,mass,` (lumped
    /// truncation mass) and `density,t,rho,Nprime`; a comment header carries
    /// `c`, `k` and `‖(0,1)‖`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# c={},k={},vertical={}", self.c, self.k, self.vertical);
        out.push_str("kind,t,value,cumulative\n");
        let mut rows: Vec<(f64, String)> = Vec::new();
        for a in &self.atoms {
            let kind = if a.lumped { "tail" } else { "atom" };
            rows.push((a.t, format!("{kind},{},{},", a.t, a.mass)));
        }
        if let Some(d) = &self.density {
            match &d.kind {
                DensityKind::Power { p, scale } => {
                    let sigma = self.vertical / self.k;
                    let mut nodes = vec![0.0];
                    let mut t = EXPORT_INNER * sigma;
                    while t < EXPORT_WINDOW * sigma {
                        nodes.push(t);
                        nodes.push(-t);
                        t *= EXPORT_RATIO;
                    }
                    let big_t = t;
                    nodes.push(big_t);
                    nodes.push(-big_t);
                    nodes.sort_by(f64::total_cmp);
                    for &x in &nodes {
                        rows.push((x, format!("density,{},{},{}", x, d.eval(x), d.cumulative(x))));
                    }
                    // the two truncated tails, lumped at their centres of mass
                    let n = |u: f64| scale * (u.abs().powf(*p) + 1.0).powf(1.0 / p);
                    let y_hi = d.cumulative(big_t);
                    let mass = self.k - y_hi;
                    let moment = n(big_t) - big_t * y_hi;
                    if mass > 0.0 && moment > 0.0 {
                        let at = (moment / mass).max(big_t);
                        rows.push((at, format!("tail,{},{},", at, mass)));
                        rows.push((-at, format!("tail,{},{},", -at, mass)));
                    }
                }
                DensityKind::Tabulated(pieces) => {
                    for pc in pieces {
                        for ((x, y), s) in pc.nodes().iter().zip(pc.values()).zip(pc.slopes()) {
                            rows.push((*x, format!("density,{},{},{}", x, s, y)));
                        }
                    }
                }
            }
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (_, r) in rows {
            out.push_str(&r);
            out.push('\n');
        }
        out
    }

    /// Rebuilds a tabulated measure from [`RepresentingMeasure::to_csv`] output.
    /// Density samples become a cubic Hermite reconstruction of `N′`; a new
    /// piece starts after every atom.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut c = None;
        let mut k = None;
        let mut vertical = None;
        let mut atoms = Vec::new();
        let mut pieces: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = vec![(vec![], vec![], vec![])];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            let bad = |msg: &str| Error::Parse(format!("line {}: {msg}", lineno + 1));
            if line.is_empty() || line.starts_with("kind,") {
                continue;
            }
            if let Some(h) = line.strip_prefix('#') {
                for kv in h.split(',') {
                    let Some((key, val)) = kv.trim().split_once('=') else { continue };
                    let v: f64 = val.trim().parse().map_err(|_| bad("bad header value"))?;
                    match key.trim() {
                        "c" => c = Some(v),
                        "k" => k = Some(v),
                        "vertical" => vertical = Some(v),
                        _ => {}
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() < 3 {
                return Err(bad("expected at least three fields"));
            }
            let num = |s: &str| -> Result<f64> { s.trim().parse::<f64>().map_err(|_| bad(&format!("bad number {s:?}"))) };
            let t = num(fields[1])?;
            let val = num(fields[2])?;
            match fields[0] {
                "atom" | "tail" => {
                    if !(val > 0.0) {
                        return Err(bad("atom mass must be positive"));
                    }
                    atoms.push(Atom { t, mass: val, lumped: fields[0] == "tail" });
                    if fields[0] == "atom" && !pieces.last().unwrap().0.is_empty() {
                        pieces.push((vec![], vec![], vec![]));
                    }
                }
                "density" => {
                    let cum = num(fields.get(3).ok_or_else(|| bad("density row needs a cumulative value"))?)?;
                    let pc = pieces.last_mut().unwrap();
                    if pc.0.last().is_some_and(|&x| x >= t) {
                        return Err(bad("density abscissae must increase"));
                    }
                    pc.0.push(t);
                    pc.1.push(cum);
                    pc.2.push(val);
                }
                other => return Err(bad(&format!("unknown row kind {other:?}"))),
            }
        }
        let (Some(c), Some(k), Some(vertical)) = (c, k, vertical) else {
            return Err(Error::Parse("missing '# c=..,k=..,vertical=..' header".into()));
        };
        let mut built = Vec::new();
        for (xs, ys, mut ds) in pieces {
            if xs.len() < 2 {
                continue;
            }
            let n = xs.len();
            for i in 0..n {
                if !ds[i].is_finite() {
                    let j = if i + 1 < n { i + 1 } else { i - 1 };
                    ds[i] = ((ys[j] - ys[i]) / (xs[j] - xs[i])).max(0.0);
                }
            }
            built.push(MonotoneCubic::from_slopes(xs, ys, ds));
        }
        atoms.sort_by(|a, b| a.t.total_cmp(&b.t));
        Ok(Self {
            atoms,
            density: (!built.is_empty()).then(|| Density::tabulated(built)),
            c,
            k,
            vertical,
            source: None,
        })
    }

    /// The measure of `λ‖·‖`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument("scale factor must be positive".into()));
        }
        let density = self.density.clone().map(|mut d| {
            d.kind = match d.kind {
                DensityKind::Power { p, scale } => DensityKind::Power { p, scale: scale * lambda },
                DensityKind::Tabulated(pieces) => DensityKind::Tabulated(
                    pieces
                        .into_iter()
                        .map(|pc| {
                            let xs = pc.nodes().to_vec();
                            let ys = pc.values().iter().map(|y| y * lambda).collect();
                            let ds = pc.slopes().iter().map(|s| s * lambda).collect();
                            MonotoneCubic::from_slopes(xs, ys, ds)
                        })
                        .collect(),
                ),
            };
            d
        });
        Ok(Self {
            atoms: self.atoms.iter().map(|a| Atom { mass: a.mass * lambda, ..*a }).collect(),
            density,
            c: self.c * lambda,
            k: self.k * lambda,
            vertical: self.vertical * lambda,
            source: self.source.as_ref().map(|s| s.clone().scaled(lambda)).transpose()?,
        })
    }
}

/// `|√(π/2)·E|x·Z| − ‖x‖₂|` for a standard Gaussian `Z` in ℝ^d, `d ≤ 3`.
///
/// The reference path is a tensor rule in an orthonormal frame whose first
/// axis is `x/‖x‖₂`: a half-range Hermite rule across the kink of `|·|`
/// and Gauss–Hermite rules on the remaining axes.
pub fn euclidean_identity_residual(x: &[f64], hermite_order: usize) -> Result<f64> {
    Ok((euclidean_identity_value(x, hermite_order, false)? - euclid(x)).abs())
}

/// The 1-D reduction `‖x‖₂·√(π/2)·E|Z|`.
pub fn euclidean_identity_residual_fast(x: &[f64], hermite_order: usize) -> Result<f64> {
    Ok((euclidean_identity_value(x, hermite_order, true)? - euclid(x)).abs())
}

fn euclid(x: &[f64]) -> f64 {
    let s = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if s == 0.0 {
        return 0.0;
    }
    s * x.iter().map(|v| (v / s).powi(2)).sum::<f64>().sqrt()
}

pub fn euclidean_identity_value(x: &[f64], hermite_order: usize, fast: bool) -> Result<f64> {
    let d = x.len();
    if !(1..=3).contains(&d) {
        return Err(Error::TooLarge { what: "Gaussian identity dimension", size: d, limit: 3 });
    }
    if hermite_order < 10 {
        return Err(Error::InvalidArgument("Hermite order must be at least 10".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let r = euclid(x);
    if r == 0.0 {
        return Ok(0.0);
    }
    let half = normal_rule_half_range(hermite_order)?;
    let scale = (std::f64::consts::PI / 2.0).sqrt();
    if fast {
        let e_abs: f64 = half.iter().map(|(z, w)| w * z.abs()).sum();
        return Ok(scale * r * e_abs);
    }
    let frame = orthonormal_frame(x, r);
    let full = gauss_hermite_normal(hermite_order)?;
    // t = Σ_i z_i f_i with z_1 on the half-range rule, the rest on full rules
    let mut total = 0.0;
    let mut comp = 0.0;
    let rest: Vec<&[(f64, f64)]> = (1..d).map(|_| full.as_slice()).collect();
    let mut idx = vec![0usize; d - 1];
    loop {
        let mut w_rest = 1.0;
        let mut t_rest = vec![0.0; d];
        for (axis, &j) in idx.iter().enumerate() {
            let (z, w) = rest[axis][j];
            w_rest *= w;
            for (tc, fc) in t_rest.iter_mut().zip(&frame[axis + 1]) {
                *tc += z * fc;
            }
        }
        for &(z, w) in &half {
            let dot: f64 = (0..d).map(|i| x[i] * (t_rest[i] + z * frame[0][i])).sum();
            let y = w * w_rest * dot.abs() - comp;
            let s = total + y;
            comp = (s - total) - y;
            total = s;
        }
        let mut axis = 0;
        loop {
            if axis == idx.len() {
                return Ok(scale * total);
            }
            idx[axis] += 1;
            if idx[axis] < rest[axis].len() {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

/// Orthonormal basis of ℝ^d with first vector `x / r`.
fn orthonormal_frame(x: &[f64], r: f64) -> Vec<Vec<f64>> {
    let d = x.len();
    let mut frame: Vec<Vec<f64>> = vec![x.iter().map(|v| v / r).collect()];
    for i in 0..d {
        if frame.len() == d {
            break;
        }
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        for f in &frame {
            let p: f64 = e.iter().zip(f).map(|(a, b)| a * b).sum();
            e.iter_mut().zip(f).for_each(|(a, b)| *a -= p * b);
        }
        let n = e.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-8 {
            frame.push(e.into_iter().map(|a| a / n).collect());
        }
    }
    frame
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm_model::{Polygon, Vec2};
    use crate::profile::{profile_from_norm, ProfileOptions};
    use crate::quadrature::integrate;

    fn measure(spec: &NormSpec) -> RepresentingMeasure {
        measure_from_profile(&profile_from_norm(spec, &ProfileOptions::default()).unwrap()).unwrap()
    }

    fn q() -> QuadratureOptions {
        QuadratureOptions::default()
    }

    #[test]
    fn linf_atoms() {
        let m = measure(&NormSpec::linf());
        let atoms: Vec<(f64, f64)> = m.atoms().iter().map(|a| (a.t, a.mass)).collect();
        assert_eq!(atoms, vec![(-1.0, 1.0), (1.0, 1.0)]);
        assert!(m.is_atomic());
        assert_eq!((m.c(), m.k()), (0.0, 1.0));
        let r = mass_checks(&m, &q()).unwrap();
        assert_eq!((r.total_mass_residual, r.first_moment_residual), (0.0, 0.0));
        let abs_t = stieltjes_integrate(&m, f64::abs, &[0.0], &q()).unwrap().value;
        assert_eq!(abs_t, 2.0);
    }

    #[test]
    fn l1_atoms() {
        let m = measure(&NormSpec::L1);
        let atoms: Vec<(f64, f64)> = m.atoms().iter().map(|a| (a.t, a.mass)).collect();
        assert_eq!(atoms, vec![(0.0, 2.0)]);
        assert_eq!((m.c(), m.k()), (2.0, 1.0));
        let r = mass_checks(&m, &q()).unwrap();
        assert_eq!((r.total_mass_residual, r.first_moment_residual), (0.0, 0.0));
        assert_eq!(stieltjes_integrate(&m, |_| 1.0, &[], &q()).unwrap().value, 2.0);
    }

    #[test]
    fn hexagon_total_mass() {
        let m = measure(&NormSpec::Polygonal(Polygon::regular(6).unwrap()));
        assert!(m.is_atomic());
        assert!(m.atoms().windows(2).all(|w| w[0].t < w[1].t));
        assert!(m.atoms().iter().all(|a| a.mass > 0.0));
        let total: f64 = m.atoms().iter().map(|a| a.mass).sum();
        assert!((total - 2.0 * m.k()).abs() < 1e-14);
    }

    #[test]
    fn lp_density_values() {
        assert_eq!(lp_density(2.0, 0.0).unwrap(), 1.0);
        assert!((lp_density(3.0, 1.0).unwrap() - 2f64.powf(-2.0 / 3.0)).abs() < 1e-15);
        assert!((lp_density(3.0, 1.0).unwrap() - 0.629961).abs() < 1e-6);
        assert!(lp_density(1.0, 0.5).is_err());
        assert!(lp_density(f64::INFINITY, 0.5).is_err());
        let r = integrate(|t| lp_density(2.0, t).unwrap(), f64::NEG_INFINITY, f64::INFINITY, &[], &q());
        assert!((r.value - 2.0).abs() < 1e-10);
        // continuity of the two branches at |t| = 1
        for p in [1.2, 1.5, 3.0, 8.0] {
            let a = lp_density_unchecked(p, 1.0 - 1e-12);
            let b = lp_density_unchecked(p, 1.0 + 1e-12);
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn lp_mass_identities() {
        for p in [1.2, 1.5, 2.0, 3.0, 8.0] {
            let m = measure(&NormSpec::Lp(p));
            let r = mass_checks(&m, &q()).unwrap();
            assert!(r.total_mass_residual <= 1e-8, "p={p} {r:?}");
            assert!(r.first_moment_residual <= 1e-8, "p={p} {r:?}");
        }
    }

    #[test]
    fn pushforward_examples() {
        let one = |_: Functional2| 1.0;
        assert_eq!(functional_pushforward(&measure(&NormSpec::linf()), one, &[], &q()).unwrap().value, 1.0);
        assert_eq!(functional_pushforward(&measure(&NormSpec::L1), one, &[], &q()).unwrap().value, 2.0);
        let hex = NormSpec::Polygonal(Polygon::regular(6).unwrap());
        for spec in [NormSpec::L1, NormSpec::linf(), NormSpec::Lp(1.5), hex] {
            let m = measure(&spec);
            for i in -10..=10 {
                for j in -10..=10 {
                    let x = Vec2::new(i as f64 * 0.3, j as f64 * 0.3);
                    let kinks: Vec<f64> = if x.v != 0.0 { vec![x.u / x.v] } else { vec![] };
                    let v = functional_pushforward(&m, move |l: Functional2| l.apply(x).abs(), &kinks, &q()).unwrap().value;
                    assert!((v - spec.eval2(x).unwrap()).abs() < 1e-7, "{spec:?} {x:?}");
                }
            }
        }
    }

    #[test]
    fn scaling_covariance() {
        for spec in [NormSpec::linf(), NormSpec::Polygonal(Polygon::regular(6).unwrap()), NormSpec::Lp(3.0)] {
            let m = measure(&spec);
            let lam = 2.75;
            let direct = measure(&spec.clone().scaled(lam).unwrap());
            let via = m.scaled(lam).unwrap();
            assert!((direct.c() - lam * m.c()).abs() < 1e-12);
            assert!((direct.k() - lam * m.k()).abs() < 1e-12);
            assert_eq!(direct.atoms().len(), m.atoms().len());
            for ((a, b), c) in direct.atoms().iter().zip(m.atoms()).zip(via.atoms()) {
                assert!((a.t - b.t).abs() < 1e-12);
                assert!((a.mass - lam * b.mass).abs() < 1e-12);
                assert_eq!(c.mass, lam * b.mass);
            }
            if let (Some(d1), Some(d0)) = (direct.density(), m.density()) {
                for t in [-3.0, -0.2, 0.4, 5.0] {
                    assert!((d1.eval(t) - lam * d0.eval(t)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let m = measure(&NormSpec::linf());
        let back = RepresentingMeasure::from_csv(&m.to_csv()).unwrap();
        assert_eq!(back.atoms(), m.atoms());
        assert_eq!((back.c(), back.k(), back.vertical()), (0.0, 1.0, 1.0));
        for p in [1.5, 3.0] {
            let m = measure(&NormSpec::Lp(p));
            let back = RepresentingMeasure::from_csv(&m.to_csv()).unwrap();
            let r = mass_checks(&back, &q()).unwrap();
            assert!(r.total_mass_residual < 1e-8, "{r:?}");
            assert!(r.first_moment_residual < 1e-6, "{r:?}");
        }
        assert!(RepresentingMeasure::from_csv("atom,0,1,\n").is_err());
        assert!(RepresentingMeasure::from_csv("# c=0,k=1,vertical=1\nwat,1,2\n").is_err());
    }

    #[test]
    fn euclidean_identity() {
        assert!(euclidean_identity_residual(&[1.0], 40).unwrap() < 1e-10);
        let v = euclidean_identity_value(&[3.0, 4.0], 40, false).unwrap();
        assert!((v - 5.0).abs() < 1e-6);
        let v = euclidean_identity_value(&[1.0, 1.0, 1.0], 40, false).unwrap();
        assert!((v - 3f64.sqrt()).abs() < 1e-6);
        assert!(euclidean_identity_residual_fast(&[1.0, -2.0, 0.5], 12).unwrap() < 1e-12);
        assert!(euclidean_identity_residual(&[1.0; 4], 40).is_err());
        assert!(euclidean_identity_residual(&[1.0], 5).is_err());
        assert_eq!(euclidean_identity_value(&[0.0, 0.0], 20, false).unwrap(), 0.0);
    }
}
