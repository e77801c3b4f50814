#![allow(dead_code)]

use normfactor::norm_model::Polygon;
use normfactor::{NormSpec, Vec2, VecD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Centrally symmetric octagon with jittered vertex angles and radii.
pub fn random_octagon(seed: u64) -> NormSpec {
    let mut r = rng(seed);
    loop {
        let half: Vec<Vec2> = (0..4)
            .map(|i| {
                let theta = (i as f64 + r.random_range(-0.3..0.3)) * std::f64::consts::FRAC_PI_4;
                let rad = r.random_range(0.6..1.4);
                Vec2::new(rad * theta.cos(), rad * theta.sin())
            })
            .collect();
        if let Ok(spec) = NormSpec::polygon(&half) {
            return spec;
        }
    }
}

pub fn hexagon() -> NormSpec {
    NormSpec::Polygonal(Polygon::regular(6).unwrap())
}

/// The seven planar norms of the main residual checks, with an "atomic" flag.
pub fn planar_norms() -> Vec<(String, NormSpec, bool)> {
    vec![
        ("l1".into(), NormSpec::L1, true),
        ("l1.5".into(), NormSpec::lp(1.5).unwrap(), false),
        ("l2".into(), NormSpec::lp(2.0).unwrap(), false),
        ("l3".into(), NormSpec::lp(3.0).unwrap(), false),
        ("linf".into(), NormSpec::linf(), true),
        ("octagon".into(), random_octagon(0), true),
        ("hexagon".into(), hexagon(), true),
    ]
}

pub fn random_vec(r: &mut ChaCha8Rng, d: usize, scale: f64) -> VecD {
    VecD((0..d).map(|_| r.random_range(-scale..scale)).collect())
}
