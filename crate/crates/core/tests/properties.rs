mod common;

use common::{hexagon, random_octagon, random_vec, rng};
use normfactor::decompose::{eval_decomposition, square_grid};
use normfactor::inequalities::{buja_margin, hlawka_margin};
use normfactor::norm_model::validate_norm_seeded;
use normfactor::rand_vectors::{pairwise_expectations, rademacher_moment};
use normfactor::{
    measure_from_profile, profile_from_norm, DiscreteDistribution, NormSpec, ProfileOptions, QuadratureOptions,
    RademacherInstance, RepresentingMeasure, VecD,
};
use proptest::prelude::*;
use rand::Rng;

fn planar() -> Vec<NormSpec> {
    vec![NormSpec::L1, NormSpec::lp(1.5).unwrap(), NormSpec::lp(2.0).unwrap(), NormSpec::linf(), hexagon(), random_octagon(3)]
}

#[test]
fn planar_norms_validate() {
    for spec in planar() {
        let rep = validate_norm_seeded(&spec, 500, 1e-12, 7);
        assert!(rep.failure.is_none(), "{}: {:?}", spec.label(), rep.failure);
    }
}

#[test]
fn buja_is_nonnegative_in_the_plane() {
    let mut r = rng(21);
    for spec in planar() {
        for _ in 0..100 {
            let n = r.random_range(1..=7);
            let pts: Vec<VecD> = (0..n).map(|_| random_vec(&mut r, 2, 3.0)).collect();
            let d = DiscreteDistribution::uniform(pts).unwrap();
            assert!(buja_margin(&spec, &d).unwrap() >= -1e-12);
        }
    }
}

#[test]
fn buja_fails_for_johnson_in_three_dimensions() {
    let spec = NormSpec::johnson(3).unwrap();
    let pts = vec![VecD::basis(3, 0), VecD::basis(3, 1), VecD::basis(3, 2), VecD(vec![-0.5; 3])];
    let (diff, sum) = pairwise_expectations(&spec, &DiscreteDistribution::uniform(pts).unwrap()).unwrap();
    assert!(diff > sum);
}

#[test]
fn euclidean_hlawka_in_three_dimensions() {
    let mut r = rng(22);
    let spec = NormSpec::lp(2.0).unwrap();
    for _ in 0..1000 {
        let (x, y, z) = (random_vec(&mut r, 3, 2.0), random_vec(&mut r, 3, 2.0), random_vec(&mut r, 3, 2.0));
        assert!(hlawka_margin(&spec, &x, &y, &z).unwrap().margin >= -1e-9);
    }
}

#[test]
fn rademacher_full_size() {
    // 2^23 patterns; for a repeated unit vector the second moment is n
    let x = VecD(vec![1.0, 0.0]);
    let inst = RademacherInstance::new(vec![x; 24]).unwrap();
    let got = rademacher_moment(&NormSpec::linf(), &inst, 2).unwrap();
    assert!((got - 24.0).abs() < 1e-9, "{got}");
}

fn measure(spec: &NormSpec) -> RepresentingMeasure {
    measure_from_profile(&profile_from_norm(spec, &ProfileOptions::default()).unwrap()).unwrap()
}

#[test]
fn csv_round_trip_on_standard_grid() {
    let q = QuadratureOptions::default();
    for spec in [NormSpec::lp(1.5).unwrap(), NormSpec::lp(3.0).unwrap(), hexagon()] {
        let m = measure(&spec);
        let back = RepresentingMeasure::from_csv(&m.to_csv()).unwrap();
        let worst = square_grid(41, 3.0)
            .iter()
            .map(|x| (eval_decomposition(&m, x.u, x.v, &q).unwrap() - eval_decomposition(&back, x.u, x.v, &q).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-6, "{}: {worst:e}", spec.label());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decomposition_matches_norm(u in -5.0f64..5.0, v in -5.0f64..5.0, p in 1.1f64..6.0) {
        let spec = NormSpec::lp(p).unwrap();
        let m = measure(&spec);
        let d = eval_decomposition(&m, u, v, &QuadratureOptions::default()).unwrap();
        let n = spec.eval(&[u, v]).unwrap();
        prop_assert!((d - n).abs() <= 1e-7 * (1.0 + n), "p={} ({},{}) {} vs {}", p, u, v, d, n);
    }

    #[test]
    fn pairwise_sign_symmetry(pts in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..6)) {
        let mut pts = pts;
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        let d = DiscreteDistribution::uniform(pts.iter().map(|(a, b)| VecD(vec![*a, *b])).collect()).unwrap();
        for spec in [NormSpec::L1, NormSpec::lp(2.5).unwrap()] {
            let (a, b) = pairwise_expectations(&spec, &d).unwrap();
            let (c, e) = pairwise_expectations(&spec, &d.negated()).unwrap();
            prop_assert!((a - c).abs() < 1e-12 && (b - e).abs() < 1e-12);
            prop_assert!(a <= b + 1e-12);
        }
    }
}
