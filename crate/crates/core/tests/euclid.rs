use catmix::euclid::{decompose_primitive, parabolic_completion, vector_lower_bound, IntVector2};
use catmix::qmorph::{build_engine, EngineConfig};
use catmix::sl2core::UnimodularMatrix;
use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_primitive(rng: &mut ChaCha8Rng, bound: i64) -> IntVector2 {
    loop {
        let (p, q) = (rng.gen_range(-bound..=bound), rng.gen_range(-bound..=bound));
        if p.gcd(&q) == 1 {
            return IntVector2::new(p, q);
        }
    }
}

#[test]
fn quasi_morphism_vanishes_on_elementary_factors() {
    let e = build_engine(
        &UnimodularMatrix::from_i64(4, 9, 7, 16).unwrap(),
        EngineConfig::default(),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut seen = 0;
    while seen < 100 {
        let v = random_primitive(&mut rng, 10_000);
        for factor in decompose_primitive(&v).unwrap().0 {
            let r = e.r_hom(&factor.matrix(), 128).unwrap();
            assert!(r.estimate.abs() <= r.error_bar, "{factor:?}: {r:?}");
            assert_eq!(e.r_cyclic(&factor.matrix()), 0);
            seen += 1;
        }
    }
}

#[test]
fn lower_bound_never_exceeds_exact_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let e = build_engine(
        &UnimodularMatrix::from_i64(4, 9, 7, 16).unwrap(),
        EngineConfig::default(),
    )
    .unwrap();
    let dr = e.defect().value;
    let gens = [
        UnimodularMatrix::s(),
        UnimodularMatrix::upper(1),
        e.h().clone(),
        e.h().inverse(),
    ];
    for _ in 0..1000 {
        let len = rng.gen_range(1..=12);
        let f = (0..len).fold(UnimodularMatrix::identity(), |acc, _| {
            &acc * &gens[rng.gen_range(0..gens.len())]
        });
        let v = random_primitive(&mut rng, 1000);
        let r = e.r_hom(&f, 128).unwrap().estimate;
        let bound = vector_lower_bound(&v, r, dr).unwrap();
        let exact = v.mul_matrix(&f).norm();
        assert!(bound <= exact, "v = {v:?}, f = {f}: {bound} > {exact}");
    }
}

#[test]
fn parabolic_completion_on_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f = UnimodularMatrix::from_i64(4, 9, 7, 16).unwrap();
    for _ in 0..200 {
        let v = random_primitive(&mut rng, 500);
        let pc = parabolic_completion(&v, &f).unwrap();
        assert_eq!(&(&pc.h1 * &f) * &pc.h2.inverse(), pc.h3);
        assert_eq!(pc.h3.trace(), 2.into());
    }
}
