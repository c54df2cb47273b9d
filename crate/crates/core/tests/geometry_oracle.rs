//! The accelerated first-hit query against an exhaustive scan of every
//! triangle, with the same tie rule.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synthlidar_core::geom::{ray_triangle_intersect, AccelIndex, Hit, Ray, Triangle, Vec3, TIE_EPSILON};

fn brute_force(tris: &[Triangle], ray: &Ray) -> Option<Hit> {
    let hits: Vec<(f64, Vec3, u32, u32)> = tris
        .iter()
        .enumerate()
        .filter_map(|(k, t)| ray_triangle_intersect(ray, t).map(|(d, p)| (d, p, t.object_index, k as u32)))
        .collect();
    let nearest = hits.iter().map(|h| h.0).fold(f64::INFINITY, f64::min);
    hits.into_iter()
        .filter(|h| h.0 < nearest + TIE_EPSILON)
        .min_by_key(|h| (h.2, h.3))
        .map(|(distance, point, object_index, triangle_index)| Hit {
            point,
            distance,
            object_index,
            triangle_index,
        })
}

fn random_soup(rng: &mut ChaCha8Rng, n: usize) -> Vec<Triangle> {
    (0..n)
        .map(|k| {
            let c = Vec3::new(rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0), rng.random_range(-5.0..5.0));
            let s = rng.random_range(0.05..3.0);
            let mut v = || c + Vec3::new(rng.random_range(-s..s), rng.random_range(-s..s), rng.random_range(-s..s));
            Triangle::new(v(), v(), v(), (k % 17) as u32)
        })
        .collect()
}

fn random_ray(rng: &mut ChaCha8Rng) -> Ray {
    let o = Vec3::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0), rng.random_range(-3.0..3.0));
    loop {
        let d = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if let Ok(r) = Ray::towards(o, d, rng.random_range(5.0..100.0)) {
            return r;
        }
    }
}

fn assert_same(a: Option<Hit>, b: Option<Hit>) {
    match (a, b) {
        (None, None) => {}
        (Some(a), Some(b)) => {
            assert_eq!((a.object_index, a.triangle_index), (b.object_index, b.triangle_index));
            assert!((a.distance - b.distance).abs() <= 1e-9, "{} vs {}", a.distance, b.distance);
        }
        (a, b) => panic!("accelerated {a:?} vs brute force {b:?}"),
    }
}

#[test]
fn random_soups_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [1, 2, 7, 64, 500, 3000] {
        let tris = random_soup(&mut rng, n);
        let index = AccelIndex::build(&tris);
        for _ in 0..300 {
            let ray = random_ray(&mut rng);
            assert_same(index.first_hit(&ray), brute_force(&tris, &ray));
        }
    }
}

#[test]
fn coplanar_duplicates_resolve_to_lowest_ids() {
    // The same quad three times under different object ids.
    let quad = |obj| {
        [
            Triangle::new(Vec3::new(5.0, -1.0, -1.0), Vec3::new(5.0, 1.0, -1.0), Vec3::new(5.0, 1.0, 1.0), obj),
            Triangle::new(Vec3::new(5.0, -1.0, -1.0), Vec3::new(5.0, 1.0, 1.0), Vec3::new(5.0, -1.0, 1.0), obj),
        ]
    };
    let tris: Vec<Triangle> = [4, 2, 9].into_iter().flat_map(quad).collect();
    let index = AccelIndex::build(&tris);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let d = Vec3::new(1.0, rng.random_range(-0.15..0.15), rng.random_range(-0.15..0.15));
        let ray = Ray::towards(Vec3::ZERO, d, 50.0).unwrap();
        let hit = index.first_hit(&ray).unwrap();
        assert_eq!(hit.object_index, 2);
        assert_same(Some(hit), brute_force(&tris, &ray));
    }
}

#[test]
fn empty_index_never_hits() {
    let index = AccelIndex::build(&[]);
    assert!(index.first_hit(&Ray::new(Vec3::ZERO, Vec3::X, 10.0).unwrap()).is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn accelerated_equals_brute_force(seed in any::<u64>(), n in 1usize..400) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tris = random_soup(&mut rng, n);
        let index = AccelIndex::build(&tris);
        for _ in 0..50 {
            let ray = random_ray(&mut rng);
            assert_same(index.first_hit(&ray), brute_force(&tris, &ray));
        }
    }

    #[test]
    fn shorter_range_never_finds_a_new_surface(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tris = random_soup(&mut rng, 200);
        let index = AccelIndex::build(&tris);
        let ray = random_ray(&mut rng);
        let short = ray.with_max_range(ray.max_range * 0.5);
        if let Some(h) = index.first_hit(&short) {
            let full = index.first_hit(&ray).expect("a hit within the short range is within the full range");
            prop_assert!(full.distance <= h.distance + 1e-12);
        }
    }
}
