use offsetopt::geometry::normalize::normalize_neighborhood;
use offsetopt::geometry::voxel::voxel_subsample;
use offsetopt::geometry::{build_features, knn_search, knn_search_brute_force, PointCloud};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cloud(n: usize, seed: u64, lattice: bool) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            if lattice {
                // Many exact distance ties.
                [0, 1, 2].map(|_| rng.gen_range(-4i32..=4) as f64 * 0.25)
            } else {
                [0, 1, 2].map(|_| rng.gen_range(-1.0..1.0))
            }
        })
        .collect()
}

#[test]
fn knn_matches_brute_force_on_many_clouds() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..120u64 {
        let n = rng.gen_range(4..=512);
        let k = rng.gen_range(3..n.min(33));
        let pts = cloud(n, case, case % 3 == 0);
        let pts = if case % 3 == 0 { PointCloud::new(pts).unwrap().dedup().0.points } else { pts };
        if pts.len() <= k {
            continue;
        }
        let c = PointCloud::new(pts).unwrap();
        assert_eq!(knn_search(&c, k).unwrap(), knn_search_brute_force(&c, k).unwrap(), "case {case}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalization_ignores_scale_and_translation(
        seed in 0u64..10_000,
        s in 0.01f64..100.0,
        t in prop::array::uniform3(-50.0f64..50.0),
    ) {
        let pts = cloud(40, seed, false);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let offsets: Vec<[f64; 3]> = (0..40).map(|_| [0, 1, 2].map(|_| rng.gen_range(-0.05..0.05))).collect();
        let nb = knn_search(&PointCloud::new(pts.clone()).unwrap(), 8).unwrap();
        let moved: Vec<[f64; 3]> = pts.iter().map(|p| [0, 1, 2].map(|a| p[a] * s + t[a])).collect();
        let moved_off: Vec<[f64; 3]> = offsets.iter().map(|o| o.map(|c| c * s)).collect();
        for i in 0..40 {
            let a = normalize_neighborhood(i, &nb, &pts, Some(&offsets)).unwrap();
            let b = normalize_neighborhood(i, &nb, &moved, Some(&moved_off)).unwrap();
            prop_assert_eq!(a.reference, b.reference);
            for (p, q) in a.coords.iter().zip(&b.coords) {
                for c in 0..3 {
                    prop_assert!((p[c] - q[c]).abs() <= 1e-9 * p[c].abs().max(1e-3));
                }
            }
        }
    }

    #[test]
    fn voxel_output_is_a_subset_and_a_fixed_point(seed in 0u64..10_000, n in 1usize..400, v in 0.01f64..0.8) {
        let c = PointCloud::new(cloud(n, seed, false)).unwrap();
        let once = voxel_subsample(&c, v).unwrap();
        prop_assert!(!once.points.is_empty());
        prop_assert!(once.points.iter().all(|p| c.points.contains(p)));
        let twice = voxel_subsample(&once, v).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn features_are_bit_reproducible(seed in 0u64..10_000) {
        let pts = cloud(64, seed, false);
        let nb = knn_search(&PointCloud::new(pts.clone()).unwrap(), 12).unwrap();
        let centers: Vec<usize> = (0..64).collect();
        let a = build_features::<f32>(&centers, &nb, &pts, None);
        let b = build_features::<f32>(&centers, &nb, &pts, None);
        prop_assert!(a.data.iter().zip(&b.data).all(|(x, y)| x.to_bits() == y.to_bits()));
        prop_assert_eq!(a.normalized, b.normalized);
    }
}
